//! Cell sets, inner balls and Hausdorff distance.

use super::edt::squared_edt;
use super::search::{Metric, Search};
use super::{DiscreteDomain, Point};
use crate::error::{Error, Result};

/// A set of cells stored as strictly increasing indices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CellSet {
    cells: Vec<u32>,
}

impl CellSet {
    pub fn new() -> Self {
        CellSet { cells: Vec::new() }
    }

    pub fn from_unsorted(mut cells: Vec<u32>) -> Self {
        cells.sort_unstable();
        cells.dedup();
        CellSet { cells }
    }

    pub fn from_mask(mask: &[bool]) -> Self {
        CellSet {
            cells: mask
                .iter()
                .enumerate()
                .filter_map(|(i, &b)| b.then_some(i as u32))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, c: usize) -> bool {
        self.cells.binary_search(&(c as u32)).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.cells.iter().map(|&c| c as usize)
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.cells
    }

    pub fn to_mask(&self, len: usize) -> Vec<bool> {
        let mut m = vec![false; len];
        for c in self.iter() {
            m[c] = true;
        }
        m
    }

    pub fn intersects(&self, other: &CellSet) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.cells.len() && j < other.cells.len() {
            match self.cells[i].cmp(&other.cells[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }

    pub fn is_subset(&self, other: &CellSet) -> bool {
        let mut j = 0;
        for &c in &self.cells {
            while j < other.cells.len() && other.cells[j] < c {
                j += 1;
            }
            if j == other.cells.len() || other.cells[j] != c {
                return false;
            }
        }
        true
    }

    pub fn union(&self, other: &CellSet) -> CellSet {
        let mut v = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.cells.len() || j < other.cells.len() {
            let a = self.cells.get(i).copied().unwrap_or(u32::MAX);
            let b = other.cells.get(j).copied().unwrap_or(u32::MAX);
            if a <= b {
                v.push(a);
                i += 1;
                if a == b {
                    j += 1;
                }
            } else {
                v.push(b);
                j += 1;
            }
        }
        CellSet { cells: v }
    }

    pub fn difference(&self, other: &CellSet) -> CellSet {
        CellSet {
            cells: self
                .cells
                .iter()
                .copied()
                .filter(|&c| other.cells.binary_search(&c).is_err())
                .collect(),
        }
    }
}

impl FromIterator<usize> for CellSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        CellSet::from_unsorted(iter.into_iter().map(|c| c as u32).collect())
    }
}

/// Cells within inner distance `radius` of a centre, with their distances.
#[derive(Clone, Debug)]
pub struct InnerRegion {
    pub center: Point,
    pub radius: f64,
    pub cells: CellSet,
}

/// `{ y : dist_inner(y, x) <= radius }` on the cell graph.
pub fn inner_ball(dom: &DiscreteDomain, x: &Point, radius: f64) -> Result<InnerRegion> {
    if !(radius >= 0.0) {
        return Err(Error::InvalidParameter(format!("radius {radius} must be non-negative")));
    }
    let c = dom.locate(x)?;
    let mut s = Search::for_domain(dom);
    s.run(dom, Metric::Inner, &[(c, 0.0)], radius, &[]);
    let cells = CellSet::from_unsorted(s.settled().to_vec());
    Ok(InnerRegion {
        center: *x,
        radius,
        cells,
    })
}

/// Hausdorff distance between two non-empty cell sets of the domain,
/// measured between cell centres.
pub fn hausdorff_distance(dom: &DiscreteDomain, a: &CellSet, b: &CellSet) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidParameter("Hausdorff distance of an empty set".into()));
    }
    let g = dom.grid();
    let directed = |from: &CellSet, to: &CellSet| {
        let sq = squared_edt(g.shape, g.dim, &to.to_mask(g.len()));
        from.iter().map(|c| sq[c]).fold(0.0, f64::max).sqrt() * g.spacing
    };
    Ok(directed(a, b).max(directed(b, a)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_domain, euclid, pt2, DomainSpec};
    use proptest::prelude::*;

    fn brute_hausdorff(dom: &DiscreteDomain, a: &CellSet, b: &CellSet) -> f64 {
        let dir = |x: &CellSet, y: &CellSet| {
            x.iter()
                .map(|i| {
                    y.iter()
                        .map(|j| euclid(&dom.center(i), &dom.center(j)))
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(0.0, f64::max)
        };
        dir(a, b).max(dir(b, a))
    }

    #[test]
    fn nested_squares() {
        let h = 1.0 / 32.0;
        let dom = build_domain(&DomainSpec::unit_square(), h).unwrap();
        let a: CellSet = dom.cells().collect();
        let b: CellSet = dom
            .cells()
            .filter(|&c| {
                let p = dom.center(c);
                p[0] > 0.25 && p[0] < 0.75 && p[1] > 0.25 && p[1] < 0.75
            })
            .collect();
        let d = hausdorff_distance(&dom, &a, &b).unwrap();
        assert!((d - 0.25 * 2f64.sqrt()).abs() < 1e-12, "{d}");
        assert_eq!(d, brute_hausdorff(&dom, &a, &b));
    }

    #[test]
    fn ball_in_square_is_euclidean_disk() {
        let h = 1.0 / 64.0;
        let dom = build_domain(&DomainSpec::unit_square(), h).unwrap();
        let x = pt2(0.5 + h / 2.0, 0.5 + h / 2.0);
        let ball = inner_ball(&dom, &x, 0.2).unwrap();
        for c in dom.cells() {
            let e = euclid(&dom.center(c), &x);
            // grid paths are never shorter than segments, at most 8% longer
            if ball.cells.contains(c) {
                assert!(e <= 0.2 + 1e-12);
            } else {
                assert!(e * 1.0824 > 0.2 - 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn hausdorff_matches_brute(seed_a in proptest::collection::vec(0usize..400, 1..12),
                                   seed_b in proptest::collection::vec(0usize..400, 1..12)) {
            let dom = build_domain(&DomainSpec::unit_square(), 0.05).unwrap();
            let cells: Vec<usize> = dom.cells().collect();
            let a: CellSet = seed_a.iter().map(|&i| cells[i % cells.len()]).collect();
            let b: CellSet = seed_b.iter().map(|&i| cells[i % cells.len()]).collect();
            let d = hausdorff_distance(&dom, &a, &b).unwrap();
            prop_assert!((d - brute_hausdorff(&dom, &a, &b)).abs() < 1e-12);
        }

        #[test]
        fn set_algebra(xs in proptest::collection::vec(0usize..50, 0..20), ys in proptest::collection::vec(0usize..50, 0..20)) {
            let a: CellSet = xs.iter().copied().collect();
            let b: CellSet = ys.iter().copied().collect();
            let u = a.union(&b);
            prop_assert!(a.is_subset(&u) && b.is_subset(&u));
            prop_assert_eq!(u.len(), a.len() + b.difference(&a).len());
            prop_assert_eq!(a.intersects(&b), xs.iter().any(|x| ys.contains(x)));
        }
    }
}
