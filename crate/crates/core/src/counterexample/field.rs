//! The product set `E = C × F` and the Cantor step function on its
//! complement.

use super::cantor::{build_fat_cantor, build_thin_cantor, thin_gaps, CantorSpec, Gap, IntervalSet};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// `C × F` at a finite depth, stored as the two factors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemovableSet {
    pub spec: CantorSpec,
    /// Thin set, horizontal factor.
    pub thin: IntervalSet,
    /// Fat set, vertical factor.
    pub fat: IntervalSet,
}

pub fn build_removable_set(spec: &CantorSpec) -> Result<RemovableSet> {
    Ok(RemovableSet {
        spec: spec.clone(),
        thin: build_thin_cantor(spec),
        fat: build_fat_cantor(spec, spec.depth)?.set,
    })
}

impl RemovableSet {
    pub fn box_count(&self) -> usize {
        self.thin.len() * self.fat.len()
    }

    pub fn boxes(&self) -> impl Iterator<Item = [f64; 4]> + '_ {
        self.thin
            .intervals
            .iter()
            .flat_map(move |x| self.fat.intervals.iter().map(move |y| [x[0], x[1], y[0], y[1]]))
    }

    pub fn measure(&self) -> f64 {
        self.thin.measure() * self.fat.measure()
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.thin.contains(x) && self.fat.contains(y)
    }

    /// Euclidean distance; for a product set the squared distances of the
    /// factors add.
    pub fn distance(&self, x: f64, y: f64) -> f64 {
        self.thin.distance(x).hypot(self.fat.distance(y))
    }

    /// Shortest gap between two boxes in either direction.
    pub fn min_separation(&self) -> f64 {
        self.thin
            .gaps()
            .iter()
            .chain(self.fat.gaps().iter())
            .map(|g| g[1] - g[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// Cells of an `nx × ny` grid with lower-left corner `origin` and
    /// spacing `h` whose centres lie in a box, x fastest.
    pub fn cell_mask(&self, origin: [f64; 2], h: f64, nx: usize, ny: usize) -> Vec<bool> {
        let col: Vec<bool> = (0..nx).map(|i| self.thin.contains(origin[0] + (i as f64 + 0.5) * h)).collect();
        let row: Vec<bool> = (0..ny).map(|j| self.fat.contains(origin[1] + (j as f64 + 0.5) * h)).collect();
        let mut mask = Vec::with_capacity(nx * ny);
        for r in &row {
            mask.extend(col.iter().map(|c| *c && *r));
        }
        mask
    }
}

/// Max-tree over gap lengths for nearest-plateau queries.
#[derive(Clone, Debug)]
struct MaxTree {
    n: usize,
    t: Vec<f64>,
}

impl MaxTree {
    fn new(v: &[f64]) -> Self {
        let n = v.len().next_power_of_two().max(1);
        let mut t = vec![f64::NEG_INFINITY; 2 * n];
        t[n..n + v.len()].copy_from_slice(v);
        for k in (1..n).rev() {
            t[k] = t[2 * k].max(t[2 * k + 1]);
        }
        MaxTree { n, t }
    }

    /// Largest index `< end` with value `>= thr`.
    fn last_below(&self, end: usize, thr: f64) -> Option<usize> {
        self.walk_last(1, 0, self.n, end, thr)
    }

    fn walk_last(&self, k: usize, lo: usize, hi: usize, end: usize, thr: f64) -> Option<usize> {
        if lo >= end || self.t[k] < thr {
            return None;
        }
        if hi - lo == 1 {
            return Some(lo);
        }
        let mid = (lo + hi) / 2;
        self.walk_last(2 * k + 1, mid, hi, end, thr)
            .or_else(|| self.walk_last(2 * k, lo, mid, end, thr))
    }

    /// Smallest index `>= start` with value `>= thr`.
    fn first_from(&self, start: usize, thr: f64) -> Option<usize> {
        self.walk_first(1, 0, self.n, start, thr)
    }

    fn walk_first(&self, k: usize, lo: usize, hi: usize, start: usize, thr: f64) -> Option<usize> {
        if hi <= start || self.t[k] < thr {
            return None;
        }
        if hi - lo == 1 {
            return Some(lo);
        }
        let mid = (lo + hi) / 2;
        self.walk_first(2 * k, lo, mid, start, thr)
            .or_else(|| self.walk_first(2 * k + 1, mid, hi, start, thr))
    }
}

/// The Cantor step function: plateau values on the deleted gaps of `C`,
/// shrunk by `dist(y, F)`, joined affinely along horizontal lines.
#[derive(Clone, Debug)]
pub struct StepField {
    pub set: RemovableSet,
    pub gaps: Vec<Gap>,
    tree: MaxTree,
}

/// Two consecutive plateaus along one horizontal line.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Span {
    a: f64,
    va: f64,
    b: f64,
    vb: f64,
}

impl StepField {
    pub fn new(set: RemovableSet) -> Self {
        let gaps = thin_gaps(&set.spec);
        let lens: Vec<f64> = gaps.iter().map(|g| g.len()).collect();
        StepField {
            tree: MaxTree::new(&lens),
            set,
            gaps,
        }
    }

    /// Plateau value at `x`, or the affine span containing it.
    fn locate(&self, x: f64, t: f64) -> std::result::Result<f64, Span> {
        // first gap with left end >= x
        let k = self.gaps.partition_point(|g| g.left < x);
        let mut left_end = k;
        let mut right_start = k;
        if let Some(g) = k.checked_sub(1).map(|j| &self.gaps[j]).filter(|g| x < g.right) {
            if (x - g.left).min(g.right - x) >= t {
                return Ok(g.value);
            }
            if x < 0.5 * (g.left + g.right) {
                left_end = k - 1;
                right_start = k - 1;
            }
        }
        let (a, va) = match self.tree.last_below(left_end, 2.0 * t) {
            Some(j) => (self.gaps[j].right - t, self.gaps[j].value),
            None => (0.0, 0.0),
        };
        let (b, vb) = match self.tree.first_from(right_start, 2.0 * t) {
            Some(j) if j < self.gaps.len() => (self.gaps[j].left + t, self.gaps[j].value),
            _ => (1.0, 1.0),
        };
        Err(Span { a, va, b, vb })
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        if x > 1.0 {
            return 1.0;
        }
        let t = self.set.fat.distance(y);
        match self.locate(x, t) {
            Ok(v) => v,
            Err(s) if s.b > s.a => s.va + (s.vb - s.va) * (x - s.a) / (s.b - s.a),
            Err(s) => s.va,
        }
    }

    /// `u(x, y)` off `E`.
    pub fn value(&self, x: f64, y: f64) -> Result<f64> {
        if self.set.contains(x, y) {
            return Err(Error::PointInRemovableSet);
        }
        Ok(self.eval(x, y))
    }

    /// Continuous extension across the boxes of the finite-depth set; on
    /// a box the rule is the `dist(y, F) = 0` interpolation.
    pub fn extended_value(&self, x: f64, y: f64) -> f64 {
        self.eval(x, y)
    }

    /// Plateaus met along the line at height `y`, outer ones included.
    fn plateaus(&self, y: f64) -> Vec<(f64, f64, f64)> {
        let t = self.set.fat.distance(y);
        let mut out = vec![(f64::NEG_INFINITY, 0.0, 0.0)];
        for g in self.gaps.iter().filter(|g| g.len() >= 2.0 * t) {
            out.push((g.left + t, g.right - t, g.value));
        }
        out.push((1.0, f64::INFINITY, 1.0));
        out
    }

    /// Largest slope of `u` along the line at height `y`.
    pub fn line_lipschitz(&self, y: f64) -> f64 {
        let p = self.plateaus(y);
        let left_edge = |w: &[(f64, f64, f64)]| if w[0].1.is_finite() { w[0].1 } else { 0.0 };
        p.windows(2)
            .map(|w| (w[1].2 - w[0].2).abs() / (w[1].0 - left_edge(w)))
            .fold(0.0, f64::max)
    }
}

/// The trace of `u` on a line through `F`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    pub depth: usize,
    pub y0: f64,
    pub variation: f64,
    /// Total length where the trace is not locally constant.
    pub support: f64,
    /// `2^depth P_depth`.
    pub expected_support: f64,
    pub left_value: f64,
    pub right_value: f64,
    /// Every plateau value is `(2j - 1) / 2^{i+1}` with `i < depth`.
    pub dyadic_plateaus: bool,
}

pub fn trace_variation(field: &StepField, y0: f64) -> Result<TraceReport> {
    if !field.set.fat.contains(y0) {
        return Err(Error::InvalidParameter(format!("y0 = {y0} is not in F")));
    }
    let p = field.plateaus(y0);
    let mut variation = 0.0;
    let mut support = 0.0;
    for w in p.windows(2) {
        variation += (w[1].2 - w[0].2).abs();
        support += w[1].0 - if w[0].1.is_finite() { w[0].1 } else { 0.0 };
    }
    let dyadic = field.gaps.iter().all(|g| {
        let scaled = g.value * 2f64.powi(g.level as i32 + 1);
        scaled == (2 * g.index - 1) as f64 && g.level < field.set.spec.depth
    });
    let d = field.set.spec.depth;
    Ok(TraceReport {
        depth: d,
        y0,
        variation,
        support,
        expected_support: 2f64.powi(d as i32) * field.set.spec.product(d),
        left_value: field.eval(-1e-300, y0),
        right_value: field.eval(1.0 + 1e-12, y0),
        dyadic_plateaus: dyadic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn field(depth: usize) -> StepField {
        StepField::new(build_removable_set(&CantorSpec::new(3.0, depth).unwrap()).unwrap())
    }

    #[test]
    fn box_bookkeeping() {
        let e = build_removable_set(&CantorSpec::new(3.0, 6).unwrap()).unwrap();
        assert_eq!(e.box_count(), 64 * 7);
        let area: f64 = e.boxes().map(|b| (b[1] - b[0]) * (b[3] - b[2])).sum();
        assert!((area - e.measure()).abs() < 1e-12);
        assert!(e.boxes().all(|b| b[0] >= 0.0 && b[1] <= 1.0 && b[2] >= 0.0 && b[3] <= 1.0));
        let deeper = build_removable_set(&CantorSpec::new(3.0, 12).unwrap()).unwrap();
        assert!(deeper.measure() < e.measure());
    }

    #[test]
    fn rasterized_area_within_one_layer() {
        let e = build_removable_set(&CantorSpec::new(3.0, 6).unwrap()).unwrap();
        let h = 0.5f64.powi(12);
        let n = 1 << 12;
        let count = e.cell_mask([0.0, 0.0], h, n, n).iter().filter(|&&b| b).count();
        let slack: f64 = e.boxes().map(|b| 2.0 * h * ((b[1] - b[0]) + (b[3] - b[2])) + 4.0 * h * h).sum();
        assert!((count as f64 * h * h - e.measure()).abs() <= slack);
    }

    #[test]
    fn plateau_values() {
        let f = field(8);
        let mid = f.gaps.iter().find(|g| g.level == 0).unwrap();
        let y = f.set.fat.intervals[0][0];
        assert_eq!(f.value(0.5 * (mid.left + mid.right), y).unwrap(), 0.5);
        assert_eq!(f.value(-0.5, 0.3).unwrap(), 0.0);
        assert_eq!(f.value(1.5, 0.3).unwrap(), 1.0);
        let c = f.set.thin.intervals[3];
        assert!(matches!(f.value(0.5 * (c[0] + c[1]), y), Err(Error::PointInRemovableSet)));
    }

    #[test]
    fn lines_off_f_are_lipschitz() {
        let f = field(8);
        let g = f.set.fat.gaps()[0];
        let y = 0.5 * (g[0] + g[1]) + 0.1 * (g[1] - g[0]);
        let lip = f.line_lipschitz(y);
        assert!(lip.is_finite());
        let n = 200_000;
        let h = 1.2 / n as f64;
        let mut prev = f.value(-0.1, y).unwrap();
        for k in 1..=n {
            let v = f.value(-0.1 + k as f64 * h, y).unwrap();
            assert!((v - prev).abs() <= lip * h * (1.0 + 1e-9) + 1e-15);
            prev = v;
        }
    }

    #[test]
    fn trace_through_f() {
        let mut last = f64::INFINITY;
        for d in [8, 10, 12] {
            let f = field(d);
            let y0 = f.set.fat.intervals[0][0];
            let r = trace_variation(&f, y0).unwrap();
            assert_eq!(r.variation, 1.0);
            assert!((r.support - r.expected_support).abs() < 1e-9 * r.expected_support);
            assert_eq!((r.left_value, r.right_value), (0.0, 1.0));
            assert!(r.dyadic_plateaus);
            assert!(r.support < last);
            last = r.support;
        }
        let f = field(6);
        let g = f.set.fat.gaps()[0];
        assert!(trace_variation(&f, 0.5 * (g[0] + g[1])).is_err());
    }

    proptest! {
        #[test]
        fn values_in_unit_range(x in -0.5f64..1.5, y in -0.5f64..1.5) {
            let f = field(7);
            if let Ok(v) = f.value(x, y) {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }

        #[test]
        fn continuous_off_e(x in 0.0f64..1.0, y in 0.0f64..1.0) {
            let f = field(7);
            let dy = f.set.fat.distance(y);
            prop_assume!(dy > 1e-3);
            let lip = f.line_lipschitz(y);
            let d = 1e-7;
            let (a, b) = (f.value(x, y).unwrap(), f.value(x + d, y).unwrap());
            prop_assert!((a - b).abs() <= lip * d * (1.0 + 1e-6) + 1e-12);
        }
    }
}
