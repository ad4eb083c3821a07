//! Core component and the blocking sweep.

use super::{run_cube_ball, DecompositionConfig, Marks};
use crate::domain::search::{Metric, Search};
use crate::domain::{CellSet, DiscreteDomain};
use crate::error::{Error, Result};
use crate::whitney::WhitneyDecomposition;
use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

/// A largest Whitney cube, preferring the one farthest from the boundary
/// (ties to the lowest index).
pub fn choose_q0(dec: &WhitneyDecomposition) -> usize {
    let top = dec.cubes().iter().map(|c| c.level).min().expect("non-empty decomposition");
    let mut best = None::<usize>;
    for i in 0..dec.len() {
        if dec.cube(i).level != top {
            continue;
        }
        if best.map_or(true, |b| dec.distance(i) > dec.distance(b)) {
            best = Some(i);
        }
    }
    best.unwrap()
}

#[derive(Clone, Debug)]
pub struct CoreComponent {
    pub m: i32,
    pub q0: usize,
    /// Cube indices in increasing order.
    pub cubes: Vec<usize>,
    pub member: Vec<bool>,
}

impl CoreComponent {
    pub fn cell_mask(&self, dec: &WhitneyDecomposition, dom: &DiscreteDomain) -> Vec<bool> {
        cube_cell_mask(dec, dom, &self.member)
    }
}

pub(crate) fn cube_cell_mask(dec: &WhitneyDecomposition, dom: &DiscreteDomain, member: &[bool]) -> Vec<bool> {
    let mut m = vec![false; dom.len()];
    for (i, &keep) in member.iter().enumerate() {
        if keep {
            for c in dec.cells_of(dom, i) {
                m[c] = true;
            }
        }
    }
    m
}

/// Cubes of side at least `2^-m` connected to `q0` through such cubes.
pub fn core_component(dec: &WhitneyDecomposition, m: i32, q0: usize) -> Result<CoreComponent> {
    if q0 >= dec.len() {
        return Err(Error::InvalidParameter("Q0 index out of range".into()));
    }
    if dec.cube(q0).level > m {
        return Err(Error::MTooSmall(format!(
            "no cube of side >= 2^-{m} contains Q0 (level {})",
            dec.cube(q0).level
        )));
    }
    let mut member = vec![false; dec.len()];
    let mut queue = VecDeque::from([q0]);
    member[q0] = true;
    while let Some(i) = queue.pop_front() {
        for &j in dec.neighbors(i) {
            let j = j as usize;
            if !member[j] && dec.cube(j).level <= m {
                member[j] = true;
                queue.push_back(j);
            }
        }
    }
    let cubes = (0..dec.len()).filter(|&i| member[i]).collect();
    Ok(CoreComponent { m, q0, cubes, member })
}

/// Result of the sweep at one scale.
#[derive(Clone, Debug)]
pub struct CorePartition {
    pub m: i32,
    pub q0: usize,
    pub config: DecompositionConfig,
    /// Per cube: member of the final core.
    pub in_omega: Vec<bool>,
    /// Per cell: covered by the final core.
    pub omega_cells: Vec<bool>,
    /// Cubes of the final core touching its boundary.
    pub boundary_cubes: Vec<usize>,
    /// Selected boundary cubes, in sweep order.
    pub selected: Vec<usize>,
    /// Blocking ball of each selected cube.
    pub u_sets: Vec<CellSet>,
    /// Blocked region of each selected cube.
    pub blocks: Vec<CellSet>,
    /// Boundary cubes of the initial component, in sweep order.
    pub initial_boundary: Vec<usize>,
    /// Position in `initial_boundary` of each selected cube.
    pub surviving: Vec<usize>,
    /// Whether the sweep step of each initial boundary cube fired.
    pub fired: Vec<bool>,
    pub initial_cubes: usize,
    pub removed_cubes: usize,
}

impl CorePartition {
    pub fn omega_cell_count(&self) -> usize {
        self.omega_cells.iter().filter(|&&b| b).count()
    }
}

/// Cubes of `member` that touch a cube outside it or an uncovered cell.
pub(crate) fn boundary_of(dec: &WhitneyDecomposition, member: &[bool]) -> Vec<usize> {
    (0..dec.len())
        .filter(|&i| {
            member[i]
                && (dec.touches_residual(i) || dec.neighbors(i).iter().any(|&j| !member[j as usize]))
        })
        .collect()
}

/// Finds blocked components of the complement of a ball: components of
/// `dom \ U` that do not reach `Q0`. Each unlabelled cell next to `U`
/// starts a best-first search guided by the inner distance to `Q0`; a
/// search that reaches `Q0` or a cell already known to reach it marks its
/// cells as connected, an exhausted search is a blocked component.
pub(crate) struct Blocker {
    potential: Vec<f64>,
    in_q0: Vec<bool>,
    label: Vec<u32>,
    label_epoch: Vec<u32>,
    epoch: u32,
    next_id: u32,
}

const MAIN: u32 = 1;
const BLOCKED: u32 = 2;

impl Blocker {
    pub(crate) fn new(dom: &DiscreteDomain, dec: &WhitneyDecomposition, q0: usize) -> Self {
        let src: Vec<(usize, f64)> = dec.cells_of(dom, q0).map(|c| (c, 0.0)).collect();
        let mut s = Search::for_domain(dom);
        s.run(dom, Metric::Inner, &src, f64::INFINITY, &[]);
        let potential = (0..dom.len()).map(|c| s.distance(c).unwrap_or(f64::INFINITY)).collect();
        let mut in_q0 = vec![false; dom.len()];
        for c in dec.cells_of(dom, q0) {
            in_q0[c] = true;
        }
        Blocker {
            potential,
            in_q0,
            label: vec![0; dom.len()],
            label_epoch: vec![0; dom.len()],
            epoch: 0,
            next_id: 3,
        }
    }

    #[inline]
    fn lab(&self, c: usize) -> u32 {
        if self.label_epoch[c] == self.epoch {
            self.label[c]
        } else {
            0
        }
    }

    #[inline]
    fn set(&mut self, c: usize, l: u32) {
        self.label_epoch[c] = self.epoch;
        self.label[c] = l;
    }

    /// Blocked region of `dom \ U`, where `U` is given by `in_u`, and the
    /// grid-scale slivers (components within `2h` of the boundary) that are
    /// filled into `U` instead.
    pub(crate) fn blocked(&mut self, dom: &DiscreteDomain, u_cells: &[usize], in_u: &Marks) -> (CellSet, CellSet) {
        let sliver = 2.0 * dom.spacing();
        self.epoch += 1;
        let mut ring = Vec::new();
        for &c in u_cells {
            for (v, _) in dom.neighbors(c) {
                if !in_u.get(v) {
                    ring.push(v);
                }
            }
        }
        ring.sort_unstable();
        ring.dedup();
        let mut blocked = Vec::new();
        let mut filled = Vec::new();
        let mut heap: BinaryHeap<Reverse<(u64, u32)>> = BinaryHeap::new();
        let mut visited: Vec<usize> = Vec::new();
        for &r in &ring {
            if self.lab(r) != 0 {
                continue;
            }
            let id = self.next_id;
            self.next_id = self.next_id.wrapping_add(1).max(3);
            heap.clear();
            visited.clear();
            self.set(r, id);
            visited.push(r);
            heap.push(Reverse((self.potential[r].to_bits(), r as u32)));
            let mut connected = false;
            'search: while let Some(Reverse((_, c))) = heap.pop() {
                let c = c as usize;
                if self.in_q0[c] {
                    connected = true;
                    break;
                }
                for (v, _) in dom.neighbors(c) {
                    if in_u.get(v) {
                        continue;
                    }
                    match self.lab(v) {
                        MAIN => {
                            connected = true;
                            break 'search;
                        }
                        l if l == id => {}
                        _ => {
                            self.set(v, id);
                            visited.push(v);
                            heap.push(Reverse((self.potential[v].to_bits(), v as u32)));
                        }
                    }
                }
            }
            let l = if connected { MAIN } else { BLOCKED };
            for &c in &visited {
                self.set(c, l);
            }
            if !connected {
                let deep = visited.iter().any(|&c| dom.boundary_distance(c) >= sliver);
                let out = if deep { &mut blocked } else { &mut filled };
                out.extend(visited.iter().map(|&c| c as u32));
            }
        }
        (CellSet::from_unsorted(blocked), CellSet::from_unsorted(filled))
    }
}

/// Runs the blocking sweep at scale `2^-m` with ball constant `cfg.c1`.
pub fn refine_core(
    dec: &WhitneyDecomposition,
    dom: &DiscreteDomain,
    m: i32,
    q0: usize,
    cfg: &DecompositionConfig,
) -> Result<CorePartition> {
    cfg.check()?;
    let comp = core_component(dec, m, q0)?;
    let initial_boundary = boundary_of(dec, &comp.member);
    let mut s = Search::for_domain(dom);
    // every blocking ball misses Q0 iff the offset union search misses it
    let radii: Vec<f64> = initial_boundary.iter().map(|&j| cfg.radius(dec, j, cfg.factors.blocking)).collect();
    let big = radii.iter().cloned().fold(0.0, f64::max);
    let r0 = 0.5 * dom.spacing() * (dom.dim() as f64).sqrt();
    let mut src = Vec::new();
    for (&j, &r) in initial_boundary.iter().zip(&radii) {
        src.extend(dec.central_cells(dom, j).into_iter().map(|c| (c, r0 + big - r)));
    }
    let q0_cells: Vec<usize> = dec.cells_of(dom, q0).collect();
    s.run(dom, Metric::Inner, &src, big, &q0_cells);
    if let Some(&hit) = q0_cells.iter().find(|&&c| s.is_settled(c)) {
        let culprit = initial_boundary
            .iter()
            .zip(&radii)
            .find(|&(&j, &r)| {
                run_cube_ball(dom, dec, &mut s, j, r);
                s.is_settled(hit)
            })
            .map(|(&j, _)| dec.cube(j));
        return Err(Error::MTooSmall(format!("blocking ball of boundary cube {culprit:?} meets Q0")));
    }
    let mut blocker = Blocker::new(dom, dec, q0);
    let mut member = comp.member.clone();
    let mut in_u = Marks::new(dom.len());
    let mut in_block = Marks::new(dom.len());
    let mut fired = vec![false; initial_boundary.len()];
    let mut blocks_all: Vec<Option<CellSet>> = vec![None; initial_boundary.len()];
    let mut u_sets: Vec<Option<CellSet>> = vec![None; initial_boundary.len()];
    let mut removed = 0usize;
    for (pos, &j) in initial_boundary.iter().enumerate() {
        if !member[j] {
            continue;
        }
        fired[pos] = true;
        run_cube_ball(dom, dec, &mut s, j, radii[pos]);
        let ucells: Vec<usize> = s.settled().iter().map(|&c| c as usize).collect();
        in_u.clear();
        for &c in &ucells {
            in_u.set(c);
        }
        let (block, filled) = blocker.blocked(dom, &ucells, &in_u);
        let mut u = CellSet::from_unsorted(ucells.iter().map(|&c| c as u32).collect());
        if !filled.is_empty() {
            u = u.union(&filled);
        }
        u_sets[pos] = Some(u);
        if !block.is_empty() {
            in_block.clear();
            for c in block.iter() {
                in_block.set(c);
            }
            let r = cfg.radius(dec, j, cfg.factors.keep);
            run_cube_ball(dom, dec, &mut s, j, r);
            let mut candidates: Vec<usize> = block
                .iter()
                .filter_map(|c| dec.owner(c))
                .filter(|&q| member[q])
                .collect();
            candidates.sort_unstable();
            candidates.dedup();
            for q in candidates {
                if dec.cells_of(dom, q).all(|c| in_block.get(c) && !s.is_settled(c)) {
                    member[q] = false;
                    removed += 1;
                }
            }
        }
        blocks_all[pos] = Some(block);
    }
    let boundary_cubes = boundary_of(dec, &member);
    let mut selected = Vec::new();
    let mut surviving = Vec::new();
    let mut sel_u = Vec::new();
    let mut sel_blocks = Vec::new();
    for (pos, &j) in initial_boundary.iter().enumerate() {
        if member[j] {
            selected.push(j);
            surviving.push(pos);
            sel_u.push(u_sets[pos].take().expect("surviving cubes fired"));
            sel_blocks.push(blocks_all[pos].take().expect("surviving cubes fired"));
        }
    }
    let omega_cells = cube_cell_mask(dec, dom, &member);
    Ok(CorePartition {
        m,
        q0,
        config: cfg.clone(),
        in_omega: member,
        omega_cells,
        boundary_cubes,
        selected,
        u_sets: sel_u,
        blocks: sel_blocks,
        initial_boundary,
        surviving,
        fired,
        initial_cubes: comp.cubes.len(),
        removed_cubes: removed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::search::reachable;
    use crate::domain::{build_domain, pt2, DomainSpec};
    use crate::whitney::whitney_decompose;

    fn setup(spec: &DomainSpec, h: f64, lmax: i32) -> (DiscreteDomain, WhitneyDecomposition) {
        let dom = build_domain(spec, h).unwrap();
        let dec = whitney_decompose(&dom, lmax).unwrap();
        (dom, dec)
    }

    #[test]
    fn square_core_is_everything_at_fine_scale() {
        let (dom, dec) = setup(&DomainSpec::unit_square(), 1.0 / 64.0, 4);
        let q0 = choose_q0(&dec);
        let c = core_component(&dec, 4, q0).unwrap();
        assert_eq!(c.cubes.len(), dec.len());
        let coarsest = dec.cube(q0).level;
        let c = core_component(&dec, coarsest, q0).unwrap();
        assert!(c.cubes.iter().all(|&i| dec.cube(i).level == coarsest));
        assert!(matches!(core_component(&dec, coarsest - 1, q0), Err(Error::MTooSmall(_))));
        let _ = dom;
    }

    #[test]
    fn thin_neck_splits_the_core() {
        // neck of width 1/32 is far thinner than 4 sqrt(2) 2^-3
        let spec = DomainSpec::dumbbell(0.5, 1.6, 1.0 / 32.0);
        let (dom, dec) = setup(&spec, 1.0 / 128.0, 5);
        let q0 = choose_q0(&dec);
        let c = core_component(&dec, 3, q0).unwrap();
        let mask = c.cell_mask(&dec, &dom);
        let left = dom.locate(&pt2(-0.8, 0.0)).unwrap();
        let right = dom.locate(&pt2(0.8, 0.0)).unwrap();
        let q0_cell = dec.central_cells(&dom, q0)[0];
        assert!(mask[left] != mask[right]);
        // flood fill through the component agrees
        for cell in [left, right] {
            assert_eq!(mask[cell], reachable(&dom, q0_cell, cell, |x| mask[x]));
        }
    }

    #[test]
    fn convex_domain_has_no_blocks() {
        let (dom, dec) = setup(&DomainSpec::disk([0.0, 0.0], 1.0), 1.0 / 128.0, 6);
        let q0 = choose_q0(&dec);
        let cfg = DecompositionConfig::new(0.3);
        let core = refine_core(&dec, &dom, 5, q0, &cfg).unwrap();
        assert!(core.blocks.iter().all(|b| b.is_empty()));
        assert_eq!(core.removed_cubes, 0);
        assert_eq!(core.selected.len(), core.initial_boundary.len());
        assert_eq!(core.selected, core.boundary_cubes);
    }

    #[test]
    fn large_balls_make_m_too_small() {
        let (dom, dec) = setup(&DomainSpec::disk([0.0, 0.0], 1.0), 1.0 / 64.0, 5);
        let q0 = choose_q0(&dec);
        let r = refine_core(&dec, &dom, 3, q0, &DecompositionConfig::new(5.0));
        assert!(matches!(r, Err(Error::MTooSmall(_))));
        let r = refine_core(&dec, &dom, 3, q0, &DecompositionConfig::new(0.0));
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn blocked_region_matches_flood_fill() {
        let spec = DomainSpec::dumbbell(0.5, 1.6, 0.1);
        let (dom, dec) = setup(&spec, 1.0 / 128.0, 6);
        let q0 = choose_q0(&dec);
        let mut blocker = Blocker::new(&dom, &dec, q0);
        // a ball cutting the neck
        let x = pt2(0.0, 0.0);
        let mut s = Search::for_domain(&dom);
        let c = dom.locate(&x).unwrap();
        s.run(&dom, Metric::Inner, &[(c, 0.0)], 0.12, &[]);
        let ucells: Vec<usize> = s.settled().iter().map(|&c| c as usize).collect();
        let mut marks = Marks::new(dom.len());
        marks.clear();
        for &c in &ucells {
            marks.set(c);
        }
        let (block, filled) = blocker.blocked(&dom, &ucells, &marks);
        let q0_cell = dec.central_cells(&dom, q0)[0];
        let mut n_blocked = 0;
        for cell in dom.cells() {
            if marks.get(cell) {
                assert!(!block.contains(cell));
                continue;
            }
            let open = reachable(&dom, q0_cell, cell, |v| !marks.get(v));
            assert_eq!(block.contains(cell) || filled.contains(cell), !open, "cell {cell}");
            assert!(!(block.contains(cell) && filled.contains(cell)));
            n_blocked += usize::from(!open);
        }
        assert!(n_blocked > 1000);
    }
}
