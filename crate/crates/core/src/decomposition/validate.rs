//! Independent checks of a core partition and its layer.

use super::{closure, BoundaryLayer, CorePartition};
use crate::domain::search::{Metric, Search};
use crate::domain::{CellSet, DiscreteDomain};
use crate::whitney::{Check, WhitneyDecomposition};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Largest number of pieces met by a single piece, per relation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapCounts {
    /// `S_j ∩ S_k`
    pub s: usize,
    /// boundary cube `∩ S_k`
    pub rs: usize,
    /// `T'_j ∩ S_k`
    pub t_prime_s: usize,
    /// `T_j ∩ S_k`
    pub ts: usize,
    /// `S_j ∩ T_k`
    pub st: usize,
    /// boundary cube `∩ N(S_k)`
    pub rns: usize,
    /// `N(S_j) ∩ N(S_k)`
    pub ns: usize,
    /// `N(S_j) ∩ N(T_k)`
    pub ns_nt: usize,
    /// `N(T_j) ∩ N(S_k)`
    pub nt_ns: usize,
    /// `N(T_j) ∩ N(T_k)`
    pub nt_nt: usize,
}

impl OverlapCounts {
    pub fn max(&self) -> usize {
        self.as_array().into_iter().max().unwrap()
    }

    pub fn as_array(&self) -> [usize; 10] {
        [
            self.s,
            self.rs,
            self.t_prime_s,
            self.ts,
            self.st,
            self.rns,
            self.ns,
            self.ns_nt,
            self.nt_ns,
            self.nt_nt,
        ]
    }

    pub const NAMES: [&'static str; 10] =
        ["s", "rs", "t_prime_s", "ts", "st", "rns", "ns", "ns_nt", "nt_ns", "nt_nt"];
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartitionReport {
    pub m: i32,
    pub c1: f64,
    pub checks: Vec<Check>,
    pub counts: OverlapCounts,
    /// Largest `side(Q) 2^m` over boundary cubes.
    pub boundary_size_ratio: f64,
    /// Largest `diam(S_j) 2^m` (upper bound from the ball radius).
    pub s_diam_ratio: f64,
    /// Smallest inner distance from `F_m` to `omega_m`, times `2^m`.
    pub f_distance_ratio: Option<f64>,
    /// Largest fraction of a closed piece shared with another piece.
    pub shared_fraction: f64,
    pub omega_cells: usize,
    pub e_cells: usize,
    pub f_cells: usize,
    pub selected: usize,
    pub boundary_cubes: usize,
    pub blocks: usize,
}

impl PartitionReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Per-cell lists of the pieces containing each cell.
struct Membership {
    start: Vec<u32>,
    ids: Vec<u32>,
}

impl Membership {
    fn new(len: usize, sets: &[CellSet]) -> Self {
        let mut start = vec![0u32; len + 1];
        for s in sets {
            for c in s.iter() {
                start[c + 1] += 1;
            }
        }
        for i in 0..len {
            start[i + 1] += start[i];
        }
        let mut fill = start.clone();
        let mut ids = vec![0u32; start[len] as usize];
        for (k, s) in sets.iter().enumerate() {
            for c in s.iter() {
                ids[fill[c] as usize] = k as u32;
                fill[c] += 1;
            }
        }
        Membership { start, ids }
    }

    fn at(&self, c: usize) -> &[u32] {
        &self.ids[self.start[c] as usize..self.start[c + 1] as usize]
    }

    /// Number of distinct pieces met by `cells`.
    fn count<I: Iterator<Item = usize>>(&self, cells: I, seen: &mut Vec<u32>, tag: u32) -> usize {
        let mut n = 0;
        for c in cells {
            for &k in self.at(c) {
                if seen[k as usize] != tag {
                    seen[k as usize] = tag;
                    n += 1;
                }
            }
        }
        n
    }
}

/// Tag-stamped scratch for counting distinct pieces.
struct Counter {
    seen: Vec<u32>,
    tag: u32,
}

impl Counter {
    fn sets(&mut self, queries: &[CellSet], memb: &Membership) -> usize {
        let mut best = 0;
        for q in queries.iter().filter(|q| !q.is_empty()) {
            self.tag += 1;
            best = best.max(memb.count(q.iter(), &mut self.seen, self.tag));
        }
        best
    }

    fn cubes(&mut self, dec: &WhitneyDecomposition, dom: &DiscreteDomain, cubes: &[usize], memb: &Membership) -> usize {
        let mut best = 0;
        for &k in cubes {
            self.tag += 1;
            best = best.max(memb.count(dec.cells_of(dom, k), &mut self.seen, self.tag));
        }
        best
    }
}

/// `N(A)`: cells within inner distance `eps` of the cells of `a`.
pub fn neighborhood(dom: &DiscreteDomain, s: &mut Search, a: &CellSet, eps: f64) -> CellSet {
    if a.is_empty() {
        return CellSet::new();
    }
    let src: Vec<(usize, f64)> = a.iter().map(|c| (c, 0.0)).collect();
    s.run(dom, Metric::Inner, &src, eps, &[]);
    CellSet::from_unsorted(s.settled().to_vec())
}

pub fn validate_partitioning(
    dec: &WhitneyDecomposition,
    dom: &DiscreteDomain,
    core: &CorePartition,
    layer: &BoundaryLayer,
) -> PartitionReport {
    let n = dom.len();
    let cfg = &core.config;
    let scale = 2f64.powi(core.m);
    let mut checks = Vec::new();

    let mut c = Check::new("q0_in_omega");
    if !core.in_omega[core.q0] || dec.cells_of(dom, core.q0).any(|x| !core.omega_cells[x]) {
        c.fail(|| format!("Q0 {:?} not in omega_m", dec.cube(core.q0)));
    }
    checks.push(c);

    let mut c = Check::new("omega_cells");
    let mut member_cells = vec![false; n];
    for i in 0..dec.len() {
        if core.in_omega[i] {
            if dec.cube(i).level > core.m {
                c.fail(|| format!("cube {:?} finer than 2^-{}", dec.cube(i), core.m));
            }
            for x in dec.cells_of(dom, i) {
                member_cells[x] = true;
            }
        }
    }
    if member_cells != core.omega_cells {
        c.fail(|| "omega cell mask differs from its cubes".into());
    }
    checks.push(c);

    let mut c = Check::new("boundary_size");
    let mut ratio = 0.0f64;
    let mut recomputed: Vec<usize> = (0..dec.len())
        .filter(|&i| {
            core.in_omega[i]
                && (dec.touches_residual(i) || dec.neighbors(i).iter().any(|&k| !core.in_omega[k as usize]))
        })
        .collect();
    recomputed.sort_unstable();
    if recomputed != core.boundary_cubes {
        c.fail(|| "boundary cube family differs from recomputation".into());
    }
    for &k in &core.boundary_cubes {
        let r = dec.side(k) * scale;
        ratio = ratio.max(r);
        if r < 1.0 - 1e-12 || r > cfg.boundary_size_cap {
            c.fail(|| format!("boundary cube {:?} has side ratio {r}", dec.cube(k)));
        }
    }
    checks.push(c);

    let mut c = Check::new("selected_boundary");
    for &j in &core.selected {
        if core.boundary_cubes.binary_search(&j).is_err() {
            c.fail(|| format!("selected cube {:?} is not a boundary cube", dec.cube(j)));
        }
    }
    checks.push(c);

    let mut c = Check::new("coverage");
    let mut cov = core.omega_cells.clone();
    for set in core.u_sets.iter().chain(&core.blocks) {
        for x in set.iter() {
            cov[x] = true;
        }
    }
    for x in dom.cells() {
        if !cov[x] {
            c.fail(|| format!("cell {x} outside omega_m, all U_j and all blocks"));
        }
    }
    checks.push(c);

    let mut c = Check::new("cover_boundary");
    if layer.uncovered_boundary_cells > 0 {
        c.violations = layer.uncovered_boundary_cells;
        c.passed = false;
        c.first_counterexample = Some(format!(
            "{} boundary cube cells outside every cover ball",
            layer.uncovered_boundary_cells
        ));
    }
    checks.push(c);

    let mut c = Check::new("block_containment");
    if layer.containment_violations > 0 {
        c.violations = layer.containment_violations;
        c.passed = false;
        c.first_counterexample = layer.first_containment_violation.clone();
    }
    checks.push(c);

    let mut c = Check::new("deduction");
    for (j, block) in core.blocks.iter().enumerate() {
        if block.is_empty() {
            continue;
        }
        for (k, uk) in core.u_sets.iter().enumerate() {
            if k != j && block.intersects(uk) && !core.u_sets[j].intersects(uk) && !uk.is_subset(block) {
                c.fail(|| format!("U of {:?} meets but is not inside block of {:?}", dec.cube(core.selected[k]), dec.cube(core.selected[j])));
            }
        }
    }
    checks.push(c);

    let mut c = Check::new("layer_split");
    let e = layer.e_m.to_mask(n);
    let f = layer.f_m.to_mask(n);
    for x in dom.cells() {
        let outside = !core.omega_cells[x];
        if (e[x] || f[x]) != outside || (e[x] && f[x]) {
            c.fail(|| format!("cell {x}: omega {} E {} F {}", !outside, e[x], f[x]));
        }
    }
    checks.push(c);

    let mut c = Check::new("pieces_cover");
    let mut s_hits = vec![0u8; n];
    for p in &layer.s_raw {
        for x in p.iter() {
            s_hits[x] = s_hits[x].saturating_add(1);
        }
    }
    let mut t_hits = vec![0u8; n];
    for p in &layer.t_raw {
        for x in p.iter() {
            t_hits[x] = t_hits[x].saturating_add(1);
        }
    }
    for x in dom.cells() {
        let want_s = u8::from(e[x]);
        let want_t = u8::from(f[x]);
        if s_hits[x] != want_s || t_hits[x] != want_t {
            c.fail(|| format!("cell {x} lies in {} S pieces and {} T pieces", s_hits[x], t_hits[x]));
        }
    }
    checks.push(c);

    // closed pieces overlap only in closure cells
    let mut c = Check::new("piece_boundaries");
    let mut shared_fraction = 0.0f64;
    let closed: Vec<&CellSet> = layer.s.iter().chain(&layer.t).collect();
    let raw: Vec<&CellSet> = layer.s_raw.iter().chain(&layer.t_raw).collect();
    let mut hits = vec![0u16; n];
    for p in &closed {
        for x in p.iter() {
            hits[x] = hits[x].saturating_add(1);
        }
    }
    for (p, r) in closed.iter().zip(&raw) {
        if p.is_empty() {
            continue;
        }
        let shared = p.iter().filter(|&x| hits[x] > 1).count();
        shared_fraction = shared_fraction.max(shared as f64 / p.len() as f64);
        for x in p.iter() {
            if hits[x] > 1 && r.contains(x) && dom.touching(x).filter(|&y| dom.is_occupied(y)).all(|y| r.contains(y)) {
                c.fail(|| format!("shared cell {x} is interior to its piece"));
            }
        }
        if closure(dom, r) != **p {
            c.fail(|| "closed piece differs from the closure of its raw piece".into());
        }
    }
    checks.push(c);

    let mut s = Search::for_domain(dom);
    let mut c = Check::new("far_part_distance");
    let f_distance_ratio = if layer.f_m.is_empty() {
        None
    } else {
        let src: Vec<(usize, f64)> = layer.f_m.iter().map(|x| (x, 0.0)).collect();
        s.run(dom, Metric::Inner, &src, f64::INFINITY, &[]);
        let d = dom
            .cells()
            .filter(|&x| core.omega_cells[x])
            .filter_map(|x| s.distance(x))
            .fold(f64::INFINITY, f64::min);
        if d * scale < 1.0 {
            c.fail(|| format!("F_m comes within {d} of omega_m"));
        }
        Some(d * scale)
    };
    checks.push(c);

    let mut c = Check::new("piece_diameter");
    let s_diam_ratio = layer.s_diam.iter().cloned().fold(0.0, f64::max) * scale;
    let n_dim = dom.dim() as f64;
    let bound = 2.0 * cfg.factors.piece * n_dim * cfg.c1 * cfg.boundary_size_cap;
    if s_diam_ratio > bound {
        c.fail(|| format!("diam(S_j) 2^m = {s_diam_ratio} exceeds {bound}"));
    }
    checks.push(c);

    let counts = overlap_counts(dec, dom, core, layer, &mut s);
    let mut c = Check::new("overlap_cap");
    for (name, v) in OverlapCounts::NAMES.iter().zip(counts.as_array()) {
        if v > cfg.overlap_cap {
            c.fail(|| format!("{name} count {v} exceeds cap {}", cfg.overlap_cap));
        }
    }
    checks.push(c);

    PartitionReport {
        m: core.m,
        c1: cfg.c1,
        checks,
        counts,
        boundary_size_ratio: ratio,
        s_diam_ratio,
        f_distance_ratio,
        shared_fraction,
        omega_cells: core.omega_cell_count(),
        e_cells: layer.e_m.len(),
        f_cells: layer.f_m.len(),
        selected: core.selected.len(),
        boundary_cubes: core.boundary_cubes.len(),
        blocks: core.blocks.iter().filter(|b| !b.is_empty()).count(),
    }
}

/// Neighbourhood radius `2^-m-5` used by the cutoff functions.
pub fn neighborhood_radius(m: i32) -> f64 {
    2f64.powi(-m - 5)
}

pub fn overlap_counts(
    dec: &WhitneyDecomposition,
    dom: &DiscreteDomain,
    core: &CorePartition,
    layer: &BoundaryLayer,
    s: &mut Search,
) -> OverlapCounts {
    let n = dom.len();
    let eps = neighborhood_radius(core.m);
    let ns: Vec<CellSet> = layer.s.iter().map(|a| neighborhood(dom, s, a, eps)).collect();
    let nt: Vec<CellSet> = layer.t.iter().map(|a| neighborhood(dom, s, a, eps)).collect();
    let m_s = Membership::new(n, &layer.s);
    let m_t = Membership::new(n, &layer.t);
    let m_ns = Membership::new(n, &ns);
    let m_nt = Membership::new(n, &nt);
    let mut k = Counter {
        seen: vec![0; layer.pieces()],
        tag: 0,
    };
    let b = &core.boundary_cubes;
    OverlapCounts {
        s: k.sets(&layer.s, &m_s),
        rs: k.cubes(dec, dom, b, &m_s),
        t_prime_s: k.sets(&layer.t_prime, &m_s),
        ts: k.sets(&layer.t, &m_s),
        st: k.sets(&layer.s, &m_t),
        rns: k.cubes(dec, dom, b, &m_ns),
        ns: k.sets(&ns, &m_ns),
        ns_nt: k.sets(&ns, &m_nt),
        nt_ns: k.sets(&nt, &m_ns),
        nt_nt: k.sets(&nt, &m_nt),
    }
}

/// Outcome of comparing the cores across scales.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExhaustionReport {
    /// Smallest `M` with `omega_m` inside the interior of `omega_{m+M}` for
    /// every tested pair, if any.
    pub offset: Option<i32>,
    /// The finest tested core covers every cell owned by a cube.
    pub covers_decomposition: bool,
}

/// `cores` must be sorted by increasing `m`.
pub fn exhaustion_offset(dec: &WhitneyDecomposition, dom: &DiscreteDomain, cores: &[CorePartition]) -> ExhaustionReport {
    let inside = |a: &CorePartition, b: &CorePartition| {
        dom.cells()
            .filter(|&x| a.omega_cells[x])
            .all(|x| b.omega_cells[x] && dom.touching(x).all(|y| !dom.is_occupied(y) || b.omega_cells[y]))
    };
    let mut offset = None;
    let span = cores.last().map_or(0, |c| c.m) - cores.first().map_or(0, |c| c.m);
    'outer: for mm in 1..=span {
        let mut tested = false;
        for a in cores {
            if let Some(b) = cores.iter().find(|b| b.m == a.m + mm) {
                tested = true;
                if !inside(a, b) {
                    continue 'outer;
                }
            }
        }
        if tested {
            offset = Some(mm);
            break;
        }
    }
    let covers_decomposition = cores.last().is_some_and(|c| {
        dom.cells().all(|x| dec.owner(x).is_none() || c.omega_cells[x])
    });
    ExhaustionReport { offset, covers_decomposition }
}

/// Cubes within `steps` cube-graph steps of the boundary cubes, and the
/// largest `side(Q) 2^m` among them.
pub fn d_prime(dec: &WhitneyDecomposition, core: &CorePartition, steps: usize) -> (Vec<usize>, f64) {
    let mut depth = vec![usize::MAX; dec.len()];
    let mut queue = VecDeque::new();
    for &k in &core.boundary_cubes {
        depth[k] = 0;
        queue.push_back(k);
    }
    while let Some(i) = queue.pop_front() {
        if depth[i] == steps {
            continue;
        }
        for &j in dec.neighbors(i) {
            let j = j as usize;
            if depth[j] == usize::MAX {
                depth[j] = depth[i] + 1;
                queue.push_back(j);
            }
        }
    }
    let cubes: Vec<usize> = (0..dec.len()).filter(|&i| depth[i] != usize::MAX).collect();
    let scale = 2f64.powi(core.m);
    let ratio = cubes.iter().map(|&i| dec.side(i) * scale).fold(0.0, f64::max);
    (cubes, ratio)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::{boundary_layer, choose_q0, refine_core, DecompositionConfig};
    use crate::domain::{build_domain, DomainSpec};
    use crate::whitney::whitney_decompose;

    fn run(spec: &DomainSpec, h: f64, m: i32, c1: f64) -> (DiscreteDomain, WhitneyDecomposition, CorePartition, BoundaryLayer) {
        let dom = build_domain(spec, h).unwrap();
        let finest = crate::whitney::dyadic_level(h).unwrap() - 1;
        let dec = whitney_decompose(&dom, (m + 1).min(finest)).unwrap();
        let q0 = choose_q0(&dec);
        let core = refine_core(&dec, &dom, m, q0, &DecompositionConfig::new(c1)).unwrap();
        let layer = boundary_layer(&dec, &dom, &core);
        (dom, dec, core, layer)
    }

    #[test]
    fn convex_domain_passes_with_small_counts() {
        let (dom, dec, core, layer) = run(&DomainSpec::disk([0.0, 0.0], 1.0), 1.0 / 128.0, 5, 0.3);
        let rep = validate_partitioning(&dec, &dom, &core, &layer);
        assert!(rep.passed(), "{:?}", rep.checks);
        assert_eq!(rep.f_cells, 0);
        assert_eq!(rep.counts.ts, 0);
        assert!(rep.counts.max() <= 64);
    }

    #[test]
    fn enlarged_piece_is_reported() {
        let (dom, dec, core, mut layer) = run(&DomainSpec::disk([0.0, 0.0], 1.0), 1.0 / 256.0, 6, 0.05);
        let mut cfg_core = core.clone();
        cfg_core.config.overlap_cap = 16;
        let before = validate_partitioning(&dec, &dom, &cfg_core, &layer);
        // grow the first piece over the whole layer
        let i = layer.s.iter().position(|s| !s.is_empty()).unwrap();
        layer.s[i] = closure(&dom, &layer.e_m);
        let after = validate_partitioning(&dec, &dom, &cfg_core, &layer);
        assert!(before.check("overlap_cap").unwrap().passed, "{:?}", before.counts);
        assert!(after.counts.s > before.counts.s);
        assert!(!after.check("overlap_cap").unwrap().passed);
        assert!(!after.check("piece_boundaries").unwrap().passed);
    }

    #[test]
    fn removed_coverage_is_reported() {
        let (dom, dec, mut core, layer) = run(&DomainSpec::disk([0.0, 0.0], 1.0), 1.0 / 128.0, 5, 0.3);
        for u in core.u_sets.iter_mut() {
            *u = CellSet::new();
        }
        let rep = validate_partitioning(&dec, &dom, &core, &layer);
        assert!(!rep.check("coverage").unwrap().passed);
    }

    #[test]
    fn exhaustion_on_square() {
        let dom = build_domain(&DomainSpec::unit_square(), 1.0 / 64.0).unwrap();
        let dec = whitney_decompose(&dom, 5).unwrap();
        let q0 = choose_q0(&dec);
        let cores: Vec<CorePartition> = (3..=5)
            .map(|m| refine_core(&dec, &dom, m, q0, &DecompositionConfig::new(0.05)).unwrap())
            .collect();
        let rep = exhaustion_offset(&dec, &dom, &cores);
        assert!(rep.covers_decomposition);
        assert_eq!(rep.offset, Some(1));
        let (cubes, ratio) = d_prime(&dec, &cores[0], 1);
        assert!(cubes.len() > cores[0].boundary_cubes.len());
        assert!(ratio <= 2.0);
    }
}
