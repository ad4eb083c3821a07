//! The layer `E_m`, the far part `F_m` and their pieces.

use super::{run_cube_ball, CorePartition, DecompositionConfig};
use crate::domain::edt::squared_edt;
use crate::domain::search::{Metric, Search};
use crate::domain::{CellSet, DiscreteDomain};
use crate::whitney::WhitneyDecomposition;

/// Pieces of `dom \ omega_m`. Piece vectors are indexed like
/// `CorePartition::selected`.
#[derive(Clone, Debug)]
pub struct BoundaryLayer {
    pub m: i32,
    pub e_m: CellSet,
    pub f_m: CellSet,
    /// First-come pieces of `E_m` before closure.
    pub s_raw: Vec<CellSet>,
    /// Closed pieces `S_j`.
    pub s: Vec<CellSet>,
    /// Closed `T'_j = block_j ∩ F_m`.
    pub t_prime: Vec<CellSet>,
    pub t_raw: Vec<CellSet>,
    /// Closed pieces `T_j`.
    pub t: Vec<CellSet>,
    /// Upper bound on the inner diameter of each raw `S_j`.
    pub s_diam: Vec<f64>,
    /// Cells of boundary cubes outside every cover ball.
    pub uncovered_boundary_cells: usize,
    /// Boundary cubes meeting `block_j` that stick out of the cover ball of `Q_j`.
    pub containment_violations: usize,
    pub first_containment_violation: Option<String>,
}

impl BoundaryLayer {
    pub fn pieces(&self) -> usize {
        self.s.len()
    }
}

/// Cells of `a` together with every occupied cell touching one of them.
pub fn closure(dom: &DiscreteDomain, a: &CellSet) -> CellSet {
    let mut out: Vec<u32> = a.as_slice().to_vec();
    for c in a.iter() {
        out.extend(dom.touching(c).filter(|&v| dom.is_occupied(v)).map(|v| v as u32));
    }
    CellSet::from_unsorted(out)
}

fn central_sources(dom: &DiscreteDomain, dec: &WhitneyDecomposition, j: usize, offset: f64) -> Vec<(usize, f64)> {
    let r0 = 0.5 * dom.spacing() * (dom.dim() as f64).sqrt();
    dec.central_cells(dom, j).into_iter().map(|c| (c, r0 + offset)).collect()
}

/// Cells lying in some ball about the cubes `sel`, through one search:
/// `d_j + (R - r_j) <= R` iff `d_j <= r_j`.
fn within_union<R: Fn(usize) -> f64>(
    dom: &DiscreteDomain,
    dec: &WhitneyDecomposition,
    s: &mut Search,
    sel: &[usize],
    radius: R,
) -> Vec<bool> {
    let radii: Vec<f64> = sel.iter().map(|&j| radius(j)).collect();
    let big = radii.iter().cloned().fold(0.0, f64::max);
    let mut src = Vec::new();
    for (&j, &r) in sel.iter().zip(&radii) {
        src.extend(central_sources(dom, dec, j, big - r));
    }
    let mut out = vec![false; dom.len()];
    if !src.is_empty() {
        s.run(dom, Metric::Inner, &src, big, &[]);
        for &c in s.settled() {
            out[c as usize] = true;
        }
    }
    out
}

/// First-come split of `target` over the balls about `sel`, in order.
/// Each search is pruned with the Euclidean distance to the cells not yet
/// taken (refreshed now and then; a stale value is still a lower bound).
fn first_come<R: Fn(usize) -> f64>(
    dom: &DiscreteDomain,
    dec: &WhitneyDecomposition,
    s: &mut Search,
    sel: &[usize],
    target: &[bool],
    radius: R,
) -> (Vec<CellSet>, Vec<f64>) {
    let g = dom.grid();
    let h = dom.spacing();
    let mut open: Vec<bool> = target.to_vec();
    let mut left = open.iter().filter(|&&b| b).count();
    let mut lower = squared_edt(g.shape, g.dim, &open);
    let mut since = 0usize;
    let mut pieces = Vec::with_capacity(sel.len());
    let mut diam = Vec::with_capacity(sel.len());
    for &j in sel {
        if left == 0 {
            pieces.push(CellSet::new());
            diam.push(0.0);
            continue;
        }
        if since > 0 && since * 8 >= left {
            lower = squared_edt(g.shape, g.dim, &open);
            since = 0;
        }
        let r = radius(j);
        let slack = r * (1.0 + 1e-12);
        let lb = &lower;
        s.run_pruned(dom, Metric::Inner, &central_sources(dom, dec, j, 0.0), r, &[], |v, d| {
            d + lb[v].sqrt() * h <= slack
        });
        let mut piece = Vec::new();
        let mut far = 0.0f64;
        for &c in s.settled() {
            let c = c as usize;
            if open[c] {
                open[c] = false;
                piece.push(c as u32);
                far = far.max(s.distance(c).unwrap());
            }
        }
        left -= piece.len();
        since += piece.len();
        pieces.push(CellSet::from_unsorted(piece));
        diam.push(2.0 * far);
    }
    (pieces, diam)
}

pub fn boundary_layer(dec: &WhitneyDecomposition, dom: &DiscreteDomain, core: &CorePartition) -> BoundaryLayer {
    let cfg: &DecompositionConfig = &core.config;
    let sel = &core.selected;
    let mut s = Search::for_domain(dom);

    let in_e = within_union(dom, dec, &mut s, sel, |j| cfg.radius(dec, j, cfg.factors.layer))
        .into_iter()
        .zip(&core.omega_cells)
        .map(|(a, &o)| a && !o)
        .collect::<Vec<_>>();
    let e_m = CellSet::from_mask(&in_e);
    let f_m = CellSet::from_unsorted(
        dom.cells()
            .filter(|&c| !core.omega_cells[c] && !in_e[c])
            .map(|c| c as u32)
            .collect(),
    );

    let covered = within_union(dom, dec, &mut s, sel, |j| cfg.radius(dec, j, cfg.factors.cover));
    let uncovered_boundary_cells = core
        .boundary_cubes
        .iter()
        .flat_map(|&k| dec.cells_of(dom, k))
        .filter(|&c| !covered[c])
        .count();

    let mut in_boundary = vec![false; dec.len()];
    for &k in &core.boundary_cubes {
        in_boundary[k] = true;
    }
    let mut containment_violations = 0;
    let mut first_containment_violation = None;
    for (pos, &j) in sel.iter().enumerate() {
        let block = &core.blocks[pos];
        if block.is_empty() {
            continue;
        }
        let mut hit: Vec<usize> = block
            .iter()
            .filter_map(|c| dec.owner(c))
            .filter(|&k| in_boundary[k])
            .collect();
        hit.sort_unstable();
        hit.dedup();
        if hit.is_empty() {
            continue;
        }
        let r_cover = cfg.radius(dec, j, cfg.factors.cover);
        run_cube_ball(dom, dec, &mut s, j, r_cover);
        for k in hit {
            if !dec.cells_of(dom, k).all(|c| s.is_settled(c)) {
                containment_violations += 1;
                first_containment_violation.get_or_insert_with(|| {
                    format!("boundary cube {:?} meets block of {:?}", dec.cube(k), dec.cube(j))
                });
            }
        }
    }

    let (s_raw, s_diam) = first_come(dom, dec, &mut s, sel, &in_e, |j| cfg.radius(dec, j, cfg.factors.piece));

    let in_f = f_m.to_mask(dom.len());
    let mut t_prime_raw: Vec<CellSet> = Vec::with_capacity(sel.len());
    let mut t_raw = Vec::with_capacity(sel.len());
    let mut claimed = vec![false; dom.len()];
    for b in &core.blocks {
        let tp: Vec<u32> = b.iter().filter(|&c| in_f[c]).map(|c| c as u32).collect();
        let tj: Vec<u32> = tp.iter().copied().filter(|&c| !claimed[c as usize]).collect();
        for &c in &tp {
            claimed[c as usize] = true;
        }
        t_prime_raw.push(CellSet::from_unsorted(tp));
        t_raw.push(CellSet::from_unsorted(tj));
    }
    let s_closed = s_raw.iter().map(|a| closure(dom, a)).collect();
    let t_prime = t_prime_raw.iter().map(|a| closure(dom, a)).collect();
    let t = t_raw.iter().map(|a| closure(dom, a)).collect();
    BoundaryLayer {
        m: core.m,
        e_m,
        f_m,
        s_raw,
        s: s_closed,
        t_prime,
        t_raw,
        t,
        s_diam,
        uncovered_boundary_cells,
        containment_violations,
        first_containment_violation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::{choose_q0, refine_core};
    use crate::domain::{build_domain, DomainSpec};
    use crate::whitney::whitney_decompose;

    fn layer_for(spec: &DomainSpec, h: f64, m: i32, c1: f64) -> (DiscreteDomain, CorePartition, BoundaryLayer) {
        let dom = build_domain(spec, h).unwrap();
        let finest = crate::whitney::dyadic_level(h).unwrap() - 1;
        let dec = whitney_decompose(&dom, (m + 1).min(finest)).unwrap();
        let q0 = choose_q0(&dec);
        let core = refine_core(&dec, &dom, m, q0, &DecompositionConfig::new(c1)).unwrap();
        let layer = boundary_layer(&dec, &dom, &core);
        (dom, core, layer)
    }

    #[test]
    fn convex_layer_has_no_far_part() {
        let (dom, core, layer) = layer_for(&DomainSpec::disk([0.0, 0.0], 1.0), 1.0 / 128.0, 5, 0.1);
        assert!(layer.f_m.is_empty());
        assert!(layer.t.iter().all(|t| t.is_empty()));
        let union = layer.s_raw.iter().fold(CellSet::new(), |acc, s| acc.union(s));
        assert_eq!(union, layer.e_m);
        let outside: usize = dom.cells().filter(|&c| !core.omega_cells[c]).count();
        assert_eq!(layer.e_m.len(), outside);
        // raw pieces are disjoint
        let total: usize = layer.s_raw.iter().map(|s| s.len()).sum();
        assert_eq!(total, union.len());
        assert_eq!(layer.uncovered_boundary_cells, 0);
    }

    #[test]
    fn dumbbell_far_part_lies_in_exactly_one_t() {
        let spec = DomainSpec::dumbbell(1.0, 3.0, 1.0 / 8.0);
        let (_dom, core, layer) = layer_for(&spec, 1.0 / 256.0, 7, 0.8);
        assert!(core.blocks.iter().any(|b| !b.is_empty()));
        assert!(!layer.f_m.is_empty());
        for c in layer.f_m.iter() {
            let n = layer.t_raw.iter().filter(|t| t.contains(c)).count();
            assert_eq!(n, 1, "cell {c}");
        }
        assert!(layer.e_m.iter().all(|c| !layer.f_m.contains(c)));
    }
}
