//! The approximation operator `u -> u_m` and W^{1,p} convergence runs.
//!
//! `u_m = u ψ + Σ a_j φ_j + Σ a_j ϕ_j`, where `a_j` is the mean of `u`
//! over the selected boundary cube that generates the pieces `S_j` and
//! `T_j`. Because the fields sum to one, `u_m` is a pointwise convex
//! combination of values and averages of `u`.

mod catalog;

pub use catalog::{PRange, TestFunction};

use crate::decomposition::{boundary_layer, choose_q0, closure, d_prime, refine_core, BoundaryLayer, CorePartition, DecompositionConfig};
use crate::domain::search::Search;
use crate::domain::{CellSet, DiscreteDomain, Point};
use crate::error::{Error, Result};
use crate::partition::{build_partition, PartitionOfUnity};
use crate::qh::chain_with;
use crate::whitney::{dyadic_level, whitney_decompose, WhitneyDecomposition};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Per-cell values on the grid of a domain; zero off the domain.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub values: Vec<f64>,
    pub name: String,
}

impl GridFunction {
    pub fn from_fn(dom: &DiscreteDomain, name: impl Into<String>, f: impl Fn(&Point) -> f64 + Sync) -> Result<Self> {
        let name = name.into();
        let mut values = vec![0.0; dom.len()];
        values.par_iter_mut().enumerate().for_each(|(c, v)| {
            if dom.is_occupied(c) {
                *v = f(&dom.center(c));
            }
        });
        if let Some(c) = dom.cells().find(|&c| !values[c].is_finite()) {
            return Err(Error::UndefinedOnDomain(format!("{name} is {} at {:?}", values[c], dom.center(c))));
        }
        Ok(GridFunction { values, name })
    }

    pub fn sample(dom: &DiscreteDomain, f: &TestFunction) -> Result<Self> {
        Self::from_fn(dom, f.name(), |x| f.eval(x))
    }

    pub fn sup_norm(&self, dom: &DiscreteDomain) -> f64 {
        dom.cells().map(|c| self.values[c].abs()).fold(0.0, f64::max)
    }

    pub fn sub(&self, other: &GridFunction) -> GridFunction {
        GridFunction {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
            name: format!("{} - {}", self.name, other.name),
        }
    }

    /// Largest `|f(u) - f(v)| / |u - v|` over allowed moves.
    pub fn lipschitz(&self, dom: &DiscreteDomain) -> f64 {
        self.lipschitz_on(dom, |_| true)
    }

    fn lipschitz_on(&self, dom: &DiscreteDomain, keep: impl Fn(usize) -> bool + Sync) -> f64 {
        let cells: Vec<usize> = dom.cells().collect();
        cells
            .par_iter()
            .filter(|&&u| keep(u))
            .map(|&u| {
                dom.neighbors(u)
                    .map(|(v, len)| (self.values[u] - self.values[v]).abs() / len)
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max)
    }
}

/// `W^{1,p}` norm with `total^p = lp^p + grad^p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SobolevNorm {
    pub p: f64,
    pub lp: f64,
    pub grad: f64,
    pub total: f64,
}

impl SobolevNorm {
    fn from_sums(p: f64, lp: f64, grad: f64) -> Self {
        SobolevNorm {
            p,
            lp: lp.powf(1.0 / p),
            grad: grad.powf(1.0 / p),
            total: (lp + grad).powf(1.0 / p),
        }
    }
}

/// Euclidean length of the discrete gradient at every cell. Central
/// differences where both axis neighbours are in the domain, one-sided
/// where only one is, zero along an axis with neither.
pub fn gradient_magnitude(dom: &DiscreteDomain, u: &GridFunction) -> Vec<f64> {
    let grid = dom.grid();
    let h = dom.spacing();
    let n = dom.dim();
    let mut out = vec![0.0; dom.len()];
    out.par_iter_mut().enumerate().for_each(|(c, g)| {
        if !dom.is_occupied(c) {
            return;
        }
        let x = grid.coords(c);
        let at = |axis: usize, d: i64| {
            let mut y = x;
            y[axis] += d;
            grid.index(y).filter(|&k| dom.is_occupied(k))
        };
        let mut sq = 0.0;
        for axis in 0..n {
            let d = match (at(axis, -1), at(axis, 1)) {
                (Some(a), Some(b)) => (u.values[b] - u.values[a]) / (2.0 * h),
                (None, Some(b)) => (u.values[b] - u.values[c]) / h,
                (Some(a), None) => (u.values[c] - u.values[a]) / h,
                (None, None) => 0.0,
            };
            sq += d * d;
        }
        *g = sq.sqrt();
    });
    out
}

fn check_p(p: f64) -> Result<()> {
    if p.is_finite() && p >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("Sobolev exponent p = {p} must be finite and >= 1")))
    }
}

/// Quadrature sums of `|u|^p` and `|∇u|^p`, each times `h^n`, over the
/// selected cells.
fn sums(dom: &DiscreteDomain, u: &GridFunction, grad: &[f64], p: f64, keep: impl Fn(usize) -> bool + Sync) -> (f64, f64) {
    let vol = dom.spacing().powi(dom.dim() as i32);
    let cells: Vec<usize> = dom.cells().filter(|&c| keep(c)).collect();
    let (a, b) = cells
        .par_iter()
        .map(|&c| (u.values[c].abs().powf(p), grad[c].powf(p)))
        .reduce(|| (0.0, 0.0), |x, y| (x.0 + y.0, x.1 + y.1));
    (a * vol, b * vol)
}

pub fn sobolev_norm(u: &GridFunction, dom: &DiscreteDomain, p: f64) -> Result<SobolevNorm> {
    check_p(p)?;
    let grad = gradient_magnitude(dom, u);
    let (a, b) = sums(dom, u, &grad, p, |_| true);
    Ok(SobolevNorm::from_sums(p, a, b))
}

/// Mean of `u` over the cells of cube `q`.
pub fn cube_average(u: &GridFunction, dec: &WhitneyDecomposition, dom: &DiscreteDomain, q: usize) -> Result<f64> {
    if q >= dec.len() {
        return Err(Error::InvalidParameter(format!("cube {q} out of range")));
    }
    let (mut sum, mut k) = (0.0, 0usize);
    for c in dec.cells_of(dom, q) {
        sum += u.values[c];
        k += 1;
    }
    if k == 0 {
        return Err(Error::InvalidParameter(format!("cube {q} has no cells")));
    }
    Ok(sum / k as f64)
}

/// `u_m` together with its coefficients and a Lipschitz monitor.
#[derive(Clone, Debug)]
pub struct Approximant {
    pub function: GridFunction,
    /// `a_j`, one per selected cube.
    pub averages: Vec<f64>,
    /// Discrete Lipschitz constant of `u_m`.
    pub lipschitz: f64,
    /// `2 N L ‖u‖_∞ + Lip(u on supp ψ)` with `N` the largest number of
    /// fields nonzero at a cell and `L` the largest field slope.
    pub lipschitz_bound: f64,
}

pub fn approximate(
    u: &GridFunction,
    pou: &PartitionOfUnity,
    core: &CorePartition,
    dec: &WhitneyDecomposition,
    dom: &DiscreteDomain,
) -> Result<Approximant> {
    let k = core.selected.len();
    if pou.phi.len() != k || pou.varphi.len() != k {
        return Err(Error::InvalidParameter(format!(
            "partition has {}/{} piece fields for {k} selected cubes",
            pou.phi.len(),
            pou.varphi.len()
        )));
    }
    let averages = core
        .selected
        .iter()
        .map(|&q| cube_average(u, dec, dom, q))
        .collect::<Result<Vec<_>>>()?;
    let mut values: Vec<f64> = (0..dom.len()).map(|c| u.values[c] * pou.psi[c]).collect();
    for (j, &a) in averages.iter().enumerate() {
        for f in [&pou.phi[j], &pou.varphi[j]] {
            for (&c, &w) in f.cells.iter().zip(&f.values) {
                values[c as usize] += a * w;
            }
        }
    }
    let function = GridFunction {
        values,
        name: format!("{}_m{}", u.name, core.m),
    };
    let lipschitz = function.lipschitz(dom);
    let near_psi = |c: usize| pou.psi[c] > 0.0 || dom.neighbors(c).any(|(v, _)| pou.psi[v] > 0.0);
    let lipschitz_bound =
        2.0 * pou.max_nonzero as f64 * pou.gradient_bound * u.sup_norm(dom) + u.lipschitz_on(dom, near_psi);
    Ok(Approximant {
        function,
        averages,
        lipschitz,
        lipschitz_bound,
    })
}

/// Pairs of pieces whose closures share a cell, as pairs of selected
/// indices.
fn related_pieces(dom: &DiscreteDomain, layer: &BoundaryLayer) -> Vec<(usize, usize)> {
    let k = layer.s.len();
    let mut owner: Vec<Vec<u32>> = vec![Vec::new(); dom.len()];
    for j in 0..k {
        let piece = layer.s[j].union(&layer.t[j]);
        for c in closure(dom, &piece).iter() {
            owner[c].push(j as u32);
        }
    }
    let mut pairs = std::collections::BTreeSet::new();
    for list in owner.iter().filter(|l| l.len() > 1) {
        for (a, &i) in list.iter().enumerate() {
            for &j in &list[a + 1..] {
                pairs.insert((i as usize, j as usize));
            }
        }
    }
    pairs.into_iter().collect()
}

/// Longest Whitney chain between the generating cubes of related pieces,
/// over at most `max_pairs` pairs spread evenly through the list. At
/// least one.
pub fn chain_steps(
    dec: &WhitneyDecomposition,
    dom: &DiscreteDomain,
    core: &CorePartition,
    layer: &BoundaryLayer,
    max_pairs: usize,
) -> Result<usize> {
    let pairs = related_pieces(dom, layer);
    let stride = pairs.len().div_ceil(max_pairs.max(1)).max(1);
    let mut s = Search::for_domain(dom);
    let mut best = 1;
    for &(i, j) in pairs.iter().step_by(stride) {
        let r = chain_with(dec, dom, &mut s, core.selected[i], core.selected[j])?;
        best = best.max(r.length);
    }
    Ok(best)
}

/// Cells of `D'_m ∪ E_m ∪ F_m`.
pub fn localization_region(
    dec: &WhitneyDecomposition,
    dom: &DiscreteDomain,
    core: &CorePartition,
    layer: &BoundaryLayer,
    steps: usize,
) -> CellSet {
    let (cubes, _) = d_prime(dec, core, steps);
    let mut cells: Vec<u32> = cubes.iter().flat_map(|&q| dec.cells_of(dom, q)).map(|c| c as u32).collect();
    cells.extend(layer.e_m.as_slice());
    cells.extend(layer.f_m.as_slice());
    CellSet::from_unsorted(cells)
}

/// One row of the convergence table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub m: i32,
    pub h: f64,
    pub err_total: f64,
    pub err_lp: f64,
    pub err_grad: f64,
    pub localized_energy: f64,
    pub lip_um: f64,
    pub runtime_ms: u128,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub function: String,
    pub p: f64,
    pub norm: SobolevNorm,
    pub rows: Vec<ConvergenceRow>,
    /// Per row: `err^p / localized energy`, or `None` when the energy is 0.
    pub localization_constant: Vec<Option<f64>>,
    /// Per row: chain length used for `D'_m`.
    pub chain_steps: Vec<usize>,
    pub sup_u: f64,
    /// Per row: `‖u_m‖_∞`.
    pub sup_um: Vec<f64>,
    pub lipschitz_bound: Vec<f64>,
}

impl ConvergenceReport {
    pub fn strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].err_total < w[0].err_total)
    }

    pub fn final_relative_error(&self) -> Option<f64> {
        let last = self.rows.last()?;
        Some(if self.norm.total > 0.0 { last.err_total / self.norm.total } else { last.err_total })
    }
}

/// Runs the full pipeline for each `m` and measures `‖u - u_m‖`.
pub fn density_experiment(
    dom: &DiscreteDomain,
    u: &GridFunction,
    p: f64,
    ms: &[i32],
    config: &DecompositionConfig,
) -> Result<ConvergenceReport> {
    check_p(p)?;
    config.check()?;
    let top = *ms.iter().max().ok_or_else(|| Error::InvalidParameter("no scales given".into()))?;
    let finest = dyadic_level(dom.spacing())
        .ok_or_else(|| Error::InvalidParameter("spacing must be a power of two".into()))?;
    let dec = whitney_decompose(dom, (top + 1).min(finest - 1))?;
    let q0 = choose_q0(&dec);
    let norm = sobolev_norm(u, dom, p)?;
    let grad_u = gradient_magnitude(dom, u);
    let mut report = ConvergenceReport {
        function: u.name.clone(),
        p,
        norm,
        rows: Vec::new(),
        localization_constant: Vec::new(),
        chain_steps: Vec::new(),
        sup_u: u.sup_norm(dom),
        sup_um: Vec::new(),
        lipschitz_bound: Vec::new(),
    };
    for &m in ms {
        let t = Instant::now();
        let core = refine_core(&dec, dom, m, q0, config)?;
        let layer = boundary_layer(&dec, dom, &core);
        let pou = build_partition(dom, &core, &layer)?;
        let um = approximate(u, &pou, &core, &dec, dom)?;
        let err = sobolev_norm(&u.sub(&um.function), dom, p)?;
        let steps = chain_steps(&dec, dom, &core, &layer, 64)?;
        let region = localization_region(&dec, dom, &core, &layer, steps).to_mask(dom.len());
        let (a, b) = sums(dom, u, &grad_u, p, |c| region[c]);
        let local = a + b;
        report.localization_constant.push((local > 0.0).then(|| err.total.powf(p) / local));
        report.chain_steps.push(steps);
        report.sup_um.push(um.function.sup_norm(dom));
        report.lipschitz_bound.push(um.lipschitz_bound);
        report.rows.push(ConvergenceRow {
            m,
            h: dom.spacing(),
            err_total: err.total,
            err_lp: err.lp,
            err_grad: err.grad,
            localized_energy: local,
            lip_um: um.lipschitz,
            runtime_ms: t.elapsed().as_millis(),
        });
    }
    Ok(report)
}
