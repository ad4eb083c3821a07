//! Lipschitz partition of unity subordinate to `omega_m` and the layer
//! pieces, built from inner-distance cutoffs and normalised by their sum.

use crate::decomposition::{closure, neighborhood, neighborhood_radius, BoundaryLayer, CorePartition};
use crate::domain::search::{Metric, Search};
use crate::domain::{CellSet, DiscreteDomain, Point};
use crate::error::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Field values on a sorted list of cells; zero elsewhere.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseField {
    pub cells: Vec<u32>,
    pub values: Vec<f64>,
}

impl SparseField {
    pub fn get(&self, c: usize) -> f64 {
        match self.cells.binary_search(&(c as u32)) {
            Ok(i) => self.values[i],
            Err(_) => 0.0,
        }
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.cells
            .iter()
            .zip(&self.values)
            .filter(|(_, &v)| v > 0.0)
            .map(|(&c, _)| c as usize)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// One of the partition functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FieldId {
    Psi,
    /// Cutoff about `S_j`.
    Phi(usize),
    /// Cutoff about `T_j`.
    Varphi(usize),
}

#[derive(Clone, Debug)]
pub struct PartitionOfUnity {
    pub m: i32,
    /// Dense in the grid; zero off the domain.
    pub psi: Vec<f64>,
    pub phi: Vec<SparseField>,
    pub varphi: Vec<SparseField>,
    /// Sum of the raw cutoffs before normalisation.
    pub normalizer: Vec<f64>,
    /// Largest discrete slope over all normalised fields.
    pub gradient_bound: f64,
    /// Largest number of fields nonzero at one cell.
    pub max_nonzero: usize,
}

fn cutoff(dom: &DiscreteDomain, s: &mut Search, piece: &CellSet, slope: f64) -> SparseField {
    if piece.is_empty() {
        return SparseField::default();
    }
    let src: Vec<(usize, f64)> = piece.iter().map(|c| (c, 0.0)).collect();
    s.run(dom, Metric::Inner, &src, 1.0 / slope, &[]);
    let mut pairs: Vec<(u32, f64)> = s
        .settled()
        .iter()
        .map(|&c| (c, 1.0 - slope * s.distance(c as usize).unwrap()))
        .filter(|&(_, v)| v > 0.0)
        .collect();
    pairs.sort_unstable_by_key(|p| p.0);
    SparseField {
        cells: pairs.iter().map(|p| p.0).collect(),
        values: pairs.iter().map(|p| p.1).collect(),
    }
}

fn cutoffs(dom: &DiscreteDomain, pieces: &[CellSet], slope: f64) -> Vec<SparseField> {
    pieces
        .par_iter()
        .map_init(|| Search::for_domain(dom), |s, p| cutoff(dom, s, p, slope))
        .collect()
}

pub fn build_partition(dom: &DiscreteDomain, core: &CorePartition, layer: &BoundaryLayer) -> Result<PartitionOfUnity> {
    let m = core.m;
    let n = dom.len();
    let piece_slope = 2f64.powi(m + 6);
    let psi_slope = 2f64.powi(m + 8);

    let layer_set = closure(dom, &layer.e_m.union(&layer.f_m));
    let mut psi = vec![0.0; n];
    let mut s = Search::for_domain(dom);
    let src: Vec<(usize, f64)> = layer_set.iter().map(|c| (c, 0.0)).collect();
    s.run(dom, Metric::Inner, &src, 1.0 / psi_slope, &[]);
    for c in dom.cells() {
        psi[c] = match s.distance(c) {
            Some(d) => (psi_slope * d).min(1.0),
            None => 1.0,
        };
    }

    let mut phi = cutoffs(dom, &layer.s, piece_slope);
    let mut varphi = cutoffs(dom, &layer.t, piece_slope);

    let mut normalizer = psi.clone();
    let mut count: Vec<u16> = psi.iter().map(|&v| u16::from(v > 0.0)).collect();
    for f in phi.iter().chain(&varphi) {
        for (&c, &v) in f.cells.iter().zip(&f.values) {
            normalizer[c as usize] += v;
            count[c as usize] += 1;
        }
    }
    if let Some(c) = dom.cells().find(|&c| normalizer[c] < 1.0 - 1e-12) {
        return Err(Error::DefectiveLayer(format!(
            "cutoff sum {} < 1 at cell {c} ({:?})",
            normalizer[c],
            dom.center(c)
        )));
    }
    for c in dom.cells() {
        psi[c] /= normalizer[c];
    }
    for f in phi.iter_mut().chain(varphi.iter_mut()) {
        for (&c, v) in f.cells.iter().zip(f.values.iter_mut()) {
            *v /= normalizer[c as usize];
        }
    }
    let mut pou = PartitionOfUnity {
        m,
        psi,
        phi,
        varphi,
        normalizer,
        gradient_bound: 0.0,
        max_nonzero: count.iter().copied().max().unwrap_or(0) as usize,
    };
    pou.gradient_bound = pou.fields().map(|(id, _)| pou.slope(dom, id)).fold(0.0, f64::max);
    Ok(pou)
}

impl PartitionOfUnity {
    pub fn value(&self, id: FieldId, c: usize) -> f64 {
        match id {
            FieldId::Psi => self.psi[c],
            FieldId::Phi(j) => self.phi[j].get(c),
            FieldId::Varphi(j) => self.varphi[j].get(c),
        }
    }

    /// All fields with nonempty support.
    pub fn fields(&self) -> impl Iterator<Item = (FieldId, usize)> + '_ {
        let psi = std::iter::once((FieldId::Psi, self.psi.iter().filter(|&&v| v > 0.0).count()));
        let phi = self.phi.iter().enumerate().map(|(j, f)| (FieldId::Phi(j), f.len()));
        let varphi = self.varphi.iter().enumerate().map(|(j, f)| (FieldId::Varphi(j), f.len()));
        psi.chain(phi).chain(varphi).filter(|&(_, n)| n > 0)
    }

    /// Largest `|f(u) - f(v)| / |u - v|` over allowed moves between
    /// occupied cells.
    pub fn slope(&self, dom: &DiscreteDomain, id: FieldId) -> f64 {
        let edge = |u: usize| -> f64 {
            let fu = self.value(id, u);
            dom.neighbors(u)
                .map(|(v, len)| (fu - self.value(id, v)).abs() / len)
                .fold(0.0, f64::max)
        };
        match id {
            FieldId::Psi => dom.cells().map(edge).fold(0.0, f64::max),
            FieldId::Phi(j) | FieldId::Varphi(j) => {
                let f = if let FieldId::Phi(_) = id { &self.phi[j] } else { &self.varphi[j] };
                // every pair with a nonzero end has an end in the stored cells
                f.cells.iter().map(|&c| edge(c as usize)).fold(0.0, f64::max)
            }
        }
    }

    /// Nonzero weights at one cell.
    pub fn weights_at(&self, c: usize) -> Vec<(FieldId, f64)> {
        let mut out = Vec::new();
        if self.psi[c] > 0.0 {
            out.push((FieldId::Psi, self.psi[c]));
        }
        for (j, f) in self.phi.iter().enumerate() {
            let v = f.get(c);
            if v > 0.0 {
                out.push((FieldId::Phi(j), v));
            }
        }
        for (j, f) in self.varphi.iter().enumerate() {
            let v = f.get(c);
            if v > 0.0 {
                out.push((FieldId::Varphi(j), v));
            }
        }
        out
    }

    /// Nonzero weights at the cell containing `x`.
    pub fn evaluate(&self, dom: &DiscreteDomain, x: &Point) -> Result<Vec<(FieldId, f64)>> {
        let c = dom.locate(x)?;
        Ok(self.weights_at(c))
    }

    /// Dense sum of all normalised fields.
    pub fn total(&self) -> Vec<f64> {
        let mut t = self.psi.clone();
        for f in self.phi.iter().chain(&self.varphi) {
            for (&c, &v) in f.cells.iter().zip(&f.values) {
                t[c as usize] += v;
            }
        }
        t
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartitionCheck {
    /// Largest `|sum - 1|` over occupied cells.
    pub identity_error: f64,
    pub range_ok: bool,
    /// Cutoffs whose support leaves `N(piece)`.
    pub support_violations: usize,
    /// Cells outside `omega_m` where `psi > 0`.
    pub psi_outside: usize,
    pub gradient_bound: f64,
    pub gradient_cap: f64,
    pub max_nonzero: usize,
    pub nonzero_cap: usize,
}

impl PartitionCheck {
    pub fn passed(&self) -> bool {
        self.identity_error <= 1e-9
            && self.range_ok
            && self.support_violations == 0
            && self.psi_outside == 0
            && self.gradient_bound <= self.gradient_cap
            && self.max_nonzero <= self.nonzero_cap
    }
}

pub fn check_partition(
    pou: &PartitionOfUnity,
    dom: &DiscreteDomain,
    core: &CorePartition,
    layer: &BoundaryLayer,
) -> PartitionCheck {
    let total = pou.total();
    let identity_error = dom.cells().map(|c| (total[c] - 1.0).abs()).fold(0.0, f64::max);
    let in_unit = |v: f64| (0.0..=1.0).contains(&v);
    let range_ok = dom.cells().all(|c| in_unit(pou.psi[c]))
        && pou.phi.iter().chain(&pou.varphi).all(|f| f.values.iter().all(|&v| in_unit(v)));
    let eps = neighborhood_radius(pou.m);
    let mut s = Search::for_domain(dom);
    let mut support_violations = 0;
    for (f, piece) in pou.phi.iter().zip(&layer.s).chain(pou.varphi.iter().zip(&layer.t)) {
        if f.is_empty() {
            continue;
        }
        let nb = neighborhood(dom, &mut s, piece, eps);
        support_violations += f.support().filter(|&c| !nb.contains(c)).count();
    }
    let psi_outside = dom.cells().filter(|&c| pou.psi[c] > 0.0 && !core.omega_cells[c]).count();
    PartitionCheck {
        identity_error,
        range_ok,
        support_violations,
        psi_outside,
        gradient_bound: pou.gradient_bound,
        gradient_cap: 2f64.powi(pou.m + 9),
        max_nonzero: pou.max_nonzero,
        nonzero_cap: 1 + 2 * core.config.overlap_cap,
    }
}
