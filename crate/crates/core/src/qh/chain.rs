//! Whitney chains along quasihyperbolic geodesics.

use super::path_between;
use crate::domain::search::{Metric, Search};
use crate::domain::DiscreteDomain;
use crate::error::{Error, Result};
use crate::whitney::WhitneyDecomposition;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    /// Cube indices in the order the geodesic meets them.
    pub cubes: Vec<usize>,
    pub length: usize,
    /// Extreme side ratios relative to the first cube.
    pub min_side_ratio: f64,
    pub max_side_ratio: f64,
}

/// Whitney cubes met by the geodesic joining the centres of two cubes.
pub fn chain_between(
    dec: &WhitneyDecomposition,
    dom: &DiscreteDomain,
    q1: usize,
    q2: usize,
) -> Result<ChainReport> {
    if q1 >= dec.len() || q2 >= dec.len() {
        return Err(Error::InvalidParameter("cube index out of range".into()));
    }
    let mut s = Search::for_domain(dom);
    chain_with(dec, dom, &mut s, q1, q2)
}

pub(crate) fn chain_with(
    dec: &WhitneyDecomposition,
    dom: &DiscreteDomain,
    s: &mut Search,
    q1: usize,
    q2: usize,
) -> Result<ChainReport> {
    let a = dec.central_cells(dom, q1)[0];
    let b = dec.central_cells(dom, q2)[0];
    let (_, cells) = path_between(dom, s, Metric::Quasihyperbolic, a, b);
    let mut cubes: Vec<usize> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for c in cells {
        if let Some(q) = dec.owner(c) {
            if seen.insert(q) {
                cubes.push(q);
            }
        }
    }
    let base = dec.side(q1);
    let ratios = cubes.iter().map(|&q| dec.side(q) / base);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for r in ratios {
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok(ChainReport {
        length: cubes.len(),
        cubes,
        min_side_ratio: lo,
        max_side_ratio: hi,
    })
}
