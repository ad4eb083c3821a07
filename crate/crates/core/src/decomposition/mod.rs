//! Core part, boundary cubes and boundary-layer pieces at scale `2^-m`.
//!
//! `core_component` takes the component of large Whitney cubes containing a
//! largest cube `Q0`. `refine_core` sweeps the boundary cubes in order and
//! cuts away regions whose connection to `Q0` is blocked by the inner ball
//! `U_j` around a boundary cube. `boundary_layer` splits the rest of the
//! domain into pieces `S_j` near the selected boundary cubes and pieces
//! `T_j` inside blocked regions.
//!
//! All balls are inner-metric balls `(c)_Q = { y : dist(y, x_Q) <= c diam(Q) }`
//! about cube centres, with `c = factor * sqrt(n) * c1`.

mod layer;
mod sweep;
mod validate;


pub use validate::{d_prime, exhaustion_offset, neighborhood, neighborhood_radius, overlap_counts, validate_partitioning, ExhaustionReport, OverlapCounts, PartitionReport};
pub use layer::{boundary_layer, closure, BoundaryLayer};
pub use sweep::{core_component, choose_q0, refine_core, CoreComponent, CorePartition};


use crate::domain::search::{Metric, Search};
use crate::domain::DiscreteDomain;
use crate::error::{Error, Result};
use crate::whitney::WhitneyDecomposition;
use serde::{Deserialize, Serialize};

/// Ball multipliers, in units of `sqrt(n) * c1 * diam(Q)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallFactors {
    /// Blocking ball `U_j`.
    pub blocking: f64,
    /// Ball protected from removal during the sweep.
    pub keep: f64,
    /// Ball that must contain boundary cubes meeting a block.
    pub cover: f64,
    /// Balls whose union, minus the core, is the layer `E_m`.
    pub layer: f64,
    /// Balls `V_j` used to split `E_m`.
    pub piece: f64,
}

impl Default for BallFactors {
    fn default() -> Self {
        BallFactors {
            blocking: 5.0,
            keep: 25.0,
            cover: 60.0,
            layer: 70.0,
            piece: 71.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionConfig {
    /// Ball separation constant.
    pub c1: f64,
    pub factors: BallFactors,
    /// Largest overlap count accepted by the validator.
    pub overlap_cap: usize,
    /// Largest accepted `side(Q) * 2^m` for boundary cubes.
    pub boundary_size_cap: f64,
}

impl DecompositionConfig {
    pub fn new(c1: f64) -> Self {
        DecompositionConfig {
            c1,
            factors: BallFactors::default(),
            overlap_cap: 64,
            boundary_size_cap: 16.0,
        }
    }

    pub(crate) fn check(&self) -> Result<()> {
        if !(self.c1 > 0.0 && self.c1.is_finite()) {
            return Err(Error::InvalidParameter(format!("c1 = {} must be positive", self.c1)));
        }
        Ok(())
    }

    /// Radius of the ball with the given factor about cube `i`.
    pub fn radius(&self, dec: &WhitneyDecomposition, i: usize, factor: f64) -> f64 {
        factor * (dec.dim() as f64).sqrt() * self.c1 * dec.diam(i)
    }
}

/// Inner ball about the centre of cube `i`: the centre is a cell corner, so
/// the search starts from the `2^n` central cells at half a cell diagonal.
pub(crate) fn run_cube_ball(
    dom: &DiscreteDomain,
    dec: &WhitneyDecomposition,
    s: &mut Search,
    i: usize,
    radius: f64,
) {
    let r0 = 0.5 * dom.spacing() * (dom.dim() as f64).sqrt();
    let src: Vec<(usize, f64)> = dec.central_cells(dom, i).into_iter().map(|c| (c, r0)).collect();
    s.run(dom, Metric::Inner, &src, radius, &[]);
}

/// Generation-stamped membership marks.
#[derive(Clone, Debug)]
pub(crate) struct Marks {
    stamp: Vec<u32>,
    epoch: u32,
}

impl Marks {
    pub(crate) fn new(len: usize) -> Self {
        Marks {
            stamp: vec![0; len],
            epoch: 1,
        }
    }

    pub(crate) fn clear(&mut self) {
        if self.epoch == u32::MAX {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 0;
        }
        self.epoch += 1;
    }

    #[inline]
    pub(crate) fn set(&mut self, c: usize) {
        self.stamp[c] = self.epoch;
    }

    #[inline]
    pub(crate) fn get(&self, c: usize) -> bool {
        self.stamp[c] == self.epoch
    }
}
