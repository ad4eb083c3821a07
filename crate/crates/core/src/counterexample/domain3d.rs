//! The 3-D domain `((-1,2)^2 \ E) × (0, 1/2] ∪ (-1,2)^2 × (1/2, 1)` and the
//! maps on it.

use super::field::{RemovableSet, StepField};
use crate::approximation::GridFunction;
use crate::domain::{pt3, DiscreteDomain, Point};
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Height of the slab.
pub const SLAB_TOP: f64 = 0.5;
const LO: f64 = -1.0;
const HI: f64 = 2.0;

#[derive(Clone, Debug)]
pub struct Domain3d {
    pub domain: DiscreteDomain,
    /// Slab cells removed because their centre lies over `E`.
    pub removed_cells: usize,
    /// Smallest gap between boxes of `E`.
    pub min_separation: f64,
}

/// Rasterises the domain with cell centres. With `strict`, every box of
/// `E` must be at least one cell wide and every gap between boxes at
/// least two cells, so that the grid keeps the boxes apart.
pub fn build_3d_domain(set: &RemovableSet, h: f64, strict: bool) -> Result<Domain3d> {
    let n = (HI - LO) / h;
    let nz = 1.0 / h;
    if !(h > 0.0) || n.fract() != 0.0 || nz.fract() != 0.0 {
        return Err(Error::InvalidParameter(format!("spacing {h} must divide 1")));
    }
    let (n, nz) = (n as usize, nz as usize);
    let sep = set.min_separation();
    if strict {
        let width = set.spec.product(set.spec.depth);
        if sep < 2.0 * h || width < h {
            return Err(Error::ResolutionTooCoarse(format!(
                "boxes of E need h <= min(gap / 2, width) = {}, got h = {h}",
                (0.5 * sep).min(width)
            )));
        }
    }
    let plane = set.cell_mask([LO, LO], h, n, n);
    let removed_plane = plane.iter().filter(|&&b| b).count();
    let mut mask = vec![true; n * n * nz];
    let mut removed = 0;
    for k in 0..nz {
        if (k as f64 + 0.5) * h >= SLAB_TOP {
            break;
        }
        let base = k * n * n;
        for (c, &inside) in plane.iter().enumerate() {
            if inside {
                mask[base + c] = false;
            }
        }
        removed += removed_plane;
    }
    let domain = DiscreteDomain::from_mask(3, [n, n, nz], [LO, LO, 0.0], h, &mask, false)?;
    Ok(Domain3d {
        domain,
        removed_cells: removed,
        min_separation: sep,
    })
}

/// Smooth profile: 1 on `[0, 1/4]`, 0 on `[3/4, 1]`, slope at most 4.
pub fn kappa(z: f64) -> f64 {
    let t = ((0.75 - z) / 0.5).clamp(0.0, 1.0);
    let f = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
    let (a, b) = (f(t), f(1.0 - t));
    a / (a + b)
}

/// `û(x, y, z) = u(x, y) κ(z)` on the cells of the domain, using the
/// continuous extension of `u` across the rasterised boxes.
pub fn lift_function(field: &StepField, dom: &DiscreteDomain) -> Result<GridFunction> {
    GridFunction::from_fn(dom, "u*kappa", |p| field.extended_value(p[0], p[1]) * kappa(p[2]))
}

/// Whether `w` lies in the continuous domain.
pub fn in_domain(set: &RemovableSet, w: &Point) -> bool {
    let inside = |v: f64| v > LO && v < HI;
    inside(w[0]) && inside(w[1]) && w[2] > 0.0 && w[2] < 1.0 && !(w[2] <= SLAB_TOP && set.contains(w[0], w[1]))
}

/// `dist(w, E × (0, 1/2])`.
pub fn slab_distance(set: &RemovableSet, w: &Point) -> f64 {
    let d = set.distance(w[0], w[1]);
    if w[2] <= SLAB_TOP {
        d
    } else {
        d.hypot(w[2] - SLAB_TOP)
    }
}

/// `(x, y, z) -> (x, y, z dist(w, E × (0, 1/2]))`.
pub fn squash_map(set: &RemovableSet, w: &Point) -> Result<Point> {
    if !in_domain(set, w) {
        return Err(Error::PointOutside {
            x: w[0],
            y: w[1],
            z: w[2],
        });
    }
    Ok(pt3(w[0], w[1], w[2] * slab_distance(set, w)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distortion {
    pub pairs: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Distinct sample pairs whose images are within `1e-12`.
    pub collisions: usize,
}

/// Extremes of `|f(a) - f(b)| / |a - b|` over random pairs in the box
/// `[lo, hi]`, which must lie in the domain.
pub fn squash_distortion(set: &RemovableSet, lo: Point, hi: Point, pairs: usize, seed: u64) -> Result<Distortion> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| pt3(rng.gen_range(lo[0]..hi[0]), rng.gen_range(lo[1]..hi[1]), rng.gen_range(lo[2]..hi[2]));
    let len = |a: &Point, b: &Point| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
    let mut out = Distortion {
        pairs,
        min_ratio: f64::INFINITY,
        max_ratio: 0.0,
        collisions: 0,
    };
    for _ in 0..pairs {
        let (a, b) = (draw(&mut rng), draw(&mut rng));
        let (fa, fb) = (squash_map(set, &a)?, squash_map(set, &b)?);
        let d = len(&a, &b);
        if d == 0.0 {
            continue;
        }
        let r = len(&fa, &fb) / d;
        if len(&fa, &fb) < 1e-12 {
            out.collisions += 1;
        }
        out.min_ratio = out.min_ratio.min(r);
        out.max_ratio = out.max_ratio.max(r);
    }
    Ok(out)
}
