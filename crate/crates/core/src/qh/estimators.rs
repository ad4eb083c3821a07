//! Sampling estimators for Gromov hyperbolicity, ball separation and the
//! Gehring-Hayman constant.
//!
//! Every estimator is a maximum over sampled configurations, so for a fixed
//! seed it can only grow with the sample count. Samples are drawn before
//! any parallel work, which keeps results independent of thread count.

use super::{make_path, path_between};
use crate::domain::search::{bottleneck, Metric, Search};
use crate::domain::{DiscreteDomain, Point};
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub samples: usize,
    pub seed: u64,
    /// Points closer than this to the boundary are rejected. The effective
    /// threshold is never below four cells.
    pub min_boundary_distance: f64,
    /// Interior geodesic points tested per pair by the ball separation check.
    pub points_per_geodesic: usize,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            samples: 32,
            seed: 1,
            min_boundary_distance: 0.0,
            points_per_geodesic: 5,
        }
    }
}

/// Uniform rejection sampler over the occupied cells far enough from the
/// boundary. Continuous coordinates are drawn first, so the same seed
/// yields nearby points on grids of different spacing.
pub struct PointSampler<'a> {
    dom: &'a DiscreteDomain,
    rng: ChaCha8Rng,
    lo: [f64; 3],
    hi: [f64; 3],
    threshold: f64,
}

impl<'a> PointSampler<'a> {
    pub fn new(dom: &'a DiscreteDomain, seed: u64, stream: u64, min_boundary_distance: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        let h = dom.spacing();
        for c in dom.cells() {
            let p = dom.center(c);
            for a in 0..dom.dim() {
                lo[a] = lo[a].min(p[a] - h / 2.0);
                hi[a] = hi[a].max(p[a] + h / 2.0);
            }
        }
        PointSampler {
            dom,
            rng,
            lo,
            hi,
            threshold: min_boundary_distance.max(4.0 * h),
        }
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Next accepted point and its cell.
    pub fn sample(&mut self) -> Result<(Point, usize)> {
        for _ in 0..10_000_000 {
            let mut p = [0.0; 3];
            for a in 0..self.dom.dim() {
                p[a] = self.rng.gen_range(self.lo[a]..self.hi[a]);
            }
            let c = self.dom.grid().cell_of(&p);
            if let Some(i) = self.dom.grid().index(c) {
                if self.dom.is_occupied(i) && self.dom.boundary_distance(i) >= self.threshold {
                    return Ok((p, i));
                }
            }
        }
        Err(Error::InvalidParameter(format!(
            "no cell has boundary distance >= {}",
            self.threshold
        )))
    }

    fn cells(&mut self, k: usize) -> Result<Vec<usize>> {
        (0..k).map(|_| self.sample().map(|s| s.1)).collect()
    }
}

const STREAM_DELTA: u64 = 0;
const STREAM_BALL: u64 = 1;
const STREAM_GH: u64 = 2;

fn threads_scratch(dom: &DiscreteDomain) -> impl Fn() -> Search + Sync + '_ {
    move || Search::for_domain(dom)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaEstimate {
    pub delta: f64,
    pub per_sample: Vec<f64>,
}

/// Thinness of sampled geodesic triangles: for each triple the largest
/// distance from a point of one side to the union of the other two.
pub fn estimate_delta(dom: &DiscreteDomain, cfg: &SampleConfig) -> Result<DeltaEstimate> {
    let mut sampler = PointSampler::new(dom, cfg.seed, STREAM_DELTA, cfg.min_boundary_distance);
    let triples: Vec<Vec<usize>> = (0..cfg.samples).map(|_| sampler.cells(3)).collect::<Result<_>>()?;
    let per_sample: Vec<f64> = triples
        .par_iter()
        .map_init(threads_scratch(dom), |s, t| triangle_thinness(dom, s, t[0], t[1], t[2]))
        .collect();
    let delta = per_sample.iter().copied().fold(0.0, f64::max);
    Ok(DeltaEstimate { delta, per_sample })
}

fn triangle_thinness(dom: &DiscreteDomain, s: &mut Search, x: usize, y: usize, z: usize) -> f64 {
    s.run(dom, Metric::Quasihyperbolic, &[(x, 0.0)], f64::INFINITY, &[y, z]);
    let gxy = s.path(y);
    let gxz = s.path(z);
    let (_, gyz) = path_between(dom, s, Metric::Quasihyperbolic, y, z);
    let mut src: Vec<(usize, f64)> = gyz.iter().chain(gxz.iter()).map(|&c| (c, 0.0)).collect();
    src.sort_unstable_by_key(|p| p.0);
    src.dedup_by_key(|p| p.0);
    s.run(dom, Metric::Quasihyperbolic, &src, f64::INFINITY, &gxy);
    gxy.iter().map(|&c| s.distance(c).unwrap_or(0.0)).fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallSeparation {
    /// Largest ratio `r / d(z)` needed to separate the ends of a geodesic.
    pub c1: f64,
    pub per_sample: Vec<f64>,
}

/// For sampled pairs and points `z` on their geodesic, the smallest `c` such
/// that the closed inner ball of radius `c d(z)` about `z` separates the
/// pair. Computed exactly as a widest-path (maximin) problem over the inner
/// distance to `z`.
pub fn check_ball_separation(dom: &DiscreteDomain, cfg: &SampleConfig) -> Result<BallSeparation> {
    let mut sampler = PointSampler::new(dom, cfg.seed, STREAM_BALL, cfg.min_boundary_distance);
    let pairs: Vec<Vec<usize>> = (0..cfg.samples).map(|_| sampler.cells(2)).collect::<Result<_>>()?;
    let k = cfg.points_per_geodesic.max(1);
    let per_sample: Vec<f64> = pairs
        .par_iter()
        .map_init(threads_scratch(dom), |s, p| pair_separation(dom, s, p[0], p[1], k))
        .collect();
    Ok(BallSeparation {
        c1: per_sample.iter().copied().fold(0.0, f64::max),
        per_sample,
    })
}

/// Separation ratio for one pair; zero when the geodesic has no interior point.
pub(crate) fn pair_separation(dom: &DiscreteDomain, s: &mut Search, x: usize, y: usize, k: usize) -> f64 {
    let (_, g) = path_between(dom, s, Metric::Quasihyperbolic, x, y);
    if g.len() < 3 {
        return 0.0;
    }
    let mut best: f64 = 0.0;
    let mut zs: Vec<usize> = (1..=k)
        .map(|i| g[(i * (g.len() - 1) / (k + 1)).clamp(1, g.len() - 2)])
        .collect();
    zs.dedup();
    for z in zs {
        best = best.max(separation_radius(dom, s, x, y, z) / dom.boundary_distance(z));
    }
    best
}

/// Smallest radius of a closed inner ball about `z` that separates `x` from `y`.
pub fn separation_radius(dom: &DiscreteDomain, s: &mut Search, x: usize, y: usize, z: usize) -> f64 {
    s.run(dom, Metric::Inner, &[(z, 0.0)], f64::INFINITY, &[x, y]);
    let cap = s.distance(x).unwrap().min(s.distance(y).unwrap());
    bottleneck(dom, |c| s.distance(c).map_or(cap, |d| d.min(cap)), x, y)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GehringHayman {
    /// Largest ratio of Euclidean geodesic length to inner distance.
    pub c2: f64,
    pub per_sample: Vec<f64>,
}

pub fn check_gehring_hayman(dom: &DiscreteDomain, cfg: &SampleConfig) -> Result<GehringHayman> {
    let mut sampler = PointSampler::new(dom, cfg.seed, STREAM_GH, cfg.min_boundary_distance);
    let pairs: Vec<Vec<usize>> = (0..cfg.samples).map(|_| sampler.cells(2)).collect::<Result<_>>()?;
    let per_sample: Vec<f64> = pairs
        .par_iter()
        .map_init(threads_scratch(dom), |s, p| {
            let (x, y) = (p[0], p[1]);
            if x == y {
                return 1.0;
            }
            let (_, g) = path_between(dom, s, Metric::Quasihyperbolic, x, y);
            let len = make_path(dom, g).euclidean_length;
            let (inner, _) = path_between(dom, s, Metric::Inner, x, y);
            len / inner
        })
        .collect();
    Ok(GehringHayman {
        c2: per_sample.iter().copied().fold(0.0, f64::max),
        per_sample,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicityReport {
    pub delta: f64,
    pub c1: f64,
    pub c2: f64,
    pub samples: usize,
    pub seed: u64,
    pub h: f64,
    pub min_boundary_distance: f64,
}

/// Runs all three estimators with one configuration.
pub fn hyperbolicity(dom: &DiscreteDomain, cfg: &SampleConfig) -> Result<HyperbolicityReport> {
    let delta = estimate_delta(dom, cfg)?.delta;
    let c1 = check_ball_separation(dom, cfg)?.c1;
    let c2 = check_gehring_hayman(dom, cfg)?.c2;
    Ok(HyperbolicityReport {
        delta,
        c1,
        c2,
        samples: cfg.samples,
        seed: cfg.seed,
        h: dom.spacing(),
        min_boundary_distance: cfg.min_boundary_distance.max(4.0 * dom.spacing()),
    })
}
