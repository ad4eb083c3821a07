//! Quasihyperbolic distance, geodesics and Whitney chains.
//!
//! The quasihyperbolic length of a grid step from `u` to `v` is its
//! Euclidean length times `(1/d(u) + 1/d(v)) / 2`, where `d` is the
//! boundary distance field. Distances and geodesics come from Dijkstra on
//! the cell graph.

mod chain;
mod estimators;

pub use chain::{chain_between, ChainReport};
pub(crate) use chain::chain_with;
pub use estimators::{
    check_ball_separation, check_gehring_hayman, estimate_delta, hyperbolicity, BallSeparation,
    DeltaEstimate, GehringHayman, HyperbolicityReport, PointSampler, SampleConfig,
};

use crate::domain::search::{Metric, Search};
use crate::domain::{euclid, DiscreteDomain, Point};
use crate::error::Result;
use serde::{Deserialize, Serialize};

/// A polyline through cell centres.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QhPath {
    pub cells: Vec<usize>,
    pub vertices: Vec<Point>,
    pub qh_length: f64,
    pub euclidean_length: f64,
}

/// Quasihyperbolic length of the polyline through the given cells, using
/// the trapezoid rule for `1/d` on each segment.
pub fn qh_length(dom: &DiscreteDomain, cells: &[usize]) -> f64 {
    cells
        .windows(2)
        .map(|w| {
            let l = euclid(&dom.center(w[0]), &dom.center(w[1]));
            l * 0.5 * (1.0 / dom.boundary_distance(w[0]) + 1.0 / dom.boundary_distance(w[1]))
        })
        .sum()
}

pub fn euclidean_length(dom: &DiscreteDomain, cells: &[usize]) -> f64 {
    cells
        .windows(2)
        .map(|w| euclid(&dom.center(w[0]), &dom.center(w[1])))
        .sum()
}

pub(crate) fn path_between(
    dom: &DiscreteDomain,
    search: &mut Search,
    metric: Metric,
    a: usize,
    b: usize,
) -> (f64, Vec<usize>) {
    search.run(dom, metric, &[(a, 0.0)], f64::INFINITY, &[b]);
    (search.distance(b).expect("domain is connected"), search.path(b))
}

/// Quasihyperbolic distance between two points of the domain.
pub fn qh_distance(dom: &DiscreteDomain, a: &Point, b: &Point) -> Result<f64> {
    let (ca, cb) = (dom.locate(a)?, dom.locate(b)?);
    let mut s = Search::for_domain(dom);
    Ok(path_between(dom, &mut s, Metric::Quasihyperbolic, ca, cb).0)
}

/// Inner (path) distance between two points of the domain.
pub fn inner_distance(dom: &DiscreteDomain, a: &Point, b: &Point) -> Result<f64> {
    let (ca, cb) = (dom.locate(a)?, dom.locate(b)?);
    let mut s = Search::for_domain(dom);
    Ok(path_between(dom, &mut s, Metric::Inner, ca, cb).0)
}

pub(crate) fn make_path(dom: &DiscreteDomain, cells: Vec<usize>) -> QhPath {
    QhPath {
        vertices: cells.iter().map(|&c| dom.center(c)).collect(),
        qh_length: qh_length(dom, &cells),
        euclidean_length: euclidean_length(dom, &cells),
        cells,
    }
}

/// A quasihyperbolic geodesic of the cell graph.
pub fn qh_geodesic(dom: &DiscreteDomain, a: &Point, b: &Point) -> Result<QhPath> {
    let (ca, cb) = (dom.locate(a)?, dom.locate(b)?);
    let mut s = Search::for_domain(dom);
    let (_, cells) = path_between(dom, &mut s, Metric::Quasihyperbolic, ca, cb);
    Ok(make_path(dom, cells))
}
