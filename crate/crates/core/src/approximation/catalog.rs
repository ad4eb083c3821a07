//! Test functions with known Sobolev regularity.

use crate::domain::Point;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TestFunction {
    Constant { value: f64 },
    /// `x_axis`.
    Coordinate { axis: usize },
    /// `|x - center|^alpha`.
    Power { center: [f64; 3], alpha: f64 },
    /// `ln ln (e radius / |x - center|)`, unbounded at the centre.
    LogLog { center: [f64; 3], radius: f64 },
}

/// Exponents `p` for which a catalog function lies in `W^{1,p}` of a
/// bounded domain in dimension `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PRange {
    pub max: f64,
    pub max_included: bool,
}

impl PRange {
    pub fn contains(&self, p: f64) -> bool {
        p >= 1.0 && (p < self.max || (self.max_included && p == self.max))
    }
}

impl TestFunction {
    pub fn eval(&self, x: &Point) -> f64 {
        match self {
            TestFunction::Constant { value } => *value,
            TestFunction::Coordinate { axis } => x[*axis],
            TestFunction::Power { center, alpha } => dist(x, center).powf(*alpha),
            TestFunction::LogLog { center, radius } => {
                (1.0 + (radius / dist(x, center)).ln()).ln()
            }
        }
    }

    pub fn p_range(&self, n: usize) -> PRange {
        let n = n as f64;
        match self {
            TestFunction::Constant { .. } | TestFunction::Coordinate { .. } => PRange {
                max: f64::INFINITY,
                max_included: false,
            },
            TestFunction::Power { alpha, .. } if *alpha >= 1.0 => PRange {
                max: f64::INFINITY,
                max_included: false,
            },
            // (alpha - 1) p > -n
            TestFunction::Power { alpha, .. } => PRange {
                max: n / (1.0 - alpha),
                max_included: false,
            },
            TestFunction::LogLog { .. } => PRange {
                max: n,
                max_included: true,
            },
        }
    }

    pub fn name(&self) -> String {
        match self {
            TestFunction::Constant { value } => format!("constant({value})"),
            TestFunction::Coordinate { axis } => format!("x{axis}"),
            TestFunction::Power { center, alpha } => {
                format!("|x-({},{},{})|^{alpha}", center[0], center[1], center[2])
            }
            TestFunction::LogLog { center, radius } => {
                format!("loglog(e*{radius}/|x-({},{},{})|)", center[0], center[1], center[2])
            }
        }
    }
}

fn dist(a: &Point, b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        let f = TestFunction::Power { center: [0.0; 3], alpha: 0.1 };
        let r = f.p_range(2);
        assert!((r.max - 2.0 / 0.9).abs() < 1e-12);
        assert!(r.contains(2.0) && !r.contains(2.3));
        let g = TestFunction::LogLog { center: [0.0; 3], radius: 2.0 };
        assert!(g.p_range(2).contains(2.0) && !g.p_range(2).contains(2.01));
        assert!(TestFunction::Constant { value: 1.0 }.p_range(3).contains(1e6));
    }

    #[test]
    fn values() {
        let x = [3.0, 4.0, 0.0];
        assert_eq!(TestFunction::Power { center: [0.0; 3], alpha: 0.5 }.eval(&x), 5f64.sqrt());
        assert_eq!(TestFunction::Coordinate { axis: 1 }.eval(&x), 4.0);
        let g = TestFunction::LogLog { center: [0.0; 3], radius: 5.0 };
        assert!(g.eval(&x).abs() < 1e-15);
    }
}
