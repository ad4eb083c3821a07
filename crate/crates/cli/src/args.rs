//! Value parsers for the command line.

use qhgeo::approximation::TestFunction;
use serde::{Deserialize, Serialize};

/// Accepts `1/256` as well as plain decimals.
pub fn parse_number(s: &str) -> Result<f64, String> {
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|e| format!("{s}: {e}"))?;
            let b: f64 = b.trim().parse().map_err(|e| format!("{s}: {e}"))?;
            if b == 0.0 {
                return Err(format!("{s}: zero denominator"));
            }
            a / b
        }
        None => s.trim().parse().map_err(|e| format!("{s}: {e}"))?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{s} is not finite"))
    }
}

/// Inclusive scale range, written `4..8` or a single `6`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MRange {
    pub start: i32,
    pub end: i32,
}

impl MRange {
    pub fn values(&self) -> Vec<i32> {
        (self.start..=self.end).collect()
    }
}

pub fn parse_m_range(s: &str) -> Result<MRange, String> {
    let (a, b) = s.split_once("..").unwrap_or((s, s));
    let b = b.strip_prefix('=').unwrap_or(b);
    let start: i32 = a.trim().parse().map_err(|e| format!("{s}: {e}"))?;
    let end: i32 = b.trim().parse().map_err(|e| format!("{s}: {e}"))?;
    if start > end {
        return Err(format!("{s}: empty range"));
    }
    Ok(MRange { start, end })
}

/// `x,y` or `x,y,z`.
pub fn parse_point(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if !(2..=3).contains(&parts.len()) {
        return Err(format!("{s}: expected x,y or x,y,z"));
    }
    let mut p = [0.0; 3];
    for (k, v) in parts.iter().enumerate() {
        p[k] = parse_number(v)?;
    }
    Ok(p)
}

/// Test function syntax: `constant:V`, `coordinate:AXIS`, `power:ALPHA`,
/// `power:ALPHA@x,y` and `loglog:R@x,y`. The default centre (1, 0) is
/// the rightmost boundary point of the unit disk.
pub fn parse_function(s: &str) -> Result<TestFunction, String> {
    let (kind, rest) = s.split_once(':').ok_or_else(|| format!("{s}: expected KIND:VALUE"))?;
    let (value, center) = match rest.split_once('@') {
        Some((v, c)) => (v, parse_point(c)?),
        None => (rest, [1.0, 0.0, 0.0]),
    };
    let value = parse_number(value)?;
    match kind {
        "constant" => Ok(TestFunction::Constant { value }),
        "coordinate" => {
            if value.fract() != 0.0 || !(0.0..3.0).contains(&value) {
                return Err(format!("{s}: axis must be 0, 1 or 2"));
            }
            Ok(TestFunction::Coordinate { axis: value as usize })
        }
        "power" => Ok(TestFunction::Power { center, alpha: value }),
        "loglog" => Ok(TestFunction::LogLog { center, radius: value }),
        _ => Err(format!("{s}: unknown function kind {kind}")),
    }
}
