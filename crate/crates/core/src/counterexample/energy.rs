//! Energy sums and the curve condition for removability.

use super::cantor::{closed_form_product, thin_levels, CantorSpec, IntervalSet};
use super::field::RemovableSet;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

fn check_q(q: f64, min: f64) -> Result<()> {
    if q.is_finite() && q >= min {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("exponent q = {q} must be finite and >= {min}")))
    }
}

/// Energy of the model function `2^{-i-1} x / y` on the strip components
/// of level `i`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripEnergy {
    pub i: usize,
    pub q: f64,
    /// `2^i` times the integral over one component.
    pub integral: f64,
    /// `2^{i(1-q)} P_i^{2-q}`.
    pub bound: f64,
    pub ratio: f64,
    /// Relative change when the quadrature step is halved.
    pub quadrature_change: f64,
    /// `max |∇ũ|` on the component, at the tip `(0, y_min)`.
    pub max_gradient: f64,
}

/// Midpoint rule over `{|x| < y, y0 < y < y1}` in the coordinates
/// `(y, s = x / y)`, `n × n` nodes.
fn strip_quadrature(i: usize, q: f64, y0: f64, y1: f64, n: usize) -> f64 {
    let c = 0.5f64.powi(i as i32 + 1);
    let (dy, ds) = ((y1 - y0) / n as f64, 2.0 / n as f64);
    let mut sum = 0.0;
    for a in 0..n {
        let y = y0 + (a as f64 + 0.5) * dy;
        let mut inner = 0.0;
        for b in 0..n {
            let s = -1.0 + (b as f64 + 0.5) * ds;
            let grad = c / y * (1.0 + s * s).sqrt();
            inner += grad.powf(q);
        }
        // dx = y ds
        sum += inner * ds * y * dy;
    }
    sum
}

pub fn strip_energy(spec: &CantorSpec, q: f64, i: usize) -> Result<StripEnergy> {
    check_q(q, 1.0)?;
    if i == 0 || i > spec.depth {
        return Err(Error::InvalidParameter(format!("level {i} outside 1..={}", spec.depth)));
    }
    let y0 = 0.5 * spec.gaps[i];
    let y1 = 0.5 * spec.gaps[i - 1];
    let coarse = strip_quadrature(i, q, y0, y1, 200);
    let fine = strip_quadrature(i, q, y0, y1, 400);
    let copies = 2f64.powi(i as i32);
    let integral = copies * fine;
    let bound = 2f64.powf(i as f64 * (1.0 - q)) * spec.product(i).powf(2.0 - q);
    Ok(StripEnergy {
        i,
        q,
        integral,
        bound,
        ratio: integral / bound,
        quadrature_change: ((fine - coarse) / fine).abs(),
        max_gradient: 0.5f64.powi(i as i32 + 1) / y0 * 2f64.sqrt(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyTerm {
    pub i: usize,
    pub term: f64,
    pub partial_sum: f64,
    /// `term` over the same expression with the closed-form `P_i`.
    pub closed_form_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergySeries {
    pub p: f64,
    pub q: f64,
    pub terms: Vec<EnergyTerm>,
    /// Limit of `term_{i+1} / term_i`.
    pub predicted_ratio: f64,
    /// Estimate of the remainder after the last term; infinite when the
    /// terms do not decay.
    pub tail_estimate: f64,
}

impl EnergySeries {
    pub fn partial_sum(&self, n: usize) -> f64 {
        self.terms[n - 1].partial_sum
    }
}

/// `Σ_{i=1}^N i 2^{i(1-q)} P_i^{2-q}`.
pub fn gradient_energy(spec: &CantorSpec, q: f64, n: usize) -> Result<EnergySeries> {
    check_q(q, 1.0)?;
    if n == 0 || n > spec.depth {
        return Err(Error::InvalidParameter(format!("N = {n} outside 1..={}", spec.depth)));
    }
    let p = spec.p;
    let ln2 = std::f64::consts::LN_2;
    let value = |i: usize, prod: f64| {
        let x = i as f64;
        (x.ln() + x * (1.0 - q) * ln2 + (2.0 - q) * prod.ln()).exp()
    };
    let mut acc = 0.0;
    let terms: Vec<EnergyTerm> = (1..=n)
        .map(|i| {
            let term = value(i, spec.product(i));
            acc += term;
            EnergyTerm {
                i,
                term,
                partial_sum: acc,
                closed_form_ratio: term / value(i, closed_form_product(p, i)),
            }
        })
        .collect();
    let predicted_ratio = 2f64.powf((1.0 - q) - (p - 1.0) * (2.0 - q) / (p - 2.0));
    let last = terms[n - 1].term;
    let tail_estimate = if (q - p).abs() < 1e-15 {
        // terms are 1/i^2 from i0 on
        1.0 / n as f64
    } else if predicted_ratio < 1.0 {
        last * predicted_ratio / (1.0 - predicted_ratio)
    } else {
        f64::INFINITY
    };
    Ok(EnergySeries {
        p,
        q,
        terms,
        predicted_ratio,
        tail_estimate,
    })
}

/// `(p - 1)/(p - 2) · (q - 2)/(q - 1)`.
pub fn removability_exponent(p: f64, q: f64) -> f64 {
    (p - 1.0) / (p - 2.0) * (q - 2.0) / (q - 1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionSeries {
    pub p: f64,
    pub q: f64,
    pub exponent: f64,
    /// `exponent > 1`.
    pub criterion: bool,
    pub partial_sums: Vec<f64>,
    /// Increments `S_{2N} - S_N` at `N = len/8, len/4, len/2`.
    pub increments: [f64; 3],
    /// The increments shrink and the last one is below `1e-10 S`.
    pub cauchy: bool,
}

/// Partial sums of `Σ i^{(3/(p-2)) (q-2)/(q-1)} 2^{i(1 - e)}`.
pub fn criterion_series(p: f64, q: f64, n: usize) -> Result<CriterionSeries> {
    if !(p > 2.0) || !(q > 2.0) {
        return Err(Error::InvalidParameter(format!("need p, q > 2, got p = {p}, q = {q}")));
    }
    if n < 16 {
        return Err(Error::InvalidParameter("need at least 16 terms".into()));
    }
    let e = removability_exponent(p, q);
    let power = 3.0 / (p - 2.0) * (q - 2.0) / (q - 1.0);
    let terms: Vec<f64> = (1..=n)
        .map(|i| {
            let x = i as f64;
            (power * x.ln() + x * (1.0 - e) * std::f64::consts::LN_2).exp()
        })
        .collect();
    let mut acc = 0.0;
    let partial_sums: Vec<f64> = terms
        .iter()
        .map(|t| {
            acc += t;
            acc
        })
        .collect();
    // summed directly so that tiny increments do not cancel to zero
    let inc = |k: usize| terms[k..2 * k].iter().sum::<f64>();
    let increments = [inc(n / 8), inc(n / 4), inc(n / 2)];
    let total = partial_sums[n - 1];
    let cauchy = increments.iter().all(|d| d.is_finite())
        && increments[2] < increments[1]
        && increments[1] < increments[0]
        && increments[2] < 1e-10 * total;
    Ok(CriterionSeries {
        p,
        q,
        exponent: e,
        criterion: e > 1.0,
        partial_sums,
        increments,
        cauchy,
    })
}

/// `∫_0^T (t^2 + δ^2)^{-a/2} dt` by Simpson's rule after `t = T s^k`,
/// `k = 1 / (1 - a)`, which makes the `δ = 0` integrand constant.
fn power_integral(t_max: f64, delta: f64, a: f64, panels: usize) -> f64 {
    if t_max <= 0.0 {
        return 0.0;
    }
    let k = 1.0 / (1.0 - a);
    let f = |s: f64| {
        if s == 0.0 {
            return if delta == 0.0 { t_max.powf(1.0 - a) * k } else { 0.0 };
        }
        let t = t_max * s.powf(k);
        (t * t + delta * delta).powf(-0.5 * a) * t_max * k * s.powf(k - 1.0)
    };
    let n = panels * 2;
    let h = 1.0 / n as f64;
    let mut sum = f(0.0) + f(1.0);
    for j in 1..n {
        sum += f(j as f64 * h) * if j % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

/// `∫_lo^hi (dist(t, S)^2 + δ^2)^{-a/2} dt` for a sorted interval set.
/// The distance is zero on the intervals and linear between an
/// endpoint and the next gap midpoint.
fn segment_integral(set: &IntervalSet, lo: f64, hi: f64, delta: f64, a: f64, panels: usize) -> f64 {
    let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    if hi == lo {
        return 0.0;
    }
    let mut cuts = vec![lo, hi];
    for iv in &set.intervals {
        cuts.extend(iv.iter().copied().filter(|&e| e > lo && e < hi));
    }
    for g in set.gaps() {
        let mid = 0.5 * (g[0] + g[1]);
        if mid > lo && mid < hi {
            cuts.push(mid);
        }
    }
    cuts.sort_by(f64::total_cmp);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (u, v) = (w[0], w[1]);
        if v <= u {
            continue;
        }
        let (du, dv) = (set.distance(u), set.distance(v));
        if set.contains(0.5 * (u + v)) {
            total += (v - u) * if delta > 0.0 { delta.powf(-a) } else { f64::INFINITY };
            continue;
        }
        // distance is monotone and linear on the piece
        let (t1, t2) = if du <= dv { (du, dv) } else { (dv, du) };
        total += power_integral(t2, delta, a, panels) - power_integral(t1, delta, a, panels);
    }
    total
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveEstimate {
    pub q: f64,
    pub z1: [f64; 2],
    pub z2: [f64; 2],
    /// Level with `P_{n+1} <= |z1 - z2| <= P_n`, capped at `depth - 1`.
    pub n: usize,
    pub x0: f64,
    pub horizontal: [f64; 2],
    pub vertical: f64,
    pub integral: f64,
    /// `|z1 - z2|^{(q-2)/(q-1)}`.
    pub scale: f64,
    /// `integral / scale`; zero when the points coincide.
    pub ratio: f64,
    /// Relative change when the Simpson step is halved.
    pub quadrature_change: f64,
}

fn curve_parts(set: &RemovableSet, a: f64, z1: [f64; 2], z2: [f64; 2], x0: f64, panels: usize) -> ([f64; 2], f64) {
    let dx0 = set.thin.distance(x0);
    let h1 = segment_integral(&set.thin, z1[0], x0, set.fat.distance(z1[1]), a, panels);
    let v = segment_integral(&set.fat, z1[1], z2[1], dx0, a, panels);
    let h2 = segment_integral(&set.thin, x0, z2[0], set.fat.distance(z2[1]), a, panels);
    ([h1, h2], v)
}

/// Integral of `dist(z, E)^{1/(1-q)}` along the three-segment curve
/// `z1 -> (x0, y1) -> (x0, y2) -> z2`, where `x0` is the midpoint of a
/// level-`n` interval of `C` near both points.
pub fn curve_condition(set: &RemovableSet, q: f64, z1: [f64; 2], z2: [f64; 2]) -> Result<CurveEstimate> {
    if !(q > 2.0 && q.is_finite()) {
        return Err(Error::InvalidParameter(format!("q = {q} must exceed 2")));
    }
    if set.contains(z1[0], z1[1]) || set.contains(z2[0], z2[1]) {
        return Err(Error::PointInRemovableSet);
    }
    let d = (z1[0] - z2[0]).hypot(z1[1] - z2[1]);
    let spec = &set.spec;
    if d == 0.0 {
        return Ok(CurveEstimate {
            q,
            z1,
            z2,
            n: 0,
            x0: z1[0],
            horizontal: [0.0; 2],
            vertical: 0.0,
            integral: 0.0,
            scale: 0.0,
            ratio: 0.0,
            quadrature_change: 0.0,
        });
    }
    let top = spec.depth.saturating_sub(1);
    let n = (0..=top).rev().find(|&k| spec.product(k) >= d).unwrap_or(0);
    let dist_iv = |iv: &[f64; 2], x: f64| (iv[0] - x).max(x - iv[1]).max(0.0);
    let level = &thin_levels(spec)[n];
    let best = level
        .iter()
        .min_by(|a, b| {
            let fa = dist_iv(a, z1[0]).max(dist_iv(a, z2[0]));
            let fb = dist_iv(b, z1[0]).max(dist_iv(b, z2[0]));
            fa.total_cmp(&fb)
        })
        .copied()
        .unwrap_or([0.0, 1.0]);
    let x0 = 0.5 * (best[0] + best[1]);
    let a = 1.0 / (q - 1.0);
    let (hc, vc) = curve_parts(set, a, z1, z2, x0, 16);
    let (horizontal, vertical) = curve_parts(set, a, z1, z2, x0, 32);
    let integral = horizontal[0] + horizontal[1] + vertical;
    let coarse = hc[0] + hc[1] + vc;
    let scale = d.powf((q - 2.0) / (q - 1.0));
    Ok(CurveEstimate {
        q,
        z1,
        z2,
        n,
        x0,
        horizontal,
        vertical,
        integral,
        scale,
        ratio: integral / scale,
        quadrature_change: ((integral - coarse) / integral).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counterexample::build_removable_set;

    #[test]
    fn strip_energy_tracks_closed_form() {
        let spec = CantorSpec::new(3.0, 14).unwrap();
        let rs: Vec<f64> = (2..=12).map(|i| strip_energy(&spec, 3.0, i).unwrap().ratio).collect();
        let (lo, hi) = rs.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &r| (l.min(r), h.max(r)));
        assert!(lo > 0.0 && hi / lo < 10.0, "{rs:?}");
        for i in 2..=12 {
            let s = strip_energy(&spec, 3.0, i).unwrap();
            assert!(s.quadrature_change < 0.01);
            let tip = 0.5f64.powi(i as i32 + 1) / (0.5 * spec.gaps[i]);
            assert!(tip <= 2.0 * 0.5f64.powi(i as i32) / spec.product(i) * 2.0);
        }
        assert!(strip_energy(&spec, 0.0, 3).is_err());
    }

    #[test]
    fn critical_energy_terms_are_inverse_squares() {
        let spec = CantorSpec::new(3.0, 200).unwrap();
        let e = gradient_energy(&spec, 3.0, 200).unwrap();
        let i0 = spec.i0.unwrap();
        for t in &e.terms[i0 - 1..] {
            let i = t.i as f64;
            assert!((t.term * i * i - 1.0).abs() < 1e-12);
        }
        assert!(e.partial_sum(100) - e.partial_sum(50) < 1.0 / 50.0);
    }

    #[test]
    fn subcritical_terms_decay_geometrically() {
        let spec = CantorSpec::new(3.0, 400).unwrap();
        let e = gradient_energy(&spec, 2.5, 400).unwrap();
        assert!((e.predicted_ratio - 0.5f64.sqrt()).abs() < 1e-12);
        let r = e.terms[300].term / e.terms[299].term;
        assert!((r / e.predicted_ratio - 1.0).abs() < 0.01);
        assert!(e.tail_estimate.is_finite());
    }

    #[test]
    fn exponent_test_matches_series() {
        for (p, q) in [(3.0, 4.0), (3.0, 3.0), (2.5, 3.0), (4.0, 5.0), (4.0, 4.0)] {
            let s = criterion_series(p, q, 1024).unwrap();
            assert_eq!(s.criterion, s.cauchy, "p={p} q={q} {:?}", s.increments);
        }
        assert!((removability_exponent(3.0, 4.0) - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(removability_exponent(3.0, 3.0), 1.0);
    }

    #[test]
    fn power_integral_closed_forms() {
        // δ = 0: T^{1-a} / (1 - a)
        let v = power_integral(0.3, 0.0, 0.5, 16);
        assert!((v - 0.3f64.sqrt() * 2.0).abs() < 1e-12);
        // a = 1/2 ... δ > 0 against asinh for a = 1
        let v = power_integral(2.0, 1.0, 0.5, 64);
        let brute: f64 = (0..200_000).map(|k| ((k as f64 + 0.5) * 1e-5).powi(2) + 1.0).map(|s| s.powf(-0.25) * 1e-5).sum();
        assert!((v - brute).abs() < 1e-6, "{v} {brute}");
    }

    #[test]
    fn coincident_points_and_bad_input() {
        let e = build_removable_set(&CantorSpec::new(3.0, 8).unwrap()).unwrap();
        let g = e.fat.gaps()[0];
        let z = [0.3, 0.5 * (g[0] + g[1])];
        let r = curve_condition(&e, 4.0, z, z).unwrap();
        assert_eq!((r.integral, r.scale), (0.0, 0.0));
        assert!(curve_condition(&e, 2.0, z, z).is_err());
        let c = e.thin.intervals[0];
        let y = e.fat.intervals[0][0];
        assert!(matches!(curve_condition(&e, 4.0, [c[0], y], z), Err(Error::PointInRemovableSet)));
    }

    #[test]
    fn curve_integral_is_finite_off_f() {
        let e = build_removable_set(&CantorSpec::new(3.0, 12).unwrap()).unwrap();
        let gaps = e.fat.gaps();
        let y1 = 0.5 * (gaps[0][0] + gaps[0][1]);
        let y2 = 0.5 * (gaps[1][0] + gaps[1][1]);
        let r = curve_condition(&e, 4.0, [0.2, y1], [0.7, y2]).unwrap();
        assert!(r.integral.is_finite() && r.integral > 0.0);
        assert!(r.quadrature_change < 0.01, "{r:?}");
    }
}
