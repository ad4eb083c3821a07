//! Thin and fat Cantor sets on `[0, 1]`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Ratio sequence of the thin Cantor set together with its products and
/// gap lengths. Index `i` of every vector is the mathematical index; slot
/// 0 holds `λ_0 = P_0 = 1` as a placeholder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CantorSpec {
    pub p: f64,
    pub depth: usize,
    /// `λ_0..=λ_{depth+1}`.
    pub lambdas: Vec<f64>,
    /// `P_0..=P_{depth+1}`.
    pub products: Vec<f64>,
    /// `β_0..=β_depth`, `β_i = (1 - λ_{i+1}) P_i`.
    pub gaps: Vec<f64>,
    /// First index at which `P_i` follows the closed form. `None` for
    /// hand-picked ratios.
    pub i0: Option<usize>,
}

fn check_p(p: f64) -> Result<()> {
    if p.is_finite() && p > 2.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("Cantor exponent p = {p} must exceed 2")))
    }
}

/// `P_i = i^{3/(p-2)} 2^{-i(p-1)/(p-2)}`.
pub fn closed_form_product(p: f64, i: usize) -> f64 {
    let i = i as f64;
    (3.0 / (p - 2.0) * i.ln() - i * (p - 1.0) / (p - 2.0) * std::f64::consts::LN_2).exp()
}

/// `P_i / P_{i-1}` of the closed form.
pub fn closed_form_ratio(p: f64, i: usize) -> f64 {
    let r = i as f64 / (i as f64 - 1.0);
    2f64.powf((p - 1.0) / (2.0 - p)) * r.powf(3.0 / (p - 2.0))
}

/// Smallest `i >= 2` with closed-form ratios below 1/2 from `i` on and
/// `P_i < 2^{-i}`. The second condition is what lets a constant ratio in
/// `(0, 1/2)` on `1..i` reach `P_i`.
pub fn first_normalized_index(p: f64) -> Result<usize> {
    check_p(p)?;
    // the ratio decreases in i, so the first index below 1/2 is enough
    (2..100_000)
        .find(|&i| closed_form_ratio(p, i) < 0.5 && closed_form_product(p, i) < 0.5f64.powi(i as i32))
        .ok_or_else(|| Error::InvalidParameter(format!("no normalisation index for p = {p}")))
}

/// `λ_i` under the normalisation: the closed-form ratio from `i0` on and
/// the constant `P_{i0}^{1/i0}` before.
pub fn cantor_lambda(p: f64, i: usize) -> Result<f64> {
    if i == 0 {
        return Err(Error::InvalidParameter("ratios start at index 1".into()));
    }
    let i0 = first_normalized_index(p)?;
    Ok(if i > i0 {
        closed_form_ratio(p, i)
    } else {
        closed_form_product(p, i0).powf(1.0 / i0 as f64)
    })
}

impl CantorSpec {
    /// The normalised sequence to the given depth.
    pub fn new(p: f64, depth: usize) -> Result<Self> {
        check_p(p)?;
        let i0 = first_normalized_index(p)?;
        let flat = closed_form_product(p, i0).powf(1.0 / i0 as f64);
        let products: Vec<f64> = (0..=depth + 1)
            .map(|i| if i >= i0 { closed_form_product(p, i) } else { flat.powi(i as i32) })
            .collect();
        let mut lambdas = vec![1.0];
        lambdas.extend((1..=depth + 1).map(|i| products[i] / products[i - 1]));
        Ok(Self::assemble(p, depth, lambdas, products, Some(i0)))
    }

    /// Hand-picked ratios `λ_1..λ_depth`; `λ_{depth+1}` repeats the last.
    pub fn from_lambdas(p: f64, ratios: &[f64]) -> Result<Self> {
        if ratios.is_empty() {
            return Err(Error::InvalidParameter("need at least one ratio".into()));
        }
        if let Some(l) = ratios.iter().find(|&&l| !(l > 0.0 && l < 0.5)) {
            return Err(Error::InvalidParameter(format!("ratio {l} outside (0, 1/2)")));
        }
        let depth = ratios.len();
        let mut lambdas = vec![1.0];
        lambdas.extend_from_slice(ratios);
        lambdas.push(ratios[depth - 1]);
        let mut products = vec![1.0];
        for i in 1..=depth + 1 {
            products.push(products[i - 1] * lambdas[i]);
        }
        Ok(Self::assemble(p, depth, lambdas, products, None))
    }

    fn assemble(p: f64, depth: usize, lambdas: Vec<f64>, products: Vec<f64>, i0: Option<usize>) -> Self {
        let gaps = (0..=depth).map(|i| (1.0 - lambdas[i + 1]) * products[i]).collect();
        CantorSpec {
            p,
            depth,
            lambdas,
            products,
            gaps,
            i0,
        }
    }

    pub fn product(&self, i: usize) -> f64 {
        self.products[i]
    }

    /// Largest `|β_i - (P_i - P_{i+1})|` for `1 <= i <= depth`.
    pub fn beta_residual(&self) -> f64 {
        (1..=self.depth)
            .map(|i| (self.gaps[i] - (self.products[i] - self.products[i + 1])).abs())
            .fold(0.0, f64::max)
    }

    /// `|Σ_{i=1}^{depth} β_i - (P_1 - P_{depth+1})|`.
    pub fn telescoping_residual(&self) -> f64 {
        let sum: f64 = self.gaps[1..=self.depth].iter().sum();
        (sum - (self.products[1] - self.products[self.depth + 1])).abs()
    }

    /// Largest relative residual of `2^{i(1-p)} P_i^{2-p} = 1/i^3` over
    /// `i0 <= i <= depth`. Zero when the normalisation is not in use.
    pub fn pidef_residual(&self) -> f64 {
        let Some(i0) = self.i0 else { return 0.0 };
        let p = self.p;
        (i0..=self.depth)
            .map(|i| {
                let x = i as f64;
                let lhs = ((x * (1.0 - p)) * std::f64::consts::LN_2 + (2.0 - p) * self.products[i].ln()).exp();
                (lhs * x.powi(3) - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Sorted, pairwise disjoint closed intervals.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IntervalSet {
    pub intervals: Vec<[f64; 2]>,
}

impl IntervalSet {
    pub fn new(mut intervals: Vec<[f64; 2]>) -> Result<Self> {
        intervals.sort_by(|a, b| a[0].total_cmp(&b[0]));
        for w in intervals.windows(2) {
            if w[0][1] >= w[1][0] {
                return Err(Error::InvalidParameter(format!("intervals {:?} and {:?} overlap", w[0], w[1])));
            }
        }
        if intervals.iter().any(|iv| !(iv[0] <= iv[1])) {
            return Err(Error::InvalidParameter("interval with left end above right end".into()));
        }
        Ok(IntervalSet { intervals })
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|iv| iv[1] - iv[0]).sum()
    }

    /// Index of the first interval whose right end is at least `x`.
    fn position(&self, x: f64) -> usize {
        self.intervals.partition_point(|iv| iv[1] < x)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals.get(self.position(x)).is_some_and(|iv| iv[0] <= x)
    }

    pub fn distance(&self, x: f64) -> f64 {
        let k = self.position(x);
        let right = self.intervals.get(k).map_or(f64::INFINITY, |iv| (iv[0] - x).max(0.0));
        let left = k.checked_sub(1).map_or(f64::INFINITY, |j| x - self.intervals[j][1]);
        right.min(left)
    }

    /// Bounded complementary intervals.
    pub fn gaps(&self) -> Vec<[f64; 2]> {
        self.intervals.windows(2).map(|w| [w[0][1], w[1][0]]).collect()
    }

    /// One `left right` pair per line.
    pub fn to_text(&self) -> String {
        self.intervals.iter().map(|iv| format!("{:.17e} {:.17e}\n", iv[0], iv[1])).collect()
    }
}

/// A deleted gap of the thin set with its plateau value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub level: usize,
    /// 1-based position among the gaps of its level.
    pub index: usize,
    pub left: f64,
    pub right: f64,
    /// `(2 index - 1) / 2^{level+1}`.
    pub value: f64,
}

impl Gap {
    pub fn len(&self) -> f64 {
        self.right - self.left
    }

    pub fn is_empty(&self) -> bool {
        self.len() <= 0.0
    }
}

/// Level-`i` intervals for every `i <= depth`, children at the two ends of
/// their parent.
pub(crate) fn thin_levels(spec: &CantorSpec) -> Vec<Vec<[f64; 2]>> {
    let mut levels = vec![vec![[0.0, 1.0]]];
    for i in 1..=spec.depth {
        let len = spec.products[i];
        let next = levels[i - 1].iter().flat_map(|&[a, b]| [[a, a + len], [b - len, b]]).collect();
        levels.push(next);
    }
    levels
}

/// `C` at level `depth`: `2^depth` intervals of length `P_depth`.
pub fn build_thin_cantor(spec: &CantorSpec) -> IntervalSet {
    let levels = thin_levels(spec);
    IntervalSet {
        intervals: levels.into_iter().next_back().unwrap_or_default(),
    }
}

/// Gaps of levels `0..depth` sorted from left to right.
pub fn thin_gaps(spec: &CantorSpec) -> Vec<Gap> {
    let levels = thin_levels(spec);
    let mut gaps: Vec<Gap> = Vec::with_capacity((1 << spec.depth.min(40)) - 1);
    for (i, level) in levels.iter().enumerate().take(spec.depth) {
        let scale = 0.5f64.powi(i as i32 + 1);
        for (k, &[a, b]) in level.iter().enumerate() {
            let child = spec.products[i + 1];
            gaps.push(Gap {
                level: i,
                index: k + 1,
                left: a + child,
                right: b - child,
                value: (2 * k + 1) as f64 * scale,
            });
        }
    }
    gaps.sort_by(|a, b| a.left.total_cmp(&b.left));
    gaps
}

/// Log-log regression slope of `2^i` against `1 / P_i` over `range`.
pub fn box_dimension(spec: &CantorSpec, range: std::ops::RangeInclusive<usize>) -> Result<f64> {
    if *range.end() > spec.depth || range.start() >= range.end() {
        return Err(Error::InvalidParameter(format!("range {range:?} not inside 1..={}", spec.depth)));
    }
    let pts: Vec<(f64, f64)> = range
        .map(|i| (-spec.products[i].ln(), i as f64 * std::f64::consts::LN_2))
        .collect();
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// `F` after `steps` splits, with the largest remaining length after
/// each one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FatCantor {
    pub set: IntervalSet,
    pub steps: usize,
    pub largest: Vec<f64>,
}

/// Starting from `[0, 1]`, step `n` removes an open gap of length `β_n`
/// from the middle of a largest interval (leftmost on ties). Fails if a
/// largest interval ever stops exceeding the tail `P_{n+1}`.
pub fn build_fat_cantor(spec: &CantorSpec, steps: usize) -> Result<FatCantor> {
    if steps > spec.depth {
        return Err(Error::InvalidParameter(format!("{steps} steps exceed depth {}", spec.depth)));
    }
    let mut ivs: Vec<[f64; 2]> = vec![[0.0, 1.0]];
    let mut largest = Vec::with_capacity(steps);
    for n in 1..=steps {
        let (k, _) = ivs
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (k, iv)| {
                if iv[1] - iv[0] > best.1 {
                    (k, iv[1] - iv[0])
                } else {
                    best
                }
            });
        let [a, b] = ivs[k];
        let r = 0.5 * (b - a - spec.gaps[n]);
        ivs.splice(k..=k, [[a, a + r], [b - r, b]]);
        let big = ivs.iter().map(|iv| iv[1] - iv[0]).fold(0.0, f64::max);
        if big <= spec.products[n + 1] {
            return Err(Error::InvalidParameter(format!(
                "fat Cantor invariant fails at step {n}: largest {big} <= tail {}",
                spec.products[n + 1]
            )));
        }
        largest.push(big);
    }
    Ok(FatCantor {
        set: IntervalSet { intervals: ivs },
        steps,
        largest,
    })
}

/// The one-dimensional set used for exponents in `(1, 2]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LewisCantor {
    pub p: f64,
    pub s: f64,
    pub depth: usize,
    pub set: IntervalSet,
    /// Gap length deleted at each step `1..=depth`.
    pub gap_lengths: Vec<f64>,
    /// Interval length after each step `0..=depth`.
    pub interval_lengths: Vec<f64>,
    pub residual_measure: f64,
    /// Partial sums of `Σ |I_j|^{2-p}` after each step.
    pub gap_power_sums: Vec<f64>,
}

/// Gap length at step `i`.
pub fn lewis_gap(p: f64, s: f64, i: usize) -> f64 {
    let x = i as f64;
    if p == 2.0 {
        s * 0.5f64.powi(i as i32) * (-(2f64.powi(i as i32))).exp()
    } else {
        s * x.powf(-2.0 / (2.0 - p)) * 2f64.powf(-(x + 1.0) / (2.0 - p))
    }
}

/// Step `i` deletes a centred gap from each of the `2^{i-1}` intervals
/// left by the previous step.
pub fn build_lewis_cantor(p: f64, s: f64, depth: usize) -> Result<LewisCantor> {
    if !(p > 1.0 && p <= 2.0) {
        return Err(Error::InvalidParameter(format!("p = {p} must lie in (1, 2]")));
    }
    if !(s > 0.0 && s < 1.0 / 3.0) {
        return Err(Error::InvalidParameter(format!("s = {s} must lie in (0, 1/3)")));
    }
    let bound: f64 = (1..200).map(|i| 2f64.powi(i) * lewis_gap(p, s, i as usize)).sum();
    if bound >= 1.0 {
        return Err(Error::InvalidParameter(format!("s = {s} too large: gap series {bound} >= 1")));
    }
    let mut ivs = vec![[0.0, 1.0]];
    let mut gap_lengths = Vec::new();
    let mut interval_lengths = vec![1.0];
    let mut sums = Vec::new();
    let mut acc = 0.0;
    for i in 1..=depth {
        let g = lewis_gap(p, s, i);
        let len = interval_lengths[i - 1];
        if g >= len {
            return Err(Error::InvalidParameter(format!("gap {g} does not fit interval {len} at step {i}")));
        }
        let child = 0.5 * (len - g);
        ivs = ivs.iter().flat_map(|&[a, b]| [[a, a + child], [b - child, b]]).collect();
        acc += (1u64 << (i - 1)) as f64 * g.powf(2.0 - p);
        gap_lengths.push(g);
        interval_lengths.push(child);
        sums.push(acc);
    }
    let residual = 1.0 - (1..=depth).map(|i| (1u64 << (i - 1)) as f64 * gap_lengths[i - 1]).sum::<f64>();
    Ok(LewisCantor {
        p,
        s,
        depth,
        set: IntervalSet { intervals: ivs },
        gap_lengths,
        interval_lengths,
        residual_measure: residual,
        gap_power_sums: sums,
    })
}

impl LewisCantor {
    /// For a point of the set and each step `i < depth`, the radius
    /// `r_i` is the step-`i` interval length and the gap of step `i + 1`
    /// inside that interval lies within `[x - r_i, x + r_i]`. Returns the
    /// smallest `|gap| / r_i^{1/(2-q)}` over steps `from..depth`.
    pub fn porosity_constant(&self, q: f64, from: usize) -> Result<f64> {
        if !(q > self.p && q < 2.0) {
            return Err(Error::InvalidParameter(format!("q = {q} must lie in (p, 2)")));
        }
        Ok((from.max(1)..self.depth)
            .map(|i| self.gap_lengths[i] / self.interval_lengths[i].powf(1.0 / (2.0 - q)))
            .fold(f64::INFINITY, f64::min))
    }
}
