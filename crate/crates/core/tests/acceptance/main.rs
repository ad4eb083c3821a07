//! Acceptance run: one line per criterion, nonzero exit if any fails.
//!
//! Run with `cargo test --release -p qhgeo --test acceptance`.

mod tolerances;

use qhgeo::approximation::{density_experiment, GridFunction, TestFunction};
use qhgeo::counterexample::{
    build_3d_domain, build_fat_cantor, build_removable_set, criterion_series, curve_condition, gradient_energy,
    trace_variation, CantorSpec, StepField,
};
use qhgeo::decomposition::{boundary_layer, choose_q0, refine_core, validate_partitioning, DecompositionConfig, OverlapCounts};
use qhgeo::partition::{build_partition, check_partition};
use qhgeo::qh::{hyperbolicity, qh_distance, PointSampler, SampleConfig};
use qhgeo::whitney::{dyadic_level, validate_whitney, whitney_decompose};
use qhgeo::{build_domain, pt2, DomainSpec, Result};
use rand::{Rng, SeedableRng};
use std::time::Instant;
use tolerances::*;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn domains() -> Vec<(&'static str, DomainSpec)> {
    vec![
        ("square", DomainSpec::unit_square()),
        ("disk", DomainSpec::disk([0.0, 0.0], 1.0)),
        (
            "annulus",
            DomainSpec::Annulus {
                center: [0.0, 0.0],
                inner: 0.5,
                outer: 1.0,
                prune: false,
            },
        ),
        ("dumbbell", DomainSpec::dumbbell(1.0, 3.0, 0.125)),
    ]
}

fn finest(h: f64) -> i32 {
    dyadic_level(h).expect("dyadic spacing") - 1
}

fn whitney_exactness() -> Result<Outcome> {
    let mut notes = Vec::new();
    let mut ok = true;
    for (name, spec) in domains() {
        let t = Instant::now();
        let dom = build_domain(&spec, WHITNEY_H)?;
        let dec = whitney_decompose(&dom, finest(WHITNEY_H))?;
        let rep = validate_whitney(&dec, &dom);
        let secs = t.elapsed().as_secs_f64();
        let violations = rep.disjoint.violations + rep.distance.violations + rep.adjacency.violations;
        ok &= rep.passed() && violations == 0 && secs < WHITNEY_SECONDS;
        notes.push(format!("{name}: {} cubes, {violations} violations, {secs:.2}s", rep.cubes));
    }
    Ok(outcome(ok, notes.join("; ")))
}

fn metric_oracle() -> Result<Outcome> {
    let t = Instant::now();
    let square = build_domain(&DomainSpec::unit_square(), METRIC_H)?;
    let d = qh_distance(&square, &pt2(0.5, 0.1), &pt2(0.5, 0.2))?;
    let rel = (d / std::f64::consts::LN_2 - 1.0).abs();
    let dom = build_domain(&DomainSpec::unit_square(), METRIC_SAMPLE_H)?;
    let mut sampler = PointSampler::new(&dom, 11, 0, 0.0);
    let mut sym: f64 = 0.0;
    let mut tri: f64 = 0.0;
    for _ in 0..METRIC_SAMPLES {
        let (a, _) = sampler.sample()?;
        let (b, _) = sampler.sample()?;
        let (c, _) = sampler.sample()?;
        let ab = qh_distance(&dom, &a, &b)?;
        sym = sym.max((ab - qh_distance(&dom, &b, &a)?).abs());
        let excess = ab - qh_distance(&dom, &a, &c)? - qh_distance(&dom, &c, &b)?;
        tri = tri.max(excess);
    }
    let secs = t.elapsed().as_secs_f64();
    let ok = rel <= LN2_RELATIVE && sym <= METRIC_IDENTITY && tri <= METRIC_IDENTITY && secs < METRIC_SECONDS;
    Ok(outcome(
        ok,
        format!(
            "k = {d:.5} vs ln 2 ({:.2}% off); symmetry {sym:.1e}; triangle excess {tri:.1e}; {secs:.1}s",
            100.0 * rel
        ),
    ))
}

fn decomposition_soundness() -> Result<Outcome> {
    let t = Instant::now();
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, spec) in [
        ("disk", DomainSpec::disk([0.0, 0.0], 1.0)),
        ("dumbbell", DomainSpec::dumbbell(1.0, 3.0, 0.125)),
    ] {
        let dom = build_domain(&spec, DECOMPOSITION_H)?;
        let top = (*M_RANGE.end() + 1).min(finest(DECOMPOSITION_H));
        let dec = whitney_decompose(&dom, top)?;
        let q0 = choose_q0(&dec);
        let cfg = DecompositionConfig::new(C1);
        let mut counts: Vec<[usize; 10]> = Vec::new();
        let mut failed = Vec::new();
        for m in M_RANGE {
            let core = refine_core(&dec, &dom, m, q0, &cfg)?;
            let layer = boundary_layer(&dec, &dom, &core);
            let rep = validate_partitioning(&dec, &dom, &core, &layer);
            failed.extend(rep.checks.iter().filter(|c| !c.passed).map(|c| format!("m={m}:{}", c.name)));
            counts.push(rep.counts.as_array());
        }
        let mut spreads = Vec::new();
        for (k, label) in OverlapCounts::NAMES.iter().enumerate() {
            let col: Vec<usize> = counts.iter().map(|c| c[k]).collect();
            let spread = col.iter().max().unwrap() - col.iter().min().unwrap();
            if spread > COUNT_SPREAD {
                spreads.push(format!("{label} {col:?}"));
            }
        }
        ok &= failed.is_empty() && spreads.is_empty();
        let s: Vec<usize> = counts.iter().map(|c| c[0]).collect();
        notes.push(format!(
            "{name}: failed checks {failed:?}, counts outside ±1 {spreads:?}, s by m {s:?}"
        ));
    }
    let secs = t.elapsed().as_secs_f64();
    ok &= secs < DECOMPOSITION_SECONDS;
    notes.push(format!("{secs:.1}s"));
    Ok(outcome(ok, notes.join("; ")))
}

fn partition_identity() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut notes = Vec::new();
    let mut ok = true;
    for (name, spec) in domains() {
        let dom = build_domain(&spec, PARTITION_H)?;
        let dec = whitney_decompose(&dom, (*M_RANGE.end() + 1).min(finest(PARTITION_H)))?;
        let q0 = choose_q0(&dec);
        for m in M_RANGE {
            let run = refine_core(&dec, &dom, m, q0, &DecompositionConfig::new(C1)).and_then(|core| {
                let layer = boundary_layer(&dec, &dom, &core);
                let pou = build_partition(&dom, &core, &layer)?;
                Ok(check_partition(&pou, &dom, &core, &layer))
            });
            match run {
                Ok(c) => {
                    worst = worst.max(c.identity_error);
                    ok &= c.identity_error <= PARTITION_IDENTITY;
                }
                Err(e) => {
                    ok = false;
                    notes.push(format!("{name} m={m}: {e}"));
                }
            }
        }
    }
    notes.insert(0, format!("max |sum - 1| = {worst:.1e} over 4 domains, m = 4..8"));
    Ok(outcome(ok, notes.join("; ")))
}

fn density_convergence() -> Result<Outcome> {
    let t = Instant::now();
    let dom = build_domain(&DomainSpec::disk([0.0, 0.0], 1.0), DECOMPOSITION_H)?;
    let ms: Vec<i32> = M_RANGE.collect();
    let cfg = DecompositionConfig::new(C1);
    let spike = TestFunction::Power {
        center: [1.0, 0.0, 0.0],
        alpha: SPIKE_ALPHA,
    };
    let u = GridFunction::sample(&dom, &spike)?;
    let r = density_experiment(&dom, &u, DENSITY_P, &ms, &cfg)?;
    let c = GridFunction::sample(&dom, &TestFunction::Constant { value: 1.0 })?;
    let rc = density_experiment(&dom, &c, DENSITY_P, &ms, &cfg)?;
    let const_err = rc.rows.iter().map(|r| r.err_total).fold(0.0, f64::max);
    let rel = r.final_relative_error().unwrap_or(f64::INFINITY);
    let secs = t.elapsed().as_secs_f64();
    let errs: Vec<String> = r.rows.iter().map(|row| format!("{:.3}", row.err_total)).collect();
    let lp: Vec<String> = r.rows.iter().map(|row| format!("{:.4}", row.err_lp)).collect();
    let ok = r.strictly_decreasing() && rel <= FINAL_RELATIVE_ERROR && const_err <= CONSTANT_ERROR && secs < DENSITY_SECONDS;
    Ok(outcome(
        ok,
        format!(
            "err {errs:?} (lp part {lp:?}), decreasing {}, final relative {rel:.3}, constants {const_err:.1e}, {secs:.0}s",
            r.strictly_decreasing()
        ),
    ))
}

fn hyperbolicity_dichotomy() -> Result<Outcome> {
    let t = Instant::now();
    let cfg = SampleConfig {
        samples: HYPERBOLICITY_SAMPLES,
        seed: 5,
        min_boundary_distance: HYPERBOLICITY_MIN_DISTANCE,
        points_per_geodesic: 5,
    };
    let spec = DomainSpec::disk([0.0, 0.0], 1.0);
    let coarse = hyperbolicity(&build_domain(&spec, HYPERBOLICITY_COARSE_H)?, &cfg)?;
    let fine = hyperbolicity(&build_domain(&spec, HYPERBOLICITY_COARSE_H / 2.0)?, &cfg)?;
    let change = |a: f64, b: f64| if b == 0.0 { (a - b).abs() } else { (a / b - 1.0).abs() };
    let changes = [change(coarse.delta, fine.delta), change(coarse.c1, fine.c1), change(coarse.c2, fine.c2)];
    let stable = changes.iter().all(|&c| c <= HYPERBOLICITY_STABILITY);
    let mut notes = vec![format!(
        "disk δ {:.3}/{:.3}, C1 {:.3}/{:.3}, C2 {:.3}/{:.3} (h, h/2), stable {stable}",
        coarse.delta, fine.delta, coarse.c1, fine.c1, coarse.c2, fine.c2
    )];
    let mut slab = Vec::new();
    for depth in SLAB_DEPTHS {
        let set = build_removable_set(&CantorSpec::new(SLAB_P, depth)?)?;
        match build_3d_domain(&set, SLAB_H, true) {
            Ok(d) => slab.push(Some(hyperbolicity(&d.domain, &cfg)?)),
            Err(e) => {
                notes.push(format!("depth {depth}: {e}"));
                slab.push(None);
            }
        }
    }
    let increasing = slab.iter().all(|r| r.is_some())
        && slab.windows(2).all(|w| {
            let (a, b) = (w[0].as_ref().unwrap(), w[1].as_ref().unwrap());
            b.delta > a.delta && b.c1 > a.c1 && b.c2 > a.c2
        });
    // what a grid that cannot separate the boxes sees instead
    let mut merged = Vec::new();
    for depth in SLAB_DEPTHS {
        let set = build_removable_set(&CantorSpec::new(SLAB_P, depth)?)?;
        let d = build_3d_domain(&set, SLAB_DIAGNOSTIC_H, false)?;
        let r = hyperbolicity(&d.domain, &cfg)?;
        merged.push(format!("d{depth}: {} cells removed, δ {:.3}", d.removed_cells, r.delta));
    }
    notes.push(format!("non-strict at h = {SLAB_DIAGNOSTIC_H}: {}", merged.join(", ")));
    let secs = t.elapsed().as_secs_f64();
    notes.push(format!("slab increasing {increasing}, {secs:.0}s"));
    Ok(outcome(stable && increasing && secs < HYPERBOLICITY_SECONDS, notes.join("; ")))
}

fn cantor_algebra() -> Result<Outcome> {
    let mut ok = true;
    let mut notes = Vec::new();
    for p in [2.5, 3.0, 4.0] {
        let s = CantorSpec::new(p, CANTOR_DEPTH)?;
        let f = build_fat_cantor(&s, CANTOR_DEPTH)?;
        let fat = (f.set.measure() - (1.0 - (s.product(1) - s.product(CANTOR_DEPTH + 1)))).abs();
        let (b, tel, pid) = (s.beta_residual(), s.telescoping_residual(), s.pidef_residual());
        ok &= b < CANTOR_RESIDUAL && tel < CANTOR_RESIDUAL && pid < CANTOR_RESIDUAL && fat <= FAT_MEASURE;
        notes.push(format!("p={p}: beta {b:.1e}, telescoping {tel:.1e}, 1/i^3 {pid:.1e}, fat measure {fat:.1e}"));
    }
    Ok(outcome(ok, notes.join("; ")))
}

fn energy_dichotomy() -> Result<Outcome> {
    let spec = CantorSpec::new(3.0, 2 * ENERGY_N_MAX)?;
    let critical = gradient_energy(&spec, 3.0, 2 * ENERGY_N_MAX)?;
    let mut worst_inc: f64 = 0.0;
    let mut inc_ok = true;
    for n in ENERGY_N_MIN..=ENERGY_N_MAX {
        let inc = critical.partial_sum(2 * n) - critical.partial_sum(n);
        inc_ok &= inc < 2.0 / n as f64;
        worst_inc = worst_inc.max(inc * n as f64);
    }
    let sub = gradient_energy(&spec, 2.5, 2 * ENERGY_N_MAX)?;
    let mut worst_ratio: f64 = 0.0;
    for i in ENERGY_N_MIN..=ENERGY_N_MAX {
        let r = sub.terms[i].term / sub.terms[i - 1].term;
        worst_ratio = worst_ratio.max((r / sub.predicted_ratio - 1.0).abs());
    }
    let ok = inc_ok && worst_ratio <= RATIO_RELATIVE;
    Ok(outcome(
        ok,
        format!(
            "q=p: max N·(S_2N - S_N) = {worst_inc:.3} (< 2 needed); q=2.5: ratio {:.5}, worst deviation {:.3}%",
            sub.predicted_ratio,
            100.0 * worst_ratio
        ),
    ))
}

fn removability_criterion() -> Result<Outcome> {
    let mut ok = true;
    let mut notes = Vec::new();
    for (p, q) in [(3.0, 4.0), (3.0, 3.0), (2.5, 3.0), (4.0, 5.0), (4.0, 4.0)] {
        let s = criterion_series(p, q, SERIES_TERMS)?;
        ok &= s.criterion == s.cauchy;
        notes.push(format!("({p},{q}) e={:.3} cauchy {}", s.exponent, s.cauchy));
    }
    for (p, q) in [(3.0, 4.0), (2.5, 3.0), (4.0, 5.0)] {
        let set = build_removable_set(&CantorSpec::new(p, CURVE_DEPTH)?)?;
        let gaps = set.fat.gaps();
        let total: f64 = gaps.iter().map(|g| g[1] - g[0]).sum();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        // heights off F: the reduced case of the curve argument
        let mut draw = || {
            let mut w = rng.gen_range(0.0..total);
            let x = rng.gen_range(0.0..1.0);
            for g in &gaps {
                if w < g[1] - g[0] {
                    return [x, g[0] + w];
                }
                w -= g[1] - g[0];
            }
            [x, gaps[gaps.len() - 1][1]]
        };
        let mut constant: f64 = 0.0;
        let mut quad: f64 = 0.0;
        let mut finite = true;
        for _ in 0..CURVE_PAIRS {
            let (z1, z2) = (draw(), draw());
            let r = curve_condition(&set, q, z1, z2)?;
            finite &= r.integral.is_finite();
            constant = constant.max(r.ratio);
            quad = quad.max(r.quadrature_change);
        }
        ok &= finite && quad <= CURVE_QUADRATURE;
        notes.push(format!("curve ({p},{q}) constant {constant:.2}, quadrature {:.2}%", 100.0 * quad));
    }
    Ok(outcome(ok, notes.join("; ")))
}

fn trace_obstruction() -> Result<Outcome> {
    let mut ok = true;
    let mut last = f64::INFINITY;
    let mut notes = Vec::new();
    for depth in TRACE_DEPTH - 2..=TRACE_DEPTH {
        let field = StepField::new(build_removable_set(&CantorSpec::new(3.0, depth)?)?);
        let iv = field.set.fat.intervals.iter().max_by(|a, b| (a[1] - a[0]).total_cmp(&(b[1] - b[0]))).unwrap();
        let r = trace_variation(&field, 0.5 * (iv[0] + iv[1]))?;
        let rel = (r.support / r.expected_support - 1.0).abs();
        ok &= r.support < last && r.dyadic_plateaus && rel <= TRACE_SUPPORT_RELATIVE;
        if depth == TRACE_DEPTH {
            ok &= r.variation == 1.0;
            notes.push(format!("depth {depth}: variation {}, support {:.6e} = 2^d P_d (rel {rel:.1e})", r.variation, r.support));
        }
        last = r.support;
    }
    notes.push("support decreasing over depths 10..12".into());
    Ok(outcome(ok, notes.join("; ")))
}

fn main() {
    // the harness passes filters and flags; the run takes none
    let criteria: [(&str, fn() -> Result<Outcome>); 10] = [
        ("whitney exactness", whitney_exactness),
        ("metric oracle", metric_oracle),
        ("decomposition soundness", decomposition_soundness),
        ("partition identity", partition_identity),
        ("density convergence", density_convergence),
        ("hyperbolicity dichotomy", hyperbolicity_dichotomy),
        ("cantor algebra", cantor_algebra),
        ("energy dichotomy", energy_dichotomy),
        ("removability criterion", removability_criterion),
        ("trace obstruction", trace_obstruction),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failures = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let n = k + 1;
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let t = Instant::now();
        let o = run().unwrap_or_else(|e| outcome(false, format!("error: {e}")));
        if !o.passed {
            failures += 1;
        }
        println!(
            "criterion {n:>2} {name:<24} {} [{:.1}s] {}",
            if o.passed { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!("acceptance: {failures} failing");
    if failures > 0 {
        std::process::exit(1);
    }
}
