//! Subcommand implementations.

use crate::output::OutDir;
use crate::{Command, Counterexample, Failure, GridArgs};
use qhgeo::approximation::{density_experiment, GridFunction, TestFunction};
use qhgeo::counterexample::{
    box_dimension, build_3d_domain, build_fat_cantor, build_removable_set, build_thin_cantor, curve_condition,
    gradient_energy, trace_variation, CantorSpec, StepField,
};
use qhgeo::decomposition::{boundary_layer, choose_q0, refine_core, validate_partitioning, DecompositionConfig};
use qhgeo::domain::write_pgm;
use qhgeo::qh::{hyperbolicity, inner_distance, qh_distance, qh_geodesic, SampleConfig};
use qhgeo::whitney::{dyadic_level, validate_whitney, whitney_decompose};
use qhgeo::{build_domain, DiscreteDomain, DomainSpec, Point};
use rand::{Rng, SeedableRng};
use serde::Serialize;
use std::io::Write;

type Outcome = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Grid level of `h`, or a usage error.
fn level_of(h: f64) -> Result<i32, Failure> {
    dyadic_level(h).ok_or_else(|| usage(format!("h = {h} must be a power of two")))
}

fn load_domain(grid: &GridArgs) -> Result<DiscreteDomain, Failure> {
    level_of(grid.h)?;
    let text = std::fs::read_to_string(&grid.domain)
        .map_err(|e| usage(format!("{}: {e}", grid.domain.display())))?;
    let mut spec = DomainSpec::from_toml(&text).map_err(|e| usage(format!("{}: {e}", grid.domain.display())))?;
    // bitmap paths are relative to the domain file
    if let DomainSpec::BitmapFile { path, sidecar, .. } = &mut spec {
        let base = grid.domain.parent().unwrap_or(std::path::Path::new("."));
        for p in [path, sidecar] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
    Ok(build_domain(&spec, grid.h)?)
}

fn check_exponent(name: &str, v: f64, lo: f64) -> Outcome {
    if v.is_finite() && v > lo {
        Ok(())
    } else {
        Err(usage(format!("{name} = {v} must exceed {lo}")))
    }
}

fn point(dom: &DiscreteDomain, a: [f64; 3]) -> Point {
    if dom.dim() == 2 {
        qhgeo::pt2(a[0], a[1])
    } else {
        qhgeo::pt3(a[0], a[1], a[2])
    }
}

pub fn dispatch(command: &Command, out: &mut OutDir) -> Outcome {
    match command {
        Command::Whitney { grid, max_level } => whitney(grid, *max_level, out),
        Command::QhDist { grid, a, b } => qh_dist(grid, *a, *b, out),
        Command::Geodesic { grid, a, b } => geodesic(grid, *a, *b, out),
        Command::Hyperbolicity {
            grid,
            samples,
            seed,
            min_distance,
            points_per_geodesic,
        } => {
            if *samples == 0 {
                return Err(usage("samples must be positive"));
            }
            let dom = load_domain(grid)?;
            let cfg = SampleConfig {
                samples: *samples,
                seed: *seed,
                min_boundary_distance: *min_distance,
                points_per_geodesic: *points_per_geodesic,
            };
            Ok(out.json("hyperbolicity.json", &hyperbolicity(&dom, &cfg)?)?)
        }
        Command::Decompose { grid, m, c1 } => decompose(grid, *m, *c1, out),
        Command::Approximate { grid, u, p, m, c1 } => approximate(grid, u, *p, &m.values(), *c1, out),
        Command::Counterexample { which } => counterexample(which, out),
        Command::Replay { .. } => Err(usage("replay is resolved before dispatch")),
    }
}

fn whitney(grid: &GridArgs, max_level: Option<i32>, out: &mut OutDir) -> Outcome {
    let finest = level_of(grid.h)? - 1;
    let top = max_level.unwrap_or(finest);
    if top > finest {
        return Err(usage(format!("max-level {top} needs cubes smaller than two cells (at most {finest})")));
    }
    let dom = load_domain(grid)?;
    let dec = whitney_decompose(&dom, top)?;
    let rep = validate_whitney(&dec, &dom);
    dec.export(out.file("cubes.txt")?)?;
    if dom.dim() == 2 {
        let levels: Vec<f64> = (0..dom.len())
            .map(|c| dec.owner(c).map_or(0.0, |q| (dec.cube(q).level + 1) as f64))
            .collect();
        let max = levels.iter().cloned().fold(0.0, f64::max);
        let mut w = out.file("levels.pgm")?;
        write_pgm(&mut w, &dom, &levels, max)?;
        w.flush()?;
    }
    out.json("report.json", &rep)?;
    if rep.passed() {
        Ok(())
    } else {
        Err(Failure::Validation {
            message: "Whitney validation failed".into(),
            report: out.path("report.json").display().to_string(),
        })
    }
}

#[derive(Serialize)]
struct Distances {
    a: [f64; 3],
    b: [f64; 3],
    qh: f64,
    inner: f64,
    euclidean: f64,
}

fn qh_dist(grid: &GridArgs, a: [f64; 3], b: [f64; 3], out: &mut OutDir) -> Outcome {
    let dom = load_domain(grid)?;
    let (pa, pb) = (point(&dom, a), point(&dom, b));
    let d = Distances {
        a,
        b,
        qh: qh_distance(&dom, &pa, &pb)?,
        inner: inner_distance(&dom, &pa, &pb)?,
        euclidean: (0..3).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>().sqrt(),
    };
    Ok(out.json("distance.json", &d)?)
}

#[derive(Serialize)]
struct Vertex {
    x: f64,
    y: f64,
    z: f64,
}

#[derive(Serialize)]
struct GeodesicSummary {
    qh_length: f64,
    euclidean_length: f64,
    cells: usize,
}

fn geodesic(grid: &GridArgs, a: [f64; 3], b: [f64; 3], out: &mut OutDir) -> Outcome {
    let dom = load_domain(grid)?;
    let path = qh_geodesic(&dom, &point(&dom, a), &point(&dom, b))?;
    out.csv(
        "geodesic.csv",
        path.vertices.iter().map(|v| Vertex {
            x: v[0],
            y: v[1],
            z: v[2],
        }),
    )?;
    let s = GeodesicSummary {
        qh_length: path.qh_length,
        euclidean_length: path.euclidean_length,
        cells: path.cells.len(),
    };
    Ok(out.json("geodesic.json", &s)?)
}

/// Cell labels of the decomposition grid.
pub const LABEL_OUTSIDE: u32 = 0;
pub const LABEL_CORE: u32 = 1;
pub const LABEL_E: u32 = 2;
pub const LABEL_F: u32 = 3;
pub const LABEL_OTHER: u32 = 4;

fn decompose(grid: &GridArgs, m: i32, c1: f64, out: &mut OutDir) -> Outcome {
    let finest = level_of(grid.h)? - 1;
    if m < 1 || m >= finest {
        return Err(usage(format!("m = {m} must lie in 1..{finest} at this spacing")));
    }
    check_exponent("c1", c1, 0.0)?;
    let dom = load_domain(grid)?;
    let dec = whitney_decompose(&dom, (m + 1).min(finest))?;
    let core = refine_core(&dec, &dom, m, choose_q0(&dec), &DecompositionConfig::new(c1))?;
    let layer = boundary_layer(&dec, &dom, &core);
    let rep = validate_partitioning(&dec, &dom, &core, &layer);
    let labels: Vec<u32> = (0..dom.len())
        .map(|c| {
            if !dom.is_occupied(c) {
                LABEL_OUTSIDE
            } else if core.omega_cells[c] {
                LABEL_CORE
            } else if layer.e_m.contains(c) {
                LABEL_E
            } else if layer.f_m.contains(c) {
                LABEL_F
            } else {
                LABEL_OTHER
            }
        })
        .collect();
    let mut w = out.file("labels.u32")?;
    for l in &labels {
        w.write_all(&l.to_le_bytes())?;
    }
    w.flush()?;
    if dom.dim() == 2 {
        let v: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
        let mut w = out.file("labels.pgm")?;
        write_pgm(&mut w, &dom, &v, LABEL_OTHER as f64)?;
        w.flush()?;
    }
    out.json("report.json", &rep)?;
    if rep.passed() {
        Ok(())
    } else {
        Err(Failure::Validation {
            message: "decomposition validation failed".into(),
            report: out.path("report.json").display().to_string(),
        })
    }
}

/// Convergence table row; timings stay in the JSON report so that the
/// CSV is reproducible byte for byte.
#[derive(Serialize)]
struct CsvRow {
    m: i32,
    h: f64,
    err_total: f64,
    err_lp: f64,
    err_grad: f64,
    localized_energy: f64,
    lip_um: f64,
}

fn approximate(grid: &GridArgs, u: &TestFunction, p: f64, ms: &[i32], c1: f64, out: &mut OutDir) -> Outcome {
    let finest = level_of(grid.h)? - 1;
    check_exponent("c1", c1, 0.0)?;
    if !(p >= 1.0 && p.is_finite()) {
        return Err(usage(format!("p = {p} must be at least 1")));
    }
    if ms[0] < 1 || *ms.last().unwrap() >= finest {
        return Err(usage(format!("m must lie in 1..{finest} at this spacing")));
    }
    let dom = load_domain(grid)?;
    let range = u.p_range(dom.dim());
    if !range.contains(p) {
        return Err(usage(format!("{} is not in W^(1,{p}) (p must stay below {})", u.name(), range.max)));
    }
    let f = GridFunction::sample(&dom, u)?;
    let rep = density_experiment(&dom, &f, p, ms, &DecompositionConfig::new(c1))?;
    out.csv(
        "convergence.csv",
        rep.rows.iter().map(|r| CsvRow {
            m: r.m,
            h: r.h,
            err_total: r.err_total,
            err_lp: r.err_lp,
            err_grad: r.err_grad,
            localized_energy: r.localized_energy,
            lip_um: r.lip_um,
        }),
    )?;
    Ok(out.json("report.json", &rep)?)
}

fn counterexample(which: &Counterexample, out: &mut OutDir) -> Outcome {
    match which {
        Counterexample::Cantor { p, depth } => cantor(*p, *depth, out),
        Counterexample::Energy { p, q, n } => {
            check_exponent("p", *p, 2.0)?;
            check_exponent("q", *q, 1.0)?;
            if *n < 1 {
                return Err(usage("N must be positive"));
            }
            let series = gradient_energy(&CantorSpec::new(*p, *n)?, *q, *n)?;
            out.csv("energy.csv", &series.terms)?;
            Ok(out.json("energy.json", &series)?)
        }
        Counterexample::Curve {
            p,
            q,
            depth,
            pairs,
            seed,
        } => curve(*p, *q, *depth, *pairs, *seed, out),
        Counterexample::Trace { p, depth, y0 } => {
            check_exponent("p", *p, 2.0)?;
            let field = StepField::new(build_removable_set(&CantorSpec::new(*p, *depth)?)?);
            let y = match y0 {
                Some(y) => *y,
                None => {
                    let iv = field.set.fat.intervals.iter().max_by(|a, b| (a[1] - a[0]).total_cmp(&(b[1] - b[0])));
                    let iv = iv.expect("F is nonempty");
                    0.5 * (iv[0] + iv[1])
                }
            };
            Ok(out.json("trace.json", &trace_variation(&field, y)?)?)
        }
        Counterexample::Domain3d {
            p,
            depth,
            h,
            strict,
            samples,
            seed,
        } => domain3d(*p, *depth, *h, *strict, *samples, *seed, out),
    }
}

#[derive(Serialize)]
struct CantorSummary<'a> {
    spec: &'a CantorSpec,
    beta_residual: f64,
    telescoping_residual: f64,
    pidef_residual: f64,
    thin_measure: f64,
    fat_measure: f64,
    box_dimension: Option<f64>,
}

fn cantor(p: f64, depth: usize, out: &mut OutDir) -> Outcome {
    check_exponent("p", p, 2.0)?;
    if depth < 1 {
        return Err(usage("depth must be positive"));
    }
    let spec = CantorSpec::new(p, depth)?;
    let thin = build_thin_cantor(&spec);
    let fat = build_fat_cantor(&spec, depth)?;
    out.text("thin.txt", &thin.to_text())?;
    out.text("fat.txt", &fat.set.to_text())?;
    let summary = CantorSummary {
        spec: &spec,
        beta_residual: spec.beta_residual(),
        telescoping_residual: spec.telescoping_residual(),
        pidef_residual: spec.pidef_residual(),
        thin_measure: thin.measure(),
        fat_measure: fat.set.measure(),
        box_dimension: if depth >= 4 { box_dimension(&spec, depth / 2..=depth).ok() } else { None },
    };
    Ok(out.json("cantor.json", &summary)?)
}

#[derive(Serialize)]
struct CurveRow {
    pair: usize,
    x1: f64,
    y1: f64,
    x2: f64,
    y2: f64,
    n: usize,
    integral: f64,
    scale: f64,
    ratio: f64,
    quadrature_change: f64,
}

#[derive(Serialize)]
struct CurveSummary {
    p: f64,
    q: f64,
    depth: usize,
    pairs: usize,
    seed: u64,
    constant: f64,
    max_quadrature_change: f64,
}

/// Endpoints are drawn with heights in the gaps of `F`, so they stay off
/// `E` at every depth.
fn curve(p: f64, q: f64, depth: usize, pairs: usize, seed: u64, out: &mut OutDir) -> Outcome {
    check_exponent("p", p, 2.0)?;
    check_exponent("q", q, 2.0)?;
    if depth < 1 || pairs == 0 {
        return Err(usage("depth and pairs must be positive"));
    }
    let set = build_removable_set(&CantorSpec::new(p, depth)?)?;
    let gaps = set.fat.gaps();
    let total: f64 = gaps.iter().map(|g| g[1] - g[0]).sum();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || {
        let x = rng.gen_range(0.0..1.0);
        let mut w = rng.gen_range(0.0..total);
        for g in &gaps {
            if w < g[1] - g[0] {
                return [x, g[0] + w];
            }
            w -= g[1] - g[0];
        }
        [x, gaps[gaps.len() - 1][0]]
    };
    let mut rows = Vec::with_capacity(pairs);
    for pair in 0..pairs {
        let (z1, z2) = (draw(), draw());
        let r = curve_condition(&set, q, z1, z2)?;
        rows.push(CurveRow {
            pair,
            x1: z1[0],
            y1: z1[1],
            x2: z2[0],
            y2: z2[1],
            n: r.n,
            integral: r.integral,
            scale: r.scale,
            ratio: r.ratio,
            quadrature_change: r.quadrature_change,
        });
    }
    let summary = CurveSummary {
        p,
        q,
        depth,
        pairs,
        seed,
        constant: rows.iter().map(|r| r.ratio).fold(0.0, f64::max),
        max_quadrature_change: rows.iter().map(|r| r.quadrature_change).fold(0.0, f64::max),
    };
    out.csv("curve.csv", &rows)?;
    Ok(out.json("curve.json", &summary)?)
}

#[derive(Serialize)]
struct Domain3dSummary {
    p: f64,
    depth: usize,
    h: f64,
    strict: bool,
    cells: usize,
    removed_cells: usize,
    min_separation: f64,
    hyperbolicity: Option<qhgeo::qh::HyperbolicityReport>,
}

fn domain3d(p: f64, depth: usize, h: f64, strict: bool, samples: usize, seed: u64, out: &mut OutDir) -> Outcome {
    check_exponent("p", p, 2.0)?;
    level_of(h)?;
    let set = build_removable_set(&CantorSpec::new(p, depth)?)?;
    let d = build_3d_domain(&set, h, strict)?;
    let hyp = if samples > 0 {
        let cfg = SampleConfig {
            samples,
            seed,
            ..SampleConfig::default()
        };
        Some(hyperbolicity(&d.domain, &cfg)?)
    } else {
        None
    };
    let s = Domain3dSummary {
        p,
        depth,
        h,
        strict,
        cells: d.domain.occupied_count(),
        removed_cells: d.removed_cells,
        min_separation: d.min_separation,
        hyperbolicity: hyp,
    };
    Ok(out.json("domain3d.json", &s)?)
}
