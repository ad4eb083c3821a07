//! Thresholds for the acceptance run, one place for every number.

/// Criterion 1: per-domain runtime and grid.
pub const WHITNEY_H: f64 = 1.0 / 256.0;
pub const WHITNEY_SECONDS: f64 = 5.0;

/// Criterion 2.
pub const METRIC_H: f64 = 1.0 / 1024.0;
pub const LN2_RELATIVE: f64 = 0.05;
/// Symmetry and triangle checks run on a coarser grid; the tolerance is
/// absolute on distances of order one.
pub const METRIC_SAMPLE_H: f64 = 1.0 / 128.0;
pub const METRIC_SAMPLES: usize = 1000;
pub const METRIC_IDENTITY: f64 = 1e-9;
pub const METRIC_SECONDS: f64 = 30.0;

/// Criteria 3 to 5 share the decomposition parameters.
pub const DECOMPOSITION_H: f64 = 1.0 / 512.0;
pub const C1: f64 = 0.5;
pub const M_RANGE: std::ops::RangeInclusive<i32> = 4..=8;
/// Overlap maxima stay within ±1 of one value, i.e. spread at most 2.
pub const COUNT_SPREAD: usize = 2;
pub const DECOMPOSITION_SECONDS: f64 = 120.0;

/// Criterion 4 runs all test domains on a coarser grid.
pub const PARTITION_H: f64 = 1.0 / 256.0;
pub const PARTITION_IDENTITY: f64 = 1e-9;

/// Criterion 5.
pub const SPIKE_ALPHA: f64 = 0.1;
pub const DENSITY_P: f64 = 2.0;
pub const FINAL_RELATIVE_ERROR: f64 = 0.05;
pub const CONSTANT_ERROR: f64 = 1e-12;
pub const DENSITY_SECONDS: f64 = 300.0;

/// Criterion 6.
pub const HYPERBOLICITY_COARSE_H: f64 = 1.0 / 128.0;
pub const HYPERBOLICITY_SAMPLES: usize = 32;
pub const HYPERBOLICITY_STABILITY: f64 = 0.20;
/// Samples stay this far from the boundary so that both grids see the
/// same points.
pub const HYPERBOLICITY_MIN_DISTANCE: f64 = 0.1;
pub const SLAB_H: f64 = 1.0 / 128.0;
/// Coarse grid for the non-strict diagnostic; it cannot resolve the boxes.
pub const SLAB_DIAGNOSTIC_H: f64 = 1.0 / 32.0;
pub const SLAB_DEPTHS: [usize; 3] = [4, 6, 8];
pub const SLAB_P: f64 = 3.0;
pub const HYPERBOLICITY_SECONDS: f64 = 900.0;

/// Criterion 7: algebraic identities in f64.
pub const CANTOR_DEPTH: usize = 30;
pub const CANTOR_RESIDUAL: f64 = 1e-12;
/// A sum of `depth + 1` interval lengths of size at most one carries at
/// most a few ulps per term.
pub const FAT_MEASURE: f64 = 32.0 * f64::EPSILON;

/// Criterion 8.
pub const ENERGY_N_MIN: usize = 50;
pub const ENERGY_N_MAX: usize = 200;
pub const RATIO_RELATIVE: f64 = 0.01;

/// Criterion 9.
pub const CURVE_DEPTH: usize = 12;
pub const CURVE_PAIRS: usize = 100;
pub const CURVE_QUADRATURE: f64 = 0.01;
pub const SERIES_TERMS: usize = 1024;

/// Criterion 10.
pub const TRACE_DEPTH: usize = 12;
pub const TRACE_SUPPORT_RELATIVE: f64 = 1e-12;
