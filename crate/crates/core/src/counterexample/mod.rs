//! Cantor-set constructions behind the non-density example: the thin set
//! `C`, the fat set `F`, the product `E = C × F`, the step function on its
//! complement, energy and removability estimates, and the 3-D domain.

mod cantor;
mod domain3d;
mod energy;
mod field;

pub use cantor::{
    box_dimension, build_fat_cantor, build_lewis_cantor, build_thin_cantor, cantor_lambda, closed_form_product,
    closed_form_ratio, first_normalized_index, lewis_gap, thin_gaps, CantorSpec, FatCantor, Gap, IntervalSet,
    LewisCantor,
};
pub use field::{build_removable_set, trace_variation, RemovableSet, StepField, TraceReport};
pub use energy::{
    criterion_series, curve_condition, gradient_energy, removability_exponent, strip_energy, CriterionSeries,
    CurveEstimate, EnergySeries, EnergyTerm, StripEnergy,
};
pub use domain3d::{
    build_3d_domain, in_domain, kappa, lift_function, slab_distance, squash_distortion, squash_map, Distortion,
    Domain3d, SLAB_TOP,
};
