//! Transverse instability of the line soliton.
//!
//! Perturbations `ε f(x) e^{iky + γt}` of the unit-speed soliton in its
//! co-moving frame lead to a linear ODE system in `x`. Bounded solutions exist
//! exactly where the mismatch determinant `D(k, γ)` vanishes.

mod comoving;
mod experiment;
mod matching;
mod ode;
mod roots;
mod scan;
mod shape;
mod trace;

pub use comoving::{comoving_transform, Comoving};
pub use experiment::{
    deviation_from_soliton, growth_rate_fit, perturbed_initial_state, shape_correlation,
    Deviation, GrowthFit, PerturbationParams,
};
pub use matching::{
    asymptotic_matrices, bidirectional, bidirectional_k0, det_mismatch, det_mismatch_k0,
    far_mode_state, matching_system, mode_split, Bidirectional, DetMethod, FarMode,
    MatchConfig, MatchingSystem, Mismatch, ModeSplit, Side,
};
pub use ode::{
    flow_map, integrate, linearized_rhs, qr_positive, soliton_profile, soliton_slope,
    Integrator, LinearOde, Linearized, LinearizedK0, OdeMethod, Sweep,
};
pub use roots::{
    characteristic_roots, discriminant, g_coupling, max_gamma, small_gamma_roots,
    AsymptoticRoots, RESONANCE_GAP,
};
pub use scan::{scan_determinant, scan_k0, write_scan_csv, CellStatus, ScanCell, ScanWindow};
pub use shape::{perturbation_shape, PerturbationShape, ShapeOptions, ShapeValue, Tails};
pub use trace::{
    band_summary, curve_distance, trace_closed_curve, trace_closed_curve_from, refine_axis_seed, trace_instability_curve, write_trace_csv,
    Band, ClosedTrace, CurvePoint, TraceOptions,
};
