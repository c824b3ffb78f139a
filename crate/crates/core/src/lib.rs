//! Magnon and photon blockade in a driven cavity magnomechanical system with
//! magnon squeezing.
//!
//! The core is generic over the real scalar ([`Real`], implemented for `f32`
//! and `f64`); the `*64` aliases below fix it to `f64`, which is what the
//! command-line front end uses.
//!
//! Units: rates and frequencies are in units of the cavity linewidth κ
//! (and ω_b = κ in the reference configuration); times are in 1/κ.

pub mod amplitudes;
pub mod cli;
pub mod error;
pub mod lindblad;
pub mod model;
pub mod operators;
pub mod optimizer;
pub mod scalar;

pub use amplitudes::{
    analytic_ingredients, evolve_amplitudes, g2_analytic, steady_amplitudes_closed, steady_amplitudes_linear,
    AmplitudeState,
};
pub use error::{Error, Result};
pub use lindblad::{
    build_liouvillian, evolve, g2_numeric, g2_tau, g2_zero, steady_state, DensityMatrix, DephasingTarget, Liouvillian,
    NumericOptions, Propagation,
};
pub use model::{build_h1, build_h2, Dissipator, SystemParams};
pub use operators::{ComplexOperator, Mode, ModeOperators, Truncation};
pub use optimizer::{
    find_optimum, scan, CorrelationCurve, CurvePoint, Engine, Optimum, ScanVariable, SearchBounds, SearchSettings,
};
pub use scalar::{Cplx, Real};

pub type SystemParams64 = SystemParams<f64>;
pub type ComplexOperator64 = ComplexOperator<f64>;
pub type AmplitudeState64 = AmplitudeState<f64>;
pub type DensityMatrix64 = DensityMatrix<f64>;
pub type Liouvillian64 = Liouvillian<f64>;
pub type CorrelationCurve64 = CorrelationCurve<f64>;
pub type Optimum64 = Optimum<f64>;
