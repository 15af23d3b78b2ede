//! Eigenvalue asymptotics for `-u'' + [(-1)^ell (iz)^m - P(iz)] u = lambda u`
//! with decay along the rays `arg z = -pi/2 +- (ell+1) pi/(m+2)`.
//!
//! The crate provides the coefficients of the quantization condition and the
//! resulting eigenvalue expansion ([`coeffs`], [`asym`]), a complex-plane
//! shooting eigensolver to check them against ([`shoot`]), and reconstruction
//! of potential coefficients from eigenvalue data ([`inverse`]).
//!
//! Every routine is generic over the scalar type ([`Real`]); the aliases
//! below fix it to `f64`, which is what the tolerances are tuned for.

pub mod asym;
pub mod coeffs;
pub mod error;
pub mod inverse;
pub mod linalg;
pub mod ode;
pub mod oracle;
pub mod quad;
pub mod scalar;
pub mod shoot;
pub mod specfun;

pub use error::{Error, Result};
pub use scalar::Real;

pub use num_complex::Complex;

pub type C64 = Complex<f64>;
pub type ProblemSpecF64 = coeffs::ProblemSpec<f64>;
pub type AsymptoticModelF64 = asym::AsymptoticModel<f64>;
pub type ShootingConfigF64 = shoot::ShootingConfig<f64>;
pub type EigenvalueRecordF64 = shoot::EigenvalueRecord<f64>;
pub type InverseProblemF64 = inverse::InverseProblem<f64>;

pub type C32 = Complex<f32>;
pub type ProblemSpecF32 = coeffs::ProblemSpec<f32>;
pub type AsymptoticModelF32 = asym::AsymptoticModel<f32>;
pub type ShootingConfigF32 = shoot::ShootingConfig<f32>;
pub type EigenvalueRecordF32 = shoot::EigenvalueRecord<f32>;
pub type InverseProblemF32 = inverse::InverseProblem<f32>;
