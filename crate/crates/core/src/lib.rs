//! Free multiplicative convolution of probability distributions through the
//! S-transform.
//!
//! The crate covers both the classical situation, where every factor has a
//! nonzero mean and the S-transform is an ordinary power series, and the
//! vanishing-mean situation, where the moment series starts at `z²` and its
//! compositional inverse only exists as one of two series in `√z`.
//!
//! Everything here is `no_std` (with `alloc`): truncated half-integer series
//! ([`series`]), moment / cumulant / S-transform conversions
//! ([`transforms`]), the convolution itself ([`convolution`]), a brute-force
//! non-crossing partition oracle ([`oracle`]), closed-form laws ([`laws`]) and
//! spectral densities from algebraic Cauchy-transform equations
//! ([`density`]).

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod convolution;
pub mod density;
pub mod error;
pub mod laws;
pub mod oracle;
pub mod series;
pub mod transforms;

pub use convolution::{
    auxiliary_series, free_mult_convolve, free_mult_convolve_with_tol, second_moment_identity,
    verify_proof_identities, AuxiliarySeries, CaseTag, ConvolutionResult, IdentityReport,
    IdentityResidual,
};
pub use density::{
    approx_density_from_moments, builtin_curve, cauchy_from_moments, jacobi_coefficients,
    polynomial_roots, solve_cauchy_transform, solve_density, uniform_grid, AlgebraicCurve,
    BuiltinCurve, DensityCurve, JacobiCoefficients,
};
pub use error::{Error, Result};
pub use laws::{cumulants_of, moments_of, s_closed_form, LawSpec};
pub use oracle::{
    enumerate_nc, for_each_nc, mixed_moment_enumerated, mixed_moment_xy,
    moment_from_cumulants_nc, NonCrossingPartition, Word, MAX_ENUMERATION_ORDER,
};
pub use series::HalfSeries;
pub use transforms::{
    branch_moments, cumulants_from_moments, moments_from_cumulants, moments_from_s,
    moments_from_s_with_tol, psi_from_moments, s_transform, CumulantSequence, MeanClass,
    MomentSequence, STransform,
};

/// Default coefficientwise comparison tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Default number of moments carried through a computation.
pub const DEFAULT_ORDER: usize = 12;

/// Default Stieltjes regularization height.
pub const DEFAULT_EPSILON: f64 = 1e-4;

/// Default density grid spacing.
pub const DEFAULT_GRID_STEP: f64 = 1e-3;

/// Default order for oracle-backed checks (word length `2 * order` must stay
/// within [`MAX_ENUMERATION_ORDER`]).
pub const DEFAULT_ORACLE_ORDER: usize = 8;

/// `|a - b| <= tol * max(1, |a|, |b|)`.
pub(crate) fn close(a: f64, b: f64, tol: f64) -> bool {
    let scale = 1f64.max(num_traits::Float::abs(a)).max(num_traits::Float::abs(b));
    num_traits::Float::abs(a - b) <= tol * scale
}
