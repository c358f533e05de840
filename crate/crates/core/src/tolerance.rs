//! Numerical tolerances shared across the crate.
//!
//! Every threshold used by a check or a verdict lives here so reports can
//! echo the exact values they were judged against.

/// Weights at or below this value are rejected as not strictly positive.
pub const POSITIVITY_FLOOR: f64 = 1e-12;

/// Absolute tolerance on `sum(p) == 1`.
pub const NORMALIZATION: f64 = 1e-12;

/// Tolerance for `sum(m_rep) == 0` and `<rep>_p == 0`, scaled by `1 + l1 norm`.
pub const CENTERING: f64 = 1e-10;

/// Column sums of a channel kernel must be within this of 1.
pub const CHANNEL_COLUMN: f64 = 1e-12;

/// Smallest/largest singular value ratio below which a Jacobian is rank deficient.
pub const RANK_RATIO: f64 = 1e-8;

/// Relative step for central-difference Jacobians: `h = STEP * max(1, |xi|)`.
pub const JACOBIAN_STEP: f64 = 1e-6;

/// Default step for connection finite differences.
pub const CONNECTION_STEP: f64 = 1e-4;

/// Local unbiasedness: `|restrict(delta(A^i)) - e_i|` must stay below this.
pub const UNBIASEDNESS: f64 = 1e-8;

/// PSD verdict: min eigenvalue >= -PSD * (1 + ||G^-1||_2).
pub const PSD: f64 = 1e-8;

/// CRB equality flag: ||V - G^-1||_2 <= EQUALITY * (1 + ||G^-1||_2).
pub const EQUALITY: f64 = 1e-9;

/// Residuals at or below this pass.
pub const PASS: f64 = 1e-9;

/// Gaps above this are genuine counterexamples; the band in between is inconclusive.
pub const VIOLATION: f64 = 1e-6;

/// Relative residual `|a - b| / max(1, |a|, |b|)`.
pub fn relative_residual(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}
