//! Numerical verification of monotonicity, invariance and strong invariance,
//! and a constructive characterization probe for bilinear-form families.
//!
//! Every identity is evaluated through [`witness::evaluate`], so a failing case
//! stored as a [`Witness`] replays to the same bits.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::connections::PushedModel;
use crate::error::{Error, Result};
use crate::geometry::TangentVector;
use crate::markov::{apply, near, Channel, EmbeddingPair};
use crate::models::{fisher_info, invert_spd, StatisticalModel};
use crate::simplex::{check_len, Distribution, RandomVariable};
use crate::tolerance;

pub mod battery;
pub mod family;
pub mod probe;
pub mod witness;

pub use battery::{run_battery, BatteryConfig, BatteryKind, BatteryReport};
pub use family::{bilinearity_residual, Atom, BilinearFamily, CandidateFamily, FnFamily};
pub use probe::{
    characterize, probe_consistency, probe_rational, probe_uniform, Characterization,
    CharacterizeConfig, ContinuityStep, Outcome, RationalProbe, UniformForm,
};
pub use witness::{Witness, WitnessInputs};

/// Classification of a residual against the pass and violation thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    /// Residual at most `PASS`.
    Pass,
    /// Residual in `(PASS, VIOLATION]`; refine before concluding.
    Inconclusive,
    /// Residual above `VIOLATION`.
    Violation,
}

impl Verdict {
    pub fn from_gap(gap: f64) -> Self {
        if gap <= tolerance::PASS {
            Verdict::Pass
        } else if gap <= tolerance::VIOLATION {
            Verdict::Inconclusive
        } else {
            Verdict::Violation
        }
    }

    pub fn worst(self, other: Self) -> Self {
        self.max(other)
    }
}

/// Both sides of one identity or inequality, with the scaled gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    pub verdict: Verdict,
}

impl CheckReport {
    /// `lhs = rhs`, gap `|lhs - rhs| / max(1, |lhs|, |rhs|)`.
    pub fn equality(lhs: f64, rhs: f64) -> Self {
        Self::with_gap(lhs, rhs, tolerance::relative_residual(lhs, rhs))
    }

    /// `lhs <= rhs`, gap `max(0, lhs - rhs) / max(1, |lhs|, |rhs|)`.
    pub fn at_most(lhs: f64, rhs: f64) -> Self {
        let scale = 1f64.max(lhs.abs()).max(rhs.abs());
        Self::with_gap(lhs, rhs, (lhs - rhs).max(0.0) / scale)
    }

    fn with_gap(lhs: f64, rhs: f64, gap: f64) -> Self {
        let gap = if gap.is_nan() { f64::INFINITY } else { gap };
        Self {
            lhs,
            rhs,
            gap,
            verdict: Verdict::from_gap(gap),
        }
    }
}

/// `‖W_* X‖_{W(p)} <= ‖X‖_p`, compared as squared norms.
pub fn check_monotonicity_metric(
    w: &Channel,
    p: &Distribution,
    x: &TangentVector,
) -> Result<CheckReport> {
    if x.base() != p {
        return Err(Error::BasePointMismatch);
    }
    witness::evaluate_report(
        &WitnessInputs::MonotoneMetric {
            channel: w.clone(),
            point: p.weights().to_vec(),
            x: x.m_rep().to_vec(),
        },
        &CandidateFamily::cov(),
    )
}

/// Co-metric monotonicity in its two forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CometricMonotonicity {
    /// `V_p(E_W(A|.)) <= V_{W(p)}(A)`.
    pub variance: CheckReport,
    /// `‖W^* delta(A)‖^2 <= ‖delta(A)‖^2` computed through the pullback.
    pub pullback: CheckReport,
}

pub fn check_monotonicity_cometric(
    w: &Channel,
    p: &Distribution,
    a: &RandomVariable,
) -> Result<CometricMonotonicity> {
    check_len(w.n_out(), a.len())?;
    let inputs = WitnessInputs::MonotoneCometric {
        channel: w.clone(),
        point: p.weights().to_vec(),
        a: a.values().to_vec(),
    };
    let variance = witness::evaluate_report(&inputs, &CandidateFamily::cov())?;
    let q = apply(w, p)?;
    let alpha = crate::geometry::delta(&q, a)?;
    let back = crate::markov::pullback(w, p, &alpha)?;
    let pullback = CheckReport::at_most(
        crate::geometry::fisher_cometric(&back, &back)?,
        crate::geometry::fisher_cometric(&alpha, &alpha)?,
    );
    Ok(CometricMonotonicity { variance, pullback })
}

/// Monotonicity restricted to a model `M` and its image `N = W(M)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelMonotonicity {
    /// `x^T G_N x <= x^T G_M x` for the tangent vector `sum_i x_i d_i`.
    pub metric: CheckReport,
    /// `c^T G_M^{-1} c <= c^T G_N^{-1} c` for `c_i = delta(A)(W_* d_i)`.
    pub cometric: CheckReport,
}

pub fn check_monotonicity_on_model<M: StatisticalModel + ?Sized>(
    w: &Channel,
    model: &M,
    xi: &[f64],
    x: &[f64],
    a: &RandomVariable,
) -> Result<ModelMonotonicity> {
    check_len(model.dim(), x.len())?;
    check_len(w.n_in(), model.space().size())?;
    let image = PushedModel { channel: w, model };
    let g_m = fisher_info(model, xi)?.matrix;
    let g_n = fisher_info(&image, xi)?.matrix;
    let xv = nalgebra::DVector::from_column_slice(x);
    let metric = CheckReport::at_most(
        (xv.transpose() * &g_n * &xv)[0],
        (xv.transpose() * &g_m * &xv)[0],
    );

    let q = image.point(xi)?;
    let alpha = crate::geometry::delta(&q, a)?;
    let c = nalgebra::DVector::from_vec(crate::models::restrict(&image, xi, &alpha)?);
    let lhs = (c.transpose() * invert_spd(&g_m)? * &c)[0];
    let rhs = (c.transpose() * invert_spd(&g_n)? * &c)[0];
    Ok(ModelMonotonicity {
        metric,
        cometric: CheckReport::at_most(lhs, rhs),
    })
}

/// Residuals of the three invariance identity families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    /// `g_p(X, Y) = g_{Phi(p)}(Phi_* X, Phi_* Y)`.
    pub metric: CheckReport,
    /// `g_{q^F}(alpha, beta) = g_q(Psi^* alpha, Psi^* beta)`.
    pub cometric: CheckReport,
    /// `γ_{q^F}(A, B) = γ_q(A∘F, B∘F)`; the covariance identity for `COV`.
    pub covariance: CheckReport,
    pub verdict: Verdict,
}

/// `p` lives on the small space, `q` on the large one; `x`, `y` are at `p`,
/// and `a`, `b` are variables on the small space.
#[allow(clippy::too_many_arguments)]
pub fn check_invariance<F: BilinearFamily + ?Sized>(
    pair: &EmbeddingPair,
    p: &Distribution,
    q: &Distribution,
    x: &TangentVector,
    y: &TangentVector,
    a: &RandomVariable,
    b: &RandomVariable,
    family: &F,
) -> Result<InvarianceReport> {
    if x.base() != p || y.base() != p {
        return Err(Error::BasePointMismatch);
    }
    let metric = witness::evaluate_report(
        &WitnessInputs::EmbeddingMetric {
            pair: pair.clone(),
            point: p.weights().to_vec(),
            x: x.m_rep().to_vec(),
            y: y.m_rep().to_vec(),
        },
        family,
    )?;
    let cometric = witness::evaluate_report(
        &WitnessInputs::EmbeddingCometric {
            pair: pair.clone(),
            point: q.weights().to_vec(),
            a: a.values().to_vec(),
            b: b.values().to_vec(),
        },
        family,
    )?;
    let covariance = witness::evaluate_report(
        &WitnessInputs::Invariance {
            surjection: pair.surjection().clone(),
            point: q.weights().to_vec(),
            a: a.values().to_vec(),
            b: b.values().to_vec(),
        },
        family,
    )?;
    Ok(InvarianceReport {
        verdict: metric
            .verdict
            .worst(cometric.verdict)
            .worst(covariance.verdict),
        metric,
        cometric,
        covariance,
    })
}

/// Matrix residuals of the adjoint and projector identities in g-orthonormal bases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdjointResiduals {
    /// `max |Psi_* - Phi_*^T|`.
    pub adjoint: f64,
    /// `max |P^2 - P|` for `P = Phi_* Psi_*`.
    pub idempotence: f64,
    /// `max |P - P^T|`.
    pub symmetry: f64,
    /// `max |P Phi_* - Phi_*|`.
    pub fixes_image: f64,
    /// `max |Psi_* Phi_* - I|`.
    pub left_inverse: f64,
    /// `max |Phi_*^T Phi_* - I|`.
    pub isometry: f64,
    /// `max |Psi_* Psi_*^T - I|`.
    pub coisometry: f64,
}

impl AdjointResiduals {
    pub fn max(&self) -> f64 {
        [
            self.adjoint,
            self.idempotence,
            self.symmetry,
            self.fixes_image,
            self.left_inverse,
            self.isometry,
            self.coisometry,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Orthonormal basis of `T_p` as columns of m-representations.
fn orthonormal_basis(p: &Distribution) -> Result<DMatrix<f64>> {
    let n = p.len();
    let basis = DMatrix::from_fn(n, n - 1, |r, c| {
        if r == c {
            1.0
        } else if r == n - 1 {
            -1.0
        } else {
            0.0
        }
    });
    let inv_p = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        p.weights().iter().map(|w| 1.0 / w),
    ));
    let gram = basis.transpose() * &inv_p * &basis;
    let chol = gram.cholesky().ok_or(Error::SingularMatrix)?;
    let l_inv_t = chol
        .l()
        .try_inverse()
        .ok_or(Error::SingularMatrix)?
        .transpose();
    Ok(basis * l_inv_t)
}

fn metric_diag(p: &Distribution) -> DMatrix<f64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        p.len(),
        p.weights().iter().map(|w| 1.0 / w),
    ))
}

fn kernel_matrix(c: &Channel) -> DMatrix<f64> {
    DMatrix::from_fn(c.n_out(), c.n_in(), |y, x| c.at(y, x))
}

/// Matrices of `Phi_*` at `p` and `Psi_*` at `Phi(p)` in g-orthonormal bases.
pub fn adjoint_residuals(pair: &EmbeddingPair, p: &Distribution) -> Result<AdjointResiduals> {
    let phi = pair.embedding_channel();
    let psi = pair.coembedding_channel();
    check_len(phi.n_in(), p.len())?;
    let q = apply(&phi, p)?;
    let u = orthonormal_basis(p)?;
    let w = orthonormal_basis(&q)?;
    let a = w.transpose() * metric_diag(&q) * kernel_matrix(&phi) * &u;
    let b = u.transpose() * metric_diag(p) * kernel_matrix(&psi) * &w;
    let proj = &a * &b;
    let eye_small = DMatrix::<f64>::identity(a.ncols(), a.ncols());
    let amax = |m: DMatrix<f64>| m.amax();
    Ok(AdjointResiduals {
        adjoint: amax(&b - a.transpose()),
        idempotence: amax(&proj * &proj - &proj),
        symmetry: amax(&proj - proj.transpose()),
        fixes_image: amax(&proj * &a - &a),
        left_inverse: amax(&b * &a - &eye_small),
        isometry: amax(a.transpose() * &a - &eye_small),
        coisometry: amax(&b * b.transpose() - &eye_small),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrongInvarianceReport {
    pub matrices: AdjointResiduals,
    /// Matrix residuals against the `1e-8` threshold.
    pub adjoint: CheckReport,
    /// `γ_{q^F}(A, E_V(B|.)) = γ_q(A∘F, B)`.
    pub covariance: CheckReport,
    pub verdict: Verdict,
}

/// Strong invariance at `q`, which must lie in the image of the embedding.
pub fn check_strong_invariance<F: BilinearFamily + ?Sized>(
    pair: &EmbeddingPair,
    q: &Distribution,
    a: &RandomVariable,
    b: &RandomVariable,
    family: &F,
) -> Result<StrongInvarianceReport> {
    let psi = pair.coembedding_channel();
    check_len(psi.n_in(), q.len())?;
    let p = apply(&psi, q)?;
    if !near(&apply(&pair.embedding_channel(), &p)?, q) {
        return Err(Error::BasePointMismatch);
    }
    let matrices = adjoint_residuals(pair, &p)?;
    let adjoint = adjoint_report(matrices.max());
    let covariance = witness::evaluate_report(
        &WitnessInputs::StrongCovariance {
            pair: pair.clone(),
            point: q.weights().to_vec(),
            a: a.values().to_vec(),
            b: b.values().to_vec(),
        },
        family,
    )?;
    Ok(StrongInvarianceReport {
        matrices,
        adjoint,
        covariance,
        verdict: adjoint.verdict.worst(covariance.verdict),
    })
}

/// Adjoint residuals are judged against `PSD` (1e-8) rather than `PASS`.
pub(crate) fn adjoint_report(residual: f64) -> CheckReport {
    let verdict = if residual <= tolerance::PSD {
        Verdict::Pass
    } else if residual <= tolerance::VIOLATION {
        Verdict::Inconclusive
    } else {
        Verdict::Violation
    };
    CheckReport {
        lhs: residual,
        rhs: 0.0,
        gap: residual,
        verdict,
    }
}

/// The cotangent-level identity `h_p(alpha, Phi^* beta) = h_{Phi(p)}(Psi^* alpha, beta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PullbackIdentityReport {
    /// The identity on centered representatives.
    pub identity: CheckReport,
    /// `γ_p(alpha + 1, Phi^* beta + 1) = γ_p(alpha, Phi^* beta)`: whether the family
    /// is defined on covectors at all rather than on representatives.
    pub representative: CheckReport,
    pub verdict: Verdict,
}

/// `p` on the small space, `a` on the small space, `b` on the large space.
pub fn check_pullback_identity<F: BilinearFamily + ?Sized>(
    pair: &EmbeddingPair,
    p: &Distribution,
    a: &RandomVariable,
    b: &RandomVariable,
    family: &F,
) -> Result<PullbackIdentityReport> {
    let [identity, representative] = pullback_identity_inputs(pair, p, a.values(), b.values())?;
    let identity = witness::evaluate_report(&identity, family)?;
    let representative = witness::evaluate_report(&representative, family)?;
    Ok(PullbackIdentityReport {
        verdict: identity.verdict.worst(representative.verdict),
        identity,
        representative,
    })
}

/// The identity itself and the representative-independence check on
/// `(delta_p A, Phi^* delta B)`.
pub(crate) fn pullback_identity_inputs(
    pair: &EmbeddingPair,
    p: &Distribution,
    a: &[f64],
    b: &[f64],
) -> Result<[WitnessInputs; 2]> {
    let phi = pair.embedding_channel();
    let alpha = crate::geometry::delta(p, &RandomVariable::new(a.to_vec()))?;
    let beta = crate::geometry::delta(&apply(&phi, p)?, &RandomVariable::new(b.to_vec()))?;
    let pulled = crate::markov::pullback(&phi, p, &beta)?;
    Ok([
        WitnessInputs::PullbackIdentity {
            pair: pair.clone(),
            point: p.weights().to_vec(),
            a: a.to_vec(),
            b: b.to_vec(),
        },
        WitnessInputs::Representative {
            point: p.weights().to_vec(),
            a: alpha.rep().values().to_vec(),
            b: pulled.rep().values().to_vec(),
            shift: 1.0,
        },
    ])
}
