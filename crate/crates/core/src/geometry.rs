//! Tangent and cotangent calculus on the open simplex.
//!
//! A tangent vector at `p` is stored by its m-representation, a sum-zero
//! vector of probability increments. A cotangent vector is a class of random
//! variables modulo constants; we store the representative centered at the
//! base point, so the Fisher co-metric is a plain weighted dot product.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::{check_len, Distribution, RandomVariable, SampleSpace};
use crate::tolerance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TangentJson", into = "TangentJson")]
pub struct TangentVector {
    base: Distribution,
    m_rep: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct TangentJson {
    p: Vec<f64>,
    m_rep: Vec<f64>,
}

impl TryFrom<TangentJson> for TangentVector {
    type Error = Error;

    fn try_from(raw: TangentJson) -> Result<Self> {
        TangentVector::new(Distribution::from_weights(&raw.p)?, raw.m_rep)
    }
}

impl From<TangentVector> for TangentJson {
    fn from(x: TangentVector) -> Self {
        Self {
            p: x.base.weights().to_vec(),
            m_rep: x.m_rep,
        }
    }
}

impl TangentVector {
    /// Validates that `m_rep` sums to zero.
    pub fn new(base: Distribution, m_rep: Vec<f64>) -> Result<Self> {
        check_len(base.len(), m_rep.len())?;
        if let Some(i) = m_rep.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let sum: f64 = m_rep.iter().sum();
        let scale: f64 = m_rep.iter().map(|v| v.abs()).sum();
        if sum.abs() > tolerance::CENTERING * (1.0 + scale) {
            return Err(Error::NotTangent(sum));
        }
        Ok(Self { base, m_rep })
    }

    /// Projects `m_rep` onto the sum-zero hyperplane before wrapping it.
    ///
    /// Used for quantities that are tangent in exact arithmetic but carry
    /// rounding noise, e.g. finite-difference derivatives.
    pub fn projected(base: Distribution, mut m_rep: Vec<f64>) -> Result<Self> {
        check_len(base.len(), m_rep.len())?;
        let mean = m_rep.iter().sum::<f64>() / m_rep.len() as f64;
        m_rep.iter_mut().for_each(|v| *v -= mean);
        Self::new(base, m_rep)
    }

    pub fn zero(base: Distribution) -> Self {
        let n = base.len();
        Self {
            base,
            m_rep: vec![0.0; n],
        }
    }

    pub(crate) fn raw(base: Distribution, m_rep: Vec<f64>) -> Self {
        debug_assert_eq!(base.len(), m_rep.len());
        Self { base, m_rep }
    }

    pub fn base(&self) -> &Distribution {
        &self.base
    }

    pub fn m_rep(&self) -> &[f64] {
        &self.m_rep
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::raw(
            self.base.clone(),
            self.m_rep.iter().map(|v| c * v).collect(),
        )
    }

    /// `sum_i coeffs[i] * vectors[i]`, all based at `base`.
    pub fn combination(
        base: &Distribution,
        coeffs: &[f64],
        vectors: &[TangentVector],
    ) -> Result<Self> {
        check_len(vectors.len(), coeffs.len())?;
        let mut m_rep = vec![0.0; base.len()];
        for (c, v) in coeffs.iter().zip(vectors) {
            if &v.base != base {
                return Err(Error::BasePointMismatch);
            }
            for (acc, x) in m_rep.iter_mut().zip(&v.m_rep) {
                *acc += c * x;
            }
        }
        Ok(Self::raw(base.clone(), m_rep))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CotangentJson", into = "CotangentJson")]
pub struct CotangentVector {
    base: Distribution,
    rep: RandomVariable,
}

#[derive(Serialize, Deserialize)]
struct CotangentJson {
    p: Vec<f64>,
    rep: Vec<f64>,
}

impl TryFrom<CotangentJson> for CotangentVector {
    type Error = Error;

    fn try_from(raw: CotangentJson) -> Result<Self> {
        CotangentVector::new(Distribution::from_weights(&raw.p)?, raw.rep.into())
    }
}

impl From<CotangentVector> for CotangentJson {
    fn from(a: CotangentVector) -> Self {
        Self {
            p: a.base.weights().to_vec(),
            rep: a.rep.into_values(),
        }
    }
}

impl CotangentVector {
    /// Wraps an already-centered representative; rejects it otherwise.
    pub fn new(base: Distribution, rep: RandomVariable) -> Result<Self> {
        let mean = base.expect(&rep)?;
        let scale: f64 = base
            .weights()
            .iter()
            .zip(rep.values())
            .map(|(p, v)| p * v.abs())
            .sum();
        if mean.abs() > tolerance::CENTERING * (1.0 + scale) {
            return Err(Error::NotCentered(mean));
        }
        Ok(Self { base, rep })
    }

    pub fn zero(base: Distribution) -> Self {
        let rep = RandomVariable::constant(base.space(), 0.0);
        Self { base, rep }
    }

    pub fn base(&self) -> &Distribution {
        &self.base
    }

    /// The representative centered at the base point.
    pub fn rep(&self) -> &RandomVariable {
        &self.rep
    }

    pub fn space(&self) -> SampleSpace {
        self.base.space()
    }
}

/// `delta_p(A) = (d<A>)_p`, stored as `A - <A>_p`.
pub fn delta(p: &Distribution, a: &RandomVariable) -> Result<CotangentVector> {
    let mean = p.expect(a)?;
    Ok(CotangentVector {
        base: p.clone(),
        rep: a.shifted(mean),
    })
}

/// `alpha(X) = sum_w X^(m)(w) rep(w)`.
pub fn pair(alpha: &CotangentVector, x: &TangentVector) -> Result<f64> {
    same_base(&alpha.base, &x.base)?;
    Ok(x.m_rep
        .iter()
        .zip(alpha.rep.values())
        .map(|(m, a)| m * a)
        .sum())
}

/// e-representation (score) `L_X = X^(m) / p`.
pub fn e_rep(x: &TangentVector) -> RandomVariable {
    x.m_rep
        .iter()
        .zip(x.base.weights())
        .map(|(m, p)| m / p)
        .collect::<Vec<_>>()
        .into()
}

/// Inverse of [`e_rep`]: `X^(m) = p * L`, requiring `<L>_p = 0`.
pub fn from_e_rep(p: &Distribution, l: &RandomVariable) -> Result<TangentVector> {
    let centered = CotangentVector::new(p.clone(), l.clone())?;
    Ok(sharp(&centered))
}

/// Fisher metric `g_p(X, Y) = <L_X | L_Y>_p`.
pub fn fisher_metric(x: &TangentVector, y: &TangentVector) -> Result<f64> {
    same_base(&x.base, &y.base)?;
    Ok(x.m_rep
        .iter()
        .zip(&y.m_rep)
        .zip(x.base.weights())
        .map(|((a, b), p)| a * b / p)
        .sum())
}

/// Fisher co-metric `g_p(delta A, delta B) = Cov_p(A, B)`.
pub fn fisher_cometric(alpha: &CotangentVector, beta: &CotangentVector) -> Result<f64> {
    same_base(&alpha.base, &beta.base)?;
    alpha.base.cov(&alpha.rep, &beta.rep)
}

/// Lowers an index: the covector `Y -> g(X, Y)`, whose centered representative is `L_X`.
pub fn flat(x: &TangentVector) -> CotangentVector {
    CotangentVector {
        base: x.base.clone(),
        rep: e_rep(x),
    }
}

/// Raises an index: the tangent vector whose score is the centered representative.
pub fn sharp(alpha: &CotangentVector) -> TangentVector {
    let m_rep = alpha
        .rep
        .values()
        .iter()
        .zip(alpha.base.weights())
        .map(|(a, p)| a * p)
        .collect();
    TangentVector::raw(alpha.base.clone(), m_rep)
}

pub fn norm_tangent(x: &TangentVector) -> f64 {
    fisher_metric(x, x).unwrap_or(0.0).max(0.0).sqrt()
}

pub fn norm_cotangent(alpha: &CotangentVector) -> f64 {
    fisher_cometric(alpha, alpha).unwrap_or(0.0).max(0.0).sqrt()
}

pub(crate) fn same_base(a: &Distribution, b: &Distribution) -> Result<()> {
    if a != b {
        return Err(Error::BasePointMismatch);
    }
    Ok(())
}
