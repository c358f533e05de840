//! Parametric submanifolds of the simplex.
//!
//! A model is a smooth map `xi -> p_xi` together with its Jacobian, whose
//! columns `d_i p_xi` are the m-representations of the coordinate vectors.
//! On top of that we compute scores, the Fisher information matrix and its
//! inverse, restriction and minimum-norm lifting of covectors, and the
//! Cramér–Rao check for estimator tuples.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, delta, flat, CotangentVector, TangentVector};
use crate::simplex::{check_len, Distribution, RandomVariable, SampleSpace};
use crate::tolerance;

/// A smooth parametrization of a submanifold of `P(Ω)`.
pub trait StatisticalModel: Send + Sync {
    fn space(&self) -> SampleSpace;

    fn dim(&self) -> usize;

    /// `p_xi`, or `InvalidParameter` outside the admissible region.
    fn point(&self, xi: &[f64]) -> Result<Distribution>;

    /// Columns `d_i p_xi`, one per parameter. Defaults to central differences.
    fn jacobian(&self, xi: &[f64]) -> Result<Vec<Vec<f64>>> {
        central_difference_jacobian(self, xi)
    }
}

/// Central-difference Jacobian with step `1e-6 * max(1, |xi_i|)`.
///
/// Each column is projected onto the sum-zero hyperplane to strip rounding.
pub fn central_difference_jacobian<M: StatisticalModel + ?Sized>(
    model: &M,
    xi: &[f64],
) -> Result<Vec<Vec<f64>>> {
    check_len(model.dim(), xi.len())?;
    let mut columns = Vec::with_capacity(xi.len());
    let mut shifted = xi.to_vec();
    for i in 0..xi.len() {
        let h = tolerance::JACOBIAN_STEP * xi[i].abs().max(1.0);
        shifted[i] = xi[i] + h;
        let plus = model.point(&shifted)?;
        shifted[i] = xi[i] - h;
        let minus = model.point(&shifted)?;
        shifted[i] = xi[i];
        let mut col: Vec<f64> = plus
            .weights()
            .iter()
            .zip(minus.weights())
            .map(|(a, b)| (a - b) / (2.0 * h))
            .collect();
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        col.iter_mut().for_each(|v| *v -= mean);
        columns.push(col);
    }
    Ok(columns)
}

/// Wraps a model so that its Jacobian is always taken by finite differences.
#[derive(Debug, Clone)]
pub struct NumericJacobian<M>(pub M);

impl<M: StatisticalModel> StatisticalModel for NumericJacobian<M> {
    fn space(&self) -> SampleSpace {
        self.0.space()
    }

    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn point(&self, xi: &[f64]) -> Result<Distribution> {
        self.0.point(xi)
    }
}

/// Built-in model families.
///
/// JSON form: `{"kind": "bernoulli" | "categorical" | "expfam" | "affine", "n": .., ..}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelJson", into = "ModelJson")]
pub enum Model {
    /// `p_theta = (theta, 1 - theta)`.
    Bernoulli,
    /// Full simplex in mixture coordinates `(p_1, .., p_{n-1})`.
    Categorical { n: usize },
    /// `p_theta ∝ base * exp(sum_i theta_i T_i)`.
    ExponentialFamily {
        base: Vec<f64>,
        stats: Vec<Vec<f64>>,
    },
    /// Mixture family `origin + sum_i xi_i v_i`.
    Affine {
        origin: Vec<f64>,
        directions: Vec<Vec<f64>>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum ModelJson {
    Bernoulli {
        n: usize,
    },
    Categorical {
        n: usize,
    },
    Expfam {
        n: usize,
        base: Vec<f64>,
        stats: Vec<Vec<f64>>,
    },
    Affine {
        n: usize,
        origin: Vec<f64>,
        directions: Vec<Vec<f64>>,
    },
}

impl TryFrom<ModelJson> for Model {
    type Error = Error;

    fn try_from(raw: ModelJson) -> Result<Self> {
        match raw {
            ModelJson::Bernoulli { n } => {
                if n != 2 {
                    return Err(Error::InvalidParameter(format!(
                        "bernoulli model lives on n = 2, got {n}"
                    )));
                }
                Ok(Model::Bernoulli)
            }
            ModelJson::Categorical { n } => Model::categorical(n),
            ModelJson::Expfam { n, base, stats } => {
                check_len(n, base.len())?;
                Model::exponential_family(base, stats)
            }
            ModelJson::Affine {
                n,
                origin,
                directions,
            } => {
                check_len(n, origin.len())?;
                Model::affine(origin, directions)
            }
        }
    }
}

impl From<Model> for ModelJson {
    fn from(m: Model) -> Self {
        match m {
            Model::Bernoulli => ModelJson::Bernoulli { n: 2 },
            Model::Categorical { n } => ModelJson::Categorical { n },
            Model::ExponentialFamily { base, stats } => ModelJson::Expfam {
                n: base.len(),
                base,
                stats,
            },
            Model::Affine { origin, directions } => ModelJson::Affine {
                n: origin.len(),
                origin,
                directions,
            },
        }
    }
}

impl Model {
    pub fn bernoulli() -> Self {
        Model::Bernoulli
    }

    pub fn categorical(n: usize) -> Result<Self> {
        SampleSpace::new(n)?;
        Ok(Model::Categorical { n })
    }

    /// `base` must be strictly positive (it need not be normalized).
    pub fn exponential_family(base: Vec<f64>, stats: Vec<Vec<f64>>) -> Result<Self> {
        let n = SampleSpace::new(base.len())?.size();
        if let Some((index, &value)) = base
            .iter()
            .enumerate()
            .find(|(_, &b)| b.is_nan() || b <= 0.0)
        {
            return Err(Error::NonPositiveWeight { index, value });
        }
        check_dims(n, &stats)?;
        Ok(Model::ExponentialFamily { base, stats })
    }

    /// `origin` must sum to one and every direction to zero.
    pub fn affine(origin: Vec<f64>, directions: Vec<Vec<f64>>) -> Result<Self> {
        let n = SampleSpace::new(origin.len())?.size();
        let total: f64 = origin.iter().sum();
        if (total - 1.0).abs() > tolerance::NORMALIZATION {
            return Err(Error::NotNormalized(total));
        }
        check_dims(n, &directions)?;
        for v in &directions {
            let s: f64 = v.iter().sum();
            if s.abs() > tolerance::CENTERING * (1.0 + v.iter().map(|x| x.abs()).sum::<f64>()) {
                return Err(Error::NotTangent(s));
            }
        }
        Ok(Model::Affine { origin, directions })
    }
}

fn check_dims(n: usize, rows: &[Vec<f64>]) -> Result<()> {
    if rows.is_empty() || rows.len() > n - 1 {
        return Err(Error::InvalidParameter(format!(
            "model dimension {} must lie in 1..={}",
            rows.len(),
            n - 1
        )));
    }
    for row in rows {
        check_len(n, row.len())?;
        if let Some(i) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
    }
    Ok(())
}

fn admissible(weights: Vec<f64>, xi: &[f64]) -> Result<Distribution> {
    Distribution::from_weights(&weights)
        .map_err(|e| Error::InvalidParameter(format!("xi = {xi:?} is not admissible: {e}")))
}

impl StatisticalModel for Model {
    fn space(&self) -> SampleSpace {
        let n = match self {
            Model::Bernoulli => 2,
            Model::Categorical { n } => *n,
            Model::ExponentialFamily { base, .. } => base.len(),
            Model::Affine { origin, .. } => origin.len(),
        };
        SampleSpace::new(n).expect("validated at construction")
    }

    fn dim(&self) -> usize {
        match self {
            Model::Bernoulli => 1,
            Model::Categorical { n } => n - 1,
            Model::ExponentialFamily { stats, .. } => stats.len(),
            Model::Affine { directions, .. } => directions.len(),
        }
    }

    fn point(&self, xi: &[f64]) -> Result<Distribution> {
        check_len(self.dim(), xi.len())?;
        if let Some(i) = xi.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        match self {
            Model::Bernoulli => {
                let t = xi[0];
                if !(t > 0.0 && t < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "theta = {t} outside (0, 1)"
                    )));
                }
                admissible(vec![t, 1.0 - t], xi)
            }
            Model::Categorical { .. } => {
                let last = 1.0 - xi.iter().sum::<f64>();
                let mut w = xi.to_vec();
                w.push(last);
                admissible(w, xi)
            }
            Model::ExponentialFamily { base, stats } => {
                let logits: Vec<f64> = (0..base.len())
                    .map(|w| {
                        base[w].ln() + stats.iter().zip(xi).map(|(t, th)| th * t[w]).sum::<f64>()
                    })
                    .collect();
                let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let un: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
                let z: f64 = un.iter().sum();
                admissible(un.into_iter().map(|u| u / z).collect(), xi)
            }
            Model::Affine { origin, directions } => {
                let mut w = origin.clone();
                for (c, v) in xi.iter().zip(directions) {
                    for (acc, x) in w.iter_mut().zip(v) {
                        *acc += c * x;
                    }
                }
                admissible(w, xi)
            }
        }
    }

    fn jacobian(&self, xi: &[f64]) -> Result<Vec<Vec<f64>>> {
        match self {
            Model::Bernoulli => {
                self.point(xi)?;
                Ok(vec![vec![1.0, -1.0]])
            }
            Model::Categorical { n } => {
                self.point(xi)?;
                Ok((0..n - 1)
                    .map(|i| {
                        let mut col = vec![0.0; *n];
                        col[i] = 1.0;
                        col[n - 1] = -1.0;
                        col
                    })
                    .collect())
            }
            Model::ExponentialFamily { stats, .. } => {
                let p = self.point(xi)?;
                Ok(stats
                    .iter()
                    .map(|t| {
                        let mean: f64 = p.weights().iter().zip(t).map(|(a, b)| a * b).sum();
                        p.weights()
                            .iter()
                            .zip(t)
                            .map(|(pw, tw)| pw * (tw - mean))
                            .collect()
                    })
                    .collect())
            }
            Model::Affine { directions, .. } => {
                self.point(xi)?;
                Ok(directions.clone())
            }
        }
    }
}

/// The coordinate tangent vectors `(d_i)_p` at `p_xi`, after the rank check.
pub fn tangent_basis<M: StatisticalModel + ?Sized>(
    model: &M,
    xi: &[f64],
) -> Result<Vec<TangentVector>> {
    let n = model.space().size();
    let dim = model.dim();
    if dim == 0 || dim > n - 1 {
        return Err(Error::InvalidParameter(format!(
            "model dimension {dim} must lie in 1..={}",
            n - 1
        )));
    }
    let p = model.point(xi)?;
    let columns = model.jacobian(xi)?;
    check_len(dim, columns.len())?;
    let jac = DMatrix::from_fn(n, dim, |r, c| columns[c][r]);
    let sv = jac.singular_values();
    let (lo, hi) = sv
        .iter()
        .fold((f64::INFINITY, 0f64), |(lo, hi), &s| (lo.min(s), hi.max(s)));
    if hi.is_nan() || hi <= 0.0 || lo < tolerance::RANK_RATIO * hi {
        return Err(Error::RankDeficient(if hi > 0.0 { lo / hi } else { 0.0 }));
    }
    columns
        .into_iter()
        .map(|col| TangentVector::new(p.clone(), col))
        .collect()
}

/// Scores `L_i = d_i log p_xi`.
pub fn score<M: StatisticalModel + ?Sized>(model: &M, xi: &[f64]) -> Result<Vec<RandomVariable>> {
    Ok(tangent_basis(model, xi)?
        .iter()
        .map(geometry::e_rep)
        .collect())
}

/// Fisher information matrix `G_M(p)` at a parameter value.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherMatrix {
    pub xi: Vec<f64>,
    pub matrix: DMatrix<f64>,
}

impl FisherMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn inverse(&self) -> Result<DMatrix<f64>> {
        invert_spd(&self.matrix)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        to_rows(&self.matrix)
    }
}

/// `G_ij = <L_i | L_j>_p`, symmetric by construction.
pub fn fisher_info<M: StatisticalModel + ?Sized>(model: &M, xi: &[f64]) -> Result<FisherMatrix> {
    let p = model.point(xi)?;
    let scores = score(model, xi)?;
    let d = scores.len();
    let mut g = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let v = p.inner_l2(&scores[i], &scores[j])?;
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    Ok(FisherMatrix {
        xi: xi.to_vec(),
        matrix: g,
    })
}

/// `G_M(p)^{-1} = [g_M(dxi^i, dxi^j)]`.
pub fn cometric_matrix<M: StatisticalModel + ?Sized>(
    model: &M,
    xi: &[f64],
) -> Result<DMatrix<f64>> {
    fisher_info(model, xi)?.inverse()
}

/// Coefficients of `alpha|_{T_p(M)}` in the `dxi` basis: `c_i = alpha(d_i)`.
pub fn restrict<M: StatisticalModel + ?Sized>(
    model: &M,
    xi: &[f64],
    alpha: &CotangentVector,
) -> Result<Vec<f64>> {
    tangent_basis(model, xi)?
        .iter()
        .map(|d| geometry::pair(alpha, d))
        .collect()
}

/// Minimum-norm ambient extension of the covector `sum_i c_i dxi^i`.
///
/// It is `flat(X)` for `X = sum_i (G^{-1} c)_i d_i`, which lies in `T_p(M)`.
pub fn lift<M: StatisticalModel + ?Sized>(
    model: &M,
    xi: &[f64],
    coeffs: &[f64],
) -> Result<CotangentVector> {
    check_len(model.dim(), coeffs.len())?;
    let basis = tangent_basis(model, xi)?;
    let g_inv = cometric_matrix(model, xi)?;
    let w = &g_inv * DVector::from_column_slice(coeffs);
    let x = TangentVector::combination(basis[0].base(), w.as_slice(), &basis)?;
    Ok(flat(&x))
}

/// Projects `raw` onto `{K : sum_w d_i p(w) K(w) = 0 for all i}`.
///
/// `delta_p(K)` then vanishes on `T_p(M)`, so adding `K` to a representative
/// changes an ambient covector without changing its restriction to the model.
pub fn annihilator<M: StatisticalModel + ?Sized>(
    model: &M,
    xi: &[f64],
    raw: &RandomVariable,
) -> Result<RandomVariable> {
    let n = model.space().size();
    check_len(n, raw.len())?;
    let columns = model.jacobian(xi)?;
    let jac = DMatrix::from_fn(n, columns.len(), |r, c| columns[c][r]);
    let k = DVector::from_column_slice(raw.values());
    let gram = jac.transpose() * &jac;
    let coef = gram
        .cholesky()
        .ok_or(Error::SingularMatrix)?
        .solve(&(jac.transpose() * &k));
    Ok(RandomVariable::new((k - jac * coef).as_slice().to_vec()))
}

/// How unbiasedness of an estimator tuple is checked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum CrbMode {
    /// Only `delta(A^i)|_{T_p(M)} = dxi^i` at the given point.
    Local,
    /// Additionally `<A^i>_{p_xi'} = xi'^i` on a 5-per-axis grid over the box.
    Global { lower: Vec<f64>, upper: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrbVerdict {
    /// `V = G^{-1}` within tolerance.
    Equality,
    /// `V - G^{-1}` is PSD and nonzero.
    Strict,
    /// `V - G^{-1}` has an eigenvalue below the PSD tolerance.
    Violation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrbReport {
    pub variance: Vec<Vec<f64>>,
    pub cometric: Vec<Vec<f64>>,
    pub min_eigenvalue: f64,
    pub difference_norm: f64,
    pub verdict: CrbVerdict,
    pub psd: bool,
    pub unbiasedness_residual: f64,
    pub global_residual: Option<f64>,
    pub psd_tolerance: f64,
    pub equality_tolerance: f64,
}

/// Points per axis used by [`CrbMode::Global`].
pub const GLOBAL_GRID: usize = 5;

/// Cramér–Rao check `V_p(A) >= G_M(p)^{-1}` for a locally unbiased tuple.
pub fn crb_check<M: StatisticalModel + ?Sized>(
    model: &M,
    xi: &[f64],
    estimators: &[RandomVariable],
    mode: &CrbMode,
) -> Result<CrbReport> {
    let d = model.dim();
    check_len(d, estimators.len())?;
    let p = model.point(xi)?;

    let mut unbiasedness_residual = 0f64;
    for (i, a) in estimators.iter().enumerate() {
        let c = restrict(model, xi, &delta(&p, a)?)?;
        let r = c
            .iter()
            .enumerate()
            .map(|(j, v)| (v - if i == j { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max);
        if r > tolerance::UNBIASEDNESS {
            return Err(Error::NotLocallyUnbiased {
                index: i,
                residual: r,
            });
        }
        unbiasedness_residual = unbiasedness_residual.max(r);
    }

    let global_residual = match mode {
        CrbMode::Local => None,
        CrbMode::Global { lower, upper } => Some(global_bias(model, estimators, lower, upper)?),
    };

    let mut v = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let c = p.cov(&estimators[i], &estimators[j])?;
            v[(i, j)] = c;
            v[(j, i)] = c;
        }
    }
    let g_inv = cometric_matrix(model, xi)?;
    let spectral = spectral_norm(&g_inv);
    let diff = &v - &g_inv;
    let eig = SymmetricEigen::new(0.5 * (&diff + diff.transpose())).eigenvalues;
    let min_eigenvalue = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let difference_norm = eig.iter().map(|e| e.abs()).fold(0.0, f64::max);

    let psd_tol = tolerance::PSD * (1.0 + spectral);
    let eq_tol = tolerance::EQUALITY * (1.0 + spectral);
    let psd = min_eigenvalue >= -psd_tol;
    let verdict = if !psd {
        CrbVerdict::Violation
    } else if difference_norm <= eq_tol {
        CrbVerdict::Equality
    } else {
        CrbVerdict::Strict
    };
    Ok(CrbReport {
        variance: to_rows(&v),
        cometric: to_rows(&g_inv),
        min_eigenvalue,
        difference_norm,
        verdict,
        psd,
        unbiasedness_residual,
        global_residual,
        psd_tolerance: psd_tol,
        equality_tolerance: eq_tol,
    })
}

/// Max `|<A^i>_{p_xi'} - xi'^i|` over the grid.
fn global_bias<M: StatisticalModel + ?Sized>(
    model: &M,
    estimators: &[RandomVariable],
    lower: &[f64],
    upper: &[f64],
) -> Result<f64> {
    let d = model.dim();
    check_len(d, lower.len())?;
    check_len(d, upper.len())?;
    let axis =
        |k: usize, t: usize| lower[k] + (upper[k] - lower[k]) * t as f64 / (GLOBAL_GRID - 1) as f64;
    let total = GLOBAL_GRID.pow(d as u32);
    let mut worst = 0f64;
    let mut point = vec![0.0; d];
    for flat_index in 0..total {
        let mut rest = flat_index;
        for (k, slot) in point.iter_mut().enumerate() {
            *slot = axis(k, rest % GLOBAL_GRID);
            rest /= GLOBAL_GRID;
        }
        let p = model.point(&point)?;
        for (a, target) in estimators.iter().zip(&point) {
            worst = worst.max((p.expect(a)? - target).abs());
        }
    }
    Ok(worst)
}

pub(crate) fn invert_spd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(ch) = m.clone().cholesky() {
        let inv = ch.inverse();
        return Ok(0.5 * (&inv + inv.transpose()));
    }
    m.clone().try_inverse().ok_or(Error::SingularMatrix)
}

pub(crate) fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.singular_values().iter().cloned().fold(0.0, f64::max)
}

pub(crate) fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}
