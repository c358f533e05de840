//! e-, m- and α-connections through their flat transports.
//!
//! Both transports are exact: the m-transport keeps the m-representation,
//! the e-transport keeps the class `A mod R` of the score. A covariant
//! derivative `∇_X Y` at `p_xi` is the derivative at `t = 0` of the field
//! `Y(xi + tX)` transported back to `p_xi`, taken by one central difference.
//! The α-connection is the affine combination
//! `((1 + α)/2) ∇^(e) + ((1 - α)/2) ∇^(m)`.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{e_rep, fisher_metric, TangentVector};
use crate::markov::{coembedding, pushforward, Channel, EmbeddingPair};
use crate::models::{Model, StatisticalModel};
use crate::simplex::{check_len, Distribution, SampleSpace};
use crate::tolerance;

/// Selects `∇^(α)`; `alpha = 1` is the e-connection, `alpha = -1` the m-connection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConnectionTag {
    pub alpha: f64,
}

impl ConnectionTag {
    pub const E: Self = Self { alpha: 1.0 };
    pub const M: Self = Self { alpha: -1.0 };

    pub fn alpha(alpha: f64) -> Self {
        Self { alpha }
    }

    fn weights(self) -> (f64, f64) {
        ((1.0 + self.alpha) / 2.0, (1.0 - self.alpha) / 2.0)
    }
}

type Coefficients = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A vector field on a model, given by its components in the coordinate basis.
#[derive(Clone)]
pub struct VectorField {
    dim: usize,
    coeffs: Coefficients,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

impl VectorField {
    pub fn from_fn(dim: usize, f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        Self {
            dim,
            coeffs: Arc::new(f),
        }
    }

    /// The coordinate field `d_i`.
    pub fn coordinate(dim: usize, i: usize) -> Self {
        let mut e = vec![0.0; dim];
        e[i] = 1.0;
        Self::constant(e)
    }

    pub fn constant(coeffs: Vec<f64>) -> Self {
        Self::from_fn(coeffs.len(), move |_| coeffs.clone())
    }

    pub fn zero(dim: usize) -> Self {
        Self::constant(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn at(&self, xi: &[f64]) -> Result<Vec<f64>> {
        let c = (self.coeffs)(xi);
        check_len(self.dim, c.len())?;
        Ok(c)
    }
}

/// Central-difference settings shared by the connection routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteDifference {
    pub step: f64,
    /// Combine steps `h` and `h/2` as `(4 D(h/2) - D(h)) / 3`.
    pub richardson: bool,
}

impl Default for FiniteDifference {
    fn default() -> Self {
        Self {
            step: tolerance::CONNECTION_STEP,
            richardson: false,
        }
    }
}

impl FiniteDifference {
    pub fn with_step(step: f64) -> Self {
        Self {
            step,
            richardson: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "finite-difference step {} must be positive",
                self.step
            )));
        }
        Ok(())
    }

    /// Applies the configured scheme to a central difference `d(h)`.
    fn derive<F>(&self, d: F) -> Result<Vec<f64>>
    where
        F: Fn(f64) -> Result<Vec<f64>>,
    {
        self.validate()?;
        let coarse = d(self.step)?;
        if !self.richardson {
            return Ok(coarse);
        }
        let fine = d(self.step / 2.0)?;
        Ok(fine
            .iter()
            .zip(&coarse)
            .map(|(f, c)| (4.0 * f - c) / 3.0)
            .collect())
    }
}

/// m-parallel transport: the m-representation is unchanged.
pub fn m_transport(x: &TangentVector, q: &Distribution) -> Result<TangentVector> {
    check_len(x.base().len(), q.len())?;
    Ok(TangentVector::raw(q.clone(), x.m_rep().to_vec()))
}

/// e-parallel transport: the score is re-centered at `q`, `m = q (L - <L>_q)`.
pub fn e_transport(x: &TangentVector, q: &Distribution) -> Result<TangentVector> {
    check_len(x.base().len(), q.len())?;
    if x.base() == q {
        return Ok(x.clone());
    }
    Ok(TangentVector::raw(
        q.clone(),
        e_transport_raw(&e_rep(x).into_values(), q),
    ))
}

fn e_transport_raw(score: &[f64], q: &Distribution) -> Vec<f64> {
    let mean: f64 = score.iter().zip(q.weights()).map(|(l, w)| l * w).sum();
    score
        .iter()
        .zip(q.weights())
        .map(|(l, w)| w * (l - mean))
        .collect()
}

/// `sum_j Y^j(xi) d_j p_xi` as an ambient tangent vector at `p_xi`.
pub fn ambient_field<M: StatisticalModel + ?Sized>(
    model: &M,
    xi: &[f64],
    field: &VectorField,
) -> Result<TangentVector> {
    check_len(model.dim(), field.dim())?;
    let p = model.point(xi)?;
    let jac = model.jacobian(xi)?;
    let c = field.at(xi)?;
    let mut m = vec![0.0; p.len()];
    for (cj, col) in c.iter().zip(&jac) {
        for (acc, v) in m.iter_mut().zip(col) {
            *acc += cj * v;
        }
    }
    Ok(TangentVector::raw(p, m))
}

/// `∇^(α)_X Y` at `p_xi`, as an ambient tangent vector.
pub fn covariant_derivative<M: StatisticalModel + ?Sized>(
    tag: ConnectionTag,
    model: &M,
    xi: &[f64],
    x: &VectorField,
    y: &VectorField,
    fd: FiniteDifference,
) -> Result<TangentVector> {
    check_len(model.dim(), xi.len())?;
    check_len(model.dim(), x.dim())?;
    check_len(model.dim(), y.dim())?;
    let p = model.point(xi)?;
    let dir = x.at(xi)?;
    let (we, wm) = tag.weights();
    let shifted = |t: f64| -> Vec<f64> { xi.iter().zip(&dir).map(|(a, d)| a + t * d).collect() };

    let diff = fd.derive(|h| {
        let plus = ambient_field(model, &shifted(h), y)?;
        let minus = ambient_field(model, &shifted(-h), y)?;
        let mut out = vec![0.0; p.len()];
        if wm != 0.0 {
            for ((o, a), b) in out.iter_mut().zip(plus.m_rep()).zip(minus.m_rep()) {
                *o += wm * (a - b) / (2.0 * h);
            }
        }
        if we != 0.0 {
            let a = e_transport_raw(&e_rep(&plus).into_values(), &p);
            let b = e_transport_raw(&e_rep(&minus).into_values(), &p);
            for ((o, a), b) in out.iter_mut().zip(&a).zip(&b) {
                *o += we * (a - b) / (2.0 * h);
            }
        }
        Ok(out)
    })?;
    TangentVector::projected(p, diff)
}

/// `|Z g(X, Y) - g(∇^(e)_Z X, Y) - g(X, ∇^(m)_Z Y)|` at `p_xi`.
pub fn duality_check<M: StatisticalModel + ?Sized>(
    model: &M,
    xi: &[f64],
    x: &VectorField,
    y: &VectorField,
    z: &VectorField,
    fd: FiniteDifference,
) -> Result<f64> {
    check_len(model.dim(), z.dim())?;
    let dir = z.at(xi)?;
    let metric_at = |t: f64| -> Result<f64> {
        let s: Vec<f64> = xi.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
        fisher_metric(&ambient_field(model, &s, x)?, &ambient_field(model, &s, y)?)
    };
    let lhs = fd.derive(|h| Ok(vec![(metric_at(h)? - metric_at(-h)?) / (2.0 * h)]))?[0];
    let xa = ambient_field(model, xi, x)?;
    let ya = ambient_field(model, xi, y)?;
    let ex = covariant_derivative(ConnectionTag::E, model, xi, z, x, fd)?;
    let my = covariant_derivative(ConnectionTag::M, model, xi, z, y, fd)?;
    let rhs = fisher_metric(&ex, &ya)? + fisher_metric(&xa, &my)?;
    Ok((lhs - rhs).abs())
}

/// The image of a model under a Markov map, `xi -> Phi(p_xi)`.
pub struct PushedModel<'a, M: ?Sized> {
    pub channel: &'a Channel,
    pub model: &'a M,
}

impl<M: StatisticalModel + ?Sized> StatisticalModel for PushedModel<'_, M> {
    fn space(&self) -> SampleSpace {
        SampleSpace::new(self.channel.n_out()).expect("channel output space")
    }

    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn point(&self, xi: &[f64]) -> Result<Distribution> {
        crate::markov::apply(self.channel, &self.model.point(xi)?)
    }

    fn jacobian(&self, xi: &[f64]) -> Result<Vec<Vec<f64>>> {
        let p = self.model.point(xi)?;
        self.model
            .jacobian(xi)?
            .into_iter()
            .map(|col| {
                let x = TangentVector::raw(p.clone(), col);
                Ok(pushforward(self.channel, &p, &x)?.m_rep().to_vec())
            })
            .collect()
    }
}

/// Strictly positive lattice points `a / k` (all `a_i >= 1`, `sum a = k`) of `P_m`,
/// as categorical coordinates `(p_1, .., p_{m-1})`.
pub fn lattice_grid(m: usize, k: usize) -> Result<Vec<Vec<f64>>> {
    SampleSpace::new(m)?;
    if k < m {
        return Err(Error::InvalidParameter(format!(
            "grid denominator {k} has no strictly positive points on {m} outcomes"
        )));
    }
    let mut out = Vec::new();
    let mut a = vec![1usize; m];
    fn rec(i: usize, left: usize, a: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<f64>>) {
        let m = a.len();
        if i == m - 1 {
            a[i] = left;
            out.push(a[..m - 1].iter().map(|&v| v as f64 / k as f64).collect());
            return;
        }
        for v in 1..=left - (m - 1 - i) {
            a[i] = v;
            rec(i + 1, left - v, a, k, out);
        }
    }
    rec(0, k, &mut a, k, &mut out);
    Ok(out)
}

/// Result of [`weak_invariance_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakInvarianceReport {
    /// Max componentwise gap `|∇_X Y - Psi_*(∇'_{Phi_* X} Phi_* Y)|` in m-representation.
    pub residual_max: f64,
    /// Max gap of `g(∇_X Y, Z)` against `g'(∇'_{Phi_* X} Phi_* Y, Phi_* Z)`.
    pub metric_residual_max: f64,
    pub grid: usize,
    pub points: usize,
    pub step: f64,
    pub alpha_small: f64,
    pub alpha_large: f64,
}

/// Compares `∇^(α)` on `P_m` with `Psi_* ∇'^(α')` on `P_n` for all pairs of
/// coordinate fields, over the strictly positive lattice of denominator `grid`.
pub fn weak_invariance_check(
    pair: &EmbeddingPair,
    small: ConnectionTag,
    large: ConnectionTag,
    grid: usize,
    fd: FiniteDifference,
) -> Result<WeakInvarianceReport> {
    let m = pair.surjection().m();
    let model = Model::categorical(m)?;
    let phi = pair.embedding_channel();
    let psi = coembedding(pair.surjection());
    let pushed = PushedModel {
        channel: &phi,
        model: &model,
    };
    let d = m - 1;
    let fields: Vec<VectorField> = (0..d).map(|i| VectorField::coordinate(d, i)).collect();
    let points = lattice_grid(m, grid)?;

    let per_point: Vec<Result<(f64, f64)>> = points
        .par_iter()
        .map(|xi| {
            let mut worst = 0f64;
            let mut worst_metric = 0f64;
            let image = pushed.point(xi)?;
            for x in &fields {
                for y in &fields {
                    let lhs = covariant_derivative(small, &model, xi, x, y, fd)?;
                    let big = covariant_derivative(large, &pushed, xi, x, y, fd)?;
                    let rhs = pushforward(&psi, &image, &big)?;
                    for (a, b) in lhs.m_rep().iter().zip(rhs.m_rep()) {
                        worst = worst.max((a - b).abs());
                    }
                    for z in &fields {
                        let g_small = fisher_metric(&lhs, &ambient_field(&model, xi, z)?)?;
                        let g_large = fisher_metric(&big, &ambient_field(&pushed, xi, z)?)?;
                        worst_metric = worst_metric.max((g_small - g_large).abs());
                    }
                }
            }
            Ok((worst, worst_metric))
        })
        .collect();

    let mut residual_max = 0f64;
    let mut metric_residual_max = 0f64;
    for r in per_point {
        let (a, b) = r?;
        residual_max = residual_max.max(a);
        metric_residual_max = metric_residual_max.max(b);
    }
    Ok(WeakInvarianceReport {
        residual_max,
        metric_residual_max,
        grid,
        points: points.len(),
        step: fd.step,
        alpha_small: small.alpha,
        alpha_large: large.alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::flat;
    use crate::markov::{canonical_embedding, Surjection};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn dist(w: &[f64]) -> Distribution {
        Distribution::from_weights(w).unwrap()
    }

    fn tangent(p: &Distribution, m: &[f64]) -> TangentVector {
        TangentVector::new(p.clone(), m.to_vec()).unwrap()
    }

    fn max_abs(v: &TangentVector) -> f64 {
        v.m_rep().iter().map(|x| x.abs()).fold(0.0, f64::max)
    }

    #[test]
    fn m_transport_examples() {
        let p = dist(&[0.5, 0.5]);
        let q = dist(&[0.25, 0.75]);
        let x = tangent(&p, &[1.0, -1.0]);
        let y = m_transport(&x, &q).unwrap();
        assert_eq!(y.m_rep(), &[1.0, -1.0]);
        assert_eq!(y.base(), &q);
        assert_eq!(m_transport(&x, &p).unwrap(), x);
        assert_eq!(m_transport(&y, &p).unwrap(), x);
    }

    #[test]
    fn e_transport_examples() {
        let p = dist(&[0.5, 0.5]);
        let q = dist(&[0.25, 0.75]);
        let x = tangent(&p, &[1.0, -1.0]);
        let y = e_transport(&x, &q).unwrap();
        assert_abs_diff_eq!(y.m_rep()[0], 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(y.m_rep()[1], -0.75, epsilon = 1e-15);
        assert_eq!(e_transport(&x, &p).unwrap(), x);
        let back = e_transport(&y, &p).unwrap();
        assert_abs_diff_eq!(back.m_rep()[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn e_transport_keeps_score_class() {
        let p = dist(&[0.2, 0.3, 0.5]);
        let q = dist(&[0.6, 0.1, 0.3]);
        let x = tangent(&p, &[0.3, -0.5, 0.2]);
        let a = flat(&x).rep().clone();
        let b = flat(&e_transport(&x, &q).unwrap()).rep().clone();
        let shift = a.values()[0] - b.values()[0];
        for (u, v) in a.values().iter().zip(b.values()) {
            assert_abs_diff_eq!(u - v, shift, epsilon = 1e-14);
        }
    }

    #[test]
    fn m_derivative_of_mixture_coordinates_vanishes() {
        let m = Model::categorical(3).unwrap();
        let f0 = VectorField::coordinate(2, 0);
        let f1 = VectorField::coordinate(2, 1);
        let v = covariant_derivative(
            ConnectionTag::M,
            &m,
            &[0.2, 0.3],
            &f0,
            &f1,
            FiniteDifference::default(),
        )
        .unwrap();
        assert!(max_abs(&v) < 1e-10);
    }

    #[test]
    fn e_derivative_of_e_parallel_field_vanishes() {
        // Field with score A - <A>_p everywhere, written in mixture coordinates.
        let a = [1.0, -2.0, 0.5];
        let field = VectorField::from_fn(2, move |xi| {
            let p = [xi[0], xi[1], 1.0 - xi[0] - xi[1]];
            let mean: f64 = p.iter().zip(&a).map(|(w, v)| w * v).sum();
            (0..2).map(|i| p[i] * (a[i] - mean)).collect()
        });
        let m = Model::categorical(3).unwrap();
        let x = VectorField::constant(vec![0.3, -0.7]);
        let v = covariant_derivative(
            ConnectionTag::E,
            &m,
            &[0.2, 0.3],
            &x,
            &field,
            FiniteDifference::default(),
        )
        .unwrap();
        assert!(max_abs(&v) < 1e-9, "{v:?}");
    }

    #[test]
    fn duality_examples() {
        let fd = FiniteDifference::with_step(1e-4);
        let b = Model::bernoulli();
        let d = VectorField::coordinate(1, 0);
        assert!(duality_check(&b, &[0.3], &d, &d, &d, fd).unwrap() <= 1e-6);
        assert_eq!(
            duality_check(&b, &[0.3], &VectorField::zero(1), &d, &d, fd).unwrap(),
            0.0
        );

        let c = Model::categorical(3).unwrap();
        let xi = [1.0 / 3.0, 1.0 / 3.0];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    let r = duality_check(
                        &c,
                        &xi,
                        &VectorField::coordinate(2, i),
                        &VectorField::coordinate(2, j),
                        &VectorField::coordinate(2, k),
                        fd,
                    )
                    .unwrap();
                    assert!(r <= 1e-6, "{i}{j}{k}: {r}");
                }
            }
        }
    }

    #[test]
    fn bad_step_rejected() {
        let b = Model::bernoulli();
        let d = VectorField::coordinate(1, 0);
        let r = covariant_derivative(
            ConnectionTag::E,
            &b,
            &[0.3],
            &d,
            &d,
            FiniteDifference::with_step(0.0),
        );
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn lattice() {
        let g = lattice_grid(3, 4).unwrap();
        assert_eq!(g.len(), 3);
        assert!(lattice_grid(3, 2).is_err());
        assert_eq!(lattice_grid(2, 5).unwrap().len(), 4);
    }

    #[test]
    fn weak_invariance_of_alpha_connections() {
        let f = Surjection::new(2, vec![0, 0, 1]).unwrap();
        let pair = canonical_embedding(&f, &dist(&[0.25, 0.25, 0.5])).unwrap();
        for alpha in [-1.0, 0.0, 1.0] {
            let tag = ConnectionTag::alpha(alpha);
            let r = weak_invariance_check(&pair, tag, tag, 6, FiniteDifference::default()).unwrap();
            assert!(r.residual_max <= 1e-6, "alpha {alpha}: {r:?}");
            assert!(r.metric_residual_max <= 1e-6, "alpha {alpha}: {r:?}");
        }
        let r = weak_invariance_check(
            &pair,
            ConnectionTag::E,
            ConnectionTag::M,
            6,
            FiniteDifference::default(),
        )
        .unwrap();
        assert!(r.residual_max > 1e-3, "{r:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn transports_are_path_independent(seed in any::<u64>(), n in 2usize..7) {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let space = SampleSpace::new(n).unwrap();
            let p = crate::simplex::sample_interior_with(space, &mut rng, 1e-3).unwrap();
            let q = crate::simplex::sample_interior_with(space, &mut rng, 1e-3).unwrap();
            let r = crate::simplex::sample_interior_with(space, &mut rng, 1e-3).unwrap();
            let x = TangentVector::projected(p.clone(), crate::simplex::sample_variable(space, &mut rng).into_values()).unwrap();
            let direct = e_transport(&x, &r).unwrap();
            let two_leg = e_transport(&e_transport(&x, &q).unwrap(), &r).unwrap();
            for (a, b) in direct.m_rep().iter().zip(two_leg.m_rep()) {
                prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
            }
            prop_assert_eq!(m_transport(&m_transport(&x, &q).unwrap(), &r).unwrap(), m_transport(&x, &r).unwrap());
        }
    }
}
