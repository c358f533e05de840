//! Finite sample spaces, strictly positive distributions, and random variables.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerance;

/// A finite sample space `{1, .., n}` with `n >= 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SampleSpace(usize);

impl SampleSpace {
    pub fn new(size: usize) -> Result<Self> {
        if size < 2 {
            return Err(Error::SpaceTooSmall(size));
        }
        Ok(Self(size))
    }

    pub fn size(self) -> usize {
        self.0
    }
}

/// A strictly positive probability vector.
///
/// Equality is exact (bitwise on the weights): two tangent or cotangent
/// vectors can only be combined when they sit at the very same point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistributionJson", into = "DistributionJson")]
pub struct Distribution {
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DistributionJson {
    n: usize,
    p: Vec<f64>,
}

impl TryFrom<DistributionJson> for Distribution {
    type Error = Error;

    fn try_from(raw: DistributionJson) -> Result<Self> {
        Distribution::new(SampleSpace::new(raw.n)?, raw.p)
    }
}

impl From<Distribution> for DistributionJson {
    fn from(p: Distribution) -> Self {
        Self {
            n: p.len(),
            p: p.weights,
        }
    }
}

impl Distribution {
    /// Validates positivity and normalization.
    pub fn new(space: SampleSpace, weights: Vec<f64>) -> Result<Self> {
        check_len(space.size(), weights.len())?;
        for (index, &value) in weights.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite(index));
            }
            if value <= tolerance::POSITIVITY_FLOOR {
                return Err(Error::NonPositiveWeight { index, value });
            }
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > tolerance::NORMALIZATION {
            return Err(Error::NotNormalized(total));
        }
        Ok(Self { weights })
    }

    /// Convenience constructor that infers the space from the slice length.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        Self::new(SampleSpace::new(weights.len())?, weights.to_vec())
    }

    pub fn uniform(space: SampleSpace) -> Self {
        let n = space.size();
        Self {
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn space(&self) -> SampleSpace {
        SampleSpace(self.weights.len())
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `<A>_p = sum_w p(w) A(w)`.
    pub fn expect(&self, a: &RandomVariable) -> Result<f64> {
        check_len(self.len(), a.len())?;
        Ok(self.weights.iter().zip(&a.values).map(|(p, v)| p * v).sum())
    }

    /// `<A|B>_p = <AB>_p`.
    pub fn inner_l2(&self, a: &RandomVariable, b: &RandomVariable) -> Result<f64> {
        check_len(self.len(), a.len())?;
        check_len(self.len(), b.len())?;
        Ok(self
            .weights
            .iter()
            .zip(a.values.iter().zip(&b.values))
            .map(|(p, (x, y))| p * x * y)
            .sum())
    }

    /// `Cov_p(A, B) = <A - <A>_p | B - <B>_p>_p`, evaluated in centered form.
    pub fn cov(&self, a: &RandomVariable, b: &RandomVariable) -> Result<f64> {
        let ma = self.expect(a)?;
        let mb = self.expect(b)?;
        Ok(self
            .weights
            .iter()
            .zip(a.values.iter().zip(&b.values))
            .map(|(p, (x, y))| p * (x - ma) * (y - mb))
            .sum())
    }

    pub fn variance(&self, a: &RandomVariable) -> Result<f64> {
        self.cov(a, a)
    }
}

/// A real-valued function on a sample space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VariableJson", into = "VariableJson")]
pub struct RandomVariable {
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct VariableJson {
    n: usize,
    values: Vec<f64>,
}

impl TryFrom<VariableJson> for RandomVariable {
    type Error = Error;

    fn try_from(raw: VariableJson) -> Result<Self> {
        let space = SampleSpace::new(raw.n)?;
        check_len(space.size(), raw.values.len())?;
        if let Some(i) = raw.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { values: raw.values })
    }
}

impl From<RandomVariable> for VariableJson {
    fn from(a: RandomVariable) -> Self {
        Self {
            n: a.values.len(),
            values: a.values,
        }
    }
}

impl RandomVariable {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn constant(space: SampleSpace, c: f64) -> Self {
        Self {
            values: vec![c; space.size()],
        }
    }

    /// Indicator `e_i` of the point `i` (0-based).
    pub fn indicator(space: SampleSpace, i: usize) -> Self {
        let mut values = vec![0.0; space.size()];
        values[i] = 1.0;
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `A - c`.
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v - c).collect(),
        }
    }
}

impl From<Vec<f64>> for RandomVariable {
    fn from(values: Vec<f64>) -> Self {
        Self { values }
    }
}

/// Deterministic interior point of the simplex.
///
/// A flat Dirichlet draw is mixed with the uniform floor,
/// `w = floor + (1 - n * floor) * d`, so every weight is at least `floor`
/// and the weights still sum to one.
pub fn sample_interior(space: SampleSpace, seed: u64, floor: f64) -> Result<Distribution> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_interior_with(space, &mut rng, floor)
}

/// Same as [`sample_interior`] but drawing from a caller-supplied generator.
pub fn sample_interior_with<R: Rng + ?Sized>(
    space: SampleSpace,
    rng: &mut R,
    floor: f64,
) -> Result<Distribution> {
    let n = space.size();
    if !(floor > 0.0 && floor < 1.0 / n as f64) {
        return Err(Error::BadFloor { floor, n });
    }
    let draws: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = draws.iter().sum();
    let mass = 1.0 - n as f64 * floor;
    let mut weights: Vec<f64> = draws.iter().map(|d| floor + mass * d / total).collect();
    // Fold the rounding residue into the largest weight so the sum is 1 to the last ulp or so.
    let residue = 1.0 - weights.iter().sum::<f64>();
    let argmax = (0..n)
        .max_by(|&i, &j| weights[i].total_cmp(&weights[j]))
        .unwrap_or(0);
    weights[argmax] += residue;
    Distribution::new(space, weights)
}

/// Random variable with i.i.d. standard normal entries.
pub fn sample_variable<R: Rng + ?Sized>(space: SampleSpace, rng: &mut R) -> RandomVariable {
    RandomVariable::new(
        (0..space.size())
            .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect(),
    )
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::SizeMismatch { expected, actual });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn dist(w: &[f64]) -> Distribution {
        Distribution::from_weights(w).unwrap()
    }

    fn rv(v: &[f64]) -> RandomVariable {
        RandomVariable::new(v.to_vec())
    }

    #[test]
    fn constructs_valid_points() {
        assert_eq!(dist(&[0.5, 0.5]).weights(), &[0.5, 0.5]);
        assert_eq!(dist(&[0.25, 0.25, 0.5]).weights(), &[0.25, 0.25, 0.5]);
    }

    #[test]
    fn rejects_bad_points() {
        let two = SampleSpace::new(2).unwrap();
        assert!(matches!(
            Distribution::new(two, vec![0.5, 0.6]),
            Err(Error::NotNormalized(_))
        ));
        assert!(matches!(
            Distribution::new(two, vec![1.0, 0.0]),
            Err(Error::NonPositiveWeight { index: 1, .. })
        ));
        assert!(matches!(
            Distribution::new(two, vec![1.0]),
            Err(Error::SizeMismatch { .. })
        ));
        assert!(matches!(SampleSpace::new(1), Err(Error::SpaceTooSmall(1))));
    }

    #[test]
    fn moments_match_hand_values() {
        let u = dist(&[0.5, 0.5]);
        assert_eq!(u.expect(&rv(&[1.0, 0.0])).unwrap(), 0.5);
        assert_eq!(dist(&[0.25, 0.75]).expect(&rv(&[1.0, 0.0])).unwrap(), 0.25);
        assert_abs_diff_eq!(u.expect(&rv(&[3.0, 3.0])).unwrap(), 3.0);

        assert_eq!(u.inner_l2(&rv(&[1.0, 0.0]), &rv(&[0.0, 1.0])).unwrap(), 0.0);
        assert_eq!(u.inner_l2(&rv(&[1.0, 0.0]), &rv(&[1.0, 0.0])).unwrap(), 0.5);
        let p = dist(&[0.25, 0.25, 0.5]);
        let (a, b) = (rv(&[1.0, 1.0, 0.0]), rv(&[1.0, 2.0, 3.0]));
        assert_abs_diff_eq!(p.inner_l2(&a, &b).unwrap(), 0.75, epsilon = 1e-15);

        assert_abs_diff_eq!(
            u.cov(&rv(&[1.0, 0.0]), &rv(&[0.0, 1.0])).unwrap(),
            -0.25,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(p.cov(&a, &b).unwrap(), -0.375, epsilon = 1e-15);
        assert_eq!(p.cov(&a, &rv(&[2.0, 2.0, 2.0])).unwrap(), 0.0);

        assert_abs_diff_eq!(u.variance(&rv(&[1.0, 0.0])).unwrap(), 0.25);
        assert_abs_diff_eq!(
            dist(&[0.25, 0.75]).variance(&rv(&[1.0, 0.0])).unwrap(),
            0.1875,
            epsilon = 1e-15
        );
        assert_eq!(p.variance(&rv(&[-4.0, -4.0, -4.0])).unwrap(), 0.0);
    }

    #[test]
    fn moments_reject_wrong_sizes() {
        let u = dist(&[0.5, 0.5]);
        assert!(matches!(
            u.expect(&rv(&[1.0, 2.0, 3.0])),
            Err(Error::SizeMismatch { .. })
        ));
        assert!(u.cov(&rv(&[1.0, 2.0]), &rv(&[1.0])).is_err());
    }

    #[test]
    fn interior_sampling_contract() {
        let two = SampleSpace::new(2).unwrap();
        let p = sample_interior(two, 7, 1e-6).unwrap();
        assert_eq!(p, sample_interior(two, 7, 1e-6).unwrap());

        let five = SampleSpace::new(5).unwrap();
        let a = sample_interior(five, 99, 1e-6).unwrap();
        let b = sample_interior(five, 99, 1e-6).unwrap();
        assert_eq!(a, b);
        assert!(a.weights().iter().all(|&w| w >= 1e-6));

        let three = SampleSpace::new(3).unwrap();
        assert!(matches!(
            sample_interior(three, 1, 0.4),
            Err(Error::BadFloor { .. })
        ));
        assert!(sample_interior(three, 1, 0.0).is_err());
    }

    #[test]
    fn json_shape() {
        let p: Distribution = serde_json::from_str(r#"{"n": 2, "p": [0.25, 0.75]}"#).unwrap();
        assert_eq!(p.weights(), &[0.25, 0.75]);
        assert!(serde_json::from_str::<Distribution>(r#"{"n": 3, "p": [0.25, 0.75]}"#).is_err());
        let a: RandomVariable = serde_json::from_str(r#"{"n": 2, "values": [1, -1]}"#).unwrap();
        assert_eq!(a.values(), &[1.0, -1.0]);
        assert_eq!(
            serde_json::to_string(&p).unwrap(),
            r#"{"n":2,"p":[0.25,0.75]}"#
        );
    }
}
