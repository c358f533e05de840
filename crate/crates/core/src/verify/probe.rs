//! Constructive characterization of invariant bilinear families.
//!
//! The probe reconstructs `γ` from indicator pairs: at uniform points it must
//! look like `a_n δ_ij + b_n`; block surjections `Ω_{mn} -> Ω_n` force
//! `c1 = n a_n` and `c2 = n^2 b_n` to be independent of `n`; partition
//! surjections carry the form to rational points; a ladder of rational
//! approximations stands in for continuity at irrational points.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::family::{bilinearity_residual, BilinearFamily};
use super::witness::{evaluate_report, fit_uniform, Witness, WitnessInputs};
use super::Verdict;
use crate::error::{Error, Result};
use crate::markov::Surjection;
use crate::simplex::{
    sample_interior, sample_interior_with, sample_variable, Distribution, RandomVariable,
    SampleSpace,
};
use crate::tolerance::{self, relative_residual};

/// A probe result or the counterexample that stopped it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome<T> {
    Found(T),
    Witness(Box<Witness>),
}

impl<T> Outcome<T> {
    pub fn found(self) -> Option<T> {
        match self {
            Outcome::Found(t) => Some(t),
            Outcome::Witness(_) => None,
        }
    }

    pub fn witness(self) -> Option<Witness> {
        match self {
            Outcome::Found(_) => None,
            Outcome::Witness(w) => Some(*w),
        }
    }
}

macro_rules! found {
    ($e:expr) => {
        match $e {
            Outcome::Found(t) => t,
            Outcome::Witness(w) => return Ok(Outcome::Witness(w)),
        }
    };
}

/// `γ_{u_n}(e_i, e_j) = a δ_ij + b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformForm {
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub residual: f64,
}

/// Runs the worst of `candidates` and returns it as a witness if it is a violation.
fn worst<F: BilinearFamily + ?Sized>(
    family: &F,
    candidates: impl IntoIterator<Item = WitnessInputs>,
) -> Result<(f64, Option<Witness>)> {
    let mut best: Option<(f64, WitnessInputs)> = None;
    for c in candidates {
        let r = evaluate_report(&c, family)?;
        if best.as_ref().is_none_or(|(g, _)| r.gap > *g) {
            best = Some((r.gap, c));
        }
    }
    let Some((gap, inputs)) = best else {
        return Ok((0.0, None));
    };
    if Verdict::from_gap(gap) == Verdict::Violation {
        let w = super::witness::shrink(Witness::new(inputs, family, None, None)?, family);
        return Ok((gap, Some(w)));
    }
    Ok((gap, None))
}

fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i..n).map(move |j| (i, j)))
}

fn indicator(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

/// Indicator evaluation at the uniform point of `Ω_n`.
pub fn probe_uniform<F: BilinearFamily + ?Sized>(
    family: &F,
    n: usize,
) -> Result<Outcome<UniformForm>> {
    SampleSpace::new(n)?;
    let (residual, witness) = worst(
        family,
        (0..n).flat_map(|i| (0..n).map(move |j| WitnessInputs::UniformForm { n, i, j })),
    )?;
    if let Some(w) = witness {
        return Ok(Outcome::Witness(Box::new(w)));
    }
    let u = Distribution::uniform(SampleSpace::new(n)?);
    let matrix: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| family.eval(&u, &indicator(n, i), &indicator(n, j)))
                .collect()
        })
        .collect();
    let (a, b) = fit_uniform(&matrix);
    Ok(Outcome::Found(UniformForm { n, a, b, residual }))
}

/// Cross-dimension consistency through the block surjection `Ω_{mn} -> Ω_n`.
///
/// Returns `(c1, c2) = (n a_n, n^2 b_n)` when the block identity holds.
pub fn probe_consistency<F: BilinearFamily + ?Sized>(
    family: &F,
    m: usize,
    n: usize,
) -> Result<Outcome<(f64, f64)>> {
    SampleSpace::new(m)?;
    let small = found!(probe_uniform(family, n)?);
    found!(probe_uniform(family, m * n)?);
    let f = Surjection::blocks(n, m)?;
    let u = vec![1.0 / (m * n) as f64; m * n];
    let (_, witness) = worst(
        family,
        pairs(n).map(|(i, j)| WitnessInputs::Invariance {
            surjection: f.clone(),
            point: u.clone(),
            a: indicator(n, i),
            b: indicator(n, j),
        }),
    )?;
    if let Some(w) = witness {
        return Ok(Outcome::Witness(Box::new(w)));
    }
    let nf = n as f64;
    Ok(Outcome::Found((nf * small.a, nf * nf * small.b)))
}

/// Result of [`probe_rational`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalProbe {
    pub denominator: usize,
    pub counts: Vec<usize>,
    /// Least-squares `(c1, c2)` from the indicator values at `p`.
    pub c1: f64,
    pub c2: f64,
    /// Max gap of `γ_p(e_i, e_j) = γ_{u_M}(e_i∘F, e_j∘F)`.
    pub invariance_residual: f64,
    /// Max gap against the reference constants.
    pub decomposition_residual: f64,
}

/// Smallest `M <= max` with `p = k / M`, all `k_i >= 1`.
pub fn common_denominator(p: &Distribution, max: usize) -> Result<(usize, Vec<usize>)> {
    for m in p.len()..=max {
        let scaled: Vec<f64> = p.weights().iter().map(|w| w * m as f64).collect();
        if scaled
            .iter()
            .all(|s| (s - s.round()).abs() <= 1e-9 && s.round() >= 1.0)
        {
            let counts: Vec<usize> = scaled.iter().map(|s| s.round() as usize).collect();
            if counts.iter().sum::<usize>() == m {
                return Ok((m, counts));
            }
        }
    }
    Err(Error::NotRational(max as u64))
}

/// Extends the uniform-point form to the rational point `p` through the
/// partition surjection with fibers of sizes `k_i`.
///
/// `constants` defaults to `(M a_M, M^2 b_M)` from the uniform probe on `Ω_M`.
pub fn probe_rational<F: BilinearFamily + ?Sized>(
    family: &F,
    p: &Distribution,
    max_denominator: usize,
    constants: Option<(f64, f64)>,
) -> Result<Outcome<RationalProbe>> {
    let (m, counts) = common_denominator(p, max_denominator)?;
    let n = p.len();
    let (c1, c2) = match constants {
        Some(c) => c,
        None => {
            let u = found!(probe_uniform(family, m)?);
            let mf = m as f64;
            (mf * u.a, mf * mf * u.b)
        }
    };
    let f = Surjection::partition(&counts)?;
    let u = vec![1.0 / m as f64; m];
    let (invariance_residual, witness) = worst(
        family,
        pairs(n).map(|(i, j)| WitnessInputs::Invariance {
            surjection: f.clone(),
            point: u.clone(),
            a: indicator(n, i),
            b: indicator(n, j),
        }),
    )?;
    if let Some(w) = witness {
        return Ok(Outcome::Witness(Box::new(w)));
    }
    let (decomposition_residual, witness) = worst(
        family,
        pairs(n).map(|(i, j)| WitnessInputs::Decomposition {
            point: p.weights().to_vec(),
            a: indicator(n, i),
            b: indicator(n, j),
            c1,
            c2,
        }),
    )?;
    if let Some(w) = witness {
        return Ok(Outcome::Witness(Box::new(w)));
    }
    let (fit1, fit2) = fit_constants(family, p)?;
    Ok(Outcome::Found(RationalProbe {
        denominator: m,
        counts,
        c1: fit1,
        c2: fit2,
        invariance_residual,
        decomposition_residual,
    }))
}

/// Least squares for `γ_p(e_i, e_j) = c1 p_i δ_ij + c2 p_i p_j` over `i <= j`.
fn fit_constants<F: BilinearFamily + ?Sized>(family: &F, p: &Distribution) -> Result<(f64, f64)> {
    let n = p.len();
    let w = p.weights();
    let rows: Vec<(usize, usize)> = pairs(n).collect();
    let design = DMatrix::from_fn(rows.len(), 2, |r, c| {
        let (i, j) = rows[r];
        match c {
            0 if i == j => w[i],
            0 => 0.0,
            _ => w[i] * w[j],
        }
    });
    let values = DVector::from_iterator(
        rows.len(),
        rows.iter()
            .map(|&(i, j)| family.eval(p, &indicator(n, i), &indicator(n, j))),
    );
    let sol = design
        .svd(true, true)
        .solve(&values, 1e-14)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok((sol[0], sol[1]))
}

/// Probe settings: sizes `2..=n_max`, rational points with denominators up to
/// `denominator`, and `trials` random rational points and centering checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacterizeConfig {
    pub n_max: usize,
    pub denominator: usize,
    pub trials: usize,
    pub seed: u64,
}

impl Default for CharacterizeConfig {
    fn default() -> Self {
        Self {
            n_max: 6,
            denominator: 64,
            trials: 200,
            seed: 0,
        }
    }
}

/// One rung of the rational-approximation ladder toward an irrational point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityStep {
    pub denominator: usize,
    /// `max_ij |γ_{p_D}(e_i, e_j) - γ_{p*}(e_i, e_j)|`.
    pub distance: f64,
    pub c1: f64,
    pub c2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Characterization {
    pub family: String,
    pub c1: f64,
    pub c2: f64,
    pub uniform: Vec<UniformForm>,
    pub consistency_pairs: usize,
    pub rational_points: usize,
    pub rational_max_residual: f64,
    pub continuity: Vec<ContinuityStep>,
    pub continuity_residual: f64,
    pub continuity_converging: bool,
    /// Whether `γ_p(A, 1) = 0` on all sampled `(p, A)`.
    pub centered: bool,
    pub centered_residual: f64,
    /// Some residual fell in the inconclusive band.
    pub inconclusive: bool,
    pub verdict: String,
    pub statement: String,
}

/// Denominators of the continuity ladder.
pub const CONTINUITY_LADDER: [usize; 4] = [8, 16, 32, 64];

fn constant_string(c: f64) -> String {
    format!("{}", (c * 1e9).round() / 1e9 + 0.0)
}

/// Random composition of `m` into `n` positive parts.
fn random_counts<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Vec<usize> {
    let mut cuts: Vec<usize> = rand::seq::index::sample(rng, m - 1, n - 1)
        .into_iter()
        .map(|c| c + 1)
        .collect();
    cuts.sort_unstable();
    let mut prev = 0;
    let mut counts: Vec<usize> = cuts
        .iter()
        .map(|&c| {
            let k = c - prev;
            prev = c;
            k
        })
        .collect();
    counts.push(m - prev);
    counts
}

/// `k_i ≈ p_i D` with every `k_i >= 1` and `sum k = D`.
fn rational_approximation(p: &Distribution, d: usize) -> Vec<usize> {
    let mut k: Vec<usize> = p
        .weights()
        .iter()
        .map(|w| ((w * d as f64).round() as usize).max(1))
        .collect();
    loop {
        let total: usize = k.iter().sum();
        let top = (0..k.len()).max_by_key(|&i| k[i]).expect("nonempty");
        match total.cmp(&d) {
            std::cmp::Ordering::Greater => k[top] -= 1,
            std::cmp::Ordering::Less => k[top] += 1,
            std::cmp::Ordering::Equal => return k,
        }
    }
}

/// Runs every probe step and returns the recovered decomposition or the first witness.
pub fn characterize<F: BilinearFamily + ?Sized>(
    family: &F,
    config: CharacterizeConfig,
) -> Result<Outcome<Characterization>> {
    if config.n_max < 2 || config.denominator < 2 || config.trials == 0 {
        return Err(Error::InvalidParameter(
            "characterize needs n_max >= 2, denominator >= 2 and trials >= 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let bilinear = bilinearity_residual(family, config.n_max, 16, &mut rng)?;
    if bilinear > tolerance::VIOLATION {
        return Err(Error::InvalidParameter(format!(
            "family {} is not bilinear (residual {bilinear:e})",
            family.name()
        )));
    }
    let mut inconclusive = Verdict::from_gap(bilinear) == Verdict::Inconclusive;

    let mut uniform = Vec::new();
    for n in 2..=config.n_max {
        let u = found!(probe_uniform(family, n)?);
        inconclusive |= Verdict::from_gap(u.residual) == Verdict::Inconclusive;
        uniform.push(u);
    }
    let (c1, c2) = (2.0 * uniform[0].a, 4.0 * uniform[0].b);

    let mut consistency_pairs = 0;
    for n in 2..=config.n_max {
        for m in 2..=config.n_max {
            let (d1, d2) = found!(probe_consistency(family, m, n)?);
            let gap = relative_residual(d1, c1).max(relative_residual(d2, c2));
            inconclusive |= Verdict::from_gap(gap) == Verdict::Inconclusive;
            consistency_pairs += 1;
        }
    }

    let mut rational_max_residual = 0f64;
    let max_m = config.denominator;
    for _ in 0..config.trials {
        let n = rng.random_range(2..=config.n_max.min(max_m));
        let m = rng.random_range(n..=max_m);
        let counts = random_counts(n, m, &mut rng);
        let weights: Vec<f64> = counts.iter().map(|&k| k as f64 / m as f64).collect();
        let p = Distribution::from_weights(&weights)?;
        let r = found!(probe_rational(family, &p, max_m, Some((c1, c2)))?);
        let res = r.invariance_residual.max(r.decomposition_residual);
        inconclusive |= Verdict::from_gap(res) == Verdict::Inconclusive;
        rational_max_residual = rational_max_residual.max(res);
    }

    let target = sample_interior(SampleSpace::new(3)?, config.seed ^ 0x5eed, 0.15)?;
    let at =
        |p: &Distribution, i: usize, j: usize| family.eval(p, &indicator(3, i), &indicator(3, j));
    let mut continuity = Vec::new();
    for d in CONTINUITY_LADDER
        .into_iter()
        .filter(|&d| d <= config.denominator)
    {
        let k = rational_approximation(&target, d);
        let w: Vec<f64> = k.iter().map(|&v| v as f64 / d as f64).collect();
        let pd = Distribution::from_weights(&w)?;
        let r = found!(probe_rational(family, &pd, d, Some((c1, c2)))?);
        let distance = pairs(3)
            .map(|(i, j)| (at(&pd, i, j) - at(&target, i, j)).abs())
            .fold(0.0, f64::max);
        continuity.push(ContinuityStep {
            denominator: d,
            distance,
            c1: r.c1,
            c2: r.c2,
        });
    }
    let continuity_converging = match (continuity.first(), continuity.last()) {
        (Some(a), Some(b)) => b.distance <= a.distance,
        _ => true,
    };
    let (continuity_residual, witness) = worst(
        family,
        pairs(3).map(|(i, j)| WitnessInputs::Decomposition {
            point: target.weights().to_vec(),
            a: indicator(3, i),
            b: indicator(3, j),
            c1,
            c2,
        }),
    )?;
    if let Some(w) = witness {
        return Ok(Outcome::Witness(Box::new(w)));
    }

    let mut centered_residual = 0f64;
    for _ in 0..config.trials {
        let n = rng.random_range(2..=config.n_max);
        let space = SampleSpace::new(n)?;
        let p = sample_interior_with(space, &mut rng, 0.01 / n as f64)?;
        let a = sample_variable(space, &mut rng);
        let one = RandomVariable::constant(space, 1.0);
        let v = family.eval(&p, a.values(), one.values());
        centered_residual = centered_residual.max(relative_residual(v, 0.0));
    }
    let centered = centered_residual <= tolerance::PASS;

    let verdict = if centered && relative_residual(c1, -c2) <= tolerance::PASS {
        format!("c·Cov with c={}", constant_string(c1))
    } else {
        format!(
            "c1·L2 + c2·MM with c1={}, c2={}",
            constant_string(c1),
            constant_string(c2)
        )
    };
    Ok(Outcome::Found(Characterization {
        family: family.name(),
        c1,
        c2,
        uniform,
        consistency_pairs,
        rational_points: config.trials,
        rational_max_residual,
        continuity,
        continuity_residual,
        continuity_converging,
        centered,
        centered_residual,
        inconclusive,
        verdict,
        statement:
            "consistent with the c1·<A|B>_p + c2·<A>_p<B>_p decomposition on all sampled points"
                .into(),
    }))
}
