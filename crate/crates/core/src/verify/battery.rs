//! Randomized property batteries.
//!
//! Trial `t` of a battery with seed `s` draws from `ChaCha8Rng::seed_from_u64(s)`
//! on stream `t`, so every trial is reproducible on its own and trials can
//! run in parallel. Results are merged in trial order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::family::{BilinearFamily, CandidateFamily};
use super::probe::{characterize, Characterization, CharacterizeConfig, Outcome};
use super::witness::{evaluate_report, shrink, Witness, WitnessInputs};
use super::{pullback_identity_inputs, Verdict};
use crate::error::{Error, Result};
use crate::markov::{
    apply, canonical_embedding, random_channel_with, random_surjection, EmbeddingPair,
};
use crate::simplex::{sample_interior_with, sample_variable, Distribution, SampleSpace};
use crate::tolerance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatteryKind {
    /// `‖W_* X‖ <= ‖X‖` for random channels.
    MonotonicityMetric,
    /// `γ_p(W^* alpha, W^* alpha) <= γ_{W(p)}(alpha, alpha)` for random channels.
    MonotonicityCometric,
    /// Metric, co-metric and covariance invariance under random embedding pairs.
    Invariance,
    /// Adjoint/projector identities and the covariance form under canonical pairs.
    StrongInvariance,
    /// The cotangent-level identity with the family standing in for the co-metric.
    PullbackIdentity,
    /// The full characterization probe.
    Characterize,
}

fn default_family() -> String {
    "COV".into()
}

/// JSON: `{"battery": .., "n_max": .., "trials": .., "seed": .., "family": ..}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatteryConfig {
    pub battery: BatteryKind,
    pub n_max: usize,
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "default_family")]
    pub family: String,
    /// Largest rational denominator for `characterize` (default 64).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub denominator: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub pass: f64,
    pub violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryReport {
    pub battery: BatteryKind,
    pub family: String,
    pub pass: bool,
    pub verdict: Verdict,
    pub max_residual: f64,
    pub trials: usize,
    pub seed: u64,
    pub n_max: usize,
    pub violations: usize,
    pub inconclusive: usize,
    pub tolerances: Thresholds,
    pub witnesses: Vec<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub characterization: Option<Characterization>,
}

/// Witnesses kept (and shrunk) per report; the rest are only counted.
pub const MAX_WITNESSES: usize = 16;

fn interior<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Distribution> {
    sample_interior_with(SampleSpace::new(n)?, rng, (0.5 / n as f64).min(1e-3))
}

fn variable<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Vec<f64>> {
    Ok(sample_variable(SampleSpace::new(n)?, rng).into_values())
}

fn tangent<R: Rng + ?Sized>(p: &Distribution, rng: &mut R) -> Result<Vec<f64>> {
    let mut v = variable(p.len(), rng)?;
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
    Ok(v)
}

/// The relations checked by one trial.
fn trial_inputs(
    kind: BatteryKind,
    n_max: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<WitnessInputs>> {
    let size = |rng: &mut ChaCha8Rng, lo: usize| rng.random_range(lo..=n_max);
    Ok(match kind {
        BatteryKind::MonotonicityMetric => {
            let (n_in, n_out) = (size(rng, 2), size(rng, 2));
            let channel = random_channel_with(n_in, n_out, rng)?;
            let p = interior(n_in, rng)?;
            let x = tangent(&p, rng)?;
            vec![WitnessInputs::MonotoneMetric {
                channel,
                point: p.weights().to_vec(),
                x,
            }]
        }
        BatteryKind::MonotonicityCometric => {
            let (n_in, n_out) = (size(rng, 2), size(rng, 2));
            let channel = random_channel_with(n_in, n_out, rng)?;
            let p = interior(n_in, rng)?;
            vec![WitnessInputs::MonotoneCometric {
                channel,
                point: p.weights().to_vec(),
                a: variable(n_out, rng)?,
            }]
        }
        BatteryKind::Invariance => {
            let m = size(rng, 2);
            let n = size(rng, m);
            let f = random_surjection(n, m, rng)?;
            let pair = EmbeddingPair::random(f.clone(), rng)?;
            let p = interior(m, rng)?;
            let q = interior(n, rng)?;
            let (x, y) = (tangent(&p, rng)?, tangent(&p, rng)?);
            let (a, b) = (variable(m, rng)?, variable(m, rng)?);
            vec![
                WitnessInputs::EmbeddingMetric {
                    pair: pair.clone(),
                    point: p.weights().to_vec(),
                    x,
                    y,
                },
                WitnessInputs::EmbeddingCometric {
                    pair,
                    point: q.weights().to_vec(),
                    a: a.clone(),
                    b: b.clone(),
                },
                WitnessInputs::Invariance {
                    surjection: f,
                    point: q.weights().to_vec(),
                    a,
                    b,
                },
            ]
        }
        BatteryKind::StrongInvariance => {
            let m = size(rng, 2);
            let n = size(rng, m);
            let f = random_surjection(n, m, rng)?;
            let q = interior(n, rng)?;
            let pair = canonical_embedding(&f, &q)?;
            let p = apply(&pair.coembedding_channel(), &q)?;
            vec![
                WitnessInputs::Adjoint {
                    pair: pair.clone(),
                    point: p.weights().to_vec(),
                },
                WitnessInputs::StrongCovariance {
                    pair,
                    point: q.weights().to_vec(),
                    a: variable(m, rng)?,
                    b: variable(n, rng)?,
                },
            ]
        }
        BatteryKind::PullbackIdentity => {
            let m = size(rng, 2);
            let n = size(rng, m);
            let f = random_surjection(n, m, rng)?;
            let pair = EmbeddingPair::random(f, rng)?;
            let p = interior(m, rng)?;
            let (a, b) = (variable(m, rng)?, variable(n, rng)?);
            pullback_identity_inputs(&pair, &p, &a, &b)?.to_vec()
        }
        BatteryKind::Characterize => unreachable!("handled by run_battery"),
    })
}

struct TrialResult {
    residual: f64,
    verdict: Verdict,
    failing: Option<WitnessInputs>,
}

fn run_trial<F: BilinearFamily + ?Sized>(
    kind: BatteryKind,
    config: &BatteryConfig,
    family: &F,
    trial: usize,
) -> Result<TrialResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(trial as u64);
    let mut out = TrialResult {
        residual: 0.0,
        verdict: Verdict::Pass,
        failing: None,
    };
    for inputs in trial_inputs(kind, config.n_max, &mut rng)? {
        let r = evaluate_report(&inputs, family)?;
        out.residual = out.residual.max(r.gap);
        if r.verdict > out.verdict {
            out.verdict = r.verdict;
            if r.verdict == Verdict::Violation {
                out.failing = Some(inputs);
            }
        }
    }
    Ok(out)
}

/// Runs the configured battery with the parsed family.
pub fn run_battery(config: &BatteryConfig) -> Result<BatteryReport> {
    if config.n_max < 2 || config.trials == 0 {
        return Err(Error::InvalidParameter(
            "a battery needs n_max >= 2 and trials >= 1".into(),
        ));
    }
    let family = CandidateFamily::parse(&config.family)?;
    run_battery_with(config, &family)
}

/// Runs the configured battery with an arbitrary family; `config.family` is ignored.
pub fn run_battery_with<F: BilinearFamily + ?Sized>(
    config: &BatteryConfig,
    family: &F,
) -> Result<BatteryReport> {
    let mut report = BatteryReport {
        battery: config.battery,
        family: family.name(),
        pass: true,
        verdict: Verdict::Pass,
        max_residual: 0.0,
        trials: config.trials,
        seed: config.seed,
        n_max: config.n_max,
        violations: 0,
        inconclusive: 0,
        tolerances: Thresholds {
            pass: tolerance::PASS,
            violation: tolerance::VIOLATION,
        },
        witnesses: Vec::new(),
        characterization: None,
    };

    if config.battery == BatteryKind::Characterize {
        let probe = CharacterizeConfig {
            n_max: config.n_max,
            denominator: config.denominator.unwrap_or(64),
            trials: config.trials,
            seed: config.seed,
        };
        match characterize(family, probe)? {
            Outcome::Found(c) => {
                report.max_residual = c.rational_max_residual.max(c.continuity_residual);
                if c.inconclusive {
                    report.verdict = Verdict::Inconclusive;
                    report.inconclusive = 1;
                }
                report.characterization = Some(c);
            }
            Outcome::Witness(w) => {
                report.pass = false;
                report.verdict = Verdict::Violation;
                report.violations = 1;
                report.max_residual = w.gap;
                report.witnesses.push(*w);
            }
        }
        return Ok(report);
    }

    let results: Vec<Result<TrialResult>> = (0..config.trials)
        .into_par_iter()
        .map(|t| run_trial(config.battery, config, family, t))
        .collect();
    let mut failing = Vec::new();
    for (trial, r) in results.into_iter().enumerate() {
        let r = r?;
        report.max_residual = report.max_residual.max(r.residual);
        report.verdict = report.verdict.worst(r.verdict);
        match r.verdict {
            Verdict::Violation => report.violations += 1,
            Verdict::Inconclusive => report.inconclusive += 1,
            Verdict::Pass => {}
        }
        if let Some(inputs) = r.failing {
            if failing.len() < MAX_WITNESSES {
                failing.push((trial, inputs));
            }
        }
    }
    report.witnesses = failing
        .into_par_iter()
        .map(|(trial, inputs)| {
            let w = Witness::new(inputs, family, Some(config.seed), Some(trial as u64))?;
            Ok(shrink(w, family))
        })
        .collect::<Result<Vec<_>>>()?;
    report.pass = report.violations == 0;
    Ok(report)
}
