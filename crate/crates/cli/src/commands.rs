//! One function per subcommand. Each returns the report and whether it passed.

use std::path::Path;

use infogeo::{
    apply, characterize, conditional_expectation, crb_check, duality_check, e_transport,
    fisher_info, m_transport, pullback, pushforward, run_battery, weak_invariance_check,
    BatteryConfig, CandidateFamily, CharacterizeConfig, ConnectionTag, CrbMode, CrbReport,
    CrbVerdict, Distribution, FiniteDifference, Model, Outcome, RandomVariable, StatisticalModel,
    TangentVector, VectorField,
};
use serde::Serialize;
use serde_json::Value;

use crate::input::{load, load_channel, load_cotangent_at, load_pair, load_tangent_at, Input};

/// A finished command: the JSON report and the exit status it implies.
pub struct Report {
    pub body: Value,
    pub pass: bool,
}

impl Report {
    fn new<T: Serialize>(body: &T, pass: bool) -> Self {
        Self {
            body: serde_json::to_value(body).expect("reports serialize"),
            pass,
        }
    }
}

fn model_at(path: &Path, xi: &[f64]) -> Input<Model> {
    let model: Model = load(path)?;
    model.point(xi)?;
    Ok(model)
}

#[derive(Serialize)]
struct FisherOut {
    #[serde(rename = "G")]
    g: Vec<Vec<f64>>,
    #[serde(rename = "G_inv")]
    g_inv: Vec<Vec<f64>>,
}

pub fn fisher(model: &Path, xi: &[f64]) -> Input<Report> {
    let model = model_at(model, xi)?;
    let g = fisher_info(&model, xi)?;
    let inv = g.inverse()?;
    let g_inv = (0..inv.nrows())
        .map(|i| (0..inv.ncols()).map(|j| inv[(i, j)]).collect())
        .collect();
    Ok(Report::new(
        &FisherOut {
            g: g.to_rows(),
            g_inv,
        },
        true,
    ))
}

/// Re-decides a CRB report against an overriding PSD tolerance.
fn with_psd_tolerance(mut r: CrbReport, tol: f64) -> CrbReport {
    r.psd_tolerance = tol;
    r.psd = r.min_eigenvalue >= -tol;
    r.verdict = if !r.psd {
        CrbVerdict::Violation
    } else if r.difference_norm <= r.equality_tolerance {
        CrbVerdict::Equality
    } else {
        CrbVerdict::Strict
    };
    r
}

pub fn crb(
    model: &Path,
    xi: &[f64],
    estimators: &Path,
    mode: CrbMode,
    tol: Option<f64>,
) -> Input<Report> {
    let model = model_at(model, xi)?;
    let estimators: Vec<RandomVariable> = load(estimators)?;
    let mut report = crb_check(&model, xi, &estimators, &mode)?;
    if let Some(t) = tol {
        report = with_psd_tolerance(report, t);
    }
    let pass = report.psd;
    Ok(Report::new(&report, pass))
}

#[derive(Serialize)]
struct TangentOut<'a> {
    p: &'a [f64],
    m_rep: &'a [f64],
}

impl<'a> From<&'a TangentVector> for TangentOut<'a> {
    fn from(t: &'a TangentVector) -> Self {
        Self {
            p: t.base().weights(),
            m_rep: t.m_rep(),
        }
    }
}

pub fn push(channel: &Path, point: &Path, vector: &Path) -> Input<Report> {
    let w = load_channel(channel)?;
    let p: Distribution = load(point)?;
    let x = load_tangent_at(vector, &p)?;
    let y = pushforward(&w, &p, &x)?;
    Ok(Report::new(&TangentOut::from(&y), true))
}

#[derive(Serialize)]
struct CotangentOut<'a> {
    p: &'a [f64],
    rep: &'a [f64],
    /// `E_W(A|x)` of the representative as given, before centering at `p`.
    variable: &'a [f64],
}

pub fn pull(channel: &Path, point: &Path, vector: &Path) -> Input<Report> {
    let w = load_channel(channel)?;
    let p: Distribution = load(point)?;
    let image = apply(&w, &p)?;
    let (alpha, raw) = load_cotangent_at(vector, &image)?;
    let beta = pullback(&w, &p, &alpha)?;
    let variable = conditional_expectation(&w, &raw)?;
    Ok(Report::new(
        &CotangentOut {
            p: beta.base().weights(),
            rep: beta.rep().values(),
            variable: variable.values(),
        },
        true,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Flat {
    E,
    M,
}

pub fn transport(vector: &Path, to: &Path, connection: Flat) -> Input<Report> {
    let x: TangentVector = load(vector)?;
    let q: Distribution = load(to)?;
    let y = match connection {
        Flat::E => e_transport(&x, &q)?,
        Flat::M => m_transport(&x, &q)?,
    };
    Ok(Report::new(&TangentOut::from(&y), true))
}

#[derive(Serialize)]
struct DualityOut {
    residual_max: f64,
    step: f64,
    richardson: bool,
    triples: usize,
    tolerance: f64,
    pass: bool,
}

/// Default residual bound for the finite-difference connection checks.
pub const CONNECTION_TOLERANCE: f64 = 1e-6;

pub fn duality(model: &Path, xi: &[f64], fd: FiniteDifference, tol: Option<f64>) -> Input<Report> {
    let model = model_at(model, xi)?;
    let d = model.dim();
    let fields: Vec<VectorField> = (0..d).map(|i| VectorField::coordinate(d, i)).collect();
    let mut residual_max = 0f64;
    for x in &fields {
        for y in &fields {
            for z in &fields {
                residual_max = residual_max.max(duality_check(&model, xi, x, y, z, fd)?);
            }
        }
    }
    let tolerance = tol.unwrap_or(CONNECTION_TOLERANCE);
    let pass = residual_max <= tolerance;
    Ok(Report::new(
        &DualityOut {
            residual_max,
            step: fd.step,
            richardson: fd.richardson,
            triples: d * d * d,
            tolerance,
            pass,
        },
        pass,
    ))
}

#[derive(Serialize)]
struct WeakOut {
    #[serde(flatten)]
    report: infogeo::WeakInvarianceReport,
    tolerance: f64,
    pass: bool,
}

pub fn weak_invariance(
    pair: &Path,
    alpha: f64,
    alpha_large: f64,
    grid: usize,
    fd: FiniteDifference,
    tol: Option<f64>,
) -> Input<Report> {
    let pair = load_pair(pair)?;
    let report = weak_invariance_check(
        &pair,
        ConnectionTag::alpha(alpha),
        ConnectionTag::alpha(alpha_large),
        grid,
        fd,
    )?;
    let tolerance = tol.unwrap_or(CONNECTION_TOLERANCE);
    let pass = report.residual_max <= tolerance;
    Ok(Report::new(
        &WeakOut {
            report,
            tolerance,
            pass,
        },
        pass,
    ))
}

pub fn verify(config: &Path, seed: Option<u64>, tol: Option<f64>) -> Input<Report> {
    let mut config: BatteryConfig = load(config)?;
    if let Some(s) = seed {
        config.seed = s;
    }
    let mut report = run_battery(&config)?;
    if let Some(t) = tol {
        report.pass = report.pass && report.max_residual <= t;
        report.tolerances.pass = t;
    }
    let pass = report.pass;
    Ok(Report::new(&report, pass))
}

pub fn characterize_family(family: &str, config: CharacterizeConfig) -> Input<Report> {
    let family = CandidateFamily::parse(family)?;
    let outcome = characterize(&family, config)?;
    let pass = matches!(outcome, Outcome::Found(_));
    Ok(Report::new(&outcome, pass))
}
