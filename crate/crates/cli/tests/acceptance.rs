//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so every line is printed even when an
//! earlier criterion fails; the process exits non-zero if any criterion does.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use infogeo::markov::{random_channel_with, random_surjection};
use infogeo::verify::{adjoint_residuals, WitnessInputs};
use infogeo::{
    annihilator, canonical_embedding, characterize, check_strong_invariance, cometric_matrix,
    crb_check, delta, duality_check, fisher_cometric, fisher_info, lift, norm_cotangent,
    run_battery, weak_invariance_check, BatteryConfig, BatteryKind, CandidateFamily,
    CharacterizeConfig, ConnectionTag, CrbMode, CrbVerdict, Distribution, EmbeddingPair,
    FiniteDifference, Model, Outcome, RandomVariable, StatisticalModel, Surjection, VectorField,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err<E: std::fmt::Debug>(e: E) -> String {
    format!("{e:?}")
}

fn weights<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|w| w / total).collect()
}

fn point<R: Rng>(n: usize, rng: &mut R) -> Distribution {
    Distribution::from_weights(&weights(n, rng)).expect("interior point")
}

fn values<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-3.0..3.0)).collect()
}

fn mean(p: &[f64], a: &[f64]) -> f64 {
    p.iter().zip(a).map(|(p, a)| p * a).sum()
}

/// Two-pass covariance, independent of the library's formula.
fn covariance(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(p, a), mean(p, b));
    p.iter()
        .zip(a.iter().zip(b))
        .map(|(p, (a, b))| p * (a - ma) * (b - mb))
        .sum()
}

fn timed(budget: Duration, elapsed: Duration) -> Check {
    ensure(
        elapsed < budget,
        format!("runtime {elapsed:.2?} (budget {budget:.0?})"),
    )
}

fn cometric_is_covariance() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_cov, mut worst_var) = (0f64, 0f64);
    for _ in 0..1000 {
        let n = rng.random_range(2..=8);
        let p = point(n, &mut rng);
        let (a, b) = (values(n, &mut rng), values(n, &mut rng));
        let da = delta(&p, &RandomVariable::new(a.clone())).map_err(err)?;
        let db = delta(&p, &RandomVariable::new(b.clone())).map_err(err)?;
        let g = fisher_cometric(&da, &db).map_err(err)?;
        let c = covariance(p.weights(), &a, &b);
        let (va, vb) = (
            covariance(p.weights(), &a, &a),
            covariance(p.weights(), &b, &b),
        );
        // Relative to the Cauchy-Schwarz scale, so near-zero covariances stay meaningful.
        worst_cov = worst_cov.max((g - c).abs() / c.abs().max((va * vb).sqrt()));
        let na = norm_cotangent(&da);
        worst_var = worst_var.max((na * na - va).abs() / va);
    }
    let elapsed = start.elapsed();
    ensure(
        worst_cov <= 1e-10 && worst_var <= 1e-10,
        format!("1000 trials n<=8: max rel gap {worst_cov:.1e} (covariance), {worst_var:.1e} (variance)"),
    )
    .and_then(|d| timed(Duration::from_secs(1), elapsed).map(|t| format!("{d}; {t}")))
}

fn metric_and_cometric_are_inverse() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst_lib, mut worst_oracle) = (0f64, 0f64);
    for n in 2..=6 {
        let model = Model::categorical(n).map_err(err)?;
        for _ in 0..20 {
            let p = weights(n, &mut rng);
            let xi = &p[..n - 1];
            let dist = Distribution::from_weights(&p).map_err(err)?;
            let g = fisher_info(&model, xi).map_err(err)?.to_rows();
            // dxi^i is delta_p of the i-th indicator on the full simplex.
            let dxi: Vec<_> = (0..n - 1)
                .map(|i| delta(&dist, &RandomVariable::indicator(dist.space(), i)))
                .collect::<Result<_, _>>()
                .map_err(err)?;
            for (i, row) in g.iter().enumerate() {
                for j in 0..n - 1 {
                    let (mut lib, mut oracle) = (0.0, 0.0);
                    for (k, g_ik) in row.iter().enumerate() {
                        lib += g_ik * fisher_cometric(&dxi[k], &dxi[j]).map_err(err)?;
                        let c = if k == j { p[k] } else { 0.0 } - p[k] * p[j];
                        oracle += g_ik * c;
                    }
                    let id = if i == j { 1.0 } else { 0.0 };
                    worst_lib = worst_lib.max((lib - id).abs());
                    worst_oracle = worst_oracle.max((oracle - id).abs());
                }
            }
        }
    }
    ensure(
        worst_lib <= 1e-8 && worst_oracle <= 1e-8,
        format!("categorical n=2..6, 100 points: |G·C - I| <= {worst_lib:.1e} (library C), {worst_oracle:.1e} (closed-form C)"),
    )
}

fn line_model() -> Model {
    Model::affine(vec![0.0, 0.0, 1.0], vec![vec![1.0, 1.0, -2.0]]).expect("line model")
}

/// Locally unbiased tuples: minimum-norm lifts plus random annihilator terms.
fn random_estimators<R: Rng>(
    model: &Model,
    xi: &[f64],
    perturb: bool,
    rng: &mut R,
) -> Result<Vec<RandomVariable>, String> {
    let d = model.dim();
    let n = model.space().size();
    (0..d)
        .map(|i| {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            let base = lift(model, xi, &e).map_err(err)?;
            let shift = rng.random_range(-2.0..2.0);
            let mut v: Vec<f64> = base.rep().values().iter().map(|x| x + shift).collect();
            if perturb {
                let k =
                    annihilator(model, xi, &RandomVariable::new(values(n, rng))).map_err(err)?;
                v.iter_mut().zip(k.values()).for_each(|(a, b)| *a += b);
            }
            Ok(RandomVariable::new(v))
        })
        .collect()
}

fn random_model<R: Rng>(rng: &mut R) -> Result<(Model, Vec<f64>), String> {
    let n = rng.random_range(3..=6);
    let d = rng.random_range(1..=n - 2);
    Ok(match rng.random_range(0..3) {
        0 => {
            let p = weights(n, rng);
            (Model::categorical(n).map_err(err)?, p[..n - 1].to_vec())
        }
        1 => {
            let stats = (0..d).map(|_| values(n, rng)).collect();
            let theta = (0..d).map(|_| rng.random_range(-0.5..0.5)).collect();
            (
                Model::exponential_family(weights(n, rng), stats).map_err(err)?,
                theta,
            )
        }
        _ => {
            let directions = (0..d)
                .map(|_| {
                    let v = values(n, rng);
                    let m = v.iter().sum::<f64>() / n as f64;
                    v.iter().map(|x| 0.02 * (x - m)).collect()
                })
                .collect();
            (
                Model::affine(weights(n, rng), directions).map_err(err)?,
                vec![0.0; d],
            )
        }
    })
}

fn cramer_rao() -> Check {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;
    let bern = Model::bernoulli();
    for theta in [0.1, 0.25, 0.5, 0.8] {
        let r = crb_check(
            &bern,
            &[theta],
            &[RandomVariable::new(vec![1.0, 0.0])],
            &CrbMode::Local,
        )
        .map_err(err)?;
        let v = theta * (1.0 - theta);
        if !(close(r.variance[0][0], v)
            && close(r.cometric[0][0], v)
            && r.verdict == CrbVerdict::Equality)
        {
            return Err(format!("bernoulli θ={theta}: {r:?}"));
        }
    }
    let line = line_model();
    for (xi, v) in [(0.25, 1.0 / 16.0), (1.0 / 3.0, 1.0 / 18.0)] {
        let r = crb_check(
            &line,
            &[xi],
            &[RandomVariable::new(vec![0.5, 0.5, 0.0])],
            &CrbMode::Local,
        )
        .map_err(err)?;
        if !(close(r.variance[0][0], v)
            && close(r.cometric[0][0], v)
            && r.verdict == CrbVerdict::Equality)
        {
            return Err(format!("line ξ={xi}: {r:?}"));
        }
    }
    let strict = crb_check(
        &line,
        &[0.25],
        &[RandomVariable::new(vec![1.0, 0.0, 0.0])],
        &CrbMode::Local,
    )
    .map_err(err)?;
    if (strict.min_eigenvalue - 0.125).abs() > 1e-15 || strict.verdict != CrbVerdict::Strict {
        return Err(format!("strict case: {strict:?}"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = f64::INFINITY;
    for trial in 0..1000 {
        let (model, xi) = random_model(&mut rng)?;
        let perturb = trial % 10 != 0;
        let est = random_estimators(&model, &xi, perturb, &mut rng)?;
        let r = crb_check(&model, &xi, &est, &CrbMode::Local).map_err(err)?;
        let g_inv = cometric_matrix(&model, &xi).map_err(err)?;
        let scale = 1.0 + g_inv.amax();
        worst = worst.min(r.min_eigenvalue / scale);
        if !perturb && r.verdict != CrbVerdict::Equality {
            return Err(format!("unperturbed lift is not efficient: {r:?}"));
        }
    }
    ensure(
        worst >= -1e-8,
        format!("closed forms exact to 1e-12, strict gap 1/8; 1000 random unbiased tuples: min eigenvalue of V - G^-1 {worst:.1e}"),
    )
}

fn battery(
    kind: BatteryKind,
    n_max: usize,
    trials: usize,
    seed: u64,
) -> Result<infogeo::BatteryReport, String> {
    run_battery(&BatteryConfig {
        battery: kind,
        n_max,
        trials,
        seed,
        family: "COV".into(),
        denominator: None,
    })
    .map_err(err)
}

fn monotonicity() -> Check {
    let start = Instant::now();
    let metric = battery(BatteryKind::MonotonicityMetric, 6, 1000, 4)?;
    let cometric = battery(BatteryKind::MonotonicityCometric, 6, 1000, 5)?;
    let elapsed = start.elapsed();

    // Data processing computed from scratch: sum (Wm)^2/(Wp) <= sum m^2/p and
    // Var_p(E_W(A|.)) <= Var_{Wp}(A).
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut oracle_violations = 0;
    for _ in 0..1000 {
        let (n_in, n_out) = (rng.random_range(2..=6), rng.random_range(2..=6));
        let w = random_channel_with(n_in, n_out, &mut rng).map_err(err)?;
        let p = weights(n_in, &mut rng);
        let mut m = values(n_in, &mut rng);
        let c = m.iter().sum::<f64>() / n_in as f64;
        m.iter_mut().for_each(|x| *x -= c);
        let a = values(n_out, &mut rng);
        let wp: Vec<f64> = (0..n_out)
            .map(|y| (0..n_in).map(|x| w.at(y, x) * p[x]).sum())
            .collect();
        let wm: Vec<f64> = (0..n_out)
            .map(|y| (0..n_in).map(|x| w.at(y, x) * m[x]).sum())
            .collect();
        let small: f64 = wm.iter().zip(&wp).map(|(m, p)| m * m / p).sum();
        let big: f64 = m.iter().zip(&p).map(|(m, p)| m * m / p).sum();
        let ea: Vec<f64> = (0..n_in)
            .map(|x| (0..n_out).map(|y| w.at(y, x) * a[y]).sum())
            .collect();
        let (vp, vq) = (covariance(&p, &ea, &ea), covariance(&wp, &a, &a));
        if small > big * (1.0 + 1e-9) || vp > vq * (1.0 + 1e-9) {
            oracle_violations += 1;
        }
    }
    let ok = metric.violations + metric.inconclusive + cometric.violations + cometric.inconclusive
        == 0
        && metric.max_residual <= 1e-9
        && cometric.max_residual <= 1e-9
        && oracle_violations == 0;
    ensure(
        ok,
        format!(
            "1000+1000 trials n<=6: violations {}+{}, max gap {:.1e}/{:.1e}; from-scratch oracle violations {oracle_violations}",
            metric.violations, cometric.violations, metric.max_residual, cometric.max_residual
        ),
    )
    .and_then(|d| timed(Duration::from_secs(5), elapsed).map(|t| format!("{d}; {t}")))
}

fn invariance() -> Check {
    let report = battery(BatteryKind::Invariance, 8, 500, 7)?;
    // From scratch: Phi(p)(y) = r_{F(y)}(y) p(F(y)).
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0f64;
    for _ in 0..500 {
        let n = rng.random_range(3..=8);
        let m = rng.random_range(2..n);
        let f = random_surjection(n, m, &mut rng).map_err(err)?;
        let pair = EmbeddingPair::random(f.clone(), &mut rng).map_err(err)?;
        let p = weights(m, &mut rng);
        let mut x = values(m, &mut rng);
        let c = x.iter().sum::<f64>() / m as f64;
        x.iter_mut().for_each(|v| *v -= c);
        let (a, b) = (values(m, &mut rng), values(m, &mut rng));
        let phi = |v: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|y| pair.r()[f.map()[y]][y] * v[f.map()[y]])
                .collect()
        };
        let (q, xq) = (phi(&p), phi(&x));
        let lift_var = |v: &[f64]| -> Vec<f64> { (0..n).map(|y| v[f.map()[y]]).collect() };
        let g_small: f64 = x.iter().zip(&p).map(|(x, p)| x * x / p).sum();
        let g_big: f64 = xq.iter().zip(&q).map(|(x, p)| x * x / p).sum();
        let c_small = covariance(&p, &a, &b);
        let c_big = covariance(&q, &lift_var(&a), &lift_var(&b));
        worst = worst
            .max((g_small - g_big).abs() / g_small.max(1.0))
            .max((c_small - c_big).abs() / c_small.abs().max(1.0));
    }
    ensure(
        report.max_residual <= 1e-9 && report.violations == 0 && worst <= 1e-9,
        format!(
            "500 trials n<=8: battery max residual {:.1e}, from-scratch oracle {worst:.1e}",
            report.max_residual
        ),
    )
}

fn strong_invariance() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0f64;
    for _ in 0..200 {
        let n = rng.random_range(3..=8);
        let m = rng.random_range(2..n);
        let f = random_surjection(n, m, &mut rng).map_err(err)?;
        let pair = EmbeddingPair::random(f, &mut rng).map_err(err)?;
        let r = adjoint_residuals(&pair, &point(m, &mut rng)).map_err(err)?;
        worst = worst.max(r.max());
    }
    let f = Surjection::new(2, vec![0, 0, 1]).map_err(err)?;
    let q = Distribution::from_weights(&[0.25, 0.25, 0.5]).map_err(err)?;
    let pair = canonical_embedding(&f, &q).map_err(err)?;
    let r = check_strong_invariance(
        &pair,
        &q,
        &RandomVariable::new(vec![1.0, 0.0]),
        &RandomVariable::new(vec![1.0, 2.0, 3.0]),
        &CandidateFamily::cov(),
    )
    .map_err(err)?;
    let exact = (r.covariance.lhs + 0.375).abs() <= 4.0 * f64::EPSILON
        && (r.covariance.rhs + 0.375).abs() <= 4.0 * f64::EPSILON;
    ensure(
        worst <= 1e-8 && exact,
        format!(
            "200 random pairs: adjoint/projector residual {worst:.1e}; worked example {} = {}",
            r.covariance.lhs, r.covariance.rhs
        ),
    )
}

fn characterization_probe() -> Check {
    let start = Instant::now();
    let config = CharacterizeConfig {
        n_max: 6,
        denominator: 64,
        ..CharacterizeConfig::default()
    };
    let run = |src: &str| -> Result<Outcome<infogeo::verify::Characterization>, String> {
        characterize(&CandidateFamily::parse(src).map_err(err)?, config).map_err(err)
    };
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9;
    let mut lines = Vec::new();

    let cov = run("COV")?.found().ok_or("COV produced a witness")?;
    if !(close(cov.c1, 1.0)
        && close(cov.c2, -1.0)
        && cov.centered
        && cov.verdict == "c·Cov with c=1")
    {
        return Err(format!(
            "COV: ({}, {}), centered {}, {:?}",
            cov.c1, cov.c2, cov.centered, cov.verdict
        ));
    }
    lines.push(format!("COV ({}, {}) '{}'", cov.c1, cov.c2, cov.verdict));
    let l2 = run("L2")?.found().ok_or("L2 produced a witness")?;
    if !(close(l2.c1, 1.0) && close(l2.c2, 0.0)) {
        return Err(format!("L2: ({}, {})", l2.c1, l2.c2));
    }
    lines.push(format!("L2 ({}, {})", l2.c1, l2.c2));
    let mm = run("MM")?.found().ok_or("MM produced a witness")?;
    if !(close(mm.c1, 0.0) && close(mm.c2, 1.0) && !mm.centered) {
        return Err(format!(
            "MM: ({}, {}), centered {}",
            mm.c1, mm.c2, mm.centered
        ));
    }
    lines.push(format!("MM ({}, {})", mm.c1, mm.c2));
    let pk = run("PK(2)")?.witness().ok_or("PK(2) was not rejected")?;
    match &pk.inputs {
        WitnessInputs::Invariance { surjection, .. } if surjection.n() != surjection.m() => {
            lines.push(format!(
                "PK(2) witness across n={} -> {} (gap {:.3})",
                surjection.n(),
                surjection.m(),
                pk.gap
            ));
        }
        other => return Err(format!("PK(2): unexpected witness {other:?}")),
    }
    let elapsed = start.elapsed();
    timed(Duration::from_secs(10), elapsed).map(|t| format!("{}; {t}", lines.join(", ")))
}

/// Max duality residual over coordinate-field triples on Bernoulli and the
/// 3-point categorical model.
fn coordinate_duality(fd: FiniteDifference) -> Result<f64, String> {
    let mut worst = 0f64;
    let theta = VectorField::coordinate(1, 0);
    worst = worst
        .max(duality_check(&Model::bernoulli(), &[0.3], &theta, &theta, &theta, fd).map_err(err)?);
    let cat = Model::categorical(3).map_err(err)?;
    let fields = [VectorField::coordinate(2, 0), VectorField::coordinate(2, 1)];
    for x in &fields {
        for y in &fields {
            for z in &fields {
                worst = worst.max(duality_check(&cat, &[0.2, 0.5], x, y, z, fd).map_err(err)?);
            }
        }
    }
    Ok(worst)
}

/// Residuals for fields with non-constant coefficients, on both models.
fn curved_duality(fd: FiniteDifference) -> Result<[f64; 2], String> {
    let x = VectorField::from_fn(1, |s| vec![s[0] * s[0]]);
    let y = VectorField::from_fn(1, |s| vec![(3.0 * s[0]).sin()]);
    let z = VectorField::from_fn(1, |s| vec![1.0 + s[0]]);
    let bern = duality_check(&Model::bernoulli(), &[0.3], &x, &y, &z, fd).map_err(err)?;
    let x = VectorField::from_fn(2, |s| vec![s[0] * s[1], s[0].sin()]);
    let y = VectorField::from_fn(2, |s| vec![s[1].cos(), s[0] * s[0]]);
    let z = VectorField::from_fn(2, |s| vec![1.0 + s[1], 0.5 - s[0]]);
    let cat = duality_check(
        &Model::categorical(3).map_err(err)?,
        &[0.2, 0.5],
        &x,
        &y,
        &z,
        fd,
    )
    .map_err(err)?;
    Ok([bern, cat])
}

fn connection_duality() -> Check {
    let step = FiniteDifference::with_step(1e-4);
    let half = FiniteDifference::with_step(5e-5);
    // For coordinate fields the discretization errors of the two sides cancel
    // exactly and only rounding is left; the convergence order is read off
    // fields whose coefficients vary.
    let coordinate = coordinate_duality(step)?;
    let coarse = curved_duality(step)?;
    let fine = curved_duality(half)?;
    let ratios = [coarse[0] / fine[0], coarse[1] / fine[1]];
    let ok = coordinate <= 1e-6
        && coarse.iter().all(|r| *r <= 1e-6)
        && ratios.iter().all(|r| (3.2..=4.8).contains(r));
    ensure(
        ok,
        format!(
            "step 1e-4: coordinate fields {coordinate:.1e}, varying fields {:.1e} (Bernoulli) / {:.1e} (categorical); halving ratio {:.3} / {:.3}",
            coarse[0], coarse[1], ratios[0], ratios[1]
        ),
    )
}

fn weak_invariance() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let maps: [(usize, Vec<usize>); 5] = [
        (2, vec![0, 0, 1]),
        (2, vec![0, 1, 1, 0]),
        (3, vec![0, 1, 2, 2]),
        (2, vec![0, 1, 0, 1, 1]),
        (3, vec![2, 0, 1, 0, 2]),
    ];
    let fd = FiniteDifference::default();
    let (mut worst, mut control) = (0f64, f64::INFINITY);
    for (m, map) in maps {
        let f = Surjection::new(m, map).map_err(err)?;
        let q = point(f.n(), &mut rng);
        let pair = canonical_embedding(&f, &q).map_err(err)?;
        for alpha in [-1.0, 0.0, 1.0] {
            let tag = ConnectionTag::alpha(alpha);
            let r = weak_invariance_check(&pair, tag, tag, 4, fd).map_err(err)?;
            worst = worst.max(r.residual_max);
        }
        let r =
            weak_invariance_check(&pair, ConnectionTag::E, ConnectionTag::M, 4, fd).map_err(err)?;
        control = control.min(r.residual_max);
    }
    ensure(
        worst <= 1e-6 && control > 1e-3,
        format!("α ∈ {{-1, 0, 1}} on 5 canonical pairs n<=5: residual {worst:.1e}; e-vs-m control {control:.2e}"),
    )
}

fn cli_determinism() -> Check {
    let failures: Vec<String> = common::CASES
        .iter()
        .filter_map(|c| common::check(c).err())
        .collect();
    ensure(
        failures.is_empty(),
        format!(
            "{} invocations over all subcommands, each run twice and compared with its golden file{}",
            common::CASES.len(),
            if failures.is_empty() { String::new() } else { format!(": {failures:?}") }
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("co-metric equals covariance", cometric_is_covariance),
        (
            "metric and co-metric Gram matrices are inverse",
            metric_and_cometric_are_inverse,
        ),
        ("Cramér–Rao bound", cramer_rao),
        ("monotonicity under channels", monotonicity),
        ("invariance under embeddings", invariance),
        ("strong invariance", strong_invariance),
        ("characterization probe", characterization_probe),
        ("e/m connection duality", connection_duality),
        ("weak invariance of α-connections", weak_invariance),
        ("CLI determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(format!(
                "panicked: {:?}",
                p.downcast_ref::<String>()
                    .map(String::as_str)
                    .or(p.downcast_ref::<&str>().copied())
            ))
        });
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {tag} {name}: {detail}", i + 1);
    }
    println!(
        "acceptance: {} of {} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
