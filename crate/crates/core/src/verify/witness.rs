//! Counterexample records, their evaluation, replay and greedy shrinking.

use serde::{Deserialize, Serialize};

use super::{adjoint_report, adjoint_residuals, BilinearFamily, CheckReport, Verdict};
use crate::error::{Error, Result};
use crate::geometry::{delta, fisher_cometric, fisher_metric, TangentVector};
use crate::markov::{
    apply, canonical_embedding, conditional_expectation, pullback, pushforward, Channel,
    EmbeddingPair, Surjection,
};
use crate::simplex::{Distribution, RandomVariable, SampleSpace};

/// Everything needed to re-evaluate one identity or inequality.
///
/// Variables are plain vectors; points are distributions given by weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WitnessInputs {
    /// Entry `(i, j)` of `γ_{u_n}(e_i, e_j)` against the fitted `a δ_ij + b`.
    UniformForm { n: usize, i: usize, j: usize },
    /// `γ_{q^F}(A, B) = γ_q(A∘F, B∘F)`.
    Invariance {
        surjection: Surjection,
        point: Vec<f64>,
        a: Vec<f64>,
        b: Vec<f64>,
    },
    /// `γ_p(A, B) = c1 <A|B>_p + c2 <A>_p <B>_p`.
    Decomposition {
        point: Vec<f64>,
        a: Vec<f64>,
        b: Vec<f64>,
        c1: f64,
        c2: f64,
    },
    /// `γ_p(A + s, B + s) = γ_p(A, B)`.
    Representative {
        point: Vec<f64>,
        a: Vec<f64>,
        b: Vec<f64>,
        shift: f64,
    },
    /// `γ_p(delta A, Phi^* delta B) = γ_{Phi(p)}(Psi^* delta A, delta B)` on centered representatives.
    PullbackIdentity {
        pair: EmbeddingPair,
        point: Vec<f64>,
        a: Vec<f64>,
        b: Vec<f64>,
    },
    /// `γ_{q^F}(A, E_V(B|.)) = γ_q(A∘F, B)`.
    StrongCovariance {
        pair: EmbeddingPair,
        point: Vec<f64>,
        a: Vec<f64>,
        b: Vec<f64>,
    },
    /// `g_p(X, Y) = g_{Phi(p)}(Phi_* X, Phi_* Y)`.
    EmbeddingMetric {
        pair: EmbeddingPair,
        point: Vec<f64>,
        x: Vec<f64>,
        y: Vec<f64>,
    },
    /// `g_{q^F}(delta A, delta B) = g_q(Psi^* delta A, Psi^* delta B)`.
    EmbeddingCometric {
        pair: EmbeddingPair,
        point: Vec<f64>,
        a: Vec<f64>,
        b: Vec<f64>,
    },
    /// Largest adjoint/projector matrix residual at `p`, against zero.
    Adjoint {
        pair: EmbeddingPair,
        point: Vec<f64>,
    },
    /// `g_{W(p)}(W_* X, W_* X) <= g_p(X, X)`.
    MonotoneMetric {
        channel: Channel,
        point: Vec<f64>,
        x: Vec<f64>,
    },
    /// `γ_p(delta E_W(A|.), same) <= γ_{W(p)}(delta A, same)` on centered representatives.
    MonotoneCometric {
        channel: Channel,
        point: Vec<f64>,
        a: Vec<f64>,
    },
}

impl WitnessInputs {
    /// Inequalities `lhs <= rhs` rather than identities.
    pub fn is_inequality(&self) -> bool {
        matches!(
            self,
            WitnessInputs::MonotoneMetric { .. } | WitnessInputs::MonotoneCometric { .. }
        )
    }
}

/// A stored counterexample with both sides of the failing relation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub family: String,
    pub inputs: WitnessInputs,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    pub seed: Option<u64>,
    pub trial: Option<u64>,
}

impl Witness {
    pub fn new<F: BilinearFamily + ?Sized>(
        inputs: WitnessInputs,
        family: &F,
        seed: Option<u64>,
        trial: Option<u64>,
    ) -> Result<Self> {
        let r = evaluate_report(&inputs, family)?;
        Ok(Self {
            family: family.name(),
            inputs,
            lhs: r.lhs,
            rhs: r.rhs,
            gap: r.gap,
            seed,
            trial,
        })
    }

    /// Re-evaluates the stored inputs; the result equals the stored sides bitwise.
    pub fn replay<F: BilinearFamily + ?Sized>(&self, family: &F) -> Result<CheckReport> {
        evaluate_report(&self.inputs, family)
    }

    pub fn verdict(&self) -> Verdict {
        Verdict::from_gap(self.gap)
    }
}

fn point(w: &[f64]) -> Result<Distribution> {
    Distribution::from_weights(w)
}

fn rv(v: &[f64]) -> RandomVariable {
    RandomVariable::new(v.to_vec())
}

fn uniform_matrix<F: BilinearFamily + ?Sized>(family: &F, n: usize) -> Result<Vec<Vec<f64>>> {
    let space = SampleSpace::new(n)?;
    let u = Distribution::uniform(space);
    Ok((0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    family.eval(
                        &u,
                        RandomVariable::indicator(space, i).values(),
                        RandomVariable::indicator(space, j).values(),
                    )
                })
                .collect()
        })
        .collect())
}

/// `(a, b)` from the mean diagonal and mean off-diagonal entries.
pub(crate) fn fit_uniform(matrix: &[Vec<f64>]) -> (f64, f64) {
    let n = matrix.len();
    let diag = (0..n).map(|i| matrix[i][i]).sum::<f64>() / n as f64;
    let off = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| matrix[i][j])
        .sum::<f64>()
        / (n * (n - 1)) as f64;
    (diag - off, off)
}

/// Both sides of the relation described by `inputs`.
pub fn evaluate<F: BilinearFamily + ?Sized>(
    inputs: &WitnessInputs,
    family: &F,
) -> Result<(f64, f64)> {
    match inputs {
        WitnessInputs::UniformForm { n, i, j } => {
            if i >= n || j >= n {
                return Err(Error::InvalidParameter(format!(
                    "index out of range for n = {n}"
                )));
            }
            let m = uniform_matrix(family, *n)?;
            let (a, b) = fit_uniform(&m);
            Ok((m[*i][*j], if i == j { a + b } else { b }))
        }
        WitnessInputs::Invariance {
            surjection,
            point: q,
            a,
            b,
        } => {
            let q = point(q)?;
            let qf = apply(&crate::markov::coembedding(surjection), &q)?;
            let (a, b) = (rv(a), rv(b));
            let af = surjection.compose_variable(&a)?;
            let bf = surjection.compose_variable(&b)?;
            Ok((
                family.eval(&qf, a.values(), b.values()),
                family.eval(&q, af.values(), bf.values()),
            ))
        }
        WitnessInputs::Decomposition {
            point: p,
            a,
            b,
            c1,
            c2,
        } => {
            let p = point(p)?;
            let (ra, rb) = (rv(a), rv(b));
            crate::simplex::check_len(p.len(), a.len())?;
            crate::simplex::check_len(p.len(), b.len())?;
            let rhs = c1 * p.inner_l2(&ra, &rb)? + c2 * p.expect(&ra)? * p.expect(&rb)?;
            Ok((family.eval(&p, a, b), rhs))
        }
        WitnessInputs::Representative {
            point: p,
            a,
            b,
            shift,
        } => {
            let p = point(p)?;
            crate::simplex::check_len(p.len(), a.len())?;
            crate::simplex::check_len(p.len(), b.len())?;
            let sa: Vec<f64> = a.iter().map(|v| v + shift).collect();
            let sb: Vec<f64> = b.iter().map(|v| v + shift).collect();
            Ok((family.eval(&p, &sa, &sb), family.eval(&p, a, b)))
        }
        WitnessInputs::PullbackIdentity {
            pair,
            point: p,
            a,
            b,
        } => {
            let p = point(p)?;
            let phi = pair.embedding_channel();
            let psi = pair.coembedding_channel();
            let q = apply(&phi, &p)?;
            let alpha = delta(&p, &rv(a))?;
            let beta = delta(&q, &rv(b))?;
            let phi_beta = pullback(&phi, &p, &beta)?;
            let psi_alpha = pullback(&psi, &q, &alpha)?;
            Ok((
                family.eval(&p, alpha.rep().values(), phi_beta.rep().values()),
                family.eval(&q, psi_alpha.rep().values(), beta.rep().values()),
            ))
        }
        WitnessInputs::StrongCovariance {
            pair,
            point: q,
            a,
            b,
        } => {
            let q = point(q)?;
            let qf = apply(&pair.coembedding_channel(), &q)?;
            let eb = conditional_expectation(&pair.embedding_channel(), &rv(b))?;
            let af = pair.surjection().compose_variable(&rv(a))?;
            Ok((
                family.eval(&qf, a, eb.values()),
                family.eval(&q, af.values(), b),
            ))
        }
        WitnessInputs::EmbeddingMetric {
            pair,
            point: p,
            x,
            y,
        } => {
            let p = point(p)?;
            let phi = pair.embedding_channel();
            let x = TangentVector::new(p.clone(), x.clone())?;
            let y = TangentVector::new(p.clone(), y.clone())?;
            Ok((
                fisher_metric(&x, &y)?,
                fisher_metric(&pushforward(&phi, &p, &x)?, &pushforward(&phi, &p, &y)?)?,
            ))
        }
        WitnessInputs::EmbeddingCometric {
            pair,
            point: q,
            a,
            b,
        } => {
            let q = point(q)?;
            let psi = pair.coembedding_channel();
            let qf = apply(&psi, &q)?;
            let alpha = delta(&qf, &rv(a))?;
            let beta = delta(&qf, &rv(b))?;
            Ok((
                fisher_cometric(&alpha, &beta)?,
                fisher_cometric(&pullback(&psi, &q, &alpha)?, &pullback(&psi, &q, &beta)?)?,
            ))
        }
        WitnessInputs::Adjoint { pair, point: p } => {
            Ok((adjoint_residuals(pair, &point(p)?)?.max(), 0.0))
        }
        WitnessInputs::MonotoneMetric {
            channel,
            point: p,
            x,
        } => {
            let p = point(p)?;
            let x = TangentVector::new(p.clone(), x.clone())?;
            let y = pushforward(channel, &p, &x)?;
            Ok((fisher_metric(&y, &y)?, fisher_metric(&x, &x)?))
        }
        WitnessInputs::MonotoneCometric {
            channel,
            point: p,
            a,
        } => {
            let p = point(p)?;
            let q = apply(channel, &p)?;
            let alpha = delta(&q, &rv(a))?;
            let back = pullback(channel, &p, &alpha)?;
            Ok((
                family.eval(&p, back.rep().values(), back.rep().values()),
                family.eval(&q, alpha.rep().values(), alpha.rep().values()),
            ))
        }
    }
}

/// [`evaluate`] with the gap and verdict attached.
pub fn evaluate_report<F: BilinearFamily + ?Sized>(
    inputs: &WitnessInputs,
    family: &F,
) -> Result<CheckReport> {
    let (lhs, rhs) = evaluate(inputs, family)?;
    Ok(match inputs {
        WitnessInputs::Adjoint { .. } => adjoint_report(lhs),
        i if i.is_inequality() => CheckReport::at_most(lhs, rhs),
        _ => CheckReport::equality(lhs, rhs),
    })
}

/// Upper bound on accepted shrinking steps.
const SHRINK_STEPS: usize = 256;

/// Greedy minimization: first the sample-space size, then the support of the variables.
///
/// A candidate is accepted when it still evaluates to a violation; the
/// returned witness carries the sides of its own (re-evaluated) inputs.
pub fn shrink<F: BilinearFamily + ?Sized>(witness: Witness, family: &F) -> Witness {
    let mut current = witness;
    for _ in 0..SHRINK_STEPS {
        let next = size_candidates(&current.inputs)
            .into_iter()
            .chain(support_candidates(&current.inputs))
            .find_map(|c| {
                let w = Witness::new(c, family, current.seed, current.trial).ok()?;
                (w.verdict() == Verdict::Violation).then_some(w)
            });
        match next {
            Some(w) => current = w,
            None => break,
        }
    }
    current
}

/// Weights restricted to `keep`, renormalized with the residue folded into the largest.
fn restrict_weights(w: &[f64], keep: &[usize]) -> Vec<f64> {
    let total: f64 = keep.iter().map(|&i| w[i]).sum();
    let mut out: Vec<f64> = keep.iter().map(|&i| w[i] / total).collect();
    let residue = 1.0 - out.iter().sum::<f64>();
    if let Some(top) = (0..out.len()).max_by(|&a, &b| out[a].total_cmp(&out[b])) {
        out[top] += residue;
    }
    out
}

fn select(v: &[f64], keep: &[usize]) -> Vec<f64> {
    keep.iter().map(|&i| v[i]).collect()
}

/// Surjections with one domain point removed (its fiber keeps another point),
/// or with one codomain point and its whole fiber removed.
/// Returns `(F', kept domain points, kept codomain points)`.
fn smaller_surjections(f: &Surjection) -> Vec<(Surjection, Vec<usize>, Vec<usize>)> {
    let mut out = Vec::new();
    let all_cod: Vec<usize> = (0..f.m()).collect();
    for y in 0..f.n() {
        if f.fiber(f.map()[y]).len() < 2 {
            continue;
        }
        let keep: Vec<usize> = (0..f.n()).filter(|&z| z != y).collect();
        if let Ok(g) = Surjection::new(f.m(), select_idx(f.map(), &keep)) {
            out.push((g, keep, all_cod.clone()));
        }
    }
    if f.m() > 2 {
        for x in 0..f.m() {
            let keep: Vec<usize> = (0..f.n()).filter(|&z| f.map()[z] != x).collect();
            let map = keep
                .iter()
                .map(|&z| {
                    let k = f.map()[z];
                    if k > x {
                        k - 1
                    } else {
                        k
                    }
                })
                .collect();
            let cod: Vec<usize> = (0..f.m()).filter(|&k| k != x).collect();
            if let Ok(g) = Surjection::new(f.m() - 1, map) {
                out.push((g, keep, cod));
            }
        }
    }
    out
}

fn select_idx(v: &[usize], keep: &[usize]) -> Vec<usize> {
    keep.iter().map(|&i| v[i]).collect()
}

fn smaller_pair(
    pair: &EmbeddingPair,
    g: Surjection,
    dom: &[usize],
    cod: &[usize],
) -> Option<EmbeddingPair> {
    let r = cod
        .iter()
        .map(|&x| restrict_weights(&pair.r()[x], dom))
        .collect::<Vec<_>>();
    EmbeddingPair::new(g, r).ok()
}

fn size_candidates(inputs: &WitnessInputs) -> Vec<WitnessInputs> {
    let mut out = Vec::new();
    match inputs {
        WitnessInputs::Invariance {
            surjection,
            point,
            a,
            b,
        } => {
            for (g, dom, cod) in smaller_surjections(surjection) {
                out.push(WitnessInputs::Invariance {
                    surjection: g,
                    point: restrict_weights(point, &dom),
                    a: select(a, &cod),
                    b: select(b, &cod),
                });
            }
        }
        WitnessInputs::Decomposition {
            point,
            a,
            b,
            c1,
            c2,
        } if point.len() > 2 => {
            for i in 0..point.len() {
                let keep: Vec<usize> = (0..point.len()).filter(|&j| j != i).collect();
                out.push(WitnessInputs::Decomposition {
                    point: restrict_weights(point, &keep),
                    a: select(a, &keep),
                    b: select(b, &keep),
                    c1: *c1,
                    c2: *c2,
                });
            }
        }
        WitnessInputs::Representative { point, a, b, shift } if point.len() > 2 => {
            for i in 0..point.len() {
                let keep: Vec<usize> = (0..point.len()).filter(|&j| j != i).collect();
                out.push(WitnessInputs::Representative {
                    point: restrict_weights(point, &keep),
                    a: select(a, &keep),
                    b: select(b, &keep),
                    shift: *shift,
                });
            }
        }
        WitnessInputs::PullbackIdentity { pair, point, a, b } => {
            for (g, dom, cod) in smaller_surjections(pair.surjection()) {
                if let Some(pair) = smaller_pair(pair, g, &dom, &cod) {
                    out.push(WitnessInputs::PullbackIdentity {
                        pair,
                        point: restrict_weights(point, &cod),
                        a: select(a, &cod),
                        b: select(b, &dom),
                    });
                }
            }
        }
        WitnessInputs::StrongCovariance { pair, point, a, b } => {
            for (g, dom, cod) in smaller_surjections(pair.surjection()) {
                let q = restrict_weights(point, &dom);
                let Ok(qd) = Distribution::from_weights(&q) else {
                    continue;
                };
                if let Ok(pair) = canonical_embedding(&g, &qd) {
                    out.push(WitnessInputs::StrongCovariance {
                        pair,
                        point: q,
                        a: select(a, &cod),
                        b: select(b, &dom),
                    });
                }
            }
        }
        WitnessInputs::EmbeddingCometric { pair, point, a, b } => {
            for (g, dom, cod) in smaller_surjections(pair.surjection()) {
                if let Some(pair) = smaller_pair(pair, g, &dom, &cod) {
                    out.push(WitnessInputs::EmbeddingCometric {
                        pair,
                        point: restrict_weights(point, &dom),
                        a: select(a, &cod),
                        b: select(b, &cod),
                    });
                }
            }
        }
        _ => {}
    }
    out
}

/// The variables whose support may be shrunk.
fn variables_mut(inputs: &mut WitnessInputs) -> Vec<&mut Vec<f64>> {
    match inputs {
        WitnessInputs::Invariance { a, b, .. }
        | WitnessInputs::Decomposition { a, b, .. }
        | WitnessInputs::Representative { a, b, .. }
        | WitnessInputs::PullbackIdentity { a, b, .. }
        | WitnessInputs::StrongCovariance { a, b, .. }
        | WitnessInputs::EmbeddingCometric { a, b, .. } => vec![a, b],
        WitnessInputs::MonotoneCometric { a, .. } => vec![a],
        _ => Vec::new(),
    }
}

/// Copies of `inputs` with one nonzero entry of one variable set to zero.
fn support_candidates(inputs: &WitnessInputs) -> Vec<WitnessInputs> {
    let mut probe = inputs.clone();
    let shapes: Vec<Vec<usize>> = variables_mut(&mut probe)
        .into_iter()
        .map(|v| (0..v.len()).filter(|&i| v[i] != 0.0).collect())
        .collect();
    let mut out = Vec::new();
    for (k, nonzero) in shapes.iter().enumerate() {
        for &i in nonzero {
            let mut c = inputs.clone();
            variables_mut(&mut c)[k][i] = 0.0;
            out.push(c);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::CandidateFamily;

    fn f112() -> Surjection {
        Surjection::new(2, vec![0, 0, 1]).unwrap()
    }

    #[test]
    fn replay_is_bitwise() {
        let fam = CandidateFamily::parse("PK(2)").unwrap();
        let w = Witness::new(
            WitnessInputs::Invariance {
                surjection: f112(),
                point: vec![0.2, 0.3, 0.5],
                a: vec![1.3, -0.4],
                b: vec![0.7, 2.0],
            },
            &fam,
            Some(7),
            Some(3),
        )
        .unwrap();
        assert_eq!(w.verdict(), Verdict::Violation);
        let json = serde_json::to_string(&w).unwrap();
        let back: Witness = serde_json::from_str(&json).unwrap();
        let r = back.replay(&fam).unwrap();
        assert_eq!(r.lhs.to_bits(), w.lhs.to_bits());
        assert_eq!(r.rhs.to_bits(), w.rhs.to_bits());
        assert_eq!(r.gap.to_bits(), w.gap.to_bits());
    }

    #[test]
    fn shrinking_reduces_size_and_support() {
        let fam = CandidateFamily::parse("PK(2)").unwrap();
        let f = Surjection::new(3, vec![0, 1, 2, 0, 1, 2]).unwrap();
        let w = Witness::new(
            WitnessInputs::Invariance {
                surjection: f,
                point: vec![0.1, 0.2, 0.15, 0.25, 0.2, 0.1],
                a: vec![1.0, 2.0, 3.0],
                b: vec![-1.0, 0.5, 2.0],
            },
            &fam,
            None,
            None,
        )
        .unwrap();
        let small = shrink(w.clone(), &fam);
        assert_eq!(small.verdict(), Verdict::Violation);
        let WitnessInputs::Invariance { surjection, a, .. } = &small.inputs else {
            panic!()
        };
        assert!(surjection.n() < 6);
        assert!(a.iter().filter(|v| **v != 0.0).count() <= 2);
        let r = small.replay(&fam).unwrap();
        assert_eq!(r.gap.to_bits(), small.gap.to_bits());
    }

    #[test]
    fn fisher_relations_hold_on_examples() {
        let fam = CandidateFamily::cov();
        let q = vec![0.25, 0.25, 0.5];
        let pair = canonical_embedding(&f112(), &point(&q).unwrap()).unwrap();
        for inputs in [
            WitnessInputs::Invariance {
                surjection: f112(),
                point: q.clone(),
                a: vec![1.0, 0.0],
                b: vec![1.0, 0.0],
            },
            WitnessInputs::StrongCovariance {
                pair: pair.clone(),
                point: q.clone(),
                a: vec![1.0, 0.0],
                b: vec![1.0, 2.0, 3.0],
            },
            WitnessInputs::Adjoint {
                pair: pair.clone(),
                point: vec![0.5, 0.5],
            },
        ] {
            assert_eq!(
                evaluate_report(&inputs, &fam).unwrap().verdict,
                Verdict::Pass,
                "{inputs:?}"
            );
        }
        let (l, r) = evaluate(
            &WitnessInputs::Invariance {
                surjection: f112(),
                point: q.clone(),
                a: vec![1.0, 0.0],
                b: vec![1.0, 0.0],
            },
            &fam,
        )
        .unwrap();
        assert_eq!((l, r), (0.25, 0.25));
    }
}
