//! Channels, Markov maps and embedding/co-embedding pairs.
//!
//! Kernels are stored as `W(y|x)` with rows indexed by the output `y` and
//! columns by the input `x`, so `apply` is a matrix-vector product.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{delta, CotangentVector, TangentVector};
use crate::simplex::{check_len, Distribution, RandomVariable, SampleSpace};
use crate::tolerance;

/// Per-entry floor of [`random_channel`].
pub const CHANNEL_FLOOR: f64 = 1e-3;

/// A column-stochastic kernel with no identically-zero output row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChannelJson", into = "ChannelJson")]
pub struct Channel {
    n_in: usize,
    n_out: usize,
    kernel: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct ChannelJson {
    n_in: usize,
    n_out: usize,
    kernel: Vec<Vec<f64>>,
}

impl TryFrom<ChannelJson> for Channel {
    type Error = Error;

    fn try_from(raw: ChannelJson) -> Result<Self> {
        check_len(raw.n_out, raw.kernel.len())?;
        Channel::new(raw.n_in, raw.kernel)
    }
}

impl From<Channel> for ChannelJson {
    fn from(c: Channel) -> Self {
        ChannelJson {
            n_in: c.n_in,
            n_out: c.n_out,
            kernel: c.kernel,
        }
    }
}

impl Channel {
    /// `kernel[y][x] = W(y|x)`.
    pub fn new(n_in: usize, kernel: Vec<Vec<f64>>) -> Result<Self> {
        SampleSpace::new(n_in)?;
        let n_out = SampleSpace::new(kernel.len())?.size();
        for row in &kernel {
            check_len(n_in, row.len())?;
        }
        for (y, row) in kernel.iter().enumerate() {
            if let Some(x) = row.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
                return Err(Error::InvalidChannel(format!(
                    "W({y}|{x}) = {} is not a probability",
                    row[x]
                )));
            }
            if !row.iter().any(|&w| w > 0.0) {
                return Err(Error::InvalidChannel(format!(
                    "output {y} is never reached"
                )));
            }
        }
        for x in 0..n_in {
            let s: f64 = kernel.iter().map(|row| row[x]).sum();
            if (s - 1.0).abs() > tolerance::CHANNEL_COLUMN {
                return Err(Error::InvalidChannel(format!(
                    "column {x} sums to {s}, not 1"
                )));
            }
        }
        Ok(Self {
            n_in,
            n_out,
            kernel,
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new(
            n,
            (0..n)
                .map(|y| (0..n).map(|x| if x == y { 1.0 } else { 0.0 }).collect())
                .collect(),
        )
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn kernel(&self) -> &[Vec<f64>] {
        &self.kernel
    }

    /// `W(y|x)`.
    pub fn at(&self, y: usize, x: usize) -> f64 {
        self.kernel[y][x]
    }

    fn matvec(&self, v: &[f64]) -> Vec<f64> {
        self.kernel
            .iter()
            .map(|row| row.iter().zip(v).map(|(w, a)| w * a).sum())
            .collect()
    }
}

/// The Markov map `Phi_W(p) = sum_x W(.|x) p(x)`.
pub fn apply(w: &Channel, p: &Distribution) -> Result<Distribution> {
    check_len(w.n_in, p.len())?;
    Distribution::from_weights(&w.matvec(p.weights()))
}

/// Differential of the Markov map; acts on m-representations by the kernel.
pub fn pushforward(w: &Channel, p: &Distribution, x: &TangentVector) -> Result<TangentVector> {
    check_len(w.n_in, p.len())?;
    if x.base() != p {
        return Err(Error::BasePointMismatch);
    }
    TangentVector::projected(apply(w, p)?, w.matvec(x.m_rep()))
}

/// `E_W(A|x) = sum_y W(y|x) A(y)`.
pub fn conditional_expectation(w: &Channel, a: &RandomVariable) -> Result<RandomVariable> {
    check_len(w.n_out, a.len())?;
    Ok(RandomVariable::new(
        (0..w.n_in)
            .map(|x| {
                w.kernel
                    .iter()
                    .zip(a.values())
                    .map(|(row, v)| row[x] * v)
                    .sum()
            })
            .collect(),
    ))
}

/// Transpose of [`pushforward`]: `Phi^*(delta_{Phi(p)} A) = delta_p(E_W(A|.))`.
///
/// `alpha` must sit at `apply(w, p)`; base points are compared to within
/// `NORMALIZATION` so that recomputed images are accepted.
pub fn pullback(w: &Channel, p: &Distribution, alpha: &CotangentVector) -> Result<CotangentVector> {
    check_len(w.n_in, p.len())?;
    check_len(w.n_out, alpha.rep().len())?;
    let image = apply(w, p)?;
    if !near(&image, alpha.base()) {
        return Err(Error::BasePointMismatch);
    }
    delta(p, &conditional_expectation(w, alpha.rep())?)
}

/// `W2 ∘ W1`: first `w1`, then `w2`.
pub fn compose(w2: &Channel, w1: &Channel) -> Result<Channel> {
    check_len(w2.n_in, w1.n_out)?;
    let kernel = w2
        .kernel
        .iter()
        .map(|row2| {
            (0..w1.n_in)
                .map(|x| {
                    row2.iter()
                        .zip(&w1.kernel)
                        .map(|(a, row1)| a * row1[x])
                        .sum()
                })
                .collect()
        })
        .collect::<Vec<Vec<f64>>>();
    renormalized(w1.n_in, kernel)
}

pub(crate) fn near(a: &Distribution, b: &Distribution) -> bool {
    a.len() == b.len()
        && a.weights()
            .iter()
            .zip(b.weights())
            .all(|(x, y)| (x - y).abs() <= tolerance::NORMALIZATION)
}

/// Folds each column's rounding residue into its largest entry before validation.
fn renormalized(n_in: usize, mut kernel: Vec<Vec<f64>>) -> Result<Channel> {
    for x in 0..n_in {
        let s: f64 = kernel.iter().map(|row| row[x]).sum();
        let top = (0..kernel.len())
            .max_by(|&a, &b| kernel[a][x].total_cmp(&kernel[b][x]))
            .unwrap_or(0);
        kernel[top][x] += 1.0 - s;
    }
    Channel::new(n_in, kernel)
}

/// A surjection `F: Ω_n -> Ω_m`.
///
/// JSON uses 1-based indices, `{"n": 3, "m": 2, "map": [1, 1, 2]}`; the
/// in-memory map is 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SurjectionJson", into = "SurjectionJson")]
pub struct Surjection {
    m: usize,
    map: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct SurjectionJson {
    n: usize,
    m: usize,
    map: Vec<usize>,
}

impl TryFrom<SurjectionJson> for Surjection {
    type Error = Error;

    fn try_from(raw: SurjectionJson) -> Result<Self> {
        check_len(raw.n, raw.map.len())?;
        if let Some(&bad) = raw.map.iter().find(|&&k| k == 0 || k > raw.m) {
            return Err(Error::InvalidParameter(format!(
                "surjection value {bad} outside 1..={}",
                raw.m
            )));
        }
        Surjection::new(raw.m, raw.map.iter().map(|k| k - 1).collect())
    }
}

impl From<Surjection> for SurjectionJson {
    fn from(f: Surjection) -> Self {
        SurjectionJson {
            n: f.map.len(),
            m: f.m,
            map: f.map.iter().map(|k| k + 1).collect(),
        }
    }
}

impl Surjection {
    /// `map[y] = F(y)`, 0-based.
    pub fn new(m: usize, map: Vec<usize>) -> Result<Self> {
        SampleSpace::new(m)?;
        if map.len() < m {
            return Err(Error::BadSize(map.len(), m));
        }
        if let Some(&bad) = map.iter().find(|&&k| k >= m) {
            return Err(Error::InvalidParameter(format!(
                "surjection value {bad} outside 0..{m}"
            )));
        }
        let mut hit = vec![false; m];
        map.iter().for_each(|&k| hit[k] = true);
        if let Some(x) = hit.iter().position(|h| !h) {
            return Err(Error::NotSurjective(x));
        }
        Ok(Self { m, map })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new(n, (0..n).collect())
    }

    /// Consecutive blocks of `block` points: `F(y) = floor(y / block)`.
    pub fn blocks(m: usize, block: usize) -> Result<Self> {
        Self::new(m, (0..m * block).map(|y| y / block).collect())
    }

    /// Consecutive blocks of the given sizes.
    pub fn partition(sizes: &[usize]) -> Result<Self> {
        let map = sizes
            .iter()
            .enumerate()
            .flat_map(|(x, &s)| std::iter::repeat_n(x, s))
            .collect();
        Self::new(sizes.len(), map)
    }

    /// Size of the domain.
    pub fn n(&self) -> usize {
        self.map.len()
    }

    /// Size of the codomain.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    /// `F^{-1}(x)` in increasing order.
    pub fn fiber(&self, x: usize) -> Vec<usize> {
        (0..self.map.len()).filter(|&y| self.map[y] == x).collect()
    }

    /// `A ∘ F` for `A` on the codomain.
    pub fn compose_variable(&self, a: &RandomVariable) -> Result<RandomVariable> {
        check_len(self.m, a.len())?;
        Ok(RandomVariable::new(
            self.map.iter().map(|&x| a.values()[x]).collect(),
        ))
    }
}

/// The deterministic channel `W(x|y) = [x = F(y)]`, i.e. `q -> q^F`.
pub fn coembedding(f: &Surjection) -> Channel {
    let kernel = (0..f.m)
        .map(|x| {
            f.map
                .iter()
                .map(|&fx| if fx == x { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    Channel::new(f.n(), kernel).expect("surjection yields a valid channel")
}

/// An embedding `Phi(p) = sum_x p(x) r_x` paired with the marginalization along `F`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EmbeddingPairJson", into = "EmbeddingPairJson")]
pub struct EmbeddingPair {
    surjection: Surjection,
    r: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct EmbeddingPairJson {
    surjection: Surjection,
    r: Vec<Vec<f64>>,
}

impl TryFrom<EmbeddingPairJson> for EmbeddingPair {
    type Error = Error;

    fn try_from(raw: EmbeddingPairJson) -> Result<Self> {
        EmbeddingPair::new(raw.surjection, raw.r)
    }
}

impl From<EmbeddingPair> for EmbeddingPairJson {
    fn from(e: EmbeddingPair) -> Self {
        EmbeddingPairJson {
            surjection: e.surjection,
            r: e.r,
        }
    }
}

impl EmbeddingPair {
    /// `r[x]` is a distribution on the domain of `f` supported exactly on `F^{-1}(x)`.
    pub fn new(surjection: Surjection, r: Vec<Vec<f64>>) -> Result<Self> {
        check_len(surjection.m(), r.len())?;
        for (x, rx) in r.iter().enumerate() {
            check_len(surjection.n(), rx.len())?;
            for (y, &v) in rx.iter().enumerate() {
                let inside = surjection.map[y] == x;
                if !v.is_finite() || v < 0.0 || (v > 0.0) != inside {
                    return Err(Error::InvalidChannel(format!(
                        "r_{x}({y}) = {v} but the support must be F^-1({x})"
                    )));
                }
            }
            let s: f64 = rx.iter().sum();
            if (s - 1.0).abs() > tolerance::NORMALIZATION {
                return Err(Error::NotNormalized(s));
            }
        }
        Ok(Self { surjection, r })
    }

    /// Random splitting weights drawn uniformly on each fiber's simplex.
    pub fn random<R: Rng + ?Sized>(surjection: Surjection, rng: &mut R) -> Result<Self> {
        let n = surjection.n();
        let mut r = vec![vec![0.0; n]; surjection.m()];
        for (x, rx) in r.iter_mut().enumerate() {
            let fiber = surjection.fiber(x);
            let draws: Vec<f64> = fiber.iter().map(|_| rng.sample::<f64, _>(Exp1)).collect();
            let total: f64 = draws.iter().sum();
            for (&y, d) in fiber.iter().zip(&draws) {
                rx[y] = d / total;
            }
            let residue = 1.0 - rx.iter().sum::<f64>();
            rx[fiber[0]] += residue;
        }
        Self::new(surjection, r)
    }

    pub fn surjection(&self) -> &Surjection {
        &self.surjection
    }

    pub fn r(&self) -> &[Vec<f64>] {
        &self.r
    }

    /// `Phi`, as the channel `V(y|x) = r_x(y)` from `Ω_m` to `Ω_n`.
    pub fn embedding_channel(&self) -> Channel {
        let n = self.surjection.n();
        let kernel = (0..n)
            .map(|y| self.r.iter().map(|rx| rx[y]).collect())
            .collect();
        renormalized(self.surjection.m(), kernel).expect("validated splitting weights")
    }

    /// `Psi`, the marginalization `q -> q^F`.
    pub fn coembedding_channel(&self) -> Channel {
        coembedding(&self.surjection)
    }
}

/// The embedding through `q`: `r_x(y) = q(y) / q^F(x)`, so `Phi(q^F) = q`.
pub fn canonical_embedding(f: &Surjection, q: &Distribution) -> Result<EmbeddingPair> {
    check_len(f.n(), q.len())?;
    let marginal = apply(&coembedding(f), q)?;
    let r = (0..f.m())
        .map(|x| {
            let fiber = f.fiber(x);
            let mut rx = vec![0.0; f.n()];
            for &y in &fiber {
                rx[y] = q.weights()[y] / marginal.weights()[x];
            }
            let residue = 1.0 - rx.iter().sum::<f64>();
            let top = *fiber
                .iter()
                .max_by(|&&a, &&b| rx[a].total_cmp(&rx[b]))
                .expect("fibers are nonempty");
            rx[top] += residue;
            rx
        })
        .collect();
    EmbeddingPair::new(f.clone(), r)
}

/// Deterministic random channel with every entry at least [`CHANNEL_FLOOR`].
///
/// Each column is `floor + (1 - n_out * floor) * d` for a flat Dirichlet draw `d`;
/// for `n_out >= 1 / CHANNEL_FLOOR` the floor shrinks to `1 / (2 n_out)`.
pub fn random_channel(n_in: usize, n_out: usize, seed: u64) -> Result<Channel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_channel_with(n_in, n_out, &mut rng)
}

/// Same as [`random_channel`] with a caller-supplied generator.
pub fn random_channel_with<R: Rng + ?Sized>(
    n_in: usize,
    n_out: usize,
    rng: &mut R,
) -> Result<Channel> {
    if n_in < 2 || n_out < 2 {
        return Err(Error::BadSize(n_in, n_out));
    }
    let floor = CHANNEL_FLOOR.min(0.5 / n_out as f64);
    let mass = 1.0 - n_out as f64 * floor;
    let mut kernel = vec![vec![0.0; n_in]; n_out];
    for x in 0..n_in {
        let draws: Vec<f64> = (0..n_out).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let total: f64 = draws.iter().sum();
        for (row, d) in kernel.iter_mut().zip(&draws) {
            row[x] = floor + mass * d / total;
        }
    }
    renormalized(n_in, kernel)
}

/// Uniformly shuffled surjection `Ω_n -> Ω_m` hitting every point.
pub fn random_surjection<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<Surjection> {
    if m < 2 || n < m {
        return Err(Error::BadSize(n, m));
    }
    let mut map: Vec<usize> = (0..m)
        .chain((m..n).map(|_| rng.random_range(0..m)))
        .collect();
    map.shuffle(rng);
    Surjection::new(m, map)
}
