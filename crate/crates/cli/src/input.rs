//! Loading JSON inputs. Every loader validates through the library types.

use std::fmt;
use std::fs;
use std::path::Path;

use infogeo::{
    canonical_embedding, coembedding, delta, Channel, CotangentVector, Distribution, EmbeddingPair,
    RandomVariable, Surjection, TangentVector,
};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;

/// Largest per-entry gap accepted between a base point written in a vector
/// file and the base point the command computes itself.
pub const BASE_TOLERANCE: f64 = 1e-9;

/// A failure that maps to exit code 2.
#[derive(Debug)]
pub struct InputError {
    pub kind: String,
    pub message: String,
}

impl InputError {
    pub fn new(kind: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            kind: kind.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl From<infogeo::Error> for InputError {
    fn from(e: infogeo::Error) -> Self {
        Self::new(e.kind(), e.to_string())
    }
}

pub type Input<T> = std::result::Result<T, InputError>;

fn read_value(path: &Path) -> Input<Value> {
    let text = fs::read_to_string(path)
        .map_err(|e| InputError::new("io", format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| InputError::new("json", format!("{}: {e}", path.display())))
}

fn from_value<T: DeserializeOwned>(path: &Path, value: Value) -> Input<T> {
    serde_json::from_value(value)
        .map_err(|e| InputError::new("json", format!("{}: {e}", path.display())))
}

pub fn load<T: DeserializeOwned>(path: &Path) -> Input<T> {
    from_value(path, read_value(path)?)
}

fn has(value: &Value, key: &str) -> bool {
    value.get(key).is_some()
}

/// A channel file holds a channel, a surjection (its co-embedding), an
/// embedding pair `{surjection, r}`, or a canonical pair `{surjection, q}`.
pub fn load_channel(path: &Path) -> Input<Channel> {
    let value = read_value(path)?;
    if has(&value, "kernel") {
        from_value(path, value)
    } else if has(&value, "surjection") {
        Ok(pair_from_value(path, value)?.embedding_channel())
    } else if has(&value, "map") {
        Ok(coembedding(&from_value::<Surjection>(path, value)?))
    } else {
        Err(InputError::new(
            "json",
            format!(
                "{}: expected a channel, surjection or embedding pair",
                path.display()
            ),
        ))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CanonicalJson {
    surjection: Surjection,
    q: Distribution,
}

fn pair_from_value(path: &Path, value: Value) -> Input<EmbeddingPair> {
    if has(&value, "q") {
        let c: CanonicalJson = from_value(path, value)?;
        Ok(canonical_embedding(&c.surjection, &c.q)?)
    } else {
        from_value(path, value)
    }
}

/// An embedding pair `{surjection, r}` or a canonical pair `{surjection, q}`.
pub fn load_pair(path: &Path) -> Input<EmbeddingPair> {
    pair_from_value(path, read_value(path)?)
}

fn check_base(stated: &[f64], base: &Distribution, path: &Path) -> Input<()> {
    let close = stated.len() == base.len()
        && stated
            .iter()
            .zip(base.weights())
            .all(|(a, b)| (a - b).abs() <= BASE_TOLERANCE);
    if close {
        Ok(())
    } else {
        Err(InputError::new(
            infogeo::Error::BasePointMismatch.kind(),
            format!(
                "{}: base point does not match {:?}",
                path.display(),
                base.weights()
            ),
        ))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TangentJson {
    #[serde(default)]
    p: Option<Vec<f64>>,
    m_rep: Vec<f64>,
}

/// A tangent vector at `base`: `{"m_rep": [..]}`, optionally with its base `"p"`.
pub fn load_tangent_at(path: &Path, base: &Distribution) -> Input<TangentVector> {
    let t: TangentJson = load(path)?;
    if let Some(p) = &t.p {
        check_base(p, base, path)?;
    }
    Ok(TangentVector::new(base.clone(), t.m_rep)?)
}

/// A cotangent vector at `base` and the representative it was given by:
/// `{"rep": [..]}` (optionally with `"p"`), or a random variable
/// `{"n", "values"}` standing for `delta_base(A)`.
pub fn load_cotangent_at(
    path: &Path,
    base: &Distribution,
) -> Input<(CotangentVector, RandomVariable)> {
    let value = read_value(path)?;
    if has(&value, "values") {
        let a: RandomVariable = from_value(path, value)?;
        return Ok((delta(base, &a)?, a));
    }
    let c: CotangentJson = from_value(path, value)?;
    if let Some(p) = &c.p {
        check_base(p, base, path)?;
        // Validate centering at the stated point before re-basing.
        CotangentVector::new(
            Distribution::from_weights(p)?,
            RandomVariable::new(c.rep.clone()),
        )?;
    }
    let a = RandomVariable::new(c.rep);
    Ok((delta(base, &a)?, a))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CotangentJson {
    #[serde(default)]
    p: Option<Vec<f64>>,
    rep: Vec<f64>,
}
