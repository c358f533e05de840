//! Candidate bilinear-form families `γ_{n,p}(A, B)` and their expression grammar.
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := [number '*'] atom
//! atom  := "L2" | "MM" | "MEAN⊗MEAN" | "COV" | "PK(" integer ")"
//! ```
//!
//! `L2 = <A|B>_p`, `MM = <A>_p <B>_p`, `COV = Cov_p(A, B)`,
//! `PK(k) = sum_w p(w)^k A(w) B(w)`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::{sample_interior_with, sample_variable, Distribution, SampleSpace};
use crate::tolerance::relative_residual;

/// A family of bilinear forms on `R^{Ω_n}`, one per point of each simplex.
pub trait BilinearFamily: Send + Sync {
    fn name(&self) -> String;

    /// `γ_{n,p}(A, B)` with `n = p.len()`; `a` and `b` have length `n`.
    fn eval(&self, p: &Distribution, a: &[f64], b: &[f64]) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Atom {
    L2,
    MM,
    Cov,
    PK(i32),
}

impl Atom {
    fn eval(self, p: &[f64], a: &[f64], b: &[f64]) -> f64 {
        match self {
            Atom::L2 => p.iter().zip(a).zip(b).map(|((w, x), y)| w * x * y).sum(),
            Atom::MM => {
                let ma: f64 = p.iter().zip(a).map(|(w, x)| w * x).sum();
                let mb: f64 = p.iter().zip(b).map(|(w, y)| w * y).sum();
                ma * mb
            }
            Atom::Cov => {
                let ma: f64 = p.iter().zip(a).map(|(w, x)| w * x).sum();
                let mb: f64 = p.iter().zip(b).map(|(w, y)| w * y).sum();
                p.iter()
                    .zip(a)
                    .zip(b)
                    .map(|((w, x), y)| w * (x - ma) * (y - mb))
                    .sum()
            }
            Atom::PK(k) => p
                .iter()
                .zip(a)
                .zip(b)
                .map(|((w, x), y)| w.powi(k) * x * y)
                .sum(),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::L2 => write!(f, "L2"),
            Atom::MM => write!(f, "MM"),
            Atom::Cov => write!(f, "COV"),
            Atom::PK(k) => write!(f, "PK({k})"),
        }
    }
}

/// A linear combination of grammar atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateFamily {
    source: String,
    terms: Vec<(f64, Atom)>,
}

impl CandidateFamily {
    pub fn parse(source: &str) -> Result<Self> {
        let terms = Parser::new(source).expression()?;
        Ok(Self {
            source: source.trim().to_string(),
            terms,
        })
    }

    pub fn from_terms(terms: Vec<(f64, Atom)>) -> Self {
        let source = terms
            .iter()
            .map(|(c, a)| format!("{c}*{a}"))
            .collect::<Vec<_>>()
            .join(" + ");
        Self { source, terms }
    }

    pub fn cov() -> Self {
        Self::from_terms(vec![(1.0, Atom::Cov)])
    }

    pub fn terms(&self) -> &[(f64, Atom)] {
        &self.terms
    }
}

impl std::str::FromStr for CandidateFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl BilinearFamily for CandidateFamily {
    fn name(&self) -> String {
        self.source.clone()
    }

    fn eval(&self, p: &Distribution, a: &[f64], b: &[f64]) -> f64 {
        let w = p.weights();
        self.terms
            .iter()
            .map(|(c, atom)| c * atom.eval(w, a, b))
            .sum()
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Self { src, pos: 0 }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn error(&self, what: &str) -> Error {
        Error::Grammar(format!("{what} at offset {} in {:?}", self.pos, self.src))
    }

    fn expression(&mut self) -> Result<Vec<(f64, Atom)>> {
        let mut terms = vec![self.term(1.0)?];
        loop {
            if self.eat("+") {
                terms.push(self.term(1.0)?);
            } else if self.eat("-") {
                terms.push(self.term(-1.0)?);
            } else {
                break;
            }
        }
        self.skip_ws();
        if !self.rest().is_empty() {
            return Err(self.error("unexpected trailing input"));
        }
        Ok(terms)
    }

    fn term(&mut self, sign: f64) -> Result<(f64, Atom)> {
        self.skip_ws();
        let start = self.pos;
        if let Some(c) = self.number() {
            if self.eat("*") {
                return Ok((sign * c, self.atom()?));
            }
            self.pos = start;
        }
        Ok((sign, self.atom()?))
    }

    fn number(&mut self) -> Option<f64> {
        self.skip_ws();
        let rest = self.rest();
        let len = rest
            .char_indices()
            .take_while(|&(i, ch)| {
                ch.is_ascii_digit()
                    || ch == '.'
                    || ((ch == '-' || ch == '+')
                        && (i == 0 || matches!(rest.as_bytes()[i - 1], b'e' | b'E')))
                    || ((ch == 'e' || ch == 'E') && i > 0)
            })
            .map(|(i, ch)| i + ch.len_utf8())
            .last()?;
        let value = rest[..len].parse::<f64>().ok().filter(|v| v.is_finite())?;
        self.pos += len;
        Some(value)
    }

    fn atom(&mut self) -> Result<Atom> {
        self.skip_ws();
        for (token, atom) in [
            ("L2", Atom::L2),
            ("MM", Atom::MM),
            ("MEAN⊗MEAN", Atom::MM),
            ("COV", Atom::Cov),
        ] {
            if self.eat(token) {
                return Ok(atom);
            }
        }
        if self.eat("PK") {
            if !self.eat("(") {
                return Err(self.error("expected '(' after PK"));
            }
            self.skip_ws();
            let rest = self.rest();
            let len = rest
                .char_indices()
                .take_while(|&(i, ch)| ch.is_ascii_digit() || (i == 0 && ch == '-'))
                .count();
            let k = rest[..len]
                .parse::<i32>()
                .map_err(|_| self.error("expected an integer exponent"))?;
            self.pos += len;
            if !self.eat(")") {
                return Err(self.error("expected ')'"));
            }
            return Ok(Atom::PK(k));
        }
        Err(self.error("expected one of L2, MM, COV, PK(k)"))
    }
}

type Evaluator = Arc<dyn Fn(&Distribution, &[f64], &[f64]) -> f64 + Send + Sync>;

/// A family given by an arbitrary evaluator, for families outside the grammar.
#[derive(Clone)]
pub struct FnFamily {
    name: String,
    f: Evaluator,
}

impl FnFamily {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(&Distribution, &[f64], &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
        }
    }
}

impl fmt::Debug for FnFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnFamily")
            .field("name", &self.name)
            .finish_non_exhaustive()
    }
}

impl BilinearFamily for FnFamily {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn eval(&self, p: &Distribution, a: &[f64], b: &[f64]) -> f64 {
        (self.f)(p, a, b)
    }
}

/// Worst relative failure of `γ(sA + tA', B) = s γ(A, B) + t γ(A', B)` and the
/// same in the second slot, over random triples with `n <= n_max`.
pub fn bilinearity_residual<F: BilinearFamily + ?Sized, R: Rng + ?Sized>(
    family: &F,
    n_max: usize,
    trials: usize,
    rng: &mut R,
) -> Result<f64> {
    let mut worst = 0f64;
    for _ in 0..trials {
        let n = rng.random_range(2..=n_max.max(2));
        let space = SampleSpace::new(n)?;
        let p = sample_interior_with(space, rng, 0.01 / n as f64)?;
        let a = sample_variable(space, rng).into_values();
        let a2 = sample_variable(space, rng).into_values();
        let b = sample_variable(space, rng).into_values();
        let (s, t): (f64, f64) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let mix: Vec<f64> = a.iter().zip(&a2).map(|(x, y)| s * x + t * y).collect();
        let left = family.eval(&p, &mix, &b);
        let expected = s * family.eval(&p, &a, &b) + t * family.eval(&p, &a2, &b);
        worst = worst.max(relative_residual(left, expected));
        let right = family.eval(&p, &b, &mix);
        let expected = s * family.eval(&p, &b, &a) + t * family.eval(&p, &b, &a2);
        worst = worst.max(relative_residual(right, expected));
    }
    Ok(worst)
}
