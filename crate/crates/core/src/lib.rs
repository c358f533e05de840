//! Information geometry on finite probability simplices.
//!
//! The crate works on `P(Ω)`, the open simplex of strictly positive
//! distributions on a finite set, and provides:
//!
//! - [`simplex`]: distributions, random variables, expectations and covariances;
//! - [`geometry`]: tangent/cotangent vectors, the Fisher metric and co-metric;
//! - [`models`]: parametric submanifolds, Fisher information, minimum-norm
//!   lifts and a Cramér–Rao checker;
//! - [`markov`]: channels, Markov maps, embedding/co-embedding pairs;
//! - [`connections`]: e-, m- and α-connections via flat transports;
//! - [`verify`]: monotonicity, invariance and strong-invariance batteries and
//!   a constructive characterization probe for bilinear-form families.
//!
//! ```
//! use infogeo::{delta, fisher_cometric, Distribution, RandomVariable};
//!
//! let p = Distribution::from_weights(&[0.25, 0.75]).unwrap();
//! let a = delta(&p, &RandomVariable::new(vec![1.0, 0.0])).unwrap();
//! // the co-metric norm of delta_p(A) is the variance of A
//! assert!((fisher_cometric(&a, &a).unwrap() - 0.1875).abs() < 1e-15);
//! ```

pub mod connections;
pub mod error;
pub mod geometry;
pub mod markov;
pub mod models;
pub mod simplex;
pub mod tolerance;
pub mod verify;

pub use connections::{
    covariant_derivative, duality_check, e_transport, m_transport, weak_invariance_check,
    ConnectionTag, FiniteDifference, VectorField, WeakInvarianceReport,
};
pub use error::{Error, Result};
pub use geometry::{
    delta, e_rep, fisher_cometric, fisher_metric, flat, from_e_rep, norm_cotangent, norm_tangent,
    pair, sharp, CotangentVector, TangentVector,
};
pub use markov::{
    apply, canonical_embedding, coembedding, compose, conditional_expectation, pullback,
    pushforward, random_channel, Channel, EmbeddingPair, Surjection,
};
pub use models::{
    annihilator, cometric_matrix, crb_check, fisher_info, lift, restrict, score, tangent_basis,
    CrbMode, CrbReport, CrbVerdict, FisherMatrix, Model, NumericJacobian, StatisticalModel,
};
pub use simplex::{sample_interior, Distribution, RandomVariable, SampleSpace};
pub use verify::{
    adjoint_residuals, characterize, check_invariance, check_monotonicity_cometric,
    check_monotonicity_metric, check_pullback_identity, check_strong_invariance, probe_consistency,
    probe_rational, probe_uniform, run_battery, BatteryConfig, BatteryKind, BatteryReport,
    CandidateFamily, CharacterizeConfig, Outcome, Verdict, Witness,
};
