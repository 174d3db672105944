//! Solver library for a two-stage security game with community informants.
//!
//! A defender recruits informants from a bipartite social network, then
//! allocates patrol resources in response to their tips about upcoming
//! attacks. Attackers follow quantal-response behavior, optionally
//! iterated to level-k, to a fixed point, or made aware of the informants
//! themselves. The crate provides:
//!
//! - game data types, validation, and a random instance generator
//!   ([`model`]);
//! - tip posteriors, per-target expected gains, and the greedy optimal
//!   allocation against tips ([`tips`]);
//! - exact, truncated, sampled, strong-intensity, and Monte-Carlo
//!   evaluation of the recruitment value ([`eval`]);
//! - exhaustive, greedy-branching, and tip-probability informant selection
//!   plus the budget trade-off sweep ([`select`]);
//! - the optimal routine patrol against quantal response ([`routine`]);
//! - level-k iteration, contraction checking, and damped fixed-point
//!   solving ([`levelk`]);
//! - the bi-level optimizer for tip-conditioned strategies against
//!   fixed-point attackers ([`bilevel`]);
//! - the informant-aware attacker model and its binary-search solver
//!   ([`qri`]);
//! - CSV experiment drivers behind the command-line interface
//!   ([`experiments`]).

pub mod bilevel;
pub mod eval;
pub mod experiments;
pub mod levelk;
pub mod model;
pub mod opt;
pub mod qri;
pub mod routine;
pub mod select;
pub mod tips;

pub use model::{
    generate_instance, quantal_response, validate_instance, AttackDistribution, CoverageVector,
    GameInstance, GenParams, ModelError, SocialGraph, TargetPayoffs,
};
