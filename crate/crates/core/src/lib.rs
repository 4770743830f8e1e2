//! Finite-model engine for geometric contexts and elementary schemes.
//!
//! The engine validates triples (C, J, **P**) — a finite category, a
//! Grothendieck topology given by a pretopology, and an admissible arrow
//! class — computes in the sheaf topos over the site, decides open
//! immersions and atlases, and builds schemes by gluing along open
//! overlaps. Everything is exhaustive and deterministic at desk scale.

pub mod cat;
pub mod cli;
pub mod dsl;
pub mod fixtures;
pub mod geometry;
pub mod presheaf;
pub mod report;
pub mod sheaf_ops;
pub mod topology;

use thiserror::Error;

/// Engine-level failures. Validation verdicts are not errors; they are
/// returned as reports with witnesses.
#[derive(Clone, PartialEq, Eq, Debug, Error)]
pub enum Error {
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("object `{object}` has no section with index {index}")]
    ElementNotInValueSet { object: String, index: usize },
    #[error("sieve anchored at `{expected}` used at `{found}`")]
    AnchorMismatch { expected: String, found: String },
    #[error("arrow `{arrow}` does not target the family's object")]
    MixedTargets { arrow: String },
    #[error("subobjects live under different parents")]
    ParentMismatch,
    #[error("not an equivalence relation: {0}")]
    NotAnEquivalenceRelation(String),
    #[error("image factorization routes disagree: {0}")]
    InternalRouteDisagreement(String),
    #[error("search budget exceeded; verdict is inconclusive")]
    SearchBudgetExceeded,
    #[error("the category lacks a pullback for the cospan ({f}, {g})")]
    PullbacksMissingInC { f: String, g: String },
    #[error("gluing condition ({condition}) violated: {witness}")]
    GluingConditionViolated { condition: char, witness: String },
    #[error("chart `{chart}` is not an open immersion")]
    NotAnOpenAtlas { chart: String },
    #[error("not a topology on the point set: {0}")]
    NotATopology(String),
    #[error("presheaf `{0}` fails the sheaf condition, operation requires a sheaf")]
    NotASheaf(String),
    #[error("`{0}` is not an elementary scheme")]
    NotAScheme(String),
    #[error("malformed data: {0}")]
    Shape(String),
    #[error("law violated: {0}")]
    Law(String),
    #[error("internal invariant broken: {0}")]
    Internal(String),
}

/// Charge `n` units against a search budget, failing when it runs out.
pub(crate) fn charge(budget: &mut u64, n: u64) -> Result<(), Error> {
    if *budget < n {
        Err(Error::SearchBudgetExceeded)
    } else {
        *budget -= n;
        Ok(())
    }
}
