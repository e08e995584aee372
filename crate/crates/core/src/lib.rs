//! A λ-calculus strategy laboratory.
//!
//! Four rewriting systems split β (or βv) reduction into an *essential* part
//! and an *inessential* remainder:
//!
//! | system        | base | essential        | full |
//! |---------------|------|------------------|------|
//! | head          | β    | head reduction   | no   |
//! | weak CbV      | βv   | weak reduction   | no   |
//! | LO            | β    | leftmost-outermost | yes |
//! | least level   | β    | least-level      | yes  |
//!
//! The crate provides the one-step relations ([`reduction`]), indexed
//! parallel reduction as explicit derivation trees ([`parallel`]), the
//! merge/split/factorize/normalize machinery and property harness
//! ([`engine`]), and brute-force oracles ([`oracle`]).

pub mod term;
pub mod reduction;
pub mod parallel;
pub mod oracle;
pub mod engine;

pub use engine::{EssentialSystem, Factorization, Outcome, Trace};
pub use parallel::{Flavor, ParDerivation, RedexSelection};
pub use reduction::{Base, Level, Step, StepKind, SystemId};
pub use term::{alpha_eq, parse, print, Name, Position, Term};
