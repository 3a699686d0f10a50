//! Classical first-order validity through dialogical games.
//!
//! Formulas are proved in the strategic fragment of the GKK sequent
//! calculus; strategic derivations and winning proponent strategies are
//! translated into each other, and entailment problems are answered Yes, No
//! or Unknown from the two proof attempts.

pub mod dialogue;
pub mod entail;
pub mod formula;
pub mod gkk;
pub mod json;
pub mod par;
pub mod parse;
pub mod strategy;
pub mod translate;

pub use dialogue::{AttackSymbol, Game, IllegalMove, IllegalReason, Move, MoveContent, MoveDescriptor, Player, Winner};
pub use entail::{decide, polarity_precheck, Answer, Direction, Obstacle, PolarityCertificate, Problem, Verdict};
pub use formula::{Formula, Term};
pub use gkk::{prove, Derivation, Rule, SearchLimits, Sequent};
pub use parse::{parse_formula, parse_sequent, parse_term, ParseError};
pub use strategy::{Strategy, StrategyNode};
pub use translate::{derivation_to_strategy, find_winning_strategy, strategize, strategy_to_derivation};
