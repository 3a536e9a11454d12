//! Lower-bound exploitability estimation for heads-up no-limit hold'em
//! strategies via local best response.

pub mod cards;
pub mod engine;
pub mod harness;
pub mod lbr;
pub mod preflop;
pub mod range;
pub mod selfcheck;
pub mod strategy;
pub mod wire;

pub use cards::{Card, HandIndex, HandRank};
pub use engine::{Action, GameRules, PublicState};
pub use range::Range;
