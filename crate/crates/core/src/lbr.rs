//! The Local Best Response decision procedure: enumerate candidate
//! bets, score fold/call/raise utilities against the tracked opponent
//! range, and play the argmax action or fold.

use thiserror::Error;

use crate::cards::HandIndex;
use crate::engine::{apply_action, legal_actions, Action, EngineError, PublicState};
use crate::preflop::PreflopTable;
use crate::range::{wp_rollout, Range, RangeError};
use crate::strategy::{OracleError, StrategyOracle};

#[derive(Debug, Error)]
pub enum LbrError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Range(#[from] RangeError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("bad bet set spec: {0}")]
    BadBetSet(String),
    #[error("bad round spec: {0}")]
    BadRounds(String),
}

/// The candidate raise sizes LBR considers, as pot fractions.
#[derive(Debug, Clone, PartialEq)]
pub struct BetSet {
    pub name: String,
    /// Strictly positive, sorted ascending.
    pub pot_fractions: Vec<f64>,
    pub include_all_in: bool,
}

impl BetSet {
    /// Fold/call only: no raises considered.
    pub fn fc() -> BetSet {
        BetSet { name: "fc".into(), pot_fractions: vec![], include_all_in: false }
    }

    /// Fold, call, pot, all-in.
    pub fn fcpa() -> BetSet {
        BetSet { name: "fcpa".into(), pot_fractions: vec![1.0], include_all_in: true }
    }

    /// The 55 geometric pot fractions 0.05 * 1.15^k, k = 0..54, plus all-in.
    pub fn fifty_six() -> BetSet {
        let fractions = (0..55).map(|k| 0.05 * 1.15f64.powi(k)).collect();
        BetSet { name: "56bets".into(), pot_fractions: fractions, include_all_in: true }
    }

    pub fn custom(mut pot_fractions: Vec<f64>, include_all_in: bool) -> Result<BetSet, LbrError> {
        if pot_fractions.iter().any(|f| !f.is_finite() || *f <= 0.0) {
            return Err(LbrError::BadBetSet("fractions must be positive".into()));
        }
        pot_fractions.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pot_fractions.dedup();
        if pot_fractions.is_empty() && !include_all_in {
            return Err(LbrError::BadBetSet("custom bet set is empty".into()));
        }
        Ok(BetSet { name: "custom".into(), pot_fractions, include_all_in })
    }

    /// Parses a CLI spec: `fc`, `fcpa`, `56bets`, or
    /// `custom:<comma-separated fractions>` where `allin` is accepted
    /// as a pseudo-fraction.
    pub fn parse(spec: &str) -> Result<BetSet, LbrError> {
        match spec {
            "fc" => Ok(BetSet::fc()),
            "fcpa" => Ok(BetSet::fcpa()),
            "56bets" => Ok(BetSet::fifty_six()),
            _ => {
                let list = spec
                    .strip_prefix("custom:")
                    .ok_or_else(|| LbrError::BadBetSet(spec.into()))?;
                let mut fractions = Vec::new();
                let mut all_in = false;
                for tok in list.split(',') {
                    let tok = tok.trim();
                    if tok == "allin" {
                        all_in = true;
                    } else {
                        fractions.push(
                            tok.parse::<f64>()
                                .map_err(|_| LbrError::BadBetSet(format!("bad fraction {tok:?}")))?,
                        );
                    }
                }
                BetSet::custom(fractions, all_in)
            }
        }
    }
}

/// What LBR plays and where; outside `active_rounds` it check/calls.
#[derive(Debug, Clone, PartialEq)]
pub struct LbrConfig {
    pub bet_set: BetSet,
    /// Activity flags for rounds 1..=4 (preflop..river).
    pub active_rounds: [bool; 4],
}

impl LbrConfig {
    pub fn new(bet_set: BetSet, active_rounds: [bool; 4]) -> Result<LbrConfig, LbrError> {
        if !active_rounds.iter().any(|&b| b) {
            return Err(LbrError::BadRounds("no active rounds".into()));
        }
        Ok(LbrConfig { bet_set, active_rounds })
    }

    pub fn is_active(&self, round: u8) -> bool {
        (1..=4).contains(&round) && self.active_rounds[round as usize - 1]
    }
}

/// Parses a round span like `3-4`, `2`, or `1,3-4` into activity flags.
pub fn parse_rounds(spec: &str) -> Result<[bool; 4], LbrError> {
    let bad = || LbrError::BadRounds(spec.into());
    let one = |tok: &str| -> Result<usize, LbrError> {
        match tok.parse::<usize>() {
            Ok(r @ 1..=4) => Ok(r),
            _ => Err(bad()),
        }
    };
    let mut active = [false; 4];
    for part in spec.split(',') {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (one(a)?, one(b)?);
                if a > b {
                    return Err(bad());
                }
                for r in a..=b {
                    active[r - 1] = true;
                }
            }
            None => active[one(part)? - 1] = true,
        }
    }
    if !active.iter().any(|&b| b) {
        return Err(bad());
    }
    Ok(active)
}

/// Candidate raise-by amounts (chips beyond the call) at `s`: each pot
/// fraction of the called pot, clamped to the legal raise span, plus
/// all-in; deduplicated ascending. Empty when raising is illegal.
pub fn considered_bets(cfg: &LbrConfig, s: &PublicState) -> Result<Vec<u32>, LbrError> {
    let space = legal_actions(s)?;
    let Some((lo_to, hi_to)) = space.raise_bounds else {
        return Ok(vec![]);
    };
    let call_to = s.pot(s.to_act()) + space.call_amount;
    let a_min = lo_to - call_to;
    let a_max = hi_to - call_to;
    let base = (s.pot_total() + space.call_amount) as f64;
    let mut bets: Vec<u32> = cfg
        .bet_set
        .pot_fractions
        .iter()
        .map(|f| ((f * base).round() as u64).clamp(a_min as u64, a_max as u64) as u32)
        .collect();
    if cfg.bet_set.include_all_in {
        bets.push(a_max);
    }
    bets.sort_unstable();
    bets.dedup();
    Ok(bets)
}

/// Fig. 1 line 3: expected chips of calling, relative to folding.
pub fn utility_call(wp: f64, pot: u32, asked: u32) -> f64 {
    wp * pot as f64 - (1.0 - wp) * asked as f64
}

/// Fig. 1 lines 11-12: expected chips of raising by `a`, relative to
/// folding; the opponent folds with probability `fp`, and `wp_prime`
/// is the win probability against her continuing range.
pub fn utility_raise(fp: f64, wp_prime: f64, pot: u32, asked: u32, a: u32) -> f64 {
    let (pot, asked, a) = (pot as f64, asked as f64, a as f64);
    fp * pot + (1.0 - fp) * (wp_prime * (pot + a) - (1.0 - wp_prime) * (asked + a))
}

/// One Figure 1 decision: greedy one-action lookahead against the
/// tracked range `pi`. Ties break toward call, then the smallest bet.
pub fn choose_action(
    pi: &Range,
    s: &PublicState,
    h: HandIndex,
    cfg: &LbrConfig,
    oracle: &mut dyn StrategyOracle,
    table: Option<&PreflopTable>,
) -> Result<Action, LbrError> {
    if !cfg.is_active(s.round()) {
        return Ok(Action::Call);
    }
    let space = legal_actions(s)?;
    let pot = s.pot_total();
    let asked = space.call_amount;
    let call_to = s.pot(s.to_act()) + asked;
    let wp = wp_rollout(h, pi, s, table)?;
    let mut best = Action::Call;
    let mut best_u = utility_call(wp, pot, asked);
    for a in considered_bets(cfg, s)? {
        let succ = apply_action(s, Action::RaiseTo(call_to + a))?;
        let folds = oracle.query(&succ)?.fold_likelihoods();
        let split = pi.fold_split(&folds)?;
        let fp = split.fold_prob;
        let u = match &split.continue_range {
            // opponent (almost) always folds: the wp' term carries no
            // weight, skip its rollout
            None => fp * pot as f64,
            Some(_) if fp >= 1.0 - 1e-12 => fp * pot as f64,
            Some(pi_prime) => {
                // card-independent responses leave the range unchanged;
                // reuse wp rather than re-rolling the same posterior
                let wp_prime = if pi_prime.max_abs_diff(pi) <= 1e-12 {
                    wp
                } else {
                    wp_rollout(h, pi_prime, s, table)?
                };
                utility_raise(fp, wp_prime, pot, asked, a)
            }
        };
        if u > best_u {
            best = Action::RaiseTo(call_to + a);
            best_u = u;
        }
    }
    if space.can_fold && best_u <= 0.0 {
        return Ok(Action::Fold);
    }
    Ok(best)
}
