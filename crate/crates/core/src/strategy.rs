//! The evaluated-strategy oracle abstraction: per-hand action
//! distributions for any public state, trivial built-in ("chump")
//! strategies, and empirical averaging for sampling-only oracles.

use rand::RngCore;
use thiserror::Error;

use crate::cards::{HandIndex, NUM_HANDS};
use crate::engine::{legal_actions, Action, ActionSpace, EngineError, PublicState};
use crate::range::Likelihoods;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("oracle transport failed: {0}")]
    Transport(#[from] std::io::Error),
    #[error("oracle protocol error: {0}")]
    Protocol(String),
    #[error("malformed oracle response: {0}")]
    Malformed(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// A probability distribution over actions at one state.
///
/// `WithUniformRaise` represents a raise mass spread uniformly over all
/// integer raise-to amounts in `[raise_lo, raise_hi]` without
/// enumerating them; the random chumps raise this way.
#[derive(Debug, Clone, PartialEq)]
pub enum ActionDistribution {
    Explicit(Vec<(Action, f64)>),
    WithUniformRaise { fold: f64, call: f64, raise_lo: u32, raise_hi: u32, raise_mass: f64 },
}

impl ActionDistribution {
    pub fn total_mass(&self) -> f64 {
        match self {
            ActionDistribution::Explicit(entries) => entries.iter().map(|(_, p)| p).sum(),
            ActionDistribution::WithUniformRaise { fold, call, raise_mass, .. } => {
                fold + call + raise_mass
            }
        }
    }

    pub fn fold_prob(&self) -> f64 {
        self.prob_of(Action::Fold)
    }

    pub fn prob_of(&self, a: Action) -> f64 {
        match self {
            ActionDistribution::Explicit(entries) => entries
                .iter()
                .find(|(act, _)| *act == a)
                .map(|(_, p)| *p)
                .unwrap_or(0.0),
            ActionDistribution::WithUniformRaise { fold, call, raise_lo, raise_hi, raise_mass } => {
                match a {
                    Action::Fold => *fold,
                    Action::Call => *call,
                    Action::RaiseTo(x) if x >= *raise_lo && x <= *raise_hi => {
                        raise_mass / (raise_hi - raise_lo + 1) as f64
                    }
                    Action::RaiseTo(_) => 0.0,
                }
            }
        }
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> Action {
        let mut u = rand::Rng::gen::<f64>(rng) * self.total_mass();
        match self {
            ActionDistribution::Explicit(entries) => {
                for &(a, p) in entries {
                    if u < p {
                        return a;
                    }
                    u -= p;
                }
                entries.last().expect("empty action distribution").0
            }
            ActionDistribution::WithUniformRaise { fold, call, raise_lo, raise_hi, .. } => {
                if u < *fold {
                    Action::Fold
                } else if u < fold + call {
                    Action::Call
                } else {
                    Action::RaiseTo(rand::Rng::gen_range(rng, *raise_lo..=*raise_hi))
                }
            }
        }
    }

    /// Checks the distribution contract: distinct legal actions with
    /// non-negative probabilities summing to one within 1e-6.
    pub fn validate(&self, space: &ActionSpace) -> Result<(), OracleError> {
        if (self.total_mass() - 1.0).abs() > 1e-6 {
            return Err(OracleError::Malformed(format!(
                "probabilities sum to {}",
                self.total_mass()
            )));
        }
        match self {
            ActionDistribution::Explicit(entries) => {
                for (i, &(a, p)) in entries.iter().enumerate() {
                    if !(0.0..=1.0 + 1e-9).contains(&p) {
                        return Err(OracleError::Malformed(format!("probability {p} for {a}")));
                    }
                    if !space.contains(a) {
                        return Err(OracleError::Malformed(format!("illegal action {a}")));
                    }
                    if entries[..i].iter().any(|(b, _)| *b == a) {
                        return Err(OracleError::Malformed(format!("duplicate action {a}")));
                    }
                }
            }
            ActionDistribution::WithUniformRaise { fold, call, raise_lo, raise_hi, raise_mass } => {
                if *fold < 0.0 || *call < 0.0 || *raise_mass < 0.0 {
                    return Err(OracleError::Malformed("negative probability".into()));
                }
                if *fold > 0.0 && !space.can_fold {
                    return Err(OracleError::Malformed("illegal fold mass".into()));
                }
                if *raise_mass > 0.0 {
                    match space.raise_bounds {
                        Some((lo, hi)) if *raise_lo >= lo && *raise_hi <= hi && raise_lo <= raise_hi => {}
                        _ => return Err(OracleError::Malformed("illegal raise span".into())),
                    }
                }
            }
        }
        Ok(())
    }
}

/// Per-hand action distributions for one public state.
///
/// `Shared` is the card-independent case: every live hand plays the
/// same distribution.
#[derive(Debug, Clone)]
pub enum QueryResult {
    Shared(ActionDistribution),
    PerHand(Vec<Option<ActionDistribution>>),
}

impl QueryResult {
    pub fn get(&self, h: HandIndex) -> Option<&ActionDistribution> {
        match self {
            QueryResult::Shared(d) => Some(d),
            QueryResult::PerHand(v) => v[h.raw() as usize].as_ref(),
        }
    }

    /// sigma(s, h, fold) per hand; 0 where fold is unsupported or the
    /// hand is absent.
    pub fn fold_likelihoods(&self) -> Likelihoods {
        self.action_likelihoods(Action::Fold)
    }

    /// sigma(s, h, a) per hand.
    pub fn action_likelihoods(&self, a: Action) -> Likelihoods {
        match self {
            QueryResult::Shared(d) => vec![d.prob_of(a); NUM_HANDS],
            QueryResult::PerHand(v) => v
                .iter()
                .map(|d| d.as_ref().map_or(0.0, |d| d.prob_of(a)))
                .collect(),
        }
    }
}

/// Answers sigma(s, h, a) queries for the strategy under evaluation.
pub trait StrategyOracle {
    /// Exact (or best-known) distributions for every live hand at `s`.
    fn query(&mut self, s: &PublicState) -> Result<QueryResult, OracleError>;

    /// A fresh independent action sample for the actual private hand.
    fn sample_action(
        &mut self,
        s: &PublicState,
        hand: HandIndex,
        rng: &mut dyn RngCore,
    ) -> Result<Action, OracleError>;
}

/// Empirical per-hand distributions from `n` independent samples,
/// for oracles whose exact distributions are unavailable.
pub fn averaged_query(
    oracle: &mut dyn StrategyOracle,
    s: &PublicState,
    n: u32,
    rng: &mut dyn RngCore,
) -> Result<QueryResult, OracleError> {
    assert!(n >= 1);
    let board_mask: u64 = s.board().iter().map(|c| c.mask()).sum();
    let mut out: Vec<Option<ActionDistribution>> = vec![None; NUM_HANDS];
    for h in crate::cards::all_hands() {
        if h.mask() & board_mask != 0 {
            continue;
        }
        let mut counts: Vec<(Action, u32)> = Vec::new();
        for _ in 0..n {
            let a = oracle.sample_action(s, h, rng)?;
            match counts.iter_mut().find(|(b, _)| *b == a) {
                Some((_, c)) => *c += 1,
                None => counts.push((a, 1)),
            }
        }
        out[h.raw() as usize] = Some(ActionDistribution::Explicit(
            counts.into_iter().map(|(a, c)| (a, c as f64 / n as f64)).collect(),
        ));
    }
    Ok(QueryResult::PerHand(out))
}

/// Trivial card-ignoring baseline strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chump {
    /// Calls every action.
    AlwaysCall,
    /// Folds whenever folding is legal, otherwise checks.
    AlwaysFold,
    /// Calls half the time, plays a uniformly random raise otherwise;
    /// collapses to always-call when raising is illegal.
    HalfCallHalfRaise,
    /// Uniform over the available action kinds, raise amounts uniform.
    RandomLegal,
}

pub fn chump_always_call() -> Chump {
    Chump::AlwaysCall
}

pub fn chump_always_fold() -> Chump {
    Chump::AlwaysFold
}

pub fn chump_half_call_half_raise() -> Chump {
    Chump::HalfCallHalfRaise
}

pub fn chump_random_legal() -> Chump {
    Chump::RandomLegal
}

impl Chump {
    fn distribution(&self, space: &ActionSpace) -> ActionDistribution {
        match self {
            Chump::AlwaysCall => ActionDistribution::Explicit(vec![(Action::Call, 1.0)]),
            Chump::AlwaysFold => {
                if space.can_fold {
                    ActionDistribution::Explicit(vec![(Action::Fold, 1.0)])
                } else {
                    ActionDistribution::Explicit(vec![(Action::Call, 1.0)])
                }
            }
            Chump::HalfCallHalfRaise => match space.raise_bounds {
                Some((lo, hi)) => ActionDistribution::WithUniformRaise {
                    fold: 0.0,
                    call: 0.5,
                    raise_lo: lo,
                    raise_hi: hi,
                    raise_mass: 0.5,
                },
                None => ActionDistribution::Explicit(vec![(Action::Call, 1.0)]),
            },
            Chump::RandomLegal => {
                let kinds = 1 + space.can_fold as u32 + space.raise_bounds.is_some() as u32;
                let p = 1.0 / kinds as f64;
                match space.raise_bounds {
                    Some((lo, hi)) => ActionDistribution::WithUniformRaise {
                        fold: if space.can_fold { p } else { 0.0 },
                        call: p,
                        raise_lo: lo,
                        raise_hi: hi,
                        raise_mass: p,
                    },
                    None if space.can_fold => ActionDistribution::Explicit(vec![
                        (Action::Fold, 0.5),
                        (Action::Call, 0.5),
                    ]),
                    None => ActionDistribution::Explicit(vec![(Action::Call, 1.0)]),
                }
            }
        }
    }
}

impl StrategyOracle for Chump {
    fn query(&mut self, s: &PublicState) -> Result<QueryResult, OracleError> {
        let space = legal_actions(s)?;
        Ok(QueryResult::Shared(self.distribution(&space)))
    }

    fn sample_action(
        &mut self,
        s: &PublicState,
        _hand: HandIndex,
        rng: &mut dyn RngCore,
    ) -> Result<Action, OracleError> {
        let space = legal_actions(s)?;
        Ok(self.distribution(&space).sample(rng))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cards::hand_index;
    use crate::engine::{apply_action, initial_state, parse_state, GameRules};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn some_hand() -> HandIndex {
        hand_index(crate::cards::Card::from_id(40), crate::cards::Card::from_id(41)).unwrap()
    }

    #[test]
    fn always_call_everywhere() {
        let s = initial_state(GameRules::default());
        let mut o = chump_always_call();
        let qr = o.query(&s).unwrap();
        let d = qr.get(some_hand()).unwrap();
        assert_eq!(d.prob_of(Action::Call), 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(o.sample_action(&s, some_hand(), &mut rng).unwrap(), Action::Call);
    }

    #[test]
    fn half_half_facing_all_in_collapses_to_call() {
        let s = initial_state(GameRules::default());
        let s = apply_action(&s, Action::RaiseTo(20_000)).unwrap();
        let mut o = chump_half_call_half_raise();
        let qr = o.query(&s).unwrap();
        let d = qr.get(some_hand()).unwrap();
        assert_eq!(d.prob_of(Action::Call), 1.0);
        assert_eq!(d.fold_prob(), 0.0);
    }

    #[test]
    fn random_legal_facing_all_in_folds_half() {
        let s = initial_state(GameRules::default());
        let s = apply_action(&s, Action::RaiseTo(20_000)).unwrap();
        let mut o = chump_random_legal();
        let qr = o.query(&s).unwrap();
        let d = qr.get(some_hand()).unwrap();
        assert_eq!(d.fold_prob(), 0.5);
        assert_eq!(d.prob_of(Action::Call), 0.5);
    }

    #[test]
    fn random_legal_three_way_split() {
        let s = initial_state(GameRules::default());
        let mut o = chump_random_legal();
        let qr = o.query(&s).unwrap();
        let d = qr.get(some_hand()).unwrap();
        let third = 1.0 / 3.0;
        assert!((d.fold_prob() - third).abs() < 1e-12);
        assert!((d.prob_of(Action::Call) - third).abs() < 1e-12);
        // raise mass spread over 200..=20000
        let per = third / 19_801.0;
        assert!((d.prob_of(Action::RaiseTo(200)) - per).abs() < 1e-15);
        assert!((d.prob_of(Action::RaiseTo(20_000)) - per).abs() < 1e-15);
        assert_eq!(d.prob_of(Action::RaiseTo(199)), 0.0);
        assert!((d.total_mass() - 1.0).abs() < 1e-12);
        d.validate(&legal_actions(&s).unwrap()).unwrap();
    }

    #[test]
    fn chumps_are_card_independent() {
        let s = parse_state("cc/:AsKd7h", GameRules::default()).unwrap();
        for mut o in [
            chump_always_call(),
            chump_always_fold(),
            chump_half_call_half_raise(),
            chump_random_legal(),
        ] {
            let qr = o.query(&s).unwrap();
            assert!(matches!(qr, QueryResult::Shared(_)));
        }
    }

    #[test]
    fn validate_rejects_bad_sums_and_illegal_actions() {
        let s = initial_state(GameRules::default());
        let space = legal_actions(&s).unwrap();
        let short = ActionDistribution::Explicit(vec![(Action::Call, 0.9)]);
        assert!(short.validate(&space).is_err());
        let illegal =
            ActionDistribution::Explicit(vec![(Action::Call, 0.5), (Action::RaiseTo(150), 0.5)]);
        assert!(illegal.validate(&space).is_err());
        let dup =
            ActionDistribution::Explicit(vec![(Action::Call, 0.5), (Action::Call, 0.5)]);
        assert!(dup.validate(&space).is_err());
    }

    #[test]
    fn sampling_matches_distribution() {
        // seeded sampling of a known mixed distribution stays within 3
        // binomial standard errors
        let s = initial_state(GameRules::default());
        let mut o = chump_random_legal();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 100_000;
        let mut folds = 0u32;
        let mut calls = 0u32;
        for _ in 0..n {
            match o.sample_action(&s, some_hand(), &mut rng).unwrap() {
                Action::Fold => folds += 1,
                Action::Call => calls += 1,
                Action::RaiseTo(x) => assert!((200..=20_000).contains(&x)),
            }
        }
        let p = 1.0 / 3.0;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        for count in [folds, calls] {
            assert!((count as f64 / n as f64 - p).abs() < 3.0 * se, "count {count}");
        }
    }

    #[test]
    fn seeded_sampling_is_reproducible() {
        let s = initial_state(GameRules::default());
        let mut o = chump_random_legal();
        let draw = |o: &mut Chump| {
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            (0..20)
                .map(|_| o.sample_action(&s, some_hand(), &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(&mut o), draw(&mut o));
    }

    #[test]
    fn averaged_query_converges_on_deterministic_oracle() {
        let s = parse_state("cc/cc/cc/:AsKd7h2c9d", GameRules::default()).unwrap();
        let mut o = chump_always_call();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let qr = averaged_query(&mut o, &s, 1, &mut rng).unwrap();
        // blocked hands absent, live hands exact after one sample
        let blocked = hand_index(
            crate::cards::parse_card("As").unwrap(),
            crate::cards::parse_card("2d").unwrap(),
        )
        .unwrap();
        assert!(qr.get(blocked).is_none());
        let live = hand_index(
            crate::cards::parse_card("Qs").unwrap(),
            crate::cards::parse_card("Qd").unwrap(),
        )
        .unwrap();
        assert_eq!(qr.get(live).unwrap().prob_of(Action::Call), 1.0);
    }

    #[test]
    fn averaged_query_empirical_frequencies() {
        let s = initial_state(GameRules::default());
        let mut o = chump_half_call_half_raise();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 400;
        let qr = averaged_query(&mut o, &s, n, &mut rng).unwrap();
        let d = qr.get(some_hand()).unwrap();
        let se = (0.5f64 * 0.5 / n as f64).sqrt();
        assert!((d.prob_of(Action::Call) - 0.5).abs() < 4.0 * se);
    }
}
