//! Match runner and estimator: deals hands, alternates seats via
//! duplicate pairs, applies imaginary-observation scoring, and
//! aggregates LBR winnings into mBB/h with confidence intervals.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt;
use thiserror::Error;

use crate::cards::{hand_index, Card, HandIndex};
use crate::engine::{
    apply_action, deal_board, format_state, initial_state, terminal_payoff, Action, GameRules,
    PublicState, Seat, Status, TerminalKind, FIRST, SECOND,
};
use crate::lbr::{choose_action, LbrConfig, LbrError};
use crate::preflop::{splitmix64, PreflopTable};
use crate::range::{wp_rollout, Range};
use crate::strategy::{
    averaged_query, chump_always_call, chump_always_fold, chump_half_call_half_raise,
    chump_random_legal, StrategyOracle,
};
use crate::wire::WireOracle;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("preflop table required when round 1 is active (run build-tables)")]
    TableMissing,
    #[error("oracle connection failed: {0}")]
    Connect(String),
    #[error("discarded {discarded} of {hands} hands, above the 1% budget")]
    DiscardRate { discarded: u64, hands: u64 },
    #[error("bad opponent spec: {0}")]
    BadOpponent(String),
    #[error(transparent)]
    Lbr(#[from] LbrError),
}

/// Which strategy LBR plays against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OpponentSpec {
    AlwaysCall,
    AlwaysFold,
    HalfRaise,
    RandomLegal,
    Tcp(String),
    Stdio(String),
}

impl OpponentSpec {
    pub fn parse(spec: &str) -> Result<OpponentSpec, HarnessError> {
        match spec {
            "always-call" => Ok(OpponentSpec::AlwaysCall),
            "always-fold" => Ok(OpponentSpec::AlwaysFold),
            "half-raise" => Ok(OpponentSpec::HalfRaise),
            "random-legal" => Ok(OpponentSpec::RandomLegal),
            _ => {
                if let Some(addr) = spec.strip_prefix("tcp:") {
                    Ok(OpponentSpec::Tcp(addr.to_string()))
                } else if let Some(cmd) = spec.strip_prefix("stdio:") {
                    Ok(OpponentSpec::Stdio(cmd.to_string()))
                } else {
                    Err(HarnessError::BadOpponent(spec.to_string()))
                }
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            OpponentSpec::AlwaysCall => "always-call".into(),
            OpponentSpec::AlwaysFold => "always-fold".into(),
            OpponentSpec::HalfRaise => "half-raise".into(),
            OpponentSpec::RandomLegal => "random-legal".into(),
            OpponentSpec::Tcp(a) => format!("tcp:{a}"),
            OpponentSpec::Stdio(c) => format!("stdio:{c}"),
        }
    }

    /// Opens a fresh oracle handle; remote specs connect per call so
    /// each worker owns its own connection.
    pub fn connect(&self) -> Result<Box<dyn StrategyOracle>, HarnessError> {
        Ok(match self {
            OpponentSpec::AlwaysCall => Box::new(chump_always_call()),
            OpponentSpec::AlwaysFold => Box::new(chump_always_fold()),
            OpponentSpec::HalfRaise => Box::new(chump_half_call_half_raise()),
            OpponentSpec::RandomLegal => Box::new(chump_random_legal()),
            OpponentSpec::Tcp(addr) => Box::new(
                WireOracle::connect_tcp(addr)
                    .map_err(|e| HarnessError::Connect(e.to_string()))?,
            ),
            OpponentSpec::Stdio(cmd) => Box::new(
                WireOracle::spawn_stdio(cmd)
                    .map_err(|e| HarnessError::Connect(e.to_string()))?,
            ),
        })
    }
}

#[derive(Debug, Clone)]
pub struct MatchConfig {
    pub rules: GameRules,
    pub lbr: LbrConfig,
    pub opponent: OpponentSpec,
    /// Duplicate pairs to play (each pair is two hands).
    pub pairs: u64,
    pub seed: u64,
    /// Samples per averaged query; None queries exact distributions.
    pub sampled_queries: Option<u32>,
    pub duplicate: bool,
    pub imaginary: bool,
}

/// Nine fixed cards: both private hands plus the board in deal order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Deal {
    /// Private hands by seat (index 0 = first player / big blind).
    pub hands: [HandIndex; 2],
    pub board: [Card; 5],
}

pub fn random_deal(rng: &mut impl Rng) -> Deal {
    let mut ids: Vec<u8> = (0..52).collect();
    for i in 0..9 {
        ids.swap(i, rng.gen_range(i..52));
    }
    let c = |i: usize| Card::from_id(ids[i]);
    Deal {
        hands: [
            hand_index(c(0), c(1)).expect("distinct draw"),
            hand_index(c(2), c(3)).expect("distinct draw"),
        ],
        board: [c(4), c(5), c(6), c(7), c(8)],
    }
}

/// One played hand from LBR's perspective.
#[derive(Debug, Clone)]
pub struct HandRecord {
    pub deal: Deal,
    pub lbr_seat: Seat,
    /// Final state string, board as far as it was dealt.
    pub transcript: String,
    /// Raw chip outcome for LBR.
    pub winnings: i64,
    /// Scored chips: imaginary-observation expectation when enabled.
    pub scored: f64,
    /// LBR's own actions with the round they were taken in.
    pub lbr_actions: Vec<(u8, Action)>,
    /// Imaginary scoring fell back to the raw outcome.
    pub imaginary_fallback: bool,
}

/// Expected chips for LBR at a terminal state under imaginary
/// observations: folds keep the actual outcome, showdowns score
/// against the opponent's full posterior range. Returns the value and
/// whether it fell back to the raw outcome (degenerate range).
pub fn imaginary_value(
    terminal: &PublicState,
    lbr_hand: HandIndex,
    terminal_range: &Range,
    raw_winnings: i64,
) -> (f64, bool) {
    match terminal.terminal_kind() {
        Some(TerminalKind::Showdown) => {
            match wp_rollout(lbr_hand, terminal_range, terminal, None) {
                Ok(wp) => ((2.0 * wp - 1.0) * terminal.pot_total() as f64 / 2.0, false),
                Err(_) => (raw_winnings as f64, true),
            }
        }
        _ => (raw_winnings as f64, false),
    }
}

/// Plays one full hand: LBR in `lbr_seat`, the opponent sampled from
/// `oracle` with `opp_rng`, the tracked range updated after every
/// opponent action. Errors (oracle failure, degenerate range) discard
/// the hand.
pub fn play_hand(
    deal: &Deal,
    lbr_seat: Seat,
    cfg: &MatchConfig,
    oracle: &mut dyn StrategyOracle,
    opp_rng: &mut dyn RngCore,
    table: Option<&PreflopTable>,
) -> Result<HandRecord, LbrError> {
    let lbr_hand = deal.hands[lbr_seat];
    let opp_hand = deal.hands[1 - lbr_seat];
    let (lc1, lc2) = lbr_hand.cards();
    let mut s = initial_state(cfg.rules);
    let mut pi = Range::uniform(&[lc1, lc2])?;
    let mut lbr_actions = Vec::new();
    loop {
        match s.status() {
            Status::Terminal(_) => break,
            Status::AwaitingDeal => {
                let have = s.board().len();
                let need = if have == 0 { 3 } else { 1 };
                let cards = &deal.board[have..have + need];
                s = deal_board(&s, cards)?;
                pi = pi.condition_on_board(cards)?;
            }
            Status::Acting => {
                if s.to_act() == lbr_seat {
                    let a = choose_action(&pi, &s, lbr_hand, &cfg.lbr, oracle, table)?;
                    lbr_actions.push((s.round(), a));
                    s = apply_action(&s, a)?;
                } else {
                    let a = oracle.sample_action(&s, opp_hand, opp_rng)?;
                    let qr = match cfg.sampled_queries {
                        Some(n) => averaged_query(oracle, &s, n, opp_rng)?,
                        None => oracle.query(&s)?,
                    };
                    pi = pi.bayes_update(&qr.action_likelihoods(a))?;
                    s = apply_action(&s, a)?;
                }
            }
        }
    }
    let winnings = terminal_payoff(&s, lbr_seat, lbr_hand, opp_hand)?;
    let (scored, imaginary_fallback) = if cfg.imaginary {
        imaginary_value(&s, lbr_hand, &pi, winnings)
    } else {
        (winnings as f64, false)
    };
    Ok(HandRecord {
        deal: *deal,
        lbr_seat,
        transcript: format_state(&s),
        winnings,
        scored,
        lbr_actions,
        imaginary_fallback,
    })
}

fn derive_rng(seed: u64, pair: u64, lane: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(splitmix64(seed) ^ splitmix64(pair * 8 + lane + 1)))
}

/// The same deal played from both seats; opponent randomness uses an
/// independent stream per seat so mixed strategies re-sample.
pub fn play_duplicate_pair(
    deal: &Deal,
    cfg: &MatchConfig,
    oracle: &mut dyn StrategyOracle,
    pair_index: u64,
    table: Option<&PreflopTable>,
) -> [Result<HandRecord, LbrError>; 2] {
    let first = {
        let mut rng = derive_rng(cfg.seed, pair_index, 1);
        play_hand(deal, FIRST, cfg, oracle, &mut rng, table)
    };
    let second = {
        let mut rng = derive_rng(cfg.seed, pair_index, 2);
        play_hand(deal, SECOND, cfg, oracle, &mut rng, table)
    };
    [first, second]
}

/// Per-round counts of LBR's folds, calls, and raises.
pub type ActionHistogram = [[u64; 3]; 4];

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub opponent: String,
    pub bet_set: String,
    pub lbr_rounds: [bool; 4],
    pub big_blind: u32,
    /// Mean LBR winnings in milli-big-blinds per hand.
    pub mean_mbb: f64,
    /// 95% confidence half-width in mBB/h.
    pub ci95_mbb: f64,
    /// Aggregation units (pair means, or single hands without
    /// duplicate pairing).
    pub units: u64,
    pub pairs: u64,
    pub hands: u64,
    pub discarded_hands: u64,
    pub imaginary_fallbacks: u64,
    pub duplicate: bool,
    pub imaginary: bool,
    pub seed: u64,
    pub action_histogram: ActionHistogram,
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rounds: String = (1..=4)
            .filter(|&r| self.lbr_rounds[r - 1])
            .map(|r| r.to_string())
            .collect::<Vec<_>>()
            .join(",");
        writeln!(
            f,
            "opponent {}  bets {}  lbr-rounds {}  seed {}",
            self.opponent, self.bet_set, rounds, self.seed
        )?;
        writeln!(
            f,
            "hands {} ({} pairs, {} discarded, {} imaginary fallbacks)",
            self.hands, self.pairs, self.discarded_hands, self.imaginary_fallbacks
        )?;
        writeln!(
            f,
            "winnings {:+.1} mBB/h  (95% CI \u{b1} {:.1}, {} units)",
            self.mean_mbb, self.ci95_mbb, self.units
        )?;
        writeln!(f, "lbr actions      fold      call     raise")?;
        for r in 0..4 {
            let [fo, ca, ra] = self.action_histogram[r];
            writeln!(f, "  round {}  {:>8}  {:>8}  {:>8}", r + 1, fo, ca, ra)?;
        }
        Ok(())
    }
}

#[derive(Default)]
struct PairOutcome {
    units: Vec<f64>,
    hands: u64,
    discarded: u64,
    fallbacks: u64,
    histogram: ActionHistogram,
}

fn absorb(out: &mut PairOutcome, rec: &HandRecord) {
    out.fallbacks += rec.imaginary_fallback as u64;
    for &(round, a) in &rec.lbr_actions {
        let k = match a {
            Action::Fold => 0,
            Action::Call => 1,
            Action::RaiseTo(_) => 2,
        };
        out.histogram[round as usize - 1][k] += 1;
    }
}

fn run_pair(
    cfg: &MatchConfig,
    pair_index: u64,
    oracle: &mut dyn StrategyOracle,
    table: Option<&PreflopTable>,
) -> PairOutcome {
    let mut out = PairOutcome::default();
    if cfg.duplicate {
        let deal = random_deal(&mut derive_rng(cfg.seed, pair_index, 0));
        out.hands = 2;
        match play_duplicate_pair(&deal, cfg, oracle, pair_index, table) {
            [Ok(a), Ok(b)] => {
                absorb(&mut out, &a);
                absorb(&mut out, &b);
                out.units.push((a.scored + b.scored) / 2.0);
            }
            // pairing integrity: one bad hand discards both
            _ => out.discarded = 2,
        }
    } else {
        // unpaired mode plays two independent hands so hand counts
        // match the duplicate configuration
        for (deal_lane, rng_lane, seat) in [(0, 1, FIRST), (3, 2, SECOND)] {
            let deal = random_deal(&mut derive_rng(cfg.seed, pair_index, deal_lane));
            let mut rng = derive_rng(cfg.seed, pair_index, rng_lane);
            out.hands += 1;
            match play_hand(&deal, seat, cfg, oracle, &mut rng, table) {
                Ok(rec) => {
                    absorb(&mut out, &rec);
                    out.units.push(rec.scored);
                }
                Err(_) => out.discarded += 1,
            }
        }
    }
    out
}

/// Runs the full match and aggregates the estimate. Pairs run in
/// parallel; results merge by pair index, so parallel and serial runs
/// agree bit for bit.
pub fn evaluate(cfg: &MatchConfig, table: Option<&PreflopTable>) -> Result<EvalReport, HarnessError> {
    assert!(cfg.pairs >= 1);
    if cfg.lbr.is_active(1) && table.is_none() {
        return Err(HarnessError::TableMissing);
    }
    // fail fast on unreachable endpoints before spawning workers
    drop(cfg.opponent.connect()?);
    let outcomes: Vec<Result<PairOutcome, HarnessError>> = (0..cfg.pairs)
        .into_par_iter()
        .map_init(
            || cfg.opponent.connect(),
            |oracle, i| match oracle {
                Ok(o) => Ok(run_pair(cfg, i, o.as_mut(), table)),
                Err(e) => Err(HarnessError::Connect(e.to_string())),
            },
        )
        .collect();
    let mut units = Vec::new();
    let mut hands = 0;
    let mut discarded = 0;
    let mut fallbacks = 0;
    let mut histogram = ActionHistogram::default();
    for out in outcomes {
        let out = out?;
        units.extend(out.units);
        hands += out.hands;
        discarded += out.discarded;
        fallbacks += out.fallbacks;
        for (h, o) in histogram.iter_mut().zip(out.histogram) {
            for (a, b) in h.iter_mut().zip(o) {
                *a += b;
            }
        }
    }
    if discarded * 100 > hands {
        return Err(HarnessError::DiscardRate { discarded, hands });
    }
    let n = units.len() as f64;
    let to_mbb = 1000.0 / cfg.rules.big_blind as f64;
    let mean = units.iter().sum::<f64>() / n;
    let var = if units.len() > 1 {
        units.iter().map(|u| (u - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(EvalReport {
        opponent: cfg.opponent.name(),
        bet_set: cfg.lbr.bet_set.name.clone(),
        lbr_rounds: cfg.lbr.active_rounds,
        big_blind: cfg.rules.big_blind,
        mean_mbb: mean * to_mbb,
        ci95_mbb: 1.96 * (var / n).sqrt() * to_mbb,
        units: units.len() as u64,
        pairs: cfg.pairs,
        hands,
        discarded_hands: discarded,
        imaginary_fallbacks: fallbacks,
        duplicate: cfg.duplicate,
        imaginary: cfg.imaginary,
        seed: cfg.seed,
        action_histogram: histogram,
    })
}
