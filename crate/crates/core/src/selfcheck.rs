//! Invariant suites behind the `selfcheck` subcommand: range algebra,
//! zero-sum bookkeeping, action-legality fuzzing, determinism, CI
//! coverage, and imaginary-observation unbiasedness.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cards::{Card, NUM_HANDS};
use crate::engine::{
    apply_action, deal_board, legal_actions, terminal_payoff, GameRules, PublicState,
    Status, FIRST, SECOND,
};
use crate::harness::{evaluate, random_deal, MatchConfig, OpponentSpec};
use crate::lbr::{choose_action, BetSet, LbrConfig};
use crate::preflop::{build_preflop_table, BuildConfig, BuildMethod, PreflopTable};
use crate::range::Range;
use crate::strategy::{chump_random_legal, StrategyOracle};

/// One named invariant check and its outcome.
pub struct CheckResult {
    pub name: &'static str,
    pub detail: String,
    pub passed: bool,
}

/// Runs every suite; `progress` receives each result as it lands.
pub fn run_selfcheck(mut progress: impl FnMut(&CheckResult)) -> bool {
    let table = build_preflop_table(&BuildConfig {
        method: BuildMethod::MonteCarlo { boards: 64 },
        seed: 77,
    });
    let checks: Vec<fn(&PreflopTable) -> CheckResult> = vec![
        check_range_normalization,
        check_fold_split_conservation,
        check_zero_sum_payoffs,
        check_playout_legality,
        check_lbr_legality,
        check_determinism,
        check_ci_coverage,
        check_imaginary_unbiasedness,
        check_duplicate_variance,
    ];
    let mut all = true;
    for check in checks {
        let result = check(&table);
        all &= result.passed;
        progress(&result);
    }
    all
}

fn result(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult { name, detail, passed }
}

/// Random likelihood vectors keep ranges normalized and non-negative;
/// uniform likelihoods are the identity.
fn check_range_normalization(_table: &PreflopTable) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..2_000 {
        let dead: Vec<Card> = {
            let mut ids: Vec<u8> = (0..52).collect();
            for i in 0..3 {
                let j = rng.gen_range(i..52);
                ids.swap(i, j);
            }
            ids[..3].iter().map(|&i| Card::from_id(i)).collect()
        };
        let mut range = Range::uniform(&dead).unwrap();
        for _ in 0..5 {
            let lik: Vec<f64> = (0..NUM_HANDS).map(|_| rng.gen_range(0.01..1.0)).collect();
            range = range.bayes_update(&lik).unwrap();
            let sum: f64 = range.probs().iter().sum();
            worst = worst.max((sum - 1.0).abs());
            if range.probs().iter().any(|&p| p < 0.0) {
                return result("range-normalization", false, "negative probability".into());
            }
        }
        let before = range.clone();
        let after = range.bayes_update(&vec![0.37; NUM_HANDS]).unwrap();
        worst = worst.max(after.max_abs_diff(&before));
    }
    result("range-normalization", worst < 1e-9, format!("max drift {worst:.2e}"))
}

/// fp + mass of the continuing (unnormalized) range equals 1.
fn check_fold_split_conservation(_table: &PreflopTable) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..2_000 {
        let range = {
            let lik: Vec<f64> = (0..NUM_HANDS).map(|_| rng.gen_range(0.0..1.0)).collect();
            Range::uniform(&[]).unwrap().bayes_update(&lik).unwrap()
        };
        let folds: Vec<f64> = (0..NUM_HANDS).map(|_| rng.gen_range(0.0..1.0)).collect();
        let split = range.fold_split(&folds).unwrap();
        let continuing: f64 = range
            .probs()
            .iter()
            .zip(&folds)
            .map(|(p, f)| p * (1.0 - f))
            .sum();
        worst = worst.max((split.fold_prob + continuing - 1.0).abs());
    }
    result("fold-split-conservation", worst < 1e-9, format!("max drift {worst:.2e}"))
}

/// Plays a random legal action (by both players); used by the fuzzers.
fn random_playout(rng: &mut ChaCha8Rng, rules: GameRules) -> (PublicState, u64) {
    let deal = random_deal(rng);
    let mut oracle = chump_random_legal();
    let mut s = crate::engine::initial_state(rules);
    let mut actions = 0;
    loop {
        match s.status() {
            Status::Terminal(_) => return (s, actions),
            Status::AwaitingDeal => {
                let have = s.board().len();
                let need = if have == 0 { 3 } else { 1 };
                s = deal_board(&s, &deal.board[have..have + need]).unwrap();
            }
            Status::Acting => {
                let h = deal.hands[s.to_act()];
                let a = oracle.sample_action(&s, h, rng).unwrap();
                actions += 1;
                s = apply_action(&s, a).unwrap();
            }
        }
    }
}

/// Random playouts stay legal for >= 1e5 actions and terminate.
fn check_playout_legality(_table: &PreflopTable) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut actions = 0u64;
    let mut hands = 0u64;
    while actions < 100_000 {
        // apply_action rejects illegal moves, so reaching a terminal
        // state certifies every step of the transcript
        let (s, n) = random_playout(&mut rng, GameRules::default());
        debug_assert!(s.is_terminal());
        actions += n;
        hands += 1;
        let _ = s;
    }
    result("playout-legality", true, format!("{actions} actions over {hands} hands"))
}

/// Winnings sum to zero across seats on random playouts.
fn check_zero_sum_payoffs(_table: &PreflopTable) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for i in 0..3_000 {
        let deal_rng = &mut ChaCha8Rng::seed_from_u64(i);
        let deal = random_deal(deal_rng);
        let (s, _) = {
            // replay the same action stream against the fixed deal
            let mut oracle = chump_random_legal();
            let mut s = crate::engine::initial_state(GameRules::default());
            loop {
                match s.status() {
                    Status::Terminal(_) => break,
                    Status::AwaitingDeal => {
                        let have = s.board().len();
                        let need = if have == 0 { 3 } else { 1 };
                        s = deal_board(&s, &deal.board[have..have + need]).unwrap();
                    }
                    Status::Acting => {
                        let h = deal.hands[s.to_act()];
                        let a = oracle.sample_action(&s, h, &mut rng).unwrap();
                        s = apply_action(&s, a).unwrap();
                    }
                }
            }
            (s, 0)
        };
        let p0 = terminal_payoff(&s, FIRST, deal.hands[0], deal.hands[1]).unwrap();
        let p1 = terminal_payoff(&s, SECOND, deal.hands[1], deal.hands[0]).unwrap();
        if p0 + p1 != 0 {
            return result("zero-sum-payoffs", false, format!("{p0} + {p1} != 0"));
        }
    }
    result("zero-sum-payoffs", true, "3000 playouts".into())
}

/// choose_action emits only legal actions over >= 1e5 fuzzed decisions,
/// biased toward cheap preflop and river states.
fn check_lbr_legality(table: &PreflopTable) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let bet_sets = [
        BetSet::fc(),
        BetSet::fcpa(),
        BetSet::custom(vec![0.3, 2.5], true).unwrap(),
    ];
    let mut decisions = 0u64;
    while decisions < 100_000 {
        // walk a random prefix of a playout, stopping at a random
        // acting state; preflop and river dominate by construction
        let deal = random_deal(&mut rng);
        let mut oracle = chump_random_legal();
        let mut s = crate::engine::initial_state(GameRules::default());
        let stop_round: u8 =
            if rng.gen_bool(0.7) { *[1, 4].choose(&mut rng).unwrap() } else { rng.gen_range(2..=3) };
        loop {
            match s.status() {
                Status::Terminal(_) => break,
                Status::AwaitingDeal => {
                    let have = s.board().len();
                    let need = if have == 0 { 3 } else { 1 };
                    s = deal_board(&s, &deal.board[have..have + need]).unwrap();
                }
                Status::Acting => {
                    if s.round() >= stop_round {
                        break;
                    }
                    let h = deal.hands[s.to_act()];
                    let a = oracle.sample_action(&s, h, &mut rng).unwrap();
                    s = apply_action(&s, a).unwrap();
                }
            }
        }
        if !matches!(s.status(), Status::Acting)
            || (s.round() > 1 && s.round() < 4 && rng.gen_bool(0.9))
        {
            continue;
        }
        let me = s.to_act();
        let hand = deal.hands[me];
        let (c1, c2) = hand.cards();
        let mut dead = s.board().to_vec();
        dead.extend([c1, c2]);
        let pi = Range::uniform(&dead).unwrap();
        let cfg = LbrConfig::new(
            bet_sets[rng.gen_range(0..bet_sets.len())].clone(),
            [true; 4],
        )
        .unwrap();
        let a = match choose_action(&pi, &s, hand, &cfg, &mut oracle, Some(table)) {
            Ok(a) => a,
            Err(e) => return result("lbr-legality", false, format!("decision failed: {e}")),
        };
        if !legal_actions(&s).unwrap().contains(a) {
            return result("lbr-legality", false, format!("illegal {a} at {}", crate::engine::format_state(&s)));
        }
        decisions += 1;
    }
    result("lbr-legality", true, format!("{decisions} decisions"))
}

fn quick_cfg(opponent: OpponentSpec, bets: BetSet, rounds: [bool; 4], pairs: u64, seed: u64) -> MatchConfig {
    MatchConfig {
        rules: GameRules::default(),
        lbr: LbrConfig::new(bets, rounds).unwrap(),
        opponent,
        pairs,
        seed,
        sampled_queries: None,
        duplicate: true,
        imaginary: true,
    }
}

/// Identical (seed, config) runs produce identical reports.
fn check_determinism(_table: &PreflopTable) -> CheckResult {
    let cfg = quick_cfg(
        OpponentSpec::RandomLegal,
        BetSet::fcpa(),
        [false, false, true, true],
        150,
        21,
    );
    let a = serde_json::to_string(&evaluate(&cfg, None).unwrap()).unwrap();
    let b = serde_json::to_string(&evaluate(&cfg, None).unwrap()).unwrap();
    result("determinism", a == b, "two seeded runs compared".into())
}

/// Across 100 seeded unpaired runs against always-call (fc), the true
/// value 0 lies inside the 95% CI at least 90 times.
fn check_ci_coverage(_table: &PreflopTable) -> CheckResult {
    let mut covered = 0;
    for seed in 0..100 {
        let mut cfg = quick_cfg(
            OpponentSpec::AlwaysCall,
            BetSet::fc(),
            [false, false, false, true],
            150,
            1000 + seed,
        );
        // unpaired raw outcomes: duplicate pairing would cancel exactly
        // and make coverage trivial
        cfg.duplicate = false;
        cfg.imaginary = false;
        let report = evaluate(&cfg, None).unwrap();
        if report.mean_mbb.abs() <= report.ci95_mbb {
            covered += 1;
        }
    }
    result("ci-coverage", covered >= 90, format!("{covered}/100 intervals contain 0"))
}

/// Means with and without imaginary observations agree within joint
/// CIs on three chump configurations.
fn check_imaginary_unbiasedness(_table: &PreflopTable) -> CheckResult {
    let configs = [
        (OpponentSpec::AlwaysCall, BetSet::fcpa(), [false, false, true, true]),
        (OpponentSpec::HalfRaise, BetSet::fc(), [false, false, true, true]),
        (OpponentSpec::RandomLegal, BetSet::fcpa(), [false, false, false, true]),
    ];
    let mut details = Vec::new();
    for (i, (opp, bets, rounds)) in configs.into_iter().enumerate() {
        let mut cfg = quick_cfg(opp, bets, rounds, 1_200, 31 + i as u64);
        let with = evaluate(&cfg, None).unwrap();
        cfg.imaginary = false;
        let without = evaluate(&cfg, None).unwrap();
        let gap = (with.mean_mbb - without.mean_mbb).abs();
        let joint = with.ci95_mbb + without.ci95_mbb;
        details.push(format!("{}: |Δ| {:.0} vs joint CI {:.0}", with.opponent, gap, joint));
        if gap > joint {
            return result("imaginary-unbiasedness", false, details.join("; "));
        }
    }
    result("imaginary-unbiasedness", true, details.join("; "))
}

/// Duplicate pair means are no noisier than independent single hands
/// at the same hand count.
fn check_duplicate_variance(_table: &PreflopTable) -> CheckResult {
    let mut cfg = quick_cfg(
        OpponentSpec::AlwaysCall,
        BetSet::fcpa(),
        [false, false, false, true],
        2_500,
        41,
    );
    cfg.imaginary = false;
    let paired = evaluate(&cfg, None).unwrap();
    cfg.duplicate = false;
    let single = evaluate(&cfg, None).unwrap();
    // equal hand counts; the pairs aggregate 2 hands per unit, so
    // compare the CI of the mean directly
    let ok = paired.ci95_mbb <= single.ci95_mbb;
    result(
        "duplicate-variance",
        ok,
        format!("paired CI {:.0} vs single CI {:.0}", paired.ci95_mbb, single.ci95_mbb),
    )
}
