//! Shared helpers for the integration suites: an independent
//! brute-force hand-rank oracle and the shared acceptance preflop
//! table.

#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::OnceLock;

use lbr_bench::cards::Card;
use lbr_bench::preflop::{build_preflop_table, BuildConfig, BuildMethod, PreflopTable};

/// Independent hand strength: category index (high card = 0 through
/// straight flush = 8) plus deciding ranks in comparison order.
/// Ordering is derived from the rules of poker alone, with no shared
/// code or representation with the library's evaluator.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct NaiveRank {
    pub category: u8,
    pub key: Vec<u8>,
}

/// Rank of exactly 5 cards, by direct case analysis.
pub fn naive5(cards: &[Card]) -> NaiveRank {
    assert_eq!(cards.len(), 5);
    let mut ranks: Vec<u8> = cards.iter().map(|c| c.rank()).collect();
    ranks.sort_unstable_by(|a, b| b.cmp(a));
    let flush = cards.iter().all(|c| c.suit() == cards[0].suit());
    let distinct = {
        let mut r = ranks.clone();
        r.dedup();
        r
    };
    let straight_high = if distinct.len() == 5 {
        if ranks[0] - ranks[4] == 4 {
            Some(ranks[0])
        } else if ranks == [14, 5, 4, 3, 2] {
            // the wheel plays as a five-high straight
            Some(5)
        } else {
            None
        }
    } else {
        None
    };
    // multiplicity groups ordered by (count, rank) descending
    let mut groups: Vec<(u8, u8)> = distinct
        .iter()
        .map(|&r| (ranks.iter().filter(|&&x| x == r).count() as u8, r))
        .collect();
    groups.sort_unstable_by(|a, b| b.cmp(a));
    let counts: Vec<u8> = groups.iter().map(|g| g.0).collect();
    let by_group: Vec<u8> = groups.iter().map(|g| g.1).collect();
    match (flush, straight_high, counts.as_slice()) {
        (true, Some(h), _) => NaiveRank { category: 8, key: vec![h] },
        (_, _, [4, 1]) => NaiveRank { category: 7, key: by_group },
        (_, _, [3, 2]) => NaiveRank { category: 6, key: by_group },
        (true, _, _) => NaiveRank { category: 5, key: ranks },
        (_, Some(h), _) => NaiveRank { category: 4, key: vec![h] },
        (_, _, [3, 1, 1]) => NaiveRank { category: 3, key: by_group },
        (_, _, [2, 2, 1]) => NaiveRank { category: 2, key: by_group },
        (_, _, [2, 1, 1, 1]) => NaiveRank { category: 1, key: by_group },
        _ => NaiveRank { category: 0, key: ranks },
    }
}

/// Best of all 21 five-card subsets of 7 cards.
pub fn naive7(cards: &[Card; 7]) -> NaiveRank {
    let mut best: Option<NaiveRank> = None;
    for skip1 in 0..7 {
        for skip2 in skip1 + 1..7 {
            let five: Vec<Card> = (0..7)
                .filter(|&i| i != skip1 && i != skip2)
                .map(|i| cards[i])
                .collect();
            let r = naive5(&five);
            if best.as_ref().is_none_or(|b| r > *b) {
                best = Some(r);
            }
        }
    }
    best.unwrap()
}

/// Monte Carlo win-probability oracle for a hand against a range on an
/// incomplete board: the opponent hand is drawn from the range, the
/// completion uniformly from the cards left after removing hero, board,
/// and that hand. Returns (estimate, standard error). Independent of
/// wp_rollout's enumeration; shares only the card evaluator, which is
/// oracle-tested separately.
pub fn mc_wp_oracle(
    hero: lbr_bench::cards::HandIndex,
    range: &lbr_bench::range::Range,
    board: &[Card],
    samples: u64,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> (f64, f64) {
    use lbr_bench::cards::{all_hands, BoardEval, HandIndex};
    use rand::Rng;
    let blocked = hero.mask() | board.iter().map(|c| c.mask()).sum::<u64>();
    let live: Vec<(HandIndex, f64)> = all_hands()
        .filter_map(|h| {
            let p = range.prob(h);
            (p > 0.0 && h.mask() & blocked == 0).then_some((h, p))
        })
        .collect();
    let total: f64 = live.iter().map(|(_, p)| p).sum();
    let cum: Vec<f64> = live
        .iter()
        .scan(0.0, |acc, (_, p)| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    let (h1, h2) = hero.cards();
    let base = BoardEval::new(board);
    let need = 5 - board.len();
    let mut sum = 0.0;
    let mut tie_or_win = [0u64; 2];
    for _ in 0..samples {
        let u = rng.gen_range(0.0..total);
        let i = cum.partition_point(|&c| c <= u).min(live.len() - 1);
        let opp = live[i].0;
        let mut used = blocked | opp.mask();
        let mut be = base;
        for _ in 0..need {
            // rejection-sample the next completion card
            loop {
                let c = Card::from_id(rng.gen_range(0..52));
                if c.mask() & used == 0 {
                    used |= c.mask();
                    be = be.with(c);
                    break;
                }
            }
        }
        let (o1, o2) = opp.cards();
        match be.eval2(h1, h2).cmp(&be.eval2(o1, o2)) {
            std::cmp::Ordering::Greater => {
                sum += 1.0;
                tie_or_win[1] += 1;
            }
            std::cmp::Ordering::Equal => {
                sum += 0.5;
                tie_or_win[0] += 1;
            }
            std::cmp::Ordering::Less => {}
        }
    }
    let n = samples as f64;
    let mean = sum / n;
    // variance of the 0 / 0.5 / 1 outcome variable
    let ex2 = (tie_or_win[1] as f64 + 0.25 * tie_or_win[0] as f64) / n;
    let var = (ex2 - mean * mean).max(0.0);
    (mean, (var / n).sqrt())
}

/// The production-scale preflop table shared by the acceptance runs:
/// Monte Carlo with 1e5 boards per matchup class, seed 1. Loaded from
/// `target/acceptance_preflop.tbl` when present (the CLI build-tables
/// output is bit-identical), built and cached there otherwise.
pub fn acceptance_table() -> &'static PreflopTable {
    static TABLE: OnceLock<PreflopTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let cfg = BuildConfig { method: BuildMethod::MonteCarlo { boards: 100_000 }, seed: 1 };
        let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "target", "acceptance_preflop.tbl"]
            .iter()
            .collect();
        if let Ok(t) = PreflopTable::load(&path) {
            if t.method() == cfg.method && t.seed() == cfg.seed {
                return t;
            }
        }
        let t = build_preflop_table(&cfg);
        let _ = t.save(&path);
        t
    })
}
