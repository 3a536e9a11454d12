//! The opponent's range: a probability distribution over the 1326
//! unordered private hands, with Bayesian conditioning on observed
//! actions and board cards, the fold-probability split, and
//! win-probability rollouts against the range.

use thiserror::Error;

use crate::cards::{BoardEval, Card, HandIndex, NUM_HANDS};
use crate::engine::PublicState;
use crate::preflop::PreflopTable;

/// Per-hand action probabilities sigma(s, h, a) for a fixed state and action.
pub type Likelihoods = Vec<f64>;

#[derive(Debug, Error, PartialEq)]
pub enum RangeError {
    #[error("at most 50 cards may be dead, got {0}")]
    TooManyDead(usize),
    #[error("observed evidence has zero probability under every live hand")]
    Degenerate,
    #[error("card {0} is already dead")]
    DeadCardCollision(Card),
    #[error("likelihood vector must have {NUM_HANDS} entries in [0, 1]")]
    BadLikelihoods,
    #[error("hand {0} overlaps the board or is not excluded from the range")]
    InconsistentHand(HandIndex),
    #[error("preflop rollout requires the precomputed equity table")]
    PreflopTableMissing,
    #[error("rollout is defined for board sizes 0/3/4/5, got {0}")]
    BadBoard(usize),
}

/// Probability per [`HandIndex`]; hands containing a dead card are
/// exactly zero and the live mass sums to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Range {
    probs: Vec<f64>,
    dead: u64,
}

/// Result of splitting a range on an opponent's fold decision.
///
/// `continue_range` is `None` when the opponent folds with probability
/// one; callers must not consult it then.
#[derive(Debug, Clone)]
pub struct FoldSplit {
    pub fold_prob: f64,
    pub continue_range: Option<Range>,
}

const MASS_EPS: f64 = 1e-12;

impl Range {
    /// Uniform distribution over all hands disjoint from `dead_cards`.
    pub fn uniform(dead_cards: &[Card]) -> Result<Range, RangeError> {
        let mut dead = 0u64;
        for &c in dead_cards {
            dead |= c.mask();
        }
        if dead.count_ones() >= 51 {
            return Err(RangeError::TooManyDead(dead.count_ones() as usize));
        }
        let mut probs = vec![0.0; NUM_HANDS];
        let mut live = 0usize;
        for h in crate::cards::all_hands() {
            if h.mask() & dead == 0 {
                probs[h.raw() as usize] = 1.0;
                live += 1;
            }
        }
        if live == 0 {
            return Err(RangeError::TooManyDead(dead.count_ones() as usize));
        }
        let p = 1.0 / live as f64;
        for v in probs.iter_mut() {
            if *v > 0.0 {
                *v = p;
            }
        }
        Ok(Range { probs, dead })
    }

    pub fn prob(&self, h: HandIndex) -> f64 {
        self.probs[h.raw() as usize]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// 52-bit mask of cards known to be unavailable to the opponent.
    pub fn dead_mask(&self) -> u64 {
        self.dead
    }

    pub fn live_count(&self) -> usize {
        self.probs.iter().filter(|&&p| p > 0.0).count()
    }

    /// Bayes' rule: posterior proportional to `prior * likelihood`.
    pub fn bayes_update(&self, likelihoods: &[f64]) -> Result<Range, RangeError> {
        if likelihoods.len() != NUM_HANDS
            || likelihoods.iter().any(|&l| !(0.0..=1.0).contains(&l))
        {
            return Err(RangeError::BadLikelihoods);
        }
        let mut probs: Vec<f64> =
            self.probs.iter().zip(likelihoods).map(|(&p, &l)| p * l).collect();
        let mass: f64 = probs.iter().sum();
        if mass <= MASS_EPS {
            return Err(RangeError::Degenerate);
        }
        for v in probs.iter_mut() {
            *v /= mass;
        }
        Ok(Range { probs, dead: self.dead })
    }

    /// Zeroes all hands intersecting the newly revealed board cards and
    /// renormalizes.
    pub fn condition_on_board(&self, new_cards: &[Card]) -> Result<Range, RangeError> {
        let mut new_mask = 0u64;
        for &c in new_cards {
            if self.dead & c.mask() != 0 || new_mask & c.mask() != 0 {
                return Err(RangeError::DeadCardCollision(c));
            }
            new_mask |= c.mask();
        }
        let mut probs = self.probs.clone();
        for h in crate::cards::all_hands() {
            if h.mask() & new_mask != 0 {
                probs[h.raw() as usize] = 0.0;
            }
        }
        let mass: f64 = probs.iter().sum();
        if mass <= MASS_EPS {
            return Err(RangeError::Degenerate);
        }
        for v in probs.iter_mut() {
            *v /= mass;
        }
        Ok(Range { probs, dead: self.dead | new_mask })
    }

    /// Splits the range on a fold decision: the total fold probability
    /// and the range conditioned on not folding.
    pub fn fold_split(&self, fold_likelihoods: &[f64]) -> Result<FoldSplit, RangeError> {
        if fold_likelihoods.len() != NUM_HANDS
            || fold_likelihoods.iter().any(|&l| !(0.0..=1.0).contains(&l))
        {
            return Err(RangeError::BadLikelihoods);
        }
        let mut fp = 0.0;
        let mut probs = vec![0.0; NUM_HANDS];
        let mut mass = 0.0;
        for (i, (&p, &f)) in self.probs.iter().zip(fold_likelihoods).enumerate() {
            fp += p * f;
            let keep = p * (1.0 - f);
            probs[i] = keep;
            mass += keep;
        }
        if mass <= MASS_EPS {
            return Ok(FoldSplit { fold_prob: 1.0, continue_range: None });
        }
        for v in probs.iter_mut() {
            *v /= mass;
        }
        Ok(FoldSplit { fold_prob: fp, continue_range: Some(Range { probs, dead: self.dead }) })
    }

    /// Largest absolute per-hand difference; used to detect that a
    /// posterior is numerically identical to its prior.
    pub fn max_abs_diff(&self, other: &Range) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn live_hands(&self) -> Vec<LiveHand> {
        let mut out = Vec::with_capacity(self.live_count());
        for h in crate::cards::all_hands() {
            let p = self.probs[h.raw() as usize];
            if p > 0.0 {
                let (c1, c2) = h.cards();
                out.push(LiveHand { mask: h.mask(), c1, c2, p });
            }
        }
        out
    }
}

struct LiveHand {
    mask: u64,
    c1: Card,
    c2: Card,
    p: f64,
}

/// Probability that `hand` wins at showdown against the range, counting
/// ties as half a win.
///
/// Board completions are enumerated exhaustively: jointly over
/// (completion, opponent hand) pairs with consistent card removal.
/// Preflop uses the precomputed equity table.
pub fn wp_rollout(
    hand: HandIndex,
    range: &Range,
    s: &PublicState,
    table: Option<&PreflopTable>,
) -> Result<f64, RangeError> {
    let board = s.board();
    let board_mask: u64 = board.iter().map(|c| c.mask()).sum();
    if hand.mask() & board_mask != 0 || range.dead & hand.mask() != hand.mask() {
        return Err(RangeError::InconsistentHand(hand));
    }
    let (hc1, hc2) = hand.cards();
    let dead = board_mask | hand.mask();
    match board.len() {
        0 => {
            let table = table.ok_or(RangeError::PreflopTableMissing)?;
            let mut num = 0.0;
            let mut den = 0.0;
            for h in crate::cards::all_hands() {
                let p = range.probs[h.raw() as usize];
                if p > 0.0 {
                    let eq = table
                        .equity(hand, h)
                        .expect("live opponent hand overlaps the hero hand");
                    num += p * eq;
                    den += p;
                }
            }
            finish(num, den)
        }
        5 => {
            let be = BoardEval::new(board);
            let hero = be.eval2(hc1, hc2);
            let mut num = 0.0;
            let mut den = 0.0;
            for lh in range.live_hands() {
                let theirs = be.eval2(lh.c1, lh.c2);
                num += lh.p * score(hero.cmp(&theirs));
                den += lh.p;
            }
            finish(num, den)
        }
        4 => {
            let live = range.live_hands();
            let base = BoardEval::new(board);
            let mut num = 0.0;
            let mut den = 0.0;
            for river in remaining(dead) {
                let be = base.with(river);
                let hero = be.eval2(hc1, hc2);
                let rmask = river.mask();
                for lh in &live {
                    if lh.mask & rmask == 0 {
                        let theirs = be.eval2(lh.c1, lh.c2);
                        num += lh.p * score(hero.cmp(&theirs));
                        den += lh.p;
                    }
                }
            }
            finish(num, den)
        }
        3 => {
            let live = range.live_hands();
            let base = BoardEval::new(board);
            let deck = remaining(dead);
            let mut num = 0.0;
            let mut den = 0.0;
            for (i, &turn) in deck.iter().enumerate() {
                let be4 = base.with(turn);
                for &river in &deck[i + 1..] {
                    let be = be4.with(river);
                    let hero = be.eval2(hc1, hc2);
                    let cmask = turn.mask() | river.mask();
                    for lh in &live {
                        if lh.mask & cmask == 0 {
                            let theirs = be.eval2(lh.c1, lh.c2);
                            num += lh.p * score(hero.cmp(&theirs));
                            den += lh.p;
                        }
                    }
                }
            }
            finish(num, den)
        }
        n => Err(RangeError::BadBoard(n)),
    }
}

#[inline]
fn score(ord: std::cmp::Ordering) -> f64 {
    match ord {
        std::cmp::Ordering::Greater => 1.0,
        std::cmp::Ordering::Equal => 0.5,
        std::cmp::Ordering::Less => 0.0,
    }
}

fn finish(num: f64, den: f64) -> Result<f64, RangeError> {
    if den <= MASS_EPS {
        return Err(RangeError::Degenerate);
    }
    Ok(num / den)
}

fn remaining(dead: u64) -> Vec<Card> {
    (0..52u8)
        .filter(|&id| dead & (1 << id) == 0)
        .map(Card::from_id)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cards::{hand_index, parse_card, parse_cards};
    use crate::engine::{initial_state, parse_state, GameRules};

    fn cards(s: &str) -> Vec<Card> {
        parse_cards(s).unwrap()
    }

    fn hand(s: &str) -> HandIndex {
        let v = cards(s);
        hand_index(v[0], v[1]).unwrap()
    }

    fn sum(r: &Range) -> f64 {
        r.probs().iter().sum()
    }

    #[test]
    fn uniform_counts() {
        let r = Range::uniform(&[]).unwrap();
        assert_eq!(r.live_count(), 1326);
        assert!((r.prob(hand("As2c")) - 1.0 / 1326.0).abs() < 1e-15);

        let r = Range::uniform(&cards("AsKs")).unwrap();
        assert_eq!(r.live_count(), 1225);
        assert_eq!(r.prob(hand("AsQd")), 0.0);
        assert!((r.prob(hand("QdQc")) - 1.0 / 1225.0).abs() < 1e-15);
        assert!((sum(&r) - 1.0).abs() < 1e-9);

        let r = Range::uniform(&cards("AsKs2c3d4h5s6d")).unwrap();
        assert_eq!(r.live_count(), 990);
    }

    #[test]
    fn uniform_rejects_near_empty_deck() {
        let dead: Vec<Card> = (0..51).map(Card::from_id).collect();
        assert!(matches!(Range::uniform(&dead), Err(RangeError::TooManyDead(_))));
    }

    #[test]
    fn bayes_update_identity_and_zeroing() {
        let r = Range::uniform(&cards("AsKs")).unwrap();
        let flat = vec![0.7; NUM_HANDS];
        let upd = r.bayes_update(&flat).unwrap();
        assert!(upd.max_abs_diff(&r) < 1e-12);

        let mut l = vec![1.0; NUM_HANDS];
        l[hand("QdQc").raw() as usize] = 0.0;
        let upd = r.bayes_update(&l).unwrap();
        assert_eq!(upd.prob(hand("QdQc")), 0.0);
        assert!((sum(&upd) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bayes_update_three_hand_toy() {
        // prior (0.5, 0.25, 0.25) with likelihood (0.2, 0.4, 0.4) -> uniform
        let mut r = Range::uniform(&[]).unwrap();
        r.probs.iter_mut().for_each(|p| *p = 0.0);
        let (h0, h1, h2) = (hand("2c2d"), hand("7s7h"), hand("AsAh"));
        r.probs[h0.raw() as usize] = 0.5;
        r.probs[h1.raw() as usize] = 0.25;
        r.probs[h2.raw() as usize] = 0.25;
        let mut l = vec![0.0; NUM_HANDS];
        l[h0.raw() as usize] = 0.2;
        l[h1.raw() as usize] = 0.4;
        l[h2.raw() as usize] = 0.4;
        let upd = r.bayes_update(&l).unwrap();
        for h in [h0, h1, h2] {
            assert!((upd.prob(h) - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bayes_update_degenerate() {
        let r = Range::uniform(&[]).unwrap();
        assert_eq!(r.bayes_update(&vec![0.0; NUM_HANDS]), Err(RangeError::Degenerate));
        assert_eq!(r.bayes_update(&vec![2.0; NUM_HANDS]), Err(RangeError::BadLikelihoods));
    }

    #[test]
    fn condition_on_board_counts() {
        let r = Range::uniform(&cards("AsKs")).unwrap();
        let r = r.condition_on_board(&cards("2c3d4h")).unwrap();
        assert_eq!(r.live_count(), 1081); // C(47, 2)
        assert!((sum(&r) - 1.0).abs() < 1e-9);
        assert!((r.prob(hand("QdQc")) - 1.0 / 1081.0).abs() < 1e-15);
        assert!(matches!(
            r.condition_on_board(&cards("As")),
            Err(RangeError::DeadCardCollision(_))
        ));
    }

    #[test]
    fn fold_split_examples() {
        let r = Range::uniform(&cards("AsKs")).unwrap();
        let fs = r.fold_split(&vec![0.0; NUM_HANDS]).unwrap();
        assert_eq!(fs.fold_prob, 0.0);
        assert!(fs.continue_range.unwrap().max_abs_diff(&r) < 1e-12);

        let fs = r.fold_split(&vec![1.0; NUM_HANDS]).unwrap();
        assert!((fs.fold_prob - 1.0).abs() < 1e-12);
        assert!(fs.continue_range.is_none());

        // two-hand toy: pi = (0.5, 0.5), folds = (1, 0)
        let mut toy = r.clone();
        toy.probs.iter_mut().for_each(|p| *p = 0.0);
        let (h0, h1) = (hand("2c2d"), hand("7s7h"));
        toy.probs[h0.raw() as usize] = 0.5;
        toy.probs[h1.raw() as usize] = 0.5;
        let mut folds = vec![0.0; NUM_HANDS];
        folds[h0.raw() as usize] = 1.0;
        let fs = toy.fold_split(&folds).unwrap();
        assert!((fs.fold_prob - 0.5).abs() < 1e-12);
        let cont = fs.continue_range.unwrap();
        assert_eq!(cont.prob(h0), 0.0);
        assert!((cont.prob(h1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fold_split_conservation() {
        let r = Range::uniform(&cards("AsKs")).unwrap();
        let folds: Vec<f64> =
            (0..NUM_HANDS).map(|i| ((i * 7919) % 1000) as f64 / 1000.0).collect();
        let fs = r.fold_split(&folds).unwrap();
        let residual: f64 =
            r.probs().iter().zip(&folds).map(|(&p, &f)| p * (1.0 - f)).sum();
        assert!((fs.fold_prob + residual - 1.0).abs() < 1e-9);
    }

    #[test]
    fn river_rollout_point_ranges() {
        // Board and two specific hands: hero holds the nuts or a chop.
        let s = parse_state("cc/cc/cc/:AsKsQs7d2h", GameRules::default()).unwrap();
        let hero = hand("JsTs"); // royal flush
        let dead: Vec<Card> = s.board().iter().copied().chain(cards("JsTs")).collect();
        let mut point = Range::uniform(&dead).unwrap();
        let weak = hand("3c3h");
        point.probs.iter_mut().for_each(|p| *p = 0.0);
        point.probs[weak.raw() as usize] = 1.0;
        assert_eq!(wp_rollout(hero, &point, &s, None).unwrap(), 1.0);

        // Tie: both play the board straight A-K-Q + J-T? No; make an
        // explicit chop: board quads with shared kicker.
        let s = parse_state("cc/cc/cc/:7c7d7h7sAc", GameRules::default()).unwrap();
        let h1 = hand("2c3c");
        let dead: Vec<Card> = s.board().iter().copied().chain(cards("2c3c")).collect();
        let mut point = Range::uniform(&dead).unwrap();
        let h2 = hand("2d3d");
        point.probs.iter_mut().for_each(|p| *p = 0.0);
        point.probs[h2.raw() as usize] = 1.0;
        assert_eq!(wp_rollout(h1, &point, &s, None).unwrap(), 0.5);
    }

    #[test]
    fn rollout_rejects_inconsistency() {
        let s = parse_state("cc/:AsKdQh", GameRules::default()).unwrap();
        let r = Range::uniform(&cards("AsKdQh2c2d")).unwrap();
        // hero hand on the board
        assert!(wp_rollout(hand("AsAh"), &r, &s, None).is_err());
        // hero hand not excluded from the range
        assert!(wp_rollout(hand("9c9d"), &r, &s, None).is_err());
        // consistent call works
        assert!(wp_rollout(hand("2c2d"), &r, &s, None).is_ok());
    }

    #[test]
    fn preflop_rollout_needs_table() {
        let s = initial_state(GameRules::default());
        let r = Range::uniform(&cards("AhAd")).unwrap();
        assert_eq!(
            wp_rollout(hand("AhAd"), &r, &s, None),
            Err(RangeError::PreflopTableMissing)
        );
    }

    #[test]
    fn zero_sum_point_vs_point() {
        let s = parse_state("cc/cc/:AsKd7h2c", GameRules::default()).unwrap();
        let (ha, hb) = (hand("QcQd"), hand("JhTs"));
        let make_point = |mine: HandIndex, theirs: HandIndex| {
            let (c1, c2) = mine.cards();
            let mut dead: Vec<Card> = s.board().to_vec();
            dead.push(c1);
            dead.push(c2);
            let mut r = Range::uniform(&dead).unwrap();
            r.probs.iter_mut().for_each(|p| *p = 0.0);
            r.probs[theirs.raw() as usize] = 1.0;
            r
        };
        let wa = wp_rollout(ha, &make_point(ha, hb), &s, None).unwrap();
        let wb = wp_rollout(hb, &make_point(hb, ha), &s, None).unwrap();
        assert!((wa + wb - 1.0).abs() < 1e-12);
    }

    #[test]
    fn parse_card_helper_sanity() {
        assert_eq!(parse_card("Jd").unwrap().rank(), 11);
    }
}
