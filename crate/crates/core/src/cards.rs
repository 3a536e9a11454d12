//! Card representation, canonical private-hand indexing and an exact
//! 7-card hand evaluator.
//!
//! Cards are encoded as `id = (rank - 2) * 4 + suit` with ranks 2..=14
//! (deuce through ace) and suits clubs=0, diamonds=1, hearts=2, spades=3.
//! The id layout is fixed so that hand indices stay stable across builds
//! and can be used to key persisted equity tables.

use std::fmt;
use std::sync::OnceLock;

use thiserror::Error;

pub const DECK_SIZE: usize = 52;
/// Number of unordered two-card private hands, C(52, 2).
pub const NUM_HANDS: usize = 1326;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CardError {
    #[error("malformed card {0:?}: expected rank in 2-9,T,J,Q,K,A and suit in c,d,h,s")]
    Parse(String),
    #[error("hand requires two distinct cards, got {0} twice")]
    DuplicateInHand(Card),
    #[error("duplicate card {0} in 7-card set")]
    DuplicateInSeven(Card),
}

/// A playing card, stored by its canonical 0-51 id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Card(u8);

const RANK_CHARS: [char; 13] = ['2', '3', '4', '5', '6', '7', '8', '9', 'T', 'J', 'Q', 'K', 'A'];
const SUIT_CHARS: [char; 4] = ['c', 'd', 'h', 's'];

impl Card {
    pub fn from_id(id: u8) -> Card {
        assert!(id < 52, "card id out of range: {id}");
        Card(id)
    }

    pub fn new(rank: u8, suit: u8) -> Card {
        assert!((2..=14).contains(&rank) && suit < 4);
        Card((rank - 2) * 4 + suit)
    }

    pub fn id(self) -> u8 {
        self.0
    }

    /// Rank 2..=14 (ace high).
    pub fn rank(self) -> u8 {
        self.0 / 4 + 2
    }

    pub fn suit(self) -> u8 {
        self.0 % 4
    }

    /// 52-bit set membership mask.
    pub fn mask(self) -> u64 {
        1u64 << self.0
    }
}

impl fmt::Display for Card {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}",
            RANK_CHARS[(self.rank() - 2) as usize],
            SUIT_CHARS[self.suit() as usize]
        )
    }
}

impl std::str::FromStr for Card {
    type Err = CardError;

    fn from_str(s: &str) -> Result<Card, CardError> {
        parse_card(s)
    }
}

/// Parses a 2-character card like `"As"` or `"7d"`.
pub fn parse_card(text: &str) -> Result<Card, CardError> {
    let mut chars = text.chars();
    let (r, s) = match (chars.next(), chars.next(), chars.next()) {
        (Some(r), Some(s), None) => (r, s),
        _ => return Err(CardError::Parse(text.to_string())),
    };
    let rank = RANK_CHARS
        .iter()
        .position(|&c| c == r)
        .ok_or_else(|| CardError::Parse(text.to_string()))?;
    let suit = SUIT_CHARS
        .iter()
        .position(|&c| c == s)
        .ok_or_else(|| CardError::Parse(text.to_string()))?;
    Ok(Card((rank * 4 + suit) as u8))
}

/// Parses concatenated 2-char cards like `"AsKd7h"`.
pub fn parse_cards(text: &str) -> Result<Vec<Card>, CardError> {
    if text.len() % 2 != 0 {
        return Err(CardError::Parse(text.to_string()));
    }
    text.as_bytes()
        .chunks(2)
        .map(|ch| parse_card(std::str::from_utf8(ch).map_err(|_| CardError::Parse(text.to_string()))?))
        .collect()
}

pub fn format_cards(cards: &[Card]) -> String {
    cards.iter().map(|c| c.to_string()).collect()
}

/// Canonical index of an unordered pair of distinct cards.
///
/// For ids `c1 < c2`: `index = c1*51 - c1*(c1-1)/2 + (c2 - c1 - 1)`,
/// a bijection onto 0..=1325.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HandIndex(u16);

impl HandIndex {
    pub fn from_raw(i: u16) -> HandIndex {
        assert!((i as usize) < NUM_HANDS, "hand index out of range: {i}");
        HandIndex(i)
    }

    pub fn raw(self) -> u16 {
        self.0
    }

    pub fn cards(self) -> (Card, Card) {
        hand_table()[self.0 as usize]
    }

    /// 52-bit mask of the two cards.
    pub fn mask(self) -> u64 {
        let (a, b) = self.cards();
        a.mask() | b.mask()
    }
}

impl fmt::Display for HandIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = self.cards();
        write!(f, "{a}{b}")
    }
}

/// Canonical index of the unordered pair `{c1, c2}`; symmetric in its arguments.
pub fn hand_index(c1: Card, c2: Card) -> Result<HandIndex, CardError> {
    if c1 == c2 {
        return Err(CardError::DuplicateInHand(c1));
    }
    let (lo, hi) = if c1.0 < c2.0 { (c1.0, c2.0) } else { (c2.0, c1.0) };
    let lo = lo as i32;
    let hi = hi as i32;
    Ok(HandIndex((lo * 51 - lo * (lo - 1) / 2 + (hi - lo - 1)) as u16))
}

fn hand_table() -> &'static [(Card, Card); NUM_HANDS] {
    static TABLE: OnceLock<[(Card, Card); NUM_HANDS]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [(Card(0), Card(0)); NUM_HANDS];
        let mut i = 0;
        for c1 in 0..52u8 {
            for c2 in (c1 + 1)..52 {
                t[i] = (Card(c1), Card(c2));
                i += 1;
            }
        }
        debug_assert_eq!(i, NUM_HANDS);
        t
    })
}

/// Iterator over all 1326 hand indices.
pub fn all_hands() -> impl Iterator<Item = HandIndex> {
    (0..NUM_HANDS as u16).map(HandIndex)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum HandCategory {
    HighCard = 0,
    Pair = 1,
    TwoPair = 2,
    Trips = 3,
    Straight = 4,
    Flush = 5,
    FullHouse = 6,
    Quads = 7,
    StraightFlush = 8,
}

/// Total-order strength of a 7-card hand: compare by `(category, tiebreak)`.
///
/// The tiebreak packs the deciding ranks (0 = deuce .. 12 = ace) into
/// 4-bit groups, most significant first, exactly the ranks a best 5-card
/// hand is compared by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HandRank {
    pub category: HandCategory,
    pub tiebreak: u32,
}

/// Incremental rank/suit tallies for a partially-fixed card set.
///
/// `m1..m4` are 13-bit rank masks of ranks seen at least 1..4 times.
#[derive(Debug, Clone, Copy, Default)]
pub struct BoardEval {
    m1: u16,
    m2: u16,
    m3: u16,
    m4: u16,
    suit_cnt: [u8; 4],
    suit_mask: [u16; 4],
}

impl BoardEval {
    pub fn new(board: &[Card]) -> BoardEval {
        let mut b = BoardEval::default();
        for &c in board {
            b.add(c);
        }
        b
    }

    #[inline]
    fn add(&mut self, c: Card) {
        let r = (c.0 / 4) as u16;
        let s = (c.0 % 4) as usize;
        let bit = 1u16 << r;
        if self.m1 & bit == 0 {
            self.m1 |= bit;
        } else if self.m2 & bit == 0 {
            self.m2 |= bit;
        } else if self.m3 & bit == 0 {
            self.m3 |= bit;
        } else {
            self.m4 |= bit;
        }
        self.suit_cnt[s] += 1;
        self.suit_mask[s] |= bit;
    }

    /// Copy of the tally with one more card.
    #[inline]
    pub fn with(&self, c: Card) -> BoardEval {
        let mut e = *self;
        e.add(c);
        e
    }

    /// Rank of the 5-card board plus two hole cards.
    ///
    /// `self` must hold exactly 5 cards; the hole cards must be distinct
    /// from the board and each other (not rechecked here).
    #[inline]
    pub fn eval2(&self, c1: Card, c2: Card) -> HandRank {
        let mut e = *self;
        e.add(c1);
        e.add(c2);
        e.classify7()
    }

    /// Classifies the tally of exactly 7 distinct cards.
    ///
    /// Relies on 7-card facts: at most one suit can flush, and a flush
    /// excludes quads and full houses.
    #[inline]
    fn classify7(&self) -> HandRank {
        for s in 0..4 {
            if self.suit_cnt[s] >= 5 {
                let fm = self.suit_mask[s];
                if let Some(hi) = straight_high(fm) {
                    return HandRank { category: HandCategory::StraightFlush, tiebreak: hi as u32 };
                }
                return HandRank { category: HandCategory::Flush, tiebreak: pack_top(fm, 5) };
            }
        }
        if self.m4 != 0 {
            let q = high_bit(self.m4);
            let kick = high_bit(self.m1 & !(1 << q));
            return HandRank {
                category: HandCategory::Quads,
                tiebreak: (q as u32) << 4 | kick as u32,
            };
        }
        if self.m3 != 0 {
            let t = high_bit(self.m3);
            let pairs = self.m2 & !(1 << t);
            if pairs != 0 {
                return HandRank {
                    category: HandCategory::FullHouse,
                    tiebreak: (t as u32) << 4 | high_bit(pairs) as u32,
                };
            }
        }
        if let Some(hi) = straight_high(self.m1) {
            return HandRank { category: HandCategory::Straight, tiebreak: hi as u32 };
        }
        if self.m3 != 0 {
            let t = high_bit(self.m3);
            let kick = pack_top(self.m1 & !(1 << t), 2);
            return HandRank { category: HandCategory::Trips, tiebreak: (t as u32) << 8 | kick };
        }
        if self.m2.count_ones() >= 2 {
            let p1 = high_bit(self.m2);
            let p2 = high_bit(self.m2 & !(1 << p1));
            let kick = high_bit(self.m1 & !(1 << p1) & !(1 << p2));
            return HandRank {
                category: HandCategory::TwoPair,
                tiebreak: (p1 as u32) << 8 | (p2 as u32) << 4 | kick as u32,
            };
        }
        if self.m2 != 0 {
            let p = high_bit(self.m2);
            let kick = pack_top(self.m1 & !(1 << p), 3);
            return HandRank { category: HandCategory::Pair, tiebreak: (p as u32) << 12 | kick };
        }
        HandRank { category: HandCategory::HighCard, tiebreak: pack_top(self.m1, 5) }
    }
}

/// Highest straight top rank in a 13-bit rank mask, ace-low wheel included.
#[inline]
fn straight_high(mask: u16) -> Option<u8> {
    let run = mask & (mask >> 1) & (mask >> 2) & (mask >> 3) & (mask >> 4);
    if run != 0 {
        return Some(high_bit(run) + 4);
    }
    // A-2-3-4-5: ace bit 12 plus bits 0..3.
    if mask & 0x100F == 0x100F {
        return Some(3);
    }
    None
}

#[inline]
fn high_bit(mask: u16) -> u8 {
    debug_assert!(mask != 0);
    15 - mask.leading_zeros() as u8
}

/// Packs the top `k` set bits of `mask` into 4-bit groups, highest first.
#[inline]
fn pack_top(mask: u16, k: u32) -> u32 {
    let mut m = mask;
    while m.count_ones() > k {
        m &= m - 1; // drop lowest
    }
    let mut key = 0u32;
    while m != 0 {
        let hi = high_bit(m);
        key = key << 4 | hi as u32;
        m &= !(1 << hi);
    }
    key
}

/// Rank of the best 5-card hand from exactly 7 distinct cards.
pub fn evaluate7(cards: &[Card; 7]) -> Result<HandRank, CardError> {
    let mut seen = 0u64;
    for &c in cards {
        if seen & c.mask() != 0 {
            return Err(CardError::DuplicateInSeven(c));
        }
        seen |= c.mask();
    }
    Ok(evaluate7_unchecked(cards))
}

/// As [`evaluate7`] but without the duplicate check; used in hot loops
/// where disjointness is already guaranteed.
#[inline]
pub fn evaluate7_unchecked(cards: &[Card; 7]) -> HandRank {
    BoardEval::new(cards).classify7()
}
