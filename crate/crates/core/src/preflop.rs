//! Persisted preflop equity table: win probability (ties counted half)
//! for every ordered pair of disjoint private hands over all five-card
//! board completions.
//!
//! Matchups are grouped by suit isomorphism, so one equity is computed
//! per canonical matchup class (~47k classes instead of ~1.7M ordered
//! pairs) either exactly or by seeded Monte Carlo. Mirror classes are
//! linked by zero-sum: equity(a, b) = 1 - equity(b, a), and
//! self-mirrored classes are exactly 1/2 by symmetry.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::cards::{BoardEval, Card, HandIndex, NUM_HANDS};

#[derive(Debug, Error)]
pub enum PreflopError {
    #[error("table i/o failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt table: {0}; rebuild with `build-tables`")]
    Corrupt(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuildMethod {
    /// Full enumeration of all C(48, 5) boards per class. Slow.
    Exact,
    /// Seeded sampling with the given board count per class.
    MonteCarlo { boards: u32 },
}

#[derive(Debug, Clone, Copy)]
pub struct BuildConfig {
    pub method: BuildMethod,
    pub seed: u64,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig { method: BuildMethod::MonteCarlo { boards: 100_000 }, seed: 1 }
    }
}

#[derive(Debug, Clone, Copy)]
struct ClassEntry {
    equity: f32,
    /// Error bound on `equity`: 4 sample standard errors plus f32 slack.
    bound: f32,
}

pub struct PreflopTable {
    method: BuildMethod,
    seed: u64,
    classes: BTreeMap<u32, ClassEntry>,
    /// Canonical class key per ordered hand pair, u32::MAX for overlaps.
    keys: Vec<u32>,
    /// Dense equity per ordered hand pair for fast rollouts.
    dense: Vec<f32>,
}

const MAGIC: &[u8; 8] = b"LBRPFT01";
const VERSION: u32 = 1;

/// All 24 suit permutations.
fn suit_perms() -> &'static [[u8; 4]; 24] {
    static PERMS: OnceLock<[[u8; 4]; 24]> = OnceLock::new();
    PERMS.get_or_init(|| {
        let mut out = [[0u8; 4]; 24];
        let mut n = 0;
        for a in 0..4u8 {
            for b in 0..4u8 {
                for c in 0..4u8 {
                    if b != a && c != a && c != b {
                        let d = 6 - a - b - c;
                        out[n] = [a, b, c, d];
                        n += 1;
                    }
                }
            }
        }
        out
    })
}

/// Canonical key of the ordered matchup (hero pair, villain pair) under
/// suit relabeling: the lexicographically smallest `[h1,h2,v1,v2]` card
/// id tuple (each pair sorted) over all 24 suit permutations, packed
/// big-endian into a u32.
pub fn canonical_matchup_key(hero: (Card, Card), villain: (Card, Card)) -> u32 {
    let ids = [hero.0.id(), hero.1.id(), villain.0.id(), villain.1.id()];
    let mut best = u32::MAX;
    for perm in suit_perms() {
        let m = |id: u8| (id & !3) | perm[(id & 3) as usize];
        let (h1, h2) = sort2(m(ids[0]), m(ids[1]));
        let (v1, v2) = sort2(m(ids[2]), m(ids[3]));
        let key =
            (h1 as u32) << 24 | (h2 as u32) << 16 | (v1 as u32) << 8 | v2 as u32;
        best = best.min(key);
    }
    best
}

#[inline]
fn sort2(a: u8, b: u8) -> (u8, u8) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

fn unpack_key(key: u32) -> [Card; 4] {
    [
        Card::from_id((key >> 24) as u8),
        Card::from_id((key >> 16) as u8),
        Card::from_id((key >> 8) as u8),
        Card::from_id(key as u8),
    ]
}

/// Key per ordered pair of hand indices; u32::MAX when the hands share a card.
fn build_key_table() -> Vec<u32> {
    let hands: Vec<(Card, Card, u64)> = crate::cards::all_hands()
        .map(|h| {
            let (a, b) = h.cards();
            (a, b, h.mask())
        })
        .collect();
    (0..NUM_HANDS)
        .into_par_iter()
        .flat_map_iter(|i| {
            let hands = &hands;
            (0..NUM_HANDS).map(move |j| {
                let (a1, a2, m1) = hands[i];
                let (b1, b2, m2) = hands[j];
                if m1 & m2 != 0 {
                    u32::MAX
                } else {
                    canonical_matchup_key((a1, a2), (b1, b2))
                }
            })
        })
        .collect()
}

fn equity_exact(cards: [Card; 4]) -> (f64, f64) {
    let dead: u64 = cards.iter().map(|c| c.mask()).sum();
    let deck: Vec<Card> =
        (0..52u8).filter(|&id| dead & (1 << id) == 0).map(Card::from_id).collect();
    let n = deck.len();
    debug_assert_eq!(n, 48);
    let mut sum_half = 0u64;
    let mut total = 0u64;
    for a in 0..n {
        let e1 = BoardEval::new(&[deck[a]]);
        for b in a + 1..n {
            let e2 = e1.with(deck[b]);
            for c in b + 1..n {
                let e3 = e2.with(deck[c]);
                for d in c + 1..n {
                    let e4 = e3.with(deck[d]);
                    for e in d + 1..n {
                        let be = e4.with(deck[e]);
                        let hero = be.eval2(cards[0], cards[1]);
                        let vill = be.eval2(cards[2], cards[3]);
                        sum_half += match hero.cmp(&vill) {
                            std::cmp::Ordering::Greater => 2,
                            std::cmp::Ordering::Equal => 1,
                            std::cmp::Ordering::Less => 0,
                        };
                        total += 1;
                    }
                }
            }
        }
    }
    (sum_half as f64 / (2.0 * total as f64), 0.0)
}

fn equity_mc(cards: [Card; 4], boards: u32, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let dead: u64 = cards.iter().map(|c| c.mask()).sum();
    let mut deck: Vec<Card> =
        (0..52u8).filter(|&id| dead & (1 << id) == 0).map(Card::from_id).collect();
    let n = deck.len();
    let mut sum = 0u64; // in half-units
    let mut sumsq = 0u64;
    for _ in 0..boards {
        for k in 0..5 {
            let j = rng.gen_range(k..n);
            deck.swap(k, j);
        }
        let be = BoardEval::new(&deck[..5]);
        let hero = be.eval2(cards[0], cards[1]);
        let vill = be.eval2(cards[2], cards[3]);
        let x: u64 = match hero.cmp(&vill) {
            std::cmp::Ordering::Greater => 2,
            std::cmp::Ordering::Equal => 1,
            std::cmp::Ordering::Less => 0,
        };
        sum += x;
        sumsq += x * x;
    }
    let nf = boards as f64;
    let mean_half = sum as f64 / nf;
    let var_half = (sumsq as f64 - nf * mean_half * mean_half) / (nf - 1.0);
    let se = (var_half / nf).sqrt() / 2.0;
    (mean_half / 2.0, se)
}

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Builds the table with the configured method. This is the one-time
/// offline cost that makes preflop rollouts tractable.
pub fn build_preflop_table(cfg: &BuildConfig) -> PreflopTable {
    let keys = build_key_table();
    let mut classes: BTreeMap<u32, ClassEntry> = BTreeMap::new();
    for &k in &keys {
        if k != u32::MAX {
            classes.entry(k).or_insert(ClassEntry { equity: f32::NAN, bound: 0.0 });
        }
    }
    // Compute each unordered class pair once; mirrors follow by zero-sum.
    let work: Vec<u32> = classes
        .keys()
        .copied()
        .filter(|&k| {
            let c = unpack_key(k);
            let mirror = canonical_matchup_key((c[2], c[3]), (c[0], c[1]));
            k <= mirror
        })
        .collect();
    let computed: Vec<(u32, f64, f64)> = work
        .par_iter()
        .map(|&k| {
            let c = unpack_key(k);
            let mirror = canonical_matchup_key((c[2], c[3]), (c[0], c[1]));
            let (eq, se) = if mirror == k {
                (0.5, 0.0)
            } else {
                match cfg.method {
                    BuildMethod::Exact => equity_exact(c),
                    BuildMethod::MonteCarlo { boards } => {
                        let mut rng =
                            ChaCha8Rng::seed_from_u64(splitmix64(cfg.seed ^ k as u64));
                        equity_mc(c, boards, &mut rng)
                    }
                }
            };
            (k, eq, se)
        })
        .collect();
    for (k, eq, se) in computed {
        let bound = (4.0 * se + 1e-6) as f32;
        let c = unpack_key(k);
        let mirror = canonical_matchup_key((c[2], c[3]), (c[0], c[1]));
        classes.insert(k, ClassEntry { equity: eq as f32, bound });
        classes.insert(mirror, ClassEntry { equity: (1.0 - eq) as f32, bound });
    }
    PreflopTable::assemble(cfg.method, cfg.seed, classes, keys)
}

impl PreflopTable {
    fn assemble(
        method: BuildMethod,
        seed: u64,
        classes: BTreeMap<u32, ClassEntry>,
        keys: Vec<u32>,
    ) -> PreflopTable {
        let dense = keys
            .iter()
            .map(|&k| if k == u32::MAX { f32::NAN } else { classes[&k].equity })
            .collect();
        PreflopTable { method, seed, classes, keys, dense }
    }

    pub fn method(&self) -> BuildMethod {
        self.method
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    /// Hero's preflop equity against one opponent hand; `None` when the
    /// hands share a card.
    #[inline]
    pub fn equity(&self, hero: HandIndex, villain: HandIndex) -> Option<f64> {
        let e = self.dense[hero.raw() as usize * NUM_HANDS + villain.raw() as usize];
        if e.is_nan() {
            None
        } else {
            Some(e as f64)
        }
    }

    /// Equity plus its stored per-entry error bound.
    pub fn entry(&self, hero: HandIndex, villain: HandIndex) -> Option<(f64, f64)> {
        let k = self.keys[hero.raw() as usize * NUM_HANDS + villain.raw() as usize];
        if k == u32::MAX {
            return None;
        }
        let e = self.classes[&k];
        Some((e.equity as f64, e.bound as f64))
    }

    pub fn save(&self, path: &Path) -> Result<(), PreflopError> {
        let mut buf = Vec::with_capacity(24 + self.classes.len() * 12 + 8);
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        let (method, boards) = match self.method {
            BuildMethod::Exact => (0u8, 0u32),
            BuildMethod::MonteCarlo { boards } => (1u8, boards),
        };
        buf.push(method);
        buf.extend_from_slice(&[0u8; 3]);
        buf.extend_from_slice(&self.seed.to_le_bytes());
        buf.extend_from_slice(&boards.to_le_bytes());
        buf.extend_from_slice(&(self.classes.len() as u32).to_le_bytes());
        for (&k, e) in &self.classes {
            buf.extend_from_slice(&k.to_le_bytes());
            buf.extend_from_slice(&e.equity.to_le_bytes());
            buf.extend_from_slice(&e.bound.to_le_bytes());
        }
        let sum = fnv1a64(&buf);
        buf.extend_from_slice(&sum.to_le_bytes());
        let mut f = std::fs::File::create(path)?;
        f.write_all(&buf)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<PreflopTable, PreflopError> {
        let mut buf = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut buf)?;
        if buf.len() < 32 || &buf[..8] != MAGIC {
            return Err(PreflopError::Corrupt("bad magic".into()));
        }
        let payload = &buf[..buf.len() - 8];
        let stored = u64::from_le_bytes(buf[buf.len() - 8..].try_into().unwrap());
        if fnv1a64(payload) != stored {
            return Err(PreflopError::Corrupt("checksum mismatch".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(buf[o..o + 4].try_into().unwrap());
        if u32_at(8) != VERSION {
            return Err(PreflopError::Corrupt(format!("unsupported version {}", u32_at(8))));
        }
        let method = match buf[12] {
            0 => BuildMethod::Exact,
            1 => BuildMethod::MonteCarlo { boards: u32_at(24) },
            m => return Err(PreflopError::Corrupt(format!("unknown method tag {m}"))),
        };
        let seed = u64::from_le_bytes(buf[16..24].try_into().unwrap());
        let count = u32_at(28) as usize;
        let mut classes = BTreeMap::new();
        let mut off = 32;
        for _ in 0..count {
            if off + 12 > payload.len() {
                return Err(PreflopError::Corrupt("truncated entries".into()));
            }
            let k = u32_at(off);
            let equity = f32::from_le_bytes(buf[off + 4..off + 8].try_into().unwrap());
            let bound = f32::from_le_bytes(buf[off + 8..off + 12].try_into().unwrap());
            classes.insert(k, ClassEntry { equity, bound });
            off += 12;
        }
        if off != payload.len() {
            return Err(PreflopError::Corrupt("trailing bytes".into()));
        }
        let keys = build_key_table();
        for &k in &keys {
            if k != u32::MAX && !classes.contains_key(&k) {
                return Err(PreflopError::Corrupt(format!("missing class {k:#010x}")));
            }
        }
        Ok(PreflopTable::assemble(method, seed, classes, keys))
    }
}
