//! Heads-up no-limit hold'em rules: blinds, four betting rounds, raise
//! legality, all-in handling, board dealing, terminal payoffs and the
//! canonical text encoding of public states.
//!
//! Player 0 is the "first" player (posts the big blind, acts first after
//! the flop); player 1 is the "second" player (posts the small blind,
//! acts first preflop). States are immutable values: `apply_action` and
//! `deal_board` return new states.

use std::fmt;

use thiserror::Error;

use crate::cards::{evaluate7_unchecked, format_cards, parse_cards, Card, HandIndex};

pub type Seat = usize;

pub const FIRST: Seat = 0;
pub const SECOND: Seat = 1;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("invalid rules: need 0 < small blind <= big blind <= stack")]
    InvalidRules,
    #[error("state is terminal")]
    Terminal,
    #[error("state is not terminal")]
    NotTerminal,
    #[error("betting round still open")]
    BettingOpen,
    #[error("no board cards are due")]
    NoDealDue,
    #[error("wrong board card count: expected {expected}, got {got}")]
    WrongDealCount { expected: usize, got: usize },
    #[error("card {0} is already on the board")]
    DuplicateBoardCard(Card),
    #[error("fold is illegal: nothing is owed")]
    IllegalFold,
    #[error("raise to {amount} is illegal: legal range is {min}..={max}")]
    IllegalRaise { amount: u32, min: u32, max: u32 },
    #[error("raising is illegal here")]
    NoRaiseAllowed,
    #[error("showdown hands must be disjoint from the board and each other")]
    ShowdownCollision,
    #[error("state parse error at byte {pos}: {what}")]
    Parse { pos: usize, what: String },
}

/// Stakes for one hand. Defaults encode the ACPC game: 200 big blinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct GameRules {
    pub stack: u32,
    pub small_blind: u32,
    pub big_blind: u32,
}

impl GameRules {
    pub fn new(stack: u32, small_blind: u32, big_blind: u32) -> Result<GameRules, EngineError> {
        if small_blind == 0 || small_blind > big_blind || big_blind > stack {
            return Err(EngineError::InvalidRules);
        }
        Ok(GameRules { stack, small_blind, big_blind })
    }
}

impl Default for GameRules {
    fn default() -> GameRules {
        GameRules { stack: 20_000, small_blind: 50, big_blind: 100 }
    }
}

/// `RaiseTo` carries the acting player's total cumulative contribution
/// after the action, not the increment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Fold,
    Call,
    RaiseTo(u32),
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Fold => write!(f, "f"),
            Action::Call => write!(f, "c"),
            Action::RaiseTo(x) => write!(f, "r{x}"),
        }
    }
}

/// Parses an action token: `f`, `c` or `r<int>`.
pub fn parse_action(tok: &str) -> Option<Action> {
    match tok.as_bytes().first()? {
        b'f' if tok.len() == 1 => Some(Action::Fold),
        b'c' if tok.len() == 1 => Some(Action::Call),
        b'r' => tok[1..].parse().ok().map(Action::RaiseTo),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminalKind {
    Fold { folder: Seat },
    Showdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// `to_act` may act.
    Acting,
    /// Round betting complete; board cards are due.
    AwaitingDeal,
    Terminal(TerminalKind),
}

/// Board cards in deal order plus the complete betting sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicState {
    rules: GameRules,
    round: u8, // 1..=4
    board: Vec<Card>,
    history: Vec<Vec<Action>>, // one entry per started round
    pots: [u32; 2],
    to_act: Seat,
    status: Status,
    /// Largest raise increment of the current round; 0 if none yet.
    max_raise_inc: u32,
}

/// Legal moves at a state: fold is offered only against a positive
/// outstanding bet, raise bounds are in raise-to chips.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActionSpace {
    pub can_fold: bool,
    /// Chips owed to continue (the amount "asked").
    pub call_amount: u32,
    /// `(min_raise_to, max_raise_to)`; absent when raising is illegal.
    pub raise_bounds: Option<(u32, u32)>,
}

impl ActionSpace {
    pub fn contains(&self, a: Action) -> bool {
        match a {
            Action::Fold => self.can_fold,
            Action::Call => true,
            Action::RaiseTo(x) => {
                matches!(self.raise_bounds, Some((lo, hi)) if x >= lo && x <= hi)
            }
        }
    }
}

/// Posts the blinds: player 0 the big blind, player 1 the small blind;
/// player 1 opens the preflop betting.
pub fn initial_state(rules: GameRules) -> PublicState {
    PublicState {
        rules,
        round: 1,
        board: Vec::new(),
        history: vec![Vec::new()],
        pots: [rules.big_blind, rules.small_blind],
        to_act: SECOND,
        status: Status::Acting,
        max_raise_inc: 0,
    }
}

impl PublicState {
    pub fn rules(&self) -> &GameRules {
        &self.rules
    }

    pub fn round(&self) -> u8 {
        self.round
    }

    pub fn board(&self) -> &[Card] {
        &self.board
    }

    pub fn history(&self) -> &[Vec<Action>] {
        &self.history
    }

    pub fn pot(&self, seat: Seat) -> u32 {
        self.pots[seat]
    }

    pub fn pot_total(&self) -> u32 {
        self.pots[0] + self.pots[1]
    }

    pub fn to_act(&self) -> Seat {
        self.to_act
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self.status, Status::Terminal(_))
    }

    pub fn terminal_kind(&self) -> Option<TerminalKind> {
        match self.status {
            Status::Terminal(k) => Some(k),
            _ => None,
        }
    }

    fn both_all_in(&self) -> bool {
        self.pots == [self.rules.stack, self.rules.stack]
    }
}

/// Legal actions for the player to act.
pub fn legal_actions(s: &PublicState) -> Result<ActionSpace, EngineError> {
    if s.status != Status::Acting {
        return Err(EngineError::Terminal);
    }
    let me = s.to_act;
    let opp = 1 - me;
    // saturating: leniently parsed states may hold a sub-call "raise"
    let asked = s.pots[opp].saturating_sub(s.pots[me]);
    // Raising is possible only while the opponent is not all-in; the
    // all-in cap makes an under-min raise of the full stack legal.
    let raise_bounds = if s.pots[opp] < s.rules.stack {
        let inc = s.max_raise_inc.max(s.rules.big_blind);
        let min_to = (s.pots[opp] + inc).min(s.rules.stack);
        Some((min_to, s.rules.stack))
    } else {
        None
    };
    Ok(ActionSpace { can_fold: asked > 0, call_amount: asked, raise_bounds })
}

/// Applies a legal action, returning the successor state.
pub fn apply_action(s: &PublicState, a: Action) -> Result<PublicState, EngineError> {
    apply_action_inner(s, a, true)
}

/// As [`apply_action`] but skips the min-raise legality check; used by the
/// state parser, which accepts structurally well-formed sequences and
/// leaves betting legality to a separate validation pass.
fn apply_action_inner(s: &PublicState, a: Action, strict: bool) -> Result<PublicState, EngineError> {
    let space = legal_actions(s)?;
    let me = s.to_act;
    let opp = 1 - me;
    let mut next = s.clone();
    next.history.last_mut().unwrap().push(a);
    match a {
        Action::Fold => {
            if strict && !space.can_fold {
                return Err(EngineError::IllegalFold);
            }
            next.status = Status::Terminal(TerminalKind::Fold { folder: me });
        }
        Action::Call => {
            next.pots[me] = next.pots[opp];
            // A call closes the round unless it is the round's first
            // action (small-blind completion preflop, check postflop).
            let closes = s.history.last().unwrap().len() > 0;
            if closes {
                next.status = if next.round == 4 {
                    Status::Terminal(TerminalKind::Showdown)
                } else {
                    Status::AwaitingDeal
                };
            } else {
                next.to_act = opp;
            }
        }
        Action::RaiseTo(x) => {
            if strict {
                match space.raise_bounds {
                    None => return Err(EngineError::NoRaiseAllowed),
                    Some((lo, hi)) if x < lo || x > hi => {
                        return Err(EngineError::IllegalRaise { amount: x, min: lo, max: hi })
                    }
                    Some(_) => {}
                }
            } else if x <= s.pots[me] || x > s.rules.stack {
                let lo = space.raise_bounds.map(|(lo, _)| lo).unwrap_or(0);
                return Err(EngineError::IllegalRaise { amount: x, min: lo, max: s.rules.stack });
            }
            next.max_raise_inc = next.max_raise_inc.max(x.saturating_sub(s.pots[opp]));
            next.pots[me] = x;
            next.to_act = opp;
        }
    }
    Ok(next)
}

/// Extends the board after a completed betting round; the next round
/// starts with the first player, or with no betting at all when both
/// players are already all-in.
pub fn deal_board(s: &PublicState, cards: &[Card]) -> Result<PublicState, EngineError> {
    if s.is_terminal() {
        return Err(EngineError::Terminal);
    }
    if s.status != Status::AwaitingDeal {
        return Err(EngineError::BettingOpen);
    }
    let expected = match s.round {
        1 => 3,
        2 | 3 => 1,
        _ => return Err(EngineError::NoDealDue),
    };
    if cards.len() != expected {
        return Err(EngineError::WrongDealCount { expected, got: cards.len() });
    }
    let mut next = s.clone();
    for &c in cards {
        if next.board.contains(&c) {
            return Err(EngineError::DuplicateBoardCard(c));
        }
        next.board.push(c);
    }
    next.round += 1;
    next.history.push(Vec::new());
    next.max_raise_inc = 0;
    next.to_act = FIRST;
    next.status = if next.both_all_in() {
        if next.round == 4 {
            Status::Terminal(TerminalKind::Showdown)
        } else {
            Status::AwaitingDeal
        }
    } else {
        Status::Acting
    };
    Ok(next)
}

/// Chips won by `player` at a terminal state (negative for a loss).
///
/// `hand` and `hand_opp` are the private hands of `player` and the
/// opponent; they are only consulted at showdown.
pub fn terminal_payoff(
    s: &PublicState,
    player: Seat,
    hand: HandIndex,
    hand_opp: HandIndex,
) -> Result<i64, EngineError> {
    let kind = s.terminal_kind().ok_or(EngineError::NotTerminal)?;
    let opp = 1 - player;
    match kind {
        TerminalKind::Fold { folder } => {
            if folder == player {
                Ok(-(s.pots[player] as i64))
            } else {
                Ok(s.pots[opp] as i64)
            }
        }
        TerminalKind::Showdown => {
            let board_mask: u64 = s.board.iter().map(|c| c.mask()).sum();
            if hand.mask() & hand_opp.mask() != 0
                || (hand.mask() | hand_opp.mask()) & board_mask != 0
            {
                return Err(EngineError::ShowdownCollision);
            }
            debug_assert_eq!(s.board.len(), 5);
            debug_assert_eq!(s.pots[0], s.pots[1]);
            let rank = |h: HandIndex| {
                let (a, b) = h.cards();
                let cards: [Card; 7] =
                    [s.board[0], s.board[1], s.board[2], s.board[3], s.board[4], a, b];
                evaluate7_unchecked(&cards)
            };
            let mine = rank(hand);
            let theirs = rank(hand_opp);
            Ok(match mine.cmp(&theirs) {
                std::cmp::Ordering::Greater => s.pots[opp] as i64,
                std::cmp::Ordering::Less => -(s.pots[player] as i64),
                std::cmp::Ordering::Equal => 0,
            })
        }
    }
}

/// Canonical state string: `<betting>:<board>` with per-round action
/// sequences joined by `/` and the board as concatenated 2-char cards in
/// deal order, or `-` when empty.
pub fn format_state(s: &PublicState) -> String {
    let betting: Vec<String> = s
        .history
        .iter()
        .map(|round| round.iter().map(|a| a.to_string()).collect::<String>())
        .collect();
    let board = if s.board.is_empty() { "-".to_string() } else { format_cards(&s.board) };
    format!("{}:{}", betting.join("/"), board)
}

/// Inverse of [`format_state`]. Structural errors (bad tokens, board
/// length inconsistent with the betting) are rejected here; betting
/// legality (e.g. an under-min raise) is checked only by
/// [`parse_state_checked`].
pub fn parse_state(text: &str, rules: GameRules) -> Result<PublicState, EngineError> {
    parse_state_inner(text, rules, false)
}

/// As [`parse_state`], additionally rejecting semantically illegal actions.
pub fn parse_state_checked(text: &str, rules: GameRules) -> Result<PublicState, EngineError> {
    parse_state_inner(text, rules, true)
}

fn parse_state_inner(text: &str, rules: GameRules, strict: bool) -> Result<PublicState, EngineError> {
    let colon = text
        .find(':')
        .ok_or_else(|| EngineError::Parse { pos: text.len(), what: "missing ':'".into() })?;
    let (betting, board_str) = (&text[..colon], &text[colon + 1..]);
    let board = if board_str == "-" {
        Vec::new()
    } else {
        parse_cards(board_str).map_err(|e| EngineError::Parse {
            pos: colon + 1,
            what: format!("bad board: {e}"),
        })?
    };
    {
        let mut seen = 0u64;
        for &c in &board {
            if seen & c.mask() != 0 {
                return Err(EngineError::Parse {
                    pos: colon + 1,
                    what: format!("duplicate board card {c}"),
                });
            }
            seen |= c.mask();
        }
    }

    let mut s = initial_state(rules);
    let mut dealt = 0usize;
    let segments: Vec<&str> = betting.split('/').collect();
    let mut pos = 0usize;
    for (i, seg) in segments.iter().enumerate() {
        if i > 0 {
            // A '/' marks a completed round: the next street must be dealt.
            if s.status != Status::AwaitingDeal {
                return Err(EngineError::Parse {
                    pos,
                    what: "round separator before the betting round completed".into(),
                });
            }
            let take = if s.round == 1 { 3 } else { 1 };
            if board.len() < dealt + take {
                return Err(EngineError::Parse {
                    pos: colon + 1,
                    what: format!("board shows {} cards but round {} needs more", board.len(), s.round + 1),
                });
            }
            s = deal_board(&s, &board[dealt..dealt + take])
                .map_err(|e| EngineError::Parse { pos, what: e.to_string() })?;
            dealt += take;
        }
        let mut rest = *seg;
        while !rest.is_empty() {
            if s.status != Status::Acting {
                return Err(EngineError::Parse { pos, what: "action after round end".into() });
            }
            let tok_len = match rest.as_bytes()[0] {
                b'f' | b'c' => 1,
                b'r' => 1 + rest[1..].bytes().take_while(|b| b.is_ascii_digit()).count(),
                _ => 0,
            };
            let tok = &rest[..tok_len.max(1).min(rest.len())];
            let action = parse_action(tok)
                .ok_or_else(|| EngineError::Parse { pos, what: format!("bad action token {tok:?}") })?;
            s = apply_action_inner(&s, action, strict)
                .map_err(|e| EngineError::Parse { pos, what: e.to_string() })?;
            pos += tok.len();
            rest = &rest[tok.len()..];
        }
        pos += 1; // the '/'
    }
    if dealt != board.len() {
        return Err(EngineError::Parse {
            pos: colon + 1,
            what: format!("board shows {} cards but the betting only reaches {}", board.len(), dealt),
        });
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cards::{hand_index, parse_card};

    fn card(s: &str) -> Card {
        parse_card(s).unwrap()
    }

    fn hand(a: &str, b: &str) -> HandIndex {
        hand_index(card(a), card(b)).unwrap()
    }

    #[test]
    fn blinds_and_first_to_act() {
        let s = initial_state(GameRules::default());
        assert_eq!(s.pot(FIRST), 100);
        assert_eq!(s.pot(SECOND), 50);
        assert_eq!(s.to_act(), SECOND);
        assert_eq!(s.round(), 1);
    }

    #[test]
    fn rules_invariants() {
        assert!(GameRules::new(20_000, 100, 50).is_err());
        assert!(GameRules::new(50, 50, 100).is_err());
        assert!(GameRules::new(10_000, 50, 100).is_ok());
        let s = initial_state(GameRules::new(10_000, 50, 100).unwrap());
        let space = legal_actions(&s).unwrap();
        assert_eq!(space.raise_bounds, Some((200, 10_000)));
    }

    #[test]
    fn initial_action_space() {
        let s = initial_state(GameRules::default());
        let space = legal_actions(&s).unwrap();
        assert!(space.can_fold);
        assert_eq!(space.call_amount, 50);
        assert_eq!(space.raise_bounds, Some((200, 20_000)));
    }

    #[test]
    fn limp_keeps_round_open_then_check_closes() {
        let s = initial_state(GameRules::default());
        let s = apply_action(&s, Action::Call).unwrap();
        assert_eq!(s.status(), Status::Acting);
        assert_eq!(s.to_act(), FIRST);
        let space = legal_actions(&s).unwrap();
        assert!(!space.can_fold);
        assert_eq!(space.call_amount, 0);
        let s = apply_action(&s, Action::Call).unwrap();
        assert_eq!(s.status(), Status::AwaitingDeal);
        assert_eq!(s.pot_total(), 200);
    }

    #[test]
    fn fold_terminates_and_pays_the_blind() {
        let s = initial_state(GameRules::default());
        let s = apply_action(&s, Action::Fold).unwrap();
        assert_eq!(s.terminal_kind(), Some(TerminalKind::Fold { folder: SECOND }));
        let h1 = hand("As", "Ks");
        let h2 = hand("2c", "7d");
        assert_eq!(terminal_payoff(&s, FIRST, h1, h2).unwrap(), 50);
        assert_eq!(terminal_payoff(&s, SECOND, h2, h1).unwrap(), -50);
    }

    #[test]
    fn min_raise_tracking() {
        let s = initial_state(GameRules::default());
        let s = apply_action(&s, Action::RaiseTo(300)).unwrap();
        // min re-raise: 300 + largest increment (200) = 500
        assert_eq!(legal_actions(&s).unwrap().raise_bounds, Some((500, 20_000)));
        let s = apply_action(&s, Action::RaiseTo(900)).unwrap();
        assert_eq!(legal_actions(&s).unwrap().raise_bounds, Some((1500, 20_000)));
        // under-min raise is rejected
        assert!(matches!(
            apply_action(&s, Action::RaiseTo(1000)),
            Err(EngineError::IllegalRaise { amount: 1000, min: 1500, max: 20_000 })
        ));
    }

    #[test]
    fn all_in_blocks_raising() {
        let s = initial_state(GameRules::default());
        let s = apply_action(&s, Action::RaiseTo(20_000)).unwrap();
        let space = legal_actions(&s).unwrap();
        assert!(space.can_fold);
        assert_eq!(space.call_amount, 19_900);
        assert_eq!(space.raise_bounds, None);
    }

    #[test]
    fn all_in_call_runs_out_the_board() {
        let s = initial_state(GameRules::default());
        let s = apply_action(&s, Action::RaiseTo(20_000)).unwrap();
        let s = apply_action(&s, Action::Call).unwrap();
        assert_eq!(s.status(), Status::AwaitingDeal);
        let s = deal_board(&s, &[card("As"), card("Kd"), card("7h")]).unwrap();
        assert_eq!(s.status(), Status::AwaitingDeal); // no betting while both all-in
        let s = deal_board(&s, &[card("2c")]).unwrap();
        assert_eq!(s.status(), Status::AwaitingDeal);
        let s = deal_board(&s, &[card("9d")]).unwrap();
        assert_eq!(s.terminal_kind(), Some(TerminalKind::Showdown));
        assert_eq!(s.pot_total(), 40_000);
    }

    #[test]
    fn deal_validation() {
        let s = initial_state(GameRules::default());
        assert!(matches!(deal_board(&s, &[card("As")]), Err(EngineError::BettingOpen)));
        let s = apply_action(&s, Action::Call).unwrap();
        let s = apply_action(&s, Action::Call).unwrap();
        assert!(matches!(
            deal_board(&s, &[card("As"), card("Kd")]),
            Err(EngineError::WrongDealCount { expected: 3, got: 2 })
        ));
        let s = deal_board(&s, &[card("As"), card("Kd"), card("7h")]).unwrap();
        assert_eq!(s.round(), 2);
        assert_eq!(s.to_act(), FIRST);
        let s = apply_action(&s, Action::Call).unwrap();
        let s = apply_action(&s, Action::Call).unwrap();
        assert!(matches!(
            deal_board(&s, &[card("As")]),
            Err(EngineError::DuplicateBoardCard(_))
        ));
    }

    #[test]
    fn showdown_payoffs() {
        let mut s = initial_state(GameRules::default());
        for a in [Action::Call, Action::RaiseTo(400), Action::Call] {
            s = apply_action(&s, a).unwrap();
        }
        s = deal_board(&s, &[card("2h"), card("7s"), card("Jd")]).unwrap();
        for a in [Action::Call, Action::Call] {
            s = apply_action(&s, a).unwrap();
        }
        s = deal_board(&s, &[card("3c")]).unwrap();
        for a in [Action::Call, Action::Call] {
            s = apply_action(&s, a).unwrap();
        }
        s = deal_board(&s, &[card("9h")]).unwrap();
        for a in [Action::Call, Action::Call] {
            s = apply_action(&s, a).unwrap();
        }
        assert_eq!(s.terminal_kind(), Some(TerminalKind::Showdown));
        assert_eq!(s.pot_total(), 800);
        let aces = hand("As", "Ah");
        let kings = hand("Ks", "Kh");
        assert_eq!(terminal_payoff(&s, FIRST, aces, kings).unwrap(), 400);
        assert_eq!(terminal_payoff(&s, SECOND, kings, aces).unwrap(), -400);
        // identical rank splits
        let a1 = hand("Ac", "4d");
        let a2 = hand("Ad", "4s");
        assert_eq!(terminal_payoff(&s, FIRST, a1, a2).unwrap(), 0);
        // collision is rejected
        assert!(terminal_payoff(&s, FIRST, aces, aces).is_err());
        assert!(terminal_payoff(&s, FIRST, hand("2h", "2c"), kings).is_err());
    }

    #[test]
    fn state_string_roundtrip() {
        let s = initial_state(GameRules::default());
        assert_eq!(format_state(&s), ":-");
        let s = apply_action(&s, Action::RaiseTo(300)).unwrap();
        let s = apply_action(&s, Action::Call).unwrap();
        let s = deal_board(&s, &[card("As"), card("Kd"), card("7h")]).unwrap();
        assert_eq!(format_state(&s), "r300c/:AsKd7h");
        let parsed = parse_state("r300c/:AsKd7h", GameRules::default()).unwrap();
        assert_eq!(parsed, s);
        let s = apply_action(&s, Action::RaiseTo(600)).unwrap();
        let text = format_state(&s);
        assert_eq!(text, "r300c/r600:AsKd7h");
        assert_eq!(parse_state(&text, GameRules::default()).unwrap(), s);
    }

    #[test]
    fn parse_is_lenient_validation_is_not() {
        // r90 is below the 200 min-raise: structurally fine, semantically not.
        let lenient = parse_state("r90c:-", GameRules::default());
        assert!(lenient.is_ok());
        assert!(parse_state_checked("r90c:-", GameRules::default()).is_err());
        // Structural breakage is always rejected.
        assert!(parse_state("cc/cc/:-", GameRules::default()).is_err()); // board missing
        assert!(parse_state("xq:-", GameRules::default()).is_err());
        assert!(parse_state("cc:AsKd7h", GameRules::default()).is_err()); // undealt board
        assert!(parse_state("c/c:AsKd7h", GameRules::default()).is_err()); // round still open
    }

    #[test]
    fn all_in_runout_roundtrip() {
        let s = parse_state("r20000c///:AsKd7h2c9d", GameRules::default()).unwrap();
        assert_eq!(s.terminal_kind(), Some(TerminalKind::Showdown));
        assert_eq!(format_state(&s), "r20000c///:AsKd7h2c9d");
    }
}
