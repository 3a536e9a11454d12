//! Newline-delimited wire protocol for external strategy oracles.
//!
//! Client side speaks to a remote bot over TCP or a spawned child's
//! standard I/O; the server side exposes any local oracle over the
//! same protocol:
//!
//! ```text
//! QUERY <state>            -> BEGIN / H <hand-index> <act>:<prob> ... / END
//! SAMPLE <state> <index>   -> ACT <action>
//! PING                     -> PONG
//! any failure              -> ERR <message>
//! ```

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::process::{Child, Command, Stdio};

use rand::RngCore;

use crate::cards::{HandIndex, NUM_HANDS};
use crate::engine::{
    format_state, legal_actions, parse_action, parse_state, Action, GameRules, PublicState, Status,
};
use crate::strategy::{ActionDistribution, OracleError, QueryResult, StrategyOracle};

/// Client handle for a remote oracle; one request in flight at a time.
pub struct WireOracle {
    reader: BufReader<Box<dyn Read + Send>>,
    writer: Box<dyn Write + Send>,
    child: Option<Child>,
}

impl WireOracle {
    pub fn connect_tcp(addr: &str) -> Result<WireOracle, OracleError> {
        let stream = TcpStream::connect(addr)?;
        let read_half = stream.try_clone()?;
        Ok(WireOracle {
            reader: BufReader::new(Box::new(read_half)),
            writer: Box::new(stream),
            child: None,
        })
    }

    /// Spawns `command` through the shell and talks over its stdio.
    pub fn spawn_stdio(command: &str) -> Result<WireOracle, OracleError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        Ok(WireOracle {
            reader: BufReader::new(Box::new(stdout)),
            writer: Box::new(stdin),
            child: Some(child),
        })
    }

    /// Wraps arbitrary streams (used by in-process tests).
    pub fn from_streams(
        reader: Box<dyn Read + Send>,
        writer: Box<dyn Write + Send>,
    ) -> WireOracle {
        WireOracle { reader: BufReader::new(reader), writer, child: None }
    }

    fn send(&mut self, line: &str) -> Result<(), OracleError> {
        self.writer.write_all(line.as_bytes())?;
        self.writer.write_all(b"\n")?;
        self.writer.flush()?;
        Ok(())
    }

    fn recv(&mut self) -> Result<String, OracleError> {
        let mut line = String::new();
        if self.reader.read_line(&mut line)? == 0 {
            return Err(OracleError::Protocol("connection closed".into()));
        }
        let line = line.trim_end().to_string();
        if let Some(msg) = line.strip_prefix("ERR ") {
            return Err(OracleError::Protocol(msg.to_string()));
        }
        if line == "ERR" {
            return Err(OracleError::Protocol("unspecified remote error".into()));
        }
        Ok(line)
    }

    pub fn ping(&mut self) -> Result<(), OracleError> {
        self.send("PING")?;
        match self.recv()?.as_str() {
            "PONG" => Ok(()),
            other => Err(OracleError::Malformed(format!("expected PONG, got {other:?}"))),
        }
    }
}

impl Drop for WireOracle {
    fn drop(&mut self) {
        if let Some(child) = &mut self.child {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

fn parse_hand_line(line: &str) -> Result<(HandIndex, ActionDistribution), OracleError> {
    let malformed = || OracleError::Malformed(format!("bad hand line {line:?}"));
    let mut parts = line.split_ascii_whitespace();
    let tag = parts.next().ok_or_else(malformed)?;
    if tag != "H" {
        return Err(malformed());
    }
    let idx: u16 = parts.next().ok_or_else(malformed)?.parse().map_err(|_| malformed())?;
    if idx as usize >= NUM_HANDS {
        return Err(OracleError::Malformed(format!("hand index {idx} out of range")));
    }
    let mut entries = Vec::new();
    for tok in parts {
        let (act, prob) = tok.split_once(':').ok_or_else(malformed)?;
        let act = parse_action(act).ok_or_else(malformed)?;
        let prob: f64 = prob.parse().map_err(|_| malformed())?;
        entries.push((act, prob));
    }
    if entries.is_empty() {
        return Err(malformed());
    }
    Ok((HandIndex::from_raw(idx), ActionDistribution::Explicit(entries)))
}

impl StrategyOracle for WireOracle {
    fn query(&mut self, s: &PublicState) -> Result<QueryResult, OracleError> {
        self.send(&format!("QUERY {}", format_state(s)))?;
        match self.recv()?.as_str() {
            "BEGIN" => {}
            other => return Err(OracleError::Malformed(format!("expected BEGIN, got {other:?}"))),
        }
        let space = legal_actions(s)?;
        let board_mask: u64 = s.board().iter().map(|c| c.mask()).sum();
        let mut out: Vec<Option<ActionDistribution>> = vec![None; NUM_HANDS];
        loop {
            let line = self.recv()?;
            if line == "END" {
                break;
            }
            let (h, dist) = parse_hand_line(&line)?;
            if h.mask() & board_mask != 0 {
                return Err(OracleError::Malformed(format!(
                    "hand {} overlaps the board",
                    h.raw()
                )));
            }
            dist.validate(&space)?;
            if out[h.raw() as usize].replace(dist).is_some() {
                return Err(OracleError::Malformed(format!("duplicate hand {}", h.raw())));
            }
        }
        Ok(QueryResult::PerHand(out))
    }

    fn sample_action(
        &mut self,
        s: &PublicState,
        hand: HandIndex,
        _rng: &mut dyn RngCore,
    ) -> Result<Action, OracleError> {
        self.send(&format!("SAMPLE {} {}", format_state(s), hand.raw()))?;
        let line = self.recv()?;
        let act = line
            .strip_prefix("ACT ")
            .and_then(parse_action)
            .ok_or_else(|| OracleError::Malformed(format!("expected ACT, got {line:?}")))?;
        let space = legal_actions(s)?;
        if !space.contains(act) {
            return Err(OracleError::Malformed(format!("remote played illegal {act}")));
        }
        Ok(act)
    }
}

fn wire_entries(dist: &ActionDistribution) -> Vec<(Action, f64)> {
    match dist {
        ActionDistribution::Explicit(entries) => entries.clone(),
        ActionDistribution::WithUniformRaise { fold, call, raise_lo, raise_hi, raise_mass } => {
            // the wire format has no compact span encoding, so spell the
            // raise amounts out; only sensible for small stacks
            let mut out = Vec::new();
            if *fold > 0.0 {
                out.push((Action::Fold, *fold));
            }
            out.push((Action::Call, *call));
            let per = raise_mass / (raise_hi - raise_lo + 1) as f64;
            for x in *raise_lo..=*raise_hi {
                out.push((Action::RaiseTo(x), per));
            }
            out
        }
    }
}

/// Serves `oracle` over one connection until EOF. Request-level errors
/// are reported as `ERR` lines; only transport failures end the loop.
pub fn serve_connection(
    oracle: &mut dyn StrategyOracle,
    rules: GameRules,
    rng: &mut dyn RngCore,
    reader: impl BufRead,
    mut writer: impl Write,
) -> std::io::Result<()> {
    for line in reader.lines() {
        let line = line?;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        match handle_request(oracle, rules, rng, line) {
            Ok(response) => writer.write_all(response.as_bytes())?,
            Err(e) => {
                let msg = e.to_string().replace('\n', " ");
                writer.write_all(format!("ERR {msg}\n").as_bytes())?;
            }
        }
        writer.flush()?;
    }
    Ok(())
}

fn handle_request(
    oracle: &mut dyn StrategyOracle,
    rules: GameRules,
    rng: &mut dyn RngCore,
    line: &str,
) -> Result<String, OracleError> {
    if line == "PING" {
        return Ok("PONG\n".into());
    }
    if let Some(rest) = line.strip_prefix("QUERY ") {
        let s = parse_state(rest.trim(), rules)?;
        if !matches!(s.status(), Status::Acting) {
            return Err(OracleError::Protocol("state is not awaiting an action".into()));
        }
        let qr = oracle.query(&s)?;
        let board_mask: u64 = s.board().iter().map(|c| c.mask()).sum();
        let mut out = String::from("BEGIN\n");
        for h in crate::cards::all_hands() {
            if h.mask() & board_mask != 0 {
                continue;
            }
            let Some(dist) = qr.get(h) else { continue };
            out.push_str(&format!("H {}", h.raw()));
            for (a, p) in wire_entries(dist) {
                out.push_str(&format!(" {a}:{p:.9}"));
            }
            out.push('\n');
        }
        out.push_str("END\n");
        return Ok(out);
    }
    if let Some(rest) = line.strip_prefix("SAMPLE ") {
        let (state_str, idx) = rest
            .trim()
            .rsplit_once(' ')
            .ok_or_else(|| OracleError::Protocol("SAMPLE needs a hand index".into()))?;
        let idx: u16 = idx
            .parse()
            .map_err(|_| OracleError::Protocol(format!("bad hand index {idx:?}")))?;
        if idx as usize >= NUM_HANDS {
            return Err(OracleError::Protocol(format!("hand index {idx} out of range")));
        }
        let s = parse_state(state_str.trim(), rules)?;
        if !matches!(s.status(), Status::Acting) {
            return Err(OracleError::Protocol("state is not awaiting an action".into()));
        }
        let a = oracle.sample_action(&s, HandIndex::from_raw(idx), rng)?;
        return Ok(format!("ACT {a}\n"));
    }
    Err(OracleError::Protocol(format!("unknown request {line:?}")))
}
