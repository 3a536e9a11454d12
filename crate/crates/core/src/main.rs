use std::io::{BufReader, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lbr_bench::engine::GameRules;
use lbr_bench::harness::{evaluate, HarnessError, MatchConfig, OpponentSpec};
use lbr_bench::lbr::{parse_rounds, BetSet, LbrConfig};
use lbr_bench::preflop::{build_preflop_table, BuildConfig, BuildMethod, PreflopTable};
use lbr_bench::selfcheck::run_selfcheck;
use lbr_bench::wire::serve_connection;

/// Local Best Response benchmark: lower-bounds the exploitability of a
/// heads-up no-limit hold'em strategy by playing against it.
#[derive(Parser)]
#[command(name = "lbr-bench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RulesArgs {
    /// Starting stack in chips.
    #[arg(long, default_value_t = 20_000)]
    stack: u32,
    /// Small blind in chips.
    #[arg(long, default_value_t = 50)]
    sb: u32,
    /// Big blind in chips.
    #[arg(long, default_value_t = 100)]
    bb: u32,
}

impl RulesArgs {
    fn rules(&self) -> Result<GameRules> {
        Ok(GameRules::new(self.stack, self.sb, self.bb)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Play LBR against an opponent strategy and estimate its winnings.
    Eval {
        /// always-call | always-fold | half-raise | random-legal |
        /// tcp:<host:port> | stdio:<command>
        #[arg(long)]
        opponent: String,
        /// fc | fcpa | 56bets | custom:<fractions, `allin` allowed>
        #[arg(long, default_value = "fcpa")]
        bets: String,
        /// Rounds LBR plays in (elsewhere it check/calls), e.g. 1-4 or 3-4.
        #[arg(long, default_value = "1-4")]
        lbr_rounds: String,
        /// Duplicate pairs to play (2 hands each).
        #[arg(long)]
        pairs: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        rules: RulesArgs,
        /// Estimate opponent distributions from n samples per hand
        /// instead of exact queries.
        #[arg(long)]
        sampled_queries: Option<u32>,
        /// Play independent hands instead of duplicate pairs.
        #[arg(long)]
        no_duplicate: bool,
        /// Score raw outcomes instead of imaginary observations.
        #[arg(long)]
        no_imaginary: bool,
        #[arg(long, default_value = "text", value_parser = ["text", "json"])]
        format: String,
        /// Preflop equity table (required when round 1 is active).
        #[arg(long, default_value = "preflop.tbl")]
        table_path: PathBuf,
    },
    /// Build and persist the preflop equity table.
    BuildTables {
        /// Exact enumeration of all board completions (slow).
        #[arg(long, conflicts_with = "mc_boards")]
        exact: bool,
        /// Monte Carlo boards per canonical matchup.
        #[arg(long, default_value_t = 100_000)]
        mc_boards: u32,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "preflop.tbl")]
        out: PathBuf,
    },
    /// Run the invariant suites.
    Selfcheck,
    /// Serve a built-in strategy over the wire protocol (stdio, or TCP
    /// with --listen).
    Serve {
        /// always-call | always-fold | half-raise | random-legal
        #[arg(long)]
        opponent: String,
        #[arg(long)]
        listen: Option<String>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        rules: RulesArgs,
    },
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<HarnessError>() {
        Some(HarnessError::Connect(_)) => 2,
        Some(HarnessError::TableMissing) => 3,
        Some(HarnessError::DiscardRate { .. }) => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Eval {
            opponent,
            bets,
            lbr_rounds,
            pairs,
            seed,
            rules,
            sampled_queries,
            no_duplicate,
            no_imaginary,
            format,
            table_path,
        } => {
            if pairs < 1 {
                bail!("--pairs must be at least 1");
            }
            let cfg = MatchConfig {
                rules: rules.rules()?,
                lbr: LbrConfig::new(BetSet::parse(&bets)?, parse_rounds(&lbr_rounds)?)?,
                opponent: OpponentSpec::parse(&opponent)?,
                pairs,
                seed,
                sampled_queries,
                duplicate: !no_duplicate,
                imaginary: !no_imaginary,
            };
            let table = if cfg.lbr.is_active(1) {
                if !table_path.exists() {
                    return Err(anyhow::Error::new(HarnessError::TableMissing)
                        .context(format!("no table at {}", table_path.display())));
                }
                Some(
                    PreflopTable::load(&table_path)
                        .with_context(|| format!("loading {}", table_path.display()))?,
                )
            } else {
                None
            };
            let report = evaluate(&cfg, table.as_ref())?;
            match format.as_str() {
                "json" => println!("{}", serde_json::to_string_pretty(&report)?),
                _ => print!("{report}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::BuildTables { exact, mc_boards, seed, out } => {
            let method = if exact {
                BuildMethod::Exact
            } else {
                BuildMethod::MonteCarlo { boards: mc_boards }
            };
            let table = build_preflop_table(&BuildConfig { method, seed });
            table.save(&out).with_context(|| format!("writing {}", out.display()))?;
            eprintln!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Selfcheck => {
            let mut out = std::io::stdout().lock();
            let all = run_selfcheck(|r| {
                let tag = if r.passed { "PASS" } else { "FAIL" };
                writeln!(out, "{tag} {:<24} {}", r.name, r.detail).unwrap();
                out.flush().unwrap();
            });
            if all {
                println!("selfcheck: all suites passed");
                Ok(ExitCode::SUCCESS)
            } else {
                bail!("selfcheck failed");
            }
        }
        Command::Serve { opponent, listen, seed, rules } => {
            let spec = OpponentSpec::parse(&opponent)?;
            if matches!(spec, OpponentSpec::Tcp(_) | OpponentSpec::Stdio(_)) {
                bail!("serve requires a built-in opponent");
            }
            let rules = rules.rules()?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            match listen {
                Some(addr) => {
                    let listener = std::net::TcpListener::bind(&addr)
                        .with_context(|| format!("binding {addr}"))?;
                    eprintln!("serving {} on {addr}", spec.name());
                    for stream in listener.incoming() {
                        let stream = stream?;
                        let reader = BufReader::new(stream.try_clone()?);
                        let mut oracle = spec.connect()?;
                        if let Err(e) =
                            serve_connection(oracle.as_mut(), rules, &mut rng, reader, stream)
                        {
                            eprintln!("connection ended: {e}");
                        }
                    }
                    Ok(ExitCode::SUCCESS)
                }
                None => {
                    let mut oracle = spec.connect()?;
                    serve_connection(
                        oracle.as_mut(),
                        rules,
                        &mut rng,
                        std::io::stdin().lock(),
                        std::io::stdout().lock(),
                    )?;
                    Ok(ExitCode::SUCCESS)
                }
            }
        }
    }
}
