//! `qzk`: batch harness for the state-discrimination and Uhlmann-transform
//! experiments.

mod config;
mod error;
mod gen;
mod output;
mod protocol;
mod runs;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{ConfigFile, Overrides, RunConfig};
use error::{exit, CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "qzk", version, about = "Algorithmic Holevo-Helstrom and Uhlmann experiments")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// JSON run configuration; flags take precedence over its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overall additive error of the algorithmic constructions.
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// Replaces the scheduled band half-width of the sign polynomial.
    #[arg(long, global = true)]
    delta: Option<f64>,
    /// Singular value transformation backend: oracle or chebyshev.
    #[arg(long, global = true)]
    mode: Option<String>,
    /// Monte-Carlo samples per instance (0 disables sampling).
    #[arg(long, global = true)]
    samples: Option<u64>,
    /// Output path (a directory for `gen`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Largest odd degree the sign-polynomial search may use.
    #[arg(long, global = true)]
    max_degree: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate state-preparation pair files.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        r: usize,
        #[arg(long, default_value_t = 20)]
        depth: usize,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, value_enum, default_value = "random")]
        template: gen::Template,
    },
    /// Algorithmic Holevo-Helstrom measurement on each pair.
    Hh {
        #[arg(required = true)]
        pairs: Vec<PathBuf>,
    },
    /// Algorithmic Uhlmann transform on each pair.
    Uhlmann {
        #[arg(required = true)]
        pairs: Vec<PathBuf>,
    },
    /// Simulate a proof system, optionally with parallel repetition.
    Protocol {
        #[arg(long, value_enum)]
        kind: protocol::Kind,
        #[arg(long)]
        pair: Option<PathBuf>,
        /// Circuit file for the closeness-to-maximally-mixed test.
        #[arg(long)]
        circuit: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "exact")]
        prover: protocol::ProverChoice,
        #[arg(long, default_value_t = 0.9)]
        alpha: f64,
        #[arg(long, default_value_t = 0.1)]
        beta: f64,
        /// Completeness used by the repetition threshold (default: the protocol's).
        #[arg(long)]
        c: Option<f64>,
        /// Soundness used by the repetition threshold (default: the protocol's).
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        l: Option<u64>,
        #[arg(long)]
        q: Option<u64>,
        /// Random strategies tried by the probe prover.
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Sampled repetition transcripts per probability point.
        #[arg(long, default_value_t = 0)]
        transcripts: u64,
    },
    /// Run the fixed-seed invariant battery.
    Selftest {
        /// Sabotage the named invariant (test hook).
        #[arg(long, hide = true)]
        inject_fault: Option<String>,
    },
}

fn resolve(global: &GlobalArgs) -> CliResult<RunConfig> {
    let file = global.config.as_deref().map(ConfigFile::load).transpose()?;
    RunConfig::resolve(
        file,
        Overrides {
            seed: global.seed,
            eps: global.eps,
            delta: global.delta,
            mode: global.mode.clone(),
            samples: global.samples,
            jobs: global.jobs,
            out: global.out.clone(),
            max_degree: global.max_degree,
        },
    )
}

fn run(cli: Cli) -> CliResult<i32> {
    let cfg = resolve(&cli.global)?;
    let out = cfg.out.clone();
    match cli.command {
        Command::Gen {
            n,
            r,
            depth,
            count,
            template,
        } => {
            let dir = out.ok_or_else(|| CliError::Invalid("gen needs --out DIR".into()))?;
            let args = gen::GenArgs {
                n,
                r,
                depth,
                count,
                template,
                seed: cfg.seed,
            };
            for path in gen::run(&args, &dir)? {
                println!("{}", path.display());
            }
            Ok(exit::OK)
        }
        Command::Hh { pairs } => batch_exit(runs::cmd_hh(&cfg, &pairs, out.as_deref())?),
        Command::Uhlmann { pairs } => batch_exit(runs::cmd_uhlmann(&cfg, &pairs, out.as_deref())?),
        Command::Protocol {
            kind,
            pair,
            circuit,
            prover,
            alpha,
            beta,
            c,
            s,
            l,
            q,
            trials,
            transcripts,
        } => {
            let args = protocol::ProtocolArgs {
                kind,
                pair,
                circuit,
                prover,
                alpha,
                beta,
                c,
                s,
                l,
                q,
                trials,
                transcripts,
            };
            let outcome = protocol::cmd_protocol(&cfg, &args, out.as_deref())?;
            for line in &outcome.summary {
                println!("{line}");
            }
            if outcome.circuit_mismatch {
                return Err(CliError::Invariant(
                    "circuit simulation disagrees with the analytic acceptance".into(),
                ));
            }
            Ok(exit::OK)
        }
        Command::Selftest { inject_fault } => {
            let rows = selftest::run(inject_fault.as_deref())?;
            let table = selftest::table(&rows);
            let record = output::RunRecord {
                tool: "qzk",
                tool_version: env!("CARGO_PKG_VERSION"),
                command: "selftest",
                config: &cfg,
                measured: serde_json::json!({ "invariants": rows.len() }),
                rows: table.to_json_rows(),
                timings: serde_json::Value::Null,
            };
            output::emit(out.as_deref(), &table, &record)?;
            let failed: Vec<&str> = rows.iter().filter(|r| !r.pass).map(|r| r.name).collect();
            if failed.is_empty() {
                eprintln!("selftest: {} invariants passed", rows.len());
                Ok(exit::OK)
            } else {
                Err(CliError::Invariant(format!("selftest failed: {}", failed.join(", "))))
            }
        }
    }
}

fn batch_exit(summary: runs::BatchSummary) -> CliResult<i32> {
    if summary.failures > 0 {
        return Err(CliError::Invariant(format!(
            "{} of {} instances failed the bound check",
            summary.failures, summary.rows
        )));
    }
    Ok(exit::OK)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("QZK_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::INVALID } else { exit::OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
