//! Command-line front end: construct, evaluate, audit, and verify
//! collaboration settings over the library's JSON formats.
//!
//! Exit codes: 0 success (including witness-found), 1 usage error, 2
//! schema/validation error, 3 audit consistent-within-budget, 4 witness
//! verification failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use collab::{
    audit_builtin, evaluate, glue, make_strategy, random_calibrated_setting, verify_witness,
    AuditOutcome, GlueWeights, Label, Prob, SearchConfig, Setting, StrategySpec, Witness,
};

#[derive(Parser)]
#[command(
    name = "collab",
    version,
    about = "Exact evaluation and auditing of collaboration strategies over calibrated predictors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the exact accuracy table of a strategy on a setting
    Eval {
        /// Setting JSON file
        setting: PathBuf,
        /// Strategy, e.g. round_average, majority_vote, most_confident,
        /// defer_to:K, certain_override:K[:i,j,...]
        #[arg(long)]
        strategy: String,
        /// Also write the report as JSON
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Write a constructed setting
    Construct {
        #[command(subcommand)]
        kind: ConstructKind,
    },
    /// Probe a strategy and write a counterexample witness if one is found
    Audit {
        #[arg(long)]
        strategy: String,
        /// Number of agents
        #[arg(long)]
        n: usize,
        /// Grid resolution g: probe coordinates j/g, 0 < j < g
        #[arg(long, default_value_t = 10)]
        grid: u32,
        #[arg(long, default_value_t = 200)]
        random_probes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Probe budget per agent per search phase
        #[arg(long, default_value_t = 1_000_000)]
        max_tuples: usize,
        /// Output file for the witness or consistency report
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Re-check a witness from its serialized setting alone
    Verify {
        /// Witness JSON file
        witness: PathBuf,
        /// Strategy to re-probe; defaults to the witness's embedded
        /// spec or transcript
        #[arg(long)]
        strategy: Option<String>,
    },
    /// Write a seeded random calibrated setting
    Gen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        max_points: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 16)]
        denominator_bound: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Subcommand)]
enum ConstructKind {
    /// Adversarial setting from one disagreement tuple: the strategy that
    /// outputs c on the tuple lands strictly below agent k
    #[command(name = "lemma3")]
    Lemma3 {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        /// Comma-separated rationals, e.g. 3/5,1/10
        #[arg(long)]
        tuple: String,
        /// The strategy's certified output on the tuple (0 or 1)
        #[arg(long)]
        c: u8,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Two-point setting where agent k sees nothing and everyone else
    /// sees everything
    #[command(name = "prop5-s1")]
    Prop5S1 {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        /// Rational in (0, 1/2), e.g. 1/4
        #[arg(long)]
        epsilon: String,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Adversarial setting from two tuples pinning agent k at 1/2 that the
    /// strategy labels 1 (p) and 0 (q)
    #[command(name = "prop5-s2")]
    Prop5S2 {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        /// Comma-separated rationals with the k-th equal to 1/2
        #[arg(long)]
        p: String,
        /// Comma-separated rationals with the k-th equal to 1/2
        #[arg(long)]
        q: String,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Mix settings on a tagged-union input space with simplex weights
    Glue {
        /// Setting JSON files
        #[arg(long, num_args = 1..)]
        inputs: Vec<PathBuf>,
        /// Comma-separated rationals summing to 1, one per input
        #[arg(long)]
        weights: String,
        #[arg(short, long)]
        output: PathBuf,
    },
}

enum CliError {
    Usage(String),
    Validation(String),
    VerifyFailed(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Validation(_) => 2,
            CliError::VerifyFailed(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Validation(m) | CliError::VerifyFailed(m) => m,
        }
    }
}

fn validation(context: &str, err: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{context}: {err}"))
}

/// Parses the compact strategy syntax: `round_average`, `majority_vote`,
/// `most_confident`, `defer_to:K`, `certain_override:K[:i,j,...]`.
fn parse_strategy_spec(s: &str) -> Result<StrategySpec, CliError> {
    let usage = || {
        CliError::Usage(format!(
            "unknown strategy `{s}`: expected round_average, majority_vote, most_confident, \
             defer_to:K, or certain_override:K[:i,j,...]"
        ))
    };
    let mut parts = s.split(':');
    let head = parts.next().unwrap_or_default();
    let index = |part: Option<&str>| part.and_then(|t| t.parse::<usize>().ok());
    let spec = match head {
        "round_average" => StrategySpec::RoundAverage,
        "majority_vote" => StrategySpec::MajorityVote,
        "most_confident" => StrategySpec::MostConfident,
        "defer_to" => StrategySpec::DeferTo {
            k: index(parts.next()).ok_or_else(usage)?,
        },
        "certain_override" => {
            let k = index(parts.next()).ok_or_else(usage)?;
            let priority = match parts.next() {
                None => None,
                Some(list) => Some(
                    list.split(',')
                        .map(|t| t.parse::<usize>().map_err(|_| usage()))
                        .collect::<Result<Vec<usize>, CliError>>()?,
                ),
            };
            StrategySpec::CertainOverride { k, priority }
        }
        _ => return Err(usage()),
    };
    if parts.next().is_some() {
        return Err(usage());
    }
    Ok(spec)
}

fn parse_prob(field: &str, s: &str) -> Result<Prob, CliError> {
    s.parse().map_err(|e| validation(field, e))
}

fn parse_tuple(field: &str, s: &str) -> Result<Vec<Prob>, CliError> {
    s.split(',').map(|part| parse_prob(field, part)).collect()
}

/// Deserializes with the JSON path of the failing field in the message.
fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| validation(&format!("reading {}", path.display()), e))?;
    let mut de = serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let field = e.path().to_string();
        validation(
            &format!("{}: field `{field}`", path.display()),
            e.into_inner(),
        )
    })
}

fn read_setting(path: &Path) -> Result<Setting, CliError> {
    read_json(path)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| validation("serializing output", e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| validation(&format!("writing {}", path.display()), e))
}

fn built_strategy(spec_text: &str, n: usize) -> Result<collab::BuiltinStrategy, CliError> {
    let spec = parse_strategy_spec(spec_text)?;
    make_strategy(&spec, n).map_err(|e| validation("--strategy", e))
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Eval {
            setting,
            strategy,
            json,
        } => {
            let setting = read_setting(&setting)?;
            let built = built_strategy(&strategy, setting.n_agents())?;
            let evaluation =
                evaluate(&setting, &built).map_err(|e| validation("evaluating setting", e))?;
            print!("{}", evaluation.render_text(&strategy));
            if let Some(path) = json {
                write_json(&path, &evaluation)?;
            }
            Ok(0)
        }
        Command::Construct { kind } => {
            let (setting, output) = match kind {
                ConstructKind::Lemma3 {
                    n,
                    k,
                    tuple,
                    c,
                    output,
                } => {
                    let tuple = parse_tuple("--tuple", &tuple)?;
                    let c_value = match c {
                        0 => Label::Zero,
                        1 => Label::One,
                        other => {
                            return Err(CliError::Usage(format!("--c must be 0 or 1, got {other}")))
                        }
                    };
                    let s = collab::disagreement_setting(n, k, &tuple, c_value)
                        .map_err(|e| validation("--tuple", e))?;
                    (s, output)
                }
                ConstructKind::Prop5S1 {
                    n,
                    k,
                    epsilon,
                    output,
                } => {
                    let eps = parse_prob("--epsilon", &epsilon)?;
                    let s = collab::uninformed_agent_setting(n, k, &eps)
                        .map_err(|e| validation("--epsilon", e))?;
                    (s, output)
                }
                ConstructKind::Prop5S2 { n, k, p, q, output } => {
                    let p = parse_tuple("--p", &p)?;
                    let q = parse_tuple("--q", &q)?;
                    let s = collab::half_split_setting(n, k, &p, &q)
                        .map_err(|e| validation("--p/--q", e))?;
                    (s, output)
                }
                ConstructKind::Glue {
                    inputs,
                    weights,
                    output,
                } => {
                    let settings: Vec<Setting> = inputs
                        .iter()
                        .map(|p| read_setting(p))
                        .collect::<Result<_, _>>()?;
                    let weights = GlueWeights::new(parse_tuple("--weights", &weights)?)
                        .map_err(|e| validation("--weights", e))?;
                    let s = glue(&settings, &weights).map_err(|e| validation("glue", e))?;
                    (s, output)
                }
            };
            write_json(&output, &setting)?;
            println!("setting written to {}", output.display());
            Ok(0)
        }
        Command::Audit {
            strategy,
            n,
            grid,
            random_probes,
            seed,
            max_tuples,
            output,
        } => {
            let built = built_strategy(&strategy, n)?;
            let mut cfg = SearchConfig::new(grid, random_probes, seed)
                .map_err(|e| validation("--grid", e))?;
            cfg.max_tuples_per_agent = max_tuples;
            let report = audit_builtin(&built, &cfg).map_err(|e| validation("audit", e))?;
            match report.outcome {
                AuditOutcome::WitnessFound { witness } => {
                    write_json(&output, witness.as_ref())?;
                    let worst = witness
                        .accuracies
                        .agents
                        .iter()
                        .min()
                        .expect("witness has agents");
                    println!(
                        "witness found: strategy accuracy {} < worst agent {}; written to {}",
                        witness.accuracies.strategy,
                        worst,
                        output.display()
                    );
                    Ok(0)
                }
                outcome @ AuditOutcome::ConsistentWithinBudget { .. } => {
                    let report = collab::AuditReport {
                        n,
                        config: cfg,
                        outcome,
                    };
                    write_json(&output, &report)?;
                    if let AuditOutcome::ConsistentWithinBudget { k, probes_used, .. } =
                        &report.outcome
                    {
                        println!(
                            "no violation found in {probes_used} probes: consistent with \
                             deferring to agent {k}; report written to {}",
                            output.display()
                        );
                    }
                    Ok(3)
                }
            }
        }
        Command::Verify { witness, strategy } => {
            let witness: Witness = read_json(&witness)?;
            let built = match strategy {
                Some(text) => Some(built_strategy(&text, witness.setting.n_agents())?),
                None => None,
            };
            match verify_witness(&witness, built.as_ref().map(|b| b as &dyn collab::Strategy)) {
                Ok(()) => {
                    println!(
                        "witness verified: strategy accuracy {} strictly below every agent",
                        witness.accuracies.strategy
                    );
                    Ok(0)
                }
                Err(e) => Err(CliError::VerifyFailed(e.to_string())),
            }
        }
        Command::Gen {
            seed,
            max_points,
            n,
            denominator_bound,
            output,
        } => {
            if max_points == 0 || n == 0 {
                return Err(CliError::Usage(
                    "--max-points and --n must be at least 1".to_string(),
                ));
            }
            let setting = random_calibrated_setting(seed, max_points, n, denominator_bound);
            write_json(&output, &setting)?;
            println!("setting written to {}", output.display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.exit_code())
        }
    }
}
