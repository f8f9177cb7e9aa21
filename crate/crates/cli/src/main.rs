//! Command-line front end: run and trace programs, encode/decode and
//! index them, enumerate machines, dovetail halting pairs, drive the
//! stage construction, and query the decision problems.
//!
//! Exit status: 0 on success / "yes", 1 on a domain "no" or budget
//! timeout, 2 on usage errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use serde::Deserialize;
use serde_json::json;

use addbss::encoding::{decode, decode_index, encode, godel_index, machine_at, BitString};
use addbss::machine::{
    parse_program, run_bounded, run_traced, Dialect, DialectBase, OracleSpec, Program, RunOutcome,
};
use addbss::priority::{StageEngine, SyntheticFixture};
use addbss::problems::{
    h_i_semidecide, kappa_semidecide, l_n_decide, l_n_semidecide, p_i_member,
    rational_shadow_search, sqrt_select_decide, Budgeted, HiOutcome,
};
use addbss::reals::RealValue;
use addbss::simulation::{enumerate_halting_pairs, snapshot_w};

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DialectArg {
    /// Equality tests only (constants 0/1).
    Addeq,
    /// Order tests (constants 0/1).
    Addord,
}

#[derive(Parser)]
#[command(name = "addbss", version, about = "Additive real BSS RAM toolkit")]
struct Cli {
    /// Output format for single-object results.
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a program on an input tuple with a step budget.
    Run {
        program: PathBuf,
        /// Comma-separated values, e.g. "3, 1/2 + 1*sqrt(2)".
        #[arg(long)]
        input: String,
        #[arg(long, default_value_t = 10_000)]
        steps: u64,
        /// `empty` or a JSON file with a finite tuple set.
        #[arg(long)]
        oracle: Option<String>,
    },
    /// Run and emit one JSON line per executed step.
    Trace {
        program: PathBuf,
        #[arg(long)]
        input: String,
        #[arg(long, default_value_t = 10_000)]
        steps: u64,
        #[arg(long)]
        oracle: Option<String>,
    },
    /// Bit code of a program.
    Encode { program: PathBuf },
    /// Decode a 0/1 string back into a program.
    Decode {
        #[arg(long)]
        bits: String,
    },
    /// Machine index 2^|code| + c of a program.
    Index { program: PathBuf },
    /// First entries of the total machine enumeration.
    Enumerate {
        #[arg(long, value_enum)]
        dialect: DialectArg,
        #[arg(long)]
        oracle_enabled: bool,
        #[arg(long)]
        count: u64,
    },
    /// Dovetailed halting pairs as CSV `i,n,t` (or one snapshot).
    #[command(name = "halting-pairs")]
    HaltingPairs {
        /// Program file; alternatively select a machine by `--index`.
        program: Option<PathBuf>,
        /// Machine index into the eq-dialect enumeration.
        #[arg(long)]
        index: Option<u64>,
        /// Dovetail rounds.
        #[arg(long, default_value_t = 50)]
        budget: u64,
        /// Emit the snapshot W_{i,s} for this stage instead of CSV.
        #[arg(long)]
        snapshot: Option<u64>,
    },
    /// Stage construction log, one JSON line per stage.
    Stages {
        #[arg(long)]
        max: u64,
        /// JSON fixture with synthetic enumerators/machines.
        #[arg(long)]
        synthetic: Option<PathBuf>,
    },
    /// Decision problems.
    Problem {
        #[command(subcommand)]
        which: ProblemCommand,
    },
    /// Rational input following the same path as an irrational target.
    Shadow {
        program: PathBuf,
        /// Target value, e.g. "sqrt(2)" or "pi".
        #[arg(long)]
        target: String,
        #[arg(long, default_value_t = 200)]
        steps: u64,
        #[arg(long, default_value = "1000000000")]
        denominator_bound: String,
    },
}

#[derive(Subcommand)]
enum ProblemCommand {
    /// Affine rational dependence of the last component on the others.
    #[command(name = "l_n")]
    LN {
        #[arg(long)]
        input: String,
        #[arg(long, default_value_t = 100_000)]
        budget: u64,
    },
    /// Separation of x from sqrt(p_i).
    Kappa {
        #[arg(long)]
        i: u64,
        #[arg(long)]
        input: String,
        #[arg(long, default_value_t = 100_000)]
        budget: u64,
    },
    /// Membership in the i-th square-root point set.
    #[command(name = "p_i")]
    PI {
        #[arg(long)]
        i: u64,
        #[arg(long)]
        input: String,
    },
    /// The i-th layered halting problem.
    #[command(name = "h_i")]
    HI {
        #[arg(long)]
        i: u64,
        #[arg(long)]
        input: String,
        #[arg(long, default_value_t = 100_000)]
        budget: u64,
    },
    /// Square-root selector over the oracle {sqrt(p_1)..sqrt(p_i)}.
    Select {
        #[arg(long)]
        k: u64,
        #[arg(long)]
        i: u64,
        #[arg(long)]
        input: String,
    },
}

fn parse_values(text: &str) -> Result<Vec<RealValue>> {
    text.split(',')
        .map(|part| {
            RealValue::from_str(part.trim())
                .map_err(|e| anyhow!("bad value {:?}: {}", part.trim(), e))
        })
        .collect()
}

fn load_program(path: &Path) -> Result<Program> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    parse_program(&text).map_err(|e| anyhow!("{}: {}", path.display(), e))
}

#[derive(Deserialize)]
struct OracleFile {
    name: String,
    tuples: Vec<Vec<String>>,
}

fn load_oracle(spec: &str) -> Result<OracleSpec> {
    if spec == "empty" {
        return Ok(OracleSpec::empty());
    }
    let text = std::fs::read_to_string(spec).with_context(|| format!("reading {spec}"))?;
    let file: OracleFile = serde_json::from_str(&text).context("oracle file format")?;
    let mut tuples = Vec::with_capacity(file.tuples.len());
    for tuple in file.tuples {
        let mut values = Vec::with_capacity(tuple.len());
        for v in tuple {
            values.push(RealValue::from_str(&v).map_err(|e| anyhow!("bad oracle value: {e}"))?);
        }
        tuples.push(values);
    }
    Ok(OracleSpec::finite_tuples(file.name, tuples))
}

fn value_texts(values: &[RealValue]) -> Vec<String> {
    values.iter().map(|v| v.to_string()).collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    let format = cli.format;
    match cli.command {
        Command::Run { program, input, steps, oracle } => {
            let p = load_program(&program)?;
            let input = parse_values(&input)?;
            let oracle = oracle.as_deref().map(load_oracle).transpose()?;
            let outcome = run_bounded(&p, &input, oracle.as_ref(), steps)
                .map_err(|e| anyhow!("run failed: {e}"))?;
            match outcome {
                RunOutcome::Halted { steps, output } => {
                    match format {
                        Format::Json => println!(
                            "{}",
                            json!({"outcome": "halted", "steps": steps, "output": value_texts(&output)})
                        ),
                        Format::Text => println!(
                            "halted after {steps} steps: ({})",
                            value_texts(&output).join(", ")
                        ),
                    }
                    Ok(ExitCode::SUCCESS)
                }
                RunOutcome::Running(state) => {
                    match format {
                        Format::Json => {
                            println!("{}", json!({"outcome": "running", "steps": state.steps()}))
                        }
                        Format::Text => println!("still running after {} steps", state.steps()),
                    }
                    Ok(ExitCode::from(1))
                }
            }
        }
        Command::Trace { program, input, steps, oracle } => {
            let p = load_program(&program)?;
            let input = parse_values(&input)?;
            let oracle = oracle.as_deref().map(load_oracle).transpose()?;
            let (outcome, trace) = run_traced(&p, &input, oracle.as_ref(), steps)
                .map_err(|e| anyhow!("run failed: {e}"))?;
            for entry in &trace {
                println!("{}", serde_json::to_string(entry)?);
            }
            match outcome {
                RunOutcome::Halted { steps, output } => {
                    println!(
                        "{}",
                        json!({"outcome": "halted", "steps": steps, "output": value_texts(&output)})
                    );
                    Ok(ExitCode::SUCCESS)
                }
                RunOutcome::Running(state) => {
                    println!("{}", json!({"outcome": "running", "steps": state.steps()}));
                    Ok(ExitCode::from(1))
                }
            }
        }
        Command::Encode { program } => {
            let p = load_program(&program)?;
            let code = encode(&p).map_err(|e| anyhow!("{e}"))?;
            match format {
                Format::Json => println!(
                    "{}",
                    json!({"bits": code.to_binary_string(), "len": code.len(), "hex": code.to_hex_string()})
                ),
                Format::Text => println!("{}", code.to_binary_string()),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Decode { bits } => {
            let code = BitString::from_binary_str(&bits)
                .ok_or_else(|| anyhow!("--bits must be a nonempty 0/1 string"))?;
            match decode(&code) {
                Some(p) => {
                    match format {
                        Format::Json => println!(
                            "{}",
                            json!({"valid": true, "dialect": p.dialect().to_string(), "program": p.to_string()})
                        ),
                        Format::Text => print!("{}", p),
                    }
                    Ok(ExitCode::SUCCESS)
                }
                None => {
                    match format {
                        Format::Json => println!("{}", json!({"valid": false})),
                        Format::Text => println!("not the code of a valid program"),
                    }
                    Ok(ExitCode::from(1))
                }
            }
        }
        Command::Index { program } => {
            let p = load_program(&program)?;
            let k = godel_index(&p).map_err(|e| anyhow!("{e}"))?;
            match format {
                Format::Json => println!("{}", json!({"k": k.to_string()})),
                Format::Text => println!("{k}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Enumerate { dialect, oracle_enabled, count } => {
            let base = match dialect {
                DialectArg::Addeq => DialectBase::AddEq,
                DialectArg::Addord => DialectBase::AddOrd,
            };
            let class = Dialect { base, oracle: oracle_enabled };
            for k in 1..=count {
                let genuine = decode_index(&BigUint::from(k), class);
                let program = genuine.clone().unwrap_or_else(Program::trivial);
                println!(
                    "{}",
                    json!({"k": k, "trivial": genuine.is_none(), "program": program.to_string()})
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::HaltingPairs { program, index, budget, snapshot } => {
            if let Some(s) = snapshot {
                // The snapshot surface works on enumeration indices.
                let Some(i) = index else {
                    bail!("--snapshot needs --index into the machine enumeration")
                };
                let snap = snapshot_w(i, s);
                println!("{}", serde_json::to_string(&snap)?);
                return Ok(ExitCode::SUCCESS);
            }
            let (label, p): (BigUint, Program) = match (program, index) {
                (Some(path), None) => {
                    let p = load_program(&path)?;
                    let k = godel_index(&p).map_err(|e| anyhow!("{e}"))?;
                    (k.0, p)
                }
                (None, Some(k)) => {
                    (BigUint::from(k), machine_at(&BigUint::from(k), Dialect::ADD_EQ))
                }
                _ => bail!("give exactly one of a program file or --index"),
            };
            let pairs = enumerate_halting_pairs(&p, budget).map_err(|e| anyhow!("{e}"))?;
            for pair in pairs {
                println!("{},{},{}", label, pair.n, pair.t);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Stages { max, synthetic } => {
            let mut engine = match synthetic {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    let fixture: SyntheticFixture =
                        serde_json::from_str(&text).context("fixture format")?;
                    StageEngine::from_fixture(&fixture).map_err(|e| anyhow!("{e}"))?
                }
                None => StageEngine::genuine(),
            };
            engine.run_to_stage(max);
            for summary in engine.history() {
                println!("{}", serde_json::to_string(summary)?);
            }
            let members: Vec<u64> = engine.record().a.iter().copied().collect();
            println!("{}", json!({ "A": members }));
            Ok(ExitCode::SUCCESS)
        }
        Command::Problem { which } => problem(which),
        Command::Shadow { program, target, steps, denominator_bound } => {
            let p = load_program(&program)?;
            let target: RealValue = target.parse().map_err(|e| anyhow!("bad target: {e}"))?;
            let bound = BigUint::from_str(&denominator_bound)
                .map_err(|_| anyhow!("--denominator-bound must be a positive integer"))?;
            match rational_shadow_search(&p, &target, None, steps, &bound) {
                Some(q) => {
                    println!(
                        "{}",
                        json!({"shadow": q.to_string(), "target": target.to_string(), "steps": steps})
                    );
                    Ok(ExitCode::SUCCESS)
                }
                None => {
                    println!(
                        "{}",
                        json!({"shadow": null, "target": target.to_string(), "steps": steps})
                    );
                    Ok(ExitCode::from(1))
                }
            }
        }
    }
}

fn problem(which: ProblemCommand) -> Result<ExitCode> {
    match which {
        ProblemCommand::LN { input, budget } => {
            let tuple = parse_values(&input)?;
            if tuple.is_empty() {
                bail!("--input must hold at least one value");
            }
            let decided = l_n_decide(&tuple);
            let semi = l_n_semidecide(&tuple, budget);
            let semi_json = match &semi {
                Budgeted::Halted { witness, cost } => json!({
                    "halted": true,
                    "witness": witness.iter().map(|q| q.to_string()).collect::<Vec<_>>(),
                    "cost": cost,
                }),
                Budgeted::NotWithinBudget => json!({"halted": false}),
            };
            println!(
                "{}",
                json!({
                    "problem": "l_n",
                    "n": tuple.len(),
                    "member": decided.is_some(),
                    "witness": decided
                        .as_ref()
                        .map(|w| w.iter().map(|q| q.to_string()).collect::<Vec<_>>()),
                    "semidecide": semi_json,
                })
            );
            Ok(if decided.is_some() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        ProblemCommand::Kappa { i, input, budget } => {
            let values = parse_values(&input)?;
            if values.len() != 1 {
                bail!("--input must hold exactly one value");
            }
            match kappa_semidecide(i, &values[0], budget) {
                Budgeted::Halted { witness: (r, q), cost } => {
                    println!(
                        "{}",
                        json!({"problem": "kappa", "i": i, "halted": true, "witness": [r, q], "pairs_tested": cost})
                    );
                    Ok(ExitCode::SUCCESS)
                }
                Budgeted::NotWithinBudget => {
                    println!(
                        "{}",
                        json!({"problem": "kappa", "i": i, "halted": false, "pairs_tested": budget})
                    );
                    Ok(ExitCode::from(1))
                }
            }
        }
        ProblemCommand::PI { i, input } => {
            let point = parse_values(&input)?;
            let member = p_i_member(&point, i);
            println!("{}", json!({"problem": "p_i", "i": i, "member": member}));
            Ok(if member { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        ProblemCommand::HI { i, input, budget } => {
            let point = parse_values(&input)?;
            let outcome = h_i_semidecide(&point, i, budget);
            let (accepted, via) = match &outcome {
                HiOutcome::AcceptedHalting { steps } => {
                    (true, json!({"route": "halting", "steps": steps}))
                }
                HiOutcome::AcceptedPrime { j, pair, cost } => (
                    true,
                    json!({"route": "prime", "j": j, "witness": [pair.0, pair.1], "cost": cost}),
                ),
                HiOutcome::NotWithinBudget => (false, serde_json::Value::Null),
            };
            println!("{}", json!({"problem": "h_i", "i": i, "accepted": accepted, "via": via}));
            Ok(if accepted { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        ProblemCommand::Select { k, i, input } => {
            let values = parse_values(&input)?;
            if values.len() != 1 {
                bail!("--input must hold exactly one value");
            }
            let output = sqrt_select_decide(k, &values[0], i).map_err(|e| anyhow!("{e}"))?;
            println!("{}", json!({"problem": "select", "k": k, "i": i, "output": output}));
            Ok(if output == 1 { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}
