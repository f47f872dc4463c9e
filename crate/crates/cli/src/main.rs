//! `traitnet` command-line front end.
//!
//! Exit codes: 0 success, 2 usage error, 3 parse error, 4 impossible
//! evidence, 5 internal failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use traitnet::inference::Engine;
use traitnet::model::Network;
use traitnet::netdef::{self, format_fixed};
use traitnet::scoring::{self, NoiseSpec};
use traitnet::{simulate, Error, Evidence, Rational, Scalar, Threshold};

#[derive(Parser, Debug)]
#[command(
    name = "traitnet",
    version,
    about = "Exact inference for questionnaire scoring networks"
)]
struct Cli {
    /// Evaluate in exact rational arithmetic instead of f64.
    #[arg(long, global = true)]
    exact: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check that a network file parses and is acyclic.
    Validate {
        file: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Posterior marginal of each requested node.
    Marginals {
        file: PathBuf,
        /// Nodes to report; all variables when omitted.
        #[arg(long, value_delimiter = ',')]
        nodes: Vec<String>,
        #[command(flatten)]
        evidence: EvidenceArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Score one trait: posterior, MAP state, expected level, thresholds.
    Posterior {
        file: PathBuf,
        #[arg(long = "trait")]
        trait_name: String,
        /// Threshold such as ">=3"; repeatable.
        #[arg(long = "threshold", value_parser = parse_threshold)]
        thresholds: Vec<Threshold>,
        #[command(flatten)]
        evidence: EvidenceArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Posterior joint table over the requested nodes.
    Joint {
        file: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        nodes: Vec<String>,
        #[command(flatten)]
        evidence: EvidenceArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Draw samples as TSV; likelihood-weighted when evidence is given.
    Sample {
        file: PathBuf,
        #[arg(short = 'n', long = "count")]
        count: usize,
        #[arg(long)]
        seed: u64,
        /// Number of worker threads; the output depends on this value.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
        shards: u16,
        #[command(flatten)]
        evidence: EvidenceArgs,
    },
    /// Graphviz rendering of the network structure.
    Dot { file: PathBuf },
    /// Mix every question table with the uniform distribution and print the result.
    Noise {
        file: PathBuf,
        #[arg(long)]
        epsilon: String,
    },
}

#[derive(Args, Debug)]
struct EvidenceArgs {
    /// Observations as VAR=STATE, comma-separated; repeatable.
    #[arg(long, value_delimiter = ',', value_parser = parse_assignment)]
    evidence: Vec<(String, String)>,
}

#[derive(Args, Debug)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Decimal places in table output.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(0..=17))]
    decimals: u8,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Table,
    Json,
}

fn parse_assignment(s: &str) -> Result<(String, String), String> {
    match s.split_once('=') {
        Some((var, state)) if !var.trim().is_empty() && !state.trim().is_empty() => {
            Ok((var.trim().to_string(), state.trim().to_string()))
        }
        _ => Err(format!("expected VAR=STATE, got {s:?}")),
    }
}

fn parse_threshold(s: &str) -> Result<Threshold, String> {
    s.parse::<Threshold>().map_err(|e| e.to_string())
}

enum Failure {
    Usage(String),
    Parse(String),
    Impossible(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Parse(_) => 3,
            Failure::Impossible(_) => 4,
            Failure::Internal(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m)
            | Failure::Parse(m)
            | Failure::Impossible(m)
            | Failure::Internal(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let msg = err.to_string();
        match err {
            Error::Parse(_) => Failure::Parse(msg),
            Error::ImpossibleEvidence => Failure::Impossible(msg),
            Error::UnknownVariable(_)
            | Error::UnknownState { .. }
            | Error::DuplicateEvidence(_)
            | Error::DuplicateNode(_)
            | Error::EmptyQuery
            | Error::EmptySample
            | Error::InvalidThreshold(_)
            | Error::NonNumericStates { .. }
            | Error::InvalidNoise => Failure::Usage(msg),
            _ => Failure::Internal(msg),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 2 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let result = if cli.exact {
        run::<Rational>(cli.command)
    } else {
        run::<f64>(cli.command)
    };
    match result {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.code())
        }
    }
}

fn load<T: Scalar>(path: &Path) -> Result<Network<T>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    netdef::parse_network(&text).map_err(|e| Failure::Parse(format!("{}:{e}", path.display())))
}

fn evidence(args: &EvidenceArgs) -> Result<Evidence, Failure> {
    Ok(Evidence::from_pairs(args.evidence.iter().cloned())?)
}

fn run<T: Scalar>(command: Command) -> Result<String, Failure> {
    match command {
        Command::Validate { file, output } => {
            let net = load::<T>(&file)?;
            Ok(match output.format {
                Format::Table => {
                    format!("OK: {} variables, {} edges\n", net.len(), net.edge_count())
                }
                Format::Json => format!(
                    "{{\n  \"variables\": {},\n  \"edges\": {}\n}}\n",
                    net.len(),
                    net.edge_count()
                ),
            })
        }
        Command::Marginals {
            file,
            nodes,
            evidence: ev,
            output,
        } => {
            let evidence = evidence(&ev)?;
            let net = load::<T>(&file)?;
            let nodes: Vec<String> = if nodes.is_empty() {
                net.variables()
                    .iter()
                    .map(|v| v.name().to_string())
                    .collect()
            } else {
                nodes
            };
            let names: Vec<&str> = nodes.iter().map(String::as_str).collect();
            let result = Engine::compile(net).query(&evidence, &names)?;
            Ok(match output.format {
                Format::Json => netdef::export_result_json(&result) + "\n",
                Format::Table => {
                    let decimals = usize::from(output.decimals);
                    let mut out = String::new();
                    for (i, m) in result.marginals().iter().enumerate() {
                        if i > 0 {
                            out.push('\n');
                        }
                        let values: Vec<String> = m
                            .probs()
                            .iter()
                            .map(|p| format_fixed(p.to_f64(), decimals))
                            .collect();
                        out.push_str(m.variable());
                        out.push('\n');
                        out.push_str(&columns(m.states(), &values));
                    }
                    if !evidence.is_empty() {
                        out.push_str(&format!(
                            "\nP(evidence) = {}\n",
                            format_fixed(result.evidence_probability().to_f64(), decimals)
                        ));
                    }
                    out
                }
            })
        }
        Command::Posterior {
            file,
            trait_name,
            thresholds,
            evidence: ev,
            output,
        } => {
            let evidence = evidence(&ev)?;
            let net = load::<T>(&file)?;
            let engine = Engine::compile(net);
            let score = scoring::score_trait(&engine, &trait_name, &evidence, &thresholds)?;
            Ok(match output.format {
                Format::Json => netdef::export_trait_score_json(&score) + "\n",
                Format::Table => {
                    let decimals = usize::from(output.decimals);
                    let posterior: Vec<String> = score
                        .states
                        .iter()
                        .zip(&score.posterior)
                        .map(|(s, p)| format!("{s}\u{2192}{}", format_fixed(p.to_f64(), decimals)))
                        .collect();
                    let mut out = format!("{}: {}\n", score.variable, posterior.join(" "));
                    out.push_str(&format!("MAP: {}\n", score.map_state));
                    match &score.expected_level {
                        Some(level) => out.push_str(&format!(
                            "expected level: {}\n",
                            format_fixed(level.to_f64(), decimals)
                        )),
                        None => out.push_str("expected level: n/a\n"),
                    }
                    for t in &score.thresholds {
                        out.push_str(&format!(
                            "P({}{}) = {}\n",
                            score.variable,
                            t.threshold,
                            format_fixed(t.probability.to_f64(), decimals)
                        ));
                    }
                    out
                }
            })
        }
        Command::Joint {
            file,
            nodes,
            evidence: ev,
            output,
        } => {
            let evidence = evidence(&ev)?;
            let net = load::<T>(&file)?;
            let names: Vec<&str> = nodes.iter().map(String::as_str).collect();
            let joint = Engine::compile(net).query_joint(&evidence, &names)?;
            Ok(match output.format {
                Format::Json => netdef::export_joint_json(&joint) + "\n",
                Format::Table => {
                    let decimals = usize::from(output.decimals);
                    let mut header: Vec<String> =
                        joint.scope_names().iter().map(|s| s.to_string()).collect();
                    header.push("p".into());
                    let rows: Vec<Vec<String>> = netdef::joint_rows(&joint)
                        .into_iter()
                        .map(|(mut labels, p)| {
                            labels.push(format_fixed(p, decimals));
                            labels
                        })
                        .collect();
                    table(&header, &rows)
                }
            })
        }
        Command::Sample {
            file,
            count,
            seed,
            shards,
            evidence: ev,
        } => {
            let evidence = evidence(&ev)?;
            let net = load::<T>(&file)?;
            let samples =
                simulate::sample_sharded(&net, &evidence, count, seed, usize::from(shards))?;
            Ok(netdef::export_samples_tsv(&samples))
        }
        Command::Dot { file } => Ok(netdef::export_dot(&load::<T>(&file)?)),
        Command::Noise { file, epsilon } => {
            let slip = T::parse_decimal(epsilon.trim())
                .ok_or_else(|| Failure::Usage(format!("invalid epsilon {epsilon:?}")))?;
            let noise = NoiseSpec::new(slip)?;
            let net = load::<T>(&file)?;
            Ok(netdef::serialize_network(
                &scoring::apply_noise_to_questions(&net, &noise)?,
            ))
        }
    }
}

/// Two right-aligned lines: labels above values.
fn columns(labels: &[String], values: &[String]) -> String {
    let widths: Vec<usize> = labels
        .iter()
        .zip(values)
        .map(|(l, v)| l.chars().count().max(v.chars().count()))
        .collect();
    let line = |cells: &[String]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c:>w$}"))
            .collect();
        padded.join(" ").trim_end().to_string() + "\n"
    };
    line(labels) + &line(values)
}

fn table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    for row in std::iter::once(header).chain(rows.iter().map(Vec::as_slice)) {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c:>w$}"))
            .collect();
        out.push_str(cells.join(" ").trim_end());
        out.push('\n');
    }
    out
}
