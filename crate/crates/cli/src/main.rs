use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lve::ast::{typecheck, LetTerm, ROW_SUM_TOL};
use lve::denote::web::decode;
use lve::denote::{Denoter, WeightedRelation, WebElement, DEFAULT_WEB_CAP};
use lve::factor::{facts_counted, fmt_num, vef_with_cap};
use lve::frontend::report::{compare, cost, suggest_order};
use lve::frontend::{ingest_network, parse, program_to_string, NetworkFile, SourceProgram};
use lve::rewrite::{simplify, vel_seq};
use lve::verify::{random_network, run_suite, Execution, GeneratorConfig, SuiteConfig};

#[derive(Parser)]
#[command(name = "lve", version, about = "Variable elimination on linear let-terms")]
struct Cli {
    /// Accept matrices whose rows do not sum to 1.
    #[arg(long, global = true)]
    no_stochastic_check: bool,
    /// Seed for generated networks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Largest table any computation may build.
    #[arg(long, global = true, default_value_t = DEFAULT_WEB_CAP)]
    web_cap: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and typecheck a program.
    Check { file: PathBuf },
    /// Print the distribution a program denotes.
    Denote {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Print the factor set of a program.
    Facts { file: PathBuf },
    /// Eliminate variables from the factor set.
    Vef(OrderArgs),
    /// Eliminate variables by rewriting the term.
    Vel {
        #[command(flatten)]
        common: OrderArgs,
        /// Print the rewritten program, matrices included.
        #[arg(long)]
        emit_term: bool,
        /// Print every rewrite step.
        #[arg(long)]
        trace: bool,
        /// Remove administrative lets from the result.
        #[arg(long)]
        simplify: bool,
        /// Trace as JSON lines.
        #[arg(long)]
        json: bool,
    },
    /// Run all four computation paths and compare them.
    Compare {
        #[command(flatten)]
        common: OrderArgs,
        #[arg(long)]
        json: bool,
    },
    /// Cost of each elimination step.
    Cost {
        #[command(flatten)]
        common: OrderArgs,
        #[arg(long)]
        json: bool,
    },
    /// Suggest an elimination order.
    Orderings {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Heuristic::MinDegree)]
        heuristic: Heuristic,
    },
    /// Cross-check every computation path on random networks.
    Suite {
        #[arg(long, default_value_t = 100)]
        instances: usize,
        #[command(flatten)]
        shape: ShapeArgs,
        #[arg(long)]
        sequential: bool,
        /// Print every record as a JSON line.
        #[arg(long)]
        json: bool,
        /// Print failures and the summary only.
        #[arg(long)]
        quiet: bool,
    },
    /// Print a random network as JSON.
    Generate {
        #[command(flatten)]
        shape: ShapeArgs,
    },
}

#[derive(Args)]
struct OrderArgs {
    file: PathBuf,
    /// Comma-separated variables to eliminate, in order.
    #[arg(long, value_delimiter = ',', required = true)]
    order: Vec<String>,
}

#[derive(Args)]
struct ShapeArgs {
    #[arg(long, default_value_t = 6)]
    nodes: usize,
    #[arg(long, default_value_t = 2)]
    max_parents: usize,
    #[arg(long, default_value_t = 0.3)]
    p_extra_edge: f64,
    #[arg(long, default_value_t = 2)]
    query_size: usize,
}

impl ShapeArgs {
    fn config(&self, seed: u64) -> GeneratorConfig {
        GeneratorConfig {
            seed,
            nodes: self.nodes,
            max_parents: self.max_parents,
            p_extra_edge: self.p_extra_edge,
            query_size: self.query_size,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Heuristic {
    MinDegree,
}

/// A failed run: bad input (exit 2) or results that disagree (exit 1).
enum Failure {
    Input(String),
    Mismatch(String),
}

fn input<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Input(e.to_string())
}

type Outcome = Result<String, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(Failure::Mismatch(out)) => {
            print!("{out}");
            eprintln!("error: verification mismatch");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load(cli: &Cli, path: &Path) -> Result<SourceProgram, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let program = if path.extension().is_some_and(|e| e == "json") {
        ingest_network(&NetworkFile::from_json(&text).map_err(input)?).map_err(input)?
    } else {
        parse(&text).map_err(input)?
    };
    if !cli.no_stochastic_check {
        for m in program.matrices.values() {
            m.check_stochastic(ROW_SUM_TOL).map_err(input)?;
        }
    }
    typecheck(&program.term).map_err(input)?;
    Ok(program)
}

fn order_refs(order: &[String]) -> Vec<&str> {
    order.iter().map(|s| s.as_str()).collect()
}

fn run(cli: &Cli) -> Outcome {
    let cap = cli.web_cap;
    match &cli.command {
        Command::Check { file } => {
            let p = load(cli, file)?;
            let ty = typecheck(&p.term).map_err(input)?;
            Ok(format!(
                "ok: {} definitions, type {ty}, free variables {}\n",
                p.term.defs.len(),
                p.term.free_vars().len()
            ))
        }
        Command::Denote { file, json } => {
            let p = load(cli, file)?;
            let rel = Denoter::new(cap).denote_term(&p.term).map_err(input)?;
            if *json {
                Ok(format!("{}\n", serde_json::to_string(&rel.to_json()).map_err(input)?))
            } else {
                Ok(distribution(&p.term, &rel))
            }
        }
        Command::Facts { file } => {
            let p = load(cli, file)?;
            let (set, _) = facts_counted(&p.term, cap).map_err(input)?;
            Ok(set.dump())
        }
        Command::Vef(a) => {
            let p = load(cli, &a.file)?;
            let (set, _) = facts_counted(&p.term, cap).map_err(input)?;
            let out = vef_with_cap(&set, &order_refs(&a.order), cap).map_err(input)?;
            let mut s = out.dump();
            let _ = writeln!(s, "max table: {}", out.max_table());
            let _ = writeln!(s, "total ops: {}", out.ops());
            Ok(s)
        }
        Command::Vel {
            common,
            emit_term,
            trace,
            simplify: simp,
            json,
        } => {
            let p = load(cli, &common.file)?;
            let (term, tr) = vel_seq(&p.term, &order_refs(&common.order)).map_err(input)?;
            let term = if *simp { simplify(&term) } else { term };
            let mut s = String::new();
            if *trace {
                s.push_str(&if *json { tr.to_json_lines() } else { tr.to_text() });
            }
            if *emit_term {
                s.push_str(&program_to_string(&term));
                s.push('\n');
            } else if !*trace {
                let _ = writeln!(s, "{term}");
            }
            if !*json {
                let per: Vec<String> = tr.per_var.iter().map(|n| n.to_string()).collect();
                let _ = writeln!(s, "# {} steps ({})", tr.len(), per.join(" "));
            }
            Ok(s)
        }
        Command::Compare { common, json } => {
            let p = load(cli, &common.file)?;
            let r = compare(&p.term, &order_refs(&common.order), cap).map_err(input)?;
            let s = if *json {
                format!("{}\n", serde_json::to_string(&r).map_err(input)?)
            } else {
                r.to_text()
            };
            if r.ok() {
                Ok(s)
            } else {
                Err(Failure::Mismatch(s))
            }
        }
        Command::Cost { common, json } => {
            let p = load(cli, &common.file)?;
            let r = cost(&p.term, &order_refs(&common.order), cap).map_err(input)?;
            if *json {
                Ok(format!("{}\n", serde_json::to_string(&r).map_err(input)?))
            } else {
                Ok(r.to_text())
            }
        }
        Command::Orderings { file, heuristic } => {
            let p = load(cli, file)?;
            let Heuristic::MinDegree = heuristic;
            let order = suggest_order(&p.term, cap).map_err(input)?;
            Ok(format!("{}\n# min-degree (heuristic)\n", order.join(",")))
        }
        Command::Suite {
            instances,
            shape,
            sequential,
            json,
            quiet,
        } => {
            let cfg = SuiteConfig {
                first_seed: cli.seed,
                instances: *instances,
                generator: shape.config(cli.seed),
                execution: if *sequential {
                    Execution::Sequential
                } else {
                    Execution::Parallel
                },
                web_cap: cap,
            };
            let r = run_suite(&cfg);
            let s = if *json {
                r.to_json_lines()
            } else if *quiet {
                let mut s: String = r.failures().map(|f| format!("{f}\n")).collect();
                let st = &r.stats;
                let _ = writeln!(
                    s,
                    "instances={} checks={} passed={} failed={} skipped={}",
                    st.instances, st.checks, st.passed, st.failed, st.skipped
                );
                s
            } else {
                r.to_text()
            };
            if r.is_ok() {
                Ok(s)
            } else {
                Err(Failure::Mismatch(s))
            }
        }
        Command::Generate { shape } => Ok(format!("{}\n", random_network(&shape.config(cli.seed)).to_json())),
    }
}

/// A header naming the variables, then one line per entry in canonical web
/// order. Row variables, when present, come before a `|`.
fn distribution(term: &LetTerm, rel: &WeightedRelation) -> String {
    let out = term.output.vars();
    let rows = rel.rows();
    let col_radices: Vec<usize> = out.iter().map(|v| v.web_size()).collect();
    let row_radices = rel.row_radices();
    let mut s = String::new();
    let mut header: Vec<&str> = rows.iter().map(|v| v.name()).collect();
    if !rows.is_empty() {
        header.push("|");
    }
    header.extend(out.iter().map(|v| v.name()));
    let _ = writeln!(s, "{} p", header.join(" "));
    for r in 0..rel.n_rows() {
        let mut prefix: Vec<String> = decode(r, &row_radices)
            .iter()
            .zip(rows)
            .map(|(d, v)| WebElement::from_index(v.ty(), *d).to_string())
            .collect();
        if !rows.is_empty() {
            prefix.push("|".into());
        }
        for c in 0..rel.n_cols() {
            let mut cells = prefix.clone();
            cells.extend(
                decode(c, &col_radices)
                    .iter()
                    .zip(&out)
                    .map(|(d, v)| WebElement::from_index(v.ty(), *d).to_string()),
            );
            let _ = writeln!(s, "{} {}", cells.join(" "), fmt_num(rel.get(r, c)));
        }
    }
    s
}
