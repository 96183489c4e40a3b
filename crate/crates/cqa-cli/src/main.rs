//! `cqa`: classify and solve certain query answering under primary keys.
//!
//! Exit codes: 0 success (for `solve`: certain), 1 not certain (`solve`
//! only), 64 usage error, 65 parse error in a query or database file,
//! 66 other input errors (schema mismatches, violated preconditions,
//! resource guards, I/O).

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use cqa::attack::attack_graph;
use cqa::classify::{classify_complexity, ComplexityVerdict};
use cqa::db::load_database;
use cqa::dot::{attack_graph_dot, join_tree_dot};
use cqa::jointree::join_tree;
use cqa::prob::{load_bid_database, prob_bruteforce, prob_is_one};
use cqa::purify::purify;
use cqa::query::{parse_query, Query, Rel};
use cqa::reduce::strong_cycle_reduce;
use cqa::safety::is_safe;
use cqa::solver::{
    canonical_ck_pattern, check_pattern_schema, ck_augmentation, count_satisfying_repairs,
    find_falsifying_repair,
    solve, Limits, Method, MethodChoice,
};

#[derive(Parser)]
#[command(name = "cqa", version, about = "Certain query answering under primary keys")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct QueryInput {
    /// Inline query text, e.g. "R(x;y) & S(y;x)"
    #[arg(short = 'q', long = "query")]
    query: Option<String>,
    /// File containing the query text
    #[arg(short = 'f', long = "query-file")]
    query_file: Option<PathBuf>,
}

impl QueryInput {
    fn load(&self) -> Result<Query, AppError> {
        let text = match (&self.query, &self.query_file) {
            (Some(text), None) => text.clone(),
            (None, Some(path)) => std::fs::read_to_string(path).map_err(cqa::Error::from)?,
            _ => {
                return Err(AppError::Usage(
                    "provide exactly one of --query and --query-file".into(),
                ))
            }
        };
        Ok(parse_query(&text)?)
    }
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum MethodArg {
    Auto,
    Bruteforce,
    TerminalWeak,
    Cycle,
}

impl From<MethodArg> for MethodChoice {
    fn from(m: MethodArg) -> MethodChoice {
        match m {
            MethodArg::Auto => MethodChoice::Auto,
            MethodArg::Bruteforce => MethodChoice::Fixed(Method::Bruteforce),
            MethodArg::TerminalWeak => MethodChoice::Fixed(Method::TerminalWeak),
            MethodArg::Cycle => MethodChoice::Fixed(Method::CycleQuery),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Classify the complexity of CERTAINTY(q)
    Classify {
        #[command(flatten)]
        query: QueryInput,
        #[arg(long)]
        json: bool,
    },
    /// Decide whether every repair of the database satisfies the query
    Solve {
        #[command(flatten)]
        query: QueryInput,
        /// Database file
        #[arg(short = 'd', long = "database")]
        database: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
        method: MethodArg,
        #[arg(long)]
        json: bool,
    },
    /// Print the attack graph (text or DOT)
    AttackGraph {
        #[command(flatten)]
        query: QueryInput,
        #[arg(long)]
        dot: bool,
        #[arg(long)]
        json: bool,
    },
    /// Print a join tree (text or DOT)
    JoinTree {
        #[command(flatten)]
        query: QueryInput,
        #[arg(long)]
        dot: bool,
    },
    /// Remove blocks that no embedding of the query can use
    Purify {
        #[command(flatten)]
        query: QueryInput,
        #[arg(short = 'd', long = "database")]
        database: PathBuf,
        /// Write the purified database here instead of stdout
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
    /// Count satisfying repairs: prints `satisfying/total`
    Count {
        #[command(flatten)]
        query: QueryInput,
        #[arg(short = 'd', long = "database")]
        database: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Run the IsSafe rule system on the query
    Issafe {
        #[command(flatten)]
        query: QueryInput,
        #[arg(long)]
        json: bool,
    },
    /// Query probability on a block-independent-disjoint database
    Prob {
        #[command(flatten)]
        query: QueryInput,
        /// BID database file (facts may carry `: p/q` suffixes)
        #[arg(short = 'p', long = "prob-database")]
        prob_database: PathBuf,
        /// Print the exact probability as a reduced fraction
        #[arg(long)]
        exact: bool,
        /// Decide Pr(q) = 1 via the certain-answer bridge
        #[arg(long)]
        is_one: bool,
        #[arg(long)]
        json: bool,
    },
    /// Hardness and family reductions
    Reduce {
        #[command(subcommand)]
        gadget: ReduceCommand,
    },
}

#[derive(Subcommand)]
enum ReduceCommand {
    /// Map a database over {R0: <2,1>, S0: <3,2>} to one over the given
    /// query, preserving the certain answer (needs a strong 2-cycle)
    StrongCycle {
        #[command(flatten)]
        query: QueryInput,
        #[arg(short = 'd', long = "database")]
        database: PathBuf,
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
    /// Augment a C_k database (schema R1..Rk) with all-key facts over the
    /// active domain, producing the equivalent AC_k instance
    CkAck {
        #[arg(short = 'k', long)]
        k: usize,
        #[arg(short = 'd', long = "database")]
        database: PathBuf,
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
}

enum AppError {
    Usage(String),
    Lib(cqa::Error),
}

impl From<cqa::Error> for AppError {
    fn from(e: cqa::Error) -> Self {
        AppError::Lib(e)
    }
}

impl AppError {
    fn exit_code(&self) -> u8 {
        match self {
            AppError::Usage(_) => 64,
            AppError::Lib(cqa::Error::Parse { .. }) => 65,
            AppError::Lib(_) => 66,
        }
    }

    fn message(&self) -> String {
        match self {
            AppError::Usage(msg) => format!("usage error: {msg}"),
            AppError::Lib(e) => format!("error: {e}"),
        }
    }
}

fn limits_from_env() -> Limits {
    let mut limits = Limits::default();
    if let Ok(value) = std::env::var("CQA_REPAIR_LIMIT") {
        if let Ok(parsed) = value.parse::<u128>() {
            limits.repair_limit = parsed;
        }
    }
    limits
}

fn write_or_print(text: &str, output: &Option<PathBuf>) -> Result<(), AppError> {
    match output {
        Some(path) => std::fs::write(path, text).map_err(cqa::Error::from)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn verdict_json(verdict: &ComplexityVerdict) -> serde_json::Value {
    let mut value = json!({
        "class": verdict.class_name(),
        "label": verdict.label(),
    });
    match verdict {
        ComplexityVerdict::ConpComplete { strong_pair } => {
            value["strong_two_cycle"] =
                json!([strong_pair.0.to_string(), strong_pair.1.to_string()]);
        }
        ComplexityVerdict::PtimeCycleQuery { pattern } => {
            value["k"] = json!(pattern.k);
            value["cycle_relations"] =
                json!(pattern.rels.iter().map(Rel::to_string).collect::<Vec<_>>());
            value["all_key_relation"] = json!(pattern.all_key_rel.as_ref().map(Rel::to_string));
        }
        ComplexityVerdict::PtimeTerminalWeak { cycles } => {
            value["cycles"] = json!(cycles
                .iter()
                .map(|(f, g)| [f.to_string(), g.to_string()])
                .collect::<Vec<_>>());
        }
        _ => {}
    }
    value
}

fn run(command: Command) -> Result<u8, AppError> {
    let limits = limits_from_env();
    match command {
        Command::Classify { query, json } => {
            let q = query.load()?;
            let verdict = classify_complexity(&q);
            if json {
                let mut value = verdict_json(&verdict);
                value["command"] = json!("classify");
                value["query"] = json!(q.render());
                println!("{value}");
            } else {
                println!("{}", verdict.label());
            }
            Ok(0)
        }
        Command::Solve {
            query,
            database,
            method,
            json,
        } => {
            let q = query.load()?;
            let db = load_database(&database)?;
            let started = Instant::now();
            let mut answer = solve(&db, &q, method.into(), &limits)?;
            // the terminal-weak engine decides without a witness; fetch one
            // by enumeration when that is feasible
            if !answer.certain
                && answer.witness.is_none()
                && db.repair_count() <= limits.repair_limit
            {
                answer.witness = find_falsifying_repair(&db, &q, &limits)?;
            }
            let elapsed = started.elapsed();
            let witness_lines: Option<Vec<String>> = answer
                .witness
                .as_ref()
                .map(|w| w.facts.iter().map(|f| f.render()).collect());
            if json {
                println!(
                    "{}",
                    json!({
                        "command": "solve",
                        "query": q.render(),
                        "database": database.display().to_string(),
                        "certain": answer.certain,
                        "method": answer.method.name(),
                        "witness": witness_lines,
                    })
                );
            } else {
                println!("{}", if answer.certain { "CERTAIN" } else { "NOT CERTAIN" });
                println!("method: {}", answer.method.name());
                if let Some(lines) = witness_lines {
                    println!("falsifying repair:");
                    for line in lines {
                        println!("  {line}");
                    }
                }
                eprintln!("time: {:.1?}", elapsed);
            }
            Ok(if answer.certain { 0 } else { 1 })
        }
        Command::AttackGraph { query, dot, json } => {
            let q = query.load()?;
            let graph = attack_graph(&q)?;
            if dot {
                print!("{}", attack_graph_dot(&graph));
            } else if json {
                let edges: Vec<_> = graph
                    .edges()
                    .map(|e| {
                        json!({
                            "from": graph.atoms()[e.from].to_string(),
                            "to": graph.atoms()[e.to].to_string(),
                            "strength": format!("{:?}", e.strength).to_lowercase(),
                        })
                    })
                    .collect();
                println!(
                    "{}",
                    json!({"command": "attack-graph", "query": q.render(), "edges": edges})
                );
            } else {
                for e in graph.edges() {
                    println!(
                        "{} -> {} [{}]",
                        graph.atoms()[e.from],
                        graph.atoms()[e.to],
                        format!("{:?}", e.strength).to_lowercase()
                    );
                }
            }
            Ok(0)
        }
        Command::JoinTree { query, dot } => {
            let q = query.load()?;
            match join_tree(&q) {
                Err(_) => {
                    println!("CYCLIC");
                    Ok(0)
                }
                Ok(tree) => {
                    if dot {
                        print!("{}", join_tree_dot(&tree));
                    } else {
                        for (i, j, label) in tree.edges() {
                            let vars = label
                                .iter()
                                .map(|v| v.0.clone())
                                .collect::<Vec<_>>()
                                .join(",");
                            println!("{} -- {} [{}]", tree.atoms()[*i], tree.atoms()[*j], vars);
                        }
                    }
                    Ok(0)
                }
            }
        }
        Command::Purify {
            query,
            database,
            output,
        } => {
            let q = query.load()?;
            let db = load_database(&database)?;
            let purified = purify(&db, &q);
            write_or_print(&purified.render(), &output)?;
            Ok(0)
        }
        Command::Count {
            query,
            database,
            json,
        } => {
            let q = query.load()?;
            let db = load_database(&database)?;
            let (satisfying, total) = count_satisfying_repairs(&db, &q, &limits)?;
            if json {
                println!(
                    "{}",
                    json!({
                        "command": "count",
                        "query": q.render(),
                        "database": database.display().to_string(),
                        "satisfying": satisfying.to_string(),
                        "total": total.to_string(),
                    })
                );
            } else {
                println!("{satisfying}/{total}");
            }
            Ok(0)
        }
        Command::Issafe { query, json } => {
            let q = query.load()?;
            let trace = is_safe(&q)?;
            if json {
                println!(
                    "{}",
                    json!({
                        "command": "issafe",
                        "query": q.render(),
                        "safe": trace.safe,
                        "steps": trace.steps.iter().map(|s| json!({
                            "rule": s.rule.to_string(),
                            "on": s.before.render(),
                        })).collect::<Vec<_>>(),
                        "stuck": trace.stuck.as_ref().map(|q| q.render()),
                    })
                );
            } else {
                println!("{}", if trace.safe { "SAFE" } else { "UNSAFE" });
                for step in &trace.steps {
                    println!("  {} on {}", step.rule, step.before);
                }
                if let Some(stuck) = &trace.stuck {
                    println!("stuck at: {stuck}");
                }
            }
            Ok(0)
        }
        Command::Prob {
            query,
            prob_database,
            exact,
            is_one,
            json,
        } => {
            if exact == is_one {
                return Err(AppError::Usage(
                    "provide exactly one of --exact and --is-one".into(),
                ));
            }
            let q = query.load()?;
            let pdb = load_bid_database(&prob_database)?;
            if exact {
                let p = prob_bruteforce(&pdb, &q, &limits)?;
                if json {
                    println!(
                        "{}",
                        json!({
                            "command": "prob",
                            "mode": "exact",
                            "query": q.render(),
                            "numerator": p.numer().to_string(),
                            "denominator": p.denom().to_string(),
                        })
                    );
                } else {
                    println!("{}/{}", p.numer(), p.denom());
                }
            } else {
                let one = prob_is_one(&pdb, &q, &limits)?;
                if json {
                    println!(
                        "{}",
                        json!({
                            "command": "prob",
                            "mode": "is-one",
                            "query": q.render(),
                            "is_one": one,
                        })
                    );
                } else {
                    println!("{}", if one { "Pr(q) = 1" } else { "Pr(q) < 1" });
                }
            }
            Ok(0)
        }
        Command::Reduce { gadget } => match gadget {
            ReduceCommand::StrongCycle {
                query,
                database,
                output,
            } => {
                let q = query.load()?;
                let db0 = load_database(&database)?;
                let verdict = classify_complexity(&q);
                let ComplexityVerdict::ConpComplete { strong_pair } = verdict else {
                    return Err(AppError::Lib(cqa::Error::PreconditionViolated(format!(
                        "query has no strong 2-cycle: {}",
                        verdict.label()
                    ))));
                };
                let reduction = strong_cycle_reduce(&db0, &q, &strong_pair.0, &strong_pair.1)?;
                write_or_print(&reduction.output.render(), &output)?;
                Ok(0)
            }
            ReduceCommand::CkAck { k, database, output } => {
                let db = load_database(&database)?;
                let pattern = canonical_ck_pattern(k);
                check_pattern_schema(&db, &pattern, true)?;
                let (augmented, _) = ck_augmentation(&db, &pattern, &limits)?;
                write_or_print(&augmented.render(), &output)?;
                Ok(0)
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
