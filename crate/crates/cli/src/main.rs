use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use dialogic::entail::{self, Obstacle, Problem, Verdict};
use dialogic::formula::{polarity_table, Formula};
use dialogic::gkk::{prove, Derivation, SearchLimits, Sequent};
use dialogic::json::{parse_artifact, Artifact, DerivationJson, StrategyJson};
use dialogic::parse::{parse_formula, parse_sequent};
use dialogic::translate::{derivation_to_strategy, find_winning_strategy, strategize, strategy_to_derivation};
use dialogic::{Answer, Strategy};
use serde_json::json;

#[derive(Parser)]
#[command(name = "dialogic", version, about = "Dialogical games and strategic proof search for classical first-order logic")]
struct Cli {
    /// Maximum derivation depth.
    #[arg(long, global = true, default_value_t = SearchLimits::default().max_depth)]
    depth: usize,
    /// Fresh variables offered as instantiation terms.
    #[arg(long, global = true, default_value_t = SearchLimits::default().max_fresh_vars)]
    fresh: usize,
    /// Instantiations allowed per quantified formula on a branch.
    #[arg(long, global = true, default_value_t = SearchLimits::default().max_instantiations_per_formula)]
    inst: usize,
    /// Wall-clock budget per proof search.
    #[arg(long = "timeout-ms", global = true, default_value_t = SearchLimits::default().time_budget_ms)]
    timeout_ms: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Print a formula in canonical form with its polarity table.
    Parse { formula: String },
    /// Search for a strategic derivation of a formula or `F, G |- H` sequent.
    Prove {
        goal: String,
        /// Report whether the derivation satisfies the strategic restriction.
        #[arg(long)]
        strategic_check: bool,
    },
    /// Search for a winning Proponent strategy.
    Strategy { formula: String },
    /// Convert between strategies and derivations.
    Translate {
        #[arg(long, value_name = "STRATEGY_JSON", group = "direction")]
        to_derivation: Option<PathBuf>,
        #[arg(long, value_name = "DERIVATION_JSON", group = "direction")]
        to_strategy: Option<PathBuf>,
        #[arg(long, value_name = "DERIVATION_JSON", group = "direction")]
        strategize: Option<PathBuf>,
    },
    /// Validate a game, strategy or derivation file.
    Check { file: PathBuf },
    /// Decide whether hypotheses entail a conclusion.
    Entail {
        #[arg(short = 'H', long = "hypothesis", required = true)]
        hypotheses: Vec<String>,
        #[arg(short = 'C', long = "conclusion")]
        conclusion: String,
    },
    /// Run an entailment suite file.
    Suite { file: PathBuf },
    /// Start the game server.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: std::net::SocketAddr,
        /// Idle minutes before a session is dropped.
        #[arg(long, default_value_t = 30)]
        idle_minutes: u64,
    },
}

impl Cli {
    fn limits(&self) -> SearchLimits {
        SearchLimits {
            max_depth: self.depth,
            max_fresh_vars: self.fresh,
            max_instantiations_per_formula: self.inst,
            time_budget_ms: self.timeout_ms,
        }
    }
}

fn pretty<T: serde::Serialize>(x: &T) -> String {
    serde_json::to_string_pretty(x).expect("serializable")
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn formula(text: &str) -> Result<Formula> {
    parse_formula(text).with_context(|| format!("parsing `{text}`"))
}

fn derivation_file(path: &Path) -> Result<Derivation> {
    match parse_artifact(&read(path)?)? {
        Artifact::Derivation(d) => Ok(d),
        _ => bail!("{} is not a derivation", path.display()),
    }
}

fn strategy_file(path: &Path) -> Result<Strategy> {
    match parse_artifact(&read(path)?)? {
        Artifact::Strategy(s) => Ok(s),
        _ => bail!("{} is not a strategy", path.display()),
    }
}

fn parse_cmd(cli: &Cli, text: &str) -> Result<ExitCode> {
    let f = formula(text)?;
    let table = polarity_table(&f);
    if cli.format == Format::Json {
        println!("{}", pretty(&json!({ "formula": f.to_string(), "free": f.free_variables(), "polarity": table })));
        return Ok(ExitCode::SUCCESS);
    }
    println!("{f}");
    for (p, pol) in &table.entries {
        if !pol.occurs_positive && !pol.occurs_negative {
            continue;
        }
        let sign = match (pol.occurs_positive, pol.occurs_negative) {
            (true, true) => "+-",
            (true, false) => "+",
            _ => "-",
        };
        println!("{p}\t{sign}");
    }
    Ok(ExitCode::SUCCESS)
}

fn prove_cmd(cli: &Cli, goal: &str, strategic_check: bool) -> Result<ExitCode> {
    let sequent = if goal.contains("|-") {
        parse_sequent(goal).with_context(|| format!("parsing `{goal}`"))?
    } else {
        Sequent::goal(formula(goal)?)
    };
    match prove(&sequent, &cli.limits())? {
        Some(d) => {
            println!("{}", pretty(&DerivationJson::from(&d)));
            if strategic_check {
                eprintln!("strategic: {}", d.is_strategic());
            }
        }
        None => println!("NONE"),
    }
    Ok(ExitCode::SUCCESS)
}

fn strategy_cmd(cli: &Cli, text: &str) -> Result<ExitCode> {
    match find_winning_strategy(&formula(text)?, &cli.limits())? {
        Some(s) => println!("{}", pretty(&StrategyJson::from(&s))),
        None => println!("NONE"),
    }
    Ok(ExitCode::SUCCESS)
}

fn translate_cmd(cli: &Cli, to_derivation: &Option<PathBuf>, to_strategy: &Option<PathBuf>, fix: &Option<PathBuf>) -> Result<ExitCode> {
    let out = match (to_derivation, to_strategy, fix) {
        (Some(p), _, _) => pretty(&DerivationJson::from(&strategy_to_derivation(&strategy_file(p)?)?)),
        (_, Some(p), _) => pretty(&StrategyJson::from(&derivation_to_strategy(&derivation_file(p)?)?)),
        (_, _, Some(p)) => pretty(&DerivationJson::from(&strategize(&derivation_file(p)?, &cli.limits())?)),
        _ => bail!("choose one of --to-derivation, --to-strategy, --strategize"),
    };
    println!("{out}");
    Ok(ExitCode::SUCCESS)
}

fn check_cmd(cli: &Cli, path: &Path) -> Result<ExitCode> {
    let (kind, report, ok) = match parse_artifact(&read(path)?)? {
        Artifact::Game(g) => {
            let winner = g.winner(&g.term_universe());
            ("game", json!({ "moves": g.len(), "winner": format!("{winner:?}") }), true)
        }
        Artifact::Strategy(s) => match s.validate() {
            Ok(()) => ("strategy", json!({ "winning": s.is_winning(), "size": s.size() }), true),
            Err(e) => ("strategy", json!({ "error": e.to_string() }), false),
        },
        Artifact::Derivation(d) => match d.validate() {
            Ok(()) => {
                let fault = d.strategic_violation().map(|v| format!("{:?} at {:?}", v.fault, v.path));
                ("derivation", json!({ "strategic": fault.is_none(), "fault": fault }), true)
            }
            Err(e) => ("derivation", json!({ "error": e.to_string() }), false),
        },
    };
    if cli.format == Format::Json {
        println!("{}", pretty(&json!({ "kind": kind, "valid": ok, "report": report })));
    } else {
        let verdict = if ok { "valid" } else { "invalid" };
        println!("{verdict} {kind}: {report}");
    }
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(3) })
}

fn verdict_json(v: &Verdict) -> serde_json::Value {
    let obstacle = |o: &Obstacle| match o {
        Obstacle::Polarity(c) => json!({ "polarity": c }),
        Obstacle::BoundsExhausted { timed_out } => json!({ "bounds_exhausted": { "timed_out": timed_out } }),
    };
    match v {
        Verdict::Yes(s) | Verdict::No(s) => json!({ "answer": v.answer(), "strategy": StrategyJson::from(s) }),
        Verdict::Unknown { positive, negative } => json!({
            "answer": v.answer(),
            "positive": obstacle(positive),
            "negative": obstacle(negative),
        }),
    }
}

fn entail_cmd(cli: &Cli, hypotheses: &[String], conclusion: &str) -> Result<ExitCode> {
    let hs: Vec<&str> = hypotheses.iter().map(String::as_str).collect();
    let problem = Problem::from_text("cli", &hs, conclusion)?;
    let verdict = entail::decide(&problem, &cli.limits())?;
    if cli.format == Format::Json {
        println!("{}", pretty(&verdict_json(&verdict)));
    } else {
        println!("{}", format!("{:?}", verdict.answer()).to_lowercase());
        println!("{}", pretty(&verdict_json(&verdict)));
    }
    Ok(ExitCode::from(match verdict.answer() {
        Answer::Yes => 0,
        Answer::No => 1,
        Answer::Unknown => 2,
    }))
}

fn suite_cmd(cli: &Cli, path: &Path) -> Result<ExitCode> {
    let report = entail::run_suite(path, &cli.limits())?;
    let rows: Vec<_> = report
        .problems
        .iter()
        .map(|p| {
            let got = match &p.verdict {
                Ok(v) => json!(v.answer()),
                Err(e) => json!({ "error": e.to_string() }),
            };
            json!({ "id": p.id, "expected": p.expected, "got": got, "match": p.matches() })
        })
        .collect();
    if cli.format == Format::Json {
        println!("{}", pretty(&json!({ "problems": rows, "matched": report.matched(), "total": report.problems.len() })));
    } else {
        for (p, row) in report.problems.iter().zip(&rows) {
            let mark = if p.matches() { "ok  " } else { "FAIL" };
            let expected = p.expected.map(|e| format!("{e:?}").to_lowercase()).unwrap_or_else(|| "-".into());
            let got = row["got"].as_str().map(str::to_string).unwrap_or_else(|| row["got"].to_string());
            println!("{mark} {}\texpected {expected}\tgot {got}", p.id);
        }
        println!("{}/{} matched", report.matched(), report.problems.len());
    }
    eprintln!("suite finished in {} ms", report.elapsed_ms);
    Ok(if report.all_match() { ExitCode::SUCCESS } else { ExitCode::from(3) })
}

fn serve_cmd(cli: &Cli, addr: std::net::SocketAddr, idle_minutes: u64) -> Result<ExitCode> {
    let state = dialogic_server::AppState::new(std::time::Duration::from_secs(idle_minutes * 60), cli.limits());
    let rt = tokio::runtime::Runtime::new()?;
    eprintln!("listening on http://{addr}/v1");
    rt.block_on(dialogic_server::serve(addr, state))?;
    Ok(ExitCode::SUCCESS)
}

fn run(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Parse { formula } => parse_cmd(cli, formula),
        Command::Prove { goal, strategic_check } => prove_cmd(cli, goal, *strategic_check),
        Command::Strategy { formula } => strategy_cmd(cli, formula),
        Command::Translate {
            to_derivation,
            to_strategy,
            strategize,
        } => translate_cmd(cli, to_derivation, to_strategy, strategize),
        Command::Check { file } => check_cmd(cli, file),
        Command::Entail { hypotheses, conclusion } => entail_cmd(cli, hypotheses, conclusion),
        Command::Suite { file } => suite_cmd(cli, file),
        Command::Serve { addr, idle_minutes } => serve_cmd(cli, *addr, *idle_minutes),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(3);
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
