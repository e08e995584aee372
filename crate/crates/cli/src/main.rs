//! `essential-rewrite`: reduce, factorize and inspect λ-terms, and run the
//! property checks.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 fuel exhausted,
//! 3 property failed, 4 property undecided within bounds.

mod config;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use essential_rewrite::engine::check::{
    check_property, run_sweep, CheckConfig, Property, Report, Status, Sweep,
};
use essential_rewrite::engine::{
    factorize, normalize, normalize_base, EssentialSystem, Outcome, StepView, Trace, TraceView,
};
use essential_rewrite::reduction::{least_level, level_indexed_steps, step_at};
use essential_rewrite::term::{parse_with, Definitions};
use essential_rewrite::{Base, Flavor, Level, Position, Step, StepKind, SystemId, Term};

use config::{CliConfig, OutputFormat};

#[derive(Parser, Debug)]
#[command(name = "essential-rewrite", version, about = "Essential and inessential reduction in the λ-calculus")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Step limit for reduction.
    #[arg(long, global = true)]
    fuel: Option<usize>,
    /// Largest term size enumerated by `check`.
    #[arg(long, global = true)]
    size: Option<usize>,
    /// Node budget for reduction-graph exploration.
    #[arg(long, global = true)]
    budget: Option<usize>,
    #[arg(long, global = true, value_enum)]
    output: Option<OutputFormat>,
    /// Seed for randomized checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for `check`.
    #[arg(long, global = true, value_name = "N")]
    parallel: Option<usize>,
    /// Read I, K, S, D and Omega as ordinary variables.
    #[arg(long, global = true)]
    no_prelude: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse a term and print it in canonical form.
    Parse { term: String },
    /// Reduce a term with a strategy and print the trace.
    Reduce {
        term: String,
        /// head, weak-cbv, lo, ll, beta or betav.
        #[arg(long, default_value = "lo")]
        system: String,
    },
    /// Factorize a reduction sequence read from a file.
    Factorize {
        file: PathBuf,
        #[arg(long, default_value = "head")]
        system: String,
    },
    /// Print the least level of a term and the level of each redex.
    Level { term: String },
    /// Run a property check or a randomized sweep.
    Check {
        /// A property (merge, split, indexed-split, persistence, diamond,
        /// determinism, fullness, decomposition, ll-monotone, ll-invariant,
        /// ll-meaning, shape-preservation, factorization, normalization) or a
        /// sweep (subst-index, subst-level, split-index).
        property: String,
        /// Defaults to every system the property applies to.
        #[arg(long)]
        system: Option<String>,
        /// cbn or cbv for the sweeps; defaults to both.
        #[arg(long)]
        flavor: Option<String>,
        /// Samples per randomized sweep.
        #[arg(long)]
        samples: Option<usize>,
    },
}

/// An error reported on stderr with exit code 1.
struct Fatal(String);

impl<T: std::fmt::Display> From<T> for Fatal {
    fn from(e: T) -> Self {
        Fatal(e.to_string())
    }
}

struct Ctx {
    cfg: CliConfig,
    defs: Definitions,
}

impl Ctx {
    fn parse_term(&self, text: &str) -> Result<Term, Fatal> {
        parse_with(text, &self.defs).map_err(|e| Fatal(format!("cannot parse `{text}`: {e}")))
    }

    fn emit<T: Serialize>(&self, value: &T, text: impl FnOnce() -> String) {
        match self.cfg.output {
            OutputFormat::Json => println!("{}", serde_json::to_string(value).expect("serializable")),
            OutputFormat::Text => print!("{}", text()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Fatal(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<u8, Fatal> {
    let mut cfg = CliConfig::from_env().map_err(Fatal)?;
    if let Some(v) = cli.fuel {
        cfg.fuel = v;
    }
    if let Some(v) = cli.size {
        cfg.size_bound = v;
    }
    if let Some(v) = cli.budget {
        cfg.node_budget = v;
    }
    if let Some(v) = cli.output {
        cfg.output = v;
    }
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if let Some(v) = cli.parallel {
        cfg.parallel = v;
    }
    if cfg.fuel == 0 || cfg.size_bound == 0 || cfg.node_budget == 0 || cfg.parallel == 0 {
        return Err(Fatal("--fuel, --size, --budget and --parallel must be positive".into()));
    }
    let defs = if cli.no_prelude { Definitions::new() } else { Definitions::standard() };
    let ctx = Ctx { cfg, defs };
    match cli.command {
        Command::Parse { term } => cmd_parse(&ctx, &term),
        Command::Reduce { term, system } => cmd_reduce(&ctx, &term, &system),
        Command::Factorize { file, system } => cmd_factorize(&ctx, &file, &system),
        Command::Level { term } => cmd_level(&ctx, &term),
        Command::Check { property, system, flavor, samples } => {
            let mut ctx = ctx;
            if let Some(s) = samples {
                ctx.cfg.samples = s;
            }
            cmd_check(&ctx, &property, system.as_deref(), flavor.as_deref())
        }
    }
}

fn cmd_parse(ctx: &Ctx, text: &str) -> Result<u8, Fatal> {
    let t = ctx.parse_term(text)?;
    #[derive(Serialize)]
    struct Parsed {
        term: String,
        size: usize,
        closed: bool,
        normal: bool,
    }
    let out = Parsed { term: t.to_string(), size: t.size(), closed: t.is_closed(), normal: t.is_normal() };
    ctx.emit(&out, || format!("{}\n", out.term));
    Ok(0)
}

enum Strategy {
    Essential(EssentialSystem),
    Base(Base),
}

fn strategy(name: &str) -> Result<Strategy, Fatal> {
    match name {
        "beta" => Ok(Strategy::Base(Base::Beta)),
        "betav" => Ok(Strategy::Base(Base::BetaV)),
        _ => Ok(Strategy::Essential(EssentialSystem::new(name.parse::<SystemId>()?))),
    }
}

fn system(name: &str) -> Result<EssentialSystem, Fatal> {
    Ok(EssentialSystem::new(name.parse::<SystemId>()?))
}

fn step_line(i: usize, step: &Step, term: &str, show_level: bool) -> String {
    let level = if show_level { format!(" level {}", step.level) } else { String::new() };
    format!("{i} {} {}{level}: {term}\n", step.kind.tag(), step.position)
}

fn trace_text(tr: &TraceView, show_level: bool, indent: &str) -> String {
    let mut s = format!("{indent}start: {}\n", tr.start);
    for (i, v) in tr.steps.iter().enumerate() {
        s.push_str(indent);
        s.push_str(&step_line(i + 1, &v.step, &v.term, show_level));
    }
    s
}

fn count_steps(n: usize) -> String {
    format!("{n} step{}", if n == 1 { "" } else { "s" })
}

fn outcome_name(o: Outcome) -> &'static str {
    match o {
        Outcome::NormalFormReached => "normal-form",
        Outcome::EssentialNormal => "essential-normal",
        Outcome::FuelExhausted => "fuel-exhausted",
    }
}

fn cmd_reduce(ctx: &Ctx, text: &str, system_name: &str) -> Result<u8, Fatal> {
    let t = ctx.parse_term(text)?;
    let strat = strategy(system_name)?;
    let (tr, outcome) = match &strat {
        Strategy::Essential(sys) => normalize(&t, *sys, ctx.cfg.fuel),
        Strategy::Base(base) => normalize_base(&t, *base, ctx.cfg.fuel),
    };
    let show_level = matches!(strat, Strategy::Essential(s) if s.id == SystemId::LeastLevel);
    #[derive(Serialize)]
    struct Reduced {
        system: String,
        #[serde(flatten)]
        trace: TraceView,
        end: String,
        outcome: Outcome,
    }
    let out = Reduced {
        system: system_name.to_string(),
        trace: tr.view(),
        end: tr.end().to_string(),
        outcome,
    };
    ctx.emit(&out, || {
        let mut s = trace_text(&out.trace, show_level, "");
        s.push_str(&format!("outcome: {} after {}\n", outcome_name(outcome), count_steps(tr.len())));
        s
    });
    Ok(if outcome == Outcome::FuelExhausted { 2 } else { 0 })
}

/// Start term and step positions, each with its line number.
fn read_sequence(text: &str, ctx: &Ctx) -> Result<(Term, Vec<(usize, Position)>), Fatal> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| {
        let l = l.trim();
        !l.is_empty() && !l.starts_with('#')
    });
    let Some((n, first)) = lines.next() else {
        return Err(Fatal("line 1: expected a start term".into()));
    };
    let start = parse_with(first.trim(), &ctx.defs).map_err(|e| Fatal(format!("line {}: {e}", n + 1)))?;
    let mut steps = Vec::new();
    for (n, line) in lines {
        let mut words = line.split_whitespace();
        let pos = match (words.next(), words.next(), words.next()) {
            (Some("pos"), Some(path), None) => {
                path.parse::<Position>().map_err(|e| Fatal(format!("line {}: {e}", n + 1)))?
            }
            _ => return Err(Fatal(format!("line {}: expected `pos <path>`, got `{}`", n + 1, line.trim()))),
        };
        steps.push((n + 1, pos));
    }
    Ok((start, steps))
}

fn cmd_factorize(ctx: &Ctx, file: &PathBuf, system_name: &str) -> Result<u8, Fatal> {
    let sys = system(system_name)?;
    let text = fs::read_to_string(file).map_err(|e| Fatal(format!("cannot read {}: {e}", file.display())))?;
    let (start, steps) = read_sequence(&text, ctx)?;
    let mut cur = start.clone();
    for (line, pos) in &steps {
        cur = step_at(&cur, pos, sys.base).map_err(|e| Fatal(format!("line {line}: {e} in `{cur}`")))?;
    }
    let positions: Vec<Position> = steps.iter().map(|(_, p)| p.clone()).collect();
    let input = Trace::from_positions(start, &positions, sys).map_err(|e| Fatal(e.to_string()))?;
    let f = factorize(&input, sys).map_err(|e| Fatal(format!("factorization failed: {e}")))?;
    let view = f.view();
    let show_level = sys.id == SystemId::LeastLevel;
    ctx.emit(&view, || {
        format!(
            "essential ({}):\n{}inessential ({}):\n{}",
            count_steps(f.essential.len()),
            trace_text(&view.essential, show_level, "  "),
            count_steps(f.inessential.len()),
            trace_text(&view.inessential, show_level, "  "),
        )
    });
    Ok(0)
}

fn cmd_level(ctx: &Ctx, text: &str) -> Result<u8, Fatal> {
    let t = ctx.parse_term(text)?;
    #[derive(Serialize)]
    struct Levels {
        term: String,
        least_level: Level,
        steps: Vec<StepView>,
    }
    let least = least_level(&t);
    let steps: Vec<StepView> = level_indexed_steps(&t)
        .into_iter()
        .map(|(step, r)| {
            let kind = if step.level == least { StepKind::Essential } else { StepKind::Inessential };
            StepView { step: Step { kind, ..step }, term: r.to_string() }
        })
        .collect();
    let out = Levels { term: t.to_string(), least_level: least, steps };
    ctx.emit(&out, || {
        let mut s = format!("least level: {least}\n");
        for (i, v) in out.steps.iter().enumerate() {
            s.push_str(&step_line(i + 1, &v.step, &v.term, true));
        }
        s
    });
    Ok(0)
}

fn flavors(name: Option<&str>) -> Result<Vec<Flavor>, Fatal> {
    match name {
        None => Ok(vec![Flavor::CbN, Flavor::CbV]),
        Some(s) => match s.parse::<Flavor>()? {
            f @ (Flavor::CbN | Flavor::CbV) => Ok(vec![f]),
            f => Err(Fatal(format!("sweeps take the cbn or cbv flavor, not {f}"))),
        },
    }
}

fn cmd_check(ctx: &Ctx, name: &str, system_name: Option<&str>, flavor: Option<&str>) -> Result<u8, Fatal> {
    let cfg = CheckConfig {
        size_bound: ctx.cfg.size_bound,
        fuel: ctx.cfg.fuel,
        node_budget: ctx.cfg.node_budget,
        depth_budget: ctx.cfg.depth_budget,
        seed: ctx.cfg.seed,
        samples: ctx.cfg.samples,
        ..CheckConfig::default()
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(ctx.cfg.parallel).build()?;
    let reports: Vec<Report> = if let Ok(sweep) = name.parse::<Sweep>() {
        let fs = match sweep {
            Sweep::SubstLevel => vec![Flavor::Leveled],
            _ => flavors(flavor)?,
        };
        pool.install(|| fs.into_iter().map(|f| run_sweep(sweep, f, &cfg)).collect())
    } else {
        let prop: Property = name.parse()?;
        let systems: Vec<EssentialSystem> = match system_name {
            Some(s) => vec![system(s)?],
            None => SystemId::ALL
                .into_iter()
                .filter(|&id| prop.applies_to(id))
                .map(EssentialSystem::new)
                .collect(),
        };
        let mut out = Vec::new();
        for sys in systems {
            out.push(pool.install(|| check_property(prop, sys, &cfg))?);
        }
        out
    };
    for r in &reports {
        ctx.emit(r, || format!("{r}\n"));
    }
    let worst = reports.iter().map(|r| r.result);
    Ok(if worst.clone().any(|s| s == Status::Fail) {
        3
    } else if worst.into_iter().any(|s| s == Status::Inconclusive) {
        4
    } else {
        0
    })
}
