use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use janson::generate::{generate, FamilyKind, Graph, ProbSpec};
use janson::instance::{parse_instance, write_instance, DependencySpec, Instance};
use janson::oracle::DEFAULT_INEQUALITY_TOLERANCE;
use janson::prob::DEFAULT_MAX_EXACT_SUPPORT;
use janson::report::{render_machine, render_table, run_compute, run_verify, RunOptions};

#[derive(Parser)]
#[command(
    name = "janson",
    version,
    about = "Lower-tail bounds for monotone events on product spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Summary quantities and every applicable bound.
    Compute(RunArgs),
    /// Bounds plus exhaustive-enumeration checks of each of them.
    Verify(RunArgs),
    /// Write a generated instance file to stdout.
    Generate {
        #[command(subcommand)]
        kind: GenerateKind,
        #[arg(long, default_value_t = 0, global = true)]
        seed: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Instance file; reads stdin when omitted or `-`.
    input: Option<PathBuf>,
    /// Comma-separated fractions of mu at which to evaluate the tail bounds.
    #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,0.75,1")]
    t_grid: Vec<f64>,
    /// Enables Monte Carlo for supports beyond the exact cap.
    #[arg(long)]
    mc_samples: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_EXACT_SUPPORT)]
    max_exact_support: usize,
    /// Slack allowed in inequality checks.
    #[arg(long, default_value_t = DEFAULT_INEQUALITY_TOLERANCE)]
    tolerance: f64,
    /// Overrides the relation given in the instance file.
    #[arg(long, value_enum)]
    dependency: Option<DependencyArg>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Proceed even when the dependency relation fails validation.
    #[arg(long)]
    force: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum DependencyArg {
    Support,
    Exact,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Machine,
}

#[derive(Subcommand)]
enum GenerateKind {
    /// One principal event per copy of a pattern graph in K_n.
    SubgraphCount {
        /// triangle, k<r>, c<r>, p<r>, star<r>, or an edge list like 0-1,1-2
        #[arg(long, default_value = "triangle")]
        graph: String,
        /// Vertices of the host complete graph.
        #[arg(long)]
        vertices: usize,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
    },
    /// Events "at least q of r coordinates are 1" on random r-sets.
    Threshold {
        #[arg(long)]
        coords: usize,
        #[arg(long, default_value_t = 1)]
        events: usize,
        #[arg(long)]
        r: usize,
        /// Defaults to a strict majority of r.
        #[arg(long)]
        quota: Option<usize>,
        #[command(flatten)]
        p: ProbArgs,
    },
    /// Events that are unions of random min-sets.
    RandomMonotoneDnf {
        #[arg(long)]
        coords: usize,
        #[arg(long)]
        events: usize,
        /// Min-set count range LO..HI (or a single number).
        #[arg(long, default_value = "1..3", value_parser = parse_range)]
        minsets: (usize, usize),
        /// Min-set size range LO..HI (or a single number).
        #[arg(long, default_value = "1..3", value_parser = parse_range)]
        minset_size: (usize, usize),
        #[command(flatten)]
        p: ProbArgs,
    },
}

#[derive(Args)]
struct ProbArgs {
    /// Probability of every coordinate.
    #[arg(long, conflicts_with = "p_range")]
    p: Option<f64>,
    /// Per-coordinate probabilities drawn uniformly from LO..HI.
    #[arg(long, value_parser = parse_prob_range)]
    p_range: Option<(f64, f64)>,
}

impl ProbArgs {
    fn spec(&self) -> ProbSpec {
        match (self.p, self.p_range) {
            (_, Some((lo, hi))) => ProbSpec::Uniform(lo, hi),
            (Some(p), None) => ProbSpec::Fixed(p),
            (None, None) => ProbSpec::Fixed(0.5),
        }
    }
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let num = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("{x:?}: {e}"));
    match s.split_once("..") {
        Some((lo, hi)) => Ok((num(lo)?, num(hi.trim_start_matches('='))?)),
        None => num(s).map(|x| (x, x)),
    }
}

fn parse_prob_range(s: &str) -> Result<(f64, f64), String> {
    let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
    let (lo, hi) = s.split_once("..").ok_or("expected LO..HI")?;
    Ok((num(lo)?, num(hi)?))
}

fn read_input(path: Option<&PathBuf>) -> io::Result<String> {
    let mut text = String::new();
    match path {
        Some(p) if p.as_os_str() != "-" => text = std::fs::read_to_string(p)?,
        _ => {
            io::stdin().read_to_string(&mut text)?;
        }
    }
    Ok(text)
}

fn load(args: &RunArgs) -> Result<(Instance, RunOptions), String> {
    let text = read_input(args.input.as_ref()).map_err(|e| format!("cannot read input: {e}"))?;
    let instance = parse_instance(&text).map_err(|e| e.to_string())?;
    if args.mc_samples == Some(0) {
        return Err("--mc-samples must be at least 1".into());
    }
    if args.tolerance.is_nan() || args.tolerance < 0.0 {
        return Err("--tolerance must be nonnegative".into());
    }
    let opts = RunOptions {
        t_fractions: args.t_grid.clone(),
        mc_samples: args.mc_samples,
        seed: args.seed,
        max_exact_support: args.max_exact_support,
        tolerance: args.tolerance,
        dependency: args.dependency.map(|d| match d {
            DependencyArg::Support => DependencySpec::Support,
            DependencyArg::Exact => DependencySpec::Exact,
        }),
        force: args.force,
    };
    Ok((instance, opts))
}

fn emit(text: &str) -> ExitCode {
    let mut out = io::stdout().lock();
    if out
        .write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .is_err()
    {
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}

fn fail(code: i32, msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code as u8)
}

fn run(args: &RunArgs, verify: bool) -> ExitCode {
    let (instance, opts) = match load(args) {
        Ok(x) => x,
        Err(msg) => return fail(1, &msg),
    };
    let result = if verify {
        run_verify(&instance, &opts)
    } else {
        run_compute(&instance, &opts)
    };
    let doc = match result {
        Ok(doc) => doc,
        Err(e) => return fail(e.exit_code(), &e.to_string()),
    };
    let text = match args.format {
        Format::Table => render_table(&doc),
        Format::Machine => render_machine(&doc),
    };
    let code = emit(&text);
    if verify && !doc.passed {
        return ExitCode::from(2);
    }
    code
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match cli.command {
        Command::Compute(args) => run(&args, false),
        Command::Verify(args) => run(&args, true),
        Command::Generate { kind, seed } => {
            let kind = match kind {
                GenerateKind::SubgraphCount { graph, vertices, p } => match Graph::parse(&graph) {
                    Ok(graph) => FamilyKind::SubgraphCount { graph, vertices, p },
                    Err(e) => return fail(1, &e.to_string()),
                },
                GenerateKind::Threshold {
                    coords,
                    events,
                    r,
                    quota,
                    p,
                } => FamilyKind::Threshold {
                    coords,
                    events,
                    r,
                    quota,
                    p: p.spec(),
                },
                GenerateKind::RandomMonotoneDnf {
                    coords,
                    events,
                    minsets,
                    minset_size,
                    p,
                } => FamilyKind::RandomMonotoneDnf {
                    coords,
                    events,
                    minsets,
                    minset_size,
                    p: p.spec(),
                },
            };
            match generate(&kind, seed) {
                Ok(instance) => emit(&write_instance(&instance)),
                Err(e) => fail(1, &e.to_string()),
            }
        }
    }
}
