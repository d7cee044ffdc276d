use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::warn;

use tokensched::approx::solve_tc;
use tokensched::brute::{brute_opt_with, BruteConfig};
use tokensched::gen::erdos_renyi;
use tokensched::hardness::{mds_apx, psi_transform, ApproxScheduler, BruteScheduler, Scheduler};
use tokensched::optcomplete::{baseline_lengths, build_tree, opt_complete};
use tokensched::{
    lower_bounds, simulate, validate_schedule, Error, Graph, NetworkParams, Schedule,
};

#[derive(Parser)]
#[command(name = "tokensched", version, about = "Aggregation schedules in the token network model")]
struct Cli {
    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Do not print the run report.
    #[arg(long, global = true)]
    quiet: bool,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone, Copy)]
struct Costs {
    #[arg(long)]
    tc: usize,
    #[arg(long)]
    tm: usize,
}

#[derive(Args, Clone, Copy)]
struct Seed {
    #[arg(long, env = "TOKENSCHED_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Optimal schedule on the complete graph K_n.
    Complete {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        costs: Costs,
    },
    /// Approximate schedule for an arbitrary connected graph.
    Approx {
        #[arg(long)]
        graph: PathBuf,
        #[command(flatten)]
        costs: Costs,
        #[command(flatten)]
        seed: Seed,
        /// Per-iteration CSV.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Exhaustive optimum for tiny graphs.
    Brute {
        #[arg(long)]
        graph: PathBuf,
        #[command(flatten)]
        costs: Costs,
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long, default_value_t = BruteConfig::default().max_nodes)]
        max_nodes: usize,
        #[arg(long, default_value_t = BruteConfig::default().max_cost)]
        max_cost: usize,
        #[arg(long, default_value_t = BruteConfig::default().max_expansions)]
        max_expansions: u64,
    },
    /// Check a schedule file; exit 1 if it is invalid.
    Validate {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        schedule: PathBuf,
        #[command(flatten)]
        costs: Costs,
    },
    /// Print the token placement at every round boundary.
    Simulate {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        schedule: PathBuf,
        #[command(flatten)]
        costs: Costs,
    },
    /// Aggregation tree T(R) as a parent array.
    Tree {
        #[arg(long = "R")]
        rounds: usize,
        #[command(flatten)]
        costs: Costs,
    },
    /// Schedule lengths on K_n for n = 1..=nmax as CSV.
    Stats {
        #[arg(long)]
        nmax: usize,
        #[command(flatten)]
        costs: Costs,
    },
    /// Hardness gadgets.
    Gadget {
        #[command(subcommand)]
        kind: GadgetCmd,
    },
    /// Dominating set through the gadget reduction.
    Mds {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long, value_parser = ["brute", "approx"])]
        scheduler: String,
        #[command(flatten)]
        seed: Seed,
        /// Expansion budget per brute-force call.
        #[arg(long, default_value_t = 20_000_000)]
        max_expansions: u64,
    },
    /// Generate a graph file.
    Gen {
        #[command(subcommand)]
        kind: GenCmd,
    },
}

#[derive(Subcommand)]
enum GadgetCmd {
    Psi {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        tm: usize,
    },
}

#[derive(Subcommand)]
enum GenCmd {
    /// Erdos-Renyi G(n, p), redrawn until connected.
    Er {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
        #[command(flatten)]
        seed: Seed,
    },
    Grid {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
    },
    Star {
        #[arg(long)]
        n: usize,
    },
    Path {
        #[arg(long)]
        n: usize,
    },
    Cycle {
        #[arg(long)]
        n: usize,
    },
    Complete {
        #[arg(long)]
        n: usize,
    },
}

enum Failure {
    Invalid,
    Error(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

type Outcome = std::result::Result<(), Failure>;

struct Ctx {
    out: Option<PathBuf>,
    quiet: bool,
    started: Instant,
    argv: String,
}

impl Ctx {
    fn emit(&self, text: &str) -> std::result::Result<(), Error> {
        match &self.out {
            Some(path) => write_file(path, text),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    /// Summary on stderr for schedule-producing commands.
    fn report(&self, g: &Graph, p: NetworkParams, s: &Schedule, seed: Option<u64>) -> std::result::Result<(), Error> {
        if self.quiet {
            return Ok(());
        }
        let lb = lower_bounds(g, p)?;
        let ratio = if lb.combined_lb > 0 { s.length as f64 / lb.combined_lb as f64 } else { f64::NAN };
        let mut r = String::new();
        let _ = writeln!(r, "command: {}", self.argv);
        let _ = writeln!(r, "graph: n={} m={} diameter={} radius={}", g.n(), g.m(), g.diameter()?, g.radius()?);
        let _ = writeln!(r, "params: tc={} tm={}", p.tc, p.tm);
        let _ = writeln!(r, "length: {}", s.length);
        let _ = writeln!(
            r,
            "lower bounds: compute={} radius={} combined={}",
            lb.compute_lb, lb.radius_lb, lb.combined_lb
        );
        let _ = writeln!(r, "ratio: {ratio:.4}");
        if let Some(seed) = seed {
            let _ = writeln!(r, "seed: {seed}");
        }
        let _ = writeln!(r, "wall time: {:.3}s", self.started.elapsed().as_secs_f64());
        eprint!("{r}");
        Ok(())
    }
}

fn write_file(path: &Path, text: &str) -> std::result::Result<(), Error> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))
}

fn read_file(path: &Path) -> std::result::Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))
}

fn read_graph(path: &Path) -> std::result::Result<Graph, Error> {
    Graph::parse(&read_file(path)?)
}

fn params(c: Costs) -> std::result::Result<NetworkParams, Error> {
    let p = NetworkParams::new(c.tc, c.tm)?;
    if p.indivisible() {
        eprintln!("warning: neither of t_c = {} and t_m = {} divides the other", p.tc, p.tm);
    }
    Ok(p)
}

fn run(cli: Cli, ctx: &Ctx) -> Outcome {
    match cli.cmd {
        Cmd::Complete { n, costs } => {
            let p = params(costs)?;
            if n == 0 {
                return Err(Error::Params("n must be positive".into()).into());
            }
            let s = opt_complete(n, p);
            ctx.emit(&s.to_text())?;
            ctx.report(&Graph::complete(n), p, &s, None)?;
        }
        Cmd::Approx { graph, costs, seed, report } => {
            let p = params(costs)?;
            let g = read_graph(&graph)?;
            let run = solve_tc(&g, p, seed.seed)?;
            ctx.emit(&run.schedule.to_text())?;
            if let Some(path) = report {
                write_file(&path, &run.report_csv(g.n()))?;
            }
            ctx.report(&g, p, &run.schedule, Some(seed.seed))?;
        }
        Cmd::Brute { graph, costs, limit, max_nodes, max_cost, max_expansions } => {
            let p = params(costs)?;
            let g = read_graph(&graph)?;
            let cfg = BruteConfig { max_nodes, max_cost, max_expansions };
            let r = brute_opt_with(&g, p, limit, &cfg)?;
            eprintln!("opt_length {}", r.opt_length);
            ctx.emit(&r.schedule.to_text())?;
            ctx.report(&g, p, &r.schedule, None)?;
        }
        Cmd::Validate { graph, schedule, costs } => {
            let p = params(costs)?;
            let g = read_graph(&graph)?;
            let s = Schedule::parse(&read_file(&schedule)?)?;
            let rep = validate_schedule(&g, p, &s)?;
            let text = match &rep.violation {
                None if rep.valid => format!("valid length={}\n", s.length),
                None => format!("invalid: {} tokens remain\n", rep.final_token_count),
                Some(v) => format!("invalid: {v}\n"),
            };
            ctx.emit(&text)?;
            if !rep.valid {
                return Err(Failure::Invalid);
            }
        }
        Cmd::Simulate { graph, schedule, costs } => {
            let p = params(costs)?;
            let g = read_graph(&graph)?;
            let s = Schedule::parse(&read_file(&schedule)?)?;
            let trace = simulate(&g, p, &s)?;
            let mut text = String::new();
            for (r, st) in trace.iter().enumerate() {
                let _ = writeln!(text, "{r}: {st}");
            }
            ctx.emit(&text)?;
        }
        Cmd::Tree { rounds, costs } => {
            let p = params(costs)?;
            ctx.emit(&build_tree(rounds, p).parent_text())?;
        }
        Cmd::Stats { nmax, costs } => {
            let p = params(costs)?;
            let mut text = String::from("n,naive_binary,pipelined_binary,optimal,compute_lb\n");
            for n in 1..=nmax {
                let b = baseline_lengths(n, p);
                let _ =
                    writeln!(text, "{n},{},{},{},{}", b.naive_binary, b.pipelined_binary, b.optimal, b.compute_lb);
            }
            ctx.emit(&text)?;
        }
        Cmd::Gadget { kind: GadgetCmd::Psi { graph, tm } } => {
            let g = read_graph(&graph)?;
            let gd = psi_transform(&g, tm)?;
            let beta: Vec<String> = gd.beta.iter().map(|v| v.to_string()).collect();
            let text = format!(
                "# psi gadget tm={} a={} d_star={}\n# beta {}\n{}",
                tm,
                gd.a,
                gd.d_star,
                beta.join(" "),
                gd.graph.to_text()
            );
            ctx.emit(&text)?;
        }
        Cmd::Mds { graph, eps, scheduler, seed, max_expansions } => {
            let g = read_graph(&graph)?;
            let sched: Box<dyn Scheduler> = match scheduler.as_str() {
                "brute" => Box::new(BruteScheduler {
                    config: BruteConfig { max_nodes: 32, max_cost: 13, max_expansions },
                }),
                _ => Box::new(ApproxScheduler { seed: seed.seed }),
            };
            let r = mds_apx(&g, sched.as_ref(), eps)?;
            if r.trivial {
                warn!("falling back to the whole vertex set");
            }
            let set: Vec<String> = r.set.kappa.iter().map(|v| v.to_string()).collect();
            ctx.emit(&format!("size {}\nset {}\n", r.set.len(), set.join(" ")))?;
            if !ctx.quiet {
                for (k, tm, len) in &r.guesses {
                    eprintln!("guess k={k} tm={tm} length={len} threshold={}", 3 * tm);
                }
            }
        }
        Cmd::Gen { kind } => {
            let g = match kind {
                GenCmd::Er { n, p, seed } => erdos_renyi(n, p, seed.seed)?,
                GenCmd::Grid { rows, cols } => Graph::grid(rows, cols),
                GenCmd::Star { n } => Graph::star(n),
                GenCmd::Path { n } => Graph::path(n),
                GenCmd::Cycle { n } => Graph::cycle(n),
                GenCmd::Complete { n } => Graph::complete(n),
            };
            ctx.emit(&g.to_text())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    let ctx = Ctx { out: cli.out.clone(), quiet: cli.quiet, started: Instant::now(), argv: argv.join(" ") };
    match run(cli, &ctx) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid) => ExitCode::from(1),
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
