use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use countsearch::alldiff::ProbeConsistency;
use countsearch::bench::{self, build_model, GenParams, Instance, Kind, ModelOptions};
use countsearch::heuristics::HeuristicKind;
use countsearch::knapsack::KnapsackMode;
use countsearch::oracle::{exact_count_densities, DEFAULT_CAP};
use countsearch::search::{solve, Outcome, SearchConfig, Traversal};
use countsearch::sweep::{self, SweepConfig};
use countsearch::{Consistency, Decision, Solver, Status};

const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;

/// Constraint solver with counting-based branching heuristics.
#[derive(Parser)]
#[command(name = "countsearch", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve one instance. Exit status: 0 sat, 1 unsat, 2 timeout.
    Solve {
        file: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long, default_value = "maxSD")]
        heuristic: HeuristicKind,
        /// Random seed for randomized heuristics and restarts.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print the solution values in variable order.
        #[arg(long)]
        solution: bool,
    },
    /// Print every constraint's density table after root propagation.
    #[command(alias = "count")]
    Densities {
        file: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        /// Also enumerate exact densities and compare.
        #[arg(long)]
        exact: bool,
        /// Largest tuple count the exact enumeration accepts.
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: u64,
    },
    /// Run a heuristic sweep over instances and write CSV rows.
    Bench {
        /// Instance files or directories.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        search: SearchArgs,
        /// Comma-separated heuristic names.
        #[arg(long = "heuristic", alias = "heuristics", value_delimiter = ',', default_value = "maxSD")]
        heuristics: Vec<HeuristicKind>,
        /// Seeds as a list (`1,2,3`) or a half-open range (`0..10`).
        #[arg(long, default_value = "0")]
        seeds: String,
        /// Concurrent jobs; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// CSV output file (standard output when absent).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write cumulative solved curves to this CSV file.
        #[arg(long)]
        curves: Option<PathBuf>,
    },
    /// Generate random benchmark instances.
    Generate {
        kind: Kind,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        count: u64,
        /// Seed of the first instance; later ones use consecutive seeds.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Main size (order, rows, employees, teams, variables or days).
        #[arg(long)]
        n: Option<usize>,
        /// Second size (columns, constraint rows or staff).
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        holes: Option<f64>,
        #[arg(long)]
        prefill: Option<f64>,
        #[arg(long)]
        removed: Option<f64>,
        #[arg(long)]
        density: Option<f64>,
        #[arg(long)]
        forbidden: Option<usize>,
    },
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Instance kind; inferred from the extension or first line when absent.
    #[arg(long)]
    kind: Option<Kind>,
    /// Filtering level: fc, bounds or domain.
    #[arg(long, default_value = "domain")]
    consistency: Consistency,
    /// Knapsack counting: exact or gaussian.
    #[arg(long, default_value = "exact")]
    knapsack_mode: KnapsackMode,
    /// Alldifferent probe filtering: fc or domain.
    #[arg(long, default_value = "fc", value_parser = parse_probe)]
    probe: ProbeConsistency,
}

impl ModelArgs {
    fn options(&self) -> ModelOptions {
        ModelOptions {
            consistency: self.consistency,
            probe: self.probe,
            knapsack_mode: self.knapsack_mode,
        }
    }
}

fn parse_probe(s: &str) -> Result<ProbeConsistency, String> {
    match s {
        "fc" => Ok(ProbeConsistency::ForwardChecking),
        "domain" | "dc" => Ok(ProbeConsistency::Domain),
        _ => Err(format!("unknown probe level `{s}`; expected fc or domain")),
    }
}

#[derive(Args, Clone)]
struct SearchArgs {
    /// dfs, restart or lds.
    #[arg(long, default_value = "dfs", value_parser = ["dfs", "restart", "lds"])]
    traversal: String,
    /// Backtrack cutoff of the first restart run; later runs double it.
    #[arg(long, default_value_t = 100)]
    restart_scale: u64,
    /// Discrepancies added per LDS wave.
    #[arg(long, default_value_t = 1)]
    lds_skip: u32,
    /// Seconds.
    #[arg(long, default_value_t = 1200.0)]
    timeout: f64,
    #[arg(long)]
    max_backtracks: Option<u64>,
}

impl SearchArgs {
    fn traversal(&self) -> Traversal {
        match self.traversal.as_str() {
            "restart" => Traversal::Restart { scale: self.restart_scale },
            "lds" => Traversal::Lds { skip: self.lds_skip },
            _ => Traversal::Dfs,
        }
    }

    fn timeout(&self) -> anyhow::Result<Duration> {
        Duration::try_from_secs_f64(self.timeout).context("timeout must be a nonnegative number of seconds")
    }
}

fn parse_seeds(s: &str) -> anyhow::Result<Vec<u64>> {
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse()?, b.trim().parse()?);
        if a >= b {
            bail!("empty seed range `{s}`");
        }
        return Ok((a..b).collect());
    }
    s.split(',')
        .map(|t| t.trim().parse().with_context(|| format!("bad seed `{t}`")))
        .collect()
}

fn var_name(v: countsearch::VarId) -> String {
    format!("x{}", v.index() + 1)
}

fn decision_text(d: &Decision) -> String {
    match *d {
        Decision::Assign(v, x) => format!("{}={x}", var_name(v)),
        Decision::Refute(v, x) => format!("{}!={x}", var_name(v)),
    }
}

fn load(file: &Path, kind: Option<Kind>) -> anyhow::Result<Instance> {
    Instance::load(file, kind).with_context(|| format!("reading {}", file.display()))
}

fn cmd_solve(file: &Path, model: &ModelArgs, search: &SearchArgs, heuristic: HeuristicKind, seed: u64, show: bool) -> anyhow::Result<Outcome> {
    let inst = load(file, model.kind)?;
    let m = build_model(&inst, &model.options())?;
    let mut cfg = SearchConfig::new(heuristic)
        .traversal(search.traversal())
        .timeout(search.timeout()?)
        .seed(seed);
    cfg.max_backtracks = search.max_backtracks;
    let stats = solve(&m, &cfg);
    println!("instance: {} ({})", inst.name, inst.kind());
    println!("heuristic: {}", heuristic.name());
    println!("traversal: {}", format!("{} {}", search.traversal().name(), search.traversal().params()).trim_end());
    println!("status: {}", stats.status);
    println!("backtracks: {}", stats.backtracks);
    println!("restarts: {}", stats.restarts);
    println!("time_ms: {:.3}", stats.time_ms);
    match &stats.first_decision {
        Some(d) => println!("first decision: {}", decision_text(d)),
        None => println!("first decision: none"),
    }
    if show {
        if let Some(sol) = &stats.solution {
            let vals: Vec<String> = sol.iter().map(i64::to_string).collect();
            println!("solution: {}", vals.join(" "));
        }
    }
    Ok(stats.status)
}

/// Spearman correlation with average ranks for ties.
fn rank_correlation(a: &[f64], b: &[f64]) -> Option<f64> {
    fn ranks(x: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..x.len()).collect();
        idx.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
        let mut r = vec![0.0; x.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
                j += 1;
            }
            for &k in &idx[i..=j] {
                r[k] = (i + j) as f64 / 2.0 + 1.0;
            }
            i = j + 1;
        }
        r
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - mean) * (y - mean)).sum();
    let va: f64 = ra.iter().map(|x| (x - mean).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mean).powi(2)).sum();
    (va > 0.0 && vb > 0.0).then(|| cov / (va * vb).sqrt())
}

fn cmd_densities(file: &Path, model: &ModelArgs, exact: bool, cap: u64) -> anyhow::Result<()> {
    let inst = load(file, model.kind)?;
    let m = build_model(&inst, &model.options())?;
    let mut solver = Solver::new(&m);
    println!("instance: {} ({})", inst.name, inst.kind());
    if solver.propagate_all() == Status::Wipeout {
        println!("root propagation wipes out a domain");
        return Ok(());
    }
    let doms = solver.domains().snapshot();
    let mut out = BufWriter::new(io::stdout().lock());
    for c in 0..solver.num_constraints() {
        let con = solver.constraint(c).clone();
        let Some(table) = con.densities(solver.domains()) else {
            writeln!(out, "constraint {c} {}: no counting support", con.name())?;
            continue;
        };
        let kind = if table.exact { "exact" } else { "bound" };
        writeln!(out, "constraint {c} {}: count {:.6} ({kind})", con.name(), table.count())?;
        let oracle = if exact {
            match exact_count_densities(con.as_ref(), &doms, cap) {
                Ok(t) => {
                    writeln!(out, "  oracle count {}", t.count)?;
                    Some(t)
                }
                Err(e) => {
                    writeln!(out, "  oracle refused: {e}")?;
                    None
                }
            }
        } else {
            None
        };
        let (mut ours, mut theirs) = (Vec::new(), Vec::new());
        for entry in &table.entries {
            let pos = con.scope().iter().position(|&v| v == entry.var);
            write!(out, "  {}:", var_name(entry.var))?;
            for &(value, d) in &entry.values {
                write!(out, " {value}={d:.6}")?;
                if let (Some(t), Some(p)) = (&oracle, pos) {
                    if let Some(r) = t.density(p, value) {
                        write!(out, "[{r}]")?;
                        ours.push(d);
                        theirs.push(*r.numer() as f64 / *r.denom() as f64);
                    }
                }
            }
            writeln!(out)?;
        }
        if oracle.is_some() {
            match rank_correlation(&ours, &theirs) {
                Some(rho) => writeln!(out, "  rank correlation {rho:.4}")?,
                None => writeln!(out, "  rank correlation undefined")?,
            }
        }
    }
    Ok(())
}

fn collect_instances(inputs: &[PathBuf], kind: Option<Kind>) -> anyhow::Result<Vec<Arc<Instance>>> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut inner: Vec<PathBuf> = std::fs::read_dir(p)
                .with_context(|| format!("listing {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.is_file() && (kind.is_some() || Kind::from_path(f).is_some()))
                .collect();
            inner.sort();
            files.extend(inner);
        } else {
            files.push(p.clone());
        }
    }
    if files.is_empty() {
        bail!("no instances found");
    }
    files.iter().map(|f| load(f, kind).map(Arc::new)).collect()
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    inputs: &[PathBuf],
    model: &ModelArgs,
    search: &SearchArgs,
    heuristics: Vec<HeuristicKind>,
    seeds: &str,
    jobs: usize,
    out: Option<&Path>,
    curves: Option<&Path>,
) -> anyhow::Result<()> {
    let instances = collect_instances(inputs, model.kind)?;
    let mut cfg = SweepConfig::new(heuristics);
    cfg.traversal = search.traversal();
    cfg.seeds = parse_seeds(seeds)?;
    cfg.timeout = Some(search.timeout()?);
    cfg.max_backtracks = search.max_backtracks;
    cfg.model = model.options();
    cfg.jobs = jobs;
    let records = sweep::sweep(&instances, &cfg)?;
    match out {
        Some(p) => sweep::write_csv(&records, File::create(p).with_context(|| format!("creating {}", p.display()))?)?,
        None => sweep::write_csv(&records, io::stdout().lock())?,
    }
    let summary = sweep::cumulative(&records);
    if let Some(p) = curves {
        sweep::write_curves(&summary, File::create(p).with_context(|| format!("creating {}", p.display()))?)?;
    }
    let budget = search.max_backtracks.unwrap_or(u64::MAX);
    for c in &summary {
        eprintln!(
            "{} {} {}: solved {}/{}, median backtracks {}",
            c.heuristic,
            c.traversal,
            c.params,
            c.solved(),
            c.runs,
            c.median_backtracks(budget)
        );
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.cmd {
        Cmd::Solve { file, model, search, heuristic, seed, solution } => {
            let status = cmd_solve(&file, &model, &search, heuristic, seed, solution)?;
            Ok(ExitCode::from(match status {
                Outcome::Sat => 0,
                Outcome::Unsat => 1,
                Outcome::Timeout => 2,
            }))
        }
        Cmd::Densities { file, model, exact, cap } => {
            cmd_densities(&file, &model, exact, cap)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Bench { inputs, model, search, heuristics, seeds, jobs, out, curves } => {
            cmd_bench(&inputs, &model, &search, heuristics, &seeds, jobs, out.as_deref(), curves.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Generate { kind, out, count, seed, n, m, holes, prefill, removed, density, forbidden } => {
            let params = GenParams { n, m, holes, prefill, removed, density, forbidden };
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            for s in seed..seed + count {
                let inst = bench::generate(kind, &params, s)?;
                let path = out.join(format!("{}.{}", inst.name, kind.extension()));
                inst.save(&path).with_context(|| format!("writing {}", path.display()))?;
                println!("{}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let usage = e
                .downcast_ref::<countsearch::Error>()
                .is_some_and(|e| matches!(e, countsearch::Error::UnknownHeuristic(..) | countsearch::Error::Invalid(_)));
            ExitCode::from(if usage { EXIT_USAGE } else { EXIT_DATA })
        }
    }
}
