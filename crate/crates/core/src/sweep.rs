//! Benchmark sweeps: one search per (instance, heuristic, seed) job, rows in
//! a fixed CSV schema, and cumulative solved curves.

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Duration;

use rayon::prelude::*;

use crate::bench::{build_model, Instance, ModelOptions};
use crate::error::{Error, Result};
use crate::heuristics::HeuristicKind;
use crate::search::{solve, Outcome, SearchConfig, Traversal};

pub const CSV_HEADER: [&str; 9] = [
    "instance",
    "heuristic",
    "traversal",
    "params",
    "seed",
    "status",
    "backtracks",
    "time_ms",
    "restarts",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub instance: String,
    pub heuristic: String,
    pub traversal: String,
    pub params: String,
    pub seed: u64,
    /// `sat`, `unsat`, `timeout`, or `error`.
    pub status: String,
    pub backtracks: u64,
    /// Wall clock of the search phase only.
    pub time_ms: f64,
    pub restarts: u64,
}

impl RunRecord {
    pub fn solved(&self) -> bool {
        self.status == "sat" || self.status == "unsat"
    }

    fn fields(&self) -> [String; 9] {
        [
            self.instance.clone(),
            self.heuristic.clone(),
            self.traversal.clone(),
            self.params.clone(),
            self.seed.to_string(),
            self.status.clone(),
            self.backtracks.to_string(),
            format!("{:.3}", self.time_ms),
            self.restarts.to_string(),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub heuristics: Vec<HeuristicKind>,
    pub traversal: Traversal,
    pub seeds: Vec<u64>,
    pub timeout: Option<Duration>,
    pub max_backtracks: Option<u64>,
    pub model: ModelOptions,
    /// Worker threads; 0 lets the pool decide.
    pub jobs: usize,
}

impl SweepConfig {
    pub fn new(heuristics: Vec<HeuristicKind>) -> Self {
        SweepConfig {
            heuristics,
            traversal: Traversal::Dfs,
            seeds: vec![0],
            timeout: None,
            max_backtracks: None,
            model: ModelOptions::default(),
            jobs: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Job {
    pub instance: Arc<Instance>,
    pub heuristic: HeuristicKind,
    pub seed: u64,
}

/// Cartesian product of instances and heuristics; randomized configurations
/// get one job per seed, deterministic ones a single job on the first seed.
pub fn plan(instances: &[Arc<Instance>], cfg: &SweepConfig) -> Vec<Job> {
    let first = cfg.seeds.first().copied().unwrap_or(0);
    let restarts = matches!(cfg.traversal, Traversal::Restart { .. });
    let mut jobs = Vec::new();
    for inst in instances {
        for &h in &cfg.heuristics {
            let seeds: &[u64] = if h.is_randomized() || restarts { &cfg.seeds } else { std::slice::from_ref(&first) };
            for &seed in seeds {
                jobs.push(Job { instance: inst.clone(), heuristic: h, seed });
            }
        }
    }
    jobs
}

fn search_config(job: &Job, cfg: &SweepConfig) -> SearchConfig {
    SearchConfig {
        heuristic: job.heuristic,
        traversal: cfg.traversal,
        timeout: cfg.timeout,
        max_backtracks: cfg.max_backtracks,
        seed: job.seed,
        audit: false,
    }
}

/// Runs one job; model errors, panics and invalid solutions become
/// `status=error` rows.
pub fn run_job(job: &Job, cfg: &SweepConfig) -> RunRecord {
    let mut rec = RunRecord {
        instance: job.instance.name.clone(),
        heuristic: job.heuristic.name().to_string(),
        traversal: cfg.traversal.name().to_string(),
        params: cfg.traversal.params(),
        seed: job.seed,
        status: "error".into(),
        backtracks: 0,
        time_ms: 0.0,
        restarts: 0,
    };
    let outcome = catch_unwind(AssertUnwindSafe(|| {
        let model = build_model(&job.instance, &cfg.model)?;
        let stats = solve(&model, &search_config(job, cfg));
        if let Some(sol) = &stats.solution {
            let ok = model.constraints().iter().all(|c| {
                let vals: Vec<i64> = c.scope().iter().map(|v| sol[v.index()]).collect();
                c.check(&vals)
            });
            if !ok {
                return Err(Error::Invalid("search returned an invalid solution".into()));
            }
        }
        Ok::<_, Error>(stats)
    }));
    if let Ok(Ok(stats)) = outcome {
        rec.status = stats.status.to_string();
        rec.backtracks = stats.backtracks;
        rec.time_ms = stats.time_ms;
        rec.restarts = stats.restarts;
    }
    rec
}

/// Runs every planned job on up to `cfg.jobs` threads; rows come back in
/// plan order.
pub fn sweep(instances: &[Arc<Instance>], cfg: &SweepConfig) -> Result<Vec<RunRecord>> {
    let jobs = plan(instances, cfg);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::Invalid(e.to_string()))?;
    Ok(pool.install(|| jobs.par_iter().map(|j| run_job(j, cfg)).collect()))
}

pub fn write_csv<W: Write>(records: &[RunRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.into());
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in records {
        w.write_record(r.fields()).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<RunRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let bad = |e: &dyn std::fmt::Display| Error::Invalid(format!("bad CSV: {e}"));
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row.map_err(|e| bad(&e))?;
        if row.len() != CSV_HEADER.len() {
            return Err(bad(&format!("expected {} fields, found {}", CSV_HEADER.len(), row.len())));
        }
        let num = |i: usize| row[i].parse::<u64>().map_err(|e| bad(&e));
        out.push(RunRecord {
            instance: row[0].into(),
            heuristic: row[1].into(),
            traversal: row[2].into(),
            params: row[3].into(),
            seed: num(4)?,
            status: row[5].into(),
            backtracks: num(6)?,
            time_ms: row[7].parse().map_err(|e| bad(&e))?,
            restarts: num(8)?,
        });
    }
    Ok(out)
}

/// Fraction of runs solved as a function of effort, for one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub heuristic: String,
    pub traversal: String,
    pub params: String,
    pub runs: usize,
    /// Ascending backtrack counts of the solved runs.
    pub backtracks: Vec<u64>,
    /// Ascending search times of the solved runs.
    pub time_ms: Vec<f64>,
}

impl Curve {
    pub fn solved(&self) -> usize {
        self.backtracks.len()
    }

    /// Median backtracks over all runs, counting unsolved runs as `budget`.
    pub fn median_backtracks(&self, budget: u64) -> f64 {
        let mut all = self.backtracks.clone();
        all.resize(self.runs, budget);
        all.sort_unstable();
        median(&all)
    }
}

fn median(v: &[u64]) -> f64 {
    match v.len() {
        0 => 0.0,
        n if n % 2 == 1 => v[n / 2] as f64,
        n => (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0,
    }
}

/// One curve per (heuristic, traversal, params), in first-seen order.
pub fn cumulative(records: &[RunRecord]) -> Vec<Curve> {
    let mut curves: Vec<Curve> = Vec::new();
    for r in records {
        let idx = match curves
            .iter()
            .position(|c| c.heuristic == r.heuristic && c.traversal == r.traversal && c.params == r.params)
        {
            Some(i) => i,
            None => {
                curves.push(Curve {
                    heuristic: r.heuristic.clone(),
                    traversal: r.traversal.clone(),
                    params: r.params.clone(),
                    runs: 0,
                    backtracks: Vec::new(),
                    time_ms: Vec::new(),
                });
                curves.len() - 1
            }
        };
        let c = &mut curves[idx];
        c.runs += 1;
        if r.solved() {
            c.backtracks.push(r.backtracks);
            c.time_ms.push(r.time_ms);
        }
    }
    for c in &mut curves {
        c.backtracks.sort_unstable();
        c.time_ms.sort_by(f64::total_cmp);
    }
    curves
}

/// Curve points as CSV: `heuristic,traversal,params,measure,value,solved,runs`,
/// one row per solved run for each measure.
pub fn write_curves<W: Write>(curves: &[Curve], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.into());
    w.write_record(["heuristic", "traversal", "params", "measure", "value", "solved", "runs"])
        .map_err(io)?;
    for c in curves {
        let points = c
            .backtracks
            .iter()
            .map(|b| ("backtracks", b.to_string()))
            .enumerate()
            .chain(c.time_ms.iter().map(|t| ("time_ms", format!("{t:.3}"))).enumerate());
        for (k, (measure, value)) in points {
            let row = [
                c.heuristic.clone(),
                c.traversal.clone(),
                c.params.clone(),
                measure.to_string(),
                value,
                (k + 1).to_string(),
                c.runs.to_string(),
            ];
            w.write_record(&row).map_err(io)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Outcome column parsed back, `None` for error rows.
pub fn record_outcome(r: &RunRecord) -> Option<Outcome> {
    r.status.parse().ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{generate, GenParams, Kind};

    fn rec(h: &str, status: &str, bt: u64) -> RunRecord {
        RunRecord {
            instance: "i".into(),
            heuristic: h.into(),
            traversal: "dfs".into(),
            params: String::new(),
            seed: 0,
            status: status.into(),
            backtracks: bt,
            time_ms: bt as f64,
            restarts: 0,
        }
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![rec("maxSD", "sat", 3), rec("dom", "timeout", 10)];
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("instance,heuristic,traversal,params,seed,status,backtracks,time_ms,restarts\n"));
        assert_eq!(read_csv(&buf[..]).unwrap(), rows);
    }

    #[test]
    fn curves_and_medians() {
        let rows = vec![rec("a", "sat", 5), rec("a", "timeout", 100), rec("a", "sat", 1), rec("b", "error", 0)];
        let curves = cumulative(&rows);
        assert_eq!(curves.len(), 2);
        assert_eq!(curves[0].backtracks, vec![1, 5]);
        assert_eq!(curves[0].runs, 3);
        assert_eq!(curves[0].median_backtracks(100), 5.0);
        assert_eq!(curves[1].solved(), 0);
        let mut buf = Vec::new();
        write_curves(&curves, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 5);
    }

    #[test]
    fn plan_repeats_only_randomized_configurations() {
        let inst = Arc::new(generate(Kind::Qwh, &GenParams { n: Some(5), ..Default::default() }, 0).unwrap());
        let mut cfg = SweepConfig::new(vec![HeuristicKind::MaxSD, HeuristicKind::MaxSDRandom]);
        cfg.seeds = (0..4).collect();
        assert_eq!(plan(&[inst.clone()], &cfg).len(), 5);
        cfg.traversal = Traversal::Restart { scale: 10 };
        assert_eq!(plan(&[inst], &cfg).len(), 8);
    }

    #[test]
    fn sweep_preserves_order() {
        let insts: Vec<Arc<Instance>> = (0..4)
            .map(|s| Arc::new(generate(Kind::Qwh, &GenParams { n: Some(5), ..Default::default() }, s).unwrap()))
            .collect();
        let mut cfg = SweepConfig::new(vec![HeuristicKind::Dom, HeuristicKind::MaxSD]);
        cfg.jobs = 3;
        let rows = sweep(&insts, &cfg).unwrap();
        assert_eq!(rows.len(), 8);
        for (k, r) in rows.iter().enumerate() {
            assert_eq!(r.instance, insts[k / 2].name);
            assert_eq!(r.heuristic, ["dom", "maxSD"][k % 2]);
            assert_eq!(r.status, "sat");
        }
    }
}
