//! Binary tree search: depth-first, geometric restarts and limited
//! discrepancy search.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::domain::VarId;
use crate::engine::{Decision, Model, Solver, Status};
use crate::error::Error;
use crate::heuristics::{Heuristic, HeuristicKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Traversal {
    Dfs,
    /// Restart every `scale * 2^i` backtracks.
    Restart { scale: u64 },
    /// Waves of `skip` discrepancies.
    Lds { skip: u32 },
}

impl Traversal {
    pub fn name(&self) -> &'static str {
        match self {
            Traversal::Dfs => "dfs",
            Traversal::Restart { .. } => "restart",
            Traversal::Lds { .. } => "lds",
        }
    }

    /// Parameter string used in reports.
    pub fn params(&self) -> String {
        match self {
            Traversal::Dfs => String::new(),
            Traversal::Restart { scale } => format!("scale={scale}"),
            Traversal::Lds { skip } => format!("skip={skip}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Sat,
    Unsat,
    /// Time or backtrack budget exhausted.
    Timeout,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Sat => "sat",
            Outcome::Unsat => "unsat",
            Outcome::Timeout => "timeout",
        })
    }
}

impl FromStr for Outcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "sat" => Ok(Outcome::Sat),
            "unsat" => Ok(Outcome::Unsat),
            "timeout" => Ok(Outcome::Timeout),
            _ => Err(Error::Invalid(format!("unknown status `{s}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub heuristic: HeuristicKind,
    pub traversal: Traversal,
    pub timeout: Option<Duration>,
    pub max_backtracks: Option<u64>,
    pub seed: u64,
    /// Check every density table read during search.
    pub audit: bool,
}

impl SearchConfig {
    pub fn new(heuristic: HeuristicKind) -> Self {
        SearchConfig {
            heuristic,
            traversal: Traversal::Dfs,
            timeout: None,
            max_backtracks: None,
            seed: 0,
            audit: false,
        }
    }

    pub fn traversal(mut self, t: Traversal) -> Self {
        self.traversal = t;
        self
    }

    pub fn timeout(mut self, t: Duration) -> Self {
        self.timeout = Some(t);
        self
    }

    pub fn max_backtracks(mut self, n: u64) -> Self {
        self.max_backtracks = Some(n);
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchStats {
    pub status: Outcome,
    /// Wipeouts following a decision.
    pub backtracks: u64,
    pub nodes: u64,
    pub restarts: u64,
    /// Discrepancies on the path to the solution.
    pub discrepancies: u32,
    /// Index of the LDS wave that ended the search.
    pub waves: u32,
    pub time_ms: f64,
    pub seed: u64,
    pub solution: Option<Vec<i64>>,
    pub first_decision: Option<Decision>,
    /// Backtracks spent in each restart run.
    pub run_backtracks: Vec<u64>,
    pub audit: Option<crate::heuristics::Audit>,
}

enum RunEnd {
    Sat(Vec<i64>, u32),
    /// Tree exhausted; `pruned` tells whether a discrepancy limit cut some
    /// branch.
    Exhausted { pruned: bool },
    Cutoff,
    Timeout,
}

struct Frame {
    level: usize,
    var: VarId,
    value: i64,
    right: bool,
    disc: u32,
}

struct Runner<'a> {
    solver: &'a mut Solver,
    heur: &'a mut Heuristic,
    rng: &'a mut ChaCha8Rng,
    start: Instant,
    timeout: Option<Duration>,
    max_backtracks: Option<u64>,
    backtracks: u64,
    nodes: u64,
    first_decision: Option<Decision>,
}

impl Runner<'_> {
    fn out_of_budget(&self) -> bool {
        self.timeout.is_some_and(|t| self.start.elapsed() >= t)
            || self.max_backtracks.is_some_and(|m| self.backtracks >= m)
    }

    fn decide(&mut self, d: Decision) -> Status {
        if self.first_decision.is_none() {
            self.first_decision = Some(d);
        }
        self.nodes += 1;
        let before = self.solver.domains().log_space_size();
        let st = self.solver.push_decision(d).expect("decision on a domain value");
        if let Decision::Assign(x, v) = d {
            let after = (st == Status::Consistent).then(|| self.solver.domains().log_space_size());
            self.heur.on_assignment(x, v, before, after);
        }
        if st == Status::Wipeout {
            self.backtracks += 1;
            self.heur.on_failure(self.solver.last_failure());
        }
        st
    }

    /// One depth-first run from the current (root) node. `cutoff` bounds the
    /// backtracks of this run; `max_disc` bounds the discrepancies taken.
    fn run(&mut self, cutoff: Option<u64>, max_disc: Option<u32>) -> RunEnd {
        let root = self.solver.level();
        let run_start = self.backtracks;
        let mut stack: Vec<Frame> = Vec::new();
        let mut pruned = false;
        let mut disc = 0u32;
        loop {
            // descend from a consistent node
            if self.out_of_budget() {
                self.solver.backtrack_to(root).unwrap();
                return RunEnd::Timeout;
            }
            let Some((x, d)) = self.heur.select(self.solver, self.rng) else {
                let sol = self.solver.solution().expect("all bound");
                self.solver.backtrack_to(root).unwrap();
                return RunEnd::Sat(sol, disc);
            };
            stack.push(Frame {
                level: self.solver.level(),
                var: x,
                value: d,
                right: false,
                disc,
            });
            if self.decide(Decision::Assign(x, d)) == Status::Consistent {
                continue;
            }
            // climb until a right branch succeeds
            loop {
                if cutoff.is_some_and(|c| self.backtracks - run_start >= c) {
                    self.solver.backtrack_to(root).unwrap();
                    return RunEnd::Cutoff;
                }
                if self.out_of_budget() {
                    self.solver.backtrack_to(root).unwrap();
                    return RunEnd::Timeout;
                }
                let Some(top) = stack.last_mut() else {
                    return RunEnd::Exhausted { pruned };
                };
                self.solver.backtrack_to(top.level).unwrap();
                if top.right {
                    stack.pop();
                    continue;
                }
                top.right = true;
                let next_disc = top.disc + 1;
                if max_disc.is_some_and(|m| next_disc > m) {
                    pruned = true;
                    stack.pop();
                    continue;
                }
                let (x, d) = (top.var, top.value);
                if self.decide(Decision::Refute(x, d)) == Status::Consistent {
                    disc = next_disc;
                    break;
                }
            }
        }
    }
}

/// Runs the configured search on `model`.
pub fn solve(model: &Model, config: &SearchConfig) -> SearchStats {
    let mut solver = Solver::new(model);
    let mut heur = Heuristic::new(config.heuristic, solver.num_constraints());
    heur.top2 = matches!(config.traversal, Traversal::Restart { .. });
    if config.audit {
        heur.audit = Some(Default::default());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    solve_with(&mut solver, &mut heur, &mut rng, config)
}

/// Runs the search with caller-owned solver, heuristic state and generator.
pub fn solve_with(
    solver: &mut Solver,
    heur: &mut Heuristic,
    rng: &mut ChaCha8Rng,
    config: &SearchConfig,
) -> SearchStats {
    let start = Instant::now();
    let mut stats = SearchStats {
        status: Outcome::Timeout,
        backtracks: 0,
        nodes: 0,
        restarts: 0,
        discrepancies: 0,
        waves: 0,
        time_ms: 0.0,
        seed: config.seed,
        solution: None,
        first_decision: None,
        run_backtracks: Vec::new(),
        audit: None,
    };
    let finish = |mut stats: SearchStats, heur: &Heuristic| {
        stats.time_ms = start.elapsed().as_secs_f64() * 1000.0;
        stats.audit = heur.audit.clone();
        stats
    };
    if config.timeout.is_some_and(|t| t.is_zero()) {
        return finish(stats, heur);
    }
    if solver.propagate_all() == Status::Wipeout || heur.init(solver) == Status::Wipeout {
        stats.status = Outcome::Unsat;
        return finish(stats, heur);
    }
    let mut runner = Runner {
        solver,
        heur,
        rng,
        start,
        timeout: config.timeout,
        max_backtracks: config.max_backtracks,
        backtracks: 0,
        nodes: 0,
        first_decision: None,
    };
    match config.traversal {
        Traversal::Dfs => match runner.run(None, None) {
            RunEnd::Sat(sol, d) => {
                stats.status = Outcome::Sat;
                stats.solution = Some(sol);
                stats.discrepancies = d;
            }
            RunEnd::Exhausted { .. } => stats.status = Outcome::Unsat,
            RunEnd::Cutoff | RunEnd::Timeout => {}
        },
        Traversal::Restart { scale } => {
            let mut run = 0u32;
            loop {
                let cutoff = scale.max(1).saturating_mul(1u64.checked_shl(run).unwrap_or(u64::MAX));
                let before = runner.backtracks;
                let end = runner.run(Some(cutoff), None);
                stats.run_backtracks.push(runner.backtracks - before);
                match end {
                    RunEnd::Sat(sol, d) => {
                        stats.status = Outcome::Sat;
                        stats.solution = Some(sol);
                        stats.discrepancies = d;
                        break;
                    }
                    RunEnd::Exhausted { .. } => {
                        stats.status = Outcome::Unsat;
                        break;
                    }
                    RunEnd::Timeout => break,
                    RunEnd::Cutoff => {
                        stats.restarts += 1;
                        run = run.saturating_add(1);
                    }
                }
            }
        }
        Traversal::Lds { skip } => {
            let skip = skip.max(1);
            let mut wave = 0u32;
            loop {
                let limit = wave.saturating_add(1).saturating_mul(skip).saturating_sub(1);
                stats.waves = wave;
                match runner.run(None, Some(limit)) {
                    RunEnd::Sat(sol, d) => {
                        stats.status = Outcome::Sat;
                        stats.solution = Some(sol);
                        stats.discrepancies = d;
                        break;
                    }
                    RunEnd::Exhausted { pruned: false } => {
                        stats.status = Outcome::Unsat;
                        break;
                    }
                    RunEnd::Exhausted { pruned: true } => wave += 1,
                    RunEnd::Cutoff | RunEnd::Timeout => break,
                }
            }
        }
    }
    stats.backtracks = runner.backtracks;
    stats.nodes = runner.nodes;
    stats.first_decision = runner.first_decision;
    let heur = &*runner.heur;
    finish(stats, heur)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alldiff::AllDifferent;
    use crate::engine::Consistency;

    fn latin(n: usize) -> Model {
        let mut m = Model::new();
        let vars: Vec<VarId> = m.new_vars(n * n, 1..=n as i64);
        for i in 0..n {
            m.post(AllDifferent::new((0..n).map(|j| vars[i * n + j]).collect(), Consistency::Domain));
            m.post(AllDifferent::new((0..n).map(|j| vars[j * n + i]).collect(), Consistency::Domain));
        }
        m
    }

    #[test]
    fn solved_at_root() {
        let mut m = Model::new();
        m.new_var([4]);
        let st = solve(&m, &SearchConfig::new(HeuristicKind::MaxSD));
        assert_eq!(st.status, Outcome::Sat);
        assert_eq!(st.backtracks, 0);
    }

    #[test]
    fn root_wipeout() {
        let mut m = Model::new();
        let a = m.new_var([1]);
        let b = m.new_var([1]);
        m.post(AllDifferent::new(vec![a, b], Consistency::Domain));
        let st = solve(&m, &SearchConfig::new(HeuristicKind::Dom));
        assert_eq!(st.status, Outcome::Unsat);
        assert_eq!(st.backtracks, 0);
    }

    #[test]
    fn latin_square_every_traversal() {
        let m = latin(4);
        for t in [
            Traversal::Dfs,
            Traversal::Restart { scale: 1 },
            Traversal::Lds { skip: 1 },
        ] {
            for h in HeuristicKind::ALL {
                let st = solve(&m, &SearchConfig::new(h).traversal(t).seed(3));
                assert_eq!(st.status, Outcome::Sat, "{h} {t:?}");
                let sol = st.solution.unwrap();
                for c in m.constraints() {
                    let vals: Vec<i64> = c.scope().iter().map(|v| sol[v.0]).collect();
                    assert!(c.check(&vals));
                }
            }
        }
    }

    #[test]
    fn zero_timeout() {
        let st = solve(
            &latin(3),
            &SearchConfig::new(HeuristicKind::MaxSD).timeout(Duration::ZERO),
        );
        assert_eq!(st.status, Outcome::Timeout);
    }

    #[test]
    fn pigeonhole_unsat_everywhere() {
        // 4 pigeons, 3 holes, with filtering too weak to see it at the root
        let mut m = Model::new();
        let xs = m.new_vars(4, 1..=3);
        for i in 0..4 {
            for j in i + 1..4 {
                m.post(AllDifferent::new(vec![xs[i], xs[j]], Consistency::ForwardChecking));
            }
        }
        for t in [Traversal::Dfs, Traversal::Lds { skip: 2 }, Traversal::Restart { scale: 1000 }] {
            let st = solve(&m, &SearchConfig::new(HeuristicKind::DomWDeg).traversal(t));
            assert_eq!(st.status, Outcome::Unsat, "{t:?}");
            assert!(st.backtracks > 0);
        }
    }

    #[test]
    fn restart_is_deterministic() {
        let m = latin(5);
        let cfg = SearchConfig::new(HeuristicKind::MaxSD)
            .traversal(Traversal::Restart { scale: 1 })
            .seed(11);
        let a = solve(&m, &cfg);
        let b = solve(&m, &cfg);
        assert_eq!(a.solution, b.solution);
        assert_eq!(a.backtracks, b.backtracks);
        assert_eq!(a.restarts, b.restarts);
    }
}
