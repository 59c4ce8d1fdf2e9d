//! Branching heuristics: counting-based selectors, baselines and hybrids.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::density::DensityTable;
use crate::domain::VarId;
use crate::engine::{Decision, Solver, Status};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HeuristicKind {
    MaxSD,
    MaxRelSD,
    MaxRelRatio,
    AAvgSD,
    WSCAvg,
    MinSCMaxSD,
    Dom,
    DomWDeg,
    Ibs,
    DomDegMaxSD,
    MaxSDRandom,
    IbsMaxSD,
    DomWDegMaxSD,
}

impl HeuristicKind {
    pub const ALL: [HeuristicKind; 13] = [
        HeuristicKind::MaxSD,
        HeuristicKind::MaxRelSD,
        HeuristicKind::MaxRelRatio,
        HeuristicKind::AAvgSD,
        HeuristicKind::WSCAvg,
        HeuristicKind::MinSCMaxSD,
        HeuristicKind::Dom,
        HeuristicKind::DomWDeg,
        HeuristicKind::Ibs,
        HeuristicKind::DomDegMaxSD,
        HeuristicKind::MaxSDRandom,
        HeuristicKind::IbsMaxSD,
        HeuristicKind::DomWDegMaxSD,
    ];

    pub fn name(self) -> &'static str {
        match self {
            HeuristicKind::MaxSD => "maxSD",
            HeuristicKind::MaxRelSD => "maxRelSD",
            HeuristicKind::MaxRelRatio => "maxRelRatio",
            HeuristicKind::AAvgSD => "aAvgSD",
            HeuristicKind::WSCAvg => "wSCAvg",
            HeuristicKind::MinSCMaxSD => "minSCMaxSD",
            HeuristicKind::Dom => "dom",
            HeuristicKind::DomWDeg => "domWDeg",
            HeuristicKind::Ibs => "ibs",
            HeuristicKind::DomDegMaxSD => "domDeg+maxSD",
            HeuristicKind::MaxSDRandom => "maxSD+random",
            HeuristicKind::IbsMaxSD => "ibs+maxSD",
            HeuristicKind::DomWDegMaxSD => "domWDeg+maxSD",
        }
    }

    pub fn names() -> String {
        Self::ALL.iter().map(|k| k.name()).collect::<Vec<_>>().join(", ")
    }

    /// Whether the heuristic reads density tables.
    pub fn uses_densities(self) -> bool {
        !matches!(self, HeuristicKind::Dom | HeuristicKind::DomWDeg | HeuristicKind::Ibs)
    }

    /// Whether choices involve the random generator even without restarts.
    pub fn is_randomized(self) -> bool {
        matches!(
            self,
            HeuristicKind::Dom | HeuristicKind::Ibs | HeuristicKind::MaxSDRandom | HeuristicKind::IbsMaxSD
        )
    }
}

impl fmt::Display for HeuristicKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HeuristicKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownHeuristic(s.to_string(), Self::names()))
    }
}

/// A scored branching candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub var: VarId,
    pub value: i64,
    pub score: f64,
}

/// Orders by score (higher first), then lexicographically by
/// (variable index, value).
fn better(a: &Candidate, b: &Candidate) -> std::cmp::Ordering {
    b.score
        .partial_cmp(&a.score)
        .unwrap_or(std::cmp::Ordering::Equal)
        .then(a.var.0.cmp(&b.var.0))
        .then(a.value.cmp(&b.value))
}

/// Best candidate, or one of the best two with equal probability when
/// `top2` is set.
fn pick(mut cands: Vec<Candidate>, top2: bool, rng: &mut ChaCha8Rng) -> Option<Candidate> {
    if cands.is_empty() {
        return None;
    }
    cands.sort_by(better);
    if top2 && cands.len() > 1 && rng.gen_bool(0.5) {
        return Some(cands[1]);
    }
    Some(cands[0])
}

/// Aggregation of per-constraint densities of the same pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregate {
    Max,
    MaxRel,
    MaxRatio,
    Avg,
    CountWeighted,
}

/// Scores every (unbound variable, value) pair appearing in `tables`.
pub fn aggregate_scores(tables: &[Arc<DensityTable>], solver: &Solver, how: Aggregate) -> Vec<Candidate> {
    // (var, value) -> list of (density, log count)
    let mut seen: HashMap<(VarId, i64), Vec<(f64, f64)>> = HashMap::new();
    let mut order: Vec<(VarId, i64)> = Vec::new();
    for t in tables {
        for e in &t.entries {
            if solver.domains().is_bound(e.var) {
                continue;
            }
            for &(v, d) in &e.values {
                let key = (e.var, v);
                let slot = seen.entry(key).or_insert_with(|| {
                    order.push(key);
                    Vec::new()
                });
                slot.push((d, t.log_count));
            }
        }
    }
    order
        .into_iter()
        .map(|(var, value)| {
            let obs = &seen[&(var, value)];
            let size = solver.domains().size(var) as f64;
            let score = match how {
                Aggregate::Max => obs.iter().map(|o| o.0).fold(f64::NEG_INFINITY, f64::max),
                Aggregate::MaxRel => obs.iter().map(|o| o.0 - 1.0 / size).fold(f64::NEG_INFINITY, f64::max),
                Aggregate::MaxRatio => obs.iter().map(|o| o.0 * size).fold(f64::NEG_INFINITY, f64::max),
                Aggregate::Avg => obs.iter().map(|o| o.0).sum::<f64>() / obs.len() as f64,
                Aggregate::CountWeighted => count_weighted(obs),
            };
            Candidate { var, value, score }
        })
        .collect()
}

/// `sum_c #c * sigma / sum_c #c` with counts given as logarithms.
pub fn count_weighted(obs: &[(f64, f64)]) -> f64 {
    let top = obs.iter().map(|o| o.1).fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY || top.is_nan() {
        return obs.iter().map(|o| o.0).sum::<f64>() / obs.len() as f64;
    }
    let (num, den) = obs.iter().fold((0.0, 0.0), |(n, d), &(sigma, lc)| {
        let w = (lc - top).exp();
        (n + w * sigma, d + w)
    });
    num / den
}

/// Per-variable running impact averages.
#[derive(Debug, Clone, Default)]
pub struct ImpactState {
    /// (variable, value) -> (average impact, observations)
    avg: HashMap<(VarId, i64), (f64, u64)>,
    initialized: bool,
}

impl ImpactState {
    pub fn record(&mut self, var: VarId, value: i64, impact: f64) {
        let e = self.avg.entry((var, value)).or_insert((0.0, 0));
        e.0 = (e.0 * e.1 as f64 + impact) / (e.1 + 1) as f64;
        e.1 += 1;
    }

    pub fn impact(&self, var: VarId, value: i64) -> f64 {
        self.avg.get(&(var, value)).map_or(0.0, |e| e.0)
    }

    pub fn observations(&self, var: VarId, value: i64) -> u64 {
        self.avg.get(&(var, value)).map_or(0, |e| e.1)
    }

    /// `I(x) = sum over current values of (1 - average impact)`.
    pub fn var_impact(&self, solver: &Solver, var: VarId) -> f64 {
        solver
            .domains()
            .iter(var)
            .map(|d| 1.0 - self.impact(var, d))
            .sum()
    }

    pub fn is_initialized(&self) -> bool {
        self.initialized
    }
}

/// `1 - P_after / P_before` from log search-space sizes.
pub fn impact_of(log_before: f64, log_after: Option<f64>) -> f64 {
    match log_after {
        None => 1.0,
        Some(after) => (1.0 - (after - log_before).exp()).clamp(0.0, 1.0),
    }
}

/// Tally of density-table checks made during search.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Audit {
    pub tables: u64,
    pub worst_error: f64,
    pub foreign_values: u64,
}

/// Heuristic with its learning state (weights and impacts), which persists
/// across restarts.
#[derive(Debug, Clone)]
pub struct Heuristic {
    kind: HeuristicKind,
    weights: Vec<u64>,
    impacts: ImpactState,
    /// Choose between the best two candidates at random.
    pub top2: bool,
    /// Candidate set size for the IBS node-impact refinement.
    pub ibs_subset: usize,
    pub audit: Option<Audit>,
}

impl Heuristic {
    pub fn new(kind: HeuristicKind, num_constraints: usize) -> Self {
        Heuristic {
            kind,
            weights: vec![1; num_constraints],
            impacts: ImpactState::default(),
            top2: false,
            ibs_subset: 5,
            audit: None,
        }
    }

    pub fn kind(&self) -> HeuristicKind {
        self.kind
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    pub fn impacts(&self) -> &ImpactState {
        &self.impacts
    }

    fn uses_impacts(&self) -> bool {
        matches!(self.kind, HeuristicKind::Ibs | HeuristicKind::IbsMaxSD)
    }

    /// Wipeout caused by constraint `c` during search.
    pub fn on_failure(&mut self, c: Option<usize>) {
        if let Some(c) = c {
            self.weights[c] += 1;
        }
    }

    /// Outcome of a left branch `var = value`, for impact learning.
    pub fn on_assignment(&mut self, var: VarId, value: i64, log_before: f64, log_after: Option<f64>) {
        if self.uses_impacts() {
            self.impacts.record(var, value, impact_of(log_before, log_after));
        }
    }

    /// Root-node preparation. IBS probes every pair once, removing values
    /// that fail at the root.
    pub fn init(&mut self, solver: &mut Solver) -> Status {
        if !self.uses_impacts() || self.impacts.initialized {
            return Status::Consistent;
        }
        self.impacts.initialized = true;
        let vars: Vec<VarId> = solver.domains().vars().collect();
        for x in vars {
            if solver.domains().is_bound(x) {
                continue;
            }
            for d in solver.domains().values(x) {
                if !solver.domains().contains(x, d) {
                    continue;
                }
                let (impact, failed) = probe(solver, x, d);
                self.impacts.record(x, d, impact);
                if failed {
                    let st = solver.apply(Decision::Refute(x, d)).expect("value in domain");
                    if st == Status::Wipeout {
                        return Status::Wipeout;
                    }
                }
            }
        }
        Status::Consistent
    }

    fn audit_tables(&mut self, tables: &[Arc<DensityTable>], solver: &Solver) {
        let Some(audit) = self.audit.as_mut() else {
            return;
        };
        for t in tables {
            audit.tables += 1;
            for e in &t.entries {
                if solver.domains().is_bound(e.var) {
                    continue;
                }
                audit.worst_error = audit.worst_error.max((e.sum() - 1.0).abs());
                audit.foreign_values += e
                    .values
                    .iter()
                    .filter(|(v, _)| !solver.domains().contains(e.var, *v))
                    .count() as u64;
            }
        }
    }

    /// Left branch to take next, or `None` when every variable is bound.
    pub fn select(&mut self, solver: &mut Solver, rng: &mut ChaCha8Rng) -> Option<(VarId, i64)> {
        if solver.domains().all_bound() {
            return None;
        }
        let tables = if self.kind.uses_densities() {
            let t = solver.collect_densities();
            self.audit_tables(&t, solver);
            t
        } else {
            Vec::new()
        };
        let scores = |how| aggregate_scores(&tables, solver, how);
        let chosen = match self.kind {
            HeuristicKind::MaxSD => pick(scores(Aggregate::Max), self.top2, rng),
            HeuristicKind::MaxRelSD => pick(scores(Aggregate::MaxRel), self.top2, rng),
            HeuristicKind::MaxRelRatio => pick(scores(Aggregate::MaxRatio), self.top2, rng),
            HeuristicKind::AAvgSD => pick(scores(Aggregate::Avg), self.top2, rng),
            HeuristicKind::WSCAvg => pick(scores(Aggregate::CountWeighted), self.top2, rng),
            HeuristicKind::MinSCMaxSD => self.min_count_max_density(&tables, solver, rng),
            HeuristicKind::Dom => None,
            HeuristicKind::DomWDeg => {
                let x = self.dom_ratio_var(solver, true, rng);
                Some(Candidate {
                    var: x,
                    value: solver.domains().min(x).unwrap(),
                    score: 0.0,
                })
            }
            HeuristicKind::Ibs => {
                let x = self.ibs_var(solver, rng);
                Some(Candidate {
                    var: x,
                    value: self.min_impact_value(solver, x),
                    score: 0.0,
                })
            }
            HeuristicKind::DomDegMaxSD => {
                let x = self.dom_ratio_var(solver, false, rng);
                Some(best_value(&tables, solver, x))
            }
            HeuristicKind::DomWDegMaxSD => {
                let x = self.dom_ratio_var(solver, true, rng);
                Some(best_value(&tables, solver, x))
            }
            HeuristicKind::IbsMaxSD => {
                let x = self.ibs_var(solver, rng);
                Some(best_value(&tables, solver, x))
            }
            HeuristicKind::MaxSDRandom => pick(scores(Aggregate::Max), self.top2, rng).map(|c| {
                let vals = solver.domains().values(c.var);
                Candidate {
                    value: vals[rng.gen_range(0..vals.len())],
                    ..c
                }
            }),
        };
        Some(match chosen {
            Some(c) => (c.var, c.value),
            None => dom_choice(solver, rng),
        })
    }

    fn min_count_max_density(
        &self,
        tables: &[Arc<DensityTable>],
        solver: &Solver,
        rng: &mut ChaCha8Rng,
    ) -> Option<Candidate> {
        let mut live: Vec<&Arc<DensityTable>> = tables
            .iter()
            .filter(|t| t.entries.iter().any(|e| !solver.domains().is_bound(e.var)))
            .collect();
        live.sort_by(|a, b| {
            a.log_count
                .partial_cmp(&b.log_count)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.constraint.cmp(&b.constraint))
        });
        let first = live.first()?;
        pick(
            aggregate_scores(std::slice::from_ref(first), solver, Aggregate::Max),
            self.top2,
            rng,
        )
    }

    /// Smallest `|D(x)| / weight(x)`, with `weight` the summed failure
    /// weights (`weighted`) or the number of constraints on `x` having
    /// another unbound variable.
    fn dom_ratio_var(&self, solver: &Solver, weighted: bool, rng: &mut ChaCha8Rng) -> VarId {
        let doms = solver.domains();
        let mut cands = Vec::new();
        for x in doms.vars().filter(|&x| !doms.is_bound(x)) {
            let mut w = 0u64;
            for &c in solver.watchers(x) {
                let free = solver
                    .constraint(c)
                    .scope()
                    .iter()
                    .filter(|&&y| !doms.is_bound(y))
                    .take(2)
                    .count();
                if free > 1 {
                    w += if weighted { self.weights[c] } else { 1 };
                }
            }
            let ratio = if w == 0 {
                f64::INFINITY
            } else {
                doms.size(x) as f64 / w as f64
            };
            cands.push(Candidate {
                var: x,
                value: 0,
                score: -ratio,
            });
        }
        pick(cands, self.top2, rng).unwrap().var
    }

    /// Variable of largest impact-based score; among the best
    /// `ibs_subset`, ties on the estimate are split by re-probing the node,
    /// then at random.
    fn ibs_var(&mut self, solver: &mut Solver, rng: &mut ChaCha8Rng) -> VarId {
        let doms = solver.domains();
        let mut cands: Vec<(VarId, f64)> = doms
            .vars()
            .filter(|&x| !doms.is_bound(x))
            .map(|x| (x, self.impacts.var_impact(solver, x)))
            .collect();
        cands.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0 .0.cmp(&b.0 .0)));
        cands.truncate(self.ibs_subset.max(1));
        let best_estimate = cands[0].1;
        let tied: Vec<VarId> = cands
            .iter()
            .filter(|c| (c.1 - best_estimate).abs() < 1e-12)
            .map(|c| c.0)
            .collect();
        if tied.len() == 1 {
            return tied[0];
        }
        let node: Vec<(VarId, f64)> = tied
            .iter()
            .map(|&x| {
                let score = solver
                    .domains()
                    .values(x)
                    .into_iter()
                    .map(|d| 1.0 - probe(solver, x, d).0)
                    .sum::<f64>();
                (x, score)
            })
            .collect();
        let top = node.iter().map(|n| n.1).fold(f64::NEG_INFINITY, f64::max);
        let best: Vec<VarId> = node
            .iter()
            .filter(|n| (n.1 - top).abs() < 1e-12)
            .map(|n| n.0)
            .collect();
        best[rng.gen_range(0..best.len())]
    }

    fn min_impact_value(&self, solver: &Solver, x: VarId) -> i64 {
        solver
            .domains()
            .iter(x)
            .map(|d| (d, self.impacts.impact(x, d)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)))
            .unwrap()
            .0
    }
}

/// Tries `x = d` at a fresh level and undoes it; returns the impact and
/// whether it failed.
fn probe(solver: &mut Solver, x: VarId, d: i64) -> (f64, bool) {
    let level = solver.level();
    let before = solver.domains().log_space_size();
    let st = solver.push_decision(Decision::Assign(x, d)).expect("value in domain");
    let after = (st == Status::Consistent).then(|| solver.domains().log_space_size());
    solver.backtrack_to(level).expect("level exists");
    (impact_of(before, after), st == Status::Wipeout)
}

/// Highest-density value of `x` over all tables; smallest value when no
/// table covers `x`.
fn best_value(tables: &[Arc<DensityTable>], solver: &Solver, x: VarId) -> Candidate {
    let mut best: Option<Candidate> = None;
    for t in tables {
        if let Some(e) = t.entry(x) {
            for &(value, score) in &e.values {
                let c = Candidate { var: x, value, score };
                if best.is_none_or(|b| better(&c, &b).is_lt()) {
                    best = Some(c);
                }
            }
        }
    }
    best.unwrap_or(Candidate {
        var: x,
        value: solver.domains().min(x).unwrap(),
        score: 0.0,
    })
}

/// Smallest domain, ties and value uniformly at random.
fn dom_choice(solver: &Solver, rng: &mut ChaCha8Rng) -> (VarId, i64) {
    let doms = solver.domains();
    let min = doms
        .vars()
        .filter(|&x| !doms.is_bound(x))
        .map(|x| doms.size(x))
        .min()
        .unwrap();
    let tied: Vec<VarId> = doms.vars().filter(|&x| doms.size(x) == min).collect();
    let x = tied[rng.gen_range(0..tied.len())];
    let vals = doms.values(x);
    (x, vals[rng.gen_range(0..vals.len())])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::VarDensities;
    use crate::engine::Model;
    use crate::knapsack::Knapsack;
    use rand::SeedableRng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn names_round_trip() {
        for k in HeuristicKind::ALL {
            assert_eq!(k.name().parse::<HeuristicKind>().unwrap(), k);
        }
        let err = "best".parse::<HeuristicKind>().unwrap_err().to_string();
        assert!(err.contains("maxSD") && err.contains("domWDeg+maxSD"));
    }

    #[test]
    fn max_sd_on_knapsack_table() {
        let mut m = Model::new();
        let xs = vec![
            m.new_var([0, 1, 2]),
            m.new_var([0, 1, 3]),
            m.new_var([0, 1, 2]),
            m.new_var([1, 2]),
        ];
        m.post(Knapsack::new(xs.clone(), vec![3, 1, 2, 1], 5, 8));
        let mut s = Solver::new(&m);
        s.propagate_all();
        let mut h = Heuristic::new(HeuristicKind::MaxSD, 1);
        assert_eq!(h.select(&mut s, &mut rng()), Some((xs[3], 1)));
    }

    fn table(c: usize, log_count: f64, entries: Vec<(usize, Vec<(i64, f64)>)>) -> Arc<DensityTable> {
        let mut t = DensityTable::new(
            log_count,
            false,
            entries
                .into_iter()
                .map(|(v, values)| VarDensities { var: VarId(v), values })
                .collect(),
        );
        t.constraint = c;
        Arc::new(t)
    }

    #[test]
    fn max_over_constraints() {
        let mut m = Model::new();
        m.new_var([1, 2]);
        let s = Solver::new(&m);
        let tables = vec![
            table(0, 0.0, vec![(0, vec![(1, 0.6), (2, 0.4)])]),
            table(1, 0.0, vec![(0, vec![(1, 0.3), (2, 0.7)])]),
        ];
        let best = pick(aggregate_scores(&tables, &s, Aggregate::Max), false, &mut rng()).unwrap();
        assert_eq!((best.var, best.value), (VarId(0), 2));
    }

    #[test]
    fn count_weighted_average() {
        let w = count_weighted(&[(0.4, 100f64.ln()), (0.9, 0.0)]);
        assert!((w - (100.0 * 0.4 + 0.9) / 101.0).abs() < 1e-12);
    }

    #[test]
    fn impacts() {
        assert_eq!(impact_of(3.0, None), 1.0);
        assert_eq!(impact_of(3.0, Some(3.0)), 0.0);
        let mut st = ImpactState::default();
        st.record(VarId(0), 1, 1.0);
        st.record(VarId(0), 1, 0.0);
        assert_eq!(st.impact(VarId(0), 1), 0.5);
        assert_eq!(st.observations(VarId(0), 1), 2);
    }
}
