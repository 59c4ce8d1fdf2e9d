//! Model, propagation loop, decisions and density caching.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use crate::density::DensityTable;
use crate::domain::{DomainStore, PropResult, VarId};
use crate::error::{Error, Result};

/// Filtering strength requested from a constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Consistency {
    ForwardChecking,
    Bounds,
    #[default]
    Domain,
}

impl std::str::FromStr for Consistency {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fc" | "forward-checking" => Ok(Consistency::ForwardChecking),
            "bounds" | "bc" => Ok(Consistency::Bounds),
            "domain" | "dc" => Ok(Consistency::Domain),
            _ => Err(Error::Invalid(format!("unknown consistency level `{s}`"))),
        }
    }
}

/// A constraint the engine can propagate and, optionally, count.
///
/// `propagate` must leave the constraint at its own fixpoint: the engine does
/// not re-enqueue a constraint because of its own removals.
pub trait Constraint: fmt::Debug + Send + Sync {
    fn name(&self) -> &'static str;

    fn scope(&self) -> &[VarId];

    fn propagate(&self, doms: &mut DomainStore) -> PropResult;

    /// Solution count and densities under the current domains, or `None` when
    /// the constraint has no counting support.
    fn densities(&self, _doms: &DomainStore) -> Option<DensityTable> {
        None
    }

    /// Whether a full assignment of the scope (in scope order) is a solution.
    fn check(&self, values: &[i64]) -> bool;
}

/// Variables, their initial domains, and posted constraints.
#[derive(Debug, Clone, Default)]
pub struct Model {
    doms: DomainStore,
    constraints: Vec<Arc<dyn Constraint>>,
}

impl Model {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn new_var(&mut self, values: impl IntoIterator<Item = i64>) -> VarId {
        self.doms.add_var(values)
    }

    pub fn new_vars(&mut self, n: usize, values: impl IntoIterator<Item = i64> + Clone) -> Vec<VarId> {
        (0..n).map(|_| self.new_var(values.clone())).collect()
    }

    pub fn post(&mut self, c: impl Constraint + 'static) -> usize {
        self.constraints.push(Arc::new(c));
        self.constraints.len() - 1
    }

    pub fn post_arc(&mut self, c: Arc<dyn Constraint>) -> usize {
        self.constraints.push(c);
        self.constraints.len() - 1
    }

    pub fn domains(&self) -> &DomainStore {
        &self.doms
    }

    pub fn domains_mut(&mut self) -> &mut DomainStore {
        &mut self.doms
    }

    pub fn constraints(&self) -> &[Arc<dyn Constraint>] {
        &self.constraints
    }

    pub fn num_vars(&self) -> usize {
        self.doms.num_vars()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Consistent,
    Wipeout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    Assign(VarId, i64),
    Refute(VarId, i64),
}

impl Decision {
    pub fn var(&self) -> VarId {
        match *self {
            Decision::Assign(v, _) | Decision::Refute(v, _) => v,
        }
    }

    pub fn value(&self) -> i64 {
        match *self {
            Decision::Assign(_, d) | Decision::Refute(_, d) => d,
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Decision::Assign(v, d) => write!(f, "{v}={d}"),
            Decision::Refute(v, d) => write!(f, "{v}!={d}"),
        }
    }
}

#[derive(Debug, Clone)]
struct Slot {
    constraint: Arc<dyn Constraint>,
    cache: Option<Arc<DensityTable>>,
    dirty: bool,
}

/// Search-time state of one model: domains, queue, trail and density caches.
#[derive(Debug, Clone)]
pub struct Solver {
    doms: DomainStore,
    slots: Vec<Slot>,
    watchers: Vec<Vec<usize>>,
    queue: VecDeque<usize>,
    in_queue: Vec<bool>,
    cache_trail: Vec<(usize, Option<Arc<DensityTable>>, bool)>,
    cache_marks: Vec<usize>,
    recounts: u64,
    last_failure: Option<usize>,
}

impl Solver {
    pub fn new(model: &Model) -> Self {
        let mut doms = model.doms.clone();
        doms.clear_modified();
        let mut watchers = vec![Vec::new(); doms.num_vars()];
        for (c, con) in model.constraints.iter().enumerate() {
            for v in con.scope() {
                if watchers[v.0].last() != Some(&c) {
                    watchers[v.0].push(c);
                }
            }
        }
        let n = model.constraints.len();
        Solver {
            doms,
            slots: model
                .constraints
                .iter()
                .map(|c| Slot {
                    constraint: Arc::clone(c),
                    cache: None,
                    dirty: true,
                })
                .collect(),
            watchers,
            queue: VecDeque::new(),
            in_queue: vec![false; n],
            cache_trail: Vec::new(),
            cache_marks: Vec::new(),
            recounts: 0,
            last_failure: None,
        }
    }

    pub fn domains(&self) -> &DomainStore {
        &self.doms
    }

    pub fn num_constraints(&self) -> usize {
        self.slots.len()
    }

    pub fn constraint(&self, c: usize) -> &Arc<dyn Constraint> {
        &self.slots[c].constraint
    }

    /// Constraints whose scope contains `v`.
    pub fn watchers(&self, v: VarId) -> &[usize] {
        &self.watchers[v.0]
    }

    pub fn level(&self) -> usize {
        self.doms.level()
    }

    /// Number of counting-routine invocations so far.
    pub fn recounts(&self) -> u64 {
        self.recounts
    }

    /// Constraint responsible for the most recent wipeout, if any.
    pub fn last_failure(&self) -> Option<usize> {
        self.last_failure
    }

    pub fn is_dirty(&self, c: usize) -> bool {
        self.slots[c].dirty
    }

    fn set_slot(&mut self, c: usize, cache: Option<Arc<DensityTable>>, dirty: bool) {
        let slot = &mut self.slots[c];
        let old_cache = std::mem::replace(&mut slot.cache, cache);
        let old_dirty = std::mem::replace(&mut slot.dirty, dirty);
        self.cache_trail.push((c, old_cache, old_dirty));
    }

    fn enqueue(&mut self, c: usize) {
        if !self.in_queue[c] {
            self.in_queue[c] = true;
            self.queue.push_back(c);
        }
    }

    fn handle_modified(&mut self, source: Option<usize>) {
        let modified = self.doms.take_modified();
        for v in modified {
            for i in 0..self.watchers[v.0].len() {
                let c = self.watchers[v.0][i];
                if !self.slots[c].dirty {
                    let cache = self.slots[c].cache.clone();
                    self.set_slot(c, cache, true);
                }
                if Some(c) != source {
                    self.enqueue(c);
                }
            }
        }
    }

    fn clear_queue(&mut self) {
        for c in self.queue.drain(..) {
            self.in_queue[c] = false;
        }
    }

    /// Enqueues every constraint and propagates (root propagation).
    pub fn propagate_all(&mut self) -> Status {
        if self.doms.vars().any(|v| self.doms.is_empty(v)) {
            self.last_failure = None;
            return Status::Wipeout;
        }
        for c in 0..self.slots.len() {
            self.enqueue(c);
        }
        self.propagate()
    }

    /// Runs the FIFO queue until no constraint can filter further.
    pub fn propagate(&mut self) -> Status {
        self.handle_modified(None);
        while let Some(c) = self.queue.pop_front() {
            self.in_queue[c] = false;
            let con = Arc::clone(&self.slots[c].constraint);
            let res = con.propagate(&mut self.doms);
            self.handle_modified(Some(c));
            if res.is_err() {
                self.last_failure = Some(c);
                self.clear_queue();
                return Status::Wipeout;
            }
        }
        Status::Consistent
    }

    fn open_level(&mut self) {
        self.doms.push_level();
        self.cache_marks.push(self.cache_trail.len());
    }

    /// Opens a level, applies `decision`, and propagates.
    pub fn push_decision(&mut self, decision: Decision) -> Result<Status> {
        let (x, d) = (decision.var(), decision.value());
        if !self.doms.contains(x, d) {
            return Err(Error::ValueNotInDomain { var: x, value: d });
        }
        self.open_level();
        self.apply(decision)
    }

    /// Applies `decision` at the current level (no new level) and
    /// propagates; at the root this is permanent.
    pub fn apply(&mut self, decision: Decision) -> Result<Status> {
        let (x, d) = (decision.var(), decision.value());
        if !self.doms.contains(x, d) {
            return Err(Error::ValueNotInDomain { var: x, value: d });
        }
        let applied = match decision {
            Decision::Assign(..) => self.doms.assign(x, d),
            Decision::Refute(..) => self.doms.remove(x, d),
        };
        if applied.is_err() {
            self.handle_modified(None);
            self.clear_queue();
            self.last_failure = None;
            return Ok(Status::Wipeout);
        }
        Ok(self.propagate())
    }

    /// Restores domains and density caches to their content at `level`.
    pub fn backtrack_to(&mut self, level: usize) -> Result<()> {
        let current = self.level();
        if level > current {
            return Err(Error::BadLevel { target: level, current });
        }
        if level == current {
            return Ok(());
        }
        self.clear_queue();
        self.doms.backtrack_to(level);
        let mark = self.cache_marks[level];
        self.cache_marks.truncate(level);
        while self.cache_trail.len() > mark {
            let (c, cache, dirty) = self.cache_trail.pop().unwrap();
            self.slots[c].cache = cache;
            self.slots[c].dirty = dirty;
        }
        Ok(())
    }

    /// Density tables of every counting constraint, recounting only the dirty
    /// ones.
    pub fn collect_densities(&mut self) -> Vec<Arc<DensityTable>> {
        let mut out = Vec::new();
        for c in 0..self.slots.len() {
            if self.slots[c].dirty {
                let fresh = self.recompute_density(c).map(Arc::new);
                self.set_slot(c, fresh, false);
            }
            if let Some(t) = &self.slots[c].cache {
                out.push(Arc::clone(t));
            }
        }
        out
    }

    /// Cached table of `c` if it is clean.
    pub fn cached_density(&self, c: usize) -> Option<&Arc<DensityTable>> {
        if self.slots[c].dirty {
            None
        } else {
            self.slots[c].cache.as_ref()
        }
    }

    /// Invokes the counting routine of `c` without touching the cache.
    pub fn recompute_density(&mut self, c: usize) -> Option<DensityTable> {
        self.recounts += 1;
        self.slots[c].constraint.densities(&self.doms).map(|mut t| {
            t.constraint = c;
            t
        })
    }

    /// Current assignment when every variable is bound.
    pub fn solution(&self) -> Option<Vec<i64>> {
        self.doms.vars().map(|v| self.doms.value(v)).collect()
    }
}
