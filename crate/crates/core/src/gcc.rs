//! Global cardinality constraint: filtering and counting through the lower
//! bound graph and the residual upper bound graph.

use crate::bounds::{self, ln_factorial};
use crate::density::{DensityTable, VarDensities};
use crate::domain::{DomainStore, PropResult, VarId, Wipeout};
use crate::engine::{Consistency, Constraint};

/// Occurrence bounds of one value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Card {
    pub value: i64,
    pub lower: usize,
    pub upper: usize,
}

impl Card {
    pub fn new(value: i64, lower: usize, upper: usize) -> Self {
        Card { value, lower, upper }
    }
}

/// `gcc(X, l, u)`. Values without a [`Card`] may not be taken.
#[derive(Debug, Clone)]
pub struct Gcc {
    vars: Vec<VarId>,
    cards: Vec<Card>,
    consistency: Consistency,
}

impl Gcc {
    pub fn new(vars: Vec<VarId>, mut cards: Vec<Card>, consistency: Consistency) -> Self {
        cards.sort_by_key(|c| c.value);
        Gcc {
            vars,
            cards,
            consistency,
        }
    }

    pub fn cards(&self) -> &[Card] {
        &self.cards
    }

    fn card(&self, value: i64) -> Option<&Card> {
        self.cards
            .binary_search_by_key(&value, |c| c.value)
            .ok()
            .map(|i| &self.cards[i])
    }

    fn propagate_counting(&self, doms: &mut DomainStore) -> PropResult {
        for &x in &self.vars {
            doms.retain(x, |v| self.card(v).is_some_and(|c| c.upper > 0))?;
        }
        loop {
            let mut changed = false;
            for c in &self.cards {
                let bound = self
                    .vars
                    .iter()
                    .filter(|&&x| doms.value(x) == Some(c.value))
                    .count();
                let possible = self.vars.iter().filter(|&&x| doms.contains(x, c.value)).count();
                if bound > c.upper || possible < c.lower {
                    return Err(Wipeout);
                }
                if bound == c.upper && possible > bound {
                    for &x in &self.vars {
                        if !doms.is_bound(x) {
                            changed |= doms.remove(x, c.value)?;
                        }
                    }
                } else if possible == c.lower && possible > bound {
                    for &x in &self.vars {
                        if doms.contains(x, c.value) {
                            changed |= doms.assign(x, c.value)?;
                        }
                    }
                }
            }
            if !changed {
                return Ok(());
            }
        }
    }

    fn propagate_dc(&self, doms: &mut DomainStore) -> PropResult {
        self.propagate_counting(doms)?;
        let local: Vec<Vec<i64>> = self.vars.iter().map(|&v| doms.values(v)).collect();
        let (lower, upper) = self.bound_vectors();
        let values: Vec<i64> = self.cards.iter().map(|c| c.value).collect();
        if !gcc_feasible(&local, &values, &lower, &upper) {
            return Err(Wipeout);
        }
        for (i, &x) in self.vars.iter().enumerate() {
            if local[i].len() == 1 {
                continue;
            }
            for &val in &local[i] {
                let mut probe = local.clone();
                probe[i] = vec![val];
                if !gcc_feasible(&probe, &values, &lower, &upper) {
                    doms.remove(x, val)?;
                }
            }
        }
        Ok(())
    }

    fn bound_vectors(&self) -> (Vec<usize>, Vec<usize>) {
        (
            self.cards.iter().map(|c| c.lower).collect(),
            self.cards.iter().map(|c| c.upper).collect(),
        )
    }
}

impl Constraint for Gcc {
    fn name(&self) -> &'static str {
        "gcc"
    }

    fn scope(&self) -> &[VarId] {
        &self.vars
    }

    fn propagate(&self, doms: &mut DomainStore) -> PropResult {
        match self.consistency {
            Consistency::Domain => self.propagate_dc(doms),
            _ => self.propagate_counting(doms),
        }
    }

    fn densities(&self, doms: &DomainStore) -> Option<DensityTable> {
        let local: Vec<Vec<i64>> = self.vars.iter().map(|&v| doms.values(v)).collect();
        Some(gcc_densities(&self.vars, &local, &self.cards))
    }

    fn check(&self, values: &[i64]) -> bool {
        values.iter().all(|&v| self.card(v).is_some())
            && self.cards.iter().all(|c| {
                let n = values.iter().filter(|&&v| v == c.value).count();
                c.lower <= n && n <= c.upper
            })
    }
}

/// Whether some assignment of `doms` meets every lower and upper bound
/// (`values[k]` with bounds `lower[k]`, `upper[k]`; other values forbidden).
pub fn gcc_feasible(doms: &[Vec<i64>], values: &[i64], lower: &[usize], upper: &[usize]) -> bool {
    let n = doms.len();
    if lower.iter().sum::<usize>() > n {
        return false;
    }
    let adj: Vec<Vec<usize>> = doms
        .iter()
        .map(|d| d.iter().filter_map(|v| values.binary_search(v).ok()).collect())
        .collect();
    let mut assigned = vec![usize::MAX; n];
    let mut load = vec![0usize; values.len()];
    // Saturate the lower bounds first, then extend up to the upper bounds;
    // augmenting never lowers the load of a value.
    for (phase, cap) in [lower, upper].into_iter().enumerate() {
        for x in 0..n {
            if assigned[x] != usize::MAX {
                continue;
            }
            let mut seen = vec![false; values.len()];
            augment_capacitated(x, &adj, cap, &mut assigned, &mut load, &mut seen);
        }
        if phase == 0 && load.iter().zip(lower).any(|(l, lo)| l < lo) {
            return false;
        }
    }
    assigned.iter().all(|&a| a != usize::MAX)
}

fn augment_capacitated(
    x: usize,
    adj: &[Vec<usize>],
    cap: &[usize],
    assigned: &mut [usize],
    load: &mut [usize],
    seen: &mut [bool],
) -> bool {
    for &d in &adj[x] {
        if seen[d] {
            continue;
        }
        seen[d] = true;
        if load[d] < cap[d] {
            assigned[x] = d;
            load[d] += 1;
            return true;
        }
        for y in 0..assigned.len() {
            if assigned[y] == d && augment_capacitated(y, adj, cap, assigned, load, seen) {
                // y moved away; x takes its unit of d
                load[d] -= 1;
                assigned[x] = d;
                load[d] += 1;
                return true;
            }
        }
    }
    false
}

/// Counting view of a gcc under given domains.
#[derive(Debug, Clone)]
pub struct GccState {
    /// Residual lower bounds `l'_d` (card order).
    pub lower: Vec<usize>,
    /// Residual upper bounds `u'_d` (card order).
    pub upper: Vec<usize>,
    /// Scope positions of the unbound variables.
    pub unbound: Vec<usize>,
    /// Card indices of each unbound variable's values.
    pub doms: Vec<Vec<usize>>,
    /// Variables still to assign once the lower bounds are met.
    pub k: usize,
    pub infeasible: bool,
}

impl GccState {
    /// Builds the residual problem; bound variables are removed and their
    /// values' bounds decremented, cascading over values whose upper bound
    /// drops to zero.
    pub fn from_domains(doms: &[Vec<i64>], cards: &[Card]) -> Self {
        let values: Vec<i64> = cards.iter().map(|c| c.value).collect();
        let mut local: Vec<Vec<usize>> = doms
            .iter()
            .map(|d| d.iter().filter_map(|v| values.binary_search(v).ok()).collect())
            .collect();
        let mut lower: Vec<usize> = cards.iter().map(|c| c.lower).collect();
        let mut upper: Vec<usize> = cards.iter().map(|c| c.upper).collect();
        let mut infeasible = local.iter().any(|d| d.is_empty());
        let mut bound = vec![false; local.len()];
        while !infeasible {
            let Some(i) = (0..local.len()).find(|&i| !bound[i] && local[i].len() == 1) else {
                break;
            };
            bound[i] = true;
            let d = local[i][0];
            if upper[d] == 0 {
                infeasible = true;
                break;
            }
            upper[d] -= 1;
            lower[d] = lower[d].saturating_sub(1);
            if upper[d] == 0 {
                for (j, dom) in local.iter_mut().enumerate() {
                    if !bound[j] {
                        dom.retain(|&e| e != d);
                        if dom.is_empty() {
                            infeasible = true;
                        }
                    }
                }
            }
        }
        let unbound: Vec<usize> = (0..local.len()).filter(|&i| !bound[i]).collect();
        let rdoms: Vec<Vec<usize>> = unbound.iter().map(|&i| local[i].clone()).collect();
        let total_lower: usize = lower.iter().sum();
        if total_lower > unbound.len() {
            infeasible = true;
        }
        GccState {
            k: unbound.len().saturating_sub(total_lower),
            lower,
            upper,
            unbound,
            doms: rdoms,
            infeasible,
        }
    }

    /// `ln` of the bound on the lower bound graph, divided by the scaling of
    /// the duplicated value vertices and of the fake value vertices.
    pub fn lower_log_bound(&self) -> f64 {
        let total: usize = self.lower.iter().sum();
        if total == 0 {
            return 0.0;
        }
        let rows: Vec<usize> = self
            .doms
            .iter()
            .map(|d| d.iter().map(|&v| self.lower[v]).sum::<usize>())
            .filter(|&r| r > 0)
            .collect();
        if rows.len() < total {
            return f64::NEG_INFINITY;
        }
        let fake = rows.len() - total;
        let degrees: Vec<usize> = rows.iter().map(|r| r + fake).collect();
        let pair = bounds::padded_bound(&degrees, 0, 0);
        let scale: f64 = self.lower.iter().map(|&l| ln_factorial(l)).sum::<f64>() + ln_factorial(fake);
        pair.min() - scale
    }

    /// Residual copies `u'_d - l'_d`, dropping values no unbound variable can
    /// take.
    fn residual_copies(&self) -> Vec<usize> {
        let mut used = vec![false; self.lower.len()];
        for d in &self.doms {
            for &v in d {
                used[v] = true;
            }
        }
        (0..self.lower.len())
            .map(|v| if used[v] { self.upper[v] - self.lower[v] } else { 0 })
            .collect()
    }

    /// Undivided bounds on the residual upper bound graph restricted to the
    /// `K` variables of largest degree, padded with fake variables.
    pub fn upper_bounds(&self) -> bounds::PairBound {
        let s = self.residual_copies();
        let total: usize = s.iter().sum();
        let degrees: Vec<usize> = self
            .doms
            .iter()
            .map(|d| d.iter().map(|&v| s[v]).sum())
            .collect();
        if self.k > total {
            return bounds::PairBound {
                log_bm: f64::NEG_INFINITY,
                log_lb: f64::NEG_INFINITY,
            };
        }
        let mut order: Vec<usize> = (0..degrees.len()).collect();
        order.sort_by(|&a, &b| degrees[b].cmp(&degrees[a]).then(a.cmp(&b)));
        let mut chosen: Vec<usize> = order[..self.k].to_vec();
        chosen.sort_unstable();
        let rows: Vec<usize> = chosen.iter().map(|&i| degrees[i]).collect();
        bounds::padded_bound(&rows, total - self.k, total)
    }

    /// Scaling of the residual graph: duplicated value vertices and fake
    /// variables, less the largest number of ways the fake variables can
    /// share the copies left over by one assignment.
    pub fn upper_log_divisor(&self) -> f64 {
        let s = self.residual_copies();
        let total: usize = s.iter().sum();
        let fake = total.saturating_sub(self.k);
        let mut left = fake;
        let mut sorted = s.clone();
        sorted.sort_unstable_by(|a, b| b.cmp(a));
        let mut spread = 0.0;
        for c in sorted {
            let t = c.min(left);
            spread += ln_factorial(t);
            left -= t;
        }
        s.iter().map(|&c| ln_factorial(c)).sum::<f64>() + ln_factorial(fake) - spread
    }

    pub fn upper_log_bound(&self) -> f64 {
        self.upper_bounds().min() - self.upper_log_divisor()
    }

    pub fn log_count(&self) -> f64 {
        if self.infeasible {
            return f64::NEG_INFINITY;
        }
        let lower = self.lower_log_bound();
        if lower == f64::NEG_INFINITY {
            return lower;
        }
        lower + self.upper_bounds().min() - self.upper_log_divisor()
    }
}

pub fn gcc_log_count(doms: &[Vec<i64>], cards: &[Card]) -> f64 {
    let mut cards = cards.to_vec();
    cards.sort_by_key(|c| c.value);
    GccState::from_domains(doms, &cards).log_count()
}

/// Densities by local probes: each pair is tried as a temporary assignment
/// and the residual bound recomputed.
pub fn gcc_densities(vars: &[VarId], doms: &[Vec<i64>], cards: &[Card]) -> DensityTable {
    let state = GccState::from_domains(doms, cards);
    let log_count = state.log_count();
    let mut entries = Vec::new();
    let mut probe = doms.to_vec();
    for (i, d) in doms.iter().enumerate() {
        if d.len() <= 1 {
            continue;
        }
        let weights: Vec<f64> = d
            .iter()
            .map(|&val| {
                if state.infeasible {
                    return 0.0;
                }
                probe[i] = vec![val];
                GccState::from_domains(&probe, cards).log_count()
            })
            .collect();
        probe[i] = d.clone();
        entries.push(VarDensities::from_log_weights(vars[i], d, &weights));
    }
    DensityTable::new(log_count, false, entries)
}
