//! `alldifferent`: filtering (forward checking, bounds, domain) and
//! permanent-bound based counting.

use crate::bounds::{self, log_bm_factor, PairBound};
use crate::density::{DensityTable, VarDensities};
use crate::domain::{DomainStore, PropResult, VarId, Wipeout};
use crate::engine::{Consistency, Constraint};

/// Filtering applied inside a local probe when computing densities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProbeConsistency {
    #[default]
    ForwardChecking,
    Domain,
}

#[derive(Debug, Clone)]
pub struct AllDifferent {
    vars: Vec<VarId>,
    consistency: Consistency,
    probe: ProbeConsistency,
}

impl AllDifferent {
    pub fn new(vars: Vec<VarId>, consistency: Consistency) -> Self {
        AllDifferent {
            vars,
            consistency,
            probe: ProbeConsistency::ForwardChecking,
        }
    }

    pub fn with_probe(mut self, probe: ProbeConsistency) -> Self {
        self.probe = probe;
        self
    }

    fn local_domains(&self, doms: &DomainStore) -> Vec<Vec<i64>> {
        self.vars.iter().map(|&v| doms.values(v)).collect()
    }

    fn propagate_fc(&self, doms: &mut DomainStore) -> PropResult {
        let mut done = vec![false; self.vars.len()];
        loop {
            let mut progress = false;
            for i in 0..self.vars.len() {
                if done[i] || !doms.is_bound(self.vars[i]) {
                    continue;
                }
                done[i] = true;
                progress = true;
                let val = doms.value(self.vars[i]).unwrap();
                for (j, &w) in self.vars.iter().enumerate() {
                    if j != i {
                        doms.remove(w, val)?;
                    }
                }
            }
            if !progress {
                return Ok(());
            }
        }
    }

    fn propagate_bounds(&self, doms: &mut DomainStore) -> PropResult {
        self.propagate_fc(doms)?;
        loop {
            let mut changed = false;
            let mins: Vec<i64> = self.vars.iter().map(|&v| doms.min(v).unwrap()).collect();
            let maxs: Vec<i64> = self.vars.iter().map(|&v| doms.max(v).unwrap()).collect();
            let mut lows = mins.clone();
            lows.sort_unstable();
            lows.dedup();
            let mut highs = maxs.clone();
            highs.sort_unstable();
            highs.dedup();
            'outer: for &a in &lows {
                for &b in highs.iter().filter(|&&b| b >= a) {
                    let inside: Vec<usize> = (0..self.vars.len())
                        .filter(|&i| mins[i] >= a && maxs[i] <= b)
                        .collect();
                    let width = (b - a + 1) as usize;
                    if inside.len() > width {
                        return Err(Wipeout);
                    }
                    if inside.len() == width {
                        for (i, &v) in self.vars.iter().enumerate() {
                            if inside.contains(&i) {
                                continue;
                            }
                            if mins[i] >= a && mins[i] <= b {
                                changed |= doms.remove_below(v, b + 1)?;
                            }
                            if maxs[i] >= a && maxs[i] <= b {
                                changed |= doms.remove_above(v, a - 1)?;
                            }
                        }
                        if changed {
                            break 'outer;
                        }
                    }
                }
            }
            if !changed {
                return Ok(());
            }
            self.propagate_fc(doms)?;
        }
    }

    fn propagate_dc(&self, doms: &mut DomainStore) -> PropResult {
        let local = self.local_domains(doms);
        let keep = regin_filter(&local).ok_or(Wipeout)?;
        for (i, &v) in self.vars.iter().enumerate() {
            for (k, &val) in local[i].iter().enumerate() {
                if !keep[i][k] {
                    doms.remove(v, val)?;
                }
            }
        }
        Ok(())
    }
}

impl Constraint for AllDifferent {
    fn name(&self) -> &'static str {
        "alldifferent"
    }

    fn scope(&self) -> &[VarId] {
        &self.vars
    }

    fn propagate(&self, doms: &mut DomainStore) -> PropResult {
        match self.consistency {
            Consistency::ForwardChecking => self.propagate_fc(doms),
            Consistency::Bounds => self.propagate_bounds(doms),
            Consistency::Domain => self.propagate_dc(doms),
        }
    }

    fn densities(&self, doms: &DomainStore) -> Option<DensityTable> {
        let local = self.local_domains(doms);
        Some(alldiff_densities(&self.vars, &local, self.probe))
    }

    fn check(&self, values: &[i64]) -> bool {
        let mut v = values.to_vec();
        v.sort_unstable();
        v.windows(2).all(|w| w[0] != w[1])
    }
}

/// Régin's filter: for each variable, which of its values belong to some
/// maximum matching. `None` when no matching covers every variable.
pub fn regin_filter(doms: &[Vec<i64>]) -> Option<Vec<Vec<bool>>> {
    let n = doms.len();
    let mut values: Vec<i64> = doms.iter().flatten().copied().collect();
    values.sort_unstable();
    values.dedup();
    let k = values.len();
    if k < n {
        return None;
    }
    let adj: Vec<Vec<usize>> = doms
        .iter()
        .map(|d| d.iter().map(|v| values.binary_search(v).unwrap()).collect())
        .collect();

    let mut match_var = vec![usize::MAX; n];
    let mut match_val = vec![usize::MAX; k];
    // greedy start
    for x in 0..n {
        if let Some(&v) = adj[x].iter().find(|&&v| match_val[v] == usize::MAX) {
            match_var[x] = v;
            match_val[v] = x;
        }
    }
    for x in 0..n {
        if match_var[x] != usize::MAX {
            continue;
        }
        let mut seen = vec![false; k];
        if !augment(x, &adj, &mut match_var, &mut match_val, &mut seen) {
            return None;
        }
    }

    // Directed graph: var -> matched value, value -> var along free edges.
    let nodes = n + k;
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    for x in 0..n {
        for &v in &adj[x] {
            if match_var[x] == v {
                succ[x].push(n + v);
            } else {
                succ[n + v].push(x);
            }
        }
    }
    // values reachable from free values
    let mut reach = vec![false; nodes];
    let mut stack: Vec<usize> = (0..k).filter(|&v| match_val[v] == usize::MAX).map(|v| n + v).collect();
    for &s in &stack {
        reach[s] = true;
    }
    while let Some(u) = stack.pop() {
        for &w in &succ[u] {
            if !reach[w] {
                reach[w] = true;
                stack.push(w);
            }
        }
    }
    let comp = tarjan_scc(&succ);
    Some(
        (0..n)
            .map(|x| {
                adj[x]
                    .iter()
                    .map(|&v| match_var[x] == v || reach[n + v] || comp[x] == comp[n + v])
                    .collect()
            })
            .collect(),
    )
}

fn augment(
    x: usize,
    adj: &[Vec<usize>],
    match_var: &mut [usize],
    match_val: &mut [usize],
    seen: &mut [bool],
) -> bool {
    for &v in &adj[x] {
        if seen[v] {
            continue;
        }
        seen[v] = true;
        if match_val[v] == usize::MAX || augment(match_val[v], adj, match_var, match_val, seen) {
            match_var[x] = v;
            match_val[v] = x;
            return true;
        }
    }
    false
}

/// Iterative Tarjan; returns the component id of every node.
pub(crate) fn tarjan_scc(succ: &[Vec<usize>]) -> Vec<usize> {
    let n = succ.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![usize::MAX; n];
    let mut stack = Vec::new();
    let mut next = 0;
    let mut ncomp = 0;
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (u, ref mut pos)) = call.last_mut() {
            if *pos < succ[u].len() {
                let w = succ[u][*pos];
                *pos += 1;
                if index[w] == usize::MAX {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[u] = low[u].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(p, _)) = call.last() {
                    low[p] = low[p].min(low[u]);
                }
                if low[u] == index[u] {
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp[w] = ncomp;
                        if w == u {
                            break;
                        }
                    }
                    ncomp += 1;
                }
            }
        }
    }
    comp
}

/// Counting view of one `alldifferent`: the 0-1 matrix of the unbound
/// variables against the union of their values, padded with all-ones rows
/// when there are more values than variables.
#[derive(Debug, Clone)]
pub struct AlldiffState {
    /// Scope positions of the unbound variables (matrix rows).
    pub rows: Vec<usize>,
    /// Column indices of each row.
    pub row_cols: Vec<Vec<usize>>,
    /// Value of each column.
    pub values: Vec<i64>,
    /// Rows containing each column.
    pub col_rows: Vec<Vec<usize>>,
    /// Number of all-ones padding rows.
    pub padding: usize,
    pub infeasible: bool,
}

impl AlldiffState {
    /// Builds the matrix after removing the values of bound variables from
    /// the others (forward checking), which leaves the count unchanged.
    pub fn from_domains(doms: &[Vec<i64>]) -> Self {
        let mut local: Vec<Vec<i64>> = doms.to_vec();
        let mut infeasible = local.iter().any(|d| d.is_empty());
        let mut bound_done = vec![false; local.len()];
        while !infeasible {
            let Some(i) = (0..local.len()).find(|&i| !bound_done[i] && local[i].len() == 1) else {
                break;
            };
            bound_done[i] = true;
            let val = local[i][0];
            for j in 0..local.len() {
                if j != i {
                    local[j].retain(|&x| x != val);
                    if local[j].is_empty() {
                        infeasible = true;
                    }
                }
            }
        }
        let rows: Vec<usize> = (0..local.len()).filter(|&i| !bound_done[i]).collect();
        let mut values: Vec<i64> = rows.iter().flat_map(|&i| local[i].iter().copied()).collect();
        values.sort_unstable();
        values.dedup();
        let row_cols: Vec<Vec<usize>> = rows
            .iter()
            .map(|&i| local[i].iter().map(|v| values.binary_search(v).unwrap()).collect())
            .collect();
        let mut col_rows = vec![Vec::new(); values.len()];
        for (r, cols) in row_cols.iter().enumerate() {
            for &c in cols {
                col_rows[c].push(r);
            }
        }
        if values.len() < rows.len() {
            infeasible = true;
        }
        AlldiffState {
            padding: values.len().saturating_sub(rows.len()),
            rows,
            row_cols,
            values,
            col_rows,
            infeasible,
        }
    }

    pub fn row_sums(&self) -> Vec<usize> {
        self.row_cols.iter().map(|c| c.len()).collect()
    }

    /// Undivided bounds of the padded matrix.
    pub fn bounds(&self) -> PairBound {
        if self.infeasible {
            return PairBound {
                log_bm: f64::NEG_INFINITY,
                log_lb: f64::NEG_INFINITY,
            };
        }
        bounds::padded_bound(&self.row_sums(), self.padding, self.values.len())
    }

    /// `ln` of `min(UB_BM, UB_LB) / p!`.
    pub fn log_count(&self) -> f64 {
        self.bounds().min() - bounds::ln_factorial(self.padding)
    }

    /// Rows whose sum changes under the probe `row = col` (the probed row
    /// included).
    pub fn probe_modified(&self, row: usize, col: usize) -> Vec<usize> {
        let mut out = vec![row];
        out.extend(self.col_rows[col].iter().copied().filter(|&k| k != row));
        out
    }

    /// Brégman-Minc bound of the probed matrix, obtained from the bound of
    /// the whole matrix by multiplying the ratios of the changed rows.
    ///
    /// The probed matrix drops the probed row and column: padding rows lose
    /// one entry each.
    pub fn probe_bm_incremental(&self, whole_bm: f64, row: usize, col: usize) -> f64 {
        let sums = &self.row_cols;
        let mut ub = whole_bm - log_bm_factor(sums[row].len());
        if self.padding > 0 {
            let m = self.values.len();
            ub += self.padding as f64 * (log_bm_factor(m - 1) - log_bm_factor(m));
        }
        for &k in &self.col_rows[col] {
            if k == row {
                continue;
            }
            let r = sums[k].len();
            if r == 1 {
                return f64::NEG_INFINITY;
            }
            ub += log_bm_factor(r - 1) - log_bm_factor(r);
        }
        ub
    }

    /// Both bounds of the probed matrix computed from scratch.
    pub fn probe_from_scratch(&self, row: usize, col: usize) -> PairBound {
        let mut sums = Vec::with_capacity(self.rows.len());
        for (k, cols) in self.row_cols.iter().enumerate() {
            if k == row {
                continue;
            }
            sums.push(cols.len() - usize::from(cols.contains(&col)));
        }
        let pad_degree = self.values.len() - 1;
        bounds::padded_bound(&sums, self.padding, pad_degree)
    }

    fn histogram(&self) -> Vec<usize> {
        let mut hist = vec![0; self.values.len() + 1];
        for c in &self.row_cols {
            hist[c.len()] += 1;
        }
        hist[self.values.len()] += self.padding;
        hist
    }

    /// Log weights (unnormalized densities) of every value of row `row`
    /// under forward-checking probes, following the incremental scheme.
    pub fn probe_weights_fc(&self, row: usize, whole_bm: f64, hist: &mut [usize]) -> Vec<f64> {
        let ln_p = bounds::ln_factorial(self.padding);
        let m = self.values.len();
        self.row_cols[row]
            .iter()
            .map(|&col| {
                let bm = self.probe_bm_incremental(whole_bm, row, col);
                if bm == f64::NEG_INFINITY {
                    return bm;
                }
                // Liang-Bai from the updated histogram of row sums.
                let modified = self.probe_modified(row, col);
                hist[self.row_cols[row].len()] -= 1;
                for &k in &modified[1..] {
                    let r = self.row_cols[k].len();
                    hist[r] -= 1;
                    hist[r - 1] += 1;
                }
                if self.padding > 0 {
                    hist[m] -= self.padding;
                    hist[m - 1] += self.padding;
                }
                let lb = bounds::lb_from_histogram(hist);
                if self.padding > 0 {
                    hist[m - 1] -= self.padding;
                    hist[m] += self.padding;
                }
                for &k in &modified[1..] {
                    let r = self.row_cols[k].len();
                    hist[r - 1] -= 1;
                    hist[r] += 1;
                }
                hist[self.row_cols[row].len()] += 1;
                bm.min(lb) - ln_p
            })
            .collect()
    }
}

/// Count bound and densities of `alldifferent` over `doms` (scope order).
pub fn alldiff_densities(vars: &[VarId], doms: &[Vec<i64>], probe: ProbeConsistency) -> DensityTable {
    let state = AlldiffState::from_domains(doms);
    let log_count = state.log_count();
    let mut entries = Vec::with_capacity(state.rows.len());
    if state.infeasible {
        for (i, d) in doms.iter().enumerate() {
            if d.len() > 1 {
                entries.push(VarDensities::from_log_weights(vars[i], d, &vec![0.0; d.len()]));
            }
        }
        return DensityTable::new(f64::NEG_INFINITY, false, entries);
    }
    let whole = state.bounds();
    let mut hist = state.histogram();
    for (r, &pos) in state.rows.iter().enumerate() {
        let vals: Vec<i64> = state.row_cols[r].iter().map(|&c| state.values[c]).collect();
        let weights = match probe {
            ProbeConsistency::ForwardChecking => state.probe_weights_fc(r, whole.log_bm, &mut hist),
            ProbeConsistency::Domain => vals
                .iter()
                .map(|&val| {
                    let mut local = doms.to_vec();
                    local[pos] = vec![val];
                    match regin_filter(&local) {
                        None => f64::NEG_INFINITY,
                        Some(keep) => {
                            for (i, d) in local.iter_mut().enumerate() {
                                let mut k = keep[i].iter();
                                d.retain(|_| *k.next().unwrap());
                            }
                            AlldiffState::from_domains(&local).log_count()
                        }
                    }
                })
                .collect(),
        };
        entries.push(VarDensities::from_log_weights(vars[pos], &vals, &weights));
    }
    DensityTable::new(log_count, false, entries)
}

/// Count bound of `alldifferent` over `doms`.
pub fn alldiff_log_count(doms: &[Vec<i64>]) -> f64 {
    AlldiffState::from_domains(doms).log_count()
}
