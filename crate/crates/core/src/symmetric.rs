//! `symmetric_alldifferent`: variable `i` takes the label of variable `j`
//! iff variable `j` takes the label of variable `i`. Counted as perfect
//! matchings of the contracted value graph.

use crate::bounds;
use crate::density::{DensityTable, VarDensities};
use crate::domain::{DomainStore, PropResult, VarId};
use crate::engine::Constraint;

#[derive(Debug, Clone)]
pub struct SymmetricAllDifferent {
    vars: Vec<VarId>,
    labels: Vec<i64>,
    counting: bool,
}

impl SymmetricAllDifferent {
    /// `labels[i]` is the value standing for `vars[i]`.
    pub fn new(vars: Vec<VarId>, labels: Vec<i64>) -> Self {
        assert_eq!(vars.len(), labels.len());
        SymmetricAllDifferent {
            vars,
            labels,
            counting: true,
        }
    }

    /// Same filtering, no counting support (pure channeling).
    pub fn channel(vars: Vec<VarId>, labels: Vec<i64>) -> Self {
        SymmetricAllDifferent {
            counting: false,
            ..Self::new(vars, labels)
        }
    }

    fn label_index(&self, value: i64) -> Option<usize> {
        self.labels.iter().position(|&l| l == value)
    }
}

impl Constraint for SymmetricAllDifferent {
    fn name(&self) -> &'static str {
        if self.counting {
            "symmetric_alldifferent"
        } else {
            "symmetric_channel"
        }
    }

    fn scope(&self) -> &[VarId] {
        &self.vars
    }

    fn propagate(&self, doms: &mut DomainStore) -> PropResult {
        let n = self.vars.len();
        loop {
            let mut changed = false;
            for i in 0..n {
                let x = self.vars[i];
                for val in doms.values(x) {
                    let keep = match self.label_index(val) {
                        Some(j) => j != i && doms.contains(self.vars[j], self.labels[i]),
                        None => false,
                    };
                    if !keep {
                        changed |= doms.remove(x, val)?;
                    }
                }
            }
            for i in 0..n {
                let Some(val) = doms.value(self.vars[i]) else {
                    continue;
                };
                let j = self.label_index(val).unwrap();
                changed |= doms.assign(self.vars[j], self.labels[i])?;
                for k in 0..n {
                    if k != i && k != j {
                        changed |= doms.remove(self.vars[k], self.labels[j])?;
                        changed |= doms.remove(self.vars[k], self.labels[i])?;
                    }
                }
            }
            if !changed {
                return Ok(());
            }
        }
    }

    fn densities(&self, doms: &DomainStore) -> Option<DensityTable> {
        if !self.counting {
            return None;
        }
        let local: Vec<Vec<i64>> = self.vars.iter().map(|&v| doms.values(v)).collect();
        Some(symmetric_densities(&self.vars, &self.labels, &local))
    }

    fn check(&self, values: &[i64]) -> bool {
        (0..values.len()).all(|i| match self.label_index(values[i]) {
            Some(j) => j != i && values[j] == self.labels[i],
            None => false,
        })
    }
}

/// Contracted value graph: variables already paired (one endpoint bound to
/// the other's label) are taken out, the rest keep their mutual edges.
struct Contracted {
    /// Scope positions of the unpaired variables.
    free: Vec<usize>,
    adj: Vec<Vec<usize>>,
    /// Partner of each paired variable.
    mate: Vec<Option<usize>>,
    infeasible: bool,
}

impl Contracted {
    fn new(labels: &[i64], doms: &[Vec<i64>]) -> Self {
        let n = labels.len();
        let index = |val: i64| labels.iter().position(|&l| l == val);
        let mut mate: Vec<Option<usize>> = vec![None; n];
        let mut infeasible = doms.iter().any(|d| d.is_empty());
        for i in (0..n).filter(|&i| doms[i].len() == 1) {
            match index(doms[i][0]) {
                Some(j) if j != i && doms[j].contains(&labels[i]) => {
                    if mate[i].is_some_and(|m| m != j) || mate[j].is_some_and(|m| m != i) {
                        infeasible = true;
                    }
                    mate[i] = Some(j);
                    mate[j] = Some(i);
                }
                _ => infeasible = true,
            }
        }
        let free: Vec<usize> = (0..n).filter(|&i| mate[i].is_none()).collect();
        let mut adj = vec![Vec::new(); free.len()];
        for (a, &i) in free.iter().enumerate() {
            for &val in &doms[i] {
                let Some(j) = index(val) else {
                    continue;
                };
                if j == i || !doms[j].contains(&labels[i]) {
                    continue;
                }
                if let Some(b) = free.iter().position(|&f| f == j) {
                    adj[a].push(b);
                }
            }
        }
        Contracted { free, adj, mate, infeasible }
    }

    fn degrees(&self) -> Vec<usize> {
        self.adj.iter().map(|a| a.len()).collect()
    }

    fn log_count(&self) -> f64 {
        if self.infeasible {
            return f64::NEG_INFINITY;
        }
        bounds::matching_bound(&self.degrees())
    }
}

/// Friedland bound on the number of perfect matchings of the contracted
/// graph of the unpaired variables.
pub fn symmetric_log_count(labels: &[i64], doms: &[Vec<i64>]) -> f64 {
    Contracted::new(labels, doms).log_count()
}

pub fn symmetric_densities(vars: &[VarId], labels: &[i64], doms: &[Vec<i64>]) -> DensityTable {
    let g = Contracted::new(labels, doms);
    let degrees = g.degrees();
    let log_count = g.log_count();
    let mut entries = Vec::new();
    for i in (0..labels.len()).filter(|&i| doms[i].len() > 1) {
        let values = &doms[i];
        let weights: Vec<f64> = match (g.infeasible, g.mate[i]) {
            (true, _) => vec![f64::NEG_INFINITY; values.len()],
            // paired through its partner: only the partner's label survives
            (false, Some(j)) => values
                .iter()
                .map(|&v| if v == labels[j] { 0.0 } else { f64::NEG_INFINITY })
                .collect(),
            (false, None) => {
                let a = g.free.iter().position(|&f| f == i).unwrap();
                values
                    .iter()
                    .map(|&val| {
                        let b = labels
                            .iter()
                            .position(|&l| l == val)
                            .and_then(|j| g.free.iter().position(|&f| f == j));
                        let Some(b) = b.filter(|b| g.adj[a].contains(b)) else {
                            return f64::NEG_INFINITY;
                        };
                        // drop both endpoints and every edge touching them
                        let mut deg = degrees.clone();
                        for &k in g.adj[a].iter().chain(&g.adj[b]) {
                            deg[k] -= 1;
                        }
                        let rest: Vec<usize> = (0..deg.len()).filter(|&k| k != a && k != b).map(|k| deg[k]).collect();
                        bounds::matching_bound(&rest)
                    })
                    .collect()
            }
        };
        entries.push(VarDensities::from_log_weights(vars[i], values, &weights));
    }
    DensityTable::new(log_count, false, entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{Model, Solver, Status};

    fn full(n: usize) -> (Vec<i64>, Vec<Vec<i64>>) {
        let labels: Vec<i64> = (1..=n as i64).collect();
        let doms = (0..n)
            .map(|i| labels.iter().copied().filter(|&l| l != i as i64 + 1).collect())
            .collect();
        (labels, doms)
    }

    #[test]
    fn k6_friedland() {
        let (labels, doms) = full(6);
        let c = symmetric_log_count(&labels, &doms).exp();
        assert!((c - 17.68).abs() < 0.01, "{c}");
    }

    #[test]
    fn bound_variable_pairs_its_partner() {
        // vertex 5 only knows 2; the rest is a path 0-1-3-4 plus 0-2
        let labels: Vec<i64> = (0..6).collect();
        let doms = vec![vec![1, 2], vec![0, 2, 3, 4], vec![0, 1, 3, 5], vec![1, 2, 4], vec![1, 3], vec![2]];
        assert!(symmetric_log_count(&labels, &doms).exp() >= 1.0);
        let t = symmetric_densities(&(0..6).map(VarId).collect::<Vec<_>>(), &labels, &doms);
        assert_eq!(t.density(VarId(2), 5), Some(1.0));
        let clash = vec![vec![1], vec![0], vec![1], vec![0, 1]];
        assert_eq!(symmetric_log_count(&labels[..4], &clash), f64::NEG_INFINITY);
    }

    #[test]
    fn single_edge() {
        let (labels, doms) = full(2);
        assert!(symmetric_log_count(&labels, &doms).abs() < 1e-12);
    }

    #[test]
    fn k4_bound() {
        let (labels, doms) = full(4);
        let c = symmetric_log_count(&labels, &doms).exp();
        assert!((c - 6f64.powf(4.0 / 6.0)).abs() < 1e-9);
        assert!(c >= 3.0);
        let t = symmetric_densities(&(0..4).map(VarId).collect::<Vec<_>>(), &labels, &doms);
        for e in &t.entries {
            for &(_, d) in &e.values {
                assert!((d - 1.0 / 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn odd_vertex_count_is_zero() {
        let (labels, doms) = full(3);
        assert_eq!(symmetric_log_count(&labels, &doms), f64::NEG_INFINITY);
    }

    #[test]
    fn assignment_channels() {
        let mut m = Model::new();
        let xs: Vec<VarId> = (0..4).map(|i| m.new_var((1..=4).filter(move |&v| v != i + 1))).collect();
        m.post(SymmetricAllDifferent::new(xs.clone(), vec![1, 2, 3, 4]));
        let mut s = Solver::new(&m);
        assert_eq!(s.propagate_all(), Status::Consistent);
        s.push_decision(crate::engine::Decision::Assign(xs[0], 3)).unwrap();
        assert_eq!(s.domains().values(xs[2]), vec![1]);
        assert_eq!(s.domains().values(xs[1]), vec![4]);
        assert_eq!(s.domains().values(xs[3]), vec![2]);
    }
}
