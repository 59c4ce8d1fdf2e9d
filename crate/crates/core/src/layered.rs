//! Acyclic layered graphs whose source-to-sink paths are the solutions of a
//! constraint, with incoming/outgoing path counts.

use std::collections::HashMap;
use std::hash::Hash;

use crate::density::{DensityTable, VarDensities};
use crate::domain::VarId;

/// Arc from vertex `from` of layer `i` to vertex `to` of layer `i + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub value: i64,
}

/// Layered graph restricted to vertices on some complete path.
#[derive(Debug, Clone)]
pub struct LayeredGraph<S> {
    /// `states[i]`: vertex labels of layer `i`, `0..=k`.
    pub states: Vec<Vec<S>>,
    /// `arcs[i]`: arcs between layers `i` and `i + 1`, ordered by value.
    pub arcs: Vec<Vec<Arc>>,
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

impl<S: Copy + Eq + Hash> LayeredGraph<S> {
    /// Unfolds `next` over `doms` from `start`, keeps the vertices of the last
    /// layer accepted by `accept`, and prunes everything not on a complete
    /// path.
    pub fn build(
        doms: &[Vec<i64>],
        start: S,
        next: impl Fn(usize, S, i64) -> Option<S>,
        accept: impl Fn(S) -> bool,
    ) -> Self {
        let k = doms.len();
        let mut states: Vec<Vec<S>> = vec![vec![start]];
        let mut arcs: Vec<Vec<Arc>> = Vec::with_capacity(k);
        for (i, dom) in doms.iter().enumerate() {
            let mut index: HashMap<S, usize> = HashMap::new();
            let mut layer = Vec::new();
            let mut out = Vec::new();
            for (from, &s) in states[i].iter().enumerate() {
                for &v in dom {
                    if let Some(t) = next(i, s, v) {
                        let to = *index.entry(t).or_insert_with(|| {
                            layer.push(t);
                            layer.len() - 1
                        });
                        out.push(Arc { from, to, value: v });
                    }
                }
            }
            states.push(layer);
            arcs.push(out);
        }
        // backward pruning
        let mut alive: Vec<Vec<bool>> = states.iter().map(|l| vec![false; l.len()]).collect();
        for (j, &s) in states[k].iter().enumerate() {
            alive[k][j] = accept(s);
        }
        for i in (0..k).rev() {
            for a in &arcs[i] {
                if alive[i + 1][a.to] {
                    alive[i][a.from] = true;
                }
            }
        }
        let mut remap: Vec<Vec<usize>> = Vec::with_capacity(k + 1);
        let mut new_states = Vec::with_capacity(k + 1);
        for (layer, live) in states.iter().zip(&alive) {
            let mut map = vec![usize::MAX; layer.len()];
            let mut kept = Vec::new();
            for (j, &s) in layer.iter().enumerate() {
                if live[j] {
                    map[j] = kept.len();
                    kept.push(s);
                }
            }
            remap.push(map);
            new_states.push(kept);
        }
        let new_arcs = arcs
            .iter()
            .enumerate()
            .map(|(i, layer)| {
                let mut kept: Vec<Arc> = layer
                    .iter()
                    .filter(|a| alive[i][a.from] && alive[i + 1][a.to])
                    .map(|a| Arc {
                        from: remap[i][a.from],
                        to: remap[i + 1][a.to],
                        value: a.value,
                    })
                    .collect();
                kept.sort_by_key(|a| (a.value, a.from, a.to));
                kept
            })
            .collect();
        LayeredGraph {
            states: new_states,
            arcs: new_arcs,
        }
    }
}

impl<S> LayeredGraph<S> {
    pub fn num_layers(&self) -> usize {
        self.arcs.len()
    }

    /// Whether a complete path exists.
    pub fn is_feasible(&self) -> bool {
        !self.states[0].is_empty()
    }

    /// Values carried by arcs of layer `i`, ascending.
    pub fn supported_values(&self, i: usize) -> Vec<i64> {
        let mut v: Vec<i64> = self.arcs[i].iter().map(|a| a.value).collect();
        v.dedup();
        v
    }

    pub fn num_vertices(&self) -> usize {
        self.states.iter().map(|l| l.len()).sum()
    }

    /// Exact incoming and outgoing path counts, or `None` on overflow.
    pub fn path_counts(&self) -> Option<(Vec<Vec<u64>>, Vec<Vec<u64>>)> {
        let k = self.num_layers();
        let mut ip: Vec<Vec<u64>> = self.states.iter().map(|l| vec![0; l.len()]).collect();
        let mut op = ip.clone();
        if !self.is_feasible() {
            return Some((ip, op));
        }
        ip[0][0] = 1;
        for i in 0..k {
            for a in &self.arcs[i] {
                ip[i + 1][a.to] = ip[i + 1][a.to].checked_add(ip[i][a.from])?;
            }
        }
        for x in op[k].iter_mut() {
            *x = 1;
        }
        for i in (0..k).rev() {
            for a in &self.arcs[i] {
                op[i][a.from] = op[i][a.from].checked_add(op[i + 1][a.to])?;
            }
        }
        Some((ip, op))
    }

    /// Path counts in log space.
    pub fn log_path_counts(&self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let k = self.num_layers();
        let mut ip: Vec<Vec<f64>> = self.states.iter().map(|l| vec![f64::NEG_INFINITY; l.len()]).collect();
        let mut op = ip.clone();
        if !self.is_feasible() {
            return (ip, op);
        }
        ip[0][0] = 0.0;
        for i in 0..k {
            for a in &self.arcs[i] {
                ip[i + 1][a.to] = log_add(ip[i + 1][a.to], ip[i][a.from]);
            }
        }
        for x in op[k].iter_mut() {
            *x = 0.0;
        }
        for i in (0..k).rev() {
            for a in &self.arcs[i] {
                op[i][a.from] = log_add(op[i][a.from], op[i + 1][a.to]);
            }
        }
        (ip, op)
    }

    /// Exact number of complete paths, or `None` on overflow.
    pub fn count_exact(&self) -> Option<u64> {
        let (_, op) = self.path_counts()?;
        Some(op[0].first().copied().unwrap_or(0))
    }

    /// Per layer, `(value, number of paths through an arc of that value)`.
    pub fn value_path_counts(&self) -> Option<Vec<Vec<(i64, u128)>>> {
        let (ip, op) = self.path_counts()?;
        Some(
            (0..self.num_layers())
                .map(|i| {
                    let mut out: Vec<(i64, u128)> = Vec::new();
                    for a in &self.arcs[i] {
                        let n = ip[i][a.from] as u128 * op[i + 1][a.to] as u128;
                        match out.last_mut() {
                            Some((v, c)) if *v == a.value => *c += n,
                            _ => out.push((a.value, n)),
                        }
                    }
                    out
                })
                .collect(),
        )
    }

    /// Exact count and densities for the variables `vars` (one per layer);
    /// layers whose domain `doms[i]` is a singleton are left out.
    pub fn density_table(&self, vars: &[VarId], doms: &[Vec<i64>]) -> DensityTable {
        let unbound: Vec<usize> = (0..vars.len()).filter(|&i| doms[i].len() > 1).collect();
        if !self.is_feasible() {
            let entries = unbound
                .iter()
                .map(|&i| VarDensities::from_log_weights(vars[i], &doms[i], &vec![0.0; doms[i].len()]))
                .collect();
            return DensityTable::new(f64::NEG_INFINITY, true, entries);
        }
        if let Some(counts) = self.value_path_counts() {
            let total = self.count_exact().unwrap() as f64;
            let entries = unbound
                .iter()
                .map(|&i| {
                    let values = doms[i]
                        .iter()
                        .map(|&v| {
                            let n = counts[i]
                                .iter()
                                .find(|(w, _)| *w == v)
                                .map_or(0, |&(_, c)| c);
                            (v, n as f64 / total)
                        })
                        .collect();
                    VarDensities { var: vars[i], values }
                })
                .collect();
            return DensityTable::new(total.ln(), true, entries);
        }
        let (ip, op) = self.log_path_counts();
        let entries = unbound
            .iter()
            .map(|&i| {
                let weights: Vec<f64> = doms[i]
                    .iter()
                    .map(|&v| {
                        self.arcs[i]
                            .iter()
                            .filter(|a| a.value == v)
                            .fold(f64::NEG_INFINITY, |acc, a| log_add(acc, ip[i][a.from] + op[i + 1][a.to]))
                    })
                    .collect();
                VarDensities::from_log_weights(vars[i], &doms[i], &weights)
            })
            .collect();
        DensityTable::new(op[0][0], true, entries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accept_all_binary() {
        let doms = vec![vec![0, 1], vec![0, 1]];
        let g = LayeredGraph::build(&doms, 0u8, |_, s, _| Some(s), |_| true);
        assert_eq!(g.count_exact(), Some(4));
        let t = g.density_table(&[VarId(0), VarId(1)], &doms);
        for e in &t.entries {
            for &(_, d) in &e.values {
                assert_eq!(d, 0.5);
            }
        }
    }

    #[test]
    fn log_counts_agree() {
        // count words over {0,1,2} of length 6 with even sum
        let doms = vec![vec![0, 1, 2]; 6];
        let g = LayeredGraph::build(&doms, 0i64, |_, s, v| Some((s + v) % 2), |s| s == 0);
        let exact = g.count_exact().unwrap() as f64;
        let (_, op) = g.log_path_counts();
        assert!((op[0][0] - exact.ln()).abs() < 1e-12);
        // conservation: every layer carries the same number of paths
        for layer in g.value_path_counts().unwrap() {
            assert_eq!(layer.iter().map(|&(_, c)| c).sum::<u128>() as f64, exact);
        }
    }

    #[test]
    fn overflow_falls_back_to_logs() {
        let doms = vec![(0..16).collect::<Vec<i64>>(); 20];
        let g = LayeredGraph::build(&doms, (), |_, _, _| Some(()), |_| true);
        assert!(g.count_exact().is_none());
        let vars: Vec<VarId> = (0..20).map(VarId).collect();
        let t = g.density_table(&vars, &doms);
        assert!((t.log_count - 80.0 * 2f64.ln()).abs() < 1e-9);
        assert!((t.entries[3].sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_graph() {
        let doms = vec![vec![0, 1]];
        let g = LayeredGraph::build(&doms, 0i64, |_, s, v| Some(s + v), |s| s == 5);
        assert!(!g.is_feasible());
        assert_eq!(g.count_exact(), Some(0));
    }
}
