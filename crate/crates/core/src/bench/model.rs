use super::automata::{nonogram_dfa, rostering_dfa, venue_dfa};
use super::{CspConstraint, Grid, Instance, LinearRow, Payload};
use crate::alldiff::{AllDifferent, ProbeConsistency};
use crate::engine::{Consistency, Model};
use crate::error::{Error, Result};
use crate::gcc::{Card, Gcc};
use crate::knapsack::{Knapsack, KnapsackMode};
use crate::regular::Regular;
use crate::symmetric::SymmetricAllDifferent;
use crate::VarId;

#[derive(Debug, Clone, Copy, Default)]
pub struct ModelOptions {
    pub consistency: Consistency,
    pub probe: ProbeConsistency,
    pub knapsack_mode: KnapsackMode,
}

impl ModelOptions {
    fn alldiff(&self, vars: Vec<VarId>) -> AllDifferent {
        AllDifferent::new(vars, self.consistency).with_probe(self.probe)
    }

    fn knapsack(&self, vars: Vec<VarId>, coefs: Vec<i64>, lower: i64, upper: i64) -> Knapsack {
        Knapsack::new(vars, coefs, lower, upper).with_mode(self.knapsack_mode)
    }
}

fn grid_vars(m: &mut Model, g: &Grid, top: i64) -> Vec<Vec<VarId>> {
    g.cells
        .iter()
        .map(|row| {
            row.iter()
                .map(|&c| if c == 0 { m.new_var(1..=top) } else { m.new_var([c]) })
                .collect()
        })
        .collect()
}

fn column<T: Copy>(rows: &[Vec<T>], j: usize) -> Vec<T> {
    rows.iter().map(|r| r[j]).collect()
}

fn min_sum(coefs: &[i64]) -> i64 {
    coefs.iter().map(|&c| c.min(0)).sum()
}

/// Post the benchmark's constraint structure.
pub fn build_model(inst: &Instance, opts: &ModelOptions) -> Result<Model> {
    let mut m = Model::new();
    match &inst.payload {
        Payload::Qwh(g) => {
            let n = g.order();
            let x = grid_vars(&mut m, g, n as i64);
            for row in &x {
                m.post(opts.alldiff(row.clone()));
            }
            for j in 0..n {
                m.post(opts.alldiff(column(&x, j)));
            }
        }
        Payload::Magic(g) => {
            let n = g.order();
            let x = grid_vars(&mut m, g, (n * n) as i64);
            let target = (n * (n * n + 1) / 2) as i64;
            m.post(opts.alldiff(x.iter().flatten().copied().collect()));
            let mut lines: Vec<Vec<VarId>> = x.clone();
            lines.extend((0..n).map(|j| column(&x, j)));
            lines.push((0..n).map(|i| x[i][i]).collect());
            lines.push((0..n).map(|i| x[i][n - 1 - i]).collect());
            for line in lines {
                m.post(opts.knapsack(line, vec![1; n], target, target));
            }
        }
        Payload::Nonogram { rows, cols } => {
            let x: Vec<Vec<VarId>> = (0..rows.len()).map(|_| m.new_vars(cols.len(), [0, 1])).collect();
            for (row, clue) in x.iter().zip(rows) {
                m.post(Regular::new(row.clone(), nonogram_dfa(clue)));
            }
            for (j, clue) in cols.iter().enumerate() {
                m.post(Regular::new(column(&x, j), nonogram_dfa(clue)));
            }
        }
        Payload::MultiKnap { objective, optimum, rows } => {
            let x = m.new_vars(objective.len(), [0, 1]);
            m.post(opts.knapsack(x.clone(), objective.clone(), *optimum, *optimum));
            for LinearRow { coefs, rhs } in rows {
                m.post(opts.knapsack(x.clone(), coefs.clone(), min_sum(coefs), *rhs));
            }
        }
        Payload::MarketSplit { rows } => {
            let n = rows.first().map_or(0, |r| r.coefs.len());
            let x = m.new_vars(n, [0, 1]);
            for LinearRow { coefs, rhs } in rows {
                m.post(opts.knapsack(x.clone(), coefs.clone(), *rhs, *rhs));
            }
        }
        Payload::Rostering { preset, removed } => {
            let n = preset.len();
            let x: Vec<Vec<VarId>> = preset
                .iter()
                .enumerate()
                .map(|(r, row)| {
                    row.iter()
                        .enumerate()
                        .map(|(c, cell)| match cell {
                            Some(v) => m.new_var([*v]),
                            None => m.new_var((0..n as i64).filter(|&v| !removed.contains(&(r, c, v)))),
                        })
                        .collect()
                })
                .collect();
            let dfa = rostering_dfa(n as i64 - 1);
            for row in &x {
                m.post(Regular::new(row.clone(), dfa.clone()));
            }
            for j in 0..n {
                m.post(opts.alldiff(column(&x, j)));
            }
        }
        Payload::KpRostering { costs, targets, forbidden } => {
            let staff = costs.len();
            let days = costs.first().map_or(0, Vec::len);
            let x: Vec<Vec<VarId>> = (0..staff)
                .map(|e| {
                    (0..days)
                        .map(|d| m.new_var((1..=staff as i64).filter(|&t| !forbidden.contains(&(e, d, t)))))
                        .collect()
                })
                .collect();
            for d in 0..days {
                m.post(opts.alldiff(column(&x, d)));
            }
            for e in 0..staff {
                m.post(opts.knapsack(x[e].clone(), costs[e].clone(), targets[e], targets[e]));
            }
        }
        Payload::Ttppv { home } => {
            let n = home.len();
            let labels: Vec<i64> = (1..=n as i64).collect();
            let x: Vec<Vec<VarId>> = (0..n)
                .map(|t| {
                    (0..n.saturating_sub(1))
                        .map(|_| m.new_var(labels.iter().copied().filter(|&l| l != t as i64 + 1)))
                        .collect()
                })
                .collect();
            for (t, row) in x.iter().enumerate() {
                m.post(opts.alldiff(row.clone()));
                m.post(Regular::new(row.clone(), venue_dfa(home, t, 3)));
            }
            for r in 0..n.saturating_sub(1) {
                let col = column(&x, r);
                m.post(opts.alldiff(col.clone()));
                m.post(SymmetricAllDifferent::channel(col, labels.clone()));
            }
        }
        Payload::Csp { domains, constraints } => {
            let x: Vec<VarId> = domains.iter().map(|d| m.new_var(d.iter().copied())).collect();
            let pick = |vs: &[usize]| vs.iter().map(|&i| x[i]).collect::<Vec<_>>();
            for c in constraints {
                match c {
                    CspConstraint::AllDifferent(vs) => {
                        m.post(opts.alldiff(pick(vs)));
                    }
                    CspConstraint::Symmetric(vs) => {
                        let labels = vs.iter().map(|&i| i as i64 + 1).collect();
                        m.post(SymmetricAllDifferent::new(pick(vs), labels));
                    }
                    CspConstraint::Gcc { vars, cards } => {
                        let cards = cards.iter().map(|&(v, l, u)| Card::new(v, l, u)).collect();
                        m.post(Gcc::new(pick(vars), cards, opts.consistency));
                    }
                    CspConstraint::Knapsack { vars, coefs, lower, upper } => {
                        if lower > upper {
                            return Err(Error::Invalid(format!("knapsack bounds {lower} > {upper}")));
                        }
                        m.post(opts.knapsack(pick(vars), coefs.clone(), *lower, *upper));
                    }
                }
            }
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{generate, GenParams, Kind};

    #[test]
    fn latin_square_structure() {
        let cells = vec![vec![1, 2, 3, 4], vec![2, 1, 4, 3], vec![3, 4, 1, 2], vec![4, 3, 2, 1]];
        let inst = Instance::new("l4", Payload::Qwh(Grid { cells }));
        let m = build_model(&inst, &ModelOptions::default()).unwrap();
        assert_eq!(m.num_vars(), 16);
        assert_eq!(m.constraints().len(), 8);
        assert!(m.constraints().iter().all(|c| c.name() == "alldifferent" && c.scope().len() == 4));
    }

    #[test]
    fn magic_structure() {
        let inst = generate(Kind::Magic, &GenParams { n: Some(9), ..Default::default() }, 1).unwrap();
        let m = build_model(&inst, &ModelOptions::default()).unwrap();
        let cs = m.constraints();
        assert_eq!(cs.len(), 21);
        assert_eq!(cs[0].scope().len(), 81);
        let knaps: Vec<_> = cs.iter().filter(|c| c.name() == "knapsack").collect();
        assert_eq!(knaps.len(), 20);
        let target = 9 * (81 + 1) / 2;
        assert_eq!(target, 369);
        assert!(cs[1..].iter().all(|c| c.check(&[41, 41, 41, 41, 41, 41, 41, 41, 41])));
    }

    #[test]
    fn other_structures() {
        let count = |kind: Kind, p: GenParams| {
            let inst = generate(kind, &p, 4).unwrap();
            let m = build_model(&inst, &ModelOptions::default()).unwrap();
            let mut names: Vec<&str> = m.constraints().iter().map(|c| c.name()).collect();
            names.sort_unstable();
            names.dedup_by(|a, b| a == b);
            (m.num_vars(), m.constraints().len(), names)
        };
        let (v, c, _) = count(Kind::Nonogram, GenParams { n: Some(5), m: Some(7), ..Default::default() });
        assert_eq!((v, c), (35, 12));
        let (v, c, _) = count(Kind::MarketSplit, GenParams { m: Some(3), ..Default::default() });
        assert_eq!((v, c), (20, 3));
        let (v, c, _) = count(Kind::MultiKnap, GenParams { n: Some(8), m: Some(2), ..Default::default() });
        assert_eq!((v, c), (8, 3));
        let (v, c, _) = count(Kind::Rostering, GenParams { n: Some(6), ..Default::default() });
        assert_eq!((v, c), (36, 12));
        let (v, c, _) = count(Kind::KpRostering, GenParams::default());
        assert_eq!((v, c), (100, 29));
        let (v, c, _) = count(Kind::Ttppv, GenParams { n: Some(6), ..Default::default() });
        assert_eq!((v, c), (30, 22));
    }
}
