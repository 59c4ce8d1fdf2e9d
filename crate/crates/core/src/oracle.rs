//! Brute-force ground truth: permanents, perfect matchings, exhaustive
//! counting and solving.

use num_rational::Ratio;

use crate::domain::VarId;
use crate::engine::{Constraint, Model};
use crate::error::{Error, Result};

/// Default cap on the number of candidate tuples.
pub const DEFAULT_CAP: u64 = 1_000_000;

/// Largest matrix accepted by [`exact_permanent`].
pub const MAX_PERMANENT_ORDER: usize = 12;

/// Permanent of a square 0-1 matrix by expansion along the first row,
/// memoized on the set of used columns.
pub fn exact_permanent(matrix: &[Vec<bool>]) -> Result<u64> {
    let n = matrix.len();
    if matrix.iter().any(|r| r.len() != n) {
        return Err(Error::Invalid("matrix is not square".into()));
    }
    if n > MAX_PERMANENT_ORDER {
        return Err(Error::Invalid(format!(
            "matrix order {n} exceeds {MAX_PERMANENT_ORDER}"
        )));
    }
    // ways[mask]: ways the first popcount(mask) rows use exactly `mask`
    let mut ways = vec![0u64; 1 << n];
    ways[0] = 1;
    for mask in 0usize..(1 << n) {
        let w = ways[mask];
        if w == 0 {
            continue;
        }
        let row = mask.count_ones() as usize;
        if row == n {
            continue;
        }
        for (c, &one) in matrix[row].iter().enumerate() {
            if one && mask & (1 << c) == 0 {
                ways[mask | (1 << c)] += w;
            }
        }
    }
    Ok(ways[(1 << n) - 1])
}

/// Number of perfect matchings of an undirected graph given by a symmetric
/// adjacency matrix (diagonal ignored).
pub fn exact_perfect_matchings(adj: &[Vec<bool>]) -> Result<u64> {
    let n = adj.len();
    if n > 24 {
        return Err(Error::Invalid(format!("graph with {n} vertices is too large")));
    }
    let mut memo = std::collections::HashMap::new();
    Ok(matchings_rec(adj, (1u32 << n) - 1, &mut memo))
}

fn matchings_rec(adj: &[Vec<bool>], free: u32, memo: &mut std::collections::HashMap<u32, u64>) -> u64 {
    if free == 0 {
        return 1;
    }
    if let Some(&m) = memo.get(&free) {
        return m;
    }
    let v = free.trailing_zeros() as usize;
    let rest = free & !(1 << v);
    let mut total = 0;
    for w in 0..adj.len() {
        if rest & (1 << w) != 0 && adj[v][w] {
            total += matchings_rec(adj, rest & !(1 << w), memo);
        }
    }
    memo.insert(free, total);
    total
}

fn check_cap(doms: &[Vec<i64>], cap: u64) -> Result<()> {
    let tuples: f64 = doms.iter().map(|d| d.len() as f64).product();
    if tuples > cap as f64 {
        return Err(Error::CapExceeded { tuples, cap });
    }
    Ok(())
}

/// Exact solution count and densities of one constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactTable {
    pub count: u64,
    /// Per scope variable: `(value, density)` over its domain; empty when
    /// there is no solution.
    pub densities: Vec<Vec<(i64, Ratio<u64>)>>,
}

impl ExactTable {
    pub fn density(&self, pos: usize, value: i64) -> Option<Ratio<u64>> {
        self.densities
            .get(pos)?
            .iter()
            .find(|(v, _)| *v == value)
            .map(|&(_, r)| r)
    }

    pub fn density_f64(&self, pos: usize, value: i64) -> Option<f64> {
        self.density(pos, value).map(|r| *r.numer() as f64 / *r.denom() as f64)
    }
}

/// Enumerates every tuple of `doms` (scope order) and tallies the solutions
/// accepted by `check`.
pub fn exact_count_with(
    doms: &[Vec<i64>],
    cap: u64,
    check: impl Fn(&[i64]) -> bool,
) -> Result<ExactTable> {
    check_cap(doms, cap)?;
    let k = doms.len();
    let mut hits: Vec<Vec<u64>> = doms.iter().map(|d| vec![0; d.len()]).collect();
    let mut count = 0u64;
    if doms.iter().all(|d| !d.is_empty()) {
        let mut idx = vec![0usize; k];
        let mut tuple: Vec<i64> = doms.iter().map(|d| d[0]).collect();
        'outer: loop {
            if check(&tuple) {
                count += 1;
                for i in 0..k {
                    hits[i][idx[i]] += 1;
                }
            }
            let mut i = k;
            loop {
                if i == 0 {
                    break 'outer;
                }
                i -= 1;
                idx[i] += 1;
                if idx[i] < doms[i].len() {
                    tuple[i] = doms[i][idx[i]];
                    break;
                }
                idx[i] = 0;
                tuple[i] = doms[i][0];
            }
        }
    }
    let densities = if count == 0 {
        Vec::new()
    } else {
        doms.iter()
            .zip(&hits)
            .map(|(d, h)| d.iter().zip(h).map(|(&v, &c)| (v, Ratio::new(c, count))).collect())
            .collect()
    };
    Ok(ExactTable { count, densities })
}

/// Exact count and densities of `constraint` under `doms` (indexed by
/// variable id).
pub fn exact_count_densities(constraint: &dyn Constraint, doms: &[Vec<i64>], cap: u64) -> Result<ExactTable> {
    let local: Vec<Vec<i64>> = constraint.scope().iter().map(|v: &VarId| doms[v.0].clone()).collect();
    exact_count_with(&local, cap, |t| constraint.check(t))
}

/// Exhaustive verdict on a whole model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactVerdict {
    pub solutions: u64,
    pub first: Option<Vec<i64>>,
}

impl ExactVerdict {
    pub fn is_sat(&self) -> bool {
        self.solutions > 0
    }
}

/// Enumerates the model's initial domains (no propagation), checking each
/// constraint as soon as its scope is assigned.
pub fn exact_solve(model: &Model, cap: u64) -> Result<ExactVerdict> {
    let doms = model.domains().snapshot();
    if doms.iter().any(|d| d.is_empty()) {
        return Ok(ExactVerdict {
            solutions: 0,
            first: None,
        });
    }
    check_cap(&doms, cap)?;
    let n = doms.len();
    // constraints to check once variable i is assigned (max scope index)
    let mut ready: Vec<Vec<usize>> = vec![Vec::new(); n.max(1)];
    let mut always = Vec::new();
    for (c, con) in model.constraints().iter().enumerate() {
        match con.scope().iter().map(|v| v.0).max() {
            Some(last) => ready[last].push(c),
            None => always.push(c),
        }
    }
    let cons = model.constraints();
    if always.iter().any(|&c| !cons[c].check(&[])) {
        return Ok(ExactVerdict {
            solutions: 0,
            first: None,
        });
    }
    let mut verdict = ExactVerdict {
        solutions: 0,
        first: None,
    };
    if n == 0 {
        verdict.solutions = 1;
        verdict.first = Some(Vec::new());
        return Ok(verdict);
    }
    let mut assignment = vec![0i64; n];
    let mut idx = vec![0usize; n];
    let mut depth = 0usize;
    let mut scratch = Vec::new();
    loop {
        if idx[depth] == doms[depth].len() {
            idx[depth] = 0;
            if depth == 0 {
                break;
            }
            depth -= 1;
            idx[depth] += 1;
            continue;
        }
        assignment[depth] = doms[depth][idx[depth]];
        let ok = ready[depth].iter().all(|&c| {
            scratch.clear();
            scratch.extend(cons[c].scope().iter().map(|v| assignment[v.0]));
            cons[c].check(&scratch)
        });
        if !ok {
            idx[depth] += 1;
        } else if depth + 1 == n {
            verdict.solutions += 1;
            if verdict.first.is_none() {
                verdict.first = Some(assignment.clone());
            }
            idx[depth] += 1;
        } else {
            depth += 1;
        }
    }
    Ok(verdict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alldiff::AllDifferent;
    use crate::engine::Consistency;

    fn ones(n: usize) -> Vec<Vec<bool>> {
        vec![vec![true; n]; n]
    }

    #[test]
    fn permanents() {
        let id: Vec<Vec<bool>> = (0..3).map(|i| (0..3).map(|j| i == j).collect()).collect();
        assert_eq!(exact_permanent(&id).unwrap(), 1);
        assert_eq!(exact_permanent(&ones(3)).unwrap(), 6);
        let zero_diag: Vec<Vec<bool>> = (0..6).map(|i| (0..6).map(|j| i != j).collect()).collect();
        assert_eq!(exact_permanent(&zero_diag).unwrap(), 265);
        assert_eq!(exact_permanent(&[]).unwrap(), 1);
        assert!(exact_permanent(&[vec![true, false]]).is_err());
        assert!(exact_permanent(&ones(13)).is_err());
    }

    #[test]
    fn k6_matchings() {
        let k6: Vec<Vec<bool>> = (0..6).map(|i| (0..6).map(|j| i != j).collect()).collect();
        assert_eq!(exact_perfect_matchings(&k6).unwrap(), 15);
        let k4: Vec<Vec<bool>> = (0..4).map(|i| (0..4).map(|j| i != j).collect()).collect();
        assert_eq!(exact_perfect_matchings(&k4).unwrap(), 3);
    }

    #[test]
    fn alldiff_two_vars() {
        let c = AllDifferent::new(vec![VarId(0), VarId(1)], Consistency::Domain);
        let t = exact_count_densities(&c, &[vec![1, 2], vec![1, 2]], DEFAULT_CAP).unwrap();
        assert_eq!(t.count, 2);
        for row in &t.densities {
            for &(_, r) in row {
                assert_eq!(r, Ratio::new(1, 2));
            }
        }
    }

    #[test]
    fn cap_refuses() {
        let doms = vec![(0..100).collect::<Vec<i64>>(); 4];
        assert!(matches!(
            exact_count_with(&doms, DEFAULT_CAP, |_| true),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn solve_verdicts() {
        assert!(exact_solve(&Model::new(), DEFAULT_CAP).unwrap().is_sat());
        let mut m = Model::new();
        let x = m.new_var(std::iter::empty());
        let y = m.new_var([1]);
        m.post(AllDifferent::new(vec![x, y], Consistency::Domain));
        assert!(!exact_solve(&m, DEFAULT_CAP).unwrap().is_sat());
        let mut m = Model::new();
        let xs = m.new_vars(3, 1..=3);
        m.post(AllDifferent::new(xs, Consistency::Domain));
        assert_eq!(exact_solve(&m, DEFAULT_CAP).unwrap().solutions, 6);
    }
}
