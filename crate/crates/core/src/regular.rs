//! `regular`: membership of the scope's word in the language of a DFA.

use crate::density::DensityTable;
use crate::domain::{DomainStore, PropResult, VarId, Wipeout};
use crate::engine::Constraint;
use crate::layered::LayeredGraph;

/// Deterministic finite automaton with a partial transition function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dfa {
    start: usize,
    accepting: Vec<bool>,
    /// Per state, `(symbol, target)` sorted by symbol.
    transitions: Vec<Vec<(i64, usize)>>,
}

impl Dfa {
    pub fn new(num_states: usize, start: usize) -> Self {
        assert!(start < num_states);
        Dfa {
            start,
            accepting: vec![false; num_states],
            transitions: vec![Vec::new(); num_states],
        }
    }

    pub fn num_states(&self) -> usize {
        self.accepting.len()
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn add_state(&mut self) -> usize {
        self.accepting.push(false);
        self.transitions.push(Vec::new());
        self.accepting.len() - 1
    }

    pub fn set_accepting(&mut self, state: usize, accepting: bool) {
        self.accepting[state] = accepting;
    }

    pub fn is_accepting(&self, state: usize) -> bool {
        self.accepting[state]
    }

    /// Adds or replaces the transition on `symbol` out of `from`.
    pub fn add_transition(&mut self, from: usize, symbol: i64, to: usize) {
        let row = &mut self.transitions[from];
        match row.binary_search_by_key(&symbol, |&(s, _)| s) {
            Ok(i) => row[i].1 = to,
            Err(i) => row.insert(i, (symbol, to)),
        }
    }

    pub fn next(&self, state: usize, symbol: i64) -> Option<usize> {
        let row = &self.transitions[state];
        row.binary_search_by_key(&symbol, |&(s, _)| s).ok().map(|i| row[i].1)
    }

    pub fn accepts(&self, word: &[i64]) -> bool {
        let mut q = self.start;
        for &a in word {
            match self.next(q, a) {
                Some(t) => q = t,
                None => return false,
            }
        }
        self.accepting[q]
    }

    /// Layered graph of the accepted words over `doms`.
    pub fn unfold(&self, doms: &[Vec<i64>]) -> LayeredGraph<usize> {
        LayeredGraph::build(doms, self.start, |_, q, a| self.next(q, a), |q| self.accepting[q])
    }
}

#[derive(Debug, Clone)]
pub struct Regular {
    vars: Vec<VarId>,
    dfa: Dfa,
}

impl Regular {
    pub fn new(vars: Vec<VarId>, dfa: Dfa) -> Self {
        Regular { vars, dfa }
    }

    pub fn dfa(&self) -> &Dfa {
        &self.dfa
    }
}

impl Constraint for Regular {
    fn name(&self) -> &'static str {
        "regular"
    }

    fn scope(&self) -> &[VarId] {
        &self.vars
    }

    /// Domain consistency: the graph is unfolded from the current domains
    /// and every value without a surviving arc is removed.
    fn propagate(&self, doms: &mut DomainStore) -> PropResult {
        let local: Vec<Vec<i64>> = self.vars.iter().map(|&v| doms.values(v)).collect();
        let graph = self.dfa.unfold(&local);
        if !graph.is_feasible() {
            return Err(Wipeout);
        }
        for (i, &x) in self.vars.iter().enumerate() {
            let keep = graph.supported_values(i);
            if keep.len() < local[i].len() {
                doms.retain(x, |v| keep.binary_search(&v).is_ok())?;
            }
        }
        Ok(())
    }

    fn densities(&self, doms: &DomainStore) -> Option<DensityTable> {
        let local: Vec<Vec<i64>> = self.vars.iter().map(|&v| doms.values(v)).collect();
        Some(self.dfa.unfold(&local).density_table(&self.vars, &local))
    }

    fn check(&self, values: &[i64]) -> bool {
        self.dfa.accepts(values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{Model, Solver, Status};

    /// Words over {0,1} with exactly one block of `len` ones.
    fn single_block(len: usize) -> Dfa {
        let mut d = Dfa::new(len + 2, 0);
        d.add_transition(0, 0, 0);
        for k in 0..len {
            d.add_transition(k, 1, k + 1);
        }
        d.add_transition(len, 0, len + 1);
        d.add_transition(len + 1, 0, len + 1);
        d.set_accepting(len, true);
        d.set_accepting(len + 1, true);
        d
    }

    #[test]
    fn clue_one_over_three_cells() {
        let dfa = single_block(1);
        let doms = vec![vec![0, 1]; 3];
        let g = dfa.unfold(&doms);
        assert_eq!(g.count_exact(), Some(3));
        let vars: Vec<VarId> = (0..3).map(VarId).collect();
        let t = g.density_table(&vars, &doms);
        assert!((t.density(VarId(0), 1).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((t.density(VarId(0), 0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        for i in 0..3 {
            assert_eq!(g.supported_values(i), vec![0, 1]);
        }
    }

    #[test]
    fn single_word_is_forced() {
        let mut d = Dfa::new(3, 0);
        d.add_transition(0, 'a' as i64, 1);
        d.add_transition(1, 'b' as i64, 2);
        d.set_accepting(2, true);
        let mut m = Model::new();
        let xs = m.new_vars(2, ['a' as i64, 'b' as i64]);
        m.post(Regular::new(xs.clone(), d));
        let mut s = Solver::new(&m);
        assert_eq!(s.propagate_all(), Status::Consistent);
        assert_eq!(s.domains().values(xs[0]), vec!['a' as i64]);
        assert_eq!(s.domains().values(xs[1]), vec!['b' as i64]);
    }

    #[test]
    fn no_accepted_word_wipes_out() {
        let mut m = Model::new();
        let xs = m.new_vars(2, [1]);
        m.post(Regular::new(xs, single_block(3)));
        assert_eq!(Solver::new(&m).propagate_all(), Status::Wipeout);
    }
}
