#![allow(dead_code)]

use countsearch::alldiff::AllDifferent;
use countsearch::gcc::{Card, Gcc};
use countsearch::knapsack::Knapsack;
use countsearch::regular::{Dfa, Regular};
use countsearch::symmetric::SymmetricAllDifferent;
use countsearch::{Consistency, DomainStore, Model, VarId};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random nonempty subset of `lo..=hi`.
pub fn subset(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> Vec<i64> {
    loop {
        let d: Vec<i64> = (lo..=hi).filter(|_| rng.gen_bool(0.6)).collect();
        if !d.is_empty() {
            return d;
        }
    }
}

pub fn domains(rng: &mut ChaCha8Rng, n: usize, lo: i64, hi: i64) -> Vec<Vec<i64>> {
    (0..n).map(|_| subset(rng, lo, hi)).collect()
}

pub fn store(doms: &[Vec<i64>]) -> (DomainStore, Vec<VarId>) {
    let mut s = DomainStore::new();
    let vars = doms.iter().map(|d| s.add_var(d.iter().copied())).collect();
    (s, vars)
}

/// Random DFA over `0..alphabet` with at most one transition per symbol.
pub fn dfa(rng: &mut ChaCha8Rng, states: usize, alphabet: i64) -> Dfa {
    let mut d = Dfa::new(states, 0);
    for s in 0..states {
        d.set_accepting(s, rng.gen_bool(0.5));
        for sym in 0..alphabet {
            if rng.gen_bool(0.7) {
                d.add_transition(s, sym, rng.gen_range(0..states));
            }
        }
    }
    d
}

pub fn consistency(rng: &mut ChaCha8Rng) -> Consistency {
    *[Consistency::ForwardChecking, Consistency::Bounds, Consistency::Domain]
        .choose(rng)
        .unwrap()
}

/// Small model mixing every constraint type, at most `6^6` tuples.
pub fn micro_model(rng: &mut ChaCha8Rng) -> Model {
    let n = rng.gen_range(2..=6);
    let mut m = Model::new();
    let xs: Vec<VarId> = (0..n).map(|_| m.new_var(subset(rng, 0, 4))).collect();
    let scope = |rng: &mut ChaCha8Rng, min: usize| {
        let k = rng.gen_range(min.min(n)..=n);
        let mut s = xs.clone();
        s.shuffle(rng);
        s.truncate(k);
        s
    };
    for _ in 0..rng.gen_range(1..=3) {
        match rng.gen_range(0..5) {
            0 => {
                let c = consistency(rng);
                m.post(AllDifferent::new(scope(rng, 2), c));
            }
            1 => {
                let s = scope(rng, 1);
                let coefs: Vec<i64> = s.iter().map(|_| rng.gen_range(-3..=4)).collect();
                let lo = rng.gen_range(-4..=8);
                m.post(Knapsack::new(s, coefs, lo, lo + rng.gen_range(0..=6)));
            }
            2 => {
                let states = rng.gen_range(1..=4);
                let d = dfa(rng, states, 5);
                m.post(Regular::new(scope(rng, 1), d));
            }
            3 => {
                let s = scope(rng, 1);
                let cards = (0..=4)
                    .map(|v| {
                        let l = rng.gen_range(0..=1);
                        Card::new(v, l, l + rng.gen_range(0..=2))
                    })
                    .collect();
                let c = consistency(rng);
                m.post(Gcc::new(s, cards, c));
            }
            _ => {
                // labels 0..=4 over up to five variables
                let mut s = scope(rng, 2);
                s.truncate(5);
                let labels = (0..s.len() as i64).collect();
                m.post(SymmetricAllDifferent::new(s, labels));
            }
        }
    }
    m
}

pub fn all_distinct(t: &[i64]) -> bool {
    (0..t.len()).all(|i| (i + 1..t.len()).all(|j| t[i] != t[j]))
}
