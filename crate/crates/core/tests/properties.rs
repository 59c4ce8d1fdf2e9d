mod common;

use common::{dfa, domains, micro_model, store, subset};
use countsearch::alldiff::AllDifferent;
use countsearch::gcc::{Card, Gcc};
use countsearch::knapsack::Knapsack;
use countsearch::oracle::{exact_count_densities, exact_solve, DEFAULT_CAP};
use countsearch::regular::Regular;
use countsearch::{Consistency, Constraint, Decision, Model, Solver, Status, VarId};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Single random constraint whose propagator enforces domain consistency.
fn dc_constraint(rng: &mut ChaCha8Rng, vars: Vec<VarId>) -> Box<dyn Constraint> {
    match rng.gen_range(0..4) {
        0 => Box::new(AllDifferent::new(vars, Consistency::Domain)),
        1 => {
            let cards = (0..=4)
                .map(|v| {
                    let l = rng.gen_range(0..=1);
                    Card::new(v, l, l + rng.gen_range(0..=2))
                })
                .collect();
            Box::new(Gcc::new(vars, cards, Consistency::Domain))
        }
        2 => {
            let states = rng.gen_range(1..=4);
            Box::new(Regular::new(vars, dfa(rng, states, 5)))
        }
        _ => {
            let coefs: Vec<i64> = vars.iter().map(|_| rng.gen_range(-3..=4)).collect();
            let lo = rng.gen_range(-4..=8);
            let hi = lo + rng.gen_range(0..=6);
            Box::new(Knapsack::new(vars, coefs, lo, hi))
        }
    }
}

/// Random walk of decisions and backtracks; returns the solver afterwards.
fn wander(model: &Model, r: &mut ChaCha8Rng, steps: usize) -> Solver {
    let mut s = Solver::new(model);
    if s.propagate_all() == Status::Wipeout {
        return s;
    }
    for _ in 0..steps {
        if r.gen_bool(0.3) && s.level() > 0 {
            let to = r.gen_range(0..s.level());
            s.backtrack_to(to).unwrap();
            continue;
        }
        let free: Vec<VarId> = s.domains().vars().filter(|&v| !s.domains().is_bound(v)).collect();
        let Some(&x) = free.choose(r) else { break };
        let d = *s.domains().values(x).choose(r).unwrap();
        let dec = if r.gen_bool(0.5) { Decision::Assign(x, d) } else { Decision::Refute(x, d) };
        if s.push_decision(dec).unwrap() == Status::Wipeout {
            let to = s.level() - 1;
            s.backtrack_to(to).unwrap();
        }
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn trail_restores_every_level(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(1..=6);
        let doms = domains(&mut r, n, 0, 6);
        let (mut s, vars) = store(&doms);
        let mut snaps = vec![s.snapshot()];
        for _ in 0..r.gen_range(1..=8) {
            s.push_level();
            for _ in 0..r.gen_range(0..=4) {
                let x = *vars.choose(&mut r).unwrap();
                let d = r.gen_range(0..=6);
                let _ = s.remove(x, d);
            }
            snaps.push(s.snapshot());
        }
        while s.level() > 0 {
            let to = r.gen_range(0..s.level());
            s.backtrack_to(to);
            prop_assert_eq!(&s.snapshot(), &snaps[to]);
            snaps.truncate(to + 1);
        }
        prop_assert_eq!(s.snapshot(), doms);
    }

    #[test]
    fn propagation_reaches_a_fixpoint(seed in any::<u64>()) {
        let mut r = rng(seed);
        let model = micro_model(&mut r);
        let mut s = Solver::new(&model);
        if s.propagate_all() == Status::Consistent {
            let once = s.domains().snapshot();
            prop_assert_eq!(s.propagate_all(), Status::Consistent);
            prop_assert_eq!(s.domains().snapshot(), once);
        }
    }

    #[test]
    fn propagation_keeps_every_solution(seed in any::<u64>()) {
        let mut r = rng(seed);
        let model = micro_model(&mut r);
        let before = exact_solve(&model, DEFAULT_CAP).unwrap();
        let mut s = Solver::new(&model);
        let status = s.propagate_all();
        if before.is_sat() {
            prop_assert_eq!(status, Status::Consistent);
            let first = before.first.unwrap();
            for (i, d) in s.domains().snapshot().iter().enumerate() {
                prop_assert!(d.contains(&first[i]));
            }
        }
    }

    #[test]
    fn cached_densities_match_a_recount(seed in any::<u64>()) {
        let mut r = rng(seed);
        let model = micro_model(&mut r);
        let steps = r.gen_range(0..12);
        let mut s = wander(&model, &mut r, steps);
        if s.domains().vars().any(|v| s.domains().is_empty(v)) {
            return Ok(());
        }
        let cached = s.collect_densities();
        for t in cached {
            let fresh = s.recompute_density(t.constraint).unwrap();
            prop_assert_eq!(&*t, &fresh);
        }
    }

    #[test]
    fn domain_consistency_leaves_supported_values(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(1..=5);
        let doms = domains(&mut r, n, 0, 4);
        let mut model = Model::new();
        let vars: Vec<VarId> = doms.iter().map(|d| model.new_var(d.iter().copied())).collect();
        let c = dc_constraint(&mut r, vars.clone());
        let exact = exact_count_densities(c.as_ref(), &doms, DEFAULT_CAP).unwrap();
        model.post_arc(c.into());
        let mut s = Solver::new(&model);
        let status = s.propagate_all();
        if exact.count == 0 {
            prop_assert_eq!(status, Status::Wipeout);
        } else {
            prop_assert_eq!(status, Status::Consistent);
            for (i, &x) in vars.iter().enumerate() {
                for v in s.domains().values(x) {
                    prop_assert!(*exact.density(i, v).unwrap().numer() > 0, "x{} = {} unsupported", i, v);
                }
                let supported = doms[i].iter().filter(|&&v| *exact.density(i, v).unwrap().numer() > 0).count();
                prop_assert_eq!(s.domains().size(x), supported);
            }
        }
    }

    #[test]
    fn densities_are_sound(seed in any::<u64>()) {
        let mut r = rng(seed);
        let model = micro_model(&mut r);
        let doms = model.domains().snapshot();
        for c in model.constraints() {
            let Some(t) = c.densities(model.domains()) else { continue };
            let exact = exact_count_densities(c.as_ref(), &doms, DEFAULT_CAP).unwrap();
            if exact.count == 0 {
                continue;
            }
            let ln = (exact.count as f64).ln();
            if t.exact {
                prop_assert!((t.log_count - ln).abs() < 1e-9, "{} count {} vs {}", c.name(), t.count(), exact.count);
            } else {
                prop_assert!(t.log_count >= ln - 1e-9, "{} bound {} below {}", c.name(), t.count(), exact.count);
            }
            for (i, &x) in c.scope().iter().enumerate() {
                let Some(e) = t.entry(x) else { continue };
                prop_assert!((e.sum() - 1.0).abs() < 1e-9);
                for &(v, q) in &exact.densities[i] {
                    let got = e.density(v).unwrap_or(0.0);
                    let want = *q.numer() as f64 / *q.denom() as f64;
                    if t.exact {
                        prop_assert!((got - want).abs() < 1e-9, "{} x{}={}: {} vs {}", c.name(), i, v, got, want);
                    } else if want > 0.0 {
                        prop_assert!(got > 0.0, "{} x{}={} supported but density 0", c.name(), i, v);
                    }
                }
            }
        }
    }

    #[test]
    fn alldifferent_bound_never_undercounts(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(2..=7);
        let doms: Vec<Vec<i64>> = (0..n).map(|_| subset(&mut r, 0, 7)).collect();
        let (s, vars) = store(&doms);
        for c in [Consistency::ForwardChecking, Consistency::Bounds, Consistency::Domain] {
            let ad = AllDifferent::new(vars.clone(), c);
            let exact = exact_count_densities(&ad, &doms, DEFAULT_CAP).unwrap();
            let t = ad.densities(&s).unwrap();
            if exact.count > 0 {
                prop_assert!(t.count() >= exact.count as f64 * (1.0 - 1e-9));
            }
        }
    }
}
