use std::time::Duration;

use countsearch::bench::{build_model, generate, parse_as, write, GenParams, Grid, Instance, Kind, ModelOptions, Payload};
use countsearch::heuristics::HeuristicKind;
use countsearch::oracle::{exact_permanent, exact_solve, DEFAULT_CAP};
use countsearch::search::{solve, Outcome, SearchConfig};
use countsearch::Model;

fn small(kind: Kind) -> GenParams {
    let mut p = GenParams::default();
    match kind {
        Kind::Qwh => p.n = Some(6),
        Kind::Magic => p.n = Some(4),
        Kind::Nonogram => p.n = Some(6),
        Kind::MultiKnap => {
            p.n = Some(10);
            p.m = Some(2);
        }
        Kind::MarketSplit => p.m = Some(2),
        Kind::Rostering => p.n = Some(5),
        Kind::KpRostering => {
            p.n = Some(8);
            p.m = Some(3);
            p.forbidden = Some(2);
        }
        Kind::Ttppv => p.n = Some(6),
        Kind::Csp => {}
    }
    p
}

fn satisfies(model: &Model, sol: &[i64]) -> bool {
    model.constraints().iter().all(|c| {
        let t: Vec<i64> = c.scope().iter().map(|v| sol[v.0]).collect();
        c.check(&t)
    })
}

fn generated_kinds() -> impl Iterator<Item = Kind> {
    Kind::ALL.iter().copied().filter(|&k| k != Kind::Csp)
}

#[test]
fn planted_instances_are_solved() {
    for kind in generated_kinds() {
        for seed in 0..3 {
            let inst = generate(kind, &small(kind), seed).unwrap();
            if inst.status != Some(Outcome::Sat) {
                continue;
            }
            let model = build_model(&inst, &ModelOptions::default()).unwrap();
            for h in [HeuristicKind::MaxSD, HeuristicKind::DomWDeg] {
                let cfg = SearchConfig::new(h).seed(seed).timeout(Duration::from_secs(30));
                let stats = solve(&model, &cfg);
                assert_eq!(stats.status, Outcome::Sat, "{} with {:?}", inst.name, h);
                assert!(satisfies(&model, stats.solution.as_ref().unwrap()), "{}", inst.name);
            }
        }
    }
}

#[test]
fn generated_instances_round_trip() {
    for kind in generated_kinds() {
        for seed in 0..4 {
            let inst = generate(kind, &small(kind), seed).unwrap();
            let text = write(&inst);
            let back = parse_as(&text, kind, &inst.name).unwrap();
            assert_eq!(back, inst, "{}", kind.name());
            assert_eq!(write(&back), text);
        }
    }
}

#[test]
fn market_split_verdict_matches_enumeration() {
    for seed in 0..6 {
        let inst = generate(Kind::MarketSplit, &small(Kind::MarketSplit), seed).unwrap();
        let model = build_model(&inst, &ModelOptions::default()).unwrap();
        let truth = exact_solve(&model, DEFAULT_CAP).unwrap();
        let stats = solve(&model, &SearchConfig::new(HeuristicKind::MaxSD));
        let expected = if truth.is_sat() { Outcome::Sat } else { Outcome::Unsat };
        assert_eq!(stats.status, expected, "seed {seed}");
    }
}

#[test]
fn latin_square_with_one_hole_is_completed() {
    let cells = vec![vec![1, 2, 3, 4], vec![2, 1, 4, 3], vec![3, 4, 1, 2], vec![4, 3, 2, 0]];
    let inst = Instance::new("l4", Payload::Qwh(Grid { cells }));
    let model = build_model(&inst, &ModelOptions::default()).unwrap();
    let truth = exact_solve(&model, DEFAULT_CAP).unwrap();
    assert_eq!(truth.solutions, 1);
    let stats = solve(&model, &SearchConfig::new(HeuristicKind::MaxSD));
    assert_eq!(stats.status, Outcome::Sat);
    assert_eq!(stats.solution.unwrap()[15], 1);
}

#[test]
fn contradictory_prefill_is_unsat() {
    let cells = vec![vec![1, 1, 0], vec![0, 0, 0], vec![0, 0, 0]];
    let inst = Instance::new("bad", Payload::Qwh(Grid { cells }));
    let model = build_model(&inst, &ModelOptions::default()).unwrap();
    let stats = solve(&model, &SearchConfig::new(HeuristicKind::Dom));
    assert_eq!(stats.status, Outcome::Unsat);
    assert_eq!(stats.backtracks, 0);
}

#[test]
fn permanent_of_latin_hole_pattern() {
    // rows of a 3x3 alldifferent with one value missing per row
    let m = vec![vec![true, true, false], vec![false, true, true], vec![true, false, true]];
    assert_eq!(exact_permanent(&m).unwrap(), 2);
}
