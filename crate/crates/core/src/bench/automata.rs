//! DFAs for the benchmark rules: nonogram clues, rostering shift rules and
//! home/away run limits.

use crate::regular::Dfa;

/// Binary words (1 = filled) whose blocks of ones are exactly `clue`.
/// An empty clue, or `[0]`, accepts only all-blank words.
pub fn nonogram_dfa(clue: &[usize]) -> Dfa {
    let blocks: Vec<usize> = clue.iter().copied().filter(|&b| b > 0).collect();
    let mut d = Dfa::new(1, 0);
    d.add_transition(0, 0, 0);
    let mut cur = 0;
    for (j, &b) in blocks.iter().enumerate() {
        for _ in 0..b {
            let next = d.add_state();
            d.add_transition(cur, 1, next);
            cur = next;
        }
        let gap = d.add_state();
        d.add_transition(cur, 0, gap);
        d.add_transition(gap, 0, gap);
        if j + 1 == blocks.len() {
            d.set_accepting(cur, true);
            d.set_accepting(gap, true);
        }
        cur = gap;
    }
    if blocks.is_empty() {
        d.set_accepting(0, true);
    }
    d
}

/// Break symbol in rostering schedules; tasks are `1..n`.
pub const BREAK: i64 = 0;

/// Shift rules of one employee over tasks `1..tasks`:
/// consecutive periods hold equal or adjacent tasks, a break may follow any
/// task, and `(t, break, t - 1)` is forbidden.
pub fn rostering_dfa(tasks: i64) -> Dfa {
    let n = tasks as usize;
    // 0: start; 1..=n: last period did task t; n+1+p: on break after task p
    // (p = 0 when no task preceded the break)
    let brk = |p: usize| n + 1 + p;
    let mut d = Dfa::new(2 * n + 2, 0);
    for s in 0..d.num_states() {
        d.set_accepting(s, true);
    }
    for t in 1..=n {
        d.add_transition(0, t as i64, t);
        for u in [t - 1, t, t + 1] {
            if (1..=n).contains(&u) {
                d.add_transition(t, u as i64, u);
            }
        }
        d.add_transition(t, BREAK, brk(t));
    }
    d.add_transition(0, BREAK, brk(0));
    for p in 0..=n {
        d.add_transition(brk(p), BREAK, brk(p));
        for u in 1..=n {
            if p < 2 || u != p - 1 {
                d.add_transition(brk(p), u as i64, u);
            }
        }
    }
    d
}

/// Opponent sequences of team `team` with at most `max_run` consecutive
/// home or away games; `home[team][s]` tells whether the game against `s`
/// is at home. Opponents are labeled `1..=n`.
pub fn venue_dfa(home: &[Vec<bool>], team: usize, max_run: usize) -> Dfa {
    // 0: start; 1..=max_run: home run length; max_run+1..: away run length
    let mut d = Dfa::new(2 * max_run + 1, 0);
    for s in 0..d.num_states() {
        d.set_accepting(s, true);
    }
    let state = |at_home: bool, run: usize| if at_home { run } else { max_run + run };
    for s in 0..home.len() {
        if s == team {
            continue;
        }
        let sym = s as i64 + 1;
        let h = home[team][s];
        d.add_transition(0, sym, state(h, 1));
        for run in 1..=max_run {
            for prev in [true, false] {
                let from = state(prev, run);
                if prev == h {
                    if run < max_run {
                        d.add_transition(from, sym, state(h, run + 1));
                    }
                } else {
                    d.add_transition(from, sym, state(h, 1));
                }
            }
        }
    }
    d
}

/// Block lengths of a binary row.
pub fn clue_of(row: &[bool]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut run = 0;
    for &c in row {
        if c {
            run += 1;
        } else if run > 0 {
            out.push(run);
            run = 0;
        }
    }
    if run > 0 {
        out.push(run);
    }
    out
}
