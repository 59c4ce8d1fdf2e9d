//! Random instance generators. Kinds with a planted solution are marked sat.

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::automata::{clue_of, BREAK};
use super::{Grid, Instance, Kind, LinearRow, Payload};
use crate::error::{Error, Result};
use crate::search::Outcome;

/// Generator parameters; unset fields take per-kind defaults.
///
/// | kind        | n             | m           | fractions                 |
/// |-------------|---------------|-------------|---------------------------|
/// | qwh         | order (12)    |             | holes (0.42)              |
/// | magic       | order (7)     |             | prefill (0.1)             |
/// | nonogram    | rows (16)     | cols (= n)  | density (0.5)             |
/// | multiknap   | variables (20)| rows (5)    |                           |
/// | marketsplit |               | rows (4)    |                           |
/// | rostering   | employees (10)|             | prefill (0.05), removed (0)|
/// | kprostering | days (25)     | staff (4)   | forbidden count (10)      |
/// | ttppv       | teams (10)    |             |                           |
#[derive(Debug, Clone, Default)]
pub struct GenParams {
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub holes: Option<f64>,
    pub prefill: Option<f64>,
    pub removed: Option<f64>,
    pub density: Option<f64>,
    pub forbidden: Option<usize>,
}

fn fraction(x: Option<f64>, default: f64, what: &str) -> Result<f64> {
    let f = x.unwrap_or(default);
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::Invalid(format!("{what} must lie in [0, 1], got {f}")));
    }
    Ok(f)
}

fn at_least(x: usize, min: usize, what: &str) -> Result<usize> {
    if x < min {
        return Err(Error::Invalid(format!("{what} must be at least {min}, got {x}")));
    }
    Ok(x)
}

pub fn generate(kind: Kind, p: &GenParams, seed: u64) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rng = &mut rng;
    let (name, payload, sat) = match kind {
        Kind::Qwh => {
            let n = at_least(p.n.unwrap_or(12), 1, "order")?;
            let holes = fraction(p.holes, 0.42, "holes")?;
            (format!("qwh-{n}-{seed}"), Payload::Qwh(qwh(n, holes, rng)), true)
        }
        Kind::Magic => {
            let n = p.n.unwrap_or(7);
            if n == 2 || n == 0 {
                return Err(Error::Invalid(format!("no magic square of order {n}")));
            }
            let prefill = fraction(p.prefill, 0.1, "prefill")?;
            (format!("magic-{n}-{seed}"), Payload::Magic(magic(n, prefill, rng)), true)
        }
        Kind::Nonogram => {
            let r = at_least(p.n.unwrap_or(16), 1, "rows")?;
            let c = at_least(p.m.unwrap_or(r), 1, "cols")?;
            let density = fraction(p.density, 0.5, "density")?;
            let pic: Vec<Vec<bool>> = (0..r)
                .map(|_| (0..c).map(|_| rng.gen_bool(density)).collect())
                .collect();
            let rows = pic.iter().map(|row| clue_of(row)).collect();
            let cols = (0..c)
                .map(|j| clue_of(&pic.iter().map(|row| row[j]).collect::<Vec<_>>()))
                .collect();
            (format!("nonogram-{r}x{c}-{seed}"), Payload::Nonogram { rows, cols }, true)
        }
        Kind::MultiKnap => {
            let n = at_least(p.n.unwrap_or(20), 1, "variables")?;
            let m = p.m.unwrap_or(5);
            (format!("multiknap-{n}-{m}-{seed}"), multiknap(n, m, rng), true)
        }
        Kind::MarketSplit => {
            let m = at_least(p.m.unwrap_or(4), 2, "rows")?;
            let n = 10 * (m - 1);
            let rows = (0..m)
                .map(|_| {
                    let coefs: Vec<i64> = (0..n).map(|_| rng.gen_range(0..=99)).collect();
                    let rhs = coefs.iter().sum::<i64>() / 2;
                    LinearRow { coefs, rhs }
                })
                .collect();
            (format!("marketsplit-{m}-{seed}"), Payload::MarketSplit { rows }, false)
        }
        Kind::Rostering => {
            let n = at_least(p.n.unwrap_or(10), 4, "employees")?;
            let prefill = fraction(p.prefill, 0.05, "prefill")?;
            let removed = fraction(p.removed, 0.0, "removed")?;
            (format!("rostering-{n}-{seed}"), rostering(n, prefill, removed, rng), true)
        }
        Kind::KpRostering => {
            let days = at_least(p.n.unwrap_or(25), 1, "days")?;
            let m = at_least(p.m.unwrap_or(4), 2, "staff")?;
            let forbidden = p.forbidden.unwrap_or(10);
            if forbidden > days * m * (m - 1) {
                return Err(Error::Invalid(format!("cannot forbid {forbidden} shifts")));
            }
            (format!("kprostering-{m}-{days}-{seed}"), kprostering(m, days, forbidden, rng), true)
        }
        Kind::Ttppv => {
            let n = at_least(p.n.unwrap_or(10), 2, "teams")?;
            if n % 2 == 1 {
                return Err(Error::Invalid(format!("team count must be even, got {n}")));
            }
            (format!("ttppv-{n}-{seed}"), ttppv(n, rng)?, true)
        }
        Kind::Csp => return Err(Error::Invalid("csp instances are written by hand, not generated".into())),
    };
    Ok(Instance { name, payload, status: sat.then_some(Outcome::Sat) })
}

/// Latin square sampled by the Jacobson-Matthews Markov chain; symbols `0..n`.
pub fn random_latin_square(n: usize, rng: &mut impl Rng) -> Vec<Vec<usize>> {
    let idx = |r: usize, c: usize, s: usize| (r * n + c) * n + s;
    let mut cube = vec![0i8; n * n * n];
    for r in 0..n {
        for c in 0..n {
            cube[idx(r, c, (r + c) % n)] = 1;
        }
    }
    if n < 2 {
        return vec![vec![0; n]; n];
    }
    // the two +1 entries on a line through an improper cell, or the single one
    let ones = |cube: &[i8], f: &dyn Fn(usize) -> usize| -> Vec<usize> {
        (0..n).filter(|&k| cube[f(k)] == 1).collect()
    };
    let steps = n * n * n;
    let mut improper: Option<(usize, usize, usize)> = None;
    let mut step = 0;
    while step < steps || improper.is_some() {
        step += 1;
        let (r, c, s) = match improper {
            Some(cell) => cell,
            None => loop {
                let cell = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
                if cube[idx(cell.0, cell.1, cell.2)] == 0 {
                    break cell;
                }
            },
        };
        let rs = ones(&cube, &|k| idx(k, c, s));
        let cs = ones(&cube, &|k| idx(r, k, s));
        let ss = ones(&cube, &|k| idx(r, c, k));
        let r1 = *rs.choose(rng).unwrap();
        let c1 = *cs.choose(rng).unwrap();
        let s1 = *ss.choose(rng).unwrap();
        cube[idx(r, c, s)] += 1;
        cube[idx(r, c1, s1)] += 1;
        cube[idx(r1, c, s1)] += 1;
        cube[idx(r1, c1, s)] += 1;
        cube[idx(r, c, s1)] -= 1;
        cube[idx(r, c1, s)] -= 1;
        cube[idx(r1, c, s)] -= 1;
        cube[idx(r1, c1, s1)] -= 1;
        improper = (cube[idx(r1, c1, s1)] == -1).then_some((r1, c1, s1));
    }
    (0..n)
        .map(|r| (0..n).map(|c| (0..n).find(|&s| cube[idx(r, c, s)] == 1).unwrap()).collect())
        .collect()
}

fn qwh(n: usize, holes: f64, rng: &mut ChaCha8Rng) -> Grid {
    let sq = random_latin_square(n, rng);
    let mut cells: Vec<Vec<i64>> = sq
        .iter()
        .map(|row| row.iter().map(|&s| s as i64 + 1).collect())
        .collect();
    let k = (holes * (n * n) as f64).floor() as usize;
    for cell in sample(rng, n * n, k.min(n * n)) {
        cells[cell / n][cell % n] = 0;
    }
    Grid { cells }
}

/// A magic square of order `n` (any `n` except 2) with entries `1..=n²`.
pub fn magic_square(n: usize) -> Vec<Vec<i64>> {
    if n % 2 == 1 {
        return siamese(n);
    }
    if n % 4 == 0 {
        let nn = (n * n) as i64;
        return (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let v = (i * n + j + 1) as i64;
                        let (a, b) = (i % 4, j % 4);
                        if a == b || a + b == 3 {
                            nn + 1 - v
                        } else {
                            v
                        }
                    })
                    .collect()
            })
            .collect();
    }
    // singly even: Strachey's quadrant construction
    let h = n / 2;
    let sub = siamese(h);
    let q = (h * h) as i64;
    let mut m = vec![vec![0i64; n]; n];
    for i in 0..h {
        for j in 0..h {
            m[i][j] = sub[i][j];
            m[i + h][j + h] = sub[i][j] + q;
            m[i][j + h] = sub[i][j] + 2 * q;
            m[i + h][j] = sub[i][j] + 3 * q;
        }
    }
    let k = (n - 2) / 4;
    for i in 0..h {
        for j in 0..n {
            let left = if i == h / 2 { (1..=k).contains(&j) } else { j < k };
            if left || j + k > n {
                let t = m[i][j];
                m[i][j] = m[i + h][j];
                m[i + h][j] = t;
            }
        }
    }
    m
}

fn siamese(n: usize) -> Vec<Vec<i64>> {
    let mut m = vec![vec![0i64; n]; n];
    let (mut i, mut j) = (0, n / 2);
    for k in 1..=(n * n) as i64 {
        m[i][j] = k;
        let (ni, nj) = ((i + n - 1) % n, (j + 1) % n);
        if m[ni][nj] != 0 {
            i = (i + 1) % n;
        } else {
            (i, j) = (ni, nj);
        }
    }
    m
}

fn magic(n: usize, prefill: f64, rng: &mut ChaCha8Rng) -> Grid {
    let mut sq = magic_square(n);
    if rng.gen_bool(0.5) {
        sq = (0..n).map(|i| (0..n).map(|j| sq[j][i]).collect()).collect();
    }
    if rng.gen_bool(0.5) {
        sq.reverse();
    }
    if rng.gen_bool(0.5) {
        sq.iter_mut().for_each(|row| row.reverse());
    }
    if rng.gen_bool(0.5) {
        let top = (n * n) as i64 + 1;
        sq.iter_mut().flatten().for_each(|v| *v = top - *v);
    }
    let keep = (prefill * (n * n) as f64).floor() as usize;
    let mut cells = vec![vec![0; n]; n];
    for cell in sample(rng, n * n, keep) {
        cells[cell / n][cell % n] = sq[cell / n][cell % n];
    }
    Grid { cells }
}

fn multiknap(n: usize, m: usize, rng: &mut ChaCha8Rng) -> Payload {
    let hidden: Vec<i64> = (0..n).map(|_| rng.gen_range(0..=1)).collect();
    let dot = |c: &[i64]| c.iter().zip(&hidden).map(|(a, b)| a * b).sum::<i64>();
    let objective: Vec<i64> = (0..n).map(|_| rng.gen_range(1..=60)).collect();
    let rows = (0..m)
        .map(|_| {
            let coefs: Vec<i64> = (0..n).map(|_| rng.gen_range(1..=50)).collect();
            let rhs = dot(&coefs).max(coefs.iter().sum::<i64>() / 2);
            LinearRow { coefs, rhs }
        })
        .collect();
    Payload::MultiKnap { optimum: dot(&objective), objective, rows }
}

/// A full schedule: each row a rotation of a cyclic task pattern, so every
/// period holds each value once and every row obeys the shift rules.
fn rostering(n: usize, prefill: f64, removed: f64, rng: &mut ChaCha8Rng) -> Payload {
    let mut pattern: Vec<i64> = (1..n as i64).collect();
    if rng.gen_bool(0.5) {
        pattern.reverse();
    }
    pattern.push(BREAK);
    let mut offsets: Vec<usize> = (0..n).collect();
    offsets.shuffle(rng);
    let shift = rng.gen_range(0..n);
    let sol: Vec<Vec<i64>> = offsets
        .iter()
        .map(|&o| (0..n).map(|p| pattern[(p + o + shift) % n]).collect())
        .collect();
    let mut preset = vec![vec![None; n]; n];
    let k = (prefill * (n * n) as f64).floor() as usize;
    for cell in sample(rng, n * n, k) {
        preset[cell / n][cell % n] = Some(sol[cell / n][cell % n]);
    }
    // removable (cell, value) pairs avoid the planted schedule and preset cells
    let mut pool = Vec::new();
    for r in 0..n {
        for c in 0..n {
            if preset[r][c].is_none() {
                pool.extend((0..n as i64).filter(|&v| v != sol[r][c]).map(|v| (r, c, v)));
            }
        }
    }
    let k = ((removed * (n * n * n) as f64).floor() as usize).min(pool.len());
    let mut removed: Vec<(usize, usize, i64)> = sample(rng, pool.len(), k).into_iter().map(|i| pool[i]).collect();
    removed.sort_unstable();
    Payload::Rostering { preset, removed }
}

fn kprostering(m: usize, days: usize, forbidden: usize, rng: &mut ChaCha8Rng) -> Payload {
    let mut sol = vec![vec![0i64; days]; m];
    for d in 0..days {
        let mut tasks: Vec<i64> = (1..=m as i64).collect();
        tasks.shuffle(rng);
        for e in 0..m {
            sol[e][d] = tasks[e];
        }
    }
    let costs: Vec<Vec<i64>> = (0..m)
        .map(|_| (0..days).map(|_| rng.gen_range(1..=10)).collect())
        .collect();
    let targets = (0..m)
        .map(|e| (0..days).map(|d| costs[e][d] * sol[e][d]).sum())
        .collect();
    let mut pool = Vec::new();
    for e in 0..m {
        for d in 0..days {
            pool.extend((1..=m as i64).filter(|&t| t != sol[e][d]).map(|t| (e, d, t)));
        }
    }
    let mut forbidden: Vec<_> = sample(rng, pool.len(), forbidden).into_iter().map(|i| pool[i]).collect();
    forbidden.sort_unstable();
    Payload::KpRostering { costs, targets, forbidden }
}

/// Round-robin by the circle method, then venues drawn round by round so no
/// team plays more than three consecutive games at home or away.
fn ttppv(n: usize, rng: &mut ChaCha8Rng) -> Result<Payload> {
    let mut label: Vec<usize> = (0..n).collect();
    label.shuffle(rng);
    let mut rounds: Vec<Vec<(usize, usize)>> = (0..n - 1)
        .map(|r| {
            let mut games = vec![(label[n - 1], label[r])];
            for k in 1..n / 2 {
                let a = (r + k) % (n - 1);
                let b = (r + n - 1 - k) % (n - 1);
                games.push((label[a], label[b]));
            }
            games
        })
        .collect();
    rounds.shuffle(rng);
    'attempt: for _ in 0..10_000 {
        let mut home = vec![vec![false; n]; n];
        // (at home, run length) per team
        let mut run = vec![(false, 0usize); n];
        for games in &rounds {
            for &(a, b) in games {
                let forced_away = |t: usize| run[t].1 >= 3 && run[t].0;
                let forced_home = |t: usize| run[t].1 >= 3 && !run[t].0;
                let a_home = match (forced_away(a) || forced_home(b), forced_home(a) || forced_away(b)) {
                    (true, true) => continue 'attempt,
                    (true, false) => false,
                    (false, true) => true,
                    (false, false) => rng.gen_bool(0.5),
                };
                home[a][b] = a_home;
                home[b][a] = !a_home;
                for (t, h) in [(a, a_home), (b, !a_home)] {
                    run[t] = if run[t].0 == h && run[t].1 > 0 { (h, run[t].1 + 1) } else { (h, 1) };
                }
            }
        }
        return Ok(Payload::Ttppv { home });
    }
    Err(Error::Invalid("could not draw venues with runs of at most three".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn is_latin(sq: &[Vec<usize>]) -> bool {
        let n = sq.len();
        (0..n).all(|i| {
            let mut row = vec![false; n];
            let mut col = vec![false; n];
            (0..n).all(|j| {
                let a = !std::mem::replace(&mut row[sq[i][j]], true);
                let b = !std::mem::replace(&mut col[sq[j][i]], true);
                a && b
            })
        })
    }

    #[test]
    fn latin_squares_are_latin() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..10 {
            assert!(is_latin(&random_latin_square(n, &mut rng)));
        }
    }

    #[test]
    fn chain_moves_away_from_cyclic() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sq = random_latin_square(8, &mut rng);
        let cyclic = (0..8).all(|r| (0..8).all(|c| sq[r][c] == (sq[0][c] + r) % 8 || sq[r][c] == (sq[0][c] + 8 - r) % 8));
        assert!(!cyclic);
    }

    #[test]
    fn magic_squares_are_magic() {
        for n in [1, 3, 4, 5, 6, 7, 8, 9, 10, 12, 14] {
            let m = magic_square(n);
            let target = (n * (n * n + 1) / 2) as i64;
            let mut seen: Vec<i64> = m.iter().flatten().copied().collect();
            seen.sort_unstable();
            assert_eq!(seen, (1..=(n * n) as i64).collect::<Vec<_>>(), "n={n}");
            for i in 0..n {
                assert_eq!(m[i].iter().sum::<i64>(), target, "row {i}, n={n}");
                assert_eq!((0..n).map(|j| m[j][i]).sum::<i64>(), target, "col {i}, n={n}");
            }
            assert_eq!((0..n).map(|i| m[i][i]).sum::<i64>(), target);
            assert_eq!((0..n).map(|i| m[i][n - 1 - i]).sum::<i64>(), target);
        }
    }

    #[test]
    fn qwh_hole_count() {
        let inst = generate(Kind::Qwh, &GenParams::default(), 5).unwrap();
        let Payload::Qwh(g) = &inst.payload else { panic!() };
        assert_eq!(g.order(), 12);
        assert_eq!(g.holes(), (0.42f64 * 144.0).floor() as usize);
        assert_eq!(inst.status, Some(Outcome::Sat));
    }

    #[test]
    fn marketsplit_shape() {
        let p = GenParams { m: Some(4), ..Default::default() };
        let inst = generate(Kind::MarketSplit, &p, 2).unwrap();
        let Payload::MarketSplit { rows } = &inst.payload else { panic!() };
        assert_eq!(rows.len(), 4);
        for r in rows {
            assert_eq!(r.coefs.len(), 30);
            assert!(r.coefs.iter().all(|c| (0..=99).contains(c)));
            assert_eq!(r.rhs, r.coefs.iter().sum::<i64>() / 2);
        }
        assert_eq!(inst.status, None);
    }

    #[test]
    fn bad_parameters_rejected() {
        assert!(generate(Kind::Magic, &GenParams { n: Some(2), ..Default::default() }, 0).is_err());
        assert!(generate(Kind::Ttppv, &GenParams { n: Some(5), ..Default::default() }, 0).is_err());
        assert!(generate(Kind::Qwh, &GenParams { holes: Some(1.5), ..Default::default() }, 0).is_err());
        assert!(generate(Kind::MarketSplit, &GenParams { m: Some(1), ..Default::default() }, 0).is_err());
        assert!(generate(Kind::Csp, &GenParams::default(), 0).is_err());
    }

    #[test]
    fn generation_is_seeded() {
        for kind in Kind::ALL.into_iter().filter(|&k| k != Kind::Csp) {
            let a = generate(kind, &GenParams::default(), 9).unwrap();
            let b = generate(kind, &GenParams::default(), 9).unwrap();
            assert_eq!(a, b, "{kind}");
        }
    }
}
