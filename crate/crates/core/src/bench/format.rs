//! Line-oriented text formats. Blank lines and `#` comments are skipped,
//! except `# status: sat|unsat` which records a known verdict. `write`
//! emits the canonical form, so `write(parse(write(i)))` is byte-identical.

use std::fmt::Write as _;
use std::str::FromStr;

use super::{CspConstraint, Grid, Instance, Kind, LinearRow, Payload};
use crate::error::{Error, Result};
use crate::search::Outcome;

struct Lines<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
    status: Option<Outcome>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Result<Self> {
        let mut items = Vec::new();
        let mut status = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(s) = comment.trim().strip_prefix("status:") {
                    status = Some(s.trim().parse().map_err(|_| perr(i + 1, format!("bad status `{}`", s.trim())))?);
                }
                continue;
            }
            if !line.is_empty() {
                items.push((i + 1, line));
            }
        }
        Ok(Lines { items, pos: 0, status })
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        let last = self.items.last().map_or(1, |l| l.0);
        let item = self
            .items
            .get(self.pos)
            .copied()
            .ok_or_else(|| perr(last, format!("unexpected end of file, expected {what}")))?;
        self.pos += 1;
        Ok(item)
    }

    fn ints<T: FromStr>(&mut self, what: &str) -> Result<(usize, Vec<T>)> {
        let (ln, line) = self.next(what)?;
        Ok((ln, tokens(ln, line)?))
    }

    fn finish(&self) -> Result<()> {
        match self.items.get(self.pos) {
            Some(&(ln, _)) => Err(perr(ln, "unexpected trailing content".into())),
            None => Ok(()),
        }
    }
}

fn perr(line: usize, msg: String) -> Error {
    Error::Parse { line, msg }
}

fn tokens<T: FromStr>(ln: usize, line: &str) -> Result<Vec<T>> {
    line.split_whitespace()
        .map(|t| t.parse().map_err(|_| perr(ln, format!("bad field `{t}`"))))
        .collect()
}

fn expect_len<T>(ln: usize, v: &[T], n: usize, what: &str) -> Result<()> {
    if v.len() != n {
        return Err(perr(ln, format!("expected {n} {what}, found {}", v.len())));
    }
    Ok(())
}

/// Parse, taking the kind from the tag on the first line.
pub fn parse(text: &str, name: &str) -> Result<Instance> {
    let lines = Lines::new(text)?;
    let Some(&(ln, first)) = lines.items.first() else {
        return Err(perr(1, "empty file".into()));
    };
    let tag = first.split_whitespace().next().unwrap_or("");
    match tag.parse::<Kind>() {
        Ok(k) => parse_as(text, k, name),
        Err(_) => Err(perr(ln, format!("cannot infer the problem kind; expected one of: {}", Kind::names()))),
    }
}

pub fn parse_as(text: &str, kind: Kind, name: &str) -> Result<Instance> {
    let mut lines = Lines::new(text)?;
    let payload = match kind {
        Kind::Qwh => Payload::Qwh(parse_grid(&mut lines, false)?),
        Kind::Magic => Payload::Magic(parse_grid(&mut lines, true)?),
        Kind::Nonogram => parse_nonogram(&mut lines)?,
        Kind::MultiKnap => parse_multiknap(&mut lines)?,
        Kind::MarketSplit => parse_marketsplit(&mut lines)?,
        Kind::Rostering => parse_rostering(&mut lines)?,
        Kind::KpRostering => parse_kprostering(&mut lines)?,
        Kind::Ttppv => parse_ttppv(&mut lines)?,
        Kind::Csp => parse_csp(&mut lines)?,
    };
    lines.finish()?;
    Ok(Instance { name: name.to_string(), payload, status: lines.status })
}

/// Strip the kind tag from a header and read its integer fields.
fn header(lines: &mut Lines, tag: &str, fields: usize) -> Result<(usize, Vec<usize>)> {
    let (ln, line) = lines.next("header")?;
    let rest = line
        .strip_prefix(tag)
        .ok_or_else(|| perr(ln, format!("expected `{tag}` header")))?;
    let v: Vec<usize> = tokens(ln, rest)?;
    expect_len(ln, &v, fields, "header fields")?;
    Ok((ln, v))
}

fn parse_grid(lines: &mut Lines, magic: bool) -> Result<Grid> {
    let (ln, h) = lines.ints::<usize>("order")?;
    expect_len(ln, &h, 1, "header fields")?;
    let n = h[0];
    let top = if magic { (n * n) as i64 } else { n as i64 };
    let mut cells = Vec::with_capacity(n);
    for _ in 0..n {
        let (ln, row) = lines.ints::<i64>("grid row")?;
        expect_len(ln, &row, n, "cells")?;
        if let Some(c) = row.iter().find(|&&c| !(0..=top).contains(&c)) {
            return Err(perr(ln, format!("cell value {c} outside 0..={top}")));
        }
        cells.push(row);
    }
    Ok(Grid { cells })
}

fn parse_clues(lines: &mut Lines, count: usize, len: usize) -> Result<Vec<Vec<usize>>> {
    (0..count)
        .map(|_| {
            let (ln, mut clue) = lines.ints::<usize>("clue")?;
            if clue == [0] {
                clue.clear();
            }
            if clue.contains(&0) {
                return Err(perr(ln, "zero block inside a clue".into()));
            }
            let need: usize = clue.iter().sum::<usize>() + clue.len().saturating_sub(1);
            if need > len {
                return Err(perr(ln, format!("clue needs {need} cells but the line has {len}")));
            }
            Ok(clue)
        })
        .collect()
}

fn parse_nonogram(lines: &mut Lines) -> Result<Payload> {
    let (ln, h) = lines.ints::<usize>("`rows cols`")?;
    expect_len(ln, &h, 2, "header fields")?;
    let rows = parse_clues(lines, h[0], h[1])?;
    let cols = parse_clues(lines, h[1], h[0])?;
    Ok(Payload::Nonogram { rows, cols })
}

fn parse_rows(lines: &mut Lines, m: usize, n: usize) -> Result<Vec<LinearRow>> {
    (0..m)
        .map(|_| {
            let (ln, mut v) = lines.ints::<i64>("constraint row")?;
            expect_len(ln, &v, n + 1, "fields")?;
            let rhs = v.pop().unwrap();
            Ok(LinearRow { coefs: v, rhs })
        })
        .collect()
}

fn parse_multiknap(lines: &mut Lines) -> Result<Payload> {
    let (ln, h) = lines.ints::<i64>("`n m optimum`")?;
    expect_len(ln, &h, 3, "header fields")?;
    if h[0] < 0 || h[1] < 0 {
        return Err(perr(ln, "negative dimension".into()));
    }
    let (n, m) = (h[0] as usize, h[1] as usize);
    let (ln, objective) = lines.ints::<i64>("objective")?;
    expect_len(ln, &objective, n, "objective coefficients")?;
    let rows = parse_rows(lines, m, n)?;
    Ok(Payload::MultiKnap { objective, optimum: h[2], rows })
}

fn parse_marketsplit(lines: &mut Lines) -> Result<Payload> {
    let (ln, h) = lines.ints::<usize>("`m n`")?;
    expect_len(ln, &h, 2, "header fields")?;
    Ok(Payload::MarketSplit { rows: parse_rows(lines, h[0], h[1])? })
}

fn parse_triples(lines: &mut Lines, k: usize, dims: (usize, usize), values: std::ops::RangeInclusive<i64>) -> Result<Vec<(usize, usize, i64)>> {
    (0..k)
        .map(|_| {
            let (ln, v) = lines.ints::<i64>("`row col value`")?;
            expect_len(ln, &v, 3, "fields")?;
            let (r, c) = (v[0], v[1]);
            if r < 0 || c < 0 || r as usize >= dims.0 || c as usize >= dims.1 {
                return Err(perr(ln, format!("cell ({r}, {c}) out of range")));
            }
            if !values.contains(&v[2]) {
                return Err(perr(ln, format!("value {} out of range", v[2])));
            }
            Ok((r as usize, c as usize, v[2]))
        })
        .collect()
}

fn parse_rostering(lines: &mut Lines) -> Result<Payload> {
    let (_, h) = header(lines, "rostering", 2)?;
    let (n, k) = (h[0], h[1]);
    let mut preset = Vec::with_capacity(n);
    for _ in 0..n {
        let (ln, line) = lines.next("schedule row")?;
        let row: Vec<Option<i64>> = line
            .split_whitespace()
            .map(|t| match t {
                "." => Ok(None),
                _ => match t.parse::<i64>() {
                    Ok(v) if (0..n as i64).contains(&v) => Ok(Some(v)),
                    _ => Err(perr(ln, format!("bad cell `{t}`"))),
                },
            })
            .collect::<Result<_>>()?;
        expect_len(ln, &row, n, "cells")?;
        preset.push(row);
    }
    let removed = parse_triples(lines, k, (n, n), 0..=(n as i64 - 1))?;
    Ok(Payload::Rostering { preset, removed })
}

fn parse_kprostering(lines: &mut Lines) -> Result<Payload> {
    let (_, h) = header(lines, "kprostering", 3)?;
    let (m, n, k) = (h[0], h[1], h[2]);
    let mut costs = Vec::with_capacity(m);
    for _ in 0..m {
        let (ln, row) = lines.ints::<i64>("cost row")?;
        expect_len(ln, &row, n, "costs")?;
        costs.push(row);
    }
    let (ln, targets) = lines.ints::<i64>("targets")?;
    expect_len(ln, &targets, m, "targets")?;
    let forbidden = parse_triples(lines, k, (m, n), 1..=m as i64)?;
    Ok(Payload::KpRostering { costs, targets, forbidden })
}

fn parse_ttppv(lines: &mut Lines) -> Result<Payload> {
    let (ln, h) = header(lines, "ttppv", 1)?;
    let n = h[0];
    if n % 2 == 1 {
        return Err(perr(ln, "odd number of teams".into()));
    }
    let mut home = vec![vec![false; n]; n];
    for a in 0..n {
        let (ln, line) = lines.next("venue row")?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        expect_len(ln, &toks, n, "venues")?;
        for (b, t) in toks.iter().enumerate() {
            match (*t, a == b) {
                ("-", true) => {}
                ("H", false) => home[a][b] = true,
                ("A", false) => {}
                _ => return Err(perr(ln, format!("bad venue `{t}` at column {b}"))),
            }
        }
    }
    for a in 0..n {
        for b in 0..a {
            if home[a][b] == home[b][a] {
                return Err(perr(ln, format!("teams {a} and {b} disagree on the venue")));
            }
        }
    }
    Ok(Payload::Ttppv { home })
}

fn parse_csp(lines: &mut Lines) -> Result<Payload> {
    let (_, h) = header(lines, "csp", 1)?;
    let n = h[0];
    let mut domains = Vec::with_capacity(n);
    for _ in 0..n {
        let (ln, line) = lines.next("domain")?;
        let rest = line
            .strip_prefix("dom")
            .ok_or_else(|| perr(ln, "expected `dom` line".into()))?;
        let mut d: Vec<i64> = tokens(ln, rest)?;
        d.sort_unstable();
        d.dedup();
        domains.push(d);
    }
    let var_list = |ln: usize, s: &str| -> Result<Vec<usize>> {
        let v: Vec<usize> = tokens(ln, s)?;
        if let Some(x) = v.iter().find(|&&x| x >= n) {
            return Err(perr(ln, format!("variable {x} out of range")));
        }
        Ok(v)
    };
    let mut constraints = Vec::new();
    while lines.pos < lines.items.len() {
        let (ln, line) = lines.next("constraint")?;
        let (tag, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let c = match tag {
            "alldifferent" => CspConstraint::AllDifferent(var_list(ln, rest)?),
            "symmetric" => CspConstraint::Symmetric(var_list(ln, rest)?),
            "gcc" => {
                let (vs, cs) = rest
                    .split_once('|')
                    .ok_or_else(|| perr(ln, "expected `gcc vars | value:lower:upper ...`".into()))?;
                let cards = cs
                    .split_whitespace()
                    .map(|t| {
                        let f: Vec<&str> = t.split(':').collect();
                        let bad = || perr(ln, format!("bad cardinality `{t}`"));
                        if f.len() != 3 {
                            return Err(bad());
                        }
                        Ok((
                            f[0].parse().map_err(|_| bad())?,
                            f[1].parse().map_err(|_| bad())?,
                            f[2].parse().map_err(|_| bad())?,
                        ))
                    })
                    .collect::<Result<_>>()?;
                CspConstraint::Gcc { vars: var_list(ln, vs)?, cards }
            }
            "knapsack" => {
                let mut it = rest.split_whitespace();
                let mut bound = |what: &str| -> Result<i64> {
                    it.next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| perr(ln, format!("missing {what} bound")))
                };
                let lower = bound("lower")?;
                let upper = bound("upper")?;
                let (mut vars, mut coefs) = (Vec::new(), Vec::new());
                for t in it {
                    let (c, v) = t
                        .split_once('*')
                        .ok_or_else(|| perr(ln, format!("expected `coef*var`, found `{t}`")))?;
                    coefs.push(c.parse().map_err(|_| perr(ln, format!("bad coefficient `{c}`")))?);
                    vars.extend(var_list(ln, v)?);
                }
                CspConstraint::Knapsack { vars, coefs, lower, upper }
            }
            _ => return Err(perr(ln, format!("unknown constraint `{tag}`"))),
        };
        constraints.push(c);
    }
    Ok(Payload::Csp { domains, constraints })
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}

/// Canonical text form.
pub fn write(inst: &Instance) -> String {
    let mut s = String::new();
    if let Some(st) = inst.status {
        let _ = writeln!(s, "# status: {st}");
    }
    match &inst.payload {
        Payload::Qwh(g) | Payload::Magic(g) => {
            let _ = writeln!(s, "{}", g.order());
            for row in &g.cells {
                let _ = writeln!(s, "{}", join(row));
            }
        }
        Payload::Nonogram { rows, cols } => {
            let _ = writeln!(s, "{} {}", rows.len(), cols.len());
            for clue in rows.iter().chain(cols) {
                let _ = writeln!(s, "{}", if clue.is_empty() { "0".into() } else { join(clue) });
            }
        }
        Payload::MultiKnap { objective, optimum, rows } => {
            let _ = writeln!(s, "{} {} {}", objective.len(), rows.len(), optimum);
            let _ = writeln!(s, "{}", join(objective));
            for r in rows {
                let _ = writeln!(s, "{} {}", join(&r.coefs), r.rhs);
            }
        }
        Payload::MarketSplit { rows } => {
            let n = rows.first().map_or(0, |r| r.coefs.len());
            let _ = writeln!(s, "{} {}", rows.len(), n);
            for r in rows {
                let _ = writeln!(s, "{} {}", join(&r.coefs), r.rhs);
            }
        }
        Payload::Rostering { preset, removed } => {
            let _ = writeln!(s, "rostering {} {}", preset.len(), removed.len());
            for row in preset {
                let cells: Vec<String> = row
                    .iter()
                    .map(|c| c.map_or(".".into(), |v| v.to_string()))
                    .collect();
                let _ = writeln!(s, "{}", cells.join(" "));
            }
            for (r, c, v) in removed {
                let _ = writeln!(s, "{r} {c} {v}");
            }
        }
        Payload::KpRostering { costs, targets, forbidden } => {
            let n = costs.first().map_or(0, Vec::len);
            let _ = writeln!(s, "kprostering {} {} {}", costs.len(), n, forbidden.len());
            for row in costs {
                let _ = writeln!(s, "{}", join(row));
            }
            let _ = writeln!(s, "{}", join(targets));
            for (e, d, t) in forbidden {
                let _ = writeln!(s, "{e} {d} {t}");
            }
        }
        Payload::Ttppv { home } => {
            let _ = writeln!(s, "ttppv {}", home.len());
            for (a, row) in home.iter().enumerate() {
                let cells: Vec<&str> = row
                    .iter()
                    .enumerate()
                    .map(|(b, &h)| if a == b { "-" } else if h { "H" } else { "A" })
                    .collect();
                let _ = writeln!(s, "{}", cells.join(" "));
            }
        }
        Payload::Csp { domains, constraints } => {
            let _ = writeln!(s, "csp {}", domains.len());
            for d in domains {
                let _ = writeln!(s, "{}", if d.is_empty() { "dom".into() } else { format!("dom {}", join(d)) });
            }
            for c in constraints {
                let _ = match c {
                    CspConstraint::AllDifferent(v) => writeln!(s, "alldifferent {}", join(v)),
                    CspConstraint::Symmetric(v) => writeln!(s, "symmetric {}", join(v)),
                    CspConstraint::Gcc { vars, cards } => {
                        let cs: Vec<String> = cards.iter().map(|(v, l, u)| format!("{v}:{l}:{u}")).collect();
                        writeln!(s, "gcc {} | {}", join(vars), cs.join(" "))
                    }
                    CspConstraint::Knapsack { vars, coefs, lower, upper } => {
                        let terms: Vec<String> = coefs.iter().zip(vars).map(|(c, v)| format!("{c}*{v}")).collect();
                        writeln!(s, "knapsack {lower} {upper} {}", terms.join(" "))
                    }
                };
            }
        }
    }
    s
}
