//! Benchmark problems: instance formats, generators and models.

pub mod automata;
mod format;
pub mod generate;
mod model;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::search::Outcome;

pub use format::{parse, parse_as, write};
pub use generate::{generate, GenParams};
pub use model::{build_model, ModelOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    Qwh,
    Magic,
    Nonogram,
    MultiKnap,
    MarketSplit,
    Rostering,
    KpRostering,
    Ttppv,
    /// Free-form model listing domains and constraints.
    Csp,
}

impl Kind {
    pub const ALL: [Kind; 9] = [
        Kind::Qwh,
        Kind::Magic,
        Kind::Nonogram,
        Kind::MultiKnap,
        Kind::MarketSplit,
        Kind::Rostering,
        Kind::KpRostering,
        Kind::Ttppv,
        Kind::Csp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Qwh => "qwh",
            Kind::Magic => "magic",
            Kind::Nonogram => "nonogram",
            Kind::MultiKnap => "multiknap",
            Kind::MarketSplit => "marketsplit",
            Kind::Rostering => "rostering",
            Kind::KpRostering => "kprostering",
            Kind::Ttppv => "ttppv",
            Kind::Csp => "csp",
        }
    }

    /// File extension used when writing generated instances.
    pub fn extension(self) -> &'static str {
        match self {
            Kind::Nonogram => "non",
            Kind::MultiKnap => "mknap",
            Kind::MarketSplit => "msplit",
            Kind::KpRostering => "kpr",
            Kind::Rostering => "roster",
            k => k.name(),
        }
    }

    /// Guess the kind from a file extension.
    pub fn from_path(path: &Path) -> Option<Kind> {
        let ext = path.extension()?.to_str()?;
        Kind::ALL
            .into_iter()
            .find(|k| k.extension() == ext || k.name() == ext)
    }

    fn names() -> String {
        Kind::ALL.map(Kind::name).join(", ")
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Kind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown problem kind `{s}`; expected one of: {}", Kind::names())))
    }
}

/// A square grid; 0 marks an empty cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    pub cells: Vec<Vec<i64>>,
}

impl Grid {
    pub fn order(&self) -> usize {
        self.cells.len()
    }

    pub fn holes(&self) -> usize {
        self.cells.iter().flatten().filter(|&&c| c == 0).count()
    }
}

/// `Σ coefs·x` against a right-hand side (capacity or equality target).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearRow {
    pub coefs: Vec<i64>,
    pub rhs: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CspConstraint {
    AllDifferent(Vec<usize>),
    /// Symmetric alldifferent; variable `i` is labeled `i + 1`.
    Symmetric(Vec<usize>),
    /// `(var, lower, upper)` cardinalities per value.
    Gcc { vars: Vec<usize>, cards: Vec<(i64, usize, usize)> },
    Knapsack { vars: Vec<usize>, coefs: Vec<i64>, lower: i64, upper: i64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    Qwh(Grid),
    Magic(Grid),
    Nonogram { rows: Vec<Vec<usize>>, cols: Vec<Vec<usize>> },
    /// 0-1 variables; objective fixed to `optimum`, each row `≤ rhs`.
    MultiKnap { objective: Vec<i64>, optimum: i64, rows: Vec<LinearRow> },
    /// 0-1 variables; each row an equality.
    MarketSplit { rows: Vec<LinearRow> },
    /// `n` employees over `n` periods; values are tasks `1..n` or the break 0.
    Rostering { preset: Vec<Vec<Option<i64>>>, removed: Vec<(usize, usize, i64)> },
    /// Employee-by-day tasks `1..=m`; `costs[e][d]` per unit of task.
    KpRostering { costs: Vec<Vec<i64>>, targets: Vec<i64>, forbidden: Vec<(usize, usize, i64)> },
    /// `home[a][b]`: the game between `a` and `b` is at `a`'s venue.
    Ttppv { home: Vec<Vec<bool>> },
    Csp { domains: Vec<Vec<i64>>, constraints: Vec<CspConstraint> },
}

impl Payload {
    pub fn kind(&self) -> Kind {
        match self {
            Payload::Qwh(_) => Kind::Qwh,
            Payload::Magic(_) => Kind::Magic,
            Payload::Nonogram { .. } => Kind::Nonogram,
            Payload::MultiKnap { .. } => Kind::MultiKnap,
            Payload::MarketSplit { .. } => Kind::MarketSplit,
            Payload::Rostering { .. } => Kind::Rostering,
            Payload::KpRostering { .. } => Kind::KpRostering,
            Payload::Ttppv { .. } => Kind::Ttppv,
            Payload::Csp { .. } => Kind::Csp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub name: String,
    pub payload: Payload,
    /// Known satisfiability, when the generator guarantees it.
    pub status: Option<Outcome>,
}

impl Instance {
    pub fn new(name: impl Into<String>, payload: Payload) -> Self {
        Instance { name: name.into(), payload, status: None }
    }

    pub fn kind(&self) -> Kind {
        self.payload.kind()
    }

    /// Read an instance, inferring the kind from the extension or the first
    /// line unless `kind` is given.
    pub fn load(path: &Path, kind: Option<Kind>) -> Result<Instance> {
        let text = std::fs::read_to_string(path)?;
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("instance")
            .to_string();
        let kind = kind.or_else(|| Kind::from_path(path));
        match kind {
            Some(k) => parse_as(&text, k, &name),
            None => parse(&text, &name),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, write(self))?;
        Ok(())
    }
}
