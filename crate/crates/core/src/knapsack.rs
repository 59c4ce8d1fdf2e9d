//! Linear constraint `lower <= sum c_i x_i <= upper`: domain-consistent
//! filtering and exact counting on the layered graph of partial sums, or
//! bounds-consistent filtering with Gaussian density estimates.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::density::{DensityTable, VarDensities};
use crate::domain::{DomainStore, PropResult, VarId, Wipeout};
use crate::engine::Constraint;
use crate::error::Error;
use crate::layered::LayeredGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KnapsackMode {
    /// Domain consistency and exact counts.
    #[default]
    Exact,
    /// Bounds consistency and Gaussian density estimates.
    Gaussian,
}

impl std::str::FromStr for KnapsackMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "exact" => Ok(KnapsackMode::Exact),
            "gaussian" => Ok(KnapsackMode::Gaussian),
            _ => Err(Error::Invalid(format!("unknown knapsack mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Knapsack {
    vars: Vec<VarId>,
    coefs: Vec<i64>,
    lower: i64,
    upper: i64,
    mode: KnapsackMode,
    exact_moments: bool,
}

/// Mean and variance of the discrete uniform distribution on `[a, b]`.
pub fn uniform_moments(a: i64, b: i64) -> (f64, f64) {
    let w = (b - a + 1) as f64;
    ((a + b) as f64 / 2.0, (w * w - 1.0) / 12.0)
}

/// Mean and variance of the uniform distribution on the given values.
pub fn set_moments(values: &[i64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().map(|&v| v as f64).sum::<f64>() / n;
    let var = values.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

/// Moments of `sum c_j X_j` for independent uniform `X_j` over `[min, max]`
/// of each domain.
pub fn linear_moments(coefs: &[i64], doms: &[Vec<i64>]) -> (f64, f64) {
    coefs.iter().zip(doms).fold((0.0, 0.0), |(m, v), (&c, d)| {
        let (mu, var) = uniform_moments(d[0], *d.last().unwrap());
        (m + c as f64 * mu, v + (c * c) as f64 * var)
    })
}

/// Quantities shared by every variable of one constraint (`M` and `V`).
#[derive(Debug, Clone)]
pub struct GaussianMoments {
    pub mu: Vec<f64>,
    pub var: Vec<f64>,
    pub m_total: f64,
    pub v_total: f64,
}

fn div_floor(a: i128, b: i128) -> i128 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn div_ceil(a: i128, b: i128) -> i128 {
    -div_floor(-a, b)
}

impl Knapsack {
    pub fn new(vars: Vec<VarId>, coefs: Vec<i64>, lower: i64, upper: i64) -> Self {
        assert_eq!(vars.len(), coefs.len());
        Knapsack {
            vars,
            coefs,
            lower,
            upper,
            mode: KnapsackMode::Exact,
            exact_moments: false,
        }
    }

    pub fn equality(vars: Vec<VarId>, coefs: Vec<i64>, rhs: i64) -> Self {
        Self::new(vars, coefs, rhs, rhs)
    }

    pub fn with_mode(mut self, mode: KnapsackMode) -> Self {
        self.mode = mode;
        self
    }

    /// Uses each domain's actual mean and variance instead of those of its
    /// covering interval.
    pub fn with_exact_moments(mut self, on: bool) -> Self {
        self.exact_moments = on;
        self
    }

    pub fn mode(&self) -> KnapsackMode {
        self.mode
    }

    pub fn coefs(&self) -> &[i64] {
        &self.coefs
    }

    pub fn bounds(&self) -> (i64, i64) {
        (self.lower, self.upper)
    }

    /// Layered graph of the partial sums, shifted so that every partial sum
    /// lies in `[0, upper']`.
    pub fn graph(&self, doms: &[Vec<i64>]) -> LayeredGraph<i64> {
        if doms.iter().any(|d| d.is_empty()) {
            return LayeredGraph::build(doms, 0, |_, _, _| None, |_| false);
        }
        let mut offset = 0i64;
        for (c, d) in self.coefs.iter().zip(doms) {
            offset += if *c >= 0 { c * d[0] } else { c * d.last().unwrap() };
        }
        let lo = self.lower - offset;
        let hi = self.upper - offset;
        let coefs = &self.coefs;
        LayeredGraph::build(
            doms,
            0i64,
            |i, b, v| {
                let c = coefs[i];
                let y = if c >= 0 { v - doms[i][0] } else { doms[i].last().unwrap() - v };
                let nb = b + c.abs() * y;
                (nb <= hi).then_some(nb)
            },
            |b| b >= lo && b <= hi,
        )
    }

    fn propagate_exact(&self, doms: &mut DomainStore) -> PropResult {
        let local: Vec<Vec<i64>> = self.vars.iter().map(|&v| doms.values(v)).collect();
        let graph = self.graph(&local);
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

    fn propagate_bounds(&self, doms: &mut DomainStore) -> PropResult {
        loop {
            let term = |i: usize, doms: &DomainStore| -> (i128, i128) {
                let c = self.coefs[i] as i128;
                let a = c * doms.min(self.vars[i]).unwrap() as i128;
                let b = c * doms.max(self.vars[i]).unwrap() as i128;
                (a.min(b), a.max(b))
            };
            let terms: Vec<(i128, i128)> = (0..self.vars.len()).map(|i| term(i, doms)).collect();
            let min_sum: i128 = terms.iter().map(|t| t.0).sum();
            let max_sum: i128 = terms.iter().map(|t| t.1).sum();
            if min_sum > self.upper as i128 || max_sum < self.lower as i128 {
                return Err(Wipeout);
            }
            let mut changed = false;
            for (i, &x) in self.vars.iter().enumerate() {
                let c = self.coefs[i] as i128;
                if c == 0 {
                    continue;
                }
                // c * x <= upper - (min_sum - own min), c * x >= lower - (max_sum - own max)
                let hi = self.upper as i128 - (min_sum - terms[i].0);
                let lo = self.lower as i128 - (max_sum - terms[i].1);
                let (xmin, xmax) = if c > 0 {
                    (div_ceil(lo, c), div_floor(hi, c))
                } else {
                    (div_ceil(hi, c), div_floor(lo, c))
                };
                let xmin = xmin.clamp(i64::MIN as i128, i64::MAX as i128) as i64;
                let xmax = xmax.clamp(i64::MIN as i128, i64::MAX as i128) as i64;
                changed |= doms.remove_below(x, xmin)?;
                changed |= doms.remove_above(x, xmax)?;
            }
            if !changed {
                return Ok(());
            }
        }
    }

    /// `M` and `V` of the Gaussian approximation, plus per-variable moments.
    pub fn gaussian_moments(&self, doms: &[Vec<i64>]) -> GaussianMoments {
        let (mu, var): (Vec<f64>, Vec<f64>) = doms
            .iter()
            .map(|d| {
                if self.exact_moments {
                    set_moments(d)
                } else {
                    uniform_moments(d[0], *d.last().unwrap())
                }
            })
            .unzip();
        let (slack_mean, slack_var) = uniform_moments(self.lower, self.upper);
        let mut m_total = slack_mean;
        let mut v_total = slack_var;
        for (j, &c) in self.coefs.iter().enumerate() {
            m_total -= c as f64 * mu[j];
            v_total += (c * c) as f64 * var[j];
        }
        GaussianMoments {
            mu,
            var,
            m_total,
            v_total,
        }
    }

    /// Mean and variance of the estimated distribution of `x_i`.
    fn var_distribution(&self, g: &GaussianMoments, i: usize) -> (f64, f64) {
        let c = self.coefs[i] as f64;
        let m = (g.m_total + c * g.mu[i]) / c;
        let v = (g.v_total - c * c * g.var[i]) / (c * c);
        (m, v)
    }

    /// Values of `x_i` compatible with the other variables when those are
    /// all bound.
    fn residual_values(&self, doms: &[Vec<i64>], i: usize) -> Vec<i64> {
        let rest: i64 = (0..doms.len())
            .filter(|&j| j != i)
            .map(|j| self.coefs[j] * doms[j][0])
            .sum();
        doms[i]
            .iter()
            .copied()
            .filter(|&d| {
                let s = rest + self.coefs[i] * d;
                self.lower <= s && s <= self.upper
            })
            .collect()
    }

    /// The value of `x_i` closest to the estimated mean and its estimated
    /// density.
    pub fn gaussian_best(&self, doms: &[Vec<i64>], i: usize) -> Option<(i64, f64)> {
        let d = &doms[i];
        if d.is_empty() || self.coefs[i] == 0 {
            return None;
        }
        let g = self.gaussian_moments(doms);
        let (m, v) = self.var_distribution(&g, i);
        if v <= 1e-12 {
            let ok = self.residual_values(doms, i);
            return ok.first().map(|&k| (k, 1.0 / ok.len() as f64));
        }
        let k = *d
            .iter()
            .min_by(|a, b| {
                (**a as f64 - m)
                    .abs()
                    .partial_cmp(&(**b as f64 - m).abs())
                    .unwrap()
                    .then(a.cmp(b))
            })
            .unwrap();
        let normal = Normal::new(m, v.sqrt()).ok()?;
        let pdf = (-(k as f64 - m).powi(2) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt();
        let mass = normal.cdf(*d.last().unwrap() as f64 + 0.5) - normal.cdf(d[0] as f64 + 0.5);
        let density = if mass > 0.0 { pdf / mass } else { 1.0 };
        Some((k, density))
    }

    fn gaussian_table(&self, doms: &[Vec<i64>]) -> DensityTable {
        if doms.iter().any(|d| d.is_empty()) {
            return DensityTable::new(f64::NEG_INFINITY, false, Vec::new());
        }
        let g = self.gaussian_moments(doms);
        let mut entries = Vec::new();
        for (i, d) in doms.iter().enumerate() {
            if d.len() <= 1 {
                continue;
            }
            let weights: Vec<f64> = if self.coefs[i] == 0 {
                vec![0.0; d.len()]
            } else {
                let (m, v) = self.var_distribution(&g, i);
                if v <= 1e-12 {
                    let ok = self.residual_values(doms, i);
                    d.iter()
                        .map(|x| if ok.contains(x) { 0.0 } else { f64::NEG_INFINITY })
                        .collect()
                } else {
                    d.iter().map(|&x| -(x as f64 - m).powi(2) / (2.0 * v)).collect()
                }
            };
            entries.push(VarDensities::from_log_weights(self.vars[i], d, &weights));
        }
        // estimated count: tuples times the probability of landing in range
        let (mean, var) = linear_moments(&self.coefs, doms);
        let tuples: f64 = doms.iter().map(|d| (d.len() as f64).ln()).sum();
        let p = if var > 0.0 {
            let n = Normal::new(mean, var.sqrt()).unwrap();
            n.cdf(self.upper as f64 + 0.5) - n.cdf(self.lower as f64 - 0.5)
        } else if self.lower as f64 <= mean && mean <= self.upper as f64 {
            1.0
        } else {
            0.0
        };
        DensityTable::new(tuples + p.ln(), false, entries)
    }
}

impl Constraint for Knapsack {
    fn name(&self) -> &'static str {
        "knapsack"
    }

    fn scope(&self) -> &[VarId] {
        &self.vars
    }

    fn propagate(&self, doms: &mut DomainStore) -> PropResult {
        match self.mode {
            KnapsackMode::Exact => self.propagate_exact(doms),
            KnapsackMode::Gaussian => self.propagate_bounds(doms),
        }
    }

    fn densities(&self, doms: &DomainStore) -> Option<DensityTable> {
        let local: Vec<Vec<i64>> = self.vars.iter().map(|&v| doms.values(v)).collect();
        Some(match self.mode {
            KnapsackMode::Exact => self.graph(&local).density_table(&self.vars, &local),
            KnapsackMode::Gaussian => self.gaussian_table(&local),
        })
    }

    fn check(&self, values: &[i64]) -> bool {
        let s: i128 = values
            .iter()
            .zip(&self.coefs)
            .map(|(&v, &c)| v as i128 * c as i128)
            .sum();
        self.lower as i128 <= s && s <= self.upper as i128
    }
}
