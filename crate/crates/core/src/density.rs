//! Per-constraint solution density tables.

use crate::domain::VarId;

/// Densities of every current value of one unbound variable.
#[derive(Debug, Clone, PartialEq)]
pub struct VarDensities {
    pub var: VarId,
    /// `(value, density)` in ascending value order.
    pub values: Vec<(i64, f64)>,
}

impl VarDensities {
    /// Normalizes log-scale weights into densities.
    ///
    /// When every weight is zero (`-inf`) the densities fall back to uniform so
    /// the table still sums to one.
    pub fn from_log_weights(var: VarId, values: &[i64], log_weights: &[f64]) -> Self {
        debug_assert_eq!(values.len(), log_weights.len());
        let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY || max.is_nan() {
            let u = 1.0 / values.len() as f64;
            return VarDensities {
                var,
                values: values.iter().map(|&v| (v, u)).collect(),
            };
        }
        let w: Vec<f64> = log_weights.iter().map(|&l| (l - max).exp()).collect();
        let total: f64 = w.iter().sum();
        VarDensities {
            var,
            values: values.iter().zip(w).map(|(&v, x)| (v, x / total)).collect(),
        }
    }

    /// Normalizes nonnegative linear weights into densities.
    pub fn from_weights(var: VarId, values: &[i64], weights: &[f64]) -> Self {
        let logs: Vec<f64> = weights.iter().map(|w| w.ln()).collect();
        Self::from_log_weights(var, values, &logs)
    }

    pub fn density(&self, value: i64) -> Option<f64> {
        self.values
            .binary_search_by(|(v, _)| v.cmp(&value))
            .ok()
            .map(|i| self.values[i].1)
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().map(|(_, d)| d).sum()
    }
}

/// Solution-count estimate and densities reported by one constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityTable {
    /// Index of the reporting constraint in its model.
    pub constraint: usize,
    /// Natural log of the solution count (or of its upper bound).
    pub log_count: f64,
    /// Whether `log_count` is exact rather than a bound or an estimate.
    pub exact: bool,
    /// One entry per unbound scope variable, in scope order.
    pub entries: Vec<VarDensities>,
}

impl DensityTable {
    pub fn new(log_count: f64, exact: bool, entries: Vec<VarDensities>) -> Self {
        DensityTable {
            constraint: usize::MAX,
            log_count,
            exact,
            entries,
        }
    }

    pub fn count(&self) -> f64 {
        self.log_count.exp()
    }

    pub fn entry(&self, var: VarId) -> Option<&VarDensities> {
        self.entries.iter().find(|e| e.var == var)
    }

    pub fn density(&self, var: VarId, value: i64) -> Option<f64> {
        self.entry(var).and_then(|e| e.density(value))
    }
}
