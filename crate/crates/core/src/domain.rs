//! Reversible finite integer domains.
//!
//! Every variable keeps its initial sorted value list (the *universe*) and a
//! bitset of the values still present. Removals are pushed on a trail tagged
//! with the decision level at which they happened, so restoring to an earlier
//! level simply re-inserts the trailed bits.

use std::fmt;
use std::hash::{Hash, Hasher};

/// Index of a decision variable inside a [`DomainStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

impl VarId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

/// Raised when a domain becomes empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Wipeout;

pub type PropResult = Result<(), Wipeout>;

#[derive(Debug, Clone)]
struct VarDomain {
    universe: Vec<i64>,
    bits: Vec<u64>,
    size: usize,
}

impl VarDomain {
    fn new(mut values: Vec<i64>) -> Self {
        values.sort_unstable();
        values.dedup();
        let words = values.len().div_ceil(64).max(1);
        let mut bits = vec![0u64; words];
        for i in 0..values.len() {
            bits[i / 64] |= 1 << (i % 64);
        }
        VarDomain {
            size: values.len(),
            universe: values,
            bits,
        }
    }

    #[inline]
    fn has_index(&self, idx: usize) -> bool {
        self.bits[idx / 64] >> (idx % 64) & 1 == 1
    }

    fn first_index(&self) -> Option<usize> {
        for (w, &word) in self.bits.iter().enumerate() {
            if word != 0 {
                return Some(w * 64 + word.trailing_zeros() as usize);
            }
        }
        None
    }

    fn last_index(&self) -> Option<usize> {
        for (w, &word) in self.bits.iter().enumerate().rev() {
            if word != 0 {
                return Some(w * 64 + 63 - word.leading_zeros() as usize);
            }
        }
        None
    }
}

/// Per-variable reversible value sets plus the removal trail.
#[derive(Debug, Clone, Default)]
pub struct DomainStore {
    vars: Vec<VarDomain>,
    trail: Vec<(u32, u32)>,
    level_marks: Vec<usize>,
    modified: Vec<VarId>,
    modified_flag: Vec<bool>,
}

impl DomainStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a variable whose domain is the given values (duplicates dropped).
    pub fn add_var(&mut self, values: impl IntoIterator<Item = i64>) -> VarId {
        let id = VarId(self.vars.len());
        self.vars.push(VarDomain::new(values.into_iter().collect()));
        self.modified_flag.push(false);
        id
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        (0..self.vars.len()).map(VarId)
    }

    #[inline]
    pub fn size(&self, v: VarId) -> usize {
        self.vars[v.0].size
    }

    #[inline]
    pub fn is_bound(&self, v: VarId) -> bool {
        self.vars[v.0].size == 1
    }

    #[inline]
    pub fn is_empty(&self, v: VarId) -> bool {
        self.vars[v.0].size == 0
    }

    /// Value of a bound variable.
    pub fn value(&self, v: VarId) -> Option<i64> {
        if self.is_bound(v) {
            self.min(v)
        } else {
            None
        }
    }

    pub fn min(&self, v: VarId) -> Option<i64> {
        let d = &self.vars[v.0];
        d.first_index().map(|i| d.universe[i])
    }

    pub fn max(&self, v: VarId) -> Option<i64> {
        let d = &self.vars[v.0];
        d.last_index().map(|i| d.universe[i])
    }

    /// The initial value list of `v`.
    pub fn universe(&self, v: VarId) -> &[i64] {
        &self.vars[v.0].universe
    }

    /// Position of `value` in the universe of `v`.
    pub fn universe_index(&self, v: VarId, value: i64) -> Option<usize> {
        self.vars[v.0].universe.binary_search(&value).ok()
    }

    pub fn contains(&self, v: VarId, value: i64) -> bool {
        let d = &self.vars[v.0];
        match d.universe.binary_search(&value) {
            Ok(i) => d.has_index(i),
            Err(_) => false,
        }
    }

    /// Current values of `v` in ascending order.
    pub fn iter(&self, v: VarId) -> impl Iterator<Item = i64> + '_ {
        let d = &self.vars[v.0];
        d.universe
            .iter()
            .enumerate()
            .filter(move |(i, _)| d.has_index(*i))
            .map(|(_, &x)| x)
    }

    pub fn values(&self, v: VarId) -> Vec<i64> {
        self.iter(v).collect()
    }

    /// Current decision level (0 at the root).
    pub fn level(&self) -> usize {
        self.level_marks.len()
    }

    /// Opens a new decision level.
    pub fn push_level(&mut self) {
        self.level_marks.push(self.trail.len());
    }

    /// Restores every domain to its content when `level` was current.
    ///
    /// Panics if `level` is above the current level.
    pub fn backtrack_to(&mut self, level: usize) {
        assert!(level <= self.level(), "cannot backtrack forward");
        if level == self.level() {
            return;
        }
        let mark = self.level_marks[level];
        self.level_marks.truncate(level);
        while self.trail.len() > mark {
            let (v, idx) = self.trail.pop().unwrap();
            let d = &mut self.vars[v as usize];
            d.bits[idx as usize / 64] |= 1 << (idx % 64);
            d.size += 1;
        }
        self.clear_modified();
    }

    fn note_modified(&mut self, v: VarId) {
        if !self.modified_flag[v.0] {
            self.modified_flag[v.0] = true;
            self.modified.push(v);
        }
    }

    /// Variables modified since the last call, in first-modification order.
    pub fn take_modified(&mut self) -> Vec<VarId> {
        for v in &self.modified {
            self.modified_flag[v.0] = false;
        }
        std::mem::take(&mut self.modified)
    }

    pub fn clear_modified(&mut self) {
        self.take_modified();
    }

    fn remove_index(&mut self, v: VarId, idx: usize) {
        let d = &mut self.vars[v.0];
        d.bits[idx / 64] &= !(1 << (idx % 64));
        d.size -= 1;
        self.trail.push((v.0 as u32, idx as u32));
        self.note_modified(v);
    }

    /// Removes `value` from `v`. Returns whether something changed.
    pub fn remove(&mut self, v: VarId, value: i64) -> Result<bool, Wipeout> {
        let idx = match self.vars[v.0].universe.binary_search(&value) {
            Ok(i) if self.vars[v.0].has_index(i) => i,
            _ => return Ok(false),
        };
        self.remove_index(v, idx);
        if self.vars[v.0].size == 0 {
            Err(Wipeout)
        } else {
            Ok(true)
        }
    }

    /// Keeps only the values for which `keep` holds.
    pub fn retain(&mut self, v: VarId, mut keep: impl FnMut(i64) -> bool) -> Result<bool, Wipeout> {
        let mut changed = false;
        for idx in 0..self.vars[v.0].universe.len() {
            if self.vars[v.0].has_index(idx) && !keep(self.vars[v.0].universe[idx]) {
                self.remove_index(v, idx);
                changed = true;
            }
        }
        if self.vars[v.0].size == 0 {
            Err(Wipeout)
        } else {
            Ok(changed)
        }
    }

    pub fn assign(&mut self, v: VarId, value: i64) -> Result<bool, Wipeout> {
        if !self.contains(v, value) {
            // empty the domain so the failure is visible on the trail too
            self.retain(v, |_| false)?;
            return Err(Wipeout);
        }
        self.retain(v, |x| x == value)
    }

    pub fn remove_below(&mut self, v: VarId, bound: i64) -> Result<bool, Wipeout> {
        self.retain(v, |x| x >= bound)
    }

    pub fn remove_above(&mut self, v: VarId, bound: i64) -> Result<bool, Wipeout> {
        self.retain(v, |x| x <= bound)
    }

    /// Log of the product of all domain sizes (the search-space size).
    pub fn log_space_size(&self) -> f64 {
        self.vars.iter().map(|d| (d.size as f64).ln()).sum()
    }

    pub fn all_bound(&self) -> bool {
        self.vars.iter().all(|d| d.size == 1)
    }

    /// Hash of the current domain contents.
    pub fn content_hash(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        for d in &self.vars {
            d.bits.hash(&mut h);
            d.size.hash(&mut h);
        }
        h.finish()
    }

    /// Snapshot of every domain as value lists.
    pub fn snapshot(&self) -> Vec<Vec<i64>> {
        self.vars().map(|v| self.values(v)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_max_size_follow_removals() {
        let mut s = DomainStore::new();
        let x = s.add_var([5, 1, 3, 3]);
        assert_eq!(s.values(x), vec![1, 3, 5]);
        assert_eq!((s.min(x), s.max(x), s.size(x)), (Some(1), Some(5), 3));
        s.remove(x, 1).unwrap();
        assert_eq!((s.min(x), s.max(x), s.size(x)), (Some(3), Some(5), 2));
        assert!(!s.remove(x, 4).unwrap());
        assert_eq!(s.remove(x, 5), Ok(true));
        assert!(s.is_bound(x));
        assert_eq!(s.value(x), Some(3));
        assert_eq!(s.remove(x, 3), Err(Wipeout));
        assert!(s.is_empty(x));
    }

    #[test]
    fn backtrack_restores_exact_contents() {
        let mut s = DomainStore::new();
        let x = s.add_var(0..100);
        let y = s.add_var([1, 3]);
        let h0 = s.content_hash();
        s.push_level();
        s.assign(y, 3).unwrap();
        s.remove_above(x, 70).unwrap();
        let h1 = s.content_hash();
        s.push_level();
        s.remove_below(x, 65).unwrap();
        assert_eq!(s.values(x), (65..=70).collect::<Vec<_>>());
        s.backtrack_to(1);
        assert_eq!(s.content_hash(), h1);
        s.backtrack_to(0);
        assert_eq!(s.content_hash(), h0);
        assert_eq!(s.values(y), vec![1, 3]);
    }

    #[test]
    #[should_panic]
    fn backtrack_forward_rejected() {
        let mut s = DomainStore::new();
        s.add_var([1]);
        s.backtrack_to(1);
    }

    #[test]
    fn modified_log_is_deduplicated() {
        let mut s = DomainStore::new();
        let x = s.add_var(0..4);
        let y = s.add_var(0..4);
        s.remove(y, 0).unwrap();
        s.remove(x, 0).unwrap();
        s.remove(y, 1).unwrap();
        assert_eq!(s.take_modified(), vec![y, x]);
        assert!(s.take_modified().is_empty());
    }
}
