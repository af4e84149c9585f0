//! Operation logs, the permissions they induce, and log summaries.

use std::collections::{BTreeMap, BTreeSet};

use crate::abac::{TupleSet, Universe, UpTuple};
use crate::error::{Error, Result};

/// Tolerance for the total mass of a summary.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// One log line. The timestamp is carried through but never interpreted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LogEntry {
    pub user: String,
    pub resource: String,
    pub op: String,
    pub timestamp: String,
}

impl LogEntry {
    pub fn new(
        user: impl Into<String>,
        resource: impl Into<String>,
        op: impl Into<String>,
        timestamp: impl Into<String>,
    ) -> Self {
        LogEntry {
            user: user.into(),
            resource: resource.into(),
            op: op.into(),
            timestamp: timestamp.into(),
        }
    }

    pub fn tuple(&self) -> UpTuple {
        UpTuple::new(&self.user, &self.resource, &self.op)
    }
}

/// Distinct `(user, resource, op)` projections of a log.
pub fn up_from_log(log: &[LogEntry]) -> BTreeSet<UpTuple> {
    log.iter().map(LogEntry::tuple).collect()
}

/// Relative frequencies of user-permission tuples.
#[derive(Debug, Clone, PartialEq)]
pub struct LogSummary {
    entries: BTreeMap<UpTuple, f64>,
}

impl LogSummary {
    /// Checks that all frequencies are positive and sum to 1.
    pub fn new(entries: BTreeMap<UpTuple, f64>) -> Result<Self> {
        for (t, f) in &entries {
            if !f.is_finite() || *f <= 0.0 || *f > 1.0 + MASS_TOLERANCE {
                return Err(Error::Data(format!("frequency {f} of {t} is not in (0, 1]")));
            }
        }
        let total: f64 = entries.values().sum();
        if entries.is_empty() || (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::Data(format!("frequencies sum to {total}, expected 1")));
        }
        Ok(LogSummary { entries })
    }

    /// Rescales positive weights to unit mass. Zero weights are dropped.
    pub fn from_weights(weights: impl IntoIterator<Item = (UpTuple, f64)>) -> Result<Self> {
        let mut entries: BTreeMap<UpTuple, f64> = BTreeMap::new();
        for (t, w) in weights {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::Data(format!("weight {w} of {t} is negative")));
            }
            if w > 0.0 {
                *entries.entry(t).or_default() += w;
            }
        }
        let total: f64 = entries.values().sum();
        if total <= 0.0 {
            return Err(Error::EmptyLog);
        }
        for f in entries.values_mut() {
            *f /= total;
        }
        LogSummary::new(entries)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, t: &UpTuple) -> f64 {
        self.entries.get(t).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&UpTuple, f64)> {
        self.entries.iter().map(|(t, f)| (t, *f))
    }

    pub fn tuples(&self) -> BTreeSet<UpTuple> {
        self.entries.keys().cloned().collect()
    }

    pub fn total(&self) -> f64 {
        self.entries.values().sum()
    }

    /// `|S|_L` over named tuples.
    pub fn weighted_size<'a>(&self, s: impl IntoIterator<Item = &'a UpTuple>) -> f64 {
        s.into_iter().map(|t| self.get(t)).sum()
    }

    /// Dense view over a universe. Fails if a logged tuple is outside it.
    pub fn frequencies(&self, universe: &Universe) -> Result<Frequencies> {
        let mut freq = vec![0.0; universe.len()];
        for (t, f) in &self.entries {
            freq[universe.index_of(t)?] = *f;
        }
        Ok(Frequencies { freq })
    }

    /// Fraction of `meaning` present in the summary.
    pub fn completeness(&self, universe: &Universe, meaning: &TupleSet) -> Result<f64> {
        if meaning.is_empty() {
            return Err(Error::Data("completeness of an empty meaning".into()));
        }
        let up = universe.set_of(self.entries.keys())?;
        Ok(up.intersection_count(meaning) as f64 / meaning.len() as f64)
    }
}

/// `freq(t, L) = |{e ∈ L | e projects to t}| / |L|`.
pub fn summarize(log: &[LogEntry]) -> Result<LogSummary> {
    if log.is_empty() {
        return Err(Error::EmptyLog);
    }
    let mut counts: BTreeMap<UpTuple, usize> = BTreeMap::new();
    for e in log {
        *counts.entry(e.tuple()).or_default() += 1;
    }
    let n = log.len() as f64;
    LogSummary::new(counts.into_iter().map(|(t, c)| (t, c as f64 / n)).collect())
}

/// Frequencies indexed by tuple position in a [`Universe`].
#[derive(Debug, Clone, PartialEq)]
pub struct Frequencies {
    freq: Vec<f64>,
}

impl Frequencies {
    pub fn get(&self, i: usize) -> f64 {
        self.freq[i]
    }

    /// `|S|_L`.
    pub fn weighted_size(&self, s: &TupleSet) -> f64 {
        s.iter().map(|i| self.freq[i]).sum()
    }

    /// Tuples with positive frequency.
    pub fn support(&self, universe: &Universe) -> TupleSet {
        let mut s = universe.empty_set();
        for (i, f) in self.freq.iter().enumerate() {
            if *f > 0.0 {
                s.insert(i);
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(u: &str, t: &str) -> LogEntry {
        LogEntry::new(u, "r", "o", t)
    }

    #[test]
    fn summarize_counts_relative_frequencies() {
        let log = vec![e("a", "1"), e("a", "2"), e("a", "3"), e("b", "4")];
        let s = summarize(&log).unwrap();
        assert_eq!(s.get(&UpTuple::new("a", "r", "o")), 0.75);
        assert_eq!(s.get(&UpTuple::new("b", "r", "o")), 0.25);
        assert_eq!(s.tuples(), up_from_log(&log));
    }

    #[test]
    fn single_entry_and_empty_logs() {
        let s = summarize(&[e("a", "1")]).unwrap();
        assert_eq!(s.get(&UpTuple::new("a", "r", "o")), 1.0);
        assert_eq!(summarize(&[]), Err(Error::EmptyLog));
        assert!(up_from_log(&[]).is_empty());
    }

    #[test]
    fn repeated_tuple_is_one_permission() {
        let log: Vec<_> = (0..5).map(|i| e("a", &i.to_string())).collect();
        assert_eq!(up_from_log(&log).len(), 1);
    }

    #[test]
    fn new_rejects_bad_mass() {
        let t = UpTuple::new("a", "r", "o");
        assert!(LogSummary::new([(t.clone(), 0.5)].into()).is_err());
        assert!(LogSummary::new([(t.clone(), 0.0)].into()).is_err());
        assert!(LogSummary::new(BTreeMap::new()).is_err());
        assert!(LogSummary::new([(t, 1.0)].into()).is_ok());
    }

    #[test]
    fn weighted_size_of_named_sets() {
        let log = vec![e("a", "1"), e("a", "2"), e("a", "3"), e("b", "4")];
        let s = summarize(&log).unwrap();
        let all = s.tuples();
        assert_eq!(s.weighted_size(&all), 1.0);
        assert_eq!(s.weighted_size(&BTreeSet::new()), 0.0);
        assert_eq!(s.weighted_size(&[UpTuple::new("b", "r", "o")]), 0.25);
        assert_eq!(s.weighted_size(&[UpTuple::new("zz", "r", "o")]), 0.0);
    }
}
