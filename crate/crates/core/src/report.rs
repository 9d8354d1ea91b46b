//! Named check records and their order-independent aggregation.

use serde::Serialize;

/// Which side of the threshold a value has to fall on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "threshold", rename_all = "snake_case")]
pub enum Bound {
    /// Passes when `value < threshold`. Aggregates by maximum.
    Below(f64),
    /// Passes when `value > threshold`. Aggregates by minimum.
    Above(f64),
}

impl Bound {
    pub fn threshold(&self) -> f64 {
        match *self {
            Bound::Below(t) | Bound::Above(t) => t,
        }
    }

    pub fn accepts(&self, value: f64) -> bool {
        match *self {
            Bound::Below(t) => value < t,
            Bound::Above(t) => value > t,
        }
    }

    fn combine(&self, a: f64, b: f64) -> f64 {
        // NaN poisons both reductions so that it can never hide a failure.
        if a.is_nan() || b.is_nan() {
            return f64::NAN;
        }
        match self {
            Bound::Below(_) => a.max(b),
            Bound::Above(_) => a.min(b),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Inconclusive,
    Fail,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub name: String,
    /// Short label of the identity being checked.
    pub anchor: String,
    pub value: f64,
    pub bound: Bound,
    pub status: Status,
    pub points: usize,
}

impl CheckRecord {
    pub fn new(name: impl Into<String>, anchor: impl Into<String>, value: f64, bound: Bound) -> Self {
        let status = if bound.accepts(value) { Status::Pass } else { Status::Fail };
        CheckRecord {
            name: name.into(),
            anchor: anchor.into(),
            value,
            bound,
            status,
            points: 1,
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    fn absorb(&mut self, other: &CheckRecord) {
        self.value = self.bound.combine(self.value, other.value);
        self.status = self.status.max(other.status);
        if !self.bound.accepts(self.value) && self.status == Status::Pass {
            self.status = Status::Fail;
        }
        self.points += other.points;
    }
}

/// An ordered collection of checks. Merging two reports folds records with
/// equal names using max/min and counts, so the aggregated values do not
/// depend on the order in which points were processed.
#[derive(Debug, Clone, Default, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckRecord>,
}

impl VerificationReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: CheckRecord) {
        match self.checks.iter_mut().find(|c| c.name == record.name) {
            Some(existing) => existing.absorb(&record),
            None => self.checks.push(record),
        }
    }

    pub fn check(&mut self, name: &str, anchor: &str, value: f64, bound: Bound) {
        self.push(CheckRecord::new(name, anchor, value, bound));
    }

    /// Records `value < tol`.
    pub fn below(&mut self, name: &str, anchor: &str, value: f64, tol: f64) {
        self.check(name, anchor, value, Bound::Below(tol));
    }

    pub fn inconclusive(&mut self, name: &str, anchor: &str, value: f64, bound: Bound) {
        let mut rec = CheckRecord::new(name, anchor, value, bound);
        rec.status = Status::Inconclusive;
        self.push(rec);
    }

    pub fn merge(&mut self, other: &VerificationReport) {
        for rec in &other.checks {
            self.push(rec.clone());
        }
    }

    pub fn get(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| c.status == Status::Fail)
    }

    pub fn count(&self, status: Status) -> usize {
        self.checks.iter().filter(|c| c.status == status).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_keeps_worst_value() {
        let mut a = VerificationReport::new();
        a.below("x", "", 1e-13, 1e-12);
        let mut b = VerificationReport::new();
        b.below("x", "", 5e-12, 1e-12);
        a.merge(&b);
        let rec = a.get("x").unwrap();
        assert_eq!(rec.value, 5e-12);
        assert_eq!(rec.status, Status::Fail);
        assert_eq!(rec.points, 2);
    }

    #[test]
    fn merge_is_order_independent() {
        let values = [3.0, 1.0, 2.0, 7.0];
        let mut fwd = VerificationReport::new();
        let mut rev = VerificationReport::new();
        for v in values {
            fwd.check("m", "", v, Bound::Above(0.5));
        }
        for v in values.iter().rev() {
            rev.check("m", "", *v, Bound::Above(0.5));
        }
        assert_eq!(fwd.get("m").unwrap().value, rev.get("m").unwrap().value);
        assert_eq!(fwd.get("m").unwrap().value, 1.0);
    }

    #[test]
    fn strict_threshold() {
        assert!(!Bound::Below(0.0).accepts(0.0));
        assert!(Bound::Below(1e-12).accepts(0.0));
    }

    #[test]
    fn nan_never_passes() {
        let mut r = VerificationReport::new();
        r.below("n", "", 0.0, 1.0);
        r.below("n", "", f64::NAN, 1.0);
        assert_eq!(r.get("n").unwrap().status, Status::Fail);
    }
}
