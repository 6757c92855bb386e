//! Score-based and dual likelihood-ratio detection filters.
//!
//! The legacy filter keeps a detection when `p1 * objectness > gamma`. The
//! likelihood-ratio filter keeps it when both
//!
//! * `p1 / p2 >= gamma1` (top class against runner-up), and
//! * `objectness / p1 >= gamma2` (detection against classification)
//!
//! hold. Because `p2` is the largest non-top probability, passing the first
//! test bounds `p1 / p_k` for every other class `k`; likewise `p1` bounds every
//! class probability, so the second test bounds `objectness / p_k` for all `k`.
//! Thresholds apply to the raw ratios; a threshold on the log-ratio is the same
//! rule with `gamma = exp(log_gamma)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Detection, OrderedClassStats};
use crate::registry::Registry;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterThresholds {
    pub gamma1: f64,
    pub gamma2: f64,
}

impl FilterThresholds {
    pub fn new(gamma1: f64, gamma2: f64) -> Result<Self> {
        for (name, v) in [("gamma1", gamma1), ("gamma2", gamma2)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Config(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(FilterThresholds { gamma1, gamma2 })
    }

    /// `(1, 0)`: every valid detection passes.
    pub const KEEP_ALL: FilterThresholds = FilterThresholds {
        gamma1: 1.0,
        gamma2: 0.0,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegacyThreshold {
    pub gamma: f64,
}

impl LegacyThreshold {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::Config(format!(
                "legacy gamma must lie in [0, 1], got {gamma}"
            )));
        }
        Ok(LegacyThreshold { gamma })
    }
}

pub fn legacy_score(d: &Detection) -> f64 {
    d.stats().p1 * d.objectness
}

/// Keeps detections scoring strictly above `t.gamma`, in input order.
pub fn legacy_filter(dets: &[Detection], t: LegacyThreshold) -> Vec<Detection> {
    dets.iter()
        .filter(|d| legacy_score(d) > t.gamma)
        .cloned()
        .collect()
}

/// `p1 / p2`, or `+inf` when `p2 == 0`.
pub fn class_ratio(stats: &OrderedClassStats) -> f64 {
    if stats.p2 == 0.0 {
        f64::INFINITY
    } else {
        stats.p1 / stats.p2
    }
}

/// `objectness / p1`; `None` when `p1 == 0`.
pub fn det_ratio(stats: &OrderedClassStats, objectness: f64) -> Option<f64> {
    (stats.p1 > 0.0).then(|| objectness / stats.p1)
}

pub fn llr_class_ratio(d: &Detection) -> f64 {
    class_ratio(&d.stats())
}

pub fn llr_det_ratio(d: &Detection) -> Result<f64> {
    det_ratio(&d.stats(), d.objectness).ok_or_else(|| {
        Error::InvalidInput(format!(
            "detection in image {:?} has zero top-class probability",
            d.image_id
        ))
    })
}

/// Both ratio tests, non-strict. A detection with `p1 == 0` never passes.
pub fn passes_rmopp(stats: &OrderedClassStats, objectness: f64, t: FilterThresholds) -> bool {
    match det_ratio(stats, objectness) {
        Some(det) => class_ratio(stats) >= t.gamma1 && det >= t.gamma2,
        None => false,
    }
}

/// Keeps detections passing both ratio tests, in input order.
pub fn rmopp_filter(dets: &[Detection], t: FilterThresholds) -> Vec<Detection> {
    dets.iter()
        .filter(|d| passes_rmopp(&d.stats(), d.objectness, t))
        .cloned()
        .collect()
}

/// A keep/drop rule applied to each detection independently.
pub trait DetectionFilter: Send + Sync {
    fn name(&self) -> &'static str;

    fn keep(&self, d: &Detection) -> bool;

    /// Same verdict as `keep`, reusing statistics already computed for `d`.
    fn keep_with_stats(&self, d: &Detection, stats: &OrderedClassStats) -> bool {
        let _ = stats;
        self.keep(d)
    }

    fn apply(&self, dets: &[Detection]) -> Vec<Detection> {
        dets.iter().filter(|d| self.keep(d)).cloned().collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RmoppFilter(pub FilterThresholds);

impl DetectionFilter for RmoppFilter {
    fn name(&self) -> &'static str {
        "rmopp"
    }

    fn keep(&self, d: &Detection) -> bool {
        passes_rmopp(&d.stats(), d.objectness, self.0)
    }

    fn keep_with_stats(&self, d: &Detection, stats: &OrderedClassStats) -> bool {
        passes_rmopp(stats, d.objectness, self.0)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LegacyScoreFilter(pub LegacyThreshold);

impl DetectionFilter for LegacyScoreFilter {
    fn name(&self) -> &'static str {
        "legacy"
    }

    fn keep(&self, d: &Detection) -> bool {
        legacy_score(d) > self.0.gamma
    }

    fn keep_with_stats(&self, d: &Detection, stats: &OrderedClassStats) -> bool {
        stats.p1 * d.objectness > self.0.gamma
    }
}

/// Parameters shared by every registered filter; each uses the fields it needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterParams {
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma: f64,
}

impl Default for FilterParams {
    fn default() -> Self {
        FilterParams {
            gamma1: FilterThresholds::KEEP_ALL.gamma1,
            gamma2: FilterThresholds::KEEP_ALL.gamma2,
            gamma: 0.0,
        }
    }
}

pub type FilterRegistry = Registry<dyn DetectionFilter, FilterParams>;

pub fn filter_registry() -> FilterRegistry {
    let mut reg = FilterRegistry::new("filter");
    reg.register(
        "rmopp",
        "keep when p1/p2 >= gamma1 and objectness/p1 >= gamma2",
        |p| {
            Ok(Box::new(RmoppFilter(FilterThresholds::new(
                p.gamma1, p.gamma2,
            )?)))
        },
    );
    reg.register("legacy", "keep when p1 * objectness > gamma", |p| {
        Ok(Box::new(LegacyScoreFilter(LegacyThreshold::new(p.gamma)?)))
    });
    reg
}
