//! IoU and greedy non-maximum suppression.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::DetectionFilter;
use crate::model::{BBox, Detection, OrderedClassStats};

/// Intersection over union of two valid boxes; 0 when disjoint.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let w = a.x2.min(b.x2) - a.x1.max(b.x1);
    let h = a.y2.min(b.y2) - a.y1.max(b.y1);
    if w <= 0.0 || h <= 0.0 {
        return 0.0;
    }
    let inter = w * h;
    inter / (a.area() + b.area() - inter)
}

/// Score used to rank detections during suppression.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankBy {
    /// `p1 * objectness`
    #[default]
    LegacyScore,
    Objectness,
}

impl RankBy {
    pub fn score(self, d: &Detection) -> f64 {
        match self {
            RankBy::LegacyScore => d.stats().p1 * d.objectness,
            RankBy::Objectness => d.objectness,
        }
    }
}

impl std::str::FromStr for RankBy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "legacy-score" | "legacy" => Ok(RankBy::LegacyScore),
            "objectness" => Ok(RankBy::Objectness),
            other => Err(Error::Config(format!(
                "unknown NMS ranking {other:?} (expected legacy-score or objectness)"
            ))),
        }
    }
}

pub const DEFAULT_NMS_ETA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NmsConfig {
    /// Boxes with IoU strictly above `eta` against a kept box are suppressed.
    pub eta: f64,
    /// Suppress only within the same top class.
    pub class_wise: bool,
    pub rank_by: RankBy,
}

impl Default for NmsConfig {
    fn default() -> Self {
        NmsConfig {
            eta: DEFAULT_NMS_ETA,
            class_wise: true,
            rank_by: RankBy::LegacyScore,
        }
    }
}

impl NmsConfig {
    pub fn with_eta(eta: f64) -> Result<Self> {
        let cfg = NmsConfig {
            eta,
            ..NmsConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::Config(format!(
                "NMS IoU threshold must lie in (0, 1], got {}",
                self.eta
            )));
        }
        Ok(())
    }
}

/// Minimal view of a detection for suppression and matching.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub bbox: BBox,
    pub class: usize,
    pub score: f64,
}

impl Candidate {
    pub fn from_detection(d: &Detection, rank_by: RankBy) -> Self {
        Self::from_stats(d, &d.stats(), rank_by)
    }

    pub fn from_stats(d: &Detection, stats: &OrderedClassStats, rank_by: RankBy) -> Self {
        let score = match rank_by {
            RankBy::LegacyScore => stats.p1 * d.objectness,
            RankBy::Objectness => d.objectness,
        };
        Candidate {
            bbox: d.bbox,
            class: stats.top_class,
            score,
        }
    }
}

/// Indices sorted by descending score, ties by ascending index.
pub fn score_order(scores: impl Fn(usize) -> f64, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| match scores(b).total_cmp(&scores(a)) {
        Ordering::Equal => a.cmp(&b),
        o => o,
    });
    order
}

/// Greedy NMS over candidates; returns kept indices in descending score order.
pub fn nms_indices(cands: &[Candidate], eta: f64, class_wise: bool) -> Vec<usize> {
    let order = score_order(|i| cands[i].score, cands.len());
    let mut keep = vec![false; cands.len()];

    // Buckets inherit the global order, so each bucket is already sorted.
    let mut buckets: Vec<Vec<usize>> = Vec::new();
    if class_wise {
        let n_classes = cands.iter().map(|c| c.class + 1).max().unwrap_or(0);
        buckets.resize_with(n_classes, Vec::new);
        for &i in &order {
            buckets[cands[i].class].push(i);
        }
    } else {
        buckets.push(order.clone());
    }

    let mut suppressed = vec![false; cands.len()];
    for bucket in &buckets {
        for (pos, &i) in bucket.iter().enumerate() {
            if suppressed[i] {
                continue;
            }
            keep[i] = true;
            let kept_box = cands[i].bbox;
            for &j in &bucket[pos + 1..] {
                if !suppressed[j] && iou(&kept_box, &cands[j].bbox) > eta {
                    suppressed[j] = true;
                }
            }
        }
    }
    order.into_iter().filter(|&i| keep[i]).collect()
}

/// Greedy NMS over one image's detections.
///
/// Output is ordered by descending ranking score with ties by input index.
pub fn greedy_nms(dets: &[Detection], cfg: &NmsConfig) -> Vec<Detection> {
    let cands: Vec<Candidate> = dets
        .iter()
        .map(|d| Candidate::from_detection(d, cfg.rank_by))
        .collect();
    nms_indices(&cands, cfg.eta, cfg.class_wise)
        .into_iter()
        .map(|i| dets[i].clone())
        .collect()
}

/// Filters then suppresses in one pass over indices, cloning only the
/// detections that survive both stages. Same result as `greedy_nms` applied
/// to `filter.apply(dets)`.
pub fn filter_then_nms(
    dets: &[Detection],
    filter: &dyn DetectionFilter,
    cfg: &NmsConfig,
) -> Vec<Detection> {
    let mut passing = Vec::new();
    let mut cands = Vec::new();
    for (i, d) in dets.iter().enumerate() {
        let stats = d.stats();
        if filter.keep_with_stats(d, &stats) {
            passing.push(i);
            cands.push(Candidate::from_stats(d, &stats, cfg.rank_by));
        }
    }
    nms_indices(&cands, cfg.eta, cfg.class_wise)
        .into_iter()
        .map(|k| dets[passing[k]].clone())
        .collect()
}
