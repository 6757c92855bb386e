//! Exhaustive `(gamma1, gamma2)` grid sweep, Pareto frontier extraction and
//! constrained selection of an operating point.
//!
//! For every grid point the sweep filters each image with the dual-ratio rule,
//! applies greedy NMS, matches against ground truth and aggregates
//! precision/recall/F1 over the dataset. Cells are independent; they are
//! evaluated on a rayon pool and assembled in `(gamma2, gamma1)` ascending
//! order regardless of worker count.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{class_ratio, det_ratio, FilterThresholds};
use crate::geometry::{nms_indices, Candidate, NmsConfig, RankBy};
use crate::metrics::{counts_from_matches, match_image, prf, MatchCounts, PrfScores};
use crate::model::{BBox, Dataset};

/// Inclusive range `lo, lo + step, ...` up to `hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl GridAxis {
    pub const fn new(lo: f64, hi: f64, step: f64) -> Self {
        GridAxis { lo, hi, step }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.step.is_finite()) {
            return Err(Error::Config(format!("{name} range must be finite")));
        }
        if self.step <= 0.0 {
            return Err(Error::Config(format!(
                "{name} step must be positive, got {}",
                self.step
            )));
        }
        if self.lo > self.hi {
            return Err(Error::Config(format!(
                "{name} range is empty ({} > {})",
                self.lo, self.hi
            )));
        }
        if self.lo < 0.0 {
            return Err(Error::Config(format!(
                "{name} lower bound must be non-negative, got {}",
                self.lo
            )));
        }
        Ok(())
    }

    /// Number of points; `1e-9` absorbs representation error in `(hi - lo) / step`.
    pub fn len(&self) -> usize {
        ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    /// Points computed as `lo + k * step`, never by accumulation.
    pub fn values(&self) -> Vec<f64> {
        (0..self.len())
            .map(|k| self.lo + k as f64 * self.step)
            .collect()
    }
}

impl std::str::FromStr for GridAxis {
    type Err = Error;

    /// Parses `lo:hi:step`, or a single value for a one-point axis.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |p: &str| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad number {p:?} in range {s:?}")))
        };
        match parts.as_slice() {
            [v] => {
                let v = num(v)?;
                Ok(GridAxis::new(v, v, 1.0))
            }
            [lo, hi, step] => Ok(GridAxis::new(num(lo)?, num(hi)?, num(step)?)),
            _ => Err(Error::Config(format!(
                "range {s:?} must look like lo:hi:step"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub gamma1: GridAxis,
    pub gamma2: GridAxis,
    pub nms: NmsConfig,
    /// IoU a detection must strictly exceed to count as a true positive.
    pub match_iou: f64,
}

pub const DEFAULT_GAMMA1: GridAxis = GridAxis::new(1.0, 10.0, 0.5);
pub const DEFAULT_GAMMA2: GridAxis = GridAxis::new(0.1, 1.0, 0.05);
pub const DEFAULT_MATCH_IOU: f64 = 0.5;

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            gamma1: DEFAULT_GAMMA1,
            gamma2: DEFAULT_GAMMA2,
            nms: NmsConfig::default(),
            match_iou: DEFAULT_MATCH_IOU,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.gamma1.validate("gamma1")?;
        self.gamma2.validate("gamma2")?;
        self.nms.validate()?;
        if !(self.match_iou > 0.0 && self.match_iou < 1.0) {
            return Err(Error::Config(format!(
                "matching IoU must lie in (0, 1), got {}",
                self.match_iou
            )));
        }
        Ok(())
    }

    pub fn num_cells(&self) -> usize {
        self.gamma1.len() * self.gamma2.len()
    }

    /// Grid points in `(gamma2, gamma1)` ascending order.
    pub fn grid(&self) -> Vec<FilterThresholds> {
        let g1 = self.gamma1.values();
        self.gamma2
            .values()
            .into_iter()
            .flat_map(|gamma2| {
                g1.iter()
                    .map(move |&gamma1| FilterThresholds { gamma1, gamma2 })
            })
            .collect()
    }
}

/// Result of one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaCell {
    pub gamma1: f64,
    pub gamma2: f64,
    pub counts: MatchCounts,
    pub scores: PrfScores,
    /// Detections left after filtering and NMS.
    pub kept: usize,
    /// Detections left after filtering, before NMS.
    #[serde(default)]
    pub survivors: usize,
    /// False when no detection survived filtering; metrics are then undefined.
    pub evaluated: bool,
}

#[derive(Debug, Clone, Copy)]
struct Prepared {
    cand: Candidate,
    class_ratio: f64,
    det_ratio: f64,
}

struct PreparedImage {
    dets: Vec<Prepared>,
    gts: Vec<(BBox, usize)>,
}

fn prepare(data: &Dataset, rank_by: RankBy) -> Vec<PreparedImage> {
    data.images
        .values()
        .map(|im| PreparedImage {
            dets: im
                .detections
                .iter()
                .map(|d| {
                    let stats = d.stats();
                    Prepared {
                        cand: Candidate::from_detection(d, rank_by),
                        class_ratio: class_ratio(&stats),
                        // p1 == 0 never passes; validation excludes it anyway
                        det_ratio: det_ratio(&stats, d.objectness).unwrap_or(f64::NEG_INFINITY),
                    }
                })
                .collect(),
            gts: im
                .ground_truth
                .iter()
                .map(|g| (g.bbox, g.class_index))
                .collect(),
        })
        .collect()
}

fn evaluate_cell(images: &[PreparedImage], t: FilterThresholds, cfg: &SweepConfig) -> GammaCell {
    let mut counts = MatchCounts::default();
    let mut kept = 0;
    let mut survivors = 0;
    let mut scratch: Vec<Candidate> = Vec::new();
    for im in images {
        scratch.clear();
        scratch.extend(
            im.dets
                .iter()
                .filter(|p| p.class_ratio >= t.gamma1 && p.det_ratio >= t.gamma2)
                .map(|p| p.cand),
        );
        survivors += scratch.len();
        let after_nms: Vec<Candidate> = nms_indices(&scratch, cfg.nms.eta, cfg.nms.class_wise)
            .into_iter()
            .map(|i| scratch[i])
            .collect();
        kept += after_nms.len();
        let matches = match_image(&after_nms, &im.gts, cfg.match_iou);
        counts += counts_from_matches(&matches, im.gts.len());
    }
    let evaluated = survivors > 0;
    GammaCell {
        gamma1: t.gamma1,
        gamma2: t.gamma2,
        counts,
        scores: if evaluated {
            prf(counts)
        } else {
            PrfScores::default()
        },
        kept,
        survivors,
        evaluated,
    }
}

/// Runs the grid on the current rayon pool.
pub fn run_sweep(data: &Dataset, cfg: &SweepConfig) -> Result<Vec<GammaCell>> {
    cfg.validate()?;
    let images = prepare(data, cfg.nms.rank_by);
    Ok(cfg
        .grid()
        .into_par_iter()
        .map(|t| evaluate_cell(&images, t, cfg))
        .collect())
}

/// Runs the grid on a dedicated pool of `workers` threads.
pub fn run_sweep_with_workers(
    data: &Dataset,
    cfg: &SweepConfig,
    workers: usize,
) -> Result<Vec<GammaCell>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
    pool.install(|| run_sweep(data, cfg))
}

/// `a` dominates `b`: no worse on precision and recall, better on one.
pub fn dominates(a: &GammaCell, b: &GammaCell) -> bool {
    let (pa, ra) = (a.scores.precision, a.scores.recall);
    let (pb, rb) = (b.scores.precision, b.scores.recall);
    pa >= pb && ra >= rb && (pa > pb || ra > rb)
}

/// Non-dominated evaluated cells, sorted by recall ascending (ties by
/// precision descending, then input order). Cells with identical
/// `(precision, recall)` are all kept; unevaluated cells are ignored.
pub fn pareto_frontier(cells: &[GammaCell]) -> Vec<GammaCell> {
    let mut idx: Vec<usize> = (0..cells.len()).filter(|&i| cells[i].evaluated).collect();
    // precision descending, recall descending
    idx.sort_by(|&a, &b| {
        let (ca, cb) = (&cells[a].scores, &cells[b].scores);
        cb.precision
            .total_cmp(&ca.precision)
            .then(cb.recall.total_cmp(&ca.recall))
            .then(a.cmp(&b))
    });

    let mut frontier = Vec::new();
    // best recall among cells with strictly greater precision
    let mut best_recall_above = f64::NEG_INFINITY;
    let mut start = 0;
    while start < idx.len() {
        let p = cells[idx[start]].scores.precision;
        let end = start
            + idx[start..]
                .iter()
                .take_while(|&&i| cells[i].scores.precision == p)
                .count();
        let group_max = cells[idx[start]].scores.recall;
        if group_max > best_recall_above {
            frontier.extend(
                idx[start..end]
                    .iter()
                    .take_while(|&&i| cells[i].scores.recall == group_max)
                    .map(|&i| cells[i]),
            );
            best_recall_above = group_max;
        }
        start = end;
    }
    frontier.sort_by(|a, b| {
        a.scores
            .recall
            .total_cmp(&b.scores.recall)
            .then(b.scores.precision.total_cmp(&a.scores.precision))
    });
    frontier
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Precision,
    Recall,
    F1,
}

impl Target {
    pub const ALL: [Target; 3] = [Target::Precision, Target::Recall, Target::F1];

    fn primary(self, s: &PrfScores) -> f64 {
        match self {
            Target::Precision => s.precision,
            Target::Recall => s.recall,
            Target::F1 => s.f1,
        }
    }

    fn tie_break(self, s: &PrfScores) -> f64 {
        match self {
            Target::Precision => s.recall,
            Target::Recall | Target::F1 => s.precision,
        }
    }
}

impl std::fmt::Display for Target {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Target::Precision => "precision",
            Target::Recall => "recall",
            Target::F1 => "f1",
        })
    }
}

impl std::str::FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "precision" => Ok(Target::Precision),
            "recall" => Ok(Target::Recall),
            "f1" => Ok(Target::F1),
            other => Err(Error::Config(format!(
                "unknown objective {other:?} (expected precision, recall or f1)"
            ))),
        }
    }
}

pub const DEFAULT_MIN_F1: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionObjective {
    pub target: Target,
    pub min_f1: f64,
}

impl SelectionObjective {
    pub fn new(target: Target) -> Self {
        SelectionObjective {
            target,
            min_f1: DEFAULT_MIN_F1,
        }
    }
}

/// Best evaluated cell for `obj.target` among cells with `f1 >= obj.min_f1`.
///
/// Ties on the target go to the higher recall (target precision) or higher
/// precision (targets recall and F1), then to the smaller `(gamma1, gamma2)`.
pub fn select_best(cells: &[GammaCell], obj: SelectionObjective) -> Result<GammaCell> {
    let rank = |a: &GammaCell, b: &GammaCell| -> Ordering {
        let t = obj.target;
        t.primary(&a.scores)
            .total_cmp(&t.primary(&b.scores))
            .then(t.tie_break(&a.scores).total_cmp(&t.tie_break(&b.scores)))
            .then(b.gamma1.total_cmp(&a.gamma1))
            .then(b.gamma2.total_cmp(&a.gamma2))
    };
    cells
        .iter()
        .filter(|c| c.evaluated && c.scores.f1 >= obj.min_f1)
        .max_by(|a, b| rank(a, b))
        .copied()
        .ok_or_else(|| Error::Infeasible {
            min_f1: obj.min_f1,
            best_f1: cells
                .iter()
                .filter(|c| c.evaluated)
                .map(|c| c.scores.f1)
                .max_by(f64::total_cmp),
        })
}
