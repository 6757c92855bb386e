//! Detection to ground-truth matching, precision/recall/F1 and COCO-style AP.
//!
//! Matching is greedy in descending legacy-score order within each image: a
//! detection claims the still-unmatched ground truth of its top class with the
//! highest IoU, provided that IoU is strictly above the threshold. Ties in IoU
//! go to the lower ground-truth index, ties in score to the lower detection
//! index.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geometry::{iou, score_order, Candidate, RankBy};
use crate::model::{BBox, Detection, GroundTruthBox};
use crate::registry::Registry;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl std::ops::AddAssign for MatchCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.tp += rhs.tp;
        self.fp += rhs.fp;
        self.fn_ += rhs.fn_;
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PrfScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Matches one image. `cands[i]` is matched to `gts[result[i]]` or unmatched.
pub fn match_image(
    cands: &[Candidate],
    gts: &[(BBox, usize)],
    iou_thresh: f64,
) -> Vec<Option<usize>> {
    let mut taken = vec![false; gts.len()];
    let mut result = vec![None; cands.len()];
    for i in score_order(|i| cands[i].score, cands.len()) {
        let c = &cands[i];
        let mut best: Option<(usize, f64)> = None;
        for (g, (gt_box, gt_class)) in gts.iter().enumerate() {
            if taken[g] || *gt_class != c.class {
                continue;
            }
            let overlap = iou(&c.bbox, gt_box);
            if overlap > iou_thresh && best.is_none_or(|(_, b)| overlap > b) {
                best = Some((g, overlap));
            }
        }
        if let Some((g, _)) = best {
            taken[g] = true;
            result[i] = Some(g);
        }
    }
    result
}

fn candidates(dets: &[Detection]) -> Vec<Candidate> {
    dets.iter()
        .map(|d| Candidate::from_detection(d, RankBy::LegacyScore))
        .collect()
}

fn gt_keys(gts: &[GroundTruthBox]) -> Vec<(BBox, usize)> {
    gts.iter().map(|g| (g.bbox, g.class_index)).collect()
}

pub(crate) fn counts_from_matches(matches: &[Option<usize>], n_gt: usize) -> MatchCounts {
    let tp = matches.iter().filter(|m| m.is_some()).count();
    MatchCounts {
        tp,
        fp: matches.len() - tp,
        fn_: n_gt - tp,
    }
}

/// TP/FP/FN aggregated over images; each item is one image's
/// `(detections, ground truth)`.
pub fn match_detections<'a, I>(images: I, iou_thresh: f64) -> MatchCounts
where
    I: IntoIterator<Item = (&'a [Detection], &'a [GroundTruthBox])>,
{
    let mut total = MatchCounts::default();
    for (dets, gts) in images {
        let m = match_image(&candidates(dets), &gt_keys(gts), iou_thresh);
        total += counts_from_matches(&m, gts.len());
    }
    total
}

/// Precision, recall and F1; a 0/0 ratio is reported as 0.
pub fn prf(c: MatchCounts) -> PrfScores {
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    PrfScores {
        precision,
        recall,
        f1: f1_score(precision, recall),
    }
}

pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Turns a ranked precision/recall curve into a single AP value.
pub trait ApIntegrator: Send + Sync {
    fn name(&self) -> &'static str;

    /// `recall` is non-decreasing; both slices have one entry per ranked
    /// detection. An empty curve has AP 0.
    fn integrate(&self, recall: &[f64], precision: &[f64]) -> f64;
}

/// Running maximum of precision from the right.
fn precision_envelope(precision: &[f64]) -> Vec<f64> {
    let mut env = precision.to_vec();
    for i in (0..env.len().saturating_sub(1)).rev() {
        env[i] = env[i].max(env[i + 1]);
    }
    env
}

/// COCO's 101-point interpolation over recall 0.00, 0.01, ..., 1.00.
#[derive(Debug, Clone, Copy, Default)]
pub struct Interpolated101;

impl ApIntegrator for Interpolated101 {
    fn name(&self) -> &'static str {
        "coco101"
    }

    fn integrate(&self, recall: &[f64], precision: &[f64]) -> f64 {
        let env = precision_envelope(precision);
        let mut sum = 0.0;
        let mut idx = 0;
        for k in 0..=100 {
            let r = k as f64 / 100.0;
            while idx < recall.len() && recall[idx] < r - 1e-12 {
                idx += 1;
            }
            if idx == recall.len() {
                break;
            }
            sum += env[idx];
        }
        sum / 101.0
    }
}

/// Exact area under the interpolated precision staircase.
#[derive(Debug, Clone, Copy, Default)]
pub struct StaircaseArea;

impl ApIntegrator for StaircaseArea {
    fn name(&self) -> &'static str {
        "area"
    }

    fn integrate(&self, recall: &[f64], precision: &[f64]) -> f64 {
        let env = precision_envelope(precision);
        let mut prev = 0.0;
        let mut area = 0.0;
        for (r, p) in recall.iter().zip(&env) {
            area += (r - prev) * p;
            prev = *r;
        }
        area
    }
}

pub type ApRegistry = Registry<dyn ApIntegrator, ()>;

pub fn ap_registry() -> ApRegistry {
    let mut reg = ApRegistry::new("AP integration");
    reg.register("coco101", "101-point interpolated AP (COCO)", |_| {
        Ok(Box::new(Interpolated101))
    });
    reg.register(
        "area",
        "exact area under the interpolated PR staircase",
        |_| Ok(Box::new(StaircaseArea)),
    );
    reg
}

/// Per-class AP with the default 101-point integration.
pub fn ap_per_class(
    images: &[(&[Detection], &[GroundTruthBox])],
    iou_thresh: f64,
) -> BTreeMap<usize, f64> {
    ap_per_class_with(images, iou_thresh, &Interpolated101)
}

/// Per-class AP; classes without ground truth are left out.
///
/// Each class's detections are ranked across all images by legacy score
/// (ties by image order, then input index) and labelled TP/FP by the per-image
/// matching rule.
pub fn ap_per_class_with(
    images: &[(&[Detection], &[GroundTruthBox])],
    iou_thresh: f64,
    integrator: &dyn ApIntegrator,
) -> BTreeMap<usize, f64> {
    let mut n_gt: BTreeMap<usize, usize> = BTreeMap::new();
    // class -> (score, image, det index, is_tp)
    let mut ranked: BTreeMap<usize, Vec<(f64, usize, usize, bool)>> = BTreeMap::new();

    for (img, (dets, gts)) in images.iter().enumerate() {
        for g in gts.iter() {
            *n_gt.entry(g.class_index).or_default() += 1;
        }
        let cands = candidates(dets);
        let matches = match_image(&cands, &gt_keys(gts), iou_thresh);
        for (i, (c, m)) in cands.iter().zip(&matches).enumerate() {
            ranked
                .entry(c.class)
                .or_default()
                .push((c.score, img, i, m.is_some()));
        }
    }

    n_gt.into_iter()
        .map(|(class, total)| {
            let mut entries = ranked.remove(&class).unwrap_or_default();
            entries.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
            let mut recall = Vec::with_capacity(entries.len());
            let mut precision = Vec::with_capacity(entries.len());
            let mut tp = 0usize;
            for (k, e) in entries.iter().enumerate() {
                tp += e.3 as usize;
                recall.push(tp as f64 / total as f64);
                precision.push(tp as f64 / (k + 1) as f64);
            }
            (class, integrator.integrate(&recall, &precision))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IouAp {
    pub iou: f64,
    pub ap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApReport {
    pub method: String,
    pub classes_evaluated: usize,
    pub ap_per_iou: Vec<IouAp>,
    pub ap_50_95: f64,
    pub ap_50: f64,
    pub ap_75: f64,
}

/// IoU thresholds 0.50, 0.55, ..., 0.95.
pub fn coco_iou_thresholds() -> [f64; 10] {
    std::array::from_fn(|k| (50 + 5 * k) as f64 / 100.0)
}

pub fn coco_ap(images: &[(&[Detection], &[GroundTruthBox])]) -> ApReport {
    coco_ap_with(images, &Interpolated101)
}

/// AP at each COCO IoU threshold, averaged over classes that have ground truth.
pub fn coco_ap_with(
    images: &[(&[Detection], &[GroundTruthBox])],
    integrator: &dyn ApIntegrator,
) -> ApReport {
    let mut classes_evaluated = 0;
    let ap_per_iou: Vec<IouAp> = coco_iou_thresholds()
        .into_iter()
        .map(|t| {
            let per_class = ap_per_class_with(images, t, integrator);
            classes_evaluated = per_class.len();
            let ap = if per_class.is_empty() {
                0.0
            } else {
                per_class.values().sum::<f64>() / per_class.len() as f64
            };
            IouAp { iou: t, ap }
        })
        .collect();
    let ap_50_95 = ap_per_iou.iter().map(|x| x.ap).sum::<f64>() / ap_per_iou.len() as f64;
    ApReport {
        method: integrator.name().to_string(),
        classes_evaluated,
        ap_50: ap_per_iou[0].ap,
        ap_75: ap_per_iou[5].ap,
        ap_50_95,
        ap_per_iou,
    }
}
