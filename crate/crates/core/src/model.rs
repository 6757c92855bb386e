//! Domain types shared by every stage of the pipeline.
//!
//! Boxes are stored in corner form `(x1, y1, x2, y2)`; COCO-style `(x, y, w, h)`
//! input is converted once at ingestion.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Allowed deviation of a class-probability vector's sum from 1.
pub const PROB_SUM_TOLERANCE: f64 = 1e-4;

/// Sums closer to 1 than this are treated as already normalized, which keeps
/// renormalization idempotent.
const RENORM_SKIP_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl BBox {
    pub const fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        BBox { x1, y1, x2, y2 }
    }

    pub fn from_xywh(x: f64, y: f64, w: f64, h: f64) -> Self {
        BBox::new(x, y, x + w, y + h)
    }

    pub fn to_xywh(&self) -> [f64; 4] {
        [self.x1, self.y1, self.x2 - self.x1, self.y2 - self.y1]
    }

    pub fn to_xyxy(&self) -> [f64; 4] {
        [self.x1, self.y1, self.x2, self.y2]
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Finite corners with `x1 < x2` and `y1 < y2`.
    pub fn is_valid(&self) -> bool {
        self.to_xyxy().iter().all(|v| v.is_finite()) && self.x1 < self.x2 && self.y1 < self.y2
    }
}

/// Per-class probabilities of one detection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassProbVector(Vec<f64>);

impl ClassProbVector {
    /// Wraps `probs` without validation; see [`ClassProbVector::validated`].
    pub fn new(probs: Vec<f64>) -> Self {
        ClassProbVector(probs)
    }

    /// Checks the element range and the sum, optionally renormalizing first.
    pub fn validated(probs: Vec<f64>, renormalize: bool) -> std::result::Result<Self, String> {
        if probs.len() < 2 {
            return Err(format!(
                "class-probability vector has {} entries, need at least 2",
                probs.len()
            ));
        }
        if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| !p.is_finite()) {
            return Err(format!("class probability {i} is not finite ({p})"));
        }
        if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| **p < 0.0) {
            return Err(format!("class probability {i} is negative ({p})"));
        }
        let sum: f64 = probs.iter().sum();
        if sum <= 0.0 {
            return Err("class-probability vector sums to zero".to_string());
        }
        let probs = if renormalize && (sum - 1.0).abs() > RENORM_SKIP_EPS {
            probs.into_iter().map(|p| p / sum).collect()
        } else {
            probs
        };
        if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| **p > 1.0) {
            return Err(format!("class probability {i} exceeds 1 ({p})"));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(format!(
                "class probabilities sum to {sum}, outside 1 ± {PROB_SUM_TOLERANCE}"
            ));
        }
        Ok(ClassProbVector(probs))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Top-1 / top-2 class probabilities of a detection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderedClassStats {
    pub top_class: usize,
    pub p1: f64,
    pub p2: f64,
}

/// Single pass over the vector. A repeated maximum yields `p2 == p1`; ties for
/// the top class go to the lowest index.
pub fn ordered_stats(probs: &[f64]) -> Result<OrderedClassStats> {
    if probs.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "ordered statistic needs at least 2 classes, got {}",
            probs.len()
        )));
    }
    let (mut top_class, mut p1, mut p2) = if probs[1] > probs[0] {
        (1, probs[1], probs[0])
    } else {
        (0, probs[0], probs[1])
    };
    for (i, &p) in probs.iter().enumerate().skip(2) {
        if p > p1 {
            p2 = p1;
            p1 = p;
            top_class = i;
        } else if p > p2 {
            p2 = p;
        }
    }
    Ok(OrderedClassStats { top_class, p1, p2 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub image_id: String,
    pub bbox: BBox,
    pub class_probs: ClassProbVector,
    /// Detectors that do not report objectness get 1.0.
    pub objectness: f64,
}

impl Detection {
    pub fn new(
        image_id: impl Into<String>,
        bbox: BBox,
        class_probs: Vec<f64>,
        objectness: Option<f64>,
    ) -> Self {
        Detection {
            image_id: image_id.into(),
            bbox,
            class_probs: ClassProbVector::new(class_probs),
            objectness: objectness.unwrap_or(1.0),
        }
    }

    /// Panics on a vector shorter than 2, which validation rules out.
    pub fn stats(&self) -> OrderedClassStats {
        ordered_stats(self.class_probs.as_slice())
            .expect("detection with fewer than 2 classes escaped validation")
    }

    pub fn top_class(&self) -> usize {
        self.stats().top_class
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthBox {
    pub image_id: String,
    pub class_index: usize,
    pub bbox: BBox,
}

impl GroundTruthBox {
    pub fn new(image_id: impl Into<String>, class_index: usize, bbox: BBox) -> Self {
        GroundTruthBox {
            image_id: image_id.into(),
            class_index,
            bbox,
        }
    }
}

/// Detections and annotations of one image.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ImageRecords {
    pub detections: Vec<Detection>,
    pub ground_truth: Vec<GroundTruthBox>,
}

/// Per-image detections and ground truth, keyed by image id in sorted order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub num_classes: usize,
    pub images: BTreeMap<String, ImageRecords>,
}

impl Dataset {
    pub fn new(num_classes: usize) -> Self {
        Dataset {
            num_classes,
            images: BTreeMap::new(),
        }
    }

    /// Joins separately loaded detections and annotations on image id.
    pub fn from_parts(
        num_classes: usize,
        detections: BTreeMap<String, Vec<Detection>>,
        ground_truth: BTreeMap<String, Vec<GroundTruthBox>>,
    ) -> Self {
        let mut ds = Dataset::new(num_classes);
        for (id, dets) in detections {
            ds.images.entry(id).or_default().detections = dets;
        }
        for (id, gts) in ground_truth {
            ds.images.entry(id).or_default().ground_truth = gts;
        }
        ds
    }

    pub fn num_detections(&self) -> usize {
        self.images.values().map(|im| im.detections.len()).sum()
    }

    pub fn num_ground_truth(&self) -> usize {
        self.images.values().map(|im| im.ground_truth.len()).sum()
    }

    /// `(detections, ground truth)` slices per image, in image-id order.
    pub fn pairs(&self) -> Vec<(&[Detection], &[GroundTruthBox])> {
        self.images
            .values()
            .map(|im| (im.detections.as_slice(), im.ground_truth.as_slice()))
            .collect()
    }
}

/// Checks every type invariant, returning the (possibly renormalized) dataset.
///
/// Errors carry the image id and the index of the offending record within its
/// image; ground-truth indices are offset by the image's detection count so
/// each record has a unique position.
pub fn validate_dataset(raw: Dataset, renormalize: bool) -> Result<Dataset> {
    if raw.num_classes < 2 {
        return Err(Error::InvalidInput(format!(
            "dataset declares {} classes, need at least 2",
            raw.num_classes
        )));
    }
    let num_classes = raw.num_classes;
    let mut images = BTreeMap::new();
    for (image_id, records) in raw.images {
        let n_dets = records.detections.len();
        let detections = records
            .detections
            .into_iter()
            .enumerate()
            .map(|(i, d)| validate_detection(&image_id, i, d, num_classes, renormalize))
            .collect::<Result<Vec<_>>>()?;
        let ground_truth = records
            .ground_truth
            .into_iter()
            .enumerate()
            .map(|(i, g)| validate_ground_truth(&image_id, n_dets + i, g, num_classes))
            .collect::<Result<Vec<_>>>()?;
        images.insert(
            image_id,
            ImageRecords {
                detections,
                ground_truth,
            },
        );
    }
    Ok(Dataset {
        num_classes,
        images,
    })
}

pub(crate) fn validate_detection(
    image_id: &str,
    index: usize,
    d: Detection,
    num_classes: usize,
    renormalize: bool,
) -> Result<Detection> {
    if d.image_id != image_id {
        return Err(Error::validation(
            image_id,
            index,
            format!("detection filed under the wrong image ({:?})", d.image_id),
        ));
    }
    if !d.bbox.is_valid() {
        return Err(Error::validation(
            image_id,
            index,
            format!("degenerate bbox {:?}", d.bbox.to_xyxy()),
        ));
    }
    if !(0.0..=1.0).contains(&d.objectness) {
        return Err(Error::validation(
            image_id,
            index,
            format!("objectness {} outside [0, 1]", d.objectness),
        ));
    }
    if d.class_probs.len() != num_classes {
        return Err(Error::validation(
            image_id,
            index,
            format!(
                "class-probability vector has length {}, dataset has {num_classes} classes",
                d.class_probs.len()
            ),
        ));
    }
    let class_probs = ClassProbVector::validated(d.class_probs.into_inner(), renormalize)
        .map_err(|reason| Error::validation(image_id, index, reason))?;
    Ok(Detection { class_probs, ..d })
}

fn validate_ground_truth(
    image_id: &str,
    index: usize,
    g: GroundTruthBox,
    num_classes: usize,
) -> Result<GroundTruthBox> {
    if g.image_id != image_id {
        return Err(Error::validation(
            image_id,
            index,
            format!("annotation filed under the wrong image ({:?})", g.image_id),
        ));
    }
    if !g.bbox.is_valid() {
        return Err(Error::validation(
            image_id,
            index,
            format!("degenerate bbox {:?}", g.bbox.to_xyxy()),
        ));
    }
    if g.class_index >= num_classes {
        return Err(Error::validation(
            image_id,
            index,
            format!(
                "class index {} out of range for {num_classes} classes",
                g.class_index
            ),
        ));
    }
    Ok(g)
}
