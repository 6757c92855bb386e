//! File formats.
//!
//! * Detections: JSONL, one [`DetectionRecord`] per line.
//! * Ground truth: a COCO-style JSON document (`images`, `annotations`,
//!   `categories`) or JSONL of [`GroundTruthRecord`].
//! * Sweep results: CSV with columns
//!   `gamma1,gamma2,precision,recall,f1,tp,fp,fn,kept,evaluated`, reals with six
//!   decimals; metric columns are empty for unevaluated cells.
//! * Frontier: a JSON array of [`CellRecord`].

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{MatchCounts, PrfScores};
use crate::model::{validate_detection, BBox, Detection, GroundTruthBox};
use crate::sweep::GammaCell;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BboxFormat {
    #[default]
    Xyxy,
    Xywh,
}

impl BboxFormat {
    pub fn to_bbox(self, v: [f64; 4]) -> BBox {
        match self {
            BboxFormat::Xyxy => BBox::new(v[0], v[1], v[2], v[3]),
            BboxFormat::Xywh => BBox::from_xywh(v[0], v[1], v[2], v[3]),
        }
    }
}

/// Accepts string or integer ids; integers are kept in decimal form.
fn id_string<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<String, D::Error> {
    match serde_json::Value::deserialize(d)? {
        serde_json::Value::String(s) => Ok(s),
        serde_json::Value::Number(n) => Ok(n.to_string()),
        other => Err(D::Error::custom(format!(
            "image id must be a string or number, got {other}"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    #[serde(deserialize_with = "id_string")]
    pub image_id: String,
    pub bbox: [f64; 4],
    #[serde(default)]
    pub bbox_format: BboxFormat,
    pub class_probs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objectness: Option<f64>,
}

impl DetectionRecord {
    pub fn into_detection(self) -> Detection {
        let bbox = self.bbox_format.to_bbox(self.bbox);
        Detection::new(self.image_id, bbox, self.class_probs, self.objectness)
    }

    pub fn from_detection(d: &Detection) -> Self {
        DetectionRecord {
            image_id: d.image_id.clone(),
            bbox: d.bbox.to_xyxy(),
            bbox_format: BboxFormat::Xyxy,
            class_probs: d.class_probs.as_slice().to_vec(),
            objectness: Some(d.objectness),
        }
    }
}

/// Detections grouped by image, in file order within each image.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DetectionSet {
    /// Length of the class-probability vectors; `None` for an empty file.
    pub num_classes: Option<usize>,
    pub by_image: BTreeMap<String, Vec<Detection>>,
}

impl DetectionSet {
    pub fn len(&self) -> usize {
        self.by_image.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Parses and validates detection JSONL. Blank lines are skipped.
pub fn read_detections<R: BufRead>(
    reader: R,
    source: &Path,
    renormalize: bool,
) -> Result<DetectionSet> {
    let mut set = DetectionSet::default();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: DetectionRecord =
            serde_json::from_str(&line).map_err(|e| parse_err(source, line_no, e.to_string()))?;
        let det = record.into_detection();
        let n = *set.num_classes.get_or_insert(det.class_probs.len());
        let bucket = set.by_image.entry(det.image_id.clone()).or_default();
        let index = bucket.len();
        let image_id = det.image_id.clone();
        let det = validate_detection(&image_id, index, det, n, renormalize)
            .map_err(|e| parse_err(source, line_no, e.to_string()))?;
        bucket.push(det);
    }
    Ok(set)
}

pub fn load_detections(path: &Path, renormalize: bool) -> Result<DetectionSet> {
    let file = File::open(path)?;
    read_detections(BufReader::new(file), path, renormalize)
}

pub fn write_detections_to<'a, W: Write>(
    mut w: W,
    dets: impl IntoIterator<Item = &'a Detection>,
) -> Result<()> {
    for d in dets {
        serde_json::to_writer(&mut w, &DetectionRecord::from_detection(d))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_detections<'a>(
    path: &Path,
    dets: impl IntoIterator<Item = &'a Detection>,
) -> Result<()> {
    write_detections_to(BufWriter::new(File::create(path)?), dets)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthRecord {
    #[serde(deserialize_with = "id_string")]
    pub image_id: String,
    pub class_index: usize,
    pub bbox: [f64; 4],
    #[serde(default)]
    pub bbox_format: BboxFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroundTruthFormat {
    Coco,
    Native,
}

impl std::str::FromStr for GroundTruthFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coco" => Ok(GroundTruthFormat::Coco),
            "native" => Ok(GroundTruthFormat::Native),
            other => Err(Error::Config(format!(
                "unknown ground-truth format {other:?} (expected coco or native)"
            ))),
        }
    }
}

/// COCO category id to contiguous class index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryMapping {
    pub category_id: i64,
    pub name: String,
    pub class_index: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruthSet {
    pub by_image: BTreeMap<String, Vec<GroundTruthBox>>,
    /// Present for COCO input, in `categories` order.
    pub categories: Option<Vec<CategoryMapping>>,
    pub crowd_skipped: usize,
}

impl GroundTruthSet {
    pub fn num_classes(&self) -> Option<usize> {
        self.categories.as_ref().map(Vec::len)
    }

    pub fn len(&self) -> usize {
        self.by_image.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CocoDocument {
    pub images: Vec<CocoImage>,
    pub annotations: Vec<CocoAnnotation>,
    pub categories: Vec<CocoCategory>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CocoImage {
    #[serde(deserialize_with = "id_string")]
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file_name: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CocoAnnotation {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<i64>,
    #[serde(deserialize_with = "id_string")]
    pub image_id: String,
    pub category_id: i64,
    /// `[x, y, w, h]`
    pub bbox: [f64; 4],
    #[serde(default)]
    pub iscrowd: u8,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CocoCategory {
    pub id: i64,
    #[serde(default)]
    pub name: String,
}

/// Converts a parsed COCO document; crowd annotations are skipped and counted.
pub fn ground_truth_from_coco(doc: CocoDocument) -> Result<GroundTruthSet> {
    let mut class_of: HashMap<i64, usize> = HashMap::new();
    let mut categories = Vec::with_capacity(doc.categories.len());
    for cat in doc.categories {
        if class_of.contains_key(&cat.id) {
            return Err(Error::InvalidInput(format!(
                "duplicate category id {}",
                cat.id
            )));
        }
        let class_index = categories.len();
        class_of.insert(cat.id, class_index);
        categories.push(CategoryMapping {
            category_id: cat.id,
            name: cat.name,
            class_index,
        });
    }

    let mut by_image: BTreeMap<String, Vec<GroundTruthBox>> = doc
        .images
        .into_iter()
        .map(|im| (im.id, Vec::new()))
        .collect();
    let mut crowd_skipped = 0;
    for (k, ann) in doc.annotations.into_iter().enumerate() {
        let Some(boxes) = by_image.get_mut(&ann.image_id) else {
            return Err(Error::InvalidInput(format!(
                "annotation {k} references unknown image id {:?}",
                ann.image_id
            )));
        };
        let Some(&class_index) = class_of.get(&ann.category_id) else {
            return Err(Error::InvalidInput(format!(
                "annotation {k} references unknown category id {}",
                ann.category_id
            )));
        };
        if ann.iscrowd != 0 {
            crowd_skipped += 1;
            continue;
        }
        let bbox = BboxFormat::Xywh.to_bbox(ann.bbox);
        if !bbox.is_valid() {
            return Err(Error::validation(
                &ann.image_id,
                boxes.len(),
                format!("annotation {k} has degenerate bbox {:?}", ann.bbox),
            ));
        }
        boxes.push(GroundTruthBox::new(ann.image_id, class_index, bbox));
    }
    if crowd_skipped > 0 {
        log::warn!("skipped {crowd_skipped} crowd annotations");
    }
    Ok(GroundTruthSet {
        by_image,
        categories: Some(categories),
        crowd_skipped,
    })
}

pub fn read_native_ground_truth<R: BufRead>(reader: R, source: &Path) -> Result<GroundTruthSet> {
    let mut set = GroundTruthSet::default();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: GroundTruthRecord =
            serde_json::from_str(&line).map_err(|e| parse_err(source, line_no, e.to_string()))?;
        let bbox = rec.bbox_format.to_bbox(rec.bbox);
        if !bbox.is_valid() {
            return Err(parse_err(
                source,
                line_no,
                format!("degenerate bbox {:?}", rec.bbox),
            ));
        }
        set.by_image
            .entry(rec.image_id.clone())
            .or_default()
            .push(GroundTruthBox::new(rec.image_id, rec.class_index, bbox));
    }
    Ok(set)
}

pub fn load_ground_truth(path: &Path, format: GroundTruthFormat) -> Result<GroundTruthSet> {
    let reader = BufReader::new(File::open(path)?);
    match format {
        GroundTruthFormat::Coco => {
            let doc: CocoDocument = serde_json::from_reader(reader)?;
            ground_truth_from_coco(doc)
        }
        GroundTruthFormat::Native => read_native_ground_truth(reader, path),
    }
}

pub fn write_ground_truth_to<'a, W: Write>(
    mut w: W,
    gts: impl IntoIterator<Item = &'a GroundTruthBox>,
) -> Result<()> {
    for g in gts {
        let rec = GroundTruthRecord {
            image_id: g.image_id.clone(),
            class_index: g.class_index,
            bbox: g.bbox.to_xyxy(),
            bbox_format: BboxFormat::Xyxy,
        };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_ground_truth<'a>(
    path: &Path,
    gts: impl IntoIterator<Item = &'a GroundTruthBox>,
) -> Result<()> {
    write_ground_truth_to(BufWriter::new(File::create(path)?), gts)
}

/// COCO document for `by_image`; class `k` becomes category id `k + 1`.
pub fn coco_document(
    by_image: &BTreeMap<String, Vec<GroundTruthBox>>,
    num_classes: usize,
) -> CocoDocument {
    let images = by_image
        .keys()
        .map(|id| CocoImage {
            id: id.clone(),
            file_name: None,
        })
        .collect();
    let annotations = by_image
        .values()
        .flatten()
        .enumerate()
        .map(|(k, g)| CocoAnnotation {
            id: Some(k as i64 + 1),
            image_id: g.image_id.clone(),
            category_id: g.class_index as i64 + 1,
            bbox: g.bbox.to_xywh(),
            iscrowd: 0,
        })
        .collect();
    let categories = (0..num_classes)
        .map(|k| CocoCategory {
            id: k as i64 + 1,
            name: format!("class{k}"),
        })
        .collect();
    CocoDocument {
        images,
        annotations,
        categories,
    }
}

pub const SWEEP_CSV_HEADER: [&str; 10] = [
    "gamma1",
    "gamma2",
    "precision",
    "recall",
    "f1",
    "tp",
    "fp",
    "fn",
    "kept",
    "evaluated",
];

fn fixed6(v: f64) -> String {
    format!("{v:.6}")
}

pub fn write_sweep_csv_to<W: Write>(w: W, cells: &[GammaCell]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SWEEP_CSV_HEADER)?;
    for c in cells {
        let metric = |v: f64| {
            if c.evaluated {
                fixed6(v)
            } else {
                String::new()
            }
        };
        out.write_record([
            fixed6(c.gamma1),
            fixed6(c.gamma2),
            metric(c.scores.precision),
            metric(c.scores.recall),
            metric(c.scores.f1),
            c.counts.tp.to_string(),
            c.counts.fp.to_string(),
            c.counts.fn_.to_string(),
            c.kept.to_string(),
            c.evaluated.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_sweep_csv(path: &Path, cells: &[GammaCell]) -> Result<()> {
    write_sweep_csv_to(File::create(path)?, cells)
}

/// Flat, serializable view of a [`GammaCell`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub gamma1: f64,
    pub gamma2: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub kept: usize,
    pub evaluated: bool,
}

impl From<&GammaCell> for CellRecord {
    fn from(c: &GammaCell) -> Self {
        let metric = |v: f64| c.evaluated.then_some(v);
        CellRecord {
            gamma1: c.gamma1,
            gamma2: c.gamma2,
            precision: metric(c.scores.precision),
            recall: metric(c.scores.recall),
            f1: metric(c.scores.f1),
            tp: c.counts.tp,
            fp: c.counts.fp,
            fn_: c.counts.fn_,
            kept: c.kept,
            evaluated: c.evaluated,
        }
    }
}

impl From<CellRecord> for GammaCell {
    /// Survivor counts are not stored on disk; `kept` stands in for them.
    fn from(r: CellRecord) -> Self {
        GammaCell {
            gamma1: r.gamma1,
            gamma2: r.gamma2,
            counts: MatchCounts {
                tp: r.tp,
                fp: r.fp,
                fn_: r.fn_,
            },
            scores: PrfScores {
                precision: r.precision.unwrap_or(0.0),
                recall: r.recall.unwrap_or(0.0),
                f1: r.f1.unwrap_or(0.0),
            },
            kept: r.kept,
            survivors: r.kept,
            evaluated: r.evaluated,
        }
    }
}

pub fn read_sweep_csv(path: &Path) -> Result<Vec<GammaCell>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(SWEEP_CSV_HEADER) {
        return Err(parse_err(
            path,
            1,
            format!("unexpected header {:?}", headers.iter().collect::<Vec<_>>()),
        ));
    }
    rdr.deserialize::<CellRecord>()
        .map(|r| r.map(GammaCell::from).map_err(Error::from))
        .collect()
}

pub fn write_frontier_json_to<W: Write>(mut w: W, cells: &[GammaCell]) -> Result<()> {
    let records: Vec<CellRecord> = cells.iter().map(CellRecord::from).collect();
    serde_json::to_writer_pretty(&mut w, &records)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn write_frontier_json(path: &Path, cells: &[GammaCell]) -> Result<()> {
    write_frontier_json_to(BufWriter::new(File::create(path)?), cells)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::GammaCell;

    fn read_str(s: &str) -> Result<DetectionSet> {
        read_detections(s.as_bytes(), Path::new("mem.jsonl"), false)
    }

    #[test]
    fn xywh_detection_converted() {
        let set = read_str(
            r#"{"image_id":"a","bbox":[10,10,20,20],"bbox_format":"xywh","class_probs":[0.6,0.4],"objectness":0.5}"#,
        )
        .unwrap();
        let d = &set.by_image["a"][0];
        assert_eq!(d.bbox, BBox::new(10.0, 10.0, 30.0, 30.0));
        assert_eq!(d.objectness, 0.5);
        assert_eq!(set.num_classes, Some(2));
    }

    #[test]
    fn missing_objectness_defaults_to_one() {
        let set = read_str(r#"{"image_id":7,"bbox":[0,0,1,1],"class_probs":[0.6,0.4]}"#).unwrap();
        assert_eq!(set.by_image["7"][0].objectness, 1.0);
    }

    #[test]
    fn empty_file_is_empty_set() {
        let set = read_str("").unwrap();
        assert!(set.is_empty());
        assert_eq!(set.num_classes, None);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let input = "{\"image_id\":\"a\",\"bbox\":[0,0,1,1],\"class_probs\":[0.6,0.4]}\n{oops\n";
        match read_str(input) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn validation_failure_reports_line_and_record() {
        let input = "\n{\"image_id\":\"a\",\"bbox\":[0,0,1,1],\"class_probs\":[0.5,-0.1,0.6]}\n";
        let err = read_str(input).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{msg}");
        assert!(msg.contains("image \"a\", record 0"), "{msg}");
    }

    #[test]
    fn inconsistent_class_count_rejected() {
        let input = "{\"image_id\":\"a\",\"bbox\":[0,0,1,1],\"class_probs\":[0.6,0.4]}\n\
                     {\"image_id\":\"a\",\"bbox\":[0,0,1,1],\"class_probs\":[0.6,0.2,0.2]}\n";
        assert!(read_str(input).is_err());
    }

    fn coco_doc(annotations: &str) -> CocoDocument {
        serde_json::from_str(&format!(
            r#"{{"images":[{{"id":1}},{{"id":2}}],
                "annotations":{annotations},
                "categories":[{{"id":17,"name":"cat"}},{{"id":18,"name":"dog"}}]}}"#
        ))
        .unwrap()
    }

    #[test]
    fn coco_conversion_and_remap() {
        let set = ground_truth_from_coco(coco_doc(
            r#"[{"id":1,"image_id":1,"category_id":18,"bbox":[0,0,5,5]},
                {"id":2,"image_id":1,"category_id":17,"bbox":[1,2,3,4],"iscrowd":1}]"#,
        ))
        .unwrap();
        let g = &set.by_image["1"];
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].bbox, BBox::new(0.0, 0.0, 5.0, 5.0));
        assert_eq!(g[0].class_index, 1);
        assert!(set.by_image["2"].is_empty());
        assert_eq!(set.crowd_skipped, 1);
        let cats = set.categories.unwrap();
        assert_eq!(
            cats.iter()
                .map(|c| (c.category_id, c.class_index))
                .collect::<Vec<_>>(),
            vec![(17, 0), (18, 1)]
        );
    }

    #[test]
    fn coco_unknown_image_named() {
        let err = ground_truth_from_coco(coco_doc(
            r#"[{"image_id":99,"category_id":17,"bbox":[0,0,5,5]}]"#,
        ))
        .unwrap_err();
        assert!(err.to_string().contains("\"99\""), "{err}");
    }

    #[test]
    fn coco_unknown_category() {
        let err = ground_truth_from_coco(coco_doc(
            r#"[{"image_id":1,"category_id":3,"bbox":[0,0,5,5]}]"#,
        ))
        .unwrap_err();
        assert!(err.to_string().contains("category id 3"), "{err}");
    }

    #[test]
    fn native_ground_truth() {
        let input = "{\"image_id\":\"a\",\"class_index\":1,\"bbox\":[1,1,3,3]}\n\
                     {\"image_id\":\"a\",\"class_index\":0,\"bbox\":[1,1,3,3],\"bbox_format\":\"xywh\"}\n";
        let set = read_native_ground_truth(input.as_bytes(), Path::new("gt.jsonl")).unwrap();
        let g = &set.by_image["a"];
        assert_eq!(g[0].bbox, BBox::new(1.0, 1.0, 3.0, 3.0));
        assert_eq!(g[1].bbox, BBox::new(1.0, 1.0, 4.0, 4.0));
        assert!(set.categories.is_none());
    }

    fn sample_cells() -> Vec<GammaCell> {
        vec![
            GammaCell {
                gamma1: 1.0,
                gamma2: 0.1,
                counts: MatchCounts {
                    tp: 2,
                    fp: 1,
                    fn_: 1,
                },
                scores: PrfScores {
                    precision: 2.0 / 3.0,
                    recall: 2.0 / 3.0,
                    f1: 2.0 / 3.0,
                },
                kept: 3,
                survivors: 4,
                evaluated: true,
            },
            GammaCell {
                gamma1: 1.5,
                gamma2: 0.1,
                counts: MatchCounts {
                    tp: 0,
                    fp: 0,
                    fn_: 3,
                },
                scores: PrfScores::default(),
                kept: 0,
                survivors: 0,
                evaluated: false,
            },
        ]
    }

    #[test]
    fn sweep_csv_layout() {
        let mut buf = Vec::new();
        write_sweep_csv_to(&mut buf, &sample_cells()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "gamma1,gamma2,precision,recall,f1,tp,fp,fn,kept,evaluated"
        );
        assert_eq!(
            lines[1],
            "1.000000,0.100000,0.666667,0.666667,0.666667,2,1,1,3,true"
        );
        assert_eq!(lines[2], "1.500000,0.100000,,,,0,0,3,0,false");
        assert_eq!(lines.len(), 3);
    }

    #[test]
    fn sweep_csv_reads_back() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.csv");
        let cells = sample_cells();
        write_sweep_csv(&path, &cells).unwrap();
        let back = read_sweep_csv(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].scores.precision, 0.666667);
        assert_eq!(back[0].counts, cells[0].counts);
        assert!(!back[1].evaluated);
        assert_eq!(back[1].scores, PrfScores::default());
    }

    #[test]
    fn empty_frontier_json() {
        let mut buf = Vec::new();
        write_frontier_json_to(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().trim(), "[]");
    }

    #[test]
    fn frontier_json_uses_null_for_unevaluated() {
        let mut buf = Vec::new();
        write_frontier_json_to(&mut buf, &sample_cells()).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v[0]["fn"], 1);
        assert!(v[1]["precision"].is_null());
    }
}
