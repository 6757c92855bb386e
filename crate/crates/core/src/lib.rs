//! Detector-agnostic post-processing for object detection.
//!
//! Raw detections are filtered with a pair of likelihood-ratio tests (top
//! class against runner-up, objectness against top class), deduplicated with
//! greedy NMS and scored against ground truth. A grid sweep over the two
//! thresholds yields a precision/recall surface from which Pareto-optimal
//! operating points are picked.
//!
//! Interchangeable stages (filters, AP integration) are trait objects looked up
//! by name in a [`registry::Registry`].

pub mod error;
pub mod filter;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod model;
pub mod registry;
pub mod sweep;
pub mod synth;

pub use error::{Error, Result};
pub use filter::{
    filter_registry, legacy_filter, legacy_score, llr_class_ratio, llr_det_ratio, rmopp_filter,
    DetectionFilter, FilterParams, FilterThresholds, LegacyScoreFilter, LegacyThreshold,
    RmoppFilter,
};
pub use geometry::{filter_then_nms, greedy_nms, iou, NmsConfig, RankBy};
pub use metrics::{
    ap_per_class, ap_registry, coco_ap, match_detections, prf, ApIntegrator, ApReport, MatchCounts,
    PrfScores,
};
pub use model::{
    ordered_stats, validate_dataset, BBox, ClassProbVector, Dataset, Detection, GroundTruthBox,
    ImageRecords, OrderedClassStats,
};
pub use sweep::{
    pareto_frontier, run_sweep, run_sweep_with_workers, select_best, GammaCell, GridAxis,
    SelectionObjective, SweepConfig, Target,
};
pub use synth::{generate_synthetic, SynthConfig};
