//! Seeded synthetic detector output for tests and benchmarks.
//!
//! Each image gets `objects_per_image` ground-truth boxes on a 1000x1000
//! canvas. Every object yields `detections_per_object` raw detections with
//! Gaussian corner noise; each detection's probability vector peaks on the true
//! class, or on a random wrong class with probability `confusion_rate`.
//! Objectness is drawn from Beta(5, 2). On top, Poisson(`spurious_rate`)
//! background detections per image carry near-uniform class probabilities and
//! Beta(2, 5) objectness.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BBox, Dataset, Detection, GroundTruthBox, ImageRecords};

pub const CANVAS: f64 = 1000.0;
const MIN_SIDE: f64 = 40.0;
const MAX_SIDE: f64 = 200.0;
/// Range of the probability mass placed on the peak class.
const PEAK_MASS: (f64, f64) = (0.9, 0.999);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub num_images: usize,
    pub objects_per_image: usize,
    pub num_classes: usize,
    /// Standard deviation of corner noise, in pixels.
    pub loc_noise_sigma: f64,
    pub confusion_rate: f64,
    /// Expected background detections per image.
    pub spurious_rate: f64,
    /// Raw detections emitted per object before NMS.
    #[serde(default = "one")]
    pub detections_per_object: usize,
    pub seed: u64,
}

fn one() -> usize {
    1
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            num_images: 100,
            objects_per_image: 5,
            num_classes: 10,
            loc_noise_sigma: 3.0,
            confusion_rate: 0.1,
            spurious_rate: 2.0,
            detections_per_object: 1,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::Config(
                "synthetic data needs at least 2 classes".into(),
            ));
        }
        if !(self.loc_noise_sigma >= 0.0 && self.loc_noise_sigma.is_finite()) {
            return Err(Error::Config(format!(
                "loc_noise_sigma must be finite and non-negative, got {}",
                self.loc_noise_sigma
            )));
        }
        if !(0.0..=1.0).contains(&self.confusion_rate) {
            return Err(Error::Config(format!(
                "confusion_rate must lie in [0, 1], got {}",
                self.confusion_rate
            )));
        }
        if !(self.spurious_rate >= 0.0 && self.spurious_rate.is_finite()) {
            return Err(Error::Config(format!(
                "spurious_rate must be finite and non-negative, got {}",
                self.spurious_rate
            )));
        }
        Ok(())
    }
}

fn random_box(rng: &mut ChaCha8Rng) -> BBox {
    let w = rng.random_range(MIN_SIDE..MAX_SIDE);
    let h = rng.random_range(MIN_SIDE..MAX_SIDE);
    let x = rng.random_range(0.0..CANVAS - w);
    let y = rng.random_range(0.0..CANVAS - h);
    BBox::from_xywh(x, y, w, h)
}

fn jitter(rng: &mut ChaCha8Rng, b: &BBox, noise: Option<&Normal<f64>>) -> BBox {
    let Some(noise) = noise else {
        return *b;
    };
    let mut c = b.to_xyxy().map(|v| v + noise.sample(rng));
    // keep at least one pixel per side
    if c[2] - c[0] < 1.0 {
        c[2] = c[0] + 1.0;
    }
    if c[3] - c[1] < 1.0 {
        c[3] = c[1] + 1.0;
    }
    BBox::new(c[0], c[1], c[2], c[3])
}

/// Probability vector with `mass` on `peak` and the rest spread at random.
fn peaked(rng: &mut ChaCha8Rng, n: usize, peak: usize, mass: f64) -> Vec<f64> {
    let weights: Vec<f64> = (0..n)
        .map(|k| {
            if k == peak {
                0.0
            } else {
                rng.random::<f64>() + 1e-3
            }
        })
        .collect();
    let total: f64 = weights.iter().sum();
    let mut probs: Vec<f64> = weights.iter().map(|w| (1.0 - mass) * w / total).collect();
    probs[peak] = mass;
    probs
}

fn near_uniform(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let weights: Vec<f64> = (0..n).map(|_| 1.0 + 0.5 * rng.random::<f64>()).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

fn wrong_class(rng: &mut ChaCha8Rng, n: usize, truth: usize) -> usize {
    let k = rng.random_range(0..n - 1);
    if k >= truth {
        k + 1
    } else {
        k
    }
}

/// Builds a dataset fully determined by `cfg` (including its seed).
pub fn generate_synthetic(cfg: &SynthConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = (cfg.loc_noise_sigma > 0.0)
        .then(|| Normal::new(0.0, cfg.loc_noise_sigma).expect("sigma checked"));
    let objectness = Beta::new(5.0, 2.0).expect("valid Beta parameters");
    let background = Beta::new(2.0, 5.0).expect("valid Beta parameters");
    let spurious =
        (cfg.spurious_rate > 0.0).then(|| Poisson::new(cfg.spurious_rate).expect("rate checked"));
    let n = cfg.num_classes;
    let width = cfg.num_images.max(1).to_string().len().max(5);

    let mut ds = Dataset::new(n);
    for img in 0..cfg.num_images {
        let image_id = format!("img{img:0width$}");
        let mut records = ImageRecords::default();
        for _ in 0..cfg.objects_per_image {
            let bbox = random_box(&mut rng);
            let class = rng.random_range(0..n);
            records
                .ground_truth
                .push(GroundTruthBox::new(image_id.clone(), class, bbox));
            for _ in 0..cfg.detections_per_object {
                let peak = if rng.random::<f64>() < cfg.confusion_rate {
                    wrong_class(&mut rng, n, class)
                } else {
                    class
                };
                let mass = rng.random_range(PEAK_MASS.0..PEAK_MASS.1);
                let probs = peaked(&mut rng, n, peak, mass);
                let det_box = jitter(&mut rng, &bbox, noise.as_ref());
                records.detections.push(Detection::new(
                    image_id.clone(),
                    det_box,
                    probs,
                    Some(objectness.sample(&mut rng)),
                ));
            }
        }
        let extra = spurious.map_or(0, |p| p.sample(&mut rng) as usize);
        for _ in 0..extra {
            let probs = near_uniform(&mut rng, n);
            records.detections.push(Detection::new(
                image_id.clone(),
                random_box(&mut rng),
                probs,
                Some(background.sample(&mut rng)),
            ));
        }
        // interleave object and background detections like a real detector dump
        records.detections.shuffle(&mut rng);
        ds.images.insert(image_id, records);
    }
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_dataset;

    #[test]
    fn output_validates() {
        let ds = generate_synthetic(&SynthConfig::default()).unwrap();
        assert_eq!(ds.images.len(), 100);
        assert_eq!(ds.num_ground_truth(), 500);
        validate_dataset(ds, false).unwrap();
    }

    #[test]
    fn same_seed_same_data() {
        let cfg = SynthConfig {
            seed: 42,
            ..SynthConfig::default()
        };
        assert_eq!(
            generate_synthetic(&cfg).unwrap(),
            generate_synthetic(&cfg).unwrap()
        );
        let other = SynthConfig { seed: 43, ..cfg };
        assert_ne!(
            generate_synthetic(&cfg).unwrap(),
            generate_synthetic(&other).unwrap()
        );
    }

    #[test]
    fn rejects_bad_config() {
        let bad = SynthConfig {
            num_classes: 1,
            ..SynthConfig::default()
        };
        assert!(generate_synthetic(&bad).is_err());
        let bad = SynthConfig {
            confusion_rate: 1.5,
            ..SynthConfig::default()
        };
        assert!(generate_synthetic(&bad).is_err());
    }

    #[test]
    fn confusion_rate_is_respected() {
        let cfg = SynthConfig {
            num_images: 2000,
            objects_per_image: 5,
            confusion_rate: 0.3,
            spurious_rate: 0.0,
            loc_noise_sigma: 0.0,
            seed: 7,
            ..SynthConfig::default()
        };
        let ds = generate_synthetic(&cfg).unwrap();
        let mut mismatched = 0;
        let mut total = 0;
        for im in ds.images.values() {
            // noiseless boxes let each detection be paired with its object exactly
            for d in &im.detections {
                let g = im.ground_truth.iter().find(|g| g.bbox == d.bbox).unwrap();
                total += 1;
                mismatched += (d.top_class() != g.class_index) as usize;
            }
        }
        let frac = mismatched as f64 / total as f64;
        assert!((frac - 0.3).abs() < 0.02, "mismatch fraction {frac}");
    }
}
