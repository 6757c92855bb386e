use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rmopp::{
    filter_then_nms, greedy_nms, rmopp_filter, BBox, Detection, FilterThresholds, NmsConfig,
    RmoppFilter,
};

/// One image with 1,000 detections over 80 classes.
fn image() -> Vec<Detection> {
    let mut r = ChaCha8Rng::seed_from_u64(10);
    (0..1000)
        .map(|_| {
            let mut probs: Vec<f64> = (0..80).map(|_| r.random::<f64>()).collect();
            probs[r.random_range(0..80)] += 40.0;
            let s: f64 = probs.iter().sum();
            probs.iter_mut().for_each(|p| *p /= s);
            let (w, h) = (r.random_range(20.0..120.0), r.random_range(20.0..120.0));
            let (x, y) = (r.random_range(0.0..900.0), r.random_range(0.0..900.0));
            Detection::new("img", BBox::from_xywh(x, y, w, h), probs, Some(r.random()))
        })
        .collect()
}

fn bench(c: &mut Criterion) {
    let dets = image();
    let t = FilterThresholds::new(1.0, 0.0).unwrap();
    let filter = RmoppFilter(t);
    let cfg = NmsConfig::default();

    c.bench_function("rmopp_filter_1000", |b| {
        b.iter(|| rmopp_filter(black_box(&dets), t))
    });
    c.bench_function("greedy_nms_1000", |b| {
        b.iter(|| greedy_nms(black_box(&dets), &cfg))
    });
    c.bench_function("filter_then_nms_1000", |b| {
        b.iter(|| filter_then_nms(black_box(&dets), &filter, &cfg))
    });
}

criterion_group!(benches, bench);
criterion_main!(benches);
