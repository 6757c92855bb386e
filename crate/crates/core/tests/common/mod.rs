//! Brute-force reference implementations and random fixtures shared by the
//! integration suites. Nothing here calls the library's NMS, matching or
//! frontier code.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rmopp::{BBox, Detection, GammaCell, GroundTruthBox, MatchCounts, PrfScores};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn ref_iou(a: &BBox, b: &BBox) -> f64 {
    let ix = (a.x2.min(b.x2) - a.x1.max(b.x1)).max(0.0);
    let iy = (a.y2.min(b.y2) - a.y1.max(b.y1)).max(0.0);
    let inter = ix * iy;
    if inter == 0.0 {
        return 0.0;
    }
    let area = |r: &BBox| (r.x2 - r.x1) * (r.y2 - r.y1);
    inter / (area(a) + area(b) - inter)
}

/// `(top class, p1 * objectness)` computed by a full sort.
pub fn ref_class_and_score(d: &Detection) -> (usize, f64) {
    let probs = d.class_probs.as_slice();
    let mut idx: Vec<usize> = (0..probs.len()).collect();
    idx.sort_by(|&a, &b| probs[b].partial_cmp(&probs[a]).unwrap().then(a.cmp(&b)));
    (idx[0], probs[idx[0]] * d.objectness)
}

/// Random probability vector of length `n`, optionally sharply peaked.
pub fn random_probs(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n).map(|_| r.random::<f64>()).collect();
    match r.random_range(0..4) {
        0 => {
            let k = r.random_range(0..n);
            w[k] += r.random_range(1.0..(n as f64 * 20.0));
        }
        1 => {
            // exact zeros, including the one-hot case
            for v in w.iter_mut() {
                if r.random_bool(0.5) {
                    *v = 0.0;
                }
            }
            let k = r.random_range(0..n);
            w[k] = 1.0;
        }
        _ => {}
    }
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

pub fn random_box(r: &mut ChaCha8Rng, extent: f64, min_side: f64, max_side: f64) -> BBox {
    let w = r.random_range(min_side..max_side);
    let h = r.random_range(min_side..max_side);
    let x = r.random_range(0.0..extent);
    let y = r.random_range(0.0..extent);
    BBox::from_xywh(x, y, w, h)
}

/// Random detection with scores drawn from a small set so ties are common.
pub fn random_detection(r: &mut ChaCha8Rng, image: &str, n: usize, extent: f64) -> Detection {
    let bbox = random_box(r, extent, 2.0, 30.0);
    let probs = random_probs(r, n);
    let objectness = if r.random_bool(0.3) {
        [0.25, 0.5, 1.0][r.random_range(0..3)]
    } else {
        r.random::<f64>()
    };
    Detection::new(image, bbox, probs, Some(objectness))
}

/// Greedy NMS by repeated arg-max: pick the best remaining (score, then lower
/// index), keep it, drop every remaining same-class box overlapping it above
/// `eta`.
pub fn ref_nms(dets: &[Detection], eta: f64) -> Vec<usize> {
    let info: Vec<(usize, f64)> = dets.iter().map(ref_class_and_score).collect();
    let mut remaining: Vec<usize> = (0..dets.len()).collect();
    let mut kept = Vec::new();
    while !remaining.is_empty() {
        let mut best = remaining[0];
        for &i in &remaining {
            if info[i].1 > info[best].1 || (info[i].1 == info[best].1 && i < best) {
                best = i;
            }
        }
        kept.push(best);
        remaining.retain(|&j| {
            j != best
                && !(info[j].0 == info[best].0 && ref_iou(&dets[best].bbox, &dets[j].bbox) > eta)
        });
    }
    kept
}

/// Exhaustive matcher: enumerates every injective partial assignment of
/// detections to eligible ground truths and keeps the ones consistent with the
/// score-ordered highest-IoU rule. Returns (consistent assignment's counts,
/// number of consistent assignments, best TP over all assignments).
pub fn ref_match(
    dets: &[Detection],
    gts: &[GroundTruthBox],
    thresh: f64,
) -> (MatchCounts, usize, usize) {
    let info: Vec<(usize, f64)> = dets.iter().map(ref_class_and_score).collect();
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| info[b].1.partial_cmp(&info[a].1).unwrap().then(a.cmp(&b)));
    let eligible = |d: usize, g: usize| {
        gts[g].class_index == info[d].0 && ref_iou(&dets[d].bbox, &gts[g].bbox) > thresh
    };

    let mut assignment: Vec<Option<usize>> = vec![None; dets.len()];
    let mut best_tp = 0;

    fn recurse(
        k: usize,
        order: &[usize],
        n_gt: usize,
        assignment: &mut Vec<Option<usize>>,
        used: &mut Vec<bool>,
        eligible: &dyn Fn(usize, usize) -> bool,
        visit: &mut dyn FnMut(&[Option<usize>]),
    ) {
        if k == order.len() {
            visit(assignment);
            return;
        }
        let d = order[k];
        assignment[d] = None;
        recurse(k + 1, order, n_gt, assignment, used, eligible, visit);
        for g in 0..n_gt {
            if !used[g] && eligible(d, g) {
                used[g] = true;
                assignment[d] = Some(g);
                recurse(k + 1, order, n_gt, assignment, used, eligible, visit);
                used[g] = false;
            }
        }
        assignment[d] = None;
    }

    let mut used = vec![false; gts.len()];
    let is_consistent = |a: &[Option<usize>]| {
        let mut taken = vec![false; gts.len()];
        for &d in &order {
            let free: Vec<usize> = (0..gts.len())
                .filter(|&g| !taken[g] && eligible(d, g))
                .collect();
            match a[d] {
                None => {
                    if !free.is_empty() {
                        return false;
                    }
                }
                Some(g) => {
                    let mine = ref_iou(&dets[d].bbox, &gts[g].bbox);
                    for &h in &free {
                        let other = ref_iou(&dets[d].bbox, &gts[h].bbox);
                        if other > mine || (other == mine && h < g) {
                            return false;
                        }
                    }
                    taken[g] = true;
                }
            }
        }
        true
    };
    let mut consistent_tp = Vec::new();
    recurse(
        0,
        &order,
        gts.len(),
        &mut assignment,
        &mut used,
        &eligible,
        &mut |a| {
            let tp = a.iter().filter(|x| x.is_some()).count();
            best_tp = best_tp.max(tp);
            if is_consistent(a) {
                consistent_tp.push(tp);
            }
        },
    );
    let tp = consistent_tp.first().copied().unwrap_or(0);
    (
        MatchCounts {
            tp,
            fp: dets.len() - tp,
            fn_: gts.len() - tp,
        },
        consistent_tp.len(),
        best_tp,
    )
}

/// Pairwise dominance filter over evaluated cells; input order preserved.
pub fn ref_frontier(cells: &[GammaCell]) -> Vec<GammaCell> {
    let ev: Vec<&GammaCell> = cells.iter().filter(|c| c.evaluated).collect();
    ev.iter()
        .filter(|a| {
            !ev.iter().any(|b| {
                let (pb, rb, pa, ra) = (
                    b.scores.precision,
                    b.scores.recall,
                    a.scores.precision,
                    a.scores.recall,
                );
                pb >= pa && rb >= ra && (pb > pa || rb > ra)
            })
        })
        .map(|c| **c)
        .collect()
}

/// Cells with precision/recall on a coarse lattice so duplicates and ties occur.
pub fn random_cells(r: &mut ChaCha8Rng, n: usize) -> Vec<GammaCell> {
    (0..n)
        .map(|i| {
            let levels = [10u32, 25, 1000][r.random_range(0..3)];
            let p = r.random_range(0..=levels) as f64 / levels as f64;
            let rc = r.random_range(0..=levels) as f64 / levels as f64;
            let evaluated = r.random_bool(0.95);
            GammaCell {
                gamma1: 1.0 + (i % 19) as f64 * 0.5,
                gamma2: 0.1 + (i / 19) as f64 * 0.05,
                counts: MatchCounts::default(),
                scores: PrfScores {
                    precision: p,
                    recall: rc,
                    f1: if p + rc == 0.0 {
                        0.0
                    } else {
                        2.0 * p * rc / (p + rc)
                    },
                },
                kept: evaluated as usize,
                survivors: evaluated as usize,
                evaluated,
            }
        })
        .collect()
}
