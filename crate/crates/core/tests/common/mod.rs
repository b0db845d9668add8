//! Independent oracles and generators shared by the integration tests.

#![allow(dead_code)]

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use signsearch::pose_io::{FrameKeypoints, Keypoint2D, RawSequence, HAND_JOINTS};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Minimum over every monotone alignment path from `(0, 0)` to
/// `(n−1, m−1)` with steps `(1,0)`, `(0,1)`, `(1,1)` of the summed Euclidean
/// frame distances, by explicit enumeration.
pub fn dtw_by_enumeration(q: &[Vec<f64>], r: &[Vec<f64>]) -> f64 {
    fn cost(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }
    fn walk(q: &[Vec<f64>], r: &[Vec<f64>], i: usize, j: usize, acc: f64, best: &mut f64) {
        let acc = acc + cost(&q[i], &r[j]);
        if i + 1 == q.len() && j + 1 == r.len() {
            *best = best.min(acc);
            return;
        }
        if i + 1 < q.len() {
            walk(q, r, i + 1, j, acc, best);
        }
        if j + 1 < r.len() {
            walk(q, r, i, j + 1, acc, best);
        }
        if i + 1 < q.len() && j + 1 < r.len() {
            walk(q, r, i + 1, j + 1, acc, best);
        }
    }
    let mut best = f64::INFINITY;
    walk(q, r, 0, 0, 0.0, &mut best);
    best
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues in descending order with eigenvectors as columns of
/// the returned row-major matrix (`vectors[k][i]` = component `i` of vector
/// `k`).
#[allow(clippy::needless_range_loop)]
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| m[y][y].partial_cmp(&m[x][x]).unwrap());
    let values = order.iter().map(|&k| m[k][k]).collect();
    let vectors = order
        .iter()
        .map(|&k| (0..n).map(|i| v[i][k]).collect())
        .collect();
    (values, vectors)
}

/// Sample covariance (denominator `N − 1`) of row vectors.
pub fn covariance(data: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = data.len();
    let d = data[0].len();
    let mean: Vec<f64> = (0..d)
        .map(|j| data.iter().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();
    let mut cov = vec![vec![0.0; d]; d];
    for r in data {
        for i in 0..d {
            for j in 0..d {
                cov[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]);
            }
        }
    }
    for row in cov.iter_mut() {
        for x in row.iter_mut() {
            *x /= (n - 1) as f64;
        }
    }
    (mean, cov)
}

/// Left/right body joint pairs of the 25-joint body model.
pub const BODY_MIRROR_PAIRS: [(usize, usize); 11] = [
    (2, 5),
    (3, 6),
    (4, 7),
    (9, 12),
    (10, 13),
    (11, 14),
    (15, 16),
    (17, 18),
    (19, 22),
    (20, 23),
    (21, 24),
];

/// A plausible signing skeleton in pixel coordinates: upper body with both
/// hands, one hand clearly more active than the other, occasional detection
/// gaps and undetected legs.
pub fn raw_sequence(seed: u64) -> RawSequence<f64> {
    let mut rng = rng(seed);
    let n = rng.random_range(30..70);
    let neck = (
        rng.random_range(200.0..440.0),
        rng.random_range(150.0..250.0),
    );
    let half = rng.random_range(35.0..70.0);
    let tilt = rng.random_range(-8.0..8.0);
    let left_dominant = rng.random_bool(0.5);
    let (fa, fb) = (rng.random_range(0.5..3.0), rng.random_range(0.5..3.0));
    let (pa, pb) = (rng.random_range(0.0..TAU), rng.random_range(0.0..TAU));
    let active = rng.random_range(40.0..90.0);
    let passive = rng.random_range(0.0..8.0);

    let frames = (0..n)
        .map(|t| {
            let u = t as f64 / (n - 1) as f64;
            let mut f = FrameKeypoints::empty(t);
            let mut put = |j: usize, x: f64, y: f64, rng: &mut ChaCha8Rng| {
                f.body[j] = Keypoint2D::new(x, y, rng.random_range(0.3..1.0));
            };
            let sway = (u * 3.0).sin() * 3.0;
            let (nx, ny) = (neck.0 + sway, neck.1);
            put(1, nx, ny, &mut rng);
            put(0, nx + 2.0, ny - 0.9 * half, &mut rng);
            put(2, nx - half, ny + tilt, &mut rng);
            put(5, nx + half, ny - tilt, &mut rng);
            put(8, nx, ny + 2.5 * half, &mut rng);
            put(15, nx - 0.2 * half, ny - 1.1 * half, &mut rng);
            put(16, nx + 0.2 * half, ny - 1.1 * half, &mut rng);
            let wave = |amp: f64| {
                (
                    amp * (TAU * fa * u + pa).sin(),
                    amp * (TAU * fb * u + pb).cos(),
                )
            };
            let (ra, la) = if left_dominant {
                (passive, active)
            } else {
                (active, passive)
            };
            let (rdx, rdy) = wave(ra);
            let (ldx, ldy) = wave(la);
            let rw = (nx - 1.2 * half + rdx, ny + 1.5 * half + rdy);
            let lw = (nx + 1.2 * half - ldx, ny + 1.5 * half + ldy);
            put(
                3,
                (nx - half + rw.0) / 2.0 - 10.0,
                (ny + rw.1) / 2.0 + 15.0,
                &mut rng,
            );
            put(4, rw.0, rw.1, &mut rng);
            put(
                6,
                (nx + half + lw.0) / 2.0 + 10.0,
                (ny + lw.1) / 2.0 + 15.0,
                &mut rng,
            );
            put(7, lw.0, lw.1, &mut rng);
            for i in 0..HAND_JOINTS {
                let spread = i as f64 * 1.5;
                f.right_hand[i] = Keypoint2D::new(
                    rw.0 - spread,
                    rw.1 + spread * 0.5,
                    rng.random_range(0.2..1.0),
                );
                f.left_hand[i] = Keypoint2D::new(
                    lw.0 + spread,
                    lw.1 + spread * 0.5,
                    rng.random_range(0.2..1.0),
                );
            }
            // Sporadic detection gaps, never in the anchors needed per frame.
            for j in [0usize, 3, 4, 6, 7, 15, 16] {
                if rng.random_bool(0.08) {
                    f.body[j] = Keypoint2D::undetected();
                }
            }
            for i in 0..HAND_JOINTS {
                if rng.random_bool(0.1) {
                    f.right_hand[i] = Keypoint2D::undetected();
                }
                if rng.random_bool(0.1) {
                    f.left_hand[i] = Keypoint2D::undetected();
                }
            }
            f
        })
        .collect();
    RawSequence::new(frames, format!("gen-{seed}")).unwrap()
}

fn map_detected(seq: &RawSequence<f64>, f: impl Fn(f64, f64) -> (f64, f64)) -> RawSequence<f64> {
    let frames = seq
        .frames()
        .iter()
        .map(|fr| {
            let mut out = fr.clone();
            for kp in out.keypoints_mut() {
                if kp.confidence > 0.0 {
                    let (x, y) = f(kp.x, kp.y);
                    kp.x = x;
                    kp.y = y;
                }
            }
            out
        })
        .collect();
    RawSequence::new(frames, seq.source_id.clone()).unwrap()
}

pub fn translate(seq: &RawSequence<f64>, dx: f64, dy: f64) -> RawSequence<f64> {
    map_detected(seq, |x, y| (x + dx, y + dy))
}

pub fn scale(seq: &RawSequence<f64>, s: f64) -> RawSequence<f64> {
    map_detected(seq, |x, y| (x * s, y * s))
}

/// Horizontal image flip about `x = width / 2` with left/right labels
/// exchanged, as a mirrored recording would be annotated.
pub fn flip(seq: &RawSequence<f64>, width: f64) -> RawSequence<f64> {
    let flipped = map_detected(seq, |x, y| (width - x, y));
    let frames = flipped
        .frames()
        .iter()
        .map(|fr| {
            let mut out = fr.clone();
            for (a, b) in BODY_MIRROR_PAIRS {
                out.body.swap(a, b);
            }
            std::mem::swap(&mut out.left_hand, &mut out.right_hand);
            out
        })
        .collect();
    RawSequence::new(frames, seq.source_id.clone()).unwrap()
}
