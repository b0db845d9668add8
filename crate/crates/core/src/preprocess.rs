//! Normalization of raw keypoint sequences into fixed-length, signer-invariant
//! joint trajectories.
//!
//! The pipeline repairs detection gaps, expresses every frame relative to the
//! neck in shoulder-width units, mirrors left-handed signers so the dominant
//! hand always sits in the right-hand slots, selects a joint set, resamples
//! to a common length and median-smooths each coordinate.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::pose_io::{body, FrameKeypoints, Keypoint2D, RawSequence, Slot, HAND_JOINTS};
use crate::scalar::Scalar;
use crate::series::Series;

pub const DEFAULT_TARGET_LENGTH: usize = 86;
pub const DEFAULT_MEDIAN_RADIUS: usize = 3;
pub const DEFAULT_MAX_MISSING_FRACTION: f64 = 0.5;

/// Shoulder distances below this (in input units) are rejected.
const MIN_SHOULDER_DISTANCE: f64 = 1e-6;

/// The eight upper-body joints every joint set is built from.
const UPPER_BODY: [usize; 8] = [
    body::NOSE,
    body::NECK,
    body::R_SHOULDER,
    body::R_ELBOW,
    body::R_WRIST,
    body::L_SHOULDER,
    body::L_ELBOW,
    body::L_WRIST,
];

/// Skeletal condition used to represent a sign. Slots refer to the
/// dominant-hand-right orientation produced by [`mirror`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum JointSet {
    /// Eight upper-body joints plus the 21 dominant-hand finger joints.
    UpperBody29,
    /// Nose, neck, dominant shoulder, elbow and wrist.
    DominantArm5,
    /// Dominant wrist only.
    DominantWrist1,
}

impl JointSet {
    pub const ALL: [JointSet; 3] = [
        JointSet::UpperBody29,
        JointSet::DominantArm5,
        JointSet::DominantWrist1,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            JointSet::UpperBody29 => "upper29",
            JointSet::DominantArm5 => "arm5",
            JointSet::DominantWrist1 => "wrist1",
        }
    }

    pub fn joint_count(&self) -> usize {
        match self {
            JointSet::UpperBody29 => 29,
            JointSet::DominantArm5 => 5,
            JointSet::DominantWrist1 => 1,
        }
    }

    /// Values per frame (x and y for each joint).
    pub fn frame_dim(&self) -> usize {
        2 * self.joint_count()
    }

    pub fn slots(&self) -> Vec<Slot> {
        match self {
            JointSet::UpperBody29 => UPPER_BODY
                .iter()
                .map(|&j| Slot::Body(j))
                .chain((0..HAND_JOINTS).map(Slot::RightHand))
                .collect(),
            JointSet::DominantArm5 => vec![
                Slot::Body(body::NOSE),
                Slot::Body(body::NECK),
                Slot::Body(body::R_SHOULDER),
                Slot::Body(body::R_ELBOW),
                Slot::Body(body::R_WRIST),
            ],
            JointSet::DominantWrist1 => vec![Slot::Body(body::R_WRIST)],
        }
    }
}

impl fmt::Display for JointSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for JointSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "upper29" => Ok(JointSet::UpperBody29),
            "arm5" => Ok(JointSet::DominantArm5),
            "wrist1" => Ok(JointSet::DominantWrist1),
            other => Err(Error::Config(format!(
                "unknown joint set {other:?} (expected upper29, arm5 or wrist1)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Handedness {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreprocessConfig {
    pub target_length: usize,
    pub median_radius: usize,
    pub max_missing_fraction: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            target_length: DEFAULT_TARGET_LENGTH,
            median_radius: DEFAULT_MEDIAN_RADIUS,
            max_missing_fraction: DEFAULT_MAX_MISSING_FRACTION,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.target_length < 2 {
            return Err(Error::Param(format!(
                "target length must be at least 2, got {}",
                self.target_length
            )));
        }
        if !(0.0..=1.0).contains(&self.max_missing_fraction) {
            return Err(Error::Param(format!(
                "max missing fraction must lie in [0, 1], got {}",
                self.max_missing_fraction
            )));
        }
        Ok(())
    }
}

/// A sign as a `frames × joints × 2` trajectory of normalized coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedSign<T> {
    pub series: Series<T>,
    pub joint_set: JointSet,
    pub handedness: Handedness,
    pub gloss: String,
    pub signer: String,
}

impl<T: Scalar> NormalizedSign<T> {
    pub fn new(
        series: Series<T>,
        joint_set: JointSet,
        handedness: Handedness,
        gloss: impl Into<String>,
        signer: impl Into<String>,
    ) -> Result<Self> {
        if series.dim() != joint_set.frame_dim() {
            return Err(Error::Shape(format!(
                "joint set {joint_set} needs {} values per frame, series has {}",
                joint_set.frame_dim(),
                series.dim()
            )));
        }
        if series.is_empty() {
            return Err(Error::EmptySequence("normalized sign has no frames".into()));
        }
        if !series.is_finite() {
            return Err(Error::Shape(
                "normalized sign contains non-finite values".into(),
            ));
        }
        Ok(Self {
            series,
            joint_set,
            handedness,
            gloss: gloss.into(),
            signer: signer.into(),
        })
    }

    pub fn with_labels(mut self, gloss: impl Into<String>, signer: impl Into<String>) -> Self {
        self.gloss = gloss.into();
        self.signer = signer.into();
        self
    }

    pub fn frame_count(&self) -> usize {
        self.series.len()
    }

    /// Coordinate `(x, y)` of joint `j` at frame `t`.
    pub fn joint(&self, t: usize, j: usize) -> (T, T) {
        let f = self.series.frame(t);
        (f[2 * j], f[2 * j + 1])
    }
}

/// Fraction of frames in which `slot` was not detected.
pub fn missing_fraction<T: Scalar>(seq: &RawSequence<T>, slot: Slot) -> f64 {
    let missing = seq
        .frames()
        .iter()
        .filter(|f| !f.get(slot).is_detected())
        .count();
    missing as f64 / seq.len() as f64
}

/// Repairs undetected keypoints by linear interpolation in time between the
/// nearest detected frames, extending the nearest value at the edges.
/// Repaired keypoints get confidence 1.
///
/// Every slot in `required` must be missing in at most `max_missing_fraction`
/// of the frames. Slots never detected and not required stay undetected.
pub fn fill_missing<T: Scalar>(
    seq: &RawSequence<T>,
    max_missing_fraction: f64,
    required: &[Slot],
) -> Result<RawSequence<T>> {
    for &slot in required {
        let fraction = missing_fraction(seq, slot);
        if fraction > max_missing_fraction {
            return Err(Error::TooManyGaps {
                joint: slot.name(),
                fraction,
                limit: max_missing_fraction,
            });
        }
    }

    let mut out = seq.clone();
    for slot in Slot::all() {
        let detected: Vec<usize> = (0..seq.len())
            .filter(|&t| seq.frames()[t].get(slot).is_detected())
            .collect();
        if detected.is_empty() || detected.len() == seq.len() {
            continue;
        }
        let frames = seq.frames();
        let mut next = 0usize;
        for t in 0..seq.len() {
            if frames[t].get(slot).is_detected() {
                next += 1;
                continue;
            }
            // `detected[next]` is the first detected frame after t, if any.
            let after = detected.get(next).copied();
            let before = next.checked_sub(1).map(|i| detected[i]);
            let repaired = match (before, after) {
                (Some(a), Some(b)) => {
                    let ka = frames[a].get(slot);
                    let kb = frames[b].get(slot);
                    let ta = T::from_count(frames[a].frame_index);
                    let tb = T::from_count(frames[b].frame_index);
                    let w = (T::from_count(frames[t].frame_index) - ta) / (tb - ta);
                    Keypoint2D::new(ka.x + (kb.x - ka.x) * w, ka.y + (kb.y - ka.y) * w, T::one())
                }
                (Some(a), None) => {
                    let k = frames[a].get(slot);
                    Keypoint2D::new(k.x, k.y, T::one())
                }
                (None, Some(b)) => {
                    let k = frames[b].get(slot);
                    Keypoint2D::new(k.x, k.y, T::one())
                }
                (None, None) => unreachable!("slot has at least one detection"),
            };
            *out.frames_mut()[t].get_mut(slot) = repaired;
        }
    }
    Ok(out)
}

/// Re-expresses a frame relative to the neck, in units of the frame's own
/// shoulder distance. Undetected keypoints map to the origin with zero
/// confidence.
pub fn center_scale<T: Scalar>(frame: &FrameKeypoints<T>) -> Result<FrameKeypoints<T>> {
    let neck = frame.body[body::NECK];
    let ls = frame.body[body::L_SHOULDER];
    let rs = frame.body[body::R_SHOULDER];
    if !(neck.is_detected() && ls.is_detected() && rs.is_detected()) {
        return Err(Error::DegenerateSkeleton {
            frame: frame.frame_index,
            reason: "neck or shoulders undetected".into(),
        });
    }
    let scale = (ls.x - rs.x).hypot(ls.y - rs.y);
    if scale.is_nan() || scale < T::lit(MIN_SHOULDER_DISTANCE) {
        return Err(Error::DegenerateSkeleton {
            frame: frame.frame_index,
            reason: format!("shoulder distance {scale} below {MIN_SHOULDER_DISTANCE}"),
        });
    }
    let mut out = frame.clone();
    for kp in out.keypoints_mut() {
        *kp = if kp.is_detected() {
            Keypoint2D::new(
                (kp.x - neck.x) / scale,
                (kp.y - neck.y) / scale,
                kp.confidence,
            )
        } else {
            Keypoint2D::undetected()
        };
    }
    Ok(out)
}

fn mean_speed<T: Scalar>(seq: &RawSequence<T>, slot: Slot) -> T {
    let frames = seq.frames();
    if frames.len() < 2 {
        return T::zero();
    }
    let total: T = frames
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0].get(slot), w[1].get(slot));
            (b.x - a.x).hypot(b.y - a.y)
        })
        .sum();
    total / T::from_count(frames.len() - 1)
}

/// The hand whose wrist moves more on average per frame. Ties go to the right
/// hand.
pub fn detect_handedness<T: Scalar>(seq: &RawSequence<T>) -> Handedness {
    let right = mean_speed(seq, Slot::Body(body::R_WRIST));
    let left = mean_speed(seq, Slot::Body(body::L_WRIST));
    if left > right {
        Handedness::Left
    } else {
        Handedness::Right
    }
}

fn mirror_frame<T: Scalar>(frame: &FrameKeypoints<T>) -> FrameKeypoints<T> {
    let mut out = frame.clone();
    for &(r, l) in &body::MIRROR_PAIRS {
        out.body.swap(r, l);
    }
    std::mem::swap(&mut out.left_hand, &mut out.right_hand);
    for kp in out.keypoints_mut() {
        kp.x = -kp.x;
    }
    out
}

/// Horizontal flip about `x = 0` with left/right joint labels swapped.
/// Expects neck-centered coordinates.
pub fn mirror<T: Scalar>(seq: &RawSequence<T>) -> RawSequence<T> {
    seq.map_frames(|f| Ok(mirror_frame(f)))
        .expect("mirroring cannot fail")
}

/// Linear resampling to `target` frames; output frame `i` samples source
/// position `i·(N−1)/(target−1)`.
pub fn resample<T: Scalar>(series: &Series<T>, target: usize) -> Result<Series<T>> {
    let n = series.len();
    if n < 2 {
        return Err(Error::EmptySequence(format!(
            "resampling needs at least 2 frames, got {n}"
        )));
    }
    if target < 2 {
        return Err(Error::Param(format!(
            "resample target must be at least 2, got {target}"
        )));
    }
    let dim = series.dim();
    let span = T::from_count(n - 1);
    let steps = T::from_count(target - 1);
    let mut data = Vec::with_capacity(target * dim);
    for i in 0..target {
        let pos = T::from_count(i) * span / steps;
        let lo = pos.floor().to_usize().unwrap_or(0).min(n - 2);
        let frac = pos - T::from_count(lo);
        let (a, b) = (series.frame(lo), series.frame(lo + 1));
        data.extend(a.iter().zip(b).map(|(&a, &b)| a + (b - a) * frac));
    }
    Series::new(dim, data)
}

/// Running median over `[t − radius, t + radius]` per coordinate, replicating
/// the edge frames.
pub fn median_smooth<T: Scalar>(series: &Series<T>, radius: usize) -> Series<T> {
    if radius == 0 || series.len() <= 1 {
        return series.clone();
    }
    let n = series.len();
    let dim = series.dim();
    let mut out = series.clone();
    let mut window = Vec::with_capacity(2 * radius + 1);
    for d in 0..dim {
        for t in 0..n {
            window.clear();
            for s in t as isize - radius as isize..=(t + radius) as isize {
                let idx = s.clamp(0, n as isize - 1) as usize;
                window.push(series.frame(idx)[d]);
            }
            window.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
            out.frame_mut(t)[d] = window[radius];
        }
    }
    out
}

fn select_joints<T: Scalar>(seq: &RawSequence<T>, js: JointSet) -> Result<Series<T>> {
    let slots = js.slots();
    let mut data = Vec::with_capacity(seq.len() * js.frame_dim());
    for frame in seq.frames() {
        for &slot in &slots {
            let kp = frame.get(slot);
            data.push(kp.x);
            data.push(kp.y);
        }
    }
    Series::new(js.frame_dim(), data)
}

/// Full normalization of a raw sequence. The returned sign has empty gloss and
/// signer labels; see [`NormalizedSign::with_labels`].
pub fn normalize_pipeline<T: Scalar>(
    seq: &RawSequence<T>,
    js: JointSet,
    cfg: &PreprocessConfig,
) -> Result<NormalizedSign<T>> {
    cfg.validate()?;
    let required: Vec<Slot> = UPPER_BODY.iter().map(|&j| Slot::Body(j)).collect();
    let filled = fill_missing(seq, cfg.max_missing_fraction, &required)?;
    let centered = filled.map_frames(center_scale)?;
    let handedness = detect_handedness(&centered);

    if js == JointSet::UpperBody29 {
        let hand = |i| match handedness {
            Handedness::Right => Slot::RightHand(i),
            Handedness::Left => Slot::LeftHand(i),
        };
        for slot in (0..HAND_JOINTS).map(hand) {
            let fraction = missing_fraction(seq, slot);
            if fraction > cfg.max_missing_fraction {
                return Err(Error::TooManyGaps {
                    joint: slot.name(),
                    fraction,
                    limit: cfg.max_missing_fraction,
                });
            }
        }
    }

    let oriented = match handedness {
        Handedness::Left => mirror(&centered),
        Handedness::Right => centered,
    };
    let selected = select_joints(&oriented, js)?;
    let resampled = resample(&selected, cfg.target_length)?;
    let smoothed = median_smooth(&resampled, cfg.median_radius);
    NormalizedSign::new(smoothed, js, handedness, "", "")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq_from(frames: Vec<FrameKeypoints<f64>>) -> RawSequence<f64> {
        RawSequence::new(frames, "test").unwrap()
    }

    /// Upright skeleton at pixel position, right wrist offset by `rw`, left by `lw`.
    fn skeleton(t: usize, rw: (f64, f64), lw: (f64, f64)) -> FrameKeypoints<f64> {
        let mut f = FrameKeypoints::empty(t);
        let set = |f: &mut FrameKeypoints<f64>, j: usize, x: f64, y: f64| {
            f.body[j] = Keypoint2D::new(x, y, 0.9)
        };
        set(&mut f, body::NOSE, 100.0, 60.0);
        set(&mut f, body::NECK, 100.0, 100.0);
        set(&mut f, body::R_SHOULDER, 80.0, 100.0);
        set(&mut f, body::L_SHOULDER, 120.0, 100.0);
        set(&mut f, body::R_ELBOW, 75.0, 130.0);
        set(&mut f, body::L_ELBOW, 125.0, 130.0);
        set(&mut f, body::R_WRIST, 70.0 + rw.0, 160.0 + rw.1);
        set(&mut f, body::L_WRIST, 130.0 + lw.0, 160.0 + lw.1);
        for i in 0..HAND_JOINTS {
            f.right_hand[i] = Keypoint2D::new(70.0 + rw.0 + i as f64, 165.0 + rw.1, 0.8);
            f.left_hand[i] = Keypoint2D::new(130.0 + lw.0 - i as f64, 165.0 + lw.1, 0.8);
        }
        f
    }

    #[test]
    fn joint_sets_have_documented_sizes() {
        assert_eq!(JointSet::UpperBody29.slots().len(), 29);
        assert_eq!(JointSet::DominantArm5.slots().len(), 5);
        assert_eq!(JointSet::DominantWrist1.slots().len(), 1);
        for js in JointSet::ALL {
            assert_eq!(js.id().parse::<JointSet>().unwrap(), js);
        }
        assert!("hand".parse::<JointSet>().is_err());
    }

    #[test]
    fn fill_missing_interpolates_midpoint() {
        let mut frames: Vec<_> = (0..3)
            .map(|t| skeleton(t, (0.0, 0.0), (0.0, 0.0)))
            .collect();
        frames[0].body[0] = Keypoint2D::new(0.0, 0.0, 1.0);
        frames[1].body[0] = Keypoint2D::undetected();
        frames[2].body[0] = Keypoint2D::new(2.0, 2.0, 1.0);
        let out = fill_missing(&seq_from(frames), 0.5, &[]).unwrap();
        assert_eq!(out.frames()[1].body[0], Keypoint2D::new(1.0, 1.0, 1.0));
    }

    #[test]
    fn fill_missing_extends_edges() {
        let mut frames: Vec<_> = (0..2)
            .map(|t| skeleton(t, (0.0, 0.0), (0.0, 0.0)))
            .collect();
        frames[0].body[0] = Keypoint2D::undetected();
        frames[1].body[0] = Keypoint2D::new(5.0, 5.0, 0.7);
        let out = fill_missing(&seq_from(frames), 0.5, &[]).unwrap();
        assert_eq!(out.frames()[0].body[0], Keypoint2D::new(5.0, 5.0, 1.0));
    }

    #[test]
    fn fill_missing_rejects_sparse_required_joint() {
        let mut frames: Vec<_> = (0..10)
            .map(|t| skeleton(t, (0.0, 0.0), (0.0, 0.0)))
            .collect();
        for f in frames.iter_mut().take(6) {
            f.body[body::NECK] = Keypoint2D::undetected();
        }
        let r = fill_missing(&seq_from(frames), 0.5, &[Slot::Body(body::NECK)]);
        assert!(matches!(r, Err(Error::TooManyGaps { .. })));
    }

    #[test]
    fn center_scale_examples() {
        let mut f = skeleton(0, (0.0, 0.0), (0.0, 0.0));
        f.body[9] = Keypoint2D::new(100.0, 140.0, 0.5);
        let out = center_scale(&f).unwrap();
        assert_eq!((out.body[9].x, out.body[9].y), (0.0, 1.0));
        assert_eq!((out.body[body::NECK].x, out.body[body::NECK].y), (0.0, 0.0));

        f.body[body::L_SHOULDER] = f.body[body::R_SHOULDER];
        assert!(matches!(
            center_scale(&f),
            Err(Error::DegenerateSkeleton { .. })
        ));
    }

    fn wrist_path(right: &[(f64, f64)], left: &[(f64, f64)]) -> RawSequence<f64> {
        let frames = right
            .iter()
            .zip(left)
            .enumerate()
            .map(|(t, (&r, &l))| {
                let mut f = FrameKeypoints::empty(t);
                f.body[body::R_WRIST] = Keypoint2D::new(r.0, r.1, 1.0);
                f.body[body::L_WRIST] = Keypoint2D::new(l.0, l.1, 1.0);
                f
            })
            .collect();
        seq_from(frames)
    }

    #[test]
    fn handedness_from_wrist_speed() {
        let right = [(0.0, 0.0), (1.0, 0.0), (3.0, 0.0)];
        let left = [(0.0, 0.0), (0.0, 0.5), (0.0, 1.0)];
        let seq = wrist_path(&right, &left);
        assert_eq!(detect_handedness(&seq), Handedness::Right);
        assert_eq!(detect_handedness(&mirror(&seq)), Handedness::Left);

        let still = [(1.0, 1.0); 3];
        assert_eq!(
            detect_handedness(&wrist_path(&still, &still)),
            Handedness::Right
        );
    }

    #[test]
    fn mirror_moves_left_wrist_to_right_slot() {
        let mut f = FrameKeypoints::<f64>::empty(0);
        f.body[body::L_WRIST] = Keypoint2D::new(0.5, 1.0, 1.0);
        f.left_hand[3] = Keypoint2D::new(0.25, 2.0, 1.0);
        let seq = seq_from(vec![f]);
        let m = mirror(&seq);
        assert_eq!(
            m.frames()[0].body[body::R_WRIST],
            Keypoint2D::new(-0.5, 1.0, 1.0)
        );
        assert_eq!(
            m.frames()[0].right_hand[3],
            Keypoint2D::new(-0.25, 2.0, 1.0)
        );
        assert_eq!(mirror(&m), seq);
    }

    #[test]
    fn resample_examples() {
        let s = Series::from_frames(&[[0.0, 0.0], [1.0, 1.0]]).unwrap();
        let r = resample(&s, 3).unwrap();
        assert_eq!(r.as_slice(), &[0.0, 0.0, 0.5, 0.5, 1.0, 1.0]);

        let s = Series::scalar(&[3.0, -1.0, 4.0, 1.5, 9.0]);
        assert_eq!(resample(&s, 5).unwrap(), s);

        assert!(matches!(
            resample(&Series::scalar(&[1.0]), 86),
            Err(Error::EmptySequence(_))
        ));
    }

    #[test]
    fn median_examples() {
        let s = Series::scalar(&[0.0, 0.0, 0.0, 9.0, 0.0, 0.0, 0.0]);
        assert_eq!(median_smooth(&s, 1).as_slice(), &[0.0; 7]);
        let c = Series::scalar(&[2.5; 10]);
        assert_eq!(median_smooth(&c, 3), c);
    }

    #[test]
    fn pipeline_shapes_per_joint_set() {
        let frames: Vec<_> = (0..40)
            .map(|t| {
                let p = t as f64 / 5.0;
                skeleton(t, (10.0 * p.sin(), 5.0 * p.cos()), (0.0, 0.0))
            })
            .collect();
        let seq = seq_from(frames);
        for (js, dim) in [
            (JointSet::UpperBody29, 58),
            (JointSet::DominantArm5, 10),
            (JointSet::DominantWrist1, 2),
        ] {
            let sign = normalize_pipeline(&seq, js, &PreprocessConfig::default()).unwrap();
            assert_eq!(sign.frame_count(), 86);
            assert_eq!(sign.series.dim(), dim);
            assert_eq!(sign.handedness, Handedness::Right);
        }
    }

    #[test]
    fn pipeline_left_handed_twin_matches() {
        let frames: Vec<_> = (0..30)
            .map(|t| {
                let p = t as f64 / 4.0;
                skeleton(t, (0.0, 0.0), (8.0 * p.sin(), 6.0 * p.cos()))
            })
            .collect();
        let left = seq_from(frames);
        let cfg = PreprocessConfig::default();
        let centered = left.map_frames(center_scale).unwrap();
        let twin = mirror(&centered);
        for js in JointSet::ALL {
            let a = normalize_pipeline(&left, js, &cfg).unwrap();
            let b = normalize_pipeline(&twin, js, &cfg).unwrap();
            assert_eq!(a.handedness, Handedness::Left);
            assert_eq!(b.handedness, Handedness::Right);
            assert_eq!(a.series, b.series);
        }
    }

    #[test]
    fn pipeline_fixed_point_on_normalized_constant_input() {
        let mut f = FrameKeypoints::<f64>::empty(0);
        f.body[body::NECK] = Keypoint2D::new(0.0, 0.0, 1.0);
        f.body[body::R_SHOULDER] = Keypoint2D::new(-0.5, 0.0, 1.0);
        f.body[body::L_SHOULDER] = Keypoint2D::new(0.5, 0.0, 1.0);
        f.body[body::NOSE] = Keypoint2D::new(0.0, -1.0, 1.0);
        f.body[body::R_ELBOW] = Keypoint2D::new(-0.6, 0.8, 1.0);
        f.body[body::R_WRIST] = Keypoint2D::new(-0.7, 1.5, 1.0);
        f.body[body::L_ELBOW] = Keypoint2D::new(0.6, 0.8, 1.0);
        f.body[body::L_WRIST] = Keypoint2D::new(0.7, 1.5, 1.0);
        let frames: Vec<_> = (0..86)
            .map(|t| FrameKeypoints {
                frame_index: t,
                ..f.clone()
            })
            .collect();
        let seq = seq_from(frames);
        let sign =
            normalize_pipeline(&seq, JointSet::DominantArm5, &PreprocessConfig::default()).unwrap();
        let expected = [0.0, -1.0, 0.0, 0.0, -0.5, 0.0, -0.6, 0.8, -0.7, 1.5];
        for frame in sign.series.frames() {
            assert_eq!(frame, &expected);
        }
    }

    #[test]
    fn pipeline_requires_dominant_hand_for_upper_body() {
        let frames: Vec<_> = (0..20)
            .map(|t| {
                let mut f = skeleton(t, (t as f64, 0.0), (0.0, 0.0));
                f.right_hand = [Keypoint2D::undetected(); HAND_JOINTS];
                f
            })
            .collect();
        let seq = seq_from(frames);
        let cfg = PreprocessConfig::default();
        assert!(matches!(
            normalize_pipeline(&seq, JointSet::UpperBody29, &cfg),
            Err(Error::TooManyGaps { .. })
        ));
        assert!(normalize_pipeline(&seq, JointSet::DominantArm5, &cfg).is_ok());
    }

    #[test]
    fn config_validation() {
        let bad = PreprocessConfig {
            target_length: 1,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = PreprocessConfig {
            max_missing_fraction: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn median_is_identity_on_monotone(mut v in prop::collection::vec(-100.0f64..100.0, 1..40), r in 0usize..5) {
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let s = Series::scalar(&v);
            let once = median_smooth(&s, r);
            prop_assert_eq!(&once, &s);
            prop_assert_eq!(median_smooth(&once, r), once);
        }

        #[test]
        fn resample_always_hits_target(v in prop::collection::vec(-10.0f64..10.0, 2..200), target in 2usize..150) {
            let r = resample(&Series::scalar(&v), target).unwrap();
            prop_assert_eq!(r.len(), target);
            prop_assert_eq!(r.as_slice()[0], v[0]);
            prop_assert!((r.as_slice()[target - 1] - v[v.len() - 1]).abs() < 1e-12);
        }
    }
}
