//! Reading per-frame pose-estimation output (one JSON file per video frame)
//! into raw keypoint sequences.
//!
//! Each frame file is a JSON object whose `people` array holds one object per
//! detected person with three flat arrays of interleaved `x, y, confidence`
//! triples: `pose_keypoints_2d` (25 body joints, BODY_25 order),
//! `hand_left_keypoints_2d` and `hand_right_keypoints_2d` (21 joints each).
//! Face and foot data present in the same files is ignored.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const BODY_JOINTS: usize = 25;
pub const HAND_JOINTS: usize = 21;
pub const TOTAL_JOINTS: usize = BODY_JOINTS + 2 * HAND_JOINTS;

/// BODY_25 joint indices used by this crate.
pub mod body {
    pub const NOSE: usize = 0;
    pub const NECK: usize = 1;
    pub const R_SHOULDER: usize = 2;
    pub const R_ELBOW: usize = 3;
    pub const R_WRIST: usize = 4;
    pub const L_SHOULDER: usize = 5;
    pub const L_ELBOW: usize = 6;
    pub const L_WRIST: usize = 7;

    /// Left/right counterpart pairs of the BODY_25 layout.
    pub const MIRROR_PAIRS: [(usize, usize); 11] = [
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

    pub const NAMES: [&str; 25] = [
        "nose",
        "neck",
        "r_shoulder",
        "r_elbow",
        "r_wrist",
        "l_shoulder",
        "l_elbow",
        "l_wrist",
        "mid_hip",
        "r_hip",
        "r_knee",
        "r_ankle",
        "l_hip",
        "l_knee",
        "l_ankle",
        "r_eye",
        "l_eye",
        "r_ear",
        "l_ear",
        "l_big_toe",
        "l_small_toe",
        "l_heel",
        "r_big_toe",
        "r_small_toe",
        "r_heel",
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Keypoint2D<T> {
    pub x: T,
    pub y: T,
    /// In `[0, 1]`; zero means the joint was not detected and `x`, `y` carry
    /// no information.
    pub confidence: T,
}

impl<T: Scalar> Keypoint2D<T> {
    pub fn new(x: T, y: T, confidence: T) -> Self {
        Self { x, y, confidence }
    }

    pub fn undetected() -> Self {
        Self {
            x: T::zero(),
            y: T::zero(),
            confidence: T::zero(),
        }
    }

    #[inline]
    pub fn is_detected(&self) -> bool {
        self.confidence > T::zero()
    }
}

/// Addresses one of the 67 stored keypoints of a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    Body(usize),
    LeftHand(usize),
    RightHand(usize),
}

impl Slot {
    /// Every stored slot: body first, then left hand, then right hand.
    pub fn all() -> impl Iterator<Item = Slot> {
        (0..BODY_JOINTS)
            .map(Slot::Body)
            .chain((0..HAND_JOINTS).map(Slot::LeftHand))
            .chain((0..HAND_JOINTS).map(Slot::RightHand))
    }

    pub fn name(&self) -> String {
        match *self {
            Slot::Body(i) => body::NAMES
                .get(i)
                .map_or_else(|| format!("body{i}"), |s| s.to_string()),
            Slot::LeftHand(i) => format!("l_hand{i}"),
            Slot::RightHand(i) => format!("r_hand{i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameKeypoints<T> {
    pub body: [Keypoint2D<T>; BODY_JOINTS],
    pub left_hand: [Keypoint2D<T>; HAND_JOINTS],
    pub right_hand: [Keypoint2D<T>; HAND_JOINTS],
    pub frame_index: usize,
}

impl<T: Scalar> FrameKeypoints<T> {
    /// A frame where nothing was detected.
    pub fn empty(frame_index: usize) -> Self {
        Self {
            body: [Keypoint2D::undetected(); BODY_JOINTS],
            left_hand: [Keypoint2D::undetected(); HAND_JOINTS],
            right_hand: [Keypoint2D::undetected(); HAND_JOINTS],
            frame_index,
        }
    }

    #[inline]
    pub fn get(&self, slot: Slot) -> &Keypoint2D<T> {
        match slot {
            Slot::Body(i) => &self.body[i],
            Slot::LeftHand(i) => &self.left_hand[i],
            Slot::RightHand(i) => &self.right_hand[i],
        }
    }

    #[inline]
    pub fn get_mut(&mut self, slot: Slot) -> &mut Keypoint2D<T> {
        match slot {
            Slot::Body(i) => &mut self.body[i],
            Slot::LeftHand(i) => &mut self.left_hand[i],
            Slot::RightHand(i) => &mut self.right_hand[i],
        }
    }

    pub fn keypoints_mut(&mut self) -> impl Iterator<Item = &mut Keypoint2D<T>> {
        self.body
            .iter_mut()
            .chain(self.left_hand.iter_mut())
            .chain(self.right_hand.iter_mut())
    }

    pub fn keypoints(&self) -> impl Iterator<Item = &Keypoint2D<T>> {
        self.body
            .iter()
            .chain(self.left_hand.iter())
            .chain(self.right_hand.iter())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawSequence<T> {
    frames: Vec<FrameKeypoints<T>>,
    pub source_id: String,
}

impl<T: Scalar> RawSequence<T> {
    /// Fails unless `frames` is nonempty with strictly increasing frame indices.
    pub fn new(frames: Vec<FrameKeypoints<T>>, source_id: impl Into<String>) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::EmptySequence("sequence has no frames".into()));
        }
        if let Some(w) = frames
            .windows(2)
            .find(|w| w[1].frame_index <= w[0].frame_index)
        {
            return Err(Error::Shape(format!(
                "frame indices not strictly increasing ({} then {})",
                w[0].frame_index, w[1].frame_index
            )));
        }
        Ok(Self {
            frames,
            source_id: source_id.into(),
        })
    }

    pub fn frames(&self) -> &[FrameKeypoints<T>] {
        &self.frames
    }

    /// Mutable access to keypoint values. Frame indices must not be changed
    /// through this handle.
    pub fn frames_mut(&mut self) -> &mut [FrameKeypoints<T>] {
        &mut self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn map_frames<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(&FrameKeypoints<T>) -> Result<FrameKeypoints<T>>,
    {
        let frames = self.frames.iter().map(&mut f).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            frames,
            source_id: self.source_id.clone(),
        })
    }
}

#[derive(Debug, Deserialize, Serialize)]
struct FrameRecord {
    people: Vec<PersonRecord>,
}

#[derive(Debug, Deserialize, Serialize)]
struct PersonRecord {
    pose_keypoints_2d: Vec<f64>,
    hand_left_keypoints_2d: Vec<f64>,
    hand_right_keypoints_2d: Vec<f64>,
}

fn deinterleave<T: Scalar, const N: usize>(
    values: &[f64],
    what: &str,
    allow_empty: bool,
) -> Result<[Keypoint2D<T>; N]> {
    let mut out = [Keypoint2D::undetected(); N];
    if values.is_empty() && allow_empty {
        return Ok(out);
    }
    if values.len() != 3 * N {
        return Err(Error::Parse(format!(
            "{what}: expected {} numbers, found {}",
            3 * N,
            values.len()
        )));
    }
    for (kp, triple) in out.iter_mut().zip(values.chunks_exact(3)) {
        let c = triple[2];
        if !(0.0..=1.0).contains(&c) || !triple[0].is_finite() || !triple[1].is_finite() {
            return Err(Error::Parse(format!("{what}: invalid triple {triple:?}")));
        }
        *kp = Keypoint2D::new(T::lit(triple[0]), T::lit(triple[1]), T::lit(c));
    }
    Ok(out)
}

/// Parses one frame record, keeping the first listed person.
///
/// Hand arrays may be empty (hand detection disabled), in which case the hand
/// is stored as undetected.
pub fn parse_frame<T: Scalar>(text: &str, frame_index: usize) -> Result<FrameKeypoints<T>> {
    let record: FrameRecord =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let person = record.people.first().ok_or(Error::EmptyFrame)?;
    Ok(FrameKeypoints {
        body: deinterleave(&person.pose_keypoints_2d, "pose_keypoints_2d", false)?,
        left_hand: deinterleave(
            &person.hand_left_keypoints_2d,
            "hand_left_keypoints_2d",
            true,
        )?,
        right_hand: deinterleave(
            &person.hand_right_keypoints_2d,
            "hand_right_keypoints_2d",
            true,
        )?,
        frame_index,
    })
}

/// Serializes a frame back into the single-person frame record schema.
pub fn frame_to_json<T: Scalar>(frame: &FrameKeypoints<T>) -> String {
    fn flat<T: Scalar>(kps: &[Keypoint2D<T>]) -> Vec<f64> {
        kps.iter()
            .flat_map(|k| [k.x.as_f64(), k.y.as_f64(), k.confidence.as_f64()])
            .collect()
    }
    let record = FrameRecord {
        people: vec![PersonRecord {
            pose_keypoints_2d: flat(&frame.body),
            hand_left_keypoints_2d: flat(&frame.left_hand),
            hand_right_keypoints_2d: flat(&frame.right_hand),
        }],
    };
    serde_json::to_string(&record).expect("frame record serializes")
}

/// Loads an ordered list of frame files into a raw sequence.
///
/// Frames in which nobody was detected become all-undetected gap frames, to
/// be repaired during preprocessing. Malformed files abort the load.
pub fn load_sequence<T: Scalar, P: AsRef<Path>>(frame_files: &[P]) -> Result<RawSequence<T>> {
    let mut frames = Vec::with_capacity(frame_files.len());
    let mut detected = 0usize;
    for (i, path) in frame_files.iter().enumerate() {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        match parse_frame(&text, i) {
            Ok(frame) => {
                detected += 1;
                frames.push(frame);
            }
            Err(Error::EmptyFrame) => frames.push(FrameKeypoints::empty(i)),
            Err(Error::Parse(msg)) => {
                return Err(Error::Parse(format!("{}: {msg}", path.display())))
            }
            Err(e) => return Err(e),
        }
    }
    if detected == 0 {
        return Err(Error::EmptySequence(format!(
            "none of {} frame files contained a person",
            frame_files.len()
        )));
    }
    let source_id = frame_files
        .first()
        .and_then(|p| p.as_ref().parent())
        .and_then(|p| p.file_name())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    RawSequence::new(frames, source_id)
}

/// Frame files (`*.json`) of one sign directory, sorted by file name.
pub fn frame_files_in(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|ext| ext == "json"))
        .collect::<Vec<_>>();
    files.sort();
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn person_json(offset: f64) -> String {
        let pose: Vec<String> = (0..BODY_JOINTS)
            .flat_map(|j| {
                [
                    format!("{}", offset + j as f64),
                    format!("{}", 50.0 + j as f64),
                    "0.9".to_string(),
                ]
            })
            .collect();
        let hand: Vec<String> = (0..HAND_JOINTS)
            .flat_map(|j| [format!("{}", j), format!("{}", j), "0.5".to_string()])
            .collect();
        format!(
            r#"{{"pose_keypoints_2d":[{}],"face_keypoints_2d":[1,2,3],"hand_left_keypoints_2d":[{}],"hand_right_keypoints_2d":[{}]}}"#,
            pose.join(","),
            hand.join(","),
            hand.join(",")
        )
    }

    fn frame_json(people: &[String]) -> String {
        format!(r#"{{"version":1.3,"people":[{}]}}"#, people.join(","))
    }

    #[test]
    fn deinterleaves_first_body_triple() {
        let f: FrameKeypoints<f64> = parse_frame(&frame_json(&[person_json(100.0)]), 3).unwrap();
        assert_eq!(f.body[0], Keypoint2D::new(100.0, 50.0, 0.9));
        assert_eq!(f.body[24], Keypoint2D::new(124.0, 74.0, 0.9));
        assert_eq!(f.right_hand[20], Keypoint2D::new(20.0, 20.0, 0.5));
        assert_eq!(f.frame_index, 3);
    }

    #[test]
    fn no_people_is_empty_frame() {
        let r = parse_frame::<f64>(r#"{"people": []}"#, 0);
        assert!(matches!(r, Err(Error::EmptyFrame)));
    }

    #[test]
    fn keeps_first_person_only() {
        let text = frame_json(&[person_json(100.0), person_json(500.0)]);
        let f: FrameKeypoints<f64> = parse_frame(&text, 0).unwrap();
        assert_eq!(f.body[0].x, 100.0);
    }

    #[test]
    fn malformed_inputs_are_parse_errors() {
        assert!(matches!(
            parse_frame::<f64>("{not json", 0),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            parse_frame::<f64>(
                r#"{"people":[{"pose_keypoints_2d":[1,2,0.5],"hand_left_keypoints_2d":[],"hand_right_keypoints_2d":[]}]}"#,
                0
            ),
            Err(Error::Parse(_))
        ));
        let bad_conf = frame_json(&[person_json(0.0).replacen("0.9", "1.5", 1)]);
        assert!(matches!(
            parse_frame::<f64>(&bad_conf, 0),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn empty_hand_arrays_are_undetected() {
        let pose = vec!["1"; 75].join(",");
        let text = format!(
            r#"{{"people":[{{"pose_keypoints_2d":[{pose}],"hand_left_keypoints_2d":[],"hand_right_keypoints_2d":[]}}]}}"#
        );
        let f: FrameKeypoints<f32> = parse_frame(&text, 0).unwrap();
        assert!(f.left_hand.iter().all(|k| !k.is_detected()));
    }

    #[test]
    fn json_round_trip() {
        let f: FrameKeypoints<f64> = parse_frame(&frame_json(&[person_json(12.25)]), 7).unwrap();
        let back: FrameKeypoints<f64> = parse_frame(&frame_to_json(&f), 7).unwrap();
        assert_eq!(f, back);
    }

    #[test]
    fn load_sequence_fills_gap_frames() {
        let dir = tempfile::tempdir().unwrap();
        let mut paths = Vec::new();
        for i in 0..10 {
            let p = dir.path().join(format!("sign_{i:012}_keypoints.json"));
            let text = if i == 5 {
                frame_json(&[])
            } else {
                frame_json(&[person_json(i as f64)])
            };
            fs::write(&p, text).unwrap();
            paths.push(p);
        }
        let seq: RawSequence<f64> = load_sequence(&paths).unwrap();
        assert_eq!(seq.len(), 10);
        assert!(seq.frames()[5].keypoints().all(|k| !k.is_detected()));
        assert!(seq.frames()[4].body[0].is_detected());
        assert_eq!(frame_files_in(dir.path()).unwrap(), paths);
    }

    #[test]
    fn load_sequence_rejects_empty_input() {
        let none: [&Path; 0] = [];
        assert!(matches!(
            load_sequence::<f64, _>(&none),
            Err(Error::EmptySequence(_))
        ));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.json");
        fs::write(&p, frame_json(&[])).unwrap();
        assert!(matches!(
            load_sequence::<f64, _>(&[p]),
            Err(Error::EmptySequence(_))
        ));
    }

    #[test]
    fn raw_sequence_requires_increasing_indices() {
        let frames = vec![FrameKeypoints::<f64>::empty(1), FrameKeypoints::empty(1)];
        assert!(RawSequence::new(frames, "x").is_err());
        assert!(RawSequence::<f64>::new(vec![], "x").is_err());
    }
}
