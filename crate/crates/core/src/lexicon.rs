//! Lexicon index: an append-only, snapshot-style collection of normalized
//! signs keyed by gloss, signer and instance ordinal.
//!
//! # File format
//!
//! A text file of tab-separated records. Line 1 is the header
//!
//! ```text
//! SIGNIDX <version> <joint set id> <target length> <entry count>
//! ```
//!
//! and each following line is one entry
//!
//! ```text
//! <gloss> <signer> <instance> <c_1> ... <c_(T·J·2)>
//! ```
//!
//! with coordinates frame-major in scientific notation with 9 significant
//! digits. Coordinates are rounded to that precision when entries are
//! inserted, so saving and loading an index is exact.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::preprocess::{Handedness, JointSet, NormalizedSign};
use crate::scalar::Scalar;
use crate::series::Series;

pub const INDEX_MAGIC: &str = "SIGNIDX";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct LexiconEntry<T> {
    pub gloss: String,
    pub signer: String,
    /// 1-based, per `(gloss, signer)`, assigned at insertion.
    pub instance: u32,
    /// Trajectory in dominant-hand-right orientation.
    pub series: Series<T>,
}

impl<T: Scalar> LexiconEntry<T> {
    pub fn to_sign(&self, joint_set: JointSet) -> NormalizedSign<T> {
        NormalizedSign {
            series: self.series.clone(),
            joint_set,
            handedness: Handedness::Right,
            gloss: self.gloss.clone(),
            signer: self.signer.clone(),
        }
    }
}

/// Immutable snapshot of a lexicon. Adding instances yields a new snapshot
/// that shares the existing entries.
#[derive(Debug, Clone, PartialEq)]
pub struct LexiconIndex<T> {
    entries: Vec<Arc<LexiconEntry<T>>>,
    joint_set: JointSet,
    target_length: usize,
    format_version: u32,
}

/// Rounds to the 9 significant digits stored on disk.
fn canonical<T: Scalar>(v: T) -> T {
    format!("{v:.8e}").parse().unwrap_or(v)
}

fn check_label(what: &str, s: &str) -> Result<()> {
    if s.is_empty() || s.contains(['\t', '\n', '\r']) {
        return Err(Error::Label(format!(
            "{what} {s:?} must be nonempty without tabs or line breaks"
        )));
    }
    Ok(())
}

impl<T: Scalar> LexiconIndex<T> {
    pub fn entries(&self) -> &[Arc<LexiconEntry<T>>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn joint_set(&self) -> JointSet {
        self.joint_set
    }

    pub fn target_length(&self) -> usize {
        self.target_length
    }

    pub fn format_version(&self) -> u32 {
        self.format_version
    }

    /// Unique glosses in first-appearance order.
    pub fn glosses(&self) -> Vec<&str> {
        let mut seen = std::collections::HashSet::new();
        self.entries
            .iter()
            .map(|e| e.gloss.as_str())
            .filter(|g| seen.insert(*g))
            .collect()
    }

    pub fn signers(&self) -> Vec<&str> {
        let mut seen = std::collections::HashSet::new();
        self.entries
            .iter()
            .map(|e| e.signer.as_str())
            .filter(|s| seen.insert(*s))
            .collect()
    }

    /// New snapshot with `signs` appended. `self` is left untouched.
    pub fn add_instances(&self, signs: &[NormalizedSign<T>]) -> Result<Self> {
        let mut next = self.clone();
        next.append(signs)?;
        Ok(next)
    }

    fn append(&mut self, signs: &[NormalizedSign<T>]) -> Result<()> {
        let mut last: HashMap<(String, String), u32> = HashMap::new();
        for e in &self.entries {
            let slot = last.entry((e.gloss.clone(), e.signer.clone())).or_default();
            *slot = (*slot).max(e.instance);
        }
        let mut fresh = Vec::with_capacity(signs.len());
        for s in signs {
            if s.joint_set != self.joint_set {
                return Err(Error::JointSetMismatch {
                    expected: self.joint_set.to_string(),
                    found: s.joint_set.to_string(),
                });
            }
            if s.frame_count() != self.target_length || s.series.dim() != self.joint_set.frame_dim()
            {
                return Err(Error::Shape(format!(
                    "sign {}/{} has {} frames of {} values, index expects {} of {}",
                    s.gloss,
                    s.signer,
                    s.frame_count(),
                    s.series.dim(),
                    self.target_length,
                    self.joint_set.frame_dim()
                )));
            }
            check_label("gloss", &s.gloss)?;
            check_label("signer", &s.signer)?;
            let ordinal = last.entry((s.gloss.clone(), s.signer.clone())).or_default();
            *ordinal += 1;
            let values = s.series.as_slice().iter().map(|&v| canonical(v)).collect();
            fresh.push(Arc::new(LexiconEntry {
                gloss: s.gloss.clone(),
                signer: s.signer.clone(),
                instance: *ordinal,
                series: Series::new(s.series.dim(), values)?,
            }));
        }
        self.entries.extend(fresh);
        Ok(())
    }

    /// Serialized index text.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{INDEX_MAGIC}\t{}\t{}\t{}\t{}",
            self.format_version,
            self.joint_set,
            self.target_length,
            self.entries.len()
        );
        for e in &self.entries {
            let _ = write!(out, "{}\t{}\t{}", e.gloss, e.signer, e.instance);
            for v in e.series.as_slice() {
                let _ = write!(out, "\t{v:.8e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("missing header".into()))?;
        let fields: Vec<&str> = header.split('\t').collect();
        if fields.first() != Some(&INDEX_MAGIC) {
            return Err(Error::Format("bad magic".into()));
        }
        if fields.len() != 5 {
            return Err(Error::Format(format!(
                "header has {} fields, expected 5",
                fields.len()
            )));
        }
        let version: u32 = fields[1]
            .parse()
            .map_err(|_| Error::Format(format!("bad version {:?}", fields[1])))?;
        if version != FORMAT_VERSION {
            return Err(Error::Version {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let joint_set: JointSet = fields[2]
            .parse()
            .map_err(|_| Error::Format(format!("bad joint set {:?}", fields[2])))?;
        let target_length: usize = fields[3]
            .parse()
            .map_err(|_| Error::Format(format!("bad target length {:?}", fields[3])))?;
        let count: usize = fields[4]
            .parse()
            .map_err(|_| Error::Format(format!("bad entry count {:?}", fields[4])))?;

        let dim = joint_set.frame_dim();
        let expected_values = target_length * dim;
        let mut entries = Vec::with_capacity(count);
        for (n, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split('\t');
            let (Some(gloss), Some(signer), Some(instance)) =
                (parts.next(), parts.next(), parts.next())
            else {
                return Err(Error::Format(format!("entry {n} is incomplete")));
            };
            let instance: u32 = instance
                .parse()
                .map_err(|_| Error::Format(format!("entry {n}: bad instance {instance:?}")))?;
            let values = parts
                .map(|v| {
                    v.parse::<T>()
                        .map_err(|_| Error::Format(format!("entry {n}: bad number {v:?}")))
                })
                .collect::<Result<Vec<T>>>()?;
            if values.len() != expected_values {
                return Err(Error::Format(format!(
                    "entry {n} has {} coordinates, expected {expected_values}",
                    values.len()
                )));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Format(format!(
                    "entry {n} has non-finite coordinates"
                )));
            }
            entries.push(Arc::new(LexiconEntry {
                gloss: gloss.to_string(),
                signer: signer.to_string(),
                instance,
                series: Series::new(dim, values)?,
            }));
        }
        if entries.len() != count {
            return Err(Error::Format(format!(
                "header announces {count} entries, found {}",
                entries.len()
            )));
        }
        Ok(Self {
            entries,
            joint_set,
            target_length,
            format_version: version,
        })
    }
}

/// Builds an index from signs in input order.
pub fn build_index<T: Scalar>(
    signs: &[NormalizedSign<T>],
    js: JointSet,
) -> Result<LexiconIndex<T>> {
    let first = signs.first().ok_or(Error::EmptyLexicon)?;
    let mut index = LexiconIndex {
        entries: Vec::with_capacity(signs.len()),
        joint_set: js,
        target_length: first.frame_count(),
        format_version: FORMAT_VERSION,
    };
    index.append(signs)?;
    Ok(index)
}

pub fn save_index<T: Scalar>(index: &LexiconIndex<T>, path: &Path) -> Result<()> {
    fs::write(path, index.to_text()).map_err(|e| Error::io(path, e))
}

pub fn load_index<T: Scalar>(path: &Path) -> Result<LexiconIndex<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    LexiconIndex::from_text(&text)
}
