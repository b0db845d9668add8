//! Seeded synthetic lexicon with known ground truth.
//!
//! Each gloss has a prototype trajectory: per coordinate, an offset plus two
//! sinusoids with random amplitude, frequency and phase. An instance replays
//! the prototype through a random monotone time warp, holds the first and
//! last pose for a random lead-in and lead-out, is resampled to the target
//! length, receives Gaussian jitter proportional to the prototype amplitude
//! and is median-smoothed like the pose pipeline output.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::Participant;
use crate::error::{Error, Result};
use crate::preprocess::{
    median_smooth, resample, Handedness, JointSet, NormalizedSign, DEFAULT_MEDIAN_RADIUS,
    DEFAULT_TARGET_LENGTH,
};
use crate::scalar::Scalar;
use crate::series::Series;

/// Pieces of the time warp; slopes come in pairs `1 ± δ`.
const WARP_PIECES: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_glosses: usize,
    pub lexicon_signers: usize,
    pub query_signers: usize,
    /// Extra signers with the same distribution as the query signers.
    pub donor_signers: usize,
    /// Noise standard deviation relative to the prototype amplitude.
    pub jitter: f64,
    /// Largest local stretch of the time warp, e.g. 0.15 for ±15%.
    pub max_warp: f64,
    /// Largest lead-in and lead-out, each as a fraction of the sign length.
    pub max_padding: f64,
    pub joint_set: JointSet,
    pub target_length: usize,
    pub median_radius: usize,
    pub seed: u64,
}

impl SynthConfig {
    pub fn new(n_glosses: usize, seed: u64) -> Self {
        Self {
            n_glosses,
            lexicon_signers: 1,
            query_signers: 3,
            donor_signers: 0,
            jitter: 0.1,
            max_warp: 0.15,
            max_padding: 0.15,
            joint_set: JointSet::DominantArm5,
            target_length: DEFAULT_TARGET_LENGTH,
            median_radius: DEFAULT_MEDIAN_RADIUS,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_glosses < 2 {
            return Err(Error::Param(format!(
                "need at least 2 glosses, got {}",
                self.n_glosses
            )));
        }
        if self.lexicon_signers == 0 {
            return Err(Error::Param("need at least one lexicon signer".into()));
        }
        if !(self.jitter >= 0.0 && self.jitter.is_finite()) {
            return Err(Error::Param(format!(
                "jitter must be >= 0, got {}",
                self.jitter
            )));
        }
        if !(0.0..1.0).contains(&self.max_warp) {
            return Err(Error::Param(format!(
                "max_warp must lie in [0, 1), got {}",
                self.max_warp
            )));
        }
        if !(0.0..=1.0).contains(&self.max_padding) {
            return Err(Error::Param(format!(
                "max_padding must lie in [0, 1], got {}",
                self.max_padding
            )));
        }
        if self.target_length < 2 {
            return Err(Error::Param("target length must be at least 2".into()));
        }
        Ok(())
    }

    pub fn gloss_name(g: usize) -> String {
        format!("G{g:04}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData<T> {
    /// One instance per gloss and lexicon signer (signers `L00`, `L01`, ...).
    pub lexicon: Vec<NormalizedSign<T>>,
    /// Query participants `P00`, `P01`, ...; each sign's gloss is its
    /// ground-truth label.
    pub queries: Vec<Participant<T>>,
    /// Donor participants `D00`, `D01`, ...
    pub donors: Vec<Participant<T>>,
}

struct Wave {
    offset: f64,
    /// `(amplitude, frequency, phase)` of each sinusoid.
    parts: [(f64, f64, f64); 2],
}

impl Wave {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        let mut part = || {
            (
                rng.random_range(0.2..1.0),
                rng.random_range(0.5..2.5),
                rng.random_range(0.0..TAU),
            )
        };
        let parts = [part(), part()];
        Self {
            offset: rng.random_range(-1.0..1.0),
            parts,
        }
    }

    fn at(&self, u: f64) -> f64 {
        self.offset
            + self
                .parts
                .iter()
                .map(|&(a, f, p)| a * (TAU * f * u + p).sin())
                .sum::<f64>()
    }

    fn amplitude(&self) -> f64 {
        self.parts.iter().map(|p| p.0).sum()
    }
}

/// Monotone piecewise-linear bijection of `[0, 1]`.
struct Warp {
    slopes: [f64; WARP_PIECES],
}

impl Warp {
    fn random(rng: &mut ChaCha8Rng, max_warp: f64) -> Self {
        let mut slopes = [1.0; WARP_PIECES];
        for pair in slopes.chunks_mut(2) {
            let d = if max_warp > 0.0 {
                rng.random_range(-max_warp..=max_warp)
            } else {
                0.0
            };
            pair[0] = 1.0 + d;
            pair[1] = 1.0 - d;
        }
        Self { slopes }
    }

    fn at(&self, u: f64) -> f64 {
        let width = 1.0 / WARP_PIECES as f64;
        let mut acc = 0.0;
        for (i, s) in self.slopes.iter().enumerate() {
            let start = i as f64 * width;
            if u <= start + width || i + 1 == WARP_PIECES {
                return (acc + s * (u - start)).clamp(0.0, 1.0);
            }
            acc += s * width;
        }
        unreachable!()
    }
}

fn instance<T: Scalar>(
    proto: &[Wave],
    rng: &mut ChaCha8Rng,
    cfg: &SynthConfig,
    gloss: String,
    signer: String,
) -> Result<NormalizedSign<T>> {
    let warp = Warp::random(rng, cfg.max_warp);
    let mut pad = || {
        if cfg.max_padding > 0.0 {
            rng.random_range(0.0..=cfg.max_padding)
        } else {
            0.0
        }
    };
    let core = cfg.target_length;
    let lead_in = (pad() * core as f64).round() as usize;
    let lead_out = (pad() * core as f64).round() as usize;
    let dim = proto.len();
    let mut raw = Vec::with_capacity((lead_in + core + lead_out) * dim);
    let positions = std::iter::repeat_n(0.0, lead_in)
        .chain((0..core).map(|t| warp.at(t as f64 / (core - 1) as f64)))
        .chain(std::iter::repeat_n(1.0, lead_out));
    for u in positions {
        raw.extend(proto.iter().map(|w| T::lit(w.at(u))));
    }
    let mut series = resample(&Series::new(dim, raw)?, cfg.target_length)?;
    if cfg.jitter > 0.0 {
        let unit = Normal::new(0.0, 1.0).expect("valid normal");
        for frame in 0..series.len() {
            for (c, w) in proto.iter().enumerate() {
                let noise = unit.sample(rng) * cfg.jitter * w.amplitude();
                series.frame_mut(frame)[c] += T::lit(noise);
            }
        }
    }
    let smoothed = median_smooth(&series, cfg.median_radius);
    NormalizedSign::new(smoothed, cfg.joint_set, Handedness::Right, gloss, signer)
}

/// Generates the lexicon, query and donor signs of `cfg`. Each
/// `(signer, gloss)` instance draws from its own random stream, so adding
/// signers never changes existing data.
pub fn synth_lexicon<T: Scalar>(cfg: &SynthConfig) -> Result<SynthData<T>> {
    cfg.validate()?;
    let dim = cfg.joint_set.frame_dim();
    let mut proto_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let protos: Vec<Vec<Wave>> = (0..cfg.n_glosses)
        .map(|_| (0..dim).map(|_| Wave::random(&mut proto_rng)).collect())
        .collect();

    let signer_count = cfg.lexicon_signers + cfg.query_signers + cfg.donor_signers;
    let mut by_signer: Vec<Vec<NormalizedSign<T>>> = Vec::with_capacity(signer_count);
    for s in 0..signer_count {
        let name = if s < cfg.lexicon_signers {
            format!("L{s:02}")
        } else if s < cfg.lexicon_signers + cfg.query_signers {
            format!("P{:02}", s - cfg.lexicon_signers)
        } else {
            format!("D{:02}", s - cfg.lexicon_signers - cfg.query_signers)
        };
        let signs = protos
            .iter()
            .enumerate()
            .map(|(g, proto)| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(1 + (s * cfg.n_glosses + g) as u64);
                instance(
                    proto,
                    &mut rng,
                    cfg,
                    SynthConfig::gloss_name(g),
                    name.clone(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        by_signer.push(signs);
    }

    let mut rest = by_signer.split_off(cfg.lexicon_signers);
    let donors_part = rest.split_off(cfg.query_signers);
    let into_participants = |groups: Vec<Vec<NormalizedSign<T>>>| {
        groups
            .into_iter()
            .map(|signs| Participant {
                signer: signs[0].signer.clone(),
                signs,
            })
            .collect()
    };
    Ok(SynthData {
        lexicon: by_signer.into_iter().flatten().collect(),
        queries: into_participants(rest),
        donors: into_participants(donors_part),
    })
}
