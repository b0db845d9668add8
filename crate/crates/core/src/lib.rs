//! Training-free sign retrieval over pose-keypoint lexica.
//!
//! Pose frames are parsed ([`pose_io`]), normalized into fixed-length
//! trajectories ([`preprocess`]) and compared with one of four backends:
//! open-begin/open-end DTW or flat Euclidean distance ([`distance`]), or
//! planar PCA/UMAP embeddings ([`embedding`]). Lexica are stored as
//! immutable snapshots ([`lexicon`]); [`evaluate`] ranks and scores them.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix `f64`.

pub mod distance;
pub mod embedding;
pub mod error;
pub mod evaluate;
pub mod lexicon;
pub mod pose_io;
pub mod preprocess;
pub mod scalar;
pub mod series;

pub use distance::{dtw_full, dtw_obe, euclidean_flat, DistanceMatrix, DtwParams, SequenceMetric};
pub use embedding::{EmbeddedSet, EmbeddingMethod, UmapParams};
pub use error::{Error, Result};
pub use evaluate::{
    rank, rank_batch, topk_hit, Backend, EvalReport, InstanceCurve, Participant, RankMode,
    RankedList,
};
pub use lexicon::{build_index, load_index, save_index, LexiconIndex};
pub use pose_io::{load_sequence, parse_frame, FrameKeypoints, Keypoint2D, RawSequence};
pub use preprocess::{normalize_pipeline, Handedness, JointSet, NormalizedSign, PreprocessConfig};
pub use scalar::Scalar;
pub use series::Series;

pub type Sign = NormalizedSign<f64>;
pub type Index = LexiconIndex<f64>;
pub type Sequence = RawSequence<f64>;
pub type Frame = FrameKeypoints<f64>;
pub type Ranking = RankedList<f64>;
pub type Embedding = EmbeddedSet<f64>;
pub type BackendConfig = Backend<f64>;
pub type Umap = UmapParams<f64>;
pub type Trajectory = Series<f64>;
