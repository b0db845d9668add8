//! Ranking, top-k accuracy and the retrieval experiments.

mod synth;

use std::collections::{BTreeMap, HashSet};
use std::fmt::{self, Write as _};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use synth::{synth_lexicon, SynthConfig, SynthData};

use crate::distance::{DtwParams, SequenceMetric};
use crate::embedding::{embedded_distance_matrix, pca_embed, umap_embed, UmapParams};
use crate::error::{Error, Result};
use crate::lexicon::LexiconIndex;
use crate::preprocess::{JointSet, NormalizedSign};
use crate::scalar::Scalar;

/// The ks reported by default.
pub const DEFAULT_KS: [usize; 4] = [1, 10, 20, 50];
/// The ks of instance curves.
pub const CURVE_KS: [usize; 2] = [1, 10];

pub const REPORT_HEADER: &str = "backend,joint_set,k,accuracy,lexicon_size,seed";
pub const CURVE_HEADER: &str = "backend,joint_set,k,added_participants,accuracy,lexicon_size,seed";

/// How distances between a query and lexicon entries are obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum Backend<T> {
    Dtw(DtwParams),
    /// Euclidean distance between flattened trajectories.
    Euclidean,
    /// Planar PCA embedding fitted jointly on lexicon and queries.
    Pca,
    /// Planar UMAP embedding fitted jointly on lexicon and queries.
    Umap(UmapParams<T>),
}

impl<T> Backend<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Backend::Dtw(_) => "dtw",
            Backend::Euclidean => "euclidean",
            Backend::Pca => "pca",
            Backend::Umap(_) => "umap",
        }
    }

    /// Seed of the backend's own randomness, if any.
    pub fn seed(&self) -> Option<u64> {
        match self {
            Backend::Umap(p) => Some(p.seed),
            _ => None,
        }
    }
}

impl<T> fmt::Display for Backend<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RankMode {
    /// One row per gloss at its minimum distance over instances.
    #[default]
    Collapsed,
    /// One row per lexicon entry.
    Expanded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedItem<T> {
    pub gloss: String,
    pub signer: String,
    pub instance: u32,
    pub distance: T,
}

impl<T: Scalar> RankedItem<T> {
    fn order(&self, other: &Self) -> std::cmp::Ordering {
        self.distance
            .partial_cmp(&other.distance)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| self.gloss.cmp(&other.gloss))
            .then_with(|| self.signer.cmp(&other.signer))
            .then_with(|| self.instance.cmp(&other.instance))
    }
}

/// Lexicon entries by ascending distance, ties broken by
/// `(gloss, signer, instance)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList<T> {
    pub mode: RankMode,
    pub items: Vec<RankedItem<T>>,
}

impl<T: Scalar> RankedList<T> {
    fn build(mut items: Vec<RankedItem<T>>, mode: RankMode) -> Self {
        items.sort_by(RankedItem::order);
        if mode == RankMode::Collapsed {
            let mut seen = HashSet::new();
            items.retain(|it| seen.insert(it.gloss.clone()));
        }
        Self { mode, items }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// 1-based position of `gloss` among distinct ranked glosses.
    pub fn gloss_rank(&self, gloss: &str) -> Option<usize> {
        let mut seen = HashSet::new();
        for it in &self.items {
            if seen.insert(it.gloss.as_str()) && it.gloss == gloss {
                return Some(seen.len());
            }
        }
        None
    }
}

/// True iff `target` is among the first `k` distinct glosses of `r`.
pub fn topk_hit<T: Scalar>(r: &RankedList<T>, target: &str, k: usize) -> bool {
    r.gloss_rank(target).is_some_and(|pos| pos <= k)
}

fn check_joint_set<T>(index: &LexiconIndex<T>, sign: &NormalizedSign<T>) -> Result<()>
where
    T: Scalar,
{
    if sign.joint_set != index.joint_set() {
        return Err(Error::JointSetMismatch {
            expected: index.joint_set().to_string(),
            found: sign.joint_set.to_string(),
        });
    }
    Ok(())
}

/// Distances from every query to every index entry.
fn distance_rows<T: Scalar>(
    queries: &[NormalizedSign<T>],
    index: &LexiconIndex<T>,
    backend: &Backend<T>,
) -> Result<Vec<Vec<T>>> {
    if index.is_empty() {
        return Err(Error::EmptyLexicon);
    }
    for q in queries {
        check_joint_set(index, q)?;
    }
    let entries = index.entries();
    let metric = match backend {
        Backend::Dtw(p) => Some(SequenceMetric::Elastic(*p)),
        Backend::Euclidean => Some(SequenceMetric::Flat),
        _ => None,
    };
    if let Some(metric) = metric {
        return queries
            .par_iter()
            .map(|q| {
                entries
                    .iter()
                    .map(|e| metric.distance(&q.series, &e.series))
                    .collect()
            })
            .collect();
    }

    if let Backend::Umap(p) = backend {
        if index.len() < p.n_neighbors + 1 {
            return Err(Error::Param(format!(
                "UMAP with {} neighbors needs at least {} lexicon entries, index has {}",
                p.n_neighbors,
                p.n_neighbors + 1,
                index.len()
            )));
        }
    }
    // Tabs cannot occur in glosses or signers, so the two namespaces and the
    // entry labels are collision-free.
    let ref_labels: Vec<String> = entries
        .iter()
        .map(|e| format!("L\t{}\t{}\t{}", e.gloss, e.signer, e.instance))
        .collect();
    let query_labels: Vec<String> = (0..queries.len()).map(|i| format!("Q\t{i:08}")).collect();
    let data: Vec<Vec<T>> = entries
        .iter()
        .map(|e| e.series.as_slice().to_vec())
        .chain(queries.iter().map(|q| q.series.as_slice().to_vec()))
        .collect();
    let labels: Vec<String> = ref_labels.iter().chain(&query_labels).cloned().collect();
    let set = match backend {
        Backend::Pca => pca_embed(&data, &labels)?,
        Backend::Umap(p) => umap_embed(&data, &labels, p)?,
        _ => unreachable!("sequence backends handled above"),
    };
    let m = embedded_distance_matrix(&set, &query_labels, &ref_labels)?;
    Ok((0..m.rows()).map(|i| m.row(i).to_vec()).collect())
}

/// Ranks the index for each query. Embedding backends fit one joint
/// embedding over the index plus all queries of the batch.
pub fn rank_batch<T: Scalar>(
    queries: &[NormalizedSign<T>],
    index: &LexiconIndex<T>,
    backend: &Backend<T>,
    mode: RankMode,
) -> Result<Vec<RankedList<T>>> {
    let rows = distance_rows(queries, index, backend)?;
    Ok(rows
        .into_iter()
        .map(|row| {
            let items = index
                .entries()
                .iter()
                .zip(row)
                .map(|(e, distance)| RankedItem {
                    gloss: e.gloss.clone(),
                    signer: e.signer.clone(),
                    instance: e.instance,
                    distance,
                })
                .collect();
            RankedList::build(items, mode)
        })
        .collect())
}

pub fn rank<T: Scalar>(
    query: &NormalizedSign<T>,
    index: &LexiconIndex<T>,
    backend: &Backend<T>,
    mode: RankMode,
) -> Result<RankedList<T>> {
    let mut lists = rank_batch(std::slice::from_ref(query), index, backend, mode)?;
    Ok(lists.pop().expect("one list per query"))
}

/// The signs recorded by one participant.
#[derive(Debug, Clone, PartialEq)]
pub struct Participant<T> {
    pub signer: String,
    pub signs: Vec<NormalizedSign<T>>,
}

impl<T: Scalar> Participant<T> {
    /// Groups signs by signer, sorted by signer name.
    pub fn group(signs: Vec<NormalizedSign<T>>) -> Vec<Self> {
        let mut by_signer: BTreeMap<String, Vec<NormalizedSign<T>>> = BTreeMap::new();
        for s in signs {
            by_signer.entry(s.signer.clone()).or_default().push(s);
        }
        by_signer
            .into_iter()
            .map(|(signer, signs)| Participant { signer, signs })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportCell {
    pub backend: String,
    pub joint_set: JointSet,
    pub k: usize,
    pub hits: usize,
    pub total: usize,
    pub lexicon_size: usize,
    pub seed: Option<u64>,
}

impl ReportCell {
    pub fn accuracy(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.hits as f64 / self.total as f64
        }
    }
}

/// Top-k accuracies per backend, joint set and k.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub cells: Vec<ReportCell>,
    /// Seeds, parameters and noise-participant choices.
    pub metadata: BTreeMap<String, String>,
}

impl EvalReport {
    pub fn accuracy(&self, backend: &str, joint_set: JointSet, k: usize) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.backend == backend && c.joint_set == joint_set && c.k == k)
            .map(ReportCell::accuracy)
    }

    pub fn merge(&mut self, other: EvalReport) {
        self.cells.extend(other.cells);
        self.metadata.extend(other.metadata);
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{REPORT_HEADER}\n");
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{:.6},{},{}",
                c.backend,
                c.joint_set,
                c.k,
                c.accuracy(),
                c.lexicon_size,
                seed_field(c.seed)
            );
        }
        out
    }
}

fn seed_field(seed: Option<u64>) -> String {
    seed.map(|s| s.to_string()).unwrap_or_default()
}

fn check_ks(ks: &[usize]) -> Result<()> {
    if ks.is_empty() || ks.contains(&0) {
        return Err(Error::Config(
            "ks must be a nonempty list of positive integers".into(),
        ));
    }
    Ok(())
}

fn check_glosses<T: Scalar>(
    participants: &[Participant<T>],
    index: &LexiconIndex<T>,
) -> Result<()> {
    let known: HashSet<&str> = index.glosses().into_iter().collect();
    for p in participants {
        if let Some(s) = p.signs.iter().find(|s| !known.contains(s.gloss.as_str())) {
            return Err(Error::Config(format!(
                "query gloss {:?} of participant {} is not in the lexicon",
                s.gloss, p.signer
            )));
        }
    }
    Ok(())
}

/// Per-k hit counts of `queries` against `index`.
fn count_hits<T: Scalar>(
    queries: &[NormalizedSign<T>],
    index: &LexiconIndex<T>,
    backend: &Backend<T>,
    ks: &[usize],
) -> Result<Vec<usize>> {
    let lists = rank_batch(queries, index, backend, RankMode::Collapsed)?;
    Ok(ks
        .iter()
        .map(|&k| {
            lists
                .iter()
                .zip(queries)
                .filter(|(l, q)| topk_hit(l, &q.gloss, k))
                .count()
        })
        .collect())
}

/// Options of [`run_condition_eval`].
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionEvalConfig {
    pub ks: Vec<usize>,
    /// When set, each participant is evaluated against the index plus the
    /// signs of one other participant drawn with this seed.
    pub noise_seed: Option<u64>,
}

impl Default for ConditionEvalConfig {
    fn default() -> Self {
        Self {
            ks: DEFAULT_KS.to_vec(),
            noise_seed: None,
        }
    }
}

/// Top-k accuracy of each backend, pooled over all (participant, sign) pairs.
///
/// Participants are evaluated independently (and in parallel); embedding
/// backends fit one joint embedding per participant. With noise injection
/// the reported lexicon size is the largest one used.
pub fn run_condition_eval<T: Scalar>(
    participants: &[Participant<T>],
    index: &LexiconIndex<T>,
    backends: &[Backend<T>],
    cfg: &ConditionEvalConfig,
) -> Result<EvalReport> {
    check_ks(&cfg.ks)?;
    check_glosses(participants, index)?;
    let mut metadata = BTreeMap::new();

    let noise: Vec<Option<usize>> = match cfg.noise_seed {
        None => vec![None; participants.len()],
        Some(seed) => {
            if participants.len() < 2 {
                return Err(Error::Config(
                    "noise injection needs at least two participants".into(),
                ));
            }
            metadata.insert("noise_seed".into(), seed.to_string());
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            participants
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let mut j = rng.random_range(0..participants.len() - 1);
                    if j >= i {
                        j += 1;
                    }
                    metadata.insert(
                        format!("noise.{}", p.signer),
                        participants[j].signer.clone(),
                    );
                    Some(j)
                })
                .collect()
        }
    };
    let indices: Vec<LexiconIndex<T>> = participants
        .iter()
        .zip(&noise)
        .map(|(_, n)| match n {
            Some(j) => index.add_instances(&participants[*j].signs),
            None => Ok(index.clone()),
        })
        .collect::<Result<_>>()?;
    let lexicon_size = indices
        .iter()
        .map(LexiconIndex::len)
        .max()
        .unwrap_or(index.len());
    let total: usize = participants.iter().map(|p| p.signs.len()).sum();

    let mut report = EvalReport {
        cells: Vec::new(),
        metadata,
    };
    for backend in backends {
        if let Backend::Umap(p) = backend {
            report.metadata.insert("umap".into(), p.canonical());
        }
        let per_participant: Vec<Vec<usize>> = participants
            .par_iter()
            .zip(&indices)
            .map(|(p, idx)| count_hits(&p.signs, idx, backend, &cfg.ks))
            .collect::<Result<_>>()?;
        for (ki, &k) in cfg.ks.iter().enumerate() {
            report.cells.push(ReportCell {
                backend: backend.name().to_string(),
                joint_set: index.joint_set(),
                k,
                hits: per_participant.iter().map(|h| h[ki]).sum(),
                total,
                lexicon_size,
                seed: backend.seed().or(cfg.noise_seed),
            });
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub k: usize,
    pub added_participants: usize,
    pub hits: usize,
    pub total: usize,
    pub lexicon_size: usize,
}

impl CurvePoint {
    pub fn accuracy(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.hits as f64 / self.total as f64
        }
    }
}

/// Accuracy as a function of the number of participants whose signs were
/// added to the lexicon.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceCurve {
    pub backend: String,
    pub joint_set: JointSet,
    pub seed: u64,
    /// Ordered by k, then by added participants.
    pub points: Vec<CurvePoint>,
    /// Donor order used; per evaluated participant in leave-one-out runs.
    pub donor_order: Vec<Vec<String>>,
}

impl InstanceCurve {
    /// Accuracy sequence for `k`, indexed by added participants.
    pub fn accuracies(&self, k: usize) -> Vec<f64> {
        self.points
            .iter()
            .filter(|p| p.k == k)
            .map(CurvePoint::accuracy)
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{CURVE_HEADER}\n");
        self.write_rows(&mut out);
        out
    }

    /// Data rows only, for concatenating several curves under one header.
    pub fn write_rows(&self, out: &mut String) {
        for p in &self.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{:.6},{},{}",
                self.backend,
                self.joint_set,
                p.k,
                p.added_participants,
                p.accuracy(),
                p.lexicon_size,
                self.seed
            );
        }
    }
}

/// Hit counts per `(m, k)` when the first `m` of `donors` are appended.
fn curve_hits<T: Scalar>(
    queries: &[NormalizedSign<T>],
    base: &LexiconIndex<T>,
    donors: &[&Participant<T>],
    backend: &Backend<T>,
    ks: &[usize],
) -> Result<Vec<(usize, Vec<usize>)>> {
    let mut snapshots = Vec::with_capacity(donors.len() + 1);
    snapshots.push(base.clone());
    for d in donors {
        let next = snapshots
            .last()
            .expect("nonempty")
            .add_instances(&d.signs)?;
        snapshots.push(next);
    }
    snapshots
        .par_iter()
        .map(|idx| Ok((idx.len(), count_hits(queries, idx, backend, ks)?)))
        .collect()
}

fn assemble_curve(per_m: Vec<(usize, Vec<usize>)>, ks: &[usize], total: usize) -> Vec<CurvePoint> {
    let mut points = Vec::new();
    for (ki, &k) in ks.iter().enumerate() {
        for (m, (size, hits)) in per_m.iter().enumerate() {
            points.push(CurvePoint {
                k,
                added_participants: m,
                hits: hits[ki],
                total,
                lexicon_size: *size,
            });
        }
    }
    points
}

/// Evaluates `participants` while progressively appending the signs of
/// `donors` (in a seeded order) to `base`; point `m` uses the first `m`
/// donors.
pub fn incremental_instance_eval<T: Scalar>(
    participants: &[Participant<T>],
    base: &LexiconIndex<T>,
    donors: &[Participant<T>],
    backend: &Backend<T>,
    ks: &[usize],
    seed: u64,
) -> Result<InstanceCurve> {
    check_ks(ks)?;
    check_glosses(participants, base)?;
    if donors.is_empty() {
        return Err(Error::Config(
            "at least one donor participant is required".into(),
        ));
    }
    let evaluated: HashSet<&str> = participants.iter().map(|p| p.signer.as_str()).collect();
    if let Some(d) = donors
        .iter()
        .find(|d| evaluated.contains(d.signer.as_str()))
    {
        return Err(Error::Config(format!(
            "participant {} cannot be a donor for their own queries",
            d.signer
        )));
    }
    let mut order: Vec<&Participant<T>> = donors.iter().collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let queries: Vec<NormalizedSign<T>> = participants
        .iter()
        .flat_map(|p| p.signs.iter().cloned())
        .collect();
    let per_m = curve_hits(&queries, base, &order, backend, ks)?;
    Ok(InstanceCurve {
        backend: backend.name().to_string(),
        joint_set: base.joint_set(),
        seed,
        points: assemble_curve(per_m, ks, queries.len()),
        donor_order: vec![order.iter().map(|d| d.signer.clone()).collect()],
    })
}

/// Leave-one-out variant: each participant is evaluated with `n_donors` of
/// the other participants as donors, in a seeded order drawn per
/// participant. Hits are pooled; lexicon sizes are the largest per point.
pub fn leave_one_out_instance_eval<T: Scalar>(
    participants: &[Participant<T>],
    base: &LexiconIndex<T>,
    n_donors: usize,
    backend: &Backend<T>,
    ks: &[usize],
    seed: u64,
) -> Result<InstanceCurve> {
    check_ks(ks)?;
    check_glosses(participants, base)?;
    if n_donors == 0 || n_donors >= participants.len() {
        return Err(Error::Config(format!(
            "{n_donors} donors requested but only {} other participants exist",
            participants.len().saturating_sub(1)
        )));
    }
    let mut donor_order = Vec::with_capacity(participants.len());
    let mut pooled: Vec<(usize, Vec<usize>)> = vec![(0, vec![0; ks.len()]); n_donors + 1];
    for (i, p) in participants.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let mut others: Vec<&Participant<T>> = participants
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, o)| o)
            .collect();
        others.shuffle(&mut rng);
        others.truncate(n_donors);
        donor_order.push(others.iter().map(|d| d.signer.clone()).collect());
        for (m, (size, hits)) in curve_hits(&p.signs, base, &others, backend, ks)?
            .into_iter()
            .enumerate()
        {
            pooled[m].0 = pooled[m].0.max(size);
            for (acc, h) in pooled[m].1.iter_mut().zip(hits) {
                *acc += h;
            }
        }
    }
    let total = participants.iter().map(|p| p.signs.len()).sum();
    Ok(InstanceCurve {
        backend: backend.name().to_string(),
        joint_set: base.joint_set(),
        seed,
        points: assemble_curve(pooled, ks, total),
        donor_order,
    })
}
