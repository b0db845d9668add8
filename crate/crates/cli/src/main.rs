use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, ensure, Context, Result};
use clap::{error::ErrorKind, Args, CommandFactory, Parser, Subcommand, ValueEnum};
use signsearch::evaluate::{
    leave_one_out_instance_eval, run_condition_eval, synth_lexicon, ConditionEvalConfig,
    InstanceCurve, SynthConfig, CURVE_HEADER, CURVE_KS, DEFAULT_KS,
};
use signsearch::pose_io::{frame_files_in, load_sequence};
use signsearch::preprocess::{
    DEFAULT_MAX_MISSING_FRACTION, DEFAULT_MEDIAN_RADIUS, DEFAULT_TARGET_LENGTH,
};
use signsearch::{
    build_index, load_index, normalize_pipeline, rank, save_index, Backend, DtwParams, EvalReport,
    Index, JointSet, Participant, PreprocessConfig, RankMode, Sign, Umap,
};

/// Sign files hold a one-entry index.
const SIGN_EXT: &str = "sign";

#[derive(Parser)]
#[command(
    name = "signsearch",
    version,
    about = "Search a sign lexicon by example"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize pose recordings: one `gloss__signer` directory of frame
    /// files per sign, one sign file written per directory.
    Ingest {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "arm5")]
        joint_set: JointSet,
        #[command(flatten)]
        preprocess: PreprocessArgs,
    },
    /// Build, extend or inspect a lexicon index.
    Index {
        #[command(subcommand)]
        action: IndexAction,
    },
    /// Rank the lexicon for one query sign.
    Query {
        index: PathBuf,
        sign: PathBuf,
        #[arg(long, default_value_t = 20)]
        k: usize,
        /// List every instance instead of one row per gloss.
        #[arg(long)]
        expanded: bool,
        #[command(flatten)]
        backend: BackendArgs,
    },
    /// Run an evaluation and write CSV.
    Eval(EvalArgs),
}

#[derive(Subcommand)]
enum IndexAction {
    Build {
        /// Sign files, or directories of them.
        #[arg(required = true)]
        signs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "arm5")]
        joint_set: JointSet,
    },
    Add {
        index: PathBuf,
        #[arg(required = true)]
        signs: Vec<PathBuf>,
        /// Destination; defaults to overwriting INDEX.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Info {
        index: PathBuf,
    },
}

#[derive(Args)]
struct PreprocessArgs {
    #[arg(long, default_value_t = DEFAULT_TARGET_LENGTH)]
    target_length: usize,
    #[arg(long, default_value_t = DEFAULT_MEDIAN_RADIUS)]
    median_radius: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_MISSING_FRACTION)]
    max_missing: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendName {
    Dtw,
    Euclidean,
    Pca,
    Umap,
}

#[derive(Args, Clone)]
struct UmapArgs {
    #[arg(long, default_value_t = 15)]
    n_neighbors: usize,
    #[arg(long, default_value_t = 0.1)]
    min_dist: f64,
    #[arg(long, default_value_t = 200)]
    n_epochs: usize,
    #[arg(long, default_value_t = 1.0)]
    learning_rate: f64,
    #[arg(long, default_value_t = 5)]
    negative_samples: usize,
}

#[derive(Args, Clone)]
struct DtwArgs {
    /// Anchor the alignment at the first reference frame.
    #[arg(long)]
    closed_begin: bool,
    /// Anchor the alignment at the last reference frame.
    #[arg(long)]
    closed_end: bool,
    /// Report accumulated cost without dividing by query length.
    #[arg(long)]
    no_normalize: bool,
}

#[derive(Args)]
struct BackendArgs {
    #[arg(long, value_enum, default_value = "dtw")]
    backend: BackendName,
    /// Required for the umap backend.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    dtw: DtwArgs,
    #[command(flatten)]
    umap: UmapArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Experiment {
    /// Top-k accuracy per backend, joint set and k.
    Table,
    /// Accuracy while other participants' signs are added to the lexicon.
    Instances,
    /// Table (and optionally instance curves) on generated data.
    Synth,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, value_enum)]
    experiment: Experiment,
    /// Lexicon index; repeat for several joint sets.
    #[arg(long = "index")]
    indices: Vec<PathBuf>,
    /// Directory of query sign files (from `ingest`).
    #[arg(long)]
    queries: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Required whenever the run involves randomness.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_value = "dtw,euclidean,pca,umap"
    )]
    backends: Vec<BackendName>,
    #[arg(long, value_delimiter = ',')]
    ks: Option<Vec<usize>>,
    /// Add one other participant's signs to the lexicon per participant.
    #[arg(long)]
    noise: bool,
    /// Donor participants for instance curves.
    #[arg(long)]
    donors: Option<usize>,
    /// Instance-curve CSV of a synthetic run with `--donors`.
    #[arg(long)]
    curve_out: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    glosses: usize,
    #[arg(long, default_value_t = 0.1)]
    jitter: f64,
    #[arg(long, default_value_t = 1)]
    lexicon_signers: usize,
    #[arg(long, default_value_t = 3)]
    query_signers: usize,
    #[arg(long = "joint-set", default_values = ["upper29", "arm5", "wrist1"])]
    joint_sets: Vec<JointSet>,
    #[command(flatten)]
    dtw: DtwArgs,
    #[command(flatten)]
    umap: UmapArgs,
}

fn usage_error(msg: impl std::fmt::Display) -> ! {
    Cli::command()
        .error(ErrorKind::MissingRequiredArgument, msg)
        .exit()
}

fn dtw_params(a: &DtwArgs) -> DtwParams {
    DtwParams {
        open_begin: !a.closed_begin,
        open_end: !a.closed_end,
        normalize_by_query_length: !a.no_normalize,
        ..DtwParams::default()
    }
}

fn umap_params(a: &UmapArgs, seed: u64) -> Umap {
    let mut p = Umap::new(seed).with_min_dist(a.min_dist);
    p.n_neighbors = a.n_neighbors;
    p.n_epochs = a.n_epochs;
    p.learning_rate = a.learning_rate;
    p.negative_samples = a.negative_samples;
    p
}

fn make_backend(
    name: BackendName,
    dtw: &DtwArgs,
    umap: &UmapArgs,
    seed: Option<u64>,
) -> Backend<f64> {
    match name {
        BackendName::Dtw => Backend::Dtw(dtw_params(dtw)),
        BackendName::Euclidean => Backend::Euclidean,
        BackendName::Pca => Backend::Pca,
        BackendName::Umap => match seed {
            Some(s) => Backend::Umap(umap_params(umap, s)),
            None => usage_error("the umap backend requires --seed"),
        },
    }
}

/// Writes through a temporary sibling so a failed run leaves no partial file.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("partial");
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))
}

fn read_sign(path: &Path) -> Result<Sign> {
    let idx: Index =
        load_index(path).with_context(|| format!("reading sign {}", path.display()))?;
    ensure!(
        idx.len() == 1,
        "{} holds {} entries, expected one sign",
        path.display(),
        idx.len()
    );
    Ok(idx.entries()[0].to_sign(idx.joint_set()))
}

/// Sign files named directly, or found (sorted) in named directories.
fn sign_paths(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .with_context(|| format!("listing {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == SIGN_EXT))
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    ensure!(!out.is_empty(), "no sign files found");
    Ok(out)
}

fn read_signs(inputs: &[PathBuf]) -> Result<Vec<Sign>> {
    sign_paths(inputs)?.iter().map(|p| read_sign(p)).collect()
}

fn ingest(input: &Path, out: &Path, js: JointSet, pre: &PreprocessArgs) -> Result<ExitCode> {
    let cfg = PreprocessConfig {
        target_length: pre.target_length,
        median_radius: pre.median_radius,
        max_missing_fraction: pre.max_missing,
    };
    cfg.validate()?;
    let mut dirs: Vec<PathBuf> = fs::read_dir(input)
        .with_context(|| format!("listing {}", input.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        bail!("{} contains no sign directories", input.display());
    }
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;

    let mut written = 0;
    for dir in &dirs {
        let name = dir
            .file_name()
            .unwrap_or_default()
            .to_string_lossy()
            .into_owned();
        let result = (|| -> signsearch::Result<()> {
            let (gloss, signer) = name
                .rsplit_once("__")
                .filter(|(g, s)| !g.is_empty() && !s.is_empty())
                .ok_or_else(|| {
                    signsearch::Error::Config("directory name must be gloss__signer".into())
                })?;
            let files = frame_files_in(dir)?;
            let raw = load_sequence::<f64, _>(&files)?;
            let sign = normalize_pipeline(&raw, js, &cfg)?.with_labels(gloss, signer);
            let index = build_index(&[sign], js)?;
            save_index(&index, &out.join(format!("{name}.{SIGN_EXT}")))
        })();
        match result {
            Ok(()) => {
                written += 1;
                println!("ok\t{name}");
            }
            Err(e) => {
                println!("error\t{name}\t{}", e.kind());
                eprintln!("warning: skipped {name}: {e}");
            }
        }
    }
    if written == 0 {
        bail!("no sign could be ingested");
    }
    Ok(ExitCode::SUCCESS)
}

fn index_cmd(action: IndexAction) -> Result<()> {
    match action {
        IndexAction::Build {
            signs,
            out,
            joint_set,
        } => {
            let signs = read_signs(&signs)?;
            let index = build_index(&signs, joint_set)?;
            save_index(&index, &out)?;
            println!("wrote {} entries to {}", index.len(), out.display());
        }
        IndexAction::Add { index, signs, out } => {
            let base: Index = load_index(&index)?;
            let next = base.add_instances(&read_signs(&signs)?)?;
            let dest = out.unwrap_or(index);
            let tmp = dest.with_extension("partial");
            save_index(&next, &tmp)?;
            fs::rename(&tmp, &dest).with_context(|| format!("writing {}", dest.display()))?;
            println!(
                "added {} entries; {} now holds {}",
                next.len() - base.len(),
                dest.display(),
                next.len()
            );
        }
        IndexAction::Info { index } => {
            let idx: Index = load_index(&index)?;
            println!("format_version\t{}", idx.format_version());
            println!("joint_set\t{}", idx.joint_set());
            println!("target_length\t{}", idx.target_length());
            println!("entries\t{}", idx.len());
            println!("glosses\t{}", idx.glosses().len());
            println!("signers\t{}", idx.signers().len());
        }
    }
    Ok(())
}

fn query(index: &Path, sign: &Path, k: usize, expanded: bool, b: &BackendArgs) -> Result<()> {
    let backend = make_backend(b.backend, &b.dtw, &b.umap, b.seed);
    ensure!(k >= 1, "--k must be at least 1");
    let idx: Index = load_index(index)?;
    let q = read_sign(sign)?;
    let mode = if expanded {
        RankMode::Expanded
    } else {
        RankMode::Collapsed
    };
    let ranked = rank(&q, &idx, &backend, mode)?;
    for (i, item) in ranked.items.iter().take(k).enumerate() {
        if expanded {
            println!(
                "{}\t{}\t{}\t{}\t{:.6}",
                i + 1,
                item.gloss,
                item.signer,
                item.instance,
                item.distance
            );
        } else {
            println!("{}\t{}\t{:.6}", i + 1, item.gloss, item.distance);
        }
    }
    Ok(())
}

fn require_seed(seed: Option<u64>, why: &str) -> u64 {
    seed.unwrap_or_else(|| usage_error(format!("--seed is required {why}")))
}

fn eval(a: &EvalArgs) -> Result<()> {
    let uses_umap = a.backends.contains(&BackendName::Umap);
    let backends: Vec<Backend<f64>> = {
        let mut names = a.backends.clone();
        names.dedup();
        names
            .iter()
            .map(|&n| make_backend(n, &a.dtw, &a.umap, a.seed))
            .collect()
    };
    let csv = match a.experiment {
        Experiment::Table => {
            if a.noise {
                require_seed(a.seed, "with --noise");
            }
            if uses_umap {
                require_seed(a.seed, "for the umap backend");
            }
            let ks = a.ks.clone().unwrap_or_else(|| DEFAULT_KS.to_vec());
            let (indices, signs) = eval_inputs(a)?;
            let mut report = EvalReport::default();
            for idx in &indices {
                let parts = participants_for(&signs, idx.joint_set())?;
                let cfg = ConditionEvalConfig {
                    ks: ks.clone(),
                    noise_seed: a.noise.then(|| a.seed.expect("checked above")),
                };
                report.merge(run_condition_eval(&parts, idx, &backends, &cfg)?);
            }
            report.to_csv()
        }
        Experiment::Instances => {
            let seed = require_seed(a.seed, "for the donor order");
            let ks = a.ks.clone().unwrap_or_else(|| CURVE_KS.to_vec());
            let (indices, signs) = eval_inputs(a)?;
            let mut out = format!("{CURVE_HEADER}\n");
            for idx in &indices {
                let parts = participants_for(&signs, idx.joint_set())?;
                let donors = a.donors.unwrap_or(parts.len().saturating_sub(1));
                for b in &backends {
                    leave_one_out_instance_eval(&parts, idx, donors, b, &ks, seed)?
                        .write_rows(&mut out);
                }
            }
            out
        }
        Experiment::Synth => {
            let seed = require_seed(a.seed, "for synthetic data");
            let ks = a.ks.clone().unwrap_or_else(|| DEFAULT_KS.to_vec());
            let mut report = EvalReport::default();
            let mut curves: Vec<InstanceCurve> = Vec::new();
            if a.donors.is_some() && a.curve_out.is_none() {
                usage_error("--donors with the synth experiment requires --curve-out");
            }
            for &js in &a.joint_sets {
                let mut cfg = SynthConfig::new(a.glosses, seed);
                cfg.jitter = a.jitter;
                cfg.lexicon_signers = a.lexicon_signers;
                cfg.query_signers = a.query_signers;
                cfg.donor_signers = a.donors.unwrap_or(0);
                cfg.joint_set = js;
                let data = synth_lexicon::<f64>(&cfg)?;
                let idx = build_index(&data.lexicon, js)?;
                let eval_cfg = ConditionEvalConfig {
                    ks: ks.clone(),
                    noise_seed: a.noise.then_some(seed),
                };
                report.merge(run_condition_eval(
                    &data.queries,
                    &idx,
                    &backends,
                    &eval_cfg,
                )?);
                if a.donors.is_some_and(|d| d > 0) {
                    for b in &backends {
                        curves.push(signsearch::evaluate::incremental_instance_eval(
                            &data.queries,
                            &idx,
                            &data.donors,
                            b,
                            &CURVE_KS,
                            seed,
                        )?);
                    }
                }
            }
            if let Some(path) = &a.curve_out {
                let mut out = format!("{CURVE_HEADER}\n");
                curves.iter().for_each(|c| c.write_rows(&mut out));
                write_atomic(path, &out)?;
            }
            // Every synthetic cell depends on the data seed.
            for cell in &mut report.cells {
                cell.seed.get_or_insert(seed);
            }
            report.to_csv()
        }
    };
    write_atomic(&a.out, &csv)?;
    eprintln!("wrote {}", a.out.display());
    Ok(())
}

fn eval_inputs(a: &EvalArgs) -> Result<(Vec<Index>, Vec<Sign>)> {
    if a.indices.is_empty() {
        usage_error("--index is required for this experiment");
    }
    let Some(queries) = &a.queries else {
        usage_error("--queries is required for this experiment");
    };
    let indices = a
        .indices
        .iter()
        .map(|p| load_index(p).with_context(|| format!("reading index {}", p.display())))
        .collect::<Result<Vec<Index>>>()?;
    Ok((indices, read_signs(std::slice::from_ref(queries))?))
}

fn participants_for(signs: &[Sign], js: JointSet) -> Result<Vec<Participant<f64>>> {
    let matching: Vec<Sign> = signs
        .iter()
        .filter(|s| s.joint_set == js)
        .cloned()
        .collect();
    if matching.is_empty() {
        return Err(anyhow!("no query signs with joint set {js}"));
    }
    Ok(Participant::group(matching))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest {
            input,
            out,
            joint_set,
            preprocess,
        } => ingest(&input, &out, joint_set, &preprocess),
        Command::Index { action } => index_cmd(action).map(|()| ExitCode::SUCCESS),
        Command::Query {
            index,
            sign,
            k,
            expanded,
            backend,
        } => query(&index, &sign, k, expanded, &backend).map(|()| ExitCode::SUCCESS),
        Command::Eval(args) => eval(&args).map(|()| ExitCode::SUCCESS),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
