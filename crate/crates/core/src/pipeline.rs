//! End-to-end orchestration and artifact layout.
//!
//! A run writes, under the output directory:
//!
//! ```text
//! out/
//!   samples.json            shuffle-split plan for every repeat
//!   summary.json            aggregated accuracy and purity
//!   corpus_<r>/             one directory per test corpus
//!     frequencies.csv  zscores.csv  profile.json
//!     distances.csv    merges.csv   dendrogram.nwk
//!     dendrogram.svg   heatmap.svg  report.json
//! ```
//!
//! Every file is written atomically (temp file, then rename) and contains
//! no timestamps, so identical inputs produce identical trees.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::{agglomerate, author_purity, merges_csv, to_newick, Linkage};
use crate::corpus::{self, Corpus};
use crate::delta::delta_matrix;
use crate::error::{Error, Result};
use crate::features::{
    count_features, frequencies_csv, profile, select_mfc, zscores_csv, CorpusProfile,
};
use crate::report::{
    dendrogram_svg, heatmap_svg, nearest_neighbor_eval, table_csv, write_report, Palette, Precision,
};
use crate::sampler::{materialize, shuffle_split_by, write_samples, SampleSet, SplitBy};
use crate::tokenizer::TokenizerConfig;

pub const SUMMARY_FORMAT: &str = "chardelta.summary";
pub const SUMMARY_VERSION: u32 = 1;
pub const PROFILE_FORMAT: &str = "chardelta.profile";
pub const PROFILE_VERSION: u32 = 1;

/// Write `bytes` to `path` via a temp file in the same directory, creating
/// parent directories as needed. A crash leaves either the old file or the
/// new one, never a torn write.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(parent).map_err(|e| Error::write(parent, e))?;
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::Argument(format!("not a file path: {}", path.display())))?;
    let tmp = parent.join(format!("{}.tmp", file_name.to_string_lossy()));
    fs::write(&tmp, bytes).map_err(|e| Error::write(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::write(path, e))?;
    Ok(())
}

/// Accepted inputs wherever a corpus is read: the two source layouts, or a
/// cache produced by `ingest`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputFormat {
    AuthorDirs,
    Jsonl,
    Cache,
}

impl FromStr for InputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "author-dirs" => Ok(InputFormat::AuthorDirs),
            "jsonl" => Ok(InputFormat::Jsonl),
            "cache" => Ok(InputFormat::Cache),
            other => Err(Error::Config(format!(
                "unknown corpus format '{other}' (expected author-dirs, jsonl, or cache)"
            ))),
        }
    }
}

impl fmt::Display for InputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InputFormat::AuthorDirs => "author-dirs",
            InputFormat::Jsonl => "jsonl",
            InputFormat::Cache => "cache",
        })
    }
}

pub fn load_corpus(path: &Path, format: InputFormat) -> Result<Corpus> {
    match format {
        InputFormat::AuthorDirs => corpus::ingest(path, corpus::CorpusFormat::AuthorDirs),
        InputFormat::Jsonl => corpus::ingest(path, corpus::CorpusFormat::Jsonl),
        InputFormat::Cache => corpus::read_cache(path),
    }
}

/// Full parameter set of a run.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub corpus: PathBuf,
    pub format: InputFormat,
    pub top_k: usize,
    pub repeats: usize,
    pub seed: u64,
    pub ngram: usize,
    pub mfc_n: usize,
    pub linkage: Linkage,
    pub split_by: SplitBy,
    pub keep_punct: bool,
    pub precision: Precision,
    pub palette: Palette,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus: PathBuf::new(),
            format: InputFormat::AuthorDirs,
            top_k: 20,
            repeats: 5,
            seed: 0,
            ngram: 1,
            mfc_n: 100,
            linkage: Linkage::Ward,
            split_by: SplitBy::Volume,
            keep_punct: false,
            precision: Precision::Decimal4,
            palette: Palette::Sequential,
            out: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.corpus.as_os_str().is_empty() {
            return Err(Error::Config("no corpus path given".into()));
        }
        for (name, value) in [
            ("top-k", self.top_k),
            ("repeats", self.repeats),
            ("ngram", self.ngram),
            ("mfc-n", self.mfc_n),
        ] {
            if value == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

/// One test corpus in the summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub corpus_index: usize,
    pub samples: usize,
    pub n_features: usize,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
    pub pure: bool,
    pub violations: Vec<String>,
    pub culled: Vec<String>,
    pub monotonic: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub format: String,
    pub format_version: u32,
    pub seed: u64,
    pub repeats: usize,
    pub top_k: usize,
    pub mfc_n: usize,
    pub ngram: usize,
    pub linkage: Linkage,
    pub split_by: SplitBy,
    pub keep_punct: bool,
    pub authors: usize,
    pub overall_accuracy: f64,
    pub all_pure: bool,
    pub warnings: Vec<String>,
    pub per_corpus: Vec<CorpusSummary>,
}

impl RunSummary {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }
}

#[derive(Serialize, Deserialize)]
struct ProfileFile {
    format: String,
    version: u32,
    #[serde(flatten)]
    profile: CorpusProfile<f64>,
}

/// Serialize a profile with full float precision for later stage re-runs.
pub fn write_profile(p: &CorpusProfile<f64>, out: &Path) -> Result<()> {
    let file = ProfileFile {
        format: PROFILE_FORMAT.to_string(),
        version: PROFILE_VERSION,
        profile: p.clone(),
    };
    let mut bytes = serde_json::to_vec_pretty(&file).expect("profile serializes");
    bytes.push(b'\n');
    write_atomic(out, &bytes)
}

pub fn read_profile(path: &Path) -> Result<CorpusProfile<f64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let file: ProfileFile =
        serde_json::from_slice(&bytes).map_err(|e| Error::parse(path, e.to_string()))?;
    if file.format != PROFILE_FORMAT {
        return Err(Error::parse(
            path,
            format!("not a profile file (format '{}')", file.format),
        ));
    }
    if file.version != PROFILE_VERSION {
        return Err(Error::parse(
            path,
            format!(
                "unsupported profile version {} (expected {})",
                file.version, PROFILE_VERSION
            ),
        ));
    }
    Ok(file.profile)
}

fn process_corpus(
    cfg: &RunConfig,
    corpus: &Corpus,
    set: &SampleSet,
    corpus_index: usize,
) -> Result<CorpusSummary> {
    let dir = cfg.out.join(format!("corpus_{corpus_index}"));
    let at = |stage: &str| {
        let stage = format!("{stage} (corpus_{corpus_index})");
        move |e: Error| Error::stage(stage, e)
    };
    let samples = materialize(set, corpus, corpus_index).map_err(at("sample"))?;
    let tok_cfg = TokenizerConfig {
        ngram: cfg.ngram,
        keep_punct: cfg.keep_punct,
    };
    let prof: CorpusProfile<f64> = (|| {
        let counts = count_features(&samples, &tok_cfg)?;
        let spec = select_mfc(&counts, cfg.mfc_n, cfg.ngram)?;
        profile(&counts, &spec)
    })()
    .map_err(at("features"))?;

    write_atomic(
        &dir.join("frequencies.csv"),
        frequencies_csv(&prof).as_bytes(),
    )?;
    write_atomic(&dir.join("zscores.csv"), zscores_csv(&prof).as_bytes())?;
    write_profile(&prof, &dir.join("profile.json"))?;

    let matrix = delta_matrix(&prof).map_err(at("distance"))?;
    write_atomic(
        &dir.join("distances.csv"),
        table_csv(&matrix, cfg.precision).as_bytes(),
    )?;

    let tree = agglomerate(&matrix, cfg.linkage).map_err(at("cluster"))?;
    write_atomic(&dir.join("merges.csv"), merges_csv(&tree).as_bytes())?;
    write_atomic(
        &dir.join("dendrogram.nwk"),
        (to_newick(&tree) + "\n").as_bytes(),
    )?;
    write_atomic(
        &dir.join("dendrogram.svg"),
        dendrogram_svg(&tree).as_bytes(),
    )?;
    let (pure, violations) = author_purity(&tree).map_err(at("cluster"))?;

    let report = nearest_neighbor_eval(&matrix)
        .map_err(at("report"))?
        .with_corpus_index(corpus_index);
    write_report(&report, &dir.join("report.json"))?;
    write_atomic(
        &dir.join("heatmap.svg"),
        heatmap_svg(&matrix, cfg.palette).as_bytes(),
    )?;

    let correct = report.per_sample.iter().filter(|s| s.correct).count();
    Ok(CorpusSummary {
        corpus_index,
        samples: samples.len(),
        n_features: prof.spec.n,
        correct,
        total: report.per_sample.len(),
        accuracy: report.accuracy,
        pure,
        violations,
        culled: prof.culled.clone(),
        monotonic: tree.monotonic,
    })
}

/// Execute the whole pipeline and write all artifacts. Purity failures are
/// recorded in the summary, not raised; the caller decides whether they
/// are fatal.
pub fn run(cfg: &RunConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let full = load_corpus(&cfg.corpus, cfg.format)?;
    run_on(cfg, &full)
}

/// Same as [`run`] but on an already loaded corpus. `top_k` is clamped to
/// the number of authors so small corpora work with default settings.
pub fn run_on(cfg: &RunConfig, full: &Corpus) -> Result<RunSummary> {
    let selected = corpus::select_top(full, cfg.top_k.min(full.author_count()))?;
    let set = shuffle_split_by(&selected, cfg.repeats, cfg.seed, cfg.split_by)?;
    write_samples(&set, &cfg.out.join("samples.json"))?;

    let per_corpus: Vec<CorpusSummary> = (1..=cfg.repeats)
        .into_par_iter()
        .map(|r| process_corpus(cfg, &selected, &set, r))
        .collect::<Result<_>>()?;

    let correct: usize = per_corpus.iter().map(|c| c.correct).sum();
    let total: usize = per_corpus.iter().map(|c| c.total).sum();
    let summary = RunSummary {
        format: SUMMARY_FORMAT.to_string(),
        format_version: SUMMARY_VERSION,
        seed: cfg.seed,
        repeats: cfg.repeats,
        top_k: cfg.top_k,
        mfc_n: cfg.mfc_n,
        ngram: cfg.ngram,
        linkage: cfg.linkage,
        split_by: cfg.split_by,
        keep_punct: cfg.keep_punct,
        authors: selected.author_count(),
        overall_accuracy: if total == 0 {
            0.0
        } else {
            correct as f64 / total as f64
        },
        all_pure: per_corpus.iter().all(|c| c.pure),
        warnings: set.warnings.clone(),
        per_corpus,
    };
    write_atomic(&cfg.out.join("summary.json"), summary.to_json().as_bytes())?;
    Ok(summary)
}
