//! Command-line front end.
//!
//! Six subcommands: `ingest` and `sample` prepare inputs, `run` executes the
//! whole pipeline, and `distance`, `cluster`, `report` recompute a single
//! stage from serialized intermediates.
//!
//! `run` accepts a flat `key = value` configuration file mirroring its flags;
//! a flag given on the command line wins over the file. Progress goes to
//! stderr; stdout stays empty unless `--print-summary` is given.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::cluster::{agglomerate, author_purity, merges_csv, to_newick, Linkage};
use crate::corpus::{author_stats, select_top, write_cache};
use crate::delta::delta_matrix;
use crate::error::{Error, Result};
use crate::pipeline::{
    self, load_corpus, read_profile, write_atomic, InputFormat, RunConfig, RunSummary,
};
use crate::report::{
    dendrogram_svg, heatmap_svg, nearest_neighbor_eval, read_table_csv, table_csv, write_report,
    Palette, Precision,
};
use crate::sampler::{shuffle_split_by, write_samples, SplitBy};

#[derive(Parser)]
#[command(
    name = "chardelta",
    version,
    about = "Character-level authorship attribution with Burrows' Delta"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize a corpus and write a self-describing cache file
    Ingest(IngestArgs),
    /// Shuffle-split a corpus into half-volume samples, one pair per author
    Sample(SampleArgs),
    /// Run the full pipeline: sample, profile, distances, clustering, reports
    Run(RunArgs),
    /// Recompute a distance matrix from a stored profile
    Distance(DistanceArgs),
    /// Recompute clustering artifacts from a distance matrix
    Cluster(ClusterArgs),
    /// Recompute evaluation artifacts from a distance matrix
    Report(ReportArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Corpus root: a directory of author directories, or a JSONL file
    #[arg(long = "corpus-dir", alias = "corpus", value_name = "PATH")]
    corpus_dir: PathBuf,
    /// Input format: author-dirs, jsonl, or cache
    #[arg(long, default_value = "author-dirs")]
    format: InputFormat,
    /// Cache file to write
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SampleArgs {
    /// Corpus root or cache file
    #[arg(long)]
    corpus: PathBuf,
    /// Input format: author-dirs, jsonl, or cache
    #[arg(long, default_value = "author-dirs")]
    format: InputFormat,
    /// Keep only the k most prolific authors before splitting
    #[arg(long)]
    top_k: Option<usize>,
    /// Number of shuffled test corpora to plan
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    /// Seed for the shuffle generator
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Split each author's half at equal volume or equal poem count
    #[arg(long, default_value = "volume")]
    split_by: SplitBy,
    /// Sample plan file to write
    #[arg(long, default_value = "samples.json")]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Flat key = value configuration file; explicit flags win over it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Corpus root or cache file
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Input format: author-dirs, jsonl, or cache
    #[arg(long)]
    format: Option<InputFormat>,
    /// Number of most prolific authors to keep
    #[arg(long)]
    top_k: Option<usize>,
    /// Number of shuffled test corpora
    #[arg(long)]
    repeats: Option<usize>,
    /// Seed for the shuffle generator
    #[arg(long)]
    seed: Option<u64>,
    /// Character n-gram length
    #[arg(long)]
    ngram: Option<usize>,
    /// Number of most frequent features to keep
    #[arg(long)]
    mfc_n: Option<usize>,
    /// Linkage method: ward, average, complete, or single
    #[arg(long)]
    linkage: Option<Linkage>,
    /// Split each author's half at equal volume or equal poem count
    #[arg(long)]
    split_by: Option<SplitBy>,
    /// Treat punctuation as ordinary characters
    #[arg(long)]
    keep_punct: bool,
    /// Distance table precision: 4 or full
    #[arg(long)]
    precision: Option<Precision>,
    /// Heatmap palette: sequential or diverging
    #[arg(long)]
    palette: Option<Palette>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit nonzero if any dendrogram mixes authors
    #[arg(long)]
    strict: bool,
    /// Also print summary.json to stdout
    #[arg(long)]
    print_summary: bool,
}

#[derive(Args)]
struct DistanceArgs {
    /// profile.json written by a run
    #[arg(long)]
    profile: PathBuf,
    /// Distance table to write
    #[arg(long, default_value = "distances.csv")]
    out: PathBuf,
    /// Distance table precision: 4 or full
    #[arg(long, default_value = "4")]
    precision: Precision,
}

#[derive(Args)]
struct ClusterArgs {
    /// Distance table (distances.csv) to cluster
    #[arg(long)]
    matrix: PathBuf,
    /// Linkage method: ward, average, complete, or single
    #[arg(long, default_value = "ward")]
    linkage: Linkage,
    /// Directory for merges.csv, dendrogram.nwk, dendrogram.svg
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Distance table (distances.csv) to evaluate
    #[arg(long)]
    matrix: PathBuf,
    /// Corpus index recorded in report.json
    #[arg(long)]
    corpus_index: Option<usize>,
    /// Heatmap palette: sequential or diverging
    #[arg(long, default_value = "sequential")]
    palette: Palette,
    /// Directory for report.json and heatmap.svg
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

impl Cli {
    pub fn execute(self) -> Result<()> {
        match self.command {
            Command::Ingest(args) => cmd_ingest(args),
            Command::Sample(args) => cmd_sample(args),
            Command::Run(args) => cmd_run(args),
            Command::Distance(args) => cmd_distance(args),
            Command::Cluster(args) => cmd_cluster(args),
            Command::Report(args) => cmd_report(args),
        }
    }
}

fn cmd_ingest(args: IngestArgs) -> Result<()> {
    let corpus = load_corpus(&args.corpus_dir, args.format)?;
    write_cache(&corpus, &args.out)?;
    eprintln!("{:>4}  {:>6}  {:>10}  author", "rank", "poems", "chars");
    for (rank, s) in author_stats(&corpus).iter().enumerate() {
        eprintln!(
            "{:>4}  {:>6}  {:>10}  {}",
            rank + 1,
            s.doc_count,
            s.total_volume,
            s.author
        );
    }
    eprintln!(
        "wrote {} ({} authors, {} poems)",
        args.out.display(),
        corpus.author_count(),
        corpus.doc_count()
    );
    Ok(())
}

fn cmd_sample(args: SampleArgs) -> Result<()> {
    let mut corpus = load_corpus(&args.corpus, args.format)?;
    if let Some(k) = args.top_k {
        corpus = select_top(&corpus, k)?;
    }
    let set = shuffle_split_by(&corpus, args.repeats, args.seed, args.split_by)?;
    for w in &set.warnings {
        eprintln!("warning: {w}");
    }
    write_samples(&set, &args.out)?;
    eprintln!(
        "wrote {} ({} samples)",
        args.out.display(),
        set.samples.len()
    );
    Ok(())
}

/// Defaults, then the configuration file, then explicit flags.
/// Returns the effective configuration and the strict switch.
fn resolve_run_config(args: RunArgs) -> Result<(RunConfig, bool)> {
    let mut cfg = RunConfig::default();
    let mut strict = false;
    if let Some(path) = &args.config {
        for (lineno, key, value) in parse_config_file(path)? {
            apply_config_pair(&mut cfg, &mut strict, &key, &value)
                .map_err(|e| Error::Config(format!("{}:{lineno}: {e}", path.display())))?;
        }
    }
    macro_rules! override_with {
        ($($field:ident),*) => {
            $(if let Some(v) = args.$field { cfg.$field = v; })*
        };
    }
    override_with!(
        corpus, format, top_k, repeats, seed, ngram, mfc_n, linkage, split_by, precision, palette,
        out
    );
    if args.keep_punct {
        cfg.keep_punct = true;
    }
    if args.strict {
        strict = true;
    }
    cfg.validate()?;
    Ok((cfg, strict))
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let print_summary = args.print_summary;
    let (cfg, strict) = resolve_run_config(args)?;

    eprintln!("reading corpus {}", cfg.corpus.display());
    let summary = pipeline::run(&cfg)?;
    report_progress(&summary);
    if print_summary {
        print!("{}", summary.to_json());
    }
    if strict && !summary.all_pure {
        let violations = summary
            .per_corpus
            .iter()
            .flat_map(|c| {
                c.violations
                    .iter()
                    .map(move |v| format!("corpus_{}: {v}", c.corpus_index))
            })
            .collect();
        return Err(Error::Purity { violations });
    }
    Ok(())
}

fn report_progress(summary: &RunSummary) {
    for c in &summary.per_corpus {
        let mut line = format!(
            "corpus_{}: accuracy {}/{}, {}",
            c.corpus_index,
            c.correct,
            c.total,
            if c.pure { "pure" } else { "impure" }
        );
        if !c.violations.is_empty() {
            line.push_str(&format!(" ({})", c.violations.join(", ")));
        }
        if !c.culled.is_empty() {
            line.push_str(&format!(", {} features culled", c.culled.len()));
        }
        if !c.monotonic {
            line.push_str(", non-monotone merge heights");
        }
        eprintln!("{line}");
    }
    eprintln!(
        "overall: accuracy {:.4}, {}",
        summary.overall_accuracy,
        if summary.all_pure {
            "all corpora pure"
        } else {
            "purity violations present"
        }
    );
}

fn cmd_distance(args: DistanceArgs) -> Result<()> {
    let profile = read_profile(&args.profile)?;
    let matrix = delta_matrix(&profile)?;
    write_atomic(&args.out, table_csv(&matrix, args.precision).as_bytes())?;
    eprintln!("wrote {} ({} samples)", args.out.display(), matrix.len());
    Ok(())
}

fn cmd_cluster(args: ClusterArgs) -> Result<()> {
    let matrix = read_table_csv(&args.matrix)?;
    let tree = agglomerate(&matrix, args.linkage)?;
    write_atomic(
        &args.out_dir.join("merges.csv"),
        merges_csv(&tree).as_bytes(),
    )?;
    write_atomic(
        &args.out_dir.join("dendrogram.nwk"),
        (to_newick(&tree) + "\n").as_bytes(),
    )?;
    write_atomic(
        &args.out_dir.join("dendrogram.svg"),
        dendrogram_svg(&tree).as_bytes(),
    )?;
    if !tree.monotonic {
        eprintln!("warning: non-monotone merge heights; the dendrogram has reversals");
    }
    match author_purity(&tree) {
        Ok((true, _)) => eprintln!("all authors pure"),
        Ok((false, violations)) => eprintln!("impure authors: {}", violations.join(", ")),
        // labels need not follow the <author>_<half> convention here
        Err(_) => {}
    }
    eprintln!("wrote dendrogram files to {}", args.out_dir.display());
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<()> {
    let matrix = read_table_csv(&args.matrix)?;
    let mut report = nearest_neighbor_eval(&matrix)?;
    if let Some(idx) = args.corpus_index {
        report = report.with_corpus_index(idx);
    }
    write_report(&report, &args.out_dir.join("report.json"))?;
    write_atomic(
        &args.out_dir.join("heatmap.svg"),
        heatmap_svg(&matrix, args.palette).as_bytes(),
    )?;
    eprintln!(
        "wrote report files to {} (accuracy {:.4})",
        args.out_dir.display(),
        report.accuracy
    );
    Ok(())
}

/// Parse a flat configuration file into (line, key, value) triples.
/// `#` starts a comment line; blank lines are skipped.
fn parse_config_file(path: &Path) -> Result<Vec<(usize, String, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!(
                "{}:{}: expected key = value, got '{raw}'",
                path.display(),
                idx + 1
            ))
        })?;
        pairs.push((idx + 1, key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

fn apply_config_pair(cfg: &mut RunConfig, strict: &mut bool, key: &str, value: &str) -> Result<()> {
    match key {
        "corpus" => cfg.corpus = PathBuf::from(value),
        "format" => cfg.format = value.parse()?,
        "top-k" => cfg.top_k = parse_num(key, value)?,
        "repeats" => cfg.repeats = parse_num(key, value)?,
        "seed" => cfg.seed = parse_num(key, value)?,
        "ngram" => cfg.ngram = parse_num(key, value)?,
        "mfc-n" => cfg.mfc_n = parse_num(key, value)?,
        "linkage" => cfg.linkage = value.parse()?,
        "split-by" => cfg.split_by = value.parse()?,
        "keep-punct" => cfg.keep_punct = parse_bool(key, value)?,
        "precision" => cfg.precision = value.parse()?,
        "palette" => cfg.palette = value.parse()?,
        "out" => cfg.out = PathBuf::from(value),
        "strict" => *strict = parse_bool(key, value)?,
        other => {
            return Err(Error::Config(format!(
                "unknown configuration key '{other}'"
            )))
        }
    }
    Ok(())
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("{key}: {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(Error::Config(format!(
            "{key}: expected true or false, got '{other}'"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;
    use tempfile::NamedTempFile;

    fn parse_run(extra: &[&str]) -> RunArgs {
        let mut argv = vec!["chardelta", "run"];
        argv.extend_from_slice(extra);
        match Cli::parse_from(argv).command {
            Command::Run(args) => args,
            _ => unreachable!(),
        }
    }

    #[test]
    fn defaults_match_the_documented_values() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.top_k, 20);
        assert_eq!(cfg.repeats, 5);
        assert_eq!(cfg.ngram, 1);
        assert_eq!(cfg.mfc_n, 100);
        assert_eq!(cfg.linkage, Linkage::Ward);
        assert_eq!(cfg.split_by, SplitBy::Volume);
        assert!(!cfg.keep_punct);
    }

    #[test]
    fn config_file_sets_values_and_flags_win() {
        let mut file = NamedTempFile::new().unwrap();
        writeln!(file, "# experiment manifest").unwrap();
        writeln!(file, "corpus = ./qts").unwrap();
        writeln!(file, "seed = 7").unwrap();
        writeln!(file, "mfc-n = 50").unwrap();
        writeln!(file, "strict = true").unwrap();
        file.flush().unwrap();

        let path = file.path().to_str().unwrap().to_string();
        let args = parse_run(&["--config", &path, "--seed", "9"]);
        let (cfg, strict) = resolve_run_config(args).unwrap();
        assert_eq!(cfg.corpus, PathBuf::from("./qts"));
        assert_eq!(cfg.seed, 9, "flag beats the file");
        assert_eq!(cfg.mfc_n, 50);
        assert!(strict);
    }

    #[test]
    fn unknown_config_key_is_rejected_with_position() {
        let mut file = NamedTempFile::new().unwrap();
        writeln!(file, "corpus = x").unwrap();
        writeln!(file, "bogus = 1").unwrap();
        file.flush().unwrap();

        let path = file.path().to_str().unwrap().to_string();
        let err = resolve_run_config(parse_run(&["--config", &path])).unwrap_err();
        match err {
            Error::Config(msg) => {
                assert!(msg.contains(":2:"), "line number in {msg}");
                assert!(msg.contains("bogus"), "key name in {msg}");
            }
            other => panic!("expected Config, got {other:?}"),
        }
        assert_eq!(err_exit(&path), 1);
    }

    fn err_exit(config_path: &str) -> i32 {
        resolve_run_config(parse_run(&["--config", config_path]))
            .unwrap_err()
            .exit_code()
    }

    #[test]
    fn malformed_config_line_is_rejected() {
        let mut file = NamedTempFile::new().unwrap();
        writeln!(file, "no equals sign here").unwrap();
        file.flush().unwrap();
        let err = parse_config_file(file.path()).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn bad_values_map_to_usage_errors() {
        let mut cfg = RunConfig::default();
        let mut strict = false;
        for (key, value) in [
            ("repeats", "x"),
            ("linkage", "centroid"),
            ("split-by", "weight"),
            ("keep-punct", "yes"),
            ("format", "zip"),
        ] {
            let err = apply_config_pair(&mut cfg, &mut strict, key, value).unwrap_err();
            assert_eq!(err.exit_code(), 1, "{key}={value}");
        }
    }
}
