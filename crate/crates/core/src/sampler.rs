//! Shuffle-split sampling.
//!
//! For each author the poems are shuffled with a seeded generator and the
//! œuvre is cut into two halves of near-equal character volume; each half
//! becomes one sample. Repeating with fresh shuffles yields several test
//! corpora from the same source texts.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{author_stats, Corpus, Document};
use crate::error::{Error, Result};

pub const SAMPLES_FORMAT: &str = "chardelta.samples";
pub const SAMPLES_VERSION: u32 = 1;

/// Domain separator for shuffle streams. Changing it invalidates every
/// recorded seed, so bump it only together with [`SAMPLES_VERSION`].
const SHUFFLE_DOMAIN: &[u8] = b"chardelta.shuffle.v1";

/// One half of an author's shuffled œuvre in one test corpus.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    /// `<author>_1` or `<author>_2`.
    pub label: String,
    pub author: String,
    /// 1-based index of the test corpus this sample belongs to.
    pub corpus_index: usize,
    /// Document ids in shuffled order. Non-empty.
    pub member_ids: Vec<String>,
}

/// All samples of all repeats, plus the parameters that produced them.
///
/// Samples are ordered by corpus index, then author rank (descending
/// volume), then half suffix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSet {
    pub seed: u64,
    pub repeats: usize,
    pub samples: Vec<Sample>,
    /// One entry per author whose largest poem exceeds half their volume.
    pub warnings: Vec<String>,
}

/// A sample with its text resolved against the corpus.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResolvedSample {
    pub label: String,
    pub author: String,
    pub corpus_index: usize,
    pub member_ids: Vec<String>,
    /// Member poem texts joined with `\n`.
    pub text: String,
}

/// How to measure "half the œuvre" when splitting.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitBy {
    /// Split at half the total character volume.
    #[default]
    Volume,
    /// Split at half the poem count.
    Count,
}

impl FromStr for SplitBy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "volume" => Ok(SplitBy::Volume),
            "count" => Ok(SplitBy::Count),
            other => Err(Error::Config(format!(
                "unknown split mode '{other}' (expected volume or count)"
            ))),
        }
    }
}

impl fmt::Display for SplitBy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitBy::Volume => "volume",
            SplitBy::Count => "count",
        })
    }
}

/// Shuffle generator for one (seed, author, repeat) triple.
///
/// The stream is derived by hashing, so streams for different authors and
/// repeats are independent, and the sequence does not depend on author
/// iteration order or platform word size.
fn shuffle_rng(seed: u64, author: &str, repeat: usize) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(SHUFFLE_DOMAIN);
    h.update(seed.to_be_bytes());
    h.update((author.len() as u64).to_be_bytes());
    h.update(author.as_bytes());
    h.update((repeat as u64).to_be_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

/// Fisher–Yates over indices. Draws are taken from the u64 range so the
/// permutation is identical on 32- and 64-bit targets.
fn shuffled_indices(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i as u64) as usize;
        idx.swap(i, j);
    }
    idx
}

/// Index of the first document of half 2 for the given per-document
/// measures.
///
/// The running sum is walked to the first document reaching half the total;
/// that boundary document stays in half 1 unless moving it to half 2 makes
/// the halves strictly more even. On a tie it stays in half 1. Both halves
/// end up non-empty for any input with ≥ 2 documents of positive measure,
/// and the volume imbalance never exceeds the largest single measure.
fn split_point(measures: &[usize]) -> usize {
    debug_assert!(measures.len() >= 2);
    let total: usize = measures.iter().sum();
    let mut running = 0usize;
    let mut split = measures.len();
    for (i, &m) in measures.iter().enumerate() {
        let prev = running;
        running += m;
        if 2 * running >= total {
            let keep = 2 * running - total;
            let push = total - 2 * prev;
            split = if push < keep { i } else { i + 1 };
            break;
        }
    }
    // all-zero measures degenerate to a 1 / rest split above; a half-2-empty
    // result is impossible for positive measures, but never emit one
    if split == measures.len() {
        split -= 1;
    }
    split.max(1)
}

fn measure(doc: &Document, split_by: SplitBy) -> usize {
    match split_by {
        SplitBy::Volume => doc.char_volume,
        SplitBy::Count => 1,
    }
}

/// Shuffle-split with the default volume measure.
pub fn shuffle_split(c: &Corpus, repeats: usize, seed: u64) -> Result<SampleSet> {
    shuffle_split_by(c, repeats, seed, SplitBy::Volume)
}

pub fn shuffle_split_by(
    c: &Corpus,
    repeats: usize,
    seed: u64,
    split_by: SplitBy,
) -> Result<SampleSet> {
    if repeats == 0 {
        return Err(Error::Argument("repeats must be positive".into()));
    }
    for (author, docs) in c.authors() {
        if docs.len() < 2 {
            return Err(Error::Protocol(format!(
                "author '{author}' has {} document(s); at least 2 are needed to split",
                docs.len()
            )));
        }
    }

    let rank_order: Vec<String> = author_stats(c).into_iter().map(|s| s.author).collect();

    let mut warnings = Vec::new();
    for author in &rank_order {
        let docs = c.documents_of(author).expect("ranked author present");
        let total: usize = docs.iter().map(|d| measure(d, split_by)).sum();
        if let Some(biggest) = docs.iter().map(|d| measure(d, split_by)).max() {
            if 2 * biggest > total {
                warnings.push(format!(
                    "author '{author}': largest poem ({biggest}) exceeds half the total {split_by} ({total}); halves will be uneven"
                ));
            }
        }
    }

    let mut samples = Vec::with_capacity(2 * rank_order.len() * repeats);
    for repeat in 1..=repeats {
        for author in &rank_order {
            let docs = c.documents_of(author).expect("ranked author present");
            let mut rng = shuffle_rng(seed, author, repeat);
            let order = shuffled_indices(docs.len(), &mut rng);
            let measures: Vec<usize> = order.iter().map(|&i| measure(&docs[i], split_by)).collect();
            let split = split_point(&measures);
            let ids = |range: std::ops::Range<usize>| -> Vec<String> {
                order[range].iter().map(|&i| docs[i].id.clone()).collect()
            };
            samples.push(Sample {
                label: format!("{author}_1"),
                author: author.clone(),
                corpus_index: repeat,
                member_ids: ids(0..split),
            });
            samples.push(Sample {
                label: format!("{author}_2"),
                author: author.clone(),
                corpus_index: repeat,
                member_ids: ids(split..docs.len()),
            });
        }
    }

    Ok(SampleSet {
        seed,
        repeats,
        samples,
        warnings,
    })
}

/// Resolve the samples of one test corpus against `c`, in author rank order
/// with `_1` before `_2`.
pub fn materialize(s: &SampleSet, c: &Corpus, corpus_index: usize) -> Result<Vec<ResolvedSample>> {
    if corpus_index == 0 || corpus_index > s.repeats {
        return Err(Error::Argument(format!(
            "corpus index {corpus_index} out of range 1..={}",
            s.repeats
        )));
    }
    let index = c.id_index();
    let mut resolved = Vec::new();
    for sample in s
        .samples
        .iter()
        .filter(|smp| smp.corpus_index == corpus_index)
    {
        let mut texts = Vec::with_capacity(sample.member_ids.len());
        for id in &sample.member_ids {
            let doc = index.get(id.as_str()).ok_or_else(|| {
                Error::Integrity(format!(
                    "sample '{}' references document '{id}' not present in the corpus",
                    sample.label
                ))
            })?;
            texts.push(doc.text.as_str());
        }
        resolved.push(ResolvedSample {
            label: sample.label.clone(),
            author: sample.author.clone(),
            corpus_index: sample.corpus_index,
            member_ids: sample.member_ids.clone(),
            text: texts.join("\n"),
        });
    }
    Ok(resolved)
}

#[derive(Serialize, Deserialize)]
struct SamplesFile {
    format: String,
    version: u32,
    #[serde(flatten)]
    set: SampleSet,
}

/// Write the sample set as a versioned JSON file. Texts are not stored;
/// they resolve against the corpus via `member_ids`.
pub fn write_samples(s: &SampleSet, out: &Path) -> Result<()> {
    let file = SamplesFile {
        format: SAMPLES_FORMAT.to_string(),
        version: SAMPLES_VERSION,
        set: s.clone(),
    };
    let mut bytes = serde_json::to_vec_pretty(&file).expect("sample set serializes");
    bytes.push(b'\n');
    crate::pipeline::write_atomic(out, &bytes)
}

pub fn read_samples(path: &Path) -> Result<SampleSet> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let file: SamplesFile =
        serde_json::from_slice(&bytes).map_err(|e| Error::parse(path, e.to_string()))?;
    if file.format != SAMPLES_FORMAT {
        return Err(Error::parse(
            path,
            format!("not a sample file (format '{}')", file.format),
        ));
    }
    if file.version != SAMPLES_VERSION {
        return Err(Error::parse(
            path,
            format!(
                "unsupported sample file version {} (expected {})",
                file.version, SAMPLES_VERSION
            ),
        ));
    }
    Ok(file.set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn corpus(authors: &[(&str, &[usize])]) -> Corpus {
        // volumes become texts of repeated 字
        let mut docs = Vec::new();
        for (author, volumes) in authors {
            for (i, &v) in volumes.iter().enumerate() {
                docs.push(Document::new(
                    format!("{author}#{i}"),
                    author.to_string(),
                    "字".repeat(v),
                ));
            }
        }
        Corpus::from_documents(docs).unwrap()
    }

    fn volumes_of(c: &Corpus, sample: &Sample) -> Vec<usize> {
        let index = c.id_index();
        sample
            .member_ids
            .iter()
            .map(|id| index[id.as_str()].char_volume)
            .collect()
    }

    #[test]
    fn split_point_rules() {
        // boundary poem stays in half 1 when that is at least as even
        assert_eq!(split_point(&[10, 10, 10, 10]), 2);
        // moving the boundary poem over is strictly more even here
        assert_eq!(split_point(&[4, 4, 3]), 1);
        // exact tie keeps the boundary poem in half 1
        assert_eq!(split_point(&[3, 2, 3]), 2);
        // oversized poem first stands alone
        assert_eq!(split_point(&[40, 10, 10, 10, 10]), 1);
        // oversized poem last is pushed into half 2
        assert_eq!(split_point(&[1, 1, 10]), 2);
        // two poems always split 1 / 1
        assert_eq!(split_point(&[1, 100]), 1);
        assert_eq!(split_point(&[100, 1]), 1);
    }

    #[test]
    fn equal_volumes_split_evenly() {
        let c = corpus(&[("甲", &[7, 7, 7, 7])]);
        for seed in 0..20 {
            let set = shuffle_split(&c, 1, seed).unwrap();
            assert_eq!(set.samples[0].member_ids.len(), 2);
            assert_eq!(set.samples[1].member_ids.len(), 2);
        }
    }

    #[test]
    fn oversized_poem_stands_alone_when_first() {
        let c = corpus(&[("甲", &[10, 10, 10, 10, 40])]);
        let mut exercised = false;
        for seed in 0..50 {
            let set = shuffle_split(&c, 1, seed).unwrap();
            // 40 is exactly half of 80, so the halves can still balance
            assert!(set.warnings.is_empty());
            let v1 = volumes_of(&c, &set.samples[0]);
            if v1.first() == Some(&40) {
                assert_eq!(v1, [40]);
                assert_eq!(volumes_of(&c, &set.samples[1]).iter().sum::<usize>(), 40);
                exercised = true;
            }
        }
        assert!(exercised, "no seed in 0..50 put the oversized poem first");
    }

    #[test]
    fn poem_over_half_the_volume_warns_once() {
        let c = corpus(&[("甲", &[50, 10, 10, 10]), ("乙", &[5, 5])]);
        let set = shuffle_split(&c, 3, 0).unwrap();
        let hits: Vec<&String> = set.warnings.iter().filter(|w| w.contains('甲')).collect();
        assert_eq!(hits.len(), 1, "one warning per author, not per repeat");
        assert!(hits[0].contains("50"));
        assert!(!set.warnings.iter().any(|w| w.contains('乙')));
    }

    #[test]
    fn partition_and_balance() {
        let c = corpus(&[
            ("甲", &[12, 5, 9, 33, 7, 21, 4]),
            ("乙", &[8, 8, 9, 10, 30]),
            ("丙", &[50, 3, 3, 3, 3, 3, 3, 3]),
        ]);
        let set = shuffle_split(&c, 3, 7).unwrap();
        for r in 1..=3 {
            for (author, docs) in c.authors() {
                let halves: Vec<&Sample> = set
                    .samples
                    .iter()
                    .filter(|s| s.author == author && s.corpus_index == r)
                    .collect();
                assert_eq!(halves.len(), 2);
                assert!(halves.iter().all(|s| !s.member_ids.is_empty()));

                let all: BTreeSet<&str> = docs.iter().map(|d| d.id.as_str()).collect();
                let union: BTreeSet<&str> = halves
                    .iter()
                    .flat_map(|s| s.member_ids.iter().map(String::as_str))
                    .collect();
                let count: usize = halves.iter().map(|s| s.member_ids.len()).sum();
                assert_eq!(union, all);
                assert_eq!(count, all.len());

                let v1: usize = volumes_of(&c, halves[0]).iter().sum();
                let v2: usize = volumes_of(&c, halves[1]).iter().sum();
                let max = docs.iter().map(|d| d.char_volume).max().unwrap();
                assert!(
                    v1.abs_diff(v2) <= max,
                    "{author} r{r}: |{v1} - {v2}| > {max}"
                );
            }
        }
    }

    #[test]
    fn deterministic_across_runs() {
        let c = corpus(&[
            ("甲", &[5, 9, 3, 12]),
            ("乙", &[7, 7, 8]),
            ("丙", &[4, 20, 4]),
        ]);
        let a = shuffle_split(&c, 2, 42).unwrap();
        let b = shuffle_split(&c, 2, 42).unwrap();
        assert_eq!(a, b);

        let dir = tempfile::TempDir::new().unwrap();
        let p1 = dir.path().join("a.json");
        let p2 = dir.path().join("b.json");
        write_samples(&a, &p1).unwrap();
        write_samples(&b, &p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
        assert_eq!(read_samples(&p1).unwrap(), a);
    }

    #[test]
    fn repeats_use_distinct_streams() {
        let volumes: Vec<usize> = vec![5; 12];
        let c = corpus(&[("甲", &volumes)]);
        let set = shuffle_split(&c, 5, 1).unwrap();
        let orders: BTreeSet<Vec<String>> = set
            .samples
            .iter()
            .filter(|s| s.label == "甲_1")
            .map(|s| s.member_ids.clone())
            .collect();
        // 12 equal poems, 5 repeats: identical shuffles are vanishingly rare
        assert!(orders.len() >= 2);
    }

    #[test]
    fn seed_changes_output() {
        let volumes: Vec<usize> = vec![5; 12];
        let c = corpus(&[("甲", &volumes)]);
        let a = shuffle_split(&c, 1, 1).unwrap();
        let b = shuffle_split(&c, 1, 2).unwrap();
        assert_ne!(a.samples, b.samples);
    }

    #[test]
    fn single_document_author_rejected() {
        let c = corpus(&[("甲", &[5, 5]), ("乙", &[9])]);
        let err = shuffle_split(&c, 1, 0).unwrap_err();
        match err {
            Error::Protocol(msg) => assert!(msg.contains('乙')),
            other => panic!("expected protocol error, got {other:?}"),
        }
    }

    #[test]
    fn count_split_ignores_volume() {
        let c = corpus(&[("甲", &[1, 1, 1, 9])]);
        // some seed keeps the identity order; compare shapes across all seeds
        for seed in 0..10 {
            let by_count = shuffle_split_by(&c, 1, seed, SplitBy::Count).unwrap();
            assert_eq!(by_count.samples[0].member_ids.len(), 2);
            assert_eq!(by_count.samples[1].member_ids.len(), 2);
        }
    }

    #[test]
    fn sample_order_is_corpus_then_rank_then_suffix() {
        let c = corpus(&[("小", &[2, 2]), ("大", &[9, 9]), ("中", &[5, 5])]);
        let set = shuffle_split(&c, 2, 0).unwrap();
        let labels: Vec<&str> = set.samples.iter().map(|s| s.label.as_str()).collect();
        assert_eq!(
            labels,
            [
                "大_1", "大_2", "中_1", "中_2", "小_1", "小_2", "大_1", "大_2", "中_1", "中_2",
                "小_1", "小_2"
            ]
        );
        let indices: Vec<usize> = set.samples.iter().map(|s| s.corpus_index).collect();
        assert_eq!(indices, [1, 1, 1, 1, 1, 1, 2, 2, 2, 2, 2, 2]);
    }

    #[test]
    fn materialize_joins_member_texts() {
        let docs = vec![
            Document::new("a".into(), "甲".into(), "一二".into()),
            Document::new("b".into(), "甲".into(), "三".into()),
        ];
        let c = Corpus::from_documents(docs).unwrap();
        let set = shuffle_split(&c, 1, 0).unwrap();
        let resolved = materialize(&set, &c, 1).unwrap();
        assert_eq!(resolved.len(), 2);
        let joined: String = {
            let mut texts: Vec<&str> = resolved.iter().map(|s| s.text.as_str()).collect();
            texts.sort();
            texts.join("\n")
        };
        assert_eq!(joined, "一二\n三");

        assert_eq!(materialize(&set, &c, 1).unwrap(), resolved);
        assert!(matches!(materialize(&set, &c, 0), Err(Error::Argument(_))));
        assert!(matches!(materialize(&set, &c, 2), Err(Error::Argument(_))));
    }

    #[test]
    fn materialize_detects_dangling_ids() {
        let c = corpus(&[("甲", &[3, 3])]);
        let mut set = shuffle_split(&c, 1, 0).unwrap();
        set.samples[0].member_ids[0] = "missing".into();
        assert!(matches!(materialize(&set, &c, 1), Err(Error::Integrity(_))));
    }
}
