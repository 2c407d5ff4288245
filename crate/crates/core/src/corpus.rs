//! Corpus ingestion and author volume statistics.
//!
//! Two on-disk layouts are supported:
//!
//! - `author-dirs`: `<root>/<author>/<*.txt>`, UTF-8, one or more poems per
//!   file separated by a blank line;
//! - `jsonl`: one JSON record per line with `author`, `text`, optional `id`.
//!
//! All text is normalized to NFC at ingestion and line endings are unified
//! to `\n`, so visually identical characters count as one feature and the
//! same input bytes produce the same corpus on every platform.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

/// Version stamp of the corpus cache file format.
pub const CACHE_FORMAT: &str = "chardelta.corpus";
pub const CACHE_VERSION: u32 = 1;

/// One poem.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Document {
    /// Stable id derived from the source path and in-file position.
    pub id: String,
    pub author: String,
    /// Raw text, NFC-normalized, `\n` line endings.
    pub text: String,
    /// Unicode scalar values in `text`, including whitespace, line breaks,
    /// and punctuation.
    pub char_volume: usize,
}

impl Document {
    pub fn new(id: String, author: String, text: String) -> Self {
        let char_volume = text.chars().count();
        Document {
            id,
            author,
            text,
            char_volume,
        }
    }
}

/// Source layout of a corpus on disk.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorpusFormat {
    AuthorDirs,
    Jsonl,
}

impl FromStr for CorpusFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "author-dirs" => Ok(CorpusFormat::AuthorDirs),
            "jsonl" => Ok(CorpusFormat::Jsonl),
            other => Err(Error::Config(format!(
                "unknown corpus format '{other}' (expected author-dirs or jsonl)"
            ))),
        }
    }
}

impl fmt::Display for CorpusFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorpusFormat::AuthorDirs => "author-dirs",
            CorpusFormat::Jsonl => "jsonl",
        })
    }
}

/// Where a corpus came from. Metadata only: never part of corpus equality,
/// and the wall-clock timestamp is not written to the cache so that cache
/// bytes depend on the input alone.
#[derive(Clone, Debug)]
pub struct Provenance {
    pub source: String,
    pub format: CorpusFormat,
    pub format_version: u32,
    /// Set on fresh ingestion, `None` when loaded from a cache.
    pub ingested_at: Option<String>,
}

/// Immutable in-memory corpus: authors in name order, documents in source
/// order.
#[derive(Clone, Debug)]
pub struct Corpus {
    authors: IndexMap<String, Vec<Document>>,
    pub provenance: Provenance,
}

/// Structural equality: same authors with the same documents in the same
/// order. Provenance is metadata and does not participate.
impl PartialEq for Corpus {
    fn eq(&self, other: &Self) -> bool {
        self.authors.len() == other.authors.len()
            && self
                .authors
                .iter()
                .zip(other.authors.iter())
                .all(|((name_a, docs_a), (name_b, docs_b))| name_a == name_b && docs_a == docs_b)
    }
}

impl Corpus {
    /// Assemble a corpus directly from documents, e.g. for programmatic
    /// construction. Documents keep their relative order within each author;
    /// authors are sorted by name.
    pub fn from_documents(docs: impl IntoIterator<Item = Document>) -> Result<Self> {
        let mut authors: IndexMap<String, Vec<Document>> = IndexMap::new();
        for doc in docs {
            authors.entry(doc.author.clone()).or_default().push(doc);
        }
        if authors.is_empty() {
            return Err(Error::EmptyCorpus {
                path: std::path::PathBuf::from("<memory>"),
            });
        }
        authors.sort_keys();
        Ok(Corpus {
            authors,
            provenance: Provenance {
                source: "<memory>".into(),
                format: CorpusFormat::Jsonl,
                format_version: CACHE_VERSION,
                ingested_at: None,
            },
        })
    }

    pub fn author_count(&self) -> usize {
        self.authors.len()
    }

    pub fn doc_count(&self) -> usize {
        self.authors.values().map(Vec::len).sum()
    }

    pub fn authors(&self) -> impl Iterator<Item = (&str, &[Document])> {
        self.authors
            .iter()
            .map(|(name, docs)| (name.as_str(), docs.as_slice()))
    }

    pub fn documents(&self) -> impl Iterator<Item = &Document> {
        self.authors.values().flatten()
    }

    pub fn documents_of(&self, author: &str) -> Option<&[Document]> {
        self.authors.get(author).map(Vec::as_slice)
    }

    /// Lookup table from document id to document.
    pub fn id_index(&self) -> HashMap<&str, &Document> {
        self.documents().map(|d| (d.id.as_str(), d)).collect()
    }
}

/// Aggregate size of one author's œuvre.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AuthorStats {
    pub author: String,
    pub doc_count: usize,
    /// Sum of document `char_volume` (characters, spaces, line breaks, and
    /// punctuation all count).
    pub total_volume: usize,
}

/// Read a corpus from disk.
///
/// For `author-dirs`, `root` is a directory; authors are its immediate
/// subdirectories and documents are read from `*.txt` files in lexicographic
/// filename order. For `jsonl`, `root` is the `.jsonl` file itself.
pub fn ingest(root: &Path, format: CorpusFormat) -> Result<Corpus> {
    let mut authors: IndexMap<String, Vec<Document>> = IndexMap::new();
    match format {
        CorpusFormat::AuthorDirs => ingest_author_dirs(root, &mut authors)?,
        CorpusFormat::Jsonl => ingest_jsonl(root, &mut authors)?,
    }
    if authors.is_empty() {
        return Err(Error::EmptyCorpus {
            path: root.to_path_buf(),
        });
    }
    authors.sort_keys();
    Ok(Corpus {
        authors,
        provenance: Provenance {
            source: root.to_string_lossy().into_owned(),
            format,
            format_version: CACHE_VERSION,
            ingested_at: Some(now_utc()),
        },
    })
}

fn now_utc() -> String {
    // seconds since the epoch; enough for provenance, no extra dependency
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("unix:{secs}")
}

fn read_utf8(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    match String::from_utf8(bytes) {
        Ok(s) => Ok(s),
        Err(e) => {
            let offset = e.utf8_error().valid_up_to();
            Err(Error::Decode {
                path: path.to_path_buf(),
                offset,
            })
        }
    }
}

/// NFC plus `\r\n` → `\n`.
fn normalize(text: &str) -> String {
    text.replace("\r\n", "\n").nfc().collect()
}

/// Split file contents into poems at blank lines (lines that are empty after
/// trimming). Line content is kept verbatim, including trailing spaces.
fn split_poems(contents: &str) -> Vec<String> {
    let mut poems = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for line in contents.split('\n') {
        if line.trim().is_empty() {
            if !current.is_empty() {
                poems.push(current.join("\n"));
                current.clear();
            }
        } else {
            current.push(line);
        }
    }
    if !current.is_empty() {
        poems.push(current.join("\n"));
    }
    poems
}

fn ingest_author_dirs(root: &Path, authors: &mut IndexMap<String, Vec<Document>>) -> Result<()> {
    let entries = fs::read_dir(root).map_err(|e| Error::io(root, e))?;
    let mut author_names: Vec<String> = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        if entry.path().is_dir() {
            match entry.file_name().into_string() {
                Ok(name) => author_names.push(name),
                Err(bad) => {
                    return Err(Error::Argument(format!(
                        "author directory name is not valid Unicode: {:?}",
                        bad
                    )))
                }
            }
        }
    }
    author_names.sort();

    for author_raw in author_names {
        let author: String = author_raw.nfc().collect();
        let dir = root.join(&author_raw);
        let mut files: Vec<String> = Vec::new();
        for entry in fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))? {
            let entry = entry.map_err(|e| Error::io(&dir, e))?;
            let path = entry.path();
            if path.is_file() && path.extension().and_then(|e| e.to_str()) == Some("txt") {
                if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
                    files.push(name.to_string());
                }
            }
        }
        files.sort();

        let mut docs = Vec::new();
        for file in files {
            let path = dir.join(&file);
            let contents = normalize(&read_utf8(&path)?);
            for (idx, poem) in split_poems(&contents).into_iter().enumerate() {
                let id = format!("{author_raw}/{file}#{idx}");
                docs.push(Document::new(id, author.clone(), poem));
            }
        }
        if !docs.is_empty() {
            authors.insert(author, docs);
        }
    }
    Ok(())
}

#[derive(Deserialize)]
struct JsonlRecord {
    author: String,
    text: String,
    #[serde(default)]
    id: Option<String>,
}

fn ingest_jsonl(path: &Path, authors: &mut IndexMap<String, Vec<Document>>) -> Result<()> {
    let contents = read_utf8(path)?;
    let file_name = path
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or("corpus.jsonl")
        .to_string();
    let mut record_idx = 0usize;
    for (line_no, line) in contents.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: JsonlRecord = serde_json::from_str(line)
            .map_err(|e| Error::parse(path, format!("line {}: {e}", line_no + 1)))?;
        let author: String = record.author.nfc().collect();
        let text = normalize(&record.text);
        if text.is_empty() {
            return Err(Error::parse(
                path,
                format!("line {}: empty text", line_no + 1),
            ));
        }
        let id = record
            .id
            .unwrap_or_else(|| format!("{file_name}#{record_idx}"));
        authors
            .entry(author.clone())
            .or_default()
            .push(Document::new(id, author, text));
        record_idx += 1;
    }
    Ok(())
}

/// Per-author statistics, sorted by descending total volume; equal volumes
/// are ordered by author name codepoint order.
pub fn author_stats(c: &Corpus) -> Vec<AuthorStats> {
    let mut stats: Vec<AuthorStats> = c
        .authors()
        .map(|(author, docs)| AuthorStats {
            author: author.to_string(),
            doc_count: docs.len(),
            total_volume: docs.iter().map(|d| d.char_volume).sum(),
        })
        .collect();
    stats.sort_by(|a, b| {
        b.total_volume
            .cmp(&a.total_volume)
            .then_with(|| a.author.cmp(&b.author))
    });
    stats
}

/// Restrict `c` to its `k` most prolific authors (by [`author_stats`] order),
/// preserving document order.
pub fn select_top(c: &Corpus, k: usize) -> Result<Corpus> {
    if k == 0 {
        return Err(Error::Argument("top-k must be positive".into()));
    }
    if k > c.author_count() {
        return Err(Error::Argument(format!(
            "top-k is {k} but the corpus has only {} authors",
            c.author_count()
        )));
    }
    let keep: Vec<String> = author_stats(c)
        .into_iter()
        .take(k)
        .map(|s| s.author)
        .collect();
    let mut authors = IndexMap::new();
    for name in &keep {
        authors.insert(
            name.clone(),
            c.authors.get(name).expect("ranked author present").clone(),
        );
    }
    authors.sort_keys();
    Ok(Corpus {
        authors,
        provenance: c.provenance.clone(),
    })
}

#[derive(Serialize, Deserialize)]
struct CacheHeader {
    format: String,
    version: u32,
    source: String,
    corpus_format: CorpusFormat,
}

#[derive(Serialize, Deserialize)]
struct CacheRecord<'a> {
    id: &'a str,
    author: &'a str,
    text: &'a str,
}

/// Serialize `c` to the cache format: a versioned header line followed by
/// one JSON record per document. Bytes depend only on corpus content and
/// provenance source/format.
pub fn write_cache(c: &Corpus, out: &Path) -> Result<()> {
    let mut buf = Vec::new();
    let header = CacheHeader {
        format: CACHE_FORMAT.to_string(),
        version: CACHE_VERSION,
        source: c.provenance.source.clone(),
        corpus_format: c.provenance.format,
    };
    writeln!(
        buf,
        "{}",
        serde_json::to_string(&header).expect("header serializes")
    )
    .expect("write to vec");
    for doc in c.documents() {
        let record = CacheRecord {
            id: &doc.id,
            author: &doc.author,
            text: &doc.text,
        };
        writeln!(
            buf,
            "{}",
            serde_json::to_string(&record).expect("record serializes")
        )
        .expect("write to vec");
    }
    crate::pipeline::write_atomic(out, &buf)
}

/// Load a corpus previously written by [`write_cache`].
pub fn read_cache(path: &Path) -> Result<Corpus> {
    let contents = read_utf8(path)?;
    let mut lines = contents.lines();
    let header_line = lines
        .next()
        .ok_or_else(|| Error::parse(path, "empty cache file"))?;
    let header: CacheHeader = serde_json::from_str(header_line)
        .map_err(|e| Error::parse(path, format!("bad header: {e}")))?;
    if header.format != CACHE_FORMAT {
        return Err(Error::parse(
            path,
            format!("not a corpus cache (format '{}')", header.format),
        ));
    }
    if header.version != CACHE_VERSION {
        return Err(Error::parse(
            path,
            format!(
                "unsupported cache version {} (expected {})",
                header.version, CACHE_VERSION
            ),
        ));
    }
    let mut authors: IndexMap<String, Vec<Document>> = IndexMap::new();
    for (line_no, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        #[derive(Deserialize)]
        struct OwnedRecord {
            id: String,
            author: String,
            text: String,
        }
        let rec: OwnedRecord = serde_json::from_str(line)
            .map_err(|e| Error::parse(path, format!("record {}: {e}", line_no + 2)))?;
        authors
            .entry(rec.author.clone())
            .or_default()
            .push(Document::new(rec.id, rec.author, rec.text));
    }
    if authors.is_empty() {
        return Err(Error::EmptyCorpus {
            path: path.to_path_buf(),
        });
    }
    authors.sort_keys();
    Ok(Corpus {
        authors,
        provenance: Provenance {
            source: header.source,
            format: header.corpus_format,
            format_version: header.version,
            ingested_at: None,
        },
    })
}
