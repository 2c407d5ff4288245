//! Shared fixtures and independent reference implementations for the
//! integration suites. The reference algorithms here are deliberately
//! written from scratch against the definitions, not by calling into the
//! library, so the two routes can disagree.

#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Euclidean distance matrix over random points in R^4: a guaranteed
/// metric with, almost surely, no ties.
pub fn random_metric_matrix(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let points: Vec<[f64; 4]> = (0..n).map(|_| std::array::from_fn(|_| rng.gen())).collect();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let sq: f64 = (0..4).map(|k| (points[i][k] - points[j][k]).powi(2)).sum();
            d[i][j] = sq.sqrt();
            d[j][i] = d[i][j];
        }
    }
    d
}

fn set_distance(d: &[Vec<f64>], a: &[usize], b: &[usize], linkage: &str) -> f64 {
    let pairs = a.iter().flat_map(|&i| b.iter().map(move |&j| d[i][j]));
    match linkage {
        "average" => pairs.sum::<f64>() / (a.len() * b.len()) as f64,
        "complete" => pairs.fold(f64::NEG_INFINITY, f64::max),
        "single" => pairs.fold(f64::INFINITY, f64::min),
        other => panic!("no reference for linkage {other}"),
    }
}

/// Naive O(n^3) agglomerative clustering. Every step recomputes all
/// cluster distances directly from the original matrix and explicit member
/// lists. Node ids: 0..n leaves, n+k for the k-th merge; the active list
/// stays ordered by node id and ties resolve to the first minimal pair,
/// i.e. the smallest (left, right).
pub fn naive_agglomerate(d: &[Vec<f64>], linkage: &str) -> Vec<(usize, usize, f64)> {
    let n = d.len();
    let mut active: Vec<(usize, Vec<usize>)> = (0..n).map(|i| (i, vec![i])).collect();
    let mut merges = Vec::new();
    for step in 0..n - 1 {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..active.len() {
            for j in i + 1..active.len() {
                let dist = set_distance(d, &active[i].1, &active[j].1, linkage);
                if best.is_none_or(|(b, _, _)| dist < b) {
                    best = Some((dist, i, j));
                }
            }
        }
        let (height, i, j) = best.expect("at least two active clusters");
        let (right_id, right_members) = active.remove(j);
        let (left_id, left_members) = active.remove(i);
        let mut members = left_members;
        members.extend(right_members);
        active.push((n + step, members));
        merges.push((left_id, right_id, height));
    }
    merges
}

/// Sorted edge weights of a minimum spanning tree (Prim's algorithm).
pub fn mst_edge_weights(d: &[Vec<f64>]) -> Vec<f64> {
    let n = d.len();
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    in_tree[0] = true;
    best[1..n].copy_from_slice(&d[0][1..n]);
    let mut weights = Vec::with_capacity(n - 1);
    for _ in 1..n {
        let next = (0..n)
            .filter(|&j| !in_tree[j])
            .min_by(|&a, &b| best[a].total_cmp(&best[b]))
            .expect("tree spans all nodes");
        weights.push(best[next]);
        in_tree[next] = true;
        for j in 0..n {
            if !in_tree[j] && d[next][j] < best[j] {
                best[j] = d[next][j];
            }
        }
    }
    weights.sort_by(f64::total_cmp);
    weights
}

pub const SYNTH_AUTHORS: [&str; 5] = ["甲", "乙", "丙", "丁", "戊"];

/// Draw one poem: four lines of five or seven characters, each line closed
/// with a fullwidth stop. Characters are Zipf-weighted over the author's
/// alphabet. Mixing line lengths keeps punctuation frequency non-constant
/// across samples, so the stop survives culling under --keep-punct.
fn draw_poem(alphabet: &[char], rng: &mut ChaCha8Rng) -> String {
    let weights: Vec<f64> = (0..alphabet.len()).map(|k| 1.0 / (k + 1) as f64).collect();
    let total: f64 = weights.iter().sum();
    let line_len = if rng.gen_bool(0.5) { 5 } else { 7 };
    let mut poem = String::new();
    for _ in 0..4 {
        for _ in 0..line_len {
            let mut u = rng.gen::<f64>() * total;
            let mut pick = alphabet.len() - 1;
            for (k, w) in weights.iter().enumerate() {
                if u < *w {
                    pick = k;
                    break;
                }
                u -= w;
            }
            poem.push(alphabet[pick]);
        }
        poem.push('。');
        poem.push('\n');
    }
    poem
}

/// Write a five-author corpus in the author-directory layout. Authors use
/// overlapping 40-character alphabets shifted across a 160-character pool,
/// with Zipf weights, so their frequency profiles differ sharply while the
/// corpus still has well over 100 distinct characters.
pub fn write_synthetic_corpus(root: &Path, poems_per_author: usize, seed: u64) {
    let pool: Vec<char> = (0..160u32)
        .map(|i| char::from_u32(0x4E00 + i * 7).expect("CJK block scalar"))
        .collect();
    for (a, author) in SYNTH_AUTHORS.iter().enumerate() {
        let alphabet: Vec<char> = (0..40).map(|k| pool[(a * 31 + k) % pool.len()]).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((a as u64 + 1) << 32));
        let poems: Vec<String> = (0..poems_per_author)
            .map(|_| draw_poem(&alphabet, &mut rng))
            .collect();
        let dir = root.join(author);
        fs::create_dir_all(&dir).unwrap();
        fs::write(dir.join("poems.txt"), poems.join("\n")).unwrap();
    }
}

/// The same corpus as a JSONL file, with ids chosen to match what the
/// author-directory ingest assigns, so downstream artifacts can be compared
/// byte for byte.
pub fn synthetic_corpus_jsonl(root: &Path) -> String {
    let mut out = String::new();
    let mut authors: Vec<PathBuf> = fs::read_dir(root)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    authors.sort();
    for dir in authors {
        let author = dir.file_name().unwrap().to_str().unwrap().to_string();
        let text = fs::read_to_string(dir.join("poems.txt")).unwrap();
        for (idx, poem) in text
            .split("\n\n")
            .filter(|p| !p.trim().is_empty())
            .enumerate()
        {
            let record = serde_json::json!({
                "id": format!("{author}/poems.txt#{idx}"),
                "author": author,
                "text": poem.trim_matches('\n'),
            });
            out.push_str(&record.to_string());
            out.push('\n');
        }
    }
    out
}

pub fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_chardelta")
}

pub fn run_cli(args: &[&str], cwd: &Path) -> Output {
    Command::new(binary())
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

pub fn assert_cli_ok(args: &[&str], cwd: &Path) -> Output {
    let out = run_cli(args, cwd);
    assert!(
        out.status.success(),
        "command {:?} failed with {:?}\nstderr: {}",
        args,
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Recursively collect (relative path, file bytes), sorted by path.
pub fn dir_contents(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    fn walk(root: &Path, dir: &Path, into: &mut Vec<(PathBuf, Vec<u8>)>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, into);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_path_buf();
                into.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(root, root, &mut out);
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

pub fn assert_identical_trees(a: &Path, b: &Path) {
    let ca = dir_contents(a);
    let cb = dir_contents(b);
    let names_a: Vec<&PathBuf> = ca.iter().map(|(p, _)| p).collect();
    let names_b: Vec<&PathBuf> = cb.iter().map(|(p, _)| p).collect();
    assert_eq!(names_a, names_b, "output trees list different files");
    for ((path, bytes_a), (_, bytes_b)) in ca.iter().zip(&cb) {
        assert_eq!(bytes_a, bytes_b, "{} differs between trees", path.display());
    }
}
