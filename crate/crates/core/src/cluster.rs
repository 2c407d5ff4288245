//! Agglomerative hierarchical clustering over a distance matrix.
//!
//! The naive O(n³) procedure with Lance–Williams updates is used; at the
//! reference scale (tens of samples) there is nothing to optimize. Ward
//! linkage runs on squared distances and reports square-root heights, the
//! other linkages work on the distances directly.
//!
//! Ties are broken toward the smallest (left, right) node-id pair so merge
//! sequences are reproducible across implementations.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::delta::DeltaMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    Ward,
    Average,
    Complete,
    Single,
}

impl FromStr for Linkage {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ward" => Ok(Linkage::Ward),
            "average" => Ok(Linkage::Average),
            "complete" => Ok(Linkage::Complete),
            "single" => Ok(Linkage::Single),
            other => Err(Error::Config(format!(
                "unknown linkage '{other}' (expected ward, average, complete, or single)"
            ))),
        }
    }
}

impl fmt::Display for Linkage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Linkage::Ward => "ward",
            Linkage::Average => "average",
            Linkage::Complete => "complete",
            Linkage::Single => "single",
        })
    }
}

/// One merge step. `left` and `right` are node ids: 0..n for leaves, n+k
/// for the cluster created by merge k. `left < right` always.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Merge<T> {
    pub left: usize,
    pub right: usize,
    pub height: T,
}

/// Binary merge tree over the matrix labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram<T> {
    pub leaves: Vec<String>,
    pub merges: Vec<Merge<T>>,
    pub linkage: Linkage,
    /// False when some merge height drops below its predecessor. Ward on
    /// a non-Euclidean matrix can do this; it is reported, not fatal.
    pub monotonic: bool,
}

impl<T: Scalar> Dendrogram<T> {
    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    /// Height of a node: 0 for leaves, merge height otherwise.
    pub fn height_of(&self, node: usize) -> T {
        let n = self.leaves.len();
        if node < n {
            T::zero()
        } else {
            self.merges[node - n].height
        }
    }

    pub fn root(&self) -> usize {
        self.leaves.len() + self.merges.len() - 1
    }
}

pub fn agglomerate<T: Scalar>(m: &DeltaMatrix<T>, linkage: Linkage) -> Result<Dendrogram<T>> {
    m.validate()?;
    let n = m.len();
    if n < 2 {
        return Err(Error::Integrity(format!(
            "clustering needs at least 2 samples, got {n}"
        )));
    }

    // working distances over node ids; ward operates on squares
    let total = 2 * n - 1;
    let mut dist = vec![vec![T::zero(); total]; total];
    #[allow(clippy::needless_range_loop)] // square fill over two indices
    for i in 0..n {
        for j in 0..n {
            let d = m.get(i, j);
            dist[i][j] = if linkage == Linkage::Ward { d * d } else { d };
        }
    }

    let mut active: Vec<usize> = (0..n).collect();
    let mut sizes = vec![1usize; total];
    let mut merges: Vec<Merge<T>> = Vec::with_capacity(n - 1);
    let mut monotonic = true;

    for step in 0..(n - 1) {
        // active is sorted ascending, so the first minimum found is the
        // smallest (left, right) pair
        let mut best: Option<(usize, usize, T)> = None;
        for (ai, &a) in active.iter().enumerate() {
            for &b in &active[ai + 1..] {
                let d = dist[a][b];
                if best.is_none_or(|(_, _, bd)| d < bd) {
                    best = Some((a, b, d));
                }
            }
        }
        let (a, b, d) = best.expect("at least one active pair");

        let height = if linkage == Linkage::Ward {
            d.sqrt()
        } else {
            d
        };
        if let Some(prev) = merges.last() {
            let tol =
                T::from(1e-12).expect("tolerance representable") * (T::one() + prev.height.abs());
            if height < prev.height - tol {
                monotonic = false;
            }
        }

        let new = n + step;
        let (sa, sb) = (sizes[a], sizes[b]);
        for &k in &active {
            if k == a || k == b {
                continue;
            }
            let (dak, dbk, dab) = (dist[a][k], dist[b][k], dist[a][b]);
            let updated = match linkage {
                Linkage::Ward => {
                    let sk = sizes[k];
                    let denom = T::from_count(sa + sb + sk);
                    (T::from_count(sa + sk) * dak + T::from_count(sb + sk) * dbk
                        - T::from_count(sk) * dab)
                        / denom
                }
                Linkage::Average => {
                    (T::from_count(sa) * dak + T::from_count(sb) * dbk) / T::from_count(sa + sb)
                }
                Linkage::Complete => {
                    if dak > dbk {
                        dak
                    } else {
                        dbk
                    }
                }
                Linkage::Single => {
                    if dak < dbk {
                        dak
                    } else {
                        dbk
                    }
                }
            };
            dist[new][k] = updated;
            dist[k][new] = updated;
        }
        sizes[new] = sa + sb;
        active.retain(|&x| x != a && x != b);
        active.push(new);
        merges.push(Merge {
            left: a,
            right: b,
            height,
        });
    }

    Ok(Dendrogram {
        leaves: m.labels.clone(),
        merges,
        linkage,
        monotonic,
    })
}

/// True when every author's two samples merge with each other before
/// anything else, i.e. some merge joins exactly those two leaves.
pub fn author_purity<T: Scalar>(d: &Dendrogram<T>) -> Result<(bool, Vec<String>)> {
    let mut leaf_pairs: HashMap<&str, Vec<usize>> = HashMap::new();
    let mut author_order: Vec<&str> = Vec::new();
    for (i, label) in d.leaves.iter().enumerate() {
        let (author, suffix) = label.rsplit_once('_').ok_or_else(|| {
            Error::Labeling(format!("label '{label}' is not of the form <author>_<1|2>"))
        })?;
        if suffix != "1" && suffix != "2" {
            return Err(Error::Labeling(format!(
                "label '{label}' has sample suffix '{suffix}', expected 1 or 2"
            )));
        }
        let entry = leaf_pairs.entry(author).or_default();
        if entry.is_empty() {
            author_order.push(author);
        }
        entry.push(i);
    }
    for (&author, leaves) in &leaf_pairs {
        if leaves.len() != 2 {
            return Err(Error::Labeling(format!(
                "author '{author}' has {} samples, expected 2",
                leaves.len()
            )));
        }
    }

    let mut violations = Vec::new();
    for author in author_order {
        let pair = &leaf_pairs[author];
        let (lo, hi) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
        let merged_first = d.merges.iter().any(|m| m.left == lo && m.right == hi);
        if !merged_first {
            violations.push(author.to_string());
        }
    }
    Ok((violations.is_empty(), violations))
}

fn needs_quote(label: &str) -> bool {
    label.chars().any(|c| {
        c.is_whitespace() || matches!(c, '(' | ')' | '[' | ']' | '\'' | ':' | ';' | ',' | '_')
    })
}

fn newick_label(label: &str) -> String {
    if needs_quote(label) {
        format!("'{}'", label.replace('\'', "''"))
    } else {
        label.to_string()
    }
}

/// Newick serialization. Branch length of a node is the parent's merge
/// height minus the node's own height; leaves sit at height 0. Labels with
/// whitespace or reserved characters are single-quoted.
pub fn to_newick<T: Scalar>(d: &Dendrogram<T>) -> String {
    fn node<T: Scalar>(d: &Dendrogram<T>, id: usize, out: &mut String) {
        let n = d.leaves.len();
        if id < n {
            out.push_str(&newick_label(&d.leaves[id]));
        } else {
            let merge = &d.merges[id - n];
            out.push('(');
            node(d, merge.left, out);
            out.push_str(&format!(":{}", merge.height - d.height_of(merge.left)));
            out.push(',');
            node(d, merge.right, out);
            out.push_str(&format!(":{}", merge.height - d.height_of(merge.right)));
            out.push(')');
        }
    }
    let mut out = String::new();
    node(d, d.root(), &mut out);
    out.push(';');
    out
}

/// Merge table: one row per step with the merged node ids and the height.
pub fn merges_csv<T: Scalar>(d: &Dendrogram<T>) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(vec![]);
    w.write_record(["step", "left", "right", "height"])
        .expect("csv record");
    for (i, m) in d.merges.iter().enumerate() {
        w.write_record(&[
            (i + 1).to_string(),
            m.left.to_string(),
            m.right.to_string(),
            format!("{}", m.height),
        ])
        .expect("csv record");
    }
    String::from_utf8(w.into_inner().expect("csv flush")).expect("csv utf8")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(labels: &[&str], rows: &[&[f64]]) -> DeltaMatrix<f64> {
        DeltaMatrix {
            labels: labels.iter().map(|s| s.to_string()).collect(),
            values: rows.iter().map(|r| r.to_vec()).collect(),
            n_features: None,
        }
    }

    fn two_pairs() -> DeltaMatrix<f64> {
        matrix(
            &["A", "B", "C", "D"],
            &[
                &[0.0, 0.1, 1.0, 1.0],
                &[0.1, 0.0, 1.0, 1.0],
                &[1.0, 1.0, 0.0, 0.1],
                &[1.0, 1.0, 0.1, 0.0],
            ],
        )
    }

    #[test]
    fn two_samples_merge_at_their_distance() {
        let m = matrix(&["A", "B"], &[&[0.0, 0.7], &[0.7, 0.0]]);
        for linkage in [
            Linkage::Ward,
            Linkage::Average,
            Linkage::Complete,
            Linkage::Single,
        ] {
            let d = agglomerate(&m, linkage).unwrap();
            assert_eq!(d.merges.len(), 1);
            assert_eq!((d.merges[0].left, d.merges[0].right), (0, 1));
            assert!((d.merges[0].height - 0.7).abs() < 1e-12);
            assert!(d.monotonic);
        }
    }

    #[test]
    fn separated_pairs_merge_first() {
        let m = two_pairs();
        for linkage in [
            Linkage::Ward,
            Linkage::Average,
            Linkage::Complete,
            Linkage::Single,
        ] {
            let d = agglomerate(&m, linkage).unwrap();
            let steps: Vec<(usize, usize)> =
                d.merges.iter().map(|mg| (mg.left, mg.right)).collect();
            assert_eq!(steps, [(0, 1), (2, 3), (4, 5)], "{linkage}");
        }
        // with every cross distance equal, these linkages agree on the root
        for linkage in [Linkage::Average, Linkage::Complete, Linkage::Single] {
            let d = agglomerate(&m, linkage).unwrap();
            assert_eq!(d.merges[2].height, 1.0);
        }
        // ward: hand-applied recurrence on squared distances
        let d2_pair_c = (2.0 * 1.0 + 2.0 * 1.0 - 1.0 * 0.01) / 3.0;
        let d2_root: f64 = (3.0 * d2_pair_c + 3.0 * d2_pair_c - 2.0 * 0.01) / 4.0;
        let ward = agglomerate(&m, Linkage::Ward).unwrap();
        assert!((ward.merges[2].height - d2_root.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn ties_take_the_lowest_pair() {
        let m = matrix(
            &["A", "B", "C"],
            &[&[0.0, 1.0, 1.0], &[1.0, 0.0, 1.0], &[1.0, 1.0, 0.0]],
        );
        let d = agglomerate(&m, Linkage::Average).unwrap();
        let steps: Vec<(usize, usize)> = d.merges.iter().map(|mg| (mg.left, mg.right)).collect();
        assert_eq!(steps, [(0, 1), (2, 3)]);
        assert_eq!(d.merges[1].height, 1.0);
    }

    #[test]
    fn rejects_invalid_matrices() {
        let asym = matrix(&["A", "B"], &[&[0.0, 0.5], &[0.4, 0.0]]);
        assert!(matches!(
            agglomerate(&asym, Linkage::Average),
            Err(Error::Integrity(_))
        ));
        let tiny = matrix(&["A"], &[&[0.0]]);
        assert!(matches!(
            agglomerate(&tiny, Linkage::Average),
            Err(Error::Integrity(_))
        ));
    }

    fn dendrogram(leaves: &[&str], merges: &[(usize, usize, f64)]) -> Dendrogram<f64> {
        Dendrogram {
            leaves: leaves.iter().map(|s| s.to_string()).collect(),
            merges: merges
                .iter()
                .map(|&(left, right, height)| Merge {
                    left,
                    right,
                    height,
                })
                .collect(),
            linkage: Linkage::Average,
            monotonic: true,
        }
    }

    #[test]
    fn purity_holds_when_pairs_merge_directly() {
        let d = dendrogram(
            &["甲_1", "甲_2", "乙_1", "乙_2"],
            &[(0, 1, 0.1), (2, 3, 0.2), (4, 5, 1.0)],
        );
        let (pure, violations) = author_purity(&d).unwrap();
        assert!(pure);
        assert!(violations.is_empty());
    }

    #[test]
    fn purity_violations_name_authors() {
        // 甲_1 first merges with 乙_2
        let d = dendrogram(
            &["甲_1", "乙_2", "甲_2", "乙_1"],
            &[(0, 1, 0.1), (2, 3, 0.2), (4, 5, 1.0)],
        );
        let (pure, violations) = author_purity(&d).unwrap();
        assert!(!pure);
        assert_eq!(violations, ["甲", "乙"]);
    }

    #[test]
    fn purity_rejects_malformed_labels() {
        let d = dendrogram(&["甲", "乙_2"], &[(0, 1, 0.1)]);
        assert!(matches!(author_purity(&d), Err(Error::Labeling(_))));
        let bad_suffix = dendrogram(&["甲_3", "甲_1"], &[(0, 1, 0.1)]);
        assert!(matches!(
            author_purity(&bad_suffix),
            Err(Error::Labeling(_))
        ));
        let unpaired = dendrogram(
            &["甲_1", "甲_2", "甲_1", "乙_2"],
            &[(0, 1, 0.1), (2, 3, 0.2), (4, 5, 0.3)],
        );
        assert!(matches!(author_purity(&unpaired), Err(Error::Labeling(_))));
    }

    #[test]
    fn newick_single_merge() {
        let d = dendrogram(&["A", "B"], &[(0, 1, 0.5)]);
        assert_eq!(to_newick(&d), "(A:0.5,B:0.5);");
    }

    #[test]
    fn newick_nested_with_branch_lengths() {
        let d = agglomerate(&two_pairs(), Linkage::Average).unwrap();
        assert_eq!(to_newick(&d), "((A:0.1,B:0.1):0.9,(C:0.1,D:0.1):0.9);");
    }

    #[test]
    fn newick_quotes_reserved_labels() {
        let d = dendrogram(&["X Y", "甲_1"], &[(0, 1, 0.5)]);
        assert_eq!(to_newick(&d), "('X Y':0.5,'甲_1':0.5);");
        let with_quote = dendrogram(&["it's", "B"], &[(0, 1, 0.5)]);
        assert_eq!(to_newick(&with_quote), "('it''s':0.5,B:0.5);");
    }

    #[test]
    fn merge_table_lists_steps() {
        let d = agglomerate(&two_pairs(), Linkage::Average).unwrap();
        let csv = merges_csv(&d);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "step,left,right,height");
        assert_eq!(lines[1], "1,0,1,0.1");
        assert_eq!(lines[2], "2,2,3,0.1");
        assert_eq!(lines[3], "3,4,5,1");
    }
}
