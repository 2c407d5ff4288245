//! Frequency profiles and z-score normalization.
//!
//! Per sample, token counts become relative frequencies over the selected
//! feature list; per feature, frequencies are standardized to z-scores
//! across all samples of one test corpus. Distances downstream are computed
//! on these z-vectors.

use std::collections::HashMap;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::ResolvedSample;
use crate::scalar::Scalar;
use crate::tokenizer::{tokenize, TokenizerConfig};

/// Ranked feature vocabulary: most frequent first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub features: Vec<String>,
    pub n: usize,
    pub ngram: usize,
}

/// Token multiset of one sample.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenCounts {
    pub total: usize,
    pub counts: HashMap<String, usize>,
}

/// Per-sample relative frequencies with per-feature standardization over
/// the whole test corpus.
///
/// Row order in `rel_freqs` and `zscores` follows `labels`; column order
/// follows `spec.features`. Constant-frequency features cannot be
/// standardized and are recorded in `culled`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusProfile<T> {
    pub spec: FeatureSpec,
    pub labels: Vec<String>,
    pub rel_freqs: Vec<Vec<T>>,
    pub means: Vec<T>,
    pub stds: Vec<T>,
    pub zscores: Vec<Vec<T>>,
    pub culled: Vec<String>,
}

impl<T> CorpusProfile<T> {
    pub fn zscores_of(&self, label: &str) -> Option<&[T]> {
        let row = self.labels.iter().position(|l| l == label)?;
        Some(&self.zscores[row])
    }
}

/// Count tokens per sample. Label order of the result follows input order.
pub fn count_features(
    samples: &[ResolvedSample],
    cfg: &TokenizerConfig,
) -> Result<IndexMap<String, TokenCounts>> {
    if samples.is_empty() {
        return Err(Error::Argument("no samples to count".into()));
    }
    let mut out = IndexMap::with_capacity(samples.len());
    for sample in samples {
        let tokens = tokenize(&sample.text, cfg);
        if tokens.is_empty() {
            return Err(Error::Protocol(format!(
                "sample '{}' has no tokens after filtering; cannot form relative frequencies",
                sample.label
            )));
        }
        let mut counts: HashMap<String, usize> = HashMap::new();
        let total = tokens.len();
        for tok in tokens {
            *counts.entry(tok).or_insert(0) += 1;
        }
        out.insert(sample.label.clone(), TokenCounts { total, counts });
    }
    Ok(out)
}

/// The `n` most frequent tokens over all samples combined; equal counts are
/// ordered by token codepoint order.
pub fn select_mfc(
    counts: &IndexMap<String, TokenCounts>,
    n: usize,
    ngram: usize,
) -> Result<FeatureSpec> {
    if n == 0 {
        return Err(Error::Argument("feature count must be positive".into()));
    }
    let mut aggregate: HashMap<&str, usize> = HashMap::new();
    for tc in counts.values() {
        for (tok, &c) in &tc.counts {
            *aggregate.entry(tok.as_str()).or_insert(0) += c;
        }
    }
    if aggregate.len() < n {
        return Err(Error::Argument(format!(
            "requested {n} features but the corpus has only {} distinct tokens",
            aggregate.len()
        )));
    }
    let mut ranked: Vec<(&str, usize)> = aggregate.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let features: Vec<String> = ranked
        .into_iter()
        .take(n)
        .map(|(t, _)| t.to_string())
        .collect();
    Ok(FeatureSpec { features, n, ngram })
}

/// Standardize the selected features across all samples.
///
/// Standard deviation uses the N−1 divisor. Features whose relative
/// frequency is identical in every sample are culled (their deviation is
/// zero); culling everything is an error.
pub fn profile<T: Scalar>(
    counts: &IndexMap<String, TokenCounts>,
    spec: &FeatureSpec,
) -> Result<CorpusProfile<T>> {
    let n_samples = counts.len();
    if n_samples < 2 {
        return Err(Error::Argument(format!(
            "z-scores need at least 2 samples, got {n_samples}"
        )));
    }

    let labels: Vec<String> = counts.keys().cloned().collect();
    let raw: Vec<Vec<T>> = counts
        .values()
        .map(|tc| {
            let total = T::from_count(tc.total);
            spec.features
                .iter()
                .map(|f| T::from_count(tc.counts.get(f).copied().unwrap_or(0)) / total)
                .collect()
        })
        .collect();

    // constant columns have zero deviation; detect them exactly
    let mut keep = Vec::new();
    let mut culled = Vec::new();
    for (j, feature) in spec.features.iter().enumerate() {
        let first = raw[0][j];
        if raw.iter().all(|row| row[j] == first) {
            culled.push(feature.clone());
        } else {
            keep.push(j);
        }
    }
    if keep.is_empty() {
        return Err(Error::Protocol("no features retained".into()));
    }

    let features: Vec<String> = keep.iter().map(|&j| spec.features[j].clone()).collect();
    let rel_freqs: Vec<Vec<T>> = raw
        .iter()
        .map(|row| keep.iter().map(|&j| row[j]).collect())
        .collect();

    let n = T::from_count(n_samples);
    let n_minus_one = T::from_count(n_samples - 1);
    let mut means = Vec::with_capacity(keep.len());
    let mut stds = Vec::with_capacity(keep.len());
    for j in 0..keep.len() {
        let mean = rel_freqs
            .iter()
            .map(|row| row[j])
            .fold(T::zero(), |a, b| a + b)
            / n;
        let ss = rel_freqs
            .iter()
            .map(|row| {
                let d = row[j] - mean;
                d * d
            })
            .fold(T::zero(), |a, b| a + b);
        let std = (ss / n_minus_one).sqrt();
        if std == T::zero() {
            // numerically constant even though not bit-identical
            culled.push(features[j].clone());
        }
        means.push(mean);
        stds.push(std);
    }
    // drop any column that collapsed numerically
    let retained: Vec<usize> = (0..keep.len()).filter(|&j| stds[j] != T::zero()).collect();
    if retained.is_empty() {
        return Err(Error::Protocol("no features retained".into()));
    }
    let select = |v: &[T]| -> Vec<T> { retained.iter().map(|&j| v[j]).collect() };
    let features: Vec<String> = retained.iter().map(|&j| features[j].clone()).collect();
    let rel_freqs: Vec<Vec<T>> = rel_freqs.iter().map(|row| select(row)).collect();
    let means = select(&means);
    let stds = select(&stds);

    let zscores: Vec<Vec<T>> = rel_freqs
        .iter()
        .map(|row| {
            row.iter()
                .zip(means.iter().zip(&stds))
                .map(|(&x, (&mu, &sigma))| (x - mu) / sigma)
                .collect()
        })
        .collect();

    let n_features = features.len();
    Ok(CorpusProfile {
        spec: FeatureSpec {
            features,
            n: n_features,
            ngram: spec.ngram,
        },
        labels,
        rel_freqs,
        means,
        stds,
        zscores,
        culled,
    })
}

/// Relative-frequency table: one row per feature in rank order, one column
/// per sample, 10 significant digits.
pub fn frequencies_csv<T: Scalar>(p: &CorpusProfile<T>) -> String {
    feature_table_csv(p, &p.rel_freqs, |x| {
        crate::report::format_significant(x, 10)
    })
}

/// Z-score table with the same shape, 6 decimal places.
pub fn zscores_csv<T: Scalar>(p: &CorpusProfile<T>) -> String {
    feature_table_csv(p, &p.zscores, |x| format!("{x:.6}"))
}

fn feature_table_csv<T: Scalar>(
    p: &CorpusProfile<T>,
    rows_by_sample: &[Vec<T>],
    fmt: impl Fn(T) -> String,
) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(vec![]);
    let mut header = vec!["feature".to_string()];
    header.extend(p.labels.iter().cloned());
    w.write_record(&header).expect("csv record");
    for (j, feature) in p.spec.features.iter().enumerate() {
        let mut record = vec![feature.clone()];
        record.extend(rows_by_sample.iter().map(|row| fmt(row[j])));
        w.write_record(&record).expect("csv record");
    }
    String::from_utf8(w.into_inner().expect("csv flush")).expect("csv utf8")
}
