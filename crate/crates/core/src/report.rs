//! Evaluation and artifact emission.
//!
//! Everything here is a pure function of its input: no timestamps, fixed
//! float formatting, stable iteration orders. Emitted bytes are identical
//! across runs and platforms.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cluster::Dendrogram;
use crate::delta::DeltaMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const REPORT_FORMAT: &str = "chardelta.report";
pub const REPORT_VERSION: u32 = 1;

/// Numeric precision of the distance table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Precision {
    /// 4 decimal places; zeros print as `0`.
    #[serde(rename = "4")]
    Decimal4,
    /// Shortest round-trip representation.
    #[serde(rename = "full")]
    Full,
}

impl FromStr for Precision {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "4" => Ok(Precision::Decimal4),
            "full" => Ok(Precision::Full),
            other => Err(Error::Config(format!(
                "unknown precision '{other}' (expected 4 or full)"
            ))),
        }
    }
}

/// `x` with up to `digits` significant digits, plain decimal notation,
/// trailing zeros trimmed.
pub fn format_significant<T: Scalar>(x: T, digits: usize) -> String {
    let v = x.to_f64().unwrap_or(f64::NAN);
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let exponent = v.abs().log10().floor() as i32;
    let decimals = (digits as i32 - 1 - exponent).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn table_cell<T: Scalar>(v: T, precision: Precision) -> String {
    if v == T::zero() {
        return "0".to_string();
    }
    match precision {
        Precision::Decimal4 => format!("{v:.4}"),
        Precision::Full => format!("{v}"),
    }
}

/// Distance table: header row of labels after an empty cell, each data row
/// prefixed with its label.
pub fn table_csv<T: Scalar>(m: &DeltaMatrix<T>, precision: Precision) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(vec![]);
    let mut header = vec![String::new()];
    header.extend(m.labels.iter().cloned());
    w.write_record(&header).expect("csv record");
    for (i, label) in m.labels.iter().enumerate() {
        let mut record = vec![label.clone()];
        record.extend(m.values[i].iter().map(|&v| table_cell(v, precision)));
        w.write_record(&record).expect("csv record");
    }
    String::from_utf8(w.into_inner().expect("csv flush")).expect("csv utf8")
}

/// Parse a table written by [`table_csv`].
pub fn parse_table_csv(text: &str) -> Result<DeltaMatrix<f64>> {
    parse_table_csv_at(text, Path::new("<matrix>"))
}

pub fn read_table_csv(path: &Path) -> Result<DeltaMatrix<f64>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8(bytes).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        offset: e.utf8_error().valid_up_to(),
    })?;
    parse_table_csv_at(&text, path)
}

fn parse_table_csv_at(text: &str, path: &Path) -> Result<DeltaMatrix<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| Error::parse(path, e.to_string()))?,
        None => return Err(Error::parse(path, "empty distance table")),
    };
    let labels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let n = labels.len();
    if n < 2 {
        return Err(Error::parse(
            path,
            format!("distance table has {n} labels, need at least 2"),
        ));
    }
    let mut values = Vec::with_capacity(n);
    for (i, record) in records.enumerate() {
        let record = record.map_err(|e| Error::parse(path, e.to_string()))?;
        if record.len() != n + 1 {
            return Err(Error::parse(
                path,
                format!(
                    "row {} has {} cells, expected {}",
                    i + 2,
                    record.len(),
                    n + 1
                ),
            ));
        }
        let label = &record[0];
        if i >= n || label != labels[i] {
            return Err(Error::parse(
                path,
                format!("row {} label '{label}' does not match header order", i + 2),
            ));
        }
        let row: Vec<f64> = record
            .iter()
            .skip(1)
            .map(|cell| {
                cell.parse::<f64>().map_err(|_| {
                    Error::parse(path, format!("bad number '{cell}' in row {}", i + 2))
                })
            })
            .collect::<Result<_>>()?;
        values.push(row);
    }
    if values.len() != n {
        return Err(Error::parse(
            path,
            format!("distance table has {} rows, expected {n}", values.len()),
        ));
    }
    let m = DeltaMatrix {
        labels,
        values,
        n_features: None,
    };
    m.validate()?;
    Ok(m)
}

/// Attribution outcome of one sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleOutcome<T> {
    pub label: String,
    pub nearest: String,
    pub distance: T,
    pub correct: bool,
}

/// How far an author's two samples sit from everyone else: positive margin
/// means the pair is closer to each other than to any other sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuthorMargin<T> {
    pub author: String,
    pub same_distance: T,
    pub min_cross_distance: T,
    pub margin: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusAccuracy<T> {
    pub corpus_index: usize,
    pub correct: usize,
    pub total: usize,
    pub accuracy: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributionReport<T> {
    pub per_sample: Vec<SampleOutcome<T>>,
    pub accuracy: T,
    pub per_corpus: Vec<CorpusAccuracy<T>>,
    pub separation: Vec<AuthorMargin<T>>,
}

impl<T: Scalar> AttributionReport<T> {
    /// Attach the test-corpus index the evaluated matrix came from.
    pub fn with_corpus_index(mut self, corpus_index: usize) -> Self {
        let correct = self.per_sample.iter().filter(|s| s.correct).count();
        let total = self.per_sample.len();
        self.per_corpus = vec![CorpusAccuracy {
            corpus_index,
            correct,
            total,
            accuracy: self.accuracy,
        }];
        self
    }
}

fn split_label(label: &str) -> Result<(&str, &str)> {
    let (author, suffix) = label.rsplit_once('_').ok_or_else(|| {
        Error::Labeling(format!("label '{label}' is not of the form <author>_<1|2>"))
    })?;
    if suffix != "1" && suffix != "2" {
        return Err(Error::Labeling(format!(
            "label '{label}' has sample suffix '{suffix}', expected 1 or 2"
        )));
    }
    Ok((author, suffix))
}

/// Nearest-neighbor attribution over the matrix: for every sample, find the
/// closest other sample (ties resolved toward the earlier label) and check
/// whether it belongs to the same author.
pub fn nearest_neighbor_eval<T: Scalar>(m: &DeltaMatrix<T>) -> Result<AttributionReport<T>> {
    m.validate()?;
    let n = m.len();
    let mut authors: Vec<&str> = Vec::with_capacity(n);
    let mut author_order: Vec<&str> = Vec::new();
    for label in &m.labels {
        let (author, _) = split_label(label)?;
        if !author_order.contains(&author) {
            author_order.push(author);
        }
        authors.push(author);
    }
    for &author in &author_order {
        let count = authors.iter().filter(|&&a| a == author).count();
        if count != 2 {
            return Err(Error::Labeling(format!(
                "author '{author}' has {count} samples, expected 2"
            )));
        }
    }
    if author_order.len() < 2 {
        return Err(Error::Argument(
            "attribution needs at least 2 authors".into(),
        ));
    }

    let mut per_sample = Vec::with_capacity(n);
    let mut correct_count = 0usize;
    for i in 0..n {
        let mut nearest = None;
        for j in 0..n {
            if j == i {
                continue;
            }
            let d = m.get(i, j);
            if nearest.is_none_or(|(_, best)| d < best) {
                nearest = Some((j, d));
            }
        }
        let (j, distance) = nearest.expect("n >= 4 so another sample exists");
        let correct = authors[i] == authors[j];
        correct_count += usize::from(correct);
        per_sample.push(SampleOutcome {
            label: m.labels[i].clone(),
            nearest: m.labels[j].clone(),
            distance,
            correct,
        });
    }
    let accuracy = T::from_count(correct_count) / T::from_count(n);

    let mut separation = Vec::with_capacity(author_order.len());
    for &author in &author_order {
        let own: Vec<usize> = (0..n).filter(|&i| authors[i] == author).collect();
        let same_distance = m.get(own[0], own[1]);
        let mut min_cross: Option<T> = None;
        for &i in &own {
            for (j, &other) in authors.iter().enumerate() {
                if other == author {
                    continue;
                }
                let d = m.get(i, j);
                if min_cross.is_none_or(|best| d < best) {
                    min_cross = Some(d);
                }
            }
        }
        let min_cross_distance = min_cross.expect("at least 2 authors");
        separation.push(AuthorMargin {
            author: author.to_string(),
            same_distance,
            min_cross_distance,
            margin: min_cross_distance - same_distance,
        });
    }

    Ok(AttributionReport {
        per_sample,
        accuracy,
        per_corpus: vec![],
        separation,
    })
}

#[derive(Serialize, Deserialize)]
struct ReportFile<T> {
    format: String,
    version: u32,
    #[serde(flatten)]
    report: AttributionReport<T>,
}

pub fn write_report<T: Scalar + Serialize>(r: &AttributionReport<T>, out: &Path) -> Result<()> {
    let file = ReportFile {
        format: REPORT_FORMAT.to_string(),
        version: REPORT_VERSION,
        report: r.clone(),
    };
    let mut bytes = serde_json::to_vec_pretty(&file).expect("report serializes");
    bytes.push(b'\n');
    crate::pipeline::write_atomic(out, &bytes)
}

/// Color scheme of the heatmap.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Palette {
    /// Light to dark blue.
    Sequential,
    /// Blue through white to red around the midpoint.
    Diverging,
}

impl FromStr for Palette {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sequential" => Ok(Palette::Sequential),
            "diverging" => Ok(Palette::Diverging),
            other => Err(Error::Config(format!(
                "unknown palette '{other}' (expected sequential or diverging)"
            ))),
        }
    }
}

fn lerp(a: (u8, u8, u8), b: (u8, u8, u8), t: f64) -> (u8, u8, u8) {
    let ch = |x: u8, y: u8| -> u8 { (x as f64 + (y as f64 - x as f64) * t).round() as u8 };
    (ch(a.0, b.0), ch(a.1, b.1), ch(a.2, b.2))
}

fn color_at(palette: Palette, t: f64) -> String {
    let (r, g, b) = match palette {
        Palette::Sequential => lerp((247, 251, 255), (8, 48, 107), t),
        Palette::Diverging => {
            if t <= 0.5 {
                lerp((33, 102, 172), (247, 247, 247), t * 2.0)
            } else {
                lerp((247, 247, 247), (178, 24, 43), (t - 0.5) * 2.0)
            }
        }
    };
    format!("#{r:02x}{g:02x}{b:02x}")
}

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Heatmap of the distance matrix, cells in label order, colors linearly
/// interpolated between 0 and the matrix maximum.
pub fn heatmap_svg<T: Scalar>(m: &DeltaMatrix<T>, palette: Palette) -> String {
    let n = m.len();
    let cell = 18.0;
    let max_label = m
        .labels
        .iter()
        .map(|l| l.chars().count())
        .max()
        .unwrap_or(0);
    let margin = 12.0 + max_label as f64 * 12.0;
    let legend_w = 70.0;
    let width = margin + n as f64 * cell + legend_w + 20.0;
    let height = margin + n as f64 * cell + 20.0;

    let max = m
        .values
        .iter()
        .flatten()
        .fold(T::zero(), |a, &b| if b > a { b } else { a });
    let t_of = |v: T| -> f64 {
        if max == T::zero() {
            0.0
        } else {
            (v / max).to_f64().unwrap_or(0.0)
        }
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" \
         font-family=\"monospace\" font-size=\"11\">\n"
    ));
    svg.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{width:.0}\" height=\"{height:.0}\" fill=\"#ffffff\"/>\n"
    ));

    for (i, label) in m.labels.iter().enumerate() {
        let y = margin + i as f64 * cell + cell / 2.0 + 4.0;
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{y:.1}\" text-anchor=\"end\">{}</text>\n",
            margin - 6.0,
            escape_xml(label)
        ));
        let x = margin + i as f64 * cell + cell / 2.0 + 4.0;
        svg.push_str(&format!(
            "<text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"start\" \
             transform=\"rotate(-90 {x:.1} {:.1})\">{}</text>\n",
            margin - 6.0,
            margin - 6.0,
            escape_xml(label)
        ));
    }

    for i in 0..n {
        for j in 0..n {
            let x = margin + j as f64 * cell;
            let y = margin + i as f64 * cell;
            let fill = color_at(palette, t_of(m.get(i, j)));
            svg.push_str(&format!(
                "<rect class=\"cell\" x=\"{x:.1}\" y=\"{y:.1}\" width=\"{cell:.1}\" \
                 height=\"{cell:.1}\" fill=\"{fill}\"/>\n"
            ));
        }
    }

    // legend: discrete vertical ramp from max (top) to 0 (bottom)
    let steps = 24usize;
    let legend_x = margin + n as f64 * cell + 20.0;
    let legend_h = (n as f64 * cell).max(cell * 4.0);
    let step_h = legend_h / steps as f64;
    for s in 0..steps {
        let t = 1.0 - s as f64 / (steps - 1) as f64;
        let y = margin + s as f64 * step_h;
        svg.push_str(&format!(
            "<rect class=\"legend\" x=\"{legend_x:.1}\" y=\"{y:.1}\" width=\"12\" \
             height=\"{:.2}\" fill=\"{}\"/>\n",
            step_h + 0.5,
            color_at(palette, t)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\">{}</text>\n",
        legend_x + 16.0,
        margin + 9.0,
        table_cell(max, Precision::Decimal4)
    ));
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\">0</text>\n",
        legend_x + 16.0,
        margin + legend_h
    ));
    svg.push_str("</svg>\n");
    svg
}

/// Horizontal dendrogram: leaves on the left, equally spaced; merge depth
/// grows to the right in proportion to merge height.
pub fn dendrogram_svg<T: Scalar>(d: &Dendrogram<T>) -> String {
    let n = d.leaf_count();
    let row = 22.0;
    let max_label = d
        .leaves
        .iter()
        .map(|l| l.chars().count())
        .max()
        .unwrap_or(0);
    let label_w = 10.0 + max_label as f64 * 12.0;
    let plot_w = 420.0;
    let width = label_w + plot_w + 20.0;
    let height = n as f64 * row + 50.0;

    let max_h = d
        .merges
        .iter()
        .map(|m| m.height)
        .fold(T::zero(), |a, b| if b > a { b } else { a });
    let scale = |h: T| -> f64 {
        if max_h == T::zero() {
            0.0
        } else {
            (h / max_h).to_f64().unwrap_or(0.0) * plot_w
        }
    };

    // leaf order by left-to-right traversal
    let mut order = Vec::with_capacity(n);
    let mut stack = vec![d.root()];
    while let Some(node) = stack.pop() {
        if node < n {
            order.push(node);
        } else {
            let m = &d.merges[node - n];
            stack.push(m.right);
            stack.push(m.left);
        }
    }
    let mut slot = vec![0usize; n];
    for (pos, &leaf) in order.iter().enumerate() {
        slot[leaf] = pos;
    }

    let leaf_y = |leaf: usize| 20.0 + slot[leaf] as f64 * row + row / 2.0;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" \
         font-family=\"monospace\" font-size=\"12\">\n"
    ));
    svg.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{width:.0}\" height=\"{height:.0}\" fill=\"#ffffff\"/>\n"
    ));

    for &leaf in &order {
        svg.push_str(&format!(
            "<text x=\"6\" y=\"{:.2}\">{}</text>\n",
            leaf_y(leaf) + 4.0,
            escape_xml(&d.leaves[leaf])
        ));
    }

    // y center and x depth of every node
    let mut ys = vec![0.0f64; n + d.merges.len()];
    let mut xs = vec![label_w; n + d.merges.len()];
    for (i, y) in ys.iter_mut().enumerate().take(n) {
        *y = leaf_y(i);
    }
    for (k, m) in d.merges.iter().enumerate() {
        let node = n + k;
        let x = label_w + scale(m.height);
        let (yl, yr) = (ys[m.left], ys[m.right]);
        svg.push_str(&format!(
            "<path d=\"M {:.2} {yl:.2} H {x:.2} V {yr:.2} H {:.2}\" fill=\"none\" \
             stroke=\"#333333\" stroke-width=\"1.5\"/>\n",
            xs[m.left], xs[m.right]
        ));
        ys[node] = (yl + yr) / 2.0;
        xs[node] = x;
    }

    // height axis under the plot
    let axis_y = n as f64 * row + 32.0;
    svg.push_str(&format!(
        "<line x1=\"{label_w:.2}\" y1=\"{axis_y:.2}\" x2=\"{:.2}\" y2=\"{axis_y:.2}\" \
         stroke=\"#333333\" stroke-width=\"1\"/>\n",
        label_w + plot_w
    ));
    svg.push_str(&format!(
        "<text x=\"{label_w:.2}\" y=\"{:.2}\">0</text>\n",
        axis_y + 14.0
    ));
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>\n",
        label_w + plot_w,
        axis_y + 14.0,
        format_significant(max_h, 6)
    ));
    svg.push_str("</svg>\n");
    svg
}
