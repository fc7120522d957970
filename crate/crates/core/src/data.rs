//! Datasets, file loaders, PU split construction and evaluation metrics.
//!
//! A [`Dataset`] is what the solver sees: labeled positives followed by
//! unlabeled samples, stored as one flat row-major buffer. Ground-truth
//! labels for the unlabeled pool live only in [`PuSplit`], so they can be
//! used for transductive evaluation without ever reaching the solver.

use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Result, UsmoError};

/// Binary class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn as_i32(self) -> i32 {
        match self {
            Label::Positive => 1,
            Label::Negative => -1,
        }
    }

    /// `+1` / `-1`, the form used in prediction output.
    pub fn as_signed_str(self) -> &'static str {
        match self {
            Label::Positive => "+1",
            Label::Negative => "-1",
        }
    }
}

/// Training data for the solver: `p` labeled positives followed by `n`
/// unlabeled samples, all of dimension `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    p: usize,
    n: usize,
    points: Vec<f64>,
}

impl Dataset {
    pub fn new(positives: &[Vec<f64>], unlabeled: &[Vec<f64>]) -> Result<Self> {
        if positives.is_empty() {
            return Err(UsmoError::input("dataset needs at least one labeled positive"));
        }
        if unlabeled.is_empty() {
            return Err(UsmoError::input("dataset needs at least one unlabeled sample"));
        }
        let dim = positives[0].len();
        if dim == 0 {
            return Err(UsmoError::input("feature dimension must be at least 1"));
        }
        let mut points = Vec::with_capacity((positives.len() + unlabeled.len()) * dim);
        for (k, x) in positives.iter().chain(unlabeled).enumerate() {
            if x.len() != dim {
                return Err(UsmoError::input(format!(
                    "sample {k} has dimension {}, expected {dim}",
                    x.len()
                )));
            }
            points.extend_from_slice(x);
        }
        Ok(Dataset {
            dim,
            p: positives.len(),
            n: unlabeled.len(),
            points,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of labeled positives.
    pub fn p(&self) -> usize {
        self.p
    }

    /// Number of unlabeled samples.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Total number of samples, `p + n`.
    pub fn len(&self) -> usize {
        self.p + self.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sample by global index: positives occupy `0..p`, unlabeled `p..p+n`.
    #[inline]
    pub fn sample(&self, idx: usize) -> &[f64] {
        &self.points[idx * self.dim..(idx + 1) * self.dim]
    }

    #[inline]
    pub fn positive(&self, i: usize) -> &[f64] {
        debug_assert!(i < self.p);
        self.sample(i)
    }

    #[inline]
    pub fn unlabeled(&self, u: usize) -> &[f64] {
        debug_assert!(u < self.n);
        self.sample(self.p + u)
    }

    /// A copy with every feature multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Dataset {
        Dataset {
            points: self.points.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }
}

/// Samples with raw integer class labels, as read from disk.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledData {
    pub dim: usize,
    pub samples: Vec<Vec<f64>>,
    pub labels: Vec<i64>,
}

impl LabeledData {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Map raw labels to binary ones. With a target class the mapping is
    /// one-vs-all; without one, labels must already be `+1` or `-1`.
    pub fn binarize(&self, target_class: Option<i64>) -> Result<Vec<Label>> {
        self.labels
            .iter()
            .enumerate()
            .map(|(k, &y)| match (target_class, y) {
                (Some(t), y) if y == t => Ok(Label::Positive),
                (Some(_), _) => Ok(Label::Negative),
                (None, 1) => Ok(Label::Positive),
                (None, -1) => Ok(Label::Negative),
                (None, y) => Err(UsmoError::input(format!(
                    "sample {} has label {y}; binary data needs +1/-1 (use a target class for one-vs-all)",
                    k + 1
                ))),
            })
            .collect()
    }

    /// Pads every sample with zeros up to `dim`. Fails if any sample is longer.
    pub fn with_dim(mut self, dim: usize) -> Result<Self> {
        if self.dim > dim {
            return Err(UsmoError::input(format!(
                "data has dimension {}, expected at most {dim}",
                self.dim
            )));
        }
        for x in &mut self.samples {
            x.resize(dim, 0.0);
        }
        self.dim = dim;
        Ok(self)
    }
}

fn parse_label(token: &str, line: usize) -> Result<i64> {
    if let Ok(v) = token.parse::<i64>() {
        return Ok(v);
    }
    match token.parse::<f64>() {
        Ok(v) if v.fract() == 0.0 && v.is_finite() => Ok(v as i64),
        _ => Err(UsmoError::parse(line, format!("invalid label '{token}'"))),
    }
}

/// Reads LIBSVM/SVMlight text: `<label> <idx>:<val> ...` with 1-based,
/// strictly ascending indices. Missing indices are zeros; the dimension is
/// the largest index seen. Blank lines and `#` comments are skipped.
pub fn load_libsvm<R: BufRead>(reader: R) -> Result<LabeledData> {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels = Vec::new();
    let mut dim = 0usize;

    for (k, line) in reader.lines().enumerate() {
        let lineno = k + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label = parse_label(tokens.next().unwrap(), lineno)?;
        let mut row = Vec::new();
        let mut last = 0usize;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| UsmoError::parse(lineno, format!("expected <idx>:<val>, got '{tok}'")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| UsmoError::parse(lineno, format!("invalid feature index '{idx}'")))?;
            if idx == 0 {
                return Err(UsmoError::parse(lineno, "feature indices are 1-based"));
            }
            if idx <= last {
                return Err(UsmoError::parse(
                    lineno,
                    format!("feature index {idx} not ascending (after {last})"),
                ));
            }
            let val: f64 = val
                .parse()
                .map_err(|_| UsmoError::parse(lineno, format!("invalid feature value '{val}'")))?;
            if !val.is_finite() {
                return Err(UsmoError::parse(lineno, format!("non-finite feature value '{val}'")));
            }
            last = idx;
            row.push((idx, val));
        }
        dim = dim.max(last);
        rows.push(row);
        labels.push(label);
    }

    let samples = rows
        .into_iter()
        .map(|row| {
            let mut x = vec![0.0; dim];
            for (idx, val) in row {
                x[idx - 1] = val;
            }
            x
        })
        .collect();
    Ok(LabeledData { dim, samples, labels })
}

/// Writes samples in LIBSVM format, omitting zero features.
pub fn write_libsvm<W: Write>(data: &LabeledData, mut out: W) -> Result<()> {
    for (x, y) in data.samples.iter().zip(&data.labels) {
        write!(out, "{y}")?;
        for (k, v) in x.iter().enumerate() {
            if v.to_bits() != 0 {
                write!(out, " {}:{}", k + 1, v)?;
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Reads a numeric CSV where column `label_column` (0-based) holds the class
/// and every other column is a feature.
pub fn load_csv<R: std::io::Read>(reader: R, label_column: usize, has_header: bool) -> Result<LabeledData> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut data = LabeledData::default();
    let mut width = None;
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            UsmoError::parse(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if label_column >= record.len() {
            return Err(UsmoError::parse(
                line,
                format!("label column {label_column} out of range ({} columns)", record.len()),
            ));
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(UsmoError::parse(
                    line,
                    format!("expected {w} columns, found {}", record.len()),
                ))
            }
            _ => {}
        }
        let mut x = Vec::with_capacity(record.len() - 1);
        let mut label = 0;
        for (col, cell) in record.iter().enumerate() {
            if col == label_column {
                label = parse_label(cell, line)
                    .map_err(|_| UsmoError::parse(line, format!("column {}: invalid label '{cell}'", col + 1)))?;
            } else {
                let v: f64 = cell
                    .parse()
                    .map_err(|_| UsmoError::parse(line, format!("column {}: non-numeric value '{cell}'", col + 1)))?;
                x.push(v);
            }
        }
        data.samples.push(x);
        data.labels.push(label);
    }
    data.dim = width.map_or(0, |w| w - 1);
    Ok(data)
}

/// A PU training set plus the hidden ground truth of its unlabeled pool.
#[derive(Debug, Clone)]
pub struct PuSplit {
    pub dataset: Dataset,
    /// True labels of the unlabeled samples, in dataset order. Evaluation only.
    pub hidden_labels: Vec<Label>,
    /// Class proportion of the whole labeled source: #positives / #samples.
    pub prior: f64,
}

/// Labels `ceil(fraction * #positives)` uniformly chosen positives; every
/// other sample goes to the unlabeled pool with its true label retained.
pub fn make_pu_split(samples: &[Vec<f64>], labels: &[Label], labeled_fraction: f64, seed: u64) -> Result<PuSplit> {
    if samples.len() != labels.len() {
        return Err(UsmoError::input("samples and labels differ in length"));
    }
    if !(labeled_fraction > 0.0 && labeled_fraction <= 1.0) {
        return Err(UsmoError::config(format!(
            "labeled fraction must lie in (0, 1], got {labeled_fraction}"
        )));
    }
    let mut pos: Vec<usize> = (0..labels.len()).filter(|&k| labels[k] == Label::Positive).collect();
    if pos.is_empty() {
        return Err(UsmoError::input("no positive samples to label"));
    }
    let prior = pos.len() as f64 / samples.len() as f64;
    let n_labeled = ((labeled_fraction * pos.len() as f64).ceil() as usize).clamp(1, pos.len());

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pos.shuffle(&mut rng);
    let mut chosen = pos[..n_labeled].to_vec();
    chosen.sort_unstable();

    let mut is_labeled = vec![false; samples.len()];
    for &k in &chosen {
        is_labeled[k] = true;
    }
    let positives: Vec<Vec<f64>> = chosen.iter().map(|&k| samples[k].clone()).collect();
    let mut unlabeled = Vec::new();
    let mut hidden_labels = Vec::new();
    for k in (0..samples.len()).filter(|&k| !is_labeled[k]) {
        unlabeled.push(samples[k].clone());
        hidden_labels.push(labels[k]);
    }
    let dataset = Dataset::new(&positives, &unlabeled)?;
    Ok(PuSplit {
        dataset,
        hidden_labels,
        prior,
    })
}

/// F = 2TP / (2TP + FP + FN), with 0 when nothing is positive on either side.
pub fn f_measure(predicted: &[Label], truth: &[Label]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(UsmoError::input(format!(
            "{} predictions for {} labels",
            predicted.len(),
            truth.len()
        )));
    }
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (&y_hat, &y) in predicted.iter().zip(truth) {
        match (y_hat, y) {
            (Label::Positive, Label::Positive) => tp += 1,
            (Label::Positive, Label::Negative) => fp += 1,
            (Label::Negative, Label::Positive) => fn_ += 1,
            (Label::Negative, Label::Negative) => {}
        }
    }
    let denom = 2 * tp + fp + fn_;
    Ok(if denom == 0 {
        0.0
    } else {
        (2 * tp) as f64 / denom as f64
    })
}

/// Two isotropic unit-variance Gaussian blobs whose centers sit `separation`
/// apart along the first axis. Positives come first.
pub fn two_blobs(n_pos: usize, n_neg: usize, dim: usize, separation: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<Label>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(n_pos + n_neg);
    let mut labels = Vec::with_capacity(n_pos + n_neg);
    for (count, label, shift) in [
        (n_pos, Label::Positive, 0.5 * separation),
        (n_neg, Label::Negative, -0.5 * separation),
    ] {
        for _ in 0..count {
            let mut x: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            x[0] += shift;
            samples.push(x);
            labels.push(label);
        }
    }
    (samples, labels)
}
