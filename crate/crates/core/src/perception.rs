//! Classifier-mediated perception.
//!
//! A classifier is represented by its confusion matrix over the seven
//! emotions. Because a trained network applied to a fixed face image always
//! gives the same answer, the matrix is sampled once per (identity, emotion)
//! into a [`PerceptionTable`], and perception is a lookup into that table.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::emotion::Emotion;
use crate::error::{Error, Result};

const N: usize = Emotion::COUNT;

/// Header line of the confusion matrix CSV format.
pub const MATRIX_CSV_HEADER: &str = "true\\angry,disgust,fear,happy,neutral,sad,surprise";

/// Tolerance on row sums accepted when loading a matrix from disk.
pub const LOAD_ROW_TOLERANCE: f64 = 1e-6;

/// `rows[true][perceived]` is the probability that an agent displaying
/// `true` is read as `perceived`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub label: String,
    pub rows: [[f64; N]; N],
}

impl ConfusionMatrix {
    pub fn identity(label: impl Into<String>) -> Self {
        let mut rows = [[0.0; N]; N];
        for (i, row) in rows.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        ConfusionMatrix {
            label: label.into(),
            rows,
        }
    }

    /// Every true emotion is perceived as `target`.
    pub fn constant(label: impl Into<String>, target: Emotion) -> Self {
        let mut rows = [[0.0; N]; N];
        for row in rows.iter_mut() {
            row[target.index()] = 1.0;
        }
        ConfusionMatrix {
            label: label.into(),
            rows,
        }
    }

    /// Builds a matrix with `accuracy` on every diagonal entry. Of the
    /// remaining `1 - accuracy` in each row, a share `negativity_bias` is
    /// spread evenly over the negative emotions other than the true one and
    /// the rest evenly over the positive emotions other than the true one.
    pub fn synthesize(label: impl Into<String>, accuracy: f64, negativity_bias: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&accuracy) {
            return Err(Error::InvalidParameter(format!(
                "accuracy must lie in [0, 1], got {accuracy}"
            )));
        }
        if !(0.0..=1.0).contains(&negativity_bias) {
            return Err(Error::InvalidParameter(format!(
                "negativity bias must lie in [0, 1], got {negativity_bias}"
            )));
        }
        let off = 1.0 - accuracy;
        let mut rows = [[0.0; N]; N];
        for t in Emotion::ALL {
            let row = &mut rows[t.index()];
            row[t.index()] = accuracy;
            let neg: Vec<_> = Emotion::NEGATIVE.iter().filter(|&&e| e != t).collect();
            let pos: Vec<_> = Emotion::POSITIVE.iter().filter(|&&e| e != t).collect();
            let neg_share = off * negativity_bias / neg.len() as f64;
            let pos_share = off * (1.0 - negativity_bias) / pos.len() as f64;
            for e in neg {
                row[e.index()] = neg_share;
            }
            for e in pos {
                row[e.index()] = pos_share;
            }
        }
        Ok(ConfusionMatrix {
            label: label.into(),
            rows,
        })
    }

    pub fn row(&self, truth: Emotion) -> &[f64; N] {
        &self.rows[truth.index()]
    }

    pub fn get(&self, truth: Emotion, perceived: Emotion) -> f64 {
        self.rows[truth.index()][perceived.index()]
    }

    /// Mean of the diagonal, i.e. balanced accuracy.
    pub fn accuracy(&self) -> f64 {
        (0..N).map(|i| self.rows[i][i]).sum::<f64>() / N as f64
    }

    /// Largest absolute deviation of a row sum from one.
    pub fn max_row_deviation(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Checks entries are non-negative and rows sum to one within
    /// `tolerance`.
    pub fn validate(&self, tolerance: f64) -> Result<()> {
        for (r, row) in self.rows.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::NegativeEntry { row: r, col: c, value: v });
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > tolerance {
                return Err(Error::NotRowStochastic { row: r, sum });
            }
        }
        Ok(())
    }

    fn normalize_rows(&mut self) {
        for row in self.rows.iter_mut() {
            let sum: f64 = row.iter().sum();
            for v in row.iter_mut() {
                *v /= sum;
            }
        }
    }

    pub fn parse_csv(label: impl Into<String>, text: &str) -> Result<Self> {
        let mut lines = text.lines().map(|l| l.trim_end_matches('\r')).filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty matrix file".into()))?;
        if header.trim() != MATRIX_CSV_HEADER {
            return Err(Error::Parse(format!("unexpected header '{header}'")));
        }
        let mut rows = [[0.0; N]; N];
        for (r, row) in rows.iter_mut().enumerate() {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("expected {N} data rows, found {r}")))?;
            let fields: Vec<_> = line.split(',').map(str::trim).collect();
            if fields.len() != N {
                return Err(Error::Parse(format!(
                    "row {} has {} fields, expected {N}",
                    r + 1,
                    fields.len()
                )));
            }
            for (c, f) in fields.iter().enumerate() {
                row[c] = f
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {}, column {}: '{f}': {e}", r + 1, c + 1)))?;
            }
        }
        if let Some(extra) = lines.next() {
            return Err(Error::Parse(format!("unexpected trailing line '{extra}'")));
        }
        let mut m = ConfusionMatrix {
            label: label.into(),
            rows,
        };
        m.validate(LOAD_ROW_TOLERANCE)?;
        m.normalize_rows();
        Ok(m)
    }

    /// Loads a matrix from the CSV format; the label is the file stem.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::parse_csv(label, &text)
    }

    /// Serialises to the CSV format. Values use the shortest plain decimal
    /// representation that parses back to the same `f64`.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(512);
        out.push_str(MATRIX_CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            let fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", fields.join(","));
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Draws a perceived emotion from one matrix row.
pub fn sample_row<R: Rng + ?Sized>(row: &[f64; N], rng: &mut R) -> Emotion {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in row.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = i;
        if u < acc {
            return Emotion::ALL[i];
        }
    }
    // rounding left u just above the cumulative sum
    Emotion::ALL[last]
}

/// Frozen map from (identity, displayed emotion) to perceived emotion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerceptionTable {
    pub label: String,
    entries: Vec<[Emotion; N]>,
}

impl PerceptionTable {
    /// Samples one perceived emotion per (identity, emotion) pair,
    /// identities outermost and emotions in canonical order.
    pub fn build<R: Rng + ?Sized>(m: &ConfusionMatrix, n_identities: usize, rng: &mut R) -> Self {
        let entries = (0..n_identities)
            .map(|_| Emotion::ALL.map(|truth| sample_row(m.row(truth), rng)))
            .collect();
        PerceptionTable {
            label: m.label.clone(),
            entries,
        }
    }

    pub fn n_identities(&self) -> usize {
        self.entries.len()
    }

    pub fn perceive(&self, identity: usize, shown: Emotion) -> Result<Emotion> {
        self.entries
            .get(identity)
            .map(|row| row[shown.index()])
            .ok_or(Error::UnknownIdentity {
                identity,
                len: self.entries.len(),
            })
    }

    /// Fraction of (identity, emotion) pairs read correctly.
    pub fn diagonal_rate(&self) -> f64 {
        if self.entries.is_empty() {
            return 0.0;
        }
        let hits: usize = self
            .entries
            .iter()
            .map(|row| Emotion::ALL.iter().filter(|&&e| row[e.index()] == e).count())
            .sum();
        hits as f64 / (self.entries.len() * N) as f64
    }
}

/// How a profile's confusion matrix is obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProfileSource {
    Synthetic { accuracy: f64, negativity_bias: f64 },
    File { path: String },
    Identity,
}

impl ProfileSource {
    /// Built-in classifier profiles: `kdef`, `ck+` and `jaffe`.
    pub fn builtin(label: &str) -> Option<Self> {
        let (accuracy, negativity_bias) = match label {
            "kdef" => (0.96, 0.5),
            "ck+" => (0.37, 0.7),
            "jaffe" => (0.19, 0.85),
            "identity" => return Some(ProfileSource::Identity),
            _ => return None,
        };
        Some(ProfileSource::Synthetic {
            accuracy,
            negativity_bias,
        })
    }

    /// Resolves to a matrix. Relative file paths are taken relative to
    /// `base_dir` when one is given.
    pub fn resolve(&self, label: &str, base_dir: Option<&Path>) -> Result<ConfusionMatrix> {
        match self {
            ProfileSource::Synthetic {
                accuracy,
                negativity_bias,
            } => ConfusionMatrix::synthesize(label, *accuracy, *negativity_bias),
            ProfileSource::Identity => Ok(ConfusionMatrix::identity(label)),
            ProfileSource::File { path } => {
                let p = Path::new(path);
                let full = match base_dir {
                    Some(base) if p.is_relative() => base.join(p),
                    _ => p.to_path_buf(),
                };
                let mut m = ConfusionMatrix::load(&full)?;
                m.label = label.to_string();
                Ok(m)
            }
        }
    }
}
