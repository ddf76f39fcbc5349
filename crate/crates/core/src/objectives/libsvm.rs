//! LibSVM text ingestion: `label idx:val idx:val …` with 1-based indices.

use std::io::BufRead;
use std::path::Path;

use super::{LogisticRidge, NodeObjective, ObjectiveEnsemble};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct LibsvmData {
    pub dim: usize,
    /// Dense rows, row-major `labels.len() × dim`.
    pub features: Vec<f64>,
    /// ±1; a `0` label in the file is read as −1.
    pub labels: Vec<f64>,
}

impl LibsvmData {
    pub fn rows(&self) -> usize {
        self.labels.len()
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.features[r * self.dim..(r + 1) * self.dim]
    }

    /// Assigns row `r` to node `r mod m` and builds one ridge-logistic
    /// objective per node.
    pub fn partition(&self, m: usize, ridge: f64) -> Result<ObjectiveEnsemble> {
        if m == 0 {
            return Err(Error::config("network.m", "must be at least 1"));
        }
        let mut feats = vec![Vec::new(); m];
        let mut labels = vec![Vec::new(); m];
        for r in 0..self.rows() {
            feats[r % m].extend_from_slice(self.row(r));
            labels[r % m].push(self.labels[r]);
        }
        let nodes = feats
            .into_iter()
            .zip(labels)
            .map(|(f, l)| LogisticRidge::new(self.dim, f, l, ridge).map(NodeObjective::Logistic))
            .collect::<Result<Vec<_>>>()?;
        ObjectiveEnsemble::new(nodes)
    }
}

pub fn read_libsvm(path: &Path, dim: Option<usize>) -> Result<LibsvmData> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_libsvm(std::io::BufReader::new(file), path, dim)
}

/// `dim` fixes the feature dimension; otherwise the largest index seen is used.
pub fn parse_libsvm<R: BufRead>(reader: R, origin: &Path, dim: Option<usize>) -> Result<LibsvmData> {
    let err = |line: usize, reason: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        reason,
    };
    let mut sparse: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels = Vec::new();
    let mut max_index = 0usize;

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(origin, e))?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label_tok = tokens.next().unwrap_or_default();
        let label: f64 = label_tok
            .parse()
            .map_err(|_| err(lineno, format!("bad label `{label_tok}`")))?;
        let label = match label {
            l if l == 1.0 => 1.0,
            l if l == -1.0 || l == 0.0 => -1.0,
            l => return Err(err(lineno, format!("label {l} is not ±1"))),
        };
        let mut row = Vec::new();
        let mut prev = 0usize;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| err(lineno, format!("expected idx:val, got `{tok}`")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| err(lineno, format!("bad index `{idx}`")))?;
            if idx == 0 {
                return Err(err(lineno, "indices are 1-based".into()));
            }
            if idx <= prev {
                return Err(err(lineno, format!("index {idx} not increasing")));
            }
            prev = idx;
            let val: f64 = val
                .parse()
                .map_err(|_| err(lineno, format!("bad value `{val}`")))?;
            if !val.is_finite() {
                return Err(err(lineno, format!("non-finite value `{val}`")));
            }
            max_index = max_index.max(idx);
            row.push((idx - 1, val));
        }
        sparse.push(row);
        labels.push(label);
    }

    let dim = match dim {
        Some(d) if d < max_index => {
            return Err(err(0, format!("feature index {max_index} exceeds dimension {d}")))
        }
        Some(d) => d,
        None => max_index,
    };
    if dim == 0 {
        return Err(err(0, "no features found".into()));
    }
    let mut features = vec![0.0; sparse.len() * dim];
    for (r, row) in sparse.iter().enumerate() {
        for &(j, v) in row {
            features[r * dim + j] = v;
        }
    }
    Ok(LibsvmData {
        dim,
        features,
        labels,
    })
}
