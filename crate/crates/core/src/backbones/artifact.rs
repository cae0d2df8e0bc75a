use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactKind {
    EdgeMatrix,
    NodeScores,
    GuideMatrix,
}

impl ArtifactKind {
    pub fn is_matrix(self) -> bool {
        !matches!(self, ArtifactKind::NodeScores)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArtifactError {
    #[error("expected a {expected:?} artifact, got {found:?}")]
    WrongKind { expected: ArtifactKind, found: ArtifactKind },
    #[error("artifact has shape {found}, expected {expected}")]
    Shape { expected: String, found: String },
    #[error("artifact entry ({row}, {col}) is {value}; entries must be finite and nonnegative")]
    BadEntry { row: usize, col: usize, value: f64 },
    #[error("artifact document: {0}")]
    Document(String),
}

/// Numeric output of a candidate program. Matrices are stored row-major.
/// Diagonal entries of matrix kinds are ignored and stored as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct HeuristicArtifact {
    pub kind: ArtifactKind,
    pub n: usize,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Values {
    Matrix(Vec<Vec<f64>>),
    Vector(Vec<f64>),
}

#[derive(Serialize, Deserialize)]
struct Wire {
    kind: ArtifactKind,
    values: Values,
}

impl HeuristicArtifact {
    /// Build and validate a matrix artifact of size `n`.
    pub fn matrix(kind: ArtifactKind, n: usize, mut values: Vec<f64>) -> Result<Self, ArtifactError> {
        if !kind.is_matrix() {
            return Err(ArtifactError::WrongKind { expected: ArtifactKind::EdgeMatrix, found: kind });
        }
        if values.len() != n * n {
            return Err(ArtifactError::Shape { expected: format!("{n}x{n}"), found: format!("{} entries", values.len()) });
        }
        for i in 0..n {
            values[i * n + i] = 0.0;
        }
        let a = HeuristicArtifact { kind, n, values };
        a.check_entries()?;
        Ok(a)
    }

    pub fn matrix_fn(kind: ArtifactKind, n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self, ArtifactError> {
        let values = (0..n * n).map(|k| if k / n == k % n { 0.0 } else { f(k / n, k % n) }).collect();
        Self::matrix(kind, n, values)
    }

    pub fn scores(values: Vec<f64>) -> Result<Self, ArtifactError> {
        let a = HeuristicArtifact { kind: ArtifactKind::NodeScores, n: values.len(), values };
        a.check_entries()?;
        Ok(a)
    }

    fn check_entries(&self) -> Result<(), ArtifactError> {
        for (k, &v) in self.values.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                let (row, col) = if self.kind.is_matrix() { (k / self.n, k % self.n) } else { (k, 0) };
                return Err(ArtifactError::BadEntry { row, col, value: v });
            }
        }
        Ok(())
    }

    /// Check kind and size against what a backbone expects.
    pub fn expect(&self, kind: ArtifactKind, n: usize) -> Result<(), ArtifactError> {
        if self.kind != kind {
            return Err(ArtifactError::WrongKind { expected: kind, found: self.kind });
        }
        if self.n != n {
            let shape = |m: usize| if kind.is_matrix() { format!("{m}x{m}") } else { format!("{m}") };
            return Err(ArtifactError::Shape { expected: shape(n), found: shape(self.n) });
        }
        Ok(())
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    #[inline]
    pub fn score(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let values = if self.kind.is_matrix() {
            Values::Matrix(self.values.chunks(self.n.max(1)).map(<[f64]>::to_vec).collect())
        } else {
            Values::Vector(self.values.clone())
        };
        serde_json::to_value(Wire { kind: self.kind, values }).expect("finite values serialize")
    }

    pub fn from_json_value(value: serde_json::Value) -> Result<Self, ArtifactError> {
        let wire: Wire = serde_json::from_value(value).map_err(|e| ArtifactError::Document(e.to_string()))?;
        match (wire.kind.is_matrix(), wire.values) {
            (true, Values::Matrix(rows)) => {
                let n = rows.len();
                if let Some(r) = rows.iter().find(|r| r.len() != n) {
                    return Err(ArtifactError::Shape { expected: format!("{n}x{n}"), found: format!("a row of {}", r.len()) });
                }
                Self::matrix(wire.kind, n, rows.into_iter().flatten().collect())
            }
            (false, Values::Vector(v)) => Self::scores(v),
            (true, Values::Vector(v)) if v.is_empty() => Self::matrix(wire.kind, 0, v),
            (false, Values::Matrix(m)) if m.is_empty() => Self::scores(Vec::new()),
            (true, _) => Err(ArtifactError::Shape { expected: "a matrix".into(), found: "a vector".into() }),
            (false, _) => Err(ArtifactError::Shape { expected: "a vector".into(), found: "a matrix".into() }),
        }
    }
}
