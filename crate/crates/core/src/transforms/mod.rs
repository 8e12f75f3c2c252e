//! Linear maps between two semantic spaces.
//!
//! All five fitting methods work on row-aligned training matrices `X` and `Y`
//! (`m × d`) built from a bilingual dictionary and return a `d × d` matrix `T`
//! such that `x T` approximates the translation of `x`.

mod closed_form;
pub mod ranking;

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::embedding_store::SemanticSpace;

pub use closed_form::{fit_cca, fit_least_squares, fit_orthogonal, Ridge};
pub use ranking::{
    fit_orthogonal_ranking, fit_ranking, rank_loss, select_negatives, Distance, RankingConfig,
};

#[derive(Debug, thiserror::Error)]
pub enum TransformError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("dictionary line {line}: {reason}")]
    MalformedDictionary { line: usize, reason: String },
    #[error("matrix file line {line}: {reason}")]
    MalformedMatrix { line: usize, reason: String },
    #[error("no dictionary pair has both words in vocabulary ({dropped} dropped)")]
    NoSurvivingPairs { dropped: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("both spaces must be centered and normalized before building training matrices")]
    NotPreprocessed,
    #[error("{0} is rank deficient; enable ridge regularization")]
    RankDeficient(&'static str),
    #[error("only {usable} of {dim} canonical directions are usable; enable ridge regularization")]
    InsufficientDirections { usable: usize, dim: usize },
    #[error("singular value decomposition did not converge")]
    SvdFailed,
    #[error("non-finite loss at epoch {epoch}, example {example}; lower the learning rate")]
    NonFiniteLoss { epoch: usize, example: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// The five fitting methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    LeastSquares,
    Orthogonal,
    Cca,
    Ranking,
    OrthogonalRanking,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::LeastSquares,
        Method::Orthogonal,
        Method::Cca,
        Method::Ranking,
        Method::OrthogonalRanking,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::LeastSquares => "ls",
            Method::Orthogonal => "ot",
            Method::Cca => "cca",
            Method::Ranking => "rt",
            Method::OrthogonalRanking => "ort",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown method {s:?} (expected ls, ot, cca, rt or ort)"))
    }
}

/// Diagnostics collected while fitting.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FitReport {
    /// `‖Y − X T‖²_F` on the training pairs.
    pub residual: Option<f64>,
    /// `‖T Tᵀ − I‖_F` of the final matrix.
    pub orthogonality_defect: f64,
    /// Ridge actually added to the normal equations / covariances.
    pub ridge: f64,
    /// CCA only, nonincreasing.
    pub canonical_correlations: Vec<f64>,
    /// Ranking methods: objective at the initial (orthogonal) matrix.
    pub initial_loss: Option<f64>,
    /// Ranking methods: objective after each epoch.
    pub epoch_losses: Vec<f64>,
    /// Ranking methods: `‖T Tᵀ − I‖_F` after each epoch.
    pub epoch_defects: Vec<f64>,
}

/// A fitted `d × d` map, applied to row vectors as `x T`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentMatrix {
    matrix: DMatrix<f64>,
    method: Method,
    report: FitReport,
}

impl AlignmentMatrix {
    pub fn new(method: Method, matrix: DMatrix<f64>) -> Result<Self, TransformError> {
        if !matrix.is_square() {
            return Err(TransformError::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(TransformError::InvalidConfig("matrix has non-finite entries".into()));
        }
        let report = FitReport {
            orthogonality_defect: orthogonality_defect(&matrix),
            ..FitReport::default()
        };
        Ok(AlignmentMatrix {
            matrix,
            method,
            report,
        })
    }

    pub fn identity(method: Method, dim: usize) -> Self {
        AlignmentMatrix {
            matrix: DMatrix::identity(dim, dim),
            method,
            report: FitReport::default(),
        }
    }

    pub(crate) fn with_report(method: Method, matrix: DMatrix<f64>, mut report: FitReport) -> Self {
        report.orthogonality_defect = orthogonality_defect(&matrix);
        AlignmentMatrix {
            matrix,
            method,
            report,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn report(&self) -> &FitReport {
        &self.report
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>, TransformError> {
        apply_transform(self, v)
    }

    /// `‖T Tᵀ − I‖_∞` (maximum absolute row sum).
    pub fn orthogonality_defect_inf(&self) -> f64 {
        let d = self.dim();
        let gram = &self.matrix * self.matrix.transpose() - DMatrix::<f64>::identity(d, d);
        gram.row_iter()
            .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Writes `<method> <d>` followed by `d` rows of `d` numbers with 17
    /// significant digits, which round-trips every `f64` exactly.
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let d = self.dim();
        writeln!(out, "{} {}", self.method, d)?;
        let mut line = String::new();
        for r in 0..d {
            line.clear();
            for c in 0..d {
                if c > 0 {
                    line.push(' ');
                }
                line.push_str(&format!("{:.16e}", self.matrix[(r, c)]));
            }
            writeln!(out, "{line}")?;
        }
        out.flush()
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self, TransformError> {
        let malformed = |line: usize, reason: String| TransformError::MalformedMatrix { line, reason };
        let mut lines = input.lines();
        let header = lines
            .next()
            .transpose()?
            .ok_or_else(|| malformed(1, "missing header".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let (method, d) = match fields.as_slice() {
            [m, d] => {
                let method = m.parse::<Method>().map_err(|e| malformed(1, e))?;
                let d = d
                    .parse::<usize>()
                    .map_err(|_| malformed(1, format!("bad dimension {d:?}")))?;
                (method, d)
            }
            _ => return Err(malformed(1, format!("expected \"<method> <d>\", found {header:?}"))),
        };
        let mut data = Vec::with_capacity(d * d);
        for r in 0..d {
            let line_no = r + 2;
            let line = lines
                .next()
                .transpose()?
                .ok_or_else(|| malformed(line_no, format!("expected {d} rows, found {r}")))?;
            let before = data.len();
            for field in line.split_whitespace() {
                let v: f64 = field
                    .parse()
                    .map_err(|_| malformed(line_no, format!("cannot parse {field:?}")))?;
                if !v.is_finite() {
                    return Err(malformed(line_no, "non-finite entry".into()));
                }
                data.push(v);
            }
            if data.len() - before != d {
                return Err(malformed(
                    line_no,
                    format!("expected {d} values, found {}", data.len() - before),
                ));
            }
        }
        AlignmentMatrix::new(method, DMatrix::from_row_slice(d, d, &data))
    }
}

/// `‖T Tᵀ − I‖_F`.
pub fn orthogonality_defect(t: &DMatrix<f64>) -> f64 {
    let d = t.nrows();
    (t * t.transpose() - DMatrix::<f64>::identity(d, d)).norm()
}

/// Maps a row vector: returns `v T`.
pub fn apply_transform(t: &AlignmentMatrix, v: &[f64]) -> Result<Vec<f64>, TransformError> {
    let d = t.dim();
    if v.len() != d {
        return Err(TransformError::DimensionMismatch {
            expected: d,
            found: v.len(),
        });
    }
    Ok(row_times(v, &t.matrix))
}

/// `v M` for a column-major `M`.
pub(crate) fn row_times(v: &[f64], m: &DMatrix<f64>) -> Vec<f64> {
    let rows = m.nrows();
    m.as_slice()
        .chunks_exact(rows)
        .map(|col| crate::vector::dot(v, col))
        .collect()
}

/// Maps every row of a space. The result keeps the source vocabulary and
/// preprocessing flag.
pub fn apply_to_space(
    t: &AlignmentMatrix,
    space: &SemanticSpace,
) -> Result<SemanticSpace, TransformError> {
    if space.dim() != t.dim() {
        return Err(TransformError::DimensionMismatch {
            expected: t.dim(),
            found: space.dim(),
        });
    }
    space
        .map_rows(|row| row_times(row, &t.matrix))
        .map_err(|_| TransformError::DimensionMismatch {
            expected: t.dim(),
            found: space.dim(),
        })
}

/// Ordered `(source, target)` word pairs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BilingualDictionary {
    pub pairs: Vec<(String, String)>,
}

impl BilingualDictionary {
    pub fn from_pairs<S: Into<String>, T: Into<String>>(
        pairs: impl IntoIterator<Item = (S, T)>,
    ) -> Self {
        BilingualDictionary {
            pairs: pairs
                .into_iter()
                .map(|(s, t)| (s.into().to_lowercase(), t.into().to_lowercase()))
                .collect(),
        }
    }

    /// Parses `source<TAB>target` lines. Blank lines and lines starting with
    /// `#` are ignored; words are lowercased.
    pub fn parse<R: BufRead>(input: R) -> Result<Self, TransformError> {
        let mut pairs = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            let line_no = idx + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t');
            let (src, tgt) = match (fields.next(), fields.next(), fields.next()) {
                (Some(s), Some(t), None) => (s.trim(), t.trim()),
                _ => {
                    return Err(TransformError::MalformedDictionary {
                        line: line_no,
                        reason: "expected exactly one tab-separated pair".into(),
                    })
                }
            };
            if src.is_empty() || tgt.is_empty() {
                return Err(TransformError::MalformedDictionary {
                    line: line_no,
                    reason: "empty word".into(),
                });
            }
            pairs.push((src.to_lowercase(), tgt.to_lowercase()));
        }
        Ok(BilingualDictionary { pairs })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Row-aligned training matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingData {
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
    /// Pairs dropped because a side was out of vocabulary.
    pub dropped: usize,
}

pub fn build_training_matrices(
    dict: &BilingualDictionary,
    src: &SemanticSpace,
    tgt: &SemanticSpace,
) -> Result<TrainingData, TransformError> {
    if !src.is_preprocessed() || !tgt.is_preprocessed() {
        return Err(TransformError::NotPreprocessed);
    }
    if src.dim() != tgt.dim() {
        return Err(TransformError::DimensionMismatch {
            expected: src.dim(),
            found: tgt.dim(),
        });
    }
    let d = src.dim();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut dropped = 0;
    for (s, t) in &dict.pairs {
        match (src.get(s), tgt.get(t)) {
            (Some(x), Some(y)) => {
                xs.extend_from_slice(x);
                ys.extend_from_slice(y);
            }
            _ => dropped += 1,
        }
    }
    let m = xs.len() / d.max(1);
    if m == 0 {
        return Err(TransformError::NoSurvivingPairs { dropped });
    }
    Ok(TrainingData {
        x: DMatrix::from_row_slice(m, d, &xs),
        y: DMatrix::from_row_slice(m, d, &ys),
        dropped,
    })
}

pub(crate) fn check_shapes(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<(), TransformError> {
    if x.shape() != y.shape() {
        return Err(TransformError::DimensionMismatch {
            expected: x.nrows() * x.ncols(),
            found: y.nrows() * y.ncols(),
        });
    }
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(TransformError::NoSurvivingPairs { dropped: 0 });
    }
    Ok(())
}

/// `‖Y − X T‖²_F`.
pub fn residual(x: &DMatrix<f64>, y: &DMatrix<f64>, t: &DMatrix<f64>) -> f64 {
    (y - x * t).norm_squared()
}
