//! Dense named-axis tensors, mode unfolding and products, and the CP and
//! Tucker decompositions.
//!
//! Data is row-major: the last axis varies fastest. The mode-`n` unfolding
//! puts the mode-`n` index on rows and flattens the remaining axes on columns
//! in their original order, again with the last one varying fastest.

mod cp;
mod tucker;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cp::{cp_als, cp_reconstruct, CpConfig, CpModel};
pub use tucker::{tucker_hosvd, tucker_reconstruct, TuckerModel};

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("mode {mode} out of range for a tensor with {n_modes} modes")]
    BadMode { mode: usize, n_modes: usize },
    #[error("data length {found} does not match shape product {expected}")]
    DataLength { expected: usize, found: usize },
    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("shapes differ: {left:?} vs {right:?}")]
    ShapeMismatch { left: Vec<usize>, right: Vec<usize> },
    #[error("duplicate axis name {0:?}")]
    DuplicateAxis(String),
    #[error("tensor must have at least one mode and no zero extents")]
    Empty,
    #[error("non-finite entry at flat index {0}")]
    NonFinite(usize),
    #[error("reference tensor has zero norm")]
    ZeroNorm,
    #[error("invalid rank {0}; must be at least 1")]
    InvalidRank(usize),
    #[error("rank {rank} for mode {mode} must be between 1 and the extent {extent}")]
    BadRanks { mode: usize, rank: usize, extent: usize },
    #[error("invalid {name} {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("normal equations for mode {mode} are singular even after regularization")]
    RankDeficiency { mode: usize },
    #[error("permutation {0:?} is not a permutation of the axes")]
    BadPermutation(Vec<usize>),
}

#[derive(Debug, Clone, Deserialize)]
struct RawTensor {
    axis_names: Vec<String>,
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl TryFrom<RawTensor> for NamedTensor {
    type Error = TensorError;

    fn try_from(raw: RawTensor) -> Result<Self, Self::Error> {
        NamedTensor::new(raw.axis_names, raw.shape, raw.data)
    }
}

/// Dense row-major tensor with one name per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTensor")]
pub struct NamedTensor {
    axis_names: Vec<String>,
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl NamedTensor {
    pub fn new(axis_names: Vec<String>, shape: Vec<usize>, data: Vec<f64>) -> Result<Self, TensorError> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(TensorError::Empty);
        }
        if axis_names.len() != shape.len() {
            return Err(TensorError::DimensionMismatch {
                what: "axis names",
                expected: shape.len(),
                found: axis_names.len(),
            });
        }
        for (i, name) in axis_names.iter().enumerate() {
            if axis_names[..i].contains(name) {
                return Err(TensorError::DuplicateAxis(name.clone()));
            }
        }
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(TensorError::DataLength {
                expected,
                found: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|x| !x.is_finite()) {
            return Err(TensorError::NonFinite(i));
        }
        Ok(Self {
            axis_names,
            shape,
            data,
        })
    }

    /// Axes named `mode0`, `mode1`, ...
    pub fn unnamed(shape: Vec<usize>, data: Vec<f64>) -> Result<Self, TensorError> {
        let names = default_names(shape.len());
        Self::new(names, shape, data)
    }

    pub fn zeros(axis_names: Vec<String>, shape: Vec<usize>) -> Result<Self, TensorError> {
        let len = shape.iter().product();
        Self::new(axis_names, shape, vec![0.0; len])
    }

    /// Fills entries from a function of the multi-index.
    pub fn from_fn(
        axis_names: Vec<String>,
        shape: Vec<usize>,
        mut f: impl FnMut(&[usize]) -> f64,
    ) -> Result<Self, TensorError> {
        let len: usize = shape.iter().product();
        let mut data = Vec::with_capacity(len);
        let mut index = vec![0; shape.len()];
        for _ in 0..len {
            data.push(f(&index));
            increment(&mut index, &shape);
        }
        Self::new(axis_names, shape, data)
    }

    pub fn axis_names(&self) -> &[String] {
        &self.axis_names
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn n_modes(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Row-major flat offset of a multi-index.
    pub fn offset(&self, index: &[usize]) -> usize {
        index
            .iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[self.offset(index)]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            axis_names: self.axis_names.clone(),
            shape: self.shape.clone(),
            data: self.data.iter().map(|x| x * factor).collect(),
        }
    }

    fn check_mode(&self, mode: usize) -> Result<(), TensorError> {
        if mode < self.n_modes() {
            Ok(())
        } else {
            Err(TensorError::BadMode {
                mode,
                n_modes: self.n_modes(),
            })
        }
    }

    /// New tensor whose axis `k` is this tensor's axis `perm[k]`.
    pub fn permute_axes(&self, perm: &[usize]) -> Result<Self, TensorError> {
        let mut seen = vec![false; self.n_modes()];
        if perm.len() != self.n_modes() || perm.iter().any(|&p| p >= seen.len() || std::mem::replace(&mut seen[p], true)) {
            return Err(TensorError::BadPermutation(perm.to_vec()));
        }
        let shape: Vec<usize> = perm.iter().map(|&p| self.shape[p]).collect();
        let names: Vec<String> = perm.iter().map(|&p| self.axis_names[p].clone()).collect();
        let mut source = vec![0; self.n_modes()];
        Self::from_fn(names, shape, |index| {
            for (k, &p) in perm.iter().enumerate() {
                source[p] = index[k];
            }
            self.get(&source)
        })
    }
}

pub(crate) fn default_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("mode{i}")).collect()
}

/// Advances a row-major multi-index by one position.
pub(crate) fn increment(index: &mut [usize], shape: &[usize]) {
    for k in (0..index.len()).rev() {
        index[k] += 1;
        if index[k] < shape[k] {
            return;
        }
        index[k] = 0;
    }
}

/// Mode-`n` unfolding: `shape[n]` rows, product of the other extents columns.
pub fn mode_unfold(tensor: &NamedTensor, mode: usize) -> Result<DMatrix<f64>, TensorError> {
    tensor.check_mode(mode)?;
    let rows = tensor.shape[mode];
    let cols = tensor.len() / rows;
    // row-major flat index = (outer · rows + i) · inner + rest
    let inner: usize = tensor.shape[mode + 1..].iter().product();
    let mut out = DMatrix::zeros(rows, cols);
    for (flat, &x) in tensor.data.iter().enumerate() {
        let rest = flat % inner;
        let i = (flat / inner) % rows;
        let outer = flat / (inner * rows);
        out[(i, outer * inner + rest)] = x;
    }
    Ok(out)
}

/// Inverse of [`mode_unfold`] for a tensor of the given shape and names.
pub fn refold(
    matrix: &DMatrix<f64>,
    mode: usize,
    axis_names: Vec<String>,
    shape: Vec<usize>,
) -> Result<NamedTensor, TensorError> {
    if mode >= shape.len() {
        return Err(TensorError::BadMode {
            mode,
            n_modes: shape.len(),
        });
    }
    let rows = shape[mode];
    let total: usize = shape.iter().product();
    if matrix.nrows() != rows || matrix.nrows() * matrix.ncols() != total {
        return Err(TensorError::DimensionMismatch {
            what: "unfolded matrix entries",
            expected: total,
            found: matrix.nrows() * matrix.ncols(),
        });
    }
    let inner: usize = shape[mode + 1..].iter().product();
    let data = (0..total)
        .map(|flat| {
            let rest = flat % inner;
            let i = (flat / inner) % rows;
            let outer = flat / (inner * rows);
            matrix[(i, outer * inner + rest)]
        })
        .collect();
    NamedTensor::new(axis_names, shape, data)
}

/// `X ×ₙ M`: contracts mode `n` with the columns of `M`; that extent becomes
/// `M.nrows()`.
pub fn mode_n_product(tensor: &NamedTensor, matrix: &DMatrix<f64>, mode: usize) -> Result<NamedTensor, TensorError> {
    tensor.check_mode(mode)?;
    if matrix.ncols() != tensor.shape[mode] {
        return Err(TensorError::DimensionMismatch {
            what: "matrix columns vs mode extent",
            expected: tensor.shape[mode],
            found: matrix.ncols(),
        });
    }
    let product = matrix * mode_unfold(tensor, mode)?;
    let mut shape = tensor.shape.clone();
    shape[mode] = matrix.nrows();
    refold(&product, mode, tensor.axis_names.clone(), shape)
}

/// `1 − ‖X − X̂‖_F / ‖X‖_F`.
pub fn fit(reference: &NamedTensor, approximation: &NamedTensor) -> Result<f64, TensorError> {
    if reference.shape != approximation.shape {
        return Err(TensorError::ShapeMismatch {
            left: reference.shape.clone(),
            right: approximation.shape.clone(),
        });
    }
    let norm = reference.frobenius_norm();
    if norm == 0.0 {
        return Err(TensorError::ZeroNorm);
    }
    let residual = reference
        .data
        .iter()
        .zip(&approximation.data)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(1.0 - residual / norm)
}
