//! Tucker decomposition by higher-order SVD.

use nalgebra::{DMatrix, SymmetricEigen};

use super::{mode_n_product, mode_unfold, NamedTensor, TensorError};

/// `X ≈ 𝒢 ×₁ U₁ ×₂ ⋯ ×ₙ Uₙ` with column-orthonormal factors.
#[derive(Debug, Clone, PartialEq)]
pub struct TuckerModel {
    pub core: NamedTensor,
    /// One `extent × rank` matrix per mode.
    pub factors: Vec<DMatrix<f64>>,
}

/// Leading `rank` eigenvectors of the Gram matrix of the mode-`n` unfolding,
/// i.e. its leading left singular vectors. Each vector is signed so that its
/// largest-magnitude entry (first on ties) is positive.
fn leading_subspace(tensor: &NamedTensor, mode: usize, rank: usize) -> Result<DMatrix<f64>, TensorError> {
    let unfolded = mode_unfold(tensor, mode)?;
    let gram = &unfolded * unfolded.transpose();
    let eigen = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..eigen.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]).then(a.cmp(&b)));
    let rows = unfolded.nrows();
    let mut factor = DMatrix::zeros(rows, rank);
    for (k, &j) in order.iter().take(rank).enumerate() {
        let column = eigen.eigenvectors.column(j);
        let pivot = column
            .iter()
            .enumerate()
            .fold(0, |best, (i, v)| if v.abs() > column[best].abs() { i } else { best });
        let sign = if column[pivot] < 0.0 { -1.0 } else { 1.0 };
        factor.set_column(k, &(column * sign));
    }
    Ok(factor)
}

/// HOSVD with the given per-mode ranks. The core is `X ×ₙ Uₙᵀ` over all modes.
pub fn tucker_hosvd(tensor: &NamedTensor, ranks: &[usize]) -> Result<TuckerModel, TensorError> {
    if ranks.len() != tensor.n_modes() {
        return Err(TensorError::DimensionMismatch {
            what: "ranks",
            expected: tensor.n_modes(),
            found: ranks.len(),
        });
    }
    for (mode, (&rank, &extent)) in ranks.iter().zip(tensor.shape()).enumerate() {
        if rank == 0 || rank > extent {
            return Err(TensorError::BadRanks { mode, rank, extent });
        }
    }
    let factors = ranks
        .iter()
        .enumerate()
        .map(|(mode, &rank)| leading_subspace(tensor, mode, rank))
        .collect::<Result<Vec<_>, _>>()?;
    let mut core = tensor.clone();
    for (mode, u) in factors.iter().enumerate() {
        core = mode_n_product(&core, &u.transpose(), mode)?;
    }
    Ok(TuckerModel { core, factors })
}

pub fn tucker_reconstruct(model: &TuckerModel) -> Result<NamedTensor, TensorError> {
    let mut out = model.core.clone();
    for (mode, u) in model.factors.iter().enumerate() {
        out = mode_n_product(&out, u, mode)?;
    }
    Ok(out)
}
