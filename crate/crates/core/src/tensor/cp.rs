//! CP decomposition by alternating least squares.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{fit, increment, NamedTensor, TensorError};

const RIDGE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct CpConfig {
    pub rank: usize,
    /// Stop once the fit changes by less than this between sweeps.
    pub tolerance: f64,
    pub max_sweeps: usize,
    pub seed: u64,
}

impl CpConfig {
    pub fn new(rank: usize, seed: u64) -> Self {
        Self {
            rank,
            tolerance: 1e-10,
            max_sweeps: 500,
            seed,
        }
    }
}

/// `Σ_r λ_r a⁽¹⁾_r ∘ ⋯ ∘ a⁽ᴺ⁾_r` with unit-norm factor columns and weights
/// sorted in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct CpModel {
    pub axis_names: Vec<String>,
    pub weights: Vec<f64>,
    /// One `extent × rank` matrix per mode.
    pub factors: Vec<DMatrix<f64>>,
    /// Fit after every sweep.
    pub fit_history: Vec<f64>,
    pub converged: bool,
}

impl CpModel {
    pub fn rank(&self) -> usize {
        self.weights.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.factors.iter().map(DMatrix::nrows).collect()
    }

    pub fn final_fit(&self) -> f64 {
        self.fit_history.last().copied().unwrap_or(f64::NAN)
    }
}

/// Dense reconstruction of a CP model.
pub fn cp_reconstruct(model: &CpModel) -> Result<NamedTensor, TensorError> {
    let shape = model.shape();
    for (mode, factor) in model.factors.iter().enumerate() {
        if factor.ncols() != model.rank() {
            return Err(TensorError::BadRanks {
                mode,
                rank: factor.ncols(),
                extent: model.rank(),
            });
        }
    }
    NamedTensor::from_fn(model.axis_names.clone(), shape, |index| {
        (0..model.rank())
            .map(|r| {
                model.weights[r]
                    * index
                        .iter()
                        .zip(&model.factors)
                        .map(|(&i, a)| a[(i, r)])
                        .product::<f64>()
            })
            .sum()
    })
}

/// FNV-1a hash of an axis name, used to pick the initialization stream.
fn axis_stream(name: &str) -> u64 {
    name.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

/// Matricized tensor times Khatri–Rao product for mode `n`:
/// `M[i, r] = Σ_{index: index[n]=i} x · Π_{m≠n} A_m[index[m], r]`.
fn mttkrp(tensor: &NamedTensor, factors: &[DMatrix<f64>], mode: usize) -> DMatrix<f64> {
    let rank = factors[0].ncols();
    let shape = tensor.shape();
    let mut out = DMatrix::zeros(shape[mode], rank);
    let mut index = vec![0; shape.len()];
    let mut row = vec![0.0; rank];
    for &x in tensor.data() {
        if x != 0.0 {
            row.iter_mut().for_each(|v| *v = x);
            for (m, factor) in factors.iter().enumerate() {
                if m != mode {
                    for (r, v) in row.iter_mut().enumerate() {
                        *v *= factor[(index[m], r)];
                    }
                }
            }
            for (r, v) in row.iter().enumerate() {
                out[(index[mode], r)] += v;
            }
        }
        increment(&mut index, shape);
    }
    out
}

/// Divides each column by its norm and returns the norms. A zero column is
/// replaced by a constant unit vector with weight 0.
fn normalize_columns(factor: &mut DMatrix<f64>) -> Vec<f64> {
    let rows = factor.nrows();
    (0..factor.ncols())
        .map(|r| {
            let mut column = factor.column_mut(r);
            let norm = column.norm();
            if norm > 0.0 {
                column /= norm;
            } else {
                column.fill(1.0 / (rows as f64).sqrt());
            }
            norm
        })
        .collect()
}

/// Solves `A V = M` for symmetric positive semidefinite `V`.
fn solve_normal_equations(v: &DMatrix<f64>, m: &DMatrix<f64>, mode: usize) -> Result<DMatrix<f64>, TensorError> {
    if let Some(chol) = v.clone().cholesky() {
        return Ok(chol.solve(&m.transpose()).transpose());
    }
    log::warn!("CP-ALS normal equations for mode {mode} are singular; adding {RIDGE}·I");
    let n = v.nrows();
    let regularized = v + DMatrix::identity(n, n) * RIDGE;
    regularized
        .cholesky()
        .map(|chol| chol.solve(&m.transpose()).transpose())
        .ok_or(TensorError::RankDeficiency { mode })
}

/// Rank-`R` CP decomposition by alternating least squares.
///
/// Factors start from seeded uniform draws with normalized columns. Each
/// axis draws from its own stream keyed by its name and sweeps visit the
/// modes in axis-name order, so permuting the axes of the input permutes the
/// computation without changing it. Each sweep solves the normal equations
/// `A_n (⊛_{m≠n} A_mᵀA_m) = MTTKRP_n` mode by mode and moves the column
/// norms into the weights. Stops when the fit changes by less than the
/// tolerance or after `max_sweeps` sweeps.
pub fn cp_als(tensor: &NamedTensor, config: &CpConfig) -> Result<CpModel, TensorError> {
    let rank = config.rank;
    if rank == 0 {
        return Err(TensorError::InvalidRank(rank));
    }
    if !(config.tolerance.is_finite() && config.tolerance > 0.0) {
        return Err(TensorError::InvalidParameter {
            name: "tolerance",
            value: config.tolerance,
        });
    }
    if config.max_sweeps == 0 {
        return Err(TensorError::InvalidParameter {
            name: "max_sweeps",
            value: 0.0,
        });
    }
    if tensor.frobenius_norm() == 0.0 {
        return Err(TensorError::ZeroNorm);
    }

    let mut factors: Vec<DMatrix<f64>> = tensor
        .shape()
        .iter()
        .zip(tensor.axis_names())
        .map(|(&n, name)| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(axis_stream(name));
            let mut a = DMatrix::from_fn(n, rank, |_, _| rng.random::<f64>());
            normalize_columns(&mut a);
            a
        })
        .collect();
    let mut grams: Vec<DMatrix<f64>> = factors.iter().map(|a| a.transpose() * a).collect();
    let mut weights = vec![1.0; rank];
    let mut fit_history = Vec::new();
    let mut converged = false;

    let mut sweep_order: Vec<usize> = (0..tensor.n_modes()).collect();
    sweep_order.sort_by(|&a, &b| tensor.axis_names()[a].cmp(&tensor.axis_names()[b]));

    for _ in 0..config.max_sweeps {
        for &mode in &sweep_order {
            let mut v = DMatrix::from_element(rank, rank, 1.0);
            for (m, g) in grams.iter().enumerate() {
                if m != mode {
                    v.component_mul_assign(g);
                }
            }
            let m = mttkrp(tensor, &factors, mode);
            let mut updated = solve_normal_equations(&v, &m, mode)?;
            weights = normalize_columns(&mut updated);
            grams[mode] = updated.transpose() * &updated;
            factors[mode] = updated;
        }
        let model = CpModel {
            axis_names: tensor.axis_names().to_vec(),
            weights: weights.clone(),
            factors: factors.clone(),
            fit_history: Vec::new(),
            converged: false,
        };
        let current = fit(tensor, &cp_reconstruct(&model)?)?;
        let previous = fit_history.last().copied();
        fit_history.push(current);
        if previous.is_some_and(|p: f64| (current - p).abs() < config.tolerance) {
            converged = true;
            break;
        }
    }

    let mut order: Vec<usize> = (0..rank).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]));
    let weights = order.iter().map(|&r| weights[r]).collect();
    let factors = factors
        .iter()
        .map(|a| DMatrix::from_fn(a.nrows(), rank, |i, k| a[(i, order[k])]))
        .collect();
    Ok(CpModel {
        axis_names: tensor.axis_names().to_vec(),
        weights,
        factors,
        fit_history,
        converged,
    })
}
