//! Two-block ADMM over shared variables.
//!
//! Solves `min J₁(x) + J₂(z)` subject to `C x_S + D z_S = b` (or `≤ b`),
//! where `x_S`, `z_S` are the shared coordinates of each block:
//!
//! ```text
//! x ← argmin J₁(x) + λᵀ(C x_S + D z_S − b) + ρ/2 ‖C x_S + D z_S − b‖²
//! z ← argmin J₂(z) + λᵀ(C x_S + D z_S − b) + ρ/2 ‖C x_S + D z_S − b‖²
//! λ ← λ + ρ (C x_S + D z_S − b)
//! ```
//!
//! An inequality coupling gets a slack `s ≥ 0` (`C x_S + D z_S + s = b`),
//! updated by projection after the z-step. Block subproblems are solved by
//! projected gradient with backtracking.

mod objective;
mod passenger;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

pub use objective::{BlockObjective, FnObjective, Linear, PassengerTravelTime, SeparableQuadratic};
pub use passenger::{passenger_vehicle_instance, InstancePath, PassengerVehicleInstance, PassengerVehicleProblem};

const INNER_TOLERANCE: f64 = 1e-8;
const INNER_MAX_ITERATIONS: usize = 100_000;

#[derive(Debug, Error)]
pub enum AdmmError {
    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("shared index {index} is invalid or repeated (dimension {dimension})")]
    BadSharedIndex { index: usize, dimension: usize },
    #[error("simplex group is invalid: {0}")]
    BadSimplexGroup(String),
    #[error("invalid {name}: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("block {block} subproblem produced a non-finite value")]
    InnerSolverDiverged { block: usize },
}

/// Coordinates constrained to `x ≥ lower` and `Σ x = total`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexGroup {
    pub indices: Vec<usize>,
    pub total: f64,
}

/// One block of the split problem.
pub struct BlockProblem {
    pub objective: Box<dyn BlockObjective>,
    pub dimension: usize,
    /// Coordinates entering the coupling, in coupling-column order.
    pub shared_indices: Vec<usize>,
    pub lower_bounds: Vec<f64>,
    pub simplex_groups: Vec<SimplexGroup>,
}

impl std::fmt::Debug for BlockProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BlockProblem")
            .field("dimension", &self.dimension)
            .field("shared_indices", &self.shared_indices)
            .field("lower_bounds", &self.lower_bounds)
            .field("simplex_groups", &self.simplex_groups)
            .finish_non_exhaustive()
    }
}

impl BlockProblem {
    /// Block with zero lower bounds and no simplex groups.
    pub fn new(objective: Box<dyn BlockObjective>, dimension: usize, shared_indices: Vec<usize>) -> Self {
        Self {
            objective,
            dimension,
            shared_indices,
            lower_bounds: vec![0.0; dimension],
            simplex_groups: Vec::new(),
        }
    }

    pub fn with_lower_bounds(mut self, lower_bounds: Vec<f64>) -> Self {
        self.lower_bounds = lower_bounds;
        self
    }

    pub fn with_simplex_groups(mut self, groups: Vec<SimplexGroup>) -> Self {
        self.simplex_groups = groups;
        self
    }

    pub fn validate(&self) -> Result<(), AdmmError> {
        let mut seen = vec![false; self.dimension];
        for &index in &self.shared_indices {
            if index >= self.dimension || std::mem::replace(&mut seen[index], true) {
                return Err(AdmmError::BadSharedIndex {
                    index,
                    dimension: self.dimension,
                });
            }
        }
        if self.lower_bounds.len() != self.dimension {
            return Err(AdmmError::DimensionMismatch {
                what: "lower bounds",
                expected: self.dimension,
                found: self.lower_bounds.len(),
            });
        }
        let mut grouped = vec![false; self.dimension];
        for group in &self.simplex_groups {
            for &i in &group.indices {
                if i >= self.dimension || std::mem::replace(&mut grouped[i], true) {
                    return Err(AdmmError::BadSimplexGroup(format!("index {i} invalid or in two groups")));
                }
            }
            let floor: f64 = group.indices.iter().map(|&i| self.lower_bounds[i]).sum();
            if group.indices.is_empty() && group.total != 0.0 || group.total < floor - 1e-12 {
                return Err(AdmmError::BadSimplexGroup(format!(
                    "total {} below the sum of lower bounds {floor}",
                    group.total
                )));
            }
        }
        Ok(())
    }

    /// Euclidean projection onto the block's feasible set.
    pub fn project(&self, x: &mut [f64]) {
        let mut grouped = vec![false; self.dimension];
        for group in &self.simplex_groups {
            let shifted: Vec<f64> = group.indices.iter().map(|&i| x[i] - self.lower_bounds[i]).collect();
            let floor: f64 = group.indices.iter().map(|&i| self.lower_bounds[i]).sum();
            let projected = project_simplex(&shifted, (group.total - floor).max(0.0));
            for (&i, p) in group.indices.iter().zip(projected) {
                x[i] = p + self.lower_bounds[i];
                grouped[i] = true;
            }
        }
        for (i, v) in x.iter_mut().enumerate() {
            if !grouped[i] {
                *v = v.max(self.lower_bounds[i]);
            }
        }
    }

    fn shared(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.shared_indices.len(), self.shared_indices.iter().map(|&i| x[i]))
    }
}

/// Projection of `v` onto `{y ≥ 0, Σ y = total}`.
fn project_simplex(v: &[f64], total: f64) -> Vec<f64> {
    if v.is_empty() {
        return Vec::new();
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - total) / (k + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingKind {
    Equality,
    /// `C x_S + D z_S ≤ b`.
    InequalityLeq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSpec {
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub b: Vec<f64>,
    pub kind: CouplingKind,
}

impl CouplingSpec {
    pub fn n_constraints(&self) -> usize {
        self.b.len()
    }

    fn validate(&self, block1: &BlockProblem, block2: &BlockProblem) -> Result<(), AdmmError> {
        let m = self.b.len();
        for (what, expected, found) in [
            ("C rows", m, self.c.nrows()),
            ("D rows", m, self.d.nrows()),
            ("C columns vs block-1 shared", block1.shared_indices.len(), self.c.ncols()),
            ("D columns vs block-2 shared", block2.shared_indices.len(), self.d.ncols()),
        ] {
            if expected != found {
                return Err(AdmmError::DimensionMismatch { what, expected, found });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub lambda: Vec<f64>,
    /// Present for inequality couplings.
    pub slack: Option<Vec<f64>>,
    pub rho: f64,
    pub iteration: usize,
}

impl AdmmState {
    /// Projected zero starting point with `λ = 0`.
    pub fn initial(block1: &BlockProblem, block2: &BlockProblem, coupling: &CouplingSpec, rho: f64) -> Self {
        let mut x = vec![0.0; block1.dimension];
        block1.project(&mut x);
        let mut z = vec![0.0; block2.dimension];
        block2.project(&mut z);
        let m = coupling.n_constraints();
        Self {
            x,
            z,
            lambda: vec![0.0; m],
            slack: (coupling.kind == CouplingKind::InequalityLeq).then(|| vec![0.0; m]),
            rho,
            iteration: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub iteration: usize,
    /// `C x_S + D z_S (+ s) − b`.
    pub primal_vector: Vec<f64>,
    pub primal_residual: f64,
    /// `‖ρ Cᵀ (D Δz_S + Δs)‖`.
    pub dual_residual: f64,
    pub objective1: f64,
    pub objective2: f64,
    pub lambda_norm: f64,
    pub rho: f64,
}

/// Minimizes `f(v) + λᵀ(M v_S + w) + ρ/2 ‖M v_S + w‖²` over the block's
/// feasible set, starting from `v`.
fn solve_block(
    block: &BlockProblem,
    block_id: usize,
    m: &DMatrix<f64>,
    w: &DVector<f64>,
    lambda: &DVector<f64>,
    rho: f64,
    v: &mut [f64],
) -> Result<(), AdmmError> {
    let value = |v: &[f64]| {
        let r = m * block.shared(v) + w;
        block.objective.value(v) + lambda.dot(&r) + 0.5 * rho * r.norm_squared()
    };
    let gradient = |v: &[f64], g: &mut [f64]| {
        block.objective.gradient(v, g);
        let r = m * block.shared(v) + w;
        let coupled = m.transpose() * (lambda + &r * rho);
        for (k, &i) in block.shared_indices.iter().enumerate() {
            g[i] += coupled[k];
        }
    };

    block.project(v);
    let mut step = 1.0;
    let mut g = vec![0.0; v.len()];
    let mut g_trial = vec![0.0; v.len()];
    gradient(v, &mut g);
    for _ in 0..INNER_MAX_ITERATIONS {
        if !g.iter().all(|x| x.is_finite()) {
            return Err(AdmmError::InnerSolverDiverged { block: block_id });
        }
        // Accept when the curvature along the move is at most 1/step; for a
        // convex objective this guarantees f(trial) ≤ f(v).
        loop {
            let mut trial: Vec<f64> = v.iter().zip(&g).map(|(x, g)| x - step * g).collect();
            block.project(&mut trial);
            gradient(&trial, &mut g_trial);
            let diff: Vec<f64> = trial.iter().zip(v.iter()).map(|(a, b)| a - b).collect();
            let moved = diff.iter().map(|d| d * d).sum::<f64>();
            let curvature = g_trial.iter().zip(&g).zip(&diff).map(|((a, b), d)| (a - b) * d).sum::<f64>();
            if curvature * step <= moved || step < 1e-300 {
                v.copy_from_slice(&trial);
                std::mem::swap(&mut g, &mut g_trial);
                if moved.sqrt() / step <= INNER_TOLERANCE {
                    return if value(v).is_finite() {
                        Ok(())
                    } else {
                        Err(AdmmError::InnerSolverDiverged { block: block_id })
                    };
                }
                step = (step * 2.0).min(1e12);
                break;
            }
            step *= 0.5;
        }
    }
    log::debug!("block {block_id} inner solve hit the iteration cap");
    Ok(())
}

/// One ADMM iteration: x-step, z-step, slack projection, dual step.
pub fn admm_iterate(
    state: &mut AdmmState,
    block1: &BlockProblem,
    block2: &BlockProblem,
    coupling: &CouplingSpec,
) -> Result<ResidualReport, AdmmError> {
    let b = DVector::from_column_slice(&coupling.b);
    let lambda = DVector::from_column_slice(&state.lambda);
    let slack = |s: &Option<Vec<f64>>| match s {
        Some(s) => DVector::from_column_slice(s),
        None => DVector::zeros(b.len()),
    };
    let s_old = slack(&state.slack);
    let dz_old = &coupling.d * block2.shared(&state.z);

    let w1 = &dz_old + &s_old - &b;
    solve_block(block1, 1, &coupling.c, &w1, &lambda, state.rho, &mut state.x)?;
    let cx = &coupling.c * block1.shared(&state.x);

    let w2 = &cx + &s_old - &b;
    solve_block(block2, 2, &coupling.d, &w2, &lambda, state.rho, &mut state.z)?;
    let dz = &coupling.d * block2.shared(&state.z);

    if let Some(s) = state.slack.as_mut() {
        for (i, si) in s.iter_mut().enumerate() {
            *si = (b[i] - cx[i] - dz[i] - lambda[i] / state.rho).max(0.0);
        }
    }
    let s_new = slack(&state.slack);
    let residual = &cx + &dz + &s_new - &b;
    for (l, r) in state.lambda.iter_mut().zip(residual.iter()) {
        *l += state.rho * r;
    }
    let dual = (coupling.c.transpose() * ((&dz - &dz_old) + (&s_new - &s_old)) * state.rho).norm();
    state.iteration += 1;

    Ok(ResidualReport {
        iteration: state.iteration,
        primal_residual: residual.norm(),
        primal_vector: residual.iter().copied().collect(),
        dual_residual: dual,
        objective1: block1.objective.value(&state.x),
        objective2: block2.objective.value(&state.z),
        lambda_norm: state.lambda.iter().map(|l| l * l).sum::<f64>().sqrt(),
        rho: state.rho,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmConfig {
    pub rho: f64,
    pub tol_primal: f64,
    pub tol_dual: f64,
    pub max_iterations: usize,
    /// Doubles or halves ρ when one residual exceeds the other tenfold.
    pub adaptive_rho: bool,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        Self {
            rho: 1.0,
            tol_primal: 1e-6,
            tol_dual: 1e-6,
            max_iterations: 500,
            adaptive_rho: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmResult {
    /// Final iterate when converged, otherwise the iterate with the smallest
    /// tolerance-scaled residual.
    pub state: AdmmState,
    pub trace: Vec<ResidualReport>,
    pub converged: bool,
}

impl AdmmResult {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }
}

/// Iterates until both residuals are within tolerance or the cap is reached.
pub fn solve_admm(
    block1: &BlockProblem,
    block2: &BlockProblem,
    coupling: &CouplingSpec,
    config: &AdmmConfig,
) -> Result<AdmmResult, AdmmError> {
    for (name, value) in [
        ("rho", config.rho),
        ("primal tolerance", config.tol_primal),
        ("dual tolerance", config.tol_dual),
    ] {
        if !(value.is_finite() && value > 0.0) {
            return Err(AdmmError::InvalidParameter { name, value });
        }
    }
    if config.max_iterations == 0 {
        return Err(AdmmError::InvalidParameter {
            name: "max_iterations",
            value: 0.0,
        });
    }
    block1.validate()?;
    block2.validate()?;
    coupling.validate(block1, block2)?;

    let mut state = AdmmState::initial(block1, block2, coupling, config.rho);
    let mut trace = Vec::new();
    let mut best: Option<(f64, AdmmState)> = None;
    for _ in 0..config.max_iterations {
        let report = admm_iterate(&mut state, block1, block2, coupling)?;
        let done = report.primal_residual <= config.tol_primal && report.dual_residual <= config.tol_dual;
        let score = (report.primal_residual / config.tol_primal).max(report.dual_residual / config.tol_dual);
        if best.as_ref().is_none_or(|(s, _)| score < *s) {
            best = Some((score, state.clone()));
        }
        let (primal, dual) = (report.primal_residual, report.dual_residual);
        trace.push(report);
        if done {
            return Ok(AdmmResult {
                state,
                trace,
                converged: true,
            });
        }
        if config.adaptive_rho {
            if primal > 10.0 * dual {
                state.rho *= 2.0;
            } else if dual > 10.0 * primal {
                state.rho /= 2.0;
            }
        }
    }
    let (_, state) = best.expect("at least one iteration");
    Ok(AdmmResult {
        state,
        trace,
        converged: false,
    })
}
