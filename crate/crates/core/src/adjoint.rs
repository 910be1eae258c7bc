//! Exact derivatives through the flow/time chain.
//!
//! Orientation: `A` is |P|x|L|, so `f_L = Aᵀ f_P` and `t_P = A t_L`. The
//! adjoint recursion therefore propagates path-time sensitivities to links
//! with `Aᵀ`:
//!
//! ```text
//! p3 = ∂Z/∂t_P
//! p2 = ∂Z/∂t_L + Aᵀ p3
//! p1 = ∂Z/∂f_L + diag(d) p2
//! ∂Z/∂f_P = A p1
//! ```

use nalgebra::DMatrix;
use thiserror::Error;

use crate::network::IncidenceSet;
use crate::propagate::LinkPerformance;

#[derive(Debug, Error, PartialEq)]
pub enum AdjointError {
    #[error("{what}: expected length {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("function value not finite at coordinate {coordinate}")]
    NonFiniteEvaluation { coordinate: usize },
    #[error("finite-difference step {0} must be positive and finite")]
    InvalidStep(f64),
    #[error("link flow {index} is {value}; flows must be finite and non-negative")]
    NegativeFlow { index: usize, value: f64 },
}

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<(), AdjointError> {
    if expected == found {
        Ok(())
    } else {
        Err(AdjointError::DimensionMismatch {
            what,
            expected,
            found,
        })
    }
}

/// Diagonal of `∂t_L/∂f_L`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkTimeJacobian {
    pub diagonal: Vec<f64>,
}

pub fn link_time_jacobian(
    link_flows: &[f64],
    performance: &LinkPerformance,
) -> Result<LinkTimeJacobian, AdjointError> {
    check_len("link flows", performance.len(), link_flows.len())?;
    if let Some((index, &value)) = link_flows
        .iter()
        .enumerate()
        .find(|(_, f)| !(f.is_finite() && **f >= 0.0))
    {
        return Err(AdjointError::NegativeFlow { index, value });
    }
    Ok(LinkTimeJacobian {
        diagonal: performance.derivatives(link_flows),
    })
}

/// `∂t_OD/∂f_OD = B A diag(d) Aᵀ Bᵀ` with `B` held fixed.
pub fn od_sensitivity(
    incidence: &IncidenceSet,
    jacobian: &LinkTimeJacobian,
) -> Result<DMatrix<f64>, AdjointError> {
    check_len("jacobian diagonal", incidence.n_links(), jacobian.diagonal.len())?;
    // M = B A is |OD|x|L|; the result is M diag(d) Mᵀ.
    let n_od = incidence.n_od();
    let mut m = DMatrix::<f64>::zeros(n_od, incidence.n_links());
    for od in 0..n_od {
        for (p, prob) in incidence.b().row(od) {
            for (l, _) in incidence.a().row(p) {
                m[(od, l)] += prob;
            }
        }
    }
    let mut scaled = m.clone();
    for (l, &d) in jacobian.diagonal.iter().enumerate() {
        scaled.column_mut(l).scale_mut(d);
    }
    Ok(&scaled * m.transpose())
}

/// Caller-supplied partials of the objective at the current point.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveGradients {
    pub d_link_flow: Vec<f64>,
    pub d_link_time: Vec<f64>,
    pub d_path_time: Vec<f64>,
}

impl ObjectiveGradients {
    pub fn zeros(n_links: usize, n_paths: usize) -> Self {
        Self {
            d_link_flow: vec![0.0; n_links],
            d_link_time: vec![0.0; n_links],
            d_path_time: vec![0.0; n_paths],
        }
    }
}

/// Adjoint variables of the layered constraints plus KKT multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointState {
    /// Path-time adjoint (|P|).
    pub p3: Vec<f64>,
    /// Link-time adjoint (|L|).
    pub p2: Vec<f64>,
    /// Link-flow adjoint (|L|).
    pub p1: Vec<f64>,
    /// Flow-conservation multipliers (|OD|); zero unless set by a constrained solver.
    pub lambda: Vec<f64>,
    /// Non-negativity multipliers (|P|), `μ ≥ 0` with `μ_p f_p = 0`.
    pub mu: Vec<f64>,
    /// `∂Z/∂f_P`.
    pub grad_path_flow: Vec<f64>,
}

impl AdjointState {
    /// Gradient with respect to OD demand through `f_P = Bᵀ f_OD`, i.e. `B ∂Z/∂f_P`.
    pub fn grad_od_flow(&self, incidence: &IncidenceSet) -> Vec<f64> {
        incidence.b().mul_vec(&self.grad_path_flow)
    }
}

/// Backward pass from the output layer to path flows.
pub fn adjoint_backward(
    incidence: &IncidenceSet,
    jacobian: &LinkTimeJacobian,
    grads: &ObjectiveGradients,
) -> Result<AdjointState, AdjointError> {
    let n_links = incidence.n_links();
    let n_paths = incidence.n_paths();
    check_len("jacobian diagonal", n_links, jacobian.diagonal.len())?;
    check_len("dZ/df_L", n_links, grads.d_link_flow.len())?;
    check_len("dZ/dt_L", n_links, grads.d_link_time.len())?;
    check_len("dZ/dt_P", n_paths, grads.d_path_time.len())?;

    let a = incidence.a();
    let p3 = grads.d_path_time.clone();
    let p2: Vec<f64> = a
        .tmul_vec(&p3)
        .into_iter()
        .zip(&grads.d_link_time)
        .map(|(x, g)| g + x)
        .collect();
    let p1: Vec<f64> = grads
        .d_link_flow
        .iter()
        .zip(&jacobian.diagonal)
        .zip(&p2)
        .map(|((g, d), p)| g + d * p)
        .collect();
    let grad_path_flow = a.mul_vec(&p1);

    Ok(AdjointState {
        p3,
        p2,
        p1,
        lambda: vec![0.0; incidence.n_od()],
        mu: vec![0.0; n_paths],
        grad_path_flow,
    })
}

/// Finite-difference step per coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FdStep {
    /// The same `h` for every coordinate.
    Absolute(f64),
    /// `h · max(1, |x_j|)`.
    Scaled(f64),
}

impl Default for FdStep {
    fn default() -> Self {
        Self::Scaled(1e-4)
    }
}

impl FdStep {
    fn at(self, x: f64) -> f64 {
        match self {
            Self::Absolute(h) => h,
            Self::Scaled(h) => h * x.abs().max(1.0),
        }
    }

    fn raw(self) -> f64 {
        match self {
            Self::Absolute(h) | Self::Scaled(h) => h,
        }
    }
}

/// Central-difference Jacobian: column `j` holds `(f(x + h e_j) − f(x − h e_j)) / 2h`.
pub fn finite_diff_jacobian<F>(f: F, point: &[f64], step: FdStep) -> Result<DMatrix<f64>, AdjointError>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let h0 = step.raw();
    if !(h0.is_finite() && h0 > 0.0) {
        return Err(AdjointError::InvalidStep(h0));
    }
    let base = f(point);
    let mut jac = DMatrix::zeros(base.len(), point.len());
    let mut x = point.to_vec();
    for j in 0..point.len() {
        let h = step.at(point[j]);
        x[j] = point[j] + h;
        let plus = f(&x);
        x[j] = point[j] - h;
        let minus = f(&x);
        x[j] = point[j];
        check_len("function output", base.len(), plus.len())?;
        check_len("function output", base.len(), minus.len())?;
        for i in 0..base.len() {
            let v = (plus[i] - minus[i]) / (2.0 * h);
            if !v.is_finite() {
                return Err(AdjointError::NonFiniteEvaluation { coordinate: j });
            }
            jac[(i, j)] = v;
        }
    }
    Ok(jac)
}

/// Largest entrywise relative error between the central-difference Jacobian
/// of `f` at `point` and `analytic`, with denominator `max(1e-12, |analytic|)`.
pub fn finite_diff_check<F>(
    f: F,
    point: &[f64],
    step: FdStep,
    analytic: &DMatrix<f64>,
) -> Result<f64, AdjointError>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let numeric = finite_diff_jacobian(f, point, step)?;
    check_len("analytic rows", numeric.nrows(), analytic.nrows())?;
    check_len("analytic columns", numeric.ncols(), analytic.ncols())?;
    Ok(numeric
        .iter()
        .zip(analytic.iter())
        .map(|(n, a)| (n - a).abs() / a.abs().max(1e-12))
        .fold(0.0, f64::max))
}
