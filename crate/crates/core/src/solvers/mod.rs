//! Equilibrium and system-optimal assignment.
//!
//! * [`solve_ue_gradient_projection`]: path-based projection over a fixed path set.
//! * [`solve_ue_frank_wolfe`]: link-based Frank–Wolfe with all-or-nothing loading.
//! * [`solve_so`] / [`solve_so_frank_wolfe`]: user equilibrium under marginal
//!   costs `t + f t'`, which minimizes total system time for separable costs.

mod frank_wolfe;
mod gradient_projection;

use thiserror::Error;

use crate::network::{IncidenceSet, Network, NetworkError};
use crate::propagate::{FlowState, LinkPerformance, PropagateError, TimeState};

pub use frank_wolfe::solve_ue_frank_wolfe;
pub use gradient_projection::solve_ue_gradient_projection;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Propagate(#[from] PropagateError),
    #[error("{what}: expected length {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("total path cost is zero (no demand)")]
    ZeroTotalCost,
    #[error("OD {od} has positive demand but no path")]
    NoPathForOd { od: usize },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}

/// Step rule for the path-flow shift `step · (t_p − t_min)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    Fixed(f64),
    /// `s0 / k` at iteration `k`. `None` picks `s0 = 1 / max_ℓ(d_ℓ + ε)` from
    /// the link-time derivatives at the starting flows.
    Diminishing(Option<f64>),
    /// Shift each path by its Newton step `(t_p − t_min) / Σ d_ℓ` over links
    /// not shared with the cheapest path, then pick the fraction of that move
    /// by exact line search on the Beckmann objective.
    LineSearch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iterations: usize,
    pub gap_tolerance: f64,
    pub step_rule: StepRule,
    /// Recorded for reproducibility; the solvers are deterministic.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 1000,
            gap_tolerance: 1e-4,
            step_rule: StepRule::LineSearch,
            seed: 0,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<(), SolverError> {
        if self.max_iterations == 0 {
            return Err(SolverError::InvalidConfig("max_iterations must be at least 1".into()));
        }
        if !(self.gap_tolerance.is_finite() && self.gap_tolerance > 0.0) {
            return Err(SolverError::InvalidConfig(format!(
                "gap tolerance {} must be positive",
                self.gap_tolerance
            )));
        }
        match self.step_rule {
            StepRule::Fixed(s) | StepRule::Diminishing(Some(s)) if !(s.is_finite() && s > 0.0) => {
                Err(SolverError::InvalidConfig(format!("step {s} must be positive")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentResult {
    pub flows: FlowState,
    pub times: TimeState,
    /// Relative gap at every evaluated iterate.
    pub gap_history: Vec<f64>,
    /// Objective minimized by the solver (Beckmann under the costs it used).
    pub objective_history: Vec<f64>,
    /// Number of evaluated iterates.
    pub iterations: usize,
    pub converged: bool,
}

impl AssignmentResult {
    /// `Σ_ℓ f_ℓ t_ℓ`.
    pub fn total_system_time(&self) -> f64 {
        self.flows
            .link
            .iter()
            .zip(&self.times.link)
            .map(|(f, t)| f * t)
            .sum()
    }

    /// Total system time per unit of demand.
    pub fn mean_time(&self) -> f64 {
        let demand: f64 = self.flows.od.iter().sum();
        self.total_system_time() / demand
    }

    pub fn final_gap(&self) -> f64 {
        self.gap_history.last().copied().unwrap_or(f64::NAN)
    }
}

/// `Σ_ℓ ∫₀^{f_ℓ} t_ℓ(w) dw`.
pub fn beckmann_objective(link_flows: &[f64], performance: &LinkPerformance) -> Result<f64, SolverError> {
    if link_flows.len() != performance.len() {
        return Err(SolverError::DimensionMismatch {
            what: "link flows",
            expected: performance.len(),
            found: link_flows.len(),
        });
    }
    if let Some((index, &value)) = link_flows
        .iter()
        .enumerate()
        .find(|(_, f)| !(f.is_finite() && **f >= 0.0))
    {
        return Err(PropagateError::NegativeFlow { index, value }.into());
    }
    Ok(performance.integral_sum(link_flows))
}

/// `(Σ_p f_p t_p − Σ_od f_od min_{p∈od} t_p) / Σ_p f_p t_p`.
pub fn relative_gap(
    path_flows: &[f64],
    path_times: &[f64],
    od_flows: &[f64],
    incidence: &IncidenceSet,
) -> Result<f64, SolverError> {
    for (what, expected, v) in [
        ("path flows", incidence.n_paths(), path_flows),
        ("path times", incidence.n_paths(), path_times),
        ("OD flows", incidence.n_od(), od_flows),
    ] {
        if v.len() != expected {
            return Err(SolverError::DimensionMismatch {
                what,
                expected,
                found: v.len(),
            });
        }
    }
    let total: f64 = path_flows.iter().zip(path_times).map(|(f, t)| f * t).sum();
    if total <= 0.0 {
        return Err(SolverError::ZeroTotalCost);
    }
    let mut shortest = 0.0;
    for (od, &demand) in od_flows.iter().enumerate() {
        if demand == 0.0 {
            continue;
        }
        let best = incidence
            .od_paths(od)
            .iter()
            .map(|&p| path_times[p])
            .fold(f64::INFINITY, f64::min);
        if !best.is_finite() {
            return Err(SolverError::NoPathForOd { od });
        }
        shortest += demand * best;
    }
    Ok(((total - shortest) / total).max(0.0))
}

/// System optimum by gradient projection on marginal costs. Reported times
/// are the actual link times at the optimal flows.
pub fn solve_so(
    network: &Network,
    incidence: &IncidenceSet,
    performance: &LinkPerformance,
    config: &SolverConfig,
) -> Result<AssignmentResult, SolverError> {
    let mut result =
        solve_ue_gradient_projection(network, incidence, &performance.marginal(), config)?;
    result.times = gradient_projection::evaluate_times(incidence, performance, &result.flows)?;
    Ok(result)
}

/// System optimum by Frank–Wolfe on marginal costs.
pub fn solve_so_frank_wolfe(
    network: &Network,
    performance: &LinkPerformance,
    config: &SolverConfig,
) -> Result<AssignmentResult, SolverError> {
    let mut result = solve_ue_frank_wolfe(network, &performance.marginal(), config)?;
    result.times.link = performance.times(&result.flows.link);
    Ok(result)
}

/// Root of the nondecreasing derivative `phi` on `[0, 1]` by bisection.
pub(crate) fn bisect_step(phi: impl Fn(f64) -> f64, iterations: usize) -> f64 {
    if phi(1.0) <= 0.0 {
        return 1.0;
    }
    if phi(0.0) >= 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..iterations {
        let mid = 0.5 * (lo + hi);
        if phi(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}
