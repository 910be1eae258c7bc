//! Forward flow propagation, link performance, backward time propagation
//! and logit choice updates.
//!
//! ```text
//! f_P = Bᵀ f_OD    f_L = Aᵀ f_P    t_L = φ(f_L)    t_P = A t_L    t_OD = B t_P
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{IncidenceSet, SparseBinaryMatrix, SparseMatrix};

#[derive(Debug, Error, PartialEq)]
pub enum PropagateError {
    #[error("{what}: expected length {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("OD demand {index} is {value}; demands must be finite and non-negative")]
    NegativeDemand { index: usize, value: f64 },
    #[error("link flow {index} is {value}; flows must be finite and non-negative")]
    NegativeFlow { index: usize, value: f64 },
    #[error("link time {index} is {value}; times must be finite and non-negative")]
    NegativeTime { index: usize, value: f64 },
    #[error("OD {od} has no path")]
    NoPathForOd { od: usize },
    #[error("logit dispersion {0} must be finite and non-negative")]
    InvalidTheta(f64),
    #[error("link {link}: {reason}")]
    InvalidPerformance { link: usize, reason: String },
}

/// Separable volume-delay function of one link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VolumeDelay {
    /// `t0 (1 + alpha (f / C)^beta)`.
    Bpr {
        free_flow_time: f64,
        capacity: f64,
        alpha: f64,
        beta: f64,
    },
    /// `offset + coefficient · f^exponent`. Covers zero free-flow time,
    /// e.g. the variable route `t = x^β` of the Pigou network.
    Power {
        offset: f64,
        coefficient: f64,
        exponent: f64,
    },
}

impl VolumeDelay {
    /// Constant travel time.
    pub fn constant(time: f64) -> Self {
        Self::Power {
            offset: time,
            coefficient: 0.0,
            exponent: 1.0,
        }
    }

    fn validate(&self, link: usize) -> Result<(), PropagateError> {
        let bad = |reason: String| Err(PropagateError::InvalidPerformance { link, reason });
        match *self {
            Self::Bpr {
                free_flow_time,
                capacity,
                alpha,
                beta,
            } => {
                if !(free_flow_time.is_finite() && free_flow_time > 0.0) {
                    return bad(format!("free-flow time {free_flow_time} must be positive"));
                }
                if !(capacity.is_finite() && capacity > 0.0) {
                    return bad(format!("capacity {capacity} must be positive"));
                }
                if !(alpha.is_finite() && alpha >= 0.0) {
                    return bad(format!("alpha {alpha} must be non-negative"));
                }
                if !(beta.is_finite() && beta >= 1.0) {
                    return bad(format!("beta {beta} must be at least 1"));
                }
            }
            Self::Power {
                offset,
                coefficient,
                exponent,
            } => {
                if !(offset.is_finite() && offset >= 0.0) {
                    return bad(format!("offset {offset} must be non-negative"));
                }
                if !(coefficient.is_finite() && coefficient >= 0.0) {
                    return bad(format!("coefficient {coefficient} must be non-negative"));
                }
                if !(exponent.is_finite() && exponent >= 1.0) {
                    return bad(format!("exponent {exponent} must be at least 1"));
                }
            }
        }
        Ok(())
    }

    /// Travel time at flow `f` (negative flows are read as zero).
    pub fn time(&self, f: f64) -> f64 {
        let f = f.max(0.0);
        match *self {
            Self::Bpr {
                free_flow_time,
                capacity,
                alpha,
                beta,
            } => free_flow_time * (1.0 + alpha * (f / capacity).powf(beta)),
            Self::Power {
                offset,
                coefficient,
                exponent,
            } => offset + coefficient * f.powf(exponent),
        }
    }

    /// `dt/df` at flow `f`.
    pub fn derivative(&self, f: f64) -> f64 {
        let f = f.max(0.0);
        match *self {
            Self::Bpr {
                free_flow_time,
                capacity,
                alpha,
                beta,
            } => free_flow_time * alpha * beta / capacity * (f / capacity).powf(beta - 1.0),
            Self::Power {
                coefficient,
                exponent,
                ..
            } => coefficient * exponent * f.powf(exponent - 1.0),
        }
    }

    /// `∫₀^f t(w) dw`.
    pub fn integral(&self, f: f64) -> f64 {
        let f = f.max(0.0);
        match *self {
            Self::Bpr {
                free_flow_time,
                capacity,
                alpha,
                beta,
            } => {
                free_flow_time * f
                    + free_flow_time * alpha * capacity / (beta + 1.0)
                        * (f / capacity).powf(beta + 1.0)
            }
            Self::Power {
                offset,
                coefficient,
                exponent,
            } => offset * f + coefficient * f.powf(exponent + 1.0) / (exponent + 1.0),
        }
    }

    /// Marginal social cost `t(f) + f t'(f)`, which stays in the same family.
    pub fn marginal(&self) -> Self {
        match *self {
            Self::Bpr {
                free_flow_time,
                capacity,
                alpha,
                beta,
            } => Self::Bpr {
                free_flow_time,
                capacity,
                alpha: alpha * (beta + 1.0),
                beta,
            },
            Self::Power {
                offset,
                coefficient,
                exponent,
            } => Self::Power {
                offset,
                coefficient: coefficient * (exponent + 1.0),
                exponent,
            },
        }
    }
}

/// Volume-delay functions for every link, in link order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkPerformance {
    links: Vec<VolumeDelay>,
}

impl LinkPerformance {
    pub fn new(links: Vec<VolumeDelay>) -> Result<Self, PropagateError> {
        for (i, vd) in links.iter().enumerate() {
            vd.validate(i)?;
        }
        Ok(Self { links })
    }

    /// BPR links from parallel parameter slices.
    pub fn bpr(
        free_flow_time: &[f64],
        capacity: &[f64],
        alpha: &[f64],
        beta: &[f64],
    ) -> Result<Self, PropagateError> {
        let n = free_flow_time.len();
        for (what, v) in [("capacity", capacity), ("alpha", alpha), ("beta", beta)] {
            if v.len() != n {
                return Err(PropagateError::DimensionMismatch {
                    what,
                    expected: n,
                    found: v.len(),
                });
            }
        }
        Self::new(
            (0..n)
                .map(|i| VolumeDelay::Bpr {
                    free_flow_time: free_flow_time[i],
                    capacity: capacity[i],
                    alpha: alpha[i],
                    beta: beta[i],
                })
                .collect(),
        )
    }

    pub fn links(&self) -> &[VolumeDelay] {
        &self.links
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    /// Link times; panics on a length mismatch. See [`bpr`] for the checked form.
    pub fn times(&self, flows: &[f64]) -> Vec<f64> {
        assert_eq!(flows.len(), self.links.len(), "times: length mismatch");
        self.links.iter().zip(flows).map(|(vd, &f)| vd.time(f)).collect()
    }

    pub fn derivatives(&self, flows: &[f64]) -> Vec<f64> {
        assert_eq!(flows.len(), self.links.len(), "derivatives: length mismatch");
        self.links
            .iter()
            .zip(flows)
            .map(|(vd, &f)| vd.derivative(f))
            .collect()
    }

    /// `Σ_ℓ ∫₀^{f_ℓ} t_ℓ(w) dw`.
    pub fn integral_sum(&self, flows: &[f64]) -> f64 {
        assert_eq!(flows.len(), self.links.len(), "integral_sum: length mismatch");
        self.links
            .iter()
            .zip(flows)
            .map(|(vd, &f)| vd.integral(f))
            .sum()
    }

    pub fn marginal(&self) -> Self {
        Self {
            links: self.links.iter().map(VolumeDelay::marginal).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub od: Vec<f64>,
    pub path: Vec<f64>,
    pub link: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeState {
    pub link: Vec<f64>,
    pub path: Vec<f64>,
    pub od: Vec<f64>,
}

fn check_len(what: &'static str, expected: usize, v: &[f64]) -> Result<(), PropagateError> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(PropagateError::DimensionMismatch {
            what,
            expected,
            found: v.len(),
        })
    }
}

fn first_negative(v: &[f64]) -> Option<(usize, f64)> {
    v.iter()
        .copied()
        .enumerate()
        .find(|(_, x)| !(x.is_finite() && *x >= 0.0))
}

/// `f_P = Bᵀ f_OD`, `f_L = Aᵀ f_P`.
pub fn forward_flows(incidence: &IncidenceSet, od_flows: &[f64]) -> Result<FlowState, PropagateError> {
    check_len("OD flows", incidence.n_od(), od_flows)?;
    if let Some((index, value)) = first_negative(od_flows) {
        return Err(PropagateError::NegativeDemand { index, value });
    }
    let path = incidence.b().tmul_vec(od_flows);
    let link = incidence.a().tmul_vec(&path);
    Ok(FlowState {
        od: od_flows.to_vec(),
        path,
        link,
    })
}

/// `f_L = Aᵀ f_P`.
pub fn link_flows_from_paths(
    incidence: &IncidenceSet,
    path_flows: &[f64],
) -> Result<Vec<f64>, PropagateError> {
    check_len("path flows", incidence.n_paths(), path_flows)?;
    Ok(incidence.a().tmul_vec(path_flows))
}

/// Link travel times `t_ℓ = φ_ℓ(f_ℓ)`.
pub fn bpr(link_flows: &[f64], performance: &LinkPerformance) -> Result<Vec<f64>, PropagateError> {
    check_len("link flows", performance.len(), link_flows)?;
    if let Some((index, value)) = first_negative(link_flows) {
        return Err(PropagateError::NegativeFlow { index, value });
    }
    Ok(performance.times(link_flows))
}

/// `t_P = A t_L`, `t_OD = B t_P`.
pub fn backward_times(incidence: &IncidenceSet, link_times: &[f64]) -> Result<TimeState, PropagateError> {
    check_len("link times", incidence.n_links(), link_times)?;
    if let Some((index, value)) = first_negative(link_times) {
        return Err(PropagateError::NegativeTime { index, value });
    }
    let path = incidence.a().mul_vec(link_times);
    let od = incidence.b().mul_vec(&path);
    Ok(TimeState {
        link: link_times.to_vec(),
        path,
        od,
    })
}

/// Flow-weighted OD time `Σ_p f_p t_p / f_od`. An OD without demand takes
/// the minimum time over its paths.
pub fn od_time_flow_weighted(
    path_flows: &[f64],
    path_times: &[f64],
    od_flows: &[f64],
    incidence: &IncidenceSet,
) -> Result<Vec<f64>, PropagateError> {
    check_len("path flows", incidence.n_paths(), path_flows)?;
    check_len("path times", incidence.n_paths(), path_times)?;
    check_len("OD flows", incidence.n_od(), od_flows)?;
    (0..incidence.n_od())
        .map(|od| {
            let members = incidence.od_paths(od);
            if members.is_empty() {
                return Err(PropagateError::NoPathForOd { od });
            }
            if od_flows[od] > 0.0 {
                let weighted: f64 = members.iter().map(|&p| path_flows[p] * path_times[p]).sum();
                Ok(weighted / od_flows[od])
            } else {
                Ok(members
                    .iter()
                    .map(|&p| path_times[p])
                    .fold(f64::INFINITY, f64::min))
            }
        })
        .collect()
}

/// Multinomial logit split `exp(-θ t_p) / Σ exp(-θ t_p')` over each OD's
/// paths in `indicator`. Exponents are shifted by the OD's minimum time.
pub fn logit_choice(
    path_times: &[f64],
    theta: f64,
    indicator: &SparseBinaryMatrix,
) -> Result<SparseMatrix, PropagateError> {
    check_len("path times", indicator.n_cols(), path_times)?;
    if !(theta.is_finite() && theta >= 0.0) {
        return Err(PropagateError::InvalidTheta(theta));
    }
    let mut triplets = Vec::new();
    for od in 0..indicator.n_rows() {
        let members: Vec<usize> = indicator.row_support(od).collect();
        let t_min = members
            .iter()
            .map(|&p| path_times[p])
            .fold(f64::INFINITY, f64::min);
        let weights: Vec<f64> = members
            .iter()
            .map(|&p| (-theta * (path_times[p] - t_min)).exp())
            .collect();
        let total: f64 = weights.iter().sum();
        for (&p, w) in members.iter().zip(&weights) {
            triplets.push((od, p, w / total));
        }
    }
    Ok(SparseMatrix::from_triplets(indicator.n_rows(), indicator.n_cols(), &triplets)
        .expect("indicator positions are unique and in range"))
}

/// `f_OD → f_P → f_L → t_L → t_P → t_OD`.
pub fn full_chain(
    od_flows: &[f64],
    incidence: &IncidenceSet,
    performance: &LinkPerformance,
) -> Result<(FlowState, TimeState), PropagateError> {
    let flows = forward_flows(incidence, od_flows)?;
    let link_times = bpr(&flows.link, performance)?;
    let times = backward_times(incidence, &link_times)?;
    Ok((flows, times))
}
