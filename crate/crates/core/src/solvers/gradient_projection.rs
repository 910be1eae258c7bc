//! Path-based gradient projection over a fixed path set.

use super::{beckmann_objective, bisect_step, relative_gap, AssignmentResult, SolverConfig, SolverError, StepRule};
use crate::network::{IncidenceSet, Network};
use crate::propagate::{od_time_flow_weighted, FlowState, LinkPerformance, TimeState};

const DERIVATIVE_FLOOR: f64 = 1e-12;
const LINE_SEARCH_ITERATIONS: usize = 60;

/// User equilibrium over the paths in `incidence`, starting from the split
/// `Bᵀ f_OD` implied by its choice matrix.
///
/// Each iteration moves flow within every OD from costlier paths toward the
/// currently cheapest one, which absorbs the remainder so OD totals are
/// preserved. Path flows never go negative. Stops once the relative gap is
/// at most the tolerance; otherwise returns the lowest-gap iterate with
/// `converged = false`.
pub fn solve_ue_gradient_projection(
    network: &Network,
    incidence: &IncidenceSet,
    performance: &LinkPerformance,
    config: &SolverConfig,
) -> Result<AssignmentResult, SolverError> {
    config.validate()?;
    let demand = network.demand_vector();
    if demand.len() != incidence.n_od() {
        return Err(SolverError::DimensionMismatch {
            what: "OD pairs in incidence",
            expected: demand.len(),
            found: incidence.n_od(),
        });
    }
    if incidence.n_links() != performance.len() || network.n_links() != performance.len() {
        return Err(SolverError::DimensionMismatch {
            what: "link performance",
            expected: incidence.n_links(),
            found: performance.len(),
        });
    }
    if let Some(od) = (0..demand.len()).find(|&od| demand[od] > 0.0 && incidence.od_paths(od).is_empty()) {
        return Err(SolverError::NoPathForOd { od });
    }

    let a = incidence.a();
    let mut path_flows = incidence.b().tmul_vec(&demand);
    let total_demand: f64 = demand.iter().sum();
    let initial_step = match config.step_rule {
        StepRule::Diminishing(None) => {
            let d = performance.derivatives(&a.tmul_vec(&path_flows));
            let max_d = d.iter().copied().fold(0.0, f64::max);
            1.0 / (max_d + DERIVATIVE_FLOOR)
        }
        StepRule::Diminishing(Some(s)) | StepRule::Fixed(s) => s,
        StepRule::LineSearch => 0.0,
    };

    let mut gap_history = Vec::new();
    let mut objective_history = Vec::new();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut converged = false;

    for k in 1..=config.max_iterations {
        let link_flows = a.tmul_vec(&path_flows);
        let link_times = performance.times(&link_flows);
        let path_times = a.mul_vec(&link_times);
        let gap = if total_demand > 0.0 {
            match relative_gap(&path_flows, &path_times, &demand, incidence) {
                Ok(g) => g,
                Err(SolverError::ZeroTotalCost) => 0.0,
                Err(e) => return Err(e),
            }
        } else {
            0.0
        };
        gap_history.push(gap);
        objective_history.push(beckmann_objective(&link_flows, performance)?);
        if best.as_ref().is_none_or(|(g, _)| gap < *g) {
            best = Some((gap, path_flows.clone()));
        }
        if gap <= config.gap_tolerance {
            converged = true;
            break;
        }
        if k == config.max_iterations {
            break;
        }

        let derivatives = match config.step_rule {
            StepRule::LineSearch => performance.derivatives(&link_flows),
            _ => Vec::new(),
        };
        // Per-OD moves toward the cheapest path; the cheapest path's entry is
        // the exact negated sum so every OD total is preserved bit-for-bit.
        let mut direction = vec![0.0; path_flows.len()];
        for od in 0..incidence.n_od() {
            let members = incidence.od_paths(od);
            if members.len() < 2 || demand[od] == 0.0 {
                continue;
            }
            let cheapest = members
                .iter()
                .copied()
                .min_by(|&p, &q| path_times[p].total_cmp(&path_times[q]))
                .expect("nonempty");
            let t_min = path_times[cheapest];
            let mut moved = 0.0;
            for &p in members {
                if p == cheapest {
                    continue;
                }
                let excess = path_times[p] - t_min;
                let step = match config.step_rule {
                    StepRule::Fixed(_) => initial_step,
                    StepRule::Diminishing(_) => initial_step / k as f64,
                    StepRule::LineSearch => {
                        let curvature = symmetric_difference_sum(a.row(p), a.row(cheapest), &derivatives);
                        if curvature > 0.0 {
                            1.0 / curvature
                        } else {
                            f64::INFINITY
                        }
                    }
                };
                let shift = (step * excess).min(path_flows[p]);
                direction[p] = -shift;
                moved += shift;
            }
            direction[cheapest] = moved;
        }

        if config.step_rule == StepRule::LineSearch {
            let link_direction = a.tmul_vec(&direction);
            let tau = bisect_step(
                |tau| {
                    link_direction
                        .iter()
                        .zip(&link_flows)
                        .zip(performance.links())
                        .map(|((&d, &f), vd)| if d == 0.0 { 0.0 } else { d * vd.time(f + tau * d) })
                        .sum()
                },
                LINE_SEARCH_ITERATIONS,
            );
            for (f, d) in path_flows.iter_mut().zip(&direction) {
                *f = (*f + tau * d).max(0.0);
            }
        } else {
            for (f, d) in path_flows.iter_mut().zip(&direction) {
                *f = (*f + d).max(0.0);
            }
        }
    }

    let (_, path_flows) = best.expect("at least one iteration");
    let link = a.tmul_vec(&path_flows);
    let flows = FlowState {
        od: demand,
        path: path_flows,
        link,
    };
    let times = evaluate_times(incidence, performance, &flows)?;
    Ok(AssignmentResult {
        flows,
        times,
        iterations: gap_history.len(),
        gap_history,
        objective_history,
        converged,
    })
}

/// Link, path and flow-weighted OD times at `flows`.
pub(super) fn evaluate_times(
    incidence: &IncidenceSet,
    performance: &LinkPerformance,
    flows: &FlowState,
) -> Result<TimeState, SolverError> {
    let link = performance.times(&flows.link);
    let path = incidence.a().mul_vec(&link);
    let od = od_time_flow_weighted(&flows.path, &path, &flows.od, incidence)?;
    Ok(TimeState { link, path, od })
}

/// `Σ d_ℓ` over links on exactly one of two sorted link-position rows.
fn symmetric_difference_sum(
    p: impl Iterator<Item = (usize, f64)>,
    q: impl Iterator<Item = (usize, f64)>,
    derivatives: &[f64],
) -> f64 {
    let mut p = p.map(|(l, _)| l).peekable();
    let mut q = q.map(|(l, _)| l).peekable();
    let mut sum = 0.0;
    loop {
        match (p.peek().copied(), q.peek().copied()) {
            (Some(x), Some(y)) if x == y => {
                p.next();
                q.next();
            }
            (Some(x), Some(y)) if x < y => {
                sum += derivatives[x];
                p.next();
            }
            (Some(_), Some(y)) => {
                sum += derivatives[y];
                q.next();
            }
            (Some(x), None) => {
                sum += derivatives[x];
                p.next();
            }
            (None, Some(y)) => {
                sum += derivatives[y];
                q.next();
            }
            (None, None) => return sum,
        }
    }
}
