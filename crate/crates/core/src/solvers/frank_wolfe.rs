//! Link-based Frank–Wolfe with exact line search.

use std::collections::BTreeMap;

use super::{beckmann_objective, bisect_step, AssignmentResult, SolverConfig, SolverError};
use crate::network::{shortest_path, Network, NetworkError, NodeId};
use crate::propagate::{FlowState, LinkPerformance, TimeState};

const LINE_SEARCH_ITERATIONS: usize = 60;

struct Loading {
    link_flows: Vec<f64>,
    /// `Σ_od f_od · (shortest-path cost)`.
    shortest_total: f64,
    od_labels: Vec<f64>,
}

fn all_or_nothing(network: &Network, costs: &[f64], demand: &[f64]) -> Result<Loading, SolverError> {
    let ods = network.od_pairs();
    let mut by_origin: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
    for (i, od) in ods.iter().enumerate() {
        by_origin.entry(od.origin).or_default().push(i);
    }
    let mut link_flows = vec![0.0; network.n_links()];
    let mut od_labels = vec![f64::INFINITY; ods.len()];
    let mut shortest_total = 0.0;
    for (&origin, members) in &by_origin {
        let tree = shortest_path(network, costs, origin)?;
        for &i in members {
            let od = &ods[i];
            let label = tree.label(network, od.destination).unwrap_or(f64::INFINITY);
            od_labels[i] = label;
            if demand[i] == 0.0 {
                continue;
            }
            let path = tree
                .path_to(network, od.destination)
                .ok_or(NetworkError::DisconnectedOd {
                    origin: od.origin,
                    destination: od.destination,
                })?;
            for l in path {
                link_flows[l] += demand[i];
            }
            shortest_total += demand[i] * label;
        }
    }
    Ok(Loading {
        link_flows,
        shortest_total,
        od_labels,
    })
}

/// User equilibrium on link flows. Starts from all-or-nothing loading at
/// zero-flow times; each iteration loads demand on current shortest paths
/// and moves toward that loading by exact line search on the Beckmann
/// objective, which is therefore nonincreasing.
///
/// Path flows are not tracked: `flows.path` and `times.path` are empty, and
/// `times.od` holds the shortest-path time of each OD at the final flows.
pub fn solve_ue_frank_wolfe(
    network: &Network,
    performance: &LinkPerformance,
    config: &SolverConfig,
) -> Result<AssignmentResult, SolverError> {
    config.validate()?;
    if network.n_links() != performance.len() {
        return Err(SolverError::DimensionMismatch {
            what: "link performance",
            expected: network.n_links(),
            found: performance.len(),
        });
    }
    let demand = network.demand_vector();
    let mut x = all_or_nothing(network, &performance.times(&vec![0.0; network.n_links()]), &demand)?.link_flows;

    let mut gap_history = Vec::new();
    let mut objective_history = Vec::new();
    let mut converged = false;
    let mut od_labels;
    loop {
        let times = performance.times(&x);
        let loading = all_or_nothing(network, &times, &demand)?;
        od_labels = loading.od_labels;
        let total: f64 = x.iter().zip(&times).map(|(f, t)| f * t).sum();
        let gap = if total > 0.0 {
            ((total - loading.shortest_total) / total).max(0.0)
        } else {
            0.0
        };
        gap_history.push(gap);
        objective_history.push(beckmann_objective(&x, performance)?);
        if gap <= config.gap_tolerance {
            converged = true;
            break;
        }
        if gap_history.len() == config.max_iterations {
            break;
        }
        let direction: Vec<f64> = loading.link_flows.iter().zip(&x).map(|(y, f)| y - f).collect();
        let tau = bisect_step(
            |tau| {
                direction
                    .iter()
                    .zip(&x)
                    .zip(performance.links())
                    .map(|((&d, &f), vd)| if d == 0.0 { 0.0 } else { d * vd.time(f + tau * d) })
                    .sum()
            },
            LINE_SEARCH_ITERATIONS,
        );
        for (f, d) in x.iter_mut().zip(&direction) {
            *f = (*f + tau * d).max(0.0);
        }
    }

    let link_times = performance.times(&x);
    Ok(AssignmentResult {
        flows: FlowState {
            od: demand,
            path: Vec::new(),
            link: x,
        },
        times: TimeState {
            link: link_times,
            path: Vec::new(),
            od: od_labels,
        },
        iterations: gap_history.len(),
        gap_history,
        objective_history,
        converged,
    })
}
