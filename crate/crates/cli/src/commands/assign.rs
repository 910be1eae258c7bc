//! `validate`, `assign` and `sensitivity` on a GMNS network.

use anyhow::{bail, Result};
use ftt_core::adjoint::{link_time_jacobian, od_sensitivity};
use ftt_core::network::{generate_paths, load_gmns, shortest_path};
use ftt_core::propagate::od_time_flow_weighted;
use ftt_core::solvers::{
    solve_so, solve_so_frank_wolfe, solve_ue_frank_wolfe, solve_ue_gradient_projection, AssignmentResult,
    SolverConfig, StepRule,
};
use ftt_core::{IncidenceSet, Network, PathSet};
use serde_json::json;

use crate::config::{Method, Objective, ScenarioConfig, StepRuleKind};
use crate::output::{num, RunOutput};

struct Loaded {
    network: Network,
    paths: PathSet,
    incidence: IncidenceSet,
}

fn load(config: &ScenarioConfig) -> Result<Loaded> {
    let [node, link, demand] = config.network_files()?;
    let network = load_gmns(&node, &link, &demand)?;
    let paths = generate_paths(&network, config.network.path_rounds)?;
    let incidence = IncidenceSet::uniform(&paths, network.n_links())?;
    log::info!(
        "loaded {} nodes, {} links, {} OD pairs, {} paths",
        network.nodes().len(),
        network.n_links(),
        network.od_pairs().len(),
        paths.len()
    );
    Ok(Loaded {
        network,
        paths,
        incidence,
    })
}

fn solver_config(config: &ScenarioConfig) -> Result<SolverConfig> {
    let s = &config.solver;
    let step_rule = match (s.step_rule, s.step_size) {
        (StepRuleKind::LineSearch, _) => StepRule::LineSearch,
        (StepRuleKind::Fixed, Some(step)) => StepRule::Fixed(step),
        (StepRuleKind::Fixed, None) => bail!("the fixed step rule needs --step-size"),
        (StepRuleKind::Diminishing, step) => StepRule::Diminishing(step),
    };
    Ok(SolverConfig {
        max_iterations: s.max_iterations,
        gap_tolerance: s.gap,
        step_rule,
        seed: config.seed(),
    })
}

fn od_label(network: &Network, od: usize) -> String {
    let pair = &network.od_pairs()[od];
    format!("{}-{}", pair.origin, pair.destination)
}

pub fn validate(config: &ScenarioConfig, out: &mut RunOutput) -> Result<()> {
    let loaded = load(config)?;
    let net = &loaded.network;
    let summary = json!({
        "nodes": net.nodes().len(),
        "links": net.n_links(),
        "od_pairs": net.od_pairs().len(),
        "total_demand": net.demand_vector().iter().sum::<f64>(),
        "paths": loaded.paths.len(),
    });
    out.json("network_summary.json", &summary)?;
    println!(
        "valid: {} nodes, {} links, {} OD pairs, {} paths",
        net.nodes().len(),
        net.n_links(),
        net.od_pairs().len(),
        loaded.paths.len()
    );
    Ok(())
}

fn solve(loaded: &Loaded, config: &ScenarioConfig, method: Method) -> Result<AssignmentResult> {
    let cfg = solver_config(config)?;
    let net = &loaded.network;
    let perf = net.performance();
    let result = match (method, config.solver.objective) {
        (Method::Gp, Objective::Ue) => solve_ue_gradient_projection(net, &loaded.incidence, &perf, &cfg)?,
        (Method::Gp, Objective::So) => solve_so(net, &loaded.incidence, &perf, &cfg)?,
        (Method::Fw, Objective::Ue) => solve_ue_frank_wolfe(net, &perf, &cfg)?,
        (Method::Fw, Objective::So) => solve_so_frank_wolfe(net, &perf, &cfg)?,
    };
    if !result.converged {
        log::warn!(
            "stopped after {} iterations at relative gap {:e}",
            result.iterations,
            result.final_gap()
        );
    }
    Ok(result)
}

pub fn assign(config: &ScenarioConfig, out: &mut RunOutput) -> Result<()> {
    let loaded = load(config)?;
    let method = config.solver.method;
    let result = solve(&loaded, config, method)?;
    let net = &loaded.network;

    out.csv(
        "link_performance.csv",
        &["link_id", "flow", "travel_time"],
        net.links()
            .iter()
            .zip(&result.flows.link)
            .zip(&result.times.link)
            .map(|((link, &f), &t)| vec![link.link_id.to_string(), num(f), num(t)]),
    )?;

    let tracks_paths = !result.flows.path.is_empty();
    if !tracks_paths {
        log::info!("Frank-Wolfe works on link flows; path_flow.csv has no rows");
    }
    out.csv(
        "path_flow.csv",
        &["path_id", "o_zone_id", "d_zone_id", "flow", "travel_time"],
        loaded
            .paths
            .paths()
            .iter()
            .enumerate()
            .filter(|_| tracks_paths)
            .map(|(p, path)| {
                let pair = &net.od_pairs()[path.od_index];
                vec![
                    path.path_id.to_string(),
                    pair.origin.to_string(),
                    pair.destination.to_string(),
                    num(result.flows.path[p]),
                    num(result.times.path[p]),
                ]
            }),
    )?;

    let od_times = if tracks_paths {
        od_time_flow_weighted(&result.flows.path, &result.times.path, &result.flows.od, &loaded.incidence)?
    } else {
        net.od_pairs()
            .iter()
            .map(|pair| {
                let tree = shortest_path(net, &result.times.link, pair.origin)?;
                Ok(tree.label(net, pair.destination).unwrap_or(f64::INFINITY))
            })
            .collect::<Result<Vec<_>>>()?
    };
    out.csv(
        "od_time.csv",
        &["o_zone_id", "d_zone_id", "demand", "avg_time"],
        net.od_pairs().iter().zip(&od_times).map(|(pair, &t)| {
            vec![pair.origin.to_string(), pair.destination.to_string(), num(pair.demand), num(t)]
        }),
    )?;

    out.csv(
        "convergence.csv",
        &["iteration", "gap", "objective"],
        result
            .gap_history
            .iter()
            .zip(&result.objective_history)
            .enumerate()
            .map(|(k, (&g, &z))| vec![k.to_string(), num(g), num(z)]),
    )?;

    println!(
        "converged={} iterations={} gap={} total_time={}",
        result.converged,
        result.iterations,
        num(result.final_gap()),
        num(result.total_system_time())
    );
    Ok(())
}

/// Sensitivity at the gradient-projection solution, holding the realized
/// path choice proportions fixed.
pub fn sensitivity(config: &ScenarioConfig, out: &mut RunOutput) -> Result<()> {
    let loaded = load(config)?;
    if config.solver.method == Method::Fw {
        log::info!("sensitivity needs path flows; solving with gradient projection");
    }
    let result = solve(&loaded, config, Method::Gp)?;
    let net = &loaded.network;
    let choice = loaded.incidence.proportional_choice(&result.flows.path)?;
    let incidence = loaded.incidence.with_choice(choice)?;
    let jacobian = link_time_jacobian(&result.flows.link, &net.performance())?;
    let matrix = od_sensitivity(&incidence, &jacobian)?;

    let labels: Vec<String> = (0..net.od_pairs().len()).map(|od| od_label(net, od)).collect();
    let mut header = vec!["od"];
    header.extend(labels.iter().map(String::as_str));
    out.csv(
        "od_sensitivity.csv",
        &header,
        labels.iter().enumerate().map(|(i, label)| {
            std::iter::once(label.clone())
                .chain((0..labels.len()).map(|j| num(matrix[(i, j)])))
                .collect()
        }),
    )?;
    println!("od_pairs={} converged={}", labels.len(), result.converged);
    Ok(())
}
