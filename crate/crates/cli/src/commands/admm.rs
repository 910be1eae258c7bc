//! `admm`: passenger/vehicle capacity coordination.

use std::fs;

use anyhow::{bail, Context, Result};
use ftt_core::admm::{solve_admm, AdmmConfig, PassengerVehicleInstance};

use crate::config::ScenarioConfig;
use crate::output::{num, RunOutput};

pub fn admm(config: &ScenarioConfig, out: &mut RunOutput) -> Result<()> {
    let settings = &config.admm;
    let Some(path) = &settings.instance else {
        bail!("no instance given: pass --instance FILE");
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading instance {}", path.display()))?;
    let instance: PassengerVehicleInstance =
        serde_json::from_str(&text).with_context(|| format!("parsing instance {}", path.display()))?;
    let problem = instance.build()?;
    let admm_config = AdmmConfig {
        rho: settings.rho,
        tol_primal: settings.tol,
        tol_dual: settings.tol,
        max_iterations: settings.max_iterations,
        adaptive_rho: settings.adaptive_rho,
    };
    let result = solve_admm(&problem.passenger, &problem.vehicle, &problem.coupling, &admm_config)?;
    if !result.converged {
        log::warn!("ADMM stopped after {} iterations without meeting the tolerance", result.iterations());
    }

    out.csv(
        "admm_trace.csv",
        &["iteration", "primal_res", "dual_res", "obj1", "obj2"],
        result.trace.iter().map(|r| {
            vec![
                r.iteration.to_string(),
                num(r.primal_residual),
                num(r.dual_residual),
                num(r.objective1),
                num(r.objective2),
            ]
        }),
    )?;

    let state = &result.state;
    let blocks = [
        ("passenger_path_flow", Some(&state.x)),
        ("vehicle_link_flow", Some(&state.z)),
        ("multiplier", Some(&state.lambda)),
        ("slack", state.slack.as_ref()),
    ];
    out.csv(
        "admm_solution.csv",
        &["block", "index", "value"],
        blocks.into_iter().flat_map(|(name, values)| {
            values.into_iter().flatten().enumerate().map(move |(i, &v)| vec![name.to_string(), i.to_string(), num(v)])
        }),
    )?;
    println!(
        "converged={} iterations={} vehicle_flow={}",
        result.converged,
        result.iterations(),
        state.z.iter().map(|&v| num(v)).collect::<Vec<_>>().join(",")
    );
    Ok(())
}
