//! `rotate`: rotation outcomes on the Pigou network.

use std::path::Path;

use anyhow::{bail, Context, Result};
use ftt_core::rotation::{evaluate_rotation, evaluate_schedule, RotationOutcome, RotationSchedule};

use crate::config::{parse_grid, ScenarioConfig};
use crate::output::{num, RunOutput};

/// Reads `group,share,day_1,...,day_D` rows, one per group. Day cells are 1
/// for the system-optimal assignment and 0 for the equilibrium one.
fn read_schedule(path: &Path) -> Result<RotationSchedule> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("opening schedule {}", path.display()))?;
    let mut matrix = Vec::new();
    let mut shares = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() < 3 {
            bail!("schedule row {}: expected group, share and at least one day", row + 1);
        }
        let share: f64 = record[1]
            .trim()
            .parse()
            .with_context(|| format!("schedule row {}: bad share {:?}", row + 1, &record[1]))?;
        let days = record
            .iter()
            .skip(2)
            .map(|cell| {
                cell.trim()
                    .parse::<u8>()
                    .with_context(|| format!("schedule row {}: bad day cell {cell:?}", row + 1))
            })
            .collect::<Result<Vec<_>>>()?;
        shares.push(share);
        matrix.push(days);
    }
    Ok(RotationSchedule::new(matrix, shares)?)
}

pub fn rotate(config: &ScenarioConfig, out: &mut RunOutput) -> Result<()> {
    let settings = &config.rotation;
    let betas = parse_grid(&settings.beta_grid)?;
    let outcomes: Vec<RotationOutcome> = match &settings.schedule {
        Some(path) => {
            let schedule = read_schedule(path)?;
            log::info!("evaluating schedule {}; the p grid is not used", path.display());
            betas
                .iter()
                .map(|&beta| evaluate_schedule(&schedule, beta))
                .collect::<Result<_, _>>()?
        }
        None => {
            let ps = parse_grid(&settings.p_grid)?;
            betas
                .iter()
                .flat_map(|&beta| ps.iter().map(move |&p| evaluate_rotation(p, beta)))
                .collect::<Result<_, _>>()?
        }
    };

    out.csv(
        "rotation_outcome.csv",
        &["p", "beta", "t_part", "t_nonpart", "system_cost", "delta", "delta_approx", "poa"],
        outcomes.iter().map(|o| {
            [o.p, o.beta, o.t_part, o.t_nonpart, o.system_cost, o.delta, o.delta_approx, o.poa]
                .into_iter()
                .map(num)
                .collect()
        }),
    )?;
    out.csv(
        "rotation_cube.csv",
        &["p", "beta", "day", "group", "route", "route_flow", "travel_time"],
        outcomes.iter().flat_map(|o| {
            o.cube.iter().enumerate().flat_map(move |(day, groups)| {
                groups.iter().enumerate().map(move |(group, cell)| {
                    vec![
                        num(o.p),
                        num(o.beta),
                        (day + 1).to_string(),
                        (group + 1).to_string(),
                        cell.route.label().to_string(),
                        num(cell.route_flow),
                        num(cell.travel_time),
                    ]
                })
            })
        }),
    )?;
    println!("rows={}", outcomes.len());
    Ok(())
}
