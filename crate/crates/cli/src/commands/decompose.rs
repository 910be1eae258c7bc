//! `decompose`: CP or Tucker decomposition of a tensor file.

use std::fs;

use anyhow::{bail, Context, Result};
use ftt_core::tensor::{cp_als, fit, tucker_hosvd, tucker_reconstruct, CpConfig, NamedTensor};
use nalgebra::DMatrix;

use crate::config::{DecomposeMethod, ScenarioConfig};
use crate::output::{num, RunOutput};

fn write_factor(out: &mut RunOutput, mode: usize, axis: &str, factor: &DMatrix<f64>) -> Result<()> {
    let columns: Vec<String> = (1..=factor.ncols()).map(|r| format!("component_{r}")).collect();
    let mut header = vec![axis];
    header.extend(columns.iter().map(String::as_str));
    out.csv(
        &format!("factors_{mode}.csv"),
        &header,
        factor.row_iter().enumerate().map(|(i, row)| {
            std::iter::once(i.to_string()).chain(row.iter().map(|&v| num(v))).collect()
        }),
    )
}

pub fn decompose(config: &ScenarioConfig, out: &mut RunOutput) -> Result<()> {
    let settings = &config.decompose;
    let Some(path) = &settings.input else {
        bail!("no tensor given: pass --input FILE");
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading tensor {}", path.display()))?;
    let tensor: NamedTensor =
        serde_json::from_str(&text).with_context(|| format!("parsing tensor {}", path.display()))?;

    match settings.method {
        DecomposeMethod::Cp => {
            let [rank] = settings.rank[..] else {
                bail!("CP needs a single rank, got {:?}", settings.rank);
            };
            let model = cp_als(
                &tensor,
                &CpConfig {
                    rank,
                    tolerance: settings.tolerance,
                    max_sweeps: settings.max_sweeps,
                    seed: config.seed(),
                },
            )?;
            if !model.converged {
                log::warn!("CP-ALS used all {} sweeps", settings.max_sweeps);
            }
            for (mode, (axis, factor)) in model.axis_names.iter().zip(&model.factors).enumerate() {
                write_factor(out, mode, axis, factor)?;
            }
            out.csv(
                "weights.csv",
                &["component", "weight"],
                model.weights.iter().enumerate().map(|(r, &w)| vec![(r + 1).to_string(), num(w)]),
            )?;
            out.csv(
                "fit_history.csv",
                &["sweep", "fit"],
                model.fit_history.iter().enumerate().map(|(k, &f)| vec![(k + 1).to_string(), num(f)]),
            )?;
            println!("method=cp rank={rank} sweeps={} fit={}", model.fit_history.len(), num(model.final_fit()));
        }
        DecomposeMethod::Tucker => {
            let ranks = if settings.rank.len() == 1 {
                tensor.shape().iter().map(|&n| settings.rank[0].min(n)).collect()
            } else {
                settings.rank.clone()
            };
            let model = tucker_hosvd(&tensor, &ranks)?;
            for (mode, (axis, factor)) in tensor.axis_names().iter().zip(&model.factors).enumerate() {
                write_factor(out, mode, axis, factor)?;
            }
            out.json("core.json", &model.core)?;
            let quality = fit(&tensor, &tucker_reconstruct(&model)?)?;
            println!("method=tucker ranks={ranks:?} fit={}", num(quality));
        }
    }
    Ok(())
}
