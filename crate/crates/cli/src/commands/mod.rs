//! Subcommand implementations.

mod admm;
mod assign;
mod decompose;
mod example;
mod rotate;

use anyhow::{bail, Result};

use crate::config::ScenarioConfig;
use crate::output::RunOutput;

pub fn run(name: &str, config: &ScenarioConfig) -> Result<()> {
    let mut out = RunOutput::create(&config.out_dir())?;
    match name {
        "validate" => assign::validate(config, &mut out)?,
        "assign" => assign::assign(config, &mut out)?,
        "sensitivity" => assign::sensitivity(config, &mut out)?,
        "rotate" => rotate::rotate(config, &mut out)?,
        "admm" => admm::admm(config, &mut out)?,
        "decompose" => decompose::decompose(config, &mut out)?,
        "example" => example::example(&mut out)?,
        other => bail!("unknown subcommand {other}"),
    }
    out.finish(name, config)
}

/// Short machine-readable category for an error chain.
pub fn error_kind(err: &anyhow::Error) -> &'static str {
    use ftt_core::{adjoint, admm, network, propagate, rotation, solvers, tensor};
    for cause in err.chain() {
        if cause.is::<network::NetworkError>() {
            return "network";
        }
        if cause.is::<propagate::PropagateError>() {
            return "propagate";
        }
        if cause.is::<adjoint::AdjointError>() {
            return "adjoint";
        }
        if cause.is::<solvers::SolverError>() {
            return "solver";
        }
        if cause.is::<rotation::RotationError>() {
            return "rotation";
        }
        if cause.is::<admm::AdmmError>() {
            return "admm";
        }
        if cause.is::<tensor::TensorError>() {
            return "tensor";
        }
        if cause.is::<std::io::Error>() {
            return "io";
        }
        if cause.is::<serde_json::Error>() || cause.is::<csv::Error>() {
            return "parse";
        }
    }
    "config"
}
