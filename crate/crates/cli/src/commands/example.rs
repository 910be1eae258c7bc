//! `example`: the five-path, three-link network with four OD pairs.

use anyhow::Result;
use ftt_core::network::{SparseBinaryMatrix, SparseMatrix};
use ftt_core::propagate::full_chain;
use ftt_core::{IncidenceSet, LinkPerformance, VolumeDelay};

use crate::output::{num, RunOutput};

const OD_FLOWS: [f64; 4] = [4000.0, 1000.0, 2000.0, 2000.0];
const LINK_TIMES: [f64; 3] = [15.0, 18.0, 10.0];

fn incidence() -> Result<IncidenceSet> {
    let a = SparseBinaryMatrix::from_positions(5, 3, &[(0, 0), (0, 1), (1, 0), (1, 1), (2, 1), (3, 1), (4, 2)])?;
    let b = SparseMatrix::from_triplets(4, 5, &[(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0), (3, 3, 0.3), (3, 4, 0.7)])?;
    let indicator = SparseBinaryMatrix::from_positions(4, 5, &[(0, 0), (1, 1), (2, 2), (3, 3), (3, 4)])?;
    Ok(IncidenceSet::new(a, b, indicator)?)
}

fn tuple(values: &[f64]) -> String {
    values.iter().map(|&v| num(v)).collect::<Vec<_>>().join(",")
}

pub fn example(out: &mut RunOutput) -> Result<()> {
    let incidence = incidence()?;
    let performance = LinkPerformance::new(LINK_TIMES.iter().map(|&t| VolumeDelay::constant(t)).collect())?;
    let (flows, times) = full_chain(&OD_FLOWS, &incidence, &performance)?;

    let vectors = [
        ("f_OD", &flows.od),
        ("f_P", &flows.path),
        ("f_L", &flows.link),
        ("t_L", &times.link),
        ("t_P", &times.path),
        ("t_OD", &times.od),
    ];
    for name in ["f_P", "f_L", "t_P", "t_OD"] {
        let (_, values) = vectors.iter().find(|(n, _)| *n == name).expect("known vector");
        println!("{name}=({})", tuple(values));
    }
    out.csv(
        "worked_example.csv",
        &["quantity", "index", "value"],
        vectors.iter().flat_map(|(name, values)| {
            values.iter().enumerate().map(move |(i, &v)| vec![name.to_string(), (i + 1).to_string(), num(v)])
        }),
    )
}
