//! Seeded random instances shared by the integration tests.

#![allow(dead_code)]

use std::collections::BTreeSet;

use ftt_core::network::{enumerate_simple_paths, Link, Node, OdPair, SparseBinaryMatrix, SparseMatrix};
use ftt_core::{IncidenceSet, LinkPerformance, Network, PathSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Layered network with competing routes: origins 1 and 2 each reach both
/// nodes of the first middle layer (3, 4), which connect fully to the second
/// (5, 6), which both feed the destination 7. Each OD has four paths and the
/// two ODs share every link past the first layer.
pub fn assignment_instance(seed: u64) -> (Network, PathSet, IncidenceSet) {
    let mut rng = rng(seed);
    let pairs = [(1, 3), (1, 4), (2, 3), (2, 4), (3, 5), (3, 6), (4, 5), (4, 6), (5, 7), (6, 7)];
    let links = pairs
        .iter()
        .enumerate()
        .map(|(k, &(a, b))| Link {
            link_id: k as u64 + 1,
            from_node: a,
            to_node: b,
            free_flow_time: rng.random_range(0.5..1.5),
            capacity: rng.random_range(1.0..3.0),
            bpr_alpha: rng.random_range(0.1..0.3),
            bpr_beta: rng.random_range(1.5..4.0),
        })
        .collect();
    let ods = vec![
        OdPair {
            origin: 1,
            destination: 7,
            demand: rng.random_range(1.0..3.0),
        },
        OdPair {
            origin: 2,
            destination: 7,
            demand: rng.random_range(1.0..3.0),
        },
    ];
    let network = Network::new((1..=7).map(Node::new).collect(), links, ods).unwrap();
    let mut sequences = Vec::new();
    for (i, od) in network.od_pairs().iter().enumerate() {
        for path in enumerate_simple_paths(&network, od.origin, od.destination).unwrap() {
            sequences.push((i, path));
        }
    }
    let paths = PathSet::from_sequences(network.od_pairs().len(), sequences).unwrap();
    let incidence = IncidenceSet::uniform(&paths, network.n_links()).unwrap();
    (network, paths, incidence)
}

/// Abstract layered instance without node geometry: up to 5 ODs, 10 paths
/// and 12 links, random positive choice probabilities, BPR links with
/// `α ∈ [0.1, 0.3]`, `β ∈ [1, 4]`, and demand near capacity.
pub struct ChainInstance {
    pub incidence: IncidenceSet,
    pub performance: LinkPerformance,
    pub demand: Vec<f64>,
}

pub fn chain_instance(seed: u64) -> ChainInstance {
    let mut rng = rng(seed);
    let n_links = rng.random_range(3..=12usize);
    let n_od = rng.random_range(1..=5usize);
    let mut per_od = vec![1usize; n_od];
    let extra = rng.random_range(0..=(10 - n_od));
    for _ in 0..extra {
        per_od[rng.random_range(0..n_od)] += 1;
    }

    let mut sequences = Vec::new();
    for (od, &count) in per_od.iter().enumerate() {
        for _ in 0..count {
            let len = rng.random_range(1..=n_links.min(4));
            let mut links = BTreeSet::new();
            while links.len() < len {
                links.insert(rng.random_range(0..n_links));
            }
            sequences.push((od, links.into_iter().collect::<Vec<_>>()));
        }
    }
    let positions: Vec<(usize, usize)> = sequences
        .iter()
        .enumerate()
        .flat_map(|(p, (_, links))| links.iter().map(move |&l| (p, l)))
        .collect();
    let a = SparseBinaryMatrix::from_positions(sequences.len(), n_links, &positions).unwrap();

    let mut triplets = Vec::new();
    let mut support = Vec::new();
    let mut start = 0;
    for (od, &count) in per_od.iter().enumerate() {
        let weights: Vec<f64> = (0..count).map(|_| rng.random_range(0.2..1.0)).collect();
        let total: f64 = weights.iter().sum();
        for (k, w) in weights.iter().enumerate() {
            triplets.push((od, start + k, w / total));
            support.push((od, start + k));
        }
        start += count;
    }
    let b = SparseMatrix::from_triplets(n_od, sequences.len(), &triplets).unwrap();
    let indicator = SparseBinaryMatrix::from_positions(n_od, sequences.len(), &support).unwrap();
    let incidence = IncidenceSet::new(a, b, indicator).unwrap();

    let fft: Vec<f64> = (0..n_links).map(|_| rng.random_range(1.0..10.0)).collect();
    let cap: Vec<f64> = (0..n_links).map(|_| rng.random_range(50.0..200.0)).collect();
    let alpha: Vec<f64> = (0..n_links).map(|_| rng.random_range(0.1..0.3)).collect();
    let beta: Vec<f64> = (0..n_links).map(|_| rng.random_range(1.0..4.0)).collect();
    let performance = LinkPerformance::bpr(&fft, &cap, &alpha, &beta).unwrap();
    let demand = (0..n_od).map(|_| rng.random_range(20.0..200.0)).collect();
    ChainInstance {
        incidence,
        performance,
        demand,
    }
}
