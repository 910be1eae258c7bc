//! Deterministic workloads for the benchmarks.

use ftt_core::network::{generate_paths, Link, Node, OdPair};
use ftt_core::tensor::NamedTensor;
use ftt_core::{IncidenceSet, Network};

/// An `n × n` grid with links in both directions between neighbours and
/// demand from every corner to the opposite corner.
pub fn grid_network(n: usize) -> Network {
    assert!(n >= 2, "grid needs at least 2×2 nodes");
    let id = |r: usize, c: usize| (r * n + c + 1) as u64;
    let mut links = Vec::new();
    for r in 0..n {
        for c in 0..n {
            let mut neighbours = Vec::new();
            if c + 1 < n {
                neighbours.push(id(r, c + 1));
            }
            if r + 1 < n {
                neighbours.push(id(r + 1, c));
            }
            for to in neighbours {
                for (a, b) in [(id(r, c), to), (to, id(r, c))] {
                    let k = links.len() as u64;
                    links.push(Link {
                        link_id: k + 1,
                        from_node: a,
                        to_node: b,
                        free_flow_time: 1.0 + (k % 5) as f64 * 0.25,
                        capacity: 10.0 + (k % 7) as f64,
                        bpr_alpha: 0.15,
                        bpr_beta: 4.0,
                    });
                }
            }
        }
    }
    let corners = [id(0, 0), id(0, n - 1), id(n - 1, 0), id(n - 1, n - 1)];
    let ods = (0..4)
        .map(|i| OdPair {
            origin: corners[i],
            destination: corners[3 - i],
            demand: 20.0,
        })
        .collect();
    Network::new((1..=(n * n) as u64).map(Node::new).collect(), links, ods).expect("grid is valid")
}

/// Grid network with a column-generated path set and uniform choice.
pub fn grid_problem(n: usize, rounds: usize) -> (Network, IncidenceSet) {
    let network = grid_network(n);
    let paths = generate_paths(&network, rounds).expect("paths exist");
    let incidence = IncidenceSet::uniform(&paths, network.n_links()).expect("incidence builds");
    (network, incidence)
}

/// A smooth tensor of the given shape with named axes `m0, m1, ...`.
pub fn smooth_tensor(shape: &[usize]) -> NamedTensor {
    let len: usize = shape.iter().product();
    let data = (0..len)
        .map(|i| {
            let mut rest = i;
            let mut v = 0.0;
            for (mode, &extent) in shape.iter().enumerate().rev() {
                let k = (rest % extent) as f64;
                rest /= extent;
                v += ((mode + 1) as f64 * 0.37 * k).sin();
            }
            v
        })
        .collect();
    let names = (0..shape.len()).map(|m| format!("m{m}")).collect();
    NamedTensor::new(names, shape.to_vec(), data).expect("shape matches data")
}
