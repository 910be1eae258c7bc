//! Path sets: static seeding by repeated shortest-path rounds, exhaustive
//! enumeration for small networks, and the node-balance check.

use std::collections::BTreeMap;

use super::{shortest_path, Network, NetworkError, NodeId};
use crate::propagate::LinkPerformance;

#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub path_id: usize,
    pub od_index: usize,
    /// Link positions in traversal order.
    pub link_sequence: Vec<usize>,
}

/// Ordered paths grouped by OD pair. `path_id` equals the position in the set.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    paths: Vec<Path>,
    od_paths: Vec<Vec<usize>>,
}

impl PathSet {
    /// Builds a set from `(od_index, link_sequence)` pairs, keeping their order.
    pub fn from_sequences(
        n_od: usize,
        sequences: Vec<(usize, Vec<usize>)>,
    ) -> Result<Self, NetworkError> {
        let mut od_paths = vec![Vec::new(); n_od];
        let mut paths = Vec::with_capacity(sequences.len());
        for (path_id, (od_index, link_sequence)) in sequences.into_iter().enumerate() {
            if od_index >= n_od {
                return Err(NetworkError::InvalidPath {
                    path: path_id,
                    reason: format!("OD index {od_index} out of range ({n_od} pairs)"),
                });
            }
            let mut sorted = link_sequence.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(NetworkError::InvalidPath {
                    path: path_id,
                    reason: "repeated link".into(),
                });
            }
            od_paths[od_index].push(path_id);
            paths.push(Path {
                path_id,
                od_index,
                link_sequence,
            });
        }
        Ok(Self { paths, od_paths })
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn n_od(&self) -> usize {
        self.od_paths.len()
    }

    /// Path ids serving OD `od`.
    pub fn paths_for_od(&self, od: usize) -> &[usize] {
        &self.od_paths[od]
    }

    /// Checks that every path is a connected walk from its OD origin to its
    /// destination in `network`.
    pub fn validate_walks(&self, network: &Network) -> Result<(), NetworkError> {
        let links = network.links();
        for path in &self.paths {
            let od = network
                .od_pairs()
                .get(path.od_index)
                .ok_or_else(|| NetworkError::InvalidPath {
                    path: path.path_id,
                    reason: "OD index not in network".into(),
                })?;
            let mut at = od.origin;
            for &l in &path.link_sequence {
                let link = links.get(l).ok_or_else(|| NetworkError::InvalidPath {
                    path: path.path_id,
                    reason: format!("link position {l} not in network"),
                })?;
                if link.from_node != at {
                    return Err(NetworkError::InvalidPath {
                        path: path.path_id,
                        reason: format!("link {} does not start at node {at}", link.link_id),
                    });
                }
                at = link.to_node;
            }
            if at != od.destination {
                return Err(NetworkError::InvalidPath {
                    path: path.path_id,
                    reason: format!("walk ends at node {at}, not {}", od.destination),
                });
            }
        }
        Ok(())
    }
}

/// [`generate_paths_with`] using the network's own BPR functions.
pub fn generate_paths(network: &Network, rounds: usize) -> Result<PathSet, NetworkError> {
    generate_paths_with(network, &network.performance(), rounds)
}

/// Static path seeding.
///
/// Round 1 routes every OD pair on its shortest path at zero flow. Each later
/// round loads demand with a uniform split over the paths found so far,
/// evaluates link times, and appends any new shortest path.
pub fn generate_paths_with(
    network: &Network,
    performance: &LinkPerformance,
    rounds: usize,
) -> Result<PathSet, NetworkError> {
    if rounds == 0 {
        return Err(NetworkError::InvalidRounds);
    }
    if performance.len() != network.n_links() {
        return Err(NetworkError::DimensionMismatch {
            what: "link performance",
            expected: network.n_links(),
            found: performance.len(),
        });
    }
    let ods = network.od_pairs();
    let mut by_origin: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
    for (i, od) in ods.iter().enumerate() {
        by_origin.entry(od.origin).or_default().push(i);
    }

    let mut found: Vec<Vec<Vec<usize>>> = vec![Vec::new(); ods.len()];
    for round in 0..rounds {
        let mut flows = vec![0.0; network.n_links()];
        if round > 0 {
            for (od, paths) in ods.iter().zip(&found) {
                if paths.is_empty() {
                    continue;
                }
                let share = od.demand / paths.len() as f64;
                for path in paths {
                    for &l in path {
                        flows[l] += share;
                    }
                }
            }
        }
        let costs = performance.times(&flows);

        for (&origin, members) in &by_origin {
            let tree = shortest_path(network, &costs, origin)?;
            for &i in members {
                let od = &ods[i];
                match tree.path_to(network, od.destination) {
                    Some(path) => {
                        if !found[i].contains(&path) {
                            found[i].push(path);
                        }
                    }
                    None if od.demand > 0.0 => {
                        return Err(NetworkError::DisconnectedOd {
                            origin: od.origin,
                            destination: od.destination,
                        })
                    }
                    None => {}
                }
            }
        }
    }

    let sequences = found
        .into_iter()
        .enumerate()
        .flat_map(|(od, paths)| paths.into_iter().map(move |p| (od, p)))
        .collect();
    PathSet::from_sequences(ods.len(), sequences)
}

/// Every node-simple path from `origin` to `destination` as link positions,
/// in depth-first order over ascending link ids. Exponential; meant for
/// small networks and test oracles.
pub fn enumerate_simple_paths(
    network: &Network,
    origin: NodeId,
    destination: NodeId,
) -> Result<Vec<Vec<usize>>, NetworkError> {
    let start = network
        .node_position(origin)
        .ok_or(NetworkError::UnknownNode(origin))?;
    let goal = network
        .node_position(destination)
        .ok_or(NetworkError::UnknownNode(destination))?;

    fn visit(
        network: &Network,
        at: usize,
        goal: usize,
        on_path: &mut Vec<bool>,
        stack: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if at == goal {
            out.push(stack.clone());
            return;
        }
        for &l in network.out_links(at) {
            let head = network
                .node_position(network.links()[l].to_node)
                .expect("validated link endpoints");
            if on_path[head] {
                continue;
            }
            on_path[head] = true;
            stack.push(l);
            visit(network, head, goal, on_path, stack, out);
            stack.pop();
            on_path[head] = false;
        }
    }

    let mut on_path = vec![false; network.nodes().len()];
    on_path[start] = true;
    let mut out = Vec::new();
    visit(network, start, goal, &mut on_path, &mut Vec::new(), &mut out);
    Ok(out)
}

/// Per-OD node divergence (outflow minus inflow) of the link flows induced
/// by `path_flows`. Rows follow OD order, columns node order.
///
/// For a valid path set each row equals `+f_od` at the origin, `-f_od` at
/// the destination and zero elsewhere, where `f_od` is the OD's total path flow.
pub fn od_divergence(
    network: &Network,
    path_set: &PathSet,
    path_flows: &[f64],
) -> Result<Vec<Vec<f64>>, NetworkError> {
    if path_flows.len() != path_set.len() {
        return Err(NetworkError::DimensionMismatch {
            what: "path flows",
            expected: path_set.len(),
            found: path_flows.len(),
        });
    }
    let n_nodes = network.nodes().len();
    let mut divergence = vec![vec![0.0; n_nodes]; path_set.n_od()];
    for (od, row) in divergence.iter_mut().enumerate() {
        let mut link_flow = vec![0.0; network.n_links()];
        for &p in path_set.paths_for_od(od) {
            for &l in &path_set.paths()[p].link_sequence {
                link_flow[l] += path_flows[p];
            }
        }
        for (l, link) in network.links().iter().enumerate() {
            let from = network.node_position(link.from_node).expect("validated");
            let to = network.node_position(link.to_node).expect("validated");
            row[from] += link_flow[l];
            row[to] -= link_flow[l];
        }
    }
    Ok(divergence)
}
