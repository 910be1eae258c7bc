use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{Network, NetworkError, NodeId};

/// One-to-all shortest path tree.
#[derive(Debug, Clone)]
pub struct ShortestPathTree {
    pub origin: NodeId,
    /// Cost label per node position; `f64::INFINITY` when unreachable.
    pub labels: Vec<f64>,
    /// Link position entering each node on its tree path.
    pub predecessor: Vec<Option<usize>>,
}

impl ShortestPathTree {
    pub fn label(&self, network: &Network, node: NodeId) -> Option<f64> {
        network.node_position(node).map(|p| self.labels[p])
    }

    /// Link positions from the origin to `destination`, or `None` if unreachable.
    pub fn path_to(&self, network: &Network, destination: NodeId) -> Option<Vec<usize>> {
        let mut pos = network.node_position(destination)?;
        if !self.labels[pos].is_finite() {
            return None;
        }
        let mut links = Vec::new();
        while let Some(link) = self.predecessor[pos] {
            links.push(link);
            pos = network
                .node_position(network.links()[link].from_node)
                .expect("validated link endpoints");
        }
        links.reverse();
        Some(links)
    }
}

#[derive(PartialEq)]
struct Entry {
    cost: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on cost, then node position
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra from `origin` under `link_costs` (indexed by link position).
///
/// Among equal-cost predecessors the link with the smallest `link_id` wins.
pub fn shortest_path(
    network: &Network,
    link_costs: &[f64],
    origin: NodeId,
) -> Result<ShortestPathTree, NetworkError> {
    if link_costs.len() != network.n_links() {
        return Err(NetworkError::DimensionMismatch {
            what: "link costs",
            expected: network.n_links(),
            found: link_costs.len(),
        });
    }
    if let Some((link, &value)) = link_costs
        .iter()
        .enumerate()
        .find(|(_, c)| !(c.is_finite() && **c >= 0.0))
    {
        return Err(NetworkError::NegativeCost { link, value });
    }
    let start = network
        .node_position(origin)
        .ok_or(NetworkError::UnknownNode(origin))?;

    let n = network.nodes().len();
    let mut labels = vec![f64::INFINITY; n];
    let mut predecessor: Vec<Option<usize>> = vec![None; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    labels[start] = 0.0;
    heap.push(Entry {
        cost: 0.0,
        node: start,
    });

    let links = network.links();
    while let Some(Entry { cost, node }) = heap.pop() {
        if settled[node] || cost > labels[node] {
            continue;
        }
        settled[node] = true;
        for &l in network.out_links(node) {
            let head = network
                .node_position(links[l].to_node)
                .expect("validated link endpoints");
            if settled[head] {
                continue;
            }
            let candidate = cost + link_costs[l];
            let better = candidate < labels[head]
                || (candidate == labels[head]
                    && predecessor[head].is_some_and(|p| links[l].link_id < links[p].link_id));
            if better {
                let improved = candidate < labels[head];
                labels[head] = candidate;
                predecessor[head] = Some(l);
                if improved {
                    heap.push(Entry {
                        cost: candidate,
                        node: head,
                    });
                }
            }
        }
    }

    Ok(ShortestPathTree {
        origin,
        labels,
        predecessor,
    })
}
