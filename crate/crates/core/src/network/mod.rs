//! Network data model: nodes, links with volume-delay parameters, OD demand,
//! path sets and the incidence/choice matrices that connect the layers.
//!
//! Links are addressed by their position in [`Network::links`] (ascending
//! `link_id`). Every matrix and vector over links uses that position, never
//! the raw identifier.

mod gmns;
mod incidence;
mod paths;
mod shortest_path;
mod sparse;

use std::collections::HashMap;
use std::path::PathBuf;

use thiserror::Error;

use crate::propagate::{LinkPerformance, VolumeDelay};

pub use gmns::load_gmns;
pub use incidence::{build_choice_matrix, build_incidence, IncidenceSet};
pub use paths::{enumerate_simple_paths, generate_paths, generate_paths_with, od_divergence, Path, PathSet};
pub use shortest_path::{shortest_path, ShortestPathTree};
pub use sparse::{SparseBinaryMatrix, SparseMatrix};

pub type NodeId = u64;
pub type LinkId = u64;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{file}: malformed CSV: {source}")]
    Csv { file: String, source: csv::Error },
    #[error("{file}: missing column `{column}`")]
    MissingColumn { file: String, column: String },
    #[error("{file} row {row}: cannot parse `{column}` value `{value}`")]
    Parse {
        file: String,
        row: usize,
        column: String,
        value: String,
    },
    #[error("{file} row {row}: node {node} does not exist")]
    DanglingNodeReference { file: String, row: usize, node: NodeId },
    #[error("link row {row} (link {link_id}): capacity {value} must be positive")]
    NonPositiveCapacity { row: usize, link_id: LinkId, value: f64 },
    #[error("link row {row} (link {link_id}): free-flow time {value} must be positive")]
    NonPositiveFreeFlowTime { row: usize, link_id: LinkId, value: f64 },
    #[error("link row {row} (link {link_id}): invalid {name} = {value}")]
    InvalidBprParameter {
        row: usize,
        link_id: LinkId,
        name: &'static str,
        value: f64,
    },
    #[error("link row {row} (link {link_id}): self-loop on node {node}")]
    SelfLoop { row: usize, link_id: LinkId, node: NodeId },
    #[error("node row {row}: duplicate node id {node}")]
    DuplicateNode { row: usize, node: NodeId },
    #[error("link row {row}: duplicate link id {link_id}")]
    DuplicateLink { row: usize, link_id: LinkId },
    #[error("demand row {row}: duplicate OD pair ({origin}, {destination})")]
    DuplicateOd {
        row: usize,
        origin: NodeId,
        destination: NodeId,
    },
    #[error("demand row {row}: demand {value} must be finite and non-negative")]
    NegativeDemand { row: usize, value: f64 },
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("link index {link}: cost {value} must be finite and non-negative")]
    NegativeCost { link: usize, value: f64 },
    #[error("{what}: expected length {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("no path from {origin} to {destination} for a positive-demand OD pair")]
    DisconnectedOd { origin: NodeId, destination: NodeId },
    #[error("path generation needs at least one round")]
    InvalidRounds,
    #[error("entry ({row}, {col}) outside a {n_rows}x{n_cols} matrix")]
    IndexOutOfBounds {
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },
    #[error("entry ({row}, {col}) is not finite")]
    NonFiniteEntry { row: usize, col: usize },
    #[error("duplicate entry ({row}, {col})")]
    DuplicateEntry { row: usize, col: usize },
    #[error("entry ({row}, {col}) of a binary matrix is not 1")]
    NonBinaryEntry { row: usize, col: usize },
    #[error("choice probabilities of OD {od} sum to {sum}, not 1")]
    RowSumViolation { od: usize, sum: f64 },
    #[error("path {path}: probability {value} must be finite and non-negative")]
    NegativeProbability { path: usize, value: f64 },
    #[error("path {path}: {reason}")]
    InvalidPath { path: usize, reason: String },
    #[error("inconsistent incidence set: {0}")]
    InconsistentIncidence(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub node_id: NodeId,
    pub coordinates: Option<(f64, f64)>,
}

impl Node {
    pub fn new(node_id: NodeId) -> Self {
        Self {
            node_id,
            coordinates: None,
        }
    }
}

/// Directed link with BPR parameters `t0 (1 + alpha (f/C)^beta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub link_id: LinkId,
    pub from_node: NodeId,
    pub to_node: NodeId,
    /// Minutes.
    pub free_flow_time: f64,
    /// Vehicles per period.
    pub capacity: f64,
    pub bpr_alpha: f64,
    pub bpr_beta: f64,
}

impl Link {
    pub fn volume_delay(&self) -> VolumeDelay {
        VolumeDelay::Bpr {
            free_flow_time: self.free_flow_time,
            capacity: self.capacity,
            alpha: self.bpr_alpha,
            beta: self.bpr_beta,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdPair {
    pub origin: NodeId,
    pub destination: NodeId,
    /// Trips per period.
    pub demand: f64,
}

/// Validated network. Nodes, links and OD pairs are sorted by id.
#[derive(Debug, Clone)]
pub struct Network {
    nodes: Vec<Node>,
    links: Vec<Link>,
    od_pairs: Vec<OdPair>,
    node_index: HashMap<NodeId, usize>,
    /// Outgoing link positions per node position, ascending by link id.
    out_links: Vec<Vec<usize>>,
}

impl Network {
    /// Validates and sorts the inputs. Error rows are 1-based positions in
    /// the supplied vectors, which match data rows when loading CSV files.
    pub fn new(
        nodes: Vec<Node>,
        links: Vec<Link>,
        od_pairs: Vec<OdPair>,
    ) -> Result<Self, NetworkError> {
        let mut node_index = HashMap::with_capacity(nodes.len());
        for (i, node) in nodes.iter().enumerate() {
            if node_index.insert(node.node_id, i).is_some() {
                return Err(NetworkError::DuplicateNode {
                    row: i + 1,
                    node: node.node_id,
                });
            }
        }

        let mut seen_links = HashMap::with_capacity(links.len());
        for (i, link) in links.iter().enumerate() {
            let row = i + 1;
            if seen_links.insert(link.link_id, i).is_some() {
                return Err(NetworkError::DuplicateLink {
                    row,
                    link_id: link.link_id,
                });
            }
            for node in [link.from_node, link.to_node] {
                if !node_index.contains_key(&node) {
                    return Err(NetworkError::DanglingNodeReference {
                        file: "link.csv".into(),
                        row,
                        node,
                    });
                }
            }
            validate_link(row, link)?;
        }

        let mut seen_od = HashMap::with_capacity(od_pairs.len());
        for (i, od) in od_pairs.iter().enumerate() {
            let row = i + 1;
            for node in [od.origin, od.destination] {
                if !node_index.contains_key(&node) {
                    return Err(NetworkError::DanglingNodeReference {
                        file: "demand.csv".into(),
                        row,
                        node,
                    });
                }
            }
            if !(od.demand.is_finite() && od.demand >= 0.0) {
                return Err(NetworkError::NegativeDemand {
                    row,
                    value: od.demand,
                });
            }
            if seen_od.insert((od.origin, od.destination), i).is_some() {
                return Err(NetworkError::DuplicateOd {
                    row,
                    origin: od.origin,
                    destination: od.destination,
                });
            }
        }

        let mut nodes = nodes;
        let mut links = links;
        let mut od_pairs = od_pairs;
        nodes.sort_by_key(|n| n.node_id);
        links.sort_by_key(|l| l.link_id);
        od_pairs.sort_by_key(|od| (od.origin, od.destination));

        let node_index: HashMap<NodeId, usize> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.node_id, i))
            .collect();
        let mut out_links = vec![Vec::new(); nodes.len()];
        for (pos, link) in links.iter().enumerate() {
            out_links[node_index[&link.from_node]].push(pos);
        }

        Ok(Self {
            nodes,
            links,
            od_pairs,
            node_index,
            out_links,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn od_pairs(&self) -> &[OdPair] {
        &self.od_pairs
    }

    pub fn n_links(&self) -> usize {
        self.links.len()
    }

    pub fn demand_vector(&self) -> Vec<f64> {
        self.od_pairs.iter().map(|od| od.demand).collect()
    }

    /// Position of a node id in [`Network::nodes`].
    pub fn node_position(&self, node: NodeId) -> Option<usize> {
        self.node_index.get(&node).copied()
    }

    /// Position of a link id in [`Network::links`].
    pub fn link_position(&self, link_id: LinkId) -> Option<usize> {
        self.links.binary_search_by_key(&link_id, |l| l.link_id).ok()
    }

    pub(crate) fn out_links(&self, node_pos: usize) -> &[usize] {
        &self.out_links[node_pos]
    }

    /// BPR performance functions of every link, in link order.
    pub fn performance(&self) -> LinkPerformance {
        LinkPerformance::new(self.links.iter().map(Link::volume_delay).collect())
            .expect("links are validated on construction")
    }

    /// Free-flow link times.
    pub fn free_flow_times(&self) -> Vec<f64> {
        self.links.iter().map(|l| l.free_flow_time).collect()
    }
}

fn validate_link(row: usize, link: &Link) -> Result<(), NetworkError> {
    let link_id = link.link_id;
    if link.from_node == link.to_node {
        return Err(NetworkError::SelfLoop {
            row,
            link_id,
            node: link.from_node,
        });
    }
    if !(link.capacity.is_finite() && link.capacity > 0.0) {
        return Err(NetworkError::NonPositiveCapacity {
            row,
            link_id,
            value: link.capacity,
        });
    }
    if !(link.free_flow_time.is_finite() && link.free_flow_time > 0.0) {
        return Err(NetworkError::NonPositiveFreeFlowTime {
            row,
            link_id,
            value: link.free_flow_time,
        });
    }
    if !(link.bpr_alpha.is_finite() && link.bpr_alpha >= 0.0) {
        return Err(NetworkError::InvalidBprParameter {
            row,
            link_id,
            name: "bpr_alpha",
            value: link.bpr_alpha,
        });
    }
    if !(link.bpr_beta.is_finite() && link.bpr_beta >= 1.0) {
        return Err(NetworkError::InvalidBprParameter {
            row,
            link_id,
            name: "bpr_beta",
            value: link.bpr_beta,
        });
    }
    Ok(())
}
