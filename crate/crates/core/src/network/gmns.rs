//! GMNS-style CSV ingestion (`node.csv`, `link.csv`, `demand.csv`).
//!
//! Extra columns are ignored. Column order is free; names are matched after
//! trimming whitespace.

use std::fs::File;
use std::path::Path;

use csv::{ReaderBuilder, StringRecord, Trim};

use super::{Link, Network, NetworkError, Node, NodeId, OdPair};

struct Table {
    file: String,
    headers: StringRecord,
    records: Vec<StringRecord>,
}

impl Table {
    fn read(path: &Path) -> Result<Self, NetworkError> {
        let file = path.display().to_string();
        let handle = File::open(path).map_err(|source| NetworkError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut reader = ReaderBuilder::new().trim(Trim::All).from_reader(handle);
        let headers = reader
            .headers()
            .map_err(|source| NetworkError::Csv {
                file: file.clone(),
                source,
            })?
            .clone();
        let records = reader
            .records()
            .collect::<Result<Vec<_>, _>>()
            .map_err(|source| NetworkError::Csv {
                file: file.clone(),
                source,
            })?;
        Ok(Self {
            file,
            headers,
            records,
        })
    }

    fn is_blank(&self) -> bool {
        self.records.is_empty() && self.headers.iter().all(str::is_empty)
    }

    fn column(&self, name: &str) -> Result<usize, NetworkError> {
        self.headers
            .iter()
            .position(|h| h.trim_start_matches('\u{feff}') == name)
            .ok_or_else(|| NetworkError::MissingColumn {
                file: self.file.clone(),
                column: name.to_string(),
            })
    }

    fn optional_column(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    fn parse<T: std::str::FromStr>(
        &self,
        row: usize,
        record: &StringRecord,
        col: usize,
    ) -> Result<T, NetworkError> {
        let raw = record.get(col).unwrap_or("");
        raw.parse().map_err(|_| NetworkError::Parse {
            file: self.file.clone(),
            row,
            column: self.headers.get(col).unwrap_or("").to_string(),
            value: raw.to_string(),
        })
    }
}

/// Reads and validates a GMNS node/link/demand trio.
pub fn load_gmns(
    node_csv: impl AsRef<Path>,
    link_csv: impl AsRef<Path>,
    demand_csv: impl AsRef<Path>,
) -> Result<Network, NetworkError> {
    let nodes = read_nodes(node_csv.as_ref())?;
    let links = read_links(link_csv.as_ref())?;
    let demands = read_demand(demand_csv.as_ref())?;

    let link_file = link_csv.as_ref().display().to_string();
    let demand_file = demand_csv.as_ref().display().to_string();
    Network::new(nodes, links, demands).map_err(|err| match err {
        NetworkError::DanglingNodeReference { file, row, node } => {
            let file = if file == "link.csv" {
                link_file
            } else {
                demand_file
            };
            NetworkError::DanglingNodeReference { file, row, node }
        }
        other => other,
    })
}

fn read_nodes(path: &Path) -> Result<Vec<Node>, NetworkError> {
    let table = Table::read(path)?;
    let id = table.column("node_id")?;
    let x = table.optional_column("x_coord");
    let y = table.optional_column("y_coord");
    let mut nodes = Vec::with_capacity(table.records.len());
    for (i, record) in table.records.iter().enumerate() {
        let row = i + 1;
        let node_id: NodeId = table.parse(row, record, id)?;
        let coordinates = match (x, y) {
            (Some(x), Some(y)) if !record.get(x).unwrap_or("").is_empty() => Some((
                table.parse(row, record, x)?,
                table.parse(row, record, y)?,
            )),
            _ => None,
        };
        nodes.push(Node {
            node_id,
            coordinates,
        });
    }
    Ok(nodes)
}

fn read_links(path: &Path) -> Result<Vec<Link>, NetworkError> {
    let table = Table::read(path)?;
    let cols = [
        "link_id",
        "from_node_id",
        "to_node_id",
        "free_flow_time",
        "capacity",
        "bpr_alpha",
        "bpr_beta",
    ]
    .map(|name| table.column(name));
    let [id, from, to, fft, cap, alpha, beta] = cols;
    let (id, from, to, fft, cap, alpha, beta) = (id?, from?, to?, fft?, cap?, alpha?, beta?);

    table
        .records
        .iter()
        .enumerate()
        .map(|(i, record)| {
            let row = i + 1;
            Ok(Link {
                link_id: table.parse(row, record, id)?,
                from_node: table.parse(row, record, from)?,
                to_node: table.parse(row, record, to)?,
                free_flow_time: table.parse(row, record, fft)?,
                capacity: table.parse(row, record, cap)?,
                bpr_alpha: table.parse(row, record, alpha)?,
                bpr_beta: table.parse(row, record, beta)?,
            })
        })
        .collect()
}

fn read_demand(path: &Path) -> Result<Vec<OdPair>, NetworkError> {
    let table = Table::read(path)?;
    // A zero-byte demand file means no demand at all.
    if table.is_blank() {
        return Ok(Vec::new());
    }
    let o = table.column("o_zone_id")?;
    let d = table.column("d_zone_id")?;
    let v = table.column("volume")?;
    table
        .records
        .iter()
        .enumerate()
        .map(|(i, record)| {
            let row = i + 1;
            Ok(OdPair {
                origin: table.parse(row, record, o)?,
                destination: table.parse(row, record, d)?,
                demand: table.parse(row, record, v)?,
            })
        })
        .collect()
}
