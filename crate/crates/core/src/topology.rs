//! Random node deployment and the connectivity/interference graph.
//!
//! Edges use a closed boundary: two nodes are linked when their distance is
//! `<= range`. Topologies round-trip through a plain-text node table
//! (`node_id x_m y_m is_sink`, `#` comments).

use std::fmt::Write as _;

use thiserror::Error;

use crate::simcore::{NodeId, RngStream};

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("cannot place a sink in an empty deployment")]
    EmptyTopology,
    #[error("terrain dimensions must be positive, got {0} x {1}")]
    BadTerrain(f64, f64),
    #[error("invalid radio model: {0}")]
    BadRadio(String),
    #[error("node table line {line}: {msg}")]
    Table { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Terrain {
    pub width_m: f64,
    pub height_m: f64,
}

impl Terrain {
    pub fn new(width_m: f64, height_m: f64) -> Result<Self, TopologyError> {
        if !(width_m > 0.0 && height_m > 0.0) {
            return Err(TopologyError::BadTerrain(width_m, height_m));
        }
        Ok(Terrain { width_m, height_m })
    }

    pub fn square(side_m: f64) -> Result<Self, TopologyError> {
        Self::new(side_m, side_m)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        (0.0..=self.width_m).contains(&x) && (0.0..=self.height_m).contains(&y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodePosition {
    pub node: NodeId,
    pub x_m: f64,
    pub y_m: f64,
}

impl NodePosition {
    pub fn distance(&self, other: &NodePosition) -> f64 {
        (self.x_m - other.x_m).hypot(self.y_m - other.y_m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioModel {
    pub comm_range_m: f64,
    pub interference_range_m: f64,
    pub bitrate_bps: f64,
    pub propagation_speed_mps: f64,
}

impl Default for RadioModel {
    fn default() -> Self {
        RadioModel {
            comm_range_m: 250.0,
            interference_range_m: 550.0,
            bitrate_bps: 2e6,
            propagation_speed_mps: 3e8,
        }
    }
}

impl RadioModel {
    pub fn validate(&self) -> Result<(), TopologyError> {
        let bad = |m: &str| Err(TopologyError::BadRadio(m.to_string()));
        if !(self.comm_range_m > 0.0) {
            return bad("comm_range_m must be positive");
        }
        if !(self.interference_range_m >= self.comm_range_m) {
            return bad("interference_range_m must be >= comm_range_m");
        }
        if !(self.bitrate_bps > 0.0) {
            return bad("bitrate_bps must be positive");
        }
        if !(self.propagation_speed_mps > 0.0) {
            return bad("propagation_speed_mps must be positive");
        }
        Ok(())
    }

    pub fn propagation_delay(&self, distance_m: f64) -> f64 {
        distance_m / self.propagation_speed_mps
    }
}

/// Uniform i.i.d. positions over the terrain, ids `0..n`.
pub fn deploy_random(n: usize, terrain: &Terrain, rng: &mut RngStream) -> Vec<NodePosition> {
    (0..n)
        .map(|i| {
            let x_m = rng.next_uniform() * terrain.width_m;
            let y_m = rng.next_uniform() * terrain.height_m;
            NodePosition {
                node: NodeId(i as u32),
                x_m,
                y_m,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SinkPolicy {
    Center,
    Corner,
    Explicit { x_m: f64, y_m: f64 },
}

/// Appends a dedicated sink node and returns its id.
pub fn place_sink(
    positions: &mut Vec<NodePosition>,
    terrain: &Terrain,
    policy: SinkPolicy,
) -> Result<NodeId, TopologyError> {
    if positions.is_empty() {
        return Err(TopologyError::EmptyTopology);
    }
    let (x_m, y_m) = match policy {
        SinkPolicy::Center => (terrain.width_m / 2.0, terrain.height_m / 2.0),
        SinkPolicy::Corner => (0.0, 0.0),
        SinkPolicy::Explicit { x_m, y_m } => (x_m, y_m),
    };
    let id = NodeId(positions.len() as u32);
    positions.push(NodePosition { node: id, x_m, y_m });
    Ok(id)
}

/// Communication and interference adjacency, both undirected.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectivityGraph {
    comm: Vec<Vec<NodeId>>,
    interference: Vec<Vec<(NodeId, f64)>>,
}

impl ConnectivityGraph {
    pub fn node_count(&self) -> usize {
        self.comm.len()
    }

    pub fn neighbors(&self, n: NodeId) -> &[NodeId] {
        &self.comm[n.index()]
    }

    /// Nodes within interference range of `n` (excluding `n`) with distances.
    pub fn audience(&self, n: NodeId) -> &[(NodeId, f64)] {
        &self.interference[n.index()]
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.comm[a.index()].binary_search(&b).is_ok()
    }

    pub fn interferes(&self, a: NodeId, b: NodeId) -> bool {
        self.interference[a.index()].iter().any(|(n, _)| *n == b)
    }

    pub fn edge_count(&self) -> usize {
        self.comm.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Builds a graph from explicit communication edges; interference equals
    /// communication with zero distances. Handy for routing fixtures.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Self {
        let mut comm = vec![Vec::new(); n];
        for &(a, b) in edges {
            comm[a as usize].push(NodeId(b));
            comm[b as usize].push(NodeId(a));
        }
        for adj in &mut comm {
            adj.sort();
            adj.dedup();
        }
        let interference = comm
            .iter()
            .map(|adj| adj.iter().map(|&n| (n, 0.0)).collect())
            .collect();
        ConnectivityGraph { comm, interference }
    }
}

/// Positions must carry ids `0..len` in order.
pub fn build_graph(positions: &[NodePosition], radio: &RadioModel) -> ConnectivityGraph {
    let n = positions.len();
    let mut comm = vec![Vec::new(); n];
    let mut interference = vec![Vec::new(); n];
    for (i, a) in positions.iter().enumerate() {
        debug_assert_eq!(a.node.index(), i);
        for b in &positions[i + 1..] {
            let d = a.distance(b);
            if d <= radio.interference_range_m {
                interference[i].push((b.node, d));
                interference[b.node.index()].push((a.node, d));
            }
            if d <= radio.comm_range_m {
                comm[i].push(b.node);
                comm[b.node.index()].push(a.node);
            }
        }
    }
    for adj in &mut comm {
        adj.sort();
    }
    for adj in &mut interference {
        adj.sort_by_key(|(n, _)| *n);
    }
    ConnectivityGraph { comm, interference }
}

/// A deployment with its designated sink.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub positions: Vec<NodePosition>,
    pub sink: NodeId,
}

impl Topology {
    /// Deploys `n` sensors and appends a sink according to `policy`.
    pub fn generate(
        n: usize,
        terrain: &Terrain,
        policy: SinkPolicy,
        rng: &mut RngStream,
    ) -> Result<Self, TopologyError> {
        let mut positions = deploy_random(n, terrain, rng);
        let sink = place_sink(&mut positions, terrain, policy)?;
        Ok(Topology { positions, sink })
    }

    pub fn to_table(&self) -> String {
        let mut out = String::from("# node_id x_m y_m is_sink\n");
        for p in &self.positions {
            let _ = writeln!(
                out,
                "{} {} {} {}",
                p.node,
                p.x_m,
                p.y_m,
                u8::from(p.node == self.sink)
            );
        }
        out
    }

    pub fn from_table(text: &str) -> Result<Self, TopologyError> {
        let mut positions = Vec::new();
        let mut sink = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| TopologyError::Table {
                line: line_no,
                msg: msg.to_string(),
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(err("expected `node_id x_m y_m is_sink`"));
            }
            let id: u32 = fields[0].parse().map_err(|_| err("bad node_id"))?;
            if id as usize != positions.len() {
                return Err(err("node ids must be consecutive from 0"));
            }
            let x_m: f64 = fields[1].parse().map_err(|_| err("bad x_m"))?;
            let y_m: f64 = fields[2].parse().map_err(|_| err("bad y_m"))?;
            match fields[3] {
                "1" => {
                    if sink.replace(NodeId(id)).is_some() {
                        return Err(err("more than one sink"));
                    }
                }
                "0" => {}
                _ => return Err(err("is_sink must be 0 or 1")),
            }
            positions.push(NodePosition {
                node: NodeId(id),
                x_m,
                y_m,
            });
        }
        let sink = sink.ok_or(TopologyError::Table {
            line: 0,
            msg: "no sink row".to_string(),
        })?;
        Ok(Topology { positions, sink })
    }
}
