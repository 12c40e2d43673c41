//! Road networks as directed metric graphs.
//!
//! A network is a set of junctions joined by arcs of positive length. Every
//! origin-to-destination route is a [`Path`]; positions on the network are
//! [`NetworkPoint`]s. Destination arcs carry a semi-infinite virtual extension
//! so that traffic which has left the physical road keeps a well-defined
//! position.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Input record for one arc of a network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcSpec {
    pub id: String,
    pub tail: String,
    pub head: String,
    pub length: f64,
}

impl ArcSpec {
    pub fn new(id: &str, tail: &str, head: &str, length: f64) -> Self {
        Self {
            id: id.to_owned(),
            tail: tail.to_owned(),
            head: head.to_owned(),
            length,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arc {
    pub id: String,
    pub tail: usize,
    pub head: usize,
    pub length: f64,
}

/// A position on the network.
///
/// `offset` is measured from the tail of `arc` and lies in `[0, length]`.
/// A positive `extension` places the point beyond the head of a destination
/// arc, on its virtual extension; `offset` then equals the arc length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkPoint {
    pub arc: usize,
    pub offset: f64,
    pub extension: f64,
}

impl NetworkPoint {
    pub fn on_arc(arc: usize, offset: f64) -> Self {
        Self {
            arc,
            offset,
            extension: 0.0,
        }
    }

    /// Coordinate along the arc, continued onto the virtual extension.
    pub fn along(&self) -> f64 {
        self.offset + self.extension
    }
}

/// An origin-to-destination route through the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub index: usize,
    pub arcs: Vec<usize>,
    /// Path coordinate at which each arc of `arcs` starts.
    pub starts: Vec<f64>,
    pub length: f64,
}

impl Path {
    /// Position of `arc` within this path, if the path uses it.
    pub fn position_of(&self, arc: usize) -> Option<usize> {
        self.arcs.iter().position(|&a| a == arc)
    }

    pub fn last_arc(&self) -> usize {
        *self.arcs.last().expect("paths are never empty")
    }

    /// Path coordinate of `p`, or `None` when `p` is not on this path.
    pub fn coordinate(&self, p: &NetworkPoint) -> Option<f64> {
        let k = self.position_of(p.arc)?;
        Some(self.starts[k] + p.along())
    }

    /// The point at arclength `s` along the path.
    ///
    /// A coordinate that falls exactly on a junction resolves to the start of
    /// the downstream arc. Coordinates beyond the path length land on the
    /// virtual extension of the final arc.
    pub fn point_at(&self, net: &RoadNetwork, s: f64) -> Result<NetworkPoint> {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::Precondition(format!(
                "path coordinate must be finite and non-negative, got {s}"
            )));
        }
        if s >= self.length {
            let last = self.arcs.len() - 1;
            let arc = self.arcs[last];
            let arc_len = net.arcs[arc].length;
            return Ok(NetworkPoint {
                arc,
                offset: arc_len,
                extension: s - self.length,
            });
        }
        // First arc whose end lies strictly beyond s.
        let k = self
            .starts
            .partition_point(|&start| start <= s)
            .saturating_sub(1);
        let arc = self.arcs[k];
        let offset = (s - self.starts[k]).clamp(0.0, net.arcs[arc].length);
        Ok(NetworkPoint::on_arc(arc, offset))
    }
}

/// Immutable directed metric graph with precomputed shortest-path table.
#[derive(Debug, Clone)]
pub struct RoadNetwork {
    vertices: Vec<String>,
    arcs: Vec<Arc>,
    origins: Vec<usize>,
    destinations: Vec<usize>,
    /// All-pairs undirected vertex distances; `INFINITY` when disconnected.
    vertex_dist: Vec<f64>,
}

impl RoadNetwork {
    pub fn build(spec: &[ArcSpec]) -> Result<Self> {
        if spec.is_empty() {
            return Err(Error::InvalidNetwork("network has no arcs".into()));
        }
        let mut ids = BTreeSet::new();
        let mut names: BTreeMap<String, usize> = BTreeMap::new();
        let mut vertices = Vec::new();
        let mut intern = |name: &str, vertices: &mut Vec<String>| -> usize {
            *names.entry(name.to_owned()).or_insert_with(|| {
                vertices.push(name.to_owned());
                vertices.len() - 1
            })
        };
        let mut arcs = Vec::with_capacity(spec.len());
        for a in spec {
            if !ids.insert(a.id.as_str()) {
                return Err(Error::InvalidNetwork(format!("duplicate arc id `{}`", a.id)));
            }
            if !(a.length > 0.0) || !a.length.is_finite() {
                return Err(Error::InvalidNetwork(format!(
                    "arc `{}` has non-positive or non-finite length {}",
                    a.id, a.length
                )));
            }
            let tail = intern(&a.tail, &mut vertices);
            let head = intern(&a.head, &mut vertices);
            arcs.push(Arc {
                id: a.id.clone(),
                tail,
                head,
                length: a.length,
            });
        }

        let nv = vertices.len();
        let mut indeg = vec![0usize; nv];
        let mut outdeg = vec![0usize; nv];
        for a in &arcs {
            outdeg[a.tail] += 1;
            indeg[a.head] += 1;
        }
        let origins = (0..nv).filter(|&v| indeg[v] == 0).collect();
        let destinations = (0..nv).filter(|&v| outdeg[v] == 0).collect();

        let mut net = Self {
            vertices,
            arcs,
            origins,
            destinations,
            vertex_dist: Vec::new(),
        };
        if let Some(v) = net.find_cycle() {
            return Err(Error::Cycle(net.vertices[v].clone()));
        }
        net.vertex_dist = net.all_pairs();
        Ok(net)
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn arc(&self, idx: usize) -> &Arc {
        &self.arcs[idx]
    }

    pub fn arc_index(&self, id: &str) -> Option<usize> {
        self.arcs.iter().position(|a| a.id == id)
    }

    pub fn vertex_name(&self, v: usize) -> &str {
        &self.vertices[v]
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn origins(&self) -> impl Iterator<Item = &str> {
        self.origins.iter().map(|&v| self.vertices[v].as_str())
    }

    pub fn destinations(&self) -> impl Iterator<Item = &str> {
        self.destinations.iter().map(|&v| self.vertices[v].as_str())
    }

    pub fn is_destination_arc(&self, arc: usize) -> bool {
        self.destinations.contains(&self.arcs[arc].head)
    }

    /// Returns a vertex on a directed cycle, if any.
    fn find_cycle(&self) -> Option<usize> {
        // Kahn's algorithm: vertices never released lie on or behind a cycle.
        let nv = self.vertices.len();
        let mut indeg = vec![0usize; nv];
        for a in &self.arcs {
            indeg[a.head] += 1;
        }
        let mut stack: Vec<usize> = (0..nv).filter(|&v| indeg[v] == 0).collect();
        let mut seen = 0;
        while let Some(v) = stack.pop() {
            seen += 1;
            for a in self.arcs.iter().filter(|a| a.tail == v) {
                indeg[a.head] -= 1;
                if indeg[a.head] == 0 {
                    stack.push(a.head);
                }
            }
        }
        if seen == nv {
            None
        } else {
            (0..nv).find(|&v| indeg[v] > 0)
        }
    }

    /// All simple origin-to-destination paths, ordered by arc-id sequence.
    pub fn enumerate_paths(&self) -> Vec<Path> {
        let mut found: Vec<Vec<usize>> = Vec::new();
        let mut stack = Vec::new();
        for &o in &self.origins {
            self.extend_paths(o, &mut stack, &mut found);
        }
        found.sort_by(|a, b| {
            let ka = a.iter().map(|&i| self.arcs[i].id.as_str());
            let kb = b.iter().map(|&i| self.arcs[i].id.as_str());
            ka.cmp(kb)
        });
        found
            .into_iter()
            .enumerate()
            .map(|(index, arcs)| {
                let mut starts = Vec::with_capacity(arcs.len());
                let mut acc = 0.0;
                for &a in &arcs {
                    starts.push(acc);
                    acc += self.arcs[a].length;
                }
                Path {
                    index,
                    arcs,
                    starts,
                    length: acc,
                }
            })
            .collect()
    }

    fn extend_paths(&self, v: usize, stack: &mut Vec<usize>, found: &mut Vec<Vec<usize>>) {
        if self.destinations.contains(&v) {
            if !stack.is_empty() {
                found.push(stack.clone());
            }
            return;
        }
        for (i, a) in self.arcs.iter().enumerate() {
            if a.tail == v {
                stack.push(i);
                self.extend_paths(a.head, stack, found);
                stack.pop();
            }
        }
    }

    fn all_pairs(&self) -> Vec<f64> {
        let nv = self.vertices.len();
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nv];
        for a in &self.arcs {
            adj[a.tail].push((a.head, a.length));
            adj[a.head].push((a.tail, a.length));
        }
        let mut table = vec![f64::INFINITY; nv * nv];
        for src in 0..nv {
            let row = dijkstra(&adj, src);
            table[src * nv..(src + 1) * nv].copy_from_slice(&row);
        }
        table
    }

    fn vdist(&self, u: usize, v: usize) -> f64 {
        self.vertex_dist[u * self.vertices.len() + v]
    }

    /// Junctions from which `p` can be left, with the distance to each.
    fn legs(&self, p: &NetworkPoint) -> ([(usize, f64); 2], usize) {
        let a = &self.arcs[p.arc];
        if p.extension > 0.0 {
            ([(a.head, p.extension), (a.head, f64::INFINITY)], 1)
        } else {
            ([(a.tail, p.offset), (a.head, a.length - p.offset)], 2)
        }
    }

    /// Length of the shortest route joining `a` and `b`, ignoring arc direction.
    pub fn distance(&self, a: &NetworkPoint, b: &NetworkPoint) -> Result<f64> {
        let d = self.distance_unchecked(a, b);
        if d.is_finite() {
            Ok(d)
        } else {
            Err(Error::Disconnected)
        }
    }

    /// Like [`RoadNetwork::distance`] but returns `INFINITY` for disconnected points.
    pub(crate) fn distance_unchecked(&self, a: &NetworkPoint, b: &NetworkPoint) -> f64 {
        // Fixed argument order keeps the sum bitwise symmetric.
        let key = |p: &NetworkPoint| (p.arc, p.offset.to_bits(), p.extension.to_bits());
        let (a, b) = if key(a) <= key(b) { (a, b) } else { (b, a) };
        let mut best = if a.arc == b.arc {
            (a.along() - b.along()).abs()
        } else {
            f64::INFINITY
        };
        let (la, na) = self.legs(a);
        let (lb, nb) = self.legs(b);
        for &(u, du) in &la[..na] {
            for &(v, dv) in &lb[..nb] {
                let d = du + self.vdist(u, v) + dv;
                if d < best {
                    best = d;
                }
            }
        }
        best
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Frontier {
    dist: f64,
    vertex: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(adj: &[Vec<(usize, f64)>], src: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(Frontier {
        dist: 0.0,
        vertex: src,
    });
    while let Some(Frontier { dist: d, vertex: u }) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, w) in &adj[u] {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Frontier { dist: nd, vertex: v });
            }
        }
    }
    dist
}

/// The two-incoming, one-outgoing junction with every arc of length `len`.
pub fn merge_network(len: f64) -> Result<RoadNetwork> {
    RoadNetwork::build(&merge_spec(len))
}

pub fn merge_spec(len: f64) -> Vec<ArcSpec> {
    vec![
        ArcSpec::new("A1", "O1", "J", len),
        ArcSpec::new("A2", "O2", "J", len),
        ArcSpec::new("A3", "J", "D", len),
    ]
}
