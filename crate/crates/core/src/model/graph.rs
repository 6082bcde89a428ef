use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Dense deme identifier in `0..num_demes`.
pub type Deme = usize;

/// Index of an ordered edge in [`DemeGraph::edges`].
pub type EdgeId = usize;

/// Finite directed migration graph with relative deme sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGraph", into = "RawGraph")]
pub struct DemeGraph {
    relative_size: Vec<f64>,
    edges: Vec<(Deme, Deme)>,
    out_edges: Vec<Vec<EdgeId>>,
    in_edges: Vec<Vec<EdgeId>>,
}

#[derive(Serialize, Deserialize)]
struct RawGraph {
    relative_size: Vec<f64>,
    edges: Vec<(Deme, Deme)>,
}

impl TryFrom<RawGraph> for DemeGraph {
    type Error = crate::Error;
    fn try_from(raw: RawGraph) -> Result<Self> {
        DemeGraph::new(raw.relative_size, raw.edges)
    }
}

impl From<DemeGraph> for RawGraph {
    fn from(g: DemeGraph) -> Self {
        RawGraph { relative_size: g.relative_size, edges: g.edges }
    }
}

impl DemeGraph {
    pub fn new(relative_size: Vec<f64>, edges: Vec<(Deme, Deme)>) -> Result<Self> {
        let k = relative_size.len();
        if k == 0 {
            return Err(invalid("deme graph needs at least one deme"));
        }
        if let Some(s) = relative_size.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(invalid(format!("relative deme size {s} is not positive")));
        }
        let mut out_edges = vec![Vec::new(); k];
        let mut in_edges = vec![Vec::new(); k];
        for (id, &(v, w)) in edges.iter().enumerate() {
            if v >= k || w >= k {
                return Err(invalid(format!("edge ({v},{w}) references a missing deme")));
            }
            if v == w {
                return Err(invalid(format!("self-loop at deme {v}")));
            }
            if edges[..id].contains(&(v, w)) {
                return Err(invalid(format!("duplicate edge ({v},{w})")));
            }
            out_edges[v].push(id);
            in_edges[w].push(id);
        }
        Ok(Self { relative_size, edges, out_edges, in_edges })
    }

    /// Single deme, no edges.
    pub fn single() -> Self {
        Self::new(vec![1.0], Vec::new()).expect("valid")
    }

    /// Complete directed graph on `k` equally sized demes.
    pub fn complete(k: usize) -> Result<Self> {
        let edges = (0..k).flat_map(|v| (0..k).filter(move |&w| w != v).map(move |w| (v, w))).collect();
        Self::new(vec![1.0; k], edges)
    }

    pub fn num_demes(&self) -> usize {
        self.relative_size.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(Deme, Deme)] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> (Deme, Deme) {
        self.edges[id]
    }

    pub fn edge_id(&self, from: Deme, to: Deme) -> Option<EdgeId> {
        self.out_edges.get(from)?.iter().copied().find(|&e| self.edges[e].1 == to)
    }

    pub fn out_edges(&self, v: Deme) -> &[EdgeId] {
        &self.out_edges[v]
    }

    pub fn in_edges(&self, v: Deme) -> &[EdgeId] {
        &self.in_edges[v]
    }

    pub fn relative_size(&self, v: Deme) -> f64 {
        self.relative_size[v]
    }

    /// N(v) = floor(s(v) N).
    pub fn deme_size(&self, v: Deme, population_scale: u64) -> u64 {
        (self.relative_size[v] * population_scale as f64).floor() as u64
    }
}
