//! The equivalent metric graph: vertices `A` and `B`, the glued segment, and
//! one edge per geodesic class between the gluing points.

use std::cmp::Ordering;

use num_rational::BigRational;
use serde_json::json;

use crate::caps::Caps;
use crate::error::{Error, Result};
use crate::export::num17;
use crate::spectra::{enumerate_lengths_with, enumerate_shell, GeodesicClass, LengthSpectrum, ManifoldSpec, Pair};

/// An edge of the equivalent graph; `pair` and `index` point back at the geodesic class.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphEdge {
    pub time: f64,
    pub sq_time: Option<BigRational>,
    pub pair: Pair,
    pub index: Vec<i64>,
}

impl From<&GeodesicClass> for GraphEdge {
    fn from(c: &GeodesicClass) -> Self {
        GraphEdge {
            time: c.length,
            sq_time: c.sq_length.clone(),
            pair: c.pair,
            index: c.index.clone(),
        }
    }
}

impl GraphEdge {
    /// Same travel time: exact when both squares are known.
    pub fn same_time(&self, other: &GraphEdge) -> bool {
        match (&self.sq_time, &other.sq_time) {
            (Some(a), Some(b)) => a == b,
            _ => self.time == other.time,
        }
    }

    fn time_cmp(&self, other: &GraphEdge) -> Ordering {
        match (&self.sq_time, &other.sq_time) {
            (Some(a), Some(b)) => a.cmp(b),
            _ => self.time.total_cmp(&other.time),
        }
    }
}

/// Loops split by where they can be traversed.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LoopSplit<'a> {
    /// Loop times present at both vertices (matched by time); usable from either end.
    pub shared: Vec<&'a GraphEdge>,
    pub a_only: Vec<&'a GraphEdge>,
    /// Usable only after reaching `B` through a connecting edge.
    pub b_only: Vec<&'a GraphEdge>,
}

#[derive(Clone, Debug)]
pub struct EquivalentGraph {
    spec: ManifoldSpec,
    cutoff: f64,
    segment_time: f64,
    loops_a: Vec<GraphEdge>,
    loops_b: Vec<GraphEdge>,
    cross: Vec<GraphEdge>,
}

pub fn build_equivalent_graph(spec: &ManifoldSpec, cutoff: f64) -> Result<EquivalentGraph> {
    build_equivalent_graph_with(spec, cutoff, &Caps::default())
}

pub fn build_equivalent_graph_with(spec: &ManifoldSpec, cutoff: f64, caps: &Caps) -> Result<EquivalentGraph> {
    let spectrum = enumerate_lengths_with(spec, cutoff, caps)?;
    Ok(EquivalentGraph::from_spectrum(&spectrum))
}

impl EquivalentGraph {
    pub fn from_spectrum(spectrum: &LengthSpectrum) -> Self {
        let mut g = EquivalentGraph {
            spec: spectrum.spec().clone(),
            cutoff: spectrum.cutoff(),
            segment_time: spectrum.spec().segment_time().value(),
            loops_a: Vec::new(),
            loops_b: Vec::new(),
            cross: Vec::new(),
        };
        g.absorb(spectrum.classes());
        g
    }

    fn absorb(&mut self, classes: &[GeodesicClass]) {
        for c in classes {
            let e = GraphEdge::from(c);
            match c.pair {
                Pair::AA => self.loops_a.push(e),
                Pair::BB => self.loops_b.push(e),
                Pair::AB => self.cross.push(e),
            }
        }
    }

    /// Raises the cutoff, enumerating only classes beyond the current one.
    pub fn extend(&mut self, cutoff: f64, caps: &Caps) -> Result<()> {
        if cutoff <= self.cutoff {
            return Ok(());
        }
        let held = self.loops_a.len() + self.loops_b.len() + self.cross.len();
        let shell = enumerate_shell(&self.spec, Some(self.cutoff), cutoff, caps, held)?;
        self.absorb(&shell);
        self.cutoff = cutoff;
        Ok(())
    }

    pub fn spec(&self) -> &ManifoldSpec {
        &self.spec
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn segment_time(&self) -> f64 {
        self.segment_time
    }

    pub fn loops_a(&self) -> &[GraphEdge] {
        &self.loops_a
    }

    pub fn loops_b(&self) -> &[GraphEdge] {
        &self.loops_b
    }

    pub fn cross(&self) -> &[GraphEdge] {
        &self.cross
    }

    pub fn is_exact(&self) -> bool {
        self.loops_a
            .iter()
            .chain(&self.loops_b)
            .chain(&self.cross)
            .all(|e| e.sq_time.is_some())
    }

    /// Matches loops at `A` against loops at `B` by travel time.
    pub fn loop_split(&self) -> LoopSplit<'_> {
        let mut a: Vec<&GraphEdge> = self.loops_a.iter().collect();
        let mut b: Vec<&GraphEdge> = self.loops_b.iter().collect();
        a.sort_by(|x, y| x.time_cmp(y));
        b.sort_by(|x, y| x.time_cmp(y));
        let mut split = LoopSplit::default();
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            if a[i].same_time(b[j]) {
                split.shared.push(a[i]);
                i += 1;
                j += 1;
            } else if a[i].time_cmp(b[j]).is_lt() {
                split.a_only.push(a[i]);
                i += 1;
            } else {
                split.b_only.push(b[j]);
                j += 1;
            }
        }
        split.a_only.extend(&a[i..]);
        split.b_only.extend(&b[j..]);
        split
    }

    pub fn edge_count(&self) -> usize {
        1 + self.loops_a.len() + self.loops_b.len() + self.cross.len()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let edge = |from: &str, to: &str, e: &GraphEdge| {
            json!({
                "from": from,
                "to": to,
                "time": num17(e.time),
                "pair": e.pair.as_str(),
                "index": e.index,
            })
        };
        let mut edges = vec![json!({
            "from": "A",
            "to": "B",
            "time": num17(self.segment_time),
            "pair": "segment",
            "index": Vec::<i64>::new(),
        })];
        edges.extend(self.loops_a.iter().map(|e| edge("A", "A", e)));
        edges.extend(self.loops_b.iter().map(|e| edge("B", "B", e)));
        edges.extend(self.cross.iter().map(|e| edge("A", "B", e)));
        json!({
            "vertices": ["A", "B"],
            "cutoff": num17(self.cutoff),
            "edges": edges,
        })
    }
}

/// Cutoff check shared by consumers that need the graph to cover a horizon.
pub(crate) fn require_cover(graph: &EquivalentGraph, horizon: f64) -> Result<()> {
    if horizon > graph.cutoff() {
        Err(Error::InsufficientSpectrum {
            requested: horizon,
            cutoff: graph.cutoff(),
        })
    } else {
        Ok(())
    }
}
