//! Combinatorial and metric graphs, functions sampled on their edges, and the
//! reflection symmetries of the dumbbell.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Vertices and edges without lengths. Edges are unordered pairs; a loop has equal endpoints.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CombinatorialGraph {
    pub vertex_count: usize,
    pub edges: Vec<(usize, usize)>,
}

impl CombinatorialGraph {
    pub fn new(vertex_count: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if let Some(&(a, b)) = edges.iter().find(|&&(a, b)| a >= vertex_count || b >= vertex_count) {
            return Err(Error::InvalidGraph(format!("edge ({a},{b}) references a missing vertex")));
        }
        Ok(Self { vertex_count, edges })
    }

    /// Two triangles sharing the middle vertex (index 2).
    pub fn bowtie() -> Self {
        Self { vertex_count: 5, edges: vec![(0, 1), (0, 2), (1, 2), (2, 3), (2, 4), (3, 4)] }
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().map(|&(a, b)| (a == v) as usize + (b == v) as usize).sum()
    }

    /// Graph Laplacian `D - A`. A loop contributes 2 to both the degree and the adjacency.
    pub fn laplacian(&self) -> nalgebra::DMatrix<f64> {
        let n = self.vertex_count;
        let mut l = nalgebra::DMatrix::zeros(n, n);
        for &(a, b) in &self.edges {
            l[(a, a)] += 1.0;
            l[(b, b)] += 1.0;
            l[(a, b)] -= 1.0;
            l[(b, a)] -= 1.0;
        }
        l
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricEdge {
    pub from: usize,
    pub to: usize,
    pub length: f64,
    #[serde(rename = "loop", default)]
    pub is_loop: bool,
    /// Coordinate of the `from` end; the edge is parametrized by `[start, start + length]`.
    #[serde(default)]
    pub start: f64,
}

impl MetricEdge {
    pub fn end(&self) -> f64 {
        self.start + self.length
    }
}

/// Which builder produced a graph, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GraphFamily {
    Dumbbell { half_length: f64 },
    Lollipop { half_length: f64 },
    Interval { length: f64 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Markers {
    /// Leaf vertices carrying a Neumann condition (informational; Kirchhoff reduces to it).
    #[serde(default)]
    pub neumann: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<GraphFamily>,
    /// Set when the central length is commensurate with the loops and spectral roots coincide.
    #[serde(default)]
    pub resonance_warning: bool,
}

/// Graph with positive edge lengths. Serializes as `{vertices, edges, markers}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricGraph {
    pub vertices: Vec<String>,
    pub edges: Vec<MetricEdge>,
    #[serde(default)]
    pub markers: Markers,
}

impl MetricGraph {
    pub fn new(vertices: Vec<String>, edges: Vec<MetricEdge>, markers: Markers) -> Result<Self> {
        let g = Self { vertices, edges, markers };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        if n == 0 {
            return Err(Error::InvalidGraph("graph has no vertices".into()));
        }
        if self.edges.is_empty() {
            return Err(Error::InvalidGraph("graph has no edges".into()));
        }
        for (i, e) in self.edges.iter().enumerate() {
            if !(e.length.is_finite() && e.length > 0.0) {
                return Err(Error::InvalidGraph(format!("edge {i} has non-positive length {}", e.length)));
            }
            if !e.start.is_finite() {
                return Err(Error::InvalidGraph(format!("edge {i} has a non-finite start coordinate")));
            }
            if e.from >= n || e.to >= n {
                return Err(Error::InvalidGraph(format!("edge {i} references a missing vertex")));
            }
            if e.is_loop != (e.from == e.to) {
                return Err(Error::InvalidGraph(format!("edge {i}: loop flag disagrees with its endpoints")));
            }
        }
        let comb = self.combinatorial();
        for v in 0..n {
            if comb.degree(v) == 0 {
                return Err(Error::InvalidGraph(format!("vertex {v} is isolated")));
            }
        }
        // Connectivity by union-find.
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut Vec<usize>, x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            p[x] = r;
            r
        }
        for e in &self.edges {
            let (a, b) = (find(&mut parent, e.from), find(&mut parent, e.to));
            parent[a] = b;
        }
        let root = find(&mut parent, 0);
        if (1..n).any(|v| find(&mut parent, v) != root) {
            return Err(Error::InvalidGraph("graph is disconnected".into()));
        }
        for &v in &self.markers.neumann {
            if v >= n || comb.degree(v) != 1 {
                return Err(Error::InvalidGraph(format!("Neumann marker on vertex {v}, which is not a leaf")));
            }
        }
        Ok(())
    }

    pub fn combinatorial(&self) -> CombinatorialGraph {
        CombinatorialGraph {
            vertex_count: self.vertices.len(),
            edges: self.edges.iter().map(|e| (e.from, e.to)).collect(),
        }
    }

    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let g: MetricGraph = serde_json::from_str(s)?;
        g.validate()?;
        Ok(g)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Half-length of the central edge if this graph has dumbbell shape:
    /// loop at `v0` (edge 0), bridge `v0 -> v1` (edge 1), loop at `v1` (edge 2), equal loops.
    pub fn dumbbell_half_length(&self) -> Option<f64> {
        let e = &self.edges;
        if self.vertices.len() != 2 || e.len() != 3 {
            return None;
        }
        let shape = e[0].is_loop
            && e[2].is_loop
            && !e[1].is_loop
            && e[0].from == e[1].from
            && e[2].from == e[1].to
            && (e[0].length - e[2].length).abs() <= 1e-12 * e[0].length;
        shape.then_some(e[1].length / 2.0)
    }
}

fn is_resonant(half_length: f64) -> bool {
    let r = half_length / (PI / 2.0);
    (r - r.round()).abs() <= 1e-9 * r.max(1.0)
}

fn check_half_length(l: f64) -> Result<()> {
    if !(l.is_finite() && l > 0.0) {
        return Err(Error::InvalidGraph(format!("half-length must be positive, got {l}")));
    }
    Ok(())
}

/// Two loops of length `2 pi` (coordinate `(-pi, pi)`) joined by a bridge of length `2L`
/// (coordinate `(-L, L)`). Edge order: left loop, bridge, right loop.
pub fn build_dumbbell(half_length: f64) -> Result<MetricGraph> {
    check_half_length(half_length)?;
    let lp = |v: usize| MetricEdge { from: v, to: v, length: 2.0 * PI, is_loop: true, start: -PI };
    MetricGraph::new(
        vec!["v1".into(), "v2".into()],
        vec![
            lp(0),
            MetricEdge { from: 0, to: 1, length: 2.0 * half_length, is_loop: false, start: -half_length },
            lp(1),
        ],
        Markers {
            neumann: vec![],
            family: Some(GraphFamily::Dumbbell { half_length }),
            resonance_warning: is_resonant(half_length),
        },
    )
}

/// A loop of length `2 pi` at `v1` and a stem `(-L, L)` ending at the leaf `v2`.
pub fn build_lollipop(half_length: f64) -> Result<MetricGraph> {
    check_half_length(half_length)?;
    MetricGraph::new(
        vec!["v1".into(), "v2".into()],
        vec![
            MetricEdge { from: 0, to: 0, length: 2.0 * PI, is_loop: true, start: -PI },
            MetricEdge { from: 0, to: 1, length: 2.0 * half_length, is_loop: false, start: -half_length },
        ],
        Markers { neumann: vec![1], family: Some(GraphFamily::Lollipop { half_length }), resonance_warning: false },
    )
}

/// A single edge `(0, length)` with Neumann ends.
pub fn build_interval(length: f64) -> Result<MetricGraph> {
    check_half_length(length)?;
    MetricGraph::new(
        vec!["a".into(), "b".into()],
        vec![MetricEdge { from: 0, to: 1, length, is_loop: false, start: 0.0 }],
        Markers { neumann: vec![0, 1], family: Some(GraphFamily::Interval { length }), resonance_warning: false },
    )
}

/// Samples of one edge on a uniform grid including both endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSamples {
    pub start: f64,
    pub h: f64,
    pub values: Vec<f64>,
}

impl EdgeSamples {
    pub fn x(&self, i: usize) -> f64 {
        self.start + self.h * i as f64
    }

    pub fn intervals(&self) -> usize {
        self.values.len() - 1
    }

    /// Trapezoid integral of `g(value)`.
    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        let n = self.values.len();
        let mut s = 0.5 * (g(self.values[0]) + g(self.values[n - 1]));
        for v in &self.values[1..n - 1] {
            s += g(*v);
        }
        s * self.h
    }

    /// Piecewise-linear interpolation at coordinate `x`.
    pub fn eval(&self, x: f64) -> f64 {
        let t = ((x - self.start) / self.h).clamp(0.0, self.intervals() as f64);
        let i = (t.floor() as usize).min(self.intervals() - 1);
        let f = t - i as f64;
        self.values[i] * (1.0 - f) + self.values[i + 1] * f
    }
}

/// A function on a metric graph, sampled edge by edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFunction {
    pub edges: Vec<EdgeSamples>,
}

impl GraphFunction {
    /// Sample `f(edge, x)` with `intervals[m]` uniform intervals on edge `m`.
    pub fn from_fn(graph: &MetricGraph, intervals: &[usize], f: impl Fn(usize, f64) -> f64) -> Self {
        let edges = graph
            .edges
            .iter()
            .zip(intervals)
            .enumerate()
            .map(|(m, (e, &n))| {
                let h = e.length / n as f64;
                let values = (0..=n).map(|i| f(m, e.start + h * i as f64)).collect();
                EdgeSamples { start: e.start, h, values }
            })
            .collect();
        Self { edges }
    }

    /// Largest mismatch of endpoint values at shared vertices.
    pub fn vertex_mismatch(&self, graph: &MetricGraph) -> f64 {
        let mut vals: Vec<Vec<f64>> = vec![Vec::new(); graph.vertices.len()];
        for (e, s) in graph.edges.iter().zip(&self.edges) {
            vals[e.from].push(s.values[0]);
            vals[e.to].push(*s.values.last().unwrap());
        }
        vals.iter()
            .map(|v| {
                let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if v.is_empty() { 0.0 } else { hi - lo }
            })
            .fold(0.0, f64::max)
    }

    pub fn check_coherent(&self, graph: &MetricGraph, tol: f64) -> Result<()> {
        if self.edges.len() != graph.edges.len() {
            return Err(Error::InvalidArgument("function and graph have different edge counts".into()));
        }
        let m = self.vertex_mismatch(graph);
        if m > tol {
            return Err(Error::InvalidArgument(format!("vertex values disagree by {m:.3e}")));
        }
        Ok(())
    }

    /// Trapezoid integral of `g(value)` over all edges.
    pub fn integrate(&self, g: impl Fn(f64) -> f64 + Copy) -> f64 {
        self.edges.iter().map(|e| e.integrate(g)).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.integrate(|v| v * v).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.edges.iter().flat_map(|e| e.values.iter()).fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_diff(&self, other: &GraphFunction) -> f64 {
        self.edges
            .iter()
            .zip(&other.edges)
            .flat_map(|(a, b)| a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: f64) -> GraphFunction {
        let mut out = self.clone();
        for e in &mut out.edges {
            for v in &mut e.values {
                *v *= c;
            }
        }
        out
    }

    /// One row per sample: `edge_id, x, value`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["edge_id", "x", "value"])?;
        for (m, e) in self.edges.iter().enumerate() {
            for (i, v) in e.values.iter().enumerate() {
                wr.write_record(&[m.to_string(), format!("{:.17e}", e.x(i)), format!("{:.17e}", v)])?;
            }
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut edges: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidArgument(format!("bad solution row {:?}", rec)))
            };
            let m = parse(0)? as usize;
            while edges.len() <= m {
                edges.push((Vec::new(), Vec::new()));
            }
            edges[m].0.push(parse(1)?);
            edges[m].1.push(parse(2)?);
        }
        let edges = edges
            .into_iter()
            .map(|(xs, vs)| {
                if xs.len() < 2 {
                    return Err(Error::InvalidArgument("edge with fewer than two samples".into()));
                }
                let h = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
                Ok(EdgeSamples { start: xs[0], h, values: vs })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { edges })
    }
}

/// Symmetries acting on functions or vertex states.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymmetryOp {
    /// Reverse the left loop.
    R1,
    /// Swap the two loops and reverse the bridge.
    R2,
    /// Reverse the right loop.
    R3,
    /// Vertex permutation `new[i] = old[perm[i]]`.
    Permutation(Vec<usize>),
}

impl SymmetryOp {
    pub fn name(&self) -> String {
        match self {
            SymmetryOp::R1 => "R1".into(),
            SymmetryOp::R2 => "R2".into(),
            SymmetryOp::R3 => "R3".into(),
            SymmetryOp::Permutation(p) => format!("permutation {p:?}"),
        }
    }

    /// Permute vertex values.
    pub fn apply_vertex_values<T: Clone>(&self, values: &[T]) -> Result<Vec<T>> {
        match self {
            SymmetryOp::Permutation(p) => {
                let mut seen = vec![false; values.len()];
                if p.len() != values.len() || p.iter().any(|&i| i >= values.len() || std::mem::replace(&mut seen[i], true)) {
                    return Err(Error::IncompatibleSymmetry {
                        op: self.name(),
                        reason: format!("not a permutation of {} vertices", values.len()),
                    });
                }
                Ok(p.iter().map(|&i| values[i].clone()).collect())
            }
            _ => Err(Error::IncompatibleSymmetry { op: self.name(), reason: "acts on dumbbell edges, not vertex states".into() }),
        }
    }

    /// Check that a permutation preserves the adjacency of `g`.
    pub fn is_automorphism(&self, g: &CombinatorialGraph) -> bool {
        let SymmetryOp::Permutation(p) = self else { return false };
        if p.len() != g.vertex_count {
            return false;
        }
        let lap = g.laplacian();
        (0..p.len()).all(|i| (0..p.len()).all(|j| lap[(p[i], p[j])] == lap[(i, j)]))
    }
}

/// Apply a dumbbell reflection. Fails on graphs without dumbbell shape.
pub fn apply_symmetry(op: &SymmetryOp, f: &GraphFunction, graph: &MetricGraph) -> Result<GraphFunction> {
    let incompatible = |reason: &str| Error::IncompatibleSymmetry { op: op.name(), reason: reason.into() };
    if matches!(op, SymmetryOp::Permutation(_)) {
        return Err(incompatible("vertex permutations act on vertex states"));
    }
    graph.dumbbell_half_length().ok_or_else(|| incompatible("graph is not a dumbbell"))?;
    if f.edges.len() != 3 {
        return Err(incompatible("function does not have three edges"));
    }
    let reversed = |e: &EdgeSamples| {
        let mut r = e.clone();
        r.values.reverse();
        r
    };
    let mut out = f.clone();
    match op {
        SymmetryOp::R1 => out.edges[0] = reversed(&f.edges[0]),
        SymmetryOp::R3 => out.edges[2] = reversed(&f.edges[2]),
        SymmetryOp::R2 => {
            if f.edges[0].values.len() != f.edges[2].values.len() {
                return Err(incompatible("loops are sampled differently"));
            }
            out.edges[0] = f.edges[2].clone();
            out.edges[2] = f.edges[0].clone();
            out.edges[1] = reversed(&f.edges[1]);
        }
        SymmetryOp::Permutation(_) => unreachable!(),
    }
    Ok(out)
}
