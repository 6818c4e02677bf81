//! Second-order finite differences for `-phi'' - lambda phi - 2 phi^3 = 0` on a metric graph.
//!
//! Each vertex value is stored once and shared by the incident edge ends. Interior
//! rows carry the three-point stencil; each vertex row is the Kirchhoff flux balance
//! with a one-sided second-order derivative per incident edge end, scaled to the
//! size of an interior row.

use crate::error::{Error, Result};
use crate::graph::{EdgeSamples, GraphFunction, MetricGraph};
use crate::linalg::{norm_inf, rcm_ordering, BandedLu, SparseMatrix};

/// Minimum number of intervals per edge.
pub const MIN_INTERVALS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeGrid {
    pub from: usize,
    pub to: usize,
    pub start: f64,
    pub h: f64,
    pub intervals: usize,
    /// Unknown index of the first interior sample.
    pub offset: usize,
}

#[derive(Debug, Clone)]
pub struct DiscreteSystem {
    graph: MetricGraph,
    h_target: f64,
    grids: Vec<EdgeGrid>,
    n_interior: usize,
    n: usize,
    laplacian: SparseMatrix,
    mass: Vec<f64>,
    trapezoid: Vec<f64>,
    natural: Vec<f64>,
    ordering: Vec<usize>,
}

impl DiscreteSystem {
    /// Discretize with spacing at most `h` and at least [`MIN_INTERVALS`] intervals per edge.
    pub fn new(graph: &MetricGraph, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidArgument(format!("grid spacing must be positive, got {h}")));
        }
        graph.validate()?;
        let counts: Vec<usize> =
            graph.edges.iter().map(|e| MIN_INTERVALS.max((e.length / h - 1e-9).ceil() as usize)).collect();
        Self::with_intervals(graph, h, &counts)
    }

    /// Discretize with explicit interval counts per edge.
    pub fn with_intervals(graph: &MetricGraph, h_target: f64, counts: &[usize]) -> Result<Self> {
        if counts.len() != graph.edges.len() || counts.iter().any(|&c| c < 3) {
            return Err(Error::InvalidArgument("need at least 3 intervals on every edge".into()));
        }
        let mut grids = Vec::with_capacity(counts.len());
        let mut offset = 0;
        for (e, &c) in graph.edges.iter().zip(counts) {
            grids.push(EdgeGrid { from: e.from, to: e.to, start: e.start, h: e.length / c as f64, intervals: c, offset });
            offset += c - 1;
        }
        let n_interior = offset;
        let n = n_interior + graph.vertices.len();
        let mut sys = Self {
            graph: graph.clone(),
            h_target,
            grids,
            n_interior,
            n,
            laplacian: SparseMatrix::new(n),
            mass: vec![0.0; n],
            trapezoid: vec![0.0; n],
            natural: vec![0.0; n],
            ordering: Vec::new(),
        };
        sys.assemble();
        sys.ordering = rcm_ordering(&sys.laplacian);
        Ok(sys)
    }

    /// Same graph with every interval count doubled.
    pub fn refined(&self) -> Self {
        let counts: Vec<usize> = self.grids.iter().map(|g| 2 * g.intervals).collect();
        Self::with_intervals(&self.graph, self.h_target / 2.0, &counts).expect("refining a valid system")
    }

    fn assemble(&mut self) {
        let nv = self.graph.vertices.len();
        let mut end_h_sum = vec![0.0; nv];
        for g in &self.grids {
            end_h_sum[g.from] += g.h;
            end_h_sum[g.to] += g.h;
        }
        let a = &mut self.laplacian;
        for g in &self.grids {
            let h2 = g.h * g.h;
            for i in 1..g.intervals {
                let r = g.offset + i - 1;
                self.mass[r] = 1.0;
                a.add(r, index_in(g, self.n_interior, i - 1), -1.0 / h2);
                a.add(r, r, 2.0 / h2);
                a.add(r, index_in(g, self.n_interior, i + 1), -1.0 / h2);
                self.trapezoid[r] = g.h;
                self.natural[r] = if i == 1 || i == g.intervals - 1 { 1.5 * g.h } else { g.h };
            }
            self.trapezoid[self.n_interior + g.from] += 0.5 * g.h;
            self.trapezoid[self.n_interior + g.to] += 0.5 * g.h;
            // Flux contributions: outward derivative (-3 phi_v + 4 phi_1 - phi_2) / (2h), negated and scaled.
            for (v, near1, near2) in [
                (g.from, index_in(g, self.n_interior, 1), index_in(g, self.n_interior, 2)),
                (g.to, index_in(g, self.n_interior, g.intervals - 1), index_in(g, self.n_interior, g.intervals - 2)),
            ] {
                let row = self.n_interior + v;
                let s = 2.0 / end_h_sum[v] / (2.0 * g.h);
                a.add(row, row, 3.0 * s);
                a.add(row, near1, -4.0 * s);
                a.add(row, near2, s);
            }
        }
    }

    pub fn graph(&self) -> &MetricGraph {
        &self.graph
    }

    pub fn grids(&self) -> &[EdgeGrid] {
        &self.grids
    }

    /// Requested spacing.
    pub fn h(&self) -> f64 {
        self.h_target
    }

    /// Largest spacing actually used.
    pub fn h_max(&self) -> f64 {
        self.grids.iter().map(|g| g.h).fold(0.0, f64::max)
    }

    pub fn intervals(&self) -> Vec<usize> {
        self.grids.iter().map(|g| g.intervals).collect()
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn n_interior(&self) -> usize {
        self.n_interior
    }

    /// Unknown index of sample `i` (0 ..= intervals) on edge `m`.
    pub fn index(&self, m: usize, i: usize) -> usize {
        index_in(&self.grids[m], self.n_interior, i)
    }

    /// Linear part: the discrete `-d^2/dx^2` with Kirchhoff rows.
    pub fn laplacian(&self) -> &SparseMatrix {
        &self.laplacian
    }

    /// 1 on interior rows, 0 on vertex rows.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn trapezoid_weights(&self) -> &[f64] {
        &self.trapezoid
    }

    /// Quadrature weights annihilating the range of the discrete Laplacian:
    /// `1.5 h` next to each vertex, `h` elsewhere, 0 at vertices.
    pub fn natural_weights(&self) -> &[f64] {
        &self.natural
    }

    pub fn ordering(&self) -> &[usize] {
        &self.ordering
    }

    pub fn factor(&self, a: &SparseMatrix) -> Result<BandedLu> {
        BandedLu::factor(a, &self.ordering)
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::InvalidArgument(format!("vector has length {}, system has {}", x.len(), self.n)));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite entry in state vector".into()));
        }
        Ok(())
    }

    /// `F(phi, lambda)`: interior rows `-phi'' - lambda phi - 2 phi^3`, vertex rows flux balance.
    pub fn residual(&self, phi: &[f64], lambda: f64) -> Result<Vec<f64>> {
        self.check_len(phi)?;
        let mut r = self.laplacian.matvec(phi);
        for ((ri, &m), &p) in r.iter_mut().zip(&self.mass).zip(phi) {
            *ri -= m * (lambda * p + 2.0 * p * p * p);
        }
        Ok(r)
    }

    pub fn residual_norm(&self, phi: &[f64], lambda: f64) -> Result<f64> {
        Ok(norm_inf(&self.residual(phi, lambda)?))
    }

    /// `dF/dphi`.
    pub fn jacobian(&self, phi: &[f64], lambda: f64) -> Result<SparseMatrix> {
        self.check_len(phi)?;
        let d: Vec<f64> = self.mass.iter().zip(phi).map(|(&m, &p)| m * (lambda + 6.0 * p * p)).collect();
        Ok(self.laplacian.add_diagonal(-1.0, &d))
    }

    /// `dF/dlambda`.
    pub fn d_lambda(&self, phi: &[f64]) -> Vec<f64> {
        self.mass.iter().zip(phi).map(|(&m, &p)| -m * p).collect()
    }

    /// `Q = integral of phi^2`, trapezoid rule.
    pub fn power(&self, phi: &[f64]) -> f64 {
        self.trapezoid.iter().zip(phi).map(|(w, p)| w * p * p).sum()
    }

    pub fn constant(&self, c: f64) -> Vec<f64> {
        vec![c; self.n]
    }

    /// Sample `f(edge, x)` at every unknown.
    pub fn sample(&self, f: impl Fn(usize, f64) -> f64) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        let mut vertex_set = vec![false; self.graph.vertices.len()];
        for (m, g) in self.grids.iter().enumerate() {
            for i in 0..=g.intervals {
                let idx = self.index(m, i);
                if idx >= self.n_interior {
                    let v = idx - self.n_interior;
                    if vertex_set[v] {
                        continue;
                    }
                    vertex_set[v] = true;
                }
                x[idx] = f(m, g.start + g.h * i as f64);
            }
        }
        x
    }

    pub fn to_function(&self, x: &[f64]) -> GraphFunction {
        GraphFunction {
            edges: self
                .grids
                .iter()
                .enumerate()
                .map(|(m, g)| EdgeSamples {
                    start: g.start,
                    h: g.h,
                    values: (0..=g.intervals).map(|i| x[self.index(m, i)]).collect(),
                })
                .collect(),
        }
    }

    /// Inverse of [`to_function`](Self::to_function); vertex values are averaged over incident ends.
    pub fn from_function(&self, f: &GraphFunction) -> Result<Vec<f64>> {
        if f.edges.len() != self.grids.len()
            || f.edges.iter().zip(&self.grids).any(|(e, g)| e.values.len() != g.intervals + 1)
        {
            return Err(Error::InvalidArgument("function is not sampled on this grid".into()));
        }
        let mut x = vec![0.0; self.n];
        let mut count = vec![0usize; self.graph.vertices.len()];
        for (m, (e, g)) in f.edges.iter().zip(&self.grids).enumerate() {
            for i in 1..g.intervals {
                x[self.index(m, i)] = e.values[i];
            }
            x[self.n_interior + g.from] += e.values[0];
            x[self.n_interior + g.to] += e.values[g.intervals];
            count[g.from] += 1;
            count[g.to] += 1;
        }
        for (v, &c) in count.iter().enumerate() {
            x[self.n_interior + v] /= c as f64;
        }
        Ok(x)
    }

    /// Resample any graph function (for instance from another grid) by linear interpolation.
    pub fn interpolate(&self, f: &GraphFunction) -> Result<Vec<f64>> {
        if f.edges.len() != self.grids.len() {
            return Err(Error::InvalidArgument("edge count mismatch".into()));
        }
        Ok(self.sample(|m, x| f.edges[m].eval(x)))
    }

    /// Newton iteration at fixed `lambda`.
    pub fn newton(&self, x0: &[f64], lambda: f64, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
        let mut x = x0.to_vec();
        let mut res = self.residual(&x, lambda)?;
        for it in 0..=max_iter {
            let r = norm_inf(&res);
            if r <= tol {
                return Ok(x);
            }
            if it == max_iter || !r.is_finite() {
                return Err(Error::NewtonDiverged { iterations: it, residual: r });
            }
            let lu = self.factor(&self.jacobian(&x, lambda)?)?;
            let dx = lu.solve(&res);
            for (xi, d) in x.iter_mut().zip(&dx) {
                *xi -= d;
            }
            res = self.residual(&x, lambda)?;
        }
        unreachable!()
    }
}

fn index_in(g: &EdgeGrid, n_interior: usize, i: usize) -> usize {
    if i == 0 {
        n_interior + g.from
    } else if i == g.intervals {
        n_interior + g.to
    } else {
        g.offset + i - 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_dumbbell, build_interval, build_lollipop};
    use std::f64::consts::PI;

    #[test]
    fn constant_solves_discrete_system() {
        let g = build_dumbbell(2.0).unwrap();
        let sys = DiscreteSystem::new(&g, 0.05).unwrap();
        let lambda = -1.3;
        let c = (-lambda / 2.0f64).sqrt();
        let x = sys.constant(c);
        assert!(sys.residual_norm(&x, lambda).unwrap() < 1e-12);
        let q = sys.power(&x);
        assert!((q - (4.0 * PI + 4.0) * (-lambda / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn natural_weights_annihilate_range() {
        // y^T A = 0 for y = natural weights on interior rows plus suitable vertex multipliers.
        let g = build_dumbbell(1.3).unwrap();
        let sys = DiscreteSystem::with_intervals(&g, 0.1, &[40, 23, 31]).unwrap();
        let a = sys.laplacian().to_dense();
        let w = sys.natural_weights();
        let ni = sys.n_interior();
        let mut y = w.to_vec();
        for v in 0..g.vertices.len() {
            let col = ni + v;
            let s: f64 = (0..ni).map(|i| w[i] * a[(i, col)]).sum();
            y[col] = -s / a[(col, col)];
        }
        for j in 0..sys.len() {
            let s: f64 = (0..sys.len()).map(|i| y[i] * a[(i, j)]).sum();
            assert!(s.abs() < 1e-10, "column {j}: {s}");
        }
        let total: f64 = w.iter().sum();
        assert!((total - g.total_length()).abs() < 1e-12);
    }

    #[test]
    fn second_order_consistency() {
        // phi = cos(x) on an interval with Neumann ends solves -phi'' = phi.
        let g = build_interval(PI).unwrap();
        let mut errs = Vec::new();
        for n in [40, 80] {
            let sys = DiscreteSystem::with_intervals(&g, PI / n as f64, &[n]).unwrap();
            let x = sys.sample(|_, x| x.cos());
            let ax = sys.laplacian().matvec(&x);
            let e = (0..sys.n_interior()).map(|i| (ax[i] - x[i]).abs()).fold(0.0, f64::max);
            errs.push(e);
        }
        let ratio = errs[0] / errs[1];
        assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}");
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let g = build_lollipop(1.0).unwrap();
        let sys = DiscreteSystem::new(&g, 0.2).unwrap();
        let x = sys.sample(|m, x| 0.3 + 0.1 * m as f64 + 0.2 * (0.7 * x).sin());
        let lambda = -0.8;
        let j = sys.jacobian(&x, lambda).unwrap();
        let v: Vec<f64> = (0..sys.len()).map(|i| ((i * 7 % 11) as f64 - 5.0) / 5.0).collect();
        let jv = j.matvec(&v);
        let eps = 1e-6;
        let xp: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a + eps * b).collect();
        let xm: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a - eps * b).collect();
        let rp = sys.residual(&xp, lambda).unwrap();
        let rm = sys.residual(&xm, lambda).unwrap();
        for i in 0..sys.len() {
            let fd = (rp[i] - rm[i]) / (2.0 * eps);
            assert!((fd - jv[i]).abs() < 1e-5 * (1.0 + jv[i].abs()), "row {i}");
        }
        let dl = sys.d_lambda(&x);
        let rl = sys.residual(&x, lambda + eps).unwrap();
        let r0 = sys.residual(&x, lambda).unwrap();
        for i in 0..sys.len() {
            assert!(((rl[i] - r0[i]) / eps - dl[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn function_round_trip() {
        let g = build_dumbbell(2.0).unwrap();
        let sys = DiscreteSystem::new(&g, 0.1).unwrap();
        let x = sys.sample(|m, x| m as f64 + x * x);
        let f = sys.to_function(&x);
        let back = sys.from_function(&f).unwrap();
        // Vertex values are shared, so sampling an edge-dependent function keeps the first edge's value.
        for i in 0..sys.n_interior() {
            assert_eq!(back[i], x[i]);
        }
        assert!(f.edges.iter().all(|e| e.values.len() >= MIN_INTERVALS + 1));
        let coarse = DiscreteSystem::new(&g, 1.0).unwrap();
        assert!(coarse.intervals().iter().all(|&c| c == MIN_INTERVALS));
    }

    #[test]
    fn refined_halves_spacing() {
        let g = build_dumbbell(2.0).unwrap();
        let sys = DiscreteSystem::new(&g, 0.05).unwrap();
        let r = sys.refined();
        for (a, b) in sys.grids().iter().zip(r.grids()) {
            assert_eq!(2 * a.intervals, b.intervals);
            assert!((a.h - 2.0 * b.h).abs() < 1e-15);
        }
    }
}
