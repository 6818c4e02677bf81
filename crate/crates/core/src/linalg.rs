//! Sparse storage, reverse Cuthill-McKee ordering and a banded LU with partial
//! pivoting. Finite-difference operators on graphs are chains glued at
//! vertices, so after reordering their bandwidth is a small constant.

use crate::error::{Error, Result};
use std::collections::VecDeque;

/// Row-wise sparse matrix. Duplicate entries are summed on insertion.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseMatrix {
    pub fn new(n: usize) -> Self {
        Self { n, rows: vec![Vec::new(); n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.n && j < self.n);
        if let Some(e) = self.rows[i].iter_mut().find(|e| e.0 == j) {
            e.1 += v;
        } else {
            self.rows[i].push((j, v));
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i].iter().find(|e| e.0 == j).map_or(0.0, |e| e.1)
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut t = SparseMatrix::new(self.n);
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, v) in r {
                t.rows[j].push((i, v));
            }
        }
        t
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, v) in r {
                m[(i, j)] += v;
            }
        }
        m
    }

    /// `self + alpha * diag(d)`.
    pub fn add_diagonal(&self, alpha: f64, d: &[f64]) -> SparseMatrix {
        let mut out = self.clone();
        for (i, &di) in d.iter().enumerate() {
            if di != 0.0 {
                out.add(i, i, alpha * di);
            }
        }
        out
    }
}

/// Reverse Cuthill-McKee ordering of the symmetrized sparsity pattern.
/// Returns `perm` with `perm[new] = old`.
pub fn rcm_ordering(a: &SparseMatrix) -> Vec<usize> {
    let n = a.dim();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for &(j, _) in a.row(i) {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for l in adj.iter_mut() {
        l.sort_unstable();
        l.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    let bfs_levels = |start: usize, adj: &Vec<Vec<usize>>| -> (usize, usize) {
        // Returns (eccentricity, a node of minimum degree in the last level).
        let mut dist = vec![usize::MAX; adj.len()];
        let mut q = VecDeque::new();
        dist[start] = 0;
        q.push_back(start);
        let mut last = start;
        while let Some(u) = q.pop_front() {
            last = u;
            for &v in &adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    q.push_back(v);
                }
            }
        }
        let ecc = dist[last];
        let far = (0..adj.len())
            .filter(|&v| dist[v] == ecc)
            .min_by_key(|&v| (adj[v].len(), v))
            .unwrap_or(last);
        (ecc, far)
    };

    loop {
        let Some(seed) = (0..n).filter(|&v| !visited[v]).min_by_key(|&v| (degree[v], v)) else {
            break;
        };
        // Pseudo-peripheral start node.
        let mut start = seed;
        let (mut ecc, mut far) = bfs_levels(start, &adj);
        for _ in 0..8 {
            let (e2, f2) = bfs_levels(far, &adj);
            if e2 <= ecc {
                break;
            }
            start = far;
            ecc = e2;
            far = f2;
        }
        let mut q = VecDeque::new();
        visited[start] = true;
        q.push_back(start);
        while let Some(u) = q.pop_front() {
            order.push(u);
            let mut nb: Vec<usize> = adj[u].iter().copied().filter(|&v| !visited[v]).collect();
            nb.sort_by_key(|&v| (degree[v], v));
            for v in nb {
                visited[v] = true;
                q.push_back(v);
            }
        }
    }
    order.reverse();
    order
}

/// LU factorization with partial pivoting of a symmetrically permuted banded matrix.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    /// `u[i * width + (j - i)]` for `j` in `i..=i + kl + ku`.
    u: Vec<f64>,
    /// `l[k * kl + (i - k - 1)]` multipliers of column `k`.
    l: Vec<f64>,
    piv: Vec<usize>,
    perm: Vec<usize>,
    det_sign: f64,
    min_pivot: f64,
    max_pivot: f64,
}

impl BandedLu {
    /// Factor `a` using the ordering `perm` (`perm[new] = old`).
    pub fn factor(a: &SparseMatrix, perm: &[usize]) -> Result<Self> {
        let n = a.dim();
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let (mut kl, mut ku) = (0usize, 0usize);
        for i in 0..n {
            for &(j, _) in a.row(i) {
                let (pi, pj) = (inv[i], inv[j]);
                if pi > pj {
                    kl = kl.max(pi - pj);
                } else {
                    ku = ku.max(pj - pi);
                }
            }
        }
        // Working storage: row i holds columns i-kl ..= i+kl+ku.
        let w = 2 * kl + ku + 1;
        let mut ab = vec![0.0; n * w];
        let idx = |i: usize, j: usize| i * w + (j + kl - i);
        for i in 0..n {
            for &(j, v) in a.row(i) {
                ab[idx(inv[i], inv[j])] += v;
            }
        }
        let mut l = vec![0.0; n * kl.max(1)];
        let mut piv = vec![0; n];
        let mut swaps = 0usize;
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = ab[idx(k, k)].abs();
            for i in k + 1..=last {
                let v = ab[idx(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            piv[k] = p;
            if best == 0.0 {
                return Err(Error::Singular(format!("zero pivot in column {k}")));
            }
            let jmax = (k + kl + ku).min(n - 1);
            if p != k {
                swaps += 1;
                for j in k..=jmax {
                    ab.swap(idx(k, j), idx(p, j));
                }
            }
            let pivot = ab[idx(k, k)];
            for i in k + 1..=last {
                let m = ab[idx(i, k)] / pivot;
                l[k * kl + (i - k - 1)] = m;
                ab[idx(i, k)] = 0.0;
                if m != 0.0 {
                    for j in k + 1..=jmax {
                        ab[idx(i, j)] -= m * ab[idx(k, j)];
                    }
                }
            }
        }
        let width = kl + ku + 1;
        let mut u = vec![0.0; n * width];
        let mut det_sign = if swaps % 2 == 0 { 1.0 } else { -1.0 };
        let mut min_pivot = f64::INFINITY;
        let mut max_pivot = 0.0f64;
        for i in 0..n {
            for j in i..=(i + kl + ku).min(n - 1) {
                u[i * width + (j - i)] = ab[idx(i, j)];
            }
            let d = u[i * width];
            det_sign *= d.signum();
            min_pivot = min_pivot.min(d.abs());
            max_pivot = max_pivot.max(d.abs());
        }
        Ok(Self { n, kl, ku, width, u, l, piv, perm: perm.to_vec(), det_sign, min_pivot, max_pivot })
    }

    /// Factor with a freshly computed reverse Cuthill-McKee ordering.
    pub fn factor_rcm(a: &SparseMatrix) -> Result<Self> {
        let perm = rcm_ordering(a);
        Self::factor(a, &perm)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    /// Sign of the determinant of the original (unpermuted) matrix.
    pub fn det_sign(&self) -> f64 {
        self.det_sign
    }

    /// Ratio of smallest to largest pivot magnitude, a cheap conditioning hint.
    pub fn pivot_ratio(&self) -> f64 {
        self.min_pivot / self.max_pivot
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = (0..n).map(|i| b[self.perm[i]]).collect();
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            if xk != 0.0 {
                for i in k + 1..=(k + self.kl).min(n - 1) {
                    x[i] -= self.l[k * self.kl + (i - k - 1)] * xk;
                }
            }
        }
        for i in (0..n).rev() {
            let row = &self.u[i * self.width..(i + 1) * self.width];
            let mut s = x[i];
            for j in i + 1..=(i + self.kl + self.ku).min(n - 1) {
                s -= row[j - i] * x[j];
            }
            x[i] = s / row[0];
        }
        let mut out = vec![0.0; n];
        for i in 0..n {
            out[self.perm[i]] = x[i];
        }
        out
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn wdot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, x), y)| w * x * y).sum()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `[A b; c^T d]` with `A` given by its factorization and the original matrix.
/// Solved by block elimination followed by iterative refinement, which keeps
/// the solve accurate when `A` itself is close to singular.
pub struct Bordered<'a> {
    pub a: &'a SparseMatrix,
    pub lu: &'a BandedLu,
    pub b: &'a [f64],
    pub c: &'a [f64],
    pub d: f64,
}

impl Bordered<'_> {
    pub fn apply(&self, x: &[f64], y: f64) -> (Vec<f64>, f64) {
        let mut top = self.a.matvec(x);
        for (t, bi) in top.iter_mut().zip(self.b) {
            *t += bi * y;
        }
        (top, dot(self.c, x) + self.d * y)
    }

    fn eliminate(&self, f: &[f64], g: f64, ab: &[f64]) -> Result<(Vec<f64>, f64)> {
        let af = self.lu.solve(f);
        let schur = self.d - dot(self.c, ab);
        let denom_scale = self.d.abs() + norm2(self.c) * norm2(ab);
        if schur.abs() <= 1e-300 || schur.abs() <= f64::EPSILON * 1e-3 * denom_scale {
            return Err(Error::Singular("bordered Schur complement vanishes".into()));
        }
        let y = (g - dot(self.c, &af)) / schur;
        let x: Vec<f64> = af.iter().zip(ab).map(|(u, v)| u - y * v).collect();
        Ok((x, y))
    }

    /// Solve `[A b; c^T d][x; y] = [f; g]`.
    pub fn solve(&self, f: &[f64], g: f64) -> Result<(Vec<f64>, f64)> {
        let ab = self.lu.solve(self.b);
        let (mut x, mut y) = self.eliminate(f, g, &ab)?;
        // Refine while the correction keeps shrinking; near a singular `A` this takes a few rounds.
        let mut last = f64::INFINITY;
        for _ in 0..8 {
            let (r1, r2) = self.apply(&x, y);
            let res: Vec<f64> = f.iter().zip(&r1).map(|(a, b)| a - b).collect();
            let rg = g - r2;
            let (dx, dy) = self.eliminate(&res, rg, &ab)?;
            let size = norm_inf(&dx).max(dy.abs());
            if size >= last {
                break;
            }
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += di;
            }
            y += dy;
            last = size;
            if size <= 1e-15 * norm_inf(&x).max(y.abs()) {
                break;
            }
        }
        Ok((x, y))
    }

    /// Sign of the determinant of the bordered matrix.
    pub fn det_sign(&self) -> f64 {
        let ab = self.lu.solve(self.b);
        let schur = self.d - dot(self.c, &ab);
        self.lu.det_sign() * schur.signum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize) -> SparseMatrix {
        let mut a = SparseMatrix::new(n);
        for i in 0..n {
            a.add(i, i, 2.0 + 0.1 * i as f64);
            if i > 0 {
                a.add(i, i - 1, -1.0);
            }
            if i + 1 < n {
                a.add(i, i + 1, -1.3);
            }
        }
        a
    }

    #[test]
    fn banded_lu_matches_dense_solve() {
        let mut a = tridiag(40);
        // A loop closing the chain and a far coupling, as at a graph vertex.
        a.add(0, 39, 0.7);
        a.add(39, 0, -0.4);
        a.add(5, 30, 0.2);
        a.add(30, 5, 0.9);
        let lu = BandedLu::factor_rcm(&a).unwrap();
        let b: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin()).collect();
        let x = lu.solve(&b);
        let dense = a.to_dense().lu();
        let xd = dense.solve(&nalgebra::DVector::from_vec(b.clone())).unwrap();
        for i in 0..40 {
            assert!((x[i] - xd[i]).abs() < 1e-12, "{i}: {} vs {}", x[i], xd[i]);
        }
        let det = a.to_dense().determinant();
        assert_eq!(lu.det_sign(), det.signum());
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        let mut a = SparseMatrix::new(3);
        a.add(0, 1, 1.0);
        a.add(1, 0, 1.0);
        a.add(2, 2, 3.0);
        a.add(1, 2, 1.0);
        let lu = BandedLu::factor(&a, &[0, 1, 2]).unwrap();
        let x = lu.solve(&[2.0, 5.0, 6.0]);
        let r = a.matvec(&x);
        assert!((r[0] - 2.0).abs() < 1e-14 && (r[1] - 5.0).abs() < 1e-14 && (r[2] - 6.0).abs() < 1e-14);
        assert_eq!(lu.det_sign(), a.to_dense().determinant().signum());
    }

    #[test]
    fn rcm_reduces_bandwidth_of_a_ring() {
        let n = 100;
        let mut a = SparseMatrix::new(n);
        for i in 0..n {
            a.add(i, i, 2.0);
            a.add(i, (i + 1) % n, -1.0);
            a.add((i + 1) % n, i, -1.0);
        }
        let lu = BandedLu::factor_rcm(&a).unwrap();
        let (kl, ku) = lu.bandwidth();
        assert!(kl <= 3 && ku <= 3, "bandwidth {kl} {ku}");
    }

    #[test]
    fn bordered_solve_with_singular_block() {
        // A singular (constant kernel) ring Laplacian bordered by ones.
        let n = 30;
        let mut a = SparseMatrix::new(n);
        for i in 0..n {
            a.add(i, i, 2.0);
            a.add(i, (i + 1) % n, -1.0);
            a.add((i + 1) % n, i, -1.0);
        }
        // Shift slightly so the LU exists but is nearly singular.
        let a = a.add_diagonal(1e-13, &vec![1.0; n]);
        let lu = BandedLu::factor_rcm(&a).unwrap();
        let ones = vec![1.0; n];
        let sys = Bordered { a: &a, lu: &lu, b: &ones, c: &ones, d: 0.0 };
        let f: Vec<f64> = (0..n).map(|i| (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos()).collect();
        let (x, y) = sys.solve(&f, 0.0).unwrap();
        let (r1, r2) = sys.apply(&x, y);
        let err = r1.iter().zip(&f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "residual {err}");
        assert!(r2.abs() < 1e-9);
        assert!(y.abs() < 1e-9);
    }
}
