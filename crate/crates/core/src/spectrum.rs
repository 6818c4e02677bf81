//! Linear spectrum of the Kirchhoff Laplacian on the dumbbell: roots of the three
//! secular factors with closed-form eigenfunctions, and a finite-difference oracle
//! for arbitrary graphs.

use crate::discretize::DiscreteSystem;
use crate::error::{Error, Result};
use crate::graph::{build_dumbbell, GraphFunction, MetricGraph};
use crate::linalg::wdot;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Factor whose roots are the modes even under the loop exchange (`cos` on the bridge).
pub fn secular_even(k: f64, half_length: f64) -> f64 {
    (k * (half_length - PI)).sin() - 3.0 * (k * (half_length + PI)).sin()
}

/// Factor whose roots are the modes odd under the loop exchange (`sin` on the bridge).
pub fn secular_odd(k: f64, half_length: f64) -> f64 {
    (k * (half_length - PI)).cos() - 3.0 * (k * (half_length + PI)).cos()
}

/// Factor whose roots are the loop-localized modes.
pub fn secular_loop(k: f64) -> f64 {
    (k * PI).sin().powi(2)
}

/// Determinant of the full 6×6 vertex-condition system for `a cos kx + b sin kx` on each edge,
/// unknowns `(a₁, b₁, a₂, b₂, a₃, b₃)`; flux rows are divided by `k`. Equals
/// `2 · secular_even · secular_odd · secular_loop`. Kept as a cross-check of the factored form.
pub fn secular_determinant(k: f64, half_length: f64) -> f64 {
    let (cp, sp) = ((k * PI).cos(), (k * PI).sin());
    let (cl, sl) = ((k * half_length).cos(), (k * half_length).sin());
    #[rustfmt::skip]
    let m = nalgebra::Matrix6::new(
        0.0, -2.0 * sp, 0.0, 0.0, 0.0, 0.0,      // left loop closes
        cp, sp, -cl, sl, 0.0, 0.0,               // left loop meets bridge
        2.0 * sp, 0.0, sl, cl, 0.0, 0.0,         // flux at v1
        0.0, 0.0, 0.0, 0.0, 0.0, -2.0 * sp,      // right loop closes
        0.0, 0.0, cl, sl, -cp, -sp,              // bridge meets right loop
        0.0, 0.0, sl, -cl, 2.0 * sp, 0.0,        // flux at v2
    );
    m.determinant()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeFamily {
    Constant,
    Even,
    Odd,
    Loop,
}

impl ModeFamily {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModeFamily::Constant => "constant",
            ModeFamily::Even => "even",
            ModeFamily::Odd => "odd",
            ModeFamily::Loop => "loop",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub k: f64,
    pub lambda: f64,
    pub family: ModeFamily,
    pub multiplicity: usize,
    /// Root coincides with a root of another factor.
    pub resonant: bool,
}

/// Closed-form eigenfunction on the dumbbell, normalized in `L^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeFunction {
    pub family: ModeFamily,
    pub k: f64,
    pub half_length: f64,
    /// Amplitudes on (left loop, bridge, right loop) before normalization.
    loop_left: f64,
    loop_right: f64,
    /// For loop modes, which loop carries the function (0 or 2).
    loop_edge: usize,
    scale: f64,
}

impl ModeFunction {
    /// Value on dumbbell edge `m` at coordinate `x`.
    pub fn eval(&self, m: usize, x: f64) -> f64 {
        let k = self.k;
        let v = match (self.family, m) {
            (ModeFamily::Constant, _) => 1.0,
            (ModeFamily::Loop, m) => {
                if m == self.loop_edge {
                    (k * x).sin()
                } else {
                    0.0
                }
            }
            (ModeFamily::Even, 1) => (k * x).cos(),
            (ModeFamily::Odd, 1) => (k * x).sin(),
            (_, 0) => self.loop_left * (k * x).cos(),
            (_, _) => self.loop_right * (k * x).cos(),
        };
        v * self.scale
    }

    pub fn sample(&self, graph: &MetricGraph, intervals: &[usize]) -> GraphFunction {
        GraphFunction::from_fn(graph, intervals, |m, x| self.eval(m, x))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSet {
    pub half_length: f64,
    pub k_max: f64,
    pub modes: Vec<Mode>,
    pub resonance_warning: bool,
}

impl ModeSet {
    pub fn of_family(&self, family: ModeFamily) -> impl Iterator<Item = &Mode> {
        self.modes.iter().filter(move |m| m.family == family)
    }

    /// Smallest positive root of a family.
    pub fn first(&self, family: ModeFamily) -> Option<f64> {
        self.of_family(family).map(|m| m.k).find(|&k| k > 0.0)
    }

    /// Eigenvalues `k^2` repeated by multiplicity, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> =
            self.modes.iter().flat_map(|m| std::iter::repeat(m.lambda).take(m.multiplicity)).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Normalized eigenfunctions of a mode; loop modes have one per loop.
    pub fn eigenfunctions(&self, mode: &Mode) -> Vec<ModeFunction> {
        mode_functions(mode, self.half_length)
    }
}

fn mode_functions(mode: &Mode, l: f64) -> Vec<ModeFunction> {
    let k = mode.k;
    let base = ModeFunction { family: mode.family, k, half_length: l, loop_left: 0.0, loop_right: 0.0, loop_edge: 0, scale: 1.0 };
    let cos2 = |a: f64| a + (2.0 * k * a).sin() / (2.0 * k);
    let sin2 = |a: f64| a - (2.0 * k * a).sin() / (2.0 * k);
    match mode.family {
        ModeFamily::Constant => vec![ModeFunction { scale: 1.0 / (4.0 * PI + 2.0 * l).sqrt(), ..base }],
        ModeFamily::Loop => {
            let s = 1.0 / sin2(PI).sqrt();
            vec![ModeFunction { loop_edge: 0, scale: s, ..base }, ModeFunction { loop_edge: 2, scale: s, ..base }]
        }
        ModeFamily::Even => {
            // Continuity at the vertex, or equivalently the flux balance when cos(k pi) is small.
            let (c, s) = ((k * PI).cos(), (k * PI).sin());
            let a = if c.abs() >= s.abs() { (k * l).cos() / c } else { -(k * l).sin() / (2.0 * s) };
            let norm2 = cos2(l) + 2.0 * a * a * cos2(PI);
            vec![ModeFunction { loop_left: a, loop_right: a, scale: 1.0 / norm2.sqrt(), ..base }]
        }
        ModeFamily::Odd => {
            let (c, s) = ((k * PI).cos(), (k * PI).sin());
            let a = if c.abs() >= s.abs() { -(k * l).sin() / c } else { -(k * l).cos() / (2.0 * s) };
            let norm2 = sin2(l) + 2.0 * a * a * cos2(PI);
            vec![ModeFunction { loop_left: a, loop_right: -a, scale: 1.0 / norm2.sqrt(), ..base }]
        }
    }
}

/// Bisection on a sign-changing bracket until it is narrower than `tol` (or stops shrinking).
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, mut flo: f64, tol: f64) -> f64 {
    while hi - lo > tol {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = m;
            flo = fm;
        } else {
            hi = m;
        }
    }
    0.5 * (lo + hi)
}

fn bracket_roots(f: impl Fn(f64) -> f64, k_max: f64, step: f64) -> Vec<f64> {
    let mut roots = Vec::new();
    let n = (k_max / step).ceil() as usize;
    let mut a = step * 0.5;
    let mut fa = f(a);
    for i in 1..=n {
        let b = (step * (i as f64 + 0.5)).min(k_max);
        if b <= a {
            break;
        }
        let fb = f(b);
        if fa == 0.0 {
            roots.push(a);
        } else if fa * fb < 0.0 {
            roots.push(bisect(&f, a, b, fa, 1e-12));
        }
        a = b;
        fa = fb;
    }
    roots
}

/// All roots in `[0, k_max]` of the three secular factors of the dumbbell with half-length `L`,
/// plus the constant mode at `k = 0`. Sorted by `k`.
pub fn find_modes(half_length: f64, k_max: f64) -> Result<ModeSet> {
    let graph = build_dumbbell(half_length)?;
    if !(k_max > 0.0 && k_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("k_max must be positive, got {k_max}")));
    }
    let step = 1e-3;
    let mut modes = vec![Mode { k: 0.0, lambda: 0.0, family: ModeFamily::Constant, multiplicity: 1, resonant: false }];
    for (family, roots) in [
        (ModeFamily::Even, bracket_roots(|k| secular_even(k, half_length), k_max, step)),
        (ModeFamily::Odd, bracket_roots(|k| secular_odd(k, half_length), k_max, step)),
    ] {
        modes.extend(roots.into_iter().map(|k| Mode { k, lambda: k * k, family, multiplicity: 1, resonant: false }));
    }
    // The loop factor is a square, so its roots do not change sign; they are the integers.
    for j in 1..=(k_max.floor() as usize) {
        let k = j as f64;
        debug_assert!(secular_loop(k) < 1e-10);
        modes.push(Mode { k, lambda: k * k, family: ModeFamily::Loop, multiplicity: 2, resonant: false });
    }
    modes.sort_by(|a, b| a.k.total_cmp(&b.k));
    let mut resonance_warning = graph.markers.resonance_warning;
    for i in 1..modes.len() {
        if (modes[i].k - modes[i - 1].k).abs() <= 1e-9 {
            modes[i].resonant = true;
            modes[i - 1].resonant = true;
            resonance_warning = true;
        }
    }
    Ok(ModeSet { half_length, k_max, modes, resonance_warning })
}

/// Exchange parity of a bridge-carrying mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

/// Secular factor of the dumbbell rescaled to loops of length `ε` and a bridge of length `π`.
pub fn rescaled_secular(k: f64, eps: f64, parity: Parity) -> f64 {
    let (a, b) = (k * (PI - eps) / 2.0, k * (PI + eps) / 2.0);
    match parity {
        Parity::Even => a.sin() - 3.0 * b.sin(),
        Parity::Odd => a.cos() - 3.0 * b.cos(),
    }
}

/// Third-order small-loop series for the `n`-th root of the rescaled factor.
pub fn epsilon_series(n: u32, parity: Parity, eps: f64) -> f64 {
    let k0 = match parity {
        Parity::Even => 2.0 * n as f64,
        Parity::Odd => 2.0 * n as f64 - 1.0,
    };
    let r = eps / PI;
    k0 * (1.0 - 2.0 * r + 4.0 * r * r - 8.0 * r * r * r) + k0.powi(3) * eps.powi(3) / (2.0 * PI)
}

/// `(k_exact, k_series)` for the `n`-th even or odd mode of the rescaled dumbbell.
///
/// `k_exact` is bisected to machine precision inside the sign change nearest the series value.
pub fn epsilon_expansion_check(n: u32, parity: Parity, eps: f64) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::InvalidArgument("mode index starts at 1".into()));
    }
    if !(eps > 0.0 && eps <= 0.1) {
        return Err(Error::InvalidArgument(format!("loop length must lie in (0, 0.1], got {eps}")));
    }
    let series = epsilon_series(n, parity, eps);
    let f = |k: f64| rescaled_secular(k, eps, parity);
    // Neighbouring roots are about 2 apart, so a bracket of half-width up to 0.5 stays on this one.
    let mut width = 1e-6 * series;
    loop {
        let (lo, hi) = (series - width, series + width);
        let (flo, fhi) = (f(lo), f(hi));
        if flo * fhi <= 0.0 {
            let exact = if flo == 0.0 { lo } else if fhi == 0.0 { hi } else { bisect(f, lo, hi, flo, 0.0) };
            return Ok((exact, series));
        }
        width *= 4.0;
        if width > 0.5 {
            return Err(Error::Numerical(format!("no root of the rescaled factor near k = {series}")));
        }
    }
}

/// Eigenpair of the finite-difference Laplacian, normalized with the trapezoid rule.
#[derive(Debug, Clone, PartialEq)]
pub struct FdMode {
    pub lambda: f64,
    pub vector: Vec<f64>,
}

/// Eigenvalues of the discrete Laplacian with vertex unknowns eliminated through the flux rows.
pub fn fd_eigenvalues(sys: &DiscreteSystem) -> Result<Vec<f64>> {
    let ni = sys.n_interior();
    let n = sys.len();
    let a = sys.laplacian();
    let mut k = nalgebra::DMatrix::<f64>::zeros(ni, ni);
    for i in 0..ni {
        for &(j, v) in a.row(i) {
            if j < ni {
                k[(i, j)] += v;
            }
        }
    }
    for vrow in ni..n {
        let diag = a.get(vrow, vrow);
        let couplings: Vec<(usize, f64)> = a.row(vrow).iter().copied().filter(|&(j, _)| j != vrow).collect();
        if couplings.iter().any(|&(j, _)| j >= ni) || diag == 0.0 {
            return Err(Error::Numerical("vertex rows couple to other vertices; grid too coarse".into()));
        }
        // phi_v = -sum(c_j phi_j) / diag; substitute into interior rows referencing phi_v.
        for i in 0..ni {
            let aiv = a.get(i, vrow);
            if aiv != 0.0 {
                for &(j, c) in &couplings {
                    k[(i, j)] -= aiv * c / diag;
                }
            }
        }
    }
    let eig = k.complex_eigenvalues();
    let mut vals: Vec<f64> = eig
        .iter()
        .map(|z| {
            if z.im.abs() > 1e-6 * (1.0 + z.re.abs()) {
                Err(Error::Numerical(format!("complex eigenvalue {z} in discrete Laplacian")))
            } else {
                Ok(z.re)
            }
        })
        .collect::<Result<_>>()?;
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

fn normalize(sys: &DiscreteSystem, v: &mut [f64]) {
    let s = sys.power(v).sqrt();
    for x in v.iter_mut() {
        *x /= s;
    }
}

/// The `count` lowest eigenpairs of the discrete Laplacian. Degenerate clusters are rotated
/// so that their members are ordered by decreasing mass on the first edge; on the dumbbell
/// this localizes each loop mode on a single loop.
pub fn fd_eigenmodes(sys: &DiscreteSystem, count: usize) -> Result<Vec<FdMode>> {
    let vals = fd_eigenvalues(sys)?;
    if count > vals.len() {
        return Err(Error::InvalidArgument(format!("requested {count} modes, grid supports {}", vals.len())));
    }
    let w = sys.trapezoid_weights();
    let mass = sys.mass();
    let mut out: Vec<FdMode> = Vec::with_capacity(count);
    let mut i = 0;
    while i < count {
        let mut j = i + 1;
        while j < vals.len() && (vals[j] - vals[i]).abs() <= 1e-8 * vals[i].abs().max(1.0) {
            j += 1;
        }
        let d = j - i;
        let lam = vals[i..j].iter().sum::<f64>() / d as f64;
        let sigma = lam - 1e-7 * lam.abs().max(1.0);
        let shifted = sys.laplacian().add_diagonal(-sigma, mass);
        let lu = sys.factor(&shifted)?;
        let mut block: Vec<Vec<f64>> = (0..d)
            .map(|b| (0..sys.len()).map(|t| (((t * (2 * b + 3) + 7 * b) % 17) as f64 - 8.0) / 8.0 + 0.1).collect())
            .collect();
        for _ in 0..4 {
            for v in block.iter_mut() {
                let mv: Vec<f64> = v.iter().zip(mass).map(|(a, m)| a * m).collect();
                *v = lu.solve(&mv);
            }
            // Gram-Schmidt in the trapezoid inner product.
            for a in 0..d {
                for b in 0..a {
                    let p = wdot(w, &block[a], &block[b]);
                    let (lo, hi) = block.split_at_mut(a);
                    for (x, y) in hi[0].iter_mut().zip(&lo[b]) {
                        *x -= p * y;
                    }
                }
                normalize(sys, &mut block[a]);
            }
        }
        if d > 1 {
            // Rotate within the cluster by the mass carried on edge 0.
            let g0 = &sys.grids()[0];
            let on_edge0: Vec<usize> = (1..g0.intervals).map(|t| sys.index(0, t)).collect();
            let mut gm = nalgebra::DMatrix::<f64>::zeros(d, d);
            for a in 0..d {
                for b in 0..d {
                    gm[(a, b)] = on_edge0.iter().map(|&t| w[t] * block[a][t] * block[b][t]).sum();
                }
            }
            let eig = nalgebra::SymmetricEigen::new(gm);
            let mut order: Vec<usize> = (0..d).collect();
            order.sort_by(|&p, &q| eig.eigenvalues[q].total_cmp(&eig.eigenvalues[p]));
            let rotated: Vec<Vec<f64>> = order
                .iter()
                .map(|&c| {
                    let mut v = vec![0.0; sys.len()];
                    for a in 0..d {
                        let coef = eig.eigenvectors[(a, c)];
                        for (x, y) in v.iter_mut().zip(&block[a]) {
                            *x += coef * y;
                        }
                    }
                    normalize(sys, &mut v);
                    v
                })
                .collect();
            block = rotated;
        }
        for (c, mut v) in block.into_iter().enumerate() {
            if i + c >= count {
                break;
            }
            let vmax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if let Some(first) = v.iter().find(|x| x.abs() > 1e-6 * vmax) {
                if *first < 0.0 {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
            }
            out.push(FdMode { lambda: vals[i + c], vector: v });
        }
        i = j;
    }
    Ok(out)
}
