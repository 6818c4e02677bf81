//! The five-site bowtie DST system: Hamiltonian in site and diagonal coordinates, reduced
//! stability of the constant state, the Poisson system on the sphere with its circle–hyperbola
//! fixed points, and the closed-form stationary branches on the symmetric subspace.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::poly::{bisect_sign, cubic_roots, Poly};
use crate::{Error, Result};

/// Negative graph Laplacian of the bowtie (two triangles sharing site 3).
pub const LAPLACIAN: [[f64; 5]; 5] = [
    [2.0, -1.0, -1.0, 0.0, 0.0],
    [-1.0, 2.0, -1.0, 0.0, 0.0],
    [-1.0, -1.0, 4.0, -1.0, -1.0],
    [0.0, 0.0, -1.0, 2.0, -1.0],
    [0.0, 0.0, -1.0, -1.0, 2.0],
];

/// Eigenvalues paired with [`eigenvectors`].
pub const EIGENVALUES: [f64; 5] = [0.0, 5.0, 1.0, 3.0, 3.0];

/// Orthonormal eigenvectors `v₁…v₅` (rows).
pub fn eigenvectors() -> [[f64; 5]; 5] {
    let (s5, s20, s2) = (5f64.sqrt(), 20f64.sqrt(), 2f64.sqrt());
    [
        [1.0 / s5; 5],
        [1.0 / s20, 1.0 / s20, -4.0 / s20, 1.0 / s20, 1.0 / s20],
        [-0.5, -0.5, 0.0, 0.5, 0.5],
        [1.0 / s2, -1.0 / s2, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0 / s2, -1.0 / s2],
    ]
}

pub type Amplitudes = [Complex64; 5];

/// Diagonal coordinates `z_j = v_jᵀ u`.
pub fn to_diag(u: &Amplitudes) -> Amplitudes {
    let v = eigenvectors();
    std::array::from_fn(|j| (0..5).map(|n| u[n] * v[j][n]).sum())
}

/// Site amplitudes `u = Σ z_j v_j`.
pub fn from_diag(z: &Amplitudes) -> Amplitudes {
    let v = eigenvectors();
    std::array::from_fn(|n| (0..5).map(|j| z[j] * v[j][n]).sum())
}

fn l_times(u: &Amplitudes) -> Amplitudes {
    std::array::from_fn(|i| (0..5).map(|j| u[j] * LAPLACIAN[i][j]).sum())
}

/// `H = ūᵀ L u − ½ Σ |u_n|⁴`.
pub fn dst_hamiltonian(u: &Amplitudes) -> f64 {
    let lu = l_times(u);
    let quad: f64 = u.iter().zip(&lu).map(|(a, b)| (a.conj() * b).re).sum();
    quad - 0.5 * u.iter().map(|a| a.norm_sqr().powi(2)).sum::<f64>()
}

/// The same Hamiltonian written in diagonal coordinates of the basis [`eigenvectors`].
pub fn diag_hamiltonian(z: &Amplitudes) -> f64 {
    let (s5, s10) = (5f64.sqrt(), 10f64.sqrt());
    let p = 2.0 * z[0] + z[1];
    let quartic = |w: Complex64| w.norm_sqr().powi(2);
    5.0 * z[1].norm_sqr() + z[2].norm_sqr() + 3.0 * z[3].norm_sqr() + 3.0 * z[4].norm_sqr()
        - quartic(z[0] - 2.0 * z[1]) / 50.0
        - (quartic(p - s5 * z[2] + s10 * z[3])
            + quartic(p - s5 * z[2] - s10 * z[3])
            + quartic(p + s5 * z[2] + s10 * z[4])
            + quartic(p + s5 * z[2] - s10 * z[4]))
            / 800.0
}

/// Time derivative `u̇ = −i ∂H/∂ū = −i (L u − |u|² u)`.
pub fn dst_rhs(u: &Amplitudes) -> Amplitudes {
    let lu = l_times(u);
    let minus_i = Complex64::new(0.0, -1.0);
    std::array::from_fn(|n| minus_i * (lu[n] - u[n] * u[n].norm_sqr()))
}

/// Linearization of the constant state on `S₂` at `R = |z₁|² + |z₂|² + |z₃|²`: the pairs
/// `±√(2R/5 − 1)` (the `y₃` direction) and `±√(2R − 25)` (the `y₂` direction).
pub fn reduced_stability_eigs(r: f64) -> [[Complex64; 2]; 2] {
    let pair = |s: f64| {
        let root = Complex64::new(s, 0.0).sqrt();
        [root, -root]
    };
    [pair(2.0 * r / 5.0 - 1.0), pair(2.0 * r - 25.0)]
}

/// Point of the reduced phase space on `S₁` (Hopf coordinates).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub r: f64,
}

impl SphereState {
    /// `R = |z₁|² + |z₂|²`, `Z = |z₁|² − |z₂|²`, `X + iY = 2 z̄₁ z₂`.
    pub fn from_modes(z1: Complex64, z2: Complex64) -> Self {
        let w = 2.0 * z1.conj() * z2;
        SphereState { x: w.re, y: w.im, z: z1.norm_sqr() - z2.norm_sqr(), r: z1.norm_sqr() + z2.norm_sqr() }
    }

    /// `X² + Y² + Z² − R²`.
    pub fn sphere_residual(&self) -> f64 {
        self.x * self.x + self.y * self.y + self.z * self.z - self.r * self.r
    }
}

/// Reduced Hamiltonian on the sphere of radius `R`.
pub fn sphere_hamiltonian(s: &SphereState) -> f64 {
    let SphereState { x, y, z, r } = *s;
    -5.0 * z / 2.0 + 3.0 * r * x / 20.0 + 9.0 * r * z / 80.0 - x * x / 20.0 - 3.0 * x * z / 20.0 + y * y / 20.0
        - z * z / 160.0
        + (5.0 * r / 2.0 - 33.0 * r * r / 160.0)
}

/// `(Ẋ, Ẏ, Ż)` of the Poisson system; `R` is a Casimir and stays fixed.
pub fn poisson_field(s: &SphereState) -> [f64; 3] {
    let SphereState { x, y, z, r } = *s;
    [
        (-9.0 * r + 12.0 * x + 9.0 * z + 200.0) * y / 80.0,
        (-12.0 * x * x + 7.0 * x * z + 12.0 * z * z + (9.0 * r - 200.0) * x - 12.0 * r * z) / 80.0,
        (3.0 * r - 4.0 * x - 3.0 * z) * y / 20.0,
    ]
}

/// Classical RK4 on [`poisson_field`]. Used to check the invariants, not as a structure-preserving
/// integrator.
pub fn poisson_flow(s: &SphereState, dt: f64, steps: usize) -> SphereState {
    let shift = |s: &SphereState, k: &[f64; 3], h: f64| SphereState { x: s.x + h * k[0], y: s.y + h * k[1], z: s.z + h * k[2], r: s.r };
    let mut cur = *s;
    for _ in 0..steps {
        let k1 = poisson_field(&cur);
        let k2 = poisson_field(&shift(&cur, &k1, dt / 2.0));
        let k3 = poisson_field(&shift(&cur, &k2, dt / 2.0));
        let k4 = poisson_field(&shift(&cur, &k3, dt));
        let k: [f64; 3] = std::array::from_fn(|i| (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0);
        cur = shift(&cur, &k, dt);
    }
    cur
}

/// Hyperbola of fixed points `Ẏ = 0` with `Y = 0`.
fn hyperbola(r: f64, x: f64, z: f64) -> f64 {
    -12.0 * x * x + 7.0 * x * z + 12.0 * z * z + (9.0 * r - 200.0) * x - 12.0 * r * z
}

/// Residuals `(X² + Z² − R², hyperbola)` of a candidate fixed point.
pub fn fixed_point_residuals(r: f64, x: f64, z: f64) -> (f64, f64) {
    (x * x + z * z - r * r, hyperbola(r, x, z))
}

/// `Z` on the hyperbola once `Z²` is replaced by `R² − X²`; linear in `Z`.
fn z_on_circle(r: f64, x: f64) -> f64 {
    (24.0 * x * x - 12.0 * r * r - (9.0 * r - 200.0) * x) / (7.0 * x - 12.0 * r)
}

/// Resultant of circle and hyperbola with respect to `Z`: `A² + (X² − R²) B²` with
/// `A = 24X² − (9R − 200)X − 12R²`, `B = 7X − 12R`.
pub fn fixed_point_quartic(r: f64) -> Poly {
    let a = Poly::new(vec![-12.0 * r * r, -(9.0 * r - 200.0), 24.0]);
    let b = Poly::new(vec![-12.0 * r, 7.0]);
    let circ = Poly::new(vec![-r * r, 0.0, 1.0]);
    a.mul(&a).add(&circ.mul(&b).mul(&b))
}

/// All real intersections `(X, Z)` of the circle `X² + Z² = R²` and the fixed-point hyperbola,
/// sorted by `X`.
///
/// Every real root of the resultant has `|X| ≤ R`, and `7X − 12R` does not vanish there, so each
/// root gives exactly one point.
pub fn circle_hyperbola_fixed_points(r: f64) -> Result<Vec<(f64, f64)>> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(format!("R must be positive, got {r}")));
    }
    // X = 0 is always a root; split it off so the rest is a cubic with a clean Sturm chain.
    let quartic = fixed_point_quartic(r);
    let cubic = Poly::new(quartic.0[1..].to_vec());
    let mut xs = cubic.real_roots(-r * (1.0 + 1e-12), r * (1.0 + 1e-12));
    if !xs.iter().any(|x| x.abs() <= 1e-12 * r) {
        xs.push(0.0);
    }
    xs.sort_by(f64::total_cmp);
    let mut points = Vec::with_capacity(xs.len());
    for x0 in xs {
        let (x, z) = polish_fixed_point(r, x0, z_on_circle(r, x0));
        let (c, h) = fixed_point_residuals(r, x, z);
        if c.abs() > 1e-9 || h.abs() > 1e-9 {
            return Err(Error::Numerical(format!("fixed point at X = {x} has residuals ({c:.2e}, {h:.2e})")));
        }
        points.push((x, z));
    }
    Ok(points)
}

/// Newton on the circle/hyperbola pair, starting from the resultant root.
fn polish_fixed_point(r: f64, mut x: f64, mut z: f64) -> (f64, f64) {
    for _ in 0..3 {
        let (f1, f2) = fixed_point_residuals(r, x, z);
        let (a, b) = (2.0 * x, 2.0 * z);
        let (c, d) = (-24.0 * x + 7.0 * z + 9.0 * r - 200.0, 7.0 * x + 24.0 * z - 12.0 * r);
        let det = a * d - b * c;
        if det.abs() < 1e-12 {
            break;
        }
        x -= (d * f1 - b * f2) / det;
        z -= (a * f2 - c * f1) / det;
    }
    (x, z)
}

/// `R* = −13 − √(241 − 12·15^{2/3}) + √(482 + 12·15^{2/3} + 7378/√(241 − 12·15^{2/3}))`.
pub fn intersection_threshold_closed_form() -> f64 {
    let c = 15f64.powf(2.0 / 3.0);
    let s = (241.0 - 12.0 * c).sqrt();
    -13.0 - s + (482.0 + 12.0 * c + 7378.0 / s).sqrt()
}

/// The radius at which the number of fixed points jumps from 2 to 4, found by scanning the root
/// count and then solving `p(X) = p'(X) = 0` for the tangency `(X, R)` by Newton's method.
pub fn intersection_threshold() -> Result<f64> {
    let count = |r: f64| circle_hyperbola_fixed_points(r).map(|p| p.len());
    let mut lo = 0.05;
    let mut c_lo = count(lo)?;
    if c_lo != 2 {
        return Err(Error::Numerical(format!("expected 2 fixed points at small R, found {c_lo}")));
    }
    let mut hi = lo;
    while hi < 12.0 {
        hi += 0.05;
        if count(hi)? == 4 {
            break;
        }
        lo = hi;
    }
    if hi >= 12.0 {
        return Err(Error::NoSolution("fixed-point count never reaches 4".into()));
    }
    while hi - lo > 1e-7 {
        let mid = 0.5 * (lo + hi);
        c_lo = count(mid)?;
        if c_lo == 4 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // The new pair sits at the root the two counts disagree on; its midpoint seeds Newton.
    let before = circle_hyperbola_fixed_points(lo)?;
    let after = circle_hyperbola_fixed_points(hi)?;
    let new: Vec<f64> = after.iter().map(|p| p.0).filter(|x| before.iter().all(|q| (q.0 - x).abs() > 1e-3)).collect();
    let mut x = if new.is_empty() { return Err(Error::Numerical("could not isolate the new pair".into())) } else { new.iter().sum::<f64>() / new.len() as f64 };
    let mut r = 0.5 * (lo + hi);
    // Cubic factor q(X, R) = 625X³ + (9600 − 600R)X² + (40000 − 3600R − 400R²)X + 384R³ − 4800R².
    for _ in 0..30 {
        let q_x = 1875.0 * x * x + 2.0 * (9600.0 - 600.0 * r) * x + (40000.0 - 3600.0 * r - 400.0 * r * r);
        let q = 625.0 * x.powi(3) + (9600.0 - 600.0 * r) * x * x + (40000.0 - 3600.0 * r - 400.0 * r * r) * x + 384.0 * r.powi(3)
            - 4800.0 * r * r;
        let q_xx = 3750.0 * x + 2.0 * (9600.0 - 600.0 * r);
        let q_r = -600.0 * x * x - (3600.0 + 800.0 * r) * x + 1152.0 * r * r - 9600.0 * r;
        let q_xr = -1200.0 * x - 3600.0 - 800.0 * r;
        let det = q_x * q_xr - q_r * q_xx;
        let dx = (q * q_xr - q_r * q_x) / det;
        let dr = (q_x * q_x - q * q_xx) / det;
        x -= dx;
        r -= dr;
        if dx.abs().max(dr.abs()) < 1e-15 * r.abs() {
            break;
        }
    }
    if !(lo - 1e-6..=hi + 1e-6).contains(&r) {
        return Err(Error::Numerical(format!("tangency Newton left the bracket: R = {r}")));
    }
    Ok(r)
}

/// A stationary state `u₁ = u₂ = a`, `u₃ = b`, `u₄ = u₅ = c` with frequency `Ω` on the subspace `S₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DstBranchPoint {
    pub branch_id: u8,
    /// Angle parameter; absent for Branches 1 and 2, which are parameterized by `Ω`.
    pub theta: Option<f64>,
    pub omega: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// Largest residual of the three stationary equations on `S₂`.
pub fn abc_residual(a: f64, b: f64, c: f64, omega: f64) -> f64 {
    let r1 = a - b - a.powi(3) - omega * a;
    let r2 = -2.0 * a + 4.0 * b - 2.0 * c - b.powi(3) - omega * b;
    let r3 = -b + c - c.powi(3) - omega * c;
    r1.abs().max(r2.abs()).max(r3.abs())
}

/// Open parameter interval of a branch (`Ω` for Branches 1 and 2, `θ` otherwise).
pub fn branch_domain(branch_id: u8) -> Result<(f64, f64)> {
    Ok(match branch_id {
        1 => (f64::NEG_INFINITY, 0.0),
        2 => (f64::NEG_INFINITY, 1.0),
        3 => (0.0, (3.0 * 3f64.sqrt() / 5.0).atan()),
        4..=6 => (PI / 3.0, 2.0 * PI / 3.0),
        7 => (0.0, PI / 3.0),
        _ => return Err(Error::InvalidArgument(format!("branch id must be 1..=7, got {branch_id}"))),
    })
}

/// Coefficients `[c₃, c₂, c₁, c₀]` of the cubic in `Ω` for Branches 6 and 7 at `μ = sin²θ`.
pub fn branch_cubic(mu: f64) -> [f64; 4] {
    let l = 4.0 * mu - 3.0;
    [
        4.0 * l * l * mu,
        -24.0 * (2.0 * mu - 1.0) * l * mu,
        3.0 * l * (16.0 * mu * mu - 4.0 * mu + 3.0),
        -64.0 * mu.powi(3) + 48.0 * mu * mu - 36.0 * mu + 81.0,
    ]
}

/// All three roots of the Branch 6/7 cubic at angle `θ`.
pub fn branch_cubic_roots(theta: f64) -> [Complex64; 3] {
    let [c3, c2, c1, c0] = branch_cubic(theta.sin().powi(2));
    cubic_roots(c3, c2, c1, c0)
}

/// The physically relevant root: real and below 1.
fn physical_cubic_root(theta: f64) -> Result<f64> {
    let roots = branch_cubic_roots(theta);
    let real: Vec<f64> = roots.iter().filter(|z| z.im.abs() <= 1e-9 * z.re.abs().max(1.0) && z.re < 1.0).map(|z| z.re).collect();
    match real.as_slice() {
        [w] => {
            // One Newton step on the cubic itself; the closed form loses digits to the large coefficients.
            let [c3, c2, c1, c0] = branch_cubic(theta.sin().powi(2));
            let p = ((c3 * w + c2) * w + c1) * w + c0;
            let dp = (3.0 * c3 * w + 2.0 * c2) * w + c1;
            Ok(if dp != 0.0 { w - p / dp } else { *w })
        }
        [] => Err(Error::NoSolution(format!("no real root below 1 at theta = {theta}"))),
        _ => Err(Error::Numerical(format!("several physical roots at theta = {theta}: {real:?}"))),
    }
}

/// `(a, c)` on the ellipse `a² + ac + c² = s` (with `s = 5 − Ω` or `1 − Ω`).
fn ellipse_pair(s: f64, theta: f64) -> (f64, f64) {
    let k = 2.0 * s.sqrt() / 3f64.sqrt();
    (k * (theta - PI / 3.0).sin(), k * (theta + PI / 3.0).sin())
}

/// Closed-form point of Branch `branch_id` at `param` (`Ω` for Branches 1 and 2, `θ` otherwise),
/// residual-checked against the stationary equations.
pub fn branch_point(branch_id: u8, param: f64) -> Result<DstBranchPoint> {
    let (lo, hi) = branch_domain(branch_id)?;
    let inside = if branch_id <= 2 { param <= hi } else { param > lo && param < hi };
    if !inside || !param.is_finite() {
        return Err(Error::InvalidArgument(format!("parameter {param} outside the domain of branch {branch_id}")));
    }
    let (theta, omega, a, b, c) = match branch_id {
        1 => {
            let a = (-param).sqrt();
            (None, param, a, a, a)
        }
        2 => {
            let a = (1.0 - param).sqrt();
            (None, param, a, 0.0, -a)
        }
        3 | 4 => {
            let t = param;
            let omega = 5.0 - 1.5 * (3.0 * 3f64.sqrt() * t.cos() - 5.0 * t.sin()) / (3.0 * t).sin();
            if !(omega < 5.0) {
                return Err(Error::NoSolution(format!("branch {branch_id}: Omega = {omega} is not below 5")));
            }
            let (a, b) = ellipse_pair(5.0 - omega, t);
            (Some(t), omega, a, b, a)
        }
        _ => {
            let t = param;
            let omega = if branch_id == 5 {
                let mu = t.sin().powi(2);
                (4.0 * mu - 6.0) / (4.0 * mu - 3.0)
            } else {
                physical_cubic_root(t)?
            };
            let (a, c) = ellipse_pair(1.0 - omega, t);
            let b = -2.0 * (1.0 - omega).powf(1.5) * (3.0 * t).sin() / (3.0 * 3f64.sqrt());
            (Some(t), omega, a, b, c)
        }
    };
    let res = abc_residual(a, b, c, omega);
    let scale = a.abs().max(b.abs()).max(c.abs()).max(1.0).powi(3);
    if !(res <= 1e-10 * scale) {
        return Err(Error::Numerical(format!("branch {branch_id} at {param}: residual {res:.3e}")));
    }
    Ok(DstBranchPoint { branch_id, theta, omega, q: 2.0 * a * a + b * b + 2.0 * c * c, a, b, c })
}

/// `n` points of a branch on a uniform grid strictly inside its parameter interval. Branches 1
/// and 2 are sampled over `Ω ∈ [omega_min, 0]` and `[omega_min, 1]`.
pub fn sample_branch(branch_id: u8, n: usize, omega_min: f64) -> Result<Vec<DstBranchPoint>> {
    let (lo, hi) = branch_domain(branch_id)?;
    let (lo, hi) = if branch_id <= 2 { (omega_min, hi) } else { (lo, hi) };
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let t = (i as f64 + 0.5) / n as f64;
        let p = lo + t * (hi - lo);
        match branch_point(branch_id, p) {
            Ok(pt) if pt.omega >= omega_min => out.push(pt),
            Ok(_) | Err(Error::NoSolution(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DstEventKind {
    Pitchfork,
    Transcritical,
    Fold,
    SymmetryBreaking,
    SaddleNode,
}

/// A bifurcation between two branches (or a turning point of one).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DstEvent {
    /// Parent branch.
    pub from: u8,
    /// Branch born or touched at the event; equal to `from` for turning points.
    pub to: u8,
    pub kind: DstEventKind,
    /// Angle on branch `to` where the event was located.
    pub theta: f64,
    pub omega: f64,
    #[serde(rename = "Q")]
    pub q: f64,
}

const SCAN_POINTS: usize = 2000;

/// Locate the unique sign change of `f` on a fine grid inside `(lo, hi)`.
fn locate_sign_change(f: impl Fn(f64) -> Result<f64>, lo: f64, hi: f64) -> Result<f64> {
    let grid = |i: usize| lo + (hi - lo) * (i as f64 + 0.5) / SCAN_POINTS as f64;
    let mut prev = (grid(0), f(grid(0))?);
    let mut found = Vec::new();
    for i in 1..SCAN_POINTS {
        let t = grid(i);
        let v = f(t)?;
        if prev.1 * v < 0.0 || v == 0.0 {
            found.push((prev.0, t));
        }
        prev = (t, v);
    }
    match found.as_slice() {
        [(a, b)] => {
            let g = |t: f64| f(t).unwrap_or(f64::NAN);
            Ok(bisect_sign(g, *a, *b))
        }
        _ => Err(Error::Numerical(format!("expected one sign change on ({lo}, {hi}), found {}", found.len()))),
    }
}

/// `dΩ/dθ` along Branches 3 and 4.
fn branch4_slope(t: f64) -> f64 {
    let g = 3.0 * 3f64.sqrt() * t.cos() - 5.0 * t.sin();
    let dg = -3.0 * 3f64.sqrt() * t.sin() - 5.0 * t.cos();
    let s = (3.0 * t).sin();
    -1.5 * (dg * s - g * 3.0 * (3.0 * t).cos()) / (s * s)
}

/// Sign of `dΩ/dθ` along Branches 6 and 7: implicit differentiation of the cubic,
/// `dΩ/dμ = −p_μ / p_Ω` with `dμ/dθ = sin 2θ`.
fn cubic_branch_slope(t: f64) -> Result<f64> {
    let omega = physical_cubic_root(t)?;
    let mu = t.sin().powi(2);
    let [c3, c2, c1, _] = branch_cubic(mu);
    let p_omega = (3.0 * c3 * omega + 2.0 * c2) * omega + c1;
    let l = 4.0 * mu - 3.0;
    // μ-derivatives of the four coefficients.
    let d3 = 4.0 * l * l + 32.0 * l * mu;
    let d2 = -24.0 * (2.0 * l * mu + 4.0 * (2.0 * mu - 1.0) * mu + (2.0 * mu - 1.0) * l);
    let d1 = 12.0 * (16.0 * mu * mu - 4.0 * mu + 3.0) + 3.0 * l * (32.0 * mu - 4.0);
    let d0 = -192.0 * mu * mu + 96.0 * mu - 36.0;
    let p_mu = ((d3 * omega + d2) * omega + d1) * omega + d0;
    Ok(-p_mu / p_omega * (2.0 * t).sin())
}

/// All bifurcation events on `S₂`, each located by bisection on a sign change:
/// the pitchfork Branch 1 → 6, the transcritical Branch 1 ↔ 4, the fold of Branch 4, its
/// symmetry-breaking contact with Branch 5, and the saddle-node creating Branch 7.
pub fn dst_branch_events() -> Result<Vec<DstEvent>> {
    let (l46, h46) = branch_domain(4)?;
    let (l7, h7) = branch_domain(7)?;
    let at = |id: u8, t: f64| branch_point(id, t);
    let event = |from: u8, to: u8, kind: DstEventKind, t: f64| -> Result<DstEvent> {
        let p = at(to, t)?;
        Ok(DstEvent { from, to, kind, theta: t, omega: p.omega, q: p.q })
    };
    let mut events = Vec::new();
    // Meeting Branch 1 means a = c (and then b = a as well).
    let t = locate_sign_change(|t| at(6, t).map(|p| p.a - p.c), l46, h46)?;
    events.push(event(1, 6, DstEventKind::Pitchfork, t)?);
    let t = locate_sign_change(|t| at(4, t).map(|p| p.a - p.b), l46, h46)?;
    events.push(event(1, 4, DstEventKind::Transcritical, t)?);
    let t = locate_sign_change(|t| Ok(branch4_slope(t)), l46, h46)?;
    events.push(event(4, 4, DstEventKind::Fold, t)?);
    let t = locate_sign_change(|t| at(5, t).map(|p| p.a - p.c), l46, h46)?;
    events.push(event(4, 5, DstEventKind::SymmetryBreaking, t)?);
    let t = locate_sign_change(cubic_branch_slope, l7, h7)?;
    events.push(event(7, 7, DstEventKind::SaddleNode, t)?);
    Ok(events)
}
