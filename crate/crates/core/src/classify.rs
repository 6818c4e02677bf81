//! Bifurcation classification from the Lyapunov–Schmidt coefficients Θ₁…Θ₅, and the
//! amplitude expansions of the branches leaving the constant solution.
//!
//! Discrete pairings: with `J` the Jacobian at the bifurcation point, `Υ` its right null vector and
//! `ψ` its left null vector, the projection `⟨f, Υ⟩` is evaluated as `ψᵀ M f` (`M` the mass mask),
//! with `ψ` scaled so that `ψᵀ M Υ = 1`. This is the exact Fredholm functional of the discrete
//! problem. Symmetric integrals that are not projections use the natural quadrature weights.

use serde::{Deserialize, Serialize};

use crate::discretize::DiscreteSystem;
use crate::graph::{apply_symmetry, SymmetryOp};
use crate::linalg::{norm2, norm_inf, BandedLu, Bordered, SparseMatrix};
use crate::{Error, Result};

/// Relative tolerance for the orthogonality check before a kernel-complement solve.
pub const ORTHOGONALITY_TOL: f64 = 1e-8;

/// Kernel data at a singular point and solves of `J x = M f` in the complement of the kernel.
pub struct KernelSolver<'a> {
    sys: &'a DiscreteSystem,
    j: SparseMatrix,
    lu: BandedLu,
    /// Right null vector, unit length in the natural L² norm.
    pub upsilon: Vec<f64>,
    /// Left null vector scaled so that `ψᵀ M Υ = 1`.
    pub psi: Vec<f64>,
    /// `‖J Υ‖∞`.
    pub kernel_residual: f64,
    /// Estimate of the smallest singular value of `J` after the kernel, relative to `‖J‖∞`.
    pub gap: f64,
    mass_upsilon: Vec<f64>,
    weighted_upsilon: Vec<f64>,
}

fn inverse_iteration(lu: &BandedLu, start: Vec<f64>, steps: usize) -> (Vec<f64>, f64) {
    let mut x = start;
    let mut growth = 0.0;
    for _ in 0..steps {
        let s = norm2(&x);
        x.iter_mut().for_each(|v| *v /= s);
        let y = lu.solve(&x);
        growth = norm2(&y);
        x = y;
    }
    let s = norm2(&x);
    x.iter_mut().for_each(|v| *v /= s);
    (x, growth)
}

fn seed(n: usize, a: usize, b: usize) -> Vec<f64> {
    (0..n).map(|i| 1.0 + ((i * a % b) as f64) / b as f64).collect()
}

fn matrix_norm_inf(a: &SparseMatrix) -> f64 {
    (0..a.dim()).map(|i| a.row(i).iter().map(|(_, v)| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

impl<'a> KernelSolver<'a> {
    /// Factor the Jacobian at `(phi0, lambda0)` and extract its one-dimensional kernel.
    pub fn new(sys: &'a DiscreteSystem, phi0: &[f64], lambda0: f64) -> Result<Self> {
        let j = sys.jacobian(phi0, lambda0)?;
        Self::from_matrix(sys, j)
    }

    fn from_matrix(sys: &'a DiscreteSystem, j: SparseMatrix) -> Result<Self> {
        let n = sys.len();
        let lu = sys.factor(&j)?;
        let scale = matrix_norm_inf(&j);
        let (mut upsilon, _) = inverse_iteration(&lu, seed(n, 37, 101), 4);
        let jt = j.transpose();
        let lut = sys.factor(&jt)?;
        let (mut psi, _) = inverse_iteration(&lut, seed(n, 53, 97), 4);

        // Kernel dimension: deflate Υ and look at how singular J remains.
        let mut v2: Vec<f64> = (0..n).map(|i| ((i * 29 % 83) as f64) / 83.0 - 0.5).collect();
        let mut mu2 = f64::INFINITY;
        for _ in 0..8 {
            let pr = crate::linalg::dot(&v2, &upsilon);
            v2.iter_mut().zip(&upsilon).for_each(|(a, b)| *a -= pr * b);
            let s = norm2(&v2);
            v2.iter_mut().for_each(|v| *v /= s);
            let y = lu.solve(&v2);
            let pr = crate::linalg::dot(&y, &upsilon);
            let y: Vec<f64> = y.iter().zip(&upsilon).map(|(a, b)| a - pr * b).collect();
            mu2 = 1.0 / norm2(&y);
            v2 = y;
        }
        let gap = mu2 / scale.max(1.0);
        if gap < 1e-9 {
            return Err(Error::KernelDimension { dim: 2 });
        }

        let wn = sys.natural_weights();
        let norm = wn.iter().zip(&upsilon).map(|(w, u)| w * u * u).sum::<f64>().sqrt();
        upsilon.iter_mut().for_each(|v| *v /= norm);
        // Sign convention: the largest-magnitude entry is positive.
        let imax = (0..n).max_by(|&a, &b| upsilon[a].abs().total_cmp(&upsilon[b].abs())).unwrap_or(0);
        if upsilon[imax] < 0.0 {
            upsilon.iter_mut().for_each(|v| *v = -*v);
        }
        let mass = sys.mass();
        let mass_upsilon: Vec<f64> = mass.iter().zip(&upsilon).map(|(m, u)| m * u).collect();
        let pn = crate::linalg::dot(&psi, &mass_upsilon);
        if pn.abs() < 1e-12 * norm2(&psi) * norm2(&mass_upsilon) {
            return Err(Error::Singular("left and right null vectors are orthogonal".into()));
        }
        psi.iter_mut().for_each(|v| *v /= pn);
        let kernel_residual = norm_inf(&j.matvec(&upsilon));
        let weighted_upsilon: Vec<f64> = wn.iter().zip(&upsilon).map(|(w, u)| w * u).collect();
        Ok(Self { sys, j, lu, upsilon, psi, kernel_residual, gap, mass_upsilon, weighted_upsilon })
    }

    pub fn jacobian(&self) -> &SparseMatrix {
        &self.j
    }

    /// Projection `⟨f, Υ⟩ = ψᵀ M f`.
    pub fn pair(&self, f: &[f64]) -> f64 {
        self.sys.mass().iter().zip(&self.psi).zip(f).map(|((m, p), v)| m * p * v).sum()
    }

    /// Natural-quadrature integral of `f g`.
    pub fn integrate(&self, f: &[f64], g: &[f64]) -> f64 {
        self.sys.natural_weights().iter().zip(f).zip(g).map(|((w, a), b)| w * a * b).sum()
    }

    fn natural_norm(&self, f: &[f64]) -> f64 {
        self.integrate(f, f).sqrt()
    }

    /// Solve `J x = M f` with `x` orthogonal to `Υ` in the natural inner product.
    /// Refuses when `⟨f, Υ⟩` is not zero to relative tolerance [`ORTHOGONALITY_TOL`].
    pub fn solve(&self, f: &[f64]) -> Result<Vec<f64>> {
        let inner = self.pair(f);
        if inner.abs() > ORTHOGONALITY_TOL * self.natural_norm(f).max(1.0) {
            return Err(Error::NonOrthogonalRhs { inner });
        }
        let rhs: Vec<f64> = self.sys.mass().iter().zip(f).map(|(m, v)| m * v).collect();
        self.solve_bordered(&rhs)
    }

    /// `J x = rhs` modulo `M Υ`, with `x` naturally orthogonal to `Υ`.
    fn solve_bordered(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let b = Bordered { a: &self.j, lu: &self.lu, b: &self.mass_upsilon, c: &self.weighted_upsilon, d: 0.0 };
        let (x, _) = b.solve(rhs, 0.0)?;
        Ok(x)
    }

    /// As [`Self::solve`], but normalized so that `⟨x, Υ⟩ = ψᵀ M x = 0` instead.
    pub fn solve_paired(&self, f: &[f64]) -> Result<Vec<f64>> {
        let mut x = self.solve(f)?;
        let k = self.pair(&x);
        x.iter_mut().zip(&self.upsilon).for_each(|(a, u)| *a -= k * u);
        Ok(x)
    }

    /// `‖J x − M f‖∞`.
    pub fn solve_residual(&self, x: &[f64], f: &[f64]) -> f64 {
        let jx = self.j.matvec(x);
        jx.iter().zip(self.sys.mass()).zip(f).map(|((a, m), v)| (a - m * v).abs()).fold(0.0, f64::max)
    }
}

/// The five coefficients of the reduced bifurcation equation at a singular point.
/// `theta3`, `theta4` need `L₁₀⁻¹ Φ₀` and exist only when `Θ₁ = 0`; `theta5` needs `L₁₀⁻¹(G₂Υ²)`
/// and exists only when `Θ₂ = 0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThetaSet {
    pub lambda0: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: Option<f64>,
    pub theta4: Option<f64>,
    pub theta5: Option<f64>,
    /// Power of the solution at the singular point.
    pub q0: f64,
    /// `‖J Υ‖∞`.
    pub kernel_residual: f64,
    #[serde(skip)]
    pub upsilon: Vec<f64>,
    #[serde(skip)]
    pub phi0: Vec<f64>,
}

impl ThetaSet {
    pub fn as_array(&self) -> [Option<f64>; 5] {
        [Some(self.theta1), Some(self.theta2), self.theta3, self.theta4, self.theta5]
    }
}

/// Θ₁…Θ₅ at `(phi0, lambda0)`, with `G₂ = 12 Φ₀` and `G₃ = 12`.
pub fn compute_thetas(sys: &DiscreteSystem, phi0: &[f64], lambda0: f64) -> Result<ThetaSet> {
    let ks = KernelSolver::new(sys, phi0, lambda0)?;
    thetas_with(&ks, phi0, lambda0)
}

fn thetas_with(ks: &KernelSolver<'_>, phi0: &[f64], lambda0: f64) -> Result<ThetaSet> {
    let u = &ks.upsilon;
    let g2: Vec<f64> = phi0.iter().map(|p| 12.0 * p).collect();
    let g3 = 12.0;
    let theta1 = ks.pair(phi0);
    let g2u2: Vec<f64> = g2.iter().zip(u).map(|(g, v)| g * v * v).collect();
    let theta2 = ks.pair(&g2.iter().zip(u).map(|(g, v)| g * v * v).collect::<Vec<_>>());

    let x = ks.solve(phi0).ok();
    let (theta3, theta4) = match &x {
        Some(x) => {
            let t3: Vec<f64> = g2.iter().zip(x).zip(u).map(|((g, xi), v)| (1.0 - g * xi) * v).collect();
            let t4: Vec<f64> = g2.iter().zip(x).map(|(g, xi)| g * xi * xi - 2.0 * xi).collect();
            (Some(ks.pair(&t3)), Some(ks.pair(&t4)))
        }
        None => (None, None),
    };
    let theta5 = ks.solve(&g2u2).ok().map(|y| {
        let quartic: Vec<f64> = u.iter().map(|v| g3 * v * v * v).collect();
        ks.pair(&quartic) - 3.0 * ks.integrate(&g2u2, &y)
    });
    Ok(ThetaSet {
        lambda0,
        theta1,
        theta2,
        theta3,
        theta4,
        theta5,
        q0: ks.sys.power(phi0),
        kernel_residual: ks.kernel_residual,
        upsilon: u.clone(),
        phi0: phi0.to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BifurcationKind {
    SaddleNode,
    Transcritical,
    Pitchfork,
    Unresolved,
}

/// Side of `Λ₀` on which the bifurcating branches live.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    /// Branches exist for `Λ ≤ Λ₀`.
    Below,
    /// Branches exist for `Λ ≥ Λ₀`.
    Above,
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub kind: BifurcationKind,
    pub side: Side,
}

/// Default zero tolerance, `1e-6 · max(1, Q(Φ₀))`.
pub fn default_zero_tol(theta: &ThetaSet) -> f64 {
    1e-6 * theta.q0.max(1.0)
}

/// Apply the three-case table: saddle-node, transcritical, pitchfork.
pub fn classify(theta: &ThetaSet, zero_tol: f64) -> Classification {
    let zero = |v: f64| v.abs() <= zero_tol;
    let nonzero = |v: Option<f64>| v.is_some_and(|x| !zero(x));
    let (t1, t2) = (theta.theta1, theta.theta2);
    if !zero(t1) && !zero(t2) {
        let side = if t1 * t2 > 0.0 { Side::Below } else { Side::Above };
        return Classification { kind: BifurcationKind::SaddleNode, side };
    }
    if zero(t1) && !zero(t2) {
        if let (Some(t3), Some(t4)) = (theta.theta3, theta.theta4) {
            if !zero(t3) && t3 * t3 > t2 * t4 {
                return Classification { kind: BifurcationKind::Transcritical, side: Side::NotApplicable };
            }
        }
    }
    if zero(t1) && zero(t2) && nonzero(theta.theta3) && nonzero(theta.theta5) {
        let p = theta.theta3.unwrap_or(0.0) * theta.theta4.unwrap_or(0.0);
        let side = if zero(p) {
            Side::NotApplicable
        } else if p > 0.0 {
            Side::Below
        } else {
            Side::Above
        };
        return Classification { kind: BifurcationKind::Pitchfork, side };
    }
    Classification { kind: BifurcationKind::Unresolved, side: Side::NotApplicable }
}

/// Eigenpair of the discrete generalized problem `A v = γ² M v` nearest `gamma_guess²`,
/// by shifted inverse iteration with shift updates. Returns `γ`.
pub fn crossing_gamma(sys: &DiscreteSystem, gamma_guess: f64) -> Result<f64> {
    if !(gamma_guess > 0.0) {
        return Err(Error::InvalidArgument(format!("wavenumber must be positive, got {gamma_guess}")));
    }
    let n = sys.len();
    let a = sys.laplacian();
    let mass = sys.mass();
    let mut sigma = gamma_guess * gamma_guess;
    let mut x = seed(n, 37, 101);
    for _round in 0..6 {
        let shifted = a.add_diagonal(-sigma, mass);
        let lu = sys.factor(&shifted)?;
        let mut last = f64::NAN;
        for _ in 0..6 {
            let s = norm2(&x);
            x.iter_mut().for_each(|v| *v /= s);
            let mx: Vec<f64> = mass.iter().zip(&x).map(|(m, v)| m * v).collect();
            let y = lu.solve(&mx);
            // y ≈ x / (γ² − σ) once converged.
            let rho = crate::linalg::dot(&y, &x) / crate::linalg::dot(&x, &x);
            last = sigma + 1.0 / rho;
            x = y;
        }
        let step = (last - sigma).abs();
        sigma = last;
        if step <= 1e-15 * sigma.abs().max(1.0) {
            break;
        }
    }
    if !(sigma > 0.0) {
        return Err(Error::Numerical(format!("eigenvalue near {gamma_guess}^2 is not positive")));
    }
    Ok(sigma.sqrt())
}

/// Constant solution `γ/2` at its crossing `Λ₀ = −γ²/2`, where `γ` is the discrete wavenumber.
fn constant_crossing(sys: &DiscreteSystem, gamma_guess: f64) -> Result<(f64, f64, Vec<f64>)> {
    let gamma = crossing_gamma(sys, gamma_guess)?;
    Ok((gamma, -gamma * gamma / 2.0, sys.constant(gamma / 2.0)))
}

/// If `state` is a constant-branch crossing up to localization error, move `(state, lambda)` onto
/// the exact discrete crossing nearest `lambda`; otherwise return `None`.
pub fn snap_constant_crossing(sys: &DiscreteSystem, state: &[f64], lambda: f64) -> Result<Option<(Vec<f64>, f64)>> {
    let (lo, hi) = state.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let mean = state.iter().sum::<f64>() / state.len() as f64;
    if !(lambda < 0.0) || !(hi - lo <= 1e-3 * mean.abs()) {
        return Ok(None);
    }
    let (_, lambda0, phi0) = constant_crossing(sys, (-2.0 * lambda).sqrt())?;
    if (lambda0 - lambda).abs() > 1e-6 * lambda.abs().max(1.0) {
        return Ok(None);
    }
    let phi0 = if mean < 0.0 { phi0.iter().map(|v| -v).collect() } else { phi0 };
    Ok(Some((phi0, lambda0)))
}

fn reflect(sys: &DiscreteSystem, op: &SymmetryOp, v: &[f64]) -> Result<Vec<f64>> {
    sys.from_function(&apply_symmetry(op, &sys.to_function(v), sys.graph())?)
}

/// Project a nearly `op`-symmetric state onto the symmetric subspace and re-solve `F = 0` there.
/// Applies only when the kernel is odd under `op`, so the restricted Jacobian is invertible.
fn symmetric_polish(sys: &DiscreteSystem, phi: &[f64], lambda: f64, op: &SymmetryOp) -> Result<Option<Vec<f64>>> {
    let scale = norm_inf(phi).max(1e-300);
    let mirrored = reflect(sys, op, phi)?;
    let asym = phi.iter().zip(&mirrored).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if asym > 1e-5 * scale {
        return Ok(None);
    }
    let mut phi: Vec<f64> = phi.iter().zip(&mirrored).map(|(a, b)| 0.5 * (a + b)).collect();
    let ks = KernelSolver::new(sys, &phi, lambda)?;
    let u_mirror = reflect(sys, op, &ks.upsilon)?;
    if ks.upsilon.iter().zip(&u_mirror).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max) > 1e-6 * norm_inf(&ks.upsilon) {
        return Ok(None);
    }
    for _ in 0..4 {
        let r = sys.residual(&phi, lambda)?;
        if norm_inf(&r) <= 1e-14 * scale {
            break;
        }
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let dx = ks.solve_bordered(&neg)?;
        let dx_mirror = reflect(sys, op, &dx)?;
        for ((p, a), b) in phi.iter_mut().zip(&dx).zip(&dx_mirror) {
            *p += 0.5 * (a + b);
        }
    }
    Ok(Some(phi))
}

/// Polish a located branch point before computing Θ.
///
/// A branch point is a double root at fixed `Λ`, so a converged state is only pinned down to about
/// the square root of the solver tolerance along the null direction `Υ`, which shows up directly in
/// `Θ₁`. Constant states are moved onto the exact discrete crossing. On a dumbbell, a state that
/// is symmetric up to that error under a reflection reversing `Υ` is projected back and re-solved
/// in the symmetric subspace. Anything else is returned unchanged.
pub fn refine_singular_point(sys: &DiscreteSystem, phi: &[f64], lambda: f64) -> Result<(Vec<f64>, f64)> {
    if let Some(snapped) = snap_constant_crossing(sys, phi, lambda)? {
        return Ok(snapped);
    }
    if sys.graph().dumbbell_half_length().is_some() {
        for op in [SymmetryOp::R2, SymmetryOp::R1, SymmetryOp::R3] {
            if let Some(polished) = symmetric_polish(sys, phi, lambda, &op)? {
                return Ok((polished, lambda));
            }
        }
    }
    Ok((phi.to_vec(), lambda))
}

/// Θ-set at the constant-branch crossing with linear wavenumber near `gamma_guess`.
pub fn constant_branch_thetas(sys: &DiscreteSystem, gamma_guess: f64) -> Result<ThetaSet> {
    let (_, lambda0, phi0) = constant_crossing(sys, gamma_guess)?;
    compute_thetas(sys, &phi0, lambda0)
}

/// Second-order expansion `Φ = γ/2 + aΥ + a²Φ₂`, `Λ = Λ₀ + β₂a²` at a symmetry-breaking crossing.
#[derive(Debug, Clone)]
pub struct PitchforkExpansion {
    pub gamma: f64,
    pub lambda0: f64,
    pub beta2: f64,
    /// Kernel-orthogonal solution of `L₁₀ Φ̃₂ = Υ²`.
    pub phi2_tilde: Vec<f64>,
    /// `3γ Φ̃₂ − β₂ / (2γ)`.
    pub phi2: Vec<f64>,
    pub upsilon: Vec<f64>,
    psi_mass: Vec<f64>,
}

impl PitchforkExpansion {
    /// Amplitude `a = ⟨Φ − γ/2, Υ⟩` of a nearby solution.
    pub fn amplitude(&self, phi: &[f64]) -> f64 {
        let c = self.gamma / 2.0;
        self.psi_mass.iter().zip(phi).map(|(p, v)| p * (v - c)).sum()
    }

    pub fn lambda_at(&self, a: f64) -> f64 {
        self.lambda0 + self.beta2 * a * a
    }
}

/// Expansion coefficients at the crossing whose null vector is odd.
pub fn pitchfork_coefficients(sys: &DiscreteSystem, omega: f64) -> Result<PitchforkExpansion> {
    let (gamma, lambda0, phi0) = constant_crossing(sys, omega)?;
    let ks = KernelSolver::new(sys, &phi0, lambda0)?;
    let u = &ks.upsilon;
    let u2: Vec<f64> = u.iter().map(|v| v * v).collect();
    let phi2_tilde = ks.solve_paired(&u2)?;
    let u3: Vec<f64> = u.iter().map(|v| v * v * v).collect();
    let cross: Vec<f64> = u.iter().zip(&phi2_tilde).map(|(v, p)| v * p).collect();
    let beta2 = ks.pair(&u3) + 9.0 * gamma * gamma * ks.pair(&cross);
    let phi2 = phi2_tilde.iter().map(|p| 3.0 * gamma * p - beta2 / (2.0 * gamma)).collect();
    let psi_mass = ks.psi.iter().zip(sys.mass()).map(|(p, m)| p * m).collect();
    Ok(PitchforkExpansion { gamma, lambda0, beta2, phi2_tilde, phi2, upsilon: u.clone(), psi_mass })
}

/// Expansion `Φ = γ/2 + a(Υ + C) + a²Φ₂`, `Λ = Λ₀ + β₁a + β₂a²` at a crossing whose null vector
/// is even.
#[derive(Debug, Clone)]
pub struct TranscriticalExpansion {
    pub gamma: f64,
    pub lambda0: f64,
    pub c: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Solution of `L₁₀ Φ̃₂ = γ(4CΥ + 3Υ²)` with `⟨Φ̃₂, Υ⟩ = 0`.
    pub phi2_tilde: Vec<f64>,
    pub upsilon: Vec<f64>,
    psi_mass: Vec<f64>,
}

impl TranscriticalExpansion {
    /// Amplitude `a = ⟨Φ − γ/2, Υ⟩` of a nearby solution.
    pub fn amplitude(&self, phi: &[f64]) -> f64 {
        let c = self.gamma / 2.0;
        self.psi_mass.iter().zip(phi).map(|(p, v)| p * (v - c)).sum()
    }

    pub fn lambda_at(&self, a: f64) -> f64 {
        self.lambda0 + self.beta1 * a + self.beta2 * a * a
    }
}

/// Expansion coefficients at the crossing whose null vector is even.
pub fn transcritical_coefficients(sys: &DiscreteSystem, omega: f64) -> Result<TranscriticalExpansion> {
    let (gamma, lambda0, phi0) = constant_crossing(sys, omega)?;
    let ks = KernelSolver::new(sys, &phi0, lambda0)?;
    let u = &ks.upsilon;
    let u2: Vec<f64> = u.iter().map(|v| v * v).collect();
    let c = -0.75 * ks.pair(&u2);
    let beta1 = -2.0 * gamma * c;
    let rhs: Vec<f64> = u.iter().map(|v| gamma * (4.0 * c * v + 3.0 * v * v)).collect();
    let phi2_tilde = ks.solve_paired(&rhs)?;
    let u3: Vec<f64> = u.iter().map(|v| v * v * v).collect();
    let cross: Vec<f64> = u.iter().zip(&phi2_tilde).map(|(v, p)| v * p).collect();
    let beta2 = -4.0 * c * c + ks.pair(&u3) + 3.0 * gamma * ks.pair(&cross);
    let psi_mass = ks.psi.iter().zip(sys.mass()).map(|(p, m)| p * m).collect();
    Ok(TranscriticalExpansion { gamma, lambda0, c, beta1, beta2, phi2_tilde, upsilon: u.clone(), psi_mass })
}
