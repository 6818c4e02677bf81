//! Standing waves on the dumbbell by shooting from the left loop centre, the catalog of
//! solutions whose loops both carry whole periods, and hybrids of a lollipop wave with one
//! quantized loop.

mod complete;
mod hybrid;

pub use complete::*;
pub use hybrid::*;

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretize::DiscreteSystem;
use crate::error::{Error, Result};
use crate::graph::{EdgeSamples, GraphFunction, MetricGraph};
use crate::linalg::norm_inf;
use crate::ode::{Blowup, EdgeIvp, State};

/// Default number of scan points for root bracketing.
pub const DEFAULT_SCAN_POINTS: usize = 2000;
/// Roots are bisected until the shooting function is below this.
pub const ROOT_TOL: f64 = 1e-10;
/// FD residual every enumerated solution must reach after projection and polishing.
pub const FD_TOL: f64 = 1e-8;
/// Newton target when polishing; finer grids hit a round-off floor near 1e-10.
const POLISH_TOL: f64 = 1e-10;

/// Run `f` on a pool capped by `QGRAPH_THREADS` (all cores when unset or invalid).
pub fn with_thread_cap<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    let n = std::env::var("QGRAPH_THREADS").ok().and_then(|s| s.trim().parse::<usize>().ok()).unwrap_or(0);
    match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

/// Value of a shooting function at one `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShotValue {
    Finite(f64),
    /// The solution left the bounded region on `edge` (1-based, as e1, e2, e3) at coordinate `x`. `sign` is
    /// the sign of the shot quantity at the last accepted step, when blow-up happened on the
    /// edge that carries it.
    Divergent { edge: usize, x: f64, sign: Option<f64> },
}

impl ShotValue {
    pub fn finite(&self) -> Option<f64> {
        match self {
            ShotValue::Finite(v) => Some(*v),
            ShotValue::Divergent { .. } => None,
        }
    }
}

fn divergent(q: f64, edge: usize, b: Blowup) -> Error {
    Error::Numerical(format!("shot from q = {q} diverged on edge {edge} at x = {}", b.x))
}

/// Sample points of an edge `(start, start + len)` with `n` intervals.
fn grid(start: f64, len: f64, n: usize) -> Vec<f64> {
    let h = len / n as f64;
    (0..=n).map(|i| start + h * i as f64).collect()
}

/// Integrate a loop half from its centre (`from_centre`) or towards it, sampling the whole loop
/// `(-pi, pi)` by mirror symmetry about the centre. Returns the samples and the state at the far end.
fn loop_by_mirror(ivp: &EdgeIvp, start: State, n: usize, from_centre: bool) -> std::result::Result<(Vec<f64>, State), Blowup> {
    let xs = grid(-PI, 2.0 * PI, n);
    // Sample positions folded onto the integrated half, in the direction of integration.
    let mut half: Vec<f64> = xs.iter().map(|x| if from_centre { x.abs() } else { -x.abs() }).collect();
    half.sort_by(f64::total_cmp);
    half.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
    let (x0, x1) = if from_centre { (0.0, PI) } else { (-PI, 0.0) };
    // Targets strictly inside the integration interval; the ends are handled separately.
    let inner: Vec<f64> = half.iter().copied().filter(|&t| (t - x0).abs() > 1e-12 && (t - x1).abs() > 1e-12).collect();
    let (end, vals) = ivp.integrate(x0, start, x1, &inner)?;
    let lookup = |d: f64| -> f64 {
        if (d - x0).abs() <= 1e-12 {
            start[0]
        } else if (d - x1).abs() <= 1e-12 {
            end[0]
        } else {
            let i = inner.iter().position(|t| (t - d).abs() <= 1e-12).expect("target was scheduled");
            vals[i][0]
        }
    };
    let values = xs.iter().map(|x| lookup(if from_centre { x.abs() } else { -x.abs() })).collect();
    Ok((values, end))
}

/// One dumbbell shot: the three initial value problems from the left loop centre.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShotResult {
    pub q: f64,
    pub lambda: f64,
    pub half_length: f64,
    /// `phi_3'(0)`, the slope at the right loop centre.
    pub f: f64,
    /// Value at the right loop centre; the mirror image under the loop swap starts from here.
    pub far_centre: f64,
    /// Edge energies `(phi'^2 + lambda phi^2 + phi^4) / 2` of the left loop and the bridge at `v1`.
    pub energy_at_v1: [f64; 2],
    /// Loops mirrored about their centres, so both vertex conditions hold by construction.
    pub trajectory: GraphFunction,
}

fn edge_energy(lambda: f64, y: State) -> f64 {
    0.5 * (y[1] * y[1] + lambda * y[0] * y[0] + y[0].powi(4))
}

/// Sample counts per dumbbell edge for spacing at most `h`.
pub fn dumbbell_intervals(half_length: f64, h: f64) -> [usize; 3] {
    let lp = (2.0 * PI / h).ceil() as usize;
    [lp, (2.0 * half_length / h).ceil() as usize, lp]
}

/// Default trajectory sampling of [`shoot`].
pub const TRAJECTORY_H: f64 = 0.01;

/// Shoot from `phi_1(0) = q`, `phi_1'(0) = 0` and return `f(q) = phi_3'(0)` with the trajectory.
pub fn shoot(q: f64, lambda: f64, half_length: f64) -> Result<ShotResult> {
    shoot_sampled(q, lambda, half_length, dumbbell_intervals(half_length, TRAJECTORY_H))
}

pub fn shoot_sampled(q: f64, lambda: f64, half_length: f64, intervals: [usize; 3]) -> Result<ShotResult> {
    check_inputs(q, lambda, half_length)?;
    let ivp = EdgeIvp::new(lambda);
    let (left, e1) = loop_by_mirror(&ivp, [q, 0.0], intervals[0], true).map_err(|b| divergent(q, 1, b))?;
    let bridge_x = grid(-half_length, 2.0 * half_length, intervals[1]);
    let s2 = [e1[0], 2.0 * e1[1]];
    let (e2, inner) = ivp
        .integrate(-half_length, s2, half_length, &bridge_x[1..intervals[1]])
        .map_err(|b| divergent(q, 2, b))?;
    let mut bridge: Vec<f64> = Vec::with_capacity(intervals[1] + 1);
    bridge.push(s2[0]);
    bridge.extend(inner.iter().map(|y| y[0]));
    bridge.push(e2[0]);
    let (right, e3) = loop_by_mirror(&ivp, [e2[0], 0.5 * e2[1]], intervals[2], false).map_err(|b| divergent(q, 3, b))?;
    let edge = |start: f64, len: f64, values: Vec<f64>| EdgeSamples { start, h: len / (values.len() - 1) as f64, values };
    Ok(ShotResult {
        q,
        lambda,
        half_length,
        f: e3[1],
        far_centre: e3[0],
        energy_at_v1: [edge_energy(lambda, e1), edge_energy(lambda, s2)],
        trajectory: GraphFunction {
            edges: vec![edge(-PI, 2.0 * PI, left), edge(-half_length, 2.0 * half_length, bridge), edge(-PI, 2.0 * PI, right)],
        },
    })
}

fn check_inputs(q: f64, lambda: f64, half_length: f64) -> Result<()> {
    if !(q.is_finite() && lambda.is_finite() && half_length > 0.0 && half_length.is_finite()) {
        return Err(Error::InvalidArgument(format!("shot needs finite q, lambda and L > 0 (q = {q}, lambda = {lambda}, L = {half_length})")));
    }
    Ok(())
}

/// The dumbbell shooting function without sampling.
pub fn shot_value(q: f64, lambda: f64, half_length: f64) -> ShotValue {
    let ivp = EdgeIvp::new(lambda);
    let e1 = match ivp.integrate(0.0, [q, 0.0], PI, &[]) {
        Ok((y, _)) => y,
        Err(b) => return ShotValue::Divergent { edge: 1, x: b.x, sign: None },
    };
    let e2 = match ivp.integrate(-half_length, [e1[0], 2.0 * e1[1]], half_length, &[]) {
        Ok((y, _)) => y,
        Err(b) => return ShotValue::Divergent { edge: 2, x: b.x, sign: None },
    };
    match ivp.integrate(-PI, [e2[0], 0.5 * e2[1]], 0.0, &[]) {
        Ok((y, _)) => ShotValue::Finite(y[1]),
        Err(b) => ShotValue::Divergent { edge: 3, x: b.x, sign: Some(b.last[1].signum()) },
    }
}

/// Lollipop shooting function `phi_2'(L)` (loop centre value `q`, Neumann condition at the leaf)
/// together with the leaf value `phi_2(L)`.
pub fn lollipop_value(q: f64, lambda: f64, half_length: f64) -> (ShotValue, f64) {
    let ivp = EdgeIvp::new(lambda);
    let e1 = match ivp.integrate(0.0, [q, 0.0], PI, &[]) {
        Ok((y, _)) => y,
        Err(b) => return (ShotValue::Divergent { edge: 1, x: b.x, sign: None }, f64::NAN),
    };
    match ivp.integrate(-half_length, [e1[0], 2.0 * e1[1]], half_length, &[]) {
        Ok((y, _)) => (ShotValue::Finite(y[1]), y[0]),
        Err(b) => (ShotValue::Divergent { edge: 2, x: b.x, sign: Some(b.last[1].signum()) }, f64::NAN),
    }
}

/// Lollipop trajectory on `(loop, stem)` with the given interval counts.
pub fn lollipop_trajectory(q: f64, lambda: f64, half_length: f64, intervals: [usize; 2]) -> Result<(GraphFunction, State)> {
    check_inputs(q, lambda, half_length)?;
    let ivp = EdgeIvp::new(lambda);
    let (left, e1) = loop_by_mirror(&ivp, [q, 0.0], intervals[0], true).map_err(|b| divergent(q, 1, b))?;
    let xs = grid(-half_length, 2.0 * half_length, intervals[1]);
    let s2 = [e1[0], 2.0 * e1[1]];
    let (end, inner) = ivp.integrate(-half_length, s2, half_length, &xs[1..intervals[1]]).map_err(|b| divergent(q, 2, b))?;
    let mut stem = vec![s2[0]];
    stem.extend(inner.iter().map(|y| y[0]));
    stem.push(end[0]);
    let f = GraphFunction {
        edges: vec![
            EdgeSamples { start: -PI, h: 2.0 * PI / intervals[0] as f64, values: left },
            EdgeSamples { start: -half_length, h: 2.0 * half_length / intervals[1] as f64, values: stem },
        ],
    };
    Ok((f, end))
}

/// Scan window and tolerances for root finding in `q`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanSettings {
    /// The window is `(q_min, q_max]`; `q_min` itself is excluded.
    pub q_min: f64,
    pub q_max: f64,
    pub grid: usize,
    pub root_tol: f64,
}

impl Default for ScanSettings {
    fn default() -> Self {
        Self { q_min: 0.0, q_max: 1.3, grid: DEFAULT_SCAN_POINTS, root_tol: ROOT_TOL }
    }
}

impl ScanSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.q_min.is_finite() && self.q_max.is_finite() && self.q_max > self.q_min && self.grid >= 2 && self.root_tol > 0.0) {
            return Err(Error::InvalidArgument(format!("invalid scan window {self:?}")));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let dq = (self.q_max - self.q_min) / self.grid as f64;
        (1..=self.grid).map(|j| if j == self.grid { self.q_max } else { self.q_min + dq * j as f64 }).collect()
    }
}

/// Roots of a scalar shooting function found by scanning and bisection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RootScan {
    /// Scan samples; `None` marks a divergent shot.
    pub samples: Vec<(f64, Option<f64>)>,
    pub roots: Vec<f64>,
    /// Maximal runs of divergent shots, as `(first, last)` sample positions.
    pub divergent: Vec<(f64, f64)>,
    /// Brackets whose bisection collapsed without reaching the tolerance.
    pub unresolved: Vec<(f64, f64)>,
}

/// Scan `shot` over the window in parallel, bracket sign changes and bisect each bracket.
pub fn scan_roots(shot: &(dyn Fn(f64) -> ShotValue + Sync), settings: &ScanSettings) -> Result<RootScan> {
    settings.validate()?;
    let qs = settings.points();
    let samples: Vec<(f64, Option<f64>)> = with_thread_cap(|| qs.par_iter().map(|&q| (q, shot(q).finite())).collect());
    let mut divergent = Vec::new();
    let mut run: Option<(f64, f64)> = None;
    for &(q, v) in &samples {
        match (v, run.as_mut()) {
            (None, Some(r)) => r.1 = q,
            (None, None) => run = Some((q, q)),
            (Some(_), _) => divergent.extend(run.take()),
        }
    }
    divergent.extend(run);

    let mut brackets = Vec::new();
    let mut exact = Vec::new();
    for w in samples.windows(2) {
        if let ((a, Some(fa)), (b, Some(fb))) = (w[0], w[1]) {
            if fa == 0.0 {
                exact.push(a);
            } else if fa * fb < 0.0 {
                brackets.push((a, fa, b));
            }
        }
    }
    if let Some(&(q, Some(v))) = samples.last() {
        if v == 0.0 {
            exact.push(q);
        }
    }
    let refined: Vec<std::result::Result<f64, (f64, f64)>> =
        with_thread_cap(|| brackets.par_iter().map(|&(a, fa, b)| bisect_shot(shot, a, fa, b, settings.root_tol)).collect());
    let mut roots = exact;
    let mut unresolved = Vec::new();
    for r in refined {
        match r {
            Ok(q) => roots.push(q),
            Err(b) => unresolved.push(b),
        }
    }
    roots.sort_by(f64::total_cmp);
    Ok(RootScan { samples, roots, divergent, unresolved })
}

fn bisect_shot(shot: &(dyn Fn(f64) -> ShotValue + Sync), mut a: f64, mut fa: f64, mut b: f64, tol: f64) -> std::result::Result<f64, (f64, f64)> {
    let (a0, b0) = (a, b);
    loop {
        let m = 0.5 * (a + b);
        let Some(fm) = shot(m).finite() else { return Err((a0, b0)) };
        if fm.abs() <= tol {
            return Ok(m);
        }
        if m <= a || m >= b {
            return Err((a0, b0));
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
}

/// A dumbbell standing wave found by shooting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StandingWave {
    pub shot: ShotResult,
    /// Index of the wave obtained by swapping the loops; equal to its own index for symmetric waves.
    pub mirror: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WaveScan {
    pub lambda: f64,
    pub half_length: f64,
    pub scan: RootScan,
    pub waves: Vec<StandingWave>,
}

/// All roots of `f(q)` in the window, reconstructed on a dumbbell grid with the given intervals.
pub fn find_standing_waves(lambda: f64, half_length: f64, settings: &ScanSettings, intervals: [usize; 3]) -> Result<WaveScan> {
    check_inputs(0.0, lambda, half_length)?;
    let scan = scan_roots(&|q| shot_value(q, lambda, half_length), settings)?;
    let shots: Vec<ShotResult> = with_thread_cap(|| {
        scan.roots.par_iter().map(|&q| shoot_sampled(q, lambda, half_length, intervals)).collect::<Result<Vec<_>>>()
    })?;
    let pair_tol = 1e-7 * shots.iter().map(|s| s.q.abs()).fold(1.0, f64::max);
    let waves = shots
        .iter()
        .map(|s| StandingWave {
            shot: s.clone(),
            mirror: shots.iter().position(|t| (t.q - s.far_centre).abs() <= pair_tol),
        })
        .collect();
    Ok(WaveScan { lambda, half_length, scan, waves })
}

/// Outcome of projecting an exact solution onto a finite-difference grid and polishing it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FdCheck {
    pub state: Vec<f64>,
    pub residual: f64,
    /// Residual of the unpolished projection (the truncation error of the scheme).
    pub projected_residual: f64,
    /// Largest change made by polishing.
    pub gap: f64,
    pub power: f64,
}

/// Project `f` (sampled on the grid of `sys`) and solve `F = 0` at fixed `lambda` from it.
pub fn fd_verify(sys: &DiscreteSystem, f: &GraphFunction, lambda: f64) -> Result<FdCheck> {
    let x0 = sys.from_function(f)?;
    let projected_residual = sys.residual_norm(&x0, lambda)?;
    let state = sys.newton(&x0, lambda, POLISH_TOL, 30)?;
    let residual = norm_inf(&sys.residual(&state, lambda)?);
    let gap = state.iter().zip(&x0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let power = sys.power(&state);
    Ok(FdCheck { state, residual, projected_residual, gap, power })
}

/// Grid spacing used and the check obtained by [`fd_verify_refining`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RefinedCheck {
    pub h: f64,
    pub check: FdCheck,
}

/// [`fd_verify`] on `graph` at spacing `h0`, halving it up to `halvings` times while Newton fails.
/// Near singular points of the full system the discrete solution can sit outside the Newton
/// basin of the projection on a coarse grid. `sample` builds the profile for given edge intervals.
pub fn fd_verify_refining(
    graph: &MetricGraph,
    h0: f64,
    halvings: usize,
    lambda: f64,
    sample: impl Fn(&[usize]) -> Result<GraphFunction>,
) -> Result<RefinedCheck> {
    let mut h = h0;
    let mut last = None;
    for _ in 0..=halvings {
        let sys = DiscreteSystem::new(graph, h)?;
        let f = sample(&sys.intervals())?;
        match fd_verify(&sys, &f, lambda) {
            Ok(check) => return Ok(RefinedCheck { h, check }),
            Err(e @ (Error::NewtonDiverged { .. } | Error::Singular(_))) => last = Some(e),
            Err(e) => return Err(e),
        }
        h *= 0.5;
    }
    Err(last.expect("at least one attempt"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_and_zero_shots_vanish() {
        for lambda in [-0.3, -1.0, -2.5] {
            let c = (-lambda / 2.0f64).sqrt();
            assert!(shot_value(c, lambda, 2.0).finite().unwrap().abs() <= 1e-10);
        }
        assert_eq!(shot_value(0.0, -1.0, 2.0), ShotValue::Finite(0.0));
    }

    #[test]
    fn trajectory_honours_vertex_conditions() {
        let s = shoot_sampled(0.4, -1.0, 2.0, [64, 40, 64]).unwrap();
        let t = &s.trajectory.edges;
        assert_eq!(t[0].values[0], t[0].values[64]);
        assert_eq!(t[1].values[0], t[0].values[64]);
        assert_eq!(t[2].values[0], t[1].values[40]);
        assert_eq!(t[2].values[0], t[2].values[64]);
        for i in 0..=64 {
            assert_eq!(t[0].values[i], t[0].values[64 - i]);
        }
        // Flux enters the bridge, so its edge energy is higher.
        assert!(s.energy_at_v1[1] > s.energy_at_v1[0]);
    }
}
