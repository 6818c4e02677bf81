//! Pseudo-arclength continuation of `F(phi, lambda) = 0` with fold and branch-point
//! detection and branch switching.
//!
//! States are `(phi, lambda)` with the inner product `sum w_i phi_i psi_i + lambda mu`,
//! `w` the trapezoid weights. Folds are sign changes of the tangent's `lambda`
//! component. Branch points are sign changes of
//! `psi = sign(det B) |mu_min(B)|`, `B = [J, F_lambda; t^T W, t_lambda]`.

use crate::discretize::DiscreteSystem;
use crate::error::{Error, Result};
use crate::graph::GraphFunction;
use crate::linalg::{dot, norm2, norm_inf, BandedLu, Bordered, SparseMatrix};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventTag {
    Start,
    Fold,
    BranchPoint,
    End,
}

impl EventTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventTag::Start => "start",
            EventTag::Fold => "fold",
            EventTag::BranchPoint => "branch_point",
            EventTag::End => "end",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "start" => Some(EventTag::Start),
            "fold" => Some(EventTag::Fold),
            "branch_point" => Some(EventTag::BranchPoint),
            "end" => Some(EventTag::End),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchPoint {
    /// Arclength along the branch.
    pub s: f64,
    pub lambda: f64,
    pub q: f64,
    /// State on the system grid; see [`DiscreteSystem::to_function`].
    pub state: Vec<f64>,
    pub tags: Vec<EventTag>,
    /// Unit tangent `(dphi, dlambda)` in the weighted norm; empty if unknown.
    pub tangent: Vec<f64>,
    /// Branch-point test function.
    pub psi: f64,
}

impl BranchPoint {
    pub fn has_tag(&self, t: EventTag) -> bool {
        self.tags.contains(&t)
    }

    pub fn solution(&self, sys: &DiscreteSystem) -> GraphFunction {
        sys.to_function(&self.state)
    }

    pub fn tangent_lambda(&self) -> f64 {
        self.tangent.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    LeftWindow,
    MaxSteps,
    ClosedLoop,
    StepTooSmall,
    NotRun,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub origin: String,
    pub points: Vec<BranchPoint>,
    pub termination: Termination,
}

impl Branch {
    pub fn events(&self) -> impl Iterator<Item = (usize, &BranchPoint)> {
        self.points
            .iter()
            .enumerate()
            .filter(|(_, p)| p.has_tag(EventTag::Fold) || p.has_tag(EventTag::BranchPoint))
    }

    /// Event indices in processing order: arclength order, except that a fold within `1e-4` in lambda of
    /// the branch point just before it is handled first.
    pub fn event_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = self.events().map(|(i, _)| i).collect();
        for k in 1..idx.len() {
            let (a, b) = (&self.points[idx[k - 1]], &self.points[idx[k]]);
            if b.has_tag(EventTag::Fold) && !a.has_tag(EventTag::Fold) && (a.lambda - b.lambda).abs() < 1e-4 {
                idx.swap(k - 1, k);
            }
        }
        idx
    }

    pub fn tagged(&self, t: EventTag) -> Vec<usize> {
        self.points.iter().enumerate().filter(|(_, p)| p.has_tag(t)).map(|(i, _)| i).collect()
    }

    /// Linear interpolation of `Q` at `lambda` along monotone segments crossing it.
    pub fn q_at_lambda(&self, lambda: f64) -> Vec<f64> {
        self.points
            .windows(2)
            .filter_map(|w| {
                let (a, b) = (&w[0], &w[1]);
                if (a.lambda - lambda) * (b.lambda - lambda) <= 0.0 && a.lambda != b.lambda {
                    let t = (lambda - a.lambda) / (b.lambda - a.lambda);
                    Some(a.q + t * (b.q - a.q))
                } else {
                    None
                }
            })
            .collect()
    }

    /// Columns `s, lambda, Q, tags`; tags are `|`-separated.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["s", "lambda", "Q", "tags"])?;
        for p in &self.points {
            let tags: Vec<&str> = p.tags.iter().map(EventTag::as_str).collect();
            wr.write_record(&[
                format!("{:.17e}", p.s),
                format!("{:.17e}", p.lambda),
                format!("{:.17e}", p.q),
                tags.join("|"),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Write `point_NNNNN.csv` snapshots into `dir`.
    pub fn write_solutions(&self, sys: &DiscreteSystem, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (i, p) in self.points.iter().enumerate() {
            let f = std::fs::File::create(dir.join(solution_file_name(i)))?;
            p.solution(sys).write_csv(std::io::BufWriter::new(f))?;
        }
        Ok(())
    }

    /// Read a branch CSV; with `solutions`, reload every state and verify its residual.
    pub fn read(csv_path: &Path, solutions: Option<(&DiscreteSystem, &Path)>, tol: f64) -> Result<Branch> {
        let mut rd = csv::Reader::from_path(csv_path)?;
        let mut points = Vec::new();
        for (i, rec) in rd.records().enumerate() {
            let rec = rec?;
            let num = |j: usize| -> Result<f64> {
                rec.get(j)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| Error::InvalidArgument(format!("bad branch row {i}")))
            };
            let tags = rec
                .get(3)
                .unwrap_or("")
                .split('|')
                .filter(|s| !s.is_empty())
                .map(|s| EventTag::parse(s).ok_or_else(|| Error::InvalidArgument(format!("unknown tag {s}"))))
                .collect::<Result<Vec<_>>>()?;
            let (s, lambda, q) = (num(0)?, num(1)?, num(2)?);
            let state = match solutions {
                Some((sys, dir)) => {
                    let f = std::fs::File::open(dir.join(solution_file_name(i)))?;
                    let x = sys.from_function(&GraphFunction::read_csv(f)?)?;
                    let r = sys.residual_norm(&x, lambda)?;
                    if r > tol {
                        return Err(Error::Numerical(format!("stored point {i} has residual {r:.3e}")));
                    }
                    x
                }
                None => Vec::new(),
            };
            points.push(BranchPoint { s, lambda, q, state, tags, tangent: Vec::new(), psi: f64::NAN });
        }
        Ok(Branch { origin: csv_path.display().to_string(), points, termination: Termination::NotRun })
    }
}

pub fn solution_file_name(i: usize) -> String {
    format!("point_{i:05}.csv")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationSettings {
    pub ds: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub max_steps: usize,
    pub newton_tol: f64,
    pub max_newton: usize,
    pub detect_events: bool,
    /// Localization tolerance for the branch-point test function.
    pub psi_tol: f64,
}

impl Default for ContinuationSettings {
    fn default() -> Self {
        Self {
            ds: 0.01,
            ds_min: 1e-5,
            ds_max: 0.1,
            lambda_min: -3.0,
            lambda_max: 0.0,
            max_steps: 20000,
            newton_tol: 1e-11,
            max_newton: 10,
            detect_events: true,
            psi_tol: 1e-8,
        }
    }
}

impl ContinuationSettings {
    pub fn validate(&self) -> Result<()> {
        let ok = self.ds_min > 0.0
            && self.ds_min <= self.ds
            && self.ds <= self.ds_max
            && self.lambda_min < self.lambda_max
            && self.newton_tol > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("inconsistent continuation settings {self:?}")))
        }
    }
}

/// Initial orientation of a continuation run.
#[derive(Debug, Clone, PartialEq)]
pub enum Orientation {
    DecreasingLambda,
    IncreasingLambda,
    /// Tangent must have positive inner product with this `(dphi, dlambda)` vector.
    Along(Vec<f64>),
}

/// Weighted inner product of two `(phi, lambda)` vectors.
fn wip(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let n = w.len();
    w.iter().zip(&a[..n]).zip(&b[..n]).map(|((w, x), y)| w * x * y).sum::<f64>() + a[n] * b[n]
}

fn wnormalize(w: &[f64], a: &mut [f64]) {
    let s = wip(w, a, a).sqrt();
    a.iter_mut().for_each(|x| *x /= s);
}

/// Jacobian data at a state, reused for tangent, corrector and test function.
struct Linearization {
    j: SparseMatrix,
    lu: BandedLu,
    f_lambda: Vec<f64>,
}

impl Linearization {
    fn at(sys: &DiscreteSystem, phi: &[f64], lambda: f64) -> Result<Self> {
        let j = sys.jacobian(phi, lambda)?;
        let lu = sys.factor(&j)?;
        Ok(Self { j, lu, f_lambda: sys.d_lambda(phi) })
    }

    fn bordered<'a>(&'a self, c: &'a [f64], d: f64) -> Bordered<'a> {
        Bordered { a: &self.j, lu: &self.lu, b: &self.f_lambda, c, d }
    }
}

/// Unit tangent at a solution, oriented to have positive overlap with `reference`.
fn tangent(sys: &DiscreteSystem, lin: &Linearization, reference: &[f64]) -> Result<Vec<f64>> {
    let w = sys.trapezoid_weights();
    let n = sys.len();
    let c: Vec<f64> = w.iter().zip(&reference[..n]).map(|(a, b)| a * b).collect();
    let (z, zl) = lin.bordered(&c, reference[n]).solve(&vec![0.0; n], 1.0)?;
    let mut t = z;
    t.push(zl);
    wnormalize(w, &mut t);
    if wip(w, &t, reference) < 0.0 {
        t.iter_mut().for_each(|x| *x = -*x);
    }
    Ok(t)
}

/// Branch-point test function and the eigenvector estimate used for warm starts.
fn test_function(sys: &DiscreteSystem, lin: &Linearization, t: &[f64], warm: Option<&[f64]>) -> Result<(f64, Vec<f64>)> {
    let w = sys.trapezoid_weights();
    let n = sys.len();
    let c: Vec<f64> = w.iter().zip(&t[..n]).map(|(a, b)| a * b).collect();
    let b = lin.bordered(&c, t[n]);
    let sign = b.det_sign();
    let mut x: Vec<f64> = match warm {
        Some(v) if v.len() == n + 1 => v.to_vec(),
        _ => (0..=n).map(|i| 1.0 + ((i * 37 % 101) as f64) / 101.0).collect(),
    };
    let s = norm2(&x);
    x.iter_mut().for_each(|v| *v /= s);
    let mut mu = f64::INFINITY;
    for _ in 0..8 {
        let (y, yl) = b.solve(&x[..n], x[n])?;
        let mut y = y;
        y.push(yl);
        let ny = norm2(&y);
        if !(ny.is_finite()) || ny == 0.0 {
            return Ok((0.0, x));
        }
        let new_mu = 1.0 / ny;
        y.iter_mut().for_each(|v| *v /= ny);
        let converged = (new_mu - mu).abs() <= 1e-10 * new_mu.max(1e-300);
        mu = new_mu;
        x = y;
        if converged {
            break;
        }
    }
    Ok((sign * mu, x))
}

/// Branch-point test function at a solution with tangent `t`: `(psi, sign det B, |mu_min|)`.
pub fn test_function_at(sys: &DiscreteSystem, state: &[f64], lambda: f64, t: &[f64]) -> Result<(f64, f64, f64)> {
    let lin = Linearization::at(sys, state, lambda)?;
    let n = sys.len();
    let w = sys.trapezoid_weights();
    let c: Vec<f64> = w.iter().zip(&t[..n]).map(|(a, b)| a * b).collect();
    let sign = lin.bordered(&c, t[n]).det_sign();
    let (psi, _) = test_function(sys, &lin, t, None)?;
    Ok((psi, sign, psi.abs()))
}

struct Corrected {
    phi: Vec<f64>,
    lambda: f64,
    iterations: usize,
    lin: Linearization,
}

/// Newton on `[F(u); <t, u - u_p>_W] = 0`.
fn correct(
    sys: &DiscreteSystem,
    phi_p: &[f64],
    lambda_p: f64,
    t: &[f64],
    settings: &ContinuationSettings,
) -> Result<Corrected> {
    let w = sys.trapezoid_weights();
    let n = sys.len();
    let c: Vec<f64> = w.iter().zip(&t[..n]).map(|(a, b)| a * b).collect();
    let mut phi = phi_p.to_vec();
    let mut lambda = lambda_p;
    let mut last = f64::INFINITY;
    let cap = 4 * settings.max_newton;
    for it in 0..=cap {
        let f = sys.residual(&phi, lambda)?;
        let g = dot(&c, &phi.iter().zip(phi_p).map(|(a, b)| a - b).collect::<Vec<_>>()) + t[n] * (lambda - lambda_p);
        let r = norm_inf(&f);
        if r <= settings.newton_tol && g.abs() <= 1e-9 {
            let lin = Linearization::at(sys, &phi, lambda)?;
            return Ok(Corrected { phi, lambda, iterations: it, lin });
        }
        // Past the nominal budget, keep going only while a nearly singular system still converges linearly.
        let linear_tail = r < 1e-7 && r < 0.7 * last;
        if it == cap || (it >= settings.max_newton && !linear_tail) || !r.is_finite() || (it > 2 && r > 1e3 * last) {
            return Err(Error::NewtonDiverged { iterations: it, residual: r });
        }
        last = r;
        let lin = Linearization::at(sys, &phi, lambda)?;
        let (dx, dl) = lin.bordered(&c, t[n]).solve(&f, g)?;
        for (p, d) in phi.iter_mut().zip(&dx) {
            *p -= d;
        }
        lambda -= dl;
    }
    unreachable!()
}

/// Point at arclength `sigma` beyond `p` along its tangent, corrected onto the branch.
fn point_along(
    sys: &DiscreteSystem,
    p: &BranchPoint,
    sigma: f64,
    settings: &ContinuationSettings,
) -> Result<(BranchPoint, Linearization)> {
    let n = sys.len();
    let t = &p.tangent;
    let phi_p: Vec<f64> = p.state.iter().zip(&t[..n]).map(|(a, b)| a + sigma * b).collect();
    let lambda_p = p.lambda + sigma * t[n];
    let c = correct(sys, &phi_p, lambda_p, t, settings)?;
    let tan = tangent(sys, &c.lin, t)?;
    let q = sys.power(&c.phi);
    Ok((
        BranchPoint { s: p.s + sigma, lambda: c.lambda, q, state: c.phi, tags: vec![], tangent: tan, psi: f64::NAN },
        c.lin,
    ))
}

/// Constant solution `sqrt(-lambda / 2)` for `lambda < 0`.
pub fn constant_seed(sys: &DiscreteSystem, lambda: f64) -> Result<BranchPoint> {
    if !(lambda < 0.0) {
        return Err(Error::InvalidArgument(format!("constant solutions need lambda < 0, got {lambda}")));
    }
    let state = sys.constant((-lambda / 2.0).sqrt());
    let q = sys.power(&state);
    Ok(BranchPoint { s: 0.0, lambda, q, state, tags: vec![], tangent: vec![], psi: f64::NAN })
}

/// Solve `F(phi, lambda) = 0` at fixed `lambda` from a guess and wrap it as a seed.
pub fn seed_from_guess(sys: &DiscreteSystem, guess: &[f64], lambda: f64, tol: f64) -> Result<BranchPoint> {
    let state = sys.newton(guess, lambda, tol, 30)?;
    let q = sys.power(&state);
    Ok(BranchPoint { s: 0.0, lambda, q, state, tags: vec![], tangent: vec![], psi: f64::NAN })
}

/// Run continuation and return the branch together with the error that stopped it, if any.
pub fn continue_branch_partial(
    sys: &DiscreteSystem,
    seed: &BranchPoint,
    orientation: &Orientation,
    settings: &ContinuationSettings,
) -> (Branch, Option<Error>) {
    let mut branch = Branch { origin: String::new(), points: Vec::new(), termination: Termination::NotRun };
    let err = run(sys, seed, orientation, settings, &mut branch).err();
    if matches!(err, Some(Error::StepTooSmall { .. })) {
        branch.termination = Termination::StepTooSmall;
    }
    if let Some(p) = branch.points.last_mut() {
        if !p.has_tag(EventTag::End) {
            p.tags.push(EventTag::End);
        }
    }
    (branch, err)
}

/// Pseudo-arclength continuation from `seed` inside the settings' lambda window.
pub fn continue_branch(
    sys: &DiscreteSystem,
    seed: &BranchPoint,
    orientation: &Orientation,
    settings: &ContinuationSettings,
) -> Result<Branch> {
    match continue_branch_partial(sys, seed, orientation, settings) {
        (b, None) => Ok(b),
        (_, Some(e)) => Err(e),
    }
}

fn run(
    sys: &DiscreteSystem,
    seed: &BranchPoint,
    orientation: &Orientation,
    settings: &ContinuationSettings,
    branch: &mut Branch,
) -> Result<()> {
    settings.validate()?;
    let n = sys.len();
    if seed.state.len() != n {
        return Err(Error::InvalidArgument("seed does not match the system grid".into()));
    }
    let r0 = sys.residual_norm(&seed.state, seed.lambda)?;
    let first = if r0 > settings.newton_tol {
        seed_from_guess(sys, &seed.state, seed.lambda, settings.newton_tol)?
    } else {
        seed.clone()
    };
    let w = sys.trapezoid_weights();
    let reference: Vec<f64> = match orientation {
        Orientation::DecreasingLambda | Orientation::IncreasingLambda => {
            let mut r = vec![0.0; n + 1];
            r[n] = if matches!(orientation, Orientation::DecreasingLambda) { -1.0 } else { 1.0 };
            r
        }
        Orientation::Along(v) => {
            if v.len() != n + 1 {
                return Err(Error::InvalidArgument("orientation vector has wrong length".into()));
            }
            v.clone()
        }
    };
    let lin = Linearization::at(sys, &first.state, first.lambda)?;
    let mut p0 = first;
    p0.tangent = tangent(sys, &lin, &reference)?;
    let (psi0, mut eigvec) = test_function(sys, &lin, &p0.tangent, None)?;
    p0.psi = psi0;
    p0.s = 0.0;
    p0.q = sys.power(&p0.state);
    if !p0.has_tag(EventTag::Start) {
        p0.tags.insert(0, EventTag::Start);
    }
    branch.points.push(p0);

    let in_window = |l: f64| l >= settings.lambda_min && l <= settings.lambda_max;
    let mut ds = settings.ds;
    let mut easy = 0usize;
    for _step in 0..settings.max_steps {
        let prev = branch.points.last().unwrap().clone();
        let attempt = (|| -> Result<(BranchPoint, Linearization, usize)> {
            let t = &prev.tangent;
            let phi_p: Vec<f64> = prev.state.iter().zip(&t[..n]).map(|(a, b)| a + ds * b).collect();
            let lambda_p = prev.lambda + ds * t[n];
            let c = correct(sys, &phi_p, lambda_p, t, settings)?;
            let tan = tangent(sys, &c.lin, t)?;
            if wip(w, &tan, t) < 0.8 {
                return Err(Error::Numerical("tangent turned too sharply".into()));
            }
            let q = sys.power(&c.phi);
            let iters = c.iterations;
            Ok((
                BranchPoint { s: prev.s + ds, lambda: c.lambda, q, state: c.phi, tags: vec![], tangent: tan, psi: f64::NAN },
                c.lin,
                iters,
            ))
        })();
        let (mut next, lin, iters) = match attempt {
            Ok(v) => v,
            Err(_) => {
                ds *= 0.5;
                easy = 0;
                if ds < settings.ds_min {
                    return Err(Error::StepTooSmall { ds_min: settings.ds_min, lambda: prev.lambda });
                }
                continue;
            }
        };
        let (psi, ev) = test_function(sys, &lin, &next.tangent, Some(&eigvec))?;
        next.psi = psi;
        eigvec = ev;

        if settings.detect_events {
            let mut inserted: Vec<BranchPoint> = Vec::new();
            if prev.tangent_lambda() * next.tangent_lambda() < 0.0 {
                if let Ok(f) = locate_fold(sys, branch, &prev, &next, settings) {
                    inserted.push(f);
                }
            }
            if prev.psi * next.psi < 0.0 {
                if let Ok(b) = locate_branch_point(sys, &prev, &next, settings) {
                    inserted.push(b);
                }
            }
            inserted.sort_by(|a, b| a.s.total_cmp(&b.s));
            for p in inserted {
                if in_window(p.lambda) {
                    branch.points.push(p);
                }
            }
        }

        if !in_window(next.lambda) {
            branch.termination = Termination::LeftWindow;
            return Ok(());
        }
        let start = &branch.points[0];
        let back_home = branch.points.len() > 10 && {
            let d: Vec<f64> = next.state.iter().zip(&start.state).map(|(a, b)| a - b).collect();
            let mut dv = d;
            dv.push(next.lambda - start.lambda);
            wip(w, &dv, &dv).sqrt() < 0.5 * ds && wip(w, &next.tangent, &start.tangent) > 0.0
        };
        branch.points.push(next);
        if back_home {
            branch.termination = Termination::ClosedLoop;
            return Ok(());
        }
        if iters <= 3 {
            easy += 1;
            if easy >= 3 {
                ds = (ds * 1.3).min(settings.ds_max);
                easy = 0;
            }
        } else {
            easy = 0;
        }
    }
    branch.termination = Termination::MaxSteps;
    Ok(())
}

fn locate_fold(
    sys: &DiscreteSystem,
    branch: &Branch,
    prev: &BranchPoint,
    next: &BranchPoint,
    settings: &ContinuationSettings,
) -> Result<BranchPoint> {
    // Quadratic through the last three points in (s, lambda); fall back to the tangent data.
    let n = branch.points.len();
    let sigma = if n >= 2 {
        let a = &branch.points[n - 2];
        let (s0, s1, s2) = (a.s, prev.s, next.s);
        let (l0, l1, l2) = (a.lambda, prev.lambda, next.lambda);
        let d01 = (l1 - l0) / (s1 - s0);
        let d12 = (l2 - l1) / (s2 - s1);
        let c2 = (d12 - d01) / (s2 - s0);
        let c1 = d01 - c2 * (s0 + s1);
        let s_star = -c1 / (2.0 * c2);
        if c2 != 0.0 && s_star > s1 && s_star < s2 { s_star - s1 } else { fold_from_tangents(prev, next) }
    } else {
        fold_from_tangents(prev, next)
    };
    // Refine by bisection on the sign of the tangent's lambda component.
    let (mut lo, mut hi) = (0.0, next.s - prev.s);
    let mut best = point_along(sys, prev, sigma, settings)?.0;
    for _ in 0..40 {
        if hi - lo < 1e-9 {
            break;
        }
        let tl = best.tangent_lambda();
        let here = best.s - prev.s;
        if tl == 0.0 {
            break;
        }
        if tl * prev.tangent_lambda() > 0.0 {
            lo = here;
        } else {
            hi = here;
        }
        let mid = 0.5 * (lo + hi);
        best = point_along(sys, prev, mid, settings)?.0;
    }
    let lin = Linearization::at(sys, &best.state, best.lambda)?;
    best.psi = test_function(sys, &lin, &best.tangent, None)?.0;
    best.tags.push(EventTag::Fold);
    Ok(best)
}

fn fold_from_tangents(prev: &BranchPoint, next: &BranchPoint) -> f64 {
    let (a, b) = (prev.tangent_lambda(), next.tangent_lambda());
    (next.s - prev.s) * a / (a - b)
}

fn blend_tangent(sys: &DiscreteSystem, a: &[f64], b: &[f64], theta: f64) -> Vec<f64> {
    let mut t: Vec<f64> = a.iter().zip(b).map(|(x, y)| (1.0 - theta) * x + theta * y).collect();
    wnormalize(sys.trapezoid_weights(), &mut t);
    t
}

fn locate_branch_point(
    sys: &DiscreteSystem,
    prev: &BranchPoint,
    next: &BranchPoint,
    settings: &ContinuationSettings,
) -> Result<BranchPoint> {
    let width = next.s - prev.s;
    let (mut lo, mut hi) = (0.0, width);
    let (mut flo, mut fhi) = (prev.psi, next.psi);
    // The bordered solve has a noise floor near a singular Jacobian; accept anything well below the bracket ends.
    let accept = settings.psi_tol.max(1e-5 * flo.abs().min(fhi.abs()));
    let mut side = 0i32;
    let mut best: Option<BranchPoint> = None;
    let mut warm: Option<Vec<f64>> = None;
    let mut failures = 0;
    for _ in 0..80 {
        // Illinois variant of regula falsi, bisecting after a failed correction.
        let mut sigma = lo - flo * (hi - lo) / (fhi - flo);
        if failures > 0 || !(sigma > lo && sigma < hi) {
            sigma = 0.5 * (lo + hi);
        }
        // Predicting from a fixed end keeps every corrected point on the same side of the crossing geometry.
        let attempt = point_along(sys, prev, sigma, settings).or_else(|_| point_along(sys, next, sigma - width, settings));
        let (mut p, lin) = match attempt {
            Ok(v) => v,
            Err(e) => {
                failures += 1;
                if failures > 8 {
                    return Err(e);
                }
                if sigma - lo <= hi - sigma {
                    hi = sigma;
                } else {
                    lo = sigma;
                }
                continue;
            }
        };
        failures = 0;
        // The bordered tangent solve degenerates at the crossing; interpolate from the bracket instead.
        p.tangent = blend_tangent(sys, &prev.tangent, &next.tangent, sigma / width);
        let (psi, x) = test_function(sys, &lin, &p.tangent, warm.as_deref())?;
        warm = Some(x);
        p.psi = psi;
        if psi * flo > 0.0 {
            lo = sigma;
            flo = psi;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = sigma;
            fhi = psi;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
        if best.as_ref().map_or(true, |b| psi.abs() < b.psi.abs()) {
            best = Some(p);
        }
        if psi.abs() <= settings.psi_tol || hi - lo <= 1e-12 * width {
            break;
        }
    }
    let mut p = best.ok_or_else(|| Error::Numerical("branch point search failed".into()))?;
    if p.psi.abs() > accept {
        return Err(Error::Numerical(format!("branch point not resolved: |psi| = {:.3e}", p.psi.abs())));
    }
    p.tags.push(EventTag::BranchPoint);
    Ok(p)
}

/// Null vector of the bordered matrix at a branch point, with the two smallest eigenvalue magnitudes.
fn bordered_null_vector(sys: &DiscreteSystem, p: &BranchPoint) -> Result<(Vec<f64>, f64, f64)> {
    let n = sys.len();
    let lin = Linearization::at(sys, &p.state, p.lambda)?;
    let w = sys.trapezoid_weights();
    let c: Vec<f64> = w.iter().zip(&p.tangent[..n]).map(|(a, b)| a * b).collect();
    let b = lin.bordered(&c, p.tangent[n]);
    // Block inverse iteration with two vectors for the kernel dimension check.
    let mut v1: Vec<f64> = (0..=n).map(|i| 1.0 + ((i * 37 % 101) as f64) / 101.0).collect();
    let mut v2: Vec<f64> = (0..=n).map(|i| ((i * 53 % 97) as f64) / 97.0 - 0.5).collect();
    let (mut mu1, mut mu2) = (0.0, 0.0);
    for _ in 0..12 {
        let (y1, l1) = b.solve(&v1[..n], v1[n])?;
        let (y2, l2) = b.solve(&v2[..n], v2[n])?;
        let mut y1 = y1;
        y1.push(l1);
        let mut y2 = y2;
        y2.push(l2);
        let n1 = norm2(&y1);
        y1.iter_mut().for_each(|x| *x /= n1);
        let pr = dot(&y1, &y2);
        y2.iter_mut().zip(&y1).for_each(|(a, b)| *a -= pr * b);
        let n2 = norm2(&y2);
        y2.iter_mut().for_each(|x| *x /= n2);
        mu1 = 1.0 / n1;
        mu2 = 1.0 / n2;
        v1 = y1;
        v2 = y2;
    }
    Ok((v1, mu1, mu2))
}

/// Seed for a bifurcating branch.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchSeed {
    pub point: BranchPoint,
    /// Orientation pointing away from the branch point.
    pub direction: Vec<f64>,
}

/// Seeds on the branches crossing at a located branch point: `u0 +- delta t2`, corrected
/// on the hyperplane orthogonal to `t2`, where `t2` spans the extra kernel direction.
pub fn switch_branch(sys: &DiscreteSystem, bp: &BranchPoint, settings: &ContinuationSettings) -> Result<Vec<SwitchSeed>> {
    let n = sys.len();
    if bp.tangent.len() != n + 1 {
        return Err(Error::InvalidArgument("branch point carries no tangent".into()));
    }
    let (v, mu1, mu2) = bordered_null_vector(sys, bp)?;
    let scale = crate::linalg::norm_inf(&sys.laplacian().matvec(&vec![1.0; n])).max(1.0 / sys.h_max().powi(2));
    if mu1 > 1e-6 * scale {
        return Err(Error::NoSolution(format!("not a branch point: smallest eigenvalue {mu1:.3e}")));
    }
    if mu2 <= 1e-6 * scale {
        return Err(Error::KernelDimension { dim: 2 });
    }
    let w = sys.trapezoid_weights();
    let t1 = &bp.tangent;
    let mut t2 = v;
    let pr = wip(w, &t2, t1);
    t2.iter_mut().zip(t1).for_each(|(a, b)| *a -= pr * b);
    wnormalize(w, &mut t2);
    let phi_norm = sys.power(&bp.state).sqrt();
    let delta = if phi_norm > 0.0 { 1e-2 * phi_norm } else { 1e-2 };
    let mut seeds = Vec::new();
    for sign in [1.0, -1.0] {
        let dir: Vec<f64> = t2.iter().map(|x| sign * x).collect();
        let phi_p: Vec<f64> = bp.state.iter().zip(&dir[..n]).map(|(a, b)| a + delta * b).collect();
        let lambda_p = bp.lambda + delta * dir[n];
        let c = correct(sys, &phi_p, lambda_p, &dir, settings)?;
        let q = sys.power(&c.phi);
        seeds.push(SwitchSeed {
            point: BranchPoint { s: 0.0, lambda: c.lambda, q, state: c.phi, tags: vec![], tangent: vec![], psi: f64::NAN },
            direction: dir,
        });
    }
    Ok(seeds)
}

/// Continue both halves of the branch crossing at `bp` until they leave the window.
pub fn switch_and_continue(
    sys: &DiscreteSystem,
    bp: &BranchPoint,
    settings: &ContinuationSettings,
) -> Result<Vec<Branch>> {
    switch_branch(sys, bp, settings)?
        .into_iter()
        .map(|s| {
            let mut b = continue_branch(sys, &s.point, &Orientation::Along(s.direction.clone()), settings)?;
            b.origin = format!("switched at lambda = {:.10}", bp.lambda);
            Ok(b)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_dumbbell;
    use crate::spectrum::{find_modes, ModeFamily};

    #[test]
    fn constant_branch_power_and_events() {
        let g = build_dumbbell(2.0).unwrap();
        let sys = DiscreteSystem::new(&g, 0.1).unwrap();
        let settings = ContinuationSettings { lambda_min: -1.0, ..Default::default() };
        let seed = constant_seed(&sys, -0.01).unwrap();
        let b = continue_branch(&sys, &seed, &Orientation::DecreasingLambda, &settings).unwrap();
        for p in &b.points {
            let expect = (4.0 * std::f64::consts::PI + 4.0) * (-p.lambda / 2.0);
            assert!((p.q - expect).abs() < 1e-9);
            assert!(sys.residual_norm(&p.state, p.lambda).unwrap() <= 1e-10);
        }
        let modes = find_modes(2.0, 3.0).unwrap();
        let om = modes.first(ModeFamily::Odd).unwrap();
        let ev = modes.first(ModeFamily::Even).unwrap();
        let bps: Vec<f64> = b.tagged(EventTag::BranchPoint).iter().map(|&i| b.points[i].lambda).collect();
        let h = sys.h_max();
        assert!(bps.iter().any(|l| (l + om * om / 2.0).abs() < 5.0 * h * h), "{bps:?}");
        assert!(bps.iter().any(|l| (l + ev * ev / 2.0).abs() < 5.0 * h * h), "{bps:?}");
        assert!(b.tagged(EventTag::Fold).is_empty());
    }
}
