//! Dumbbell solutions with one incomplete and one complete loop. The bridge ends with zero
//! slope at the complete loop, so the rest is a lollipop standing wave with a Neumann leaf; it
//! extends to the dumbbell whenever a quantized loop wave can take the leaf value.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{lollipop_trajectory, lollipop_value, scan_roots, with_thread_cap, ScanSettings, ShotValue};
use crate::elliptic::{quantize_loop, EllipticWave, WaveKind};
use crate::error::{Error, Result};
use crate::graph::{EdgeSamples, GraphFunction};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HybridSettings {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Loop-centre values are searched in `(q_min, q_max]`.
    pub q_min: f64,
    pub q_max: f64,
    /// Number of lambda levels scanned for curve seeds.
    pub seed_levels: usize,
    pub seed_grid: usize,
    pub ds: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    pub max_points: usize,
}

impl Default for HybridSettings {
    fn default() -> Self {
        Self {
            lambda_min: -2.0,
            lambda_max: 0.8,
            q_min: 1e-3,
            q_max: 1.8,
            seed_levels: 9,
            seed_grid: 600,
            ds: 0.01,
            ds_min: 1e-5,
            ds_max: 0.03,
            max_points: 20_000,
        }
    }
}

impl HybridSettings {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lambda_min < self.lambda_max
            && self.lambda_min.is_finite()
            && self.lambda_max.is_finite()
            && self.q_min > 0.0
            && self.q_max > self.q_min
            && self.seed_levels >= 1
            && self.seed_grid >= 2
            && 0.0 < self.ds_min
            && self.ds_min <= self.ds
            && self.ds <= self.ds_max;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid hybrid settings {self:?}")))
        }
    }
}

/// A point on a curve of lollipop standing waves in the `(q, lambda)` plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LollipopPoint {
    pub lambda: f64,
    pub q: f64,
    /// `phi_2(v_2)`, the value at the leaf.
    pub leaf: f64,
}

/// Why a traced curve stops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveEnd {
    /// Left the lambda or q window.
    Window,
    /// Reached the zero or the constant solution.
    Trivial,
    /// Returned to its starting point.
    Closed,
    /// The corrector failed or the point budget ran out.
    Stalled,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LollipopCurve {
    pub points: Vec<LollipopPoint>,
    pub ends: [CurveEnd; 2],
}

/// A quantized loop wave: `n` periods of cn or dn on the `2 pi` loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopWave {
    pub kind: WaveKind,
    pub n: u32,
}

impl LoopWave {
    /// Signed distance of `|v|` to the boundary of the admissible band (`|v| <= alpha` for cn,
    /// `k' a <= |v| <= a` for dn), positive inside. Continuous through the existence threshold.
    pub fn margin(&self, lambda: f64, v: f64) -> f64 {
        let v = v.abs();
        match (self.kind, quantize_loop(lambda, self.n, self.kind)) {
            (WaveKind::Cn, Some(w)) => w.amplitude - v,
            (WaveKind::Dn, Some(w)) => {
                let (lo, hi) = w.value_range();
                (v - lo).min(hi - v)
            }
            (WaveKind::Cn, None) => -v,
            (WaveKind::Dn, None) if lambda < 0.0 => -(v - (-lambda / 2.0).sqrt()).abs(),
            (WaveKind::Dn, None) => -v.max(1e-300),
        }
    }

    /// The loop wave taking the value `v` at `±pi`, as a wave and a sign.
    pub fn fitted(&self, lambda: f64, v: f64) -> Result<(EllipticWave, f64)> {
        let w = quantize_loop(lambda, self.n, self.kind)
            .ok_or_else(|| Error::NoSolution(format!("no {:?} wave with {} periods at lambda = {lambda}", self.kind, self.n)))?;
        let (lo, hi) = w.value_range();
        let (target, sign) = match self.kind {
            WaveKind::Cn => (v, 1.0),
            WaveKind::Dn => (v.abs(), if v < 0.0 { -1.0 } else { 1.0 }),
        };
        Ok((w.with_value_at(PI, target.clamp(lo, hi), false)?, sign))
    }
}

/// A family of hybrid dumbbell solutions: a stretch of a lollipop curve on which one loop wave fits.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HybridBranch {
    pub curve: usize,
    pub wave: LoopWave,
    pub points: Vec<HybridPoint>,
    /// Saddle-node points where the curve leaves the admissible band, at the start and the end.
    pub folds: [Option<LollipopPoint>; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridPoint {
    pub lambda: f64,
    pub q: f64,
    pub leaf: f64,
    /// Power of the stitched dumbbell solution.
    pub power: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HybridReport {
    pub curves: Vec<LollipopCurve>,
    pub branches: Vec<HybridBranch>,
}

/// Lollipop shooting function and its gradient in `(q, lambda)` by central differences.
fn g_and_grad(q: f64, lambda: f64, half_length: f64) -> Option<(f64, [f64; 2], f64)> {
    let val = |q: f64, l: f64| match lollipop_value(q, l, half_length) {
        (ShotValue::Finite(g), leaf) => Some((g, leaf)),
        _ => None,
    };
    let (g, leaf) = val(q, lambda)?;
    let d = 1e-6;
    let gq = (val(q + d, lambda)?.0 - val(q - d, lambda)?.0) / (2.0 * d);
    let gl = (val(q, lambda + d)?.0 - val(q, lambda - d)?.0) / (2.0 * d);
    Some((g, [gq, gl], leaf))
}

/// Gauss–Newton projection onto `g = 0` along the gradient.
fn correct(z: [f64; 2], half_length: f64) -> Option<([f64; 2], [f64; 2], f64)> {
    let mut z = z;
    for _ in 0..12 {
        let (g, grad, leaf) = g_and_grad(z[0], z[1], half_length)?;
        let n2 = grad[0] * grad[0] + grad[1] * grad[1];
        if !(n2 > 0.0) {
            return None;
        }
        if g.abs() <= 1e-11 {
            return Some((z, grad, leaf));
        }
        z = [z[0] - g * grad[0] / n2, z[1] - g * grad[1] / n2];
    }
    None
}

fn constant_q(lambda: f64) -> f64 {
    if lambda < 0.0 {
        (-lambda / 2.0).sqrt()
    } else {
        f64::NAN
    }
}

fn trivial(z: [f64; 2], s: &HybridSettings) -> bool {
    z[0] < s.q_min || (z[0] - constant_q(z[1])).abs() <= 1e-7
}

fn outside(z: [f64; 2], s: &HybridSettings) -> bool {
    z[1] < s.lambda_min || z[1] > s.lambda_max || z[0] > s.q_max
}

/// Follow the curve `g = 0` from a corrected point in one tangent direction.
fn trace_one_way(start: [f64; 2], grad0: [f64; 2], dir: f64, half_length: f64, s: &HybridSettings) -> (Vec<LollipopPoint>, CurveEnd) {
    let mut pts = Vec::new();
    let mut z = start;
    let norm = |v: [f64; 2]| (v[0] * v[0] + v[1] * v[1]).sqrt();
    let mut t = {
        let n = norm(grad0);
        [-dir * grad0[1] / n, dir * grad0[0] / n]
    };
    let mut ds = s.ds;
    let mut travelled = 0.0;
    while pts.len() < s.max_points {
        let pred = [z[0] + ds * t[0], z[1] + ds * t[1]];
        match correct(pred, half_length) {
            Some((zn, grad, leaf)) if norm([zn[0] - pred[0], zn[1] - pred[1]]) <= 0.5 * ds => {
                let n = norm(grad);
                let mut tn = [-grad[1] / n, grad[0] / n];
                if tn[0] * t[0] + tn[1] * t[1] < 0.0 {
                    tn = [-tn[0], -tn[1]];
                }
                travelled += norm([zn[0] - z[0], zn[1] - z[1]]);
                z = zn;
                t = tn;
                if outside(z, s) {
                    return (pts, CurveEnd::Window);
                }
                if trivial(z, s) {
                    return (pts, CurveEnd::Trivial);
                }
                pts.push(LollipopPoint { lambda: z[1], q: z[0], leaf });
                if travelled > 4.0 * s.ds_max && norm([z[0] - start[0], z[1] - start[1]]) < 0.5 * ds {
                    return (pts, CurveEnd::Closed);
                }
                ds = (ds * 1.3).min(s.ds_max);
            }
            _ => {
                ds *= 0.5;
                if ds < s.ds_min {
                    return (pts, CurveEnd::Stalled);
                }
            }
        }
    }
    (pts, CurveEnd::Stalled)
}

fn near_curve(z: [f64; 2], curves: &[LollipopCurve], tol: f64) -> bool {
    curves.iter().any(|c| {
        c.points.windows(2).any(|w| {
            let (a, b) = ([w[0].q, w[0].lambda], [w[1].q, w[1].lambda]);
            let d = [b[0] - a[0], b[1] - a[1]];
            let l2 = d[0] * d[0] + d[1] * d[1];
            let u = if l2 > 0.0 { (((z[0] - a[0]) * d[0] + (z[1] - a[1]) * d[1]) / l2).clamp(0.0, 1.0) } else { 0.0 };
            let p = [a[0] + u * d[0] - z[0], a[1] + u * d[1] - z[1]];
            (p[0] * p[0] + p[1] * p[1]).sqrt() <= tol
        }) || c.points.iter().any(|p| ((p.q - z[0]).powi(2) + (p.lambda - z[1]).powi(2)).sqrt() <= tol)
    })
}

/// Curves of nontrivial lollipop standing waves with `q > 0` crossing the window.
pub fn lollipop_curves(half_length: f64, settings: &HybridSettings) -> Result<Vec<LollipopCurve>> {
    settings.validate()?;
    let levels: Vec<f64> = if settings.seed_levels == 1 {
        vec![0.5 * (settings.lambda_min + settings.lambda_max)]
    } else {
        let span = settings.lambda_max - settings.lambda_min;
        // Keep the levels off the window edges.
        (0..settings.seed_levels)
            .map(|i| settings.lambda_min + span * (i as f64 + 0.5) / settings.seed_levels as f64)
            .collect()
    };
    let scan = ScanSettings { q_min: settings.q_min, q_max: settings.q_max, grid: settings.seed_grid, root_tol: 1e-11 };
    let mut seeds: Vec<[f64; 2]> = Vec::new();
    for &lambda in &levels {
        let roots = scan_roots(&|q| lollipop_value(q, lambda, half_length).0, &scan)?;
        seeds.extend(roots.roots.iter().filter(|&&q| (q - constant_q(lambda)).abs() > 1e-6).map(|&q| [q, lambda]));
    }
    let mut curves: Vec<LollipopCurve> = Vec::new();
    for seed in seeds {
        if near_curve(seed, &curves, 2.0 * settings.ds_max) {
            continue;
        }
        let Some((z0, grad0, leaf0)) = correct(seed, half_length) else { continue };
        let (halves, ends): (Vec<_>, Vec<_>) = with_thread_cap(|| {
            [-1.0, 1.0].par_iter().map(|&dir| trace_one_way(z0, grad0, dir, half_length, settings)).unzip()
        });
        let mut points: Vec<LollipopPoint> = halves[0].iter().rev().copied().collect();
        points.push(LollipopPoint { lambda: z0[1], q: z0[0], leaf: leaf0 });
        if ends[1] == CurveEnd::Closed {
            points.extend(halves[1].iter().copied());
            curves.push(LollipopCurve { points, ends: [CurveEnd::Closed, CurveEnd::Closed] });
        } else {
            points.extend(halves[1].iter().copied());
            curves.push(LollipopCurve { points, ends: [ends[0], ends[1]] });
        }
    }
    Ok(curves)
}

/// Locate the band edge between two consecutive curve points by bisection along the chord,
/// each trial point projected back onto the curve.
fn band_edge(a: &LollipopPoint, b: &LollipopPoint, wave: LoopWave, half_length: f64) -> Option<LollipopPoint> {
    let at = |u: f64| -> Option<(LollipopPoint, f64)> {
        let z = [a.q + u * (b.q - a.q), a.lambda + u * (b.lambda - a.lambda)];
        let (zc, _, leaf) = correct(z, half_length)?;
        let p = LollipopPoint { lambda: zc[1], q: zc[0], leaf };
        Some((p, wave.margin(p.lambda, leaf)))
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut flo = wave.margin(a.lambda, a.leaf);
    let mut best = None;
    for _ in 0..50 {
        let m = 0.5 * (lo + hi);
        let (p, fm) = at(m)?;
        best = Some(p);
        if fm == 0.0 {
            break;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = m;
            flo = fm;
        } else {
            hi = m;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    best
}

/// Power of a lollipop trajectory plus `n` periods of the fitted loop wave.
fn hybrid_power(p: &LollipopPoint, wave: LoopWave, half_length: f64) -> Result<f64> {
    let f = stitch(p, wave, half_length, [1256, (2.0 * half_length / 0.005).ceil() as usize, 1256])?;
    Ok(f.integrate(|v| v * v))
}

/// The dumbbell solution built from a lollipop point and a fitted loop wave on the right loop.
pub fn stitch(p: &LollipopPoint, wave: LoopWave, half_length: f64, intervals: [usize; 3]) -> Result<GraphFunction> {
    let (lolli, _) = lollipop_trajectory(p.q, p.lambda, half_length, [intervals[0], intervals[1]])?;
    let (w, sign) = wave.fitted(p.lambda, p.leaf)?;
    let h = 2.0 * PI / intervals[2] as f64;
    let right = EdgeSamples { start: -PI, h, values: (0..=intervals[2]).map(|i| sign * w.value(-PI + h * i as f64)).collect() };
    let mut edges = lolli.edges;
    // The leaf value is shared exactly with the loop.
    let leaf = *edges[1].values.last().expect("stem has samples");
    edges.push(right);
    let n = edges[2].values.len();
    edges[2].values[0] = leaf;
    edges[2].values[n - 1] = leaf;
    Ok(GraphFunction { edges })
}

/// Hybrid dumbbell families over the window for loop waves with up to `n_max` periods.
pub fn hybrid_waves(half_length: f64, n_max: u32, settings: &HybridSettings) -> Result<HybridReport> {
    let curves = lollipop_curves(half_length, settings)?;
    let waves: Vec<LoopWave> = (1..=n_max)
        .flat_map(|n| [LoopWave { kind: WaveKind::Cn, n }, LoopWave { kind: WaveKind::Dn, n }])
        .collect();
    let mut jobs = Vec::new();
    for (ci, c) in curves.iter().enumerate() {
        for &w in &waves {
            jobs.push((ci, w, c));
        }
    }
    let per_job: Vec<Result<Vec<HybridBranch>>> =
        with_thread_cap(|| jobs.par_iter().map(|&(ci, w, c)| admissible_runs(ci, c, w, half_length)).collect());
    let mut branches = Vec::new();
    for b in per_job {
        branches.extend(b?);
    }
    Ok(HybridReport { curves, branches })
}

fn admissible_runs(ci: usize, curve: &LollipopCurve, wave: LoopWave, half_length: f64) -> Result<Vec<HybridBranch>> {
    let margins: Vec<f64> = curve.points.iter().map(|p| wave.margin(p.lambda, p.leaf)).collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < curve.points.len() {
        if margins[i] <= 0.0 {
            i += 1;
            continue;
        }
        let start = i;
        while i < curve.points.len() && margins[i] > 0.0 {
            i += 1;
        }
        let end = i; // exclusive
        let first_fold = if start > 0 { band_edge(&curve.points[start - 1], &curve.points[start], wave, half_length) } else { None };
        let last_fold = if end < curve.points.len() { band_edge(&curve.points[end - 1], &curve.points[end], wave, half_length) } else { None };
        let mut points = Vec::with_capacity(end - start + 2);
        let mut push = |p: &LollipopPoint| -> Result<()> {
            points.push(HybridPoint { lambda: p.lambda, q: p.q, leaf: p.leaf, power: hybrid_power(p, wave, half_length)? });
            Ok(())
        };
        if let Some(f) = &first_fold {
            push(f)?;
        }
        for p in &curve.points[start..end] {
            push(p)?;
        }
        if let Some(f) = &last_fold {
            push(f)?;
        }
        out.push(HybridBranch { curve: ci, wave, points, folds: [first_fold, last_fold] });
    }
    Ok(out)
}
