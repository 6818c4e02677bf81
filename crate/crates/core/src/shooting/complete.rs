//! Dumbbell solutions whose loops both carry whole periods. The bridge then carries whole
//! half-periods with zero slope at both ends, and every edge is an exact elliptic wave.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::elliptic::{quantize_loop, quantize_period, EllipticWave, WaveKind};
use crate::error::{Error, Result};
use crate::graph::{EdgeSamples, GraphFunction};

/// Content of one edge: zero, the constant `sqrt(-lambda/2)`, or a number of cn or dn periods
/// (half-periods on the bridge). Written `0`, `Λ`, `n` and `-n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeLabel {
    Zero,
    Constant,
    Cn(u32),
    Dn(u32),
}

impl EdgeLabel {
    /// Ordering used to pick canonical representatives: dn, then cn, then constant, then zero.
    fn rank(&self) -> (u8, u32) {
        match *self {
            EdgeLabel::Dn(n) => (0, n),
            EdgeLabel::Cn(n) => (1, n),
            EdgeLabel::Constant => (2, 0),
            EdgeLabel::Zero => (3, 0),
        }
    }

    /// Largest lambda below which a loop (`bridge == None`) or bridge edge of this type exists.
    fn threshold(&self, lambda_star: Option<f64>) -> f64 {
        let scale = |n: u32| {
            let n2 = f64::from(n) * f64::from(n);
            lambda_star.map_or(n2, |s| n2 * s)
        };
        match *self {
            EdgeLabel::Zero => f64::INFINITY,
            EdgeLabel::Constant => 0.0,
            EdgeLabel::Cn(n) => scale(n),
            EdgeLabel::Dn(n) => -scale(n) / 2.0,
        }
    }

    fn all(max: u32) -> Vec<EdgeLabel> {
        let mut v = vec![EdgeLabel::Zero, EdgeLabel::Constant];
        v.extend((1..=max).map(EdgeLabel::Cn));
        v.extend((1..=max).map(EdgeLabel::Dn));
        v
    }
}

impl fmt::Display for EdgeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeLabel::Zero => write!(f, "0"),
            EdgeLabel::Constant => write!(f, "Λ"),
            EdgeLabel::Cn(n) => write!(f, "{n}"),
            EdgeLabel::Dn(n) => write!(f, "-{n}"),
        }
    }
}

impl FromStr for EdgeLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if matches!(s, "Λ" | "L" | "lambda") {
            return Ok(EdgeLabel::Constant);
        }
        let n: i64 = s.parse().map_err(|_| Error::InvalidArgument(format!("bad edge label {s:?}")))?;
        let m = u32::try_from(n.unsigned_abs()).map_err(|_| Error::InvalidArgument(format!("edge label {n} too large")))?;
        Ok(match n.cmp(&0) {
            Ordering::Equal => EdgeLabel::Zero,
            Ordering::Greater => EdgeLabel::Cn(m),
            Ordering::Less => EdgeLabel::Dn(m),
        })
    }
}

impl Serialize for EdgeLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for EdgeLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `(n1, m, n3)`: left loop, bridge, right loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SolutionTriple {
    pub n1: EdgeLabel,
    pub m: EdgeLabel,
    pub n3: EdgeLabel,
}

/// `(pi / 2L)^2`, the first Neumann eigenvalue scale of the bridge.
pub fn lambda_star(half_length: f64) -> f64 {
    (PI / (2.0 * half_length)).powi(2)
}

impl SolutionTriple {
    pub fn new(n1: EdgeLabel, m: EdgeLabel, n3: EdgeLabel) -> Self {
        Self { n1, m, n3 }
    }

    pub fn reversed(&self) -> Self {
        Self { n1: self.n3, m: self.m, n3: self.n1 }
    }

    /// Whether swapping the loops maps this solution type to itself up to sign. An odd number of
    /// dn half-periods on the bridge has no reflection symmetry.
    pub fn bridge_is_symmetric(&self) -> bool {
        !matches!(self.m, EdgeLabel::Dn(m) if m % 2 == 1)
    }

    /// Representative among `self` and its loop swap (when the swap is a symmetry).
    pub fn canonical(&self) -> Self {
        if self.bridge_is_symmetric() && self.n3.rank() < self.n1.rank() {
            self.reversed()
        } else {
            *self
        }
    }

    /// The existence inequalities on each edge at `lambda`.
    pub fn inequalities_hold(&self, lambda: f64, half_length: f64) -> bool {
        lambda < self.n1.threshold(None) && lambda < self.n3.threshold(None) && lambda < self.m.threshold(Some(lambda_star(half_length)))
    }

    /// Supremum of the lambda at which every edge type exists.
    pub fn birth_lambda(&self, half_length: f64) -> f64 {
        self.n1.threshold(None).min(self.n3.threshold(None)).min(self.m.threshold(Some(lambda_star(half_length))))
    }

    /// Stitch the exact edge waves together, or explain why they do not fit.
    pub fn profile(&self, lambda: f64, half_length: f64) -> Result<CompleteProfile> {
        if !self.inequalities_hold(lambda, half_length) {
            return Err(Error::NoSolution(format!("{self} does not exist at lambda = {lambda}")));
        }
        let bridge = bridge_profile(self.m, lambda, half_length)?;
        let (v1, v2) = (bridge.value(-half_length), bridge.value(half_length));
        let left = fit_loop(self.n1, lambda, v1)?;
        let right = fit_loop(self.n3, lambda, v2)?;
        Ok(CompleteProfile { triple: *self, lambda, half_length, edges: [left, bridge, right] })
    }

    pub fn materialize(&self, lambda: f64, half_length: f64, intervals: [usize; 3]) -> Result<GraphFunction> {
        Ok(self.profile(lambda, half_length)?.sample(intervals))
    }
}

impl fmt::Display for SolutionTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.n1, self.m, self.n3)
    }
}

impl FromStr for SolutionTriple {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
        let parts: Vec<&str> = inner.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::InvalidArgument(format!("triple needs three labels, got {s:?}")));
        }
        Ok(Self::new(parts[0].parse()?, parts[1].parse()?, parts[2].parse()?))
    }
}

/// One edge of a stitched solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EdgeProfile {
    Constant(f64),
    /// `sign * wave(x)`.
    Wave { wave: EllipticWave, sign: f64 },
}

impl EdgeProfile {
    pub fn value(&self, x: f64) -> f64 {
        match self {
            EdgeProfile::Constant(c) => *c,
            EdgeProfile::Wave { wave, sign } => sign * wave.value(x),
        }
    }
}

fn bridge_profile(label: EdgeLabel, lambda: f64, half_length: f64) -> Result<EdgeProfile> {
    let (m, kind) = match label {
        EdgeLabel::Zero => return Ok(EdgeProfile::Constant(0.0)),
        EdgeLabel::Constant => return Ok(EdgeProfile::Constant((-lambda / 2.0).sqrt())),
        EdgeLabel::Cn(m) => (m, WaveKind::Cn),
        EdgeLabel::Dn(m) => (m, WaveKind::Dn),
    };
    // m half-periods over the bridge, with the maximum at the left end.
    let mut wave = quantize_period(lambda, 4.0 * half_length / f64::from(m), kind)
        .ok_or_else(|| Error::NoSolution(format!("no bridge wave {label} at lambda = {lambda}")))?;
    wave.phase = -wave.wavenumber * half_length;
    Ok(EdgeProfile::Wave { wave, sign: 1.0 })
}

/// A loop wave with the vertex value `v` at both ends `±pi`.
fn fit_loop(label: EdgeLabel, lambda: f64, v: f64) -> Result<EdgeProfile> {
    let tol = 1e-12 * v.abs().max(1.0);
    let misfit = || Error::NoSolution(format!("loop {label} cannot take the vertex value {v} at lambda = {lambda}"));
    let kind = match label {
        EdgeLabel::Zero => return if v.abs() <= tol { Ok(EdgeProfile::Constant(0.0)) } else { Err(misfit()) },
        EdgeLabel::Constant => {
            let c = (-lambda / 2.0).sqrt();
            return if (v.abs() - c).abs() <= tol { Ok(EdgeProfile::Constant(v)) } else { Err(misfit()) };
        }
        EdgeLabel::Cn(_) => WaveKind::Cn,
        EdgeLabel::Dn(_) => WaveKind::Dn,
    };
    let n = match label {
        EdgeLabel::Cn(n) | EdgeLabel::Dn(n) => n,
        _ => unreachable!(),
    };
    let wave = quantize_loop(lambda, n, kind).ok_or_else(misfit)?;
    let (lo, hi) = wave.value_range();
    let target = match kind {
        WaveKind::Cn => v,
        WaveKind::Dn => v.abs(),
    };
    let sign = if kind == WaveKind::Dn && v < 0.0 { -1.0 } else { 1.0 };
    if target < lo - tol || target > hi + tol {
        return Err(misfit());
    }
    let wave = wave.with_value_at(PI, target.clamp(lo, hi), false)?;
    Ok(EdgeProfile::Wave { wave, sign })
}

/// A stitched complete-loop solution as exact edge waves.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompleteProfile {
    pub triple: SolutionTriple,
    pub lambda: f64,
    pub half_length: f64,
    pub edges: [EdgeProfile; 3],
}

impl CompleteProfile {
    pub fn vertex_values(&self) -> [f64; 2] {
        [self.edges[1].value(-self.half_length), self.edges[1].value(self.half_length)]
    }

    /// Sample on a dumbbell grid. A loop whose vertex value is zero has a free sign; it is
    /// chosen positive at the first sample where `|phi|` is largest.
    pub fn sample(&self, intervals: [usize; 3]) -> GraphFunction {
        let starts = [-PI, -self.half_length, -PI];
        let lengths = [2.0 * PI, 2.0 * self.half_length, 2.0 * PI];
        let mut edges: Vec<EdgeSamples> = (0..3)
            .map(|m| {
                let h = lengths[m] / intervals[m] as f64;
                let values = (0..=intervals[m]).map(|i| self.edges[m].value(starts[m] + h * i as f64)).collect();
                EdgeSamples { start: starts[m], h, values }
            })
            .collect();
        let vv = self.vertex_values();
        for (e, v) in [(0usize, vv[0]), (2, vv[1])] {
            if v == 0.0 {
                canonical_sign(&mut edges[e].values);
            }
        }
        GraphFunction { edges }
    }
}

fn canonical_sign(values: &mut [f64]) {
    let mut best = 0.0f64;
    let mut sign = 1.0;
    for &v in values.iter() {
        if v.abs() > best * (1.0 + 1e-12) {
            best = v.abs();
            sign = v.signum();
        }
    }
    if sign < 0.0 {
        values.iter_mut().for_each(|v| *v = -*v);
    }
}

/// Number of distinct solutions related to `f` by the dumbbell reflections, a global sign
/// change, and sign changes of single edges whose end values vanish.
pub fn orbit_size(f: &GraphFunction) -> usize {
    let scale = f.max_abs().max(1.0);
    let zero_at = |g: &GraphFunction, e: usize| {
        let vals = &g.edges[e].values;
        vals[0].abs() <= 1e-12 * scale && vals[vals.len() - 1].abs() <= 1e-12 * scale
    };
    let reverse = |g: &GraphFunction, e: usize| {
        let mut out = g.clone();
        out.edges[e].values.reverse();
        out
    };
    let negate = |g: &GraphFunction, edges: &[usize]| {
        let mut out = g.clone();
        for &e in edges {
            out.edges[e].values.iter_mut().for_each(|v| *v = -*v);
        }
        out
    };
    let swap = |g: &GraphFunction| {
        let mut out = reverse(g, 1);
        out.edges.swap(0, 2);
        out
    };
    let same_shape = f.edges[0].values.len() == f.edges[2].values.len();
    let mut orbit = vec![f.clone()];
    let mut i = 0;
    while i < orbit.len() {
        let g = orbit[i].clone();
        let mut images = vec![reverse(&g, 0), reverse(&g, 2), negate(&g, &[0, 1, 2])];
        if same_shape {
            images.push(swap(&g));
        }
        for e in 0..3 {
            if zero_at(&g, e) {
                images.push(negate(&g, &[e]));
            }
        }
        for im in images {
            if !orbit.iter().any(|o| o.max_diff(&im) <= 1e-9 * scale) {
                orbit.push(im);
            }
        }
        i += 1;
    }
    orbit.len()
}

/// Canonical triples with `|n_i| <= n_max`, `|m| <= m_max` that exist at `lambda`, sorted by
/// decreasing birth lambda and then by label.
pub fn enumerate_complete(lambda: f64, half_length: f64, n_max: u32, m_max: u32) -> Vec<SolutionTriple> {
    let mut out = Vec::new();
    for n1 in EdgeLabel::all(n_max) {
        for m in EdgeLabel::all(m_max) {
            for n3 in EdgeLabel::all(n_max) {
                let t = SolutionTriple::new(n1, m, n3);
                if t.canonical() == t && t.inequalities_hold(lambda, half_length) && t.profile(lambda, half_length).is_ok() {
                    out.push(t);
                }
            }
        }
    }
    sort_triples(&mut out, half_length);
    out
}

fn sort_triples(v: &mut [SolutionTriple], half_length: f64) {
    v.sort_by(|a, b| {
        b.birth_lambda(half_length)
            .total_cmp(&a.birth_lambda(half_length))
            .then_with(|| (a.n1.rank(), a.m.rank(), a.n3.rank()).cmp(&(b.n1.rank(), b.m.rank(), b.n3.rank())))
    });
}

/// Which of the five bifurcation mechanisms produced an entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleRule {
    /// cn loops appear on zero loops at `lambda = n^2`.
    LoopFromZero,
    /// cn half-periods appear on the zero bridge at `m^2 lambda*`.
    BridgeCnFromZero,
    /// Zero edges turn constant at `lambda = 0`.
    ConstantFromZero,
    /// dn half-periods appear on the constant bridge at `-m^2 lambda* / 2`.
    BridgeDnFromConstant,
    /// dn loops appear on constant loops at `-n^2 / 2`.
    LoopDnFromConstant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub lambda: f64,
    pub parent: SolutionTriple,
    pub child: SolutionTriple,
    pub rule: ScheduleRule,
}

/// Bifurcations among complete-loop solutions in order of decreasing lambda.
///
/// For the cn bridge rule the loop index compared with `m` is the smaller of the two loop
/// counts: both loops have to reach the bridge amplitude.
pub fn complete_bifurcation_schedule(half_length: f64, n_max: u32, m_max: u32) -> Vec<ScheduleEntry> {
    use EdgeLabel::*;
    use ScheduleRule::*;
    let ls = lambda_star(half_length);
    let t = SolutionTriple::new;
    let sq = |n: u32| f64::from(n) * f64::from(n);
    let mut raw: Vec<(f64, SolutionTriple, SolutionTriple, ScheduleRule)> = Vec::new();
    let loops_with_zero = || std::iter::once(Zero).chain((1..=n_max).map(Cn));
    let to_constant = |l: EdgeLabel| if l == Zero { Constant } else { l };

    for n1 in 1..=n_max {
        raw.push((sq(n1), t(Zero, Zero, Zero), t(Cn(n1), Zero, Cn(n1)), LoopFromZero));
        raw.push((sq(n1), t(Zero, Zero, Zero), t(Cn(n1), Zero, Zero), LoopFromZero));
        for n3 in n1 + 1..=n_max {
            raw.push((sq(n1), t(Zero, Zero, Cn(n3)), t(Cn(n1), Zero, Cn(n3)), LoopFromZero));
        }
    }
    for m in 1..=m_max {
        for n1 in 1..=n_max {
            for n3 in n1..=n_max {
                if f64::from(m) < 2.0 * half_length * f64::from(n1.min(n3)) / PI {
                    raw.push((sq(m) * ls, t(Cn(n1), Zero, Cn(n3)), t(Cn(n1), Cn(m), Cn(n3)), BridgeCnFromZero));
                }
            }
        }
    }
    raw.push((0.0, t(Zero, Zero, Zero), t(Constant, Constant, Constant), ConstantFromZero));
    for n1 in loops_with_zero() {
        for n3 in loops_with_zero() {
            if n1 != Zero || n3 != Zero {
                raw.push((0.0, t(n1, Zero, n3), t(to_constant(n1), Constant, to_constant(n3)), ConstantFromZero));
            }
        }
    }
    let dn_loops = |below: f64| (1..=n_max).filter(move |&n| -sq(n) / 2.0 > below).map(Dn);
    for m in 1..=m_max {
        let at = -sq(m) * ls / 2.0;
        let loops: Vec<EdgeLabel> = (1..=n_max).map(Cn).chain(dn_loops(at)).collect();
        for &n1 in &loops {
            for &n3 in &loops {
                raw.push((at, t(n1, Constant, n3), t(n1, Dn(m), n3), BridgeDnFromConstant));
            }
        }
    }
    for n1 in 1..=n_max {
        let at = -sq(n1) / 2.0;
        raw.push((at, t(Constant, Constant, Constant), t(Dn(n1), Constant, Dn(n1)), LoopDnFromConstant));
        raw.push((at, t(Constant, Constant, Constant), t(Dn(n1), Constant, Constant), LoopDnFromConstant));
        for n3 in (1..=n_max).map(Cn).chain(dn_loops(at)) {
            raw.push((at, t(Constant, Constant, n3), t(Dn(n1), Constant, n3), LoopDnFromConstant));
        }
    }

    let mut out: Vec<ScheduleEntry> = Vec::new();
    for (lambda, parent, child, rule) in raw {
        let (parent, child) = (parent.canonical(), child.canonical());
        if (child.birth_lambda(half_length) - lambda).abs() > 1e-12 * lambda.abs().max(1.0)
            || parent.birth_lambda(half_length) < lambda
        {
            continue;
        }
        // Both must be realisable just below the event.
        let below = lambda - 1e-6 * lambda.abs().max(1.0);
        if child.profile(below, half_length).is_err() || parent.profile(below, half_length).is_err() {
            continue;
        }
        let entry = ScheduleEntry { lambda, parent, child, rule };
        if !out.contains(&entry) {
            out.push(entry);
        }
    }
    out.sort_by(|a, b| {
        b.lambda.total_cmp(&a.lambda).then_with(|| {
            let key = |t: &SolutionTriple| (t.n1.rank(), t.m.rank(), t.n3.rank());
            (key(&a.child), key(&a.parent)).cmp(&(key(&b.child), key(&b.parent)))
        })
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_round_trip() {
        for s in ["(1,0,2)", "(Λ,Λ,Λ)", "(-1,Λ,-1)", "(2,-1,1)"] {
            let t: SolutionTriple = s.parse().unwrap();
            assert_eq!(t.to_string(), s);
            let j = serde_json::to_string(&t).unwrap();
            assert_eq!(serde_json::from_str::<SolutionTriple>(&j).unwrap(), t);
        }
        assert!("(1,2)".parse::<SolutionTriple>().is_err());
    }

    #[test]
    fn canonical_forms() {
        let t: SolutionTriple = "(0,0,1)".parse().unwrap();
        assert_eq!(t.canonical().to_string(), "(1,0,0)");
        let odd: SolutionTriple = "(2,-1,1)".parse().unwrap();
        assert_eq!(odd.canonical(), odd);
        let even: SolutionTriple = "(2,-2,1)".parse().unwrap();
        assert_eq!(even.canonical().to_string(), "(1,-2,2)");
    }
}
