//! Complete elliptic integral, Jacobi elliptic functions and the cn/dn
//! standing-wave families of `phi'' + lambda phi + 2 phi^3 = 0`.
//!
//! Every function takes the modulus `k`, not the parameter `m = k^2`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        if (a - b).abs() <= 1e-16 * a {
            break;
        }
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
    }
    0.5 * (a + b)
}

/// `K` from the complementary modulus `k' = sqrt(1 - k^2)`; accurate as `k -> 1`.
pub fn ellip_k_comp(kp: f64) -> f64 {
    PI / (2.0 * agm(1.0, kp))
}

/// Complete elliptic integral of the first kind, modulus `k` in `[0, 1)`.
pub fn ellip_k(k: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&k.abs()) {
        return Err(Error::InvalidArgument(format!("elliptic modulus must lie in [0, 1), got {k}")));
    }
    Ok(ellip_k_comp(((1.0 - k) * (1.0 + k)).sqrt()))
}

/// Jacobi `(sn, cn, dn)` of `u` with modulus `k` in `[0, 1)`.
pub fn jacobi(u: f64, k: f64) -> (f64, f64, f64) {
    let k = k.abs();
    let kp = ((1.0 - k) * (1.0 + k)).sqrt();
    jacobi_kk(u, k, kp)
}

fn jacobi_kk(u: f64, k: f64, kp: f64) -> (f64, f64, f64) {
    if k == 0.0 {
        return (u.sin(), u.cos(), 1.0);
    }
    // Reduce modulo the real period 4K.
    let quarter = ellip_k_comp(kp);
    let period = 4.0 * quarter;
    let u = u - period * (u / period).round();

    let mut a = [0.0f64; 32];
    let mut c = [0.0f64; 32];
    a[0] = 1.0;
    let mut b = kp;
    c[0] = k;
    let mut n = 0;
    while c[n].abs() > 1e-17 && n < 31 {
        let an = 0.5 * (a[n] + b);
        c[n + 1] = 0.5 * (a[n] - b);
        b = (a[n] * b).sqrt();
        a[n + 1] = an;
        n += 1;
    }
    let mut phi = (1u64 << n) as f64 * a[n] * u;
    for j in (1..=n).rev() {
        phi = 0.5 * (phi + (c[j] / a[j] * phi.sin()).asin());
    }
    let (sn, cn) = phi.sin_cos();
    let dn = (kp * kp + k * k * cn * cn).sqrt();
    (sn, cn, dn)
}

fn modulus_ok(k: f64, kp: f64) -> bool {
    (0.0..=1.0).contains(&k) && kp > 0.0 && kp <= 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveKind {
    Cn,
    Dn,
}

/// `amplitude * cn(wavenumber x - phase, modulus)` or the dn analogue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticWave {
    pub kind: WaveKind,
    pub lambda: f64,
    pub amplitude: f64,
    pub wavenumber: f64,
    pub modulus: f64,
    /// Complementary modulus, kept separately for accuracy near `modulus -> 1`.
    pub comodulus: f64,
    pub phase: f64,
    pub period: f64,
}

impl EllipticWave {
    /// cn-wave solving the stationary equation at `lambda`.
    /// Requires `modulus < 1/sqrt 2` for `lambda > 0` and `modulus > 1/sqrt 2` for `lambda < 0`.
    pub fn cnoidal(lambda: f64, modulus: f64, phase: f64) -> Result<Self> {
        let kp = ((1.0 - modulus) * (1.0 + modulus)).sqrt();
        Self::cnoidal_kk(lambda, modulus, kp, phase)
    }

    fn cnoidal_kk(lambda: f64, k: f64, kp: f64, phase: f64) -> Result<Self> {
        // k may round to 1 while the comodulus still carries the information.
        if !modulus_ok(k, kp) || !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!("cn wave needs modulus in [0,1), got {k}")));
        }
        let denom = kp * kp - k * k; // 1 - 2k^2
        if denom == 0.0 || (k - FRAC_1_SQRT_2).abs() < 1e-15 {
            return Err(Error::InvalidArgument("cn wave modulus 1/sqrt(2) is singular".into()));
        }
        let beta2 = lambda / denom;
        if !(beta2 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "no cn wave at lambda = {lambda} with modulus {k}"
            )));
        }
        let beta = beta2.sqrt();
        Ok(Self {
            kind: WaveKind::Cn,
            lambda,
            amplitude: k * beta,
            wavenumber: beta,
            modulus: k,
            comodulus: kp,
            phase,
            period: 4.0 * ellip_k_comp(kp) / beta,
        })
    }

    /// The zero-frequency cn-wave, `modulus = 1/sqrt 2`, parametrized by its period.
    pub fn lemniscatic(period: f64, phase: f64) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidArgument(format!("period must be positive, got {period}")));
        }
        let beta = 4.0 * ellip_k_comp(FRAC_1_SQRT_2) / period;
        Ok(Self {
            kind: WaveKind::Cn,
            lambda: 0.0,
            amplitude: beta * FRAC_1_SQRT_2,
            wavenumber: beta,
            modulus: FRAC_1_SQRT_2,
            comodulus: FRAC_1_SQRT_2,
            phase,
            period,
        })
    }

    /// dn-wave solving the stationary equation; requires `lambda < 0`.
    pub fn dnoidal(lambda: f64, modulus: f64, phase: f64) -> Result<Self> {
        let kp = ((1.0 - modulus) * (1.0 + modulus)).sqrt();
        Self::dnoidal_kk(lambda, modulus, kp, phase)
    }

    fn dnoidal_kk(lambda: f64, k: f64, kp: f64, phase: f64) -> Result<Self> {
        if !modulus_ok(k, kp) {
            return Err(Error::InvalidArgument(format!("dn wave needs modulus in [0,1), got {k}")));
        }
        if !(lambda < 0.0) {
            return Err(Error::InvalidArgument(format!("dn waves need lambda < 0, got {lambda}")));
        }
        let b = (lambda / (k * k - 2.0)).sqrt();
        Ok(Self {
            kind: WaveKind::Dn,
            lambda,
            amplitude: b,
            wavenumber: b,
            modulus: k,
            comodulus: kp,
            phase,
            period: 2.0 * ellip_k_comp(kp) / b,
        })
    }

    fn arg(&self, x: f64) -> (f64, f64, f64) {
        jacobi_kk(self.wavenumber * x - self.phase, self.modulus, self.comodulus)
    }

    pub fn value(&self, x: f64) -> f64 {
        let (_, cn, dn) = self.arg(x);
        match self.kind {
            WaveKind::Cn => self.amplitude * cn,
            WaveKind::Dn => self.amplitude * dn,
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let (sn, cn, dn) = self.arg(x);
        let k2 = self.modulus * self.modulus;
        match self.kind {
            WaveKind::Cn => -self.amplitude * self.wavenumber * sn * dn,
            WaveKind::Dn => -self.amplitude * self.wavenumber * k2 * sn * cn,
        }
    }

    /// Second derivative from the Jacobi derivative rules.
    pub fn second_derivative(&self, x: f64) -> f64 {
        let (sn, cn, dn) = self.arg(x);
        let k2 = self.modulus * self.modulus;
        let b2 = self.wavenumber * self.wavenumber;
        match self.kind {
            WaveKind::Cn => -self.amplitude * b2 * cn * (dn * dn - k2 * sn * sn),
            WaveKind::Dn => -self.amplitude * b2 * k2 * dn * (cn * cn - sn * sn),
        }
    }

    /// `phi'' + lambda phi + 2 phi^3`.
    pub fn ode_residual(&self, x: f64) -> f64 {
        let p = self.value(x);
        self.second_derivative(x) + self.lambda * p + 2.0 * p * p * p
    }

    /// Conserved quantity `(phi'^2 + lambda phi^2 + phi^4) / 2`.
    pub fn energy(&self, x: f64) -> f64 {
        let p = self.value(x);
        let d = self.derivative(x);
        0.5 * (d * d + self.lambda * p * p + p * p * p * p)
    }

    /// Range of values attained: `[-A, A]` for cn, `[A k', A]` for dn.
    pub fn value_range(&self) -> (f64, f64) {
        match self.kind {
            WaveKind::Cn => (-self.amplitude, self.amplitude),
            WaveKind::Dn => (self.amplitude * self.comodulus, self.amplitude),
        }
    }

    /// Shift the phase so that `phi(x0) = v`, with `phi'(x0) >= 0` if `rising`.
    pub fn with_value_at(&self, x0: f64, v: f64, rising: bool) -> Result<Self> {
        let (lo, hi) = self.value_range();
        let tol = 1e-12 * self.amplitude.max(1.0);
        if v < lo - tol || v > hi + tol {
            return Err(Error::NoSolution(format!("value {v} outside the wave range [{lo}, {hi}]")));
        }
        let q = ellip_k_comp(self.comodulus);
        // Invert the monotone branch: cn on [0, 2K], dn on [0, K]; both decreasing.
        let (mut a, mut b) = match self.kind {
            WaveKind::Cn => (0.0, 2.0 * q),
            WaveKind::Dn => (0.0, q),
        };
        let f = |u: f64| {
            let (_, cn, dn) = jacobi_kk(u, self.modulus, self.comodulus);
            match self.kind {
                WaveKind::Cn => self.amplitude * cn - v,
                WaveKind::Dn => self.amplitude * dn - v,
            }
        };
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if f(m) > 0.0 {
                a = m;
            } else {
                b = m;
            }
            if b - a <= 4.0 * f64::EPSILON * q {
                break;
            }
        }
        let u = 0.5 * (a + b);
        // On (0, 2K) resp. (0, K) the wave is falling; negate for the rising branch.
        let u = if rising { -u } else { u };
        let mut w = *self;
        w.phase = self.wavenumber * x0 - u;
        Ok(w)
    }
}

/// Elliptic wave at `lambda` with the given spatial period, or `None` if none exists.
pub fn quantize_period(lambda: f64, period: f64, kind: WaveKind) -> Option<EllipticWave> {
    if !(period > 0.0 && period.is_finite() && lambda.is_finite()) {
        return None;
    }
    match kind {
        WaveKind::Cn if lambda == 0.0 => EllipticWave::lemniscatic(period, 0.0).ok(),
        WaveKind::Cn if lambda > 0.0 => {
            // Period decreases from 2 pi / sqrt(lambda) at k = 0 to 0 at k = 1/sqrt 2.
            if period >= 2.0 * PI / lambda.sqrt() {
                return None;
            }
            let t = |k: f64| {
                let kp = ((1.0 - k) * (1.0 + k)).sqrt();
                4.0 * ellip_k_comp(kp) * ((kp * kp - k * k) / lambda).sqrt()
            };
            let (mut lo, mut hi) = (0.0, FRAC_1_SQRT_2);
            for _ in 0..200 {
                let m = 0.5 * (lo + hi);
                let tm = t(m);
                if (tm - period).abs() <= 1e-12 * period.max(1.0) {
                    lo = m;
                    hi = m;
                    break;
                }
                if tm > period {
                    lo = m;
                } else {
                    hi = m;
                }
            }
            EllipticWave::cnoidal(lambda, 0.5 * (lo + hi), 0.0).ok()
        }
        WaveKind::Cn => {
            // lambda < 0: period increases from 0 (k -> 1/sqrt 2) to infinity (k -> 1).
            // Bisect on log of the complementary modulus.
            let t = |lkp: f64| {
                let kp = lkp.exp();
                let k = ((1.0 - kp) * (1.0 + kp)).sqrt();
                4.0 * ellip_k_comp(kp) * ((k * k - kp * kp) / -lambda).sqrt()
            };
            let (mut lo, mut hi) = (-700.0f64, FRAC_1_SQRT_2.ln());
            if t(lo) < period {
                return None;
            }
            for _ in 0..200 {
                let m = 0.5 * (lo + hi);
                let tm = t(m);
                if (tm - period).abs() <= 1e-12 * period.max(1.0) {
                    lo = m;
                    hi = m;
                    break;
                }
                if tm > period {
                    lo = m;
                } else {
                    hi = m;
                }
            }
            let kp = (0.5 * (lo + hi)).exp();
            let k = ((1.0 - kp) * (1.0 + kp)).sqrt();
            EllipticWave::cnoidal_kk(lambda, k, kp, 0.0).ok()
        }
        WaveKind::Dn => {
            if !(lambda < 0.0) {
                return None;
            }
            // Period increases from pi sqrt(2 / -lambda) at k = 0 to infinity as k -> 1.
            if period <= PI * (2.0 / -lambda).sqrt() {
                return None;
            }
            let t = |lkp: f64| {
                let kp = lkp.exp();
                let k2 = (1.0 - kp) * (1.0 + kp);
                2.0 * ellip_k_comp(kp) * ((2.0 - k2) / -lambda).sqrt()
            };
            let (mut lo, mut hi) = (-700.0f64, 0.0f64);
            if t(lo) < period {
                return None;
            }
            for _ in 0..200 {
                let m = 0.5 * (lo + hi);
                let tm = t(m);
                if (tm - period).abs() <= 1e-12 * period.max(1.0) {
                    lo = m;
                    hi = m;
                    break;
                }
                if tm > period {
                    lo = m;
                } else {
                    hi = m;
                }
            }
            let kp = (0.5 * (lo + hi)).exp();
            let k = ((1.0 - kp) * (1.0 + kp)).sqrt();
            EllipticWave::dnoidal_kk(lambda, k, kp, 0.0).ok()
        }
    }
}

/// Wave with `n` full periods on a loop of length `2 pi`.
pub fn quantize_loop(lambda: f64, n: u32, kind: WaveKind) -> Option<EllipticWave> {
    if n == 0 {
        return None;
    }
    quantize_period(lambda, 2.0 * PI / n as f64, kind)
}

/// Closed-form existence of an `n`-periodic wave on the `2 pi` loop.
pub fn loop_wave_exists(lambda: f64, n: u32, kind: WaveKind) -> bool {
    let n2 = (n as f64) * (n as f64);
    n > 0
        && match kind {
            WaveKind::Cn => lambda < n2,
            WaveKind::Dn => lambda < -n2 / 2.0,
        }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Oracle: composite Simpson on the integrand of K.
    fn k_quadrature(k: f64) -> f64 {
        let n = 20000;
        let h = (PI / 2.0) / n as f64;
        let f = |t: f64| 1.0 / (1.0 - k * k * t.sin().powi(2)).sqrt();
        let mut s = f(0.0) + f(PI / 2.0);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        s * h / 3.0
    }

    /// Oracle: incomplete integral F(phi, k) by Simpson.
    fn f_incomplete(phi: f64, k: f64) -> f64 {
        let n = 20000;
        let h = phi / n as f64;
        let f = |t: f64| 1.0 / (1.0 - k * k * t.sin().powi(2)).sqrt();
        let mut s = f(0.0) + f(phi);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn k_matches_quadrature_and_reference() {
        for &k in &[0.0, 0.1, 0.5, FRAC_1_SQRT_2, 0.9, 0.99] {
            let a = ellip_k(k).unwrap();
            let b = k_quadrature(k);
            assert!((a - b).abs() < 1e-12, "k={k}: {a} vs {b}");
        }
        assert!((ellip_k(FRAC_1_SQRT_2).unwrap() - 1.854074677301372).abs() < 1e-14);
        assert!((ellip_k(0.0).unwrap() - PI / 2.0).abs() < 1e-15);
        assert!(ellip_k(1.0).is_err());
    }

    #[test]
    fn jacobi_inverts_incomplete_integral() {
        for &k in &[0.3, 0.7, 0.95] {
            for &u in &[0.2, 0.9, 1.4] {
                let (sn, cn, _) = jacobi(u, k);
                let am = sn.atan2(cn);
                assert!((f_incomplete(am, k) - u).abs() < 1e-11, "k={k} u={u}");
            }
        }
    }

    #[test]
    fn jacobi_special_values() {
        let k: f64 = 0.8;
        let q = ellip_k(k).unwrap();
        let (sn, cn, dn) = jacobi(q, k);
        assert!((sn - 1.0).abs() < 1e-14 && cn.abs() < 1e-13 && (dn - (1.0 - k * k).sqrt()).abs() < 1e-14);
        let (sn, cn, dn) = jacobi(0.7, 0.0);
        assert!((sn - 0.7f64.sin()).abs() < 1e-15 && (cn - 0.7f64.cos()).abs() < 1e-15 && dn == 1.0);
        // Large argument uses periodicity.
        let (a, _, _) = jacobi(0.3 + 400.0 * q, k);
        let (b, _, _) = jacobi(0.3, k);
        assert!((a - b).abs() < 1e-11);
    }

    #[test]
    fn jacobi_addition_theorem() {
        let k: f64 = 0.6;
        let (u, v) = (0.37, 1.21);
        let (s1, c1, d1) = jacobi(u, k);
        let (s2, c2, d2) = jacobi(v, k);
        let denom = 1.0 - k * k * s1 * s1 * s2 * s2;
        let (s, c, d) = jacobi(u + v, k);
        assert!((s - (s1 * c2 * d2 + s2 * c1 * d1) / denom).abs() < 1e-13);
        assert!((c - (c1 * c2 - s1 * s2 * d1 * d2) / denom).abs() < 1e-13);
        assert!((d - (d1 * d2 - k * k * s1 * s2 * c1 * c2) / denom).abs() < 1e-13);
    }

    /// Oracle: integrate the ODE with fixed-step RK4 from the wave's initial data.
    fn rk4_value(w: &EllipticWave, x_end: f64) -> f64 {
        let n = 20000;
        let h = x_end / n as f64;
        let lam = w.lambda;
        let f = |y: [f64; 2]| [y[1], -lam * y[0] - 2.0 * y[0].powi(3)];
        let mut y = [w.value(0.0), w.derivative(0.0)];
        for _ in 0..n {
            let k1 = f(y);
            let k2 = f([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
            let k3 = f([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
            let k4 = f([y[0] + h * k3[0], y[1] + h * k3[1]]);
            y[0] += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
            y[1] += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
        }
        y[0]
    }

    #[test]
    fn waves_agree_with_direct_integration() {
        let waves = [
            EllipticWave::cnoidal(2.0, 0.4, 0.3).unwrap(),
            EllipticWave::cnoidal(-1.5, 0.85, -0.2).unwrap(),
            EllipticWave::dnoidal(-2.0, 0.7, 0.1).unwrap(),
            EllipticWave::lemniscatic(3.0, 0.5).unwrap(),
        ];
        for w in &waves {
            let x = 2.5;
            assert!((rk4_value(w, x) - w.value(x)).abs() < 1e-9, "{w:?}");
            for i in 0..100 {
                let x = -3.0 + 0.06 * i as f64;
                assert!(w.ode_residual(x).abs() < 1e-9);
                assert!((w.energy(x) - w.energy(0.0)).abs() < 1e-10);
            }
            // Periodicity.
            assert!((w.value(0.4 + w.period) - w.value(0.4)).abs() < 1e-10);
        }
    }

    #[test]
    fn singular_and_invalid_waves_rejected() {
        assert!(EllipticWave::cnoidal(1.0, FRAC_1_SQRT_2, 0.0).is_err());
        assert!(EllipticWave::cnoidal(1.0, 0.9, 0.0).is_err());
        assert!(EllipticWave::dnoidal(1.0, 0.5, 0.0).is_err());
        assert!(EllipticWave::cnoidal(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn quantized_loop_waves() {
        let w = quantize_loop(1.5, 2, WaveKind::Cn).unwrap();
        assert!((w.period - PI).abs() < 1e-11);
        assert!(quantize_loop(4.0, 2, WaveKind::Cn).is_none());
        assert!(quantize_loop(3.99, 2, WaveKind::Cn).is_some());
        let d = quantize_loop(-0.6, 1, WaveKind::Dn).unwrap();
        assert!((d.period - 2.0 * PI).abs() < 1e-11);
        assert!(quantize_loop(-0.49, 1, WaveKind::Dn).is_none());
        let z = quantize_loop(0.0, 3, WaveKind::Cn).unwrap();
        assert!((z.period - 2.0 * PI / 3.0).abs() < 1e-12);
        let neg = quantize_loop(-5.0, 1, WaveKind::Cn).unwrap();
        assert!((neg.period - 2.0 * PI).abs() < 1e-11);
    }

    #[test]
    fn phase_matching() {
        let w = quantize_loop(-1.0, 1, WaveKind::Cn).unwrap();
        for rising in [false, true] {
            let s = w.with_value_at(-PI, 0.3, rising).unwrap();
            assert!((s.value(-PI) - 0.3).abs() < 1e-12);
            assert_eq!(s.derivative(-PI) >= 0.0, rising);
        }
        let d = quantize_loop(-3.0, 1, WaveKind::Dn).unwrap();
        let (lo, hi) = d.value_range();
        let s = d.with_value_at(0.5, 0.5 * (lo + hi), true).unwrap();
        assert!((s.value(0.5) - 0.5 * (lo + hi)).abs() < 1e-12);
        assert!(d.with_value_at(0.0, hi * 1.01, true).is_err());
    }
}
