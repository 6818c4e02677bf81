//! Adaptive Dormand–Prince 5(4) integration of the stationary edge equation
//! `phi'' = -lambda phi - 2 phi^3`, written as a first-order system in `(phi, phi')`.

/// State `(phi, phi')`.
pub type State = [f64; 2];

/// Default local error tolerance (absolute and relative).
pub const DEFAULT_TOL: f64 = 1e-12;
/// Integration stops once `|phi|` or `|phi'|` exceeds this bound.
pub const BLOWUP_BOUND: f64 = 1e6;

/// Where and how an integration left the bounded region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Blowup {
    pub x: f64,
    /// Last accepted state before the bound was crossed.
    pub last: State,
}

#[derive(Debug, Clone, Copy)]
pub struct EdgeIvp {
    pub lambda: f64,
    pub tol: f64,
    pub max_steps: usize,
}

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus the embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

impl EdgeIvp {
    pub fn new(lambda: f64) -> Self {
        Self { lambda, tol: DEFAULT_TOL, max_steps: 1_000_000 }
    }

    fn rhs(&self, y: &State) -> State {
        [y[1], -self.lambda * y[0] - 2.0 * y[0] * y[0] * y[0]]
    }

    /// One Dormand–Prince step; returns the fifth-order state and the scaled error norm.
    fn step(&self, y: &State, k1: &State, h: f64) -> (State, State, f64) {
        let mut k = [[0.0; 2]; 7];
        k[0] = *k1;
        let mut yn = *y;
        for s in 1..7 {
            let mut ys = *y;
            for (j, kj) in k.iter().enumerate().take(s) {
                ys[0] += h * A[s][j] * kj[0];
                ys[1] += h * A[s][j] * kj[1];
            }
            k[s] = self.rhs(&ys);
            if s == 6 {
                yn = ys;
            }
        }
        let mut err = 0.0f64;
        for i in 0..2 {
            let e: f64 = h * E.iter().zip(&k).map(|(w, kj)| w * kj[i]).sum::<f64>();
            let sc = self.tol + self.tol * y[i].abs().max(yn[i].abs());
            err = err.max((e / sc).abs());
        }
        // FSAL: the last stage is the derivative at the new point.
        (yn, k[6], err)
    }

    /// Integrate from `(x0, y0)` to `x1`, recording the state at every point of `at`, which
    /// must lie between `x0` and `x1` in the direction of integration.
    pub fn integrate(&self, x0: f64, y0: State, x1: f64, at: &[f64]) -> Result<(State, Vec<State>), Blowup> {
        let dir = if x1 >= x0 { 1.0 } else { -1.0 };
        let mut x = x0;
        let mut y = y0;
        let mut k1 = self.rhs(&y);
        let mut h = dir * 1e-2f64.min((x1 - x0).abs().max(f64::MIN_POSITIVE));
        let mut out = Vec::with_capacity(at.len());
        let mut steps = 0usize;
        for &target in at.iter().chain(std::iter::once(&x1)) {
            while dir * (target - x) > 1e-14 * x.abs().max(1.0) {
                if steps >= self.max_steps {
                    return Err(Blowup { x, last: y });
                }
                steps += 1;
                let remaining = target - x;
                let clipped = dir * remaining <= dir * h;
                let hs = if clipped { remaining } else { h };
                let (yn, kn, err) = self.step(&y, &k1, hs);
                if !(err.is_finite()) || err > 1.0 {
                    let fac = if err.is_finite() { (0.9 * err.powf(-0.2)).max(0.2) } else { 0.2 };
                    h = hs * fac;
                    if h.abs() < 1e-14 {
                        return Err(Blowup { x, last: y });
                    }
                    continue;
                }
                if yn[0].abs() > BLOWUP_BOUND || yn[1].abs() > BLOWUP_BOUND {
                    return Err(Blowup { x: x + hs, last: y });
                }
                x = if clipped { target } else { x + hs };
                y = yn;
                k1 = kn;
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                let proposed = hs * fac;
                // A step shortened to hit a target says little about the step size to use next.
                if !clipped || proposed.abs() > h.abs() {
                    h = proposed;
                }
            }
            out.push(y);
        }
        let end = out.pop().expect("end point is always recorded");
        Ok((end, out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::EllipticWave;

    #[test]
    fn linear_oscillator_matches_cosine() {
        let ivp = EdgeIvp::new(4.0);
        // Small amplitude: the cubic term shifts the phase by about 1e-8.
        let a = 1e-4;
        let (end, pts) = ivp.integrate(0.0, [a, 0.0], 3.0, &[1.0, 2.0]).unwrap();
        for (x, y) in [(1.0f64, pts[0]), (2.0, pts[1]), (3.0, end)] {
            assert!((y[0] / a - (2.0 * x).cos()).abs() < 1e-6);
        }
    }

    #[test]
    fn cnoidal_wave_is_reproduced() {
        let w = EllipticWave::cnoidal(1.0, 0.5, 0.3).unwrap();
        let ivp = EdgeIvp::new(1.0);
        let (end, _) = ivp.integrate(0.0, [w.value(0.0), w.derivative(0.0)], 7.0, &[]).unwrap();
        assert!((end[0] - w.value(7.0)).abs() < 1e-10);
        assert!((end[1] - w.derivative(7.0)).abs() < 1e-10);
        let (back, _) = ivp.integrate(7.0, end, 0.0, &[]).unwrap();
        assert!((back[0] - w.value(0.0)).abs() < 1e-10);
    }

    #[test]
    fn guard_trips_on_large_slopes() {
        // Orbits stay bounded, but at amplitude 1e4 the slope reaches about 1e8.
        let ivp = EdgeIvp::new(-1.0);
        let err = ivp.integrate(0.0, [1e4, 0.0], 1.0, &[]).unwrap_err();
        assert!(err.last[1].abs() <= BLOWUP_BOUND && err.x < 1.0);
    }
}
