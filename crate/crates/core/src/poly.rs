//! Dense real polynomials with Sturm-sequence root isolation.

use num_complex::Complex64;

/// Polynomial with coefficients in ascending powers.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs[coeffs.len() - 1] == 0.0 {
            coeffs.pop();
        }
        Poly(coeffs)
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.0.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
    }

    pub fn derivative(&self) -> Poly {
        if self.0.len() <= 1 {
            return Poly(vec![0.0]);
        }
        Poly::new(self.0.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect())
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.0.len().max(other.0.len());
        Poly::new((0..n).map(|i| self.0.get(i).unwrap_or(&0.0) + other.0.get(i).unwrap_or(&0.0)).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Remainder of `self / d`. Leading coefficients below `tol` relative to the input are dropped.
    fn rem(&self, d: &Poly, tol: f64) -> Poly {
        let mut r = self.0.clone();
        let dn = d.0.len();
        let lead = d.0[dn - 1];
        while r.len() >= dn {
            let q = r[r.len() - 1] / lead;
            let shift = r.len() - dn;
            for (i, c) in d.0.iter().enumerate() {
                r[shift + i] -= q * c;
            }
            r.pop();
        }
        let scale = self.max_abs().max(1e-300);
        while r.len() > 1 && r[r.len() - 1].abs() <= tol * scale {
            r.pop();
        }
        if r.len() == 1 && r[0].abs() <= tol * scale {
            r[0] = 0.0;
        }
        Poly(r)
    }

    /// Sturm chain `p, p', −rem(p, p'), …`.
    pub fn sturm_chain(&self) -> Vec<Poly> {
        let mut chain = vec![self.clone(), self.derivative()];
        loop {
            let n = chain.len();
            let (a, b) = (&chain[n - 2], &chain[n - 1]);
            if b.degree() == 0 {
                break;
            }
            let r = a.rem(b, 1e-13);
            if r.degree() == 0 && r.0[0] == 0.0 {
                break;
            }
            chain.push(Poly(r.0.iter().map(|c| -c).collect()));
        }
        chain
    }

    /// Sign changes of the chain at `x`, skipping zeros.
    fn variations(chain: &[Poly], x: f64) -> usize {
        let mut count = 0;
        let mut last = 0.0f64;
        for p in chain {
            let v = p.eval(x);
            if v != 0.0 {
                if last != 0.0 && (v < 0.0) != (last < 0.0) {
                    count += 1;
                }
                last = v;
            }
        }
        count
    }

    /// Number of distinct real roots in `(a, b]`.
    pub fn count_roots(&self, a: f64, b: f64) -> usize {
        let chain = self.sturm_chain();
        Self::variations(&chain, a).saturating_sub(Self::variations(&chain, b))
    }

    /// Distinct real roots in `(a, b]`, isolated by Sturm counts and polished by bisection.
    pub fn real_roots(&self, a: f64, b: f64) -> Vec<f64> {
        let chain = self.sturm_chain();
        let mut roots = Vec::new();
        let mut stack = vec![(a, b, Self::variations(&chain, a), Self::variations(&chain, b))];
        while let Some((lo, hi, vlo, vhi)) = stack.pop() {
            let n = vlo.saturating_sub(vhi);
            if n == 0 {
                continue;
            }
            if n == 1 || hi - lo <= 1e-14 * hi.abs().max(lo.abs()).max(1.0) {
                roots.push(self.polish_in(lo, hi));
                continue;
            }
            // Off-centre split so symmetric intervals do not land on a root at the centre; Sturm counts
            // need a nonzero value at the split point.
            let mut mid = lo + 0.4937 * (hi - lo);
            if self.eval(mid) == 0.0 {
                mid = lo + 0.5123 * (hi - lo);
            }
            let vmid = Self::variations(&chain, mid);
            stack.push((lo, mid, vlo, vmid));
            stack.push((mid, hi, vmid, vhi));
        }
        roots.sort_by(f64::total_cmp);
        roots
    }

    /// The single root in `(lo, hi]`: bisection on a sign change, or on the derivative for an
    /// even-multiplicity root.
    fn polish_in(&self, lo: f64, hi: f64) -> f64 {
        let (flo, fhi) = (self.eval(lo), self.eval(hi));
        if fhi == 0.0 {
            return hi;
        }
        if flo * fhi < 0.0 {
            return bisect_sign(|x| self.eval(x), lo, hi);
        }
        let d = self.derivative();
        if d.eval(lo) * d.eval(hi) < 0.0 {
            return bisect_sign(|x| d.eval(x), lo, hi);
        }
        0.5 * (lo + hi)
    }
}

/// Bisection on a sign change down to adjacent floats.
pub fn bisect_sign(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return mid;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
}

/// All three roots of `c3 x³ + c2 x² + c1 x + c0` (`c3 ≠ 0`) by Cardano's formula in complex
/// arithmetic, each refined by two Newton steps.
pub fn cubic_roots(c3: f64, c2: f64, c1: f64, c0: f64) -> [Complex64; 3] {
    let (a, b, c) = (c2 / c3, c1 / c3, c0 / c3);
    // Depressed cubic t³ + pt + q with x = t − a/3.
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let disc = Complex64::new(q * q / 4.0 + p * p * p / 27.0, 0.0).sqrt();
    let mut u = (Complex64::new(-q / 2.0, 0.0) + disc).cbrt();
    if u.norm() < 1e-300 {
        u = (Complex64::new(-q / 2.0, 0.0) - disc).cbrt();
    }
    let omega = Complex64::new(-0.5, 3f64.sqrt() / 2.0);
    let poly = Poly::new(vec![c0, c1, c2, c3]);
    let dpoly = poly.derivative();
    let mut roots = [Complex64::new(0.0, 0.0); 3];
    for (k, r) in roots.iter_mut().enumerate() {
        let uk = u * omega.powu(k as u32);
        let t = if uk.norm() < 1e-300 { Complex64::new(0.0, 0.0) } else { uk - p / (3.0 * uk) };
        let mut x = t - a / 3.0;
        for _ in 0..2 {
            let d = dpoly.eval_complex(x);
            if d.norm() > 0.0 {
                x -= poly.eval_complex(x) / d;
            }
        }
        *r = x;
    }
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sturm_counts_and_isolates() {
        // (x − 1)(x + 2)(x − 3)(x² + 1)
        let p = Poly::new(vec![1.0, -1.0]).mul(&Poly::new(vec![2.0, 1.0])).mul(&Poly::new(vec![-3.0, 1.0])).mul(&Poly::new(vec![1.0, 0.0, 1.0]));
        assert_eq!(p.count_roots(-10.0, 10.0), 3);
        assert_eq!(p.count_roots(0.0, 2.0), 1);
        let r = p.real_roots(-10.0, 10.0);
        for (got, want) in r.iter().zip([-2.0, 1.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn double_root_found_once() {
        let p = Poly::new(vec![-1.0, 1.0]).mul(&Poly::new(vec![-1.0, 1.0])).mul(&Poly::new(vec![4.0, 1.0]));
        let r = p.real_roots(-10.0, 10.0);
        assert_eq!(r.len(), 2);
        assert!((r[1] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn cardano_matches_product_form() {
        let roots = cubic_roots(2.0, -4.0, -22.0, 24.0); // 2(x − 1)(x + 3)(x − 4)
        let mut re: Vec<f64> = roots.iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        for (g, w) in re.iter().zip([-3.0, 1.0, 4.0]) {
            assert!((g - w).abs() < 1e-12);
        }
        let roots = cubic_roots(1.0, 0.0, 1.0, 1.0);
        assert_eq!(roots.iter().filter(|z| z.im.abs() < 1e-12).count(), 1);
        for z in roots {
            assert!((z * z * z + z + 1.0).norm() < 1e-12);
        }
    }
}
