//! Bowtie DST: Hamiltonians, Poisson reduction, fixed points and closed-form branches.

use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use qgraph::bowtie::*;

fn amplitudes(v: &[f64]) -> Amplitudes {
    std::array::from_fn(|i| Complex64::new(v[2 * i], v[2 * i + 1]))
}

proptest! {
    #[test]
    fn diagonal_hamiltonian_agrees_on_s1(z1r in -3.0..3.0f64, z1i in -3.0..3.0f64, z2r in -3.0..3.0f64, z2i in -3.0..3.0f64) {
        let zero = Complex64::new(0.0, 0.0);
        let z = [Complex64::new(z1r, z1i), Complex64::new(z2r, z2i), zero, zero, zero];
        let u = from_diag(&z);
        let h = dst_hamiltonian(&u);
        prop_assert!((h - diag_hamiltonian(&z)).abs() <= 1e-12 * h.abs().max(1.0));
        // Reduced sphere Hamiltonian on the same state.
        let s = SphereState::from_modes(z[0], z[1]);
        prop_assert!((h - sphere_hamiltonian(&s)).abs() <= 1e-12 * h.abs().max(1.0));
        prop_assert!(s.sphere_residual().abs() <= 1e-12 * s.r.max(1.0).powi(2));
    }

    #[test]
    fn diagonal_change_is_unitary_and_hamiltonian_consistent(v in proptest::collection::vec(-2.0..2.0f64, 10), phi in 0.0..6.3f64) {
        let u = amplitudes(&v);
        let z = to_diag(&u);
        let n_u: f64 = u.iter().map(|a| a.norm_sqr()).sum();
        let n_z: f64 = z.iter().map(|a| a.norm_sqr()).sum();
        prop_assert!((n_u - n_z).abs() <= 1e-12 * n_u.max(1.0));
        let h = dst_hamiltonian(&u);
        prop_assert!((h - diag_hamiltonian(&z)).abs() <= 1e-11 * h.abs().max(1.0));
        let rot = Complex64::from_polar(1.0, phi);
        let turned: Amplitudes = std::array::from_fn(|i| u[i] * rot);
        prop_assert!((dst_hamiltonian(&turned) - h).abs() <= 1e-11 * h.abs().max(1.0));
    }

    #[test]
    fn poisson_field_preserves_the_sphere(x in -5.0..5.0f64, y in -5.0..5.0f64, z in -5.0..5.0f64) {
        let r = (x * x + y * y + z * z).sqrt();
        let s = SphereState { x, y, z, r };
        let f = poisson_field(&s);
        prop_assert!((x * f[0] + y * f[1] + z * f[2]).abs() <= 1e-10 * r.max(1.0).powi(3));
    }
}

#[test]
fn invariant_subspaces_are_preserved_by_the_flow() {
    let z = |a: [f64; 5]| -> Amplitudes { std::array::from_fn(|i| Complex64::new(a[i], 0.3 * a[i])) };
    for (state, zero_modes) in [
        (z([0.8, -0.4, 0.0, 0.0, 0.0]), vec![2, 3, 4]),
        (z([0.8, -0.4, 0.6, 0.0, 0.0]), vec![3, 4]),
        (z([0.0, 0.0, 0.0, 0.5, -0.7]), vec![0, 1, 2]),
    ] {
        let du = dst_rhs(&from_diag(&state));
        let dz = to_diag(&du);
        for j in zero_modes {
            assert!(dz[j].norm() < 1e-14, "mode {j} leaks: {}", dz[j]);
        }
    }
}

#[test]
fn poisson_fixed_point_examples() {
    let s = SphereState { x: 1.2, y: 0.0, z: -0.7, r: (1.2f64 * 1.2 + 0.49).sqrt() };
    let f = poisson_field(&s);
    assert_eq!(f[0], 0.0);
    assert_eq!(f[2], 0.0);
    for r in [0.5, 3.0, 10.0] {
        let f = poisson_field(&SphereState { x: 0.0, y: 0.0, z: r, r });
        assert!(f.iter().all(|v| v.abs() < 1e-12));
    }
}

#[test]
fn poisson_flow_conserves_casimir_and_energy() {
    let s0 = SphereState::from_modes(Complex64::new(1.3, 0.2), Complex64::new(-0.4, 0.9));
    let h0 = sphere_hamiltonian(&s0);
    let r2 = s0.r * s0.r;
    let mut s = s0;
    for _ in 0..10 {
        s = poisson_flow(&s, 1e-3, 1000);
        assert!((s.x * s.x + s.y * s.y + s.z * s.z - r2).abs() <= 1e-8);
        assert!((sphere_hamiltonian(&s) - h0).abs() <= 1e-8);
    }
}

#[test]
fn circle_hyperbola_intersections() {
    for r in [0.3, 2.0, 7.0, 9.0, 12.5, 20.0] {
        let pts = circle_hyperbola_fixed_points(r).unwrap();
        assert!(pts.iter().any(|&(x, z)| x.abs() < 1e-12 && (z - r).abs() < 1e-9), "(0, R) missing at R={r}");
        for &(x, z) in &pts {
            let (c, h) = fixed_point_residuals(r, x, z);
            assert!(c.abs() <= 1e-9 && h.abs() <= 1e-9);
        }
    }
    let rs = intersection_threshold_closed_form();
    assert!((rs - 7.5669150178629).abs() < 1e-10);
    assert_eq!(circle_hyperbola_fixed_points(rs - 1e-4).unwrap().len(), 2);
    assert_eq!(circle_hyperbola_fixed_points(rs + 1e-4).unwrap().len(), 4);

    // The fixed point nearest (0, R) moves from left to right through the transcritical at R = 25/2.
    let nearest = |r: f64| {
        let pts = circle_hyperbola_fixed_points(r).unwrap();
        pts.into_iter().filter(|p| p.0.abs() > 1e-9 && p.1 > 0.0).min_by(|a, b| a.0.abs().total_cmp(&b.0.abs())).unwrap()
    };
    assert!(nearest(10.0).0 < 0.0);
    assert!(nearest(16.0).0 > 0.0);
}

#[test]
fn threshold_detected_numerically() {
    let r = intersection_threshold().unwrap();
    assert!((r - intersection_threshold_closed_form()).abs() <= 1e-8, "{r}");
}

#[test]
fn every_branch_point_solves_the_stationary_equations() {
    for id in 1..=7u8 {
        let pts = sample_branch(id, 400, -30.0).unwrap();
        assert!(pts.len() > 100, "branch {id}: {} points", pts.len());
        for p in pts {
            let m = p.a.abs().max(p.b.abs()).max(p.c.abs());
            if m > 10.0 {
                continue;
            }
            assert!(abc_residual(p.a, p.b, p.c, p.omega) <= 1e-10, "branch {id} at {:?}", p.theta);
            assert!((p.q - (2.0 * p.a * p.a + p.b * p.b + 2.0 * p.c * p.c)).abs() < 1e-12);
        }
    }
}

#[test]
fn simple_branch_relations() {
    for w in [-3.0, -1.0, -0.1] {
        let p = branch_point(1, w).unwrap();
        assert!((p.omega + p.q / 5.0).abs() < 1e-12);
        let p = branch_point(2, w).unwrap();
        assert!((p.omega - (1.0 - p.q / 4.0)).abs() < 1e-12);
    }
}

#[test]
fn branch5_touches_branch4_at_right_angle() {
    let p5 = branch_point(5, PI / 2.0).unwrap();
    assert!((p5.a - p5.c).abs() < 1e-12);
    // The same state lies on the a = c ellipse that carries Branch 4.
    assert!((p5.a * p5.a + p5.a * p5.b + p5.b * p5.b + p5.omega - 5.0).abs() < 1e-12);
}

#[test]
fn branch6_concentrates_at_the_ends() {
    let (lo, hi) = branch_domain(6).unwrap();
    let near_lo = branch_point(6, lo + 1e-4).unwrap();
    let near_hi = branch_point(6, hi - 1e-4).unwrap();
    assert!(near_lo.c > 10.0 && near_lo.a.abs().max(near_lo.b.abs()) / near_lo.c < 0.1);
    assert!(near_hi.a > 10.0 && near_hi.b.abs().max(near_hi.c.abs()) / near_hi.a < 0.1);
}

#[test]
fn discarded_cubic_roots_are_unphysical() {
    let n = 1000;
    for i in 0..n {
        let theta = PI * (i as f64 + 0.5) / n as f64;
        if (theta - PI / 3.0).abs() < 1e-9 || (theta - 2.0 * PI / 3.0).abs() < 1e-9 {
            continue;
        }
        let roots = branch_cubic_roots(theta);
        let physical: Vec<_> = roots.iter().filter(|z| z.im.abs() <= 1e-9 * z.re.abs().max(1.0) && z.re < 1.0).collect();
        assert_eq!(physical.len(), 1, "theta = {theta}: {roots:?}");
    }
}

#[test]
fn located_events() {
    let events = dst_branch_events().unwrap();
    let find = |k: DstEventKind| events.iter().find(|e| e.kind == k).copied().unwrap();
    let pf = find(DstEventKind::Pitchfork);
    assert_eq!((pf.from, pf.to), (1, 6));
    assert!((pf.omega + 0.5).abs() <= 1e-9 && (pf.q - 2.5).abs() <= 1e-9);
    let tc = find(DstEventKind::Transcritical);
    assert!((tc.omega + 2.5).abs() <= 1e-9 && (tc.q - 12.5).abs() <= 1e-9);
    let fold = find(DstEventKind::Fold);
    assert!((fold.omega + 1.94).abs() <= 0.01, "fold at {}", fold.omega);
    let sb = find(DstEventKind::SymmetryBreaking);
    assert!((sb.theta - PI / 2.0).abs() < 1e-12 && (sb.omega + 2.0).abs() < 1e-12);
    let sn = find(DstEventKind::SaddleNode);
    assert!((sn.omega + 2.7).abs() <= 0.05, "saddle-node at {}", sn.omega);
}
