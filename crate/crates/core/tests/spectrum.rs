use std::f64::consts::PI;

use qgraph::discretize::DiscreteSystem;
use qgraph::graph::build_dumbbell;
use proptest::prelude::*;
use qgraph::spectrum::*;

fn secular_roots_below_nine() -> Vec<f64> {
    find_modes(2.0, 3.0).unwrap().eigenvalues().into_iter().filter(|&l| l < 9.0 - 1e-9).collect()
}

#[test]
fn loop_modes_are_the_integers_squared() {
    let set = find_modes(2.0, 3.0).unwrap();
    let loops: Vec<f64> = set.of_family(ModeFamily::Loop).map(|m| m.lambda).collect();
    assert_eq!(&loops[..2], &[1.0, 4.0]);
    for k in [1.0, 2.0] {
        assert!(secular_loop(k) < 1e-28);
    }
    assert!(set.of_family(ModeFamily::Loop).all(|m| m.multiplicity == 2));
    assert!(!set.resonance_warning);
}

#[test]
fn bridge_modes_solve_their_factors() {
    let set = find_modes(2.0, 3.0).unwrap();
    for m in set.of_family(ModeFamily::Even) {
        assert!(secular_even(m.k, 2.0).abs() < 1e-10);
    }
    for m in set.of_family(ModeFamily::Odd) {
        assert!(secular_odd(m.k, 2.0).abs() < 1e-10);
    }
    assert!(set.first(ModeFamily::Odd).unwrap() < set.first(ModeFamily::Even).unwrap());
}

#[test]
fn fd_eigenvalues_converge_at_second_order() {
    let exact = secular_roots_below_nine();
    let coarse = DiscreteSystem::new(&build_dumbbell(2.0).unwrap(), 0.05).unwrap();
    let fine = coarse.refined();
    let a = fd_eigenvalues(&coarse).unwrap();
    let b = fd_eigenvalues(&fine).unwrap();
    for (i, want) in exact.iter().enumerate() {
        let (ea, eb) = ((a[i] - want).abs(), (b[i] - want).abs());
        if *want == 0.0 {
            assert!(ea < 1e-10 && eb < 1e-10);
            continue;
        }
        let ratio = ea / eb;
        assert!((3.5..=4.5).contains(&ratio), "lambda = {want}: errors {ea:e}, {eb:e}, ratio {ratio}");
    }
}

#[test]
fn eigenfunctions_are_normalized() {
    let set = find_modes(2.0, 2.5).unwrap();
    let g = build_dumbbell(2.0).unwrap();
    let iv = [2000, 1000, 2000];
    for m in &set.modes {
        for f in set.eigenfunctions(m) {
            let s = f.sample(&g, &iv);
            assert!((s.integrate(|v| v * v) - 1.0).abs() < 1e-5, "{m:?}");
        }
    }
}

#[test]
fn resonant_bridge_is_flagged() {
    // L = pi/2 puts bridge and loop roots on top of each other.
    assert!(find_modes(PI / 2.0, 3.0).unwrap().resonance_warning);
}

#[test]
fn small_loop_series_is_fourth_order() {
    for parity in [Parity::Even, Parity::Odd] {
        let errs: Vec<f64> = [0.02, 0.01, 0.005]
            .iter()
            .map(|&e| {
                let (k, s) = epsilon_expansion_check(1, parity, e).unwrap();
                (k - s).abs()
            })
            .collect();
        let slope = (errs[0] / errs[2]).log2() / 2.0;
        assert!(slope >= 3.7, "{parity:?}: slope {slope}");
    }
}

#[test]
fn full_determinant_has_the_factored_zero_set() {
    use proptest::test_runner::{Config, TestRunner};
    let mut runner = TestRunner::new(Config { cases: 20, ..Config::default() });
    runner
        .run(&(0.05f64..6.0, 0.5f64..5.0), |(k, l)| {
            let factored = secular_even(k, l) * secular_odd(k, l) * secular_loop(k);
            let full = secular_determinant(k, l);
            prop_assert!((full - 2.0 * factored).abs() <= 1e-12 * (1.0 + factored.abs()));
            Ok(())
        })
        .unwrap();
    for m in find_modes(2.0, 3.0).unwrap().modes.iter().filter(|m| m.k > 0.0) {
        assert!(secular_determinant(m.k, 2.0).abs() < 1e-9, "{m:?}");
    }
}

#[test]
fn fd_modes_have_exchange_parity() {
    use qgraph::graph::{apply_symmetry, SymmetryOp};
    let g = build_dumbbell(2.0).unwrap();
    let sys = DiscreteSystem::new(&g, 0.05).unwrap();
    let exact = find_modes(2.0, 3.0).unwrap();
    for m in fd_eigenmodes(&sys, 10).unwrap() {
        let Some(mode) = exact.modes.iter().min_by(|a, b| (a.lambda - m.lambda).abs().total_cmp(&(b.lambda - m.lambda).abs())) else { continue };
        let f = sys.to_function(&m.vector);
        let image = apply_symmetry(&SymmetryOp::R2, &f, &g).unwrap();
        let scale = f.max_abs();
        match mode.family {
            ModeFamily::Even | ModeFamily::Constant => assert!(image.max_diff(&f) <= 1e-6 * scale, "{mode:?}"),
            ModeFamily::Odd => assert!(image.max_diff(&f.scaled(-1.0)) <= 1e-6 * scale, "{mode:?}"),
            ModeFamily::Loop => {
                // Each loop mode lives on one loop, so it vanishes on the bridge.
                assert!(f.edges[1].values.iter().all(|v| v.abs() <= 1e-6 * scale), "{mode:?}");
            }
        }
    }
}
