//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use qgraph::bowtie::*;
use qgraph::classify::*;
use qgraph::continuation::*;
use qgraph::discretize::DiscreteSystem;
use qgraph::elliptic::*;
use qgraph::graph::build_dumbbell;
use qgraph::shooting::*;
use qgraph::spectrum::*;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn ok<T, E: std::fmt::Display>(r: std::result::Result<T, E>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn dumbbell(l: f64, h: f64) -> std::result::Result<DiscreteSystem, String> {
    ok(DiscreteSystem::new(&ok(build_dumbbell(l))?, h))
}

fn first_modes(l: f64) -> std::result::Result<(f64, f64), String> {
    let m = ok(find_modes(l, 3.0))?;
    Ok((m.first(ModeFamily::Odd).ok_or("no odd mode")?, m.first(ModeFamily::Even).ok_or("no even mode")?))
}

fn find_event(events: &[DstEvent], kind: DstEventKind) -> std::result::Result<DstEvent, String> {
    events.iter().find(|e| e.kind == kind).copied().ok_or_else(|| format!("no {kind:?} event"))
}

fn bowtie_events() -> Outcome {
    let t = Instant::now();
    let events = ok(dst_branch_events())?;
    let elapsed = t.elapsed();
    let pf = find_event(&events, DstEventKind::Pitchfork)?;
    let tc = find_event(&events, DstEventKind::Transcritical)?;
    ensure!((pf.omega + 0.5).abs() <= 1e-9 && (pf.q - 2.5).abs() <= 1e-9, "pitchfork at Ω={} Q={}", pf.omega, pf.q);
    ensure!((tc.omega + 2.5).abs() <= 1e-9 && (tc.q - 12.5).abs() <= 1e-9, "transcritical at Ω={} Q={}", tc.omega, tc.q);
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("pitchfork Ω={:.12} Q={:.12}; transcritical Ω={:.12} Q={:.12}", pf.omega, pf.q, tc.omega, tc.q))
}

fn threshold() -> Outcome {
    let t = Instant::now();
    let closed = intersection_threshold_closed_form();
    let found = ok(intersection_threshold())?;
    let below = ok(circle_hyperbola_fixed_points(closed - 1e-4))?.len();
    let above = ok(circle_hyperbola_fixed_points(closed + 1e-4))?.len();
    let elapsed = t.elapsed();
    ensure!((below, above) == (2, 4), "intersection counts {below} -> {above}");
    ensure!((found - closed).abs() <= 1e-8, "detected {found}, closed form {closed}");
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("R* = {closed:.10}, detected {found:.10}, counts {below} -> {above}"))
}

fn fold_and_saddle_node() -> Outcome {
    let events = ok(dst_branch_events())?;
    let fold = find_event(&events, DstEventKind::Fold)?;
    let sn = find_event(&events, DstEventKind::SaddleNode)?;
    ensure!((fold.omega + 1.94).abs() <= 0.01, "Branch-4 fold at Ω={}", fold.omega);
    ensure!((sn.omega + 2.7).abs() <= 0.05, "Branch-7 saddle-node at Ω={}", sn.omega);
    Ok(format!("fold Ω={:.6} (branch {}), saddle-node Ω={:.6} (branch {})", fold.omega, fold.from, sn.omega, sn.from))
}

fn linear_spectrum() -> Outcome {
    let t = Instant::now();
    let set = ok(find_modes(2.0, 3.0))?;
    let loops: Vec<f64> = set.of_family(ModeFamily::Loop).map(|m| m.lambda).collect();
    ensure!(loops.len() >= 2 && loops[0] == 1.0 && loops[1] == 4.0, "loop eigenvalues {loops:?}");
    let exact: Vec<f64> = set.eigenvalues().into_iter().filter(|&l| l < 9.0 - 1e-9).collect();
    let coarse = dumbbell(2.0, 0.05)?;
    let a = ok(fd_eigenvalues(&coarse))?;
    let b = ok(fd_eigenvalues(&coarse.refined()))?;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (i, want) in exact.iter().enumerate() {
        let (ea, eb) = ((a[i] - want).abs(), (b[i] - want).abs());
        if *want == 0.0 {
            ensure!(ea < 1e-10 && eb < 1e-10, "constant mode off by {ea:e}, {eb:e}");
            continue;
        }
        let ratio = ea / eb;
        ensure!((3.5..=4.5).contains(&ratio), "λ = {want}: error ratio {ratio}");
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    let elapsed = t.elapsed();
    ensure!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    Ok(format!("loop 1, 4; {} roots below k=3, error ratios {lo:.3}..{hi:.3}", exact.len()))
}

fn constant_branch(sys: &DiscreteSystem) -> std::result::Result<Branch, String> {
    let settings = ContinuationSettings { lambda_min: -1.0, ds_max: 0.02, ..Default::default() };
    let seed = ok(constant_seed(sys, -0.01))?;
    ok(continue_branch(sys, &seed, &Orientation::DecreasingLambda, &settings))
}

fn nearest_bp(branch: &Branch, lambda0: f64, tol: f64) -> std::result::Result<BranchPoint, String> {
    branch
        .tagged(EventTag::BranchPoint)
        .into_iter()
        .map(|i| branch.points[i].clone())
        .find(|p| (p.lambda - lambda0).abs() <= tol)
        .ok_or_else(|| format!("no branch point within {tol} of {lambda0}"))
}

fn constant_bifurcations() -> Outcome {
    let h = 0.05;
    let sys = dumbbell(2.0, h)?;
    let (odd, even) = first_modes(2.0)?;
    let branch = constant_branch(&sys)?;
    let mut report = Vec::new();
    for (gamma, kind) in [(odd, BifurcationKind::Pitchfork), (even, BifurcationKind::Transcritical)] {
        let lambda0 = -gamma * gamma / 2.0;
        let bp = nearest_bp(&branch, lambda0, 5.0 * h * h)?;
        let (phi, lambda) = ok(refine_singular_point(&sys, &bp.state, bp.lambda))?;
        let th = ok(compute_thetas(&sys, &phi, lambda))?;
        let got = classify(&th, default_zero_tol(&th)).kind;
        ensure!(got == kind, "at Λ = {lambda}: {got:?}, expected {kind:?}");
        report.push(format!("{kind:?} at Λ={:.5} (target {lambda0:.5})", bp.lambda));
    }
    Ok(report.join("; "))
}

fn centered_fold() -> Outcome {
    let sys = dumbbell(2.0, 0.05)?;
    let (_, even) = first_modes(2.0)?;
    let branch = constant_branch(&sys)?;
    let bp = nearest_bp(&branch, -even * even / 2.0, 5.0 * 0.05 * 0.05)?;
    let settings = ContinuationSettings { lambda_min: -1.0, ds_max: 0.02, ..Default::default() };
    let halves = ok(switch_and_continue(&sys, &bp, &settings))?;
    let (mut fold, mut pitchfork) = (None, None);
    for half in &halves {
        for (i, _) in half.events() {
            let p = &half.points[i];
            let (phi, lambda) = ok(refine_singular_point(&sys, &p.state, p.lambda))?;
            let th = ok(compute_thetas(&sys, &phi, lambda))?;
            match classify(&th, default_zero_tol(&th)).kind {
                BifurcationKind::SaddleNode => fold = Some((lambda, p.q)),
                BifurcationKind::Pitchfork => pitchfork = Some((lambda, p.q)),
                _ => {}
            }
        }
    }
    let (fl, fq) = fold.ok_or("no fold on the centered branch")?;
    ensure!((fl + 0.19).abs() <= 0.02, "fold at Λ = {fl}");
    let (pl, pq) = pitchfork.ok_or("no pitchfork on the centered branch")?;
    ensure!(
        pq > fq,
        "fold at Λ={fl:.5} Q={fq:.4}, but the pitchfork at Λ={pl:.5} Q={pq:.4} lies past the fold, not on the upper branch"
    );
    Ok(format!("fold Λ={fl:.5} Q={fq:.4}; pitchfork Λ={pl:.5} Q={pq:.4}"))
}

fn theta2_degeneration() -> Outcome {
    let mut last = f64::INFINITY;
    let mut values = Vec::new();
    for l in [2.0, 15.0, 50.0] {
        let sys = dumbbell(l, 0.05)?;
        let (_, even) = first_modes(l)?;
        let th = ok(constant_branch_thetas(&sys, even))?;
        let t2 = th.theta2.abs();
        ensure!(t2 < last, "L={l}: |Θ₂| = {t2:e} after {last:e}");
        last = t2;
        values.push(format!("L={l}: {t2:.3e}"));
    }
    Ok(format!("|Θ₂| {}", values.join(", ")))
}

fn epsilon_slope() -> Outcome {
    let mut slopes = Vec::new();
    for parity in [Parity::Even, Parity::Odd] {
        let mut errs = Vec::new();
        for e in [0.02, 0.01, 0.005] {
            let (k, s) = ok(epsilon_expansion_check(1, parity, e))?;
            errs.push((k - s).abs());
        }
        let slope = (errs[0] / errs[2]).log2() / 2.0;
        ensure!(slope >= 3.7, "{parity:?}: slope {slope}");
        slopes.push(format!("{parity:?} {slope:.3}"));
    }
    Ok(format!("log-log slopes {}", slopes.join(", ")))
}

fn enumeration_consistency() -> Outcome {
    let l = 2.0;
    let g = ok(build_dumbbell(l))?;
    let sys = dumbbell(l, 0.05)?;
    let scan = ok(find_standing_waves(-1.0, l, &ScanSettings::default(), dumbbell_intervals(l, 0.05)))?;
    let mut checks = Vec::new();
    for w in &scan.waves {
        let c = ok(fd_verify(&sys, &w.shot.trajectory, -1.0))?;
        ensure!(c.residual <= FD_TOL, "root q = {}: FD residual {:e}", w.shot.q, c.residual);
        checks.push(c);
    }
    let roots: Vec<f64> = checks.iter().map(|c| c.power).collect();
    let settings = ContinuationSettings {
        ds: 0.01,
        ds_max: 0.02,
        lambda_min: -1.5,
        lambda_max: -0.5,
        max_steps: 3000,
        detect_events: false,
        ..Default::default()
    };
    // Powers at which some continuation branch crosses Λ = -1.
    let mut crossings = Vec::new();
    for c in &checks {
        let seed = ok(seed_from_guess(&sys, &c.state, -1.0, 1e-11))?;
        for or in [Orientation::DecreasingLambda, Orientation::IncreasingLambda] {
            let (branch, _) = continue_branch_partial(&sys, &seed, &or, &settings);
            for pair in branch.points.windows(2) {
                let (a, b) = (&pair[0], &pair[1]);
                if (a.lambda + 1.0) * (b.lambda + 1.0) > 0.0 || a.lambda == b.lambda {
                    continue;
                }
                let t = (-1.0 - a.lambda) / (b.lambda - a.lambda);
                let guess: Vec<f64> = a.state.iter().zip(&b.state).map(|(x, y)| x + t * (y - x)).collect();
                if let Ok(state) = sys.newton(&guess, -1.0, 1e-11, 30) {
                    crossings.push(sys.power(&state));
                }
            }
        }
    }
    let gap = |q: f64, set: &[f64]| set.iter().map(|r| (r - q).abs()).fold(f64::INFINITY, f64::min);
    for &q in &roots {
        ensure!(gap(q, &crossings) <= 1e-6, "root Q = {q} not met by continuation");
    }
    for &q in &crossings {
        ensure!(gap(q, &roots) <= 1e-6, "continuation crosses Λ = -1 at Q = {q}, not a shooting root");
    }

    let mut triples = 0;
    for lambda in [0.5, -1.0, -3.0] {
        for t in enumerate_complete(lambda, l, 2, 2) {
            let c = ok(fd_verify_refining(&g, 0.025, 2, lambda, |iv| t.materialize(lambda, l, [iv[0], iv[1], iv[2]])))
                .map_err(|e| format!("{t} at {lambda}: {e}"))?;
            ensure!(c.check.residual <= FD_TOL, "{t} at {lambda}: residual {:e}", c.check.residual);
            triples += 1;
        }
    }

    let rep = ok(hybrid_waves(l, 2, &HybridSettings::default()))?;
    let mut hybrids = 0;
    for b in &rep.branches {
        for p in &b.points {
            let lp = LollipopPoint { lambda: p.lambda, q: p.q, leaf: p.leaf };
            let c = ok(fd_verify_refining(&g, 0.025, 3, p.lambda, |iv| stitch(&lp, b.wave, l, [iv[0], iv[1], iv[2]])))
                .map_err(|e| format!("{:?} at Λ = {}: {e}", b.wave, p.lambda))?;
            ensure!(c.check.residual <= FD_TOL, "{:?} at Λ = {}: residual {:e}", b.wave, p.lambda, c.check.residual);
            hybrids += 1;
        }
    }
    ensure!(hybrids > 0, "no hybrid solutions");
    Ok(format!(
        "{} shooting roots matched by {} continuation crossings; {triples} triples and {hybrids} hybrid points pass FD",
        roots.len(),
        crossings.len()
    ))
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new_with_rng(Config { cases, failure_persistence: None, ..Config::default() }, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn elliptic_layer() -> Outcome {
    let cases = 10_000;
    ok(runner(cases).run(&(-50.0f64..50.0, 0.0f64..0.999_999), |(u, k)| {
        let (sn, cn, dn) = jacobi(u, k);
        prop_assert!((sn * sn + cn * cn - 1.0).abs() <= 1e-12);
        prop_assert!((dn * dn + k * k * sn * sn - 1.0).abs() <= 1e-12);
        Ok(())
    }))?;
    ok(runner(cases).run(&(0.01f64..10.0, any::<bool>(), 0.0f64..1.0, -PI..PI, -20.0f64..20.0), |(lambda, neg, t, phase, x)| {
        // Keep away from the singular modulus 1/sqrt 2.
        let (lambda, k) = if neg { (-lambda, 0.76 + 0.239 * t) } else { (lambda, 0.65 * t) };
        let w = EllipticWave::cnoidal(lambda, k, phase).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!(w.ode_residual(x).abs() <= 1e-9);
        Ok(())
    }))?;
    ok(runner(cases).run(&(-10.0f64..-0.01, 0.0f64..0.999, -PI..PI, -20.0f64..20.0), |(lambda, k, phase, x)| {
        let w = EllipticWave::dnoidal(lambda, k, phase).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!(w.ode_residual(x).abs() <= 1e-9);
        Ok(())
    }))?;

    let mags: Vec<f64> = (0..50).map(|i| 10f64.powf(-1.0 + 5.2 * i as f64 / 49.0)).collect();
    let grid: Vec<f64> = mags.iter().map(|m| -m).chain(mags.iter().copied()).collect();
    let mut cells = 0;
    for &lambda in &grid {
        for n in 1..=100u32 {
            for kind in [WaveKind::Cn, WaveKind::Dn] {
                let found = quantize_loop(lambda, n, kind).is_some();
                ensure!(found == loop_wave_exists(lambda, n, kind), "Λ = {lambda}, n = {n}, {kind:?}: quantization disagrees");
                cells += 1;
            }
        }
    }
    Ok(format!("{} property cases, {cells} grid cells agree", 3 * cases))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("bowtie pitchfork and transcritical", bowtie_events),
        ("circle-hyperbola threshold", threshold),
        ("branch-4 fold and branch-7 saddle-node", fold_and_saddle_node),
        ("dumbbell linear spectrum", linear_spectrum),
        ("constant-branch bifurcations", constant_bifurcations),
        ("centered-branch fold", centered_fold),
        ("transcritical to pitchfork degeneration", theta2_degeneration),
        ("small-loop series order", epsilon_slope),
        ("enumeration consistency", enumeration_consistency),
        ("elliptic layer", elliptic_layer),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS {name} ({secs:.2} s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name} ({secs:.2} s): {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
