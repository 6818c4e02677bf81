use qgraph::cli::run;
use serde_json::Value;
use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

fn qgraph(args: &[&str]) -> i32 {
    run(std::iter::once("qgraph").chain(args.iter().copied()))
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn csv_rows(p: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(p).unwrap().records().map(|r| r.unwrap()).collect()
}

/// Every file below `dir`, keyed by relative path.
fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.insert(p.strip_prefix(root).unwrap().display().to_string(), std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

#[test]
fn spectrum_lists_the_loop_modes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("spectrum.csv");
    assert_eq!(qgraph(&["spectrum", "--graph", "dumbbell", "--L", "2", "--kmax", "3", "--out", path(&out)]), 0);
    let rows = csv_rows(&out);
    let loops: Vec<f64> = rows.iter().filter(|r| &r[2] == "loop").map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(loops, vec![1.0, 2.0, 3.0]);
    assert!(rows.iter().filter(|r| &r[2] == "loop").all(|r| &r[3] == "2"));
    for r in &rows {
        let (k, lambda): (f64, f64) = (r[0].parse().unwrap(), r[1].parse().unwrap());
        assert!((lambda - k * k).abs() <= 1e-12 * lambda.max(1.0));
    }
    let m = read_json(&dir.path().join("spectrum.manifest.json"));
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(m["parameters"]["kmax"], 3.0);
    assert_eq!(m["parameters"]["h"], 0.02);
}

#[test]
fn spectrum_on_lollipop_and_interval() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("interval.csv");
    assert_eq!(qgraph(&["spectrum", "--graph", "interval", "--L", "3.141592653589793", "--kmax", "3.5", "--out", path(&out)]), 0);
    let ks: Vec<f64> = csv_rows(&out).iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(ks.len(), 4);
    for (n, k) in ks.iter().enumerate() {
        assert!((k - n as f64).abs() < 1e-12);
    }
    let out = dir.path().join("lollipop.csv");
    assert_eq!(qgraph(&["spectrum", "--graph", "lollipop", "--L", "2", "--kmax", "2.5", "--h", "0.01", "--out", path(&out)]), 0);
    let rows = csv_rows(&out);
    assert_eq!(&rows[0][2], "constant");
    // Loop modes odd about the junction do not see the stem: k = 1, 2 up to discretization error.
    for j in [1.0, 2.0] {
        assert!(rows.iter().any(|r| (r[0].parse::<f64>().unwrap() - j).abs() < 1e-3), "k = {j}");
    }
}

#[test]
fn bowtie_events_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bowtie.csv");
    assert_eq!(qgraph(&["bowtie", "--events", "--out", path(&out)]), 0);
    let ev = read_json(&dir.path().join("bowtie.events.json"));
    let find = |kind: &str| ev.as_array().unwrap().iter().find(|e| e["kind"] == kind).unwrap().clone();
    let pf = find("pitchfork");
    assert!((pf["omega"].as_f64().unwrap() + 0.5).abs() < 1e-9);
    assert!((pf["Q"].as_f64().unwrap() - 2.5).abs() < 1e-9);
    let tc = find("transcritical");
    assert!((tc["omega"].as_f64().unwrap() + 2.5).abs() < 1e-9);
    assert!((tc["Q"].as_f64().unwrap() - 12.5).abs() < 1e-9);

    let mut rd = csv::Reader::from_path(&out).unwrap();
    assert_eq!(rd.headers().unwrap(), vec!["branch_id", "theta", "omega", "Q", "a", "b", "c"]);
    let ids: std::collections::BTreeSet<String> = rd.records().map(|r| r.unwrap()[0].to_string()).collect();
    assert_eq!(ids.len(), 7);
}

#[test]
fn empty_window_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b.csv");
    for w in ["0:0", "-1:-2"] {
        let status = Command::new(env!("CARGO_BIN_EXE_qgraph"))
            .args(["continue", "--lambda-window", w, "--out", path(&out)])
            .output()
            .unwrap();
        assert_eq!(status.status.code(), Some(2), "window {w}");
    }
    assert!(!out.exists());
    assert!(!dir.path().join("qgraph-diagnostic.json").exists());
}

#[test]
fn usage_errors_exit_2_and_help_exits_0() {
    let bin = env!("CARGO_BIN_EXE_qgraph");
    assert_eq!(Command::new(bin).arg("frobnicate").output().unwrap().status.code(), Some(2));
    assert_eq!(Command::new(bin).args(["spectrum", "--kmax", "x"]).output().unwrap().status.code(), Some(2));
    assert_eq!(Command::new(bin).arg("--help").output().unwrap().status.code(), Some(0));
    assert_eq!(Command::new(bin).arg("--version").output().unwrap().status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    assert_eq!(qgraph(&["spectrum", "--graph", path(&missing), "--out", path(&dir.path().join("s.csv"))]), 2);
}

#[test]
fn continue_then_classify_constant_crossings() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let branch = d.join("branch.csv");
    let sols = d.join("sol");
    let args = ["continue", "--graph", "dumbbell", "--L", "2", "--from", "constant", "--lambda-window", "-3:0"];
    assert_eq!(qgraph(&[&args[..], &["--ds", "0.01", "--out", path(&branch), "--solutions", path(&sols), "--plot"]].concat()), 0);
    assert!(d.join("branch.svg").exists());
    let rows = csv_rows(&branch);
    let bps: Vec<usize> = rows.iter().enumerate().filter(|(_, r)| r[3].contains("branch_point")).map(|(i, _)| i).collect();
    assert!(bps.len() >= 2);
    let modes = qgraph::spectrum::find_modes(2.0, 3.0).unwrap();
    let odd = modes.first(qgraph::spectrum::ModeFamily::Odd).unwrap();
    let even = modes.first(qgraph::spectrum::ModeFamily::Even).unwrap();

    let classify = |index: usize| {
        let out = d.join(format!("c{index}.json"));
        let code = qgraph(&[
            "classify", "--branch", path(&branch), "--solutions", path(&sols), "--index", &index.to_string(), "--out",
            path(&out),
        ]);
        assert_eq!(code, 0);
        read_json(&out)
    };
    let first = classify(bps[0]);
    assert_eq!(first["kind"], "pitchfork");
    assert!((first["lambda0"].as_f64().unwrap() + odd * odd / 2.0).abs() < 5.0 * 0.05 * 0.05);
    assert_eq!(first["thetas"].as_array().unwrap().len(), 5);
    let second = classify(bps[1]);
    assert_eq!(second["kind"], "transcritical");
    assert!((second["lambda0"].as_f64().unwrap() + even * even / 2.0).abs() < 5.0 * 0.05 * 0.05);
    assert!(second["side"].is_string());
}

#[test]
fn numerical_failure_exits_3_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let branch = d.join("branch.csv");
    let sols = d.join("sol");
    assert_eq!(qgraph(&["continue", "--lambda-window", "-0.5:0", "--out", path(&branch), "--solutions", path(&sols)]), 0);
    // No stored state meets an impossible residual bound.
    let out = d.join("out").join("c.json");
    let code = qgraph(&[
        "classify", "--branch", path(&branch), "--solutions", path(&sols), "--index", "3", "--residual-tol", "1e-300",
        "--out", path(&out),
    ]);
    assert_eq!(code, 3);
    let diag = read_json(&d.join("out").join("qgraph-diagnostic.json"));
    assert_eq!(diag["exit_code"], 3);
    assert_eq!(diag["command"], "classify");
    assert!(diag["error"].as_str().unwrap().contains("residual"));
}

#[test]
fn reruns_are_bit_identical() {
    let runs: Vec<BTreeMap<String, Vec<u8>>> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            let d = dir.path();
            let p = |name: &str| d.join(name).display().to_string();
            assert_eq!(qgraph(&["continue", "--lambda-window", "-1:0", "--switch", "--plot", "--out", &p("c/branch.csv"), "--solutions", &p("c/sol")]), 0);
            assert_eq!(qgraph(&["bowtie", "--events", "--plot", "--points", "100", "--out", &p("b/bowtie.csv")]), 0);
            assert_eq!(qgraph(&["enumerate", "--mode", "complete", "--lambda", "-1", "--out", &p("e")]), 0);
            assert_eq!(qgraph(&["enumerate", "--mode", "shoot", "--lambda", "-1", "--grid", "400", "--plot", "--out", &p("s")]), 0);
            let mut snap = snapshot(d);
            // Manifests record the argument vector, which names this run's temporary directory.
            snap.retain(|k, _| !k.ends_with("manifest.json"));
            snap
        })
        .collect();
    assert!(runs[0].len() > 50);
    assert_eq!(runs[0].keys().collect::<Vec<_>>(), runs[1].keys().collect::<Vec<_>>());
    for (k, v) in &runs[0] {
        assert!(runs[1][k] == *v, "{k} differs between runs");
    }
}

#[test]
fn enumerate_shoot_writes_roots_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("shoot");
    assert_eq!(qgraph(&["enumerate", "--mode", "shoot", "--lambda", "-1", "--L", "2", "--out", path(&out), "--verify"]), 0);
    let m = read_json(&out.join("manifest.json"));
    assert_eq!(m["command"], "enumerate");
    let roots = m["results"]["roots"].as_array().unwrap();
    let direct = qgraph::shooting::find_standing_waves(
        -1.0,
        2.0,
        &Default::default(),
        qgraph::shooting::dumbbell_intervals(2.0, 0.01),
    )
    .unwrap();
    assert_eq!(roots.len(), direct.waves.len());
    // The constant solution sqrt(1/2) is one of the roots.
    assert!(roots.iter().any(|r| (r["q"].as_f64().unwrap() - 0.5f64.sqrt()).abs() < 1e-8));
    for r in roots {
        assert!(out.join(r["file"].as_str().unwrap()).exists());
        assert!(r["fd"]["residual"].as_f64().unwrap() <= 1e-8);
    }
    assert_eq!(csv_rows(&out.join("roots.csv")).len(), roots.len());
}

#[test]
fn enumerate_complete_lists_triples_and_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("complete");
    assert_eq!(qgraph(&["enumerate", "--mode", "complete", "--lambda", "-1", "--out", path(&out), "--verify"]), 0);
    let m = read_json(&out.join("manifest.json"));
    let triples = m["results"]["triples"].as_array().unwrap();
    let names: Vec<&str> = triples.iter().map(|t| t["triple"].as_str().unwrap()).collect();
    for t in ["(0,0,0)", "(Λ,Λ,Λ)", "(1,0,1)", "(1,-1,1)"] {
        assert!(names.contains(&t), "{t} missing from {names:?}");
    }
    for t in triples {
        assert!(t["fd"]["residual"].as_f64().unwrap() <= 1e-8, "{}", t["triple"]);
    }
    let schedule = m["results"]["schedule"].as_array().unwrap();
    assert!(!schedule.is_empty());
    let lambdas: Vec<f64> = schedule.iter().map(|e| e["lambda"].as_f64().unwrap()).collect();
    assert!(lambdas.windows(2).all(|w| w[0] >= w[1]));
    assert_eq!(csv_rows(&out.join("schedule.csv")).len(), schedule.len());
}

#[test]
fn enumerate_requires_lambda_outside_hybrid_mode() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(qgraph(&["enumerate", "--mode", "complete", "--out", path(dir.path())]), 2);
}

#[test]
fn enumerate_hybrid_small_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("hybrid");
    let code = qgraph(&[
        "enumerate", "--mode", "hybrid", "--L", "2", "--n-max", "1", "--seed-levels", "3", "--seed-grid", "200", "--plot",
        "--out", path(&out),
    ]);
    assert_eq!(code, 0);
    let m = read_json(&out.join("manifest.json"));
    let branches = m["results"]["branches"].as_array().unwrap();
    assert!(!branches.is_empty());
    for b in branches {
        assert!(out.join(b["representative"]["file"].as_str().unwrap()).exists());
        assert_eq!(b["wave"]["n"], 1);
    }
    assert!(out.join("plots").join("hybrid_diagram.svg").exists());
    let rows = csv_rows(&out.join("hybrid_branches.csv"));
    let total: u64 = branches.iter().map(|b| b["points"].as_u64().unwrap()).sum();
    assert_eq!(rows.len() as u64, total);
}

#[test]
fn render_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let bt = d.join("bowtie.csv");
    assert_eq!(qgraph(&["bowtie", "--events", "--points", "50", "--out", path(&bt)]), 0);
    let svg_path = d.join("bowtie.svg");
    let ev = d.join("bowtie.events.json");
    assert_eq!(qgraph(&["render", "--bowtie", path(&bt), "--bowtie-events", path(&ev), "--out", path(&svg_path)]), 0);
    let svg = std::fs::read_to_string(&svg_path).unwrap();
    assert_eq!(svg.matches("<g class=\"series\"").count(), 7);
    assert_eq!(svg.matches("class=\"marker ").count(), 5);

    let branch = d.join("branch.csv");
    let sols = d.join("sol");
    assert_eq!(qgraph(&["continue", "--lambda-window", "-0.5:0", "--out", path(&branch), "--solutions", path(&sols)]), 0);
    let out = d.join("branch_plot.svg");
    assert_eq!(qgraph(&["render", "--branch", path(&branch), "--out", path(&out)]), 0);
    assert_eq!(std::fs::read_to_string(&out).unwrap().matches("<polyline").count(), 1);
    let prof = d.join("profile.svg");
    let sol = sols.join("point_00005.csv");
    assert_eq!(qgraph(&["render", "--profile", path(&sol), "--out", path(&prof)]), 0);
    assert_eq!(std::fs::read_to_string(&prof).unwrap().matches("<polyline").count(), 3);
    assert_eq!(qgraph(&["render", "--out", path(&d.join("empty.svg"))]), 2);
}

#[test]
fn continue_from_a_solution_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let shoot = d.join("shoot");
    assert_eq!(qgraph(&["enumerate", "--mode", "shoot", "--lambda", "-1", "--h", "0.05", "--out", path(&shoot)]), 0);
    let m = read_json(&shoot.join("manifest.json"));
    let root = &m["results"]["roots"][0];
    let file = shoot.join(root["file"].as_str().unwrap());
    let out = d.join("from_root.csv");
    let code = qgraph(&[
        "continue", "--from", path(&file), "--lambda0", "-1", "--lambda-window", "-1.2:-0.8", "--out", path(&out),
    ]);
    assert_eq!(code, 0);
    let rows = csv_rows(&out);
    let first_q: f64 = rows[0][2].parse().unwrap();
    // Seed Q on the h = 0.05 grid agrees with the shooting power to discretization accuracy.
    assert!((first_q - root["Q"].as_f64().unwrap()).abs() < 1e-2 * first_q.max(1.0));
    assert_eq!(qgraph(&["continue", "--from", path(&file), "--out", path(&out)]), 2);
}
