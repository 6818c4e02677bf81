use super::{
    ensure_parent, fmt_f64, sibling, write_json, BowtieArgs, ClassifyArgs, ContinueArgs, Direction, GraphChoice,
    RenderArgs, RunContext, SpectrumArgs,
};
use crate::bowtie::{dst_branch_events, sample_branch, DstBranchPoint, DstEvent};
use crate::classify::{classify, compute_thetas, default_zero_tol, refine_singular_point};
use crate::continuation::{
    constant_seed, continue_branch_partial, seed_from_guess, solution_file_name, switch_and_continue, Branch,
    ContinuationSettings, EventTag, Orientation,
};
use crate::discretize::DiscreteSystem;
use crate::graph::{GraphFunction, MetricGraph};
use crate::render::{render_diagram, render_profile, DiagramStyle, Series};
use crate::spectrum::{fd_eigenvalues, find_modes};
use crate::{Error, Result};
use serde_json::{json, Value};
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

struct SpectrumRow {
    k: f64,
    lambda: f64,
    family: &'static str,
    multiplicity: usize,
}

/// Eigenvalues of the discrete Laplacian up to `k_max^2`, with near-equal values merged.
fn fd_rows(g: &MetricGraph, h: f64, k_max: f64) -> Result<Vec<SpectrumRow>> {
    let sys = DiscreteSystem::new(g, h)?;
    let mut eig = fd_eigenvalues(&sys)?;
    eig.sort_by(f64::total_cmp);
    let mut rows: Vec<SpectrumRow> = Vec::new();
    for lam in eig.into_iter().filter(|&l| l <= k_max * k_max * (1.0 + 1e-12)) {
        // The constant mode comes out at round-off level.
        let lam = if lam.abs() <= 1e-8 { 0.0 } else { lam };
        match rows.last_mut() {
            Some(r) if (lam - r.lambda).abs() <= 1e-8 * lam.max(1.0) => r.multiplicity += 1,
            _ => rows.push(SpectrumRow {
                k: lam.sqrt(),
                lambda: lam,
                family: if lam == 0.0 { "constant" } else { "fd" },
                multiplicity: 1,
            }),
        }
    }
    Ok(rows)
}

pub(super) fn spectrum(ctx: &RunContext, a: &SpectrumArgs) -> Result<()> {
    if !(a.kmax > 0.0 && a.kmax.is_finite()) {
        return Err(Error::InvalidArgument(format!("kmax must be positive, got {}", a.kmax)));
    }
    let g = a.graph.build()?;
    let analytic_dumbbell = match a.graph.graph {
        GraphChoice::Dumbbell => Some(a.graph.half_length),
        GraphChoice::File(_) => g.dumbbell_half_length(),
        _ => None,
    };
    let mut results = json!({});
    let (rows, method) = if let Some(l) = analytic_dumbbell {
        let set = find_modes(l, a.kmax)?;
        results["resonance_warning"] = json!(set.resonance_warning);
        let rows = set
            .modes
            .iter()
            .map(|m| SpectrumRow { k: m.k, lambda: m.lambda, family: m.family.as_str(), multiplicity: m.multiplicity })
            .collect();
        (rows, "secular-factors")
    } else if a.graph.graph == GraphChoice::Interval {
        let len = g.total_length();
        let rows = (0..)
            .map(|n| n as f64 * std::f64::consts::PI / len)
            .take_while(|&k| k <= a.kmax)
            .map(|k| SpectrumRow { k, lambda: k * k, family: if k == 0.0 { "constant" } else { "interval" }, multiplicity: 1 })
            .collect();
        (rows, "closed-form")
    } else {
        (fd_rows(&g, a.h, a.kmax)?, "finite-difference")
    };
    results["method"] = json!(method);
    results["modes"] = json!(rows.len());

    ensure_parent(&a.out)?;
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&a.out)?));
    w.write_record(["k", "lambda", "family", "multiplicity"])?;
    for r in &rows {
        w.write_record(&[fmt_f64(r.k), fmt_f64(r.lambda), r.family.to_string(), r.multiplicity.to_string()])?;
    }
    w.flush()?;
    let m = ctx.manifest("spectrum", a, &[a.out.clone()], results)?;
    write_json(&sibling(&a.out, "manifest.json"), &m)
}

fn write_branch(b: &Branch, path: &Path) -> Result<()> {
    ensure_parent(path)?;
    b.write_csv(BufWriter::new(File::create(path)?))
}

fn event_summary(b: &Branch) -> Value {
    let events: Vec<Value> = b
        .events()
        .map(|(i, p)| {
            let tags: Vec<&str> = p.tags.iter().map(EventTag::as_str).collect();
            json!({ "index": i, "lambda": p.lambda, "Q": p.q, "tags": tags })
        })
        .collect();
    json!({ "points": b.points.len(), "termination": b.termination, "events": events })
}

/// Interval counts of a stored solution, so it can be reloaded on exactly its own grid.
fn system_for(g: &MetricGraph, f: &GraphFunction) -> Result<DiscreteSystem> {
    if f.edges.len() != g.edges.len() {
        return Err(Error::InvalidArgument(format!(
            "solution has {} edges but the graph has {}",
            f.edges.len(),
            g.edges.len()
        )));
    }
    let counts: Vec<usize> = f.edges.iter().map(|e| e.intervals()).collect();
    let h = f.edges.iter().map(|e| e.h).fold(0.0, f64::max);
    DiscreteSystem::with_intervals(g, h, &counts)
}

fn switched_path(out: &Path, index: usize, half: usize) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "branch".into());
    out.with_file_name(format!("{stem}_bp{index:05}_{half}.csv"))
}

pub(super) fn continue_cmd(ctx: &RunContext, a: &ContinueArgs) -> Result<()> {
    let g = a.graph.build()?;
    a.lambda_window.validate("lambda window")?;
    let settings = ContinuationSettings {
        ds: a.ds,
        ds_min: a.ds_min,
        ds_max: a.ds_max,
        lambda_min: a.lambda_window.min,
        lambda_max: a.lambda_window.max,
        max_steps: a.max_steps,
        newton_tol: a.newton_tol,
        max_newton: a.max_newton,
        detect_events: !a.no_events,
        psi_tol: a.psi_tol,
    };
    settings.validate()?;
    let (sys, seed) = if a.from == "constant" {
        let sys = DiscreteSystem::new(&g, a.h)?;
        let start = a.lambda0.unwrap_or(a.lambda_window.max.min(-a.ds));
        if !(start < 0.0 && start >= a.lambda_window.min && start <= a.lambda_window.max) {
            return Err(Error::InvalidArgument(format!(
                "the constant branch needs a negative starting lambda inside the window, got {start}"
            )));
        }
        let seed = constant_seed(&sys, start)?;
        (sys, seed)
    } else {
        let lambda0 = a
            .lambda0
            .ok_or_else(|| Error::InvalidArgument("--lambda0 is required when starting from a solution CSV".into()))?;
        let f = GraphFunction::read_csv(File::open(&a.from)?)?;
        let sys = system_for(&g, &f)?;
        let x = sys.from_function(&f)?;
        let seed = seed_from_guess(&sys, &x, lambda0, a.newton_tol)?;
        (sys, seed)
    };
    let orientation = match a.direction {
        Direction::Decreasing => Orientation::DecreasingLambda,
        Direction::Increasing => Orientation::IncreasingLambda,
    };
    let (mut branch, err) = continue_branch_partial(&sys, &seed, &orientation, &settings);
    branch.origin = a.from.clone();
    write_branch(&branch, &a.out)?;
    let mut outputs = vec![a.out.clone()];
    if let Some(dir) = &a.solutions {
        branch.write_solutions(&sys, dir)?;
        outputs.push(dir.clone());
    }
    let mut results = json!({ "main": event_summary(&branch) });
    let manifest_path = sibling(&a.out, "manifest.json");
    if let Some(e) = err {
        results["error"] = json!(e.to_string());
        write_json(&manifest_path, &ctx.manifest("continue", a, &outputs, results)?)?;
        return Err(e);
    }

    let mut switched = Vec::new();
    if a.switch {
        let mut failures = Vec::new();
        let mut halves = Vec::new();
        for idx in branch.tagged(EventTag::BranchPoint) {
            match switch_and_continue(&sys, &branch.points[idx], &settings) {
                Ok(bs) => {
                    for (j, b) in bs.into_iter().enumerate() {
                        let path = switched_path(&a.out, idx, j);
                        write_branch(&b, &path)?;
                        if let Some(dir) = &a.solutions {
                            b.write_solutions(&sys, &dir.join(format!("bp{idx:05}_{j}")))?;
                        }
                        let mut s = event_summary(&b);
                        s["from_index"] = json!(idx);
                        s["file"] = json!(path.display().to_string());
                        halves.push(s);
                        outputs.push(path);
                        switched.push(b);
                    }
                }
                Err(e) => failures.push(json!({ "index": idx, "error": e.to_string() })),
            }
        }
        results["switched"] = json!(halves);
        results["switch_failures"] = json!(failures);
    }

    if a.plot {
        let mut series = vec![Series::from_branch(&branch, "main")];
        series.extend(switched.iter().enumerate().map(|(i, b)| Series::from_branch(b, format!("switched {i}"))));
        let path = sibling(&a.out, "svg");
        std::fs::write(&path, render_diagram(&series, &DiagramStyle::default())?)?;
        outputs.push(path);
    }
    write_json(&manifest_path, &ctx.manifest("continue", a, &outputs, results)?)
}

pub(super) fn classify_cmd(ctx: &RunContext, a: &ClassifyArgs) -> Result<()> {
    let g = a.graph.build()?;
    let branch = Branch::read(&a.branch, None, 0.0)?;
    let p = branch.points.get(a.index).ok_or_else(|| {
        Error::InvalidArgument(format!("index {} is out of range: the branch has {} points", a.index, branch.points.len()))
    })?;
    let f = GraphFunction::read_csv(File::open(a.solutions.join(solution_file_name(a.index)))?)?;
    let sys = system_for(&g, &f)?;
    let x = sys.from_function(&f)?;
    let r = sys.residual_norm(&x, p.lambda)?;
    if r > a.residual_tol {
        return Err(Error::Numerical(format!("stored point {} has residual {r:.3e}", a.index)));
    }
    let (phi, lambda) = if a.no_refine { (x, p.lambda) } else { refine_singular_point(&sys, &x, p.lambda)? };
    let thetas = compute_thetas(&sys, &phi, lambda)?;
    let zero_tol = a.zero_tol.unwrap_or_else(|| default_zero_tol(&thetas));
    let c = classify(&thetas, zero_tol);
    let tags: Vec<&str> = p.tags.iter().map(EventTag::as_str).collect();
    let report = json!({
        "index": a.index,
        "lambda0": thetas.lambda0,
        "thetas": thetas.as_array(),
        "kind": c.kind,
        "side": c.side,
        "Q0": thetas.q0,
        "kernel_residual": thetas.kernel_residual,
        "zero_tol": zero_tol,
        "tags": tags,
    });
    match &a.out {
        Some(out) => {
            write_json(out, &report)?;
            let m = ctx.manifest("classify", a, &[out.clone()], report)?;
            write_json(&sibling(out, "manifest.json"), &m)
        }
        None => {
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
    }
}

const BOWTIE_BRANCHES: std::ops::RangeInclusive<u8> = 1..=7;

pub(super) fn bowtie(ctx: &RunContext, a: &BowtieArgs) -> Result<()> {
    if a.points < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 points per branch, got {}", a.points)));
    }
    if !(a.omega_min.is_finite() && a.omega_min < 0.0) {
        return Err(Error::InvalidArgument(format!("omega-min must be negative, got {}", a.omega_min)));
    }
    let branches: Vec<Vec<DstBranchPoint>> =
        BOWTIE_BRANCHES.map(|id| sample_branch(id, a.points, a.omega_min)).collect::<Result<_>>()?;
    ensure_parent(&a.out)?;
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&a.out)?));
    for p in branches.iter().flatten() {
        w.serialize(p)?;
    }
    w.flush()?;
    let mut outputs = vec![a.out.clone()];
    let counts: Vec<usize> = branches.iter().map(Vec::len).collect();
    let mut results = json!({ "points_per_branch": counts });

    let events = if a.events || a.plot { Some(dst_branch_events()?) } else { None };
    if let (true, Some(ev)) = (a.events, &events) {
        let path = a.events_out.clone().unwrap_or_else(|| sibling(&a.out, "events.json"));
        write_json(&path, ev)?;
        results["events"] = json!(ev.len());
        outputs.push(path);
    }
    if a.plot {
        let mut series: Vec<Series> =
            branches.iter().zip(BOWTIE_BRANCHES).map(|(pts, id)| Series::from_dst(format!("branch {id}"), pts)).collect();
        series.push(Series::dst_events(events.as_deref().unwrap_or_default()));
        let style = DiagramStyle { x_label: "Ω".into(), ..Default::default() };
        let path = sibling(&a.out, "svg");
        std::fs::write(&path, render_diagram(&series, &style)?)?;
        outputs.push(path);
    }
    write_json(&sibling(&a.out, "manifest.json"), &ctx.manifest("bowtie", a, &outputs, results)?)
}

/// Bowtie CSV rows grouped by branch in order of first appearance.
fn read_bowtie_csv(path: &Path) -> Result<Vec<Series>> {
    let mut rd = csv::Reader::from_path(path)?;
    let mut series: Vec<(u8, Vec<DstBranchPoint>)> = Vec::new();
    for row in rd.deserialize() {
        let p: DstBranchPoint = row?;
        match series.iter_mut().find(|(id, _)| *id == p.branch_id) {
            Some((_, v)) => v.push(p),
            None => series.push((p.branch_id, vec![p])),
        }
    }
    Ok(series.iter().map(|(id, pts)| Series::from_dst(format!("branch {id}"), pts)).collect())
}

pub(super) fn render(ctx: &RunContext, a: &RenderArgs) -> Result<()> {
    let mut style = DiagramStyle { width: a.width, height: a.height, title: a.title.clone(), ..Default::default() };
    let svg = if let Some(p) = &a.profile {
        let f = GraphFunction::read_csv(File::open(p)?)?;
        style.x_label = "x (edges end to end)".into();
        style.y_label = "φ".into();
        render_profile(&f, &style)?
    } else {
        let mut series = Vec::new();
        for p in &a.branch {
            let b = Branch::read(p, None, 0.0)?;
            let label = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            series.push(Series::from_branch(&b, label));
        }
        if let Some(p) = &a.bowtie {
            series.extend(read_bowtie_csv(p)?);
            if a.branch.is_empty() {
                style.x_label = "Ω".into();
            }
        }
        if let Some(p) = &a.bowtie_events {
            let events: Vec<DstEvent> = serde_json::from_str(&std::fs::read_to_string(p)?)?;
            series.push(Series::dst_events(&events));
        }
        if series.is_empty() {
            return Err(Error::InvalidArgument("nothing to render: pass --branch, --bowtie or --profile".into()));
        }
        render_diagram(&series, &style)?
    };
    ensure_parent(&a.out)?;
    std::fs::write(&a.out, svg)?;
    write_json(&sibling(&a.out, "manifest.json"), &ctx.manifest("render", a, &[a.out.clone()], json!({}))?)
}
