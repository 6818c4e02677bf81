use super::{ensure_parent, fmt_f64, write_json, RunContext, Window};
use crate::elliptic::WaveKind;
use crate::graph::{build_dumbbell, GraphFunction, MetricGraph};
use crate::render::{render_diagram, render_profile, DiagramStyle, Series};
use crate::shooting::{
    complete_bifurcation_schedule, dumbbell_intervals, enumerate_complete, fd_verify_refining, find_standing_waves,
    hybrid_waves, orbit_size, shoot_sampled, stitch, HybridSettings, LollipopPoint, ScanSettings, DEFAULT_SCAN_POINTS,
    ROOT_TOL,
};
use crate::{Error, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EnumerateMode {
    /// Roots of the dumbbell shooting function at one Lambda.
    Shoot,
    /// Complete-loop (n1, m, n3) solutions at one Lambda and their bifurcation schedule.
    Complete,
    /// Hybrid families over a Lambda window.
    Hybrid,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EnumerateArgs {
    #[arg(long, value_enum)]
    pub mode: EnumerateMode,
    /// Lambda for the shoot and complete modes.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    /// Bridge half-length of the dumbbell.
    #[arg(long = "L", default_value_t = 2.0)]
    #[serde(rename = "L")]
    pub half_length: f64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Sample spacing of the written solutions.
    #[arg(long, default_value_t = 0.01)]
    pub h: f64,
    /// Upper end of the q window: initial value (shoot, default 1.3) or loop-centre value (hybrid, default 1.8).
    #[arg(long)]
    pub q_max: Option<f64>,
    /// Scan points in the q window (shoot).
    #[arg(long, default_value_t = DEFAULT_SCAN_POINTS)]
    pub grid: usize,
    /// Bisection stops once |f(q)| is below this (shoot).
    #[arg(long, default_value_t = ROOT_TOL)]
    pub root_tol: f64,
    /// Largest loop index (complete, hybrid).
    #[arg(long, default_value_t = 2)]
    pub n_max: u32,
    /// Largest bridge index (complete).
    #[arg(long, default_value_t = 2)]
    pub m_max: u32,
    /// Lambda window of the hybrid search.
    #[arg(long, default_value = "-2:0.8", allow_hyphen_values = true)]
    pub lambda_window: Window,
    /// Lambda levels scanned for lollipop curve seeds (hybrid).
    #[arg(long, default_value_t = 9)]
    pub seed_levels: usize,
    /// q samples per seed level (hybrid).
    #[arg(long, default_value_t = 600)]
    pub seed_grid: usize,
    /// Check every written solution against the finite-difference system.
    #[arg(long)]
    pub verify: bool,
    /// First grid spacing of the check; halved up to three times if Newton fails.
    #[arg(long, default_value_t = 0.025)]
    pub verify_h: f64,
    /// Render solution profiles (and the hybrid diagram) into `<out>/plots`.
    #[arg(long)]
    pub plot: bool,
}

const VERIFY_HALVINGS: usize = 3;

struct Written {
    name: String,
    file: PathBuf,
    profile: GraphFunction,
}

fn write_solution(dir: &Path, name: &str, f: &GraphFunction) -> Result<Written> {
    let file = dir.join("solutions").join(format!("{name}.csv"));
    ensure_parent(&file)?;
    f.write_csv(BufWriter::new(File::create(&file)?))?;
    Ok(Written { name: name.to_string(), file, profile: f.clone() })
}

fn relative(dir: &Path, p: &Path) -> String {
    p.strip_prefix(dir).unwrap_or(p).display().to_string()
}

/// FD residual of a solution rebuilt on successively finer grids.
fn verify(graph: &MetricGraph, a: &EnumerateArgs, lambda: f64, sample: impl Fn(&[usize]) -> Result<GraphFunction>) -> Result<Value> {
    let r = fd_verify_refining(graph, a.verify_h, VERIFY_HALVINGS, lambda, |c| {
        if c.len() != 3 {
            return Err(Error::InvalidArgument("expected a three-edge dumbbell grid".into()));
        }
        sample(c)
    })?;
    Ok(json!({ "h": r.h, "residual": r.check.residual, "gap": r.check.gap }))
}

fn need_lambda(a: &EnumerateArgs) -> Result<f64> {
    match a.lambda {
        Some(l) if l.is_finite() => Ok(l),
        _ => Err(Error::InvalidArgument(format!("--lambda is required in {:?} mode", a.mode).to_lowercase())),
    }
}

fn power(f: &GraphFunction) -> f64 {
    f.integrate(|v| v * v)
}

pub(super) fn enumerate(ctx: &RunContext, a: &EnumerateArgs) -> Result<()> {
    if !(a.h > 0.0 && a.h.is_finite() && a.verify_h > 0.0) {
        return Err(Error::InvalidArgument("grid spacings must be positive".into()));
    }
    let graph = build_dumbbell(a.half_length)?;
    std::fs::create_dir_all(&a.out)?;
    let intervals = dumbbell_intervals(a.half_length, a.h);
    let (results, written, mut outputs) = match a.mode {
        EnumerateMode::Shoot => shoot_mode(a, &graph, intervals)?,
        EnumerateMode::Complete => complete_mode(a, &graph, intervals)?,
        EnumerateMode::Hybrid => hybrid_mode(a, &graph, intervals)?,
    };
    outputs.extend(written.iter().map(|w| w.file.clone()));
    if a.plot {
        let dir = a.out.join("plots");
        std::fs::create_dir_all(&dir)?;
        for w in &written {
            let style = DiagramStyle {
                title: w.name.clone(),
                x_label: "x (edges end to end)".into(),
                y_label: "φ".into(),
                ..Default::default()
            };
            let path = dir.join(format!("{}.svg", w.name));
            std::fs::write(&path, render_profile(&w.profile, &style)?)?;
            outputs.push(path);
        }
    }
    let outputs: Vec<PathBuf> = outputs.iter().map(|p| PathBuf::from(relative(&a.out, p))).collect();
    write_json(&a.out.join("manifest.json"), &ctx.manifest("enumerate", a, &outputs, results)?)
}

type ModeOutput = (Value, Vec<Written>, Vec<PathBuf>);

fn shoot_mode(a: &EnumerateArgs, graph: &MetricGraph, intervals: [usize; 3]) -> Result<ModeOutput> {
    let lambda = need_lambda(a)?;
    let l = a.half_length;
    let settings = ScanSettings { q_min: 0.0, q_max: a.q_max.unwrap_or(1.3), grid: a.grid, root_tol: a.root_tol };
    let ws = find_standing_waves(lambda, l, &settings, intervals)?;

    let scan_path = a.out.join("scan.csv");
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&scan_path)?));
    w.write_record(["q", "f"])?;
    for (q, f) in &ws.scan.samples {
        w.write_record(&[fmt_f64(*q), f.map(fmt_f64).unwrap_or_default()])?;
    }
    w.flush()?;

    let mut written = Vec::new();
    let mut roots = Vec::new();
    for (i, wave) in ws.waves.iter().enumerate() {
        let shot = &wave.shot;
        let sol = write_solution(&a.out, &format!("root_{i:03}"), &shot.trajectory)?;
        let mut entry = json!({
            "index": i,
            "q": shot.q,
            "Q": power(&shot.trajectory),
            "f": shot.f,
            "far_centre": shot.far_centre,
            "mirror": wave.mirror,
            "file": relative(&a.out, &sol.file),
        });
        if a.verify {
            let q = shot.q;
            entry["fd"] = verify(graph, a, lambda, |c| Ok(shoot_sampled(q, lambda, l, [c[0], c[1], c[2]])?.trajectory))?;
        }
        roots.push(entry);
        written.push(sol);
    }

    let roots_path = a.out.join("roots.csv");
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&roots_path)?));
    w.write_record(["index", "q", "Q", "mirror"])?;
    for (i, wave) in ws.waves.iter().enumerate() {
        let mirror = wave.mirror.map(|m| m.to_string()).unwrap_or_default();
        w.write_record(&[i.to_string(), fmt_f64(wave.shot.q), fmt_f64(power(&wave.shot.trajectory)), mirror])?;
    }
    w.flush()?;

    let results = json!({
        "lambda": lambda,
        "q_max": settings.q_max,
        "roots": roots,
        "divergent": ws.scan.divergent,
        "unresolved": ws.scan.unresolved,
    });
    Ok((results, written, vec![scan_path, roots_path]))
}

fn complete_mode(a: &EnumerateArgs, graph: &MetricGraph, intervals: [usize; 3]) -> Result<ModeOutput> {
    let lambda = need_lambda(a)?;
    let l = a.half_length;
    let triples = enumerate_complete(lambda, l, a.n_max, a.m_max);
    let mut written = Vec::new();
    let mut entries = Vec::new();
    for (i, t) in triples.iter().enumerate() {
        let f = t.materialize(lambda, l, intervals)?;
        let sol = write_solution(&a.out, &format!("triple_{i:03}"), &f)?;
        let mut entry = json!({
            "index": i,
            "triple": t.to_string(),
            "Q": power(&f),
            "orbit_size": orbit_size(&f),
            "birth_lambda": t.birth_lambda(l),
            "file": relative(&a.out, &sol.file),
        });
        if a.verify {
            entry["fd"] = verify(graph, a, lambda, |c| t.materialize(lambda, l, [c[0], c[1], c[2]]))?;
        }
        entries.push(entry);
        written.push(sol);
    }

    let schedule = complete_bifurcation_schedule(l, a.n_max, a.m_max);
    let path = a.out.join("schedule.csv");
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&path)?));
    w.write_record(["lambda", "parent", "child", "rule"])?;
    let mut sched = Vec::new();
    for e in &schedule {
        let rule = serde_json::to_value(e.rule)?;
        let rule = rule.as_str().unwrap_or_default().to_string();
        w.write_record(&[fmt_f64(e.lambda), e.parent.to_string(), e.child.to_string(), rule.clone()])?;
        sched.push(json!({ "lambda": e.lambda, "parent": e.parent.to_string(), "child": e.child.to_string(), "rule": rule }));
    }
    w.flush()?;
    let results = json!({ "lambda": lambda, "triples": entries, "schedule": sched });
    Ok((results, written, vec![path]))
}

fn kind_name(k: WaveKind) -> &'static str {
    match k {
        WaveKind::Cn => "cn",
        WaveKind::Dn => "dn",
    }
}

fn hybrid_mode(a: &EnumerateArgs, graph: &MetricGraph, intervals: [usize; 3]) -> Result<ModeOutput> {
    a.lambda_window.validate("lambda window")?;
    let l = a.half_length;
    let defaults = HybridSettings::default();
    let settings = HybridSettings {
        lambda_min: a.lambda_window.min,
        lambda_max: a.lambda_window.max,
        q_max: a.q_max.unwrap_or(defaults.q_max),
        seed_levels: a.seed_levels,
        seed_grid: a.seed_grid,
        ..defaults
    };
    settings.validate()?;
    let report = hybrid_waves(l, a.n_max, &settings)?;

    let curves_path = a.out.join("lollipop_curves.csv");
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&curves_path)?));
    w.write_record(["curve", "lambda", "q", "leaf"])?;
    for (ci, c) in report.curves.iter().enumerate() {
        for p in &c.points {
            w.write_record(&[ci.to_string(), fmt_f64(p.lambda), fmt_f64(p.q), fmt_f64(p.leaf)])?;
        }
    }
    w.flush()?;

    let branches_path = a.out.join("hybrid_branches.csv");
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&branches_path)?));
    w.write_record(["branch", "curve", "wave", "n", "lambda", "q", "leaf", "Q"])?;
    for (bi, b) in report.branches.iter().enumerate() {
        for p in &b.points {
            w.write_record(&[
                bi.to_string(),
                b.curve.to_string(),
                kind_name(b.wave.kind).to_string(),
                b.wave.n.to_string(),
                fmt_f64(p.lambda),
                fmt_f64(p.q),
                fmt_f64(p.leaf),
                fmt_f64(p.power),
            ])?;
        }
    }
    w.flush()?;

    let mut written = Vec::new();
    let mut branches = Vec::new();
    for (bi, b) in report.branches.iter().enumerate() {
        let (lo, hi) = b.points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.lambda), hi.max(p.lambda)));
        let mut entry = json!({
            "index": bi,
            "curve": b.curve,
            "wave": { "kind": kind_name(b.wave.kind), "n": b.wave.n },
            "points": b.points.len(),
            "lambda_range": [lo, hi],
            "folds": b.folds,
        });
        // One representative solution per branch: its middle point.
        if let Some(p) = b.points.get(b.points.len() / 2) {
            let lp = LollipopPoint { lambda: p.lambda, q: p.q, leaf: p.leaf };
            let f = stitch(&lp, b.wave, l, intervals)?;
            let sol = write_solution(&a.out, &format!("hybrid_{bi:03}"), &f)?;
            entry["representative"] = json!({ "lambda": p.lambda, "q": p.q, "Q": p.power, "file": relative(&a.out, &sol.file) });
            if a.verify {
                entry["representative"]["fd"] = verify(graph, a, p.lambda, |c| stitch(&lp, b.wave, l, [c[0], c[1], c[2]]))?;
            }
            written.push(sol);
        }
        branches.push(entry);
    }
    let curves: Vec<Value> = report
        .curves
        .iter()
        .enumerate()
        .map(|(i, c)| json!({ "index": i, "points": c.points.len(), "ends": c.ends }))
        .collect();
    let mut outputs = vec![curves_path, branches_path];
    if a.plot && !report.branches.is_empty() {
        let series: Vec<Series> = report
            .branches
            .iter()
            .enumerate()
            .map(|(i, b)| Series {
                label: format!("{i}: {}{}", kind_name(b.wave.kind), b.wave.n),
                points: b.points.iter().map(|p| (p.lambda, p.power)).collect(),
                markers: Vec::new(),
            })
            .collect();
        let path = a.out.join("plots").join("hybrid_diagram.svg");
        ensure_parent(&path)?;
        let style = DiagramStyle { legend: series.len() <= 20, ..Default::default() };
        std::fs::write(&path, render_diagram(&series, &style)?)?;
        outputs.push(path);
    }
    let results = json!({ "lambda_window": [settings.lambda_min, settings.lambda_max], "curves": curves, "branches": branches });
    Ok((results, written, outputs))
}
