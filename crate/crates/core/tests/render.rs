use qgraph::bowtie::{dst_branch_events, sample_branch};
use qgraph::continuation::{Branch, BranchPoint, EventTag, Termination};
use qgraph::render::{render_diagram, render_profile, DiagramStyle, Series};
use std::f64::consts::PI;
use std::path::PathBuf;

const L: f64 = 2.0;

fn constant_branch() -> Branch {
    let n = 100;
    let points = (0..=n)
        .map(|i| {
            let lambda = -3.0 * i as f64 / n as f64;
            let tags = match i {
                0 => vec![EventTag::Start],
                i if i == n => vec![EventTag::End],
                _ => vec![],
            };
            BranchPoint {
                s: i as f64,
                lambda,
                q: -(4.0 * PI + 2.0 * L) * lambda / 2.0,
                state: vec![],
                tags,
                tangent: vec![],
                psi: f64::NAN,
            }
        })
        .collect();
    Branch { origin: "constant".into(), points, termination: Termination::LeftWindow }
}

fn polylines(svg: &str) -> Vec<Vec<(f64, f64)>> {
    svg.lines()
        .filter(|l| l.starts_with("<polyline"))
        .map(|l| {
            let pts = l.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
            pts.split(' ')
                .map(|p| {
                    let (x, y) = p.split_once(',').unwrap();
                    (x.parse().unwrap(), y.parse().unwrap())
                })
                .collect()
        })
        .collect()
}

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden").join(name)
}

#[test]
fn constant_branch_is_a_straight_line() {
    let svg = render_diagram(&[Series::from_branch(&constant_branch(), "constant")], &DiagramStyle::default()).unwrap();
    let lines = polylines(&svg);
    assert_eq!(lines.len(), 1);
    let pts = &lines[0];
    assert_eq!(pts.len(), 101);
    let (a, b) = (pts[0], pts[pts.len() - 1]);
    // The branch starts at Lambda = 0, Q = 0: right of Lambda = -3 and lower on screen (larger y).
    assert!(a.0 > b.0 && a.1 > b.1);
    let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
    for p in pts {
        let cross = (p.0 - a.0) * (b.1 - a.1) - (p.1 - a.1) * (b.0 - a.0);
        // Coordinates are printed to 0.01 px.
        assert!((cross / len).abs() < 0.02, "point {p:?} is off the line");
    }
    // Start and end tags are not events.
    assert!(!svg.contains("class=\"marker"));
}

#[test]
fn constant_branch_matches_golden_file() {
    let style = DiagramStyle { title: "constant branch, L = 2".into(), ..Default::default() };
    let svg = render_diagram(&[Series::from_branch(&constant_branch(), "constant")], &style).unwrap();
    let path = golden("constant_branch.svg");
    if std::env::var_os("QGRAPH_BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, &svg).unwrap();
    }
    let expected = std::fs::read_to_string(&path).expect("golden file missing; rerun with QGRAPH_BLESS=1");
    assert_eq!(svg, expected);
}

#[test]
fn rendering_is_deterministic() {
    let branches: Vec<Series> =
        (1..=7).map(|id| Series::from_dst(format!("branch {id}"), &sample_branch(id, 200, -6.0).unwrap())).collect();
    let a = render_diagram(&branches, &DiagramStyle::default()).unwrap();
    let b = render_diagram(&branches, &DiagramStyle::default()).unwrap();
    assert_eq!(a.as_bytes(), b.as_bytes());
}

#[test]
fn bowtie_diagram_has_one_curve_per_branch_and_one_marker_per_event() {
    let mut series: Vec<Series> =
        (1..=7).map(|id| Series::from_dst(format!("branch {id}"), &sample_branch(id, 300, -6.0).unwrap())).collect();
    let events = dst_branch_events().unwrap();
    series.push(Series::dst_events(&events));
    let svg = render_diagram(&series, &DiagramStyle { x_label: "Ω".into(), ..Default::default() }).unwrap();
    assert_eq!(svg.matches("<g class=\"series\"").count(), 7);
    assert_eq!(svg.matches("class=\"marker ").count(), events.len());
    for kind in ["pitchfork", "transcritical", "fold", "saddle-node", "symmetry-breaking"] {
        assert_eq!(svg.matches(&format!("class=\"marker {kind}\"")).count(), 1, "{kind}");
    }
}

#[test]
fn branch_events_become_markers() {
    let mut b = constant_branch();
    b.points[40].tags.push(EventTag::BranchPoint);
    b.points[70].tags.push(EventTag::Fold);
    let svg = render_diagram(&[Series::from_branch(&b, "x")], &DiagramStyle::default()).unwrap();
    assert_eq!(svg.matches("class=\"marker branch-point\"").count(), 1);
    assert_eq!(svg.matches("class=\"marker fold\"").count(), 1);
}

#[test]
fn non_finite_points_split_the_curve() {
    let s = Series { label: "gap".into(), points: vec![(0.0, 0.0), (1.0, 1.0), (f64::NAN, 0.0), (2.0, 0.0), (3.0, 1.0)], markers: vec![] };
    let svg = render_diagram(&[s], &DiagramStyle::default()).unwrap();
    assert_eq!(polylines(&svg).len(), 2);
}

#[test]
fn empty_input_is_rejected() {
    assert!(render_diagram(&[], &DiagramStyle::default()).is_err());
    assert!(render_diagram(&[Series::default()], &DiagramStyle::default()).is_err());
}

#[test]
fn profile_lays_edges_end_to_end() {
    let g = qgraph::graph::build_dumbbell(L).unwrap();
    let f = qgraph::graph::GraphFunction::from_fn(&g, &[20, 10, 20], |m, x| m as f64 + x.sin());
    let svg = render_profile(&f, &DiagramStyle::default()).unwrap();
    let lines = polylines(&svg);
    assert_eq!(lines.len(), 3);
    for w in lines.windows(2) {
        // Each edge starts where the previous one ended.
        assert!((w[1][0].0 - w[0].last().unwrap().0).abs() < 0.02);
    }
}
