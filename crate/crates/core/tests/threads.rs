//! Results must not depend on the worker count. Kept in its own binary because it sets
//! `QGRAPH_THREADS` for the whole process.

use qgraph::shooting::*;

fn run() -> (Vec<u64>, Vec<u64>) {
    let scan = find_standing_waves(-1.0, 2.0, &ScanSettings::default(), dumbbell_intervals(2.0, 0.1)).unwrap();
    let roots = scan.waves.iter().map(|w| w.shot.q.to_bits()).collect();
    let settings = HybridSettings { seed_levels: 3, seed_grid: 200, ..Default::default() };
    let rep = hybrid_waves(2.0, 1, &settings).unwrap();
    let powers = rep.branches.iter().flat_map(|b| &b.points).map(|p| p.power.to_bits()).collect();
    (roots, powers)
}

#[test]
fn thread_count_does_not_change_results() {
    std::env::set_var("QGRAPH_THREADS", "1");
    let serial = run();
    std::env::set_var("QGRAPH_THREADS", "4");
    let parallel = run();
    assert!(!serial.0.is_empty() && !serial.1.is_empty());
    assert_eq!(serial, parallel);
}
