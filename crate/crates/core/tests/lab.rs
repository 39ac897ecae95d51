//! Properties of the experiment harness and its reports.

use mtwlab::lab::{
    parse_json_report, render_csv, render_json, run_gap_bound, run_target_stability, summarize, BoundRow,
    SweepConfig,
};
use proptest::prelude::*;
use std::collections::BTreeMap;

fn small_target() -> SweepConfig {
    SweepConfig { n_source: 50, n_target: 50, instances: 3, seed: 17, ..SweepConfig::default() }
}

#[test]
fn sweeps_are_deterministic() {
    let a = render_csv(&run_target_stability(&small_target()).unwrap()).unwrap();
    let b = render_csv(&run_target_stability(&small_target()).unwrap()).unwrap();
    assert_eq!(a, b);
    let c = SweepConfig { n_source: 25, instances: 2, mixtures: 6, seed: 2, ..SweepConfig::default() };
    assert_eq!(run_gap_bound(&c).unwrap(), run_gap_bound(&c).unwrap());
}

#[test]
fn thread_count_does_not_change_results() {
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let a = one.install(|| run_target_stability(&small_target()).unwrap());
    let b = three.install(|| run_target_stability(&small_target()).unwrap());
    assert_eq!(a, b);
}

#[test]
fn target_lhs_grows_with_the_perturbation() {
    for seed in [17, 3, 40] {
        let config = SweepConfig { seed, ..small_target() };
        let cost = config.cost;
        let rows = run_target_stability(&config).unwrap();
        for k in 0..config.instances {
            let label = format!("target/instance{k}");
            let lhs: Vec<f64> = rows.iter().filter(|r| r.label == label).map(|r| r.lhs).collect();
            assert_eq!(lhs.len(), config.perturbations.len());
            for w in lhs.windows(2) {
                assert!(w[1] >= w[0] - 1e-8, "{cost} {label}: {lhs:?}");
            }
        }
        assert!(rows.iter().all(|r| r.pass), "{cost}: {:?}", rows.iter().find(|r| !r.pass));
    }
}

#[test]
fn csv_ends_with_the_summary() {
    let rows = run_target_stability(&SweepConfig { instances: 1, ..small_target() }).unwrap();
    let text = render_csv(&rows).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("t,lhs,rhs,ratio,pass,"));
    assert!(lines[0].ends_with(",label"));
    assert_eq!(lines.len(), rows.len() + 2);
    let s = summarize(&rows);
    assert!(lines.last().unwrap().starts_with(&format!("# summary pass_count={} total={}", s.pass_count, s.total)));
}

fn arb_row() -> impl Strategy<Value = BoundRow> {
    (
        "[a-z]{1,8}(/[a-z0-9]{1,6})?",
        -1e3..1e3f64,
        0.0..1e3f64,
        -1e3..1e3f64,
        0.0..1.0f64,
        prop::collection::btree_map("[a-z]{1,5}", -1e6..1e6f64, 0..4),
    )
        .prop_map(|(label, t, lhs, rhs, slack, constants): (String, f64, f64, f64, f64, BTreeMap<String, f64>)| {
            let mut row = BoundRow::new(label, t, lhs, rhs, slack);
            for (k, v) in constants {
                row = row.with(&k, v);
            }
            row
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn json_reports_roundtrip(rows in prop::collection::vec(arb_row(), 1..6)) {
        let parsed = parse_json_report(&render_json(&rows).unwrap()).unwrap();
        prop_assert_eq!(parsed.rows, rows.clone());
        prop_assert_eq!(parsed.summary, summarize(&rows));
    }

    #[test]
    fn pass_flag_matches_the_tolerance(lhs in 0.0..10.0f64, rhs in 0.0..10.0f64) {
        let row = BoundRow::new("x", 0.0, lhs, rhs, 0.0);
        prop_assert_eq!(row.pass, lhs <= rhs + 1e-7 * (1.0 + rhs.abs()));
    }
}
