use std::collections::BTreeMap;

use qvzne::harness::records::{read_jsonl, write_jsonl, RunPaths};
use qvzne::harness::report::cumulative_csv;
use qvzne::harness::{
    analyze, calibrate, effective_qv_search, emit_report, ingest_counts, ingest_counts_file, run_experiment,
    run_in_memory, CountsEntry, ExperimentConfig, FoldingMode, LayoutSelection,
};
use qvzne::sim::NoiseModel;
use qvzne::zne::QvRecord;
use qvzne::Error;

fn small(n: usize, circuits: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(n);
    c.num_circuits = circuits;
    c.lambdas = vec![1.0, 1.2, 2.0];
    c.shots.base = 2000;
    c.noise = NoiseModel::depolarizing(0.01);
    c
}

#[test]
fn noiseless_n4_passes() {
    let mut c = small(4, 100);
    c.noise = NoiseModel::noiseless();
    let r = run_in_memory(&c).unwrap();
    let raw = r.summary.raw.mean;
    assert!((0.80..=0.90).contains(&raw), "raw mean {raw}");
    assert!(r.summary.raw.decision.passed());
    assert!(r.summary.passed());
}

#[test]
fn shot_accounting() {
    for folding in [FoldingMode::Global, FoldingMode::Local] {
        let mut c = small(3, 4);
        c.folding = folding;
        let r = run_in_memory(&c).unwrap();
        for rec in &r.records {
            assert_eq!(rec.point(1.0).unwrap().shots, 2000);
            for l in [1.2, 2.0] {
                let p = rec.point(l).unwrap();
                assert_eq!(p.shots, 1000);
                let m = if folding == FoldingMode::Local { 10 } else { 1 };
                assert_eq!(p.instances, m);
            }
        }
    }
}

#[test]
fn persisted_run_resumes_to_identical_report() {
    let dir = tempfile::tempdir().unwrap();
    let c = small(4, 12);
    let full = run_experiment(&c, dir.path()).unwrap();
    let paths = RunPaths::new(dir.path().join(c.run_id()));
    let summary = std::fs::read(paths.summary()).unwrap();

    // simulate an interruption: drop half the records, truncate a line and
    // leave counts for a circuit whose record never landed
    let records: Vec<QvRecord> = read_jsonl(&paths.records()).unwrap();
    assert_eq!(records.len(), 12);
    let mut kept: Vec<String> = records[..6].iter().map(|r| serde_json::to_string(r).unwrap()).collect();
    let partial = serde_json::to_string(&records[6]).unwrap();
    kept.push(partial[..partial.len() / 2].to_string());
    std::fs::write(paths.records(), kept.join("\n")).unwrap();
    std::fs::remove_file(paths.summary()).unwrap();

    let resumed = run_experiment(&c, dir.path()).unwrap();
    assert_eq!(resumed.summary, full.summary);
    assert_eq!(std::fs::read(paths.summary()).unwrap(), summary);
    let records: Vec<QvRecord> = read_jsonl(&paths.records()).unwrap();
    assert_eq!(records.len(), 12);
    let counts: Vec<CountsEntry> = read_jsonl(&paths.counts()).unwrap();
    assert_eq!(counts.len(), 12 * 3);
    let timing: serde_json::Value = serde_json::from_slice(&std::fs::read(paths.timing()).unwrap()).unwrap();
    assert_eq!(timing["circuits_resumed"], 6);
}

#[test]
fn mismatched_run_directory_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let c = small(3, 2);
    run_experiment(&c, dir.path()).unwrap();
    let mut other = c.clone();
    other.base_seed = 99;
    let paths = RunPaths::new(dir.path().join(c.run_id()));
    std::fs::write(paths.config(), other.to_json()).unwrap();
    assert!(matches!(run_experiment(&c, dir.path()), Err(Error::Config(_))));
}

#[test]
fn counts_round_trip_reproduces_report() {
    let dir = tempfile::tempdir().unwrap();
    for folding in [FoldingMode::Global, FoldingMode::Local] {
        let mut c = small(4, 6);
        c.folding = folding;
        let report = run_experiment(&c, dir.path()).unwrap();
        let paths = RunPaths::new(dir.path().join(c.run_id()));
        let updated = ingest_counts_file(&c, Some(&paths.records()), &paths.counts()).unwrap();
        assert_eq!(updated, report.records);
        let again = analyze(&c, updated).unwrap();
        assert_eq!(again.summary.to_json(), report.summary.to_json());

        // without base records the heavy sets are regenerated; only the
        // simulator-side exact HOPs are lost
        let fresh = ingest_counts_file(&c, None, &paths.counts()).unwrap();
        for (a, b) in fresh.iter().zip(&report.records) {
            assert_eq!(a.heavy_set, b.heavy_set);
            assert_eq!(a.zne, b.zne);
        }
    }
}

#[test]
fn ingest_validation() {
    let c = small(3, 2);
    let r = run_in_memory(&c).unwrap();
    let entry = |id, lambda, counts: &[(&str, u64)]| CountsEntry {
        circuit_id: id,
        lambda,
        instance: 0,
        counts: counts.iter().map(|(k, v)| (k.to_string(), *v)).collect::<BTreeMap<_, _>>(),
    };
    let err = ingest_counts(&c, None, &[entry(7, 1.2, &[("000", 10)]), entry(7, 2.0, &[("000", 10)])]).unwrap_err();
    assert!(err.to_string().contains('7'), "{err}");
    assert!(matches!(err, Error::Circuit { circuit_id: 7, .. }));

    let err = ingest_counts(&c, None, &[entry(0, 1.0, &[("0000", 10)]), entry(0, 2.0, &[("000", 1)])]);
    assert!(err.is_err());
    let err = ingest_counts(&c, None, &[entry(0, 1.0, &[("000", 0)]), entry(0, 2.0, &[("000", 1)])]);
    assert!(err.is_err());
    let err = ingest_counts(&c, Some(&r.records), &[entry(0, 1.0, &[("000", 5)]), entry(0, 1.5, &[("000", 5)])]);
    assert!(err.is_err());
}

#[test]
fn report_files() {
    let dir = tempfile::tempdir().unwrap();
    let c = small(3, 25);
    let r = run_in_memory(&c).unwrap();
    emit_report(&r, dir.path()).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("cumulative.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 25);
    let last: Vec<f64> = rows[24].split(',').map(|x| x.parse().unwrap()).collect();
    assert!((last[1] - r.summary.zne.mean).abs() < 1e-12);
    assert!((last[3] - last[1] - 2.0 * r.summary.zne.sigma).abs() < 1e-12);
    assert!((last[4] - r.summary.per_lambda[0].mean_hop).abs() < 1e-12);
    assert_eq!(csv, cumulative_csv(&r).unwrap());
    let svg = std::fs::read_to_string(dir.path().join("cumulative.svg")).unwrap();
    assert!(svg.contains(">2/3<") && svg.contains(">(1+ln 2)/2<"));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["num_circuits"], 25);
    assert!(emit_report(&r, std::path::Path::new("/proc/definitely/not/here")).is_err());
}

#[test]
fn report_is_deterministic_across_worker_counts() {
    let c = small(4, 8);
    let a = run_in_memory(&c).unwrap();
    let b = run_in_memory(&c).unwrap();
    assert_eq!(a.summary.to_json(), b.summary.to_json());
    assert_eq!(a.records, b.records);
    let mut shuffled = a.records.clone();
    shuffled.reverse();
    assert_eq!(analyze(&c, shuffled).unwrap().summary, a.summary);
}

#[test]
fn search_examples() {
    let mut c = small(2, 30);
    c.noise = NoiseModel::noiseless();
    c.layout = LayoutSelection::Line;
    let s = effective_qv_search(&c, 2..=4, None).unwrap();
    assert_eq!(s.largest_passing, Some(4));
    assert_eq!(s.effective_qv, 16);

    c.noise = NoiseModel::depolarizing(1.0);
    let s = effective_qv_search(&c, 2..=4, None).unwrap();
    assert_eq!(s.largest_passing, None);
    assert_eq!(s.summaries.len(), 1);
}

#[test]
fn calibration_hits_target() {
    let c = small(4, 10);
    let cal = calibrate(&c, 0.7, 10, 1e-3).unwrap();
    assert!((cal.mean_raw_hop - 0.7).abs() <= 1e-3);
    assert!(cal.p2 > 0.0 && cal.p2 < 0.5);
    assert!(calibrate(&c, 0.99, 10, 1e-3).is_err());
}

#[test]
fn records_write_read_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_in_memory(&small(3, 3)).unwrap();
    let path = dir.path().join("r.jsonl");
    write_jsonl(&path, &r.records).unwrap();
    let back: Vec<QvRecord> = read_jsonl(&path).unwrap();
    assert_eq!(back, r.records);
}
