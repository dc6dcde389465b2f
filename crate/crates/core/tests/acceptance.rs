//! Acceptance suite. Prints one `PASS`/`FAIL` line per criterion and fails the
//! test if any criterion fails. Tolerances are pinned below.
//!
//! Criteria 4, 6 and 9 share one calibrated n = 6 experiment of 1000 circuits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, Uniform};

use qvzne::circuit::statevector;
use qvzne::folding::{fold_global, fold_local_random};
use qvzne::harness::records::RunPaths;
use qvzne::harness::{
    analyze, calibrate, effective_qv_search, ingest_counts_file, run_experiment, run_in_memory, ExperimentConfig,
    FoldingMode, Summary,
};
use qvzne::linalg::phase_distance;
use qvzne::schedule::{insert_dd, schedule_alap, DurationModel};
use qvzne::sim::{simulate_scheduled, NoiseModel};
use qvzne::transpile::{enumerate_subgraph_classes, route, CouplingGraph, Layout};
use qvzne::zne::{bootstrap_sigma, extrapolate, mean, PASS_THRESHOLD};
use qvzne::{compose_unitary, generate_qv_circuit, qasm_export, qasm_import, Circuit, Gate};

const FOLD_UNITARY_TOL: f64 = 1e-9;
const FOLD_LAMBDA_TENTHS: [usize; 5] = [10, 12, 15, 18, 20];
const NOISELESS_HOP_RANGE: (f64, f64) = (0.80, 0.89);
const HEADLINE_RAW_RANGE: (f64, f64) = (0.55, 0.66);
/// Target for the p2 calibration: inside the raw range, below 2/3.
const CALIBRATION_TARGET: f64 = 0.62;
const CALIBRATION_TOL: f64 = 2e-3;
const CALIBRATION_CIRCUITS: usize = 50;
const DECOHERENCE_P2: f64 = 0.15;
const DECOHERENCE_LAMBDA_TOL: f64 = 0.02;
const DECOHERENCE_ZNE_TOL: f64 = 0.03;
const DD_DRIFT_RATE: f64 = 0.05;
const DD_FIDELITY_SLACK: f64 = 1e-12;
const DD_EXACT_TOL: f64 = 1e-9;
const STAT_EXACT_TOL: f64 = 1e-12;
const BOOTSTRAP_SCALE_TOL: f64 = 0.30;

struct Outcome {
    id: usize,
    title: &'static str,
    passed: bool,
    detail: String,
}

fn outcome(id: usize, title: &'static str, passed: bool, detail: String) -> Outcome {
    Outcome {
        id,
        title,
        passed,
        detail,
    }
}

fn random_native(rng: &mut ChaCha8Rng, n: usize, len: usize) -> Circuit {
    let mut gates = Vec::with_capacity(len + 1);
    for _ in 0..len {
        let a = rng.random_range(0..n);
        gates.push(match rng.random_range(0..4) {
            0 => Gate::X(a),
            1 => Gate::Sx(a),
            2 => Gate::Rz(a, rng.random_range(-6.3..6.3)),
            _ => Gate::cx(a, (a + rng.random_range(1..n)) % n),
        });
    }
    gates.push(Gate::cx(0, 1));
    Circuit::from_gates(n, gates, None).unwrap()
}

fn k_oracle(t: usize, tenths: usize) -> usize {
    t * (tenths - 10) / 20
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let mut count_violations = 0;
    for _ in 0..200 {
        let n = rng.random_range(2..=5);
        let len = rng.random_range(10..80);
        let c = random_native(&mut rng, n, len).with_two_qubit_layers();
        let u = compose_unitary(&c).unwrap();
        let d = c.layers().len();
        let t = c.cx_count();
        for tenths in FOLD_LAMBDA_TENTHS {
            let lambda = tenths as f64 / 10.0;
            let g = fold_global(&c, lambda).unwrap();
            let l = fold_local_random(&c, lambda, &mut rng).unwrap();
            if g.plan.k != k_oracle(d, tenths)
                || g.circuit.layers().len() != d + 2 * g.plan.k
                || l.plan.k != k_oracle(t, tenths)
                || l.circuit.cx_count() != t + 2 * l.plan.k
            {
                count_violations += 1;
            }
            for f in [&g.circuit, &l.circuit] {
                worst = worst.max(phase_distance(&u, &compose_unitary(f).unwrap()));
            }
        }
    }
    outcome(
        1,
        "fold invariance",
        worst < FOLD_UNITARY_TOL && count_violations == 0,
        format!("200 circuits x 5 lambdas x 2 modes: max unitary error {worst:.2e}, count-law violations {count_violations}"),
    )
}

fn noiseless_config(n: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(n);
    c.num_circuits = 200;
    c.lambdas = vec![1.0, 1.2];
    c.noise = NoiseModel::noiseless();
    c
}

fn criterion_2() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [4, 5, 6, 7] {
        let s = run_in_memory(&noiseless_config(n)).unwrap().summary;
        let raw = s.raw.mean;
        let exact = s.per_lambda[0].mean_exact_hop.unwrap();
        ok &= (NOISELESS_HOP_RANGE.0..=NOISELESS_HOP_RANGE.1).contains(&raw);
        parts.push(format!("n={n}: {raw:.4} (exact {exact:.4})"));
    }
    outcome(
        2,
        "noiseless HOP",
        ok,
        format!("mean λ=1 HOP over 200 circuits in [0.80, 0.89]; {}", parts.join(", ")),
    )
}

fn criterion_3() -> Outcome {
    let g = CouplingGraph::heavy_hex_27();
    let c6 = enumerate_subgraph_classes(&g, 6).unwrap().len();
    let c7 = enumerate_subgraph_classes(&g, 7).unwrap().len();
    outcome(
        3,
        "subgraph classes",
        c6 == 3 && c7 == 5,
        format!("heavy-hex 27: n=6 -> {c6} classes (want 3), n=7 -> {c7} (want 5)"),
    )
}

struct Headline {
    global: Summary,
    local: Summary,
    raw_qv_n: Option<usize>,
    effective_n: Option<usize>,
    p2: f64,
}

fn headline_template() -> ExperimentConfig {
    let mut c = ExperimentConfig::new(6);
    c.num_circuits = 1000;
    c.lambdas = vec![1.0, 1.2];
    c.folding = FoldingMode::Global;
    c.fit_order = 1;
    c.dd_enabled = true;
    c
}

fn run_headline() -> Headline {
    let template = headline_template();
    let cal = calibrate(&template, CALIBRATION_TARGET, CALIBRATION_CIRCUITS, CALIBRATION_TOL).unwrap();
    let mut config = template.clone();
    config.noise.p2 = cal.p2;
    let search = effective_qv_search(&config, 2..=6, None).unwrap();
    let raw_qv_n = search
        .summaries
        .iter()
        .take_while(|s| s.raw.decision.passed())
        .last()
        .map(|s| s.n);
    let global = search.summaries.iter().find(|s| s.n == 6).cloned().unwrap_or_else(|| {
        // the search stopped early; run n = 6 directly so criteria 6 and 9 still report
        run_in_memory(&config).unwrap().summary
    });
    let mut local_cfg = config.clone();
    local_cfg.folding = FoldingMode::Local;
    let local = run_in_memory(&local_cfg).unwrap().summary;
    Headline {
        global,
        local,
        raw_qv_n,
        effective_n: search.largest_passing,
        p2: cal.p2,
    }
}

fn criterion_4(h: &Headline) -> Outcome {
    let s = &h.global;
    let raw_ok = s.raw.mean > HEADLINE_RAW_RANGE.0 && s.raw.mean < HEADLINE_RAW_RANGE.1;
    let zne_ok = s.zne.lower_2sigma > PASS_THRESHOLD;
    let qv_gain = match (h.effective_n, h.raw_qv_n) {
        (Some(e), Some(r)) => e > r,
        (Some(_), None) => true,
        _ => false,
    };
    outcome(
        4,
        "headline effect",
        raw_ok && zne_ok && qv_gain,
        format!(
            "p2={:.5}: raw mean {:.4} (in (0.55, 0.66): {raw_ok}), ZNE mean {:.4} - 2σ = {:.4} > 2/3: {zne_ok}; \
             largest raw pass n={:?}, largest ZNE pass n={:?}",
            h.p2, s.raw.mean, s.zne.mean, s.zne.lower_2sigma, h.raw_qv_n, h.effective_n
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut c = ExperimentConfig::new(6);
    c.num_circuits = 200;
    c.noise = NoiseModel::depolarizing(DECOHERENCE_P2);
    let s = run_in_memory(&c).unwrap().summary;
    let per_ok = s
        .per_lambda
        .iter()
        .all(|l| (l.mean_hop - 0.5).abs() <= DECOHERENCE_LAMBDA_TOL);
    let zne_ok = (s.zne.mean - 0.5).abs() <= DECOHERENCE_ZNE_TOL;
    let means: Vec<String> = s.per_lambda.iter().map(|l| format!("{}:{:.4}", l.lambda, l.mean_hop)).collect();
    outcome(
        5,
        "decoherence limit",
        per_ok && zne_ok && !s.passed(),
        format!("p2=0.15, 200 circuits: per-λ means [{}], ZNE mean {:.4}, decision {:?}", means.join(" "), s.zne.mean, s.zne.decision),
    )
}

fn criterion_6(h: &Headline) -> Outcome {
    let diff = (h.global.zne.mean - h.local.zne.mean).abs();
    let combined = 2.0 * h.global.zne.sigma + 2.0 * h.local.zne.sigma;
    let quadrature = 2.0 * h.global.zne.sigma.hypot(h.local.zne.sigma);
    outcome(
        6,
        "global vs local",
        diff < combined,
        format!(
            "ZNE means global {:.4} / local {:.4}: |Δ| = {diff:.4} vs bound 2σ_g + 2σ_l = {combined:.4} \
             (quadrature 2·sqrt(σ_g²+σ_l²) = {quadrature:.4})",
            h.global.zne.mean, h.local.zne.mean
        ),
    )
}

fn single_window_circuit() -> Circuit {
    let mut gates = vec![Gate::Sx(0), Gate::cx(0, 1)];
    gates.extend(std::iter::repeat_n(Gate::X(1), 8));
    gates.push(Gate::cx(0, 1));
    Circuit::from_gates(2, gates, None).unwrap()
}

fn criterion_7() -> Outcome {
    let d = DurationModel::default();
    let noise = NoiseModel {
        p2: 0.0,
        p1: Some(0.0),
        readout_flip: 0.0,
        idle_z_rate: DD_DRIFT_RATE,
    };
    let host = CouplingGraph::heavy_hex_27();
    let classes = enumerate_subgraph_classes(&host, 5).unwrap();
    let mut worse = 0;
    let mut gain = Vec::new();
    for i in 0..50u64 {
        let class = &classes[i as usize % classes.len()];
        let layout = Layout::from_embedding(&host, &class.embeddings[0]).unwrap();
        let routed = route(&generate_qv_circuit(5, i).unwrap().circuit, &layout).unwrap().circuit;
        let psi = statevector(&routed).unwrap();
        let s = schedule_alap(&routed, &d).unwrap();
        let without = simulate_scheduled(&s, &noise).unwrap().fidelity(&psi);
        let with = simulate_scheduled(&insert_dd(&s, &d).unwrap(), &noise).unwrap().fidelity(&psi);
        if with < without - DD_FIDELITY_SLACK {
            worse += 1;
        }
        gain.push(with - without);
    }
    let c = single_window_circuit();
    let s = schedule_alap(&c, &d).unwrap();
    let psi = statevector(&c).unwrap();
    let crafted_without = 1.0 - simulate_scheduled(&s, &noise).unwrap().fidelity(&psi);
    let crafted = 1.0 - simulate_scheduled(&insert_dd(&s, &d).unwrap(), &noise).unwrap().fidelity(&psi);
    outcome(
        7,
        "DD efficacy",
        worse == 0 && crafted < DD_EXACT_TOL,
        format!(
            "ω={DD_DRIFT_RATE}: 50 circuits, DD worse on {worse}, mean fidelity gain {:.4}; \
             crafted window infidelity {crafted:.1e} with DD vs {crafted_without:.1e} without",
            mean(&gain)
        ),
    )
}

fn criterion_8() -> Outcome {
    let e1 = extrapolate(&[(1.0, 0.64), (1.2, 0.62)], 1).unwrap().intercept;
    let e2 = extrapolate(&[(1.0, 0.7), (1.5, 0.65), (2.0, 0.6)], 1).unwrap();
    let fits_ok = (e1 - 0.74).abs() < STAT_EXACT_TOL
        && (e2.intercept - 0.8).abs() < STAT_EXACT_TOL
        && e2.residual_rms < STAT_EXACT_TOL;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let constant = bootstrap_sigma(&[0.73; 1000], 100, &mut rng).unwrap();
    let mut worst_ratio: f64 = 0.0;
    let samplers: [Box<dyn Fn(&mut ChaCha8Rng) -> f64>; 3] = [
        Box::new(|r| Normal::new(0.7, 0.1).unwrap().sample(r)),
        Box::new(|r| Uniform::new(0.0, 1.0).unwrap().sample(r)),
        Box::new(|r| Exp::new(2.0).unwrap().sample(r)),
    ];
    for sampler in &samplers {
        for _ in 0..4 {
            let v: Vec<f64> = (0..1000).map(|_| sampler(&mut rng)).collect();
            let m = mean(&v);
            let sd = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 999.0).sqrt();
            let s = bootstrap_sigma(&v, 100, &mut rng).unwrap();
            worst_ratio = worst_ratio.max((s / (sd / 1000f64.sqrt()) - 1.0).abs());
        }
    }
    outcome(
        8,
        "statistics",
        fits_ok && constant == 0.0 && worst_ratio < BOOTSTRAP_SCALE_TOL,
        format!(
            "intercepts {e1:.15} / {:.15}, constant-vector σ {constant}, worst |σ_boot/(sd/√N) - 1| = {worst_ratio:.3} over 12 iid vectors",
            e2.intercept
        ),
    )
}

fn criterion_9(h: &Headline) -> Outcome {
    let m = h.global.zne.mean;
    outcome(
        9,
        "physical-range aggregate",
        (0.0..=1.0).contains(&m),
        format!("ZNE ensemble mean {m:.4}; {} of 1000 per-circuit intercepts exceed 1", h.global.zne_above_one),
    )
}

fn criterion_10() -> Outcome {
    let mut c = ExperimentConfig::new(4);
    c.num_circuits = 50;
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_experiment(&c, a.path()).unwrap();
    run_experiment(&c, b.path()).unwrap();
    let pa = RunPaths::new(a.path().join(c.run_id()));
    let pb = RunPaths::new(b.path().join(c.run_id()));
    let summary = std::fs::read(pa.summary()).unwrap();
    let identical = summary == std::fs::read(pb.summary()).unwrap();

    let mut local = c.clone();
    local.folding = FoldingMode::Local;
    local.num_circuits = 20;
    let mut ingest_ok = true;
    for cfg in [&c, &local] {
        let report = run_experiment(cfg, a.path()).unwrap();
        let paths = RunPaths::new(a.path().join(cfg.run_id()));
        let ingested = ingest_counts_file(cfg, Some(&paths.records()), &paths.counts()).unwrap();
        let again = analyze(cfg, ingested).unwrap();
        ingest_ok &= again.records == report.records
            && again.summary.to_json().as_bytes() == std::fs::read(paths.summary()).unwrap().as_slice();
    }

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut qasm_ok = true;
    for i in 0..50 {
        let n = rng.random_range(2..=6);
        let c = if i % 2 == 0 {
            random_native(&mut rng, n, 60)
        } else {
            route(&generate_qv_circuit(n, i).unwrap().circuit, &Layout::line(n)).unwrap().circuit
        };
        let text = qasm_export(&c).unwrap();
        let back = qasm_import(&text).unwrap();
        qasm_ok &= back.gates() == c.gates() && qasm_export(&back).unwrap() == text;
    }
    outcome(
        10,
        "determinism and round trips",
        identical && ingest_ok && qasm_ok,
        format!("summary bytes identical: {identical}; counts ingest reproduces records and summary: {ingest_ok}; QASM round trip on 50 circuits: {qasm_ok}"),
    )
}

#[test]
fn acceptance() {
    let headline = run_headline();
    let outcomes = vec![
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(&headline),
        criterion_5(),
        criterion_6(&headline),
        criterion_7(),
        criterion_8(),
        criterion_9(&headline),
        criterion_10(),
    ];
    for o in &outcomes {
        println!(
            "{} criterion {:>2} ({}): {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.id,
            o.title,
            o.detail
        );
    }
    let failed: Vec<usize> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
