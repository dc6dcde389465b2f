use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use qvzne::folding::{fold_global, fold_local_ensemble, FoldedCircuit};
use qvzne::harness::{
    analyze, calibrate, effective_qv_search, emit_report, ingest_counts_file, run_experiment, ExperimentConfig,
    LayoutSelection,
};
use qvzne::harness::records::read_jsonl;
use qvzne::qv::format_bitstring;
use qvzne::transpile::{enumerate_subgraph_classes, rebase_only, route, CouplingGraph, Layout};
use qvzne::zne::QvRecord;
use qvzne::{gate_counts, generate_qv_circuit, heavy_set, ideal_distribution, qasm_export, qasm_import};

#[derive(Parser)]
#[command(name = "qvzne", version, about = "Quantum volume benchmarking with zero-noise extrapolation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FoldMode {
    Global,
    Local,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a QV circuit (blocks decomposed to native gates) as OpenQASM 2
    /// and print its heavy set.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Route and rebase a QASM circuit onto a layout.
    Transpile {
        input: PathBuf,
        /// `all`, `line`, `heavy-hex:<class>:<embedding>` or a layout JSON file.
        #[arg(long, default_value = "heavy-hex:0:0")]
        layout: String,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Fold a native QASM circuit; writes `.qasm` and `.json` sidecars.
    Fold {
        input: PathBuf,
        #[arg(long)]
        lambda: f64,
        #[arg(long, value_enum, default_value = "global")]
        mode: FoldMode,
        #[arg(long, default_value_t = 10)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Run (or resume) an experiment; outputs go to `<out>/<run id>/`.
    Run {
        config: PathBuf,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Recompute records from a counts JSONL file and analyze them.
    Ingest {
        config: PathBuf,
        counts: PathBuf,
        /// Existing records to update (keeps heavy sets and exact HOPs).
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the summary of a records JSONL file.
    Analyze { config: PathBuf, records: PathBuf },
    /// Write CSV, summary JSON and SVG for a records JSONL file.
    Report {
        config: PathBuf,
        records: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// List connected subgraph classes of a coupling graph.
    Subgraphs {
        #[arg(long)]
        n: usize,
        /// Coupling graph JSON; defaults to the bundled 27-qubit heavy-hex map.
        #[arg(long)]
        graph: Option<PathBuf>,
    },
    /// Find the p2 at which the mean exact raw HOP hits a target.
    Calibrate {
        config: PathBuf,
        #[arg(long)]
        target: f64,
        #[arg(long, default_value_t = 50)]
        circuits: usize,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
    },
    /// Run ascending widths until the first failure.
    Search {
        config: PathBuf,
        #[arg(long)]
        n_min: usize,
        #[arg(long)]
        n_max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_qasm(path: &Path) -> Result<qvzne::Circuit> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(qasm_import(&text).with_context(|| format!("parsing {}", path.display()))?)
}

fn parse_layout(arg: &str, n: usize) -> Result<Layout> {
    let sel = match arg {
        "all" => LayoutSelection::AllToAll,
        "line" => LayoutSelection::Line,
        s if s.starts_with("heavy-hex:") => {
            let parts: Vec<&str> = s["heavy-hex:".len()..].split(':').collect();
            let [class, embedding] = parts.as_slice() else {
                bail!("expected heavy-hex:<class>:<embedding>, got {s}");
            };
            LayoutSelection::HeavyHex {
                class: class.parse().context("class index")?,
                embedding: embedding.parse().context("embedding index")?,
            }
        }
        path => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
            return Ok(Layout::from_json(&text)?);
        }
    };
    Ok(sel.resolve(n)?)
}

fn write_folded(dir: &Path, stem: &str, folded: &FoldedCircuit) -> Result<()> {
    let qasm = dir.join(format!("{stem}.qasm"));
    std::fs::write(&qasm, qasm_export(&folded.circuit)?).with_context(|| format!("writing {}", qasm.display()))?;
    let side = dir.join(format!("{stem}.json"));
    std::fs::write(&side, folded.sidecar_json()).with_context(|| format!("writing {}", side.display()))?;
    Ok(())
}

fn load_records(path: &Path) -> Result<Vec<QvRecord>> {
    Ok(read_jsonl(path)?)
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Gen { n, seed, out } => {
            let qv = generate_qv_circuit(n, seed)?;
            write_or_print(out.as_deref(), &qasm_export(&rebase_only(&qv.circuit)?)?)?;
            let heavy = heavy_set(&ideal_distribution(&qv.circuit)?)?;
            let members: Vec<String> = heavy.members.iter().map(|&x| format_bitstring(x, n)).collect();
            eprintln!("heavy set ({} states, median {:.6e}): {}", members.len(), heavy.median, members.join(" "));
        }
        Command::Transpile { input, layout, out } => {
            let circuit = read_qasm(&input)?;
            let layout = parse_layout(&layout, circuit.n_qubits())?;
            let routed = route(&circuit, &layout)?;
            write_or_print(out.as_deref(), &qasm_export(&routed.circuit)?)?;
            let counts = gate_counts(&routed.circuit);
            eprintln!(
                "physical qubits {:?}, final positions {:?}, swaps {}, cx {}, gates {}",
                routed.physical_qubits,
                routed.final_positions,
                routed.swap_count,
                routed.circuit.cx_count(),
                counts.total()
            );
        }
        Command::Fold { input, lambda, mode, instances, seed, out_dir } => {
            let circuit = read_qasm(&input)?.with_two_qubit_layers();
            std::fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
            match mode {
                FoldMode::Global => write_folded(&out_dir, "global", &fold_global(&circuit, lambda)?)?,
                FoldMode::Local => {
                    use rand::SeedableRng;
                    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                    for (i, f) in fold_local_ensemble(&circuit, lambda, instances, &mut rng)?.iter().enumerate() {
                        write_folded(&out_dir, &format!("local_{i}"), f)?;
                    }
                }
            }
        }
        Command::Run { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let report = run_experiment(&cfg, &out)?;
            println!("{}", report.summary.to_json());
            eprintln!("run directory: {}", out.join(cfg.run_id()).display());
        }
        Command::Ingest { config, counts, records, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let records = ingest_counts_file(&cfg, records.as_deref(), &counts)?;
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            qvzne::harness::records::write_jsonl(&out.join("records.jsonl"), &records)?;
            let report = analyze(&cfg, records)?;
            emit_report(&report, &out)?;
            println!("{}", report.summary.to_json());
        }
        Command::Analyze { config, records } => {
            let cfg = ExperimentConfig::load(&config)?;
            let report = analyze(&cfg, load_records(&records)?)?;
            println!("{}", report.summary.to_json());
        }
        Command::Report { config, records, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let report = analyze(&cfg, load_records(&records)?)?;
            emit_report(&report, &out)?;
            eprintln!("wrote report to {}", out.display());
        }
        Command::Subgraphs { n, graph } => {
            let host = match graph {
                Some(p) => CouplingGraph::load(&p)?,
                None => CouplingGraph::heavy_hex_27(),
            };
            let classes = enumerate_subgraph_classes(&host, n)?;
            let listing: Vec<serde_json::Value> = classes
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    serde_json::json!({
                        "class": i,
                        "edges": c.canonical.edges(),
                        "num_embeddings": c.embeddings.len(),
                        "embeddings": c.embeddings,
                    })
                })
                .collect();
            println!("{}", serde_json::to_string_pretty(&listing)?);
            eprintln!("{} classes", classes.len());
        }
        Command::Calibrate { config, target, circuits, tol } => {
            let cfg = ExperimentConfig::load(&config)?;
            let cal = calibrate(&cfg, target, circuits, tol)?;
            println!("{}", serde_json::to_string_pretty(&cal)?);
        }
        Command::Search { config, n_min, n_max, out } => {
            if n_min > n_max {
                bail!("n_min {n_min} exceeds n_max {n_max}");
            }
            let cfg = ExperimentConfig::load(&config)?;
            let result = effective_qv_search(&cfg, n_min..=n_max, out.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&result)?);
        }
    }
    Ok(())
}
