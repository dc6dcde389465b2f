//! ALAP scheduling and X-X dynamical decoupling.

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};

/// Gate durations in abstract time units. `RZ` is virtual and always takes 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DurationModel {
    #[serde(default)]
    pub rz: f64,
    pub x: f64,
    pub sx: f64,
    pub cx: f64,
    pub measure: f64,
}

impl Default for DurationModel {
    fn default() -> Self {
        DurationModel {
            rz: 0.0,
            x: 1.0,
            sx: 1.0,
            cx: 5.0,
            measure: 15.0,
        }
    }
}

impl DurationModel {
    pub fn validate(&self) -> Result<()> {
        if self.rz != 0.0 {
            return Err(Error::Config(format!("rz duration must be 0, got {}", self.rz)));
        }
        for (name, v) in [("x", self.x), ("sx", self.sx), ("cx", self.cx), ("measure", self.measure)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} duration must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn of(&self, gate: &Gate) -> Result<f64> {
        Ok(match gate {
            Gate::X(_) => self.x,
            Gate::Sx(_) => self.sx,
            Gate::Rz(..) | Gate::Barrier(_) => 0.0,
            Gate::Cx { .. } => self.cx,
            Gate::Measure { .. } => self.measure,
            Gate::Su4 { .. } | Gate::Swap(..) => {
                return Err(Error::Unsupported(format!("{} has no duration", gate.kind())));
            }
        })
    }
}

/// Gap on one qubit between the end of gate `after` and the start of its next
/// operation (or the end of the circuit).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdleWindow {
    pub start: f64,
    pub duration: f64,
    pub after: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduledCircuit {
    pub circuit: Circuit,
    pub start_times: Vec<f64>,
    pub durations: Vec<f64>,
    /// Per qubit, in time order. Time before a qubit's first operation is not
    /// counted: the qubit is still in its ground state there.
    pub idle_windows: Vec<Vec<IdleWindow>>,
    pub total_duration: f64,
}

/// Windows shorter than this are ignored.
const WINDOW_EPS: f64 = 1e-12;

fn idle_windows(circuit: &Circuit, starts: &[f64], durs: &[f64], total: f64) -> Vec<Vec<IdleWindow>> {
    let n = circuit.n_qubits();
    let mut last: Vec<Option<(usize, f64)>> = vec![None; n];
    let mut windows = vec![Vec::new(); n];
    for (i, g) in circuit.gates().iter().enumerate() {
        for q in g.qubits() {
            if let Some((prev, end)) = last[q] {
                let gap = starts[i] - end;
                if gap > WINDOW_EPS {
                    windows[q].push(IdleWindow {
                        start: end,
                        duration: gap,
                        after: prev,
                    });
                }
            }
            last[q] = Some((i, starts[i] + durs[i]));
        }
    }
    for (q, entry) in last.iter().enumerate() {
        if let Some((prev, end)) = *entry {
            if total - end > WINDOW_EPS {
                windows[q].push(IdleWindow {
                    start: end,
                    duration: total - end,
                    after: prev,
                });
            }
        }
    }
    windows
}

/// As-late-as-possible schedule: the total duration is the ASAP makespan and
/// every gate starts at the latest time its successors allow.
pub fn schedule_alap(circuit: &Circuit, durations: &DurationModel) -> Result<ScheduledCircuit> {
    durations.validate()?;
    let n = circuit.n_qubits();
    let durs: Vec<f64> = circuit.gates().iter().map(|g| durations.of(g)).collect::<Result<_>>()?;

    let mut avail = vec![0.0f64; n];
    for (g, d) in circuit.gates().iter().zip(&durs) {
        let qs = g.qubits();
        let start = qs.iter().map(|&q| avail[q]).fold(0.0, f64::max);
        for q in qs {
            avail[q] = start + d;
        }
    }
    let total = avail.iter().copied().fold(0.0, f64::max);

    let mut latest = vec![total; n];
    let mut starts = vec![0.0; circuit.len()];
    for (i, g) in circuit.gates().iter().enumerate().rev() {
        let qs = g.qubits();
        let end = qs.iter().map(|&q| latest[q]).fold(total, f64::min);
        let start = end - durs[i];
        starts[i] = start;
        for q in qs {
            latest[q] = start;
        }
    }
    let windows = idle_windows(circuit, &starts, &durs, total);
    Ok(ScheduledCircuit {
        circuit: circuit.clone(),
        start_times: starts,
        durations: durs,
        idle_windows: windows,
        total_duration: total,
    })
}

/// Puts two X pulses, centered at 1/4 and 3/4 of the window, into every idle
/// window of at least `2·dur(X)`. Explicit times are kept, since the pulses do
/// not sit at their ALAP positions.
pub fn insert_dd(scheduled: &ScheduledCircuit, durations: &DurationModel) -> Result<ScheduledCircuit> {
    durations.validate()?;
    let dx = durations.x;
    let len = scheduled.circuit.len();
    let mut inserts: Vec<Vec<(f64, usize)>> = vec![Vec::new(); len];
    for (q, windows) in scheduled.idle_windows.iter().enumerate() {
        for w in windows {
            if w.duration + WINDOW_EPS >= 2.0 * dx {
                let first = w.start + w.duration / 4.0 - dx / 2.0;
                let second = w.start + 3.0 * w.duration / 4.0 - dx / 2.0;
                inserts[w.after].push((first, q));
                inserts[w.after].push((second, q));
            }
        }
    }
    let extra: usize = inserts.iter().map(Vec::len).sum();
    let mut gates = Vec::with_capacity(len + extra);
    let mut starts = Vec::with_capacity(len + extra);
    let mut durs = Vec::with_capacity(len + extra);
    let mut index_map = Vec::with_capacity(len + 1);
    for (i, g) in scheduled.circuit.gates().iter().enumerate() {
        index_map.push(gates.len());
        gates.push(g.clone());
        starts.push(scheduled.start_times[i]);
        durs.push(scheduled.durations[i]);
        let mut pulses = inserts[i].clone();
        pulses.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (t, q) in pulses {
            gates.push(Gate::X(q));
            starts.push(t);
            durs.push(dx);
        }
    }
    index_map.push(gates.len());
    // A layer ends after the pulses that follow its last gate.
    let marks = scheduled.circuit.layer_marks().map(|m| {
        m.iter()
            .map(|&end| if end == len { gates.len() } else { index_map[end] })
            .collect()
    });
    let circuit = Circuit::from_gates(scheduled.circuit.n_qubits(), gates, marks)?;
    let windows = idle_windows(&circuit, &starts, &durs, scheduled.total_duration);
    Ok(ScheduledCircuit {
        circuit,
        start_times: starts,
        durations: durs,
        idle_windows: windows,
        total_duration: scheduled.total_duration,
    })
}

impl ScheduledCircuit {
    /// Checks that no two operations overlap on a qubit and that per-qubit
    /// order follows gate order.
    pub fn check_consistency(&self) -> Result<()> {
        let mut free = vec![0.0f64; self.circuit.n_qubits()];
        for (i, g) in self.circuit.gates().iter().enumerate() {
            for q in g.qubits() {
                if self.start_times[i] + 1e-9 < free[q] {
                    return Err(Error::InvalidCircuit(format!("gate {i} overlaps on qubit {q}")));
                }
                free[q] = self.start_times[i] + self.durations[i];
            }
        }
        if free.iter().any(|&f| f > self.total_duration + 1e-9) {
            return Err(Error::InvalidCircuit("schedule exceeds its total duration".into()));
        }
        Ok(())
    }

    pub fn total_idle(&self, qubit: usize) -> f64 {
        self.idle_windows[qubit].iter().map(|w| w.duration).sum()
    }
}
