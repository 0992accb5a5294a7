//! Critical-path scheduling of logical Clifford+T programs under per-gate beat latencies.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InstrKind {
    Cnot,
    H,
    S,
    Tteleport,
    PauliMeas,
    /// X, Y or Z, tracked in the Pauli frame.
    SingleQubitClifford,
}

impl InstrKind {
    pub fn arity(self) -> usize {
        if self == InstrKind::Cnot {
            2
        } else {
            1
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogicalInstr {
    pub kind: InstrKind,
    pub qubits: Vec<usize>,
}

impl LogicalInstr {
    pub fn new(kind: InstrKind, qubits: Vec<usize>) -> Result<Self, SchedError> {
        if qubits.len() != kind.arity() {
            return Err(SchedError::Arity { kind, got: qubits.len() });
        }
        if qubits.len() == 2 && qubits[0] == qubits[1] {
            return Err(SchedError::SameOperand(qubits[0]));
        }
        Ok(LogicalInstr { kind, qubits })
    }
}

impl fmt::Display for LogicalInstr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.kind {
            InstrKind::Cnot => "CNOT",
            InstrKind::H => "H",
            InstrKind::S => "S",
            InstrKind::Tteleport => "T",
            InstrKind::PauliMeas => "M",
            InstrKind::SingleQubitClifford => "X",
        };
        write!(f, "{name}")?;
        for q in &self.qubits {
            write!(f, " {q}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SchedError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{kind:?} takes {} operand(s), got {got}", kind.arity())]
    Arity { kind: InstrKind, got: usize },
    #[error("operand {0} repeated")]
    SameOperand(usize),
    #[error("dependency graph has a cycle")]
    Cycle,
    #[error("random circuits need at least two qubits")]
    TooFewQubits,
}

/// Beats charged per instruction kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatencyModel {
    pub cnot: u32,
    pub h: u32,
    pub s: u32,
    pub t: u32,
    pub pauli_meas: u32,
    pub pauli: u32,
}

impl LatencyModel {
    /// Two-surgery CNOT and a 3-beat rotation after the transversal H.
    pub fn baseline() -> Self {
        LatencyModel { cnot: 2, h: 1 + 3, s: 2, t: 2 + 2, pauli_meas: 1, pauli: 0 }
    }

    /// One-beat CNOT and 2-beat rotation.
    pub fn improved() -> Self {
        LatencyModel { cnot: 1, h: 1 + 2, ..Self::baseline() }
    }

    pub fn latency(&self, k: InstrKind) -> u32 {
        match k {
            InstrKind::Cnot => self.cnot,
            InstrKind::H => self.h,
            InstrKind::S => self.s,
            InstrKind::Tteleport => self.t,
            InstrKind::PauliMeas => self.pauli_meas,
            InstrKind::SingleQubitClifford => self.pauli,
        }
    }

    pub fn dominated_by(&self, other: &LatencyModel) -> bool {
        self.cnot <= other.cnot && self.h <= other.h && self.s <= other.s && self.t <= other.t && self.pauli_meas <= other.pauli_meas && self.pauli <= other.pauli
    }
}

/// Instruction nodes with predecessor lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CircuitDag {
    pub kinds: Vec<InstrKind>,
    pub preds: Vec<Vec<usize>>,
}

impl CircuitDag {
    /// Each instruction depends on the previous instruction touching any of its operands.
    pub fn build(instrs: &[LogicalInstr]) -> Self {
        let mut last: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
        let mut preds = Vec::with_capacity(instrs.len());
        for (n, ins) in instrs.iter().enumerate() {
            let mut p: Vec<usize> = ins.qubits.iter().filter_map(|q| last.get(q).copied()).collect();
            p.sort_unstable();
            p.dedup();
            preds.push(p);
            for q in &ins.qubits {
                last.insert(*q, n);
            }
        }
        CircuitDag { kinds: instrs.iter().map(|i| i.kind).collect(), preds }
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }
}

/// Longest latency-weighted path, by Kahn order.
pub fn critical_path(dag: &CircuitDag, model: &LatencyModel) -> Result<u64, SchedError> {
    let n = dag.len();
    let mut succ = vec![Vec::new(); n];
    let mut indeg = vec![0usize; n];
    for (v, ps) in dag.preds.iter().enumerate() {
        for &p in ps {
            if p >= n {
                return Err(SchedError::Cycle);
            }
            succ[p].push(v);
            indeg[v] += 1;
        }
    }
    let mut ready: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut start = vec![0u64; n];
    let mut best = 0u64;
    let mut seen = 0;
    while let Some(v) = ready.pop() {
        seen += 1;
        let finish = start[v] + u64::from(model.latency(dag.kinds[v]));
        best = best.max(finish);
        for &w in &succ[v] {
            start[w] = start[w].max(finish);
            indeg[w] -= 1;
            if indeg[w] == 0 {
                ready.push(w);
            }
        }
    }
    if seen != n {
        return Err(SchedError::Cycle);
    }
    Ok(best)
}

pub fn makespan(instrs: &[LogicalInstr], model: &LatencyModel) -> u64 {
    critical_path(&CircuitDag::build(instrs), model).expect("program order is acyclic")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub beats_base: u64,
    pub beats_improved: u64,
    /// Percent.
    pub reduction: f64,
}

pub fn compare(instrs: &[LogicalInstr], baseline: &LatencyModel, improved: &LatencyModel) -> Comparison {
    let b = makespan(instrs, baseline);
    let i = makespan(instrs, improved);
    let reduction = if b == 0 { 0.0 } else { 100.0 * (1.0 - i as f64 / b as f64) };
    Comparison { beats_base: b, beats_improved: i, reduction }
}

/// Uniform over {H, S, CNOT} with uniform operands.
pub fn random_clifford(n: usize, length: usize, seed: u64) -> Result<Vec<LogicalInstr>, SchedError> {
    if n < 2 {
        return Err(SchedError::TooFewQubits);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(length);
    for _ in 0..length {
        let ins = match rng.gen_range(0..3) {
            0 => LogicalInstr { kind: InstrKind::H, qubits: vec![rng.gen_range(0..n)] },
            1 => LogicalInstr { kind: InstrKind::S, qubits: vec![rng.gen_range(0..n)] },
            _ => {
                let a = rng.gen_range(0..n);
                let mut b = rng.gen_range(0..n - 1);
                if b >= a {
                    b += 1;
                }
                LogicalInstr { kind: InstrKind::Cnot, qubits: vec![a, b] }
            }
        };
        out.push(ins);
    }
    Ok(out)
}

/// `GATE q [q2]` per line; `#` starts a comment. Accepts the Clifford+T names H, S, SDG, T, TDG,
/// X, Y, Z, CNOT/CX and measurements M/MX/MZ.
pub fn parse_circuit(text: &str) -> Result<Vec<LogicalInstr>, SchedError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| SchedError::Parse { line: n + 1, msg };
        let mut parts = line.split_whitespace();
        let name = parts.next().unwrap_or("").to_ascii_uppercase();
        let kind = match name.as_str() {
            "CNOT" | "CX" => InstrKind::Cnot,
            "H" => InstrKind::H,
            "S" | "SDG" => InstrKind::S,
            "T" | "TDG" => InstrKind::Tteleport,
            "X" | "Y" | "Z" => InstrKind::SingleQubitClifford,
            "M" | "MX" | "MZ" => InstrKind::PauliMeas,
            other => return Err(err(format!("gate {other:?} is not in Clifford+T"))),
        };
        let qubits = parts
            .map(|p| p.parse::<usize>().map_err(|_| err(format!("bad operand {p:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        out.push(LogicalInstr::new(kind, qubits).map_err(|e| err(e.to_string()))?);
    }
    Ok(out)
}

pub fn render_circuit(instrs: &[LogicalInstr]) -> String {
    instrs.iter().map(|i| format!("{i}\n")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub qubits: usize,
    pub length: usize,
    pub seeds: Vec<u64>,
    pub runs: Vec<Comparison>,
    pub mean_reduction: f64,
}

impl SuiteReport {
    pub fn to_text(&self) -> String {
        let mut s = format!("{:>6} {:>10} {:>10} {:>9}\n", "seed", "baseline", "improved", "reduct%");
        for (seed, r) in self.seeds.iter().zip(&self.runs) {
            s += &format!("{:>6} {:>10} {:>10} {:>9.2}\n", seed, r.beats_base, r.beats_improved, r.reduction);
        }
        s += &format!("mean reduction {:.2}% over {} circuits (n={}, length={})\n", self.mean_reduction, self.runs.len(), self.qubits, self.length);
        s
    }
}

/// Random-Clifford comparison over seeds `0..count`, fanned out over threads.
pub fn random_suite(n: usize, length: usize, count: u64, baseline: &LatencyModel, improved: &LatencyModel) -> Result<SuiteReport, SchedError> {
    let seeds: Vec<u64> = (0..count).collect();
    let workers = std::thread::available_parallelism().map_or(1, |p| p.get()).min(seeds.len().max(1));
    let chunk = seeds.len().div_ceil(workers.max(1)).max(1);
    let runs: Result<Vec<Comparison>, SchedError> = std::thread::scope(|s| {
        let hs: Vec<_> = seeds
            .chunks(chunk)
            .map(|c| s.spawn(move || c.iter().map(|&seed| random_clifford(n, length, seed).map(|p| compare(&p, baseline, improved))).collect::<Result<Vec<_>, _>>()))
            .collect();
        let mut all = Vec::new();
        for h in hs {
            all.extend(h.join().expect("suite worker")?);
        }
        Ok(all)
    });
    let runs = runs?;
    let mean_reduction = if runs.is_empty() { 0.0 } else { runs.iter().map(|r| r.reduction).sum::<f64>() / runs.len() as f64 };
    Ok(SuiteReport { qubits: n, length, seeds, runs, mean_reduction })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ins(kind: InstrKind, q: &[usize]) -> LogicalInstr {
        LogicalInstr::new(kind, q.to_vec()).unwrap()
    }

    /// Every source-to-sink path, explicitly enumerated over all shared-operand orderings.
    fn brute_force(instrs: &[LogicalInstr], m: &LatencyModel) -> u64 {
        let n = instrs.len();
        let edge = |a: usize, b: usize| a < b && instrs[a].qubits.iter().any(|q| instrs[b].qubits.contains(q));
        fn walk(v: usize, acc: u64, n: usize, edge: &dyn Fn(usize, usize) -> bool, w: &dyn Fn(usize) -> u64, best: &mut u64) {
            let acc = acc + w(v);
            *best = (*best).max(acc);
            for u in v + 1..n {
                if edge(v, u) {
                    walk(u, acc, n, edge, w, best);
                }
            }
        }
        let w = |v: usize| u64::from(m.latency(instrs[v].kind));
        let mut best = 0;
        for v in 0..n {
            walk(v, 0, n, &edge, &w, &mut best);
        }
        best
    }

    #[test]
    fn single_cnot_halves() {
        let c = compare(&[ins(InstrKind::Cnot, &[0, 1])], &LatencyModel::baseline(), &LatencyModel::improved());
        assert_eq!((c.beats_base, c.beats_improved), (2, 1));
        assert_eq!(c.reduction, 50.0);
    }

    #[test]
    fn hadamard_rotation_three_vs_two() {
        let (b, i) = (LatencyModel::baseline(), LatencyModel::improved());
        assert_eq!(b.h - 1, 3);
        assert_eq!(i.h - 1, 2);
        let p = [ins(InstrKind::H, &[0]), ins(InstrKind::Cnot, &[0, 1])];
        assert_eq!(makespan(&p, &b), 6);
        assert_eq!(makespan(&p, &i), 4);
    }

    #[test]
    fn empty_and_untouched() {
        assert_eq!(makespan(&[], &LatencyModel::baseline()), 0);
        let p = parse_circuit("S 0\nT 1\nX 0\nMZ 1\n").unwrap();
        assert_eq!(compare(&p, &LatencyModel::baseline(), &LatencyModel::improved()).reduction, 0.0);
    }

    #[test]
    fn parse_rejects_non_clifford_t() {
        assert!(matches!(parse_circuit("H 0\nRZ 1\n"), Err(SchedError::Parse { line: 2, .. })));
        assert!(parse_circuit("CNOT 1 1").is_err());
        assert!(parse_circuit("CNOT 1").is_err());
        assert!(parse_circuit("H x").is_err());
        let p = parse_circuit("# c\ncx 0 1  # tail\ntdg 2\n").unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(parse_circuit(&render_circuit(&p)).unwrap(), p);
    }

    #[test]
    fn cycle_is_reported() {
        let dag = CircuitDag { kinds: vec![InstrKind::H, InstrKind::H], preds: vec![vec![1], vec![0]] };
        assert_eq!(critical_path(&dag, &LatencyModel::baseline()), Err(SchedError::Cycle));
    }

    #[test]
    fn presets_are_dominated() {
        assert!(LatencyModel::improved().dominated_by(&LatencyModel::baseline()));
        assert_eq!(LatencyModel::baseline().pauli, 0);
    }

    #[test]
    fn seeded_generation_is_reproducible() {
        assert_eq!(random_clifford(5, 100, 7).unwrap(), random_clifford(5, 100, 7).unwrap());
        assert_ne!(random_clifford(5, 100, 7).unwrap(), random_clifford(5, 100, 8).unwrap());
        assert!(random_clifford(1, 3, 0).is_err());
    }

    proptest! {
        #[test]
        fn matches_brute_force(seed in any::<u64>(), len in 0usize..=12, n in 2usize..5) {
            let p = random_clifford(n, len, seed).unwrap();
            for m in [LatencyModel::baseline(), LatencyModel::improved()] {
                prop_assert_eq!(makespan(&p, &m), brute_force(&p, &m));
            }
        }

        #[test]
        fn improved_never_slower(seed in any::<u64>(), len in 0usize..200) {
            let p = random_clifford(6, len, seed).unwrap();
            let c = compare(&p, &LatencyModel::baseline(), &LatencyModel::improved());
            prop_assert!(c.beats_improved <= c.beats_base);
        }
    }
}
