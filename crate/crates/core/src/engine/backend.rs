use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use crate::cnf::{parse_model, CnfInstance, Lit, Model, ParseError};

#[derive(Debug, Clone, PartialEq)]
pub enum SolverMode {
    Embedded,
    /// Shell-split command; the CNF is piped on standard input.
    External(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverBackend {
    pub mode: SolverMode,
    pub timeout: Duration,
}

impl Default for SolverBackend {
    fn default() -> Self {
        SolverBackend { mode: SolverMode::Embedded, timeout: Duration::from_secs(600) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveOutcome {
    Sat(Model),
    Unsat,
    Timeout,
}

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("solver process: {0}")]
    Io(#[from] std::io::Error),
    #[error("solver output: {0}")]
    Parse(ParseError),
    #[error("empty solver command")]
    EmptyCommand,
}

impl SolverBackend {
    pub fn embedded() -> Self {
        Self::default()
    }

    pub fn from_spec(spec: &str, timeout: Duration) -> Result<Self, BackendError> {
        if spec == "embedded" {
            return Ok(SolverBackend { mode: SolverMode::Embedded, timeout });
        }
        let parts: Vec<String> = spec.split_whitespace().map(String::from).collect();
        if parts.is_empty() {
            return Err(BackendError::EmptyCommand);
        }
        Ok(SolverBackend { mode: SolverMode::External(parts), timeout })
    }

    pub fn solve(&self, inst: &CnfInstance, extra: &[Vec<Lit>]) -> Result<SolveOutcome, BackendError> {
        match &self.mode {
            SolverMode::Embedded => Ok(self.solve_embedded(inst, extra)),
            SolverMode::External(cmd) => self.solve_external(cmd, inst, extra),
        }
    }

    fn solve_embedded(&self, inst: &CnfInstance, extra: &[Vec<Lit>]) -> SolveOutcome {
        let mut s: cadical::Solver = cadical::Solver::new();
        s.set_callbacks(Some(cadical::Timeout::new(self.timeout.as_secs_f32())));
        for c in inst.clauses.iter().chain(extra) {
            s.add_clause(c.iter().copied());
        }
        match s.solve() {
            Some(true) => {
                let n = inst.num_vars();
                SolveOutcome::Sat(Model::from_fn(n, |v| v as i32 <= s.max_variable() && s.value(v as i32) == Some(true)))
            }
            Some(false) => SolveOutcome::Unsat,
            None => SolveOutcome::Timeout,
        }
    }

    fn solve_external(&self, cmd: &[String], inst: &CnfInstance, extra: &[Vec<Lit>]) -> Result<SolveOutcome, BackendError> {
        let mut full = inst.clone();
        for c in extra {
            full.add(c.clone());
        }
        let mut child = Command::new(&cmd[0]).args(&cmd[1..]).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::null()).spawn()?;
        let mut stdin = child.stdin.take().expect("piped");
        let text = full.to_dimacs();
        let writer = std::thread::spawn(move || {
            let _ = stdin.write_all(text.as_bytes());
        });
        let mut stdout = child.stdout.take().expect("piped");
        let reader = std::thread::spawn(move || {
            let mut s = String::new();
            let _ = stdout.read_to_string(&mut s);
            s
        });
        let start = Instant::now();
        loop {
            if child.try_wait()?.is_some() {
                break;
            }
            if start.elapsed() > self.timeout {
                let _ = child.kill();
                let _ = child.wait();
                return Ok(SolveOutcome::Timeout);
            }
            std::thread::sleep(Duration::from_millis(20));
        }
        let _ = writer.join();
        let out = reader.join().unwrap_or_default();
        if out.lines().any(|l| l.trim() == "s UNKNOWN") || !out.lines().any(|l| l.starts_with('s') || l.starts_with('v')) {
            return Ok(SolveOutcome::Timeout);
        }
        match parse_model(&out, inst.num_vars()) {
            Ok(m) => Ok(SolveOutcome::Sat(m)),
            Err(ParseError::Unsat) => Ok(SolveOutcome::Unsat),
            Err(e) => Err(BackendError::Parse(e)),
        }
    }
}
