//! Instance assembly, minimum-time search, decoding and verification.

mod backend;
mod bulk;
mod verify;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use backend::{BackendError, SolveOutcome, SolverBackend, SolverMode};
pub use bulk::{decode, Bulk, BulkConnection, BulkFace, BulkFlow};
pub use verify::{verify, FlowAudit, VerificationReport};

use crate::cnf::{CnfInstance, Lit, VarKey};
use crate::encoder_ft::{encode_ft, FtRule, FtTables};
use crate::encoder_func::{encode_func, encode_ports, plan_ports, register_func, NumRule, PortAssignment, PortError};
use crate::encoder_ls::{encode_ls, register_geometry};
use crate::flows::{Color, StabilizerFlow, TargetSpec};
use crate::geometry::GeometryError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncodeOptions {
    pub ft: bool,
    pub ft_rule: FtRule,
    pub num_rule: NumRule,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        EncodeOptions { ft: true, ft_rule: FtRule::default(), num_rule: NumRule::default() }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("beats must be at least 1")]
    ZeroBeats,
    #[error(transparent)]
    Port(#[from] PortError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("solver timed out at K={0}")]
    Timeout(usize),
    #[error("no solution up to K={0}")]
    BeatCap(usize),
    #[error("audit loop gave up after {0} blocked models")]
    AuditCap(usize),
}

pub struct Instance {
    pub cnf: CnfInstance,
    pub ports: PortAssignment,
    pub flows: Vec<StabilizerFlow>,
    pub beats: usize,
    pub ft_pairs: usize,
}

impl Instance {
    pub fn decode(&self, model: &crate::cnf::Model, target: &TargetSpec) -> Bulk {
        decode(model, &self.cnf, target.width, target.height, self.beats, self.ports.num_bits, self.flows.len())
    }
}

pub fn build_instance(target: &TargetSpec, beats: usize, opts: &EncodeOptions, tables: Option<&FtTables>) -> Result<Instance, EngineError> {
    if beats == 0 {
        return Err(EngineError::ZeroBeats);
    }
    let ports = plan_ports(target, beats)?;
    let flows = target.flows();
    let mut cnf = CnfInstance::new();
    register_geometry(&ports.domain, &mut cnf);
    register_func(&ports, flows.len(), &mut cnf);
    encode_ls(&ports.domain, &ports.external, &mut cnf);
    encode_ports(&ports, flows.len(), &mut cnf);
    encode_func(&ports, &flows, opts.num_rule, &mut cnf);
    let mut ft_pairs = 0;
    if opts.ft {
        let owned;
        let tables = match tables {
            Some(t) => t,
            None => {
                owned = FtTables::new(target.m)?;
                &owned
            }
        };
        ft_pairs = encode_ft(&ports.domain, tables, ports.num_bits, opts.ft_rule, &mut cnf);
    }
    Ok(Instance { cnf, ports, flows, beats, ft_pairs })
}

/// Clause forbidding the exact set of active connections and flow marks of `model`.
fn blocking_clause(inst: &Instance, model: &crate::cnf::Model) -> Vec<Lit> {
    inst.cnf
        .registry
        .keys()
        .filter(|(v, k)| model.value(*v) && matches!(k, VarKey::ConFace(..) | VarKey::Connectivity(..)))
        .map(|(v, _)| -(v as Lit))
        .collect()
}

pub const AUDIT_CAP: usize = 64;

#[derive(Debug, Clone)]
pub enum AuditedOutcome {
    Sat { bulk: Bulk, report: VerificationReport, blocked: usize },
    Unsat { blocked: usize },
    Timeout,
}

/// Solves, decodes and audits; failed audits are blocked and the instance re-solved.
pub fn audit_and_block(inst: &Instance, target: &TargetSpec, backend: &SolverBackend, opts: &EncodeOptions, tables: Option<&FtTables>) -> Result<AuditedOutcome, EngineError> {
    let mut extra: Vec<Vec<Lit>> = Vec::new();
    loop {
        match backend.solve(&inst.cnf, &extra)? {
            SolveOutcome::Unsat => return Ok(AuditedOutcome::Unsat { blocked: extra.len() }),
            SolveOutcome::Timeout => return Ok(AuditedOutcome::Timeout),
            SolveOutcome::Sat(model) => {
                let bulk = inst.decode(&model, target);
                let report = verify(&bulk, target, opts, tables);
                if report.verdict {
                    return Ok(AuditedOutcome::Sat { bulk, report, blocked: extra.len() });
                }
                log::info!("K={}: audit rejected model ({} violations), blocking", inst.beats, report.violation_count());
                log::debug!("{:?}", report);
                if extra.len() >= AUDIT_CAP {
                    return Err(EngineError::AuditCap(extra.len()));
                }
                extra.push(blocking_clause(inst, &model));
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub beats: usize,
    pub result: String,
    pub vars: usize,
    pub clauses: usize,
    pub seconds: f64,
    pub blocked: usize,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub k_star: usize,
    pub bulk: Bulk,
    pub report: VerificationReport,
    pub attempts: Vec<Attempt>,
}

#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub from: usize,
    pub max: usize,
    pub jobs: usize,
    pub opts: EncodeOptions,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { from: 3, max: 16, jobs: 1, opts: EncodeOptions::default() }
    }
}

fn attempt(target: &TargetSpec, k: usize, backend: &SolverBackend, opts: &EncodeOptions, tables: &FtTables) -> Result<(Attempt, AuditedOutcome), EngineError> {
    let start = Instant::now();
    let inst = build_instance(target, k, opts, Some(tables))?;
    let out = audit_and_block(&inst, target, backend, opts, Some(tables))?;
    let (result, blocked) = match &out {
        AuditedOutcome::Sat { blocked, .. } => ("SAT", *blocked),
        AuditedOutcome::Unsat { blocked } => ("UNSAT", *blocked),
        AuditedOutcome::Timeout => ("TIMEOUT", 0),
    };
    let a = Attempt { beats: k, result: result.into(), vars: inst.cnf.num_vars(), clauses: inst.cnf.num_clauses(), seconds: start.elapsed().as_secs_f64(), blocked };
    log::info!("K={k}: {result} ({} vars, {} clauses, {:.2}s)", a.vars, a.clauses, a.seconds);
    Ok((a, out))
}

/// Smallest K >= `from` with an audited solution. Batches of `jobs` beat counts run concurrently;
/// the answer is the smallest SAT value in the first batch holding one.
pub fn min_time_search(target: &TargetSpec, backend: &SolverBackend, cfg: &SearchConfig) -> Result<SearchResult, EngineError> {
    let tables = FtTables::new(target.m)?;
    let from = cfg.from.max(1);
    let jobs = cfg.jobs.max(1);
    let mut attempts = Vec::new();
    let mut k = from;
    while k <= cfg.max {
        let batch: Vec<usize> = (k..=cfg.max).take(jobs).collect();
        let results: Vec<Result<(Attempt, AuditedOutcome), EngineError>> = std::thread::scope(|s| {
            let hs: Vec<_> = batch.iter().map(|&b| { let tables = &tables; s.spawn(move || attempt(target, b, backend, &cfg.opts, tables)) }).collect();
            hs.into_iter().map(|h| h.join().expect("solver thread")).collect()
        });
        for (b, res) in batch.iter().zip(results) {
            let (a, out) = res?;
            attempts.push(a);
            match out {
                AuditedOutcome::Sat { bulk, report, .. } => return Ok(SearchResult { k_star: *b, bulk, report, attempts }),
                AuditedOutcome::Timeout => return Err(EngineError::Timeout(*b)),
                AuditedOutcome::Unsat { .. } => {}
            }
        }
        k += batch.len();
    }
    Err(EngineError::BeatCap(cfg.max))
}

/// Fixes every semantic variable to the bulk's values and asks the solver whether the
/// constraint set accepts them. Auxiliary variables stay free.
pub fn verify_with_solver(bulk: &Bulk, target: &TargetSpec, backend: &SolverBackend, opts: &EncodeOptions) -> Result<bool, EngineError> {
    let inst = build_instance(target, bulk.beats, opts, None)?;
    let faces: std::collections::BTreeMap<_, _> = bulk.faces.iter().map(|f| (f.slot(), (f.color, f.num))).collect();
    let cons: std::collections::BTreeSet<_> = bulk.connections.iter().map(|c| if c.from <= c.to { (c.from, c.to) } else { (c.to, c.from) }).collect();
    let marks: Vec<std::collections::BTreeSet<_>> = bulk.flows.iter().map(|f| f.marked.iter().copied().collect()).collect();
    let mut units = Vec::new();
    for (v, key) in inst.cnf.registry.keys() {
        let val = match key {
            VarKey::FaceExist(s) => faces.contains_key(s),
            VarKey::FaceColor(s) => faces.get(s).is_some_and(|x| x.0 == Color::Z),
            VarKey::Num(s, b) => faces.get(s).is_some_and(|x| x.1 >> b & 1 == 1),
            VarKey::ConFace(a, b) => cons.contains(&(*a, *b)),
            VarKey::Connectivity(s, c) => marks.get(*c).is_some_and(|m| m.contains(s)),
            VarKey::Aux(_) | VarKey::Label(..) => continue,
        };
        units.push(vec![if val { v as Lit } else { -(v as Lit) }]);
    }
    // connections the instance does not know about cannot be expressed
    let known = cons.iter().all(|(a, b)| inst.cnf.registry.get(&VarKey::ConFace(*a, *b)).is_some());
    let faces_known = faces.keys().all(|s| inst.ports.domain.contains(s));
    if !known || !faces_known {
        return Ok(false);
    }
    match backend.solve(&inst.cnf, &units)? {
        SolveOutcome::Sat(_) => Ok(true),
        SolveOutcome::Unsat => Ok(false),
        SolveOutcome::Timeout => Err(EngineError::Timeout(bulk.beats)),
    }
}
