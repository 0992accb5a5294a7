use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lsat_core::cnf::parse_model;
use lsat_core::encoder_ft::FtRule;
use lsat_core::encoder_func::NumRule;
use lsat_core::engine::{build_instance, min_time_search, verify, Bulk, EncodeOptions, EngineError, SearchConfig, SolveOutcome, SolverBackend};
use lsat_core::flows::{parse_target, TargetSpec};
use lsat_core::sched::{compare, parse_circuit, random_clifford, LatencyModel};
use lsat_core::viz::{export_mesh, render_slices};

const EXIT_FAILURE: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_UNSAT: u8 = 3;
const EXIT_TIMEOUT: u8 = 4;
const EXIT_VERIFY: u8 = 5;

#[derive(Parser)]
#[command(name = "lsat", version, about = "Lattice-surgery synthesis and verification by SAT")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Minimum-time search for a target.
    Synth(SynthArgs),
    /// Check a bulk against a target without a solver.
    Verify(VerifyArgs),
    /// Write the instance for a fixed beat count as DIMACS.
    ExportCnf(ExportArgs),
    /// Decode a solver model of an exported instance into a bulk.
    Decode(DecodeArgs),
    /// Print the stabilizer flows of a target.
    Flows(FlowsArgs),
    /// Draw slices and a mesh for a bulk.
    Render(RenderArgs),
    /// Compare baseline and improved schedules.
    Bench(BenchArgs),
    /// Solve DIMACS from a file or standard input and print a competition-format answer.
    Solve(SolveArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FtRuleArg {
    Same,
    Different,
}

#[derive(Clone, Copy, ValueEnum)]
enum NumRuleArg {
    Free,
    Propagate,
}

#[derive(Args, Clone)]
struct EncodeArgs {
    /// Leave out the fault-tolerance constraints.
    #[arg(long)]
    no_ft: bool,
    #[arg(long, value_enum, default_value = "different")]
    ft_rule: FtRuleArg,
    #[arg(long, value_enum, default_value = "free")]
    num_rule: NumRuleArg,
}

impl EncodeArgs {
    fn options(&self) -> EncodeOptions {
        EncodeOptions {
            ft: !self.no_ft,
            ft_rule: match self.ft_rule {
                FtRuleArg::Same => FtRule::SameNum,
                FtRuleArg::Different => FtRule::DifferentNum,
            },
            num_rule: match self.num_rule {
                NumRuleArg::Free => NumRule::Free,
                NumRuleArg::Propagate => NumRule::Propagate,
            },
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    target: PathBuf,
    #[arg(long)]
    from_beats: Option<usize>,
    #[arg(long, default_value_t = 16)]
    max_beats: usize,
    /// `embedded` or a solver command reading DIMACS on standard input.
    #[arg(long, env = "LSAT_SOLVER", default_value = "embedded")]
    solver: String,
    /// Per-solve limit in seconds.
    #[arg(long, default_value_t = 600.0)]
    timeout: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    enc: EncodeArgs,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    target: PathBuf,
    #[arg(long)]
    bulk: PathBuf,
    /// Write the full report as JSON here.
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    enc: EncodeArgs,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    target: PathBuf,
    #[arg(long)]
    beats: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    names: Option<PathBuf>,
    #[command(flatten)]
    enc: EncodeArgs,
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(long)]
    target: PathBuf,
    #[arg(long)]
    beats: usize,
    /// Solver output (`s`/`v` lines).
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    enc: EncodeArgs,
}

#[derive(Args)]
struct FlowsArgs {
    #[arg(long)]
    target: PathBuf,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    bulk: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, conflicts_with = "random")]
    circuit: Option<PathBuf>,
    /// `n,length,seed`
    #[arg(long)]
    random: Option<String>,
    /// Two presets, `baseline,improved` by default.
    #[arg(long, default_value = "baseline,improved")]
    latency: String,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    /// DIMACS file; standard input when absent.
    cnf: Option<PathBuf>,
}

struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn new(code: u8, msg: impl Into<String>) -> Self {
        Failure { code, msg: msg.into() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(EXIT_FAILURE, e.to_string())
    }
}

fn engine_failure(e: EngineError) -> Failure {
    let code = match e {
        EngineError::BeatCap(_) => EXIT_UNSAT,
        EngineError::Timeout(_) => EXIT_TIMEOUT,
        EngineError::Port(_) | EngineError::ZeroBeats => EXIT_PARSE,
        _ => EXIT_FAILURE,
    };
    Failure::new(code, e.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::new(EXIT_FAILURE, format!("{}: {e}", path.display())))
}

fn load_target(path: &Path) -> Result<TargetSpec, Failure> {
    parse_target(&read(path)?).map_err(|e| Failure::new(EXIT_PARSE, format!("{}: {e}", path.display())))
}

fn load_bulk(path: &Path) -> Result<Bulk, Failure> {
    Bulk::from_json(&read(path)?).map_err(|e| Failure::new(EXIT_PARSE, format!("{}: {e}", path.display())))
}

fn write_renders(bulk: &Bulk, out: &Path) -> Result<(), Failure> {
    fs::create_dir_all(out)?;
    for (name, doc) in render_slices(bulk) {
        fs::write(out.join(name), doc)?;
    }
    fs::write(out.join("bulk_mesh.obj"), export_mesh(bulk))?;
    Ok(())
}

fn synth(a: SynthArgs) -> Result<(), Failure> {
    let target = load_target(&a.target)?;
    let backend = SolverBackend::from_spec(&a.solver, Duration::from_secs_f64(a.timeout)).map_err(|e| Failure::new(EXIT_PARSE, e.to_string()))?;
    let cfg = SearchConfig { from: a.from_beats.or(target.search_from).unwrap_or(SearchConfig::default().from), max: a.max_beats, jobs: a.jobs, opts: a.enc.options() };
    fs::create_dir_all(&a.out)?;
    let res = min_time_search(&target, &backend, &cfg).map_err(engine_failure)?;
    let mut text = String::from("beats  result     vars  clauses  seconds  blocked\n");
    for t in &res.attempts {
        text += &format!("{:>5}  {:<6} {:>8} {:>8} {:>8.3} {:>8}\n", t.beats, t.result, t.vars, t.clauses, t.seconds, t.blocked);
    }
    text += &format!("minimum beats: {}\n", res.k_star);
    let json = serde_json::json!({ "k_star": res.k_star, "attempts": res.attempts, "verdict": res.report.verdict });
    fs::write(a.out.join("report.txt"), &text)?;
    fs::write(a.out.join("report.json"), serde_json::to_string_pretty(&json).expect("report serializes"))?;
    fs::write(a.out.join("bulk.json"), res.bulk.to_json())?;
    write_renders(&res.bulk, &a.out)?;
    eprint!("{text}");
    Ok(())
}

fn verify_cmd(a: VerifyArgs) -> Result<(), Failure> {
    let target = load_target(&a.target)?;
    let bulk = load_bulk(&a.bulk)?;
    let report = verify(&bulk, &target, &a.enc.options(), None);
    if let Some(p) = &a.report {
        fs::write(p, serde_json::to_string_pretty(&report).expect("report serializes"))?;
    }
    for v in report.ls_violations.iter().map(|v| ("LS", v)).chain(report.func_violations.iter().map(|v| ("Func", v))).chain(report.ft_violations.iter().map(|v| ("FT", v))) {
        eprintln!("{}: {}", v.0, v.1);
    }
    for fa in &report.audit {
        eprintln!("flow {}: {} pair(s), {} cross, {}", fa.c, fa.pairs.len(), fa.cross_pairs, if fa.pass { "ok" } else { "FAIL" });
    }
    if report.verdict {
        eprintln!("pass");
        Ok(())
    } else {
        Err(Failure::new(EXIT_VERIFY, format!("verification failed with {} violation(s)", report.violation_count())))
    }
}

fn export(a: ExportArgs) -> Result<(), Failure> {
    let target = load_target(&a.target)?;
    let inst = build_instance(&target, a.beats, &a.enc.options(), None).map_err(engine_failure)?;
    inst.cnf.write_dimacs(fs::File::create(&a.out)?)?;
    if let Some(p) = &a.names {
        inst.cnf.write_name_map(fs::File::create(p)?)?;
    }
    eprintln!("{} variables, {} clauses", inst.cnf.num_vars(), inst.cnf.num_clauses());
    Ok(())
}

fn decode_cmd(a: DecodeArgs) -> Result<(), Failure> {
    let target = load_target(&a.target)?;
    let inst = build_instance(&target, a.beats, &a.enc.options(), None).map_err(engine_failure)?;
    let model = parse_model(&read(&a.model)?, inst.cnf.num_vars()).map_err(|e| match e {
        lsat_core::cnf::ParseError::Unsat => Failure::new(EXIT_UNSAT, "solver reported UNSAT"),
        e => Failure::new(EXIT_PARSE, e.to_string()),
    })?;
    fs::write(&a.out, inst.decode(&model, &target).to_json())?;
    Ok(())
}

fn flows_cmd(a: FlowsArgs) -> Result<(), Failure> {
    let target = load_target(&a.target)?;
    for f in target.flows() {
        println!("{}: {f}", f.c);
    }
    Ok(())
}

fn render(a: RenderArgs) -> Result<(), Failure> {
    let bulk = load_bulk(&a.bulk)?;
    write_renders(&bulk, &a.out)
}

fn preset(name: &str) -> Result<LatencyModel, Failure> {
    match name.trim() {
        "baseline" => Ok(LatencyModel::baseline()),
        "improved" => Ok(LatencyModel::improved()),
        other => Err(Failure::new(EXIT_PARSE, format!("unknown latency preset {other:?}"))),
    }
}

fn bench(a: BenchArgs) -> Result<(), Failure> {
    let (l, r) = a.latency.split_once(',').ok_or_else(|| Failure::new(EXIT_PARSE, "--latency takes two presets"))?;
    let (base, imp) = (preset(l)?, preset(r)?);
    let program = match (&a.circuit, &a.random) {
        (Some(p), None) => parse_circuit(&read(p)?).map_err(|e| Failure::new(EXIT_PARSE, e.to_string()))?,
        (None, Some(spec)) => {
            let v: Vec<&str> = spec.split(',').collect();
            let bad = || Failure::new(EXIT_PARSE, format!("--random expects n,length,seed, got {spec:?}"));
            if v.len() != 3 {
                return Err(bad());
            }
            let n: usize = v[0].trim().parse().map_err(|_| bad())?;
            let len: usize = v[1].trim().parse().map_err(|_| bad())?;
            let seed: u64 = v[2].trim().parse().map_err(|_| bad())?;
            random_clifford(n, len, seed).map_err(|e| Failure::new(EXIT_PARSE, e.to_string()))?
        }
        _ => return Err(Failure::new(EXIT_PARSE, "give exactly one of --circuit or --random")),
    };
    let c = compare(&program, &base, &imp);
    println!("{:<14} {:>8}", "instructions", program.len());
    println!("{:<14} {:>8}", l.trim(), c.beats_base);
    println!("{:<14} {:>8}", r.trim(), c.beats_improved);
    println!("{:<14} {:>7.2}%", "reduction", c.reduction);
    if let Some(p) = &a.json {
        fs::write(p, serde_json::to_string_pretty(&c).expect("comparison serializes"))?;
    }
    Ok(())
}

fn solve(a: SolveArgs) -> Result<(), Failure> {
    let text = match &a.cnf {
        Some(p) => read(p)?,
        None => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s)?;
            s
        }
    };
    let (nvars, clauses) = lsat_core::cnf::parse_dimacs(&text).map_err(|e| Failure::new(EXIT_PARSE, e.to_string()))?;
    let inst = lsat_core::cnf::CnfInstance::from_clauses(nvars, clauses);
    match SolverBackend::embedded().solve(&inst, &[]).map_err(|e| Failure::new(EXIT_FAILURE, e.to_string()))? {
        SolveOutcome::Sat(m) => {
            println!("s SATISFIABLE");
            let lits: Vec<String> = (1..=inst.num_vars() as u32).map(|v| if m.value(v) { v.to_string() } else { format!("-{v}") }).collect();
            for chunk in lits.chunks(20) {
                println!("v {}", chunk.join(" "));
            }
            println!("v 0");
        }
        SolveOutcome::Unsat => println!("s UNSATISFIABLE"),
        SolveOutcome::Timeout => println!("s UNKNOWN"),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Synth(a) => synth(a),
        Cmd::Verify(a) => verify_cmd(a),
        Cmd::ExportCnf(a) => export(a),
        Cmd::Decode(a) => decode_cmd(a),
        Cmd::Flows(a) => flows_cmd(a),
        Cmd::Render(a) => render(a),
        Cmd::Bench(a) => bench(a),
        Cmd::Solve(a) => solve(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
