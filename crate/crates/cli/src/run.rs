//! Subcommand implementations. Each returns the process exit code:
//! 0 solved and verified, 2 solved but verification failed, 3 solver or
//! artifact failure, 64 configuration or usage error.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use pgs_core::grid::build_grid;
use pgs_core::recovery::{CompositeSolution, Region};
use pgs_core::riemann::CriticalSolution;
use pgs_core::shock::right_branch_nodes;
use pgs_core::verify::{self, Check, PropertyReport, Status};
use pgs_core::{build_wave_fan, continuation_from, initial_shock, ConvergenceTrace, PressureField, ShockCurve, WaveFan};

use crate::artifacts::*;
use crate::config::{load_config, parse_config, ConfigError, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_CONFIG: i32 = 64;

/// Environment variable overriding the sweep worker count.
pub const THREADS_ENV: &str = "PGS_THREADS";

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Solver(pgs_core::Error),
    Io(std::io::Error),
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => EXIT_CONFIG,
            CliError::Solver(_) | CliError::Io(_) => EXIT_SOLVER,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Solver(e) => write!(f, "solver failed: {e}"),
            CliError::Io(e) => write!(f, "artifact error: {e}"),
            CliError::Usage(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Summary of a finished `solve`.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub exit_code: i32,
    pub report: PropertyReport,
    pub r_p2: f64,
}

/// Shock of the critical configuration: the planar line `eta = -sqrt(pbar)`
/// sampled on the solver lattice.
pub fn critical_shock(cfg: &RunConfig) -> ShockCurve {
    let c = cfg.riemann();
    let sq = c.pbar0().sqrt();
    let theta1 = 1.5 * std::f64::consts::PI + (sq / c.p1.sqrt()).acos();
    let th = right_branch_nodes(theta1, 2.0 * std::f64::consts::PI / cfg.solver.ntheta as f64);
    let r: Vec<f64> = th.iter().map(|t| sq / (t - 1.5 * std::f64::consts::PI).cos()).collect();
    let rp: Vec<f64> = th.iter().zip(&r).map(|(t, r)| r * (t - 1.5 * std::f64::consts::PI).tan()).collect();
    ShockCurve::from_right_branch(&th, &r, &rp, &vec![false; th.len()])
}

/// Checks that only read the stored continuation history.
pub fn tail_check(stages: &[(f64, Vec<f64>)], outer_tol: f64) -> Check {
    let threshold = 10.0 * outer_tol;
    let mut c = Check {
        name: "eps_tail".into(),
        status: Status::Inconclusive,
        threshold,
        values: vec![],
        note: Some("fewer than two continuation stages".into()),
    };
    if let [.., (_, a), (_, b)] = stages {
        if a.len() == b.len() {
            let d = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            c.status = if d < threshold { Status::Pass } else { Status::Fail };
            c.values = vec![("max_difference".into(), d)];
            c.note = None;
        }
    }
    c
}

fn critical_report(cfg: &RunConfig) -> PropertyReport {
    let crit = CriticalSolution::new(&cfg.riemann()).expect("validated critical config");
    let res = WaveFan::rh_residual(&crit.upper, &crit.lower);
    PropertyReport {
        checks: vec![Check {
            name: "critical_rh".into(),
            status: if res < 1e-12 { Status::Pass } else { Status::Fail },
            threshold: 1e-12,
            values: vec![("residual".into(), res)],
            note: None,
        }],
    }
}

fn full_report(sol: &CompositeSolution, stages: &[(f64, Vec<f64>)], outer_tol: f64) -> PropertyReport {
    let mut rep = verify::verify_solution(sol);
    rep.checks.push(tail_check(stages, outer_tol));
    rep
}

fn write_manifest(dir: &Path, cfg: &RunConfig, started: u64, status: &str, error: Option<String>) -> std::io::Result<()> {
    let names = [CONFIG_TOML, FAN_JSON, FIELD_CSV, SHOCK_CSV, TRACE_CSV, STAGES_CSV, REPORT_JSON];
    RunManifest {
        format_version: FORMAT_VERSION,
        code_version: env!("CARGO_PKG_VERSION").into(),
        started_unix: started,
        finished_unix: now(),
        mode: if cfg.is_critical() { "critical" } else { "elliptic" }.into(),
        status: status.into(),
        error,
        config: cfg.to_toml(),
        seed: None,
        artifacts: checksum_entries(dir, &names)?,
    }
    .write(dir)
}

/// Full continuation solve followed by verification; writes every artifact
/// into `out`.
pub fn solve(cfg: &RunConfig, out: &Path) -> Result<SolveOutcome, CliError> {
    cfg.validate()?;
    let started = now();
    fs::create_dir_all(out)?;
    fs::write(out.join(CONFIG_TOML), cfg.to_toml())?;
    let solver = cfg.solver();

    let (sol, trace) = if cfg.is_critical() {
        let shock = critical_shock(cfg);
        let r1 = cfg.problem.p1.sqrt();
        let grid = build_grid(r1, &shock, solver.ns, solver.ntheta, solver.mode).map_err(CliError::Solver)?;
        let p = PressureField::constant(&grid, cfg.problem.p1);
        // The wave fan is undefined here; velocity comes from state 1 only.
        let mut sol = CompositeSolution::new(critical_fan(cfg), shock, grid, p);
        sol.velocity.u.fill(cfg.problem.u1);
        sol.velocity.v.fill(cfg.problem.v1);
        (sol, ConvergenceTrace::default())
    } else {
        let fan = build_wave_fan(&cfg.riemann()).map_err(CliError::Solver)?;
        let mut trace = ConvergenceTrace::default();
        let init = initial_shock(&fan, &solver);
        let res = continuation_from(&fan, &solver, &init, &mut trace);
        export_trace(&trace, &out.join(TRACE_CSV))?;
        export_stages(&trace, &out.join(STAGES_CSV))?;
        match res {
            Ok((p, s, g)) => (CompositeSolution::new(fan, s, g, p), trace),
            Err(e) => {
                write_manifest(out, cfg, started, "failed", Some(e.to_string()))?;
                return Err(CliError::Solver(e));
            }
        }
    };
    write_json(&fan_json(&sol.fan), &out.join(FAN_JSON))?;
    export_field(&sol, &out.join(FIELD_CSV))?;
    export_shock(&sol.shock, &out.join(SHOCK_CSV))?;
    export_trace(&trace, &out.join(TRACE_CSV))?;
    export_stages(&trace, &out.join(STAGES_CSV))?;
    let report = if cfg.is_critical() {
        critical_report(cfg)
    } else {
        let stages = import_stages(&out.join(STAGES_CSV))?;
        full_report(&sol, &stages, solver.outer_tol)
    };
    write_json(&report_json(&report), &out.join(REPORT_JSON))?;
    write_manifest(out, cfg, started, "solved", None)?;
    let exit_code = if report.all_passed() { EXIT_OK } else { EXIT_VERIFY_FAILED };
    Ok(SolveOutcome { exit_code, report, r_p2: sol.shock.r_at_p2() })
}

/// Stand-in fan for the critical case: the shock lines coincide and the
/// vortex sheets degenerate, so only the geometry needed for sampling is
/// filled in.
fn critical_fan(cfg: &RunConfig) -> WaveFan {
    let mut c = cfg.riemann();
    // Geometry at a negligible angle, then the exact critical states.
    c.alpha1 = 1e-12;
    let mut fan = build_wave_fan(&c).expect("validated critical config");
    let crit = CriticalSolution::new(&cfg.riemann()).expect("validated critical config");
    fan.config = cfg.riemann();
    fan.states = [crit.upper, crit.lower, crit.lower, crit.lower];
    fan
}

/// A solved run reloaded from disk.
pub struct LoadedRun {
    pub config: RunConfig,
    pub manifest: RunManifest,
    pub solution: CompositeSolution,
    pub critical: Option<CriticalSolution>,
    pub stages: Vec<(f64, Vec<f64>)>,
}

pub fn load_run(dir: &Path) -> Result<LoadedRun, CliError> {
    let manifest = RunManifest::read(dir)?;
    if manifest.code_version != env!("CARGO_PKG_VERSION") {
        eprintln!(
            "warning: run written by version {} but this is {}",
            manifest.code_version,
            env!("CARGO_PKG_VERSION")
        );
    }
    if manifest.status != "solved" {
        return Err(CliError::Usage(format!("run in {} did not finish: {:?}", dir.display(), manifest.error)));
    }
    let config = parse_config(&manifest.config)?;
    for a in &manifest.artifacts {
        let got = sha256_file(&dir.join(&a.path))?;
        if got != a.sha256 && a.path != REPORT_JSON {
            return Err(CliError::Usage(format!("checksum mismatch for {}", a.path)));
        }
    }
    let shock = import_shock(&dir.join(SHOCK_CSV))?;
    let solver = config.solver();
    let r1 = config.problem.p1.sqrt();
    let grid = build_grid(r1, &shock, solver.ns, solver.ntheta, solver.mode).map_err(CliError::Solver)?;
    let p = import_field(&grid, &dir.join(FIELD_CSV))?;
    let (fan, critical) = if config.is_critical() {
        (critical_fan(&config), Some(CriticalSolution::new(&config.riemann()).map_err(CliError::Solver)?))
    } else {
        (build_wave_fan(&config.riemann()).map_err(CliError::Solver)?, None)
    };
    let stages = import_stages(&dir.join(STAGES_CSV))?;
    Ok(LoadedRun { config, manifest, solution: CompositeSolution::new(fan, shock, grid, p), critical, stages })
}

/// Recomputes the report from stored artifacts.
pub fn verify_run(dir: &Path) -> Result<(i32, PropertyReport), CliError> {
    let run = load_run(dir)?;
    let report = if run.critical.is_some() {
        critical_report(&run.config)
    } else {
        full_report(&run.solution, &run.stages, run.config.solver.outer_tol)
    };
    write_json(&report_json(&report), &dir.join(REPORT_JSON))?;
    Ok((if report.all_passed() { EXIT_OK } else { EXIT_VERIFY_FAILED }, report))
}

/// `p u v region`; velocity prints as `nan` inside the pole-excluded disk.
pub fn sample(run: &LoadedRun, xi: f64, eta: f64) -> String {
    if let Some(c) = &run.critical {
        let s = c.sample(xi, eta);
        let region = if eta > c.line_eta { "state1" } else { "state2" };
        return format!("{} {} {} {region}", s.p, s.u, s.v);
    }
    let s = run.solution.sample(xi, eta);
    let (u, v) = s.velocity.unwrap_or((f64::NAN, f64::NAN));
    let region = match s.region {
        Region::FarField(k) => format!("state{}", k + 1),
        Region::BeyondShock(k) => format!("state{}", k + 1),
        Region::Subsonic => "subsonic".into(),
    };
    format!("{} {u} {v} {region}", s.p)
}

/// Worker count: the environment override, else the available parallelism.
pub fn thread_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n: &usize| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub value: f64,
    pub dir: PathBuf,
    pub exit_code: i32,
    pub r_p2: Option<f64>,
}

/// Independent solves over `values` of `param`, each in its own
/// subdirectory of `out`; a `sweep.csv` summary is written last.
pub fn sweep(base: &RunConfig, param: &str, values: &[f64], out: &Path, threads: usize) -> Result<Vec<SweepEntry>, CliError> {
    let mut configs = Vec::new();
    for &v in values {
        let mut c = base.clone();
        c.set(param, v)?;
        c.validate()?;
        configs.push((v, c));
    }
    fs::create_dir_all(out)?;
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<SweepEntry>>> = Mutex::new(vec![None; configs.len()]);
    std::thread::scope(|sc| {
        for _ in 0..threads.max(1).min(configs.len()) {
            sc.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                let Some((v, c)) = configs.get(k) else { break };
                let dir = out.join(format!("{param}={v}"));
                let entry = match solve(c, &dir) {
                    Ok(o) => SweepEntry { value: *v, dir, exit_code: o.exit_code, r_p2: Some(o.r_p2) },
                    Err(e) => {
                        eprintln!("{param}={v}: {e}");
                        SweepEntry { value: *v, dir, exit_code: e.exit_code(), r_p2: None }
                    }
                };
                results.lock().unwrap()[k] = Some(entry);
            });
        }
    });
    let entries: Vec<SweepEntry> = results.into_inner().unwrap().into_iter().map(|e| e.unwrap()).collect();
    let mut w = csv::Writer::from_path(out.join("sweep.csv")).map_err(|e| CliError::Io(e.into()))?;
    w.write_record([param, "exit_code", "r_p2", "dir"]).map_err(|e| CliError::Io(e.into()))?;
    for e in &entries {
        w.write_record([
            e.value.to_string(),
            e.exit_code.to_string(),
            e.r_p2.map_or(String::new(), |r| r.to_string()),
            e.dir.file_name().unwrap().to_string_lossy().into_owned(),
        ])
        .map_err(|e| CliError::Io(e.into()))?;
    }
    w.flush()?;
    Ok(entries)
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    Ok(load_config(path)?)
}
