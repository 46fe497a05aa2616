use std::path::Path;

use darkpath::linalg::Matrix;
use darkpath::qudit::matrix_distance;
use darkpath::robustness::{delta_grid, run_sweep, SweepGate, SweepSpec, DEFAULT_DELTA_MAX};
use darkpath::synthesis::{find_parameters_with, SearchConfig};
use darkpath::two_qudit::{
    conditional_gate_report, laser_to_couplings, single_qudit_drive_count, HamiltonianTerms, LaserConfig, MatrixJson,
    TwoQuditOptions,
};
use darkpath::{compose, min_loops, program_propagator, GateProgram, IntegratorConfig, NamedGate, QuditState, Unitary};
use serde::{Deserialize, Serialize};

use crate::output::{read_json, resolve_format, sink, write_failed, write_matrices_csv, CliError, CliResult};
use crate::{Common, Format, GateArgs, GateSelect, SolveArgs, SweepArgs, TraceArgs, TwoQuditArgs};

fn load_config<T: for<'de> Deserialize<'de> + Default>(common: &Common) -> CliResult<T> {
    match &common.config {
        Some(p) => read_json(p),
        None => Ok(T::default()),
    }
}

fn integrator(mut cfg: IntegratorConfig, common: &Common) -> CliResult<IntegratorConfig> {
    if let Some(r) = common.rtol {
        cfg = cfg.with_rel_tol(r);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_gate(name: &str) -> CliResult<NamedGate> {
    Ok(name.parse::<NamedGate>()?)
}

/// Program chosen by flags, falling back to the config file.
fn select_program(
    select: &GateSelect,
    name: Option<&str>,
    program: Option<&GateProgram>,
    eta: Option<f64>,
) -> CliResult<(GateProgram, Option<NamedGate>)> {
    let (mut program, named) = if let Some(n) = &select.name {
        let g = parse_gate(n)?;
        (g.program(), Some(g))
    } else if let Some(p) = &select.program {
        let text = std::fs::read_to_string(p).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?;
        let prog = GateProgram::from_json(&text).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?;
        (prog, None)
    } else if let Some(n) = name {
        let g = parse_gate(n)?;
        (g.program(), Some(g))
    } else if let Some(p) = program {
        p.validate()?;
        (p.clone(), None)
    } else {
        return Err(CliError::usage("choose a gate with --name or --program"));
    };
    if let Some(eta) = select.eta.or(eta) {
        if !(eta >= 0.0) {
            return Err(CliError::usage(format!("eta must be non-negative, got {eta}")));
        }
        program = program.with_eta(eta);
    }
    Ok((program, named))
}

fn label_of(program: &GateProgram) -> String {
    program.label.clone().unwrap_or_else(|| "custom".into())
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct GateConfig {
    name: Option<String>,
    program: Option<GateProgram>,
    eta: Option<f64>,
    delta: f64,
    integrator: IntegratorConfig,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct GateReport {
    pub label: String,
    pub d: usize,
    pub delta: f64,
    pub analytic: MatrixJson,
    pub simulated: MatrixJson,
    /// Distance between the simulated and analytic gates.
    pub gate_distance: f64,
    /// Distance of the simulated gate to the named target, when there is one.
    pub target_distance: Option<f64>,
    /// Largest population lost from the computational subspace.
    pub leakage: f64,
}

pub fn gate(args: &GateArgs) -> CliResult<()> {
    let config: GateConfig = load_config(&args.common)?;
    let (program, named) = select_program(&args.select, config.name.as_deref(), config.program.as_ref(), config.eta)?;
    let cfg = integrator(config.integrator, &args.common)?;
    let delta = args.delta.unwrap_or(config.delta);
    let analytic = compose(&program)?;
    let full = program_propagator(&program.loops, delta, &cfg)?;
    let simulated = full.leading_block(program.d)?;
    let gate_distance = matrix_distance(&simulated, analytic.matrix())?;
    let target_distance = match named {
        Some(g) => Some(matrix_distance(&simulated, g.target().matrix())?),
        None => None,
    };
    let leakage = (0..program.d)
        .map(|j| 1.0 - simulated.column(j).iter().map(|z| z.norm_sqr()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let report = GateReport {
        label: label_of(&program),
        d: program.d,
        delta,
        analytic: MatrixJson::from_matrix(analytic.matrix()),
        simulated: MatrixJson::from_matrix(&simulated),
        gate_distance,
        target_distance,
        leakage,
    };

    eprintln!("{}: gate distance (simulated vs analytic) {:.3e}", report.label, gate_distance);
    if let Some(t) = target_distance {
        eprintln!("{}: gate distance to target {:.3e}", report.label, t);
    }
    let out = args.common.out.as_deref();
    let w = sink(out)?;
    match resolve_format(args.common.format, out, Format::Json) {
        Format::Json => serde_json::to_writer_pretty(w, &report).map_err(write_failed),
        Format::Csv => write_matrices_csv(w, &[("analytic", analytic.matrix()), ("simulated", &simulated)]),
    }
}

fn sweep_spec(args: &SweepArgs) -> CliResult<SweepSpec> {
    let mut spec = match &args.common.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?;
            serde_json::from_str::<SweepSpec>(&text).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?
        }
        None => SweepSpec::default(),
    };
    if let Some(n) = args.samples {
        spec.samples = n;
    }
    if args.grid.is_some() || args.delta_max.is_some() {
        let half = args.grid.unwrap_or(10);
        let max = args.delta_max.unwrap_or(DEFAULT_DELTA_MAX);
        if !(max >= 0.0) {
            return Err(CliError::usage(format!("--delta-max must be non-negative, got {max}")));
        }
        spec.deltas = delta_grid(-max, max, 2 * half + 1)?;
    }
    if let Some(names) = &args.gates {
        spec.gates = names.iter().map(|n| parse_gate(n.trim()).map(SweepGate::Named)).collect::<CliResult<_>>()?;
    }
    if let Some(etas) = &args.etas {
        spec.etas = etas.clone();
    }
    if let Some(seed) = args.common.seed {
        spec.seed = seed;
    }
    spec.integrator = integrator(spec.integrator, &args.common)?;
    spec.validate()?;
    Ok(spec)
}

pub fn sweep(args: &SweepArgs) -> CliResult<()> {
    let spec = sweep_spec(args)?;
    let result = run_sweep(&spec)?;

    eprintln!("{:<8} {:>5} {:>12} {:>12}", "gate", "eta", "min mean", "mean at 0");
    for g in &spec.gates {
        let label = g.label();
        for &eta in &spec.etas {
            let curve: Vec<_> = result.curve(&label, eta).collect();
            let min = curve.iter().map(|r| r.mean_fidelity).fold(f64::INFINITY, f64::min);
            let centre = curve
                .iter()
                .min_by(|a, b| a.delta.abs().total_cmp(&b.delta.abs()))
                .map_or(f64::NAN, |r| r.mean_fidelity);
            eprintln!("{label:<8} {eta:>5} {min:>12.6} {centre:>12.6}");
        }
    }

    let out = args.common.out.as_deref();
    let w = sink(out)?;
    match resolve_format(args.common.format, out, Format::Csv) {
        Format::Csv => result.write_csv(w)?,
        Format::Json => result.write_json(w)?,
    }
    let failed = result.failures().count();
    if failed > 0 {
        return Err(CliError::Failure(format!("{failed} sweep points failed")));
    }
    Ok(())
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TraceConfig {
    name: Option<String>,
    program: Option<GateProgram>,
    eta: Option<f64>,
    state: Option<String>,
    delta: f64,
    points: Option<usize>,
    integrator: IntegratorConfig,
}

/// `uniformN` or a comma-separated list of real amplitudes.
pub fn parse_state(text: &str, d: usize) -> CliResult<QuditState> {
    let text = text.trim();
    let amps: Vec<f64> = if let Some(n) = text.strip_prefix("uniform") {
        let n: usize = n.parse().map_err(|_| CliError::usage(format!("bad state {text:?}; expected uniformN")))?;
        vec![1.0; n]
    } else {
        text.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.trim().parse::<f64>().map_err(|_| CliError::usage(format!("bad amplitude {s:?} in state"))))
            .collect::<CliResult<_>>()?
    };
    if amps.is_empty() {
        return Err(CliError::usage("initial state is empty"));
    }
    if amps.len() != d {
        return Err(CliError::usage(format!("initial state has {} amplitudes, gate acts on d = {d}", amps.len())));
    }
    Ok(QuditState::from_reals(&amps)?)
}

pub fn trace(args: &TraceArgs) -> CliResult<()> {
    let config: TraceConfig = load_config(&args.common)?;
    let (program, _) = select_program(&args.select, config.name.as_deref(), config.program.as_ref(), config.eta)?;
    let cfg = integrator(config.integrator, &args.common)?;
    let state_text = args
        .state
        .as_deref()
        .or(config.state.as_deref())
        .ok_or_else(|| CliError::usage("give an initial state with --state"))?;
    let psi = parse_state(state_text, program.d)?;
    let points = args.points.or(config.points).unwrap_or(darkpath::evolution::DEFAULT_GRID_POINTS);
    let delta = args.delta.unwrap_or(config.delta);
    let traj = darkpath::robustness::population_trace_on_grid(&program, &psi, delta, &cfg, points)?;
    let last = traj.populations.last().expect("non-empty trajectory");
    eprintln!(
        "{}: final populations computational {:.6}, excited {:.3e}, auxiliary {:.3e}",
        label_of(&program),
        last.computational,
        last.excited,
        last.auxiliary
    );
    let out = args.common.out.as_deref();
    let w = sink(out)?;
    match resolve_format(args.common.format, out, Format::Csv) {
        Format::Csv => traj.write_csv(w)?,
        Format::Json => traj.write_json(w)?,
    }
    Ok(())
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SolveConfig {
    target: Option<MatrixJson>,
    name: Option<String>,
    loops: Option<usize>,
    tol: Option<f64>,
    seed: u64,
    restarts: Option<usize>,
}

pub fn solve(args: &SolveArgs) -> CliResult<()> {
    let config: SolveConfig = load_config(&args.common)?;
    let target_matrix: Matrix = if let Some(p) = &args.target {
        read_json::<MatrixJson>(p)?.to_matrix()?
    } else if let Some(n) = &args.name {
        parse_gate(n)?.target().into_matrix()
    } else if let Some(m) = &config.target {
        m.to_matrix()?
    } else if let Some(n) = &config.name {
        parse_gate(n)?.target().into_matrix()
    } else {
        return Err(CliError::usage("choose a target with --target or --name"));
    };
    if target_matrix.nrows() != target_matrix.ncols() {
        return Err(CliError::usage("target matrix must be square"));
    }
    let target = Unitary::with_tolerance(target_matrix, 1e-8).map_err(|e| CliError::usage(format!("target: {e}")))?;
    let d = target.dim();
    let loops = match args.loops.or(config.loops) {
        Some(n) => n,
        None => min_loops(d)?,
    };
    let tol = args.tol.or(config.tol).unwrap_or(1e-6);
    let seed = args.common.seed.unwrap_or(config.seed);
    let mut search = SearchConfig::default();
    if let Some(r) = args.restarts.or(config.restarts) {
        search.restarts = r;
    }
    if matches!(args.common.format, Some(Format::Csv)) {
        return Err(CliError::usage("solve writes a JSON program; --format csv is not supported"));
    }

    let outcome = find_parameters_with(&target, loops, tol, seed, &search)?;
    eprintln!(
        "distance {:.3e} after {} restarts, {} evaluations ({})",
        outcome.distance,
        outcome.restarts_used,
        outcome.evaluations,
        if outcome.converged { "converged" } else { "not converged" }
    );
    let w = sink(args.common.out.as_deref())?;
    serde_json::to_writer_pretty(w, &outcome).map_err(write_failed)?;
    if !outcome.converged {
        return Err(CliError::Failure(format!(
            "search stopped at distance {:.3e} above tolerance {tol:e}",
            outcome.distance
        )));
    }
    Ok(())
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TwoQuditConfig {
    name: Option<String>,
    program: Option<GateProgram>,
    eta: Option<f64>,
    laser: Option<LaserConfig>,
    terms: HamiltonianTerms,
    stark_shift: Option<Vec<f64>>,
    integrator: IntegratorConfig,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CouplingReport {
    pub k: f64,
    pub omega: MatrixJson,
    pub omega_a: [f64; 2],
    pub single_qudit_drives: usize,
    pub two_qudit_drives: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TwoQuditReport {
    pub label: String,
    pub d: usize,
    pub gate: MatrixJson,
    pub expected: MatrixJson,
    pub max_deviation: f64,
    pub off_block_max: f64,
    pub leakage: f64,
    pub couplings: Option<CouplingReport>,
}

fn read_laser(path: &Path) -> CliResult<LaserConfig> {
    read_json(path)
}

pub fn two_qudit(args: &TwoQuditArgs) -> CliResult<()> {
    let config: TwoQuditConfig = load_config(&args.common)?;
    let (program, _) = select_program(&args.select, config.name.as_deref(), config.program.as_ref(), config.eta)?;
    let cfg = integrator(config.integrator, &args.common)?;
    let laser = match &args.laser {
        Some(p) => Some(read_laser(p)?),
        None => config.laser.clone(),
    };
    let couplings = match &laser {
        Some(l) => {
            let d = l.d()?;
            if d != program.d {
                return Err(CliError::usage(format!("laser config is for d = {d}, program has d = {}", program.d)));
            }
            let c = laser_to_couplings(l)?;
            Some(CouplingReport {
                k: c.k,
                omega: MatrixJson::from_matrix(&c.omega),
                omega_a: [c.omega_a.re, c.omega_a.im],
                single_qudit_drives: single_qudit_drive_count(d),
                two_qudit_drives: l.drive_count(),
            })
        }
        None => None,
    };
    let terms = if args.companion { HamiltonianTerms::Both } else { config.terms };
    let opts = TwoQuditOptions { terms, stark_shift: config.stark_shift.clone() };
    let r = conditional_gate_report(&program, &cfg, &opts)?;
    let report = TwoQuditReport {
        label: label_of(&program),
        d: program.d,
        gate: MatrixJson::from_matrix(&r.gate),
        expected: MatrixJson::from_matrix(&r.expected),
        max_deviation: r.max_deviation,
        off_block_max: r.off_block_max,
        leakage: r.leakage,
        couplings,
    };
    eprintln!(
        "{}: off-block max {:.3e}, leakage {:.3e}, deviation from ideal {:.3e}",
        report.label, report.off_block_max, report.leakage, report.max_deviation
    );
    let out = args.common.out.as_deref();
    let w = sink(out)?;
    match resolve_format(args.common.format, out, Format::Json) {
        Format::Json => serde_json::to_writer_pretty(w, &report).map_err(write_failed),
        Format::Csv => write_matrices_csv(w, &[("gate", &r.gate), ("expected", &r.expected)]),
    }
}
