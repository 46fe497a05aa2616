//! One-qudit holonomic gates: single loops, multi-loop programs, the named
//! qutrit gates and a numerical search for loop parameters.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dark_bright::DarkAngles;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, Matrix, C64, ONE, ZERO};
use crate::optimize::{nelder_mead, SimplexOptions};
use crate::pulse::{LoopParams, DEFAULT_ETA, DEFAULT_TAU};
use crate::qudit::{matrix_distance, Unitary};

/// Ordered loops forming one gate. `loops[0]` is applied first, so the gate
/// matrix is `U(loops[n-1]) ⋯ U(loops[0])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateProgram {
    pub d: usize,
    pub loops: Vec<LoopParams>,
    #[serde(default)]
    pub label: Option<String>,
}

impl GateProgram {
    pub fn new(loops: Vec<LoopParams>, label: Option<String>) -> Result<Self> {
        let d = loops.first().ok_or_else(|| Error::usage("gate program needs at least one loop"))?.d();
        let program = Self { d, loops, label };
        program.validate()?;
        Ok(program)
    }

    pub fn validate(&self) -> Result<()> {
        if self.loops.is_empty() {
            return Err(Error::usage("gate program needs at least one loop"));
        }
        if self.d < 2 {
            return Err(Error::usage(format!("qudit dimension must be >= 2, got {}", self.d)));
        }
        for l in &self.loops {
            l.validate()?;
            check_dim(self.d, l.d())?;
        }
        Ok(())
    }

    /// Same program with every loop's auxiliary coupling set to `eta`.
    pub fn with_eta(&self, eta: f64) -> Self {
        let mut p = self.clone();
        for l in &mut p.loops {
            l.eta = eta;
        }
        p
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: GateProgram = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// `|𝒟⟩⟨𝒟| + Σ_k e^{iγ_k}|b_k⟩⟨b_k|` on the computational subspace.
pub fn holonomy_one_loop(loop_params: &LoopParams) -> Result<Unitary> {
    loop_params.validate()?;
    let basis = loop_params.basis()?;
    let mut u = linalg::outer(basis.dark(), basis.dark());
    for (b, g) in basis.brights().iter().zip(&loop_params.gammas) {
        u.scaled_add(C64::from_polar(1.0, *g), &linalg::outer(b, b));
    }
    Ok(Unitary::unchecked(u))
}

/// Gate realized by a program.
pub fn compose(program: &GateProgram) -> Result<Unitary> {
    program.validate()?;
    let mut u = Unitary::identity(program.d);
    for l in &program.loops {
        u = holonomy_one_loop(l)?.then_after(&u)?;
    }
    Ok(u)
}

/// Smallest `n` with `3(d−1)n ≥ d² − 1`.
pub fn min_loops(d: usize) -> Result<usize> {
    if d < 2 {
        return Err(Error::usage(format!("qudit dimension must be >= 2, got {d}")));
    }
    let per_loop = 3 * (d - 1);
    Ok((d * d - 1).div_ceil(per_loop))
}

/// The qutrit gate set with known loop programs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NamedGate {
    X3,
    Z3,
    T3,
    H3,
}

impl NamedGate {
    pub const ALL: [NamedGate; 4] = [NamedGate::T3, NamedGate::X3, NamedGate::H3, NamedGate::Z3];

    pub fn name(self) -> &'static str {
        match self {
            NamedGate::X3 => "X3",
            NamedGate::Z3 => "Z3",
            NamedGate::T3 => "T3",
            NamedGate::H3 => "H3",
        }
    }

    /// Exact target matrix.
    pub fn target(self) -> Unitary {
        let w = |k: f64| C64::from_polar(1.0, 2.0 * PI * k / 3.0);
        let m = match self {
            NamedGate::X3 => ndarray::array![[ZERO, ZERO, ONE], [ONE, ZERO, ZERO], [ZERO, ONE, ZERO]],
            NamedGate::Z3 => diagonal(&[ONE, w(1.0), w(2.0)]),
            NamedGate::T3 => {
                diagonal(&[ONE, C64::from_polar(1.0, 2.0 * PI / 9.0), C64::from_polar(1.0, -2.0 * PI / 9.0)])
            }
            NamedGate::H3 => {
                let s = 1.0 / 3f64.sqrt();
                ndarray::array![[ONE, ONE, ONE], [ONE, w(1.0), w(2.0)], [ONE, w(2.0), w(1.0)]].mapv(|z| z * s)
            }
        };
        Unitary::unchecked(m)
    }

    /// Program realizing the gate. H3 uses refined parameters; see
    /// [`NamedGate::published_program`] for the rounded ones.
    pub fn program(self) -> GateProgram {
        let loops = match self {
            NamedGate::X3 => vec![
                LoopParams::qutrit(0.0, 0.0, PI / 4.0, PI / 2.0, 0.0, PI),
                LoopParams::qutrit(0.0, 0.0, PI / 2.0, PI / 4.0, 0.0, PI),
            ],
            NamedGate::Z3 => vec![LoopParams::qutrit(0.0, 0.0, 0.0, 0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0)],
            NamedGate::T3 => vec![LoopParams::qutrit(0.0, 0.0, 0.0, 0.0, 2.0 * PI / 9.0, -2.0 * PI / 9.0)],
            NamedGate::H3 => {
                H3_REFINED.iter().map(|p| LoopParams::qutrit(p[0], p[1], p[2], p[3], p[4], p[5])).collect()
            }
        };
        GateProgram { d: 3, loops, label: Some(self.name().to_string()) }
    }

    /// Program with parameters as printed to two or three decimals. Only H3
    /// differs from [`NamedGate::program`].
    pub fn published_program(self) -> GateProgram {
        match self {
            NamedGate::H3 => GateProgram {
                d: 3,
                loops: vec![
                    LoopParams::qutrit(6.41e-4, 6.56e-4, 0.48, 0.79, 1.58, 1.56),
                    LoopParams::qutrit(9.81e-3, 0.00, 1.187, 2.15, 0.00, 1.57),
                ],
                label: Some("H3-published".to_string()),
            },
            other => other.program(),
        }
    }
}

/// H3 loops in `(χ, ξ, θ, φ, γ_1, γ_2)` order, refined from the published
/// values to gate distance below 1e-12.
#[allow(clippy::excessive_precision)]
const H3_REFINED: [[f64; 6]; 2] = [
    [
        -1.76965971840260389e-2,
        4.19996172996516190e-2,
        4.57524036226777564e-1,
        7.50818519346988844e-1,
        1.66505410891676253e0,
        1.57982691101571149e0,
    ],
    [
        7.85140158903105817e-2,
        2.84387931782929329e-2,
        1.17278591946344246e0,
        2.15800690317006261e0,
        7.24950399305972909e-2,
        1.57666678135184779e0,
    ],
];

impl fmt::Display for NamedGate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NamedGate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "X3" => Ok(NamedGate::X3),
            "Z3" => Ok(NamedGate::Z3),
            "T3" => Ok(NamedGate::T3),
            "H3" => Ok(NamedGate::H3),
            _ => Err(Error::usage(format!("unknown gate {s:?}; valid names are X3, Z3, T3, H3"))),
        }
    }
}

/// Target matrix and program for a named gate.
pub fn named_gate(name: &str) -> Result<(Unitary, GateProgram)> {
    let gate: NamedGate = name.parse()?;
    Ok((gate.target(), gate.program()))
}

fn diagonal(entries: &[C64]) -> Matrix {
    let n = entries.len();
    let mut m = Matrix::from_elem((n, n), ZERO);
    for (i, z) in entries.iter().enumerate() {
        m[[i, i]] = *z;
    }
    m
}

/// Budget and stopping rule for [`find_parameters`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Independent random starts.
    pub restarts: usize,
    /// Simplex re-initializations around the incumbent within one start.
    pub polish_rounds: usize,
    pub evals_per_round: usize,
    /// Loops are tagged with these pulse settings; they do not affect the gate.
    pub eta: f64,
    pub tau: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { restarts: 50, polish_rounds: 6, evals_per_round: 6_000, eta: DEFAULT_ETA, tau: DEFAULT_TAU }
    }
}

/// Outcome of a parameter search. `converged` is false when the budget ran
/// out before reaching the tolerance; `program` is then the best found.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub program: GateProgram,
    pub distance: f64,
    pub converged: bool,
    pub restarts_used: usize,
    pub evaluations: usize,
}

const DIAGONAL_TOL: f64 = 1e-12;

fn unpack(x: &[f64], d: usize, cfg: &SearchConfig) -> Vec<LoopParams> {
    let m = d - 1;
    x.chunks(3 * m)
        .map(|c| LoopParams {
            angles: DarkAngles { thetas: c[..m].to_vec(), phis: c[m..2 * m].to_vec() },
            pulse_phases: vec![0.0; m],
            gammas: c[2 * m..].to_vec(),
            eta: cfg.eta,
            tau: cfg.tau,
        })
        .collect()
}

fn pack(loops: &[LoopParams]) -> Vec<f64> {
    loops.iter().flat_map(|l| l.angles.thetas.iter().chain(&l.angles.phis).chain(&l.gammas).copied()).collect()
}

fn program_distance(loops: Vec<LoopParams>, d: usize, target: &Matrix) -> f64 {
    let program = GateProgram { d, loops, label: None };
    match compose(&program) {
        Ok(u) => matrix_distance(u.matrix(), target).unwrap_or(f64::INFINITY),
        Err(_) => f64::INFINITY,
    }
}

fn check_target(target: &Unitary) -> Result<usize> {
    let d = target.dim();
    if d < 2 {
        return Err(Error::usage("target must be at least 2x2"));
    }
    if target.unitarity_deviation() > 1e-8 {
        return Err(Error::usage("target is not unitary"));
    }
    Ok(d)
}

/// Closed-form single loop for a diagonal target, if it is diagonal.
fn diagonal_program(target: &Unitary, n_loops: usize, cfg: &SearchConfig) -> Option<GateProgram> {
    let m = target.matrix();
    let d = m.nrows();
    let off_diagonal = m.indexed_iter().filter(|((i, j), _)| i != j).fold(0.0f64, |a, (_, z)| a.max(z.norm()));
    if off_diagonal > DIAGONAL_TOL {
        return None;
    }
    let reference = m[[0, 0]];
    let gammas: Vec<f64> = (1..d).map(|k| (m[[k, k]] / reference).arg()).collect();
    let mut loops = vec![LoopParams { eta: cfg.eta, tau: cfg.tau, ..LoopParams::diagonal(gammas) }];
    for _ in 1..n_loops.max(1) {
        loops.push(LoopParams { eta: cfg.eta, tau: cfg.tau, ..LoopParams::diagonal(vec![0.0; d - 1]) });
    }
    Some(GateProgram { d, loops, label: None })
}

struct StartResult {
    x: Vec<f64>,
    f: f64,
    evals: usize,
}

fn local_search(x0: Vec<f64>, d: usize, target: &Matrix, tol: f64, cfg: &SearchConfig) -> StartResult {
    let objective = |x: &[f64]| program_distance(unpack(x, d, cfg), d, target);
    let mut x = x0;
    let mut f = f64::INFINITY;
    let mut evals = 0;
    let mut step = 0.6;
    for _ in 0..cfg.polish_rounds.max(1) {
        let opts = SimplexOptions { step, f_tol: 1e-16, target: tol * 0.01, max_evals: cfg.evals_per_round };
        let r = nelder_mead(objective, &x, &opts);
        evals += r.evals;
        let improved = r.f < f;
        if improved {
            x = r.x;
            f = r.f;
        }
        if f < tol * 0.01 {
            break;
        }
        step = if improved { (f.sqrt() * 4.0).clamp(1e-4, 0.6) } else { step * 0.5 };
    }
    StartResult { x, f, evals }
}

/// Search for `n_loops` loop parameters whose composed gate matches `target`
/// up to global phase. Diagonal targets are solved in closed form.
pub fn find_parameters(target: &Unitary, n_loops: usize, tol: f64, seed: u64) -> Result<SearchOutcome> {
    find_parameters_with(target, n_loops, tol, seed, &SearchConfig::default())
}

pub fn find_parameters_with(
    target: &Unitary,
    n_loops: usize,
    tol: f64,
    seed: u64,
    cfg: &SearchConfig,
) -> Result<SearchOutcome> {
    let d = check_target(target)?;
    if n_loops < 1 {
        return Err(Error::usage("need at least one loop"));
    }
    if !(tol > 0.0) {
        return Err(Error::usage("tolerance must be positive"));
    }
    if let Some(program) = diagonal_program(target, n_loops, cfg) {
        let distance = gate_distance_of(&program, target)?;
        return Ok(SearchOutcome { converged: distance < tol, program, distance, restarts_used: 0, evaluations: 0 });
    }

    let dim = 3 * (d - 1) * n_loops;
    let starts: Vec<Vec<f64>> = {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..cfg.restarts.max(1)).map(|_| (0..dim).map(|_| rng.random_range(0.0..2.0 * PI)).collect()).collect()
    };

    let batch = rayon::current_num_threads().max(1);
    let mut best: Option<StartResult> = None;
    let mut evaluations = 0;
    let mut restarts_used = 0;
    for chunk in starts.chunks(batch) {
        let results: Vec<StartResult> =
            chunk.par_iter().map(|x0| local_search(x0.clone(), d, target.matrix(), tol, cfg)).collect();
        // ordered reduction keeps the answer independent of the thread count
        for r in results {
            restarts_used += 1;
            evaluations += r.evals;
            let done = r.f < tol;
            if best.as_ref().is_none_or(|b| r.f < b.f) {
                best = Some(r);
            }
            if done {
                break;
            }
        }
        if best.as_ref().is_some_and(|b| b.f < tol) {
            break;
        }
    }
    let best = best.expect("at least one restart");
    let program = GateProgram { d, loops: unpack(&best.x, d, cfg), label: None };
    let distance = gate_distance_of(&program, target)?;
    Ok(SearchOutcome { converged: distance < tol, program, distance, restarts_used, evaluations })
}

/// Local refinement of an existing program towards `target`.
pub fn refine_program(program: &GateProgram, target: &Unitary, tol: f64) -> Result<SearchOutcome> {
    program.validate()?;
    let d = check_target(target)?;
    check_dim(d, program.d)?;
    let first = &program.loops[0];
    let cfg = SearchConfig { eta: first.eta, tau: first.tau, ..SearchConfig::default() };
    let r = local_search(pack(&program.loops), d, target.matrix(), tol, &SearchConfig { ..cfg });
    let refined = GateProgram { d, loops: unpack(&r.x, d, &cfg), label: program.label.clone() };
    let distance = gate_distance_of(&refined, target)?;
    Ok(SearchOutcome { converged: distance < tol, program: refined, distance, restarts_used: 1, evaluations: r.evals })
}

fn gate_distance_of(program: &GateProgram, target: &Unitary) -> Result<f64> {
    matrix_distance(compose(program)?.matrix(), target.matrix())
}
