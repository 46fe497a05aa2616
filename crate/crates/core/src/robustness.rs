//! Systematic Rabi-error sweeps: average gate fidelity over random input
//! states, and population traces through multi-loop programs.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{program_propagator, simulate_state_on_grid, IntegratorConfig, Trajectory, DEFAULT_GRID_POINTS};
use crate::pulse::DEFAULT_ETA;
use crate::qudit::{fidelity, random_state_with, LevelSpace, QuditState};
use crate::synthesis::{compose, GateProgram, NamedGate};

pub const DEFAULT_SAMPLES: usize = 500;
pub const DEFAULT_GRID: usize = 21;
pub const DEFAULT_DELTA_MAX: f64 = 0.1;

/// `points` uniformly spaced values on `[lo, hi]`.
pub fn delta_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if points == 0 {
        return Err(Error::usage("delta grid needs at least one point"));
    }
    if !(lo <= hi) {
        return Err(Error::usage(format!("delta range [{lo}, {hi}] is empty")));
    }
    if points == 1 {
        return Ok(vec![0.5 * (lo + hi)]);
    }
    let step = (hi - lo) / (points - 1) as f64;
    Ok((0..points).map(|i| if i + 1 == points { hi } else { lo + step * i as f64 }).collect())
}

/// A gate in a sweep: a named qutrit gate or an explicit program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepGate {
    Named(NamedGate),
    Program(GateProgram),
}

impl SweepGate {
    pub fn label(&self) -> String {
        match self {
            SweepGate::Named(g) => g.name().to_string(),
            SweepGate::Program(p) => p.label.clone().unwrap_or_else(|| "custom".to_string()),
        }
    }

    pub fn program(&self) -> GateProgram {
        match self {
            SweepGate::Named(g) => g.program(),
            SweepGate::Program(p) => p.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub gates: Vec<SweepGate>,
    pub deltas: Vec<f64>,
    pub etas: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub integrator: IntegratorConfig,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            gates: NamedGate::ALL.iter().copied().map(SweepGate::Named).collect(),
            deltas: delta_grid(-DEFAULT_DELTA_MAX, DEFAULT_DELTA_MAX, DEFAULT_GRID).expect("valid default grid"),
            etas: vec![0.0, DEFAULT_ETA],
            samples: DEFAULT_SAMPLES,
            seed: 0,
            integrator: IntegratorConfig::default(),
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.samples < 1 {
            return Err(Error::usage("samples must be at least 1"));
        }
        if self.deltas.is_empty() {
            return Err(Error::usage("delta grid is empty"));
        }
        if self.etas.is_empty() {
            return Err(Error::usage("eta list is empty"));
        }
        if self.gates.is_empty() {
            return Err(Error::usage("no gates to sweep"));
        }
        if self.deltas.iter().chain(&self.etas).any(|x| !x.is_finite()) {
            return Err(Error::usage("delta and eta values must be finite"));
        }
        for g in &self.gates {
            g.program().validate()?;
        }
        self.integrator.validate()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: SweepSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Sample mean and standard error of the fidelity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Mean fidelity of `program` run with Rabi error `delta` and auxiliary
/// coupling `eta`, against the ideal composed gate, over `samples` Haar-random
/// computational states.
///
/// The perturbed propagator is computed once and applied to every sample.
pub fn average_fidelity(
    program: &GateProgram,
    delta: f64,
    eta: f64,
    samples: usize,
    seed: u64,
    cfg: &IntegratorConfig,
) -> Result<FidelityEstimate> {
    if samples < 1 {
        return Err(Error::usage("samples must be at least 1"));
    }
    let program = program.with_eta(eta);
    let ideal = compose(&program)?;
    let actual = program_propagator(&program.loops, delta, cfg)?;
    let space = LevelSpace::new(program.d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(samples);
    for _ in 0..samples {
        let psi = random_state_with(program.d, &mut rng);
        let want = space.embed_ground(&ideal.apply(&psi)?)?;
        let got = actual.apply(&space.embed_ground(&psi)?)?;
        values.push(fidelity(&want, &got)?);
    }
    let n = samples as f64;
    let mean = values.iter().sum::<f64>() / n;
    let stderr = if samples > 1 {
        let var = values.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(FidelityEstimate { mean, stderr, samples })
}

/// Seed for one sweep point, independent of evaluation order.
pub fn point_seed(master: u64, gate: &str, eta: f64, delta: f64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    let mut h = mix(master);
    for b in gate.bytes() {
        h = mix(h ^ u64::from(b));
    }
    h = mix(h ^ eta.to_bits());
    mix(h ^ delta.to_bits())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub gate: String,
    pub eta: f64,
    pub delta: f64,
    pub mean_fidelity: f64,
    pub stderr: f64,
    pub samples: usize,
    /// Set when the point failed; the numbers are then NaN and 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

const CSV_HEADER: [&str; 6] = ["gate", "eta", "delta", "mean_fidelity", "stderr", "samples"];

impl SweepResult {
    pub fn failures(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(|r| r.error.is_some())
    }

    /// Rows for one gate and eta, in grid order.
    pub fn curve<'a>(&'a self, gate: &'a str, eta: f64) -> impl Iterator<Item = &'a SweepRow> + 'a {
        self.rows.iter().filter(move |r| r.gate == gate && r.eta == eta)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(CSV_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.gate.clone(),
                r.eta.to_string(),
                r.delta.to_string(),
                r.mean_fidelity.to_string(),
                r.stderr.to_string(),
                r.samples.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        if r.headers()?.iter().ne(CSV_HEADER) {
            return Err(Error::usage(format!("sweep CSV header must be {}", CSV_HEADER.join(","))));
        }
        let mut rows = Vec::new();
        for rec in r.deserialize() {
            let mut row: SweepRow = rec?;
            if row.mean_fidelity.is_nan() {
                row.error = Some("failed".to_string());
            }
            rows.push(row);
        }
        Ok(Self { rows })
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, self)?;
        Ok(())
    }

    pub fn read_json<R: Read>(reader: R) -> Result<Self> {
        Ok(serde_json::from_reader(reader)?)
    }
}

/// Evaluate every `(gate, eta, delta)` point; rows come out in that order.
///
/// Usage errors abort the sweep; numerical failures are recorded per row.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let points: Vec<(SweepGate, String, f64, f64)> = spec
        .gates
        .iter()
        .flat_map(|g| {
            let label = g.label();
            spec.etas.iter().flat_map(move |&eta| {
                let (g, label) = (g.clone(), label.clone());
                spec.deltas.iter().map(move |&delta| (g.clone(), label.clone(), eta, delta))
            })
        })
        .collect();
    let rows = points
        .par_iter()
        .map(|(gate, label, eta, delta)| {
            let seed = point_seed(spec.seed, label, *eta, *delta);
            let outcome = average_fidelity(&gate.program(), *delta, *eta, spec.samples, seed, &spec.integrator);
            let row = |mean_fidelity, stderr, samples, error| SweepRow {
                gate: label.clone(),
                eta: *eta,
                delta: *delta,
                mean_fidelity,
                stderr,
                samples,
                error,
            };
            match outcome {
                Ok(est) => Ok(row(est.mean, est.stderr, est.samples, None)),
                Err(e) if e.is_usage() => Err(e),
                Err(e) => {
                    log::warn!("sweep point {label} eta={eta} delta={delta} failed: {e}");
                    Ok(row(f64::NAN, f64::NAN, 0, Some(e.to_string())))
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { rows })
}

/// Populations through the whole program with the default grid and no
/// Rabi error.
pub fn population_trace(program: &GateProgram, initial: &QuditState, cfg: &IntegratorConfig) -> Result<Trajectory> {
    population_trace_on_grid(program, initial, 0.0, cfg, DEFAULT_GRID_POINTS)
}

/// Loop-by-loop trajectories concatenated; each loop gets `grid_points`
/// samples and its index in the `loop` column.
pub fn population_trace_on_grid(
    program: &GateProgram,
    initial: &QuditState,
    delta: f64,
    cfg: &IntegratorConfig,
    grid_points: usize,
) -> Result<Trajectory> {
    program.validate()?;
    let mut state = initial.clone();
    let mut full: Option<Trajectory> = None;
    for l in &program.loops {
        let traj = simulate_state_on_grid(&state, l, &l.basis()?, delta, cfg, grid_points)?;
        state = traj.final_state().clone();
        match full.as_mut() {
            None => full = Some(traj),
            Some(f) => f.extend_with(traj),
        }
    }
    Ok(full.expect("program has at least one loop"))
}
