//! Time-dependent Schrödinger integration for loops and programs, plus the
//! analytic dark paths that serve as its oracle.

use std::io::{Read, Write};

use ndarray::s;
use serde::{Deserialize, Serialize};

use crate::dark_bright::DarkBrightBasis;
use crate::error::{check_dim, Error, Result};
use crate::integrate::{StepControl, Stepper};
use crate::linalg::{self, eye, Matrix, Vector, C64, I};
use crate::pulse::{ControlShape, LoopParams, PulseSchedule, Segment, SegmentHamiltonian, SineSquared};
use crate::qudit::{Block, LevelSpace, QuditState, Unitary};

/// Default number of samples in a [`Trajectory`].
pub const DEFAULT_GRID_POINTS: usize = 400;

/// Integrator tolerances. `max_step` is a fraction of the loop time `τ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-8, abs_tol: 1e-10, max_step: 1.0 / 200.0 }
    }
}

impl IntegratorConfig {
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol), ("max_step", self.max_step)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::usage(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    fn control(&self, tau: f64) -> StepControl {
        StepControl { rel_tol: self.rel_tol, abs_tol: self.abs_tol, max_step: self.max_step * tau }
    }
}

pub(crate) fn reunitarize(u: Matrix, cfg: &IntegratorConfig) -> Unitary {
    let dev = linalg::unitarity_deviation(&u);
    if dev > 10.0 * cfg.rel_tol {
        log::warn!("propagator drifted from unitarity by {dev:e}; projecting back");
        Unitary::unchecked(linalg::polar_unitary(&u))
    } else {
        Unitary::unchecked(u)
    }
}

/// Propagator `U(t1, t0)` of one segment on the full level space.
pub fn propagate(
    schedule: &PulseSchedule,
    basis: &DarkBrightBasis,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<Unitary> {
    cfg.validate()?;
    let (a, b) = schedule.domain();
    let slack = 1e-12 * schedule.loop_params.tau;
    if !(t0 < t1) || t0 < a - slack || t1 > b + slack {
        return Err(Error::usage(format!("need {a} <= t0 < t1 <= {b}, got t0 = {t0}, t1 = {t1}")));
    }
    let ham = SegmentHamiltonian::new(schedule, basis)?;
    let n = ham.dim();
    let mut stepper = Stepper::new(|t| ham.eval(t), t0, eye(n), cfg.control(schedule.loop_params.tau));
    stepper.advance_to(t1)?;
    Ok(reunitarize(stepper.into_state(), cfg))
}

/// Propagator of a full loop (both segments) with Rabi error `delta`.
pub fn loop_propagator(loop_params: &LoopParams, delta: f64, cfg: &IntegratorConfig) -> Result<Unitary> {
    let basis = loop_params.basis()?;
    let mut u = Unitary::identity(LevelSpace::new(loop_params.d())?.dim());
    for segment in [Segment::First, Segment::Second] {
        let schedule = PulseSchedule::new(loop_params.clone(), segment, delta);
        let (a, b) = schedule.domain();
        u = propagate(&schedule, &basis, a, b, cfg)?.then_after(&u)?;
    }
    Ok(u)
}

/// Propagator of loops applied in order (first loop acts first).
pub fn program_propagator(loops: &[LoopParams], delta: f64, cfg: &IntegratorConfig) -> Result<Unitary> {
    let first = loops.first().ok_or_else(|| Error::usage("empty loop list"))?;
    let d = first.d();
    let mut u = Unitary::identity(LevelSpace::new(d)?.dim());
    for l in loops {
        check_dim(d, l.d())?;
        u = loop_propagator(l, delta, cfg)?.then_after(&u)?;
    }
    Ok(u)
}

fn dark_path_with_phase(
    t: f64,
    k: usize,
    loop_params: &LoopParams,
    basis: &DarkBrightBasis,
    phi: f64,
) -> Result<QuditState> {
    let d = loop_params.d();
    check_dim(d, basis.d())?;
    if !(1..d).contains(&k) {
        return Err(Error::usage(format!("dark path index {k} outside 1..={}", d - 1)));
    }
    let tau = loop_params.tau;
    if !(t >= -1e-12 * tau && t <= tau * (1.0 + 1e-12)) {
        return Err(Error::usage(format!("t = {t} outside [0, {tau}]")));
    }
    let space = LevelSpace::new(d)?;
    let c = SineSquared.controls(t.clamp(0.0, tau), tau, loop_params.eta);
    let mut amps = Vector::zeros(space.dim());
    let bright = basis.bright(k);
    let phase = C64::from_polar(1.0, -phi);
    let (bright_weight, excited) =
        if k < d - 1 { (c.u.cos(), I * c.u.sin()) } else { (c.u.cos() * c.v.cos(), -I * c.u.sin()) };
    amps.slice_mut(s![..d]).assign(&bright.mapv(|z| z * phase * bright_weight));
    amps[space.excited(k)] = excited;
    if k == d - 1 {
        amps[space.auxiliary()] = C64::new(-c.u.cos() * c.v.sin(), 0.0);
    }
    Ok(QuditState::from_raw(amps))
}

/// Analytic dark path `|D_k(t)⟩` with the loop's own laser phase `φ_k`.
pub fn dark_path_state(t: f64, k: usize, loop_params: &LoopParams, basis: &DarkBrightBasis) -> Result<QuditState> {
    let phi = *loop_params
        .pulse_phases
        .get(k.wrapping_sub(1))
        .ok_or_else(|| Error::usage(format!("dark path index {k} out of range")))?;
    dark_path_with_phase(t, k, loop_params, basis, phi)
}

/// Dark path followed during `schedule`'s segment, using that segment's phase.
pub fn segment_dark_path(t: f64, k: usize, schedule: &PulseSchedule, basis: &DarkBrightBasis) -> Result<QuditState> {
    let phases = schedule.laser_phases();
    let phi =
        *phases.get(k.wrapping_sub(1)).ok_or_else(|| Error::usage(format!("dark path index {k} out of range")))?;
    dark_path_with_phase(t, k, &schedule.loop_params, basis, phi)
}

/// Populations summed over the computational, excited and auxiliary blocks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockPopulations {
    pub computational: f64,
    pub excited: f64,
    pub auxiliary: f64,
}

impl BlockPopulations {
    pub fn of(space: &LevelSpace, state: &QuditState) -> Self {
        let mut p = BlockPopulations { computational: 0.0, excited: 0.0, auxiliary: 0.0 };
        for (i, z) in state.amplitudes().iter().enumerate() {
            let w = z.norm_sqr();
            match space.block_of(i) {
                Block::Computational => p.computational += w,
                Block::Excited => p.excited += w,
                Block::Auxiliary => p.auxiliary += w,
            }
        }
        p
    }

    pub fn total(&self) -> f64 {
        self.computational + self.excited + self.auxiliary
    }
}

/// Sampled state evolution. Times are in units of `τ`, offset by the loop
/// index for multi-loop programs.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub space: LevelSpace,
    pub times: Vec<f64>,
    pub loop_index: Vec<usize>,
    pub states: Vec<QuditState>,
    pub populations: Vec<BlockPopulations>,
}

impl Trajectory {
    fn new(space: LevelSpace) -> Self {
        Self { space, times: vec![], loop_index: vec![], states: vec![], populations: vec![] }
    }

    fn push(&mut self, time: f64, loop_index: usize, state: QuditState) {
        self.populations.push(BlockPopulations::of(&self.space, &state));
        self.times.push(time);
        self.loop_index.push(loop_index);
        self.states.push(state);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &QuditState {
        self.states.last().expect("trajectory is never empty")
    }

    /// Append `other`, shifting its loop indices and times and dropping its
    /// first sample (which repeats our last one).
    pub fn extend_with(&mut self, other: Trajectory) {
        let offset = self.loop_index.last().map_or(0, |l| l + 1);
        let skip = usize::from(!self.is_empty());
        for ((t, l), s) in other.times.into_iter().zip(other.loop_index).zip(other.states).skip(skip) {
            self.push(t + offset as f64, l + offset, s);
        }
    }

    pub fn rows(&self) -> Vec<TraceRow> {
        self.times
            .iter()
            .zip(&self.loop_index)
            .zip(self.states.iter().zip(&self.populations))
            .map(|((&t, &l), (s, p))| TraceRow {
                t_over_tau: t,
                loop_index: l,
                population_computational: p.computational,
                population_excited: p.excited,
                population_auxiliary: p.auxiliary,
                levels: s.populations(),
            })
            .collect()
    }

    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> =
            ["t_over_tau", "loop", "population_computational", "population_excited", "population_auxiliary"]
                .iter()
                .map(|s| s.to_string())
                .collect();
        h.extend((0..self.space.dim()).map(|i| format!("pop_{}", self.space.label(i))));
        h
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.header())?;
        for row in self.rows() {
            let mut rec = vec![
                row.t_over_tau.to_string(),
                row.loop_index.to_string(),
                row.population_computational.to_string(),
                row.population_excited.to_string(),
                row.population_auxiliary.to_string(),
            ];
            rec.extend(row.levels.iter().map(|x| x.to_string()));
            w.write_record(rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, &self.rows())?;
        Ok(())
    }
}

/// One row of a serialized trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t_over_tau: f64,
    #[serde(rename = "loop")]
    pub loop_index: usize,
    pub population_computational: f64,
    pub population_excited: f64,
    pub population_auxiliary: f64,
    /// Per-level populations in level-space order.
    pub levels: Vec<f64>,
}

/// Read a trajectory CSV written by [`Trajectory::write_csv`].
pub fn read_trace_csv<R: Read>(reader: R) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers()?.clone();
    if header.len() < 5 || &header[0] != "t_over_tau" {
        return Err(Error::usage("not a trajectory CSV (missing t_over_tau column)"));
    }
    let mut rows = vec![];
    for rec in r.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec[i].parse::<f64>().map_err(|e| Error::usage(format!("bad number {:?}: {e}", &rec[i])))
        };
        rows.push(TraceRow {
            t_over_tau: num(0)?,
            loop_index: rec[1].parse().map_err(|e| Error::usage(format!("bad loop index: {e}")))?,
            population_computational: num(2)?,
            population_excited: num(3)?,
            population_auxiliary: num(4)?,
            levels: (5..rec.len()).map(num).collect::<Result<_>>()?,
        });
    }
    Ok(rows)
}

/// Population outside the computational subspace tolerated in an initial
/// state, so that a loop's output can seed the next loop.
pub const LEAK_TOL: f64 = 1e-8;

/// Accept either a `d`-vector of ground amplitudes or a full-space state
/// without excited or auxiliary amplitude.
pub(crate) fn ground_supported(space: &LevelSpace, initial: &QuditState) -> Result<QuditState> {
    if initial.dim() == space.d() {
        return space.embed_ground(initial);
    }
    check_dim(space.dim(), initial.dim())?;
    let leak: f64 = initial.amplitudes().iter().skip(space.d()).map(|z| z.norm_sqr()).sum();
    if leak > LEAK_TOL {
        return Err(Error::usage("initial state must lie in the computational subspace"));
    }
    Ok(initial.clone())
}

/// Evolve a state through one loop, sampling `grid_points` uniform times.
pub fn simulate_state_on_grid(
    initial: &QuditState,
    loop_params: &LoopParams,
    basis: &DarkBrightBasis,
    delta: f64,
    cfg: &IntegratorConfig,
    grid_points: usize,
) -> Result<Trajectory> {
    cfg.validate()?;
    loop_params.validate()?;
    if grid_points < 2 {
        return Err(Error::usage("trajectory grid needs at least 2 points"));
    }
    let space = LevelSpace::new(loop_params.d())?;
    check_dim(space.d(), basis.d())?;
    let psi0 = ground_supported(&space, initial)?;
    let tau = loop_params.tau;
    let first = SegmentHamiltonian::new(&PulseSchedule::new(loop_params.clone(), Segment::First, delta), basis)?;
    let second = SegmentHamiltonian::new(&PulseSchedule::new(loop_params.clone(), Segment::Second, delta), basis)?;

    let column = psi0.amplitudes().clone().into_shape_with_order((space.dim(), 1)).expect("column");
    let mut traj = Trajectory::new(space);
    traj.push(0.0, 0, psi0);

    let as_state = |m: &Matrix| QuditState::from_raw(m.column(0).to_owned());
    let times: Vec<f64> = (1..grid_points).map(|i| tau * i as f64 / (grid_points - 1) as f64).collect();
    let split = times.iter().position(|&t| t > 0.5 * tau).unwrap_or(times.len());

    let mut stepper = Stepper::new(|t| first.eval(t), 0.0, column, cfg.control(tau));
    for &t in &times[..split] {
        stepper.advance_to(t)?;
        traj.push(t / tau, 0, as_state(stepper.state()));
    }
    stepper.advance_to(0.5 * tau)?;
    let mut stepper = stepper.switch(|t| second.eval(t));
    for &t in &times[split..] {
        stepper.advance_to(t)?;
        traj.push(t / tau, 0, as_state(stepper.state()));
    }
    Ok(traj)
}

/// [`simulate_state_on_grid`] with the default 400-point grid.
pub fn simulate_state(
    initial: &QuditState,
    loop_params: &LoopParams,
    basis: &DarkBrightBasis,
    delta: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    simulate_state_on_grid(initial, loop_params, basis, delta, cfg, DEFAULT_GRID_POINTS)
}
