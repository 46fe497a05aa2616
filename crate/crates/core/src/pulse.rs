//! Control functions, reverse-engineered Rabi frequencies and the loop
//! Hamiltonian.
//!
//! One loop runs over `[0, τ]` and is split at `τ/2` into two segments. The
//! second segment uses laser phases `φ_k − γ_k`, which closes each dark path
//! back onto `e^{iγ_k}|b_k⟩`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::dark_bright::{bare_couplings, DarkAngles, DarkBrightBasis};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{dagger, Matrix, C64, ONE, ZERO};
use crate::qudit::LevelSpace;

/// Auxiliary coupling used throughout the qutrit simulations.
pub const DEFAULT_ETA: f64 = 4.0;
pub const DEFAULT_TAU: f64 = 1.0;

/// Relative slack on time-domain checks.
const TIME_SLACK: f64 = 1e-12;

/// Parameters of one multi-pulse loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopParams {
    #[serde(flatten)]
    pub angles: DarkAngles,
    pub pulse_phases: Vec<f64>,
    pub gammas: Vec<f64>,
    pub eta: f64,
    pub tau: f64,
}

impl LoopParams {
    pub fn new(angles: DarkAngles, pulse_phases: Vec<f64>, gammas: Vec<f64>, eta: f64, tau: f64) -> Result<Self> {
        let params = Self { angles, pulse_phases, gammas, eta, tau };
        params.validate()?;
        Ok(params)
    }

    /// Loop with zero laser phases, `η = 4` and `τ = 1`.
    pub fn from_angles(angles: DarkAngles, gammas: Vec<f64>) -> Result<Self> {
        let n = angles.thetas.len();
        Self::new(angles, vec![0.0; n], gammas, DEFAULT_ETA, DEFAULT_TAU)
    }

    /// Qutrit loop in `(χ, ξ, θ, φ, γ_1, γ_2)` order.
    pub fn qutrit(chi: f64, xi: f64, theta: f64, varphi: f64, gamma1: f64, gamma2: f64) -> Self {
        Self {
            angles: DarkAngles::qutrit(chi, xi, theta, varphi),
            pulse_phases: vec![0.0; 2],
            gammas: vec![gamma1, gamma2],
            eta: DEFAULT_ETA,
            tau: DEFAULT_TAU,
        }
    }

    /// Single loop producing `diag(1, e^{iγ_1}, …)`.
    pub fn diagonal(gammas: Vec<f64>) -> Self {
        let n = gammas.len();
        Self {
            angles: DarkAngles::zeros(n + 1),
            pulse_phases: vec![0.0; n],
            gammas,
            eta: DEFAULT_ETA,
            tau: DEFAULT_TAU,
        }
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.angles.validate()?;
        let n = self.angles.thetas.len();
        check_dim(n, self.pulse_phases.len())?;
        check_dim(n, self.gammas.len())?;
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::usage(format!("loop run time must be positive, got {}", self.tau)));
        }
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(Error::usage(format!("eta must be >= 0, got {}", self.eta)));
        }
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.angles.d()
    }

    pub fn basis(&self) -> Result<DarkBrightBasis> {
        DarkBrightBasis::from_angles(&self.angles)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Segment {
    First,
    Second,
}

impl Segment {
    /// Time domain `[start, end]` for a loop of length `tau`.
    pub fn domain(self, tau: f64) -> (f64, f64) {
        match self {
            Segment::First => (0.0, 0.5 * tau),
            Segment::Second => (0.5 * tau, tau),
        }
    }

    pub fn of_time(t: f64, tau: f64) -> Segment {
        if t <= 0.5 * tau {
            Segment::First
        } else {
            Segment::Second
        }
    }
}

/// One loop segment with its systematic Rabi error `δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSchedule {
    pub loop_params: LoopParams,
    pub segment: Segment,
    pub delta: f64,
}

impl PulseSchedule {
    pub fn new(loop_params: LoopParams, segment: Segment, delta: f64) -> Self {
        Self { loop_params, segment, delta }
    }

    pub fn domain(&self) -> (f64, f64) {
        self.segment.domain(self.loop_params.tau)
    }

    /// Laser phases in effect on this segment.
    pub fn laser_phases(&self) -> Vec<f64> {
        let p = &self.loop_params;
        match self.segment {
            Segment::First => p.pulse_phases.clone(),
            Segment::Second => p.pulse_phases.iter().zip(&p.gammas).map(|(phi, g)| phi - g).collect(),
        }
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let (a, b) = self.domain();
        let slack = TIME_SLACK * self.loop_params.tau;
        if t < a - slack || t > b + slack {
            return Err(Error::usage(format!("t = {t} outside segment domain [{a}, {b}]")));
        }
        Ok(())
    }
}

/// Values of the control functions and the derivatives the Rabi formulas need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Controls {
    pub u: f64,
    pub v: f64,
    pub u_dot: f64,
    /// `v̇ cot u`, supplied in a form that stays finite where `u = 0`.
    pub v_dot_cot_u: f64,
}

/// Pair of control functions `u(t), v(t)` with `u(0) = u(τ) = v(0) = v(τ) = 0`.
pub trait ControlShape {
    fn controls(&self, t: f64, tau: f64, eta: f64) -> Controls;
}

/// `u = (π/2) sin²(πt/τ)`, `v = η(1 − cos u)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SineSquared;

impl ControlShape for SineSquared {
    fn controls(&self, t: f64, tau: f64, eta: f64) -> Controls {
        let x = PI * t / tau;
        let u = FRAC_PI_2 * x.sin().powi(2);
        let u_dot = PI * PI / (2.0 * tau) * (2.0 * x).sin();
        let v = eta * (1.0 - u.cos());
        // v̇ = η sin u · u̇, so v̇ cot u = η u̇ cos u
        let v_dot_cot_u = eta * u_dot * u.cos();
        Controls { u, v, u_dot, v_dot_cot_u }
    }
}

fn check_loop_time(t: f64, tau: f64) -> Result<()> {
    let slack = TIME_SLACK * tau;
    if !(t >= -slack && t <= tau + slack) {
        return Err(Error::usage(format!("t = {t} outside [0, {tau}]")));
    }
    Ok(())
}

/// `(u(t), v(t))` of the standard shape.
pub fn u_v(t: f64, tau: f64, eta: f64) -> Result<(f64, f64)> {
    if !(tau > 0.0) {
        return Err(Error::usage("tau must be positive"));
    }
    check_loop_time(t, tau)?;
    let c = SineSquared.controls(t, tau, eta);
    Ok((c.u, c.v))
}

/// Rabi frequencies `Ω_1..Ω_{d-1}` and `Ω_a` at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct RabiFrequencies {
    pub computational: Vec<f64>,
    pub auxiliary: f64,
}

impl RabiFrequencies {
    pub fn max_abs(&self) -> f64 {
        self.computational.iter().fold(self.auxiliary.abs(), |m, x| m.max(x.abs()))
    }
}

/// Reverse-engineered Rabi frequencies for an arbitrary control shape.
pub fn rabi_with(shape: &impl ControlShape, t: f64, loop_params: &LoopParams) -> Result<RabiFrequencies> {
    check_loop_time(t, loop_params.tau)?;
    let d = loop_params.d();
    let c = shape.controls(t, loop_params.tau, loop_params.eta);
    let mut computational = vec![-2.0 * c.u_dot; d - 1];
    computational[d - 2] = 2.0 * (c.v_dot_cot_u * c.v.sin() + c.u_dot * c.v.cos());
    let auxiliary = 2.0 * (c.v_dot_cot_u * c.v.cos() - c.u_dot * c.v.sin());
    Ok(RabiFrequencies { computational, auxiliary })
}

/// Rabi frequencies of the standard `sin²` loop.
pub fn rabi(t: f64, loop_params: &LoopParams) -> Result<RabiFrequencies> {
    rabi_with(&SineSquared, t, loop_params)
}

/// Basis in which the Hamiltonian is assembled. Both give the same operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    DarkBright,
    Bare,
}

/// Time-independent pieces of one segment's Hamiltonian.
///
/// `H(t) = A(t) + A(t)†` with `A(t) = Σ_k Ω_k(t) L_k + Ω_a(t) L_a`, where the
/// `L` operators map excited levels down to ground or auxiliary levels and
/// already carry the laser phase and the `(1+δ)/2` factor.
#[derive(Debug, Clone)]
pub struct SegmentHamiltonian {
    schedule: PulseSchedule,
    lowering: Vec<Matrix>,
    aux_lowering: Matrix,
}

impl SegmentHamiltonian {
    pub fn new(schedule: &PulseSchedule, basis: &DarkBrightBasis) -> Result<Self> {
        let p = &schedule.loop_params;
        p.validate()?;
        let d = p.d();
        check_dim(d, basis.d())?;
        let space = LevelSpace::new(d)?;
        let n = space.dim();
        let scale = 0.5 * (1.0 + schedule.delta);
        let lowering = schedule
            .laser_phases()
            .iter()
            .enumerate()
            .map(|(k, &phi)| {
                let mut m = Matrix::from_elem((n, n), ZERO);
                let e = space.excited(k + 1);
                let coeff = C64::from_polar(scale, -phi);
                for (j, b) in basis.bright(k + 1).iter().enumerate() {
                    m[[space.ground(j + 1), e]] = coeff * b;
                }
                m
            })
            .collect();
        let mut aux_lowering = Matrix::from_elem((n, n), ZERO);
        aux_lowering[[space.auxiliary(), space.excited(d - 1)]] = ONE * scale;
        Ok(Self { schedule: schedule.clone(), lowering, aux_lowering })
    }

    pub fn schedule(&self) -> &PulseSchedule {
        &self.schedule
    }

    pub fn dim(&self) -> usize {
        self.aux_lowering.nrows()
    }

    /// The lowering half `A(t)`.
    pub fn lowering_part(&self, t: f64) -> Matrix {
        let rabi =
            rabi(t.clamp(0.0, self.schedule.loop_params.tau), &self.schedule.loop_params).expect("validated loop");
        let mut a = self.aux_lowering.mapv(|z| z * rabi.auxiliary);
        for (l, omega) in self.lowering.iter().zip(&rabi.computational) {
            a.scaled_add(C64::new(*omega, 0.0), l);
        }
        a
    }

    pub fn eval(&self, t: f64) -> Matrix {
        let a = self.lowering_part(t);
        let h = dagger(&a);
        a + h
    }
}

/// Loop Hamiltonian at time `t`, assembled in the requested frame.
pub fn hamiltonian(t: f64, schedule: &PulseSchedule, basis: &DarkBrightBasis, frame: Frame) -> Result<Matrix> {
    schedule.check_time(t)?;
    match frame {
        Frame::DarkBright => Ok(SegmentHamiltonian::new(schedule, basis)?.eval(t)),
        Frame::Bare => bare_hamiltonian(t, schedule, basis),
    }
}

/// `Σ ω_{k,l}|k⟩⟨e_l| + (Ω_a/2)|a⟩⟨e_{d-1}| + H.c.` from the bare couplings.
fn bare_hamiltonian(t: f64, schedule: &PulseSchedule, basis: &DarkBrightBasis) -> Result<Matrix> {
    let p = &schedule.loop_params;
    p.validate()?;
    let d = p.d();
    check_dim(d, basis.d())?;
    let space = LevelSpace::new(d)?;
    let rabi = rabi(t, p)?;
    let scale = 1.0 + schedule.delta;
    let pulses: Vec<C64> = rabi
        .computational
        .iter()
        .zip(schedule.laser_phases())
        .map(|(omega, phi)| C64::from_polar(omega * scale, -phi))
        .collect();
    let omega = bare_couplings(basis, &pulses)?;
    let n = space.dim();
    let mut a = Matrix::from_elem((n, n), ZERO);
    for k in 1..=d {
        for l in 1..d {
            a[[space.ground(k), space.excited(l)]] = omega[[k - 1, l - 1]];
        }
    }
    a[[space.auxiliary(), space.excited(d - 1)]] = C64::new(0.5 * rabi.auxiliary * scale, 0.0);
    let h = dagger(&a);
    Ok(a + h)
}
