//! Conditional two-qudit holonomic gate from the effective control–target
//! Hamiltonian `|d⟩⟨e_{d-1}| ⊗ H^{(d)} + H.c.`, and the map from laser
//! parameters to effective couplings.
//!
//! The control ion keeps only `|1⟩..|d⟩` and `|e_{d-1}⟩`; nothing else on it is
//! touched by the effective Hamiltonian.

use ndarray::s;
use serde::{Deserialize, Serialize};

use crate::dark_bright::DarkBrightBasis;
use crate::error::{check_dim, Error, Result};
use crate::evolution::{reunitarize, IntegratorConfig};
use crate::integrate::{StepControl, Stepper};
use crate::linalg::{self, dagger, eye, kron, Matrix, C64, ONE, ZERO};
use crate::pulse::{PulseSchedule, Segment, SegmentHamiltonian};
use crate::qudit::{LevelSpace, Unitary};
use crate::synthesis::{compose, GateProgram};

/// Lamb-Dicke parameters above this trigger a warning.
pub const LAMB_DICKE_WARN: f64 = 0.3;

/// Control `(d+1 levels) ⊗ target (2d levels)` layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TwoQuditSpace {
    target: LevelSpace,
}

impl TwoQuditSpace {
    pub fn new(d: usize) -> Result<Self> {
        Ok(Self { target: LevelSpace::new(d)? })
    }

    pub fn d(&self) -> usize {
        self.target.d()
    }

    pub fn target(&self) -> &LevelSpace {
        &self.target
    }

    pub fn control_dim(&self) -> usize {
        self.d() + 1
    }

    /// Control index of `|e_{d-1}⟩`.
    pub fn control_excited(&self) -> usize {
        self.d()
    }

    pub fn dim(&self) -> usize {
        self.control_dim() * self.target.dim()
    }

    /// Composite index of `|control⟩ ⊗ |target⟩` (0-based level indices).
    pub fn index(&self, control: usize, target: usize) -> usize {
        control * self.target.dim() + target
    }

    /// Composite indices of `|k l⟩`, `k, l = 1..d`, in row-major `(k, l)` order.
    pub fn computational_indices(&self) -> Vec<usize> {
        let d = self.d();
        (0..d).flat_map(|k| (0..d).map(move |l| (k, l))).map(|(k, l)| self.index(k, l)).collect()
    }

    /// `|d⟩⟨e_{d-1}|` on the control.
    fn control_raising(&self) -> Matrix {
        let mut p = Matrix::from_elem((self.control_dim(), self.control_dim()), ZERO);
        p[[self.d() - 1, self.control_excited()]] = ONE;
        p
    }

    /// Rows and columns of `m` at the computational indices.
    pub fn computational_block(&self, m: &Matrix) -> Matrix {
        let idx = self.computational_indices();
        let n = idx.len();
        let mut out = Matrix::zeros((n, n));
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                out[[a, b]] = m[[i, j]];
            }
        }
        out
    }
}

/// Time-independent pieces of the two-qudit Hamiltonian for one segment.
struct CompositeHamiltonian {
    target: SegmentHamiltonian,
    raising: Matrix,
    lowering: Matrix,
    terms: HamiltonianTerms,
    stark: Option<Matrix>,
}

impl CompositeHamiltonian {
    fn new(
        space: &TwoQuditSpace,
        schedule: &PulseSchedule,
        basis: &DarkBrightBasis,
        opts: &TwoQuditOptions,
    ) -> Result<Self> {
        check_dim(space.d(), schedule.loop_params.d())?;
        let raising = space.control_raising();
        let lowering = dagger(&raising);
        let stark = match &opts.stark_shift {
            Some(diag) => {
                check_dim(space.dim(), diag.len())?;
                let mut m = Matrix::from_elem((space.dim(), space.dim()), ZERO);
                for (i, x) in diag.iter().enumerate() {
                    m[[i, i]] = C64::new(*x, 0.0);
                }
                Some(m)
            }
            None => None,
        };
        Ok(Self { target: SegmentHamiltonian::new(schedule, basis)?, raising, lowering, terms: opts.terms, stark })
    }

    fn effective(&self, t: f64) -> Matrix {
        let h = self.target.eval(t);
        kron(&(&self.raising + &self.lowering), &h)
    }

    fn companion(&self, t: f64) -> Matrix {
        let a = self.target.lowering_part(t);
        let ad = dagger(&a);
        -(kron(&self.raising, &ad) + kron(&self.lowering, &a))
    }

    fn eval(&self, t: f64) -> Matrix {
        let mut h = match self.terms {
            HamiltonianTerms::Effective => self.effective(t),
            HamiltonianTerms::Companion => self.companion(t),
            HamiltonianTerms::Both => self.effective(t) + self.companion(t),
        };
        if let Some(s) = &self.stark {
            h += s;
        }
        h
    }
}

/// Which parts of the large-detuning expansion drive the evolution.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HamiltonianTerms {
    /// `𝓗_eff` alone.
    #[default]
    Effective,
    /// The companion term `𝓗̄_eff` alone.
    Companion,
    /// `𝓗_eff + 𝓗̄_eff`.
    Both,
}

/// Options for two-qudit simulations.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TwoQuditOptions {
    #[serde(default)]
    pub terms: HamiltonianTerms,
    /// Residual Stark shifts as a diagonal on the composite space; `None`
    /// means fully compensated.
    #[serde(default)]
    pub stark_shift: Option<Vec<f64>>,
}

/// `𝓗_eff = |d⟩⟨e_{d-1}| ⊗ H^{(d)}(t) + H.c.`
pub fn effective_hamiltonian(t: f64, schedule: &PulseSchedule, basis: &DarkBrightBasis) -> Result<Matrix> {
    let space = TwoQuditSpace::new(schedule.loop_params.d())?;
    check_dim(space.d(), basis.d())?;
    let h = crate::pulse::hamiltonian(t, schedule, basis, crate::pulse::Frame::DarkBright)?;
    let p = space.control_raising();
    Ok(kron(&(&p + &dagger(&p)), &h))
}

/// `𝓗̄_eff = −|d⟩⟨e_{d-1}| ⊗ (Σ ω*_{k,l}|e_l⟩⟨k| + (Ω_a*/2)|e_{d-1}⟩⟨a|) + H.c.`
pub fn bar_hamiltonian(t: f64, schedule: &PulseSchedule, basis: &DarkBrightBasis) -> Result<Matrix> {
    let space = TwoQuditSpace::new(schedule.loop_params.d())?;
    check_dim(space.d(), basis.d())?;
    // validates t against the segment
    crate::pulse::hamiltonian(t, schedule, basis, crate::pulse::Frame::DarkBright)?;
    let ham = CompositeHamiltonian::new(&space, schedule, basis, &TwoQuditOptions::default())?;
    Ok(ham.companion(t))
}

/// Full composite propagator of a program under the effective Hamiltonian.
pub fn conditional_propagator(
    program: &GateProgram,
    delta: f64,
    cfg: &IntegratorConfig,
    opts: &TwoQuditOptions,
) -> Result<Unitary> {
    program.validate()?;
    cfg.validate()?;
    let space = TwoQuditSpace::new(program.d)?;
    let mut u = eye(space.dim());
    for l in &program.loops {
        let basis = l.basis()?;
        let control = StepControl { rel_tol: cfg.rel_tol, abs_tol: cfg.abs_tol, max_step: cfg.max_step * l.tau };
        for segment in [Segment::First, Segment::Second] {
            let schedule = PulseSchedule::new(l.clone(), segment, delta);
            let ham = CompositeHamiltonian::new(&space, &schedule, &basis, opts)?;
            let (a, b) = schedule.domain();
            let mut stepper = Stepper::new(|t| ham.eval(t), a, u, control);
            stepper.advance_to(b)?;
            u = stepper.into_state();
        }
    }
    Ok(reunitarize(u, cfg))
}

/// `(1 − |d⟩⟨d|) ⊗ 1 + |d⟩⟨d| ⊗ U` on the `d²`-dimensional computational space.
pub fn ideal_conditional(target_gate: &Unitary) -> Matrix {
    let d = target_gate.dim();
    let mut m = eye(d * d);
    m.slice_mut(s![(d - 1) * d.., (d - 1) * d..]).assign(target_gate.matrix());
    m
}

/// Complex matrix as JSON: `{"rows", "cols", "data"}` with `data` row-major
/// and each entry an `[re, im]` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Vec<[f64; 2]>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &Matrix) -> Self {
        let data = m.outer_iter().map(|row| row.iter().map(|z| [z.re, z.im]).collect()).collect();
        Self { rows: m.nrows(), cols: m.ncols(), data }
    }

    pub fn to_matrix(&self) -> Result<Matrix> {
        check_dim(self.rows, self.data.len())?;
        let mut m = Matrix::zeros((self.rows, self.cols));
        for (i, row) in self.data.iter().enumerate() {
            check_dim(self.cols, row.len())?;
            for (j, [re, im]) in row.iter().enumerate() {
                m[[i, j]] = C64::new(*re, *im);
            }
        }
        Ok(m)
    }
}

/// Simulated conditional gate with its structural diagnostics.
#[derive(Debug, Clone)]
pub struct ConditionalGate {
    /// Computational block of the simulated propagator.
    pub gate: Matrix,
    /// Analytic expectation built from the composed one-qudit gate.
    pub expected: Matrix,
    /// max |gate − expected|
    pub max_deviation: f64,
    /// Largest element coupling control ≠ d to control = d sectors.
    pub off_block_max: f64,
    /// `1 − min_j Σ_i |gate_ij|²`, population lost from the computational space.
    pub leakage: f64,
}

/// Integrate `𝓗_eff` over the program and return its computational block.
pub fn conditional_gate(program: &GateProgram, cfg: &IntegratorConfig) -> Result<Unitary> {
    let report = conditional_gate_report(program, cfg, &TwoQuditOptions::default())?;
    Unitary::with_tolerance(report.gate, 1e-6)
}

pub fn conditional_gate_report(
    program: &GateProgram,
    cfg: &IntegratorConfig,
    opts: &TwoQuditOptions,
) -> Result<ConditionalGate> {
    let space = TwoQuditSpace::new(program.d)?;
    let full = conditional_propagator(program, 0.0, cfg, opts)?;
    let gate = space.computational_block(full.matrix());
    let expected = ideal_conditional(&compose(program)?);
    let d = program.d;
    let split = (d - 1) * d;
    let mut off_block_max = 0.0f64;
    for i in 0..d * d {
        for j in 0..d * d {
            if (i < split) != (j < split) {
                off_block_max = off_block_max.max(gate[[i, j]].norm());
            }
        }
    }
    let leakage =
        (0..d * d).map(|j| 1.0 - gate.column(j).iter().map(|z| z.norm_sqr()).sum::<f64>()).fold(0.0f64, f64::max);
    Ok(ConditionalGate {
        max_deviation: linalg::max_abs_diff(&gate, &expected),
        gate,
        expected,
        off_block_max,
        leakage,
    })
}

/// Physical drive parameters of the two-color (Sørensen–Mølmer type) setup.
///
/// Amplitudes are magnitudes `|ω_j|`; phases are listed separately as
/// `φ_0` (control) followed by `φ_1..φ_N` (target), plus `φ_a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaserConfig {
    pub omega0: f64,
    /// Target drives `ω_1..ω_N` in transition order.
    pub omegas: Vec<f64>,
    pub omega_a: f64,
    /// `φ_0..φ_N`; the control drive's phase comes first.
    pub phases: Vec<f64>,
    pub phase_a: f64,
    #[serde(rename = "eta_L")]
    pub eta_l: f64,
    pub nu: f64,
    #[serde(rename = "Delta")]
    pub detuning: f64,
}

/// Number of target transitions `N = (d² + d)/2 − 1`.
pub fn target_transition_count(d: usize) -> usize {
    (d * d + d) / 2 - 1
}

/// Drives needed for one-qudit gates: `ω_1..ω_N` and `ω_a`.
pub fn single_qudit_drive_count(d: usize) -> usize {
    target_transition_count(d) + 1
}

impl LaserConfig {
    /// Qudit dimension implied by the number of target drives.
    pub fn d(&self) -> Result<usize> {
        let n = self.omegas.len();
        (2..=64)
            .find(|&d| target_transition_count(d) == n)
            .ok_or_else(|| Error::usage(format!("{n} target drives does not match (d²+d)/2 − 1 for any d")))
    }

    /// Distinct laser drives for the conditional gate, control drive included.
    pub fn drive_count(&self) -> usize {
        self.omegas.len() + 2
    }

    pub fn validate(&self) -> Result<usize> {
        let d = self.d()?;
        if self.phases.len() != self.omegas.len() + 1 {
            return Err(Error::usage(format!(
                "phases needs {} entries (control drive first), got {}",
                self.omegas.len() + 1,
                self.phases.len()
            )));
        }
        if !(self.eta_l > 0.0) {
            return Err(Error::usage(format!("Lamb-Dicke parameter must be positive, got {}", self.eta_l)));
        }
        if self.eta_l >= 1.0 {
            return Err(Error::usage(format!("Lamb-Dicke parameter {} is outside the regime η_L ≪ 1", self.eta_l)));
        }
        if self.eta_l > LAMB_DICKE_WARN {
            log::warn!("Lamb-Dicke parameter {} is large; the effective couplings may be inaccurate", self.eta_l);
        }
        let amps = std::iter::once(self.omega0).chain(self.omegas.iter().copied()).chain([self.omega_a]);
        if amps.into_iter().any(|a| !(a >= 0.0)) {
            return Err(Error::usage("drive amplitudes must be non-negative magnitudes"));
        }
        Ok(d)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: LaserConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Effective couplings produced by a laser configuration.
#[derive(Debug, Clone)]
pub struct LaserCouplings {
    /// `k = η_L² ν / (Δ² − ν²)`
    pub k: f64,
    /// `ω_{k,l}` as a `d × (d-1)` matrix.
    pub omega: Matrix,
    pub omega_a: C64,
}

/// Map drive amplitudes and phases to `ω_{k,l}` and `Ω_a`.
///
/// Target drives are enumerated excited level by excited level, ground levels
/// in increasing order within each: `|1⟩⟨e_1|, |2⟩⟨e_1|, |1⟩⟨e_2|, …, |d⟩⟨e_{d-1}|`.
pub fn laser_to_couplings(cfg: &LaserConfig) -> Result<LaserCouplings> {
    let d = cfg.validate()?;
    let denom = cfg.detuning * cfg.detuning - cfg.nu * cfg.nu;
    if denom == 0.0 {
        return Err(Error::Numerical(format!("detuning Δ = {} is resonant with ν = {}", cfg.detuning, cfg.nu)));
    }
    let k = cfg.eta_l * cfg.eta_l * cfg.nu / denom;
    let phi0 = cfg.phases[0];
    let mut omega = Matrix::from_elem((d, d - 1), ZERO);
    let mut j = 0;
    for l in 0..d - 1 {
        for g in 0..(l + 2).min(d) {
            omega[[g, l]] = C64::from_polar(k * cfg.omega0 * cfg.omegas[j], cfg.phases[j + 1] - phi0);
            j += 1;
        }
    }
    debug_assert_eq!(j, cfg.omegas.len());
    let omega_a = C64::from_polar(2.0 * k * cfg.omega0 * cfg.omega_a, cfg.phase_a - phi0);
    Ok(LaserCouplings { k, omega, omega_a })
}
