//! Adaptive Dormand–Prince 5(4) stepper for `Ẏ = −i H(t) Y` with complex
//! matrix state.

use crate::error::{Error, Result};
use crate::linalg::{Matrix, C64};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth-order minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;
const MAX_STEPS: usize = 2_000_000;

/// Tolerances for one integration.
#[derive(Debug, Clone, Copy)]
pub(crate) struct StepControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
}

/// Integrates `Ẏ = −i H(t) Y` forward in time, keeping the step size between
/// calls to [`Stepper::advance_to`].
pub(crate) struct Stepper<F: Fn(f64) -> Matrix> {
    hamiltonian: F,
    control: StepControl,
    t: f64,
    y: Matrix,
    h: f64,
    /// derivative at the current point (first-same-as-last)
    k1: Matrix,
    pub stats: StepStats,
}

fn rhs(h: &Matrix, y: &Matrix) -> Matrix {
    h.dot(y).mapv(|z| C64::new(z.im, -z.re))
}

fn combo(y: &Matrix, h: f64, terms: &[(f64, &Matrix)]) -> Matrix {
    let mut out = y.clone();
    for (w, k) in terms {
        if *w != 0.0 {
            out.scaled_add(C64::new(h * w, 0.0), k);
        }
    }
    out
}

impl<F: Fn(f64) -> Matrix> Stepper<F> {
    pub fn new(hamiltonian: F, t0: f64, y0: Matrix, control: StepControl) -> Self {
        let k1 = rhs(&hamiltonian(t0), &y0);
        let h = control.max_step * 0.1;
        Self { hamiltonian, control, t: t0, y: y0, h, k1, stats: StepStats::default() }
    }

    pub fn state(&self) -> &Matrix {
        &self.y
    }

    pub fn into_state(self) -> Matrix {
        self.y
    }

    fn error_norm(&self, y_new: &Matrix, err: &Matrix) -> f64 {
        let c = &self.control;
        let mut acc = 0.0;
        for ((e, a), b) in err.iter().zip(self.y.iter()).zip(y_new.iter()) {
            let scale = c.abs_tol + c.rel_tol * a.norm().max(b.norm());
            acc += (e.norm() / scale).powi(2);
        }
        (acc / err.len() as f64).sqrt()
    }

    /// Advance exactly to `t_end` (no-op when already there).
    pub fn advance_to(&mut self, t_end: f64) -> Result<()> {
        let span = (t_end - self.t).abs().max(self.t.abs()).max(1.0);
        let h_min = 1e-14 * span;
        while self.t < t_end {
            if self.stats.accepted + self.stats.rejected > MAX_STEPS {
                return Err(Error::Integrator { t: self.t, reason: "step budget exhausted".into() });
            }
            let remaining = t_end - self.t;
            let mut h = self.h.min(self.control.max_step);
            let last = h >= remaining;
            if last {
                h = remaining;
            }
            let (t, y) = (self.t, &self.y);
            let f = &self.hamiltonian;
            let k1 = &self.k1;
            let k2 = rhs(&f(t + C2 * h), &combo(y, h, &[(A21, k1)]));
            let k3 = rhs(&f(t + C3 * h), &combo(y, h, &[(A31, k1), (A32, &k2)]));
            let k4 = rhs(&f(t + C4 * h), &combo(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
            let k5 = rhs(&f(t + C5 * h), &combo(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
            let t_new = if last { t_end } else { t + h };
            let k6 = rhs(&f(t_new), &combo(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
            let y_new = combo(y, h, &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
            let k7 = rhs(&f(t_new), &y_new);
            let err =
                combo(&Matrix::zeros(y.dim()), h, &[(E1, k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)]);
            let e = self.error_norm(&y_new, &err);
            if !e.is_finite() {
                return Err(Error::Integrator { t, reason: "non-finite error estimate".into() });
            }
            let factor = if e == 0.0 { MAX_FACTOR } else { (SAFETY * e.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR) };
            if e <= 1.0 {
                self.t = t_new;
                self.y = y_new;
                self.k1 = k7;
                self.stats.accepted += 1;
                // a truncated final step says nothing about the natural step size
                if !last {
                    self.h = h * factor;
                }
            } else {
                self.stats.rejected += 1;
                self.h = h * factor.min(1.0);
                if self.h < h_min {
                    return Err(Error::Integrator { t, reason: format!("step size underflow (h = {:e})", self.h) });
                }
            }
        }
        Ok(())
    }

    /// Continue with a different Hamiltonian from the current point, keeping
    /// the step-size estimate.
    pub fn switch<G: Fn(f64) -> Matrix>(self, hamiltonian: G) -> Stepper<G> {
        let k1 = rhs(&hamiltonian(self.t), &self.y);
        Stepper { hamiltonian, control: self.control, t: self.t, y: self.y, h: self.h, k1, stats: self.stats }
    }
}
