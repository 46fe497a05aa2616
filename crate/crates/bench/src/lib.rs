//! Fixtures shared by the benchmarks.

use std::f64::consts::PI;

use darkpath::{DarkAngles, GateProgram, LoopParams};

/// Deterministic generic loop on a `d`-level qudit.
pub fn sample_loop(d: usize, salt: f64) -> LoopParams {
    let m = d - 1;
    let spread = |k: usize, scale: f64| ((k as f64 + 1.0) * (0.7 + salt)).sin() * scale;
    let thetas = (0..m).map(|k| 0.3 + spread(k, 1.1).abs()).collect();
    let phis = (0..m).map(|k| spread(k + m, PI)).collect();
    let gammas = (0..m).map(|k| spread(k + 2 * m, PI)).collect();
    LoopParams::new(DarkAngles::new(thetas, phis).unwrap(), vec![0.0; m], gammas, 4.0, 1.0).unwrap()
}

/// Program of `n` generic loops.
pub fn sample_program(d: usize, n: usize) -> GateProgram {
    GateProgram::new((0..n).map(|i| sample_loop(d, i as f64 * 0.37)).collect(), None).unwrap()
}
