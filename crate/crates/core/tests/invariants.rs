use std::f64::consts::PI;

use darkpath::linalg::{eye, max_abs_diff, Matrix, C64};
use darkpath::robustness::{run_sweep, SweepGate, SweepSpec};
use darkpath::two_qudit::{
    conditional_gate, conditional_propagator, ideal_conditional, HamiltonianTerms, TwoQuditOptions, TwoQuditSpace,
};
use darkpath::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_loop(rng: &mut ChaCha8Rng, d: usize) -> LoopParams {
    let m = d - 1;
    let mut draw = |n: usize| (0..n).map(|_| rng.random_range(-PI..PI)).collect::<Vec<_>>();
    let angles = DarkAngles::new(draw(m), draw(m)).unwrap();
    let (phases, gammas) = (draw(m), draw(m));
    LoopParams::new(angles, phases, gammas, 4.0, 1.0).unwrap()
}

#[test]
fn simulated_loops_match_holonomy() {
    let cfg = IntegratorConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for i in 0..20 {
        let d = 3 + i % 2;
        let l = random_loop(&mut rng, d);
        let u = loop_propagator(&l, 0.0, &cfg).unwrap();
        let block = Unitary::with_tolerance(u.leading_block(d).unwrap(), 1e-6).unwrap();
        let dist = gate_distance(&block, &holonomy_one_loop(&l).unwrap()).unwrap();
        assert!(dist < 1e-4, "loop {i}: {dist:e}");
    }
}

#[test]
fn laser_phases_do_not_change_the_gate() {
    let cfg = IntegratorConfig::default();
    let mut l = NamedGate::Z3.program().loops[0].clone();
    l.angles = DarkAngles::qutrit(0.4, 1.0, 0.7, 1.2);
    let reference = loop_propagator(&l, 0.0, &cfg).unwrap().leading_block(3).unwrap();
    l.pulse_phases = vec![2.1, -0.6];
    let shifted = loop_propagator(&l, 0.0, &cfg).unwrap().leading_block(3).unwrap();
    assert!(max_abs_diff(&reference, &shifted) < 1e-7);
}

#[test]
fn fidelity_falls_with_rabi_error() {
    let spec = SweepSpec::default();
    let result = run_sweep(&spec).unwrap();
    for g in NamedGate::ALL {
        for eta in [0.0, 4.0] {
            let curve: Vec<_> = result.curve(g.name(), eta).collect();
            let mid = curve.iter().position(|r| r.delta.abs() < 1e-15).unwrap();
            for w in curve[mid..].windows(2) {
                assert!(w[1].mean_fidelity <= w[0].mean_fidelity + 1e-4, "{g} eta {eta} at {}", w[1].delta);
            }
            for w in curve[..=mid].windows(2) {
                assert!(w[0].mean_fidelity <= w[1].mean_fidelity + 1e-4, "{g} eta {eta} at {}", w[0].delta);
            }
        }
    }
}

#[test]
fn sweep_is_reproducible_and_thread_independent() {
    let spec = SweepSpec {
        gates: vec![SweepGate::Named(NamedGate::X3), SweepGate::Named(NamedGate::H3)],
        deltas: vec![-0.08, 0.03],
        samples: 20,
        seed: 11,
        ..SweepSpec::default()
    };
    let a = run_sweep(&spec).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| run_sweep(&spec).unwrap());
    for (x, y) in a.rows.iter().zip(&b.rows) {
        assert_eq!(x.mean_fidelity.to_bits(), y.mean_fidelity.to_bits());
        assert_eq!(x.stderr.to_bits(), y.stderr.to_bits());
    }
}

#[test]
fn dark_state_input_stays_put() {
    let cfg = IntegratorConfig::default();
    let mut l = LoopParams::qutrit(0.3, 0.5, 0.9, 1.4, 1.0, -2.0);
    l.pulse_phases = vec![0.2, 0.7];
    let program = GateProgram::new(vec![l.clone()], None).unwrap();
    let dark = QuditState::normalized(l.basis().unwrap().dark().clone()).unwrap();
    let trace = population_trace(&program, &dark, &cfg).unwrap();
    let first = trace.states[0].populations();
    for s in &trace.states {
        for (p, q) in s.populations().iter().zip(&first) {
            assert!((p - q).abs() < 1e-8);
        }
    }
}

#[test]
fn conditional_gate_examples() {
    let cfg = IntegratorConfig::default();
    let gate = conditional_gate(&NamedGate::Z3.program(), &cfg).unwrap();
    let m = gate.matrix();
    // control |1⟩ leaves the target alone
    assert!(max_abs_diff(&m.slice(ndarray::s![..3, ..3]).to_owned(), &eye(3)) < 1e-6);
    let w = |k: f64| C64::from_polar(1.0, 2.0 * PI * k / 3.0);
    for (i, z) in [C64::new(1.0, 0.0), w(1.0), w(2.0)].iter().enumerate() {
        assert!((m[[6 + i, 6 + i]] - z).norm() < 1e-6);
    }

    let trivial = GateProgram::new(vec![LoopParams::qutrit(0.4, 0.2, 1.0, 0.3, 0.0, 0.0)], None).unwrap();
    let u = conditional_gate(&trivial, &cfg).unwrap();
    assert!(max_abs_diff(u.matrix(), &eye(9)) < 1e-6);
}

#[test]
fn random_conditional_gates_keep_block_structure() {
    let cfg = IntegratorConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..3 {
        let program = GateProgram::new(vec![random_loop(&mut rng, 3), random_loop(&mut rng, 3)], None).unwrap();
        let u = conditional_gate(&program, &cfg).unwrap();
        let want: Matrix = ideal_conditional(&compose(&program).unwrap());
        assert!(max_abs_diff(u.matrix(), &want) < 1e-4);
        for i in 0..6 {
            for j in 6..9 {
                assert!(u.matrix()[[i, j]].norm() < 1e-4 && u.matrix()[[j, i]].norm() < 1e-4);
            }
        }
    }
}

#[test]
fn companion_term_is_trivial_on_computational_states() {
    let cfg = IntegratorConfig::default();
    let space = TwoQuditSpace::new(3).unwrap();
    let opts = TwoQuditOptions { terms: HamiltonianTerms::Companion, stark_shift: None };
    for g in [NamedGate::X3, NamedGate::H3] {
        let u = conditional_propagator(&g.program(), 0.0, &cfg, &opts).unwrap();
        let block = space.computational_block(u.matrix());
        assert!(max_abs_diff(&block, &eye(9)) < 1e-6, "{g}");
    }
}

#[test]
fn stark_shift_perturbs_the_gate() {
    let cfg = IntegratorConfig::default();
    let space = TwoQuditSpace::new(3).unwrap();
    let program = NamedGate::X3.program();
    let mut shift = vec![0.0; space.dim()];
    shift[space.index(2, 0)] = 0.5;
    let opts = TwoQuditOptions { terms: HamiltonianTerms::Effective, stark_shift: Some(shift) };
    let u = conditional_propagator(&program, 0.0, &cfg, &opts).unwrap();
    let block = space.computational_block(u.matrix());
    let ideal = ideal_conditional(&compose(&program).unwrap());
    assert!(max_abs_diff(&block, &ideal) > 1e-3);

    let bad = TwoQuditOptions { terms: HamiltonianTerms::Effective, stark_shift: Some(vec![0.0; 3]) };
    assert!(conditional_propagator(&program, 0.0, &cfg, &bad).unwrap_err().is_usage());
}

#[test]
fn qudit_gates_beyond_qutrits() {
    let cfg = IntegratorConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let d = 5;
    let loops: Vec<_> = (0..min_loops(d).unwrap()).map(|_| random_loop(&mut rng, d)).collect();
    let program = GateProgram::new(loops, None).unwrap();
    let u = program_propagator(&program.loops, 0.0, &cfg).unwrap();
    let block = Unitary::with_tolerance(u.leading_block(d).unwrap(), 1e-6).unwrap();
    assert!(gate_distance(&block, &compose(&program).unwrap()).unwrap() < 1e-4);
}
