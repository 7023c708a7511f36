use fockcoh::evolution::{
    lindblad_evolve, sequential_switch, switch_coefficients, Propagator, SwitchSegment,
};
use fockcoh::hilbert::{annihilation, Operator};
use fockcoh::models::{
    commutator_residual, free_hamiltonian, jc_interaction, max_difference_below_boundary, predicted_commutator,
    ModelSpec,
};
use fockcoh::observables::{
    coherence, coherence_of_matrix, position_density, quadrature_stats, wigner, GridSpec,
};
use fockcoh::states::{make_state, InitialStateSpec};
use fockcoh::{QuantumState, SpaceLayout, C64, OSCILLATOR};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn single(d: usize) -> SpaceLayout {
    SpaceLayout::single(OSCILLATOR, d).unwrap()
}

fn complex_vec(d: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), d)
}

fn pure_state(d: usize, raw: &[(f64, f64)]) -> Option<QuantumState> {
    let psi = DVector::from_iterator(d, raw.iter().map(|&(re, im)| C64::new(re, im)));
    let norm = psi.norm();
    (norm > 1e-3).then(|| QuantumState::pure(single(d), psi / C64::new(norm, 0.0)).unwrap())
}

/// Random mixed state `A A† / tr(A A†)`.
fn mixed_state(d: usize, raw: &[(f64, f64)]) -> Option<QuantumState> {
    let a = DMatrix::from_iterator(d, d, raw.iter().map(|&(re, im)| C64::new(re, im)));
    let rho = &a * a.adjoint();
    let tr = rho.trace().re;
    (tr > 1e-3).then(|| QuantumState::mixed(single(d), rho / C64::new(tr, 0.0)).unwrap())
}

fn unitary_defect(u: &Operator) -> f64 {
    let m = u.matrix();
    let id = DMatrix::<C64>::identity(m.nrows(), m.ncols());
    (m.adjoint() * m - id).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn coherence_is_invariant_under_diagonal_unitaries(
        raw in complex_vec(36),
        phases in prop::collection::vec(0.0..std::f64::consts::TAU, 6),
    ) {
        let Some(state) = mixed_state(6, &raw) else { return Ok(()) };
        let rho = state.density_matrix();
        let u = DMatrix::from_diagonal(&DVector::from_iterator(6, phases.iter().map(|&p| C64::from_polar(1.0, p))));
        let rotated = &u * &rho * u.adjoint();
        let c0 = coherence(&state);
        let c1 = coherence_of_matrix(&rotated).unwrap();
        prop_assert!((c0 - c1).abs() < 1e-10);
    }

    #[test]
    fn coherence_is_bounded_by_log_dimension(raw in complex_vec(25), d in 2usize..6) {
        let Some(state) = pure_state(d, &raw[..d]) else { return Ok(()) };
        let c = coherence(&state);
        prop_assert!(c >= -1e-12);
        prop_assert!(c <= (d as f64).ln() + 1e-12);
        let Some(mixed) = mixed_state(5, &raw) else { return Ok(()) };
        prop_assert!(coherence(&mixed) <= 5f64.ln() + 1e-12);
    }

    #[test]
    fn propagators_are_unitary(g1 in 0.0..2.0f64, g2 in 0.0..2.0f64, t in 0.0..20.0f64) {
        let h = ModelSpec::combined(g1, g2, 12).hamiltonian().unwrap();
        let u = Propagator::new(&h).unwrap().unitary(t);
        prop_assert!(unitary_defect(&u) < 1e-10);
    }

    #[test]
    fn closed_evolution_preserves_trace_and_purity(g2 in 0.01..1.0f64, t in 0.0..10.0f64, n in 0usize..6) {
        let spec = ModelSpec::combined(1.0, g2, 12);
        let psi = make_state(&InitialStateSpec::fock(n), &spec.layout().unwrap()).unwrap();
        let out = Propagator::new(&spec.hamiltonian().unwrap()).unwrap().evolve(&psi, t).unwrap();
        prop_assert!((out.trace() - 1.0).abs() < 1e-10);
        let rho = out.density_matrix();
        let purity = (&rho * &rho).trace().re;
        prop_assert!((purity - 1.0).abs() < 1e-9);
    }

    #[test]
    fn lindblad_preserves_trace_and_hermiticity(gamma in 0.0..0.5f64, t in 0.1..2.0f64) {
        let mut spec = ModelSpec::combined(1.0, 0.3, 8);
        spec.dephasing_rate = gamma;
        let rho0 = make_state(&InitialStateSpec::fock(3), &spec.layout().unwrap()).unwrap();
        let out = lindblad_evolve(&spec.hamiltonian().unwrap(), &spec.jump_operators().unwrap(), &rho0, &[t]).unwrap();
        let rho = out.final_state().unwrap().density_matrix();
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-8);
        prop_assert!((&rho - rho.adjoint()).iter().all(|z| z.norm() < 1e-10));
    }

    #[test]
    fn single_interaction_keeps_fock_states_incoherent(k in 1u32..4, n in 0usize..8, t in 0.0..30.0f64) {
        let spec = ModelSpec::qubit(&[(k, 1.0)], 16);
        let psi = make_state(&InitialStateSpec::fock(n), &spec.layout().unwrap()).unwrap();
        let out = Propagator::new(&spec.hamiltonian().unwrap()).unwrap().evolve(&psi, t).unwrap();
        prop_assert!(coherence(&out.partial_trace(OSCILLATOR).unwrap()) < 1e-9);
    }

    #[test]
    fn switch_amplitudes_match_sequential_propagation(
        n in 2usize..9,
        g1 in 0.1..2.0f64,
        g2 in 0.01..1.0f64,
        t in 0.0..3.0f64,
    ) {
        let coeffs = switch_coefficients(n, g1, g2, t).unwrap();
        prop_assert!((coeffs.norm_sqr() - 1.0).abs() < 1e-12);
        let oracle = coeffs.to_state(14).unwrap();
        let psi0 = make_state(&InitialStateSpec::fock(n), oracle.layout()).unwrap();
        let segments = [
            SwitchSegment { order: 1, coupling: g1, duration: t },
            SwitchSegment { order: 2, coupling: g2, duration: t },
        ];
        let run = sequential_switch(&segments, &psi0).unwrap();
        let dist = run.final_state().unwrap().trace_distance(&oracle).unwrap();
        prop_assert!(dist < 1e-9);
        // Two-branch coherence never exceeds ln 2.
        let c = coherence(&run.final_state().unwrap().partial_trace(OSCILLATOR).unwrap());
        prop_assert!(c <= 2f64.ln() + 1e-12);
    }

    #[test]
    fn commutator_residual_matches_closed_form(k in 1u32..4, omega in -2.0..2.0f64, big_omega in -2.0..2.0f64) {
        let spec = ModelSpec::qubit(&[(k, 0.7)], 14);
        let h0 = free_hamiltonian(omega, big_omega, &spec).unwrap();
        let v = jc_interaction(k, 0.7, &spec).unwrap();
        let residual = commutator_residual(&h0, &v).unwrap();
        let predicted = predicted_commutator(k, 0.7, omega, big_omega, &spec).unwrap();
        prop_assert!(max_difference_below_boundary(&residual.commutator, &predicted, k as usize).unwrap() < 1e-10);
    }

    #[test]
    fn heisenberg_bound_holds(raw in complex_vec(100)) {
        let Some(state) = mixed_state(10, &raw) else { return Ok(()) };
        prop_assert!(quadrature_stats(&state).unwrap().determinant() >= 0.25 - 1e-9);
    }

    #[test]
    fn wigner_is_normalized_with_position_marginal(raw in complex_vec(6)) {
        let Some(state) = pure_state(6, &raw) else { return Ok(()) };
        let grid = wigner(&state, &GridSpec::square(7.0, 141)).unwrap();
        prop_assert!((grid.normalization_integral - 1.0).abs() < 0.02);
        let marginal = grid.x_marginal();
        let exact = position_density(&state.density_matrix(), &grid.x_axis);
        let worst = marginal.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(worst < 1e-3);
    }
}

#[test]
fn ladder_commutator_below_the_cutoff() {
    let a = annihilation(12).unwrap();
    let comm = a.commutator(&a.dagger()).unwrap();
    for i in 0..11 {
        for j in 0..12 {
            let expected = if i == j { 1.0 } else { 0.0 };
            assert!((comm.get(i, j) - C64::new(expected, 0.0)).norm() < 1e-12);
        }
    }
    assert!((comm.get(11, 11).re + 11.0).abs() < 1e-12);
}
