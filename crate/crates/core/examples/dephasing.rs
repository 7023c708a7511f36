//! Number dephasing `L = √γ b†b` on the oscillator during combined
//! absorption, integrated with the Lindblad solver.

use fockcoh::evolution::{LindbladOptions, LindbladSolver};
use fockcoh::models::ModelSpec;
use fockcoh::observables::coherence_of_matrix;
use fockcoh::states::{make_state, InitialStateSpec};
use fockcoh::OSCILLATOR;

fn main() -> fockcoh::Result<()> {
    for gamma in [0.0, 0.001, 0.01, 0.1] {
        let mut spec = ModelSpec::combined(1.0, 0.1, 60);
        spec.dephasing_rate = gamma;
        let rho0 = make_state(&InitialStateSpec::fock(7), &spec.layout()?)?;
        let solver = LindbladSolver::new(
            &spec.hamiltonian_sparse()?,
            &spec.jump_operators_sparse()?,
            LindbladOptions { tolerance: 1e-8, ..Default::default() },
        )?;
        let times: Vec<f64> = (0..=40).map(|i| i as f64 * 0.5).collect();
        let mut best = (0.0, 0.0);
        solver.run(&rho0, &times, |t, rho| {
            let c = coherence_of_matrix(&rho.reduced_matrix(OSCILLATOR)?)?;
            if c > best.1 {
                best = (t * 0.1, c);
            }
            Ok(())
        })?;
        println!("γ = {gamma:<6} max C over τ ≤ 2 = {:.3} at τ = {:.2}", best.1, best.0);
    }
    Ok(())
}
