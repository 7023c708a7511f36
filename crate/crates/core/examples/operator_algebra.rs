//! Ladder and Pauli algebra on a truncated qubit ⊗ oscillator space, and the
//! partial trace of an entangled state.

use fockcoh::hilbert::{annihilation_on, qubit_operators_on, QuantumState};
use fockcoh::{SpaceLayout, C64, OSCILLATOR, QUBIT};
use nalgebra::DVector;

fn main() -> fockcoh::Result<()> {
    let d = 8;
    let layout = SpaceLayout::new([(QUBIT, 2), (OSCILLATOR, d)])?;

    let b = annihilation_on(OSCILLATOR, d)?.embed(&layout, OSCILLATOR)?;
    let comm = b.commutator(&b.dagger())?;
    // [b, b†] = 1 everywhere except the top Fock level, where truncation bites.
    println!("[b, b†] on |g,3⟩: {:.3}", comm.get(3, 3).re);
    println!("[b, b†] on |g,{}⟩: {:.3}", d - 1, comm.get(d - 1, d - 1).re);

    let q = qubit_operators_on(QUBIT);
    let z_from_ladder = q.plus.commutator(&q.minus)?;
    println!("[σ+, σ−] == σz: {}", (z_from_ladder.matrix() - q.z.matrix()).norm() < 1e-14);

    // (|g,1⟩ + |e,0⟩)/√2 reduces to an equal mixture of |0⟩ and |1⟩.
    let mut psi = DVector::zeros(layout.total_dim());
    let amp = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    psi[layout.flat_index(&[0, 1])?] = amp;
    psi[layout.flat_index(&[1, 0])?] = amp;
    let state = QuantumState::pure(layout, psi)?;
    let rho_b = state.reduced_matrix(OSCILLATOR)?;
    println!("ρ_b populations: {:.3} {:.3}, coherence entry {:.3}", rho_b[(0, 0)].re, rho_b[(1, 1)].re, rho_b[(0, 1)].norm());
    Ok(())
}
