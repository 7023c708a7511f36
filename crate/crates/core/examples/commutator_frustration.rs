//! Each JC interaction alone commutes with a suitably tuned free Hamiltonian,
//! but no single `(ω, Ω)` works for the linear and quadratic terms together.

use fockcoh::models::{commutator_residual, free_hamiltonian, jc_interaction, ModelSpec};

fn main() -> fockcoh::Result<()> {
    let spec = ModelSpec::combined(1.0, 0.1, 20);
    let v1 = jc_interaction(1, 1.0, &spec)?;
    let v2 = jc_interaction(2, 0.1, &spec)?;

    println!("{:>6} {:>6} {:>12} {:>12}", "omega", "Omega", "|[H0,V1]|", "|[H0,V2]|");
    for (omega, big_omega) in [(1.0, 1.0), (1.0, 2.0), (0.5, 1.0), (1.0, 1.5)] {
        let h0 = free_hamiltonian(omega, big_omega, &spec)?;
        let r1 = commutator_residual(&h0, &v1)?.norm;
        let r2 = commutator_residual(&h0, &v2)?.norm;
        println!("{omega:>6.2} {big_omega:>6.2} {r1:>12.4e} {r2:>12.4e}");
    }
    Ok(())
}
