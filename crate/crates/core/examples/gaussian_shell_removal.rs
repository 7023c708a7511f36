//! Displacement, rotation and squeezing that bring the first and second
//! quadrature moments to vacuum values; whatever coherence remains is not a
//! Gaussian artifact.

use fockcoh::experiments::{reduced_states_at, IntegratorSettings, PointSpec, Schedule};
use fockcoh::models::ModelSpec;
use fockcoh::observables::{coherence, quadrature_stats, remove_gaussian_shell};
use fockcoh::states::InitialStateSpec;

fn main() -> fockcoh::Result<()> {
    let point = PointSpec {
        params: Default::default(),
        model: ModelSpec::combined(1.0, 0.1, 100),
        initial: InitialStateSpec::fock(7),
        schedule: Schedule::default(),
    };
    let state = reduced_states_at(&point, &[3.32], IntegratorSettings::default())?.remove(0);
    let before = quadrature_stats(&state)?;
    let removed = remove_gaussian_shell(&state)?;
    let after = quadrature_stats(&removed.state)?;
    println!("before: C = {:.4}, <X> = {:+.4}, <P> = {:+.4}, V = {:?}", coherence(&state), before.mean_x, before.mean_p, before.covariance);
    println!("after:  C = {:.4}, <X> = {:+.1e}, <P> = {:+.1e}, V = {:?}", coherence(&removed.state), after.mean_x, after.mean_p, after.covariance);
    println!("{} iterations, padded-space leakage {:.2e}", removed.iterations, removed.residuals.leakage);
    Ok(())
}
