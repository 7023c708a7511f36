//! Simultaneous linear and quadratic absorption from `|g, 7⟩` with
//! `g2/g1 = 0.1`, over `τ ∈ [0, 2π]`.

use fockcoh::experiments::{argmax, evolve_series, half_max_index, IntegratorSettings, PointSpec, Schedule};
use fockcoh::models::ModelSpec;
use fockcoh::states::InitialStateSpec;

fn main() -> fockcoh::Result<()> {
    let point = PointSpec {
        params: Default::default(),
        model: ModelSpec::combined(1.0, 0.1, 150),
        initial: InitialStateSpec::fock(7),
        schedule: Schedule::default(),
    };
    let rows = evolve_series(&point, IntegratorSettings::default())?;
    let c: Vec<f64> = rows.iter().map(|r| r.record.coherence).collect();
    let (imax, ihalf) = (argmax(&c), half_max_index(&c));
    println!("max C = {:.3} at τ = {:.3}", c[imax], rows[imax].tau);
    println!("half-max C = {:.3} first reached at τ = {:.3}", c[ihalf], rows[ihalf].tau);
    let r = &rows[imax].record;
    println!("at the maximum: <N> = {:.2}, std N = {:.2}, det V = {:.3}", r.mean_n, r.std_n,
        r.covariance[0][0] * r.covariance[1][1] - r.covariance[0][1].powi(2));
    for row in rows.iter().step_by(60) {
        println!("τ = {:>5.2}  C = {:.4}  S = {:.4}", row.tau, row.record.coherence, row.record.entropy);
    }
    Ok(())
}
