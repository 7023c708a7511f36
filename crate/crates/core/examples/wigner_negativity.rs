//! Wigner functions of a few oscillator states, written as text grids.

use fockcoh::observables::{negativity_index, negativity_volume, wigner, GridSpec};
use fockcoh::states::{make_state, InitialStateSpec, StateKind};
use fockcoh::{SpaceLayout, OSCILLATOR};

fn main() -> fockcoh::Result<()> {
    let layout = SpaceLayout::single(OSCILLATOR, 40)?;
    let out = std::env::temp_dir().join("fockcoh-wigner");
    std::fs::create_dir_all(&out)?;
    for (name, kind) in [
        ("vacuum", StateKind::Fock { n: 0 }),
        ("fock1", StateKind::Fock { n: 1 }),
        ("fock3", StateKind::Fock { n: 3 }),
        ("thermal", StateKind::Thermal { mean: 1.0 }),
    ] {
        let state = make_state(&InitialStateSpec::new(kind), &layout)?;
        let grid = wigner(&state, &GridSpec::default())?;
        println!(
            "{name:>8}: W(0,0) = {:+.5}  ∫W = {:.6}  negativity volume = {:.4}  index = {:.4}",
            grid.interpolate(0.0, 0.0).unwrap_or(f64::NAN),
            grid.normalization_integral,
            negativity_volume(&grid),
            negativity_index(&grid),
        );
        std::fs::write(out.join(format!("{name}.txt")), grid.to_text())?;
    }
    println!("grids written to {}", out.display());
    Ok(())
}
