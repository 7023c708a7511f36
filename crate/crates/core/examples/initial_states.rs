use fockcoh::observables::{coherence, excitation_stats};
use fockcoh::states::{make_state, InitialStateSpec, StateKind};
use fockcoh::{SpaceLayout, OSCILLATOR};

fn main() -> fockcoh::Result<()> {
    let layout = SpaceLayout::single(OSCILLATOR, 150)?;
    let kinds = [
        StateKind::Fock { n: 7 },
        StateKind::Thermal { mean: 7.0 },
        StateKind::PhaseRandomizedCoherent { mean: 7.0 },
        StateKind::Admixture { p: 0.5, n: 7 },
        StateKind::Coherent { beta: fockcoh::C64::new(7f64.sqrt(), 0.0) },
    ];
    for kind in kinds {
        let state = make_state(&InitialStateSpec::new(kind.clone()), &layout)?;
        let stats = excitation_stats(&state)?;
        println!("{kind:?}: <N> = {:.4}, std = {:.4}, C = {:.4}", stats.mean, stats.std, coherence(&state));
    }
    Ok(())
}
