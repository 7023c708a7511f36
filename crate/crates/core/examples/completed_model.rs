//! The pumped three-mode model: with the pump in vacuum nothing happens, and
//! a strong coherent pump reproduces the two-body model at short times.

use fockcoh::experiments::{completed_model_run, ScenarioConfig};

fn main() -> fockcoh::Result<()> {
    let config = ScenarioConfig::from_json(
        r#"{
            "model": {"absorber": {"type": "qubit"},
                      "interactions": [{"order": 1, "coupling": 1.0}, {"order": 2, "coupling": 0.1}],
                      "cutoff": 30},
            "initial": {"kind": "fock", "n": 7},
            "schedule": {"kind": "times", "taus": [0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3]}
        }"#,
    )?;
    let run = completed_model_run(&config, &[0.0, 4.0, 12.0], 0.3)?;
    println!("{:>6} {:>10} {}", "tau", "effective", run.traces.iter().map(|t| format!("{:>10}", format!("β={}", t.beta))).collect::<String>());
    for (i, tau) in run.taus.iter().enumerate() {
        let cols: String = run.traces.iter().map(|t| format!("{:>10.4}", t.coherence[i])).collect();
        println!("{tau:>6.2} {:>10.4} {cols}", run.effective[i]);
    }
    println!("largest relative deviation of β = 12 for τ ≤ 0.3: {:.3}", run.max_relative_deviation);
    Ok(())
}
