use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use fockcoh::experiments::{
    coherence_landscape, completed_model_run, expand_points, max_coherence_vs_n, output_dir, robustness_suite,
    run_scenario, weak_coupling_scan, wigner_snapshot, write_artifacts, write_json, Schedule, ScenarioConfig, Study,
    WignerSummary,
};
use fockcoh::Error;

/// Environment variable naming the default output root.
const OUTPUT_ROOT_ENV: &str = "FOCKCOH_OUTPUT_ROOT";

#[derive(Parser)]
#[command(name = "fockcoh", version, about = "Coherence from combined linear and nonlinear absorption")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Continuous evolution of a single scenario.
    Evolve(Common),
    /// Sequential switching between interactions.
    Switch(Common),
    /// Parameter sweep (scenario, coherence-vs-n or weak-coupling study).
    Sweep(Common),
    /// Wigner grid of the oscillator at `diagnostics.wigner_tau`.
    Wigner(Common),
    /// Variants of a base scenario (noise, mixed initial states, absorbers).
    Robustness(Common),
    /// Completed model with a pumped auxiliary mode.
    Completed(Common),
    /// Coherence traces over initial Fock index and coupling ratio.
    Landscape(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override an existing config key, e.g. `--set model.cutoff=200`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (default: config `output`, else `$FOCKCOH_OUTPUT_ROOT/<name>`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Validate and print the resolved parameter set without computing.
    #[arg(long)]
    dry_run: bool,
    /// Worker thread cap.
    #[arg(long)]
    jobs: Option<usize>,
}

impl Command {
    fn parts(&self) -> (&'static str, &Common) {
        match self {
            Command::Evolve(c) => ("evolve", c),
            Command::Switch(c) => ("switch", c),
            Command::Sweep(c) => ("sweep", c),
            Command::Wigner(c) => ("wigner", c),
            Command::Robustness(c) => ("robustness", c),
            Command::Completed(c) => ("completed", c),
            Command::Landscape(c) => ("landscape", c),
        }
    }
}

fn exit_code(err: &Error) -> (u8, &'static str) {
    match err {
        Error::Truncation(_) => (3, "truncation"),
        Error::Integration { .. } | Error::NotHermitian(_) | Error::ShellRemoval(_) => (4, "integration"),
        Error::Io(_) | Error::Csv(_) => (1, "io"),
        _ => (2, "parse"),
    }
}

fn load(common: &Common) -> Result<ScenarioConfig, Error> {
    let mut config = ScenarioConfig::load(&common.config)?;
    for item in &common.overrides {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override {item:?} is not KEY=VALUE")))?;
        config = config.with_override(key.trim(), value.trim())?;
    }
    Ok(config)
}

fn check_study(command: &str, config: &ScenarioConfig) -> Result<(), Error> {
    let switch = matches!(config.schedule, Schedule::Switch { .. });
    let ok = match command {
        "evolve" => config.study == Study::Scenario && !switch,
        "switch" => config.study == Study::Scenario && switch,
        "sweep" => matches!(config.study, Study::Scenario | Study::CoherenceVsN | Study::WeakCoupling | Study::Landscape),
        "wigner" => true,
        "robustness" => config.study == Study::Robustness,
        "completed" => config.study == Study::Completed,
        "landscape" => config.study == Study::Landscape,
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Config(format!("`{command}` cannot run a {:?} study with this schedule", config.study)))
    }
}

fn required<T: Clone>(axis: &Option<Vec<T>>, name: &str) -> Result<Vec<T>, Error> {
    axis.clone().ok_or_else(|| Error::Config(format!("this study needs the sweep axis `{name}`")))
}

fn write_rows(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<(), Error> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

fn num(x: f64) -> String {
    format!("{x:.12e}")
}

fn landscape(config: &ScenarioConfig, dir: &Path) -> Result<Value, Error> {
    let result = coherence_landscape(
        config,
        &required(&config.sweep.n, "n")?,
        &required(&config.sweep.g_ratio, "G")?,
        &config.schedule.taus(),
    )?;
    let rows: Vec<Vec<String>> = result
        .families
        .iter()
        .flat_map(|f| {
            f.taus
                .iter()
                .zip(&f.coherence)
                .map(|(t, c)| vec![f.n.to_string(), num(f.g_ratio), num(*t), num(*c)])
        })
        .collect();
    write_rows(&dir.join("landscape.csv"), &["n", "G", "tau", "coherence"].map(String::from), &rows)?;
    let families: Vec<Value> = result
        .families
        .iter()
        .map(|f| {
            json!({"n": f.n, "G": f.g_ratio, "max_coherence": f.max_coherence, "tau_max": f.tau_max,
                   "coherence_at_pi": f.coherence_at_pi, "local_maxima": f.local_maxima})
        })
        .collect();
    Ok(json!({"families": families, "argmax_g_at_pi": result.argmax_g_at_pi}))
}

fn run(command: &str, common: &Common) -> Result<Value, Error> {
    let config = load(common)?;
    check_study(command, &config)?;
    if common.dry_run {
        let points: Vec<Value> = expand_points(&config)?.iter().map(|p| json!(p.params)).collect();
        return Ok(json!({"dry_run": true, "config": config, "config_sha256": config.hash(), "points": points}));
    }
    let root = std::env::var_os(OUTPUT_ROOT_ENV).map_or_else(|| PathBuf::from("runs"), PathBuf::from);
    let dir = common.out.clone().unwrap_or_else(|| output_dir(&config, &root));
    fs::create_dir_all(&dir)?;
    let meta = json!({"name": config.name, "config_sha256": config.hash(), "cutoff": config.model.cutoff});
    let summary = match (command, config.study) {
        ("wigner", _) => {
            let (_, grid) = wigner_snapshot(&config)?;
            fs::write(dir.join("wigner.txt"), grid.to_text())?;
            grid.write_csv(std::io::BufWriter::new(fs::File::create(dir.join("wigner.csv"))?))?;
            write_json(&config, &dir.join("config.json"))?;
            json!({"metadata": meta, "wigner": WignerSummary::of(config.diagnostics.wigner_tau, &grid)})
        }
        ("robustness", _) => {
            let (report, runs) = robustness_suite(&config)?;
            for (variant, result) in config.variants.iter().zip(&runs) {
                write_artifacts(result, &dir.join(&variant.name))?;
            }
            write_json(&config, &dir.join("config.json"))?;
            json!(report)
        }
        ("completed", _) => {
            let betas = required(&config.sweep.beta, "beta")?;
            let run = completed_model_run(&config, &betas, 0.3)?;
            let mut header = vec!["tau".to_string(), "effective".to_string()];
            header.extend(run.traces.iter().map(|t| format!("beta={}", t.beta)));
            let rows: Vec<Vec<String>> = (0..run.taus.len())
                .map(|i| {
                    let mut row = vec![num(run.taus[i]), num(run.effective[i])];
                    row.extend(run.traces.iter().map(|t| num(t.coherence[i])));
                    row
                })
                .collect();
            write_rows(&dir.join("completed.csv"), &header, &rows)?;
            write_json(&config, &dir.join("config.json"))?;
            json!({"metadata": meta, "run": run})
        }
        (_, Study::Landscape) => {
            write_json(&config, &dir.join("config.json"))?;
            let mut out = landscape(&config, &dir)?;
            out["metadata"] = meta;
            out
        }
        (_, Study::CoherenceVsN) => {
            let (result, bars) = max_coherence_vs_n(&config, &required(&config.sweep.n, "n")?)?;
            write_artifacts(&result, &dir)?;
            let rows: Vec<Vec<String>> = bars
                .iter()
                .map(|b| {
                    vec![b.n.to_string(), num(b.max_coherence), num(b.tau_max), b.shell_removed.map_or(String::new(), num)]
                })
                .collect();
            write_rows(&dir.join("bars.csv"), &["n", "max_coherence", "tau_max", "shell_removed"].map(String::from), &rows)?;
            json!({"metadata": result.metadata, "bars": bars})
        }
        (_, Study::WeakCoupling) => {
            let omegas = required(&config.sweep.omega, "omega")?;
            let big_omegas = required(&config.sweep.big_omega, "Omega")?;
            let mut scans = Vec::new();
            let mut rows = Vec::new();
            for n in required(&config.sweep.n, "n")? {
                let scan = weak_coupling_scan(&config, n, &omegas, &big_omegas)?;
                rows.extend(scan.points.iter().map(|p| {
                    vec![n.to_string(), num(p.omega), num(p.big_omega), num(p.max_coherence), num(scan.baseline)]
                }));
                scans.push(scan);
            }
            let header = ["n", "omega", "Omega", "max_coherence", "baseline"].map(String::from);
            write_rows(&dir.join("scan.csv"), &header, &rows)?;
            write_json(&config, &dir.join("config.json"))?;
            json!({"metadata": meta, "scans": scans})
        }
        _ => {
            let result = run_scenario(&config)?;
            write_artifacts(&result, &dir)?;
            result.summary_json()
        }
    };
    write_json(&summary, &dir.join("summary.json"))?;
    Ok(summary)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (name, common) = cli.command.parts();
    if let Some(jobs) = common.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global() {
            eprintln!("{}", json!({"error": "threads", "message": e.to_string()}));
            return ExitCode::from(1);
        }
    }
    match run(name, common) {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
            ExitCode::SUCCESS
        }
        Err(err) => {
            let (code, kind) = exit_code(&err);
            eprintln!("{}", json!({"error": kind, "message": err.to_string(), "exit_code": code}));
            ExitCode::from(code)
        }
    }
}
