//! Config-driven scenarios and parameter sweeps.
//!
//! A [`ScenarioConfig`] describes a model, an initial state, a time schedule
//! and optional sweep axes. Every sweep point is evolved at the configured
//! cutoff and at each rung of the cutoff ladder; diagnostics are taken on the
//! oscillator state with the absorber traced out. Results are deterministic
//! and are persisted as CSV series, Wigner grids and a JSON summary.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evolution::{
    expm_multiply, leakage, sequential_switch_sampled, LindbladOptions, LindbladSolver, Propagator,
    SwitchSegment, LEAKAGE_WARNING,
};
use crate::hilbert::{Ensemble, QuantumState, C64};
use crate::models::ModelSpec;
use crate::observables::{
    diagnostics, entropy_of_spectrum, excitation_stats_from_populations, negativity_volume,
    quadrature_stats_of_matrix, remove_gaussian_shell, wigner, DiagnosticsRecord, GridSpec, WignerGrid,
};
use crate::states::{make_product_state, InitialStateSpec, StateKind};
use crate::{AUX_MODE, OSCILLATOR};

/// Coherence shift between the two largest cutoffs above which a point is
/// flagged as not converged.
pub const CONVERGENCE_THRESHOLD: f64 = 0.05;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Study {
    #[default]
    Scenario,
    CoherenceVsN,
    WeakCoupling,
    Landscape,
    Robustness,
    Completed,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentSpec {
    pub order: u32,
    /// Duration in scaled time `τ`.
    pub tau: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    /// `points` equally spaced scaled times over `[0, tau_max]`.
    Continuous { tau_max: f64, points: usize },
    Times { taus: Vec<f64> },
    /// Interactions applied one after another, each sampled `samples` times.
    Switch { segments: Vec<SegmentSpec>, samples: usize },
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule::Continuous { tau_max: TAU, points: 600 }
    }
}

impl Schedule {
    fn validate(&self) -> Result<()> {
        match self {
            Schedule::Continuous { tau_max, points } => {
                if !(*tau_max > 0.0 && tau_max.is_finite()) || *points < 2 {
                    return Err(Error::Config("continuous schedule needs tau_max > 0 and ≥ 2 points".into()));
                }
            }
            Schedule::Times { taus } => {
                if taus.is_empty() || taus[0] < 0.0 || taus.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::Config("taus must be non-empty, ≥ 0 and strictly increasing".into()));
                }
            }
            Schedule::Switch { segments, samples } => {
                if segments.is_empty() || *samples == 0 || segments.iter().any(|s| s.tau.is_nan() || s.tau < 0.0) {
                    return Err(Error::Config("switch schedule needs segments with τ ≥ 0 and ≥ 1 sample".into()));
                }
            }
        }
        Ok(())
    }

    /// Scaled sample times (for switching, cumulative segment ends).
    pub fn taus(&self) -> Vec<f64> {
        match self {
            Schedule::Continuous { tau_max, points } => {
                (0..*points).map(|i| tau_max * i as f64 / (*points - 1) as f64).collect()
            }
            Schedule::Times { taus } => taus.clone(),
            Schedule::Switch { segments, samples } => {
                let mut out = vec![0.0];
                let mut elapsed = 0.0;
                for s in segments.iter().filter(|s| s.tau > 0.0) {
                    for j in 1..=*samples {
                        out.push(elapsed + s.tau * j as f64 / *samples as f64);
                    }
                    elapsed += s.tau;
                }
                out
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticFlags {
    pub wigner: bool,
    pub shell_removal: bool,
    /// Scaled time of the state drawn by the `wigner` command.
    pub wigner_tau: f64,
}

impl Default for DiagnosticFlags {
    fn default() -> Self {
        Self { wigner: false, shell_removal: false, wigner_tau: 0.0 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepAxes {
    pub n: Option<Vec<usize>>,
    /// Coupling ratio `g^(2)/g^(1)`.
    #[serde(rename = "G")]
    pub g_ratio: Option<Vec<f64>>,
    pub tau: Option<Vec<f64>>,
    pub omega: Option<Vec<f64>>,
    #[serde(rename = "Omega")]
    pub big_omega: Option<Vec<f64>>,
    pub p: Option<Vec<f64>>,
    /// Mean occupation `n̄` of thermal or Poissonian initial states.
    pub mean: Option<Vec<f64>>,
    pub beta: Option<Vec<f64>>,
}

impl SweepAxes {
    /// Named parameter axes in application order (`tau` is the time grid).
    fn axes(&self) -> Vec<(&'static str, Vec<f64>)> {
        let mut out = Vec::new();
        if let Some(v) = &self.n {
            out.push(("n", v.iter().map(|&n| n as f64).collect()));
        }
        for (name, axis) in [
            ("G", &self.g_ratio),
            ("omega", &self.omega),
            ("Omega", &self.big_omega),
            ("p", &self.p),
            ("mean", &self.mean),
            ("beta", &self.beta),
        ] {
            if let Some(v) = axis {
                out.push((name, v.clone()));
            }
        }
        out
    }

    fn validate(&self) -> Result<()> {
        let empty = self.axes().iter().any(|(_, v)| v.is_empty()) || self.tau.as_ref().is_some_and(Vec::is_empty);
        if empty {
            return Err(Error::Config("sweep axes must be non-empty lists".into()));
        }
        if self.axes().iter().flat_map(|(_, v)| v).any(|x| !x.is_finite()) {
            return Err(Error::Config("sweep values must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Variant {
    pub name: String,
    /// JSON merge patch applied to the base config.
    #[serde(default)]
    pub patch: Value,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorSettings {
    pub tolerance: f64,
    pub initial_step: f64,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self { tolerance: 1e-9, initial_step: 1e-2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub study: Study,
    pub model: ModelSpec,
    pub initial: InitialStateSpec,
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(default)]
    pub diagnostics: DiagnosticFlags,
    #[serde(default)]
    pub sweep: SweepAxes,
    #[serde(default)]
    pub variants: Vec<Variant>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Additional cutoffs for the convergence check.
    #[serde(default)]
    pub cutoff_ladder: Vec<usize>,
    #[serde(default)]
    pub wigner_grid: Option<GridSpec>,
    #[serde(default)]
    pub integrator: IntegratorSettings,
}

fn default_name() -> String {
    "scenario".into()
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn from_value(value: Value) -> Result<Self> {
        let config: Self = serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.schedule.validate()?;
        self.sweep.validate()?;
        if self.cutoff_ladder.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("cutoff ladder must be strictly increasing".into()));
        }
        if self.cutoff_ladder.iter().any(|&d| d < 2) {
            return Err(Error::Config("cutoffs must be ≥ 2".into()));
        }
        if let Schedule::Switch { .. } = self.schedule {
            if self.model.pump.is_some() || self.model.dephasing_rate > 0.0 {
                return Err(Error::Config("switch schedules need a closed two-factor model".into()));
            }
        }
        if self.study == Study::Robustness && self.variants.is_empty() {
            return Err(Error::Config("a robustness study needs variants".into()));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(self).expect("config serializes")))
    }

    /// Sets a dotted key path (`model.cutoff`, `initial.n`) that must already
    /// exist in the resolved config. The value is parsed as JSON, falling
    /// back to a plain string.
    pub fn with_override(&self, key: &str, raw: &str) -> Result<Self> {
        let mut value = self.to_value();
        let mut slot = &mut value;
        for part in key.split('.') {
            slot = match slot {
                Value::Object(map) => map.get_mut(part),
                Value::Array(items) => part.parse::<usize>().ok().and_then(|i| items.get_mut(i)),
                _ => None,
            }
            .ok_or_else(|| Error::Config(format!("unknown config key {key:?}")))?;
        }
        *slot = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        Self::from_value(value)
    }

    fn all_cutoffs(&self) -> Vec<usize> {
        let mut cutoffs = self.cutoff_ladder.clone();
        if !cutoffs.contains(&self.model.cutoff) {
            cutoffs.push(self.model.cutoff);
        }
        cutoffs.sort_unstable();
        cutoffs
    }
}

/// RFC 7386 merge patch.
pub fn merge_patch(target: &mut Value, patch: &Value) {
    match patch {
        Value::Object(entries) => {
            if !target.is_object() {
                *target = Value::Object(Default::default());
            }
            let map = target.as_object_mut().expect("object");
            for (k, v) in entries {
                if v.is_null() {
                    map.remove(k);
                } else {
                    merge_patch(map.entry(k.clone()).or_insert(Value::Null), v);
                }
            }
        }
        other => *target = other.clone(),
    }
}

/// One resolved parameter set.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSpec {
    pub params: BTreeMap<String, f64>,
    pub model: ModelSpec,
    pub initial: InitialStateSpec,
    pub schedule: Schedule,
}

fn set_fock_index(kind: &mut StateKind, n: usize) -> Result<()> {
    match kind {
        StateKind::Fock { n: m } | StateKind::Admixture { n: m, .. } => *m = n,
        _ => return Err(Error::Config("the n axis needs a Fock or admixture initial state".into())),
    }
    Ok(())
}

fn set_coupling(model: &mut ModelSpec, order: u32, value: f64) {
    model.interactions.retain(|i| i.order != order);
    model.interactions.push(crate::models::Interaction { order, coupling: value });
    model.interactions.sort_by_key(|i| i.order);
}

fn apply_axis(point: &mut PointSpec, name: &str, value: f64) -> Result<()> {
    match name {
        "n" => set_fock_index(&mut point.initial.kind, value as usize)?,
        "G" => {
            let g1 = point.model.coupling(1).unwrap_or(1.0);
            set_coupling(&mut point.model, 2, value * g1);
        }
        "omega" => point.model.omega = value,
        "Omega" => point.model.big_omega = value,
        "p" => {
            point.initial.kind = match point.initial.kind {
                StateKind::Fock { n } | StateKind::Admixture { n, .. } => StateKind::Admixture { p: value, n },
                _ => return Err(Error::Config("the p axis needs a Fock or admixture initial state".into())),
            }
        }
        "mean" => match &mut point.initial.kind {
            StateKind::Thermal { mean } | StateKind::PhaseRandomizedCoherent { mean } => *mean = value,
            _ => return Err(Error::Config("the mean axis needs a thermal or Poissonian initial state".into())),
        },
        "beta" => point.model.pump = Some(C64::new(value, 0.0)),
        _ => unreachable!("axis names are fixed"),
    }
    point.params.insert(name.to_string(), value);
    Ok(())
}

/// Cartesian product of the sweep axes, last axis fastest.
pub fn expand_points(config: &ScenarioConfig) -> Result<Vec<PointSpec>> {
    let schedule = match &config.sweep.tau {
        Some(taus) => Schedule::Times { taus: taus.clone() },
        None => config.schedule.clone(),
    };
    schedule.validate()?;
    let mut points = vec![PointSpec {
        params: BTreeMap::new(),
        model: config.model.clone(),
        initial: config.initial.clone(),
        schedule,
    }];
    for (name, values) in config.sweep.axes() {
        let mut next = Vec::with_capacity(points.len() * values.len());
        for p in &points {
            for &v in &values {
                let mut q = p.clone();
                apply_axis(&mut q, name, v)?;
                next.push(q);
            }
        }
        points = next;
    }
    for p in &points {
        p.model.validate()?;
    }
    Ok(points)
}

/// Initial composite state: the configured state on its factor, the pump in
/// its coherent state, everything else in the ground state.
pub fn initial_state(model: &ModelSpec, initial: &InitialStateSpec) -> Result<QuantumState> {
    let layout = model.layout()?;
    let mut specs = vec![initial.clone()];
    if let Some(beta) = model.pump {
        if initial.target != AUX_MODE {
            specs.push(InitialStateSpec::on(StateKind::Coherent { beta }, AUX_MODE));
        }
    }
    make_product_state(&specs, &layout)
}

/// A composite state handed to the diagnostics.
enum Snapshot<'a> {
    Ensemble(&'a Ensemble),
    Mixed(&'a QuantumState),
}

impl Snapshot<'_> {
    fn record(&self) -> Result<DiagnosticsRecord> {
        match self {
            Snapshot::Ensemble(e) => diagnostics(e),
            Snapshot::Mixed(s) => {
                let rho = s.reduced_matrix(OSCILLATOR)?;
                let entropy = entropy_of_spectrum(crate::linalg::hermitian_eigenvalues(&rho));
                let pops: Vec<f64> = rho.diagonal().iter().map(|z| z.re).collect();
                let coherence = (entropy_of_spectrum(pops.iter().copied()) - entropy).max(0.0);
                let stats = excitation_stats_from_populations(&pops);
                let quad = quadrature_stats_of_matrix(&rho);
                Ok(DiagnosticsRecord {
                    coherence,
                    entropy,
                    mean_n: stats.mean,
                    std_n: stats.std,
                    mean_x: quad.mean_x,
                    mean_p: quad.mean_p,
                    covariance: quad.covariance,
                    leakage: leakage(&s.populations(), s.layout()),
                })
            }
        }
    }

    fn reduced(&self) -> Result<DMatrix<C64>> {
        match self {
            Snapshot::Ensemble(e) => e.reduced_matrix(OSCILLATOR),
            Snapshot::Mixed(s) => s.reduced_matrix(OSCILLATOR),
        }
    }
}

/// Evolves one point and calls `observe(index, snapshot)` at each scaled time.
fn drive(
    point: &PointSpec,
    taus: &[f64],
    integrator: IntegratorSettings,
    mut observe: impl FnMut(usize, Snapshot<'_>) -> Result<()>,
) -> Result<()> {
    let model = &point.model;
    let scale = model.time_scale();
    let times: Vec<f64> = taus.iter().map(|tau| tau / scale).collect();
    let psi0 = initial_state(model, &point.initial)?;
    if let Schedule::Switch { segments, samples } = &point.schedule {
        let raw: Vec<SwitchSegment> = segments
            .iter()
            .map(|s| SwitchSegment {
                order: s.order,
                coupling: model.coupling(s.order).unwrap_or(0.0),
                duration: s.tau / scale,
            })
            .collect();
        let result = sequential_switch_sampled(&raw, &psi0, *samples)?;
        for (i, state) in result.states.iter().enumerate() {
            observe(i, Snapshot::Ensemble(&state.ensemble()))?;
        }
        return Ok(());
    }
    if model.dephasing_rate > 0.0 {
        let options = LindbladOptions {
            tolerance: integrator.tolerance,
            initial_step: integrator.initial_step,
            check_positivity: false,
            ..Default::default()
        };
        let solver = LindbladSolver::new(&model.hamiltonian_sparse()?, &model.jump_operators_sparse()?, options)?;
        let mut index = 0;
        return solver.run(&psi0, &times, |_, rho| {
            observe(index, Snapshot::Mixed(rho))?;
            index += 1;
            Ok(())
        });
    }
    if model.pump.is_some() {
        let h = model.hamiltonian_sparse()?;
        let Some(mut psi) = psi0.as_vector().cloned() else {
            return Err(Error::InvalidState("the pumped model needs a pure initial state".into()));
        };
        let mut t = 0.0;
        for (i, &target) in times.iter().enumerate() {
            psi = expm_multiply(&h, &psi, target - t);
            t = target;
            let columns = DMatrix::from_column_slice(psi.len(), 1, psi.as_slice());
            observe(i, Snapshot::Ensemble(&Ensemble::new(psi0.layout().clone(), columns)?))?;
        }
        return Ok(());
    }
    let propagator = Propagator::new(&model.hamiltonian()?)?;
    let trajectory = propagator.trajectory(&psi0.ensemble())?;
    for (i, &t) in times.iter().enumerate() {
        observe(i, Snapshot::Ensemble(&trajectory.at(t)))?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesRow {
    pub tau: f64,
    pub t: f64,
    #[serde(flatten)]
    pub record: DiagnosticsRecord,
}

/// Coherence series of one point at one cutoff.
pub fn evolve_series(point: &PointSpec, integrator: IntegratorSettings) -> Result<Vec<SeriesRow>> {
    let taus = point.schedule.taus();
    let scale = point.model.time_scale();
    let mut rows = Vec::with_capacity(taus.len());
    drive(point, &taus, integrator, |i, snap| {
        rows.push(SeriesRow { tau: taus[i], t: taus[i] / scale, record: snap.record()? });
        Ok(())
    })?;
    Ok(rows)
}

/// Reduced oscillator states at the given scaled times.
pub fn reduced_states_at(point: &PointSpec, taus: &[f64], integrator: IntegratorSettings) -> Result<Vec<QuantumState>> {
    let dim = point.model.cutoff;
    let layout = crate::hilbert::SpaceLayout::single(OSCILLATOR, dim)?;
    let mut out = Vec::with_capacity(taus.len());
    let point = match point.schedule {
        Schedule::Switch { .. } => {
            // Sampled switching only visits its own grid.
            let all = point.schedule.taus();
            let mut states = Vec::new();
            drive(point, &all, integrator, |i, snap| {
                if taus.iter().any(|t| *t == all[i]) {
                    states.push((all[i], snap.reduced()?));
                }
                Ok(())
            })?;
            for t in taus {
                let (_, rho) = states
                    .iter()
                    .find(|(s, _)| s == t)
                    .ok_or_else(|| Error::InvalidParameter(format!("τ = {t} is not on the switching grid")))?;
                out.push(QuantumState::mixed(layout.clone(), rho.clone())?);
            }
            return Ok(out);
        }
        _ => PointSpec { schedule: Schedule::Times { taus: taus.to_vec() }, ..point.clone() },
    };
    drive(&point, taus, integrator, |_, snap| {
        out.push(QuantumState::mixed(layout.clone(), hermitize(snap.reduced()?))?);
        Ok(())
    })?;
    Ok(out)
}

fn hermitize(m: DMatrix<C64>) -> DMatrix<C64> {
    (&m + m.adjoint()) * C64::new(0.5, 0.0)
}

pub fn argmax(values: &[f64]) -> usize {
    values.iter().enumerate().fold(0, |best, (i, v)| if *v > values[best] { i } else { best })
}

/// Earliest index at which `values` reaches half of its maximum.
pub fn half_max_index(values: &[f64]) -> usize {
    let half = 0.5 * values[argmax(values)];
    values.iter().position(|v| *v >= half).unwrap_or(0)
}

/// Interior strict local maxima above `floor`.
pub fn count_local_maxima(values: &[f64], floor: f64) -> usize {
    values.windows(3).filter(|w| w[1] > w[0] && w[1] >= w[2] && w[1] > floor).count()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Convergence {
    pub cutoffs: Vec<usize>,
    pub max_coherence: Vec<f64>,
    /// `|C_max(D_top) − C_max(D_next)|`; zero for a single cutoff.
    pub shift: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WignerSummary {
    pub tau: f64,
    pub center: f64,
    pub min: f64,
    pub normalization: f64,
    pub negativity_volume: f64,
    pub rotational_asymmetry: f64,
    pub coverage_warning: bool,
}

impl WignerSummary {
    pub fn of(tau: f64, grid: &WignerGrid) -> Self {
        Self {
            tau,
            center: grid.interpolate(0.0, 0.0).unwrap_or(f64::NAN),
            min: grid.min_value(),
            normalization: grid.normalization_integral,
            negativity_volume: negativity_volume(grid),
            rotational_asymmetry: grid.rotational_asymmetry(0.7),
            coverage_warning: grid.coverage_warning,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShellSummary {
    pub coherence: f64,
    pub residual: f64,
    pub leakage: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointSummary {
    pub params: BTreeMap<String, f64>,
    pub cutoff: usize,
    pub max_coherence: f64,
    pub tau_max: f64,
    pub t_max: f64,
    pub half_coherence: f64,
    pub tau_half: f64,
    pub final_tau: f64,
    pub final_coherence: f64,
    pub mean_n_at_max: f64,
    pub std_n_at_max: f64,
    pub std_n_initial: f64,
    pub max_leakage: f64,
    pub leakage_warning: bool,
    pub convergence: Convergence,
    pub shell: Option<ShellSummary>,
    pub wigner_max: Option<WignerSummary>,
    pub wigner_half: Option<WignerSummary>,
}

#[derive(Clone, Debug)]
pub struct PointResult {
    pub summary: PointSummary,
    pub series: Vec<SeriesRow>,
    pub wigner_max: Option<WignerGrid>,
    pub wigner_half: Option<WignerGrid>,
}

impl PointResult {
    pub fn coherence(&self) -> Vec<f64> {
        self.series.iter().map(|r| r.record.coherence).collect()
    }
}

/// Wigner grid for a reduced state: the configured grid or one covering it.
pub fn wigner_for(state: &QuantumState, grid: Option<&GridSpec>) -> Result<WignerGrid> {
    let grid = grid.copied().unwrap_or_else(|| GridSpec::covering(&state.populations()));
    wigner(state, &grid)
}

/// Evolves a point at every cutoff of the ladder and gathers its headline
/// values; `extras` adds Wigner grids and shell removal at the primary
/// cutoff.
pub fn run_point(config: &ScenarioConfig, point: &PointSpec) -> Result<PointResult> {
    Ok(run_point_with(config, point, |_| Vec::new())?.0)
}

/// [`run_point`], also returning the reduced oscillator states at the times
/// `extra` picks from the summary. They share one pass with the diagnostic
/// states.
pub fn run_point_with(
    config: &ScenarioConfig,
    point: &PointSpec,
    extra: impl Fn(&PointSummary) -> Vec<f64>,
) -> Result<(PointResult, Vec<(f64, QuantumState)>)> {
    let mut ladder = Vec::new();
    let mut primary = None;
    for cutoff in config.all_cutoffs() {
        let p = PointSpec { model: point.model.with_cutoff(cutoff), ..point.clone() };
        let series = evolve_series(&p, config.integrator)?;
        let cmax = series.iter().map(|r| r.record.coherence).fold(0.0, f64::max);
        ladder.push((cutoff, cmax));
        if cutoff == point.model.cutoff {
            primary = Some(series);
        }
    }
    let series = primary.expect("primary cutoff is part of the ladder");
    let shift = match ladder.as_slice() {
        [.., (_, a), (_, b)] => (b - a).abs(),
        _ => 0.0,
    };
    let convergence = Convergence {
        cutoffs: ladder.iter().map(|l| l.0).collect(),
        max_coherence: ladder.iter().map(|l| l.1).collect(),
        shift,
        converged: shift <= CONVERGENCE_THRESHOLD,
    };
    if !convergence.converged {
        log::warn!("{}: coherence shift {shift:.4} between top cutoffs", config.name);
    }
    let coherence: Vec<f64> = series.iter().map(|r| r.record.coherence).collect();
    let imax = argmax(&coherence);
    let ihalf = half_max_index(&coherence);
    let last = series.last().expect("schedules are non-empty");
    let max_leakage = series.iter().map(|r| r.record.leakage).fold(0.0, f64::max);
    let mut summary = PointSummary {
        params: point.params.clone(),
        cutoff: point.model.cutoff,
        max_coherence: coherence[imax],
        tau_max: series[imax].tau,
        t_max: series[imax].t,
        half_coherence: coherence[ihalf],
        tau_half: series[ihalf].tau,
        final_tau: last.tau,
        final_coherence: last.record.coherence,
        mean_n_at_max: series[imax].record.mean_n,
        std_n_at_max: series[imax].record.std_n,
        std_n_initial: series[0].record.std_n,
        max_leakage,
        leakage_warning: max_leakage > LEAKAGE_WARNING,
        convergence,
        shell: None,
        wigner_max: None,
        wigner_half: None,
    };
    let (mut wigner_max, mut wigner_half) = (None, None);
    let extra_taus = extra(&summary);
    let diagnostics = config.diagnostics.wigner || config.diagnostics.shell_removal;
    let mut wanted = extra_taus.clone();
    if diagnostics {
        wanted.extend([series[ihalf].tau, series[imax].tau]);
    }
    let wanted = dedup(&wanted);
    let states = if wanted.is_empty() { Vec::new() } else { reduced_states_at(point, &wanted, config.integrator)? };
    let state_at = |tau: f64| &states[wanted.iter().position(|t| *t == tau).expect("requested time")];
    if diagnostics {
        let (half_state, max_state) = (state_at(series[ihalf].tau), state_at(series[imax].tau));
        if config.diagnostics.shell_removal {
            let removed = remove_gaussian_shell(max_state)?;
            summary.shell = Some(ShellSummary {
                coherence: crate::observables::coherence(&removed.state),
                residual: quadrature_stats_of_matrix(&removed.state.density_matrix()).shell_residual(),
                leakage: removed.residuals.leakage,
                iterations: removed.iterations,
            });
        }
        if config.diagnostics.wigner {
            let wm = wigner_for(max_state, config.wigner_grid.as_ref())?;
            let wh = wigner_for(half_state, config.wigner_grid.as_ref())?;
            summary.wigner_max = Some(WignerSummary::of(summary.tau_max, &wm));
            summary.wigner_half = Some(WignerSummary::of(summary.tau_half, &wh));
            wigner_max = Some(wm);
            wigner_half = Some(wh);
        }
    }
    let extras = extra_taus.iter().map(|&t| (t, state_at(t).clone())).collect();
    Ok((PointResult { summary, series, wigner_max, wigner_half }, extras))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunMetadata {
    pub name: String,
    pub study: Study,
    pub config_sha256: String,
    pub cutoff: usize,
    pub cutoff_ladder: Vec<usize>,
    pub convergence_threshold: f64,
    pub leakage_warning: f64,
    pub integrator_tolerance: f64,
}

impl RunMetadata {
    fn of(config: &ScenarioConfig) -> Self {
        Self {
            name: config.name.clone(),
            study: config.study,
            config_sha256: config.hash(),
            cutoff: config.model.cutoff,
            cutoff_ladder: config.all_cutoffs(),
            convergence_threshold: CONVERGENCE_THRESHOLD,
            leakage_warning: LEAKAGE_WARNING,
            integrator_tolerance: config.integrator.tolerance,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub metadata: RunMetadata,
    pub config: ScenarioConfig,
    pub axes: Vec<(String, Vec<f64>)>,
    pub points: Vec<PointResult>,
}

impl SweepResult {
    /// Point with the largest maximum coherence.
    pub fn best(&self) -> &PointResult {
        let maxima: Vec<f64> = self.points.iter().map(|p| p.summary.max_coherence).collect();
        &self.points[argmax(&maxima)]
    }

    pub fn summary_json(&self) -> Value {
        let best = &self.best().summary;
        serde_json::json!({
            "metadata": self.metadata,
            "max_coherence": best.max_coherence,
            "tau_max": best.tau_max,
            "half_coherence": best.half_coherence,
            "tau_half": best.tau_half,
            "final_coherence": best.final_coherence,
            "converged": self.points.iter().all(|p| p.summary.convergence.converged),
            "points": self.points.iter().map(|p| &p.summary).collect::<Vec<_>>(),
        })
    }
}

/// Evolves every sweep point of `config` (in parallel, merged in order).
pub fn run_scenario(config: &ScenarioConfig) -> Result<SweepResult> {
    config.validate()?;
    let points = expand_points(config)?;
    let results: Vec<PointResult> =
        points.par_iter().map(|p| run_point(config, p)).collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        metadata: RunMetadata::of(config),
        config: config.clone(),
        axes: config.sweep.axes().into_iter().map(|(n, v)| (n.to_string(), v)).collect(),
        points: results,
    })
}

const SERIES_HEADER: [&str; 12] =
    ["tau", "t", "coherence", "entropy", "mean_N", "std_N", "mean_X", "mean_P", "V11", "V22", "V12", "leakage"];

pub fn write_series_csv(rows: &[SeriesRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SERIES_HEADER)?;
    for r in rows {
        let d = &r.record;
        let fields = [
            r.tau,
            r.t,
            d.coherence,
            d.entropy,
            d.mean_n,
            d.std_n,
            d.mean_x,
            d.mean_p,
            d.covariance[0][0],
            d.covariance[1][1],
            d.covariance[0][1],
            d.leakage,
        ];
        w.write_record(fields.iter().map(|x| format!("{x:.12e}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json(value: &impl Serialize, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn write_wigner(grid: &WignerGrid, dir: &Path, stem: &str) -> Result<()> {
    fs::write(dir.join(format!("{stem}.txt")), grid.to_text())?;
    let file = fs::File::create(dir.join(format!("{stem}.csv")))?;
    grid.write_csv(std::io::BufWriter::new(file))
}

/// Persists a sweep: `config.json`, `summary.json`, `diagnostics.csv` (one
/// point) or `diagnostics_<i>.csv` plus `sweep.csv` (several), and Wigner
/// grids at the maximum and half-maximum of the best point.
pub fn write_artifacts(result: &SweepResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_json(&result.config, &dir.join("config.json"))?;
    write_json(&result.summary_json(), &dir.join("summary.json"))?;
    if let [point] = result.points.as_slice() {
        write_series_csv(&point.series, &dir.join("diagnostics.csv"))?;
    } else {
        let mut w = csv::Writer::from_path(dir.join("sweep.csv"))?;
        let mut header: Vec<String> = vec!["index".into()];
        header.extend(result.axes.iter().map(|(n, _)| n.clone()));
        header.extend(["max_coherence", "tau_max", "tau_half", "shift", "converged"].map(String::from));
        w.write_record(&header)?;
        for (i, p) in result.points.iter().enumerate() {
            write_series_csv(&p.series, &dir.join(format!("diagnostics_{i}.csv")))?;
            let s = &p.summary;
            let mut row = vec![i.to_string()];
            row.extend(result.axes.iter().map(|(n, _)| format!("{:.12e}", s.params[n])));
            row.extend([s.max_coherence, s.tau_max, s.tau_half, s.convergence.shift].map(|x| format!("{x:.12e}")));
            row.push(s.convergence.converged.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
    }
    let best = result.best();
    if let (Some(wm), Some(wh)) = (&best.wigner_max, &best.wigner_half) {
        write_wigner(wm, dir, "wigner_max")?;
        write_wigner(wh, dir, "wigner_half")?;
    }
    Ok(())
}

/// Output directory: the config's own path, else `<root>/<name>`.
pub fn output_dir(config: &ScenarioConfig, root: &Path) -> PathBuf {
    config.output.clone().unwrap_or_else(|| root.join(&config.name))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoherenceBar {
    pub n: usize,
    pub max_coherence: f64,
    pub tau_max: f64,
    pub shell_removed: Option<f64>,
    pub mean_n: f64,
    pub std_n: f64,
}

/// Maximum coherence over the schedule for each initial Fock index, with the
/// coherence left after Gaussian-shell removal when requested.
pub fn max_coherence_vs_n(config: &ScenarioConfig, n_list: &[usize]) -> Result<(SweepResult, Vec<CoherenceBar>)> {
    let mut config = config.clone();
    config.sweep.n = Some(n_list.to_vec());
    let result = run_scenario(&config)?;
    let bars = result
        .points
        .iter()
        .map(|p| {
            let s = &p.summary;
            CoherenceBar {
                n: s.params["n"] as usize,
                max_coherence: s.max_coherence,
                tau_max: s.tau_max,
                shell_removed: s.shell.as_ref().map(|sh| sh.coherence),
                mean_n: s.mean_n_at_max,
                std_n: s.std_n_at_max,
            }
        })
        .collect();
    Ok((result, bars))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LandscapeFamily {
    pub n: usize,
    pub g_ratio: f64,
    pub taus: Vec<f64>,
    pub coherence: Vec<f64>,
    pub max_coherence: f64,
    pub tau_max: f64,
    pub coherence_at_pi: f64,
    pub local_maxima: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Landscape {
    pub families: Vec<LandscapeFamily>,
    /// Per `n`, the coupling ratio maximizing the coherence at `τ = π`.
    pub argmax_g_at_pi: Vec<(usize, f64)>,
}

/// Coherence traces for every `(n, G)` pair over `taus` (with `π` added).
pub fn coherence_landscape(
    config: &ScenarioConfig,
    n_list: &[usize],
    g_list: &[f64],
    taus: &[f64],
) -> Result<Landscape> {
    let mut grid: Vec<f64> = taus.to_vec();
    if !grid.iter().any(|t| (t - PI).abs() < 1e-12) {
        grid.push(PI);
    }
    grid.sort_by(f64::total_cmp);
    let mut config = config.clone();
    config.sweep = SweepAxes { n: Some(n_list.to_vec()), g_ratio: Some(g_list.to_vec()), ..Default::default() };
    config.schedule = Schedule::Times { taus: grid.clone() };
    config.validate()?;
    let points = expand_points(&config)?;
    let families: Vec<LandscapeFamily> = points
        .par_iter()
        .map(|p| {
            let series = evolve_series(p, config.integrator)?;
            let c: Vec<f64> = series.iter().map(|r| r.record.coherence).collect();
            let imax = argmax(&c);
            let ipi = grid.iter().position(|t| (t - PI).abs() < 1e-12).expect("π is on the grid");
            Ok(LandscapeFamily {
                n: p.params["n"] as usize,
                g_ratio: p.params["G"],
                taus: grid.clone(),
                max_coherence: c[imax],
                tau_max: grid[imax],
                coherence_at_pi: c[ipi],
                local_maxima: count_local_maxima(&c, 1e-9),
                coherence: c,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let argmax_g_at_pi = n_list
        .iter()
        .map(|&n| {
            let fam: Vec<&LandscapeFamily> = families.iter().filter(|f| f.n == n).collect();
            let values: Vec<f64> = fam.iter().map(|f| f.coherence_at_pi).collect();
            (n, fam[argmax(&values)].g_ratio)
        })
        .collect();
    Ok(Landscape { families, argmax_g_at_pi })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeakCouplingPoint {
    pub omega: f64,
    pub big_omega: f64,
    pub max_coherence: f64,
    pub tau_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeakCouplingScan {
    pub n: usize,
    pub baseline: f64,
    pub points: Vec<WeakCouplingPoint>,
    pub best: WeakCouplingPoint,
    pub beats_baseline: bool,
}

/// Maximum coherence over `(ω, Ω)` for initial Fock index `n`, compared with
/// the interaction-only baseline `ω = Ω = 0`.
pub fn weak_coupling_scan(config: &ScenarioConfig, n: usize, omegas: &[f64], big_omegas: &[f64]) -> Result<WeakCouplingScan> {
    let mut config = config.clone();
    config.cutoff_ladder.clear();
    config.diagnostics = DiagnosticFlags::default();
    config.sweep = SweepAxes { n: Some(vec![n]), omega: Some(omegas.to_vec()), big_omega: Some(big_omegas.to_vec()), ..Default::default() };
    let baseline_config = ScenarioConfig {
        sweep: SweepAxes { n: Some(vec![n]), ..Default::default() },
        model: ModelSpec { omega: 0.0, big_omega: 0.0, ..config.model.clone() },
        ..config.clone()
    };
    let baseline = run_scenario(&baseline_config)?.points[0].summary.max_coherence;
    let result = run_scenario(&config)?;
    let points: Vec<WeakCouplingPoint> = result
        .points
        .iter()
        .map(|p| WeakCouplingPoint {
            omega: p.summary.params["omega"],
            big_omega: p.summary.params["Omega"],
            max_coherence: p.summary.max_coherence,
            tau_max: p.summary.tau_max,
        })
        .collect();
    let maxima: Vec<f64> = points.iter().map(|p| p.max_coherence).collect();
    let best = points[argmax(&maxima)].clone();
    Ok(WeakCouplingScan { n, baseline, beats_baseline: best.max_coherence > baseline + 1e-9, best, points })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VariantReport {
    pub name: String,
    pub summary: PointSummary,
    /// Negativity volume at the half-maximum time, midway to the end and at
    /// the end of the schedule.
    pub negativity_samples: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RobustnessReport {
    pub metadata: RunMetadata,
    pub variants: Vec<VariantReport>,
}

/// Applies a variant's merge patch to the base config.
pub fn variant_config(base: &ScenarioConfig, variant: &Variant) -> Result<ScenarioConfig> {
    let mut value = base.to_value();
    merge_patch(&mut value, &variant.patch);
    let mut config = ScenarioConfig::from_value(value)?;
    config.name = format!("{}-{}", base.name, variant.name);
    config.variants.clear();
    config.study = Study::Scenario;
    Ok(config)
}

/// Runs each variant and samples the Wigner negativity along its trace.
pub fn robustness_suite(base: &ScenarioConfig) -> Result<(RobustnessReport, Vec<SweepResult>)> {
    let mut reports = Vec::new();
    let mut runs = Vec::new();
    for variant in &base.variants {
        let mut config = variant_config(base, variant)?;
        config.diagnostics.wigner = true;
        config.validate()?;
        let spec = expand_points(&config)?
            .into_iter()
            .next()
            .ok_or_else(|| Error::Config("robustness variants need a single point".into()))?;
        let (point, later) = run_point_with(&config, &spec, |s| vec![0.5 * (s.tau_half + s.final_tau), s.final_tau])?;
        let s = &point.summary;
        let half_grid = point.wigner_half.as_ref().expect("Wigner grids were requested");
        let mut samples = vec![(s.tau_half, negativity_volume(half_grid))];
        for (tau, state) in &later {
            samples.push((*tau, negativity_volume(&wigner_for(state, config.wigner_grid.as_ref())?)));
        }
        let result = SweepResult {
            metadata: RunMetadata::of(&config),
            axes: config.sweep.axes().into_iter().map(|(n, v)| (n.to_string(), v)).collect(),
            config,
            points: vec![point],
        };
        reports.push(VariantReport {
            name: variant.name.clone(),
            summary: result.points[0].summary.clone(),
            negativity_samples: samples,
        });
        runs.push(result);
    }
    Ok((RobustnessReport { metadata: RunMetadata::of(base), variants: reports }, runs))
}

fn dedup(taus: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = taus.to_vec();
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompletedTrace {
    pub beta: f64,
    pub pump_cutoff: usize,
    pub coherence: Vec<f64>,
    pub max_leakage: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompletedRun {
    pub taus: Vec<f64>,
    pub traces: Vec<CompletedTrace>,
    /// Two-body combined-absorption model with the same effective coupling.
    pub effective: Vec<f64>,
    /// Largest relative deviation of the largest-`β` trace from the
    /// effective model over `0 < τ ≤ tau_compare` where it exceeds 1e-3.
    pub max_relative_deviation: f64,
    pub tau_compare: f64,
}

/// Completed (pumped) model for each `β`, against the effective model.
pub fn completed_model_run(config: &ScenarioConfig, betas: &[f64], tau_compare: f64) -> Result<CompletedRun> {
    let taus = config.schedule.taus();
    let base = PointSpec {
        params: BTreeMap::new(),
        model: config.model.clone(),
        initial: config.initial.clone(),
        schedule: config.schedule.clone(),
    };
    let traces: Vec<CompletedTrace> = betas
        .par_iter()
        .map(|&beta| {
            let mut p = base.clone();
            p.model.pump = Some(C64::new(beta, 0.0));
            p.model.pump_cutoff = None;
            let series = evolve_series(&p, config.integrator)?;
            Ok(CompletedTrace {
                beta,
                pump_cutoff: p.model.pump_dim().unwrap_or(0),
                coherence: series.iter().map(|r| r.record.coherence).collect(),
                max_leakage: series.iter().map(|r| r.record.leakage).fold(0.0, f64::max),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut eff = base.clone();
    eff.model.pump = None;
    eff.model.pump_cutoff = None;
    let effective: Vec<f64> = evolve_series(&eff, config.integrator)?.iter().map(|r| r.record.coherence).collect();
    let largest = traces.iter().max_by(|a, b| a.beta.abs().total_cmp(&b.beta.abs()));
    let max_relative_deviation = largest.map_or(0.0, |tr| {
        taus.iter()
            .zip(tr.coherence.iter().zip(&effective))
            .filter(|(t, (_, e))| **t > 0.0 && **t <= tau_compare + 1e-12 && **e > 1e-3)
            .map(|(_, (c, e))| (c - e).abs() / e)
            .fold(0.0, f64::max)
    });
    Ok(CompletedRun { taus, traces, effective, max_relative_deviation, tau_compare })
}

/// Composite state at `τ = diagnostics.wigner_tau` reduced to the oscillator
/// and its Wigner grid.
pub fn wigner_snapshot(config: &ScenarioConfig) -> Result<(QuantumState, WignerGrid)> {
    let point = &expand_points(config)?[0];
    let tau = config.diagnostics.wigner_tau;
    let state = reduced_states_at(point, &[tau], config.integrator)?.remove(0);
    let grid = wigner_for(&state, config.wigner_grid.as_ref())?;
    Ok((state, grid))
}
