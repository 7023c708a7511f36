//! Time evolution: spectral propagation of closed systems, piecewise
//! switching between interactions, the closed-form switching amplitudes,
//! Lindblad integration and sparse Krylov-free propagation for large spaces.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{Ensemble, Operator, QuantumState, SpaceLayout, SparseOperator, C64};
use crate::linalg::{hermitian_eigenvalues, HermitianEigen};
use crate::models::jc_interaction_on;
use crate::{OSCILLATOR, QUBIT};

/// Number of top Fock levels whose population counts as leakage.
pub const LEAKAGE_LEVELS: usize = 5;
/// Leakage above this raises the warning flag of an [`EvolutionResult`].
pub const LEAKAGE_WARNING: f64 = 1e-6;

const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Debug)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    pub states: Vec<QuantumState>,
    pub leakage: Vec<f64>,
    pub leakage_warning: bool,
}

impl EvolutionResult {
    fn new() -> Self {
        Self { times: Vec::new(), states: Vec::new(), leakage: Vec::new(), leakage_warning: false }
    }

    fn push(&mut self, t: f64, state: QuantumState) {
        let leak = leakage(&state.populations(), state.layout());
        self.leakage_warning |= leak > LEAKAGE_WARNING;
        self.times.push(t);
        self.leakage.push(leak);
        self.states.push(state);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> Option<&QuantumState> {
        self.states.last()
    }
}

/// Truncated bosonic factors: every non-qubit factor with more than
/// `2 · LEAKAGE_LEVELS` levels.
pub fn truncated_factors(layout: &SpaceLayout) -> Vec<&str> {
    layout
        .factors()
        .iter()
        .filter(|f| f.label != QUBIT && f.dim > 2 * LEAKAGE_LEVELS)
        .map(|f| f.label.as_str())
        .collect()
}

/// Largest population held in the top [`LEAKAGE_LEVELS`] levels of any
/// truncated factor, from the basis populations of a composite state.
pub fn leakage(populations: &[f64], layout: &SpaceLayout) -> f64 {
    let mut worst: f64 = 0.0;
    for label in truncated_factors(layout) {
        let (_, dim, right) = layout.split_at(layout.position(label).expect("label from layout"));
        let top: f64 = populations
            .iter()
            .enumerate()
            .filter(|(i, _)| (i / right) % dim >= dim - LEAKAGE_LEVELS)
            .map(|(_, p)| p)
            .sum();
        worst = worst.max(top);
    }
    worst
}

pub fn ensemble_leakage(ens: &Ensemble) -> f64 {
    let pops: Vec<f64> = ens.columns().row_iter().map(|r| r.iter().map(|z| z.norm_sqr()).sum()).collect();
    leakage(&pops, ens.layout())
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter("times must be finite".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("times must be strictly increasing".into()));
    }
    Ok(())
}

/// `exp(−iHt)` through one Hermitian eigendecomposition, reusable for any
/// number of times.
#[derive(Clone, Debug)]
pub struct Propagator {
    layout: SpaceLayout,
    eig: HermitianEigen,
}

impl Propagator {
    pub fn new(h: &Operator) -> Result<Self> {
        if !h.is_hermitian() {
            return Err(Error::NotHermitian(h.hermiticity_defect()));
        }
        Ok(Self { layout: h.layout().clone(), eig: HermitianEigen::new(h.matrix()) })
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eig.values
    }

    pub fn unitary(&self, t: f64) -> Operator {
        let u = self.eig.map_values(|l| (-I * l * t).exp());
        Operator::from_matrix(self.layout.clone(), u).expect("square matrix on the propagator layout")
    }

    /// Precomputes the eigenbasis coefficients of `initial`.
    pub fn trajectory(&self, initial: &Ensemble) -> Result<Trajectory<'_>> {
        if initial.layout() != &self.layout {
            return Err(Error::Layout("state and Hamiltonian layouts differ".into()));
        }
        Ok(Trajectory { propagator: self, coeffs: self.eig.to_eigenbasis(initial.columns()) })
    }

    pub fn evolve(&self, state: &QuantumState, t: f64) -> Result<QuantumState> {
        Ok(self.trajectory(&state.ensemble())?.at(t).to_state())
    }
}

/// An initial ensemble expressed in the eigenbasis of a [`Propagator`].
#[derive(Clone, Debug)]
pub struct Trajectory<'a> {
    propagator: &'a Propagator,
    coeffs: DMatrix<C64>,
}

impl Trajectory<'_> {
    pub fn at(&self, t: f64) -> Ensemble {
        let eig = &self.propagator.eig;
        let mut c = self.coeffs.clone();
        for (mut row, &l) in c.row_iter_mut().zip(&eig.values) {
            row *= (-I * l * t).exp();
        }
        Ensemble::new(self.propagator.layout.clone(), eig.out_of_eigenbasis(&c))
            .expect("propagated columns keep the layout")
    }
}

/// `ψ(t) = exp(−iHt) ψ0` at each requested time.
pub fn unitary_evolve(h: &Operator, psi0: &QuantumState, times: &[f64]) -> Result<EvolutionResult> {
    check_times(times)?;
    let propagator = Propagator::new(h)?;
    let trajectory = propagator.trajectory(&psi0.ensemble())?;
    let mut result = EvolutionResult::new();
    for &t in times {
        result.push(t, trajectory.at(t).to_state());
    }
    Ok(result)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwitchSegment {
    pub order: u32,
    pub coupling: f64,
    pub duration: f64,
}

/// Applies `exp(−iV^(k_j) t_j)` segment by segment, recording the initial
/// state and the state after every segment of nonzero duration.
pub fn sequential_switch(segments: &[SwitchSegment], psi0: &QuantumState) -> Result<EvolutionResult> {
    sequential_switch_sampled(segments, psi0, 1)
}

/// As [`sequential_switch`], with `samples` equally spaced records inside
/// each segment (the last one at its end).
pub fn sequential_switch_sampled(
    segments: &[SwitchSegment],
    psi0: &QuantumState,
    samples: usize,
) -> Result<EvolutionResult> {
    if samples == 0 {
        return Err(Error::InvalidParameter("at least one sample per segment is required".into()));
    }
    let mut result = EvolutionResult::new();
    result.push(0.0, psi0.clone());
    let mut state = psi0.ensemble();
    let mut elapsed = 0.0;
    for seg in segments {
        if !(seg.duration >= 0.0 && seg.duration.is_finite()) {
            return Err(Error::InvalidParameter(format!("segment duration {} must be ≥ 0", seg.duration)));
        }
        if seg.duration == 0.0 {
            continue;
        }
        let v = jc_interaction_on(psi0.layout(), seg.order, seg.coupling)?.to_dense();
        let propagator = Propagator::new(&v)?;
        let trajectory = propagator.trajectory(&state)?;
        for j in 1..=samples {
            let dt = seg.duration * j as f64 / samples as f64;
            result.push(elapsed + dt, trajectory.at(dt).to_state());
        }
        state = trajectory.at(seg.duration);
        elapsed += seg.duration;
    }
    Ok(result)
}

/// Product formula `e^(−iV^(1)t) e^(−iV^(2)t) ψ0`, first-order accurate
/// against evolution under `V^(1) + V^(2)`.
pub fn bch_first_order(g1: f64, g2: f64, t: f64, psi0: &QuantumState) -> Result<QuantumState> {
    let layout = psi0.layout();
    let second = Propagator::new(&jc_interaction_on(layout, 2, g2)?.to_dense())?;
    let first = Propagator::new(&jc_interaction_on(layout, 1, g1)?.to_dense())?;
    first.evolve(&second.evolve(psi0, t)?, t)
}

/// Amplitudes of `|g⟩(α|n⟩ + β|n+1⟩) + |e⟩(γ|n−1⟩ + δ|n−2⟩)` reached from
/// `|g, n⟩` by `V^(1)` for time `t` followed by `V^(2)` for time `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SwitchCoefficients {
    pub n: usize,
    pub alpha: C64,
    pub beta: C64,
    pub gamma: C64,
    pub delta: C64,
}

impl SwitchCoefficients {
    pub fn norm_sqr(&self) -> f64 {
        [self.alpha, self.beta, self.gamma, self.delta].iter().map(|z| z.norm_sqr()).sum()
    }

    /// The state on qubit ⊗ oscillator of the given cutoff.
    pub fn to_state(&self, cutoff: usize) -> Result<QuantumState> {
        if self.n + 1 >= cutoff {
            return Err(Error::Truncation(format!("|{}⟩ needs a cutoff above {cutoff}", self.n + 1)));
        }
        let layout = SpaceLayout::new([(QUBIT, 2), (OSCILLATOR, cutoff)])?;
        let mut psi = DVector::zeros(layout.total_dim());
        let n = self.n;
        for (q, m, amp) in [(0, n, self.alpha), (0, n + 1, self.beta), (1, n - 1, self.gamma), (1, n - 2, self.delta)] {
            psi[layout.flat_index(&[q, m])?] = amp;
        }
        QuantumState::pure(layout, psi)
    }
}

pub fn switch_coefficients(n: usize, g1: f64, g2: f64, t: f64) -> Result<SwitchCoefficients> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("switching amplitudes need n ≥ 2, got {n}")));
    }
    if t.is_nan() || t < 0.0 {
        return Err(Error::InvalidParameter(format!("time {t} must be ≥ 0")));
    }
    let nf = n as f64;
    let lin = g1 * nf.sqrt() * t;
    let down = g2 * (nf * (nf - 1.0)).sqrt() * t;
    let up = g2 * (nf * (nf + 1.0)).sqrt() * t;
    Ok(SwitchCoefficients {
        n,
        alpha: C64::new(down.cos() * lin.cos(), 0.0),
        beta: C64::new(-up.sin() * lin.sin(), 0.0),
        gamma: C64::new(0.0, -up.cos() * lin.sin()),
        delta: C64::new(0.0, -down.sin() * lin.cos()),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LindbladOptions {
    /// Local error target per step (largest entry of the step-doubling
    /// difference).
    pub tolerance: f64,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    /// Check the smallest eigenvalue of every recorded state against
    /// `−max(POSITIVITY_TOL, accepted steps × tolerance)`.
    pub check_positivity: bool,
}

impl Default for LindbladOptions {
    fn default() -> Self {
        Self { tolerance: 1e-10, initial_step: 1e-2, min_step: 1e-12, max_step: f64::INFINITY, check_positivity: true }
    }
}

pub const POSITIVITY_TOL: f64 = 1e-7;

struct Workspace {
    scratch: DMatrix<C64>,
    y: DMatrix<C64>,
    k1: DMatrix<C64>,
    k2: DMatrix<C64>,
    k3: DMatrix<C64>,
    k4: DMatrix<C64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        let z = || DMatrix::zeros(n, n);
        Self { scratch: z(), y: z(), k1: z(), k2: z(), k3: z(), k4: z() }
    }
}

/// Fills `out` elementwise from its flat (column-major) index.
fn fill(out: &mut DMatrix<C64>, f: impl Fn(usize) -> C64) {
    for (i, v) in out.as_mut_slice().iter_mut().enumerate() {
        *v = f(i);
    }
}

/// Replaces `m` by its Hermitian part in place.
fn symmetrize(m: &mut DMatrix<C64>) {
    let n = m.nrows();
    let s = m.as_mut_slice();
    for j in 0..n {
        s[j * n + j].im = 0.0;
        for i in 0..j {
            let avg = (s[j * n + i] + s[i * n + j].conj()) * 0.5;
            s[j * n + i] = avg;
            s[i * n + j] = avg.conj();
        }
    }
}

/// Integrator for `dρ/dt = −i[H, ρ] + Σ_L (LρL† − ½{L†L, ρ})`.
///
/// Diagonal jump operators and the diagonal of `H` act elementwise and are
/// integrated exactly through an integrating factor (Lawson RK4); the rest of
/// the Hamiltonian and any non-diagonal jump operators are treated explicitly. Steps are controlled by step
/// doubling with Richardson extrapolation.
#[derive(Clone, Debug)]
pub struct LindbladSolver {
    h: SparseOperator,
    rates: DMatrix<C64>,
    explicit: Vec<(SparseOperator, SparseOperator)>,
    options: LindbladOptions,
}

fn sparse_hermiticity_defect(h: &SparseOperator) -> f64 {
    h.triplets().map(|(r, c, v)| (v - h.get(c, r).conj()).norm()).fold(0.0, f64::max)
}

impl LindbladSolver {
    pub fn new(h: &SparseOperator, jumps: &[SparseOperator], options: LindbladOptions) -> Result<Self> {
        let defect = sparse_hermiticity_defect(h);
        if defect > crate::hilbert::HERMITIAN_TOL {
            return Err(Error::NotHermitian(defect));
        }
        let n = h.dim();
        let h_diag: Vec<C64> = (0..n).map(|i| h.get(i, i)).collect();
        let mut rates = DMatrix::from_fn(n, n, |i, j| -I * (h_diag[i] - h_diag[j]));
        let off_diagonal = h.triplets().filter(|&(r, c, _)| r != c).collect();
        let h_off = SparseOperator::from_triplets(h.layout().clone(), off_diagonal)?;
        let mut explicit = Vec::new();
        for l in jumps {
            if l.layout() != h.layout() {
                return Err(Error::Layout("jump operator layout differs from the Hamiltonian".into()));
            }
            match l.as_diagonal() {
                Some(d) => {
                    for i in 0..n {
                        for j in 0..n {
                            rates[(i, j)] += d[i] * d[j].conj() - 0.5 * (d[i].norm_sqr() + d[j].norm_sqr());
                        }
                    }
                }
                None => explicit.push((l.clone(), l.adjoint().matmul(l)?)),
            }
        }
        Ok(Self { h: h_off, rates, explicit, options })
    }

    /// Writes the explicit part of the generator applied to `rho` into `out`.
    fn rhs_into(&self, rho: &DMatrix<C64>, scratch: &mut DMatrix<C64>, out: &mut DMatrix<C64>) {
        let n = rho.nrows();
        self.h.mul_dense_into(rho, scratch);
        let a = scratch.as_slice();
        for (j, col) in out.as_mut_slice().chunks_exact_mut(n).enumerate() {
            for (i, o) in col.iter_mut().enumerate() {
                *o = -I * (a[j * n + i] - a[i * n + j].conj());
            }
        }
        for (l, ldl) in &self.explicit {
            let lr = l.mul_dense(rho);
            let jump = l.mul_dense(&lr.adjoint());
            let k = ldl.mul_dense(rho);
            *out += jump - (&k + k.adjoint()) * C64::new(0.5, 0.0);
        }
    }

    fn factor(&self, dt: f64) -> DMatrix<C64> {
        self.rates.map(|g| (g * dt).exp())
    }

    /// One Lawson RK4 step of length `dt` from `rho` into `out`, given
    /// `e = exp(rates · dt/2)`.
    fn lawson_step(&self, rho: &DMatrix<C64>, dt: f64, e: &DMatrix<C64>, ws: &mut Workspace, out: &mut DMatrix<C64>) {
        let Workspace { scratch, y, k1, k2, k3, k4 } = ws;
        let h = dt / 2.0;
        let (r, e) = (rho.as_slice(), e.as_slice());
        self.rhs_into(rho, scratch, k1);
        fill(y, |i| (r[i] + k1[i] * h) * e[i]);
        self.rhs_into(y, scratch, k2);
        fill(y, |i| r[i] * e[i] + k2[i] * h);
        self.rhs_into(y, scratch, k3);
        fill(y, |i| (r[i] * e[i] + k3[i] * dt) * e[i]);
        self.rhs_into(y, scratch, k4);
        let (k1, k2, k3, k4) = (k1.as_slice(), k2.as_slice(), k3.as_slice(), k4.as_slice());
        fill(out, |i| {
            let ee = e[i] * e[i];
            r[i] * ee + (k1[i] * ee + (k2[i] + k3[i]) * e[i] * 2.0 + k4[i]) * (dt / 6.0)
        });
    }

    /// Integrates from `ρ0` at `t = 0`, calling `observer` at every requested
    /// time (including 0 when listed).
    pub fn run(
        &self,
        rho0: &QuantumState,
        times: &[f64],
        mut observer: impl FnMut(f64, &QuantumState) -> Result<()>,
    ) -> Result<()> {
        check_times(times)?;
        if times.first().is_some_and(|&t| t < 0.0) {
            return Err(Error::InvalidParameter("times must be ≥ 0".into()));
        }
        if rho0.layout() != self.h.layout() {
            return Err(Error::Layout("state and Hamiltonian layouts differ".into()));
        }
        let opts = self.options;
        let mut rho = rho0.density_matrix();
        let mut t = 0.0;
        let mut dt = opts.initial_step.min(opts.max_step);
        let mut ws = Workspace::new(rho.nrows());
        let mut accepted_steps = 0usize;
        let (mut full, mut midpoint, mut halves) = (rho.clone(), rho.clone(), rho.clone());
        for &target in times {
            while t < target {
                let step = dt.min(target - t);
                let quarter = self.factor(step / 4.0);
                let half = quarter.component_mul(&quarter);
                self.lawson_step(&rho, step, &half, &mut ws, &mut full);
                self.lawson_step(&rho, step / 2.0, &quarter, &mut ws, &mut midpoint);
                self.lawson_step(&midpoint, step / 2.0, &quarter, &mut ws, &mut halves);
                let err = halves.iter().zip(full.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / 15.0;
                let accepted = err.is_finite() && err <= opts.tolerance;
                if accepted {
                    accepted_steps += 1;
                    let (hv, fv) = (halves.as_slice(), full.as_slice());
                    fill(&mut rho, |i| hv[i] + (hv[i] - fv[i]) / 15.0);
                    symmetrize(&mut rho);
                    t = if step >= target - t { target } else { t + step };
                }
                let factor = if !err.is_finite() {
                    0.2
                } else if err == 0.0 {
                    4.0
                } else {
                    (0.9 * (opts.tolerance / err).powf(0.2)).clamp(0.2, 4.0)
                };
                // A step clipped to land on an output time says nothing about dt.
                if !(accepted && step < dt) {
                    dt = (step * factor).min(opts.max_step);
                }
                if dt < opts.min_step {
                    return Err(Error::Integration {
                        time_reached: t,
                        message: format!("step size {dt:e} fell below {:e}", opts.min_step),
                    });
                }
            }
            if opts.check_positivity {
                let min = hermitian_eigenvalues(&rho).into_iter().fold(f64::INFINITY, f64::min);
                if min < -POSITIVITY_TOL.max(accepted_steps as f64 * opts.tolerance) {
                    return Err(Error::Integration {
                        time_reached: t,
                        message: format!("density matrix lost positivity (eigenvalue {min:e})"),
                    });
                }
            }
            observer(target, &QuantumState::mixed_unchecked(rho0.layout().clone(), rho.clone()))?;
        }
        Ok(())
    }
}

pub fn lindblad_evolve(h: &Operator, jumps: &[Operator], rho0: &QuantumState, times: &[f64]) -> Result<EvolutionResult> {
    lindblad_evolve_with(h, jumps, rho0, times, LindbladOptions::default())
}

pub fn lindblad_evolve_with(
    h: &Operator,
    jumps: &[Operator],
    rho0: &QuantumState,
    times: &[f64],
    options: LindbladOptions,
) -> Result<EvolutionResult> {
    let jumps: Vec<SparseOperator> = jumps.iter().map(Operator::to_sparse).collect();
    let solver = LindbladSolver::new(&h.to_sparse(), &jumps, options)?;
    let mut result = EvolutionResult::new();
    solver.run(rho0, times, |t, rho| {
        result.push(t, rho.clone());
        Ok(())
    })?;
    Ok(result)
}

/// `exp(−iHt) v` by a scaled truncated Taylor series on a sparse `H`.
pub fn expm_multiply(h: &SparseOperator, v: &DVector<C64>, t: f64) -> DVector<C64> {
    let norm = h.one_norm() * t.abs();
    let substeps = norm.ceil().max(1.0) as usize;
    let dt = t / substeps as f64;
    let mut out = v.clone();
    for _ in 0..substeps {
        let mut term = out.clone();
        for k in 1..=60 {
            term = h.matvec(&term) * (-I * dt / k as f64);
            out += &term;
            if term.norm() <= 1e-16 * out.norm() {
                break;
            }
        }
    }
    out
}

/// Propagation of a pure state under a sparse Hamiltonian without forming
/// dense matrices.
pub fn sparse_evolve(h: &SparseOperator, psi0: &QuantumState, times: &[f64]) -> Result<EvolutionResult> {
    check_times(times)?;
    let defect = sparse_hermiticity_defect(h);
    if defect > crate::hilbert::HERMITIAN_TOL {
        return Err(Error::NotHermitian(defect));
    }
    if psi0.layout() != h.layout() {
        return Err(Error::Layout("state and Hamiltonian layouts differ".into()));
    }
    let Some(psi) = psi0.as_vector() else {
        return Err(Error::InvalidState("sparse propagation needs a pure state".into()));
    };
    let mut result = EvolutionResult::new();
    let mut current = psi.clone();
    let mut t = 0.0;
    for &target in times {
        current = expm_multiply(h, &current, target - t);
        t = target;
        result.push(t, QuantumState::pure_unchecked(psi0.layout().clone(), current.clone()));
    }
    Ok(result)
}
