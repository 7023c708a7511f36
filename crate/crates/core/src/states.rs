//! Initial states: Fock, thermal, phase-randomized coherent, ground admixtures
//! (all Fock-diagonal) and coherent pump states.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{QuantumState, SpaceLayout, C64};
use crate::OSCILLATOR;

/// Largest probability mass allowed beyond the cutoff before renormalization.
pub const TAIL_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateKind {
    Fock { n: usize },
    Thermal { mean: f64 },
    PhaseRandomizedCoherent { mean: f64 },
    /// `p |0⟩⟨0| + (1 − p) |n⟩⟨n|`.
    Admixture { p: f64, n: usize },
    Coherent { beta: C64 },
    Ground,
}

fn default_target() -> String {
    OSCILLATOR.to_string()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialStateSpec {
    #[serde(flatten)]
    pub kind: StateKind,
    #[serde(default = "default_target")]
    pub target: String,
}

impl InitialStateSpec {
    pub fn new(kind: StateKind) -> Self {
        Self { kind, target: default_target() }
    }

    pub fn on(kind: StateKind, target: &str) -> Self {
        Self { kind, target: target.to_string() }
    }

    pub fn fock(n: usize) -> Self {
        Self::new(StateKind::Fock { n })
    }
}

/// Single-factor state before embedding.
#[derive(Clone, Debug, PartialEq)]
pub enum FactorState {
    Diagonal(Vec<f64>),
    Vector(DVector<C64>),
}

impl FactorState {
    fn density(&self) -> DMatrix<C64> {
        match self {
            Self::Diagonal(p) => DMatrix::from_diagonal(&DVector::from_iterator(
                p.len(),
                p.iter().map(|&x| C64::new(x, 0.0)),
            )),
            Self::Vector(v) => v * v.adjoint(),
        }
    }

    pub fn populations(&self) -> Vec<f64> {
        match self {
            Self::Diagonal(p) => p.clone(),
            Self::Vector(v) => v.iter().map(|z| z.norm_sqr()).collect(),
        }
    }
}

fn check_mean(mean: f64) -> Result<()> {
    if mean >= 0.0 && mean.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("mean occupation {mean} must be ≥ 0")))
    }
}

/// Renormalizes a distribution given its kept part and the exact total mass.
fn renormalize(mut p: Vec<f64>, tail: f64, tolerance: f64, what: &str) -> Result<Vec<f64>> {
    if tail > tolerance {
        return Err(Error::Truncation(format!(
            "{what}: mass {tail:e} beyond cutoff {} exceeds {tolerance:e}",
            p.len()
        )));
    }
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    Ok(p)
}

/// Geometric thermal populations `n̄^m / (1 + n̄)^(m+1)`.
pub fn thermal_populations(mean: f64, dim: usize, tolerance: f64) -> Result<Vec<f64>> {
    check_mean(mean)?;
    if mean == 0.0 {
        return Ok(fock_populations(0, dim));
    }
    let ln_q = (mean / (1.0 + mean)).ln();
    let p: Vec<f64> = (0..dim).map(|m| (m as f64 * ln_q).exp() / (1.0 + mean)).collect();
    let tail = (dim as f64 * ln_q).exp();
    renormalize(p, tail, tolerance, "thermal state")
}

/// Poissonian populations `e^(−n̄) n̄^m / m!`.
pub fn poisson_populations(mean: f64, dim: usize, tolerance: f64) -> Result<Vec<f64>> {
    check_mean(mean)?;
    if mean == 0.0 {
        return Ok(fock_populations(0, dim));
    }
    let mut ln_fact = 0.0;
    let p: Vec<f64> = (0..dim)
        .map(|m| {
            if m > 0 {
                ln_fact += (m as f64).ln();
            }
            (m as f64 * mean.ln() - mean - ln_fact).exp()
        })
        .collect();
    let tail = (1.0 - p.iter().sum::<f64>()).max(0.0);
    renormalize(p, tail, tolerance, "Poissonian state")
}

fn fock_populations(n: usize, dim: usize) -> Vec<f64> {
    let mut p = vec![0.0; dim];
    p[n] = 1.0;
    p
}

/// Coherent amplitudes `e^(−|β|²/2) β^m / √(m!)`.
pub fn coherent_amplitudes(beta: C64, dim: usize, tolerance: f64) -> Result<DVector<C64>> {
    if !(beta.re.is_finite() && beta.im.is_finite()) {
        return Err(Error::InvalidParameter("coherent amplitude must be finite".into()));
    }
    let mean = beta.norm_sqr();
    let weights = poisson_populations(mean, dim, tolerance)?;
    let phase = if mean > 0.0 { beta / beta.norm() } else { C64::new(1.0, 0.0) };
    Ok(DVector::from_iterator(
        dim,
        weights.iter().enumerate().map(|(m, &w)| phase.powu(m as u32) * w.sqrt()),
    ))
}

pub fn factor_state(kind: &StateKind, dim: usize, tolerance: f64) -> Result<FactorState> {
    let fock_index = |n: usize| {
        if n < dim {
            Ok(n)
        } else {
            Err(Error::Truncation(format!("Fock index {n} needs a cutoff above {dim}")))
        }
    };
    Ok(match *kind {
        StateKind::Ground => FactorState::Diagonal(fock_populations(0, dim)),
        StateKind::Fock { n } => FactorState::Diagonal(fock_populations(fock_index(n)?, dim)),
        StateKind::Thermal { mean } => FactorState::Diagonal(thermal_populations(mean, dim, tolerance)?),
        StateKind::PhaseRandomizedCoherent { mean } => {
            FactorState::Diagonal(poisson_populations(mean, dim, tolerance)?)
        }
        StateKind::Admixture { p, n } => {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!("admixture weight {p} outside [0, 1]")));
            }
            let mut pops = fock_populations(fock_index(n)?, dim);
            pops[n] = 1.0 - p;
            pops[0] += p;
            FactorState::Diagonal(pops)
        }
        StateKind::Coherent { beta } => FactorState::Vector(coherent_amplitudes(beta, dim, tolerance)?),
    })
}

/// Product state: each spec on its target factor, every other factor in its
/// ground state (qubit `g`, oscillator vacuum).
pub fn make_product_state(specs: &[InitialStateSpec], layout: &SpaceLayout) -> Result<QuantumState> {
    make_product_state_with_tail_tolerance(specs, layout, TAIL_TOLERANCE)
}

pub fn make_product_state_with_tail_tolerance(
    specs: &[InitialStateSpec],
    layout: &SpaceLayout,
    tolerance: f64,
) -> Result<QuantumState> {
    for s in specs {
        if !layout.contains(&s.target) {
            return Err(Error::Layout(format!("no factor labelled {:?}", s.target)));
        }
        if specs.iter().filter(|o| o.target == s.target).count() > 1 {
            return Err(Error::Layout(format!("factor {:?} initialised twice", s.target)));
        }
    }
    let mut parts = Vec::with_capacity(layout.factors().len());
    for f in layout.factors() {
        let kind = specs.iter().find(|s| s.target == f.label).map_or(&StateKind::Ground, |s| &s.kind);
        parts.push(factor_state(kind, f.dim, tolerance)?);
    }
    if parts.iter().all(is_pure) {
        let psi = parts
            .iter()
            .map(|p| match p {
                FactorState::Vector(v) => v.clone(),
                FactorState::Diagonal(d) => DVector::from_iterator(d.len(), d.iter().map(|&x| C64::new(x, 0.0))),
            })
            .reduce(|a, b| a.kronecker(&b))
            .expect("layouts are non-empty");
        return Ok(QuantumState::pure_unchecked(layout.clone(), psi));
    }
    let rho = parts
        .iter()
        .map(FactorState::density)
        .reduce(|a, b| a.kronecker(&b))
        .expect("layouts are non-empty");
    Ok(QuantumState::mixed_unchecked(layout.clone(), rho))
}

fn is_pure(p: &FactorState) -> bool {
    match p {
        FactorState::Vector(_) => true,
        FactorState::Diagonal(d) => d.iter().filter(|&&x| x != 0.0).count() == 1,
    }
}

/// `spec` on its target factor, every other factor in its ground state.
pub fn make_state(spec: &InitialStateSpec, layout: &SpaceLayout) -> Result<QuantumState> {
    make_product_state(std::slice::from_ref(spec), layout)
}

pub fn make_state_with_tail_tolerance(
    spec: &InitialStateSpec,
    layout: &SpaceLayout,
    tolerance: f64,
) -> Result<QuantumState> {
    make_product_state_with_tail_tolerance(std::slice::from_ref(spec), layout, tolerance)
}
