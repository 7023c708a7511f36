//! Hamiltonians and dissipators of the absorber–oscillator models, built from a
//! declarative [`ModelSpec`].
//!
//! Interactions are assembled as [`SparseOperator`]s and densified for the
//! two-factor models; the pumped three-mode model is usually too large for
//! dense storage and is consumed in sparse form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{Operator, SpaceLayout, SparseOperator, C64};
use crate::{AUX_MODE, OSCILLATOR, QUBIT};

pub const DEFAULT_CUTOFF: usize = 150;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Absorber {
    Qubit,
    /// Unsaturable absorber: a second oscillator mode `a` of the given dimension.
    Oscillator { dim: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub order: u32,
    pub coupling: f64,
}

/// Unit of the free frequencies `ω`, `Ω`, `Δ`, `ν`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyUnit {
    #[default]
    G1,
    G2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub absorber: Absorber,
    pub interactions: Vec<Interaction>,
    #[serde(default)]
    pub omega: f64,
    #[serde(default, rename = "Omega")]
    pub big_omega: f64,
    /// Detuning: when set, the oscillator term is `−Δ b†b` and `omega` is unused.
    #[serde(default, rename = "Delta")]
    pub delta: Option<f64>,
    /// Pump-mode frequency of the completed model.
    #[serde(default)]
    pub nu: Option<f64>,
    #[serde(default)]
    pub frequency_unit: FrequencyUnit,
    /// Oscillator number-dephasing rate in units of `g^(1)`.
    #[serde(default)]
    pub dephasing_rate: f64,
    /// Coherent amplitude `β` of the pump mode `a`; selects the completed
    /// model. The order-1 coupling is then the effective two-body coupling
    /// `g1 |β|`, so the trilinear term carries `coupling / |β|`.
    #[serde(default)]
    pub pump: Option<C64>,
    #[serde(default)]
    pub pump_cutoff: Option<usize>,
    #[serde(default = "default_cutoff")]
    pub cutoff: usize,
}

fn default_cutoff() -> usize {
    DEFAULT_CUTOFF
}

impl ModelSpec {
    /// Qubit absorber with the given `(order, coupling)` interactions and no
    /// free motion.
    pub fn qubit(interactions: &[(u32, f64)], cutoff: usize) -> Self {
        Self {
            absorber: Absorber::Qubit,
            interactions: interactions
                .iter()
                .map(|&(order, coupling)| Interaction { order, coupling })
                .collect(),
            omega: 0.0,
            big_omega: 0.0,
            delta: None,
            nu: None,
            frequency_unit: FrequencyUnit::G1,
            dephasing_rate: 0.0,
            pump: None,
            pump_cutoff: None,
            cutoff,
        }
    }

    /// Linear plus nonlinear absorption by a qubit, `V = V^(1) + V^(2)`.
    pub fn combined(g1: f64, g2: f64, cutoff: usize) -> Self {
        Self::qubit(&[(1, g1), (2, g2)], cutoff)
    }

    pub fn validate(&self) -> Result<()> {
        if self.interactions.is_empty() {
            return Err(Error::InvalidParameter("at least one interaction is required".into()));
        }
        if self.cutoff < 2 {
            return Err(Error::InvalidDimension { what: "cutoff", dim: self.cutoff });
        }
        for i in &self.interactions {
            if i.order == 0 {
                return Err(Error::InvalidParameter("interaction order must be ≥ 1".into()));
            }
            if !i.coupling.is_finite() {
                return Err(Error::InvalidParameter(format!("coupling of order {} is not finite", i.order)));
            }
            if i.order as usize >= self.cutoff {
                return Err(Error::Truncation(format!(
                    "interaction order {} needs cutoff above {}",
                    i.order, self.cutoff
                )));
            }
        }
        let freqs = [self.omega, self.big_omega, self.delta.unwrap_or(0.0), self.nu.unwrap_or(0.0)];
        if freqs.iter().any(|f| !f.is_finite()) {
            return Err(Error::InvalidParameter("frequencies must be finite".into()));
        }
        if !(self.dephasing_rate >= 0.0 && self.dephasing_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!("dephasing rate {} must be ≥ 0", self.dephasing_rate)));
        }
        if let Absorber::Oscillator { dim } = self.absorber {
            if dim < 2 {
                return Err(Error::InvalidDimension { what: "absorber", dim });
            }
            if self.pump.is_some() {
                return Err(Error::InvalidParameter("the pumped model needs a qubit absorber".into()));
            }
        }
        if self.pump.is_some() && self.interactions.iter().any(|i| i.order > 2) {
            return Err(Error::InvalidParameter("the completed model has orders 1 and 2 only".into()));
        }
        if self.frequency_unit == FrequencyUnit::G2 && self.coupling(2).unwrap_or(0.0) == 0.0 {
            return Err(Error::InvalidParameter("frequency unit g2 needs a nonzero order-2 coupling".into()));
        }
        Ok(())
    }

    /// Total coupling of the given order (zero-coupling entries included).
    pub fn coupling(&self, order: u32) -> Option<f64> {
        self.interactions
            .iter()
            .filter(|i| i.order == order)
            .map(|i| i.coupling)
            .reduce(|a, b| a + b)
    }

    /// Rate converting raw time to the reported scaled time `τ = rate · t`:
    /// `g^(2)` when present and nonzero, otherwise `g^(1)`, otherwise 1.
    pub fn time_scale(&self) -> f64 {
        [self.coupling(2), self.coupling(1)]
            .into_iter()
            .flatten()
            .find(|g| *g != 0.0)
            .map(f64::abs)
            .unwrap_or(1.0)
    }

    /// Raw angular frequency per configured frequency unit.
    pub fn frequency_scale(&self) -> f64 {
        match self.frequency_unit {
            FrequencyUnit::G1 => self.coupling(1).filter(|g| *g != 0.0).map(f64::abs).unwrap_or(1.0),
            FrequencyUnit::G2 => self.coupling(2).map(f64::abs).unwrap_or(1.0),
        }
    }

    /// `|β|`, or 1 without pump or for `β = 0`.
    pub fn pump_norm(&self) -> f64 {
        self.pump.map(|b| b.norm()).filter(|n| *n > 0.0).unwrap_or(1.0)
    }

    pub fn pump_dim(&self) -> Option<usize> {
        self.pump.map(|beta| self.pump_cutoff.unwrap_or_else(|| pump_cutoff_for(beta)))
    }

    pub fn layout(&self) -> Result<SpaceLayout> {
        match (&self.absorber, self.pump_dim()) {
            (Absorber::Qubit, None) => SpaceLayout::new([(QUBIT, 2), (OSCILLATOR, self.cutoff)]),
            (Absorber::Qubit, Some(da)) => {
                SpaceLayout::new([(QUBIT, 2), (OSCILLATOR, self.cutoff), (AUX_MODE, da)])
            }
            (Absorber::Oscillator { dim }, _) => SpaceLayout::new([(AUX_MODE, *dim), (OSCILLATOR, self.cutoff)]),
        }
    }

    pub fn with_cutoff(&self, cutoff: usize) -> Self {
        Self { cutoff, ..self.clone() }
    }

    /// Interaction part only.
    pub fn interaction_sparse(&self) -> Result<SparseOperator> {
        self.validate()?;
        let layout = self.layout()?;
        let mut total = SparseOperator::zeros(layout.clone());
        for i in &self.interactions {
            let term = match (&self.absorber, self.pump.is_some(), i.order) {
                (Absorber::Qubit, false, k) => jc_sparse(&layout, k, i.coupling)?,
                (Absorber::Qubit, true, 1) => trilinear_sparse(&layout, i.coupling / self.pump_norm())?,
                (Absorber::Qubit, true, _) => jc_sparse(&layout, 2, i.coupling)?,
                (Absorber::Oscillator { .. }, _, k) => mw_sparse(&layout, k, i.coupling)?,
            };
            total = total.add(&term)?;
        }
        Ok(total)
    }

    /// Free part: oscillator, absorber and (if present) pump-mode terms.
    pub fn free_sparse(&self) -> Result<SparseOperator> {
        let layout = self.layout()?;
        let scale = self.frequency_scale();
        let osc_freq = self.delta.map(|d| -d).unwrap_or(self.omega) * scale;
        let mut h = number_sparse(&layout, OSCILLATOR)?.scale(C64::new(osc_freq, 0.0));
        let absorber = match self.absorber {
            Absorber::Qubit => sigma_z_sparse(&layout)?.scale(C64::new(0.5 * self.big_omega * scale, 0.0)),
            Absorber::Oscillator { .. } => {
                number_sparse(&layout, AUX_MODE)?.scale(C64::new(self.big_omega * scale, 0.0))
            }
        };
        h = h.add(&absorber)?;
        if let (Some(nu), true) = (self.nu, layout.contains(AUX_MODE) && self.pump.is_some()) {
            h = h.add(&number_sparse(&layout, AUX_MODE)?.scale(C64::new(nu * scale, 0.0)))?;
        }
        Ok(h)
    }

    pub fn hamiltonian_sparse(&self) -> Result<SparseOperator> {
        self.interaction_sparse()?.add(&self.free_sparse()?)
    }

    pub fn hamiltonian(&self) -> Result<Operator> {
        let h = self.hamiltonian_sparse()?.to_dense();
        debug_assert!(h.is_hermitian());
        Ok(h)
    }

    pub fn jump_operators_sparse(&self) -> Result<Vec<SparseOperator>> {
        dephasing_sparse(&self.layout()?, self.dephasing_rate)
    }

    pub fn jump_operators(&self) -> Result<Vec<Operator>> {
        Ok(self.jump_operators_sparse()?.iter().map(SparseOperator::to_dense).collect())
    }
}

/// Pump cutoff covering `|β|² + 5√(|β|² + 1)` quanta.
pub fn pump_cutoff_for(beta: C64) -> usize {
    let mean = beta.norm_sqr();
    ((mean + 5.0 * (mean + 1.0).sqrt()).ceil() as usize + 2).max(2)
}

fn ladder_sparse(layout: &SpaceLayout, label: &str) -> Result<SparseOperator> {
    SparseOperator::annihilation(label, layout.dim_of(label)?)?.embed(layout, label)
}

fn number_sparse(layout: &SpaceLayout, label: &str) -> Result<SparseOperator> {
    let dim = layout.dim_of(label)?;
    let diag: Vec<C64> = (0..dim).map(|n| C64::new(n as f64, 0.0)).collect();
    SparseOperator::diagonal(SpaceLayout::single(label, dim)?, &diag)?.embed(layout, label)
}

fn sigma_plus_sparse(layout: &SpaceLayout) -> Result<SparseOperator> {
    let q = SpaceLayout::single(QUBIT, 2)?;
    SparseOperator::from_triplets(q, vec![(1, 0, C64::new(1.0, 0.0))])?.embed(layout, QUBIT)
}

fn sigma_z_sparse(layout: &SpaceLayout) -> Result<SparseOperator> {
    let q = SpaceLayout::single(QUBIT, 2)?;
    SparseOperator::diagonal(q, &[C64::new(-1.0, 0.0), C64::new(1.0, 0.0)])?.embed(layout, QUBIT)
}

fn power(op: &SparseOperator, k: u32) -> Result<SparseOperator> {
    let mut out = SparseOperator::identity(op.layout().clone());
    for _ in 0..k {
        out = out.matmul(op)?;
    }
    Ok(out)
}

/// `g (X + X†)`.
fn hermitian_part(x: &SparseOperator, g: f64) -> Result<SparseOperator> {
    x.add(&x.adjoint()).map(|h| h.scale(C64::new(g, 0.0)))
}

fn jc_sparse(layout: &SpaceLayout, k: u32, g: f64) -> Result<SparseOperator> {
    let dim = layout.dim_of(OSCILLATOR)?;
    if k as usize >= dim {
        return Err(Error::Truncation(format!("order {k} needs cutoff above {dim}")));
    }
    let x = sigma_plus_sparse(layout)?.matmul(&power(&ladder_sparse(layout, OSCILLATOR)?, k)?)?;
    hermitian_part(&x, g)
}

fn trilinear_sparse(layout: &SpaceLayout, g: f64) -> Result<SparseOperator> {
    let x = sigma_plus_sparse(layout)?
        .matmul(&ladder_sparse(layout, OSCILLATOR)?)?
        .matmul(&ladder_sparse(layout, AUX_MODE)?)?;
    hermitian_part(&x, g)
}

fn mw_sparse(layout: &SpaceLayout, k: u32, g: f64) -> Result<SparseOperator> {
    let dim = layout.dim_of(OSCILLATOR)?;
    if k as usize >= dim {
        return Err(Error::Truncation(format!("order {k} needs cutoff above {dim}")));
    }
    let x = ladder_sparse(layout, AUX_MODE)?
        .adjoint()
        .matmul(&power(&ladder_sparse(layout, OSCILLATOR)?, k)?)?;
    hermitian_part(&x, g)
}

fn dephasing_sparse(layout: &SpaceLayout, gamma: f64) -> Result<Vec<SparseOperator>> {
    if gamma.is_nan() || gamma < 0.0 {
        return Err(Error::InvalidParameter(format!("dephasing rate {gamma} must be ≥ 0")));
    }
    if gamma == 0.0 {
        return Ok(Vec::new());
    }
    Ok(vec![number_sparse(layout, OSCILLATOR)?.scale(C64::new(gamma.sqrt(), 0.0))])
}

fn require_qubit(spec: &ModelSpec) -> Result<()> {
    match spec.absorber {
        Absorber::Qubit => Ok(()),
        Absorber::Oscillator { .. } => Err(Error::InvalidParameter("a qubit absorber is required".into())),
    }
}

fn two_factor_layout(spec: &ModelSpec) -> Result<SpaceLayout> {
    ModelSpec { pump: None, ..spec.clone() }.layout()
}

/// `V^(k) = g (σ+ b^k + σ− b†^k)` on qubit ⊗ oscillator.
pub fn jc_interaction(k: u32, g: f64, spec: &ModelSpec) -> Result<Operator> {
    require_qubit(spec)?;
    Ok(jc_sparse(&two_factor_layout(spec)?, k, g)?.to_dense())
}

/// `V^(k)` on any layout holding a qubit and the oscillator `b`.
pub fn jc_interaction_on(layout: &SpaceLayout, k: u32, g: f64) -> Result<SparseOperator> {
    jc_sparse(layout, k, g)
}

/// `V = V^(1) + V^(2)`.
pub fn combined_interaction(g1: f64, g2: f64, spec: &ModelSpec) -> Result<Operator> {
    require_qubit(spec)?;
    let layout = two_factor_layout(spec)?;
    Ok(jc_sparse(&layout, 1, g1)?.add(&jc_sparse(&layout, 2, g2)?)?.to_dense())
}

/// `H₀ = ω b†b + (Ω/2) σz` (qubit) or `ω b†b + Ω a†a` (oscillator absorber),
/// raw angular frequencies.
pub fn free_hamiltonian(omega: f64, big_omega: f64, spec: &ModelSpec) -> Result<Operator> {
    let spec = ModelSpec {
        omega,
        big_omega,
        delta: None,
        nu: None,
        pump: None,
        frequency_unit: FrequencyUnit::G1,
        interactions: vec![Interaction { order: 1, coupling: 1.0 }],
        ..spec.clone()
    };
    Ok(spec.free_sparse()?.to_dense())
}

/// `H = −Δ b†b + (Ω/2) σz + V^(k)`, raw angular frequencies.
pub fn detuned_hamiltonian(delta: f64, big_omega: f64, k: u32, g: f64, spec: &ModelSpec) -> Result<Operator> {
    Ok(&free_hamiltonian(-delta, big_omega, spec)? + &jc_interaction(k, g, spec)?)
}

/// Conserved excitation number `k σ+σ− + b†b`, or `k a†a + b†b` for an
/// oscillator absorber.
pub fn excitation_number(k: u32, spec: &ModelSpec) -> Result<Operator> {
    let layout = two_factor_layout(spec)?;
    let absorber = match spec.absorber {
        Absorber::Qubit => {
            let sp = sigma_plus_sparse(&layout)?;
            sp.matmul(&sp.adjoint())?
        }
        Absorber::Oscillator { .. } => number_sparse(&layout, AUX_MODE)?,
    };
    Ok(absorber
        .scale(C64::new(k as f64, 0.0))
        .add(&number_sparse(&layout, OSCILLATOR)?)?
        .to_dense())
}

#[derive(Clone, Debug)]
pub struct CommutatorResidual {
    pub commutator: Operator,
    pub norm: f64,
}

/// `[H₀, V]` and its largest entry.
pub fn commutator_residual(h0: &Operator, v: &Operator) -> Result<CommutatorResidual> {
    let commutator = h0.commutator(v)?;
    let norm = commutator.max_abs();
    Ok(CommutatorResidual { commutator, norm })
}

/// Closed form `g (kω − Ω)(σ− b†^k − σ+ b^k)` of `[H₀, V^(k)]`.
pub fn predicted_commutator(k: u32, g: f64, omega: f64, big_omega: f64, spec: &ModelSpec) -> Result<Operator> {
    require_qubit(spec)?;
    let layout = two_factor_layout(spec)?;
    let x = sigma_plus_sparse(&layout)?.matmul(&power(&ladder_sparse(&layout, OSCILLATOR)?, k)?)?;
    let diff = x.adjoint().add(&x.scale(C64::new(-1.0, 0.0)))?;
    Ok(diff.scale(C64::new(g * (k as f64 * omega - big_omega), 0.0)).to_dense())
}

/// Largest `|a − b|` over entries whose row and column oscillator indices both
/// lie below `cutoff − margin`.
pub fn max_difference_below_boundary(a: &Operator, b: &Operator, margin: usize) -> Result<f64> {
    if a.layout() != b.layout() {
        return Err(Error::Layout("operator layouts differ".into()));
    }
    let layout = a.layout();
    let (_, dim, right) = layout.split_at(layout.position(OSCILLATOR)?);
    let limit = dim.saturating_sub(margin);
    let inside = |i: usize| (i / right) % dim < limit;
    let n = a.dim();
    let mut worst: f64 = 0.0;
    for r in (0..n).filter(|&r| inside(r)) {
        for c in (0..n).filter(|&c| inside(c)) {
            worst = worst.max((a.get(r, c) - b.get(r, c)).norm());
        }
    }
    Ok(worst)
}

/// `V^(k)_MW = g (a† b^k + a b†^k)` on oscillator absorber ⊗ oscillator.
pub fn mw_interaction(k: u32, g: f64, spec: &ModelSpec) -> Result<Operator> {
    let Absorber::Oscillator { .. } = spec.absorber else {
        return Err(Error::InvalidParameter("the multi-wave mixer needs an oscillator absorber".into()));
    };
    Ok(mw_sparse(&spec.layout()?, k, g)?.to_dense())
}

/// `V_compl = g1 (σ+ b a + σ− b† a†) + g2 (σ+ b² + σ− b†²)` on
/// qubit ⊗ b ⊗ a; the model must carry a pump.
pub fn completed_interaction_sparse(g1: f64, g2: f64, spec: &ModelSpec) -> Result<SparseOperator> {
    require_qubit(spec)?;
    let layout = spec.layout()?;
    if layout.factors().len() != 3 {
        return Err(Error::Layout("the completed model needs qubit ⊗ b ⊗ a".into()));
    }
    trilinear_sparse(&layout, g1)?.add(&jc_sparse(&layout, 2, g2)?)
}

pub fn completed_interaction(g1: f64, g2: f64, spec: &ModelSpec) -> Result<Operator> {
    Ok(completed_interaction_sparse(g1, g2, spec)?.to_dense())
}

/// Number dephasing `L = √γ b†b` on the oscillator; empty for `γ = 0`.
pub fn dephasing_dissipator(gamma: f64, spec: &ModelSpec) -> Result<Vec<Operator>> {
    Ok(dephasing_sparse(&spec.layout()?, gamma)?.iter().map(SparseOperator::to_dense).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(d: usize) -> ModelSpec {
        ModelSpec::combined(1.0, 0.1, d)
    }

    fn idx(l: &SpaceLayout, q: usize, n: usize) -> usize {
        l.flat_index(&[q, n]).unwrap()
    }

    #[test]
    fn jc_matrix_elements() {
        let s = spec(10);
        let l = s.layout().unwrap();
        let v1 = jc_interaction(1, 1.0, &s).unwrap();
        assert!((v1.get(idx(&l, 1, 0), idx(&l, 0, 1)).re - 1.0).abs() < 1e-15);
        let v2 = jc_interaction(2, 1.0, &s).unwrap();
        assert!((v2.get(idx(&l, 1, 0), idx(&l, 0, 2)).re - 2f64.sqrt()).abs() < 1e-15);
        // |g, m⟩ with m < k is annihilated.
        for k in 1..4u32 {
            let v = jc_interaction(k, 1.0, &s).unwrap();
            for m in 0..k as usize {
                let col = idx(&l, 0, m);
                assert!((0..v.dim()).all(|r| v.get(r, col).norm() == 0.0));
            }
            assert!(v.is_hermitian());
        }
        assert!(matches!(jc_interaction(10, 1.0, &s), Err(Error::Truncation(_))));
    }

    #[test]
    fn combined_degenerate_cases() {
        let s = spec(12);
        let l = s.layout().unwrap();
        assert_eq!(combined_interaction(0.7, 0.0, &s).unwrap(), jc_interaction(1, 0.7, &s).unwrap());
        assert_eq!(combined_interaction(0.0, 0.0, &s).unwrap().max_abs(), 0.0);
        let v = combined_interaction(1.3, 0.4, &s).unwrap();
        assert!((v.get(idx(&l, 1, 6), idx(&l, 0, 7)).re - 1.3 * 7f64.sqrt()).abs() < 1e-13);
        assert!((v.get(idx(&l, 1, 5), idx(&l, 0, 7)).re - 0.4 * 42f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn free_hamiltonian_spectrum() {
        let s = spec(6);
        let l = s.layout().unwrap();
        let h = free_hamiltonian(1.0, 1.0, &s).unwrap();
        for n in 0..6 {
            assert!((h.get(idx(&l, 0, n), idx(&l, 0, n)).re - (n as f64 - 0.5)).abs() < 1e-15);
        }
        assert_eq!(free_hamiltonian(0.0, 0.0, &s).unwrap().max_abs(), 0.0);
        // ω=1, Ω=2: levels n ∓ 1, enumerated from the diagonal.
        let h = free_hamiltonian(1.0, 2.0, &s).unwrap();
        let mut got: Vec<f64> = (0..h.dim()).map(|i| h.get(i, i).re).collect();
        let mut want: Vec<f64> = (0..6).flat_map(|n| [n as f64 - 1.0, n as f64 + 1.0]).collect();
        got.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        assert_eq!(got, want);
    }

    #[test]
    fn commutator_residual_vanishes_on_resonance() {
        let s = spec(12);
        for k in 1..=3u32 {
            let h0 = free_hamiltonian(0.8, 0.8 * k as f64, &s).unwrap();
            let v = jc_interaction(k, 0.9, &s).unwrap();
            assert!(commutator_residual(&h0, &v).unwrap().norm < 1e-12);
        }
    }

    #[test]
    fn commutator_residual_matches_closed_form() {
        let s = spec(12);
        for &(k, g, w, big_w) in &[(1, 1.0, 1.0, 2.0), (2, 0.3, 0.7, 0.2), (3, 1.1, -0.4, 1.9)] {
            let h0 = free_hamiltonian(w, big_w, &s).unwrap();
            let res = commutator_residual(&h0, &jc_interaction(k, g, &s).unwrap()).unwrap();
            let want = predicted_commutator(k, g, w, big_w, &s).unwrap();
            assert!(max_difference_below_boundary(&res.commutator, &want, k as usize).unwrap() < 1e-10);
        }
        // k=1, ω=1, Ω=2, g=1: residual is −(σ− b† − σ+ b).
        let h0 = free_hamiltonian(1.0, 2.0, &s).unwrap();
        let v = jc_interaction(1, 1.0, &s).unwrap();
        let res = commutator_residual(&h0, &v).unwrap().commutator;
        let l = s.layout().unwrap();
        assert!((res.get(idx(&l, 0, 1), idx(&l, 1, 0)).re + 1.0).abs() < 1e-12);
        assert!((res.get(idx(&l, 1, 0), idx(&l, 0, 1)).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn frequency_frustration_on_grid() {
        let s = spec(10);
        let v = combined_interaction(1.0, 0.1, &s).unwrap();
        for i in -8..=8 {
            for j in -8..=8 {
                if i == 0 && j == 0 {
                    continue;
                }
                let h0 = free_hamiltonian(i as f64 * 0.25, j as f64 * 0.25, &s).unwrap();
                assert!(commutator_residual(&h0, &v).unwrap().norm > 1e-3, "({i},{j})");
            }
        }
    }

    #[test]
    fn jc_conserves_excitation_number() {
        let s = spec(10);
        for k in 1..=3u32 {
            let v = jc_interaction(k, 1.0, &s).unwrap();
            let n = excitation_number(k, &s).unwrap();
            let c = v.commutator(&n).unwrap();
            let zero = Operator::zeros(c.layout().clone());
            assert!(max_difference_below_boundary(&c, &zero, k as usize).unwrap() < 1e-10);
        }
        let v = combined_interaction(1.0, 0.1, &s).unwrap();
        for k in 1..=2u32 {
            assert!(v.commutator(&excitation_number(k, &s).unwrap()).unwrap().max_abs() > 0.05);
        }
    }

    #[test]
    fn mw_mixer_elements_and_conservation() {
        let s = ModelSpec {
            absorber: Absorber::Oscillator { dim: 4 },
            ..ModelSpec::combined(1.0, 0.1, 8)
        };
        let l = s.layout().unwrap();
        let at = |a: usize, b: usize| l.flat_index(&[a, b]).unwrap();
        let v1 = mw_interaction(1, 0.6, &s).unwrap();
        assert!((v1.get(at(1, 0), at(0, 1)).re - 0.6).abs() < 1e-15);
        let v2 = mw_interaction(2, 0.6, &s).unwrap();
        assert!((v2.get(at(1, 0), at(0, 2)).re - 0.6 * 2f64.sqrt()).abs() < 1e-15);
        for (k, v) in [(1, &v1), (2, &v2)] {
            let n = excitation_number(k, &s).unwrap();
            let c = v.commutator(&n).unwrap();
            let zero = Operator::zeros(c.layout().clone());
            assert!(max_difference_below_boundary(&c, &zero, k as usize).unwrap() < 1e-10);
        }
        assert!(mw_interaction(1, 1.0, &spec(5)).is_err());
    }

    fn pumped(db: usize, da: usize) -> ModelSpec {
        ModelSpec { pump: Some(C64::new(0.0, 0.0)), pump_cutoff: Some(da), ..ModelSpec::combined(1.0, 0.1, db) }
    }

    #[test]
    fn completed_interaction_elements() {
        let s = pumped(6, 5);
        let l = s.layout().unwrap();
        let v = completed_interaction(0.8, 0.3, &s).unwrap();
        assert!(v.is_hermitian());
        let at = |q, b, a| l.flat_index(&[q, b, a]).unwrap();
        assert!((v.get(at(1, 0, 0), at(0, 1, 1)).re - 0.8).abs() < 1e-15);
        for m in 0..5 {
            assert!((v.get(at(1, 0, m), at(0, 2, m)).re - 0.3 * 2f64.sqrt()).abs() < 1e-15);
        }
        assert!(completed_interaction(1.0, 1.0, &spec(5)).is_err());
    }

    #[test]
    fn pumped_trilinear_coupling_is_normalized_by_pump() {
        let s = ModelSpec { pump: Some(C64::new(3.0, 4.0)), pump_cutoff: Some(4), ..ModelSpec::combined(1.0, 0.1, 6) };
        let l = s.layout().unwrap();
        let v = s.interaction_sparse().unwrap();
        let at = |q, b, a| l.flat_index(&[q, b, a]).unwrap();
        assert!((v.get(at(1, 0, 0), at(0, 1, 1)).re - 0.2).abs() < 1e-15);
        let zero = ModelSpec { pump: Some(C64::new(0.0, 0.0)), ..s.clone() };
        assert!((zero.interaction_sparse().unwrap().get(at(1, 0, 0), at(0, 1, 1)).re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn completed_interaction_passivity() {
        let s = pumped(7, 6);
        let l = s.layout().unwrap();
        let sp = sigma_plus_sparse(&l).unwrap();
        let ee = sp.matmul(&sp.adjoint()).unwrap();
        let nb = number_sparse(&l, OSCILLATOR).unwrap();
        let na = number_sparse(&l, AUX_MODE).unwrap();
        let minus = C64::new(-1.0, 0.0);
        let trilinear = completed_interaction(1.0, 0.0, &s).unwrap();
        let full = completed_interaction(1.0, 0.4, &s).unwrap();
        let checks = [
            (&trilinear, ee.add(&nb).unwrap()),
            (&trilinear, nb.add(&na.scale(minus)).unwrap()),
            (&full, ee.scale(C64::new(2.0, 0.0)).add(&nb).unwrap().add(&na).unwrap()),
        ];
        for (v, n) in checks {
            let n = n.to_dense();
            // Entries touching either truncated top level are excluded.
            let c = v.commutator(&n).unwrap();
            let mut worst: f64 = 0.0;
            for r in 0..c.dim() {
                for col in 0..c.dim() {
                    let edge = |i: usize| (i / 6) % 7 >= 5 || i % 6 >= 5;
                    if !edge(r) && !edge(col) {
                        worst = worst.max(c.get(r, col).norm());
                    }
                }
            }
            assert!(worst < 1e-10);
        }
    }

    #[test]
    fn dephasing_operator() {
        let s = spec(5);
        assert!(dephasing_dissipator(0.0, &s).unwrap().is_empty());
        assert!(dephasing_dissipator(-0.1, &s).is_err());
        let l = dephasing_dissipator(0.09, &s).unwrap();
        assert_eq!(l.len(), 1);
        let layout = s.layout().unwrap();
        for n in 0..5 {
            let i = idx(&layout, 0, n);
            assert!((l[0].get(i, i).re - 0.3 * n as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn hamiltonians_are_hermitian() {
        let mut s = spec(20);
        s.omega = 0.3;
        s.big_omega = 1.7;
        assert!(s.hamiltonian().unwrap().hermiticity_defect() < 1e-12);
        let d = detuned_hamiltonian(0.4, 1.1, 2, 0.5, &s).unwrap();
        assert!(d.hermiticity_defect() < 1e-12);
    }

    #[test]
    fn spec_round_trips_through_json() {
        let mut s = spec(60);
        s.frequency_unit = FrequencyUnit::G2;
        s.omega = 1.0;
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"Omega\""));
        let back: ModelSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        let minimal: ModelSpec = serde_json::from_str(
            r#"{"absorber":{"type":"qubit"},"interactions":[{"order":1,"coupling":1.0}]}"#,
        )
        .unwrap();
        assert_eq!(minimal.cutoff, DEFAULT_CUTOFF);
        assert!(ModelSpec { interactions: vec![], ..spec(5) }.validate().is_err());
    }
}
