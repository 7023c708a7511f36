//! Diagnostics of oscillator states: entropies, relative entropy of
//! coherence, excitation and quadrature statistics, Gaussian-shell removal,
//! Wigner functions and their negativity.

use std::cmp::Ordering;
use std::f64::consts::{FRAC_1_PI, PI, SQRT_2};
use std::fmt::Write as _;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, ShellResiduals};
use crate::evolution::ensemble_leakage;
use crate::hilbert::{annihilation_on, number_on, Ensemble, QuantumState, SpaceLayout, HERMITIAN_TOL, C64};
use crate::linalg::{cmul, gram_inner, gram_outer, hermitian_eigenvalues, HermitianEigen};
use crate::OSCILLATOR;

/// Eigenvalues below this contribute nothing to an entropy.
pub const EIGENVALUE_FLOOR: f64 = 1e-14;

/// `−Σ λ ln λ` over values at or above [`EIGENVALUE_FLOOR`].
pub fn entropy_of_spectrum(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().filter(|&p| p >= EIGENVALUE_FLOOR).map(|p| -p * p.ln()).sum()
}

/// Von Neumann entropy in nats.
pub fn von_neumann_entropy(state: &QuantumState) -> f64 {
    if state.is_pure() {
        return 0.0;
    }
    entropy_of_spectrum(hermitian_eigenvalues(&state.density_matrix()))
}

fn check_density(rho: &DMatrix<C64>) -> Result<()> {
    if !rho.is_square() {
        return Err(Error::InvalidState("density matrix must be square".into()));
    }
    let defect = crate::hilbert::operator_hermiticity_defect(rho);
    if defect > HERMITIAN_TOL.max(1e-10) {
        return Err(Error::NotHermitian(defect));
    }
    let tr = rho.trace().re;
    if (tr - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
    }
    Ok(())
}

/// Entropy of a raw density matrix, validated first.
pub fn entropy_of_matrix(rho: &DMatrix<C64>) -> Result<f64> {
    check_density(rho)?;
    Ok(entropy_of_spectrum(hermitian_eigenvalues(rho)))
}

/// Relative entropy of coherence `S(diag ρ) − S(ρ)` of a raw density matrix.
pub fn coherence_of_matrix(rho: &DMatrix<C64>) -> Result<f64> {
    check_density(rho)?;
    let diag = entropy_of_spectrum(rho.diagonal().iter().map(|z| z.re));
    Ok((diag - entropy_of_spectrum(hermitian_eigenvalues(rho))).max(0.0))
}

/// Relative entropy of coherence in the product basis of the state's layout.
pub fn coherence(state: &QuantumState) -> f64 {
    let diag = entropy_of_spectrum(state.populations());
    (diag - von_neumann_entropy(state)).max(0.0)
}

/// Entropy and coherence of the reduced state on `keep`, taken from the
/// smaller of the two Gram matrices of the Schmidt matrix.
pub fn reduced_entropy_and_coherence(ens: &Ensemble, keep: &str) -> Result<(f64, f64)> {
    let m = ens.schmidt_matrix(keep)?;
    let gram = if m.ncols() < m.nrows() { gram_inner(&m) } else { gram_outer(&m) };
    let entropy = entropy_of_spectrum(hermitian_eigenvalues(&gram));
    let pops = m.row_iter().map(|row| row.iter().map(|z| z.norm_sqr()).sum::<f64>());
    Ok((entropy, (entropy_of_spectrum(pops) - entropy).max(0.0)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcitationStats {
    pub mean: f64,
    pub std: f64,
}

/// Moments of `b†b` from Fock populations.
pub fn excitation_stats_from_populations(pops: &[f64]) -> ExcitationStats {
    let mean: f64 = pops.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
    let second: f64 = pops.iter().enumerate().map(|(n, p)| (n * n) as f64 * p).sum();
    ExcitationStats { mean, std: (second - mean * mean).max(0.0).sqrt() }
}

/// `(⟨b†b⟩, ΔN)` of an oscillator-only state.
pub fn excitation_stats(state: &QuantumState) -> Result<ExcitationStats> {
    single_mode(state.layout())?;
    Ok(excitation_stats_from_populations(&state.populations()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureStats {
    pub mean_x: f64,
    pub mean_p: f64,
    /// Symmetrized covariance of `(X, P)`.
    pub covariance: [[f64; 2]; 2],
}

impl QuadratureStats {
    pub fn determinant(&self) -> f64 {
        let v = self.covariance;
        v[0][0] * v[1][1] - v[0][1] * v[1][0]
    }

    /// Largest of `|⟨X⟩|`, `|⟨P⟩|`, `|V₁₁ − V₂₂|`, `|V₁₂|`.
    pub fn shell_residual(&self) -> f64 {
        let v = self.covariance;
        [self.mean_x.abs(), self.mean_p.abs(), (v[0][0] - v[1][1]).abs(), v[0][1].abs()]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// First moments and covariance of `X = (b + b†)/√2`, `P = i(b† − b)/√2`
/// from a single-mode density matrix.
pub fn quadrature_stats_of_matrix(rho: &DMatrix<C64>) -> QuadratureStats {
    let d = rho.nrows();
    let mut b = C64::default();
    let mut b2 = C64::default();
    let mut n = 0.0;
    for k in 0..d {
        n += k as f64 * rho[(k, k)].re;
        if k + 1 < d {
            b += rho[(k + 1, k)] * ((k + 1) as f64).sqrt();
        }
        if k + 2 < d {
            b2 += rho[(k + 2, k)] * (((k + 1) * (k + 2)) as f64).sqrt();
        }
    }
    let mean_x = SQRT_2 * b.re;
    let mean_p = SQRT_2 * b.im;
    let v11 = b2.re + n + 0.5 - mean_x * mean_x;
    let v22 = -b2.re + n + 0.5 - mean_p * mean_p;
    let v12 = b2.im - mean_x * mean_p;
    QuadratureStats { mean_x, mean_p, covariance: [[v11, v12], [v12, v22]] }
}

pub fn quadrature_stats(state: &QuantumState) -> Result<QuadratureStats> {
    single_mode(state.layout())?;
    Ok(quadrature_stats_of_matrix(&state.density_matrix()))
}

fn single_mode(layout: &SpaceLayout) -> Result<usize> {
    match layout.factors() {
        [f] => Ok(f.dim),
        _ => Err(Error::Layout("an oscillator-only state is required".into())),
    }
}

/// Every per-time diagnostic of a composite state, evaluated on the reduced
/// oscillator state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub coherence: f64,
    pub entropy: f64,
    pub mean_n: f64,
    pub std_n: f64,
    pub mean_x: f64,
    pub mean_p: f64,
    pub covariance: [[f64; 2]; 2],
    pub leakage: f64,
}

pub fn diagnostics(ens: &Ensemble) -> Result<DiagnosticsRecord> {
    let (entropy, coherence) = reduced_entropy_and_coherence(ens, OSCILLATOR)?;
    let rho = ens.reduced_matrix(OSCILLATOR)?;
    let pops: Vec<f64> = rho.diagonal().iter().map(|z| z.re).collect();
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
        leakage: ensemble_leakage(ens),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShellOptions {
    /// Working dimension; defaults to twice the input dimension.
    pub padded_dim: Option<usize>,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub leakage_threshold: f64,
}

impl Default for ShellOptions {
    fn default() -> Self {
        Self { padded_dim: None, tolerance: 1e-6, max_iterations: 12, leakage_threshold: 1e-4 }
    }
}

/// Top padded levels whose population counts as squeezing leakage.
pub const SHELL_LEAKAGE_LEVELS: usize = 10;

#[derive(Clone, Debug)]
pub struct ShellRemoval {
    pub state: QuantumState,
    pub residuals: ShellResiduals,
    pub iterations: usize,
}

fn residuals_of(q: &QuadratureStats, leakage: f64) -> ShellResiduals {
    let v = q.covariance;
    ShellResiduals {
        mean_x: q.mean_x,
        mean_p: q.mean_p,
        variance_gap: v[0][0] - v[1][1],
        covariance: v[0][1],
        leakage,
    }
}

/// `U ρ U†` with `U = exp(−iG)` for Hermitian `G`.
fn conjugate_by_exp(generator: &DMatrix<C64>, rho: &DMatrix<C64>) -> DMatrix<C64> {
    let u = HermitianEigen::new(generator).map_values(|l| C64::new(0.0, -l).exp());
    let out = cmul(&cmul(&u, rho), &u.adjoint());
    (&out + out.adjoint()) * C64::new(0.5, 0.0)
}

pub fn remove_gaussian_shell(state: &QuantumState) -> Result<ShellRemoval> {
    remove_gaussian_shell_with(state, ShellOptions::default())
}

/// Displaces, rotates and squeezes until the means vanish and the covariance
/// is proportional to the identity. Gaussian unitaries leave the
/// non-Gaussian core untouched.
pub fn remove_gaussian_shell_with(state: &QuantumState, opts: ShellOptions) -> Result<ShellRemoval> {
    let d = single_mode(state.layout())?;
    let dim = opts.padded_dim.unwrap_or(2 * d).max(d);
    let label = state.layout().factors()[0].label.clone();
    let mut rho = DMatrix::zeros(dim, dim);
    rho.view_mut((0, 0), (d, d)).copy_from(&state.density_matrix());

    let b = annihilation_on(&label, dim)?.into_matrix();
    let bd = b.adjoint();
    let b2 = &b * &b;
    let bd2 = &bd * &bd;
    let n = number_on(&label, dim)?.into_matrix();
    let leak = |r: &DMatrix<C64>| (dim.saturating_sub(SHELL_LEAKAGE_LEVELS)..dim).map(|k| r[(k, k)].re).sum::<f64>();

    let mut iterations = 0;
    let mut q = quadrature_stats_of_matrix(&rho);
    while q.shell_residual() > opts.tolerance && iterations < opts.max_iterations {
        iterations += 1;
        // D(−⟨b⟩) = exp(−iG) with G = i(α b† − α* b), α = −⟨b⟩.
        let alpha = -C64::new(q.mean_x, q.mean_p) / SQRT_2;
        let g = (&bd * alpha - &b * alpha.conj()) * C64::new(0.0, 1.0);
        rho = conjugate_by_exp(&g, &rho);

        let q1 = quadrature_stats_of_matrix(&rho);
        let v = q1.covariance;
        let theta = 0.5 * (2.0 * v[0][1]).atan2(v[0][0] - v[1][1]);
        rho = conjugate_by_exp(&(&n * C64::new(theta, 0.0)), &rho);

        let v = quadrature_stats_of_matrix(&rho).covariance;
        if v[0][0] > 0.0 && v[1][1] > 0.0 {
            // exp(ξ(b² − b†²)/2) = exp(−iK), K = iξ(b² − b†²)/2.
            let xi = 0.25 * (v[0][0] / v[1][1]).ln();
            let k = (&b2 - &bd2) * C64::new(0.0, 0.5 * xi);
            rho = conjugate_by_exp(&k, &rho);
        }
        q = quadrature_stats_of_matrix(&rho);
        let leakage = leak(&rho);
        if leakage > opts.leakage_threshold {
            return Err(Error::ShellRemoval(residuals_of(&q, leakage)));
        }
    }
    let residuals = residuals_of(&q, leak(&rho));
    if q.shell_residual() > opts.tolerance {
        return Err(Error::ShellRemoval(residuals));
    }
    let layout = SpaceLayout::single(&label, dim)?;
    Ok(ShellRemoval { state: QuantumState::mixed_unchecked(layout, rho), residuals, iterations })
}

/// Uniform phase-space grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub nx: usize,
    pub np: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::square(8.0, 201)
    }
}

pub const MAX_GRID_SPACING: f64 = 0.08;

impl GridSpec {
    pub fn square(half_width: f64, points: usize) -> Self {
        Self { x_min: -half_width, x_max: half_width, p_min: -half_width, p_max: half_width, nx: points, np: points }
    }

    /// The default grid, widened to cover the highest populated Fock level
    /// at unchanged resolution.
    pub fn covering(populations: &[f64]) -> Self {
        let top = populations.iter().rposition(|&p| p > 1e-10).unwrap_or(0);
        let half = 8f64.max((2.0 * top as f64 + 1.0).sqrt() + 4.0);
        let points = ((2.0 * half / MAX_GRID_SPACING).ceil() as usize + 1).max(201);
        Self::square(half, points | 1)
    }

    pub fn x_axis(&self) -> Vec<f64> {
        axis(self.x_min, self.x_max, self.nx)
    }

    pub fn p_axis(&self) -> Vec<f64> {
        axis(self.p_min, self.p_max, self.np)
    }

    /// Full width along each quadrature is at least `4√(⟨N⟩ + 1)`.
    pub fn covers(&self, mean_n: f64) -> bool {
        let need = 4.0 * (mean_n + 1.0).sqrt();
        self.x_max - self.x_min >= need && self.p_max - self.p_min >= need
    }

    fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.np < 2 || self.x_max.partial_cmp(&self.x_min) != Some(Ordering::Greater)
            || self.p_max.partial_cmp(&self.p_min) != Some(Ordering::Greater) {
            return Err(Error::InvalidParameter("grid needs ≥ 2 points and increasing extents".into()));
        }
        Ok(())
    }
}

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct WignerGrid {
    pub x_axis: Vec<f64>,
    pub p_axis: Vec<f64>,
    /// `values[(i, j)] = W(x_i, p_j)`.
    pub values: DMatrix<f64>,
    pub normalization_integral: f64,
    pub coverage_warning: bool,
}

/// Recurrence coefficients of the normalized Laguerre functions for one `L`:
/// `f_(n+1) = ((2n+1+L−x) f_n − √(n(n+L)) f_(n−1)) / √((n+1)(n+1+L))`.
struct LaguerreTable {
    l: usize,
    /// `ln L!`.
    ln_fact_l: f64,
    inv_norm: Vec<f64>,
    lower: Vec<f64>,
}

impl LaguerreTable {
    fn new(l: usize, ln_fact_l: f64, count: usize) -> Self {
        let lf = l as f64;
        let inv_norm: Vec<f64> = (0..count).map(|n| 1.0 / ((n as f64 + 1.0) * (n as f64 + 1.0 + lf)).sqrt()).collect();
        let lower = (0..count).map(|n| (n as f64 * (n as f64 + lf)).sqrt() * inv_norm[n]).collect();
        Self { l, ln_fact_l, inv_norm, lower }
    }

    /// `f_n^(L)(x) = √(n!/(n+L)!) x^(L/2) e^(−x/2) L_n^(L)(x)` for every
    /// tabulated `n`, carried as mantissa · e^scale with a log-scaled start.
    fn eval(&self, x: f64, out: &mut Vec<f64>) {
        out.clear();
        let lf = self.l as f64;
        let ln_f0 = if x > 0.0 {
            0.5 * lf * x.ln() - 0.5 * x - 0.5 * self.ln_fact_l
        } else if self.l == 0 {
            0.0
        } else {
            f64::NEG_INFINITY
        };
        // Rescaling only ever raises the scale, so earlier entries are fixed
        // up when it changes.
        let mut scale = ln_f0;
        let mut prev = 0.0;
        let mut cur = 1.0;
        let mut applied = 0;
        for (n, (inv, low)) in self.inv_norm.iter().zip(&self.lower).enumerate() {
            out.push(cur);
            let next = (2.0 * n as f64 + 1.0 + lf - x) * inv * cur - low * prev;
            prev = cur;
            cur = next;
            let big = cur.abs().max(prev.abs());
            if big > 1e100 {
                apply_scale(&mut out[applied..], scale);
                applied = out.len();
                prev /= big;
                cur /= big;
                scale += big.ln();
            }
        }
        apply_scale(&mut out[applied..], scale);
    }
}

#[cfg(test)]
fn laguerre_functions(l: usize, x: f64, ln_fact_l: f64, count: usize, out: &mut Vec<f64>) {
    LaguerreTable::new(l, ln_fact_l, count).eval(x, out);
}

fn apply_scale(values: &mut [f64], scale: f64) {
    if scale > -700.0 {
        let factor = scale.exp();
        values.iter_mut().for_each(|v| *v *= factor);
    } else {
        values.iter_mut().for_each(|v| *v = v.signum() * (v.abs().ln() + scale).exp());
    }
}

/// `Σ_n (−1)^n ρ_{n+L,n} f_n^(L)(2r²)` for every stored diagonal `L`.
fn radial_sums(diagonals: &[(usize, Vec<C64>)], tables: &[LaguerreTable], r2: f64, work: &mut Vec<f64>) -> Vec<C64> {
    diagonals
        .iter()
        .zip(tables)
        .map(|((_, diag), table)| {
            table.eval(2.0 * r2, work);
            diag.iter().zip(work.iter()).map(|(c, f)| c * f).sum()
        })
        .collect()
}

fn combine_angular(diagonals: &[(usize, Vec<C64>)], radial: &[C64], phi: f64) -> f64 {
    let step = C64::from_polar(1.0, -phi);
    let mut phase = C64::new(1.0, 0.0);
    let mut power = 0;
    let mut total = 0.0;
    for ((l, _), s) in diagonals.iter().zip(radial) {
        if *l == 0 {
            total += s.re;
            continue;
        }
        if *l - power > 8 {
            phase = C64::from_polar(1.0, -(*l as f64) * phi);
        } else {
            for _ in power..*l {
                phase *= step;
            }
        }
        power = *l;
        total += 2.0 * (phase * s).re;
    }
    FRAC_1_PI * total
}

/// Points sharing `x² + p²` to this many digits share their radial sums.
const RADIUS_KEY_SCALE: f64 = 1e12;

/// `W(x, p) = (1/π) Tr[ρ D(α) Π D(α)†]` with `α = (x + ip)/√2`, normalized to
/// `∫ W dx dp = 1`, from the displaced-parity Laguerre expansion.
pub fn wigner(state: &QuantumState, grid: &GridSpec) -> Result<WignerGrid> {
    let d = single_mode(state.layout())?;
    grid.validate()?;
    let rho = state.density_matrix();
    let pops: Vec<f64> = rho.diagonal().iter().map(|z| z.re).collect();
    let eff = pops.iter().rposition(|&p| p > 1e-16).map_or(1, |i| i + 1).min(d);
    // (L, [(−1)^n ρ_{n+L, n}]) for every non-vanishing diagonal.
    let diagonals: Vec<(usize, Vec<C64>)> = (0..eff)
        .map(|l| (l, (0..eff - l).map(|n| if n % 2 == 0 { rho[(n + l, n)] } else { -rho[(n + l, n)] }).collect()))
        .filter(|(_, d): &(usize, Vec<C64>)| d.iter().any(|z| z.norm() > 0.0))
        .collect();
    let ln_fact: Vec<f64> = (0..eff)
        .scan(0.0, |acc, k| {
            if k > 0 {
                *acc += (k as f64).ln();
            }
            Some(*acc)
        })
        .collect();
    let tables: Vec<LaguerreTable> =
        diagonals.iter().map(|(l, diag)| LaguerreTable::new(*l, ln_fact[*l], diag.len())).collect();
    let xs = grid.x_axis();
    let ps = grid.p_axis();
    let mut points: Vec<(u64, usize, usize)> = Vec::with_capacity(xs.len() * ps.len());
    for (j, p) in ps.iter().enumerate() {
        for (i, x) in xs.iter().enumerate() {
            points.push((((x * x + p * p) * RADIUS_KEY_SCALE).round() as u64, i, j));
        }
    }
    points.sort_unstable();
    let groups: Vec<&[(u64, usize, usize)]> = points.chunk_by(|a, b| a.0 == b.0).collect();
    let evaluated: Vec<Vec<f64>> = groups
        .par_iter()
        .map_init(
            || Vec::with_capacity(eff),
            |work, group| {
                let (_, i0, j0) = group[0];
                let radial = radial_sums(&diagonals, &tables, xs[i0] * xs[i0] + ps[j0] * ps[j0], work);
                group.iter().map(|&(_, i, j)| combine_angular(&diagonals, &radial, ps[j].atan2(xs[i]))).collect()
            },
        )
        .collect();
    let mut values = DMatrix::zeros(xs.len(), ps.len());
    for (group, vals) in groups.iter().zip(&evaluated) {
        for (&(_, i, j), v) in group.iter().zip(vals) {
            values[(i, j)] = *v;
        }
    }
    let cell = (xs[1] - xs[0]) * (ps[1] - ps[0]);
    let normalization_integral = values.sum() * cell;
    let mean_n = excitation_stats_from_populations(&pops).mean;
    let coverage_warning = !grid.covers(mean_n);
    if coverage_warning {
        log::warn!("Wigner grid narrower than 4√(⟨N⟩+1) = {:.3}", 4.0 * (mean_n + 1.0).sqrt());
    }
    Ok(WignerGrid { x_axis: xs, p_axis: ps, values, normalization_integral, coverage_warning })
}

impl WignerGrid {
    pub fn cell_area(&self) -> f64 {
        (self.x_axis[1] - self.x_axis[0]) * (self.p_axis[1] - self.p_axis[0])
    }

    /// Position marginal `∫ W dp` on the x axis.
    pub fn x_marginal(&self) -> Vec<f64> {
        let dp = self.p_axis[1] - self.p_axis[0];
        self.values.row_iter().map(|r| r.sum() * dp).collect()
    }

    pub fn min_value(&self) -> f64 {
        self.values.min()
    }

    /// Cubic-convolution interpolation (Keys, `a = −½`); `None` outside the
    /// grid. Missing neighbours at the border are extrapolated linearly.
    pub fn interpolate(&self, x: f64, p: f64) -> Option<f64> {
        let locate = |axis: &[f64], v: f64| {
            let (lo, hi) = (axis[0], axis[axis.len() - 1]);
            if !(lo..=hi).contains(&v) {
                return None;
            }
            let pos = (v - lo) / (axis[1] - axis[0]);
            let i = (pos.floor() as usize).min(axis.len() - 2);
            Some((i, pos - i as f64))
        };
        let (i, fx) = locate(&self.x_axis, x)?;
        let (j, fp) = locate(&self.p_axis, p)?;
        let (nx, np) = (self.x_axis.len() as isize, self.p_axis.len() as isize);
        let at = |a: isize, b: isize| {
            let clamp = |k: isize, n: isize| k.clamp(0, n - 1);
            let (ca, cb) = (clamp(a, nx), clamp(b, np));
            let v = |a: isize, b: isize| self.values[(a as usize, b as usize)];
            // Linear extrapolation past the border.
            let mut w = v(ca, cb);
            if a != ca {
                let inner = if a < 0 { 1 } else { nx - 2 };
                w = 2.0 * w - v(inner, cb);
            }
            if b != cb {
                let inner = if b < 0 { 1 } else { np - 2 };
                w = 2.0 * w - v(ca, inner);
            }
            w
        };
        let weights = |t: f64| {
            let t2 = t * t;
            let t3 = t2 * t;
            [
                -0.5 * t3 + t2 - 0.5 * t,
                1.5 * t3 - 2.5 * t2 + 1.0,
                -1.5 * t3 + 2.0 * t2 + 0.5 * t,
                0.5 * t3 - 0.5 * t2,
            ]
        };
        let (wx, wp) = (weights(fx), weights(fp));
        let mut total = 0.0;
        for (a, cx) in wx.iter().enumerate() {
            for (b, cp) in wp.iter().enumerate() {
                total += cx * cp * at(i as isize - 1 + a as isize, j as isize - 1 + b as isize);
            }
        }
        Some(total)
    }

    /// Largest `|W(x, p) − W(R_θ(x, p))|` over grid points whose rotation
    /// stays inside the grid.
    pub fn rotational_asymmetry(&self, angle: f64) -> f64 {
        let (s, c) = angle.sin_cos();
        let mut worst: f64 = 0.0;
        for (i, &x) in self.x_axis.iter().enumerate() {
            for (j, &p) in self.p_axis.iter().enumerate() {
                if let Some(w) = self.interpolate(c * x - s * p, s * x + c * p) {
                    worst = worst.max((w - self.values[(i, j)]).abs());
                }
            }
        }
        worst
    }

    /// Plain-text matrix: two header lines with the axes, then one line per
    /// x value holding `W` along p.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:.10e}")).collect::<Vec<_>>().join(" ");
        writeln!(out, "# x {}", join(&self.x_axis)).unwrap();
        writeln!(out, "# p {}", join(&self.p_axis)).unwrap();
        for row in self.values.row_iter() {
            let row: Vec<f64> = row.iter().copied().collect();
            writeln!(out, "{}", join(&row)).unwrap();
        }
        out
    }

    /// CSV triplets `x,p,W`, x-major.
    pub fn write_csv(&self, mut w: impl std::io::Write) -> Result<()> {
        writeln!(w, "x,p,W")?;
        for (i, x) in self.x_axis.iter().enumerate() {
            for (j, p) in self.p_axis.iter().enumerate() {
                writeln!(w, "{x:.10e},{p:.10e},{:.10e}", self.values[(i, j)])?;
            }
        }
        Ok(())
    }
}

/// Volume of the negative part, `½(∫|W| − ∫W)`, by Riemann sum.
pub fn negativity_volume(grid: &WignerGrid) -> f64 {
    -grid.values.iter().filter(|w| **w < 0.0).sum::<f64>() * grid.cell_area()
}

/// `∫ |W| dx dp − 1` by Riemann sum.
pub fn negativity_index(grid: &WignerGrid) -> f64 {
    grid.values.iter().map(|w| w.abs()).sum::<f64>() * grid.cell_area() - 1.0
}

/// `⟨x|ρ|x⟩` for `X = (b + b†)/√2`, from Hermite functions.
pub fn position_density(rho: &DMatrix<C64>, xs: &[f64]) -> Vec<f64> {
    let d = rho.nrows();
    xs.iter()
        .map(|&x| {
            let mut psi = Vec::with_capacity(d);
            psi.push(PI.powf(-0.25) * (-0.5 * x * x).exp());
            if d > 1 {
                psi.push(SQRT_2 * x * psi[0]);
            }
            for n in 1..d.saturating_sub(1) {
                let nf = n as f64;
                psi.push((2.0 / (nf + 1.0)).sqrt() * x * psi[n] - (nf / (nf + 1.0)).sqrt() * psi[n - 1]);
            }
            let mut s = C64::default();
            for m in 0..d {
                for n in 0..d {
                    s += rho[(m, n)] * psi[m] * psi[n];
                }
            }
            s.re
        })
        .collect()
}
