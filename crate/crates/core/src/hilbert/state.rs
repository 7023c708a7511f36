use nalgebra::{DMatrix, DVector};

use super::{operator::hermiticity_defect, Operator, SpaceLayout, C64};
use crate::error::{Error, Result};
use crate::linalg::{gram_outer, hermitian_eigenvalues, HermitianEigen};

pub const NORM_TOL: f64 = 1e-10;
pub const MIN_EIGENVALUE_TOL: f64 = 1e-9;
/// Ensemble weights below this are dropped.
pub const WEIGHT_FLOOR: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub enum StateRepr {
    Pure(DVector<C64>),
    Mixed(DMatrix<C64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    layout: SpaceLayout,
    repr: StateRepr,
}

impl QuantumState {
    pub fn pure(layout: SpaceLayout, psi: DVector<C64>) -> Result<Self> {
        if psi.len() != layout.total_dim() {
            return Err(Error::Layout(format!(
                "vector of length {} for dimension {}",
                psi.len(),
                layout.total_dim()
            )));
        }
        let norm = psi.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("vector norm {norm} differs from 1")));
        }
        Ok(Self { layout, repr: StateRepr::Pure(psi) })
    }

    /// Validated density matrix: Hermitian, unit trace, no eigenvalue below
    /// `−MIN_EIGENVALUE_TOL`.
    pub fn mixed(layout: SpaceLayout, rho: DMatrix<C64>) -> Result<Self> {
        let dim = layout.total_dim();
        if rho.nrows() != dim || rho.ncols() != dim {
            return Err(Error::Layout(format!("density matrix is not {dim}x{dim}")));
        }
        let defect = hermiticity_defect(&rho);
        if defect > NORM_TOL {
            return Err(Error::InvalidState(format!("density matrix not Hermitian ({defect:e})")));
        }
        let trace = rho.trace().re;
        if (trace - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("trace {trace} differs from 1")));
        }
        let min = hermitian_eigenvalues(&rho).into_iter().fold(f64::INFINITY, f64::min);
        if min < -MIN_EIGENVALUE_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { layout, repr: StateRepr::Mixed(rho) })
    }

    /// Density matrix produced by a trusted computation; only shape is checked.
    pub(crate) fn mixed_unchecked(layout: SpaceLayout, rho: DMatrix<C64>) -> Self {
        debug_assert_eq!(rho.nrows(), layout.total_dim());
        Self { layout, repr: StateRepr::Mixed(rho) }
    }

    pub(crate) fn pure_unchecked(layout: SpaceLayout, psi: DVector<C64>) -> Self {
        debug_assert_eq!(psi.len(), layout.total_dim());
        Self { layout, repr: StateRepr::Pure(psi) }
    }

    /// Product basis state with one index per factor.
    pub fn basis(layout: SpaceLayout, indices: &[usize]) -> Result<Self> {
        let flat = layout.flat_index(indices)?;
        let mut psi = DVector::zeros(layout.total_dim());
        psi[flat] = C64::new(1.0, 0.0);
        Ok(Self { layout, repr: StateRepr::Pure(psi) })
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn repr(&self) -> &StateRepr {
        &self.repr
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.repr, StateRepr::Pure(_))
    }

    pub fn dim(&self) -> usize {
        self.layout.total_dim()
    }

    pub fn as_vector(&self) -> Option<&DVector<C64>> {
        match &self.repr {
            StateRepr::Pure(v) => Some(v),
            StateRepr::Mixed(_) => None,
        }
    }

    pub fn density_matrix(&self) -> DMatrix<C64> {
        match &self.repr {
            StateRepr::Pure(v) => v * v.adjoint(),
            StateRepr::Mixed(m) => m.clone(),
        }
    }

    pub fn trace(&self) -> f64 {
        match &self.repr {
            StateRepr::Pure(v) => v.norm_squared(),
            StateRepr::Mixed(m) => m.trace().re,
        }
    }

    pub fn expectation(&self, op: &Operator) -> Result<C64> {
        if op.layout() != &self.layout {
            return Err(Error::Layout("operator and state layouts differ".into()));
        }
        Ok(match &self.repr {
            StateRepr::Pure(v) => v.dotc(&(op.matrix() * v)),
            StateRepr::Mixed(m) => (op.matrix() * m).trace(),
        })
    }

    /// Population of each basis state.
    pub fn populations(&self) -> Vec<f64> {
        match &self.repr {
            StateRepr::Pure(v) => v.iter().map(|z| z.norm_sqr()).collect(),
            StateRepr::Mixed(m) => m.diagonal().iter().map(|z| z.re).collect(),
        }
    }

    /// `self ⊗ other`; pure only when both are.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let layout = self.layout.concat(&other.layout)?;
        Ok(match (&self.repr, &other.repr) {
            (StateRepr::Pure(a), StateRepr::Pure(b)) => Self { layout, repr: StateRepr::Pure(a.kronecker(b)) },
            _ => Self {
                layout,
                repr: StateRepr::Mixed(self.density_matrix().kronecker(&other.density_matrix())),
            },
        })
    }

    /// Reduced state on the factor `keep`.
    pub fn partial_trace(&self, keep: &str) -> Result<Self> {
        let dim = self.layout.dim_of(keep)?;
        let reduced = self.reduced_matrix(keep)?;
        Ok(Self::mixed_unchecked(SpaceLayout::single(keep, dim)?, reduced))
    }

    pub fn reduced_matrix(&self, keep: &str) -> Result<DMatrix<C64>> {
        match &self.repr {
            StateRepr::Pure(_) => self.ensemble().reduced_matrix(keep),
            StateRepr::Mixed(rho) => {
                let (left, dim, right) = self.layout.split_at(self.layout.position(keep)?);
                let mut out = DMatrix::zeros(dim, dim);
                for k in 0..dim {
                    for kp in 0..dim {
                        let mut s = C64::new(0.0, 0.0);
                        for l in 0..left {
                            for r in 0..right {
                                s += rho[((l * dim + k) * right + r, (l * dim + kp) * right + r)];
                            }
                        }
                        out[(k, kp)] = s;
                    }
                }
                Ok(out)
            }
        }
    }

    /// Decomposition `ρ = Σ_j ψ_j ψ_j†` into weighted columns.
    pub fn ensemble(&self) -> Ensemble {
        let columns = match &self.repr {
            StateRepr::Pure(v) => DMatrix::from_column_slice(v.len(), 1, v.as_slice()),
            StateRepr::Mixed(rho) => mixed_columns(rho),
        };
        Ensemble { layout: self.layout.clone(), columns }
    }

    /// `½ Σ |eig(ρ − σ)|`.
    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        if self.layout != other.layout {
            return Err(Error::Layout("state layouts differ".into()));
        }
        let diff = self.density_matrix() - other.density_matrix();
        Ok(0.5 * hermitian_eigenvalues(&diff).into_iter().map(f64::abs).sum::<f64>())
    }
}

fn mixed_columns(rho: &DMatrix<C64>) -> DMatrix<C64> {
    let n = rho.nrows();
    let is_diagonal = (0..n).all(|r| (0..n).all(|c| r == c || rho[(r, c)] == C64::new(0.0, 0.0)));
    if is_diagonal {
        let support: Vec<usize> = (0..n).filter(|&i| rho[(i, i)].re > WEIGHT_FLOOR).collect();
        let mut cols = DMatrix::zeros(n, support.len());
        for (j, &i) in support.iter().enumerate() {
            cols[(i, j)] = C64::new(rho[(i, i)].re.sqrt(), 0.0);
        }
        return cols;
    }
    let eig = HermitianEigen::new(rho);
    let vectors = eig.out_of_eigenbasis(&DMatrix::identity(n, n));
    let support: Vec<usize> = (0..n).filter(|&i| eig.values[i] > WEIGHT_FLOOR).collect();
    let mut cols = DMatrix::zeros(n, support.len());
    for (j, &i) in support.iter().enumerate() {
        cols.set_column(j, &(vectors.column(i) * C64::new(eig.values[i].sqrt(), 0.0)));
    }
    cols
}

/// Mixed state held as weighted columns, `ρ = Ψ Ψ†`. A pure state is one
/// column. Reduced states and their spectra are obtained without forming the
/// full composite density matrix.
#[derive(Clone, Debug)]
pub struct Ensemble {
    layout: SpaceLayout,
    columns: DMatrix<C64>,
}

impl Ensemble {
    pub fn new(layout: SpaceLayout, columns: DMatrix<C64>) -> Result<Self> {
        if columns.nrows() != layout.total_dim() {
            return Err(Error::Layout("ensemble columns do not match layout".into()));
        }
        Ok(Self { layout, columns })
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn columns(&self) -> &DMatrix<C64> {
        &self.columns
    }

    pub fn rank_bound(&self) -> usize {
        self.columns.ncols()
    }

    pub fn to_state(&self) -> QuantumState {
        if self.columns.ncols() == 1 {
            QuantumState::pure_unchecked(self.layout.clone(), self.columns.column(0).into_owned())
        } else {
            QuantumState::mixed_unchecked(self.layout.clone(), gram_outer(&self.columns))
        }
    }

    /// Matrix `M` with `ρ_keep = M M†`: row `k` holds every amplitude whose
    /// `keep` index is `k`, across columns and the other factors.
    pub fn schmidt_matrix(&self, keep: &str) -> Result<DMatrix<C64>> {
        let (left, dim, right) = self.layout.split_at(self.layout.position(keep)?);
        let ncols = self.columns.ncols();
        let width = ncols * left * right;
        let mut m = DMatrix::zeros(dim, width);
        for j in 0..ncols {
            let col = self.columns.column(j);
            for l in 0..left {
                for r in 0..right {
                    let w = (j * left + l) * right + r;
                    for k in 0..dim {
                        m[(k, w)] = col[(l * dim + k) * right + r];
                    }
                }
            }
        }
        Ok(m)
    }

    pub fn reduced_matrix(&self, keep: &str) -> Result<DMatrix<C64>> {
        Ok(gram_outer(&self.schmidt_matrix(keep)?))
    }

    /// Diagonal of the reduced state on `keep`.
    pub fn reduced_populations(&self, keep: &str) -> Result<Vec<f64>> {
        let m = self.schmidt_matrix(keep)?;
        Ok(m.row_iter().map(|row| row.iter().map(|z| z.norm_sqr()).sum()).collect())
    }
}
