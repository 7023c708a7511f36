use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;

use super::{SpaceLayout, SparseOperator, C64};
use crate::error::{Error, Result};

/// Tolerance on `max |A - A†|` below which an operator is flagged Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Dense operator on a composite space.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    layout: SpaceLayout,
    matrix: DMatrix<C64>,
    hermitian: bool,
}

impl Operator {
    /// Wraps a matrix, detecting Hermiticity at [`HERMITIAN_TOL`].
    pub fn from_matrix(layout: SpaceLayout, matrix: DMatrix<C64>) -> Result<Self> {
        let dim = layout.total_dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::Layout(format!(
                "matrix is {}x{}, layout dimension is {dim}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let hermitian = hermiticity_defect(&matrix) < HERMITIAN_TOL;
        Ok(Self { layout, matrix, hermitian })
    }

    pub fn zeros(layout: SpaceLayout) -> Self {
        let dim = layout.total_dim();
        Self { layout, matrix: DMatrix::zeros(dim, dim), hermitian: true }
    }

    pub fn identity(layout: SpaceLayout) -> Self {
        let dim = layout.total_dim();
        Self { layout, matrix: DMatrix::identity(dim, dim), hermitian: true }
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.matrix[(row, col)]
    }

    pub fn dagger(&self) -> Self {
        Self { layout: self.layout.clone(), matrix: self.matrix.adjoint(), hermitian: self.hermitian }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self::from_matrix(self.layout.clone(), &self.matrix * factor).expect("same layout")
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_layout(other)?;
        Self::from_matrix(self.layout.clone(), &self.matrix + &other.matrix)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_layout(other)?;
        Self::from_matrix(self.layout.clone(), &self.matrix * &other.matrix)
    }

    /// `[self, other] = self·other − other·self`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.check_layout(other)?;
        Self::from_matrix(
            self.layout.clone(),
            &self.matrix * &other.matrix - &other.matrix * &self.matrix,
        )
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.matrix)
    }

    /// True when every imaginary part vanishes exactly.
    pub fn is_real(&self) -> bool {
        self.matrix.iter().all(|z| z.im == 0.0)
    }

    /// Lifts a single-factor operator to `I ⊗ … ⊗ self ⊗ … ⊗ I` on `layout`.
    pub fn embed(&self, layout: &SpaceLayout, label: &str) -> Result<Self> {
        Ok(SparseOperator::from_dense(self).embed(layout, label)?.to_dense())
    }

    pub fn to_sparse(&self) -> SparseOperator {
        SparseOperator::from_dense(self)
    }

    fn check_layout(&self, other: &Self) -> Result<()> {
        if self.layout != other.layout {
            return Err(Error::Layout("operator layouts differ".into()));
        }
        Ok(())
    }
}

pub(crate) fn hermiticity_defect(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for r in 0..n {
        for c in r..n {
            worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    worst
}

macro_rules! binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&Operator> for &Operator {
            type Output = Operator;

            /// Panics when the layouts differ.
            fn $method(self, rhs: &Operator) -> Operator {
                assert_eq!(self.layout, rhs.layout, "operator layouts differ");
                Operator::from_matrix(self.layout.clone(), &self.matrix $op &rhs.matrix)
                    .expect("same layout")
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

/// Kronecker product with concatenated layout; the Hermitian flag is the AND
/// of the inputs.
pub fn tensor(a: &Operator, b: &Operator) -> Result<Operator> {
    let layout = a.layout.concat(&b.layout)?;
    Ok(Operator { layout, matrix: a.matrix.kronecker(&b.matrix), hermitian: a.hermitian && b.hermitian })
}

/// Truncated annihilation operator on the oscillator `b`: `⟨n−1|b|n⟩ = √n`.
pub fn annihilation(cutoff: usize) -> Result<Operator> {
    annihilation_on(crate::OSCILLATOR, cutoff)
}

pub fn annihilation_on(label: &str, cutoff: usize) -> Result<Operator> {
    Ok(SparseOperator::annihilation(label, cutoff)?.to_dense())
}

/// Number operator `b†b` on a single factor.
pub fn number_on(label: &str, cutoff: usize) -> Result<Operator> {
    let diag: Vec<C64> = (0..cutoff).map(|n| C64::new(n as f64, 0.0)).collect();
    Ok(SparseOperator::diagonal(SpaceLayout::single(label, cutoff)?, &diag)?.to_dense())
}

/// Qubit ladder and Pauli-z operators in `(g, e)` storage order.
#[derive(Clone, Debug)]
pub struct QubitOperators {
    pub plus: Operator,
    pub minus: Operator,
    pub z: Operator,
}

pub fn qubit_operators() -> QubitOperators {
    qubit_operators_on(crate::QUBIT)
}

pub fn qubit_operators_on(label: &str) -> QubitOperators {
    let layout = SpaceLayout::single(label, 2).expect("qubit layout");
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    // Index 0 = g, index 1 = e.
    let plus = DMatrix::from_row_slice(2, 2, &[zero, zero, one, zero]);
    let minus = plus.adjoint();
    let z = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-one, one]));
    QubitOperators {
        plus: Operator::from_matrix(layout.clone(), plus).unwrap(),
        minus: Operator::from_matrix(layout.clone(), minus).unwrap(),
        z: Operator::from_matrix(layout, z).unwrap(),
    }
}
