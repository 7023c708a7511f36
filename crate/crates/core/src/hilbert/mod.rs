//! Composite Hilbert-space algebra: layouts, operators, states and partial
//! traces. Operators and states are immutable values; every operation returns
//! a fresh value.

mod layout;
mod operator;
mod sparse;
mod state;

pub use layout::{Factor, SpaceLayout};
pub use operator::{
    annihilation, annihilation_on, number_on, qubit_operators, qubit_operators_on, tensor,
    Operator, QubitOperators, HERMITIAN_TOL,
};
pub(crate) use operator::hermiticity_defect as operator_hermiticity_defect;
pub use sparse::SparseOperator;
pub use state::{Ensemble, QuantumState, StateRepr, MIN_EIGENVALUE_TOL, NORM_TOL, WEIGHT_FLOOR};

pub type C64 = num_complex::Complex64;
