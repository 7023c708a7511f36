//! Dense helpers. nalgebra routes real `f64` products through a blocked gemm
//! but multiplies complex matrices with a generic loop, so complex products
//! are assembled from real ones here.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::hilbert::C64;

pub(crate) fn split(m: &DMatrix<C64>) -> (DMatrix<f64>, DMatrix<f64>) {
    (m.map(|z| z.re), m.map(|z| z.im))
}

pub(crate) fn join(re: &DMatrix<f64>, im: &DMatrix<f64>) -> DMatrix<C64> {
    re.zip_map(im, C64::new)
}

/// `a · b`.
pub(crate) fn cmul(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let (ar, ai) = split(a);
    let (br, bi) = split(b);
    join(&(&ar * &br - &ai * &bi), &(&ar * &bi + &ai * &br))
}

/// `m · m†`.
pub(crate) fn gram_outer(m: &DMatrix<C64>) -> DMatrix<C64> {
    let (a, b) = split(m);
    let re = &a * a.transpose() + &b * b.transpose();
    let im = &b * a.transpose() - &a * b.transpose();
    join(&re, &im)
}

/// `m† · m`.
pub(crate) fn gram_inner(m: &DMatrix<C64>) -> DMatrix<C64> {
    let (a, b) = split(m);
    let re = a.transpose() * &a + b.transpose() * &b;
    let im = a.transpose() * &b - b.transpose() * &a;
    join(&re, &im)
}

/// `real · m` for a real left factor.
pub(crate) fn real_mul(real: &DMatrix<f64>, m: &DMatrix<C64>) -> DMatrix<C64> {
    let (re, im) = split(m);
    join(&(real * re), &(real * im))
}

#[derive(Clone, Debug)]
pub(crate) enum EigenVectors {
    Real(DMatrix<f64>),
    Complex(DMatrix<C64>),
}

/// Eigendecomposition `A = W diag(λ) W†` of a Hermitian matrix.
#[derive(Clone, Debug)]
pub(crate) struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: EigenVectors,
}

/// Magnitude, relative to the largest entry, below which entries are zeroed
/// before an eigensolve; the shifted QR sweeps overflow on underflowing
/// squares otherwise.
const FLUSH_RELATIVE: f64 = f64::EPSILON * f64::EPSILON;

fn flush_tiny<T: nalgebra::ComplexField<RealField = f64>>(mut m: DMatrix<T>) -> DMatrix<T> {
    let floor = m.iter().map(|z| z.clone().modulus()).fold(0.0, f64::max) * FLUSH_RELATIVE;
    for z in m.iter_mut() {
        if z.clone().modulus() < floor {
            *z = T::zero();
        }
    }
    m
}

/// `(m + m†)/2` with an exactly real diagonal and tiny entries flushed.
fn hermitian_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    let mut h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    for i in 0..h.nrows() {
        h[(i, i)].im = 0.0;
    }
    flush_tiny(h)
}

impl HermitianEigen {
    pub fn new(m: &DMatrix<C64>) -> Self {
        if m.iter().all(|z| z.im == 0.0) {
            let eig = SymmetricEigen::new(flush_tiny(m.map(|z| z.re)));
            Self { values: eig.eigenvalues.iter().copied().collect(), vectors: EigenVectors::Real(eig.eigenvectors) }
        } else {
            let eig = SymmetricEigen::new(hermitian_part(m));
            Self {
                values: eig.eigenvalues.iter().copied().collect(),
                vectors: EigenVectors::Complex(eig.eigenvectors),
            }
        }
    }

    /// `W† · m`.
    pub fn to_eigenbasis(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        match &self.vectors {
            EigenVectors::Real(w) => real_mul(&w.transpose(), m),
            EigenVectors::Complex(w) => cmul(&w.adjoint(), m),
        }
    }

    /// `W · m`.
    pub fn out_of_eigenbasis(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        match &self.vectors {
            EigenVectors::Real(w) => real_mul(w, m),
            EigenVectors::Complex(w) => cmul(w, m),
        }
    }

    /// `f(A) = W diag(f(λ)) W†`.
    pub fn map_values(&self, f: impl Fn(f64) -> C64) -> DMatrix<C64> {
        let n = self.values.len();
        let phases = DMatrix::from_diagonal(&DVector::from_iterator(n, self.values.iter().map(|&l| f(l))));
        let right = self.to_eigenbasis(&DMatrix::identity(n, n));
        self.out_of_eigenbasis(&cmul(&phases, &right))
    }
}

pub(crate) fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    if m.iter().all(|z| z.im == 0.0) {
        SymmetricEigen::new(flush_tiny(m.map(|z| z.re))).eigenvalues.iter().copied().collect()
    } else {
        hermitian_part(m).symmetric_eigenvalues().iter().copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, m: usize) -> DMatrix<C64> {
        DMatrix::from_fn(n, m, |i, j| C64::new((i as f64 * 0.3 - j as f64).sin(), (i * j) as f64 * 0.01))
    }

    #[test]
    fn real_split_products_match_native() {
        let a = sample(5, 3);
        let b = sample(3, 4);
        assert!((cmul(&a, &b) - &a * &b).norm() < 1e-12);
        assert!((gram_outer(&a) - &a * a.adjoint()).norm() < 1e-12);
        assert!((gram_inner(&a) - a.adjoint() * &a).norm() < 1e-12);
    }

    #[test]
    fn eigen_reconstructs() {
        let a = sample(6, 6);
        let h = &a + a.adjoint();
        let eig = HermitianEigen::new(&h);
        let back = eig.map_values(|l| C64::new(l, 0.0));
        assert!((back - &h).norm() < 1e-10);
        let r = h.map(|z| C64::new(z.re, 0.0));
        let eig = HermitianEigen::new(&r);
        assert!(matches!(eig.vectors, EigenVectors::Real(_)));
        assert!((eig.map_values(|l| C64::new(l, 0.0)) - &r).norm() < 1e-10);
    }

    #[test]
    fn eigenvalues_survive_underflowing_entries() {
        let psi = DVector::from_fn(40, |k, _| C64::from_polar(10f64.powi(-4 * k as i32), 0.3 * k as f64));
        let m = gram_outer(&DMatrix::from_column_slice(40, 1, psi.as_slice()));
        let values = hermitian_eigenvalues(&m);
        assert!(values.iter().all(|v| v.is_finite()));
        let top = values.iter().copied().fold(f64::MIN, f64::max);
        assert!((top - psi.norm_squared()).abs() < 1e-12);
    }
}
