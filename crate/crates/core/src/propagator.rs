//! Exact propagators exp(-iHt) for piecewise-constant Hamiltonians.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64};
use crate::operator::{Operator, HERMITIAN_TOL};

/// Spectral decomposition H = V diag(values) V^dagger.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: DVector<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn new(h: &CMatrix) -> Result<Self> {
        if !h.is_square() {
            return Err(Error::DimensionMismatch("hamiltonian must be square".into()));
        }
        let deviation = linalg::hermiticity_defect(h);
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        // Symmetrise so the solver sees an exactly hermitian input.
        let sym = (h + h.adjoint()) * C64::new(0.5, 0.0);
        let eig = sym.symmetric_eigen();
        Ok(Self { values: eig.eigenvalues, vectors: eig.eigenvectors })
    }

    /// exp(-i H t).
    pub fn evolve(&self, t: f64) -> CMatrix {
        self.function(|e| C64::from_polar(1.0, -e * t))
    }

    /// V diag(f(values)) V^dagger.
    pub fn function(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let p = f(self.values[j]);
            let mut col = scaled.column_mut(j);
            col *= p;
        }
        linalg::matmul(&scaled, &self.vectors.adjoint())
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Spread between largest and smallest eigenvalue; unaffected by a constant offset of H.
    pub fn bandwidth(&self) -> f64 {
        self.values.max() - self.values.min()
    }
}

/// U = exp(-i H t) for a hermitian operator.
pub fn propagator(h: &Operator, t: f64) -> Result<Operator> {
    let eig = HermitianEigen::new(h.matrix())?;
    Operator::new(h.dims().to_vec(), eig.evolve(t))
}

/// max |U^dagger U - I|.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.nrows();
    linalg::max_abs_diff(&linalg::matmul(&u.adjoint(), u), &CMatrix::identity(n, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::I;
    use crate::spin::pauli;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn random_hermitian(vals: &[f64]) -> CMatrix {
        let n = 4;
        let a = CMatrix::from_fn(n, n, |i, j| C64::new(vals[i * n + j], vals[16 + i * n + j]));
        (&a + a.adjoint()) * C64::new(0.5, 0.0)
    }

    #[test]
    fn zero_hamiltonian_gives_identity() {
        let u = propagator(&Operator::zeros(&[2, 3]), 1.7).unwrap();
        assert!(linalg::max_abs_diff(u.matrix(), &CMatrix::identity(6, 6)) < 1e-15);
    }

    #[test]
    fn rabi_pi_pulse_is_minus_i_sigma_x() {
        let omega = 2.0 * PI * 7.75e6;
        let [sx, _, _] = pauli();
        let h = Operator::single(&sx * C64::new(omega / 2.0, 0.0));
        let u = propagator(&h, PI / omega).unwrap();
        assert!(linalg::max_abs_diff(u.matrix(), &(&sx * -I)) < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
        );
        let op = Operator::new(vec![2], m).unwrap();
        assert!(matches!(propagator(&op, 1.0), Err(Error::NotHermitian { .. })));
    }

    proptest! {
        #[test]
        fn semigroup_and_time_reversal(
            vals in proptest::collection::vec(-1.0f64..1.0, 32),
            t1 in -3.0f64..3.0, t2 in -3.0f64..3.0,
        ) {
            let h = random_hermitian(&vals);
            let eig = HermitianEigen::new(&h).unwrap();
            let u1 = eig.evolve(t1);
            let u2 = eig.evolve(t2);
            let u12 = eig.evolve(t1 + t2);
            prop_assert!(linalg::max_abs_diff(&linalg::matmul(&u1, &u2), &u12) < 1e-10);
            prop_assert!(linalg::max_abs_diff(&eig.evolve(-t1), &u1.adjoint()) < 1e-10);
            prop_assert!(unitarity_defect(&u1) < 1e-10);
        }
    }
}
