//! Angular-momentum matrices for spin-1/2 and spin-1 in the Jz eigenbasis, highest
//! magnetic quantum number first.

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64, I, ONE, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Spin {
    Half,
    One,
}

impl Spin {
    pub fn from_value(s: f64) -> Result<Self> {
        if s == 0.5 {
            Ok(Spin::Half)
        } else if s == 1.0 {
            Ok(Spin::One)
        } else {
            Err(Error::InvalidInput(format!("unsupported spin {s}; only 1/2 and 1 are supported")))
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Spin::Half => 0.5,
            Spin::One => 1.0,
        }
    }

    pub fn dim(self) -> usize {
        match self {
            Spin::Half => 2,
            Spin::One => 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpinOperators {
    pub x: CMatrix,
    pub y: CMatrix,
    pub z: CMatrix,
    pub plus: CMatrix,
    pub minus: CMatrix,
}

impl SpinOperators {
    pub fn new(spin: Spin) -> Self {
        let s = spin.value();
        let n = spin.dim();
        let m = |i: usize| s - i as f64;
        let z = CMatrix::from_fn(n, n, |i, j| if i == j { C64::new(m(i), 0.0) } else { ZERO });
        // <m+1| J+ |m> = sqrt(s(s+1) - m(m+1))
        let plus = CMatrix::from_fn(n, n, |i, j| {
            if j == i + 1 {
                C64::new((s * (s + 1.0) - m(j) * (m(j) + 1.0)).sqrt(), 0.0)
            } else {
                ZERO
            }
        });
        let minus = plus.adjoint();
        let x = (&plus + &minus) * C64::new(0.5, 0.0);
        let y = (&plus - &minus) * (-0.5 * I);
        Self { x, y, z, plus, minus }
    }

    pub fn component(&self, axis: usize) -> &CMatrix {
        match axis {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("axis index {axis} out of range"),
        }
    }
}

pub fn spin_operators(s: f64) -> Result<SpinOperators> {
    Ok(SpinOperators::new(Spin::from_value(s)?))
}

/// Pauli matrices (sigma_x, sigma_y, sigma_z) for the NV two-level system. Index 0 is the
/// upper (m_s = +1) level, so sigma_z = diag(1, -1).
pub fn pauli() -> [CMatrix; 3] {
    let sx = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
    let sy = CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]);
    let sz = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]);
    [sx, sy, sz]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;

    #[test]
    fn spin_half_z() {
        let ops = spin_operators(0.5).unwrap();
        assert_eq!(ops.z[(0, 0)], C64::new(0.5, 0.0));
        assert_eq!(ops.z[(1, 1)], C64::new(-0.5, 0.0));
    }

    #[test]
    fn spin_one_raising_has_sqrt2_superdiagonal() {
        let ops = spin_operators(1.0).unwrap();
        let r2 = 2f64.sqrt();
        assert!((ops.plus[(0, 1)].re - r2).abs() < 1e-15);
        assert!((ops.plus[(1, 2)].re - r2).abs() < 1e-15);
        assert_eq!(ops.plus[(1, 0)], ZERO);
        for (i, m) in [1.0, 0.0, -1.0].iter().enumerate() {
            assert_eq!(ops.z[(i, i)].re, *m);
        }
    }

    #[test]
    fn commutation_and_casimir() {
        for s in [0.5, 1.0] {
            let o = spin_operators(s).unwrap();
            let comm = &o.x * &o.y - &o.y * &o.x;
            assert!(max_abs_diff(&comm, &(&o.z * I)) < 1e-14);
            let cas = &o.x * &o.x + &o.y * &o.y + &o.z * &o.z;
            let n = o.z.nrows();
            let expect = CMatrix::identity(n, n) * C64::new(s * (s + 1.0), 0.0);
            assert!(max_abs_diff(&cas, &expect) < 1e-12);
            assert!(max_abs_diff(&o.plus, &(&o.x + &o.y * I)) < 1e-15);
        }
    }

    #[test]
    fn unsupported_spin_rejected() {
        assert!(spin_operators(1.5).is_err());
        assert!(spin_operators(0.0).is_err());
    }
}
