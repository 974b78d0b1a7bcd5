//! Complex square matrices tagged with the tensor-product structure they act on.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64};

/// Relative tolerance on `max |A - A^dagger| / max |A|` for operators flagged hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    dims: Vec<usize>,
    mat: CMatrix,
    hermitian_hint: bool,
}

impl Operator {
    pub fn new(dims: Vec<usize>, mat: CMatrix) -> Result<Self> {
        check_dims(&dims, &mat)?;
        Ok(Self { dims, mat, hermitian_hint: false })
    }

    /// Builds an operator flagged hermitian; rejects matrices that are not, within tolerance.
    pub fn hermitian(dims: Vec<usize>, mat: CMatrix) -> Result<Self> {
        check_dims(&dims, &mat)?;
        let deviation = linalg::hermiticity_defect(&mat);
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self { dims, mat, hermitian_hint: true })
    }

    /// Single-subsystem operator.
    pub fn single(mat: CMatrix) -> Self {
        let n = mat.nrows();
        assert!(mat.is_square());
        let hermitian_hint = linalg::hermiticity_defect(&mat) <= HERMITIAN_TOL;
        Self { dims: vec![n], mat, hermitian_hint }
    }

    pub fn identity(dims: &[usize]) -> Self {
        let n = dims.iter().product();
        Self { dims: dims.to_vec(), mat: CMatrix::identity(n, n), hermitian_hint: true }
    }

    pub fn zeros(dims: &[usize]) -> Self {
        let n = dims.iter().product();
        Self { dims: dims.to_vec(), mat: CMatrix::zeros(n, n), hermitian_hint: true }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn hermitian_hint(&self) -> bool {
        self.hermitian_hint
    }

    pub fn hermiticity_defect(&self) -> f64 {
        linalg::hermiticity_defect(&self.mat)
    }

    pub fn adjoint(&self) -> Self {
        Self { dims: self.dims.clone(), mat: self.mat.adjoint(), hermitian_hint: self.hermitian_hint }
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { dims: self.dims.clone(), mat: &self.mat * C64::new(s, 0.0), hermitian_hint: self.hermitian_hint }
    }

    pub fn scale_complex(&self, s: C64) -> Self {
        Self { dims: self.dims.clone(), mat: &self.mat * s, hermitian_hint: self.hermitian_hint && s.im == 0.0 }
    }

    /// Tensor product; the subsystem lists are concatenated.
    pub fn kron(&self, other: &Operator) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self {
            dims,
            mat: linalg::kron(&self.mat, &other.mat),
            hermitian_hint: self.hermitian_hint && other.hermitian_hint,
        }
    }

    pub fn commutator(&self, other: &Operator) -> Result<Self> {
        Ok((self * other)? - (other * self)?)
    }

    fn same_structure(&self, other: &Operator) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", self.dims, other.dims)));
        }
        Ok(())
    }
}

fn check_dims(dims: &[usize], mat: &CMatrix) -> Result<()> {
    if !mat.is_square() {
        return Err(Error::DimensionMismatch(format!("matrix is {}x{}", mat.nrows(), mat.ncols())));
    }
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::DimensionMismatch(format!("invalid subsystem dimensions {dims:?}")));
    }
    let n: usize = dims.iter().product();
    if n != mat.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "subsystem dimensions {dims:?} give {n}, matrix is {}",
            mat.nrows()
        )));
    }
    Ok(())
}

/// Places `op` on subsystem `slot` of the product space `dims`, identity elsewhere.
pub fn embed(op: &CMatrix, slot: usize, dims: &[usize]) -> Result<Operator> {
    if slot >= dims.len() {
        return Err(Error::InvalidInput(format!("slot {slot} out of range for {} subsystems", dims.len())));
    }
    if !op.is_square() || op.nrows() != dims[slot] {
        return Err(Error::DimensionMismatch(format!(
            "operator of dimension {} placed on slot {slot} of dimension {}",
            op.nrows(),
            dims[slot]
        )));
    }
    let left: usize = dims[..slot].iter().product();
    let right: usize = dims[slot + 1..].iter().product();
    let mat = linalg::kron(&linalg::kron(&CMatrix::identity(left, left), op), &CMatrix::identity(right, right));
    let hermitian_hint = linalg::hermiticity_defect(op) <= HERMITIAN_TOL;
    Ok(Operator { dims: dims.to_vec(), mat, hermitian_hint })
}

impl Add for Operator {
    type Output = Operator;
    fn add(self, rhs: Operator) -> Operator {
        &self + &rhs
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.same_structure(rhs).expect("operator sum");
        Operator {
            dims: self.dims.clone(),
            mat: &self.mat + &rhs.mat,
            hermitian_hint: self.hermitian_hint && rhs.hermitian_hint,
        }
    }
}

impl Sub for Operator {
    type Output = Operator;
    fn sub(self, rhs: Operator) -> Operator {
        &self - &rhs
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self.same_structure(rhs).expect("operator difference");
        Operator {
            dims: self.dims.clone(),
            mat: &self.mat - &rhs.mat,
            hermitian_hint: self.hermitian_hint && rhs.hermitian_hint,
        }
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale(-1.0)
    }
}

impl Mul for &Operator {
    type Output = Result<Operator>;
    fn mul(self, rhs: &Operator) -> Result<Operator> {
        self.same_structure(rhs)?;
        Ok(Operator { dims: self.dims.clone(), mat: linalg::matmul(&self.mat, &rhs.mat), hermitian_hint: false })
    }
}
