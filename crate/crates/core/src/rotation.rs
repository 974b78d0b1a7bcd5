//! Orientation of a principal-axis frame relative to the laboratory, and tensor rotation.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

/// Orientation of a principal z-axis: `theta` is the angle to the lab z-axis (the field
/// direction) and `phi` the rotation about lab z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationAngles {
    theta: f64,
    phi: f64,
}

impl RotationAngles {
    /// theta in [0, pi], phi in (-pi, pi].
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(theta.is_finite() && phi.is_finite()) {
            return Err(Error::InvalidInput("orientation angles must be finite".into()));
        }
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::InvalidInput(format!("theta = {theta} rad outside [0, pi]")));
        }
        if !(phi > -PI && phi <= PI) {
            return Err(Error::InvalidInput(format!("phi = {phi} rad outside (-pi, pi]")));
        }
        Ok(Self { theta, phi })
    }

    pub fn from_degrees(theta: f64, phi: f64) -> Result<Self> {
        Self::new(theta.to_radians(), phi.to_radians())
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// R(theta, phi) = Rz(phi) Ry(theta).
    pub fn matrix(&self) -> Matrix3<f64> {
        rot_z(self.phi) * rot_y(self.theta)
    }
}

pub fn rot_y(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rot_z(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

pub fn rot_x(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

/// R T R^T for a tensor given by its principal values.
pub fn rotate_tensor(principal: &Vector3<f64>, angles: &RotationAngles) -> Matrix3<f64> {
    Frame::from_angles(angles).tensor(principal)
}

/// A general principal-axis frame. Tumbling composes arbitrary rotations onto the
/// (theta, phi) parametrisation, so the full matrix is carried rather than two angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    rotation: Matrix3<f64>,
}

impl Frame {
    pub fn from_angles(angles: &RotationAngles) -> Self {
        Self { rotation: angles.matrix() }
    }

    pub fn from_matrix(rotation: Matrix3<f64>) -> Result<Self> {
        let defect = (rotation.transpose() * rotation - Matrix3::identity()).abs().max();
        if defect > 1e-9 || (rotation.determinant() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput("frame matrix is not a proper rotation".into()));
        }
        Ok(Self { rotation })
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    /// Applies a lab-frame rotation to the frame.
    pub fn rotated_by(&self, r: &Matrix3<f64>) -> Self {
        Self { rotation: r * self.rotation }
    }

    pub fn principal_z(&self) -> Vector3<f64> {
        self.rotation.column(2).into_owned()
    }

    /// Polar angle and azimuth of the principal z-axis. The third Euler angle (rotation
    /// about the principal axis) is not represented.
    pub fn angles(&self) -> RotationAngles {
        let z = self.principal_z();
        let theta = z.z.clamp(-1.0, 1.0).acos();
        let mut phi = z.y.atan2(z.x);
        if phi <= -PI {
            phi += 2.0 * PI;
        }
        if z.x.hypot(z.y) < 1e-15 {
            phi = 0.0;
        }
        RotationAngles { theta, phi }
    }

    pub fn tensor(&self, principal: &Vector3<f64>) -> Matrix3<f64> {
        self.rotation * Matrix3::from_diagonal(principal) * self.rotation.transpose()
    }
}
