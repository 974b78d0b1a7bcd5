//! Dipolar couplings from label positions, and the rigid tumbling of the labelled molecule.

use nalgebra::{Matrix3, Vector3};

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::rotation::{rot_x, Frame};

/// Smallest distance (nm) accepted in a d^-3 coupling.
pub const MIN_DISTANCE_NM: f64 = 0.1;

/// Label positions in the NV frame (nm, NV at the origin) and the tumbling pivot. The
/// tumbling axis is the lab x axis through the pivot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabGeometry {
    r1: Vector3<f64>,
    r2: Vector3<f64>,
    pivot: Vector3<f64>,
}

impl LabGeometry {
    pub fn new(r1: Vector3<f64>, r2: Vector3<f64>, pivot: Vector3<f64>) -> Result<Self> {
        let g = Self { r1, r2, pivot };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, d) in [("|r1|", self.r1.norm()), ("|r2|", self.r2.norm()), ("|r1 - r2|", (self.r1 - self.r2).norm())]
        {
            if !(d > MIN_DISTANCE_NM) {
                return Err(Error::DegenerateGeometry(format!("{name} = {d} nm is below {MIN_DISTANCE_NM} nm")));
            }
        }
        Ok(())
    }

    pub fn r1(&self) -> Vector3<f64> {
        self.r1
    }

    pub fn r2(&self) -> Vector3<f64> {
        self.r2
    }

    pub fn positions(&self) -> [Vector3<f64>; 2] {
        [self.r1, self.r2]
    }

    pub fn pivot(&self) -> Vector3<f64> {
        self.pivot
    }

    pub fn axis(&self) -> Vector3<f64> {
        Vector3::x()
    }

    pub fn distance(&self) -> f64 {
        (self.r1 - self.r2).norm()
    }

    /// Replaces the second label's position (used when comparing label separations).
    pub fn with_r2(&self, r2: Vector3<f64>) -> Result<Self> {
        Self::new(self.r1, r2, self.pivot)
    }
}

/// a = prefactor / d^3 [z - 3 r_z r / d^2]: the NV–label coupling vector.
pub fn nv_label_coupling(r: &Vector3<f64>, c: &PhysicalConstants) -> Result<Vector3<f64>> {
    let d = r.norm();
    if !(d > MIN_DISTANCE_NM) {
        return Err(Error::DegenerateGeometry(format!("label at {d} nm from the NV")));
    }
    let scale = c.dipolar_prefactor / d.powi(3);
    Ok((Vector3::z() - r * (3.0 * r.z / (d * d))) * scale)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterLabelCoupling {
    /// Signed coupling, rad/s.
    pub g12: f64,
    /// Angle between the inter-label axis and the field, folded to [0, pi/2].
    pub beta: f64,
    pub distance: f64,
}

pub fn inter_label_coupling(r1: &Vector3<f64>, r2: &Vector3<f64>, c: &PhysicalConstants) -> Result<InterLabelCoupling> {
    let r12 = r1 - r2;
    let d = r12.norm();
    if !(d > MIN_DISTANCE_NM) {
        return Err(Error::DegenerateGeometry(format!("labels {d} nm apart")));
    }
    let cos_beta = (r12.z / d).clamp(-1.0, 1.0);
    let g12 = c.dipolar_prefactor / d.powi(3) * (1.0 - 3.0 * cos_beta * cos_beta);
    Ok(InterLabelCoupling { g12, beta: cos_beta.abs().acos(), distance: d })
}

/// Coupling for a given distance and cos^2 of the inter-label angle.
pub fn dipolar_coupling(distance: f64, cos2_beta: f64, c: &PhysicalConstants) -> f64 {
    c.dipolar_prefactor / distance.powi(3) * (1.0 - 3.0 * cos2_beta)
}

/// Rigid rotation of the molecule by `delta` about the lab x axis through the pivot.
/// Positions and principal frames move together.
pub fn apply_tumble(geometry: &LabGeometry, frames: &[Frame; 2], delta: f64) -> (LabGeometry, [Frame; 2]) {
    if delta == 0.0 {
        return (*geometry, *frames);
    }
    let r = rot_x(delta);
    let p = geometry.pivot;
    let mv = |x: Vector3<f64>| p + r * (x - p);
    let g = LabGeometry { r1: mv(geometry.r1), r2: mv(geometry.r2), pivot: p };
    (g, [frames[0].rotated_by(&r), frames[1].rotated_by(&r)])
}

/// Polar angle of a principal axis after the tumbling rotation:
/// arccos[cos δ cos θ + sin δ sin θ sin φ].
pub fn azimuth_after_tumble(theta_eq: f64, phi_eq: f64, delta: f64) -> f64 {
    if delta == 0.0 {
        return theta_eq;
    }
    let (sd, cd) = delta.sin_cos();
    (cd * theta_eq.cos() + sd * theta_eq.sin() * phi_eq.sin()).clamp(-1.0, 1.0).acos()
}

/// Parameters (A, phi) of cos^2 β(δ) = A^2 cos^2(δ + phi) for the inter-label axis under
/// rotation about x.
pub fn beta_modulation(r1: &Vector3<f64>, r2: &Vector3<f64>) -> (f64, f64) {
    let r12 = r1 - r2;
    let d = r12.norm();
    // Rotating by δ gives r12_z(δ) = y sin δ + z cos δ = sqrt(y²+z²) cos(δ - atan2(y, z)).
    ((r12.y * r12.y + r12.z * r12.z).sqrt() / d, -(r12.y.atan2(r12.z)))
}

/// Rotation matrix of the tumbling motion, exposed for callers composing frames directly.
pub fn tumble_rotation(delta: f64) -> Matrix3<f64> {
    rot_x(delta)
}
