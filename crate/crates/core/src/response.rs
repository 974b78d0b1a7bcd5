//! Closed-form single-target spectrum: two Rabi-broadened dips at the target's central branch,
//! split by the inter-label coupling, averaged over Gaussian tumbling.

use std::f64::consts::FRAC_PI_2;

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::geometry::{azimuth_after_tumble, dipolar_coupling};
use crate::nitroxide::{central_branch, IsotopeParams, Lande};
use crate::quadrature::GaussHermite;

/// Default quadrature order for the tumbling average.
pub const MODEL_NODES: usize = 21;
/// Smallest admissible inter-label distance (nm).
pub const MIN_D12_NM: f64 = 0.5;

/// The eight sampled parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ModelParams {
    pub c_plus: f64,
    pub c_minus: f64,
    pub theta_eq: f64,
    pub phi_eq: f64,
    pub a_beta: f64,
    pub phi_beta: f64,
    /// nm.
    pub d12: f64,
    pub sigma_delta: f64,
}

pub const PARAM_NAMES: [&str; 8] =
    ["C_plus", "C_minus", "theta_eq", "phi_eq", "A_beta", "phi_beta", "d12", "sigma_delta"];

impl ModelParams {
    pub fn to_array(&self) -> [f64; 8] {
        [self.c_plus, self.c_minus, self.theta_eq, self.phi_eq, self.a_beta, self.phi_beta, self.d12, self.sigma_delta]
    }

    pub fn from_array(v: [f64; 8]) -> Self {
        Self {
            c_plus: v[0],
            c_minus: v[1],
            theta_eq: v[2],
            phi_eq: v[3],
            a_beta: v[4],
            phi_beta: v[5],
            d12: v[6],
            sigma_delta: v[7],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = (0.0..=1.0).contains(&self.c_plus)
            && (0.0..=1.0).contains(&self.c_minus)
            && (0.0..=1.0).contains(&self.a_beta)
            && self.d12 > MIN_D12_NM
            && self.sigma_delta >= 0.0
            && self.to_array().iter().all(|x| x.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("response parameters out of range: {self:?}")))
        }
    }
}

/// Everything held fixed while the parameters are sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseModel {
    /// Calibrated RF-off baseline.
    pub s0: f64,
    pub rf_rabi: f64,
    pub bz: f64,
    pub isotope: IsotopeParams,
    pub lande: Lande,
    pub constants: PhysicalConstants,
    rule: GaussHermite,
}

impl ResponseModel {
    pub fn new(s0: f64, rf_rabi: f64, bz: f64, constants: PhysicalConstants) -> Result<Self> {
        Self::with_nodes(s0, rf_rabi, bz, constants, MODEL_NODES)
    }

    pub fn with_nodes(s0: f64, rf_rabi: f64, bz: f64, constants: PhysicalConstants, nodes: usize) -> Result<Self> {
        if !(rf_rabi > 0.0 && rf_rabi.is_finite()) {
            return Err(Error::InvalidInput(format!("RF Rabi frequency must be positive, got {rf_rabi}")));
        }
        if nodes == 0 || nodes % 2 == 0 {
            return Err(Error::InvalidInput(format!("quadrature order must be odd, got {nodes}")));
        }
        Ok(Self {
            s0,
            rf_rabi,
            bz,
            isotope: IsotopeParams::n14(&constants),
            lande: Lande::default(),
            constants,
            rule: GaussHermite::new(nodes),
        })
    }

    pub fn nodes(&self) -> usize {
        self.rule.len()
    }

    /// Target resonance (second-order central branch) at polar angle `theta`.
    pub fn central_energy(&self, theta: f64) -> f64 {
        central_branch(&self.isotope, &self.lande, theta, self.bz, &self.constants)
    }

    /// S(ω, θ, β) with cos²β given directly.
    pub fn spectrum_point(&self, omega: f64, theta: f64, cos2_beta: f64, p: &ModelParams) -> f64 {
        let g = dipolar_coupling(p.d12, cos2_beta, &self.constants);
        self.dip_sum(omega, self.central_energy(theta), g, p)
    }

    fn dip_sum(&self, omega: f64, e0: f64, g: f64, p: &ModelParams) -> f64 {
        let w2 = self.rf_rabi * self.rf_rabi;
        let mut s = self.s0;
        for (sign, c) in [(1.0, p.c_plus), (-1.0, p.c_minus)] {
            let det = omega - e0 + sign * g / 2.0;
            let om2 = w2 + det * det;
            let ratio = om2.sqrt() / self.rf_rabi;
            s -= c * (w2 / om2) * (FRAC_PI_2 * ratio).sin().powi(2);
        }
        s
    }

    /// (weight, E0, g12) per tumbling node.
    fn nodes_for(&self, p: &ModelParams) -> Vec<(f64, f64, f64)> {
        if p.sigma_delta == 0.0 {
            let c2 = (p.a_beta * p.phi_beta.cos()).powi(2);
            return vec![(1.0, self.central_energy(p.theta_eq), dipolar_coupling(p.d12, c2, &self.constants))];
        }
        self.rule
            .nodes
            .iter()
            .zip(&self.rule.weights)
            .map(|(&x, &w)| {
                let delta = p.sigma_delta * x;
                let theta = azimuth_after_tumble(p.theta_eq, p.phi_eq, delta);
                let c2 = (p.a_beta * (delta + p.phi_beta).cos()).powi(2);
                (w, self.central_energy(theta), dipolar_coupling(p.d12, c2, &self.constants))
            })
            .collect()
    }

    /// Tumbling-averaged spectrum at one frequency.
    pub fn averaged_spectrum(&self, omega: f64, p: &ModelParams) -> f64 {
        self.averaged_grid(&[omega], p)[0]
    }

    /// Tumbling-averaged spectrum on a grid; node quantities are computed once.
    pub fn averaged_grid(&self, grid: &[f64], p: &ModelParams) -> Vec<f64> {
        let nodes = self.nodes_for(p);
        grid.iter().map(|&w| nodes.iter().map(|&(wt, e0, g)| wt * self.dip_sum(w, e0, g, p)).sum()).collect()
    }

    /// Least-squares (S0, C+, C-) for fixed geometry: the model is linear in all three.
    /// Returns the fitted baseline and the parameters with contrasts replaced.
    pub fn fit_amplitudes(&self, grid: &[f64], data: &[f64], p: &ModelParams) -> Result<(f64, ModelParams)> {
        if grid.len() != data.len() || grid.len() < 3 {
            return Err(Error::DimensionMismatch("amplitude fit needs matching grid and data of length >= 3".into()));
        }
        let unit = |cp: f64, cm: f64| {
            let q = ModelParams { c_plus: cp, c_minus: cm, ..*p };
            let zero = ResponseModel { s0: 0.0, ..self.clone() };
            zero.averaged_grid(grid, &q)
        };
        // Columns: 1, -dip_plus, -dip_minus; the coefficients are (S0, C+, C-).
        let plus = unit(1.0, 0.0);
        let minus = unit(0.0, 1.0);
        let a = nalgebra::DMatrix::from_fn(grid.len(), 3, |i, j| match j {
            0 => 1.0,
            1 => plus[i],
            _ => minus[i],
        });
        let b = nalgebra::DVector::from_column_slice(data);
        let x =
            a.svd(true, true).solve(&b, 1e-12).map_err(|e| Error::Integrator(format!("amplitude fit failed: {e}")))?;
        Ok((x[0], ModelParams { c_plus: x[1], c_minus: x[2], ..*p }))
    }
}

/// g12 = D / d12³ (1 - 3 A_β² cos² φ_β), the coupling at zero tumbling.
pub fn g12_from_params(d12: f64, a_beta: f64, phi_beta: f64, c: &PhysicalConstants) -> f64 {
    dipolar_coupling(d12, (a_beta * phi_beta.cos()).powi(2), c)
}

/// Per-line dip contrast of an ideal single-target echo: weight 1/3 of the central branch,
/// 1/2 for the partner label's state, and 1 - cos(a^z τ) = 2 sin²(a^z τ / 2) for the NV phase
/// reversed by the target flip.
pub fn coherent_contrast(a_z: f64, tau_free: f64) -> f64 {
    (a_z * tau_free / 2.0).sin().powi(2) / 3.0
}
