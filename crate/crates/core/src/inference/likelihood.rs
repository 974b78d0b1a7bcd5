use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::inference::dataset::Dataset;
use crate::response::{ModelParams, ResponseModel};

/// Indices of the parameters that are angles on a circle and wrap instead of being bounded.
pub const PERIODIC: [usize; 2] = [3, 5];

/// Uniform-prior support per parameter, in the order of [`crate::response::PARAM_NAMES`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Bounds {
    pub lower: [f64; 8],
    pub upper: [f64; 8],
}

impl Default for Bounds {
    fn default() -> Self {
        Self {
            lower: [0.0, 0.0, 0.0, -PI, 0.0, -PI, 2.0, 0.0],
            upper: [0.5, 0.5, PI / 2.0, PI, 1.0, PI, 6.0, 20f64.to_radians()],
        }
    }
}

impl Bounds {
    pub fn validate(&self) -> Result<()> {
        for k in 0..8 {
            let (a, b) = (self.lower[k], self.upper[k]);
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::InvalidInput(format!("bounds for parameter {k} must be finite with lower < upper")));
            }
        }
        if self.lower[6] <= crate::response::MIN_D12_NM {
            return Err(Error::InvalidInput("distance lower bound must exceed the minimum distance".into()));
        }
        Ok(())
    }

    pub fn contains(&self, v: &[f64; 8]) -> bool {
        (0..8).all(|k| v[k] >= self.lower[k] && v[k] <= self.upper[k])
    }

    /// Maps periodic coordinates back into (-π, π].
    pub fn wrap(&self, v: &mut [f64; 8]) {
        for &k in &PERIODIC {
            if self.lower[k] == -PI && self.upper[k] == PI {
                let mut x = (v[k] + PI).rem_euclid(2.0 * PI) - PI;
                if x == -PI {
                    x = PI;
                }
                v[k] = x;
            }
        }
    }
}

/// Gaussian log-likelihood of a dataset under the tumbling-averaged closed-form spectrum.
#[derive(Debug, Clone)]
pub struct Likelihood<'a> {
    pub model: &'a ResponseModel,
    pub grid: Vec<f64>,
    pub data: Vec<f64>,
    pub variance: f64,
    pub bounds: Bounds,
}

impl<'a> Likelihood<'a> {
    pub fn new(model: &'a ResponseModel, data: &Dataset, bounds: Bounds) -> Result<Self> {
        data.validate()?;
        bounds.validate()?;
        Ok(Self { model, grid: data.frequencies(), data: data.values(), variance: data.measurement.variance(), bounds })
    }

    /// -Σ [X_j - (S̄_j + 1)/2]² / 2σ² - (M/2) log 2πσ²; -∞ outside the prior support.
    pub fn log_likelihood(&self, p: &ModelParams) -> f64 {
        if !self.bounds.contains(&p.to_array()) {
            return f64::NEG_INFINITY;
        }
        let s = self.model.averaged_grid(&self.grid, p);
        let chi: f64 = self.data.iter().zip(&s).map(|(x, s)| (x - (s + 1.0) / 2.0).powi(2)).sum();
        let m = self.data.len() as f64;
        -chi / (2.0 * self.variance) - 0.5 * m * (2.0 * PI * self.variance).ln()
    }

    pub fn log_likelihood_array(&self, v: &[f64; 8]) -> f64 {
        self.log_likelihood(&ModelParams::from_array(*v))
    }
}
