use std::f64::consts::PI;

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::units::{hz, mhz, TWO_PI};

/// Free evolution, a simultaneous RF π-pulse and MW π-pulse train, free evolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceParams {
    /// Duration of each free-evolution stage, s.
    pub tau_free: f64,
    /// RF Rabi frequency on the label electrons, rad/s.
    pub rf_rabi: f64,
    /// MW Rabi frequency on the NV, rad/s.
    pub mw_rabi: f64,
    /// RF carrier, rad/s.
    pub rf_frequency: f64,
    /// Static field along lab z, mT.
    pub bz: f64,
    /// Number of MW π-pulses spanned by the RF π-pulse; odd.
    pub n_pi_mw: u32,
}

impl Default for SequenceParams {
    fn default() -> Self {
        let rf_rabi = TWO_PI * 250e3;
        Self { tau_free: 1.3e-6, rf_rabi, mw_rabi: 31.0 * rf_rabi, rf_frequency: mhz(841.0), bz: 30.0, n_pi_mw: 31 }
    }
}

impl SequenceParams {
    pub fn validate(&self) -> Result<()> {
        let finite =
            [self.tau_free, self.rf_rabi, self.mw_rabi, self.rf_frequency, self.bz].iter().all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidInput("sequence parameters must be finite".into()));
        }
        if self.tau_free < 0.0 {
            return Err(Error::InvalidInput("free-evolution time must be non-negative".into()));
        }
        if !(self.rf_rabi > 0.0 && self.mw_rabi > 0.0) {
            return Err(Error::InvalidInput("Rabi frequencies must be positive".into()));
        }
        if !(self.bz > 0.0) {
            return Err(Error::InvalidInput("field must be positive".into()));
        }
        if self.n_pi_mw % 2 == 0 {
            return Err(Error::InvalidInput(format!("MW π-pulse count must be odd, got {}", self.n_pi_mw)));
        }
        let ratio = self.mw_rabi / self.rf_rabi;
        if (ratio - self.n_pi_mw as f64).abs() > 1e-6 * self.n_pi_mw as f64 {
            return Err(Error::InvalidInput(format!(
                "MW/RF Rabi ratio {ratio} does not equal the MW π-pulse count {}",
                self.n_pi_mw
            )));
        }
        Ok(())
    }

    pub fn drive_duration(&self) -> f64 {
        PI / self.rf_rabi
    }

    pub fn total_duration(&self) -> f64 {
        2.0 * self.tau_free + self.drive_duration()
    }

    pub fn with_rf_frequency(&self, w: f64) -> Self {
        Self { rf_frequency: w, ..*self }
    }
}

/// Decoherence of the NV and the labels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    /// NV dephasing time, s.
    pub t2_nv: f64,
    /// Label electron relaxation rate, 1/s.
    pub gamma: f64,
    /// Bath temperature, K.
    pub temperature: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self { t2_nv: 20e-6, gamma: hz(2.68), temperature: 300.0 }
    }
}

impl NoiseParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.t2_nv > 0.0 && self.gamma >= 0.0 && self.temperature > 0.0) {
            return Err(Error::InvalidInput("noise parameters need T2 > 0, Gamma >= 0, T > 0".into()));
        }
        if !(self.t2_nv.is_finite() && self.gamma.is_finite() && self.temperature.is_finite()) {
            return Err(Error::InvalidInput("noise parameters must be finite".into()));
        }
        Ok(())
    }

    pub fn nbar(&self, bz: f64, c: &PhysicalConstants) -> f64 {
        c.thermal_occupation(bz, self.temperature)
    }

    pub fn label_t1(&self, bz: f64, c: &PhysicalConstants) -> f64 {
        c.label_t1(self.gamma, bz, self.temperature)
    }

    /// Dephasing rate of the sigma_z dissipator.
    pub fn dephasing_rate(&self) -> f64 {
        1.0 / (2.0 * self.t2_nv)
    }

    /// (lowering, raising) rates of each label electron.
    pub fn label_rates(&self, bz: f64, c: &PhysicalConstants) -> (f64, f64) {
        let n = self.nbar(bz, c);
        (self.gamma * (n + 1.0), self.gamma * n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::CONSTANTS;

    #[test]
    fn default_sequence_is_consistent_and_lasts_4_6_us() {
        let s = SequenceParams::default();
        s.validate().unwrap();
        assert!((s.total_duration() - 4.6e-6).abs() < 1e-12);
    }

    #[test]
    fn inconsistent_pulse_count_rejected() {
        let s = SequenceParams { n_pi_mw: 29, ..Default::default() };
        assert!(s.validate().is_err());
        let even = SequenceParams { n_pi_mw: 30, mw_rabi: 30.0 * TWO_PI * 250e3, ..Default::default() };
        assert!(even.validate().is_err());
    }

    #[test]
    fn label_t1_near_four_microseconds() {
        let n = NoiseParams::default();
        let t1 = n.label_t1(30.0, &CONSTANTS);
        assert!((t1 / 4e-6 - 1.0).abs() < 0.05, "{t1}");
        let (down, up) = n.label_rates(30.0, &CONSTANTS);
        assert!((1.0 / (down + up) - t1).abs() < 1e-15);
    }
}
