use crate::error::{Error, Result};
use crate::units::us;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasurementMode {
    /// Projective readout of the NV: each shot is one Bernoulli trial with P+.
    Ideal,
    /// Photon-counting readout: each shot yields a photon with probability p P+.
    Photon,
}

impl MeasurementMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            MeasurementMode::Ideal => "ideal",
            MeasurementMode::Photon => "photon",
        }
    }
}

pub const DEFAULT_DETECTION_PROBABILITY: f64 = 0.12;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MeasurementModel {
    pub mode: MeasurementMode,
    /// Shots per frequency.
    pub shots: u64,
    /// Photon detection probability (photon mode only).
    pub detection_probability: f64,
    /// Spectrum value used to freeze the noise variance to a constant.
    pub reference_signal: f64,
}

impl MeasurementModel {
    pub fn ideal(shots: u64, reference_signal: f64) -> Self {
        Self {
            mode: MeasurementMode::Ideal,
            shots,
            detection_probability: DEFAULT_DETECTION_PROBABILITY,
            reference_signal,
        }
    }

    pub fn photon(shots: u64, detection_probability: f64, reference_signal: f64) -> Self {
        Self { mode: MeasurementMode::Photon, shots, detection_probability, reference_signal }
    }

    pub fn validate(&self) -> Result<()> {
        if self.shots == 0 {
            return Err(Error::InvalidInput("shot count must be positive".into()));
        }
        if !(self.detection_probability > 0.0 && self.detection_probability <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "detection probability must be in (0, 1], got {}",
                self.detection_probability
            )));
        }
        if !(-1.0..=1.0).contains(&self.reference_signal) {
            return Err(Error::InvalidInput(format!(
                "reference signal must be in [-1, 1], got {}",
                self.reference_signal
            )));
        }
        Ok(())
    }

    /// Variance of one estimate X_j, frozen at the reference signal S:
    /// ideal (1 - S²) / 4N, photon (1 + S) / 2pN.
    pub fn variance(&self) -> f64 {
        let s = self.reference_signal;
        let n = self.shots as f64;
        match self.mode {
            MeasurementMode::Ideal => (1.0 - s * s) / (4.0 * n),
            MeasurementMode::Photon => (1.0 + s) / (2.0 * self.detection_probability * n),
        }
    }

    pub fn sigma(&self) -> f64 {
        self.variance().sqrt()
    }
}

/// Shots needed with photon readout per ideal shot for the same variance: 2 / (p (1 - S)).
pub fn shot_equivalence_factor(detection_probability: f64, signal: f64) -> f64 {
    2.0 / (detection_probability * (1.0 - signal))
}

/// Wall-clock cost of one shot: sequence, optical readout, and label rethermalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotTiming {
    pub sequence: f64,
    pub readout: f64,
    pub label_t1: f64,
    /// Rethermalization wait in units of T1.
    pub rethermalization_t1s: f64,
}

impl ShotTiming {
    pub fn new(sequence: f64, label_t1: f64) -> Self {
        Self { sequence, readout: us(3.0), label_t1, rethermalization_t1s: 3.0 }
    }

    pub fn per_shot(&self) -> f64 {
        self.sequence + self.readout + self.rethermalization_t1s * self.label_t1
    }

    /// Seconds for `frequencies` points of `shots` each.
    pub fn total(&self, frequencies: usize, shots: u64) -> f64 {
        frequencies as f64 * shots as f64 * self.per_shot()
    }
}
