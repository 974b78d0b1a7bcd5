use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};

use crate::deer::Spectrum;
use crate::error::{Error, Result};
use crate::inference::measurement::{MeasurementMode, MeasurementModel};
use crate::units::{mhz, to_mhz};

/// Estimates X_j of P+ = (1 + <sigma_x>) / 2 at each RF frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// (RF frequency in rad/s, X in [0, 1]).
    pub points: Vec<(f64, f64)>,
    pub measurement: MeasurementModel,
    pub seed: Option<u64>,
    /// Calibrated RF-off baseline of the spectrum the data came from, when known.
    pub baseline: Option<f64>,
    pub config_hash: Option<String>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.0).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.1).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::InvalidInput("dataset is empty".into()));
        }
        if let Some(p) = self.points.iter().find(|p| !(0.0..=1.0).contains(&p.1)) {
            return Err(Error::InvalidInput(format!("dataset value {} outside [0, 1]", p.1)));
        }
        self.measurement.validate()
    }

    pub fn to_csv(&self) -> String {
        let m = &self.measurement;
        let mut s = String::new();
        let _ = writeln!(s, "# kind: dataset");
        let _ = writeln!(s, "# measurement: {}", m.mode.as_str());
        let _ = writeln!(s, "# shots: {}", m.shots);
        let _ = writeln!(s, "# detection_probability: {}", m.detection_probability);
        let _ = writeln!(s, "# reference_signal: {}", m.reference_signal);
        let _ = writeln!(s, "# sigma_m: {}", m.sigma());
        let _ = writeln!(s, "# seed: {}", self.seed.map_or("none".into(), |v| v.to_string()));
        let _ = writeln!(s, "# baseline: {}", self.baseline.map_or("none".into(), |v| v.to_string()));
        if let Some(h) = &self.config_hash {
            let _ = writeln!(s, "# config_hash: {h}");
        }
        s.push_str("omega_rf_MHz,X\n");
        for (w, x) in &self.points {
            let _ = writeln!(s, "{},{}", to_mhz(*w), x);
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut mode = MeasurementMode::Ideal;
        let mut shots = None;
        let mut p = crate::inference::measurement::DEFAULT_DETECTION_PROBABILITY;
        let mut reference = None;
        let mut seed = None;
        let mut baseline = None;
        let mut config_hash = None;
        let mut points = Vec::new();
        let mut header = false;
        let bad = |line: usize, msg: &str| Error::Parse(format!("dataset line {line}: {msg}"));
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.split_once(':') {
                    let (k, v) = (k.trim(), v.trim());
                    match k {
                        "measurement" => {
                            mode = match v {
                                "ideal" => MeasurementMode::Ideal,
                                "photon" => MeasurementMode::Photon,
                                _ => return Err(bad(no + 1, "unknown measurement mode")),
                            }
                        }
                        "shots" => shots = Some(v.parse::<u64>().map_err(|_| bad(no + 1, "bad shot count"))?),
                        "detection_probability" => {
                            p = v.parse().map_err(|_| bad(no + 1, "bad detection probability"))?
                        }
                        "reference_signal" => {
                            reference = Some(v.parse::<f64>().map_err(|_| bad(no + 1, "bad reference signal"))?)
                        }
                        "seed" => seed = v.parse().ok(),
                        "baseline" => baseline = v.parse().ok(),
                        "config_hash" => config_hash = Some(v.to_string()),
                        _ => {}
                    }
                }
                continue;
            }
            if !header {
                if line != "omega_rf_MHz,X" {
                    return Err(bad(no + 1, "expected header omega_rf_MHz,X"));
                }
                header = true;
                continue;
            }
            let (a, b) = line.split_once(',').ok_or_else(|| bad(no + 1, "expected two columns"))?;
            let w: f64 = a.trim().parse().map_err(|_| bad(no + 1, "bad frequency"))?;
            let x: f64 = b.trim().parse().map_err(|_| bad(no + 1, "bad value"))?;
            points.push((mhz(w), x));
        }
        let shots = shots.ok_or_else(|| Error::Parse("dataset is missing the shots header".into()))?;
        let reference =
            reference.ok_or_else(|| Error::Parse("dataset is missing the reference_signal header".into()))?;
        let d = Dataset {
            points,
            measurement: MeasurementModel { mode, shots, detection_probability: p, reference_signal: reference },
            seed,
            baseline,
            config_hash,
        };
        d.validate().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(d)
    }
}

/// Draws one estimate per spectrum point. Ideal: X = B(N, P+) / N. Photon: photon counts
/// n ~ B(N, p P+) and X = n / (p N), clamped to [0, 1].
pub fn simulate_dataset(spectrum: &Spectrum, mm: &MeasurementModel, seed: u64) -> Result<Dataset> {
    mm.validate()?;
    if spectrum.points.is_empty() {
        return Err(Error::InvalidInput("spectrum is empty".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(spectrum.points.len());
    for &(w, s) in &spectrum.points {
        if !(-1.0 - 1e-9..=1.0 + 1e-9).contains(&s) {
            return Err(Error::InvalidInput(format!("spectrum value {s} outside [-1, 1]")));
        }
        let p_plus = ((1.0 + s) / 2.0).clamp(0.0, 1.0);
        let x = match mm.mode {
            MeasurementMode::Ideal => {
                let b = Binomial::new(mm.shots, p_plus).map_err(|e| Error::InvalidInput(e.to_string()))?;
                b.sample(&mut rng) as f64 / mm.shots as f64
            }
            MeasurementMode::Photon => {
                let q = mm.detection_probability;
                let b = Binomial::new(mm.shots, q * p_plus).map_err(|e| Error::InvalidInput(e.to_string()))?;
                (b.sample(&mut rng) as f64 / (q * mm.shots as f64)).clamp(0.0, 1.0)
            }
        };
        points.push((w, x));
    }
    Ok(Dataset {
        points,
        measurement: *mm,
        seed: Some(seed),
        baseline: spectrum.meta.baseline,
        config_hash: spectrum.meta.config_hash.clone(),
    })
}
