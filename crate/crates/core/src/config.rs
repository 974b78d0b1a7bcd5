//! Run configuration: a TOML document in ordinary units (MHz, kHz, µs, nm, degrees) that
//! converts into the library's types. Unknown keys are rejected everywhere.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::deer::{
    FlipFlop, Mode, NoiseParams, SequenceParams, Spectrum, SystemModel, Tumble, TumbleMode, TumbleSampling,
};
use crate::error::{Error, Result};
use crate::geometry::LabGeometry;
use crate::inference::{
    run_chains, Bounds, Chain, Dataset, Likelihood, MeasurementMode, MeasurementModel, MetropolisConfig, Summary,
    Tuning,
};
use crate::nitroxide::{Isotope, IsotopeParams, Lande, NitroxideConfig};
use crate::quadrature::TumbleDistribution;
use crate::response::{ModelParams, ResponseModel};
use crate::rotation::RotationAngles;
use crate::units::{hz, khz, mhz, us};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Default seed for every stochastic step; the command line overrides it.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub constants: ConstantsConfig,
    #[serde(default)]
    pub model: ModelConfig,
    pub labels: [LabelConfig; 2],
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub sequence: SequenceConfig,
    pub noise: Option<NoiseConfig>,
    pub tumble: Option<TumbleConfig>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub branches: BranchesConfig,
    #[serde(default)]
    pub measurement: MeasurementConfig,
    #[serde(default)]
    pub inference: InferenceConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsConfig {
    pub zero_field_splitting_mhz: Option<f64>,
    pub gamma_e_mhz_per_mt: Option<f64>,
    pub mu_b_mhz_per_mt: Option<f64>,
    /// Dipolar prefactor in MHz nm³; follows gamma_e² when only gamma_e is overridden.
    pub dipolar_mhz_nm3: Option<f64>,
    pub gamma_n14_khz_per_mt: Option<f64>,
    pub gamma_n15_khz_per_mt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default = "default_flipflop")]
    pub flipflop: FlipFlop,
    #[serde(default = "default_true")]
    pub drive_coupling: bool,
}

fn default_mode() -> Mode {
    Mode::Reduced
}
fn default_flipflop() -> FlipFlop {
    FlipFlop::Auto
}
fn default_true() -> bool {
    true
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { mode: default_mode(), flipflop: default_flipflop(), drive_coupling: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelConfig {
    pub isotope: Isotope,
    pub theta_deg: f64,
    pub phi_deg: f64,
    pub position_nm: [f64; 3],
    pub lande_perp: Option<f64>,
    pub lande_par: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    /// A point on the tumbling axis (the axis is parallel to lab x).
    pub pivot_nm: [f64; 3],
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self { pivot_nm: [3.0, 0.0, 6.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceConfig {
    pub tau_free_us: f64,
    pub rf_rabi_khz: f64,
    /// Odd number of MW π-pulses spanning the RF π-pulse; fixes the MW Rabi frequency.
    pub n_pi_mw: u32,
    pub rf_frequency_mhz: f64,
    pub bz_mt: f64,
}

impl Default for SequenceConfig {
    fn default() -> Self {
        Self { tau_free_us: 1.3, rf_rabi_khz: 250.0, n_pi_mw: 31, rf_frequency_mhz: 841.0, bz_mt: 30.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default = "default_t2")]
    pub t2_us: f64,
    #[serde(default = "default_gamma")]
    pub gamma_hz: f64,
    #[serde(default = "default_temperature")]
    pub temperature_k: f64,
}

fn default_t2() -> f64 {
    20.0
}
fn default_gamma() -> f64 {
    2.68
}
fn default_temperature() -> f64 {
    300.0
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { t2_us: default_t2(), gamma_hz: default_gamma(), temperature_k: default_temperature() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TumbleConfig {
    pub sigma_deg: f64,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    #[serde(default = "default_tumble_mode")]
    pub mode: TumbleMode,
    /// Replace the quadrature by this many random draws (validation only).
    pub monte_carlo_samples: Option<usize>,
}

impl TumbleConfig {
    /// Quadrature tumbling with the default node count and rigid rotation.
    pub fn new(sigma_deg: f64) -> Self {
        Self { sigma_deg, nodes: default_nodes(), mode: default_tumble_mode(), monte_carlo_samples: None }
    }
}

fn default_nodes() -> usize {
    crate::quadrature::DEFAULT_SIMULATION_NODES
}
fn default_tumble_mode() -> TumbleMode {
    TumbleMode::Rigid
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub start_mhz: f64,
    pub stop_mhz: f64,
    pub count: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { start_mhz: 839.0, stop_mhz: 843.0, count: 25 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchesConfig {
    pub theta_start_deg: f64,
    pub theta_stop_deg: f64,
    pub theta_step_deg: f64,
    pub bz_mt: Vec<f64>,
    /// Isotope tabulated; defaults to the first label's.
    pub isotope: Option<Isotope>,
}

impl Default for BranchesConfig {
    fn default() -> Self {
        Self { theta_start_deg: 0.0, theta_stop_deg: 90.0, theta_step_deg: 5.0, bz_mt: vec![30.0], isotope: None }
    }
}

impl BranchesConfig {
    pub fn theta_grid(&self) -> Result<Vec<f64>> {
        if !(self.theta_step_deg > 0.0) || self.theta_stop_deg < self.theta_start_deg {
            return Err(Error::Config("branches: theta grid needs a positive step and stop >= start".into()));
        }
        let n = ((self.theta_stop_deg - self.theta_start_deg) / self.theta_step_deg + 1e-9).floor() as usize;
        Ok((0..=n).map(|k| (self.theta_start_deg + k as f64 * self.theta_step_deg).to_radians()).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementConfig {
    #[serde(default = "default_measurement_mode")]
    pub mode: MeasurementMode,
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default = "default_detection")]
    pub detection_probability: f64,
    /// Signal that freezes the noise variance; defaults to the spectrum mean over the sweep.
    pub reference_signal: Option<f64>,
}

fn default_measurement_mode() -> MeasurementMode {
    MeasurementMode::Ideal
}
fn default_shots() -> u64 {
    20_000
}
fn default_detection() -> f64 {
    crate::inference::measurement::DEFAULT_DETECTION_PROBABILITY
}

impl Default for MeasurementConfig {
    fn default() -> Self {
        Self {
            mode: default_measurement_mode(),
            shots: default_shots(),
            detection_probability: default_detection(),
            reference_signal: None,
        }
    }
}

impl MeasurementConfig {
    pub fn model(&self, reference_signal: f64) -> Result<MeasurementModel> {
        let m = MeasurementModel {
            mode: self.mode,
            shots: self.shots,
            detection_probability: self.detection_probability,
            reference_signal: self.reference_signal.unwrap_or(reference_signal),
        };
        m.validate().map_err(|e| Error::Config(format!("measurement: {e}")))?;
        Ok(m)
    }
}

/// Parameter values in display units (degrees, nm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamValues {
    pub c_plus: f64,
    pub c_minus: f64,
    pub theta_eq_deg: f64,
    pub phi_eq_deg: f64,
    pub a_beta: f64,
    pub phi_beta_deg: f64,
    pub d12_nm: f64,
    pub sigma_delta_deg: f64,
}

impl ParamValues {
    pub fn to_internal(&self) -> [f64; 8] {
        [
            self.c_plus,
            self.c_minus,
            self.theta_eq_deg.to_radians(),
            self.phi_eq_deg.to_radians(),
            self.a_beta,
            self.phi_beta_deg.to_radians(),
            self.d12_nm,
            self.sigma_delta_deg.to_radians(),
        ]
    }

    pub fn params(&self) -> ModelParams {
        ModelParams::from_array(self.to_internal())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    pub lower: ParamValues,
    pub upper: ParamValues,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InferenceConfig {
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default = "default_one")]
    pub chains: usize,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_window")]
    pub tune_window: usize,
    #[serde(default = "default_target")]
    pub target_acceptance: f64,
    #[serde(default = "default_true")]
    pub tune: bool,
    #[serde(default = "default_stall")]
    pub stall_window: usize,
    #[serde(default = "default_model_nodes")]
    pub model_nodes: usize,
    /// Calibrated baseline S0; defaults to the dataset's recorded RF-off baseline.
    pub baseline: Option<f64>,
    pub initial: Option<ParamValues>,
    pub scales: Option<ParamValues>,
    pub bounds: Option<BoundsConfig>,
}

fn default_steps() -> usize {
    100_000
}
fn default_burn_in() -> usize {
    10_000
}
fn default_one() -> usize {
    1
}
fn default_bins() -> usize {
    40
}
fn default_window() -> usize {
    500
}
fn default_target() -> f64 {
    0.30
}
fn default_stall() -> usize {
    5_000
}
fn default_model_nodes() -> usize {
    crate::response::MODEL_NODES
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            steps: default_steps(),
            burn_in: default_burn_in(),
            chains: 1,
            bins: default_bins(),
            tune_window: default_window(),
            target_acceptance: default_target(),
            tune: true,
            stall_window: default_stall(),
            model_nodes: default_model_nodes(),
            baseline: None,
            initial: None,
            scales: None,
            bounds: None,
        }
    }
}

/// Initial proposal scales: a small fraction of each prior width.
const DEFAULT_SCALE_FRACTION: f64 = 0.01;

impl InferenceConfig {
    pub fn bounds(&self) -> Result<Bounds> {
        let b = match &self.bounds {
            Some(b) => Bounds { lower: b.lower.to_internal(), upper: b.upper.to_internal() },
            None => Bounds::default(),
        };
        b.validate().map_err(|e| Error::Config(format!("inference.bounds: {e}")))?;
        Ok(b)
    }

    pub fn metropolis(&self, seed: u64) -> Result<MetropolisConfig> {
        let bounds = self.bounds()?;
        let initial = match &self.initial {
            Some(p) => p.to_internal(),
            None => std::array::from_fn(|k| 0.5 * (bounds.lower[k] + bounds.upper[k])),
        };
        let scales = match &self.scales {
            Some(p) => p.to_internal(),
            None => std::array::from_fn(|k| DEFAULT_SCALE_FRACTION * (bounds.upper[k] - bounds.lower[k])),
        };
        let cfg = MetropolisConfig {
            steps: self.steps,
            burn_in: self.burn_in,
            initial,
            scales,
            seed,
            tuning: self.tune.then_some(Tuning { window: self.tune_window, target: self.target_acceptance }),
            stall_window: self.stall_window,
        };
        cfg.validate(&bounds).map_err(|e| Error::Config(format!("inference: {e}")))?;
        if self.chains == 0 {
            return Err(Error::Config("inference.chains must be positive".into()));
        }
        Ok(cfg)
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is serializable")
    }

    /// Builds every derived object once so that errors surface before any computation.
    pub fn validate(&self) -> Result<()> {
        self.system_model()?;
        self.sequence()?;
        self.noise()?;
        self.tumble()?;
        self.grid()?;
        self.branches.theta_grid()?;
        if self.branches.bz_mt.is_empty() {
            return Err(Error::Config("branches.bz_mt must not be empty".into()));
        }
        self.measurement.model(0.0)?;
        self.inference.metropolis(self.seed)?;
        Ok(())
    }

    pub fn constants(&self) -> Result<PhysicalConstants> {
        let mut c = PhysicalConstants::canonical();
        let o = &self.constants;
        if let Some(v) = o.zero_field_splitting_mhz {
            c.zero_field_splitting = mhz(v);
        }
        if let Some(v) = o.gamma_e_mhz_per_mt {
            let ratio = mhz(v) / c.gamma_e;
            c.gamma_e = mhz(v);
            c.dipolar_prefactor *= ratio * ratio;
        }
        if let Some(v) = o.mu_b_mhz_per_mt {
            c.mu_b = mhz(v);
        }
        if let Some(v) = o.dipolar_mhz_nm3 {
            c.dipolar_prefactor = mhz(v);
        }
        if let Some(v) = o.gamma_n14_khz_per_mt {
            c.gamma_n14 = khz(v);
        }
        if let Some(v) = o.gamma_n15_khz_per_mt {
            c.gamma_n15 = khz(v);
        }
        let positive = [c.zero_field_splitting, c.gamma_e, c.mu_b, c.dipolar_prefactor];
        if positive.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::Config("constants: overrides must be positive and finite".into()));
        }
        Ok(c)
    }

    pub fn label(&self, i: usize) -> Result<NitroxideConfig> {
        let c = self.constants()?;
        let l = &self.labels[i];
        let angles = RotationAngles::from_degrees(l.theta_deg, l.phi_deg)
            .map_err(|e| Error::Config(format!("labels[{i}]: {e}")))?;
        let mut cfg = NitroxideConfig::new(IsotopeParams::of(l.isotope, &c), angles);
        let d = Lande::default();
        cfg.lande = Lande { perp: l.lande_perp.unwrap_or(d.perp), par: l.lande_par.unwrap_or(d.par) };
        Ok(cfg)
    }

    pub fn geometry(&self) -> Result<LabGeometry> {
        let v = |a: [f64; 3]| Vector3::new(a[0], a[1], a[2]);
        LabGeometry::new(v(self.labels[0].position_nm), v(self.labels[1].position_nm), v(self.geometry.pivot_nm))
            .map_err(|e| Error::Config(format!("geometry: {e}")))
    }

    pub fn system_model(&self) -> Result<SystemModel> {
        let mut m = SystemModel::new(self.model.mode, self.geometry()?, [self.label(0)?, self.label(1)?]);
        m.flipflop = self.model.flipflop;
        m.drive_coupling = self.model.drive_coupling;
        m.constants = self.constants()?;
        Ok(m)
    }

    pub fn sequence(&self) -> Result<SequenceParams> {
        let s = &self.sequence;
        let rf = khz(s.rf_rabi_khz);
        let seq = SequenceParams {
            tau_free: us(s.tau_free_us),
            rf_rabi: rf,
            mw_rabi: s.n_pi_mw as f64 * rf,
            rf_frequency: mhz(s.rf_frequency_mhz),
            bz: s.bz_mt,
            n_pi_mw: s.n_pi_mw,
        };
        seq.validate().map_err(|e| Error::Config(format!("sequence: {e}")))?;
        Ok(seq)
    }

    pub fn noise(&self) -> Result<Option<NoiseParams>> {
        self.noise
            .as_ref()
            .map(|n| {
                let p = NoiseParams { t2_nv: us(n.t2_us), gamma: hz(n.gamma_hz), temperature: n.temperature_k };
                p.validate().map_err(|e| Error::Config(format!("noise: {e}")))?;
                Ok(p)
            })
            .transpose()
    }

    pub fn tumble(&self) -> Result<Option<Tumble>> {
        self.tumble
            .as_ref()
            .map(|t| {
                let dist = TumbleDistribution::new(t.sigma_deg.to_radians(), t.nodes)
                    .map_err(|e| Error::Config(format!("tumble: {e}")))?;
                let sampling = match t.monte_carlo_samples {
                    Some(samples) => TumbleSampling::MonteCarlo { samples, seed: self.seed },
                    None => TumbleSampling::Quadrature,
                };
                Ok(Tumble { distribution: dist, mode: t.mode, sampling })
            })
            .transpose()
    }

    pub fn grid(&self) -> Result<Vec<f64>> {
        let g = &self.grid;
        if g.count == 0 || !(g.stop_mhz >= g.start_mhz) {
            return Err(Error::Config("grid: count must be positive and stop >= start".into()));
        }
        crate::deer::linear_grid(mhz(g.start_mhz), mhz(g.stop_mhz), g.count)
            .map_err(|e| Error::Config(format!("grid: {e}")))
    }

    /// The spectrum this configuration describes, on its grid.
    pub fn spectrum(&self) -> Result<Spectrum> {
        crate::deer::spectrum(
            &self.system_model()?,
            &self.sequence()?,
            &self.grid()?,
            self.noise()?.as_ref(),
            self.tumble()?.as_ref(),
        )
    }

    /// Runs `inference.chains` Metropolis chains on `data` (seeds `seed`, `seed + 1`, ...)
    /// with the response model anchored at `baseline`.
    pub fn infer(&self, data: &Dataset, baseline: f64, seed: u64) -> Result<(Vec<Chain>, Summary)> {
        let model = self.response_model(baseline)?;
        let likelihood = Likelihood::new(&model, data, self.inference.bounds()?)?;
        let mc = self.inference.metropolis(seed)?;
        let chains =
            run_chains(|v| likelihood.log_likelihood_array(v), &likelihood.bounds, &mc, self.inference.chains)?;
        let summary =
            Summary::from_chains(&chains, self.inference.bins, baseline, data.measurement.sigma(), &self.constants()?)?;
        Ok((chains, summary))
    }

    pub fn response_model(&self, baseline: f64) -> Result<ResponseModel> {
        let seq = self.sequence()?;
        let mut m =
            ResponseModel::with_nodes(baseline, seq.rf_rabi, seq.bz, self.constants()?, self.inference.model_nodes)
                .map_err(|e| Error::Config(format!("inference: {e}")))?;
        m.lande = self.label(0)?.lande;
        Ok(m)
    }
}

pub const PRESET_NAMES: [&str; 6] = ["fig2b", "fig3a", "fig3b", "fig3c", "fig3c-n15", "figS4"];

/// Shipped configurations, by name.
pub fn preset_text(name: &str) -> Option<&'static str> {
    Some(match name {
        "fig2b" => include_str!("../presets/fig2b.toml"),
        "fig3a" => include_str!("../presets/fig3a.toml"),
        "fig3b" => include_str!("../presets/fig3b.toml"),
        "fig3c" => include_str!("../presets/fig3c.toml"),
        "fig3c-n15" => include_str!("../presets/fig3c-n15.toml"),
        "figS4" => include_str!("../presets/figS4.toml"),
        _ => return None,
    })
}

pub fn preset(name: &str) -> Result<RunConfig> {
    let text = preset_text(name)
        .ok_or_else(|| Error::Config(format!("unknown preset `{name}`; available: {}", PRESET_NAMES.join(", "))))?;
    RunConfig::from_toml(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_parses_and_validates() {
        for name in PRESET_NAMES {
            let cfg = preset(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
            assert_eq!(back, cfg, "{name} does not round-trip");
        }
    }

    #[test]
    fn unknown_key_is_named_in_the_error() {
        let text = preset_text("fig2b").unwrap().replace("[sequence]", "[sequence]\nbogus_key = 1");
        let err = RunConfig::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("bogus_key"), "{err}");
    }

    #[test]
    fn default_sequence_matches_library_default() {
        let cfg = preset("fig2b").unwrap();
        let seq = cfg.sequence().unwrap();
        let d = SequenceParams::default();
        assert!((seq.total_duration() - d.total_duration()).abs() < 1e-15);
        assert!((seq.mw_rabi - d.mw_rabi).abs() < 1e-6);
    }

    #[test]
    fn gamma_override_rescales_dipolar_prefactor() {
        let mut cfg = preset("fig2b").unwrap();
        cfg.constants.gamma_e_mhz_per_mt = Some(56.0);
        let c = cfg.constants().unwrap();
        let ratio = c.dipolar_prefactor / PhysicalConstants::canonical().dipolar_prefactor;
        assert!((ratio - 4.0).abs() < 1e-12);
    }
}
