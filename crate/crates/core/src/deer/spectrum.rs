//! NV spectra over an RF-frequency grid, optionally with noise and tumbling.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::deer::lindblad::{channel_lindblad, LindbladRoute, LindbladStats};
use crate::deer::model::{channels, ChannelOperators, Mode, SystemModel};
use crate::deer::sequence::{NoiseParams, SequenceParams};
use crate::deer::unitary::channel_unitary;
use crate::error::{Error, Result};
use crate::quadrature::TumbleDistribution;
use crate::units::{mhz, to_mhz};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TumbleMode {
    /// Positions and both principal frames rotate together about the tumbling axis.
    Rigid,
    /// Only the first label's polar angle varies; everything else stays fixed.
    AzimuthOnly,
}

impl TumbleMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            TumbleMode::Rigid => "rigid",
            TumbleMode::AzimuthOnly => "azimuth-only",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TumbleSampling {
    Quadrature,
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tumble {
    pub distribution: TumbleDistribution,
    pub mode: TumbleMode,
    pub sampling: TumbleSampling,
}

impl Tumble {
    pub fn rigid(distribution: TumbleDistribution) -> Self {
        Self { distribution, mode: TumbleMode::Rigid, sampling: TumbleSampling::Quadrature }
    }

    fn points(&self) -> Result<Vec<(f64, f64)>> {
        match self.sampling {
            TumbleSampling::Quadrature => Ok(self.distribution.points()),
            TumbleSampling::MonteCarlo { samples, seed } => self.distribution.monte_carlo_points(samples, seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumMeta {
    pub mode: Mode,
    pub noise: bool,
    pub tumble: Option<(f64, usize, TumbleMode)>,
    pub seed: Option<u64>,
    /// <sigma_x> with the RF amplitude set to zero (frequency independent).
    pub baseline: Option<f64>,
    pub config_hash: Option<String>,
    pub max_trace_error: Option<f64>,
    pub min_eigenvalue: Option<f64>,
    pub max_unitarity_defect: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// (RF frequency in rad/s, <sigma_x>).
    pub points: Vec<(f64, f64)>,
    pub meta: SpectrumMeta,
}

impl Spectrum {
    pub fn frequencies(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.0).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.1).collect()
    }

    /// Mean <sigma_x> over the sweep.
    pub fn mean_value(&self) -> f64 {
        self.points.iter().map(|p| p.1).sum::<f64>() / self.points.len().max(1) as f64
    }

    /// Strict interior local minima, as (frequency, value).
    pub fn local_minima(&self) -> Vec<(f64, f64)> {
        let p = &self.points;
        (1..p.len().saturating_sub(1)).filter(|&i| p[i].1 < p[i - 1].1 && p[i].1 < p[i + 1].1).map(|i| p[i]).collect()
    }

    /// Height one must climb from the interior minimum at `i` before reaching a lower value or
    /// the sweep edge, taking the easier side.
    fn prominence(&self, i: usize) -> f64 {
        let p = &self.points;
        let v = p[i].1;
        let climb = |range: &mut dyn Iterator<Item = usize>| {
            let mut top = v;
            for j in range {
                if p[j].1 < v {
                    break;
                }
                top = top.max(p[j].1);
            }
            top
        };
        climb(&mut (0..i).rev()).min(climb(&mut (i + 1..p.len()))) - v
    }

    /// Local minima whose prominence is at least `fraction` of the full value range of the
    /// sweep. Drive side lobes of a single line sit well below a quarter of the range.
    pub fn resolved_minima(&self, fraction: f64) -> Vec<(f64, f64)> {
        let p = &self.points;
        let vals = self.values();
        let range =
            vals.iter().copied().fold(f64::NEG_INFINITY, f64::max) - vals.iter().copied().fold(f64::INFINITY, f64::min);
        if !(range > 0.0) {
            return Vec::new();
        }
        (1..p.len().saturating_sub(1))
            .filter(|&i| p[i].1 < p[i - 1].1 && p[i].1 < p[i + 1].1)
            .filter(|&i| self.prominence(i) >= fraction * range)
            .map(|i| p[i])
            .collect()
    }

    /// The two deepest interior local minima, ordered by frequency.
    pub fn two_deepest_minima(&self) -> Option<[(f64, f64); 2]> {
        let mut m = self.local_minima();
        if m.len() < 2 {
            return None;
        }
        m.sort_by(|a, b| a.1.total_cmp(&b.1));
        let mut two = [m[0], m[1]];
        two.sort_by(|a, b| a.0.total_cmp(&b.0));
        Some(two)
    }

    /// CSV with `#` metadata lines and columns `omega_rf_MHz,sx_mean`.
    pub fn to_csv(&self) -> String {
        let m = &self.meta;
        let mut s = String::new();
        let opt = |x: Option<f64>| x.map_or("none".to_string(), |v| format!("{v}"));
        let _ = writeln!(s, "# kind: spectrum");
        let _ = writeln!(s, "# mode: {}", m.mode.as_str());
        let _ = writeln!(s, "# noise: {}", if m.noise { "on" } else { "off" });
        match m.tumble {
            Some((sigma, nodes, mode)) => {
                let _ = writeln!(s, "# sigma_delta_deg: {}", sigma.to_degrees());
                let _ = writeln!(s, "# tumble_nodes: {nodes}");
                let _ = writeln!(s, "# tumble_mode: {}", mode.as_str());
            }
            None => {
                let _ = writeln!(s, "# sigma_delta_deg: none");
            }
        }
        let _ = writeln!(s, "# seed: {}", m.seed.map_or("none".to_string(), |v| v.to_string()));
        let _ = writeln!(s, "# baseline: {}", opt(m.baseline));
        if let Some(e) = m.max_trace_error {
            let _ = writeln!(s, "# max_trace_error: {e:e}");
        }
        if let Some(e) = m.min_eigenvalue {
            let _ = writeln!(s, "# min_eigenvalue: {e:e}");
        }
        if let Some(e) = m.max_unitarity_defect {
            let _ = writeln!(s, "# max_unitarity_defect: {e:e}");
        }
        if let Some(h) = &m.config_hash {
            let _ = writeln!(s, "# config_hash: {h}");
        }
        s.push_str("omega_rf_MHz,sx_mean\n");
        for (w, v) in &self.points {
            let _ = writeln!(s, "{},{}", to_mhz(*w), v);
        }
        s
    }

    /// Parses the format written by [`Spectrum::to_csv`]. Unknown metadata keys are ignored.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut meta = SpectrumMeta {
            mode: Mode::Reduced,
            noise: false,
            tumble: None,
            seed: None,
            baseline: None,
            config_hash: None,
            max_trace_error: None,
            min_eigenvalue: None,
            max_unitarity_defect: None,
        };
        let mut sigma = None;
        let mut nodes = None;
        let mut tumble_mode = TumbleMode::Rigid;
        let mut points = Vec::new();
        let mut header_seen = false;
        let bad = |line: usize, msg: &str| Error::Parse(format!("spectrum line {line}: {msg}"));
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.split_once(':') {
                    let (k, v) = (k.trim(), v.trim());
                    let num = |v: &str| v.parse::<f64>().ok();
                    match k {
                        "mode" => meta.mode = if v == "full" { Mode::Full } else { Mode::Reduced },
                        "noise" => meta.noise = v == "on",
                        "sigma_delta_deg" => sigma = num(v).map(f64::to_radians),
                        "tumble_nodes" => nodes = v.parse::<usize>().ok(),
                        "tumble_mode" => {
                            tumble_mode = if v == "azimuth-only" { TumbleMode::AzimuthOnly } else { TumbleMode::Rigid }
                        }
                        "seed" => meta.seed = v.parse().ok(),
                        "baseline" => meta.baseline = num(v),
                        "config_hash" => meta.config_hash = Some(v.to_string()),
                        "max_trace_error" => meta.max_trace_error = num(v),
                        "min_eigenvalue" => meta.min_eigenvalue = num(v),
                        "max_unitarity_defect" => meta.max_unitarity_defect = num(v),
                        _ => {}
                    }
                }
                continue;
            }
            if !header_seen {
                if line != "omega_rf_MHz,sx_mean" {
                    return Err(bad(no + 1, "expected header omega_rf_MHz,sx_mean"));
                }
                header_seen = true;
                continue;
            }
            let (a, b) = line.split_once(',').ok_or_else(|| bad(no + 1, "expected two columns"))?;
            let w: f64 = a.trim().parse().map_err(|_| bad(no + 1, "bad frequency"))?;
            let v: f64 = b.trim().parse().map_err(|_| bad(no + 1, "bad value"))?;
            if !(-1.0 - 1e-9..=1.0 + 1e-9).contains(&v) {
                return Err(bad(no + 1, "sx_mean outside [-1, 1]"));
            }
            points.push((mhz(w), v));
        }
        if points.is_empty() {
            return Err(Error::Parse("spectrum has no data rows".into()));
        }
        if let (Some(s), Some(n)) = (sigma, nodes) {
            meta.tumble = Some((s, n, tumble_mode));
        }
        Ok(Self { points, meta })
    }
}

/// Linearly spaced grid `count` points from `start` to `stop` inclusive.
pub fn linear_grid(start: f64, stop: f64, count: usize) -> Result<Vec<f64>> {
    if count == 0 || !(start.is_finite() && stop.is_finite()) {
        return Err(Error::InvalidInput("grid needs a positive count and finite bounds".into()));
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    Ok((0..count).map(|k| start + (stop - start) * k as f64 / (count - 1) as f64).collect())
}

struct PreparedNode {
    weight: f64,
    channels: Vec<(f64, ChannelOperators)>,
}

#[derive(Debug, Clone, Copy, Default)]
struct PointDiagnostics {
    lindblad: Option<LindbladStats>,
    unitarity: Option<f64>,
}

fn evaluate(
    node: &PreparedNode,
    model: &SystemModel,
    seq: &SequenceParams,
    noise: Option<&NoiseParams>,
    omega: f64,
    rf_on: bool,
    check: bool,
) -> Result<(f64, PointDiagnostics)> {
    let mut total = 0.0;
    let mut diag = PointDiagnostics::default();
    for (w, ops) in &node.channels {
        let sx = match noise {
            Some(n) => {
                let (sx, s) = channel_lindblad(ops, seq, n, &model.constants, omega, rf_on, LindbladRoute::Auto)?;
                diag.lindblad.get_or_insert_with(LindbladStats::default).merge(&s);
                sx
            }
            None => {
                let out = channel_unitary(ops, seq, omega, rf_on, check)?;
                if let Some(d) = out.unitarity_defect {
                    diag.unitarity = Some(diag.unitarity.unwrap_or(0.0).max(d));
                }
                out.sigma_x
            }
        };
        total += w * sx;
    }
    Ok((total, diag))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SpectrumOptions {
    /// Record max |U†U - I| per node (coherent runs only).
    pub check_unitarity: bool,
    /// Skip the RF-off baseline evaluation.
    pub skip_baseline: bool,
}

/// Averaged <sigma_x> at each grid frequency. Every (tumble node, frequency) pair is an
/// independent evaluation; the node sum is taken in node order, so the result does not
/// depend on scheduling.
pub fn spectrum(
    model: &SystemModel,
    seq: &SequenceParams,
    grid: &[f64],
    noise: Option<&NoiseParams>,
    tumble: Option<&Tumble>,
) -> Result<Spectrum> {
    spectrum_with(model, seq, grid, noise, tumble, SpectrumOptions::default())
}

pub fn spectrum_with(
    model: &SystemModel,
    seq: &SequenceParams,
    grid: &[f64],
    noise: Option<&NoiseParams>,
    tumble: Option<&Tumble>,
    opts: SpectrumOptions,
) -> Result<Spectrum> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("frequency grid is empty".into()));
    }
    seq.validate()?;
    if let Some(n) = noise {
        n.validate()?;
    }
    let nodes: Vec<(f64, f64)> = match tumble {
        Some(t) => t.points()?,
        None => vec![(0.0, 1.0)],
    };
    let prepared: Vec<PreparedNode> = nodes
        .par_iter()
        .map(|&(delta, weight)| {
            let m = match tumble.map(|t| t.mode) {
                Some(TumbleMode::AzimuthOnly) => model.azimuth_shifted(delta),
                _ => model.tumbled(delta),
            };
            let chans = channels(&m, seq.bz)?;
            Ok(PreparedNode {
                weight,
                channels: chans
                    .iter()
                    .map(|c| (c.weight, ChannelOperators::new(c, seq, model.drive_coupling)))
                    .collect(),
            })
        })
        .collect::<Result<_>>()?;

    let mut tasks: Vec<(usize, Option<usize>)> =
        (0..prepared.len()).flat_map(|n| (0..grid.len()).map(move |g| (n, Some(g)))).collect();
    if !opts.skip_baseline {
        tasks.extend((0..prepared.len()).map(|n| (n, None)));
    }
    let results: Vec<(f64, PointDiagnostics)> = tasks
        .par_iter()
        .map(|&(n, g)| match g {
            Some(g) => evaluate(&prepared[n], model, seq, noise, grid[g], true, opts.check_unitarity),
            None => evaluate(&prepared[n], model, seq, noise, grid[0], false, false),
        })
        .collect::<Result<_>>()?;

    let per_node = grid.len();
    let mut values = vec![0.0; grid.len()];
    let single = prepared.len() == 1;
    let mut lindblad: Option<LindbladStats> = None;
    let mut unitarity: Option<f64> = None;
    let mut baseline = if opts.skip_baseline { None } else { Some(0.0) };
    for (idx, (task, (v, d))) in tasks.iter().zip(&results).enumerate() {
        let w = prepared[task.0].weight;
        let contrib = if single { *v } else { w * v };
        match task.1 {
            Some(g) => {
                debug_assert_eq!(idx, task.0 * per_node + g);
                values[g] += contrib;
            }
            None => *baseline.as_mut().expect("baseline slot") += contrib,
        }
        if let Some(s) = &d.lindblad {
            lindblad.get_or_insert_with(LindbladStats::default).merge(s);
        }
        if let Some(u) = d.unitarity {
            unitarity = Some(unitarity.unwrap_or(0.0).max(u));
        }
    }
    let points: Vec<(f64, f64)> = grid.iter().copied().zip(values).collect();
    for (w, v) in &points {
        if v.abs() > 1.0 + 1e-9 {
            return Err(Error::Integrator(format!("<sigma_x> = {v} outside [-1, 1] at {} MHz", to_mhz(*w))));
        }
    }
    let seed = match tumble.map(|t| t.sampling) {
        Some(TumbleSampling::MonteCarlo { seed, .. }) => Some(seed),
        _ => None,
    };
    Ok(Spectrum {
        points,
        meta: SpectrumMeta {
            mode: model.mode,
            noise: noise.is_some(),
            tumble: tumble.map(|t| (t.distribution.sigma_delta(), t.distribution.node_count(), t.mode)),
            seed,
            baseline,
            config_hash: None,
            max_trace_error: lindblad.map(|s| s.max_trace_error),
            min_eigenvalue: lindblad.map(|s| s.min_eigenvalue),
            max_unitarity_defect: unitarity,
        },
    })
}
