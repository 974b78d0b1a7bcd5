//! Random-scan Metropolis: each step proposes a symmetric Gaussian move in one component.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::inference::likelihood::Bounds;
use crate::response::PARAM_NAMES;

/// Burn-in adaptation: each component's log scale follows a Robbins-Monro update toward
/// `target` acceptance, with a gain that decays over roughly `window` steps.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tuning {
    pub window: usize,
    pub target: f64,
}

impl Default for Tuning {
    fn default() -> Self {
        Self { window: 500, target: 0.30 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetropolisConfig {
    pub steps: usize,
    pub burn_in: usize,
    pub initial: [f64; 8],
    pub scales: [f64; 8],
    pub seed: u64,
    pub tuning: Option<Tuning>,
    /// Post-burn-in run of rejections that counts as a stall.
    pub stall_window: usize,
}

impl MetropolisConfig {
    pub fn validate(&self, bounds: &Bounds) -> Result<()> {
        if self.steps <= self.burn_in {
            return Err(Error::InvalidInput(format!("steps ({}) must exceed burn-in ({})", self.steps, self.burn_in)));
        }
        if self.scales.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::InvalidInput("proposal scales must be finite and non-negative".into()));
        }
        if !bounds.contains(&self.initial) {
            return Err(Error::InvalidInput("initial point lies outside the prior bounds".into()));
        }
        if let Some(t) = self.tuning {
            if t.window == 0 || !(0.0 < t.target && t.target < 1.0) {
                return Err(Error::InvalidInput("tuning needs a positive window and a target in (0, 1)".into()));
            }
        }
        if self.stall_window == 0 {
            return Err(Error::InvalidInput("stall window must be positive".into()));
        }
        Ok(())
    }
}

/// A run of `window` consecutive rejections ending at `step`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Stall {
    pub step: usize,
    pub window: usize,
    pub log_posterior: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    /// Every step including burn-in.
    pub samples: Vec<[f64; 8]>,
    pub log_posterior: Vec<f64>,
    pub accepted: Vec<bool>,
    /// Proposal scales in force after burn-in.
    pub scales: [f64; 8],
    pub seed: u64,
    pub burn_in: usize,
    pub stalls: Vec<Stall>,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn acceptance_rate(&self, from: usize) -> f64 {
        let tail = &self.accepted[from.min(self.accepted.len())..];
        if tail.is_empty() {
            return 0.0;
        }
        tail.iter().filter(|a| **a).count() as f64 / tail.len() as f64
    }

    /// Acceptance over the post-burn-in steps, where the proposal is fixed.
    pub fn post_burn_in_acceptance(&self) -> f64 {
        self.acceptance_rate(self.burn_in)
    }

    pub fn column(&self, k: usize, from: usize) -> Vec<f64> {
        self.samples[from.min(self.samples.len())..].iter().map(|v| v[k]).collect()
    }

    /// One row per step: the parameters, log-posterior and accepted flag.
    pub fn to_csv(&self, config_hash: Option<&str>) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# kind: chain");
        let _ = writeln!(s, "# seed: {}", self.seed);
        let _ = writeln!(s, "# burn_in: {}", self.burn_in);
        let _ = writeln!(s, "# units: angles in rad, d12 in nm");
        if let Some(h) = config_hash {
            let _ = writeln!(s, "# config_hash: {h}");
        }
        s.push_str("step,");
        for n in PARAM_NAMES {
            s.push_str(n);
            s.push(',');
        }
        s.push_str("log_posterior,accepted\n");
        for (i, v) in self.samples.iter().enumerate() {
            let _ = write!(s, "{i}");
            for x in v {
                let _ = write!(s, ",{x}");
            }
            let _ = writeln!(s, ",{},{}", self.log_posterior[i], self.accepted[i] as u8);
        }
        s
    }
}

fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Samples exp(log_target) restricted to `bounds` (uniform prior). Each step picks a component
/// uniformly and proposes a symmetric Gaussian move in it, periodic angles wrapped, so the
/// acceptance ratio is the posterior ratio. Scales are frozen once burn-in ends.
pub fn metropolis<F>(log_target: F, bounds: &Bounds, cfg: &MetropolisConfig) -> Result<Chain>
where
    F: Fn(&[f64; 8]) -> f64,
{
    cfg.validate(bounds)?;
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let mut current = cfg.initial;
    let mut current_lp = log_target(&current);
    if !current_lp.is_finite() {
        return Err(Error::InvalidInput("log-posterior is not finite at the initial point".into()));
    }
    let mut log_scales = cfg.scales.map(f64::ln);
    let mut updates = [0usize; 8];
    let mut chain = Chain {
        samples: Vec::with_capacity(cfg.steps),
        log_posterior: Vec::with_capacity(cfg.steps),
        accepted: Vec::with_capacity(cfg.steps),
        scales: cfg.scales,
        seed: cfg.seed,
        burn_in: cfg.burn_in,
        stalls: Vec::new(),
    };
    let mut rejections = 0usize;
    for step in 0..cfg.steps {
        let k = rng.gen_range(0..8);
        let z: f64 = rng.sample(StandardNormal);
        let mut proposal = current;
        proposal[k] += log_scales[k].exp() * z;
        bounds.wrap(&mut proposal);
        let lp = if bounds.contains(&proposal) { log_target(&proposal) } else { f64::NEG_INFINITY };
        let u: f64 = rng.gen();
        let alpha = if lp.is_finite() { (lp - current_lp).min(0.0).exp() } else { 0.0 };
        let accept = lp.is_finite() && u.ln() < lp - current_lp;
        if accept {
            current = proposal;
            current_lp = lp;
            rejections = 0;
        } else {
            rejections += 1;
        }
        chain.samples.push(current);
        chain.log_posterior.push(current_lp);
        chain.accepted.push(accept);

        if step < cfg.burn_in {
            if let Some(t) = cfg.tuning {
                // Robbins-Monro on this component's acceptance probability; the gain decays
                // over a window's worth of updates per component.
                if log_scales[k].is_finite() {
                    let n = updates[k] as f64;
                    log_scales[k] += (alpha - t.target) / (1.0 + 8.0 * n / t.window as f64).powf(0.6);
                    let width = bounds.upper[k] - bounds.lower[k];
                    log_scales[k] = log_scales[k].min(width.ln());
                }
                updates[k] += 1;
            }
        } else if rejections == cfg.stall_window {
            log::warn!("chain stalled: no accepted move in {} steps (log-posterior {current_lp:.6})", cfg.stall_window);
            chain.stalls.push(Stall { step, window: cfg.stall_window, log_posterior: current_lp });
        }
    }
    chain.scales = log_scales.map(f64::exp);
    Ok(chain)
}

/// Independent chains with seeds `seed, seed + 1, ...`, run in parallel.
pub fn run_chains<F>(log_target: F, bounds: &Bounds, cfg: &MetropolisConfig, count: usize) -> Result<Vec<Chain>>
where
    F: Fn(&[f64; 8]) -> f64 + Sync,
{
    if count == 0 {
        return Err(Error::InvalidInput("chain count must be positive".into()));
    }
    (0..count)
        .into_par_iter()
        .map(|i| {
            metropolis(&log_target, bounds, &MetropolisConfig { seed: cfg.seed.wrapping_add(i as u64), ..cfg.clone() })
        })
        .collect()
}

/// Potential scale reduction of parameter `k` over the post-burn-in parts of `chains`.
pub fn gelman_rubin(chains: &[Chain], k: usize) -> Option<f64> {
    if chains.len() < 2 {
        return None;
    }
    let cols: Vec<Vec<f64>> = chains.iter().map(|c| c.column(k, c.burn_in)).collect();
    let n = cols.iter().map(Vec::len).min()?;
    if n < 2 {
        return None;
    }
    let m = cols.len() as f64;
    let nf = n as f64;
    let means: Vec<f64> = cols.iter().map(|c| c[..n].iter().sum::<f64>() / nf).collect();
    let grand = means.iter().sum::<f64>() / m;
    let b = nf / (m - 1.0) * means.iter().map(|x| (x - grand).powi(2)).sum::<f64>();
    let w = cols.iter().map(|c| sample_std(&c[..n]).powi(2)).sum::<f64>() / m;
    if w == 0.0 {
        return Some(1.0);
    }
    let var = (nf - 1.0) / nf * w + b / nf;
    Some((var / w).sqrt())
}
