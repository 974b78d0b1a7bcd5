use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::inference::metropolis::{Chain, Stall};
use crate::response::{g12_from_params, PARAM_NAMES};
use crate::units::to_mhz;

/// A scalar function of one posterior sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Parameter(usize),
    /// |g12| / 2π in MHz from (d12, A_β, φ_β).
    AbsCoupling,
}

impl Quantity {
    pub fn name(&self) -> String {
        match self {
            Quantity::Parameter(k) => PARAM_NAMES[*k].to_string(),
            Quantity::AbsCoupling => "abs_g12".to_string(),
        }
    }

    pub fn unit(&self) -> &'static str {
        match self {
            Quantity::Parameter(2 | 3 | 5 | 7) => "deg",
            Quantity::Parameter(6) => "nm",
            Quantity::Parameter(_) => "",
            Quantity::AbsCoupling => "MHz",
        }
    }

    /// Value in the reported unit.
    pub fn eval(&self, v: &[f64; 8], c: &PhysicalConstants) -> f64 {
        match self {
            Quantity::Parameter(k @ (2 | 3 | 5 | 7)) => v[*k].to_degrees(),
            Quantity::Parameter(k) => v[*k],
            Quantity::AbsCoupling => to_mhz(g12_from_params(v[6], v[4], v[5], c).abs()),
        }
    }

    pub fn all() -> Vec<Quantity> {
        (0..8).map(Quantity::Parameter).chain([Quantity::AbsCoupling]).collect()
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Marginal {
    pub name: String,
    pub unit: String,
    pub mean: f64,
    pub std: f64,
    /// (probability, value) pairs.
    pub quantiles: Vec<(f64, f64)>,
    pub histogram: Histogram,
}

pub const QUANTILES: [f64; 5] = [0.025, 0.16, 0.5, 0.84, 0.975];

/// Post-burn-in mean, sample standard deviation, quantiles and an equal-width histogram.
pub fn marginal_summary(
    chain: &Chain,
    q: Quantity,
    burn_in: usize,
    bins: usize,
    c: &PhysicalConstants,
) -> Result<Marginal> {
    if burn_in >= chain.len() {
        return Err(Error::InvalidInput(format!("burn-in {burn_in} leaves no samples of {}", chain.len())));
    }
    if bins == 0 {
        return Err(Error::InvalidInput("histogram needs at least one bin".into()));
    }
    let xs: Vec<f64> = chain.samples[burn_in..].iter().map(|v| q.eval(v, c)).collect();
    let n = xs.len() as f64;
    // Shifted by the first sample: exact for constant chains, less cancellation otherwise.
    let x0 = xs[0];
    let mean = x0 + xs.iter().map(|x| x - x0).sum::<f64>() / n;
    let std = if xs.len() > 1 { (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
    let mut sorted = xs.clone();
    sorted.sort_by(f64::total_cmp);
    let quantile = |p: f64| {
        let pos = p * (sorted.len() - 1) as f64;
        let (i, f) = (pos.floor() as usize, pos.fract());
        if i + 1 < sorted.len() {
            sorted[i] * (1.0 - f) + sorted[i + 1] * f
        } else {
            sorted[i]
        }
    };
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    let histogram = if hi > lo {
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0u64; bins];
        for x in &xs {
            counts[(((x - lo) / width) as usize).min(bins - 1)] += 1;
        }
        Histogram { edges: (0..=bins).map(|i| lo + width * i as f64).collect(), counts }
    } else {
        Histogram { edges: vec![lo, hi], counts: vec![xs.len() as u64] }
    };
    Ok(Marginal {
        name: q.name(),
        unit: q.unit().to_string(),
        mean,
        std,
        quantiles: QUANTILES.iter().map(|&p| (p, quantile(p))).collect(),
        histogram,
    })
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Summary {
    pub steps: usize,
    pub burn_in: usize,
    pub seeds: Vec<u64>,
    pub acceptance_rate: f64,
    /// Post-burn-in proposal scales per parameter, in internal units (rad, nm).
    pub proposal_scales: Vec<(String, f64)>,
    pub baseline: f64,
    pub noise_sigma: f64,
    pub marginals: Vec<Marginal>,
    pub gelman_rubin: Option<Vec<(String, f64)>>,
    pub stalls: Vec<Stall>,
    pub config_hash: Option<String>,
}

impl Summary {
    /// Marginals of every parameter and |g12| pooled over the post-burn-in parts of `chains`.
    pub fn from_chains(
        chains: &[Chain],
        bins: usize,
        baseline: f64,
        noise_sigma: f64,
        c: &PhysicalConstants,
    ) -> Result<Self> {
        let first = chains.first().ok_or_else(|| Error::InvalidInput("no chains to summarize".into()))?;
        let burn_in = first.burn_in;
        let pooled = Chain {
            samples: chains.iter().flat_map(|ch| ch.samples[ch.burn_in..].iter().copied()).collect(),
            log_posterior: chains.iter().flat_map(|ch| ch.log_posterior[ch.burn_in..].iter().copied()).collect(),
            accepted: chains.iter().flat_map(|ch| ch.accepted[ch.burn_in..].iter().copied()).collect(),
            scales: first.scales,
            seed: first.seed,
            burn_in: 0,
            stalls: Vec::new(),
        };
        let marginals =
            Quantity::all().into_iter().map(|q| marginal_summary(&pooled, q, 0, bins, c)).collect::<Result<_>>()?;
        let rhat = (chains.len() > 1).then(|| {
            (0..8)
                .filter_map(|k| {
                    crate::inference::metropolis::gelman_rubin(chains, k).map(|r| (PARAM_NAMES[k].to_string(), r))
                })
                .collect()
        });
        Ok(Self {
            steps: first.len(),
            burn_in,
            seeds: chains.iter().map(|c| c.seed).collect(),
            acceptance_rate: pooled.acceptance_rate(0),
            proposal_scales: PARAM_NAMES.iter().zip(first.scales).map(|(n, s)| (n.to_string(), s)).collect(),
            baseline,
            noise_sigma,
            marginals,
            gelman_rubin: rhat,
            stalls: chains.iter().flat_map(|c| c.stalls.iter().copied()).collect(),
            config_hash: None,
        })
    }

    pub fn marginal(&self, name: &str) -> Option<&Marginal> {
        self.marginals.iter().find(|m| m.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary is serializable")
    }
}
