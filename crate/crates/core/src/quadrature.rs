//! Gaussian ensemble averages over the tumbling angle.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Gauss–Hermite rule for the standard normal: E[f(z)] ≈ Σ w_k f(z_k), Σ w_k = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Golub–Welsch: nodes are the eigenvalues of the Jacobi matrix of the probabilists'
    /// Hermite recurrence, weights the squared first eigenvector components.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let jacobi =
            DMatrix::from_fn(n, n, |i, j| if i + 1 == j || j + 1 == i { (i.max(j) as f64).sqrt() } else { 0.0 });
        let eig = jacobi.symmetric_eigen();
        let mut pairs: Vec<(f64, f64)> =
            (0..n).map(|k| (eig.eigenvalues[k], eig.eigenvectors[(0, k)].powi(2))).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        // Symmetrise exactly: the rule is even, and odd moments should vanish to rounding.
        for k in 0..n / 2 {
            let (a, b) = (pairs[k], pairs[n - 1 - k]);
            let x = 0.5 * (b.0 - a.0);
            let w = 0.5 * (a.1 + b.1);
            pairs[k] = (-x, w);
            pairs[n - 1 - k] = (x, w);
        }
        if n % 2 == 1 {
            pairs[n / 2].0 = 0.0;
        }
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        Self { nodes: pairs.iter().map(|p| p.0).collect(), weights: pairs.iter().map(|p| p.1 / total).collect() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Zero-mean Gaussian spread of the tumbling angle, with the node count of its quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct TumbleDistribution {
    sigma_delta: f64,
    rule: GaussHermite,
}

pub const DEFAULT_SIMULATION_NODES: usize = 15;

impl TumbleDistribution {
    pub fn new(sigma_delta: f64, nodes: usize) -> Result<Self> {
        if !(sigma_delta.is_finite() && sigma_delta >= 0.0) {
            return Err(Error::InvalidInput(format!("tumble spread must be >= 0, got {sigma_delta}")));
        }
        if nodes < 7 || nodes % 2 == 0 {
            return Err(Error::InvalidInput(format!("quadrature node count must be odd and >= 7, got {nodes}")));
        }
        Ok(Self { sigma_delta, rule: GaussHermite::new(nodes) })
    }

    pub fn sigma_delta(&self) -> f64 {
        self.sigma_delta
    }

    pub fn node_count(&self) -> usize {
        self.rule.len()
    }

    /// (delta, weight) pairs. A zero spread collapses to the single node delta = 0.
    pub fn points(&self) -> Vec<(f64, f64)> {
        if self.sigma_delta == 0.0 {
            return vec![(0.0, 1.0)];
        }
        self.rule.nodes.iter().zip(&self.rule.weights).map(|(z, w)| (self.sigma_delta * z, *w)).collect()
    }
}

impl TumbleDistribution {
    /// Equal-weight random draws, for validating the quadrature.
    pub fn monte_carlo_points(&self, samples: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
        if samples == 0 {
            return Err(Error::InvalidInput("Monte Carlo sample count must be positive".into()));
        }
        if self.sigma_delta == 0.0 {
            return Ok(vec![(0.0, 1.0)]);
        }
        let normal = Normal::new(0.0, self.sigma_delta).map_err(|e| Error::InvalidInput(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = 1.0 / samples as f64;
        Ok((0..samples).map(|_| (normal.sample(&mut rng), w)).collect())
    }
}

/// E[f(delta)] for delta ~ N(0, sigma^2). Summation runs in node order, so the result does
/// not depend on how the evaluations were scheduled.
pub fn gauss_average<F: Fn(f64) -> f64>(f: F, dist: &TumbleDistribution) -> f64 {
    let pts = dist.points();
    if pts.len() == 1 {
        return f(pts[0].0);
    }
    pts.iter().map(|(d, w)| w * f(*d)).sum()
}

/// Standard deviation of f(delta) for delta ~ N(0, sigma^2), from the same nodes.
pub fn gauss_std<F: Fn(f64) -> f64>(f: F, dist: &TumbleDistribution) -> f64 {
    let pts = dist.points();
    let vals: Vec<f64> = pts.iter().map(|(d, _)| f(*d)).collect();
    let mean: f64 = pts.iter().zip(&vals).map(|((_, w), v)| w * v).sum();
    let var: f64 = pts.iter().zip(&vals).map(|((_, w), v)| w * (v - mean).powi(2)).sum();
    var.max(0.0).sqrt()
}

/// Seeded Monte Carlo estimate of the same average, for validating the quadrature.
pub fn monte_carlo_average<F: Fn(f64) -> f64>(f: F, sigma_delta: f64, samples: usize, seed: u64) -> Result<f64> {
    if samples == 0 {
        return Err(Error::InvalidInput("Monte Carlo sample count must be positive".into()));
    }
    let dist = TumbleDistribution { sigma_delta, rule: GaussHermite::new(7) };
    Ok(dist.monte_carlo_points(samples, seed)?.iter().map(|(d, w)| w * f(*d)).sum())
}
