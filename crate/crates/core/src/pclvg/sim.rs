//! Monte Carlo paths of the PCLVG process.
//!
//! In the coordinate `z = (x − U)/σ₁` below the barrier and `(x − U)/σ₂`
//! above it the diffusion is a skew Brownian motion with variance rate 2,
//! leaving zero upward with probability `σ₁/(σ₁+σ₂)`. Each step is sampled
//! exactly: a free Gaussian move, a bridge test for touching zero, and a
//! reflection of the excursion sign when zero was touched. Absorption at the
//! origin of the price axis uses the same bridge argument.

use super::{PclvgError, PclvgParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_paths: usize,
    pub seed: u64,
    /// Steps per path over the random horizon `τ²ξ`.
    pub n_steps: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { n_paths: 100_000, seed: 7, n_steps: 256 }
    }
}

/// Per-path terminal values and barrier information.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimSample {
    pub terminal: Vec<f64>,
    pub running_max: Vec<f64>,
    pub hit_barrier: Vec<bool>,
    pub absorbed: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl McEstimate {
    /// Whether `target` lies within `k` standard errors of the mean.
    pub fn covers(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr
    }
}

/// Sample mean and standard error.
pub fn mc_mean<I: IntoIterator<Item = f64>>(values: I) -> McEstimate {
    let mut n = 0usize;
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for v in values {
        n += 1;
        let d = v - mean;
        mean += d / n as f64;
        m2 += d * (v - mean);
    }
    let stderr = if n > 1 { (m2 / (n - 1) as f64 / n as f64).sqrt() } else { f64::NAN };
    McEstimate { mean, stderr, n }
}

struct PathOutcome {
    terminal: f64,
    running_max: f64,
    hit: bool,
    absorbed: bool,
}

fn to_price(p: &PclvgParams, z: f64) -> f64 {
    if z < 0.0 {
        p.barrier + p.sigma1 * z
    } else {
        p.barrier + p.sigma2 * z
    }
}

fn to_coord(p: &PclvgParams, x: f64) -> f64 {
    if x < p.barrier {
        (x - p.barrier) / p.sigma1
    } else {
        (x - p.barrier) / p.sigma2
    }
}

fn run_path(p: &PclvgParams, z0: f64, tau: f64, n_steps: usize, rng: &mut ChaCha8Rng) -> PathOutcome {
    let xi: f64 = Exp1.sample(rng);
    let h = tau * tau * xi / n_steps as f64;
    let scale = (2.0 * h).sqrt();
    let up_prob = p.sigma1 / (p.sigma1 + p.sigma2);
    let z_abs = -p.barrier / p.sigma1;

    let mut z = z0;
    let mut z_max = z0;
    let mut hit = z0 >= 0.0;
    if h <= 0.0 {
        return PathOutcome { terminal: to_price(p, z), running_max: to_price(p, z), hit, absorbed: false };
    }
    for _ in 0..n_steps {
        let n: f64 = StandardNormal.sample(rng);
        let w = z + scale * n;
        let crossed = z == 0.0 || w == 0.0 || (w > 0.0) != (z > 0.0) || rng.random::<f64>() < (-z * w / h).exp();
        let next = if crossed {
            hit = true;
            z_max = z_max.max(0.0);
            if rng.random::<f64>() < up_prob {
                w.abs()
            } else {
                -w.abs()
            }
        } else {
            w
        };
        if next <= z_abs {
            return PathOutcome { terminal: 0.0, running_max: to_price(p, z_max), hit, absorbed: true };
        }
        if z < 0.0 && next < 0.0 && rng.random::<f64>() < (-(z - z_abs) * (next - z_abs) / h).exp() {
            return PathOutcome { terminal: 0.0, running_max: to_price(p, z_max), hit, absorbed: true };
        }
        z = next;
        z_max = z_max.max(z);
    }
    PathOutcome { terminal: to_price(p, z), running_max: to_price(p, z_max), hit, absorbed: false }
}

/// Simulates `X_τ` from `x0`. Path `i` draws from its own ChaCha8 stream so
/// results do not depend on evaluation order.
pub fn simulate_pclvg(p: &PclvgParams, x0: f64, tau: f64, cfg: &SimConfig) -> Result<SimSample, PclvgError> {
    if !(x0 > 0.0 && x0.is_finite()) {
        return Err(PclvgError::InvalidArgument("start must be positive"));
    }
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(PclvgError::InvalidArgument("tau must be non-negative"));
    }
    if cfg.n_steps == 0 || cfg.n_paths == 0 {
        return Err(PclvgError::InvalidArgument("n_paths and n_steps must be positive"));
    }
    let z0 = to_coord(p, x0);
    let mut out = SimSample {
        terminal: Vec::with_capacity(cfg.n_paths),
        running_max: Vec::with_capacity(cfg.n_paths),
        hit_barrier: Vec::with_capacity(cfg.n_paths),
        absorbed: Vec::with_capacity(cfg.n_paths),
    };
    for i in 0..cfg.n_paths {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(i as u64);
        let o = run_path(p, z0, tau, cfg.n_steps, &mut rng);
        out.terminal.push(o.terminal);
        out.running_max.push(o.running_max);
        out.hit_barrier.push(o.hit);
        out.absorbed.push(o.absorbed);
    }
    Ok(out)
}
