//! Monte Carlo simulation of the muted network.
//!
//! BSs and UEs are Poisson on a square torus. Every UE attaches to its
//! largest-gain BS, BSs without UEs go idle, and a typical UE added at a
//! uniform location measures its SINR against the remaining active BSs.
//! Each trial draws from its own ChaCha stream and samples are reduced in
//! trial order, so results do not depend on the thread count.

mod channel;
mod geometry;
mod realization;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

pub use channel::{rician_k, Fading, Shadowing};
pub use geometry::torus_distance;
pub use realization::{associate, generate_realization, Realization, TYPICAL_UE};

use crate::association::AssociationDensity;
use crate::coverage::{UeDensity, GAMMA_CAP};
use crate::error::{require, Error, Result};
use crate::pathloss::{LinkType, PathLossModel};
use realization::GainBound;

const MEASURE_STREAM_SALT: u64 = 0x7479_7069_6361_6c00;
const Z95: f64 = 1.959_963_984_540_054;

/// Simulation setup. Powers in mW, distances in km.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub model: PathLossModel,
    pub lambda: f64,
    pub rho: UeDensity,
    /// Side of the square torus, km.
    pub region_side: f64,
    /// SINR thresholds (linear) for the coverage estimates.
    pub gamma_grid: Vec<f64>,
    /// Threshold (linear) for the ASE estimate.
    pub gamma0: f64,
    pub tx_power: f64,
    pub noise_power: f64,
    pub fading: Fading,
    pub shadowing: Option<Shadowing>,
    pub trials: usize,
    pub seed: u64,
    /// Keep every BS active regardless of UEs.
    pub all_active: bool,
}

/// Smallest torus side holding about 2000 BSs and spanning 40 median
/// association distances.
pub fn default_region_side(model: &PathLossModel, lambda: f64) -> Result<f64> {
    let median = AssociationDensity::new(model.clone(), lambda)?.median_distance()?;
    Ok((2000.0 / lambda).sqrt().max(40.0 * median))
}

impl SimConfig {
    /// Rayleigh fading, no shadowing, `γ = γ0 = 1`, 1000 trials, seed 0 and
    /// the default region.
    pub fn new(model: PathLossModel, lambda: f64, rho: UeDensity, tx_power: f64, noise_power: f64) -> Result<Self> {
        let region_side = default_region_side(&model, lambda)?;
        let cfg = SimConfig {
            model,
            lambda,
            rho,
            region_side,
            gamma_grid: vec![1.0],
            gamma0: 1.0,
            tx_power,
            noise_power,
            fading: Fading::Rayleigh,
            shadowing: None,
            trials: 1000,
            seed: 0,
            all_active: rho.is_infinite(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        require(self.lambda > 0.0 && self.lambda.is_finite(), || {
            format!("BS density must be positive, got {}", self.lambda)
        })?;
        if let UeDensity::Finite(rho) = self.rho {
            require(rho >= 0.0 && rho.is_finite(), || format!("UE density must be non-negative, got {rho}"))?;
        }
        require(self.region_side > 0.0 && self.region_side.is_finite(), || {
            format!("region side must be positive, got {}", self.region_side)
        })?;
        require(self.trials >= 1, || "trials must be at least 1".into())?;
        require(self.gamma_grid.iter().all(|g| *g >= 0.0), || "SINR thresholds must be non-negative".into())?;
        require(self.gamma0 >= 0.0, || format!("ASE threshold must be non-negative, got {}", self.gamma0))?;
        require(self.tx_power > 0.0, || format!("transmit power must be positive, got {}", self.tx_power))?;
        require(self.noise_power >= 0.0, || {
            format!("noise power must be non-negative, got {}", self.noise_power)
        })?;
        if let Some(s) = self.shadowing {
            require(s.sigma_db >= 0.0, || format!("shadowing deviation must be non-negative, got {}", s.sigma_db))?;
            require((0.0..=1.0).contains(&s.correlation), || {
                format!("shadowing correlation must lie in [0, 1], got {}", s.correlation)
            })?;
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        self.region_side * self.region_side
    }
}

/// What one trial contributes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialSample {
    pub trial: u64,
    pub bs_count: u32,
    pub ue_count: u32,
    /// Active BSs, excluding any activated only by the typical UE.
    pub active_count: u32,
    pub sinr: f64,
    pub serving_distance: f64,
    pub serving_link: LinkType,
}

/// SINR of a typical UE dropped uniformly into an associated realization.
pub fn measure(real: &Realization, cfg: &SimConfig) -> Option<TrialSample> {
    let model = &cfg.model;
    if real.bs_positions.is_empty() {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ MEASURE_STREAM_SALT);
    rng.set_stream(real.trial);
    let p = [rng.random::<f64>() * real.side, rng.random::<f64>() * real.side];
    let ue_shadow = match cfg.shadowing {
        Some(s) => s.ue_factor(StandardNormal.sample(&mut rng)),
        None => 1.0,
    };
    let bound = GainBound::new(model, &real.bs_log_shadow);
    let server = real.best_server(model, &bound, p, TYPICAL_UE)?;
    let signal = cfg.tx_power * server.gain() * ue_shadow * cfg.fading.sample(server.distance, &mut rng);
    let mut interference = 0.0;
    for &b in &real.active_set {
        if b == server.bs {
            continue;
        }
        let c = real.candidate(model, p, TYPICAL_UE, b);
        interference += cfg.tx_power * c.gain() * ue_shadow * cfg.fading.sample(c.distance, &mut rng);
    }
    let denominator = interference + cfg.noise_power;
    let sinr = if denominator > 0.0 { signal / denominator } else { f64::INFINITY };
    Some(TrialSample {
        trial: real.trial,
        bs_count: real.bs_count() as u32,
        ue_count: real.ue_count() as u32,
        active_count: real.active_set.len() as u32,
        sinr,
        serving_distance: server.distance,
        serving_link: server.link,
    })
}

/// Runs one trial; `None` when the region holds no BS.
pub fn simulate_trial(cfg: &SimConfig, trial: u64) -> Option<TrialSample> {
    let mut real = generate_realization(cfg, trial);
    if real.bs_positions.is_empty() {
        return None;
    }
    real.mark_active(&cfg.model);
    measure(&real, cfg)
}

/// Per-trial samples in trial order.
pub fn run_samples(cfg: &SimConfig) -> Result<Vec<Option<TrialSample>>> {
    cfg.validate()?;
    Ok((0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| simulate_trial(cfg, t))
        .collect())
}

/// Mean with a 95% normal-approximation half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub ci95: f64,
}

impl Estimate {
    pub fn contains(&self, x: f64) -> bool {
        (x - self.mean).abs() <= self.ci95
    }
}

fn mean_estimate(values: impl Iterator<Item = f64> + Clone) -> Estimate {
    let (mut n, mut sum) = (0usize, 0.0);
    for v in values.clone() {
        n += 1;
        sum += v;
    }
    if n == 0 {
        return Estimate { mean: f64::NAN, ci95: f64::NAN };
    }
    let mean = sum / n as f64;
    let ss: f64 = values.map(|v| (v - mean).powi(2)).sum();
    let var = if n > 1 { ss / (n - 1) as f64 } else { 0.0 };
    Estimate {
        mean,
        ci95: Z95 * (var / n as f64).sqrt(),
    }
}

/// Mean active count per km², with the BS and UE counts (whose means are
/// known) as control variates.
fn active_density_estimate(cfg: &SimConfig, used: &[&TrialSample]) -> Estimate {
    let area = cfg.area();
    let n = used.len();
    let y: Vec<f64> = used.iter().map(|s| s.active_count as f64 / area).collect();
    let mut controls: Vec<Vec<f64>> = vec![used.iter().map(|s| s.bs_count as f64 / area - cfg.lambda).collect()];
    if let UeDensity::Finite(rho) = cfg.rho {
        controls.push(used.iter().map(|s| s.ue_count as f64 / area - rho).collect());
    }
    let plain = mean_estimate(y.iter().copied());
    if n < 3 {
        return plain;
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n as f64;
    let cov = |a: &[f64], b: &[f64]| {
        let (ma, mb) = (mean(a), mean(b));
        a.iter().zip(b).map(|(x, z)| (x - ma) * (z - mb)).sum::<f64>() / (n - 1) as f64
    };
    // Drop controls without spread, then solve the normal equations.
    controls.retain(|c| cov(c, c) > 0.0);
    let beta: Vec<f64> = match controls.len() {
        0 => return plain,
        1 => vec![cov(&controls[0], &y) / cov(&controls[0], &controls[0])],
        _ => {
            let (a, b, d) = (
                cov(&controls[0], &controls[0]),
                cov(&controls[0], &controls[1]),
                cov(&controls[1], &controls[1]),
            );
            let det = a * d - b * b;
            if det <= 1e-12 * a * d {
                controls.truncate(1);
                vec![cov(&controls[0], &y) / a]
            } else {
                let (c0, c1) = (cov(&controls[0], &y), cov(&controls[1], &y));
                vec![(d * c0 - b * c1) / det, (a * c1 - b * c0) / det]
            }
        }
    };
    let adjusted: Vec<f64> = (0..n)
        .map(|i| y[i] - beta.iter().zip(&controls).map(|(b, c)| b * c[i]).sum::<f64>())
        .collect();
    let e = mean_estimate(adjusted.iter().copied());
    Estimate {
        mean: e.mean,
        ci95: e.ci95.min(plain.ci95).max(idle_count_floor(cfg, used)),
    }
}

/// Half-width implied by the number of idle BSs seen, so that a run with
/// few or no idle events does not report a vanishing interval. Zero idle
/// events use the rule of three.
fn idle_count_floor(cfg: &SimConfig, used: &[&TrialSample]) -> f64 {
    if cfg.all_active || cfg.rho.is_infinite() {
        return 0.0;
    }
    let idle: u64 = used.iter().map(|s| u64::from(s.bs_count - s.active_count)).sum();
    (Z95 * (idle as f64).sqrt()).max(3.0) / (used.len() as f64 * cfg.area())
}

/// Aggregated simulation output.
#[derive(Debug, Clone, PartialEq)]
pub struct SimStats {
    pub gamma_grid: Vec<f64>,
    /// `P(SINR > γ)` for each threshold.
    pub coverage: Vec<Estimate>,
    /// Active BSs per km².
    pub active_density: Estimate,
    /// bps/Hz/km².
    pub ase: Estimate,
    pub trials_used: usize,
    /// Trials with no BS in the region.
    pub trials_discarded: usize,
}

impl SimStats {
    pub fn from_samples(cfg: &SimConfig, samples: &[Option<TrialSample>]) -> Result<Self> {
        let used: Vec<&TrialSample> = samples.iter().flatten().collect();
        if used.is_empty() {
            return Err(Error::Computation("every trial had an empty region".into()));
        }
        let coverage = cfg
            .gamma_grid
            .iter()
            .map(|&g| {
                let p = used.iter().filter(|s| s.sinr > g).count() as f64 / used.len() as f64;
                Estimate {
                    mean: p,
                    ci95: Z95 * (p * (1.0 - p) / used.len() as f64).sqrt(),
                }
            })
            .collect();
        let active = active_density_estimate(cfg, &used);
        let rate_cap = (1.0 + GAMMA_CAP).log2();
        let rate = mean_estimate(used.iter().map(|s| {
            if s.sinr > cfg.gamma0 {
                (1.0 + s.sinr).log2().min(rate_cap)
            } else {
                0.0
            }
        }));
        let ase = Estimate {
            mean: active.mean * rate.mean,
            ci95: ((active.mean * rate.ci95).powi(2) + (rate.mean * active.ci95).powi(2)).sqrt(),
        };
        Ok(SimStats {
            gamma_grid: cfg.gamma_grid.clone(),
            coverage,
            active_density: active,
            ase,
            trials_used: used.len(),
            trials_discarded: samples.len() - used.len(),
        })
    }
}

/// Runs all trials and aggregates them.
pub fn run(cfg: &SimConfig) -> Result<SimStats> {
    let samples = run_samples(cfg)?;
    SimStats::from_samples(cfg, &samples)
}

#[cfg(test)]
mod tests;
