//! Scenario files.
//!
//! A scenario is a TOML document. Values are written in the units people
//! quote (dB, dBm, MHz) and converted once in [`ScenarioConfig::resolve`].

use std::path::{Path, PathBuf};

use scnsim_core::active_density::{default_q_star, log_grid};
use scnsim_core::pathloss::{build_case1, build_case2, build_single_slope};
use scnsim_core::simulator::{default_region_side, Fading, Shadowing};
use scnsim_core::units::{db_to_linear, dbm_to_mw};
use scnsim_core::{ImcMode, PathLossModel, PowerProfile, UeDensity};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Path loss model selector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Case1 {
        /// Replaces the LoS exponent in every segment.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha_los: Option<f64>,
    },
    Case2 {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha_los: Option<f64>,
    },
    SingleSlope {
        alpha: f64,
        /// Path gain at 1 km, dB.
        gain_db: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QStarKeyword {
    /// Shipped value for ρ = 100, 300 or 600.
    Auto,
    /// Fit against a simulation over the scenario grid.
    Fit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum QStarSpec {
    Value(f64),
    Keyword(QStarKeyword),
}

impl Default for QStarSpec {
    fn default() -> Self {
        QStarSpec::Keyword(QStarKeyword::Auto)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerSpec {
    /// Fixed transmit power, dBm.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx_dbm: Option<f64>,
    /// Cell-edge SNR target that sets a density-dependent transmit power, dB.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta0_db: Option<f64>,
    #[serde(default = "default_noise_dbm")]
    pub noise_dbm: f64,
    #[serde(default = "default_bandwidth_mhz")]
    pub bandwidth_mhz: f64,
}

fn default_noise_dbm() -> f64 {
    -95.0
}

fn default_bandwidth_mhz() -> f64 {
    10.0
}

impl Default for PowerSpec {
    fn default() -> Self {
        PowerSpec {
            tx_dbm: None,
            eta0_db: None,
            noise_dbm: default_noise_dbm(),
            bandwidth_mhz: default_bandwidth_mhz(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Fixed torus side, km.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region_side_km: Option<f64>,
    /// Size the torus to hold this many BSs on average instead.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region_mean_bs: Option<f64>,
    /// Lower limit on the side when `region_mean_bs` is used, km.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region_min_side_km: Option<f64>,
    #[serde(default = "default_fading")]
    pub fading: Fading,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shadowing: Option<Shadowing>,
    /// Extra coverage thresholds for `simulate`, dB.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gamma_grid_db: Vec<f64>,
}

fn default_trials() -> usize {
    10_000
}

fn default_seed() -> u64 {
    1
}

fn default_fading() -> Fading {
    Fading::Rayleigh
}

impl Default for SimSpec {
    fn default() -> Self {
        SimSpec {
            enabled: false,
            trials: default_trials(),
            seed: default_seed(),
            region_side_km: None,
            region_mean_bs: None,
            region_min_side_km: None,
            fading: default_fading(),
            shadowing: None,
            gamma_grid_db: Vec::new(),
        }
    }
}

/// Scenario file as written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// UEs per km², or "inf".
    pub rho: UeDensity,
    /// Coverage threshold, dB.
    #[serde(default)]
    pub gamma_db: f64,
    /// ASE threshold, dB. Defaults to `gamma_db`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma0_db: Option<f64>,
    #[serde(default)]
    pub q_star: QStarSpec,
    /// Idle modes for `ee-sweep`.
    #[serde(default = "all_modes")]
    pub imc: Vec<ImcMode>,
    /// Power profile file; the shipped profile when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_profile: Option<PathBuf>,
    pub model: ModelSpec,
    pub lambda_grid: GridSpec,
    #[serde(default)]
    pub power: PowerSpec,
    #[serde(default)]
    pub sim: SimSpec,
}

fn all_modes() -> Vec<ImcMode> {
    ImcMode::ALL.to_vec()
}

/// How the transmit power is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TxPower {
    /// mW.
    Fixed(f64),
    /// Linear SNR target at the cell edge.
    EdgeSnr(f64),
}

/// Scenario with linear units and a built model.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub model: PathLossModel,
    pub lambdas: Vec<f64>,
    pub rho: UeDensity,
    pub gamma: f64,
    pub gamma0: f64,
    pub tx: TxPower,
    /// mW.
    pub noise_power: f64,
    /// Hz.
    pub bandwidth: f64,
    pub profile: PowerProfile,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| config_err(format!("invalid scenario: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Usage(m) => CliError::Usage(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    fn build_model(&self) -> Result<PathLossModel, CliError> {
        let with_los_exponent = |base: PathLossModel, alpha: Option<f64>| match alpha {
            None => Ok(base),
            Some(a) => {
                let segments = base
                    .segments()
                    .iter()
                    .map(|s| scnsim_core::PathSegment { alpha_los: a, ..*s })
                    .collect();
                PathLossModel::new(segments, *base.los_probability())
            }
        };
        let model = match self.model {
            ModelSpec::Case1 { alpha_los } => with_los_exponent(build_case1(), alpha_los),
            ModelSpec::Case2 { alpha_los } => with_los_exponent(build_case2(), alpha_los),
            ModelSpec::SingleSlope { alpha, gain_db } => build_single_slope(alpha, db_to_linear(gain_db)),
        };
        model.map_err(|e| config_err(e.to_string()))
    }

    /// Checks ranges and converts to linear units.
    pub fn resolve(&self) -> Result<Scenario, CliError> {
        let model = self.build_model()?;
        let g = &self.lambda_grid;
        if g.points == 0 {
            return Err(config_err("lambda_grid.points must be at least 1"));
        }
        let lambdas = log_grid(g.start, g.stop, g.points).map_err(|e| config_err(e.to_string()))?;
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(v)
            } else {
                Err(config_err(format!("{name} must be finite")))
            }
        };
        let gamma = db_to_linear(finite("gamma_db", self.gamma_db)?);
        let gamma0 = db_to_linear(finite("gamma0_db", self.gamma0_db.unwrap_or(self.gamma_db))?);
        let p = &self.power;
        let tx = match (p.tx_dbm, p.eta0_db) {
            (Some(_), Some(_)) => return Err(config_err("power: give either tx_dbm or eta0_db, not both")),
            (Some(dbm), None) => TxPower::Fixed(dbm_to_mw(finite("power.tx_dbm", dbm)?)),
            (None, Some(db)) => TxPower::EdgeSnr(db_to_linear(finite("power.eta0_db", db)?)),
            (None, None) => TxPower::Fixed(dbm_to_mw(24.0)),
        };
        if !(p.bandwidth_mhz > 0.0 && p.bandwidth_mhz.is_finite()) {
            return Err(config_err("power.bandwidth_mhz must be positive"));
        }
        let noise_power = dbm_to_mw(finite("power.noise_dbm", p.noise_dbm)?);
        if let QStarSpec::Value(q) = self.q_star {
            if !(q > 0.0 && q.is_finite()) {
                return Err(config_err(format!("q_star must be positive, got {q}")));
            }
        }
        if self.imc.is_empty() {
            return Err(config_err("imc needs at least one mode"));
        }
        let s = &self.sim;
        if s.trials == 0 {
            return Err(config_err("sim.trials must be at least 1"));
        }
        if s.region_side_km.is_some() && s.region_mean_bs.is_some() {
            return Err(config_err("sim: give either region_side_km or region_mean_bs, not both"));
        }
        for (name, v) in [
            ("sim.region_side_km", s.region_side_km),
            ("sim.region_mean_bs", s.region_mean_bs),
        ] {
            if v.is_some_and(|v| !(v > 0.0 && v.is_finite())) {
                return Err(config_err(format!("{name} must be positive")));
            }
        }
        if let Some(sh) = s.shadowing {
            if !(sh.sigma_db >= 0.0 && (0.0..=1.0).contains(&sh.correlation)) {
                return Err(config_err("sim.shadowing needs sigma_db ≥ 0 and correlation in [0, 1]"));
            }
        }
        let profile = match &self.power_profile {
            None => PowerProfile::shipped(),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                PowerProfile::from_toml(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?
            }
        };
        Ok(Scenario {
            config: self.clone(),
            model,
            lambdas,
            rho: self.rho,
            gamma,
            gamma0,
            tx,
            noise_power,
            bandwidth: p.bandwidth_mhz * 1e6,
            profile,
        })
    }
}

impl Scenario {
    /// Finite UE density or a usage error naming `what`.
    pub fn finite_rho(&self, what: &str) -> Result<f64, CliError> {
        self.rho
            .finite()
            .ok_or_else(|| config_err(format!("{what} needs a finite rho")))
    }

    /// Exponent for `auto` or a fixed value at finite `rho`; `None` when it
    /// must be fitted.
    pub fn fixed_q_star(&self, rho: f64) -> Result<Option<f64>, CliError> {
        match self.config.q_star {
            QStarSpec::Value(q) => Ok(Some(q)),
            QStarSpec::Keyword(QStarKeyword::Fit) => Ok(None),
            QStarSpec::Keyword(QStarKeyword::Auto) => default_q_star(rho).map(Some).ok_or_else(|| {
                config_err(format!("no shipped q_star for rho = {rho}; set q_star to a number or \"fit\""))
            }),
        }
    }

    /// Transmit power (mW) at density `lambda`.
    pub fn tx_power(&self, lambda: f64) -> scnsim_core::Result<f64> {
        match self.tx {
            TxPower::Fixed(p) => Ok(p),
            TxPower::EdgeSnr(eta) => scnsim_core::energy::tx_power(lambda, eta, self.noise_power, &self.model),
        }
    }

    /// Torus side for a run at `lambda`, km.
    pub fn region_side(&self, lambda: f64) -> scnsim_core::Result<f64> {
        let s = &self.config.sim;
        if let Some(side) = s.region_side_km {
            return Ok(side);
        }
        if let Some(n) = s.region_mean_bs {
            return Ok((n / lambda).sqrt().max(s.region_min_side_km.unwrap_or(0.0)));
        }
        default_region_side(&self.model, lambda)
    }

    /// Thresholds for `simulate`, dB: `gamma_db` and `sim.gamma_grid_db`,
    /// ascending without repeats.
    pub fn sim_gamma_grid_db(&self) -> Vec<f64> {
        let mut g = vec![self.config.gamma_db];
        g.extend(&self.config.sim.gamma_grid_db);
        g.sort_by(f64::total_cmp);
        g.dedup();
        g
    }
}
