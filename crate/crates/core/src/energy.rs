//! Node power models and energy efficiency.
//!
//! Transmit power shrinks with density so that a UE at the edge of an
//! average cell keeps a target SNR. Node power is a fixed overhead plus the
//! radiated power over the amplifier efficiency; idle stations draw a
//! configurable share of it.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coverage::{CoverageEvaluator, NetworkParams, UeDensity};
use crate::error::{require, Error, Result};
use crate::pathloss::{LinkType, PathLossModel};
use crate::units::{db_to_linear, mw_to_w};

/// Shipped power profile, calibrated by [`calibrate`].
pub const DEFAULT_PROFILE_TOML: &str = include_str!("../data/power_profile.toml");

/// Idle-power ratio of the two futuristic modes to slow idle.
pub const FUTURISTIC15_RATIO: f64 = 0.15;
pub const FUTURISTIC1_RATIO: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImcMode {
    AllActive,
    SlowIdle,
    ShutDown,
    Futuristic15,
    Futuristic1,
}

impl ImcMode {
    pub const ALL: [ImcMode; 5] = [
        ImcMode::AllActive,
        ImcMode::SlowIdle,
        ImcMode::ShutDown,
        ImcMode::Futuristic15,
        ImcMode::Futuristic1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ImcMode::AllActive => "all_active",
            ImcMode::SlowIdle => "slow_idle",
            ImcMode::ShutDown => "shut_down",
            ImcMode::Futuristic15 => "futuristic15",
            ImcMode::Futuristic1 => "futuristic1",
        }
    }
}

impl fmt::Display for ImcMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ImcMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ImcMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown idle mode {s:?}")))
    }
}

/// Radiated power (mW) giving SNR `eta0` (linear) at the NLoS edge of a disc
/// of area `1/λ`.
pub fn tx_power(lambda: f64, eta0: f64, noise_power: f64, model: &PathLossModel) -> Result<f64> {
    require(lambda > 0.0 && lambda.is_finite(), || format!("BS density must be positive, got {lambda}"))?;
    require(eta0 > 0.0, || format!("SNR target must be positive, got {eta0}"))?;
    require(noise_power > 0.0, || format!("noise power must be positive, got {noise_power}"))?;
    let r0 = (1.0 / (lambda * PI)).sqrt();
    Ok(eta0 * noise_power / model.gain(r0, LinkType::Nlos))
}

/// Piecewise log-linear curve through `(λ, W)` points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerTable {
    pub points: Vec<[f64; 2]>,
}

impl PowerTable {
    fn validate(&self, what: &str) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("{what}: {m}")));
        if self.points.is_empty() {
            return bad("table is empty".into());
        }
        for w in self.points.windows(2) {
            if w[1][0] <= w[0][0] {
                return bad("densities must be strictly increasing".into());
            }
        }
        if self.points.iter().any(|p| !(p[0] > 0.0 && p[1] > 0.0)) {
            return bad("densities and powers must be positive".into());
        }
        Ok(())
    }

    /// Watts at `lambda`, clamped to the end points outside the table.
    pub fn watts(&self, lambda: f64) -> f64 {
        let pts = &self.points;
        if lambda <= pts[0][0] {
            return pts[0][1];
        }
        if lambda >= pts[pts.len() - 1][0] {
            return pts[pts.len() - 1][1];
        }
        let i = pts.partition_point(|p| p[0] <= lambda);
        let (a, b) = (pts[i - 1], pts[i]);
        let t = (lambda.ln() - a[0].ln()) / (b[0].ln() - a[0].ln());
        (a[1].ln() + t * (b[1].ln() - a[1].ln())).exp()
    }
}

/// Power drawn by a serving BS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum ActivePower {
    /// `P0 + P(λ)/μ`.
    Linear {
        fixed_overhead_w: f64,
        amplifier_efficiency: f64,
    },
    Table(PowerTable),
}

/// Power drawn by an idle BS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum IdlePower {
    /// A fixed share of the active power at the same density.
    Fraction { of_active: f64 },
    Table(PowerTable),
}

/// Active and idle node power for every idle mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerProfile {
    /// SNR target at the cell edge that sets the transmit power, dB.
    pub eta0_db: f64,
    pub active: ActivePower,
    pub slow_idle: IdlePower,
    pub shut_down: IdlePower,
}

impl PowerProfile {
    pub fn from_toml(text: &str) -> Result<Self> {
        let p: PowerProfile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("profile serializes")
    }

    /// The calibrated profile shipped with the crate.
    pub fn shipped() -> Self {
        Self::from_toml(DEFAULT_PROFILE_TOML).expect("shipped profile is valid")
    }

    pub fn eta0(&self) -> f64 {
        db_to_linear(self.eta0_db)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if !self.eta0_db.is_finite() {
            return cfg("eta0_db must be finite".into());
        }
        match &self.active {
            ActivePower::Linear {
                fixed_overhead_w,
                amplifier_efficiency,
            } => {
                if fixed_overhead_w.is_nan() || *fixed_overhead_w <= 0.0 {
                    return cfg(format!("fixed overhead must be positive, got {fixed_overhead_w}"));
                }
                if !(*amplifier_efficiency > 0.0 && *amplifier_efficiency <= 1.0) {
                    return cfg(format!("amplifier efficiency must lie in (0, 1], got {amplifier_efficiency}"));
                }
            }
            ActivePower::Table(t) => t.validate("active power")?,
        }
        for (name, idle) in [("slow_idle", &self.slow_idle), ("shut_down", &self.shut_down)] {
            match idle {
                IdlePower::Fraction { of_active } => {
                    if !(*of_active > 0.0 && *of_active < 1.0) {
                        return cfg(format!("{name} fraction must lie in (0, 1), got {of_active}"));
                    }
                }
                IdlePower::Table(t) => t.validate(name)?,
            }
        }
        // Tabulated curves are checked against each other on a density grid.
        for k in 0..=40 {
            let lambda = 10f64.powf(k as f64 / 10.0 - 1.0);
            let tx = 1.0;
            let active = self.active_mw(lambda, tx);
            let slow = self.idle_mw(ImcMode::SlowIdle, lambda, tx);
            let shut = self.idle_mw(ImcMode::ShutDown, lambda, tx);
            if !(active > slow && active > shut) {
                return cfg(format!("idle power reaches active power at λ = {lambda}"));
            }
            if shut.is_nan() || shut >= slow {
                return cfg(format!("shut-down power must stay below slow-idle power (λ = {lambda})"));
            }
        }
        Ok(())
    }

    /// Active node power in mW given the radiated power `tx_power` (mW).
    pub fn active_mw(&self, lambda: f64, tx_power: f64) -> f64 {
        match &self.active {
            ActivePower::Linear {
                fixed_overhead_w,
                amplifier_efficiency,
            } => fixed_overhead_w * 1e3 + tx_power / amplifier_efficiency,
            ActivePower::Table(t) => t.watts(lambda) * 1e3,
        }
    }

    fn base_idle_mw(&self, idle: &IdlePower, lambda: f64, tx_power: f64) -> f64 {
        match idle {
            IdlePower::Fraction { of_active } => of_active * self.active_mw(lambda, tx_power),
            IdlePower::Table(t) => t.watts(lambda) * 1e3,
        }
    }

    /// Idle node power in mW. Zero for [`ImcMode::AllActive`], which never idles.
    pub fn idle_mw(&self, mode: ImcMode, lambda: f64, tx_power: f64) -> f64 {
        match mode {
            ImcMode::AllActive => 0.0,
            ImcMode::SlowIdle => self.base_idle_mw(&self.slow_idle, lambda, tx_power),
            ImcMode::ShutDown => self.base_idle_mw(&self.shut_down, lambda, tx_power),
            ImcMode::Futuristic15 => FUTURISTIC15_RATIO * self.base_idle_mw(&self.slow_idle, lambda, tx_power),
            ImcMode::Futuristic1 => FUTURISTIC1_RATIO * self.base_idle_mw(&self.slow_idle, lambda, tx_power),
        }
    }
}

/// `(P_active, P_idle)` in mW for a mode at density `lambda`.
pub fn node_power(profile: &PowerProfile, mode: ImcMode, lambda: f64, tx_power: f64) -> Result<(f64, f64)> {
    require(lambda > 0.0, || format!("BS density must be positive, got {lambda}"))?;
    Ok((profile.active_mw(lambda, tx_power), profile.idle_mw(mode, lambda, tx_power)))
}

/// Energy efficiency with its ingredients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyEfficiency {
    pub mode: ImcMode,
    pub lambda_tilde: f64,
    pub ase: f64,
    pub active_w: f64,
    pub idle_w: f64,
    /// bits/J
    pub ee: f64,
}

/// `ASE·BW / (λ̃ P_active + (λ - λ̃) P_idle)`.
///
/// `ase` is in bps/Hz/km² and must have been computed with the same `λ̃`.
pub fn efficiency_from_ase(
    profile: &PowerProfile,
    mode: ImcMode,
    params: &NetworkParams,
    lambda_tilde: f64,
    ase: f64,
) -> Result<EnergyEfficiency> {
    let (active, idle) = node_power(profile, mode, params.lambda, params.tx_power)?;
    let lambda_tilde = if mode == ImcMode::AllActive { params.lambda } else { lambda_tilde };
    let area_power = lambda_tilde * mw_to_w(active) + (params.lambda - lambda_tilde) * mw_to_w(idle);
    let ee = if ase == 0.0 { 0.0 } else { ase * params.bandwidth / area_power };
    Ok(EnergyEfficiency {
        mode,
        lambda_tilde,
        ase,
        active_w: mw_to_w(active),
        idle_w: mw_to_w(idle),
        ee,
    })
}

/// Energy efficiency in bits/J. [`ImcMode::AllActive`] ignores
/// `lambda_tilde` and uses `λ` throughout.
pub fn energy_efficiency(
    model: &PathLossModel,
    params: &NetworkParams,
    lambda_tilde: f64,
    gamma0: f64,
    profile: &PowerProfile,
    mode: ImcMode,
) -> Result<EnergyEfficiency> {
    let lt = if mode == ImcMode::AllActive { params.lambda } else { lambda_tilde };
    let ase = CoverageEvaluator::new(model, params, lt)?.ase(gamma0)?;
    efficiency_from_ase(profile, mode, params, lt, ase)
}

/// Target efficiencies (bits/J) for every mode at one operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EeAnchors {
    pub all_active: f64,
    pub slow_idle: f64,
    pub shut_down: f64,
    pub futuristic15: f64,
    pub futuristic1: f64,
}

impl EeAnchors {
    /// Mbits/J values reported for λ = 10³, ρ = 300, γ0 = 0 dB.
    pub const REFERENCE: EeAnchors = EeAnchors {
        all_active: 9.95e6,
        slow_idle: 17.2e6,
        shut_down: 20.2e6,
        futuristic15: 29.6e6,
        futuristic1: 33.6e6,
    };

    pub fn get(&self, mode: ImcMode) -> f64 {
        match mode {
            ImcMode::AllActive => self.all_active,
            ImcMode::SlowIdle => self.slow_idle,
            ImcMode::ShutDown => self.shut_down,
            ImcMode::Futuristic15 => self.futuristic15,
            ImcMode::Futuristic1 => self.futuristic1,
        }
    }
}

/// Operating point used by [`calibrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationPoint {
    pub lambda: f64,
    pub lambda_tilde: f64,
    /// ASE with every BS active, bps/Hz/km².
    pub ase_all_active: f64,
    /// ASE with idle BSs muted.
    pub ase_idle: f64,
    pub tx_power: f64,
    pub bandwidth: f64,
}

/// Fits a linear active-power model and idle fractions so that the five
/// modes hit `anchors` at `point`, by least squares on `ln EE`.
///
/// The amplifier efficiency and SNR target are fixed inputs; the fit sets
/// the overhead `P0`, the slow-idle share (which also fixes both futuristic
/// modes) and the shut-down share. Returns the profile and the relative
/// error of each mode in [`ImcMode::ALL`] order.
pub fn calibrate(
    anchors: &EeAnchors,
    point: &CalibrationPoint,
    eta0_db: f64,
    amplifier_efficiency: f64,
) -> Result<(PowerProfile, [f64; 5])> {
    let CalibrationPoint {
        lambda,
        lambda_tilde: lt,
        ase_all_active,
        ase_idle,
        tx_power,
        bandwidth,
    } = *point;
    require(lt > 0.0 && lt < lambda, || "calibration needs 0 < λ̃ < λ".into())?;
    require(ase_all_active > 0.0 && ase_idle > 0.0, || "calibration needs positive ASE values".into())?;
    let ee = |active_w: f64, idle_w: f64, ase: f64, active_n: f64| {
        ase * bandwidth / (active_n * active_w + (lambda - active_n) * idle_w)
    };
    // For a given active power, the slow-idle share minimising the three
    // slow-idle-linked residuals.
    let residual = |active_w: f64, share: f64| {
        let mut s = (ee(active_w, 0.0, ase_all_active, lambda) / anchors.all_active).ln().powi(2);
        for (ratio, target) in [
            (1.0, anchors.slow_idle),
            (FUTURISTIC15_RATIO, anchors.futuristic15),
            (FUTURISTIC1_RATIO, anchors.futuristic1),
        ] {
            s += (ee(active_w, ratio * share * active_w, ase_idle, lt) / target).ln().powi(2);
        }
        s
    };
    let best_share = |active_w: f64| golden_min(|ln_s| residual(active_w, ln_s.exp()), (1e-4f64).ln(), (0.99f64).ln(), 1e-10).exp();
    let guess = ase_all_active * bandwidth / (lambda * anchors.all_active);
    let active_w = golden_min(
        |ln_a| residual(ln_a.exp(), best_share(ln_a.exp())),
        (guess / 20.0).ln(),
        (guess * 20.0).ln(),
        1e-10,
    )
    .exp();
    let share = best_share(active_w);
    // Shut-down share solves its own anchor exactly.
    let shut_idle_w = (ase_idle * bandwidth / anchors.shut_down - lt * active_w) / (lambda - lt);
    let shut_share = shut_idle_w / active_w;
    let radiated_w = mw_to_w(tx_power) / amplifier_efficiency;
    require(active_w > radiated_w, || {
        format!("fitted active power {active_w} W is below the radiated share {radiated_w} W")
    })?;
    let profile = PowerProfile {
        eta0_db,
        active: ActivePower::Linear {
            fixed_overhead_w: active_w - radiated_w,
            amplifier_efficiency,
        },
        slow_idle: IdlePower::Fraction { of_active: share },
        shut_down: IdlePower::Fraction { of_active: shut_share },
    };
    profile.validate()?;
    let mut errors = [0.0; 5];
    for (k, mode) in ImcMode::ALL.into_iter().enumerate() {
        let idle = profile.idle_mw(mode, lambda, tx_power) * 1e-3;
        let v = match mode {
            ImcMode::AllActive => ee(active_w, 0.0, ase_all_active, lambda),
            _ => ee(active_w, idle, ase_idle, lt),
        };
        errors[k] = v / anchors.get(mode) - 1.0;
    }
    Ok((profile, errors))
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Computes the operating point for [`calibrate`]: ASE with and without
/// idle muting at the density-dependent transmit power.
#[allow(clippy::too_many_arguments)]
pub fn calibration_point(
    model: &PathLossModel,
    lambda: f64,
    rho: f64,
    q_star: f64,
    gamma0: f64,
    eta0: f64,
    noise_power: f64,
    bandwidth: f64,
) -> Result<CalibrationPoint> {
    let tx = tx_power(lambda, eta0, noise_power, model)?;
    let params = NetworkParams {
        lambda,
        rho: UeDensity::Finite(rho),
        tx_power: tx,
        noise_power,
        bandwidth,
    };
    let lt = crate::active_density::approx(lambda, rho, q_star)?;
    Ok(CalibrationPoint {
        lambda,
        lambda_tilde: lt,
        ase_all_active: CoverageEvaluator::new(model, &params, lambda)?.ase(gamma0)?,
        ase_idle: CoverageEvaluator::new(model, &params, lt)?.ase(gamma0)?,
        tx_power: tx,
        bandwidth,
    })
}
