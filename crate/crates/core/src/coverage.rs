//! Coverage probability, SINR distribution and area spectral efficiency.
//!
//! Serving distances follow the full BS density `λ` while interference comes
//! only from the active density `λ̃`. Every entry point therefore takes `λ̃`
//! explicitly, either from [`crate::active_density`] or from the caller.

use std::f64::consts::{LN_2, PI};
use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::association::AssociationDensity;
use crate::error::{require, Error, Result};
use crate::pathloss::{LinkType, PathLossModel};
use crate::quadrature::{self, Tolerance};

/// Upper SINR limit of the ASE integral. Rates above `log2(1 + 10^6)` are
/// counted at that value.
pub const GAMMA_CAP: f64 = 1e6;

/// UE density, possibly infinite (every BS active).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UeDensity {
    Finite(f64),
    Infinite,
}

impl UeDensity {
    pub fn finite(self) -> Option<f64> {
        match self {
            UeDensity::Finite(x) => Some(x),
            UeDensity::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, UeDensity::Infinite)
    }
}

impl fmt::Display for UeDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UeDensity::Finite(x) => write!(f, "{x}"),
            UeDensity::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for UeDensity {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            UeDensity::Finite(x) => s.serialize_f64(*x),
            UeDensity::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for UeDensity {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = UeDensity;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a non-negative number or \"inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<UeDensity, E> {
                if v.is_infinite() && v > 0.0 {
                    Ok(UeDensity::Infinite)
                } else if v >= 0.0 {
                    Ok(UeDensity::Finite(v))
                } else {
                    Err(E::custom(format!("UE density must be non-negative, got {v}")))
                }
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<UeDensity, E> {
                self.visit_f64(v as f64)
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<UeDensity, E> {
                self.visit_f64(v as f64)
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<UeDensity, E> {
                match v.trim().to_ascii_lowercase().as_str() {
                    "inf" | "infinite" | "infinity" => Ok(UeDensity::Infinite),
                    other => other
                        .parse::<f64>()
                        .map_err(|_| E::custom(format!("expected a number or \"inf\", got {v:?}")))
                        .and_then(|x| self.visit_f64(x)),
                }
            }
        }
        d.deserialize_any(V)
    }
}

/// Deployment and radio parameters. Powers in mW, bandwidth in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub lambda: f64,
    pub rho: UeDensity,
    pub tx_power: f64,
    pub noise_power: f64,
    pub bandwidth: f64,
}

impl NetworkParams {
    pub fn validate(&self) -> Result<()> {
        require(self.lambda > 0.0 && self.lambda.is_finite(), || {
            format!("BS density must be positive, got {}", self.lambda)
        })?;
        if let UeDensity::Finite(rho) = self.rho {
            require(rho >= 0.0 && rho.is_finite(), || format!("UE density must be non-negative, got {rho}"))?;
        }
        require(self.tx_power > 0.0, || format!("transmit power must be positive, got {}", self.tx_power))?;
        require(self.noise_power >= 0.0, || format!("noise power must be non-negative, got {}", self.noise_power))?;
        require(self.bandwidth > 0.0, || format!("bandwidth must be positive, got {}", self.bandwidth))
    }
}

/// SINR threshold (linear) and the active density used for interference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageQuery {
    pub gamma: f64,
    pub active_density: f64,
}

/// Tolerances for the nested integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Precision {
    /// Interference exponent integrals.
    pub inner: Tolerance,
    /// Integral over the serving distance.
    pub outer: Tolerance,
    /// Integral over the SINR threshold in the ASE.
    pub ase: Tolerance,
}

impl Default for Precision {
    fn default() -> Self {
        Self {
            inner: Tolerance::new(1e-8, 1e-8),
            outer: Tolerance::new(1e-6, 1e-7),
            ase: Tolerance::new(1e-7, 1e-6),
        }
    }
}

impl Precision {
    /// Much tighter settings, for oracles that difference coverage values.
    pub fn precise() -> Self {
        Self {
            inner: Tolerance::new(1e-13, 1e-12),
            outer: Tolerance::new(1e-12, 1e-11),
            ase: Tolerance::new(1e-10, 1e-9),
        }
    }
}

/// Interference field of active BSs at density `λ̃`.
#[derive(Debug, Clone)]
struct Interference<'a> {
    model: &'a PathLossModel,
    lambda_tilde: f64,
    tol: Tolerance,
}

impl Interference<'_> {
    /// `∫_lower^∞ w(u) u y/(1+y) du` with `y = x ζ_link(u)` and `w` the
    /// probability of the link type.
    fn link_integral(&self, link: LinkType, x: f64, lower: f64) -> Result<f64> {
        if x == 0.0 || self.lambda_tilde == 0.0 {
            return Ok(0.0);
        }
        let los = self.model.los_probability();
        let upper = match link {
            LinkType::Los => los.support().unwrap_or(f64::INFINITY),
            LinkType::Nlos => f64::INFINITY,
        };
        if lower >= upper {
            return Ok(0.0);
        }
        let model = self.model;
        let f = move |u: f64| {
            if u <= 0.0 {
                return 0.0;
            }
            let p = los.eval(u);
            let w = match link {
                LinkType::Los => p,
                LinkType::Nlos => 1.0 - p,
            };
            if w == 0.0 {
                return 0.0;
            }
            let y = x * model.gain(u, link);
            w * u * (y / (1.0 + y))
        };
        let seg = model.segments()[0];
        let (a, alpha) = match link {
            LinkType::Los => (seg.a_los, seg.alpha_los),
            LinkType::Nlos => (seg.a_nlos, seg.alpha_nlos),
        };
        let u_star = (x * a).powf(1.0 / alpha);
        let mut pts = vec![lower];
        pts.extend(model.breakpoints().into_iter().filter(|&b| b > lower && b < upper));
        if u_star > lower && u_star < upper {
            pts.push(u_star);
        }
        pts.sort_by(f64::total_cmp);
        // The exponent is 2πλ̃ times this value; budget the tolerance for it.
        let scale = 2.0 * PI * self.lambda_tilde;
        let tol = Tolerance {
            abs: self.tol.abs / scale,
            ..self.tol
        };
        let ctx = || format!("{link:?} interference integral from {lower} km");
        if upper.is_finite() {
            pts.push(upper);
            return quadrature::integrate_points(f, &pts, tol)
                .map(|i| i.value)
                .map_err(|e| Error::quad(ctx(), e));
        }
        let last = *pts.last().unwrap();
        let head = quadrature::integrate_points(f, &pts, tol).map_err(|e| Error::quad(ctx(), e))?;
        let tail = quadrature::integrate_to_infinity(f, last, last.max(u_star).max(1e-9), tol)
            .map_err(|e| Error::quad(ctx(), e))?;
        Ok(head.value + tail.value)
    }

    /// `-ln L(s)` with interferers of each type no closer than the bounds.
    fn exponent(&self, x: f64, los_from: f64, nlos_from: f64) -> Result<f64> {
        let e = self.link_integral(LinkType::Los, x, los_from)? + self.link_integral(LinkType::Nlos, x, nlos_from)?;
        Ok(2.0 * PI * self.lambda_tilde * e)
    }
}

fn check_laplace_args(lambda_tilde: f64, s: f64, tx_power: f64, r: f64) -> Result<()> {
    require(lambda_tilde >= 0.0 && lambda_tilde.is_finite(), || {
        format!("active density must be non-negative, got {lambda_tilde}")
    })?;
    require(s >= 0.0 && s.is_finite(), || format!("Laplace argument must be non-negative, got {s}"))?;
    require(tx_power > 0.0, || format!("transmit power must be positive, got {tx_power}"))?;
    require(r > 0.0, || format!("distance must be positive, got {r}"))
}

/// Interference Laplace transform seen by a UE served over LoS at `r`.
///
/// LoS interferers lie beyond `r` and NLoS interferers beyond `r1(r)`.
/// `s` is in 1/mW.
pub fn laplace_los(model: &PathLossModel, lambda_tilde: f64, s: f64, tx_power: f64, r: f64) -> Result<f64> {
    laplace_los_with(model, lambda_tilde, s, tx_power, r, Precision::default().inner)
}

pub fn laplace_los_with(
    model: &PathLossModel,
    lambda_tilde: f64,
    s: f64,
    tx_power: f64,
    r: f64,
    tol: Tolerance,
) -> Result<f64> {
    check_laplace_args(lambda_tilde, s, tx_power, r)?;
    let field = Interference {
        model,
        lambda_tilde,
        tol,
    };
    Ok((-field.exponent(s * tx_power, r, model.r1(r)?)?).exp())
}

/// Interference Laplace transform seen by a UE served over NLoS at `r`.
///
/// LoS interferers lie beyond `r2(r)` and NLoS interferers beyond `r`.
pub fn laplace_nlos(model: &PathLossModel, lambda_tilde: f64, s: f64, tx_power: f64, r: f64) -> Result<f64> {
    laplace_nlos_with(model, lambda_tilde, s, tx_power, r, Precision::default().inner)
}

pub fn laplace_nlos_with(
    model: &PathLossModel,
    lambda_tilde: f64,
    s: f64,
    tx_power: f64,
    r: f64,
    tol: Tolerance,
) -> Result<f64> {
    check_laplace_args(lambda_tilde, s, tx_power, r)?;
    let field = Interference {
        model,
        lambda_tilde,
        tol,
    };
    Ok((-field.exponent(s * tx_power, model.r2(r)?, r)?).exp())
}

/// Evaluates coverage and ASE for one deployment and active density.
#[derive(Debug, Clone)]
pub struct CoverageEvaluator {
    density: AssociationDensity,
    params: NetworkParams,
    lambda_tilde: f64,
    precision: Precision,
}

impl CoverageEvaluator {
    pub fn new(model: &PathLossModel, params: &NetworkParams, lambda_tilde: f64) -> Result<Self> {
        params.validate()?;
        require(lambda_tilde >= 0.0 && lambda_tilde <= params.lambda * (1.0 + 1e-12), || {
            format!("active density {lambda_tilde} must lie in [0, λ = {}]", params.lambda)
        })?;
        Ok(Self {
            density: AssociationDensity::new(model.clone(), params.lambda)?,
            params: *params,
            lambda_tilde: lambda_tilde.min(params.lambda),
            precision: Precision::default(),
        })
    }

    pub fn with_precision(mut self, precision: Precision) -> Self {
        self.precision = precision;
        self
    }

    pub fn lambda_tilde(&self) -> f64 {
        self.lambda_tilde
    }

    pub fn params(&self) -> &NetworkParams {
        &self.params
    }

    fn model(&self) -> &PathLossModel {
        self.density.model()
    }

    /// Contribution of serving links of one type at distance `r`.
    fn term(&self, gamma: f64, r: f64, link: LinkType) -> Result<f64> {
        let pdf = self.density.pdf_unchecked(r, link);
        if pdf == 0.0 {
            return Ok(0.0);
        }
        let model = self.model();
        let zeta = model.gain(r, link);
        let noise = (-gamma * self.params.noise_power / (self.params.tx_power * zeta)).exp();
        if noise == 0.0 {
            return Ok(0.0);
        }
        let field = Interference {
            model,
            lambda_tilde: self.lambda_tilde,
            tol: self.precision.inner,
        };
        // s P ζ(u) = γ ζ(u) / ζ(r)
        let x = gamma / zeta;
        let exponent = match link {
            LinkType::Los => field.exponent(x, r, model.r1(r)?)?,
            LinkType::Nlos => field.exponent(x, model.r2(r)?, r)?,
        };
        Ok(noise * (-exponent).exp() * pdf)
    }

    /// `Pr[SINR > gamma]`.
    pub fn coverage(&self, gamma: f64) -> Result<f64> {
        require(gamma > 0.0 && gamma.is_finite(), || format!("SINR threshold must be positive, got {gamma}"))?;
        let mut total = 0.0;
        for link in [LinkType::Los, LinkType::Nlos] {
            let upper = match (link, self.model().los_probability().support()) {
                (LinkType::Los, Some(d)) => d,
                _ => self.density.truncation_radius(),
            };
            if upper <= 0.0 {
                continue;
            }
            let pts = self.density.mesh(upper);
            let err = std::cell::Cell::new(None);
            let f = |r: f64| match self.term(gamma, r, link) {
                Ok(v) => v,
                Err(e) => {
                    err.set(Some(e));
                    f64::NAN
                }
            };
            let res = quadrature::integrate_points(f, &pts, self.precision.outer);
            if let Some(e) = err.take() {
                return Err(e);
            }
            total += res
                .map_err(|e| Error::quad(format!("{link:?} coverage term at γ = {gamma}"), e))?
                .value;
        }
        Ok(total.clamp(0.0, 1.0))
    }

    /// Coverage at each threshold of a strictly increasing grid.
    pub fn ccdf(&self, gamma_grid: &[f64]) -> Result<Vec<f64>> {
        require(!gamma_grid.is_empty(), || "SINR grid is empty".into())?;
        require(gamma_grid.windows(2).all(|w| w[1] > w[0]), || "SINR grid must be strictly increasing".into())?;
        let mut out = Vec::with_capacity(gamma_grid.len());
        let mut prev = 1.0f64;
        for &g in gamma_grid {
            // Quadrature noise must not break the CCDF ordering.
            let p = self.coverage(g)?.min(prev);
            out.push(p);
            prev = p;
        }
        Ok(out)
    }

    /// Area spectral efficiency in bps/Hz/km² above the threshold `gamma0`.
    pub fn ase(&self, gamma0: f64) -> Result<f64> {
        require(gamma0 > 0.0 && gamma0.is_finite(), || format!("SINR threshold must be positive, got {gamma0}"))?;
        if self.lambda_tilde == 0.0 {
            return Ok(0.0);
        }
        ase_by_parts(|g| self.coverage(g), gamma0, self.precision.ase).map(|v| self.lambda_tilde * v)
    }

    /// ASE from a finite-difference SINR density, for cross-checking [`Self::ase`].
    pub fn ase_finite_difference(&self, gamma0: f64, step: f64) -> Result<f64> {
        require(gamma0 > 0.0, || format!("SINR threshold must be positive, got {gamma0}"))?;
        if self.lambda_tilde == 0.0 {
            return Ok(0.0);
        }
        ase_finite_difference(|g| self.coverage(g), gamma0, step, self.precision.ase).map(|v| self.lambda_tilde * v)
    }
}

/// `log2(1+γ0) p(γ0) + (1/ln 2) ∫_{γ0}^{cap} p(γ)/(1+γ) dγ`, integrated in
/// `ln γ` one decade at a time.
pub fn ase_by_parts<F>(coverage: F, gamma0: f64, tol: Tolerance) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let head = (1.0 + gamma0).log2() * coverage(gamma0)?;
    let mut acc = 0.0;
    let mut lo = gamma0.ln();
    let top = GAMMA_CAP.ln();
    while lo < top {
        let hi = (lo + std::f64::consts::LN_10).min(top);
        let part = integrate_fallible(
            |t| {
                let g = t.exp();
                Ok(coverage(g)? * g / (1.0 + g))
            },
            lo,
            hi,
            tol,
        )?;
        acc += part;
        lo = hi;
        if part.abs() < 1e-9 * acc.abs() {
            break;
        }
    }
    Ok(head + acc / LN_2)
}

/// `∫_{γ0}^{cap} log2(1+γ) f(γ) dγ + log2(1+cap) p(cap)` with the SINR
/// density `f` from a five-point difference of `p` in `ln γ` with spacing `step`.
pub fn ase_finite_difference<F>(coverage: F, gamma0: f64, step: f64, tol: Tolerance) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let p = |t: f64| coverage(t.exp());
    let h = step;
    let dp_dt = |t: f64| -> Result<f64> {
        Ok((-p(t + 2.0 * h)? + 8.0 * p(t + h)? - 8.0 * p(t - h)? + p(t - 2.0 * h)?) / (12.0 * h))
    };
    let mut acc = 0.0;
    let mut lo = gamma0.ln();
    let top = GAMMA_CAP.ln();
    while lo < top {
        let hi = (lo + std::f64::consts::LN_10).min(top);
        acc += integrate_fallible(|t| Ok((1.0 + t.exp()).log2() * -dp_dt(t)?), lo, hi, tol)?;
        lo = hi;
    }
    Ok(acc + (1.0 + GAMMA_CAP).log2() * coverage(GAMMA_CAP)?)
}

fn integrate_fallible<F>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let err = std::cell::Cell::new(None);
    let res = quadrature::integrate(
        |t| match f(t) {
            Ok(v) => v,
            Err(e) => {
                err.set(Some(e));
                f64::NAN
            }
        },
        a,
        b,
        tol,
    );
    if let Some(e) = err.take() {
        return Err(e);
    }
    res.map(|i| i.value).map_err(|e| Error::quad("ASE threshold integral", e))
}

/// Coverage probability at one threshold and active density.
pub fn coverage_probability(model: &PathLossModel, params: &NetworkParams, query: &CoverageQuery) -> Result<f64> {
    CoverageEvaluator::new(model, params, query.active_density)?.coverage(query.gamma)
}

/// SINR CCDF on a strictly increasing grid.
pub fn sinr_ccdf_grid(model: &PathLossModel, params: &NetworkParams, lambda_tilde: f64, gamma_grid: &[f64]) -> Result<Vec<f64>> {
    CoverageEvaluator::new(model, params, lambda_tilde)?.ccdf(gamma_grid)
}

/// Area spectral efficiency, bps/Hz/km².
pub fn ase(model: &PathLossModel, params: &NetworkParams, lambda_tilde: f64, gamma0: f64) -> Result<f64> {
    CoverageEvaluator::new(model, params, lambda_tilde)?.ase(gamma0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pathloss::{build_case1, build_single_slope, build_single_slope_default};
    use crate::units::dbm_to_mw;
    use approx::assert_relative_eq;

    fn params(lambda: f64, rho: UeDensity) -> NetworkParams {
        NetworkParams {
            lambda,
            rho,
            tx_power: dbm_to_mw(24.0),
            noise_power: dbm_to_mw(-95.0),
            bandwidth: 10e6,
        }
    }

    #[test]
    fn laplace_edge_cases() {
        let m = build_case1();
        let p = dbm_to_mw(24.0);
        assert_eq!(laplace_los(&m, 100.0, 0.0, p, 0.05).unwrap(), 1.0);
        assert_eq!(laplace_nlos(&m, 100.0, 0.0, p, 0.05).unwrap(), 1.0);
        assert_eq!(laplace_los(&m, 0.0, 1e9, p, 0.05).unwrap(), 1.0);
        assert!(laplace_los(&m, 100.0, -1.0, p, 0.05).is_err());
        let s = 1.0 / (p * m.gain(0.05, LinkType::Los));
        let mut prev = 1.0;
        for k in [0.5, 1.0, 2.0, 4.0] {
            let l = laplace_los(&m, 100.0, k * s, p, 0.05).unwrap();
            assert!(l > 0.0 && l < prev);
            prev = l;
        }
        let a = laplace_nlos(&m, 50.0, s, p, 0.05).unwrap();
        let b = laplace_nlos(&m, 100.0, s, p, 0.05).unwrap();
        assert!(b < a);
    }

    #[test]
    fn single_slope_laplace_matches_closed_form() {
        // α = 4: ∫_r^∞ u/(1+u^4/(xA)) du = (√(xA)/2)(π/2 - atan(r²/√(xA))).
        let a = 1e-14;
        let m = build_single_slope(4.0, a).unwrap();
        let (lambda, p, r, s) = (80.0, 1.0, 0.07, 3e11);
        let c = (s * p * a).sqrt();
        let closed = (-2.0 * PI * lambda * 0.5 * c * (PI / 2.0 - (r * r / c).atan())).exp();
        assert_relative_eq!(laplace_nlos(&m, lambda, s, p, r).unwrap(), closed, max_relative = 1e-7);
        assert_relative_eq!(laplace_los(&m, lambda, s, p, r).unwrap(), closed, max_relative = 1e-7);
    }

    #[test]
    fn classical_rayleigh_value() {
        let m = build_single_slope(4.0, 1e-14).unwrap();
        for lambda in [1.0, 100.0, 10_000.0] {
            let mut prm = params(lambda, UeDensity::Infinite);
            prm.noise_power = 0.0;
            let q = CoverageQuery {
                gamma: 1.0,
                active_density: lambda,
            };
            let p = coverage_probability(&m, &prm, &q).unwrap();
            assert!((p - 1.0 / (1.0 + PI / 4.0)).abs() < 1e-5, "λ = {lambda}: {p}");
        }
    }

    #[test]
    fn coverage_limits_and_monotonicity() {
        let m = build_case1();
        let prm = params(100.0, UeDensity::Finite(300.0));
        let ev = CoverageEvaluator::new(&m, &prm, 60.0).unwrap();
        assert!(ev.coverage(1e-6).unwrap() > 0.999);
        let grid: Vec<f64> = (-10..=20).map(|k| 10f64.powf(k as f64 / 5.0)).collect();
        let ccdf = ev.ccdf(&grid).unwrap();
        assert!(ccdf.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(ccdf[0], ev.coverage(grid[0]).unwrap().min(1.0));
        assert_eq!(*ccdf.last().unwrap(), ev.coverage(*grid.last().unwrap()).unwrap().min(ccdf[ccdf.len() - 2]));
        assert!(ev.coverage(0.0).is_err());
        assert!(CoverageEvaluator::new(&m, &prm, 101.0).is_err());
    }

    #[test]
    fn idle_mode_never_hurts_coverage() {
        let m = build_case1();
        for lambda in [10.0, 100.0, 1000.0] {
            let prm = params(lambda, UeDensity::Finite(300.0));
            for gamma in [0.1, 1.0, 10.0] {
                let all = CoverageEvaluator::new(&m, &prm, lambda).unwrap().coverage(gamma).unwrap();
                let some = CoverageEvaluator::new(&m, &prm, 0.5 * lambda).unwrap().coverage(gamma).unwrap();
                assert!(some >= all - 1e-6);
            }
        }
    }

    #[test]
    fn ase_routes_agree_on_single_slope() {
        let m = build_single_slope_default();
        let mut prm = params(50.0, UeDensity::Infinite);
        prm.noise_power = 0.0;
        let ev = CoverageEvaluator::new(&m, &prm, 50.0).unwrap().with_precision(Precision::precise());
        let a = ev.ase(1.0).unwrap();
        let b = ev.ase_finite_difference(1.0, 0.02).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-5);
    }

    #[test]
    fn ase_degenerate_stub() {
        let v = ase_by_parts(|g| Ok(if g > 2.0 { 0.0 } else { 1.0 }), 3.0, Tolerance::default()).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn ue_density_parsing() {
        #[derive(Deserialize, Serialize)]
        struct W {
            rho: UeDensity,
        }
        let w: W = toml::from_str("rho = \"inf\"").unwrap();
        assert_eq!(w.rho, UeDensity::Infinite);
        let w: W = toml::from_str("rho = 300").unwrap();
        assert_eq!(w.rho, UeDensity::Finite(300.0));
        let w: W = toml::from_str("rho = 12.5").unwrap();
        assert_eq!(w.rho, UeDensity::Finite(12.5));
        assert!(toml::from_str::<W>("rho = -1").is_err());
        assert!(toml::from_str::<W>("rho = \"lots\"").is_err());
        let back: W = toml::from_str(&toml::to_string(&W { rho: UeDensity::Infinite }).unwrap()).unwrap();
        assert_eq!(back.rho, UeDensity::Infinite);
    }
}
