//! Density of BSs that serve at least one UE.
//!
//! `λ0(q) = λ [1 - (1 + ρ/(qλ))^-q]` is the approximation family. `q = 3.5`
//! gives the lower bound, the muting probability gives the upper bound, and
//! `q*` is fitted to simulated densities by least squares.

use std::f64::consts::PI;

use crate::association::{AssociationDensity, AssociationTable, TABLE_NODES};
use crate::error::{require, Error, Result};
use crate::pathloss::{LinkType, PathLossModel};
use crate::quadrature::{self, Tolerance};

/// Exponent of the lower bound.
pub const Q_LOWER: f64 = 3.5;

/// Upper end of the fitting bracket when `λ0(q)` never reaches the upper
/// bound (it only approaches it as `q → ∞`).
pub const Q_CAP: f64 = 100.0;

/// Fitted exponents shipped for the three UE densities studied by default.
pub fn default_q_star(rho: f64) -> Option<f64> {
    [(100.0, 4.73), (300.0, 4.18), (600.0, 3.97)]
        .iter()
        .find(|(r, _)| (rho - r).abs() < 1e-9)
        .map(|&(_, q)| q)
}

/// `λ [1 - (1 + ρ/(qλ))^-q]`.
pub fn lambda0(lambda: f64, rho: f64, q: f64) -> Result<f64> {
    require(lambda > 0.0 && lambda.is_finite(), || format!("BS density must be positive, got {lambda}"))?;
    require(rho >= 0.0 && rho.is_finite(), || format!("UE density must be non-negative, got {rho}"))?;
    require(q > 0.0 && q.is_finite(), || format!("exponent must be positive, got {q}"))?;
    Ok(lambda0_unchecked(lambda, rho, q))
}

#[inline]
fn lambda0_unchecked(lambda: f64, rho: f64, q: f64) -> f64 {
    // -expm1(-q ln(1 + x/q)) keeps precision when ρ ≪ λ.
    -lambda * (-q * (rho / (q * lambda)).ln_1p()).exp_m1()
}

/// Nearest-distance lower bound, `λ0` at `q = 3.5`.
pub fn lower_bound(lambda: f64, rho: f64) -> Result<f64> {
    lambda0(lambda, rho, Q_LOWER)
}

/// `λ0` at a fitted exponent.
pub fn approx(lambda: f64, rho: f64, q_star: f64) -> Result<f64> {
    lambda0(lambda, rho, q_star)
}

/// Probability that a UE at distance `r` from a given BS attaches elsewhere.
pub fn pr_unassociated_given_r(table: &AssociationTable, r: f64) -> Result<f64> {
    require(r > 0.0, || format!("distance must be positive, got {r}"))?;
    Ok(unassociated(table, r))
}

fn unassociated(table: &AssociationTable, r: f64) -> f64 {
    let model = table.density().model();
    let p = model.los_prob_unchecked(r);
    let mut v = 0.0;
    if p > 0.0 {
        let r1 = model.r1(r).unwrap_or(f64::NAN);
        v += (table.cdf(r, LinkType::Los) + table.cdf(r1, LinkType::Nlos)) * p;
    }
    if p < 1.0 {
        let r2 = model.r2(r).unwrap_or(f64::NAN);
        v += (table.cdf(r2, LinkType::Los) + table.cdf(r, LinkType::Nlos)) * (1.0 - p);
    }
    v.clamp(0.0, 1.0)
}

/// `∫_0^R (1 - Pr[w≁b | r]) r dr` over the support of the serving distance.
fn attached_moment(table: &AssociationTable, r_max: f64) -> Result<f64> {
    let ad = table.density();
    let upper = r_max.min(ad.truncation_radius());
    let pts = ad.mesh(upper);
    quadrature::integrate_points(|r| (1.0 - unassociated(table, r)) * r, &pts, Tolerance::new(1e-14, 1e-10))
        .map(|i| i.value)
        .map_err(|e| Error::quad("muting probability integral", e))
}

/// Probability that a BS has no attached UE, in the limit of an infinite
/// observation disc: `exp(-2πρ ∫_0^∞ (1 - Pr[w≁b | r]) r dr)`.
pub fn muting_probability(ad: &AssociationDensity, rho: f64) -> Result<f64> {
    require(rho >= 0.0 && rho.is_finite(), || format!("UE density must be non-negative, got {rho}"))?;
    if rho == 0.0 {
        return Ok(1.0);
    }
    let table = ad.tabulate(TABLE_NODES)?;
    muting_probability_with(&table, rho)
}

/// As [`muting_probability`], reusing a prepared table.
pub fn muting_probability_with(table: &AssociationTable, rho: f64) -> Result<f64> {
    require(rho >= 0.0 && rho.is_finite(), || format!("UE density must be non-negative, got {rho}"))?;
    if rho == 0.0 {
        return Ok(1.0);
    }
    Ok((-2.0 * PI * rho * attached_moment(table, f64::INFINITY)?).exp())
}

/// Direct evaluation of the muting probability over a disc of radius
/// `r_max`: `Σ_{k ≤ k_max} p^k Poisson(k; ρπ r_max²)`, where `p` is the
/// chance that a UE dropped uniformly in the disc attaches elsewhere.
///
/// Slow; kept as an independent check of [`muting_probability`]. The series
/// only converges when `ρπ r_max²` is well below `k_max`.
pub fn muting_probability_series(table: &AssociationTable, rho: f64, r_max: f64, k_max: usize) -> Result<f64> {
    require(r_max > 0.0, || format!("disc radius must be positive, got {r_max}"))?;
    let attached = 2.0 / (r_max * r_max) * attached_moment(table, r_max)?;
    let ln_p = (-attached).ln_1p();
    let mean = rho * PI * r_max * r_max;
    if mean == 0.0 {
        return Ok(1.0);
    }
    let ln_mean = mean.ln();
    let mut sum = 0.0;
    let mut ln_fact = 0.0;
    for k in 0..=k_max {
        if k > 0 {
            ln_fact += (k as f64).ln();
        }
        let kf = k as f64;
        sum += (kf * ln_p + kf * ln_mean - mean - ln_fact).exp();
    }
    Ok(sum)
}

/// `λ (1 - Q_off)`.
pub fn upper_bound(ad: &AssociationDensity, rho: f64) -> Result<f64> {
    Ok(ad.lambda() * (1.0 - muting_probability(ad, rho)?))
}

/// Result of the least-squares exponent fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QStarFit {
    pub q_star: f64,
    pub mse: f64,
    /// Search interval `[3.5, q_ub]`.
    pub bracket: (f64, f64),
    /// False when `λ0(q)` stays below the mean upper bound on the whole
    /// interval up to [`Q_CAP`], which then closes the bracket.
    pub upper_root_found: bool,
}

/// Fits `q*` minimising the mean squared error of `λ0(λ_i, ρ, q)` against
/// simulated `(λ_i, λ̃_i)` pairs.
pub fn fit_q_star(sim_table: &[(f64, f64)], rho: f64, model: &PathLossModel) -> Result<QStarFit> {
    require(!sim_table.is_empty(), || "simulation table is empty".into())?;
    require(rho > 0.0 && rho.is_finite(), || format!("UE density must be positive, got {rho}"))?;
    for &(l, t) in sim_table {
        require(l > 0.0 && t >= 0.0 && l.is_finite() && t.is_finite(), || {
            format!("invalid table row ({l}, {t})")
        })?;
    }
    let mut ub_mean = 0.0;
    for &(l, _) in sim_table {
        ub_mean += upper_bound(&AssociationDensity::new(model.clone(), l)?, rho)?;
    }
    ub_mean /= sim_table.len() as f64;
    fit_with_upper_mean(sim_table, rho, ub_mean)
}

fn fit_with_upper_mean(sim_table: &[(f64, f64)], rho: f64, ub_mean: f64) -> Result<QStarFit> {
    let n = sim_table.len() as f64;
    let mean_l0 = |q: f64| sim_table.iter().map(|&(l, _)| lambda0_unchecked(l, rho, q)).sum::<f64>() / n;
    let gap = |q: f64| mean_l0(q) - ub_mean;
    if gap(Q_LOWER) > 1e-9 * ub_mean.abs().max(1.0) {
        return Err(Error::Computation(format!(
            "bracket inverted: mean λ0(3.5) = {} exceeds mean upper bound {ub_mean}",
            mean_l0(Q_LOWER)
        )));
    }
    let (q_ub, upper_root_found) = if gap(Q_CAP) < 0.0 {
        (Q_CAP, false)
    } else {
        let (mut lo, mut hi) = (Q_LOWER, Q_CAP);
        while hi - lo > 1e-6 {
            let mid = 0.5 * (lo + hi);
            if gap(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (0.5 * (lo + hi), true)
    };
    let mse = |q: f64| {
        sim_table
            .iter()
            .map(|&(l, t)| (lambda0_unchecked(l, rho, q) - t).powi(2))
            .sum::<f64>()
            / n
    };
    let q_star = minimize_scanned(mse, Q_LOWER, q_ub, 32, 1e-4);
    Ok(QStarFit {
        q_star,
        mse: mse(q_star),
        bracket: (Q_LOWER, q_ub),
        upper_root_found,
    })
}

/// Coarse log-spaced scan followed by golden-section refinement around the
/// best scan point.
fn minimize_scanned(f: impl Fn(f64) -> f64, lo: f64, hi: f64, scan: usize, tol: f64) -> f64 {
    if hi <= lo {
        return lo;
    }
    let xs: Vec<f64> = (0..scan)
        .map(|i| lo * (hi / lo).powf(i as f64 / (scan - 1) as f64))
        .collect();
    let best = (0..scan)
        .min_by(|&i, &j| f(xs[i]).total_cmp(&f(xs[j])))
        .unwrap_or(0);
    let a = xs[best.saturating_sub(1)];
    let b = xs[(best + 1).min(scan - 1)];
    golden_section(f, a, b, tol)
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Bounds and approximation over a BS density grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveDensityReport {
    pub lambda_grid: Vec<f64>,
    pub rho: f64,
    pub lb: Vec<f64>,
    pub ub: Vec<f64>,
    pub approx: Vec<f64>,
    pub q_star: f64,
}

impl ActiveDensityReport {
    pub fn compute(model: &PathLossModel, lambda_grid: &[f64], rho: f64, q_star: f64) -> Result<Self> {
        require(!lambda_grid.is_empty(), || "density grid is empty".into())?;
        let mut lb = Vec::with_capacity(lambda_grid.len());
        let mut ub = Vec::with_capacity(lambda_grid.len());
        let mut ap = Vec::with_capacity(lambda_grid.len());
        for &l in lambda_grid {
            lb.push(lower_bound(l, rho)?);
            ub.push(upper_bound(&AssociationDensity::new(model.clone(), l)?, rho)?);
            ap.push(approx(l, rho, q_star)?);
        }
        Ok(Self {
            lambda_grid: lambda_grid.to_vec(),
            rho,
            lb,
            ub,
            approx: ap,
            q_star,
        })
    }
}

/// `n` points spaced uniformly in `log λ` from `start` to `stop`.
pub fn log_grid(start: f64, stop: f64, n: usize) -> Result<Vec<f64>> {
    require(n >= 1, || "grid needs at least one point".into())?;
    require(start > 0.0 && stop >= start, || format!("invalid grid bounds [{start}, {stop}]"))?;
    if n == 1 {
        return Ok(vec![start]);
    }
    Ok((0..n)
        .map(|i| start * (stop / start).powf(i as f64 / (n - 1) as f64))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pathloss::{build_case1, build_case2, build_single_slope_default};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn lambda0_examples() {
        assert!((lambda0(1.0, 300.0, 3.5).unwrap() - 1.0).abs() < 1e-4);
        assert!((lambda0(1000.0, 300.0, 4.18).unwrap() - 251.5).abs() < 0.1);
        assert_eq!(lambda0(10.0, 0.0, 3.5).unwrap(), 0.0);
        assert!(lambda0(-1.0, 3.0, 3.5).is_err());
        assert!(lambda0(1.0, -3.0, 3.5).is_err());
        assert!(lambda0(1.0, 3.0, 0.0).is_err());
        assert_eq!(lower_bound(77.0, 300.0).unwrap(), lambda0(77.0, 300.0, 3.5).unwrap());
        assert_eq!(approx(77.0, 300.0, 4.18).unwrap(), lambda0(77.0, 300.0, 4.18).unwrap());
        let lb = lower_bound(1e4, 300.0).unwrap();
        assert!(lb < 300.0 && lb > 290.0 && lb < lower_bound(1e5, 300.0).unwrap());
        let far = approx(1e9, 300.0, 4.18).unwrap();
        assert!((far - 300.0).abs() < 1e-3);
    }

    proptest! {
        #[test]
        fn lambda0_bounded_and_increasing(l in 0.1f64..1e5, r in 0.1f64..1e4, q in 0.5f64..50.0) {
            let v = lambda0(l, r, q).unwrap();
            prop_assert!(v > 0.0 && v <= l.min(r));
            prop_assert!(lambda0(l * 1.01, r, q).unwrap() > v);
            // Strict growth in ρ and q until the value rounds to λ.
            let saturated = v >= l * (1.0 - 1e-9);
            prop_assert!(v < r);
            for w in [lambda0(l, r * 1.01, q).unwrap(), lambda0(l, r, q * 1.01).unwrap()] {
                let grew = if saturated { w >= v } else { w > v };
                prop_assert!(grew);
            }
        }
    }

    #[test]
    fn unassociated_probability_limits() {
        let t = AssociationDensity::new(build_single_slope_default(), 30.0).unwrap().tabulate(512).unwrap();
        for r in [0.01, 0.1, 0.3] {
            let want = 1.0 - (-PI * 30.0 * r * r).exp();
            assert_relative_eq!(pr_unassociated_given_r(&t, r).unwrap(), want, max_relative = 1e-8);
        }
        let t = AssociationDensity::new(build_case1(), 30.0).unwrap().tabulate(512).unwrap();
        assert!(pr_unassociated_given_r(&t, 1e-7).unwrap() < 1e-6);
        assert!(pr_unassociated_given_r(&t, 5.0).unwrap() > 1.0 - 1e-9);
        let mut prev = 0.0;
        for k in 1..200 {
            let v = pr_unassociated_given_r(&t, 0.005 * k as f64).unwrap();
            assert!(v >= prev - 1e-12);
            prev = v;
        }
    }

    #[test]
    fn muting_probability_is_poisson_void() {
        // Each UE attaches to exactly one BS, so the attachment probability
        // integrates to 1/λ and Q_off = exp(-ρ/λ) for any path loss model.
        for model in [build_case1(), build_case2(), build_single_slope_default()] {
            for (lambda, rho) in [(10.0, 300.0), (300.0, 300.0), (2000.0, 100.0)] {
                let ad = AssociationDensity::new(model.clone(), lambda).unwrap();
                let q = muting_probability(&ad, rho).unwrap();
                assert_relative_eq!(q, (-rho / lambda).exp(), max_relative = 1e-6, epsilon = 1e-12);
            }
        }
        let ad = AssociationDensity::new(build_case1(), 10.0).unwrap();
        assert_eq!(muting_probability(&ad, 0.0).unwrap(), 1.0);
        assert_eq!(upper_bound(&ad, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn series_matches_closed_form() {
        for (model, lambda, rho) in [(build_case1(), 10.0, 5.0), (build_single_slope_default(), 40.0, 30.0)] {
            let ad = AssociationDensity::new(model, lambda).unwrap();
            let t = ad.tabulate(TABLE_NODES).unwrap();
            let series = muting_probability_series(&t, rho, 5.0, 10_000).unwrap();
            let closed = muting_probability_with(&t, rho).unwrap();
            assert!((series - closed).abs() < 1e-4, "{series} vs {closed}");
        }
    }

    #[test]
    fn bound_ordering() {
        let model = build_single_slope_default();
        let ad = AssociationDensity::new(model.clone(), 10.0).unwrap();
        let q = muting_probability(&ad, 300.0).unwrap();
        assert!(1.0 - q >= lambda0(10.0, 300.0, 3.5).unwrap() / 10.0);
        for lambda in log_grid(1.0, 1e4, 9).unwrap() {
            let ad = AssociationDensity::new(build_case1(), lambda).unwrap();
            let ub = upper_bound(&ad, 300.0).unwrap();
            assert!(lower_bound(lambda, 300.0).unwrap() <= ub && ub <= lambda);
        }
    }

    #[test]
    fn fit_recovers_synthetic_exponent() {
        let grid = log_grid(1.0, 1e4, 20).unwrap();
        let table: Vec<(f64, f64)> = grid.iter().map(|&l| (l, lambda0(l, 300.0, 4.0).unwrap())).collect();
        let fit = fit_q_star(&table, 300.0, &build_case1()).unwrap();
        assert!((fit.q_star - 4.0).abs() < 1e-3, "{fit:?}");
        assert!(fit.mse < 1e-8);
        assert!(!fit.upper_root_found);
        assert_eq!(fit.bracket, (Q_LOWER, Q_CAP));
        assert!(fit_q_star(&[], 300.0, &build_case1()).is_err());
    }

    #[test]
    fn fit_reports_inverted_bracket() {
        let table = [(10.0, 5.0), (100.0, 50.0)];
        assert!(fit_with_upper_mean(&table, 300.0, 1.0).is_err());
        // A low mean upper bound closes the bracket early.
        let ub = (lambda0(10.0, 300.0, 6.0).unwrap() + lambda0(100.0, 300.0, 6.0).unwrap()) / 2.0;
        let fit = fit_with_upper_mean(&table, 300.0, ub).unwrap();
        assert!(fit.upper_root_found && (fit.bracket.1 - 6.0).abs() < 1e-4);
        assert!(fit.q_star >= Q_LOWER && fit.q_star <= fit.bracket.1);
    }

    #[test]
    fn shipped_exponents() {
        assert_eq!(default_q_star(300.0), Some(4.18));
        assert_eq!(default_q_star(100.0), Some(4.73));
        assert_eq!(default_q_star(600.0), Some(3.97));
        assert_eq!(default_q_star(250.0), None);
    }
}
