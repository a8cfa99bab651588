//! Serving-distance densities under strongest-link association.
//!
//! A UE attaches to the BS with the largest `ζ(r)`, which may be a farther
//! LoS station rather than the nearest one. The LoS and NLoS densities below
//! split the serving distance law by the type of the serving link.

use std::f64::consts::PI;

use crate::error::{require, Error, Result};
use crate::pathloss::{LinkType, PathLossModel};
use crate::quadrature::{self, Tolerance};

/// Survival probability below which serving distances are ignored.
pub const TAIL_PROBABILITY: f64 = 1e-12;

/// Nodes in the default cumulative table.
pub const TABLE_NODES: usize = 2048;

const CDF_TOL: Tolerance = Tolerance::new(1e-12, 1e-11);

/// Serving distance law for BS density `lambda` (BSs/km²).
#[derive(Debug, Clone)]
pub struct AssociationDensity {
    model: PathLossModel,
    lambda: f64,
    total_moment: f64,
}

impl AssociationDensity {
    pub fn new(model: PathLossModel, lambda: f64) -> Result<Self> {
        require(lambda > 0.0 && lambda.is_finite(), || {
            format!("BS density must be positive, got {lambda}")
        })?;
        let total_moment = model.los_probability().total_moment();
        Ok(Self {
            model,
            lambda,
            total_moment,
        })
    }

    pub fn model(&self) -> &PathLossModel {
        &self.model
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Mean number of LoS BSs within `r`: `∫_0^r Pr^L(u) 2πλu du`.
    #[inline]
    pub fn los_exponent(&self, r: f64) -> f64 {
        2.0 * PI * self.lambda * self.model.los_probability().moment(r)
    }

    /// Mean number of NLoS BSs within `r`.
    #[inline]
    pub fn nlos_exponent(&self, r: f64) -> f64 {
        (PI * self.lambda * r * r - self.los_exponent(r)).max(0.0)
    }

    /// Radius beyond which the serving distance falls with probability
    /// below [`TAIL_PROBABILITY`].
    pub fn truncation_radius(&self) -> f64 {
        let bulk = ((1.0 / TAIL_PROBABILITY).ln() / (PI * self.lambda) + 2.0 * self.total_moment).sqrt();
        bulk.max(self.model.los_probability().range(1e-14))
    }

    /// Distances where either density changes form.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts = Vec::new();
        for b in self.model.breakpoints() {
            pts.push(b);
            if let (Ok(r1), Ok(r2)) = (self.model.r1(b), self.model.r2(b)) {
                pts.push(r1);
                pts.push(r2);
            }
        }
        pts.retain(|p| p.is_finite() && *p > 0.0);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Breakpoints in `(0, r)` plus a few multiples of the mean spacing.
    pub(crate) fn mesh(&self, r: f64) -> Vec<f64> {
        let spacing = 1.0 / (PI * self.lambda).sqrt();
        let mut pts = vec![0.0];
        pts.extend(self.breakpoints());
        pts.extend([0.25, 1.0, 2.0, 4.0].map(|k| k * spacing));
        pts.retain(|&p| p < r);
        pts.push(r);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    #[inline]
    pub(crate) fn pdf_unchecked(&self, r: f64, link: LinkType) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let p = self.model.los_prob_unchecked(r);
        let ring = 2.0 * PI * self.lambda * r;
        match link {
            LinkType::Los => {
                if p == 0.0 {
                    return 0.0;
                }
                let r1 = self.model.r1(r).unwrap_or(f64::NAN);
                (-self.nlos_exponent(r1) - self.los_exponent(r)).exp() * p * ring
            }
            LinkType::Nlos => {
                if p == 1.0 {
                    return 0.0;
                }
                let r2 = self.model.r2(r).unwrap_or(f64::NAN);
                (-self.los_exponent(r2) - self.nlos_exponent(r)).exp() * (1.0 - p) * ring
            }
        }
    }

    /// Density of a LoS serving link at distance `r`.
    pub fn pdf_los(&self, r: f64) -> Result<f64> {
        check_distance(r)?;
        Ok(self.pdf_unchecked(r, LinkType::Los))
    }

    /// Density of an NLoS serving link at distance `r`.
    pub fn pdf_nlos(&self, r: f64) -> Result<f64> {
        check_distance(r)?;
        Ok(self.pdf_unchecked(r, LinkType::Nlos))
    }

    pub fn pdf(&self, r: f64, link: LinkType) -> Result<f64> {
        check_distance(r)?;
        Ok(self.pdf_unchecked(r, link))
    }

    /// Probability that the serving link has type `link` and length at most
    /// `r`. Accepts `r = +∞`.
    pub fn cdf(&self, r: f64, link: LinkType) -> Result<f64> {
        require(r >= 0.0, || format!("distance must be non-negative, got {r}"))?;
        if r == 0.0 {
            return Ok(0.0);
        }
        let upper = r.min(self.truncation_radius());
        let pts = self.mesh(upper);
        quadrature::integrate_points(|u| self.pdf_unchecked(u, link), &pts, CDF_TOL)
            .map(|i| i.value.clamp(0.0, 1.0))
            .map_err(|e| Error::quad(format!("{link:?} serving-distance CDF at r = {r}"), e))
    }

    /// Tabulates both densities and their cumulative integrals.
    pub fn tabulate(&self, nodes: usize) -> Result<AssociationTable> {
        AssociationTable::build(self.clone(), nodes)
    }

    /// Median serving distance over both link types.
    pub fn median_distance(&self) -> Result<f64> {
        let table = self.tabulate(256)?;
        let (mut lo, mut hi) = (0.0, self.truncation_radius());
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if table.cdf_total(mid) < 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Serving-distance densities and CDFs on a log-spaced radius grid.
///
/// CDF queries start from the nearest tabulated node below and integrate
/// only the remaining short stretch, so they keep full quadrature accuracy.
#[derive(Debug, Clone)]
pub struct AssociationTable {
    density: AssociationDensity,
    radii: Vec<f64>,
    pdf: [Vec<f64>; 2],
    cdf: [Vec<f64>; 2],
}

impl AssociationTable {
    fn build(density: AssociationDensity, nodes: usize) -> Result<Self> {
        require(nodes >= 2, || "table needs at least two nodes".into())?;
        let r_max = density.truncation_radius();
        let r_min = r_max * 1e-7;
        let mut radii: Vec<f64> = (0..nodes)
            .map(|i| r_min * (r_max / r_min).powf(i as f64 / (nodes - 1) as f64))
            .collect();
        radii.extend(density.breakpoints().into_iter().filter(|&b| b > r_min && b < r_max));
        radii.sort_by(f64::total_cmp);
        radii.dedup();
        let mut pdf = [Vec::with_capacity(radii.len()), Vec::with_capacity(radii.len())];
        let mut cdf = [Vec::with_capacity(radii.len()), Vec::with_capacity(radii.len())];
        for (k, link) in [LinkType::Los, LinkType::Nlos].into_iter().enumerate() {
            let mut acc = 0.0;
            let mut prev = 0.0;
            for &r in &radii {
                let step = quadrature::integrate(|u| density.pdf_unchecked(u, link), prev, r, CDF_TOL)
                    .map_err(|e| Error::quad(format!("tabulating {link:?} CDF"), e))?;
                acc += step.value;
                prev = r;
                pdf[k].push(density.pdf_unchecked(r, link));
                cdf[k].push(acc);
            }
        }
        Ok(Self {
            density,
            radii,
            pdf,
            cdf,
        })
    }

    pub fn density(&self) -> &AssociationDensity {
        &self.density
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn pdf_values(&self, link: LinkType) -> &[f64] {
        &self.pdf[index(link)]
    }

    pub fn cdf_values(&self, link: LinkType) -> &[f64] {
        &self.cdf[index(link)]
    }

    /// `F^link(r)`, the probability of a `link` server within `r`.
    pub fn cdf(&self, r: f64, link: LinkType) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let k = index(link);
        let pos = self.radii.partition_point(|&x| x <= r);
        if pos == self.radii.len() {
            return *self.cdf[k].last().unwrap();
        }
        let (base, lo) = if pos == 0 { (0.0, 0.0) } else { (self.cdf[k][pos - 1], self.radii[pos - 1]) };
        if r == lo {
            return base;
        }
        let rest = quadrature::integrate(|u| self.density.pdf_unchecked(u, link), lo, r, CDF_TOL)
            .map(|i| i.value)
            .unwrap_or_else(|e| e.value);
        (base + rest).clamp(0.0, 1.0)
    }

    pub fn cdf_total(&self, r: f64) -> f64 {
        self.cdf(r, LinkType::Los) + self.cdf(r, LinkType::Nlos)
    }
}

fn index(link: LinkType) -> usize {
    match link {
        LinkType::Los => 0,
        LinkType::Nlos => 1,
    }
}

fn check_distance(r: f64) -> Result<()> {
    require(r > 0.0 && !r.is_nan(), || format!("distance must be positive, got {r}"))
}
