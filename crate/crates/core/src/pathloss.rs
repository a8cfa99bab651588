//! Piecewise LoS/NLoS path loss.
//!
//! Distances are in kilometres throughout and gains are linear, so
//! `A * r^-alpha` with `A` the gain at 1 km.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{self, Tolerance};

/// Case 1 LoS gain at 1 km (103.8 dB loss).
pub const CASE1_A_LOS: f64 = 4.168_693_834_703_355e-11;
/// Case 1 NLoS gain at 1 km (145.4 dB loss).
pub const CASE1_A_NLOS: f64 = 2.884_031_503_126_606e-15;
pub const CASE1_ALPHA_LOS: f64 = 2.09;
pub const CASE1_ALPHA_NLOS: f64 = 3.75;
/// Cutoff of the linear LoS probability, km.
pub const CASE1_LOS_CUTOFF: f64 = 0.3;
/// Case 2 LoS probability constants, km.
pub const CASE2_R1: f64 = 0.156;
pub const CASE2_R2: f64 = 0.030;

/// Shortest link for which LoS must be at least as strong as NLoS.
///
/// With the Case 1 constants the two power laws cross at about 3.1 m, so
/// the ordering cannot hold all the way down to zero.
pub const DOMINANCE_FLOOR_KM: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LinkType {
    Los,
    Nlos,
}

/// One distance band of the path loss model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSegment {
    pub d_lo: f64,
    pub d_hi: f64,
    pub a_los: f64,
    pub a_nlos: f64,
    pub alpha_los: f64,
    pub alpha_nlos: f64,
}

impl PathSegment {
    #[inline]
    pub fn gain(&self, r: f64, link: LinkType) -> f64 {
        match link {
            LinkType::Los => self.a_los * r.powf(-self.alpha_los),
            LinkType::Nlos => self.a_nlos * r.powf(-self.alpha_nlos),
        }
    }

    #[inline]
    pub fn contains(&self, r: f64) -> bool {
        r >= self.d_lo && r < self.d_hi
    }
}

/// Probability that a link of length `r` is LoS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LosProbability {
    Never,
    /// `1 - r/cutoff` below the cutoff, zero beyond.
    Linear { cutoff: f64 },
    /// `1 - 5 exp(-r1/r)` up to `split`, `5 exp(-r/r2)` beyond.
    TwoPieceExponential { r1: f64, r2: f64, split: f64 },
}

impl LosProbability {
    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            LosProbability::Never => 0.0,
            LosProbability::Linear { cutoff } => {
                if r <= cutoff {
                    (1.0 - r / cutoff).max(0.0)
                } else {
                    0.0
                }
            }
            LosProbability::TwoPieceExponential { r1, r2, split } => {
                if r <= split {
                    1.0 - 5.0 * (-r1 / r).exp()
                } else {
                    5.0 * (-r / r2).exp()
                }
            }
        }
    }

    /// Distance beyond which the probability is exactly zero, if any.
    pub fn support(&self) -> Option<f64> {
        match *self {
            LosProbability::Never => Some(0.0),
            LosProbability::Linear { cutoff } => Some(cutoff),
            LosProbability::TwoPieceExponential { .. } => None,
        }
    }

    /// Distance beyond which the probability stays below `eps`.
    pub fn range(&self, eps: f64) -> f64 {
        match *self {
            LosProbability::TwoPieceExponential { r2, split, .. } => split.max(r2 * (5.0 / eps).ln()),
            _ => self.support().unwrap_or(0.0),
        }
    }

    /// Points where the probability is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match *self {
            LosProbability::Never => Vec::new(),
            LosProbability::Linear { cutoff } => vec![cutoff],
            LosProbability::TwoPieceExponential { split, .. } => vec![split],
        }
    }

    /// Size of the upward step at the branch point, zero for continuous forms.
    pub fn jump(&self) -> f64 {
        match *self {
            LosProbability::TwoPieceExponential { r1, r2, split } => {
                5.0 * (-split / r2).exp() - (1.0 - 5.0 * (-r1 / split).exp())
            }
            _ => 0.0,
        }
    }

    /// `∫_0^r Pr^L(u) u du`.
    pub fn moment(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        match *self {
            LosProbability::Never => 0.0,
            LosProbability::Linear { cutoff } => {
                let x = r.min(cutoff);
                x * x / 2.0 - x * x * x / (3.0 * cutoff)
            }
            LosProbability::TwoPieceExponential { r1, r2, split } => {
                let x = r.min(split);
                let tail = quadrature::integrate(
                    |u: f64| if u > 0.0 { u * (-r1 / u).exp() } else { 0.0 },
                    0.0,
                    x,
                    Tolerance::new(1e-14, 1e-13),
                )
                .map(|i| i.value)
                .unwrap_or(f64::NAN);
                let mut m = x * x / 2.0 - 5.0 * tail;
                if r > split {
                    let prim = |u: f64| -r2 * (-u / r2).exp() * (u + r2);
                    m += 5.0 * (prim(r) - prim(split));
                }
                m
            }
        }
    }

    /// `∫_0^∞ Pr^L(u) u du`.
    pub fn total_moment(&self) -> f64 {
        match *self {
            LosProbability::TwoPieceExponential { .. } => self.moment(self.range(1e-300)),
            _ => self.moment(self.support().unwrap_or(0.0)),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Model(m));
        match *self {
            LosProbability::Never => {}
            LosProbability::Linear { cutoff } => {
                if !(cutoff > 0.0 && cutoff.is_finite()) {
                    return bad(format!("LoS cutoff must be positive, got {cutoff}"));
                }
            }
            LosProbability::TwoPieceExponential { r1, r2, split } => {
                if !(r1 > 0.0 && r2 > 0.0 && split > 0.0) {
                    return bad("exponential LoS constants must be positive".into());
                }
            }
        }
        // Bounded and non-increasing on each smooth branch.
        let mut branches = vec![1e-6];
        branches.extend(self.breakpoints());
        branches.push(1e3);
        for w in branches.windows(2) {
            let (lo, hi) = (w[0] * (1.0 + 1e-12), w[1]);
            let n = 512;
            let mut prev = f64::INFINITY;
            for i in 0..=n {
                let r = lo * (hi / lo).powf(i as f64 / n as f64);
                let r = if i == n { hi } else { r };
                let p = self.eval(r);
                if !(0.0..=1.0).contains(&p) {
                    return bad(format!("LoS probability {p} at r = {r} km is outside [0, 1]"));
                }
                if p > prev + 1e-15 {
                    return bad(format!("LoS probability increases near r = {r} km"));
                }
                prev = p;
            }
        }
        Ok(())
    }
}

/// Stacked N-piece path loss with a LoS probability function.
#[derive(Debug, Clone, PartialEq)]
pub struct PathLossModel {
    segments: Vec<PathSegment>,
    los: LosProbability,
    uniform: Option<Uniform>,
}

/// Set when every segment shares the same LoS law and the same NLoS law.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Uniform {
    a_los: f64,
    a_nlos: f64,
    alpha_los: f64,
    alpha_nlos: f64,
}

impl PathLossModel {
    pub fn new(segments: Vec<PathSegment>, los: LosProbability) -> Result<Self> {
        let bad = |m: String| Err(Error::Model(m));
        if segments.is_empty() {
            return bad("at least one segment is required".into());
        }
        if segments[0].d_lo != 0.0 {
            return bad("first segment must start at 0".into());
        }
        if segments.last().unwrap().d_hi != f64::INFINITY {
            return bad("last segment must be unbounded".into());
        }
        for (i, s) in segments.iter().enumerate() {
            if !(s.d_lo >= 0.0 && s.d_lo < s.d_hi) {
                return bad(format!("segment {i} has an empty range"));
            }
            if i > 0 && segments[i - 1].d_hi != s.d_lo {
                return bad(format!("segment {i} does not start where segment {} ends", i - 1));
            }
            for (a, alpha) in [(s.a_los, s.alpha_los), (s.a_nlos, s.alpha_nlos)] {
                if !(a > 0.0 && a.is_finite() && alpha > 0.0 && alpha.is_finite()) {
                    return bad(format!("segment {i} needs positive gains and exponents"));
                }
            }
            // ln(gL/gNL) is affine in ln r, so checking the ends suffices.
            let lo = s.d_lo.max(DOMINANCE_FLOOR_KM);
            if lo < s.d_hi {
                let margin = |r: f64| (s.a_los / s.a_nlos).ln() + (s.alpha_nlos - s.alpha_los) * r.ln();
                let tail_ok = if s.d_hi.is_infinite() {
                    s.alpha_nlos >= s.alpha_los
                } else {
                    margin(s.d_hi) >= -1e-12
                };
                if margin(lo) < -1e-12 || !tail_ok {
                    return bad(format!("segment {i}: NLoS gain exceeds LoS gain above {DOMINANCE_FLOOR_KM} km"));
                }
            }
        }
        los.validate()?;
        let first = segments[0];
        let uniform = segments
            .iter()
            .all(|s| {
                s.a_los == first.a_los
                    && s.a_nlos == first.a_nlos
                    && s.alpha_los == first.alpha_los
                    && s.alpha_nlos == first.alpha_nlos
            })
            .then_some(Uniform {
                a_los: first.a_los,
                a_nlos: first.a_nlos,
                alpha_los: first.alpha_los,
                alpha_nlos: first.alpha_nlos,
            });
        Ok(Self {
            segments,
            los,
            uniform,
        })
    }

    pub fn segments(&self) -> &[PathSegment] {
        &self.segments
    }

    pub fn los_probability(&self) -> &LosProbability {
        &self.los
    }

    /// True when LoS and NLoS links follow the same law everywhere.
    pub fn is_single_slope(&self) -> bool {
        matches!(self.los, LosProbability::Never)
            && self
                .segments
                .iter()
                .all(|s| s.a_los == s.a_nlos && s.alpha_los == s.alpha_nlos)
    }

    /// `(A, alpha)` of the given link type when it is one power law for all r.
    pub fn power_law(&self, link: LinkType) -> Option<(f64, f64)> {
        self.uniform.map(|u| match link {
            LinkType::Los => (u.a_los, u.alpha_los),
            LinkType::Nlos => (u.a_nlos, u.alpha_nlos),
        })
    }

    #[inline]
    pub fn segment(&self, r: f64) -> &PathSegment {
        match self.segments.len() {
            1 => &self.segments[0],
            _ => self
                .segments
                .iter()
                .find(|s| s.contains(r))
                .unwrap_or(self.segments.last().unwrap()),
        }
    }

    /// Linear gain `ζ(r)`, without argument checks.
    #[inline]
    pub fn gain(&self, r: f64, link: LinkType) -> f64 {
        if let Some(u) = self.uniform {
            return match link {
                LinkType::Los => u.a_los * r.powf(-u.alpha_los),
                LinkType::Nlos => u.a_nlos * r.powf(-u.alpha_nlos),
            };
        }
        self.segment(r).gain(r, link)
    }

    /// Linear gain `ζ(r)`.
    pub fn loss(&self, r: f64, link: LinkType) -> Result<f64> {
        check_distance(r)?;
        Ok(self.gain(r, link))
    }

    #[inline]
    pub fn los_prob_unchecked(&self, r: f64) -> f64 {
        self.los.eval(r)
    }

    pub fn los_prob(&self, r: f64) -> Result<f64> {
        check_distance(r)?;
        Ok(self.los.eval(r))
    }

    /// Distance `r1` at which an NLoS link is as strong as a LoS link at `r`.
    pub fn equiv_nlos_distance(&self, r: f64) -> Result<f64> {
        check_distance(r)?;
        self.r1(r)
    }

    /// Distance `r2` at which a LoS link is as strong as an NLoS link at `r`.
    pub fn equiv_los_distance(&self, r: f64) -> Result<f64> {
        check_distance(r)?;
        self.r2(r)
    }

    #[inline]
    pub(crate) fn r1(&self, r: f64) -> Result<f64> {
        if let Some(u) = self.uniform {
            return Ok(equivalent(u.a_los, u.alpha_los, u.a_nlos, u.alpha_nlos, r));
        }
        self.solve(self.gain(r, LinkType::Los), LinkType::Nlos, r)
    }

    #[inline]
    pub(crate) fn r2(&self, r: f64) -> Result<f64> {
        if let Some(u) = self.uniform {
            return Ok(equivalent(u.a_nlos, u.alpha_nlos, u.a_los, u.alpha_los, r));
        }
        self.solve(self.gain(r, LinkType::Nlos), LinkType::Los, r)
    }

    /// Largest `x` with `gain(x, link) >= target`, by bisection.
    fn solve(&self, target: f64, link: LinkType, r: f64) -> Result<f64> {
        let mut lo = r;
        let mut hi = 10.0 * r;
        let mut steps = 0;
        while self.gain(lo, link) < target {
            hi = lo;
            lo /= 10.0;
            steps += 1;
            if steps > 60 {
                return Err(Error::Computation(format!("no equivalent {link:?} distance for r = {r} km")));
            }
        }
        while self.gain(hi, link) >= target {
            lo = hi;
            hi *= 10.0;
            steps += 1;
            if steps > 60 {
                return Err(Error::Computation(format!("no equivalent {link:?} distance for r = {r} km")));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.gain(mid, link) >= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Every distance where the model changes form.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self.segments.iter().skip(1).map(|s| s.d_lo).collect();
        pts.extend(self.los.breakpoints());
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }
}

#[inline]
fn equivalent(a_from: f64, alpha_from: f64, a_to: f64, alpha_to: f64, r: f64) -> f64 {
    if a_from == a_to && alpha_from == alpha_to {
        return r;
    }
    (a_to / a_from).powf(1.0 / alpha_to) * r.powf(alpha_from / alpha_to)
}

fn check_distance(r: f64) -> Result<()> {
    if r > 0.0 && !r.is_nan() {
        Ok(())
    } else {
        Err(Error::Domain(format!("distance must be positive, got {r}")))
    }
}

fn two_segment(split: f64, los: LosProbability) -> PathLossModel {
    let seg = |d_lo, d_hi| PathSegment {
        d_lo,
        d_hi,
        a_los: CASE1_A_LOS,
        a_nlos: CASE1_A_NLOS,
        alpha_los: CASE1_ALPHA_LOS,
        alpha_nlos: CASE1_ALPHA_NLOS,
    };
    PathLossModel::new(vec![seg(0.0, split), seg(split, f64::INFINITY)], los).expect("built-in model is valid")
}

/// Two-slope model with a linear LoS probability that vanishes at 300 m.
pub fn build_case1() -> PathLossModel {
    two_segment(
        CASE1_LOS_CUTOFF,
        LosProbability::Linear {
            cutoff: CASE1_LOS_CUTOFF,
        },
    )
}

/// Same gains as [`build_case1`] with the two-piece exponential LoS probability.
pub fn build_case2() -> PathLossModel {
    let split = CASE2_R1 / std::f64::consts::LN_10;
    two_segment(
        split,
        LosProbability::TwoPieceExponential {
            r1: CASE2_R1,
            r2: CASE2_R2,
            split,
        },
    )
}

/// Single power law, every link NLoS.
pub fn build_single_slope(alpha: f64, a: f64) -> Result<PathLossModel> {
    if !(alpha > 2.0 && alpha.is_finite()) {
        return Err(Error::Model(format!("single-slope exponent must exceed 2, got {alpha}")));
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Model(format!("single-slope gain must be positive, got {a}")));
    }
    PathLossModel::new(
        vec![PathSegment {
            d_lo: 0.0,
            d_hi: f64::INFINITY,
            a_los: a,
            a_nlos: a,
            alpha_los: alpha,
            alpha_nlos: alpha,
        }],
        LosProbability::Never,
    )
}

/// Single-slope model with the Case 1 NLoS law.
pub fn build_single_slope_default() -> PathLossModel {
    build_single_slope(CASE1_ALPHA_NLOS, CASE1_A_NLOS).expect("default single slope is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn case1_reference_gains() {
        let m = build_case1();
        assert_relative_eq!(m.loss(1.0, LinkType::Los).unwrap(), 10f64.powf(-10.38), max_relative = 1e-14);
        assert_relative_eq!(m.loss(1.0, LinkType::Nlos).unwrap(), 10f64.powf(-14.54), max_relative = 1e-14);
        assert_eq!(m.segments().len(), 2);
        assert_eq!(m.segments()[0].a_los, m.segments()[1].a_los);
        assert!(m.loss(0.0, LinkType::Los).is_err());
        assert!(m.los_prob(-1.0).is_err());
    }

    #[test]
    fn los_probability_values() {
        let m = build_case1();
        assert_relative_eq!(m.los_prob(0.15).unwrap(), 0.5, max_relative = 1e-15);
        assert_eq!(m.los_prob(0.4).unwrap(), 0.0);
        let s = build_single_slope_default();
        assert_eq!(s.los_prob(0.01).unwrap(), 0.0);
        assert!(s.is_single_slope());
    }

    #[test]
    fn case2_branch_jump() {
        let m = build_case2();
        let d1 = CASE2_R1 / std::f64::consts::LN_10;
        let below = 1.0 - 5.0 * (-std::f64::consts::LN_10).exp();
        let above = 5.0 * (-d1 / CASE2_R2).exp();
        assert_relative_eq!(m.los_prob(d1).unwrap(), below, max_relative = 1e-12);
        assert_relative_eq!(below, 0.5, max_relative = 1e-12);
        assert!((above - 0.521).abs() < 3e-3);
        let jump = m.los_probability().jump();
        assert_relative_eq!(jump, above - below, max_relative = 1e-12);
        assert!((jump - 0.021).abs() < 3e-3, "jump {jump}");
        assert_relative_eq!(m.los_prob(d1 * (1.0 + 1e-12)).unwrap(), above, max_relative = 1e-9);
    }

    #[test]
    fn equivalent_distance_examples() {
        let m = build_case1();
        let r1 = m.equiv_nlos_distance(0.1).unwrap();
        let closed = (CASE1_A_NLOS / CASE1_A_LOS).powf(1.0 / 3.75) * 0.1f64.powf(2.09 / 3.75);
        assert_relative_eq!(r1, closed, max_relative = 1e-14);
        assert!((r1 - 0.0215).abs() < 1e-4);
        assert_relative_eq!(m.equiv_los_distance(r1).unwrap(), 0.1, max_relative = 1e-12);
        let s = build_single_slope_default();
        assert_eq!(s.equiv_nlos_distance(0.123).unwrap(), 0.123);
        assert_eq!(s.equiv_los_distance(0.123).unwrap(), 0.123);
    }

    #[test]
    fn bisection_fallback_agrees_with_closed_form() {
        let m = build_case1();
        // Split the uniform model so only the generic solver can be used.
        let mut segs = m.segments().to_vec();
        segs[1].a_los *= 1.0 + 1e-15;
        let g = PathLossModel::new(segs, *m.los_probability()).unwrap();
        assert!(g.power_law(LinkType::Los).is_none());
        for r in [0.02, 0.1, 0.5, 3.0] {
            assert_relative_eq!(g.r1(r).unwrap(), m.r1(r).unwrap(), max_relative = 1e-9);
            assert_relative_eq!(g.r2(r).unwrap(), m.r2(r).unwrap(), max_relative = 1e-9);
        }
    }

    #[test]
    fn construction_rejects_bad_models() {
        assert!(build_single_slope(2.0, 1e-14).is_err());
        assert!(build_single_slope(3.0, 0.0).is_err());
        let seg = PathSegment {
            d_lo: 0.0,
            d_hi: f64::INFINITY,
            a_los: 1e-15,
            a_nlos: 1e-14,
            alpha_los: 3.0,
            alpha_nlos: 3.0,
        };
        assert!(PathLossModel::new(vec![seg], LosProbability::Never).is_err());
        let ok = PathSegment {
            a_los: 1e-14,
            a_nlos: 1e-15,
            ..seg
        };
        let gap = vec![
            PathSegment { d_hi: 1.0, ..ok },
            PathSegment { d_lo: 2.0, ..ok },
        ];
        assert!(PathLossModel::new(gap, LosProbability::Never).is_err());
        assert!(PathLossModel::new(vec![ok], LosProbability::Linear { cutoff: -1.0 }).is_err());
    }

    #[test]
    fn los_moment_matches_quadrature() {
        for m in [build_case1(), build_case2()] {
            for r in [0.01, 0.05, 0.0677, 0.2, 0.3, 0.7, 2.0] {
                let mut pts = vec![0.0];
                pts.extend(m.breakpoints().into_iter().filter(|&p| p < r));
                pts.push(r);
                let q = quadrature::integrate_points(|u| m.los_prob_unchecked(u) * u, &pts, Tolerance::new(1e-15, 1e-13))
                    .unwrap()
                    .value;
                assert_relative_eq!(m.los_probability().moment(r), q, max_relative = 1e-10);
            }
        }
        assert_relative_eq!(build_case1().los_probability().total_moment(), 0.015, max_relative = 1e-14);
    }

    proptest! {
        #[test]
        fn gains_decrease_and_los_dominates(r in 1e-3f64..20.0, k in 1.0001f64..3.0) {
            for m in [build_case1(), build_case2(), build_single_slope_default()] {
                for link in [LinkType::Los, LinkType::Nlos] {
                    prop_assert!(m.gain(r * k, link) < m.gain(r, link));
                }
                if r >= DOMINANCE_FLOOR_KM {
                    prop_assert!(m.gain(r, LinkType::Los) >= m.gain(r, LinkType::Nlos));
                }
            }
        }

        #[test]
        fn equivalent_distances_invert(r in 1e-2f64..10.0) {
            for m in [build_case1(), build_case2()] {
                let r1 = m.equiv_nlos_distance(r).unwrap();
                let r2 = m.equiv_los_distance(r).unwrap();
                prop_assert!(r1 < r && r2 > r);
                prop_assert!((m.equiv_los_distance(r1).unwrap() / r - 1.0).abs() < 1e-9);
                prop_assert!((m.equiv_nlos_distance(r2).unwrap() / r - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn los_probability_bounded_and_monotone(r in 1e-4f64..5.0, k in 1.0f64..4.0) {
            for m in [build_case1(), build_single_slope_default()] {
                let (a, b) = (m.los_prob(r).unwrap(), m.los_prob(r * k).unwrap());
                prop_assert!((0.0..=1.0).contains(&a));
                prop_assert!(b <= a);
            }
            let p = build_case2().los_prob(r).unwrap();
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }
}
