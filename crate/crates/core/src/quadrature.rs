//! Globally adaptive Gauss–Kronrod (G7/K15) integration.
//!
//! Intervals are kept in a max-heap keyed on their error estimate and the
//! worst one is bisected until the summed error meets the tolerance. Finite
//! ranges may carry interior breakpoints; semi-infinite ranges are mapped onto
//! `(0, 1]` with `u = a + L (1 - t) / t`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Requested accuracy: stop once `error <= max(abs, rel * |value|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Tolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Self {
            abs,
            rel,
            max_intervals: 4000,
        }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::new(1e-10, 1e-10)
    }
}

/// Converged integral with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// The subdivision budget ran out before the tolerance was met.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadError {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
    pub nonfinite: bool,
}

impl fmt::Display for QuadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.nonfinite {
            write!(f, "integrand returned a non-finite value")
        } else {
            write!(
                f,
                "quadrature did not converge (estimate {:e}, error {:e}, {} intervals)",
                self.value, self.error, self.intervals
            )
        }
    }
}

impl std::error::Error for QuadError {}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Segment { a, b, value, error }
}

/// Integrates `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Integral, QuadError> {
    integrate_points(f, &[a, b], tol)
}

/// Integrates `f` across consecutive `points`, treating each interior point
/// as a breakpoint. Points must be non-decreasing; empty pieces are skipped.
pub fn integrate_points<F: Fn(f64) -> f64>(
    f: F,
    points: &[f64],
    tol: Tolerance,
) -> Result<Integral, QuadError> {
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for w in points.windows(2) {
        if w[1] > w[0] {
            heap.push(kronrod(&f, w[0], w[1]));
            evaluations += 15;
        }
    }
    let (mut value, mut error) = totals(&heap);
    loop {
        if !value.is_finite() || !error.is_finite() {
            return Err(QuadError {
                value,
                error,
                intervals: heap.len(),
                nonfinite: true,
            });
        }
        if error <= tol.target(value) {
            return Ok(Integral {
                value,
                error,
                evaluations,
            });
        }
        if heap.len() >= tol.max_intervals {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval has collapsed to adjacent floats; keep it as is.
            heap.push(worst);
            break;
        }
        let left = kronrod(&f, worst.a, mid);
        let right = kronrod(&f, mid, worst.b);
        evaluations += 30;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        if heap.len() % 64 == 0 {
            (value, error) = totals(&heap);
        }
    }
    let (value, error) = totals(&heap);
    if error <= tol.target(value) {
        return Ok(Integral {
            value,
            error,
            evaluations,
        });
    }
    Err(QuadError {
        value,
        error,
        intervals: heap.len(),
        nonfinite: false,
    })
}

fn totals(heap: &BinaryHeap<Segment>) -> (f64, f64) {
    heap.iter()
        .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error))
}

/// Integrates `f` over `[a, ∞)`. `scale` should be the distance over which
/// the integrand changes appreciably; it sets the mapping `u = a + scale (1 - t) / t`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    scale: f64,
    tol: Tolerance,
) -> Result<Integral, QuadError> {
    debug_assert!(scale > 0.0);
    let g = |t: f64| {
        if t <= 0.0 {
            return 0.0;
        }
        let u = a + scale * (1.0 - t) / t;
        let v = f(u);
        if v == 0.0 {
            0.0
        } else {
            v * scale / (t * t)
        }
    };
    // Breakpoints in t at u - a = scale * {1/8, 1, 8, 64}.
    let pts = [0.0, 1.0 / 65.0, 1.0 / 9.0, 0.5, 8.0 / 9.0, 1.0];
    integrate_points(g, &pts, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const TIGHT: Tolerance = Tolerance::new(1e-13, 1e-12);

    #[test]
    fn polynomials_are_exact() {
        let r = integrate(|x| 3.0 * x * x - 2.0 * x + 1.0, -1.0, 2.0, TIGHT).unwrap();
        assert_relative_eq!(r.value, 9.0 - 3.0 + 3.0, max_relative = 1e-14);
        assert_eq!(r.evaluations, 15);
    }

    #[test]
    fn oscillatory_and_peaked() {
        let r = integrate(|x: f64| (50.0 * x).sin().powi(2), 0.0, std::f64::consts::PI, TIGHT).unwrap();
        assert_relative_eq!(r.value, std::f64::consts::FRAC_PI_2, max_relative = 1e-11);
        let r = integrate(|x: f64| 1.0 / (1e-4 + x * x), -1.0, 1.0, TIGHT).unwrap();
        assert_relative_eq!(r.value, 2.0 * (1.0 / 1e-2_f64).atan() / 1e-2, max_relative = 1e-11);
    }

    #[test]
    fn endpoint_singularity() {
        let r = integrate(|x: f64| x.ln(), 0.0, 1.0, TIGHT).unwrap();
        assert_relative_eq!(r.value, -1.0, max_relative = 1e-10);
        let r = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, TIGHT).unwrap();
        assert_relative_eq!(r.value, 2.0, max_relative = 1e-10);
    }

    #[test]
    fn breakpoints_handle_kinks() {
        let f = |x: f64| if x < 0.3 { 1.0 - x / 0.3 } else { 0.0 };
        let r = integrate_points(f, &[0.0, 0.3, 2.0], TIGHT).unwrap();
        assert_relative_eq!(r.value, 0.15, max_relative = 1e-13);
    }

    #[test]
    fn semi_infinite() {
        let r = integrate_to_infinity(|x: f64| (-x).exp(), 0.0, 1.0, TIGHT).unwrap();
        assert_relative_eq!(r.value, 1.0, max_relative = 1e-11);
        let r = integrate_to_infinity(|x: f64| 1.0 / (1.0 + x * x), 0.0, 1.0, TIGHT).unwrap();
        assert_relative_eq!(r.value, std::f64::consts::FRAC_PI_2, max_relative = 1e-11);
        let r = integrate_to_infinity(|x: f64| x.powf(-2.75), 0.5, 0.5, TIGHT).unwrap();
        assert_relative_eq!(r.value, 0.5f64.powf(-1.75) / 1.75, max_relative = 1e-10);
        // Gaussian far from the scale guess.
        let r = integrate_to_infinity(|x: f64| (-1000.0 * x * x).exp(), 0.0, 1.0, TIGHT).unwrap();
        assert_relative_eq!(r.value, 0.5 * (std::f64::consts::PI / 1000.0).sqrt(), max_relative = 1e-10);
    }

    #[test]
    fn reports_failure() {
        let tol = Tolerance {
            abs: 1e-14,
            rel: 1e-14,
            max_intervals: 4,
        };
        let e = integrate(|x: f64| (1.0 / x).sin(), 1e-6, 1.0, tol).unwrap_err();
        assert!(e.intervals <= 5 && !e.nonfinite);
        let e = integrate(|_| f64::NAN, 0.0, 1.0, TIGHT).unwrap_err();
        assert!(e.nonfinite);
    }
}
