//! Small-scale fading, shadowing and per-link hashing.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::units::db_to_linear;

/// Small-scale fading on the power gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fading {
    /// `h ~ Exp(1)`.
    Rayleigh,
    /// Unit-mean Rician with `K[dB] = 13 − 0.03·d` for a link of `d` metres.
    RicianDistanceDependent,
}

/// Rician K factor (linear) for a link of `r` km.
pub fn rician_k(r: f64) -> f64 {
    db_to_linear(13.0 - 0.03 * r * 1e3)
}

impl Fading {
    pub fn sample<R: Rng + ?Sized>(self, r: f64, rng: &mut R) -> f64 {
        match self {
            Fading::Rayleigh => Exp1.sample(rng),
            Fading::RicianDistanceDependent => {
                let k = rician_k(r);
                let los = (k / (k + 1.0)).sqrt();
                let s = (0.5 / (k + 1.0)).sqrt();
                let x: f64 = StandardNormal.sample(rng);
                let y: f64 = StandardNormal.sample(rng);
                (los + s * x).powi(2) + (s * y).powi(2)
            }
        }
    }
}

/// Log-normal shadowing `σ(√τ·Z_ue + √(1−τ)·Z_bs)` in dB, so that links
/// sharing a UE have correlation `τ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Shadowing {
    pub sigma_db: f64,
    pub correlation: f64,
}

impl Shadowing {
    /// Linear multiplier of the per-BS component for standard normal `z`.
    pub fn bs_factor(&self, z: f64) -> f64 {
        db_to_linear(self.sigma_db * (1.0 - self.correlation).sqrt() * z)
    }

    /// Linear multiplier of the per-UE component for standard normal `z`.
    pub fn ue_factor(&self, z: f64) -> f64 {
        db_to_linear(self.sigma_db * self.correlation.sqrt() * z)
    }
}

#[inline]
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Key shared by every link of one trial.
#[inline]
pub fn trial_key(seed: u64, trial: u64) -> u64 {
    splitmix(splitmix(seed) ^ trial.wrapping_mul(0xd605_bbb5_8c8a_bbcb))
}

/// Uniform `[0, 1)` variate fixed for the pair `(ue, bs)` within a trial.
#[inline]
pub fn link_uniform(key: u64, ue: u32, bs: u32) -> f64 {
    let h = splitmix(key ^ (((ue as u64) << 32) | bs as u64));
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rician_k_example() {
        assert!((rician_k(0.1) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn fading_has_unit_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (fading, r) in [
            (Fading::Rayleigh, 0.1),
            (Fading::RicianDistanceDependent, 0.05),
            (Fading::RicianDistanceDependent, 0.6),
        ] {
            let n = 200_000;
            let m = (0..n).map(|_| fading.sample(r, &mut rng)).sum::<f64>() / n as f64;
            assert!((m - 1.0).abs() < 0.01, "{fading:?} {m}");
        }
        // Strong LoS component concentrates the gain.
        let n = 100_000;
        let var = (0..n)
            .map(|_| (Fading::RicianDistanceDependent.sample(0.01, &mut rng) - 1.0).powi(2))
            .sum::<f64>()
            / n as f64;
        assert!(var < 0.2, "{var}");
    }

    #[test]
    fn link_hash_is_uniform_and_stable() {
        let key = trial_key(7, 3);
        assert_eq!(link_uniform(key, 4, 9), link_uniform(trial_key(7, 3), 4, 9));
        assert_ne!(link_uniform(key, 4, 9), link_uniform(key, 9, 4));
        assert_ne!(trial_key(7, 3), trial_key(7, 4));
        let n = 100_000u32;
        let mut bins = [0u32; 10];
        for i in 0..n {
            bins[(link_uniform(key, i, i / 7) * 10.0) as usize] += 1;
        }
        for b in bins {
            assert!((b as f64 - 10_000.0).abs() < 500.0, "{bins:?}");
        }
    }

    #[test]
    fn shadowing_split_preserves_sigma() {
        let s = Shadowing {
            sigma_db: 10.0,
            correlation: 0.5,
        };
        let total_db = 10.0 * (s.bs_factor(1.0) * s.ue_factor(1.0)).log10();
        assert!((total_db - 10.0 * (0.5f64.sqrt() * 2.0)).abs() < 1e-9);
    }
}
