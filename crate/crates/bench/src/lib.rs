//! Shared fixtures for the Criterion benchmarks under `benches/`.

use scnsim_core::units::dbm_to_mw;
use scnsim_core::{NetworkParams, UeDensity};

/// 24 dBm, −95 dBm noise, 10 MHz.
pub fn params(lambda: f64, rho: UeDensity) -> NetworkParams {
    NetworkParams {
        lambda,
        rho,
        tx_power: dbm_to_mw(24.0),
        noise_power: dbm_to_mw(-95.0),
        bandwidth: 10e6,
    }
}
