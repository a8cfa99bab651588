//! Analytic and Monte Carlo evaluation of dense small-cell networks whose
//! base stations go idle when no user is attached.
//!
//! The analytic side covers coverage probability under LoS/NLoS path loss,
//! the active base-station density and its bounds, area spectral efficiency
//! and energy efficiency. The [`simulator`] module is an independent Monte
//! Carlo check of all of them.

pub mod active_density;
pub mod association;
pub mod coverage;
pub mod energy;
pub mod error;
pub mod pathloss;
pub mod quadrature;
pub mod simulator;
pub mod units;

pub use error::{Error, Result};
pub use pathloss::{
    build_case1, build_case2, build_single_slope, build_single_slope_default, LinkType, LosProbability,
    PathLossModel, PathSegment,
};
pub use association::{AssociationDensity, AssociationTable};
pub use coverage::{CoverageEvaluator, CoverageQuery, NetworkParams, Precision, UeDensity};
pub use active_density::{ActiveDensityReport, QStarFit};
pub use energy::{EnergyEfficiency, ImcMode, PowerProfile};
pub use simulator::{SimConfig, SimStats};
