//! One drop of BSs and UEs, with association and muting.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use super::channel::{link_uniform, trial_key};
use super::geometry::{torus_distance, Grid};
use super::SimConfig;
use crate::coverage::UeDensity;
use crate::pathloss::{LinkType, PathLossModel};

/// Identifier of the typical UE in per-link hashing.
pub const TYPICAL_UE: u32 = u32::MAX;

const UNRESOLVED: u32 = u32::MAX;
/// UEs inspected around a BS before falling back to full association.
const NEIGHBOUR_CHECKS: usize = 12;
const POINTS_PER_CELL: f64 = 2.0;

/// A realization on the torus `[0, side)²`.
///
/// LoS flags are not stored: each UE–BS pair owns a fixed uniform variate
/// derived from the seed, trial and both indices, so a flag reads the same
/// wherever it is used within the trial.
#[derive(Debug, Clone)]
pub struct Realization {
    pub trial: u64,
    pub side: f64,
    pub bs_positions: Vec<[f64; 2]>,
    pub ue_positions: Vec<[f64; 2]>,
    /// Serving BS of every UE; empty until [`associate`] runs.
    pub associations: Vec<u32>,
    /// Indices of active BSs in increasing order.
    pub active_set: Vec<u32>,
    pub(crate) active: Vec<bool>,
    pub(crate) key: u64,
    /// Natural log of the per-BS shadowing factors, empty without shadowing.
    pub(crate) bs_log_shadow: Vec<f64>,
    /// `(ln A, α)` for LoS and NLoS when the model is one power law.
    power_laws: Option<[(f64, f64); 2]>,
    pub(crate) all_active: bool,
    bs_grid: Grid,
    ue_grid: Grid,
}

/// Best-server candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Server {
    pub bs: u32,
    pub distance: f64,
    pub link: LinkType,
    /// Natural log of the path gain including per-BS shadowing.
    pub log_gain: f64,
}

impl Server {
    pub fn gain(&self) -> f64 {
        self.log_gain.exp()
    }

    fn beats(&self, other: &Server) -> bool {
        self.log_gain > other.log_gain
            || (self.log_gain == other.log_gain
                && (self.distance < other.distance || (self.distance == other.distance && self.bs < other.bs)))
    }
}

fn draw_points(rng: &mut ChaCha8Rng, mean: f64, side: f64) -> Vec<[f64; 2]> {
    let n = if mean > 0.0 {
        Poisson::new(mean).map(|p| p.sample(rng) as usize).unwrap_or(0)
    } else {
        0
    };
    (0..n)
        .map(|_| [rng.random::<f64>() * side, rng.random::<f64>() * side])
        .collect()
}

/// Draws BSs and UEs for `trial`. Deterministic in `(cfg.seed, trial)`.
pub fn generate_realization(cfg: &SimConfig, trial: u64) -> Realization {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(trial);
    let side = cfg.region_side;
    let area = side * side;
    let bs_positions = draw_points(&mut rng, cfg.lambda * area, side);
    let ue_positions = match cfg.rho {
        UeDensity::Finite(rho) => draw_points(&mut rng, rho * area, side),
        UeDensity::Infinite => Vec::new(),
    };
    let bs_log_shadow = match cfg.shadowing {
        Some(s) => bs_positions
            .iter()
            .map(|_| s.bs_factor(StandardNormal.sample(&mut rng)).ln())
            .collect(),
        None => Vec::new(),
    };
    let bs_grid = Grid::build(&bs_positions, side, POINTS_PER_CELL);
    let ue_grid = Grid::build(&ue_positions, side, POINTS_PER_CELL);
    Realization {
        trial,
        side,
        active: Vec::new(),
        active_set: Vec::new(),
        associations: Vec::new(),
        key: trial_key(cfg.seed, trial),
        bs_log_shadow,
        power_laws: cfg.model.power_law(LinkType::Los).zip(cfg.model.power_law(LinkType::Nlos)).map(|(l, n)| [(l.0.ln(), l.1), (n.0.ln(), n.1)]),
        all_active: cfg.all_active || cfg.rho.is_infinite(),
        bs_grid,
        ue_grid,
        bs_positions,
        ue_positions,
    }
}

/// Upper bound on the path gain of any link at distance `≥ d`.
pub(crate) struct GainBound<'a> {
    model: &'a PathLossModel,
    los_reach: f64,
    starts: Vec<f64>,
    shadow_max: f64,
}

impl<'a> GainBound<'a> {
    pub(crate) fn new(model: &'a PathLossModel, bs_log_shadow: &[f64]) -> Self {
        let starts = model.segments().iter().skip(1).map(|s| s.d_lo).collect();
        GainBound {
            model,
            los_reach: model.los_probability().support().unwrap_or(f64::INFINITY),
            starts,
            shadow_max: bs_log_shadow.iter().copied().fold(0.0f64, f64::max).exp(),
        }
    }

    fn at(&self, d: f64) -> f64 {
        let g = |r: f64| {
            let nlos = self.model.gain(r, LinkType::Nlos);
            if r < self.los_reach {
                nlos.max(self.model.gain(r, LinkType::Los))
            } else {
                nlos
            }
        };
        let mut best = g(d);
        for &s in &self.starts {
            if s > d {
                best = best.max(g(s));
            }
        }
        best * self.shadow_max
    }
}

impl Realization {
    pub fn bs_count(&self) -> usize {
        self.bs_positions.len()
    }

    pub fn ue_count(&self) -> usize {
        self.ue_positions.len()
    }

    pub fn distance(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        torus_distance(a, b, self.side)
    }

    /// Link type of UE `ue` at `p` towards BS `bs`.
    pub fn link_at(&self, model: &PathLossModel, p: [f64; 2], ue: u32, bs: u32) -> LinkType {
        let r = self.distance(p, self.bs_positions[bs as usize]);
        if link_uniform(self.key, ue, bs) < model.los_prob_unchecked(r) {
            LinkType::Los
        } else {
            LinkType::Nlos
        }
    }

    /// Link type between stored UE `ue` and BS `bs`.
    pub fn link(&self, model: &PathLossModel, ue: u32, bs: u32) -> LinkType {
        self.link_at(model, self.ue_positions[ue as usize], ue, bs)
    }

    fn log_shadow(&self, bs: u32) -> f64 {
        self.bs_log_shadow.get(bs as usize).copied().unwrap_or(0.0)
    }

    pub(crate) fn candidate(&self, model: &PathLossModel, p: [f64; 2], ue: u32, bs: u32) -> Server {
        let r = self.distance(p, self.bs_positions[bs as usize]);
        let link = if link_uniform(self.key, ue, bs) < model.los_prob_unchecked(r) {
            LinkType::Los
        } else {
            LinkType::Nlos
        };
        let log_path = match self.power_laws {
            Some(laws) => {
                let (ln_a, alpha) = laws[(link == LinkType::Nlos) as usize];
                ln_a - alpha * r.ln()
            }
            None => model.gain(r, link).ln(),
        };
        Server {
            bs,
            distance: r,
            link,
            log_gain: log_path + self.log_shadow(bs),
        }
    }

    /// Largest-gain BS for a UE at `p`, searching outward ring by ring.
    pub(crate) fn best_server(&self, model: &PathLossModel, bound: &GainBound, p: [f64; 2], ue: u32) -> Option<Server> {
        let grid = &self.bs_grid;
        let centre = grid.cell_of(p);
        let mut best: Option<Server> = None;
        for k in 0..=grid.max_ring() {
            if k >= 2 {
                if let Some(b) = best {
                    if bound.at((k - 1) as f64 * grid.cell_size()).ln() < b.log_gain {
                        break;
                    }
                }
            }
            grid.for_ring(centre, k, |i| {
                let c = self.candidate(model, p, ue, i);
                if best.is_none_or(|b| c.beats(&b)) {
                    best = Some(c);
                }
            });
        }
        best
    }

    /// Exhaustive version of [`Self::best_server`].
    #[cfg(test)]
    pub(crate) fn best_server_scan(&self, model: &PathLossModel, p: [f64; 2], ue: u32) -> Option<Server> {
        let mut best: Option<Server> = None;
        for i in 0..self.bs_positions.len() as u32 {
            let c = self.candidate(model, p, ue, i);
            if best.is_none_or(|b| c.beats(&b)) {
                best = Some(c);
            }
        }
        best
    }

    fn finish_active(&mut self, active: Vec<bool>) {
        self.active_set = (0..active.len() as u32).filter(|&b| active[b as usize]).collect();
        self.active = active;
    }

    /// Determines the active set without necessarily associating every UE.
    ///
    /// Each BS first looks for a nearby UE it serves; only if some BS finds
    /// none are the remaining UEs associated.
    #[allow(clippy::needless_range_loop)]
    pub(crate) fn mark_active(&mut self, model: &PathLossModel) {
        if self.all_active {
            self.finish_active(vec![true; self.bs_count()]);
            return;
        }
        let bound = GainBound::new(model, &self.bs_log_shadow);
        let nb = self.bs_count();
        let nu = self.ue_count();
        let mut server = vec![UNRESOLVED; nu];
        let mut active = vec![false; nb];
        let resolve = |u: usize, server: &mut Vec<u32>| {
            if server[u] == UNRESOLVED {
                server[u] = self
                    .best_server(model, &bound, self.ue_positions[u], u as u32)
                    .map_or(UNRESOLVED, |s| s.bs);
            }
            server[u]
        };
        let mut pending = nu <= nb;
        if !pending {
            let grid = &self.ue_grid;
            let mut near: Vec<(f64, u32)> = Vec::new();
            for b in 0..nb {
                near.clear();
                let p = self.bs_positions[b];
                let centre = grid.cell_of(p);
                for k in 0..=grid.max_ring().min(2) {
                    grid.for_ring(centre, k, |u| near.push((self.distance(p, self.ue_positions[u as usize]), u)));
                }
                near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                for &(_, u) in near.iter().take(NEIGHBOUR_CHECKS) {
                    if resolve(u as usize, &mut server) == b as u32 {
                        active[b] = true;
                        break;
                    }
                }
                if !active[b] {
                    pending = true;
                    break;
                }
            }
        }
        if pending {
            for u in 0..nu {
                let s = resolve(u, &mut server);
                if s != UNRESOLVED {
                    active[s as usize] = true;
                }
            }
        }
        self.finish_active(active);
    }
}

/// Associates every UE with its largest-gain BS and derives the active set.
pub fn associate(real: &mut Realization, model: &PathLossModel) {
    let bound = GainBound::new(model, &real.bs_log_shadow);
    let servers: Vec<u32> = (0..real.ue_count())
        .map(|u| {
            real.best_server(model, &bound, real.ue_positions[u], u as u32)
                .map_or(UNRESOLVED, |s| s.bs)
        })
        .collect();
    let mut active = vec![real.all_active; real.bs_count()];
    for &s in &servers {
        if s != UNRESOLVED {
            active[s as usize] = true;
        }
    }
    real.associations = servers;
    real.finish_active(active);
}
