use super::*;
use crate::pathloss::{build_case1, build_case2, build_single_slope};
use crate::units::dbm_to_mw;

fn cfg(model: PathLossModel, lambda: f64, rho: UeDensity, side: f64) -> SimConfig {
    SimConfig {
        model,
        lambda,
        rho,
        region_side: side,
        gamma_grid: vec![1.0],
        gamma0: 1.0,
        tx_power: dbm_to_mw(24.0),
        noise_power: dbm_to_mw(-95.0),
        fading: Fading::Rayleigh,
        shadowing: None,
        trials: 200,
        seed: 11,
        all_active: rho.is_infinite(),
    }
}

#[test]
fn realizations_are_reproducible() {
    let c = cfg(build_case1(), 50.0, UeDensity::Finite(100.0), 1.0);
    let a = generate_realization(&c, 4);
    let b = generate_realization(&c, 4);
    assert_eq!(a.bs_positions, b.bs_positions);
    assert_eq!(a.ue_positions, b.ue_positions);
    assert_eq!(a.link(&c.model, 0, 0), b.link(&c.model, 0, 0));
    assert_ne!(generate_realization(&c, 5).bs_positions, a.bs_positions);
    assert_eq!(simulate_trial(&c, 9), simulate_trial(&c, 9));
}

#[test]
fn bs_count_is_poisson() {
    let c = cfg(build_case1(), 400.0, UeDensity::Finite(0.0), 1.0);
    let n = 10_000;
    let counts: Vec<f64> = (0..n).map(|t| generate_realization(&c, t).bs_count() as f64).collect();
    let mean = counts.iter().sum::<f64>() / n as f64;
    let var = counts.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    assert!((mean - 400.0).abs() < 3.0 * (400.0 / n as f64).sqrt(), "{mean}");
    assert!((var / 400.0 - 1.0).abs() < 0.1, "{var}");
}

#[test]
fn los_fraction_follows_the_model() {
    let c = cfg(build_case1(), 300.0, UeDensity::Finite(300.0), 1.0);
    let (mut los, mut total) = (0usize, 0usize);
    for t in 0..40 {
        let r = generate_realization(&c, t);
        for u in 0..r.ue_count() {
            for b in 0..r.bs_count() {
                let d = r.distance(r.ue_positions[u], r.bs_positions[b]);
                if (0.14..0.16).contains(&d) {
                    total += 1;
                    los += (r.link(&c.model, u as u32, b as u32) == LinkType::Los) as usize;
                }
            }
        }
    }
    let p = los as f64 / total as f64;
    assert!(total > 50_000);
    assert!((p - 0.5).abs() < 3.0 * (0.25 / total as f64).sqrt() + 0.01, "{p}");
}

#[test]
fn ring_search_matches_exhaustive_scan() {
    let shadow = Some(Shadowing {
        sigma_db: 10.0,
        correlation: 0.5,
    });
    let cases = [
        (build_case1(), 30.0, None),
        (build_case1(), 3000.0, None),
        (build_case2(), 200.0, None),
        (build_case1(), 100.0, shadow),
        (build_single_slope(4.0, 1e-14).unwrap(), 80.0, None),
    ];
    for (model, lambda, shadowing) in cases {
        let mut c = cfg(model, lambda, UeDensity::Finite(50.0), 0.8);
        c.shadowing = shadowing;
        for t in 0..20 {
            let r = generate_realization(&c, t);
            let bound = GainBound::new(&c.model, &r.bs_log_shadow);
            for u in 0..r.ue_count() {
                let p = r.ue_positions[u];
                assert_eq!(
                    r.best_server(&c.model, &bound, p, u as u32),
                    r.best_server_scan(&c.model, p, u as u32),
                    "λ = {lambda}, trial {t}, ue {u}"
                );
            }
        }
    }
}

#[test]
fn fast_activity_matches_full_association() {
    for (lambda, rho) in [(5.0, 600.0), (50.0, 300.0), (300.0, 300.0), (2000.0, 100.0)] {
        let c = cfg(build_case1(), lambda, UeDensity::Finite(rho), 1.2);
        for t in 0..10 {
            let mut fast = generate_realization(&c, t);
            fast.mark_active(&c.model);
            let mut full = generate_realization(&c, t);
            associate(&mut full, &c.model);
            assert_eq!(fast.active_set, full.active_set, "λ = {lambda}, ρ = {rho}");
            assert!(full.active_set.len() <= full.bs_count().min(full.ue_count()));
            for (u, &s) in full.associations.iter().enumerate() {
                assert!(full.active_set.binary_search(&s).is_ok(), "ue {u}");
            }
        }
    }
}

#[test]
fn single_slope_associates_to_nearest() {
    let c = cfg(build_single_slope(3.75, 1e-14).unwrap(), 100.0, UeDensity::Finite(200.0), 1.0);
    for t in 0..10 {
        let mut r = generate_realization(&c, t);
        associate(&mut r, &c.model);
        for (u, &s) in r.associations.iter().enumerate() {
            let p = r.ue_positions[u];
            let nearest = (0..r.bs_count())
                .min_by(|&a, &b| {
                    r.distance(p, r.bs_positions[a]).total_cmp(&r.distance(p, r.bs_positions[b]))
                })
                .unwrap();
            assert_eq!(s as usize, nearest);
        }
    }
}

#[test]
fn farther_los_server_occurs() {
    let c = cfg(build_case1(), 100.0, UeDensity::Finite(300.0), 1.0);
    let mut farther = 0;
    for t in 0..10 {
        let mut r = generate_realization(&c, t);
        associate(&mut r, &c.model);
        for (u, &s) in r.associations.iter().enumerate() {
            let p = r.ue_positions[u];
            let d = r.distance(p, r.bs_positions[s as usize]);
            if r.bs_positions.iter().any(|&q| r.distance(p, q) < d) {
                assert_eq!(r.link(&c.model, u as u32, s), LinkType::Los);
                farther += 1;
            }
        }
    }
    assert!(farther > 0);
}

#[test]
fn lone_bs_without_noise_always_covers() {
    let mut c = cfg(build_case1(), 1.0, UeDensity::Infinite, 1.0);
    c.noise_power = 0.0;
    c.gamma_grid = vec![1.0, 1e9];
    let t = (0..500)
        .find(|&t| generate_realization(&c, t).bs_count() == 1)
        .unwrap();
    let s = simulate_trial(&c, t).unwrap();
    assert_eq!(s.sinr, f64::INFINITY);
    let stats = SimStats::from_samples(&c, &[Some(s)]).unwrap();
    assert!(stats.coverage.iter().all(|e| e.mean == 1.0));
    assert!(stats.ase.mean.is_finite());
}

#[test]
fn empty_regions_are_discarded() {
    let c = cfg(build_case1(), 1.0, UeDensity::Finite(10.0), 0.5);
    let samples = run_samples(&SimConfig { trials: 200, ..c.clone() }).unwrap();
    let stats = SimStats::from_samples(&c, &samples).unwrap();
    assert!(stats.trials_discarded > 100);
    assert_eq!(stats.trials_discarded + stats.trials_used, 200);
}

#[test]
fn active_density_limits() {
    let mut c = cfg(build_case1(), 10.0, UeDensity::Finite(300.0), 5.0);
    c.trials = 100;
    let low = run(&c).unwrap().active_density;
    assert!((low.mean - 10.0).abs() < 0.2, "{low:?}");
    let mut c = cfg(build_case1(), 1e4, UeDensity::Finite(300.0), 0.4);
    c.trials = 400;
    let high = run(&c).unwrap().active_density;
    assert!(high.mean > 285.0 && high.mean < 300.0 + high.ci95, "{high:?}");
}

#[test]
fn invalid_configs_are_rejected() {
    let c = cfg(build_case1(), 10.0, UeDensity::Finite(300.0), 1.0);
    assert!(run(&SimConfig { trials: 0, ..c.clone() }).is_err());
    assert!(run(&SimConfig { region_side: 0.0, ..c.clone() }).is_err());
    let bad_tau = SimConfig {
        shadowing: Some(Shadowing {
            sigma_db: 10.0,
            correlation: 1.5,
        }),
        ..c
    };
    assert!(bad_tau.validate().is_err());
}

#[test]
fn ci_shrinks_with_trials() {
    let mut c = cfg(build_case1(), 100.0, UeDensity::Finite(300.0), 1.0);
    c.trials = 2000;
    let a = run(&c).unwrap();
    c.trials = 4000;
    let b = run(&c).unwrap();
    let ratio = b.coverage[0].ci95 / a.coverage[0].ci95;
    assert!((ratio / std::f64::consts::FRAC_1_SQRT_2 - 1.0).abs() < 0.1, "{ratio}");
}

#[test]
fn thread_count_does_not_change_results() {
    let mut c = cfg(build_case1(), 200.0, UeDensity::Finite(300.0), 0.7);
    c.trials = 64;
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let a = one.install(|| run(&c)).unwrap();
    let b = three.install(|| run(&c)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn muting_never_hurts_coverage() {
    // Same BSs, typical UE and fading stream with and without muting.
    let mut c = cfg(build_case1(), 1000.0, UeDensity::Finite(300.0), 0.6);
    c.trials = 300;
    c.gamma_grid = vec![0.1, 1.0, 10.0];
    let imc = run(&c).unwrap();
    c.all_active = true;
    let all = run(&c).unwrap();
    for (a, b) in imc.coverage.iter().zip(&all.coverage) {
        assert!(a.mean >= b.mean - a.ci95, "{a:?} {b:?}");
    }
    assert!(all.active_density.mean > imc.active_density.mean);
}

#[test]
fn default_region_meets_its_targets() {
    let side = default_region_side(&build_case1(), 100.0).unwrap();
    assert!(side * side * 100.0 >= 2000.0 - 1e-9);
    let median = AssociationDensity::new(build_case1(), 100.0).unwrap().median_distance().unwrap();
    assert!(side >= 40.0 * median);
}

#[test]
fn active_density_interval_survives_rare_idling() {
    // Dense UEs, sparse BSs: idle BSs are almost never observed.
    let mut c = cfg(build_case1(), 4.0, UeDensity::Finite(300.0), 3.0);
    c.trials = 500;
    let e = run(&c).unwrap().active_density;
    let ub = crate::active_density::upper_bound(&AssociationDensity::new(build_case1(), 4.0).unwrap(), 300.0).unwrap();
    assert!(e.ci95 >= 3.0 / (500.0 * 9.0) - 1e-15, "{e:?}");
    assert!(e.mean - e.ci95 <= ub, "{e:?} {ub}");
}
