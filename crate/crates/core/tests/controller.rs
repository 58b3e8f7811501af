use swarm_coverage::controller::*;
use swarm_coverage::statistics::{estimate_error_distribution, mean, settling_analysis};
use swarm_coverage::*;

#[test]
fn uniform_walkers_forget_a_corner_start() {
    let d = Domain::new(48.0, 70.0).unwrap();
    let rho = TargetDensity::uniform(d);
    let n = 100_000;
    let settings = WalkerSettings {
        snapshots: 2,
        steps_per_snapshot: 4000,
        seed: 8,
        init: WalkerInit::Corner,
        ..Default::default()
    };
    let (traj, stats) = run_walkers_with_stats(&rho, n, 2.0, Kernel::Gaussian, &settings).unwrap();
    assert_eq!(stats.accepted + stats.outside, stats.proposals);
    let mut counts = [0usize; 16];
    for p in &traj.snapshots[1] {
        let i = ((p.x / 12.0) as usize).min(3);
        let j = ((p.y / 17.5) as usize).min(3);
        counts[4 * j + i] += 1;
    }
    let expected = n as f64 / 16.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // chi-square 0.99 quantile with 15 degrees of freedom
    assert!(chi2 < 30.57791416689249, "chi2 = {chi2}, {counts:?}");
}

#[test]
fn fixed_seed_reproduces_the_trajectory() {
    let rho = TargetDensity::standard_ring();
    let settings = WalkerSettings { snapshots: 20, seed: 9, ..Default::default() };
    let a = run_walkers(&rho, 50, 2.0, Kernel::Gaussian, &settings).unwrap();
    let b = run_walkers(&rho, 50, 2.0, Kernel::Gaussian, &settings).unwrap();
    assert_eq!(a, b);
    let c = run_walkers(&rho, 50, 2.0, Kernel::Gaussian, &WalkerSettings { seed: 10, ..settings }).unwrap();
    assert_ne!(a, c);
}

#[test]
fn corner_start_settles() {
    let rho = TargetDensity::standard_ring();
    let rule = QuadratureRule::default_for(*rho.domain(), 2.0).unwrap();
    let settings = WalkerSettings {
        snapshots: 150,
        steps_per_snapshot: 20,
        seed: 11,
        init: WalkerInit::Corner,
        ..Default::default()
    };
    let traj = run_walkers(&rho, 200, 2.0, Kernel::Gaussian, &settings).unwrap();
    let series = traj.error_series(&rho, &rule, BlobNormalization::Domain).unwrap();
    let (ts, es): (Vec<f64>, Vec<f64>) = series.into_iter().unzip();
    assert!(es[0] > 1.9);
    let a = settling_analysis(&ts, &es).unwrap();
    assert!(!a.degenerate && a.tau > 0.0);
    assert!(a.t_s.is_finite() && a.t_s < ts[ts.len() - 1]);
    assert!(a.e_q3 < 0.7, "{}", a.e_q3);
}

#[test]
fn stationary_series_matches_sampling_distribution() {
    let rho = TargetDensity::standard_ring();
    let rule = QuadratureRule::default_for(*rho.domain(), 2.0).unwrap();
    let dist = estimate_error_distribution(&rho, 200, 2.0, Kernel::Gaussian, 200, &rule, 12).unwrap();
    let start = statistics::sample_positions(&rho, 200, 13).unwrap();
    let settings = WalkerSettings {
        snapshots: 100,
        steps_per_snapshot: 20,
        seed: 14,
        init: WalkerInit::Given(start),
        ..Default::default()
    };
    let traj = run_walkers(&rho, 200, 2.0, Kernel::Gaussian, &settings).unwrap();
    let es: Vec<f64> = traj
        .error_series(&rho, &rule, BlobNormalization::Count)
        .unwrap()
        .into_iter()
        .map(|p| p.1)
        .collect();
    let m = mean(&es);
    assert!((m - dist.fit.mu).abs() < 3.0 * dist.fit.sigma, "{m} vs {} +- {}", dist.fit.mu, dist.fit.sigma);
}
