//! Reference stochastic controller: independent Metropolis random walkers
//! whose stationary density is the target.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::density::{Kernel, Point, TargetDensity};
use crate::error::{Error, Result};
use crate::error_metric::Trajectory;
use crate::rng::{stream, Purpose};

#[derive(Debug, Clone, PartialEq)]
pub enum WalkerInit {
    Uniform,
    /// Every robot starts at the origin corner.
    Corner,
    Given(Vec<Point>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkerSettings {
    /// Standard deviation of each proposal coordinate (inches).
    pub sigma_step: f64,
    pub steps_per_snapshot: usize,
    /// Number of recorded snapshots, the initial placement included.
    pub snapshots: usize,
    /// Simulated seconds per step.
    pub time_per_step: f64,
    pub seed: u64,
    pub init: WalkerInit,
}

impl Default for WalkerSettings {
    fn default() -> Self {
        WalkerSettings {
            sigma_step: 2.0,
            steps_per_snapshot: 10,
            snapshots: 100,
            time_per_step: 1.0,
            seed: 0,
            init: WalkerInit::Uniform,
        }
    }
}

impl WalkerSettings {
    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.sigma_step > 0.0 && self.sigma_step.is_finite()) {
            return Err(Error::param("sigma_step must be positive"));
        }
        if self.snapshots < 2 {
            return Err(Error::param("need at least two snapshots"));
        }
        if self.steps_per_snapshot == 0 {
            return Err(Error::param("steps_per_snapshot must be at least 1"));
        }
        if !(self.time_per_step > 0.0) {
            return Err(Error::param("time_per_step must be positive"));
        }
        if let WalkerInit::Given(p) = &self.init {
            if p.len() != n {
                return Err(Error::param(format!("{} initial positions given for {n} robots", p.len())));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WalkerStats {
    pub proposals: u64,
    pub accepted: u64,
    pub outside: u64,
}

impl WalkerStats {
    pub fn acceptance(&self) -> f64 {
        self.accepted as f64 / self.proposals.max(1) as f64
    }
}

/// Runs `n` walkers and records a trajectory.
pub fn run_walkers(
    rho: &TargetDensity,
    n: usize,
    delta: f64,
    kernel: Kernel,
    settings: &WalkerSettings,
) -> Result<Trajectory> {
    run_walkers_with_stats(rho, n, delta, kernel, settings).map(|(t, _)| t)
}

/// As [`run_walkers`], also returning proposal counts summed over robots.
pub fn run_walkers_with_stats(
    rho: &TargetDensity,
    n: usize,
    delta: f64,
    kernel: Kernel,
    settings: &WalkerSettings,
) -> Result<(Trajectory, WalkerStats)> {
    if n == 0 {
        return Err(Error::param("need at least one robot"));
    }
    settings.validate(n)?;
    let domain = *rho.domain();
    if let WalkerInit::Given(p) = &settings.init {
        if let Some(q) = p.iter().find(|q| !domain.contains(**q)) {
            return Err(Error::param(format!("initial robot at ({}, {}) is outside the domain", q.x, q.y)));
        }
    }
    let m = settings.snapshots;

    // one path per robot, each on its own stream
    let paths: Vec<(Vec<Point>, WalkerStats)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(settings.seed, Purpose::Walker, i as u64);
            let mut x = match &settings.init {
                WalkerInit::Uniform => Point::new(
                    rng.random::<f64>() * domain.width,
                    rng.random::<f64>() * domain.height,
                ),
                WalkerInit::Corner => Point::new(0.0, 0.0),
                WalkerInit::Given(p) => p[i],
            };
            let mut fx = rho.value(x);
            let mut stats = WalkerStats::default();
            let mut path = Vec::with_capacity(m);
            path.push(x);
            for _ in 1..m {
                for _ in 0..settings.steps_per_snapshot {
                    let dx: f64 = rng.sample(StandardNormal);
                    let dy: f64 = rng.sample(StandardNormal);
                    let u: f64 = rng.random();
                    stats.proposals += 1;
                    let y = Point::new(x.x + settings.sigma_step * dx, x.y + settings.sigma_step * dy);
                    if !domain.contains(y) {
                        stats.outside += 1;
                        continue;
                    }
                    let fy = rho.value(y);
                    if u * fx < fy {
                        x = y;
                        fx = fy;
                        stats.accepted += 1;
                    }
                }
                path.push(x);
            }
            (path, stats)
        })
        .collect();

    let mut stats = WalkerStats::default();
    for (_, s) in &paths {
        stats.proposals += s.proposals;
        stats.accepted += s.accepted;
        stats.outside += s.outside;
    }
    let dt = settings.time_per_step * settings.steps_per_snapshot as f64;
    let times: Vec<f64> = (0..m).map(|j| j as f64 * dt).collect();
    let snapshots: Vec<Vec<Point>> = (0..m).map(|j| paths.iter().map(|(p, _)| p[j]).collect()).collect();
    Ok((Trajectory::new(times, snapshots, delta, kernel)?, stats))
}
