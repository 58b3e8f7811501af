//! The swarm blob function and the L1 error metric with its variants:
//! cumulative (time-averaged), one-sided, and the partition-based
//! discretization metric used to illustrate why binning is fragile.

mod evaluator;
mod partition;

pub use evaluator::{ErrorGradient, GridEvaluator, BOUND_SLACK};
pub use partition::{discretization_error, pitfall_report, Partition, PitfallRow};

use crate::density::{Domain, Kernel, Point, TargetDensity};
use crate::error::{Error, Result};
use crate::quadrature::{convergence_study, polar_reference, ConvergenceStudy, QuadratureRule, ReferenceValue, RuleKind};

/// How the summed blobs are turned into a density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BlobNormalization {
    /// Divide by the total blob mass that lies inside the domain, so the blob
    /// function integrates to exactly one over the domain.
    #[default]
    Domain,
    /// Divide by the robot count. Blobs near the boundary then lose the mass
    /// that spills outside; this is the kernel density estimator used for the
    /// sampling-distribution benchmark.
    Count,
}

/// Robot positions plus the blob shape placed on each of them.
#[derive(Debug, Clone, PartialEq)]
pub struct SwarmConfig {
    pub positions: Vec<Point>,
    pub delta: f64,
    pub kernel: Kernel,
}

impl SwarmConfig {
    pub fn new(positions: Vec<Point>, delta: f64, kernel: Kernel) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::param("a swarm needs at least one robot"));
        }
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::param(format!("blob radius must be positive, got {delta}")));
        }
        if let Some(p) = positions.iter().find(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::param(format!("non-finite robot position {p:?}")));
        }
        Ok(SwarmConfig {
            positions,
            delta,
            kernel,
        })
    }

    pub fn n(&self) -> usize {
        self.positions.len()
    }

    /// Fails if any robot lies outside `domain`. Positions are never clamped
    /// implicitly; use [`SwarmConfig::clamped`] to do that on purpose.
    pub fn check_in(&self, domain: &Domain) -> Result<()> {
        if let Some((i, p)) = self.positions.iter().enumerate().find(|(_, p)| !domain.contains(**p)) {
            return Err(Error::param(format!(
                "robot {i} at ({}, {}) lies outside the {} x {} domain",
                p.x, p.y, domain.width, domain.height
            )));
        }
        Ok(())
    }

    pub fn clamped(&self, domain: &Domain) -> Self {
        SwarmConfig {
            positions: self.positions.iter().map(|&p| domain.clamp(p)).collect(),
            ..self.clone()
        }
    }
}

/// Time-stamped snapshots of a swarm with a fixed robot count.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<Vec<Point>>,
    pub delta: f64,
    pub kernel: Kernel,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, snapshots: Vec<Vec<Point>>, delta: f64, kernel: Kernel) -> Result<Self> {
        if times.is_empty() || times.len() != snapshots.len() {
            return Err(Error::param("a trajectory needs one snapshot per time, and at least one"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::param("trajectory times must be strictly increasing"));
        }
        let n = snapshots[0].len();
        for (j, s) in snapshots.iter().enumerate() {
            if s.len() != n {
                return Err(Error::param(format!(
                    "snapshot {j} has {} robots, expected {n}",
                    s.len()
                )));
            }
            SwarmConfig::new(s.clone(), delta, kernel)?;
        }
        Ok(Trajectory {
            times,
            snapshots,
            delta,
            kernel,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n(&self) -> usize {
        self.snapshots[0].len()
    }

    pub fn snapshot(&self, j: usize) -> SwarmConfig {
        SwarmConfig {
            positions: self.snapshots[j].clone(),
            delta: self.delta,
            kernel: self.kernel,
        }
    }

    /// Instantaneous error at every snapshot, as `(t, e)` pairs.
    pub fn error_series(
        &self,
        rho: &TargetDensity,
        rule: &QuadratureRule,
        norm: BlobNormalization,
    ) -> Result<Vec<(f64, f64)>> {
        let eval = GridEvaluator::new(rho, rule)?;
        self.snapshots
            .iter()
            .zip(&self.times)
            .map(|(s, &t)| {
                SwarmConfig::new(s.clone(), self.delta, self.kernel)?.check_in(rho.domain())?;
                Ok((t, eval.error(s, self.delta, self.kernel, norm)?))
            })
            .collect()
    }
}

/// Pointwise swarm blob function with robots binned by kernel support, for
/// evaluation off the quadrature grid.
#[derive(Debug, Clone)]
pub struct BlobField {
    positions: Vec<Point>,
    delta: f64,
    kernel: Kernel,
    scale: f64,
    radius: f64,
    bin_size: f64,
    nbx: usize,
    nby: usize,
    bins: Vec<Vec<u32>>,
}

impl BlobField {
    pub fn new(cfg: &SwarmConfig, domain: &Domain, norm: BlobNormalization) -> Self {
        let scale = match norm {
            BlobNormalization::Domain => {
                let mass: f64 = cfg
                    .positions
                    .iter()
                    .map(|&p| cfg.kernel.domain_mass(p, cfg.delta, domain))
                    .sum();
                1.0 / mass
            }
            BlobNormalization::Count => 1.0 / cfg.n() as f64,
        };
        let radius = cfg.kernel.support_radius(cfg.delta);
        let bin_size = radius;
        let nbx = (domain.width / bin_size).ceil().max(1.0) as usize;
        let nby = (domain.height / bin_size).ceil().max(1.0) as usize;
        let mut bins = vec![Vec::new(); nbx * nby];
        for (i, p) in cfg.positions.iter().enumerate() {
            let bx = ((p.x / bin_size) as usize).min(nbx - 1);
            let by = ((p.y / bin_size) as usize).min(nby - 1);
            bins[by * nbx + bx].push(i as u32);
        }
        BlobField {
            positions: cfg.positions.clone(),
            delta: cfg.delta,
            kernel: cfg.kernel,
            scale,
            radius,
            bin_size,
            nbx,
            nby,
            bins,
        }
    }

    pub fn value(&self, z: Point) -> f64 {
        let bx = ((z.x / self.bin_size).max(0.0) as usize).min(self.nbx - 1);
        let by = ((z.y / self.bin_size).max(0.0) as usize).min(self.nby - 1);
        let r2max = self.radius * self.radius;
        let inv_d2 = 1.0 / (self.delta * self.delta);
        let mut sum = 0.0;
        for yb in by.saturating_sub(1)..=(by + 1).min(self.nby - 1) {
            for xb in bx.saturating_sub(1)..=(bx + 1).min(self.nbx - 1) {
                for &i in &self.bins[yb * self.nbx + xb] {
                    let r2 = z.dist2(self.positions[i as usize]);
                    if r2 <= r2max {
                        sum += self.kernel.unit_value(r2 * inv_d2);
                    }
                }
            }
        }
        sum * inv_d2 * self.scale
    }
}

/// Swarm blob function `rho_N^delta(z)` with the domain-mass normalization.
pub fn blob_function(cfg: &SwarmConfig, domain: &Domain, z: Point) -> Result<f64> {
    if !domain.contains(z) {
        return Err(Error::param(format!("evaluation point ({}, {}) is outside the domain", z.x, z.y)));
    }
    Ok(BlobField::new(cfg, domain, BlobNormalization::Domain).value(z))
}

/// L1 error between the swarm blob function and the target.
pub fn error(cfg: &SwarmConfig, rho: &TargetDensity, rule: &QuadratureRule) -> Result<f64> {
    error_with(cfg, rho, rule, BlobNormalization::Domain)
}

pub fn error_with(
    cfg: &SwarmConfig,
    rho: &TargetDensity,
    rule: &QuadratureRule,
    norm: BlobNormalization,
) -> Result<f64> {
    cfg.check_in(rho.domain())?;
    GridEvaluator::new(rho, rule)?.error(&cfg.positions, cfg.delta, cfg.kernel, norm)
}

/// Error of the snapshot-averaged blob function.
pub fn cumulative_error(traj: &Trajectory, rho: &TargetDensity, rule: &QuadratureRule) -> Result<f64> {
    cumulative_error_with(traj, rho, rule, BlobNormalization::Domain)
}

pub fn cumulative_error_with(
    traj: &Trajectory,
    rho: &TargetDensity,
    rule: &QuadratureRule,
    norm: BlobNormalization,
) -> Result<f64> {
    let eval = GridEvaluator::new(rho, rule)?;
    let m = traj.len() as f64;
    let mut avg = vec![0.0; eval.target().len()];
    for s in &traj.snapshots {
        SwarmConfig::new(s.clone(), traj.delta, traj.kernel)?.check_in(rho.domain())?;
        let scale = match norm {
            BlobNormalization::Domain => 1.0 / eval.blob_mass(s, traj.delta, traj.kernel),
            BlobNormalization::Count => 1.0 / s.len() as f64,
        };
        eval.accumulate(s, traj.delta, traj.kernel, scale / m, &mut avg);
    }
    eval.error_of_field(&avg)
}

/// Integral of `|rho_N - rho|` over the region where the swarm under-covers.
pub fn one_sided_error(cfg: &SwarmConfig, rho: &TargetDensity, rule: &QuadratureRule) -> Result<f64> {
    cfg.check_in(rho.domain())?;
    let eval = GridEvaluator::new(rho, rule)?;
    let field = eval.swarm_field(&cfg.positions, cfg.delta, cfg.kernel, BlobNormalization::Domain);
    evaluator::check_bounds(eval.raw_one_sided_of_field(&field), 1.0)
}

/// Like [`error_with`] but also returns the `L2` norm of the difference; used
/// to check the Cauchy-Schwarz bound.
pub fn l1_l2_errors(cfg: &SwarmConfig, rho: &TargetDensity, rule: &QuadratureRule) -> Result<(f64, f64)> {
    cfg.check_in(rho.domain())?;
    let eval = GridEvaluator::new(rho, rule)?;
    let field = eval.swarm_field(&cfg.positions, cfg.delta, cfg.kernel, BlobNormalization::Domain);
    let l1 = eval.error_of_field(&field)?;
    let sq: Vec<f64> = field
        .iter()
        .zip(eval.target())
        .map(|(f, t)| (f - t) * (f - t))
        .collect();
    Ok((l1, rule.integrate_values(&sq)?.sqrt()))
}

/// Convergence of tensor rules on `|rho_N - rho|` for one configuration.
///
/// The reference comes from [`polar_reference`] with panel edges on the
/// target's jump circles; `m_values` are nodes per axis (odd for Simpson).
pub fn metric_convergence_study(
    cfg: &SwarmConfig,
    rho: &TargetDensity,
    rules: &[RuleKind],
    m_values: &[usize],
) -> Result<(ConvergenceStudy, ReferenceValue)> {
    cfg.check_in(rho.domain())?;
    let d = *rho.domain();
    let field = BlobField::new(cfg, &d, BlobNormalization::Domain);
    let f = |z: Point| (field.value(z) - rho.value(z)).abs();
    let (center, breaks) = rho.discontinuity_circles().unwrap_or((d.center(), Vec::new()));
    let reference = polar_reference(d, f, center, &breaks, 1e-7, 5)?;
    let study = convergence_study(d, f, rules, m_values, reference.value)?;
    Ok((study, reference))
}
