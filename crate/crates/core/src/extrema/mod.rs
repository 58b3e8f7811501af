//! Realizable extrema of the error metric by multistart projected gradient.

mod optimizer;

use rand::Rng;
use rayon::prelude::*;

use crate::density::{Domain, Kernel, Point, TargetDensity};
use crate::error::{Error, Result};
use crate::error_metric::{BlobNormalization, GridEvaluator, SwarmConfig};
use crate::quadrature::{fit_power_law, QuadratureRule};
use crate::rng::{stream, stream2, Purpose, StreamRng};

pub use optimizer::{
    minimize, project, BoxObjective, LocalResult, OptimizerSettings, StopReason, DEFAULT_CONTINUATION,
};

/// Exponent of the KDE-optimal bandwidth `delta* ~ N^(-1/6)` in two dimensions.
pub const KDE_EXPONENT: f64 = -1.0 / 6.0;

/// How the robots of each start are placed.
#[derive(Debug, Clone, PartialEq)]
pub enum InitStrategy {
    /// Independent uniform positions over the domain.
    Uniform,
    /// Uniform positions inside the rectangle `[x0, x1] x [y0, y1]`.
    Region { x0: f64, y0: f64, x1: f64, y1: f64 },
    /// Uniform positions inside an annulus (clipped to the domain).
    Annulus { center: Point, r1: f64, r2: f64 },
    /// All robots at one uniform random point.
    Cluster,
    /// The same positions for every start.
    Given(Vec<Point>),
}

impl InitStrategy {
    /// Annulus seeding from a ring target.
    pub fn ring_region(rho: &TargetDensity) -> Option<Self> {
        rho.annulus().map(|(center, r1, r2)| InitStrategy::Annulus { center, r1, r2 })
    }

    fn check(&self, domain: &Domain, n: usize) -> Result<()> {
        match self {
            InitStrategy::Region { x0, y0, x1, y1 } => {
                if !(x0 < x1 && y0 < y1) {
                    return Err(Error::param("empty seeding region"));
                }
                if !domain.contains(Point::new(*x0, *y0)) || !domain.contains(Point::new(*x1, *y1)) {
                    return Err(Error::param("seeding region leaves the domain"));
                }
            }
            InitStrategy::Annulus { r1, r2, .. } => {
                if !(0.0 <= *r1 && r1 < r2) {
                    return Err(Error::param("seeding annulus needs 0 <= r1 < r2"));
                }
            }
            InitStrategy::Given(p) => {
                if p.len() != n {
                    return Err(Error::param(format!(
                        "given initial configuration has {} robots, expected {n}",
                        p.len()
                    )));
                }
                if let Some(q) = p.iter().find(|q| !domain.contains(**q)) {
                    return Err(Error::param(format!("initial robot at ({}, {}) is outside the domain", q.x, q.y)));
                }
            }
            InitStrategy::Uniform | InitStrategy::Cluster => {}
        }
        Ok(())
    }

    /// `n` positions drawn from `rng` (ignored for `Given`).
    pub fn place(&self, domain: &Domain, n: usize, rng: &mut StreamRng) -> Vec<Point> {
        let uniform = |rng: &mut StreamRng| {
            Point::new(
                rng.random::<f64>() * domain.width,
                rng.random::<f64>() * domain.height,
            )
        };
        match self {
            InitStrategy::Uniform => (0..n).map(|_| uniform(rng)).collect(),
            InitStrategy::Region { x0, y0, x1, y1 } => (0..n)
                .map(|_| Point::new(rng.random_range(*x0..=*x1), rng.random_range(*y0..=*y1)))
                .collect(),
            InitStrategy::Annulus { center, r1, r2 } => (0..n)
                .map(|_| {
                    for _ in 0..10_000 {
                        let r = (rng.random_range(r1 * r1..r2 * r2)).sqrt();
                        let t = rng.random::<f64>() * std::f64::consts::TAU;
                        let p = Point::new(center.x + r * t.cos(), center.y + r * t.sin());
                        if domain.contains(p) {
                            return p;
                        }
                    }
                    domain.clamp(*center)
                })
                .collect(),
            InitStrategy::Cluster => vec![uniform(rng); n],
            InitStrategy::Given(p) => p.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

impl Sense {
    fn sign(self) -> f64 {
        match self {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        }
    }
}

/// Provenance of one local optimization.
#[derive(Debug, Clone, PartialEq)]
pub struct StartRecord {
    pub start: usize,
    /// Stream key the initial guess was drawn from.
    pub seed: u64,
    pub converged: bool,
    pub stop: StopReason,
    pub iterations: usize,
    pub initial_value: f64,
    pub final_value: f64,
    pub delta: f64,
}

/// Best local minimum (or maximum) over all starts.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtremaHalf {
    pub sense: Sense,
    pub value: f64,
    pub config: SwarmConfig,
    /// False when no start met a stopping rule before `max_iterations`.
    pub converged: bool,
    pub records: Vec<StartRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtremaResult {
    pub e_minus: f64,
    pub e_plus: f64,
    pub argmin: SwarmConfig,
    pub argmax: SwarmConfig,
    pub min_records: Vec<StartRecord>,
    pub max_records: Vec<StartRecord>,
    pub converged: bool,
}

impl ExtremaResult {
    pub fn from_halves(min: ExtremaHalf, max: ExtremaHalf) -> Result<Self> {
        if min.sense != Sense::Minimize || max.sense != Sense::Maximize {
            return Err(Error::param("extrema halves passed in the wrong order"));
        }
        if min.value > max.value {
            return Err(Error::Fit(format!(
                "best minimum {} exceeds best maximum {}",
                min.value, max.value
            )));
        }
        Ok(ExtremaResult {
            e_minus: min.value,
            e_plus: max.value,
            argmin: min.config,
            argmax: max.config,
            converged: min.converged && max.converged,
            min_records: min.records,
            max_records: max.records,
        })
    }
}

/// Error metric (optionally negated) as a function of interleaved positions.
struct PositionObjective<'a> {
    ev: &'a GridEvaluator,
    delta: f64,
    sign: f64,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

fn to_points(x: &[f64]) -> Vec<Point> {
    x.chunks_exact(2).map(|c| Point::new(c[0], c[1])).collect()
}

fn to_flat(p: &[Point]) -> Vec<f64> {
    p.iter().flat_map(|q| [q.x, q.y]).collect()
}

fn position_bounds(domain: &Domain, n: usize) -> (Vec<f64>, Vec<f64>) {
    let lo = vec![0.0; 2 * n];
    let hi = (0..2 * n)
        .map(|k| if k % 2 == 0 { domain.width } else { domain.height })
        .collect();
    (lo, hi)
}

impl BoxObjective for PositionObjective<'_> {
    fn lower(&self) -> &[f64] {
        &self.lo
    }
    fn upper(&self) -> &[f64] {
        &self.hi
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.sign
            * self
                .ev
                .raw_error(&to_points(x), self.delta, Kernel::Gaussian, BlobNormalization::Domain)
    }
    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let eg = self
            .ev
            .error_and_gradient(&to_points(x), self.delta, BlobNormalization::Domain, false);
        for (g, v) in grad.iter_mut().zip(&eg.positions) {
            *g = self.sign * v;
        }
        self.sign * eg.value
    }
}

/// Error metric over positions and `u = DELTA_SCALE * ln delta`; the last
/// coordinate is `u`.
struct DeltaObjective<'a> {
    ev: &'a GridEvaluator,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

/// Scale of the log-radius coordinate relative to positions (inches).
pub const DELTA_SCALE: f64 = 10.0;

impl BoxObjective for DeltaObjective<'_> {
    fn lower(&self) -> &[f64] {
        &self.lo
    }
    fn upper(&self) -> &[f64] {
        &self.hi
    }
    fn value(&self, x: &[f64]) -> f64 {
        let (pos, u) = x.split_at(x.len() - 1);
        self.ev.raw_error(
            &to_points(pos),
            (u[0] / DELTA_SCALE).exp(),
            Kernel::Gaussian,
            BlobNormalization::Domain,
        )
    }
    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let (pos, u) = x.split_at(x.len() - 1);
        let delta = (u[0] / DELTA_SCALE).exp();
        let eg = self
            .ev
            .error_and_gradient(&to_points(pos), delta, BlobNormalization::Domain, true);
        let k = grad.len() - 1;
        grad[..k].copy_from_slice(&eg.positions);
        grad[k] = delta * eg.delta / DELTA_SCALE;
        eg.value
    }
}

struct StartOutcome {
    record: StartRecord,
    x: Vec<f64>,
}

fn pick_best(sense: Sense, outcomes: &[StartOutcome]) -> usize {
    let sign = sense.sign();
    let mut best = 0;
    for (k, o) in outcomes.iter().enumerate() {
        // strict comparison keeps the lowest start index on ties
        if sign * o.record.final_value < sign * outcomes[best].record.final_value {
            best = k;
        }
    }
    best
}

fn check_common(rho: &TargetDensity, rule: &QuadratureRule, n: usize, settings: &OptimizerSettings) -> Result<GridEvaluator> {
    if n == 0 {
        return Err(Error::param("need at least one robot"));
    }
    settings.validate()?;
    GridEvaluator::new(rho, rule)
}

fn fixed_delta_half(
    ev: &GridEvaluator,
    sense: Sense,
    delta: f64,
    settings: &OptimizerSettings,
    inits: Vec<(u64, Vec<Point>)>,
) -> Result<ExtremaHalf> {
    let domain = *ev.domain();
    let n = inits[0].1.len();
    let (lo, hi) = position_bounds(&domain, n);
    let objective = |d: f64| PositionObjective {
        ev,
        delta: d,
        sign: sense.sign(),
        lo: lo.clone(),
        hi: hi.clone(),
    };
    let outcomes: Vec<StartOutcome> = inits
        .into_par_iter()
        .enumerate()
        .map(|(start, (key, init))| {
            let mut x = to_flat(&init);
            let mut iterations = 0;
            let mut last = None;
            for &factor in &settings.continuation {
                let r = minimize(&objective(factor * delta), &x, settings);
                iterations += r.iterations;
                x = r.x.clone();
                last = Some(r);
            }
            let r = last.expect("continuation is never empty");
            let initial_value = objective(delta).value(&to_flat(&init));
            StartOutcome {
                record: StartRecord {
                    start,
                    seed: key,
                    converged: r.converged(),
                    stop: r.stop,
                    iterations,
                    initial_value: sense.sign() * initial_value,
                    final_value: sense.sign() * r.value,
                    delta,
                },
                x,
            }
        })
        .collect();
    finish_half(ev, sense, outcomes, |o| (to_points(&o.x), delta))
}

fn finish_half(
    ev: &GridEvaluator,
    sense: Sense,
    outcomes: Vec<StartOutcome>,
    config_of: impl Fn(&StartOutcome) -> (Vec<Point>, f64),
) -> Result<ExtremaHalf> {
    let best = pick_best(sense, &outcomes);
    let (positions, delta) = config_of(&outcomes[best]);
    let config = SwarmConfig::new(positions, delta, Kernel::Gaussian)?;
    let value = ev.error(&config.positions, delta, Kernel::Gaussian, BlobNormalization::Domain)?;
    Ok(ExtremaHalf {
        sense,
        value,
        config,
        converged: outcomes.iter().any(|o| o.record.converged),
        records: outcomes.into_iter().map(|o| o.record).collect(),
    })
}

fn initial_guesses(
    domain: &Domain,
    n: usize,
    init: &InitStrategy,
    settings: &OptimizerSettings,
    purpose_key: u64,
) -> Vec<(u64, Vec<Point>)> {
    let starts = if matches!(init, InitStrategy::Given(_)) {
        1
    } else {
        settings.starts
    };
    (0..starts as u64)
        .map(|k| {
            let mut rng = stream2(settings.seed, Purpose::Multistart, purpose_key, k);
            (k, init.place(domain, n, &mut rng))
        })
        .collect()
}

/// Best local minimum of the error metric over `settings.starts` starts.
///
/// `Given` initial positions run a single start.
pub fn minimize_error(
    rho: &TargetDensity,
    rule: &QuadratureRule,
    n: usize,
    delta: f64,
    settings: &OptimizerSettings,
    init: &InitStrategy,
) -> Result<ExtremaHalf> {
    extremize(rho, rule, n, delta, settings, init, Sense::Minimize)
}

/// Best local maximum of the error metric (minimizes `-e`).
pub fn maximize_error(
    rho: &TargetDensity,
    rule: &QuadratureRule,
    n: usize,
    delta: f64,
    settings: &OptimizerSettings,
    init: &InitStrategy,
) -> Result<ExtremaHalf> {
    extremize(rho, rule, n, delta, settings, init, Sense::Maximize)
}

fn extremize(
    rho: &TargetDensity,
    rule: &QuadratureRule,
    n: usize,
    delta: f64,
    settings: &OptimizerSettings,
    init: &InitStrategy,
    sense: Sense,
) -> Result<ExtremaHalf> {
    let ev = check_common(rho, rule, n, settings)?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::param(format!("delta must be positive, got {delta}")));
    }
    init.check(rho.domain(), n)?;
    let key = match sense {
        Sense::Minimize => 0,
        Sense::Maximize => 1,
    };
    let inits = initial_guesses(rho.domain(), n, init, settings, key);
    fixed_delta_half(&ev, sense, delta, settings, inits)
}

/// Both halves with the same settings and seeding.
pub fn find_extrema(
    rho: &TargetDensity,
    rule: &QuadratureRule,
    n: usize,
    delta: f64,
    settings: &OptimizerSettings,
    min_init: &InitStrategy,
    max_init: &InitStrategy,
) -> Result<ExtremaResult> {
    let min = minimize_error(rho, rule, n, delta, settings, min_init)?;
    let max = maximize_error(rho, rule, n, delta, settings, max_init)?;
    ExtremaResult::from_halves(min, max)
}

fn check_delta_bounds(bounds: (f64, f64)) -> Result<()> {
    let (lo, hi) = bounds;
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(Error::param(format!("delta bounds need 0 < lo < hi, got ({lo}, {hi})")));
    }
    Ok(())
}

fn delta_half(
    ev: &GridEvaluator,
    settings: &OptimizerSettings,
    bounds: (f64, f64),
    inits: Vec<(u64, Vec<Point>, f64)>,
) -> Result<(ExtremaHalf, f64)> {
    let domain = *ev.domain();
    let n = inits[0].1.len();
    let (plo, phi) = position_bounds(&domain, n);
    let (mut lo, mut hi) = (plo.clone(), phi.clone());
    let k = DELTA_SCALE;
    lo.push(k * bounds.0.ln());
    hi.push(k * bounds.1.ln());
    let joint = DeltaObjective { ev, lo, hi };
    let outcomes: Vec<StartOutcome> = inits
        .into_par_iter()
        .enumerate()
        .map(|(start, (key, init, delta0))| {
            // settle positions at the starting radius first
            let mut x = to_flat(&init);
            let mut iterations = 0;
            for &factor in &settings.continuation {
                let obj = PositionObjective {
                    ev,
                    delta: factor * delta0,
                    sign: 1.0,
                    lo: plo.clone(),
                    hi: phi.clone(),
                };
                let r = minimize(&obj, &x, settings);
                iterations += r.iterations;
                x = r.x;
            }
            let mut x0 = to_flat(&init);
            x0.push(k * delta0.ln());
            let initial_value = joint.value(&x0);
            x.push(k * delta0.ln());
            let r = minimize(&joint, &x, settings);
            StartOutcome {
                record: StartRecord {
                    start,
                    seed: key,
                    converged: r.converged(),
                    stop: r.stop,
                    iterations: iterations + r.iterations,
                    initial_value,
                    final_value: r.value,
                    delta: (r.x[2 * n] / k).exp(),
                },
                x: r.x,
            }
        })
        .collect();
    let half = finish_half(ev, Sense::Minimize, outcomes, |o| {
        (to_points(&o.x[..2 * n]), (o.x[2 * n] / k).exp())
    })?;
    let delta = half.config.delta;
    Ok((half, delta))
}

/// Joint minimization over positions and `delta` in `[lo, hi]`.
///
/// `delta` is optimized as `ln delta`; every start begins at the geometric
/// mean of the bounds.
pub fn minimize_error_with_delta(
    rho: &TargetDensity,
    rule: &QuadratureRule,
    n: usize,
    settings: &OptimizerSettings,
    bounds: (f64, f64),
    init: &InitStrategy,
) -> Result<(ExtremaHalf, f64)> {
    let ev = check_common(rho, rule, n, settings)?;
    check_delta_bounds(bounds)?;
    init.check(rho.domain(), n)?;
    let delta0 = (bounds.0 * bounds.1).sqrt();
    let inits = initial_guesses(rho.domain(), n, init, settings, 2)
        .into_iter()
        .map(|(k, p)| (k, p, delta0))
        .collect();
    delta_half(&ev, settings, bounds, inits)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub delta_star: f64,
    pub e_min: f64,
    pub converged: bool,
    pub config: SwarmConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignSweep {
    pub rows: Vec<SweepRow>,
    /// Fitted `log10 delta* = log_c + p log10 N` over converged rows.
    pub log_c: f64,
    pub p: f64,
    pub kde_exponent: f64,
}

impl DesignSweep {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("N,delta_star,e_min,converged\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{},{}\n", r.n, r.delta_star, r.e_min, r.converged));
        }
        s.push_str(&format!(
            "# fit delta* = 10^{} N^{}; kde exponent {}\n",
            self.log_c, self.p, self.kde_exponent
        ));
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    pub optimizer: OptimizerSettings,
    pub delta_bounds: (f64, f64),
    pub init: InitStrategy,
    /// From this N on, starts use the second strategy instead.
    pub switch_init: Option<(usize, InitStrategy)>,
}

/// Runs the joint minimization for ascending `N`, warm-starting each `N`
/// from the previous argmin padded with extra robots, and fits `delta* ~ N^p`.
pub fn design_sweep(rho: &TargetDensity, rule: &QuadratureRule, n_values: &[usize], sweep: &SweepSettings) -> Result<DesignSweep> {
    if n_values.len() < 4 {
        return Err(Error::param("a design sweep needs at least four values of N"));
    }
    if n_values.windows(2).any(|w| w[1] <= w[0]) || n_values[0] == 0 {
        return Err(Error::param("N values must be positive and strictly increasing"));
    }
    let settings = &sweep.optimizer;
    let ev = check_common(rho, rule, n_values[0], settings)?;
    check_delta_bounds(sweep.delta_bounds)?;
    let domain = *rho.domain();
    let delta0 = (sweep.delta_bounds.0 * sweep.delta_bounds.1).sqrt();

    let mut rows: Vec<SweepRow> = Vec::new();
    for (idx, &n) in n_values.iter().enumerate() {
        let init = match &sweep.switch_init {
            Some((from, s)) if n >= *from => s,
            _ => &sweep.init,
        };
        init.check(&domain, n)?;
        let mut inits: Vec<(u64, Vec<Point>, f64)> = Vec::new();
        if let Some(prev) = rows.last() {
            let mut rng = stream(settings.seed, Purpose::Padding, n as u64);
            let mut p = prev.config.positions.clone();
            p.extend(init.place(&domain, n - p.len(), &mut rng));
            inits.push((u64::MAX, p, prev.delta_star));
        }
        let fresh = settings.starts.saturating_sub(inits.len()).max(1);
        for k in 0..fresh as u64 {
            let mut rng = stream2(settings.seed, Purpose::Multistart, 3 + idx as u64, k);
            inits.push((k, init.place(&domain, n, &mut rng), delta0));
        }
        let (half, delta_star) = delta_half(&ev, settings, sweep.delta_bounds, inits)?;
        rows.push(SweepRow {
            n,
            delta_star,
            e_min: half.value,
            converged: half.converged,
            config: half.config,
        });
    }

    let fit_rows: Vec<&SweepRow> = rows.iter().filter(|r| r.converged).collect();
    if fit_rows.len() < 3 {
        return Err(Error::Fit("fewer than three converged N values".into()));
    }
    let xs: Vec<f64> = fit_rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = fit_rows.iter().map(|r| r.delta_star).collect();
    let (log_c, p) = fit_power_law(&xs, &ys)?;
    Ok(DesignSweep {
        rows,
        log_c,
        p,
        kde_exponent: KDE_EXPONENT,
    })
}

/// Central-difference gradient of the discretized metric at fixed `delta`,
/// for checking the analytic gradient.
pub fn finite_difference_gradient(ev: &GridEvaluator, positions: &[Point], delta: f64, h: f64) -> Vec<f64> {
    let mut x = to_flat(positions);
    let mut g = vec![0.0; x.len()];
    for k in 0..x.len() {
        let orig = x[k];
        x[k] = orig + h;
        let fp = ev.raw_error(&to_points(&x), delta, Kernel::Gaussian, BlobNormalization::Domain);
        x[k] = orig - h;
        let fm = ev.raw_error(&to_points(&x), delta, Kernel::Gaussian, BlobNormalization::Domain);
        x[k] = orig;
        g[k] = (fp - fm) / (2.0 * h);
    }
    g
}
