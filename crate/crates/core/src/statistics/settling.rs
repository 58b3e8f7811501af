use crate::error::{Error, Result};

/// Minimum series length for a settling fit.
pub const MIN_POINTS: usize = 10;
const TAU_GRID: usize = 400;

/// Fit of `e(t) = alpha + beta exp(-(t - t0) / tau)` and the steady-state summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettlingAnalysis {
    pub alpha: f64,
    pub beta: f64,
    pub tau: f64,
    /// `4 tau`, measured from the first sample time.
    pub t_s: f64,
    /// Third quartile of the errors after `t0 + t_s`.
    pub e_q3: f64,
    pub steady_points: usize,
    /// Set when the series is constant and `tau` is arbitrary.
    pub degenerate: bool,
    pub e_rel: Option<f64>,
}

impl SettlingAnalysis {
    pub fn with_extrema(mut self, e_minus: f64, e_plus: f64) -> Result<Self> {
        self.e_rel = Some(relative_error(self.e_q3, e_minus, e_plus)?);
        Ok(self)
    }
}

/// Quantile by linear interpolation between order statistics (`h = (n-1) q`).
pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::param("quantile of an empty set"));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::param(format!("quantile level {q} outside [0, 1]")));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    Ok(v[lo] + (h - lo as f64) * (v[hi] - v[lo]))
}

pub fn third_quartile(values: &[f64]) -> Result<f64> {
    quantile(values, 0.75)
}

/// Linear least squares for `(alpha, beta)` at fixed `tau`; returns the SSE too.
fn linear_part(ts: &[f64], es: &[f64], tau: f64) -> (f64, f64, f64) {
    let t0 = ts[0];
    let n = ts.len() as f64;
    let (mut s1, mut s2, mut sy, mut s1y) = (0.0, 0.0, 0.0, 0.0);
    for (&t, &e) in ts.iter().zip(es) {
        let p = (-(t - t0) / tau).exp();
        s1 += p;
        s2 += p * p;
        sy += e;
        s1y += p * e;
    }
    let det = n * s2 - s1 * s1;
    let (alpha, beta) = if det.abs() <= 1e-12 * n * s2 {
        (sy / n, 0.0)
    } else {
        ((s2 * sy - s1 * s1y) / det, (n * s1y - s1 * sy) / det)
    };
    let sse = ts
        .iter()
        .zip(es)
        .map(|(&t, &e)| {
            let r = alpha + beta * (-(t - t0) / tau).exp() - e;
            r * r
        })
        .sum();
    (alpha, beta, sse)
}

/// Settling-time analysis of an error series.
///
/// `tau` is found by a log-spaced scan followed by golden-section refinement
/// of `ln tau`, with `alpha, beta` solved linearly at each trial.
pub fn settling_analysis(ts: &[f64], es: &[f64]) -> Result<SettlingAnalysis> {
    if ts.len() != es.len() {
        return Err(Error::param("times and errors differ in length"));
    }
    if ts.len() < MIN_POINTS {
        return Err(Error::param(format!("settling analysis needs at least {MIN_POINTS} points")));
    }
    if ts.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param("times must increase strictly"));
    }
    if es.iter().chain(ts).any(|v| !v.is_finite()) {
        return Err(Error::param("non-finite value in error series"));
    }
    let span = ts[ts.len() - 1] - ts[0];
    let min_dt = ts.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let (ln_lo, ln_hi) = ((min_dt / 10.0).ln(), (10.0 * span).ln());
    let grid_tau = |k: usize| (ln_lo + (ln_hi - ln_lo) * k as f64 / (TAU_GRID - 1) as f64).exp();

    let emax = es.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let emin = es.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let degenerate = emax - emin <= 1e-12 * emax.abs().max(1.0);

    let (tau, alpha, beta) = if degenerate {
        (grid_tau(0), es.iter().sum::<f64>() / es.len() as f64, 0.0)
    } else {
        let sse = |ln_tau: f64| linear_part(ts, es, ln_tau.exp()).2;
        let mut best = 0;
        let mut best_sse = f64::INFINITY;
        for k in 0..TAU_GRID {
            let s = sse(grid_tau(k).ln());
            if s < best_sse {
                best_sse = s;
                best = k;
            }
        }
        let step = (ln_hi - ln_lo) / (TAU_GRID - 1) as f64;
        let (mut a, mut b) = (
            grid_tau(best).ln() - step,
            grid_tau(best).ln() + step,
        );
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let (mut fc, mut fd) = (sse(c), sse(d));
        for _ in 0..100 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = sse(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = sse(d);
            }
            if b - a < 1e-12 {
                break;
            }
        }
        let tau = (0.5 * (a + b)).exp();
        let (alpha, beta, _) = linear_part(ts, es, tau);
        (tau, alpha, beta)
    };

    let t_s = 4.0 * tau;
    let t0 = ts[0];
    let steady: Vec<f64> = ts
        .iter()
        .zip(es)
        .filter(|(t, _)| **t - t0 > t_s)
        .map(|(_, e)| *e)
        .collect();
    if steady.is_empty() {
        return Err(Error::Settling(format!(
            "trajectory too short: settling time {t_s} reaches past the last sample at {span}"
        )));
    }
    Ok(SettlingAnalysis {
        alpha,
        beta,
        tau,
        t_s,
        e_q3: third_quartile(&steady)?,
        steady_points: steady.len(),
        degenerate,
        e_rel: None,
    })
}

/// `(e_observed - e_minus) / (e_plus - e_minus)`; not clamped to `[0, 1]`.
pub fn relative_error(e_observed: f64, e_minus: f64, e_plus: f64) -> Result<f64> {
    if !(e_plus > e_minus) {
        return Err(Error::param(format!("need e_plus > e_minus, got {e_plus} <= {e_minus}")));
    }
    Ok((e_observed - e_minus) / (e_plus - e_minus))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Band {
    /// Below 10%.
    QuiteClose,
    Intermediate,
    /// 30% or more.
    RatherPoor,
}

impl Band {
    pub fn of(e_rel: f64) -> Band {
        if e_rel < 0.10 {
            Band::QuiteClose
        } else if e_rel >= 0.30 {
            Band::RatherPoor
        } else {
            Band::Intermediate
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Band::QuiteClose => "quite close",
            Band::Intermediate => "intermediate",
            Band::RatherPoor => "rather poor",
        }
    }
}
