//! Projected gradient descent on a box with Armijo backtracking.
//!
//! The trial step length comes from the Barzilai-Borwein quotient of the last
//! accepted step; every accepted step satisfies the Armijo condition along the
//! projection arc, so the objective never increases.

use crate::error::{Error, Result};

/// A smooth-enough objective on the box `lower <= x <= upper`.
pub trait BoxObjective {
    fn lower(&self) -> &[f64];
    fn upper(&self) -> &[f64];
    fn value(&self, x: &[f64]) -> f64;
    /// Writes the gradient into `grad` and returns the value.
    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerSettings {
    pub max_iterations: usize,
    /// Stop when `max_i |P(x - g) - x|_i` falls below this.
    pub gradient_tolerance: f64,
    /// Stop when the relative decrease over `stall_window` iterations falls below this.
    pub function_tolerance: f64,
    pub stall_window: usize,
    /// Step for the finite-difference gradient check.
    pub fd_step: f64,
    pub backtrack_factor: f64,
    pub armijo: f64,
    /// Largest coordinate move of the very first trial step.
    pub initial_move: f64,
    pub starts: usize,
    pub seed: u64,
    /// Stored curvature pairs for quasi-Newton directions; 0 gives plain
    /// projected gradient with Barzilai-Borwein steps.
    pub memory: usize,
    /// Blob-radius multipliers solved in turn, each stage warm-starting the
    /// next; must end with 1. A single `[1.0]` disables continuation.
    pub continuation: Vec<f64>,
}

/// Default radius schedule for fixed-delta searches.
pub const DEFAULT_CONTINUATION: [f64; 5] = [6.0, 3.0, 2.0, 1.4, 1.0];

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            max_iterations: 2000,
            gradient_tolerance: 1e-9,
            function_tolerance: 1e-6,
            stall_window: 5,
            fd_step: 1e-5,
            backtrack_factor: 0.5,
            armijo: 1e-4,
            initial_move: 0.5,
            starts: 1,
            seed: 0,
            memory: 5,
            continuation: DEFAULT_CONTINUATION.to_vec(),
        }
    }
}

impl OptimizerSettings {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gradient_tolerance", self.gradient_tolerance),
            ("function_tolerance", self.function_tolerance),
            ("fd_step", self.fd_step),
            ("armijo", self.armijo),
            ("initial_move", self.initial_move),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::param(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(Error::param("backtrack_factor must lie in (0, 1)"));
        }
        if self.starts == 0 {
            return Err(Error::param("need at least one start"));
        }
        if self.continuation.last() != Some(&1.0) || self.continuation.iter().any(|f| !(*f >= 1.0 && f.is_finite())) {
            return Err(Error::param("continuation factors must be >= 1 and end with 1"));
        }
        if self.stall_window == 0 {
            return Err(Error::param("stall_window must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    ProjectedGradient,
    Stalled,
    LineSearch,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalResult {
    pub x: Vec<f64>,
    pub initial_value: f64,
    pub value: f64,
    pub iterations: usize,
    pub stop: StopReason,
}

impl LocalResult {
    pub fn converged(&self) -> bool {
        self.stop != StopReason::MaxIterations
    }
}

pub fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, &lo), &hi) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(lo, hi);
    }
}

/// Runs projected descent from `x0` (projected onto the box first).
pub fn minimize<O: BoxObjective>(obj: &O, x0: &[f64], settings: &OptimizerSettings) -> LocalResult {
    let (lower, upper) = (obj.lower(), obj.upper());
    let n = x0.len();
    let mut x = x0.to_vec();
    project(&mut x, lower, upper);
    let mut g = vec![0.0; n];
    let mut f = obj.value_grad(&x, &mut g);
    let initial_value = f;
    let mut history = vec![f];
    let mut trial = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut dir = vec![0.0; n];
    let mut memory = Memory::new(settings.memory);

    let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut alpha = if gmax > 0.0 { settings.initial_move / gmax } else { 1.0 };
    let mut stop = StopReason::MaxIterations;
    let mut iterations = 0;

    while iterations < settings.max_iterations {
        let pg = (0..n)
            .map(|i| ((x[i] - g[i]).clamp(lower[i], upper[i]) - x[i]).abs())
            .fold(0.0f64, f64::max);
        if pg < settings.gradient_tolerance {
            stop = StopReason::ProjectedGradient;
            break;
        }

        // coordinates pinned at a bound by the gradient stay put
        let free: Vec<bool> = (0..n)
            .map(|i| !((x[i] <= lower[i] && g[i] > 0.0) || (x[i] >= upper[i] && g[i] < 0.0)))
            .collect();
        let mut step = alpha;
        let mut quasi_newton = false;
        if !memory.is_empty() {
            memory.direction(&g, &free, &mut dir);
            let gd: f64 = g.iter().zip(&dir).map(|(a, b)| a * b).sum();
            if gd < 0.0 {
                quasi_newton = true;
                step = 1.0;
            }
        }
        if !quasi_newton {
            for i in 0..n {
                dir[i] = if free[i] { -g[i] } else { 0.0 };
            }
        }

        let mut accepted = None;
        for _ in 0..60 {
            let mut slope = 0.0;
            for i in 0..n {
                trial[i] = (x[i] + step * dir[i]).clamp(lower[i], upper[i]);
                slope += g[i] * (trial[i] - x[i]);
            }
            if slope >= 0.0 {
                break;
            }
            let ft = obj.value(&trial);
            if ft <= f + settings.armijo * slope {
                accepted = Some(ft);
                break;
            }
            step *= settings.backtrack_factor;
        }
        if accepted.is_none() {
            if !memory.is_empty() {
                // retry from a plain gradient step before giving up
                memory.clear();
                continue;
            }
            stop = StopReason::LineSearch;
            break;
        }

        let f_new = obj.value_grad(&trial, &mut g_new);
        let mut ss = 0.0;
        let mut sy = 0.0;
        for i in 0..n {
            let s = trial[i] - x[i];
            ss += s * s;
            sy += s * (g_new[i] - g[i]);
        }
        if !quasi_newton {
            alpha = if sy > 0.0 { ss / sy } else { 2.0 * step };
            // keep the BB step within a sane band around the last accepted step
            alpha = alpha.clamp(step * 1e-3, step * 1e3);
        }
        if settings.memory > 0 && sy > 1e-12 * ss.max(1e-300) {
            let s_vec: Vec<f64> = (0..n).map(|i| trial[i] - x[i]).collect();
            let y_vec: Vec<f64> = (0..n).map(|i| g_new[i] - g[i]).collect();
            memory.push(s_vec, y_vec, sy);
        }

        std::mem::swap(&mut x, &mut trial);
        std::mem::swap(&mut g, &mut g_new);
        f = f_new;
        iterations += 1;
        history.push(f);

        let w = settings.stall_window;
        if history.len() > w {
            let old = history[history.len() - 1 - w];
            if (old - f).abs() <= settings.function_tolerance * f.abs().max(1e-12) {
                stop = StopReason::Stalled;
                break;
            }
        }
    }

    LocalResult {
        x,
        initial_value,
        value: f,
        iterations,
        stop,
    }
}

/// Limited-memory BFGS pairs for the two-loop recursion.
struct Memory {
    cap: usize,
    s: std::collections::VecDeque<Vec<f64>>,
    y: std::collections::VecDeque<Vec<f64>>,
    rho: std::collections::VecDeque<f64>,
}

impl Memory {
    fn new(cap: usize) -> Self {
        Memory {
            cap,
            s: Default::default(),
            y: Default::default(),
            rho: Default::default(),
        }
    }

    fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    fn clear(&mut self) {
        self.s.clear();
        self.y.clear();
        self.rho.clear();
    }

    fn push(&mut self, s: Vec<f64>, y: Vec<f64>, sy: f64) {
        if self.cap == 0 {
            return;
        }
        if self.s.len() == self.cap {
            self.s.pop_front();
            self.y.pop_front();
            self.rho.pop_front();
        }
        self.s.push_back(s);
        self.y.push_back(y);
        self.rho.push_back(1.0 / sy);
    }

    /// `dir = -H g` restricted to the free coordinates.
    fn direction(&self, g: &[f64], free: &[bool], dir: &mut [f64]) {
        let dot = |a: &[f64], b: &[f64]| -> f64 {
            a.iter().zip(b).zip(free).filter(|(_, f)| **f).map(|((x, y), _)| x * y).sum()
        };
        for i in 0..g.len() {
            dir[i] = if free[i] { g[i] } else { 0.0 };
        }
        let k = self.s.len();
        let mut a = vec![0.0; k];
        for j in (0..k).rev() {
            a[j] = self.rho[j] * dot(&self.s[j], dir);
            for i in 0..g.len() {
                dir[i] -= a[j] * self.y[j][i];
            }
        }
        let (sl, yl) = (&self.s[k - 1], &self.y[k - 1]);
        let gamma = dot(sl, yl) / dot(yl, yl).max(1e-300);
        let gamma = if gamma > 0.0 { gamma } else { 1.0 };
        for v in dir.iter_mut() {
            *v *= gamma;
        }
        for j in 0..k {
            let b = self.rho[j] * dot(&self.y[j], dir);
            for i in 0..g.len() {
                dir[i] += (a[j] - b) * self.s[j][i];
            }
        }
        for i in 0..g.len() {
            dir[i] = if free[i] { -dir[i] } else { 0.0 };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quadratic {
        lo: Vec<f64>,
        hi: Vec<f64>,
        center: Vec<f64>,
        scale: Vec<f64>,
    }

    impl BoxObjective for Quadratic {
        fn lower(&self) -> &[f64] {
            &self.lo
        }
        fn upper(&self) -> &[f64] {
            &self.hi
        }
        fn value(&self, x: &[f64]) -> f64 {
            x.iter()
                .zip(&self.center)
                .zip(&self.scale)
                .map(|((x, c), s)| s * (x - c) * (x - c))
                .sum()
        }
        fn value_grad(&self, x: &[f64], g: &mut [f64]) -> f64 {
            for i in 0..x.len() {
                g[i] = 2.0 * self.scale[i] * (x[i] - self.center[i]);
            }
            self.value(x)
        }
    }

    #[test]
    fn solves_box_constrained_quadratic() {
        let q = Quadratic {
            lo: vec![0.0; 3],
            hi: vec![1.0; 3],
            center: vec![0.3, 2.0, -1.0],
            scale: vec![1.0, 10.0, 0.1],
        };
        let settings = OptimizerSettings {
            function_tolerance: 1e-14,
            ..Default::default()
        };
        let r = minimize(&q, &[0.9, 0.1, 0.5], &settings);
        assert!(r.converged());
        assert!((r.x[0] - 0.3).abs() < 1e-5, "{:?}", r.x);
        assert_eq!(r.x[1], 1.0);
        assert_eq!(r.x[2], 0.0);
        assert!(r.value <= r.initial_value);
    }

    #[test]
    fn stationary_corner_stops_immediately() {
        let q = Quadratic {
            lo: vec![0.0; 2],
            hi: vec![1.0; 2],
            center: vec![-1.0, -1.0],
            scale: vec![1.0, 1.0],
        };
        let r = minimize(&q, &[0.0, 0.0], &OptimizerSettings::default());
        assert_eq!(r.iterations, 0);
        assert_eq!(r.stop, StopReason::ProjectedGradient);
    }

    #[test]
    fn settings_validation() {
        assert!(OptimizerSettings::default().validate().is_ok());
        let bad = OptimizerSettings {
            starts: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = OptimizerSettings {
            backtrack_factor: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
