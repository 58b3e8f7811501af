use std::f64::consts::PI;

use super::BlobNormalization;
use crate::density::{
    gaussian_interval_mass, gaussian_interval_mass_dc, gaussian_interval_mass_ddelta, Domain,
    Kernel, Point, TargetDensity, GAUSSIAN_CUTOFF,
};
use crate::error::{Error, Result};
use crate::quadrature::QuadratureRule;

fn canonical(positions: &[Point]) -> Vec<Point> {
    let mut v = positions.to_vec();
    v.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    v
}

/// Values of the metric beyond `[0, 2]` by less than this are clamped.
pub const BOUND_SLACK: f64 = 1e-6;

/// Quadrature-grid evaluator for the error metric against one target.
///
/// Target values at the nodes are computed once; each call then only builds
/// the swarm blob field. Gaussian blobs are accumulated separably inside a
/// `2 * 8 delta` box around every robot, so one evaluation costs
/// `O(N (16 delta / h)^2)` multiply-adds rather than `O(N * nodes)` exponentials.
#[derive(Debug, Clone)]
pub struct GridEvaluator {
    rule: QuadratureRule,
    target: Vec<f64>,
    weights: Vec<f64>,
    degenerate_tol: f64,
}

/// Value and gradient of the discretized metric.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorGradient {
    pub value: f64,
    /// `d e / d x_i` and `d e / d y_i`, interleaved.
    pub positions: Vec<f64>,
    /// `d e / d delta` (only filled when requested).
    pub delta: f64,
}

impl GridEvaluator {
    pub fn new(rho: &TargetDensity, rule: &QuadratureRule) -> Result<Self> {
        if !rho.domain().approx_eq(rule.domain()) {
            return Err(Error::param(format!(
                "target domain {:?} differs from quadrature domain {:?}",
                rho.domain(),
                rule.domain()
            )));
        }
        let xs = rule.xs();
        let ys = rule.ys();
        let mut target = Vec::with_capacity(xs.len() * ys.len());
        let mut weights = Vec::with_capacity(xs.len() * ys.len());
        for (&y, &wy) in ys.iter().zip(rule.y_weights()) {
            for (&x, &wx) in xs.iter().zip(rule.x_weights()) {
                target.push(rho.value(Point::new(x, y)));
                weights.push(wx * wy);
            }
        }
        let tmax = target.iter().cloned().fold(0.0, f64::max);
        Ok(GridEvaluator {
            rule: rule.clone(),
            target,
            weights,
            degenerate_tol: 1e-12 * tmax,
        })
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn domain(&self) -> &Domain {
        self.rule.domain()
    }

    /// Target density at the nodes, row-major.
    pub fn target(&self) -> &[f64] {
        &self.target
    }

    /// Sum over robots of the domain mass of each blob (the Eq.-2 denominator).
    pub fn blob_mass(&self, positions: &[Point], delta: f64, kernel: Kernel) -> f64 {
        let d = self.domain();
        canonical(positions).iter().map(|&p| kernel.domain_mass(p, delta, d)).sum()
    }

    fn scale(&self, positions: &[Point], delta: f64, kernel: Kernel, norm: BlobNormalization) -> f64 {
        match norm {
            BlobNormalization::Domain => 1.0 / self.blob_mass(positions, delta, kernel),
            BlobNormalization::Count => 1.0 / positions.len() as f64,
        }
    }

    /// Adds `scale * sum_i K^delta(z - x_i)` at every node into `out`.
    ///
    /// Robots are summed in sorted order, so the result does not depend on
    /// how the positions are listed.
    pub fn accumulate(&self, positions: &[Point], delta: f64, kernel: Kernel, scale: f64, out: &mut [f64]) {
        let positions = &canonical(positions)[..];
        let xs = self.rule.xs();
        let ys = self.rule.ys();
        let m1 = xs.len();
        let radius = kernel.support_radius(delta);
        let mut ex = Vec::new();
        match kernel {
            Kernel::Gaussian => {
                let inv2 = 0.5 / (delta * delta);
                let pref = scale / (2.0 * PI * delta * delta);
                for p in positions {
                    let (i0, i1) = axis_range(xs, p.x - radius, p.x + radius);
                    let (j0, j1) = axis_range(ys, p.y - radius, p.y + radius);
                    if i0 > i1 || j0 > j1 {
                        continue;
                    }
                    ex.clear();
                    ex.extend(xs[i0..=i1].iter().map(|&x| (-(x - p.x) * (x - p.x) * inv2).exp()));
                    for j in j0..=j1 {
                        let dy = ys[j] - p.y;
                        let c = pref * (-dy * dy * inv2).exp();
                        let row = &mut out[j * m1 + i0..=j * m1 + i1];
                        for (o, &e) in row.iter_mut().zip(&ex) {
                            *o += c * e;
                        }
                    }
                }
            }
            Kernel::Indicator => {
                let val = scale / (PI * delta * delta);
                let r2 = delta * delta;
                for p in positions {
                    let (j0, j1) = axis_range(ys, p.y - radius, p.y + radius);
                    for j in j0..=j1.min(ys.len() - 1) {
                        if j0 > j1 {
                            break;
                        }
                        let dy = ys[j] - p.y;
                        let half = r2 - dy * dy;
                        if half < 0.0 {
                            continue;
                        }
                        let half = half.sqrt();
                        let (i0, i1) = axis_range(xs, p.x - half, p.x + half);
                        if i0 > i1 {
                            continue;
                        }
                        for i in i0..=i1 {
                            if (xs[i] - p.x).powi(2) + dy * dy <= r2 {
                                out[j * m1 + i] += val;
                            }
                        }
                    }
                }
            }
        }
    }

    /// Swarm blob function at every node.
    pub fn swarm_field(
        &self,
        positions: &[Point],
        delta: f64,
        kernel: Kernel,
        norm: BlobNormalization,
    ) -> Vec<f64> {
        let mut field = vec![0.0; self.target.len()];
        if positions.is_empty() {
            return field;
        }
        let scale = self.scale(positions, delta, kernel, norm);
        self.accumulate(positions, delta, kernel, scale, &mut field);
        field
    }

    /// `sum_k w_k |field_k - rho_k|` without bound checks.
    pub fn raw_error_of_field(&self, field: &[f64]) -> f64 {
        let m1 = self.rule.xs().len();
        let wx = self.rule.x_weights();
        let wy = self.rule.y_weights();
        let mut total = 0.0;
        for (j, (frow, trow)) in field.chunks_exact(m1).zip(self.target.chunks_exact(m1)).enumerate() {
            let mut acc = 0.0;
            for ((f, t), w) in frow.iter().zip(trow).zip(wx) {
                acc += w * (f - t).abs();
            }
            total += wy[j] * acc;
        }
        total
    }

    /// One-sided metric: the integral over nodes where the swarm under-covers.
    pub fn raw_one_sided_of_field(&self, field: &[f64]) -> f64 {
        field
            .iter()
            .zip(&self.target)
            .zip(&self.weights)
            .filter(|((f, t), _)| f <= t)
            .map(|((f, t), w)| w * (t - f))
            .sum()
    }

    /// Error metric with the bound check applied.
    pub fn error_of_field(&self, field: &[f64]) -> Result<f64> {
        check_bounds(self.raw_error_of_field(field), 2.0)
    }

    pub fn error(&self, positions: &[Point], delta: f64, kernel: Kernel, norm: BlobNormalization) -> Result<f64> {
        self.error_of_field(&self.swarm_field(positions, delta, kernel, norm))
    }

    /// Metric value used inside the optimizer: no bound check, no clamping.
    pub fn raw_error(&self, positions: &[Point], delta: f64, kernel: Kernel, norm: BlobNormalization) -> f64 {
        self.raw_error_of_field(&self.swarm_field(positions, delta, kernel, norm))
    }

    /// Value and a.e. gradient of the discretized metric for Gaussian blobs.
    ///
    /// `d e / d x_i = sum_k w_k sgn(f_k) d rho_N(z_k) / d x_i` with the quotient
    /// rule applied to the domain-mass denominator. Nodes where
    /// `|f_k|` is below `1e-12 max rho` contribute zero.
    pub fn error_and_gradient(
        &self,
        positions: &[Point],
        delta: f64,
        norm: BlobNormalization,
        with_delta: bool,
    ) -> ErrorGradient {
        let kernel = Kernel::Gaussian;
        let d = *self.domain();
        let n = positions.len();
        let denom = match norm {
            BlobNormalization::Domain => self.blob_mass(positions, delta, kernel),
            BlobNormalization::Count => n as f64,
        };
        let mut field = vec![0.0; self.target.len()];
        self.accumulate(positions, delta, kernel, 1.0 / denom, &mut field);

        // signed weights s_k = w_k sgn(f_k) and Q = sum_k s_k rho_N(z_k)
        let mut signed = vec![0.0; field.len()];
        let mut value = 0.0;
        let mut q = 0.0;
        for k in 0..field.len() {
            let f = field[k] - self.target[k];
            value += self.weights[k] * f.abs();
            if f.abs() > self.degenerate_tol {
                let s = self.weights[k] * f.signum();
                signed[k] = s;
                q += s * field[k];
            }
        }

        let xs = self.rule.xs();
        let ys = self.rule.ys();
        let m1 = xs.len();
        let radius = GAUSSIAN_CUTOFF * delta;
        let inv2 = 0.5 / (delta * delta);
        let pref = 1.0 / (2.0 * PI * delta * delta);
        let mut grad = vec![0.0; 2 * n];
        let mut d_delta_kernel = 0.0;
        let mut d_denom_delta = 0.0;
        let mut ex = Vec::new();
        for (idx, p) in positions.iter().enumerate() {
            let (i0, i1) = axis_range(xs, p.x - radius, p.x + radius);
            let (j0, j1) = axis_range(ys, p.y - radius, p.y + radius);
            let mut gx = 0.0;
            let mut gy = 0.0;
            let mut gd = 0.0;
            if i0 <= i1 && j0 <= j1 {
                ex.clear();
                ex.extend(xs[i0..=i1].iter().map(|&x| (-(x - p.x) * (x - p.x) * inv2).exp()));
                for j in j0..=j1 {
                    let dy = ys[j] - p.y;
                    let ey = (-dy * dy * inv2).exp();
                    let row = &signed[j * m1 + i0..=j * m1 + i1];
                    let mut r0 = 0.0;
                    let mut r1 = 0.0;
                    let mut r2 = 0.0;
                    for ((s, &e), &x) in row.iter().zip(&ex).zip(&xs[i0..=i1]) {
                        let se = s * e;
                        let dx = x - p.x;
                        r0 += se;
                        r1 += se * dx;
                        if with_delta {
                            r2 += se * dx * dx;
                        }
                    }
                    gx += ey * r1;
                    gy += ey * dy * r0;
                    if with_delta {
                        gd += ey * (r2 + dy * dy * r0 - 2.0 * delta * delta * r0);
                    }
                }
            }
            // d G / d x = G (z - x) / delta^2
            let mut grad_x = pref * gx / (delta * delta) / denom;
            let mut grad_y = pref * gy / (delta * delta) / denom;
            if with_delta {
                // d G / d delta = G (r^2 - 2 delta^2) / delta^3
                d_delta_kernel += pref * gd / (delta * delta * delta);
            }
            if norm == BlobNormalization::Domain {
                let mx = gaussian_interval_mass(p.x, delta, d.width);
                let my = gaussian_interval_mass(p.y, delta, d.height);
                grad_x -= gaussian_interval_mass_dc(p.x, delta, d.width) * my * q / denom;
                grad_y -= mx * gaussian_interval_mass_dc(p.y, delta, d.height) * q / denom;
                if with_delta {
                    d_denom_delta += gaussian_interval_mass_ddelta(p.x, delta, d.width) * my
                        + mx * gaussian_interval_mass_ddelta(p.y, delta, d.height);
                }
            }
            grad[2 * idx] = grad_x;
            grad[2 * idx + 1] = grad_y;
        }
        let delta_grad = if with_delta {
            d_delta_kernel / denom - d_denom_delta * q / denom
        } else {
            0.0
        };
        ErrorGradient {
            value,
            positions: grad,
            delta: delta_grad,
        }
    }
}

pub(crate) fn check_bounds(value: f64, upper: f64) -> Result<f64> {
    if value < -BOUND_SLACK || value > upper + BOUND_SLACK || !value.is_finite() {
        return Err(Error::QuadratureResolution {
            value,
            tolerance: BOUND_SLACK,
        });
    }
    Ok(value.clamp(0.0, upper))
}

/// Inclusive index range of sorted nodes lying in `[lo, hi]`; empty ranges
/// come back with start > end.
#[inline]
fn axis_range(nodes: &[f64], lo: f64, hi: f64) -> (usize, usize) {
    let start = nodes.partition_point(|&v| v < lo);
    let end = nodes.partition_point(|&v| v <= hi);
    if end == 0 || start >= end {
        (1, 0)
    } else {
        (start, end - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_range_basics() {
        let nodes = [0.5, 1.5, 2.5, 3.5];
        assert_eq!(axis_range(&nodes, 1.0, 3.0), (1, 2));
        assert_eq!(axis_range(&nodes, -5.0, 0.1), (1, 0));
        assert_eq!(axis_range(&nodes, 1.5, 1.5), (1, 1));
        assert_eq!(axis_range(&nodes, 9.0, 10.0), (1, 0));
    }

    #[test]
    fn bounds_check() {
        assert_eq!(check_bounds(2.0 + 5e-7, 2.0).unwrap(), 2.0);
        assert!(check_bounds(2.0 + 2e-6, 2.0).is_err());
        assert!(check_bounds(-2e-6, 2.0).is_err());
    }
}
