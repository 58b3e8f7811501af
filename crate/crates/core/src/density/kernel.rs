use std::f64::consts::{FRAC_1_PI, PI, SQRT_2};

use super::{Domain, Point};
use crate::error::{Error, Result};
use crate::special::erf;

/// Radially symmetric blob shape with unit mass over the plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Kernel {
    /// `G(z) = exp(-|z|^2 / 2) / (2 pi)`.
    #[default]
    Gaussian,
    /// Constant `1/pi` on the closed unit disc, zero outside.
    Indicator,
}

/// Gaussian blobs are cut off beyond this many blob radii; the discarded
/// tail mass is `exp(-32) ~ 1.3e-14`.
pub const GAUSSIAN_CUTOFF: f64 = 8.0;

impl Kernel {
    pub fn name(self) -> &'static str {
        match self {
            Kernel::Gaussian => "gaussian",
            Kernel::Indicator => "indicator",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" | "gauss" => Ok(Kernel::Gaussian),
            "indicator" | "disc" => Ok(Kernel::Indicator),
            other => Err(Error::param(format!("unknown kernel '{other}'"))),
        }
    }

    /// Unscaled kernel value at squared radius `r2`.
    #[inline]
    pub fn unit_value(self, r2: f64) -> f64 {
        match self {
            Kernel::Gaussian => (-0.5 * r2).exp() / (2.0 * PI),
            Kernel::Indicator => {
                if r2 <= 1.0 {
                    FRAC_1_PI
                } else {
                    0.0
                }
            }
        }
    }

    /// Radius beyond which the scaled kernel is treated as zero.
    pub fn support_radius(self, delta: f64) -> f64 {
        match self {
            Kernel::Gaussian => GAUSSIAN_CUTOFF * delta,
            Kernel::Indicator => delta,
        }
    }

    /// Mass of the blob `K^delta(. - center)` that falls inside the domain.
    pub fn domain_mass(self, center: Point, delta: f64, domain: &Domain) -> f64 {
        match self {
            Kernel::Gaussian => {
                gaussian_interval_mass(center.x, delta, domain.width)
                    * gaussian_interval_mass(center.y, delta, domain.height)
            }
            Kernel::Indicator => {
                disc_rect_area(center, delta, 0.0, domain.width, 0.0, domain.height)
                    / (PI * delta * delta)
            }
        }
    }
}

/// `K^delta(dz) = K(dz / delta) / delta^2`.
pub fn kernel_value(kernel: Kernel, dz: Point, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::param(format!("blob radius must be positive, got {delta}")));
    }
    let r2 = (dz.x * dz.x + dz.y * dz.y) / (delta * delta);
    Ok(kernel.unit_value(r2) / (delta * delta))
}

/// Mass of a 1-D normal `N(c, delta^2)` inside `[0, len]`.
#[inline]
pub(crate) fn gaussian_interval_mass(c: f64, delta: f64, len: f64) -> f64 {
    let s = delta * SQRT_2;
    0.5 * (erf((len - c) / s) + erf(c / s))
}

/// Derivative of [`gaussian_interval_mass`] with respect to the center `c`.
#[inline]
pub(crate) fn gaussian_interval_mass_dc(c: f64, delta: f64, len: f64) -> f64 {
    normal_density(c, delta) - normal_density(len - c, delta)
}

/// Derivative of [`gaussian_interval_mass`] with respect to `delta`.
#[inline]
pub(crate) fn gaussian_interval_mass_ddelta(c: f64, delta: f64, len: f64) -> f64 {
    -((len - c) * normal_density(len - c, delta) + c * normal_density(c, delta)) / delta
}

#[inline]
fn normal_density(u: f64, delta: f64) -> f64 {
    (-0.5 * u * u / (delta * delta)).exp() / (delta * (2.0 * PI).sqrt())
}

/// Area of the disc of radius `r` about `c` intersected with the rectangle
/// `[x0, x1] x [y0, y1]`.
pub fn disc_rect_area(c: Point, r: f64, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    if r <= 0.0 || x1 <= x0 || y1 <= y0 {
        return 0.0;
    }
    let f = |a: f64, b: f64| quadrant_area(a - c.x, b - c.y, r);
    let area = f(x1, y1) - f(x0, y1) - f(x1, y0) + f(x0, y0);
    area.clamp(0.0, PI * r * r)
}

/// Area of `{(x, y) : x^2 + y^2 <= r^2, x <= a, y <= b}`.
fn quadrant_area(a: f64, b: f64, r: f64) -> f64 {
    if a <= -r || b <= -r {
        return 0.0;
    }
    let a = a.min(r);
    // P(x) = area of the full-height chord strip left of x
    let half = |x: f64| (r * r - x * x).max(0.0).sqrt();
    let p = |x: f64| {
        let x = x.clamp(-r, r);
        0.5 * (x * half(x) + r * r * (x / r).clamp(-1.0, 1.0).asin()) + 0.25 * PI * r * r
    };
    if b >= r {
        return 2.0 * p(a);
    }
    let c = (r * r - b * b).sqrt();
    // strip where the horizontal cut y = b lies inside the disc: height s + b
    let cut = |u: f64, v: f64| if v > u { p(v) - p(u) + b * (v - u) } else { 0.0 };
    if b >= 0.0 {
        let left = 2.0 * p(a.min(-c));
        let middle = cut(-c, a.min(c));
        let right = if a > c { 2.0 * (p(a) - p(c)) } else { 0.0 };
        left + middle + right
    } else {
        cut(-c, a.min(c))
    }
}
