//! Rectangular domains, normalized target densities and blob kernels.

mod grid;
mod kernel;

pub use grid::{GridSpec, NodeLayout, ScalarField};
pub use kernel::{disc_rect_area, kernel_value, Kernel, GAUSSIAN_CUTOFF};
pub(crate) use kernel::{
    gaussian_interval_mass, gaussian_interval_mass_dc, gaussian_interval_mass_ddelta,
};

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::{QuadratureRule, RuleKind};

/// A point in the plane, in inches.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist2(self, other: Point) -> f64 {
        let (dx, dy) = (self.x - other.x, self.y - other.y);
        dx * dx + dy * dy
    }
}

/// The rectangle `[0, width] x [0, height]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub width: f64,
    pub height: f64,
}

impl Domain {
    pub fn new(width: f64, height: f64) -> Result<Self> {
        if !(width > 0.0 && height > 0.0) || !width.is_finite() || !height.is_finite() {
            return Err(Error::param(format!(
                "domain sides must be positive and finite, got {width} x {height}"
            )));
        }
        Ok(Domain { width, height })
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn center(&self) -> Point {
        Point::new(0.5 * self.width, 0.5 * self.height)
    }

    pub fn contains(&self, p: Point) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }

    /// Nearest point of the domain.
    pub fn clamp(&self, p: Point) -> Point {
        Point::new(p.x.clamp(0.0, self.width), p.y.clamp(0.0, self.height))
    }

    pub fn corners(&self) -> [Point; 4] {
        [
            Point::new(0.0, 0.0),
            Point::new(self.width, 0.0),
            Point::new(self.width, self.height),
            Point::new(0.0, self.height),
        ]
    }

    /// Domains are compared with a small relative tolerance so that values
    /// round-tripped through decimal text still match.
    pub fn approx_eq(&self, other: &Domain) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0);
        close(self.width, other.width) && close(self.height, other.height)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Ring {
        center: Point,
        r1: f64,
        r2: f64,
        inner_weight: f64,
        outer_weight: f64,
    },
    Ripple,
    Gridded(ScalarField),
}

/// A strictly positive density on a [`Domain`] with unit integral.
///
/// Values are immutable after construction, so a density can be shared freely
/// between worker threads.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetDensity {
    domain: Domain,
    shape: Shape,
    norm: f64,
    max: f64,
}

/// Grid size used to normalize the ripple density with Simpson's rule.
const RIPPLE_SIMPSON_NODES: usize = 2001;

impl TargetDensity {
    /// Piecewise-constant annulus density: `inner_weight` on the open annulus
    /// `r1 < |z - center| < r2` about the domain center, `outer_weight`
    /// elsewhere, scaled to unit mass.
    pub fn ring(
        width: f64,
        height: f64,
        r1: f64,
        r2: f64,
        inner_weight: f64,
        outer_weight: f64,
    ) -> Result<Self> {
        let domain = Domain::new(width, height)?;
        if !(r1 > 0.0 && r1 < r2) {
            return Err(Error::param(format!("ring radii must satisfy 0 < r1 < r2, got {r1}, {r2}")));
        }
        if !(inner_weight > 0.0 && outer_weight > 0.0) {
            return Err(Error::param("ring weights must be positive"));
        }
        let center = domain.center();
        // annulus area clipped to the domain; exact whether or not it fits
        let clipped = |r: f64| disc_rect_area(center, r, 0.0, width, 0.0, height);
        let annulus = clipped(r2) - clipped(r1);
        let norm = outer_weight * domain.area() + (inner_weight - outer_weight) * annulus;
        Ok(TargetDensity {
            domain,
            shape: Shape::Ring {
                center,
                r1,
                r2,
                inner_weight,
                outer_weight,
            },
            norm,
            max: inner_weight.max(outer_weight) / norm,
        })
    }

    /// Standard ring target: 48 x 70 in domain, radii 11.4 and 20.6 in,
    /// weights 36 inside the annulus and 1 outside.
    pub fn standard_ring() -> Self {
        TargetDensity::ring(48.0, 70.0, 11.4, 20.6, 36.0, 1.0).expect("valid constants")
    }

    /// `2 + sin(3 pi |z|) + 2 z1^2 / w^2 + z2^3 / h^3`, scaled to unit mass.
    pub fn ripple(width: f64, height: f64) -> Result<Self> {
        let domain = Domain::new(width, height)?;
        let rule = QuadratureRule::new(
            RuleKind::Simpson,
            domain,
            RIPPLE_SIMPSON_NODES,
            RIPPLE_SIMPSON_NODES,
        )?;
        let norm = rule.integrate(|p| ripple_raw(p, width, height))?;
        // term-wise suprema: 2 + 1 + 2 + 1
        let max = 6.0 / norm;
        Ok(TargetDensity {
            domain,
            shape: Shape::Ripple,
            norm,
            max,
        })
    }

    pub fn standard_ripple() -> Self {
        TargetDensity::ripple(48.0, 70.0).expect("valid constants")
    }

    /// Bilinear interpolant of a positive corner-node field, renormalized to
    /// unit mass.
    pub fn gridded(field: ScalarField) -> Result<Self> {
        if field.grid.layout != NodeLayout::CellCorners {
            return Err(Error::param("gridded densities need a cell-corner field"));
        }
        if let Some((k, v)) = field
            .values
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v > 0.0) || !v.is_finite())
        {
            let (i, j) = (k % field.grid.m1, k / field.grid.m1);
            return Err(Error::param(format!(
                "gridded density value {v} at node ({i}, {j}) is not positive"
            )));
        }
        // trapezoid weights integrate the bilinear interpolant exactly
        let rule = QuadratureRule::from_grid(RuleKind::Trapezoid, field.grid)?;
        let norm = rule.integrate_values(&field.values)?;
        let max = field.values.iter().cloned().fold(f64::MIN, f64::max) / norm;
        Ok(TargetDensity {
            domain: field.grid.domain,
            shape: Shape::Gridded(field),
            norm,
            max,
        })
    }

    /// Constant density `1 / |domain|`.
    pub fn uniform(domain: Domain) -> Self {
        let grid = GridSpec::new(domain, 2, 2, NodeLayout::CellCorners).expect("2x2 grid");
        TargetDensity::gridded(ScalarField {
            grid,
            values: vec![1.0; 4],
        })
        .expect("positive constant field")
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn kind_name(&self) -> &'static str {
        match self.shape {
            Shape::Ring { .. } => "ring",
            Shape::Ripple => "ripple",
            Shape::Gridded(_) => "gridded",
        }
    }

    /// Normalization constant `C = integral of the unnormalized density`.
    pub fn normalization(&self) -> f64 {
        self.norm
    }

    /// An upper bound on the density over the domain.
    pub fn density_max(&self) -> f64 {
        self.max
    }

    /// Density before division by the normalization constant.
    pub fn unnormalized(&self, p: Point) -> f64 {
        match &self.shape {
            Shape::Ring {
                center,
                r1,
                r2,
                inner_weight,
                outer_weight,
            } => {
                let d2 = p.dist2(*center);
                if d2 > r1 * r1 && d2 < r2 * r2 {
                    *inner_weight
                } else {
                    *outer_weight
                }
            }
            Shape::Ripple => ripple_raw(p, self.domain.width, self.domain.height),
            Shape::Gridded(field) => bilinear(field, p),
        }
    }

    #[inline]
    pub fn value(&self, p: Point) -> f64 {
        self.unnormalized(p) / self.norm
    }

    /// Circles across which the density jumps, as `(center, radii)`.
    pub fn discontinuity_circles(&self) -> Option<(Point, Vec<f64>)> {
        match self.shape {
            Shape::Ring { center, r1, r2, .. } => Some((center, vec![r1, r2])),
            _ => None,
        }
    }

    /// The annulus of a ring density as `(center, r1, r2)`.
    pub fn annulus(&self) -> Option<(Point, f64, f64)> {
        match self.shape {
            Shape::Ring { center, r1, r2, .. } => Some((center, r1, r2)),
            _ => None,
        }
    }

    /// Probability mass of the open annulus for ring densities.
    pub fn annulus_mass(&self) -> Option<f64> {
        match self.shape {
            Shape::Ring {
                center,
                r1,
                r2,
                inner_weight,
                ..
            } => {
                let d = self.domain;
                let clipped = |r: f64| disc_rect_area(center, r, 0.0, d.width, 0.0, d.height);
                Some(inner_weight * (clipped(r2) - clipped(r1)) / self.norm)
            }
            _ => None,
        }
    }

    /// Mass of the axis-aligned box `[x0, x1] x [y0, y1]` (clipped to the
    /// domain), by a `k x k` midpoint rule inside the box.
    pub fn box_mass(&self, x0: f64, x1: f64, y0: f64, y1: f64, k: usize) -> f64 {
        let (x0, x1) = (x0.max(0.0), x1.min(self.domain.width));
        let (y0, y1) = (y0.max(0.0), y1.min(self.domain.height));
        if x1 <= x0 || y1 <= y0 {
            return 0.0;
        }
        let k = k.max(1);
        let (dx, dy) = ((x1 - x0) / k as f64, (y1 - y0) / k as f64);
        let mut sum = 0.0;
        for j in 0..k {
            let y = y0 + (j as f64 + 0.5) * dy;
            for i in 0..k {
                sum += self.unnormalized(Point::new(x0 + (i as f64 + 0.5) * dx, y));
            }
        }
        sum * dx * dy / self.norm
    }
}

fn ripple_raw(p: Point, w: f64, h: f64) -> f64 {
    let r = (p.x * p.x + p.y * p.y).sqrt();
    2.0 + (3.0 * PI * r).sin() + 2.0 * p.x * p.x / (w * w) + (p.y / h).powi(3)
}

fn bilinear(field: &ScalarField, p: Point) -> f64 {
    let g = &field.grid;
    let (dx, dy) = g.spacing();
    let locate = |v: f64, d: f64, m: usize| -> (usize, f64) {
        let s = (v / d).max(0.0);
        let i = (s.floor() as usize).min(m - 2);
        (i, (s - i as f64).clamp(0.0, 1.0))
    };
    let (i, tx) = locate(p.x, dx, g.m1);
    let (j, ty) = locate(p.y, dy, g.m2);
    let v00 = field.at(i, j);
    let v10 = field.at(i + 1, j);
    let v01 = field.at(i, j + 1);
    let v11 = field.at(i + 1, j + 1);
    (1.0 - ty) * ((1.0 - tx) * v00 + tx * v10) + ty * ((1.0 - tx) * v01 + tx * v11)
}
