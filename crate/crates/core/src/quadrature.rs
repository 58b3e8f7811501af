//! Tensor-product quadrature over the domain and the convergence-study
//! harness that measures how each rule behaves on the error integrand.

use std::f64::consts::PI;
use std::fmt;

use rayon::prelude::*;

use crate::density::{Domain, GridSpec, NodeLayout, Point};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleKind {
    Rectangle,
    Trapezoid,
    Simpson,
}

impl RuleKind {
    pub fn name(self) -> &'static str {
        match self {
            RuleKind::Rectangle => "rectangle",
            RuleKind::Trapezoid => "trapezoid",
            RuleKind::Simpson => "simpson",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rectangle" | "midpoint" => Ok(RuleKind::Rectangle),
            "trapezoid" | "trapezoidal" => Ok(RuleKind::Trapezoid),
            "simpson" => Ok(RuleKind::Simpson),
            other => Err(Error::param(format!("unknown quadrature rule '{other}'"))),
        }
    }

    pub fn layout(self) -> NodeLayout {
        match self {
            RuleKind::Rectangle => NodeLayout::CellCenters,
            RuleKind::Trapezoid | RuleKind::Simpson => NodeLayout::CellCorners,
        }
    }
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A composite rule on a regular grid; weights are per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    kind: RuleKind,
    grid: GridSpec,
    xs: Vec<f64>,
    ys: Vec<f64>,
    wx: Vec<f64>,
    wy: Vec<f64>,
}

impl QuadratureRule {
    /// `m1 x m2` nodes; for the rectangle rule these are `m1 x m2` cells.
    pub fn new(kind: RuleKind, domain: Domain, m1: usize, m2: usize) -> Result<Self> {
        QuadratureRule::from_grid(kind, GridSpec::new(domain, m1, m2, kind.layout())?)
    }

    pub fn from_grid(kind: RuleKind, grid: GridSpec) -> Result<Self> {
        if grid.layout != kind.layout() {
            return Err(Error::param(format!(
                "{kind} rule needs {:?} nodes, grid has {:?}",
                kind.layout(),
                grid.layout
            )));
        }
        if kind == RuleKind::Simpson && (grid.m1 % 2 == 0 || grid.m2 % 2 == 0) {
            return Err(Error::param(format!(
                "Simpson's rule needs odd node counts, got {}x{}",
                grid.m1, grid.m2
            )));
        }
        let (dx, dy) = grid.spacing();
        Ok(QuadratureRule {
            kind,
            grid,
            xs: grid.xs(),
            ys: grid.ys(),
            wx: axis_weights(kind, grid.m1, dx),
            wy: axis_weights(kind, grid.m2, dy),
        })
    }

    /// Production rule for blob radius `delta`: rectangle rule on cell centers
    /// with spacing at most `min(delta / 4, 0.5)`.
    pub fn default_for(domain: Domain, delta: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::param(format!("blob radius must be positive, got {delta}")));
        }
        let grid = GridSpec::with_max_spacing(domain, (delta / 4.0).min(0.5), NodeLayout::CellCenters)?;
        QuadratureRule::from_grid(RuleKind::Rectangle, grid)
    }

    pub fn kind(&self) -> RuleKind {
        self.kind
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn domain(&self) -> &Domain {
        &self.grid.domain
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn x_weights(&self) -> &[f64] {
        &self.wx
    }

    pub fn y_weights(&self) -> &[f64] {
        &self.wy
    }

    /// Same rule with each axis refined by `factor` (node counts adjusted to
    /// stay valid for the rule).
    pub fn refined(&self, factor: usize) -> Result<Self> {
        let grow = |m: usize| match self.kind {
            RuleKind::Rectangle => m * factor,
            _ => (m - 1) * factor + 1,
        };
        QuadratureRule::new(self.kind, self.grid.domain, grow(self.grid.m1), grow(self.grid.m2))
    }

    /// Integrates `f` over the domain. Rows are evaluated in parallel and
    /// summed in a fixed order, so the result does not depend on scheduling.
    pub fn integrate<F>(&self, f: F) -> Result<f64>
    where
        F: Fn(Point) -> f64 + Sync,
    {
        let rows: Vec<Result<f64>> = self
            .ys
            .par_iter()
            .map(|&y| {
                let mut acc = 0.0;
                for (&x, &w) in self.xs.iter().zip(&self.wx) {
                    let v = f(Point::new(x, y));
                    if !v.is_finite() {
                        return Err(Error::Evaluation { x, y, value: v });
                    }
                    acc += w * v;
                }
                Ok(acc)
            })
            .collect();
        let mut total = 0.0;
        for (row, &w) in rows.into_iter().zip(&self.wy) {
            total += w * row?;
        }
        Ok(total)
    }

    /// Integrates precomputed node values (row-major, x fastest).
    pub fn integrate_values(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.grid.len() {
            return Err(Error::param("value count does not match the grid"));
        }
        let mut total = 0.0;
        for (j, row) in values.chunks_exact(self.grid.m1).enumerate() {
            let mut acc = 0.0;
            for (i, (&v, &w)) in row.iter().zip(&self.wx).enumerate() {
                if !v.is_finite() {
                    return Err(Error::Evaluation {
                        x: self.xs[i],
                        y: self.ys[j],
                        value: v,
                    });
                }
                acc += w * v;
            }
            total += self.wy[j] * acc;
        }
        Ok(total)
    }
}

fn axis_weights(kind: RuleKind, m: usize, d: f64) -> Vec<f64> {
    match kind {
        RuleKind::Rectangle => vec![d; m],
        RuleKind::Trapezoid => {
            let mut w = vec![d; m];
            w[0] = 0.5 * d;
            w[m - 1] = 0.5 * d;
            w
        }
        RuleKind::Simpson => (0..m)
            .map(|i| {
                let c = if i == 0 || i == m - 1 {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                c * d / 3.0
            })
            .collect(),
    }
}

/// One `(rule, m)` measurement of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub rule: RuleKind,
    pub m: usize,
    pub approx: f64,
    pub abs_error: f64,
}

/// Least-squares fit `E_m = 10^a * m^b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub rule: RuleKind,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub reference: f64,
    pub rows: Vec<StudyRow>,
    pub fits: Vec<PowerLawFit>,
}

impl ConvergenceStudy {
    pub fn slope(&self, rule: RuleKind) -> Option<f64> {
        self.fits.iter().find(|f| f.rule == rule).map(|f| f.b)
    }

    /// CSV body `rule,m,E_m` followed by one `# fit` comment line per rule.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rule,m,E_m\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{:.10e}\n", r.rule, r.m, r.abs_error));
        }
        let fits: Vec<String> = self
            .fits
            .iter()
            .map(|f| format!("{}: a={:.4} b={:.4}", f.rule, f.a, f.b))
            .collect();
        out.push_str(&format!("# fit E_m = 10^a m^b; {}\n", fits.join("; ")));
        out
    }
}

/// Measures `|Q_m(f) - reference|` for each rule and node count `m` (nodes per
/// axis) and fits a power law per rule.
pub fn convergence_study<F>(
    domain: Domain,
    f: F,
    rules: &[RuleKind],
    m_values: &[usize],
    reference: f64,
) -> Result<ConvergenceStudy>
where
    F: Fn(Point) -> f64 + Sync,
{
    if m_values.len() < 3 {
        return Err(Error::Fit(format!(
            "a power-law fit needs at least 3 node counts, got {}",
            m_values.len()
        )));
    }
    if m_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("node counts must be strictly ascending"));
    }
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for &rule in rules {
        let mut ms = Vec::new();
        let mut es = Vec::new();
        for &m in m_values {
            let q = QuadratureRule::new(rule, domain, m, m)?;
            let approx = q.integrate(&f)?;
            let abs_error = (approx - reference).abs();
            rows.push(StudyRow {
                rule,
                m,
                approx,
                abs_error,
            });
            ms.push(m as f64);
            es.push(abs_error);
        }
        let (a, b) = fit_power_law(&ms, &es)?;
        fits.push(PowerLawFit { rule, a, b });
    }
    Ok(ConvergenceStudy {
        reference,
        rows,
        fits,
    })
}

/// Default node counts for a convergence study: 25 odd counts spaced
/// geometrically from 25 to 1001.
pub fn study_node_counts() -> Vec<usize> {
    let mut ms: Vec<usize> = (0..=24)
        .map(|k| (25.0 * 40f64.powf(k as f64 / 24.0)) as usize | 1)
        .collect();
    ms.dedup();
    ms
}

/// Least-squares fit of `log10 y = a + b log10 x`; non-positive `y` are skipped.
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.log10(), y.log10()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::Fit(format!(
            "need at least 3 positive points for a power-law fit, got {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::Fit("abscissae are all equal".into()));
    }
    let b = sxy / sxx;
    Ok((my - b * mx, b))
}

/// Outcome of [`polar_reference`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceValue {
    pub value: f64,
    /// `|I_L - I_{L-1}| / |I_L|` at the last level.
    pub relative_change: f64,
    pub levels: usize,
    pub converged: bool,
}

// 5-point Gauss-Legendre on [-1, 1]
const GL_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

/// High-accuracy reference integral for integrands that jump across circles
/// about `center` (pass the circle radii in `breaks`; empty for continuous
/// integrands).
///
/// Integrates in polar coordinates about `center` with composite 5-point
/// Gauss-Legendre panels whose edges follow the domain corners and the jump
/// circles, so the only remaining non-smoothness is inside the integrand.
/// Panel size is halved until successive values agree to `rel_tol` or
/// `max_levels` is reached.
pub fn polar_reference<F>(
    domain: Domain,
    f: F,
    center: Point,
    breaks: &[f64],
    rel_tol: f64,
    max_levels: usize,
) -> Result<ReferenceValue>
where
    F: Fn(Point) -> f64 + Sync,
{
    if !domain.contains(center) || center.x <= 0.0 || center.y <= 0.0 {
        return Err(Error::param("polar reference center must be interior"));
    }
    let edges = [
        (0.0, domain.width - center.x),
        (0.5 * PI, domain.height - center.y),
        (PI, center.x),
        (1.5 * PI, center.y),
    ];
    let mut angles: Vec<f64> = domain
        .corners()
        .iter()
        .map(|c| (c.y - center.y).atan2(c.x - center.x).rem_euclid(2.0 * PI))
        .collect();
    for &r in breaks {
        for &(phi, d) in &edges {
            if d < r {
                let a = (d / r).acos();
                angles.push((phi + a).rem_euclid(2.0 * PI));
                angles.push((phi - a).rem_euclid(2.0 * PI));
            }
        }
    }
    angles.sort_by(|a, b| a.total_cmp(b));
    angles.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let mut pieces = Vec::with_capacity(angles.len());
    for k in 0..angles.len() {
        let a = angles[k];
        let b = if k + 1 < angles.len() { angles[k + 1] } else { angles[0] + 2.0 * PI };
        if b - a > 1e-14 {
            pieces.push((a, b));
        }
    }
    let ray_length = |theta: f64| -> f64 {
        let mut best = f64::INFINITY;
        for &(phi, d) in &edges {
            let c = (theta - phi).cos();
            if c > 1e-15 {
                best = best.min(d / c);
            }
        }
        best
    };
    let r_far = domain
        .corners()
        .iter()
        .map(|c| c.dist2(center).sqrt())
        .fold(0.0, f64::max);

    let level_value = |h: f64| -> Result<f64> {
        let per_piece: Vec<Result<f64>> = pieces
            .par_iter()
            .map(|&(ta, tb)| {
                let n_theta = (((tb - ta) * r_far) / h).ceil().max(1.0) as usize;
                let dt = (tb - ta) / n_theta as f64;
                let mut total = 0.0;
                for p in 0..n_theta {
                    let t0 = ta + p as f64 * dt;
                    for (&u, &wu) in GL_NODES.iter().zip(&GL_WEIGHTS) {
                        let theta = t0 + 0.5 * dt * (u + 1.0);
                        let w_theta = 0.5 * dt * wu;
                        let (s, c) = theta.sin_cos();
                        let rmax = ray_length(theta);
                        let mut cuts = vec![0.0];
                        cuts.extend(breaks.iter().copied().filter(|&r| r < rmax));
                        cuts.push(rmax);
                        let mut ray = 0.0;
                        for seg in cuts.windows(2) {
                            let (ra, rb) = (seg[0], seg[1]);
                            let n_r = ((rb - ra) / h).ceil().max(1.0) as usize;
                            let dr = (rb - ra) / n_r as f64;
                            for q in 0..n_r {
                                let r0 = ra + q as f64 * dr;
                                for (&v, &wv) in GL_NODES.iter().zip(&GL_WEIGHTS) {
                                    let r = r0 + 0.5 * dr * (v + 1.0);
                                    let z = domain.clamp(Point::new(center.x + r * c, center.y + r * s));
                                    let val = f(z);
                                    if !val.is_finite() {
                                        return Err(Error::Evaluation { x: z.x, y: z.y, value: val });
                                    }
                                    ray += 0.5 * dr * wv * val * r;
                                }
                            }
                        }
                        total += w_theta * ray;
                    }
                }
                Ok(total)
            })
            .collect();
        let mut sum = 0.0;
        for v in per_piece {
            sum += v?;
        }
        Ok(sum)
    };

    let mut h = 1.0;
    let mut prev = level_value(h)?;
    let mut change = f64::INFINITY;
    let mut levels = 1;
    while levels < max_levels.max(2) {
        h *= 0.5;
        let next = level_value(h)?;
        levels += 1;
        change = (next - prev).abs() / next.abs().max(f64::MIN_POSITIVE);
        prev = next;
        if change < rel_tol {
            break;
        }
    }
    Ok(ReferenceValue {
        value: prev,
        relative_change: change,
        levels,
        converged: change < rel_tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dom() -> Domain {
        Domain::new(48.0, 70.0).unwrap()
    }

    #[test]
    fn constant_integrand_is_exact() {
        for kind in [RuleKind::Rectangle, RuleKind::Trapezoid, RuleKind::Simpson] {
            let q = QuadratureRule::new(kind, dom(), 33, 45).unwrap();
            let v = q.integrate(|_| 1.0).unwrap();
            assert!((v - 3360.0).abs() < 1e-9, "{kind}: {v}");
        }
    }

    #[test]
    fn weights_sum_to_axis_length() {
        for kind in [RuleKind::Rectangle, RuleKind::Trapezoid, RuleKind::Simpson] {
            let q = QuadratureRule::new(kind, dom(), 17, 29).unwrap();
            let sx: f64 = q.x_weights().iter().sum();
            let sy: f64 = q.y_weights().iter().sum();
            assert!((sx - 48.0).abs() < 1e-12 && (sy - 70.0).abs() < 1e-12);
        }
    }

    #[test]
    fn trapezoid_exact_on_linear() {
        let q = QuadratureRule::new(RuleKind::Trapezoid, dom(), 33, 33).unwrap();
        let v = q.integrate(|p| p.x).unwrap();
        assert!((v - 80640.0).abs() < 1e-6);
    }

    #[test]
    fn simpson_exact_on_cubics() {
        let q = QuadratureRule::new(RuleKind::Simpson, dom(), 5, 7).unwrap();
        let v = q.integrate(|p| p.x.powi(3) * p.y * p.y).unwrap();
        let exact = 48f64.powi(4) / 4.0 * 70f64.powi(3) / 3.0;
        assert!((v - exact).abs() < 1e-6 * exact);
    }

    #[test]
    fn simpson_needs_odd_counts() {
        assert!(QuadratureRule::new(RuleKind::Simpson, dom(), 32, 33).is_err());
        assert!(QuadratureRule::new(RuleKind::Simpson, dom(), 33, 33).is_ok());
    }

    #[test]
    fn rectangle_exact_on_cellwise_constants() {
        let q = QuadratureRule::new(RuleKind::Rectangle, dom(), 12, 14).unwrap();
        // constant on each 4 x 5 cell
        let f = |p: Point| ((p.x / 4.0).floor() + 3.0 * (p.y / 5.0).floor()).sin() + 2.0;
        let mut exact = 0.0;
        for j in 0..14 {
            for i in 0..12 {
                exact += 20.0 * ((i as f64 + 3.0 * j as f64).sin() + 2.0);
            }
        }
        assert!((q.integrate(f).unwrap() - exact).abs() < 1e-9);
    }

    #[test]
    fn non_finite_value_names_the_node() {
        let q = QuadratureRule::new(RuleKind::Trapezoid, dom(), 5, 5).unwrap();
        let err = q
            .integrate(|p| if p.x == 12.0 && p.y == 35.0 { f64::NAN } else { 1.0 })
            .unwrap_err();
        match err {
            Error::Evaluation { x, y, .. } => assert_eq!((x, y), (12.0, 35.0)),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn linearity() {
        let q = QuadratureRule::new(RuleKind::Simpson, dom(), 41, 41).unwrap();
        let f = |p: Point| (0.1 * p.x).sin() + p.y;
        let g = |p: Point| (-0.01 * p.dist2(Point::new(20.0, 30.0))).exp();
        let (a, b) = (2.5, -0.75);
        let lhs = q.integrate(|p| a * f(p) + b * g(p)).unwrap();
        let rhs = a * q.integrate(f).unwrap() + b * q.integrate(g).unwrap();
        assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs());
    }

    #[test]
    fn refinement_differences_shrink() {
        let f = |p: Point| (-(p.dist2(Point::new(17.0, 40.0))) / 50.0).exp() * (0.2 * p.y).cos();
        for kind in [RuleKind::Rectangle, RuleKind::Trapezoid, RuleKind::Simpson] {
            let base = match kind {
                RuleKind::Rectangle => 64,
                _ => 65,
            };
            let mut rule = QuadratureRule::new(kind, dom(), base, base).unwrap();
            let mut prev = rule.integrate(f).unwrap();
            let mut last_diff = f64::INFINITY;
            for _ in 0..3 {
                rule = rule.refined(2).unwrap();
                let v = rule.integrate(f).unwrap();
                let diff = (v - prev).abs();
                assert!(diff < last_diff || diff < 1e-13, "{kind}: {diff} !< {last_diff}");
                last_diff = diff;
                prev = v;
            }
        }
    }

    #[test]
    fn study_needs_three_points() {
        let err = convergence_study(dom(), |_| 1.0, &[RuleKind::Simpson], &[9, 17], 3360.0);
        assert!(matches!(err, Err(Error::Fit(_))));
    }

    #[test]
    fn smooth_integrand_simpson_slope() {
        let exact = 0.25 * PI * crate::special::erf(48.0) * crate::special::erf(70.0);
        let f = |p: Point| (-(p.x * p.x + p.y * p.y)).exp();
        let study = convergence_study(dom(), f, &[RuleKind::Simpson], &[65, 97, 129, 193, 257], exact)
            .unwrap();
        let b = study.slope(RuleKind::Simpson).unwrap();
        assert!(b <= -3.5, "slope {b}");
        assert!(study.to_csv().starts_with("rule,m,E_m\nsimpson,65,"));
    }

    #[test]
    fn power_law_fit_recovers_exponent() {
        let xs = [10.0, 20.0, 40.0, 80.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-1.5)).collect();
        let (a, b) = fit_power_law(&xs, &ys).unwrap();
        assert!((b + 1.5).abs() < 1e-12 && (a - 3f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn polar_reference_handles_jumps() {
        let d = dom();
        let c = d.center();
        // indicator of an annulus that pokes outside the domain on the left
        let f = |p: Point| {
            let r2 = p.dist2(c);
            if r2 > 10.0 * 10.0 && r2 < 30.0 * 30.0 {
                1.0
            } else {
                0.0
            }
        };
        let exact = crate::density::disc_rect_area(c, 30.0, 0.0, 48.0, 0.0, 70.0)
            - crate::density::disc_rect_area(c, 10.0, 0.0, 48.0, 0.0, 70.0);
        let r = polar_reference(d, f, c, &[10.0, 30.0], 1e-12, 4).unwrap();
        assert!((r.value - exact).abs() < 1e-9 * exact, "{} vs {exact}", r.value);
        let smooth = polar_reference(d, |p| p.x * p.y, c, &[], 1e-12, 3).unwrap();
        assert!((smooth.value - 0.25 * 48f64.powi(2) * 70f64.powi(2)).abs() < 1e-6);
    }
}
