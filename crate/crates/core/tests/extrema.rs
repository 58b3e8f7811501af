use std::cell::RefCell;
use std::f64::consts::TAU;
use std::path::PathBuf;

use swarm_coverage::error_metric::{error, GridEvaluator};
use swarm_coverage::extrema::*;
use swarm_coverage::*;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

/// Records every accepted iterate (the optimizer evaluates the gradient only there).
struct Recorder<F> {
    lo: Vec<f64>,
    hi: Vec<f64>,
    f: F,
    accepted: RefCell<Vec<(f64, Vec<f64>)>>,
}

impl<F: Fn(&[f64], &mut [f64]) -> f64> BoxObjective for Recorder<F> {
    fn lower(&self) -> &[f64] {
        &self.lo
    }
    fn upper(&self) -> &[f64] {
        &self.hi
    }
    fn value(&self, x: &[f64]) -> f64 {
        let mut g = vec![0.0; x.len()];
        (self.f)(x, &mut g)
    }
    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let v = (self.f)(x, grad);
        self.accepted.borrow_mut().push((v, x.to_vec()));
        v
    }
}

fn check_descent<F: Fn(&[f64], &mut [f64]) -> f64>(obj: &Recorder<F>) {
    let acc = obj.accepted.borrow();
    assert!(acc.len() > 2);
    for w in acc.windows(2) {
        assert!(w[1].0 <= w[0].0, "objective rose from {} to {}", w[0].0, w[1].0);
    }
    for (_, x) in acc.iter() {
        for ((v, lo), hi) in x.iter().zip(&obj.lo).zip(&obj.hi) {
            assert!(lo <= v && v <= hi);
        }
    }
}

#[test]
fn descent_is_monotone_and_feasible() {
    let rosen = Recorder {
        lo: vec![-2.0, -0.5],
        hi: vec![0.8, 3.0],
        f: |x: &[f64], g: &mut [f64]| {
            let (a, b) = (x[0], x[1]);
            g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a) + 3.0 * (3.0 * a).cos();
            g[1] = 200.0 * (b - a * a);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2) + (3.0 * a).sin()
        },
        accepted: RefCell::new(Vec::new()),
    };
    for settings in [OptimizerSettings::default(), OptimizerSettings { memory: 0, ..Default::default() }] {
        rosen.accepted.borrow_mut().clear();
        let r = minimize(&rosen, &[-1.5, 2.5], &settings);
        assert!(r.converged());
        check_descent(&rosen);
    }

    let rho = TargetDensity::standard_ring();
    let d = *rho.domain();
    let rule = QuadratureRule::default_for(d, 2.0).unwrap();
    let ev = GridEvaluator::new(&rho, &rule).unwrap();
    let n = 20;
    let metric = Recorder {
        lo: vec![0.0; 2 * n],
        hi: (0..2 * n).map(|k| if k % 2 == 0 { d.width } else { d.height }).collect(),
        f: |x: &[f64], g: &mut [f64]| {
            let pts: Vec<Point> = x.chunks(2).map(|c| Point::new(c[0], c[1])).collect();
            let eg = ev.error_and_gradient(&pts, 2.0, BlobNormalization::Domain, false);
            g.copy_from_slice(&eg.positions);
            eg.value
        },
        accepted: RefCell::new(Vec::new()),
    };
    let mut rng = rng::stream(1, rng::Purpose::Fuzz, 0);
    let x0: Vec<f64> = InitStrategy::Uniform
        .place(&d, n, &mut rng)
        .iter()
        .flat_map(|p| [p.x, p.y])
        .collect();
    minimize(&metric, &x0, &OptimizerSettings::default());
    check_descent(&metric);
}

#[test]
fn single_robot_finds_an_exactly_representable_target() {
    let d = Domain::new(48.0, 70.0).unwrap();
    let blob = SwarmConfig::new(vec![d.center()], 2.0, Kernel::Gaussian).unwrap();
    let grid = GridSpec::new(d, 481, 701, NodeLayout::CellCorners).unwrap();
    let rho = TargetDensity::gridded(ScalarField::sample(grid, |x, y| {
        error_metric::blob_function(&blob, &d, Point::new(x, y)).unwrap() + 1e-12
    }))
    .unwrap();
    let rule = QuadratureRule::default_for(d, 2.0).unwrap();
    let settings = OptimizerSettings { starts: 4, seed: 2, ..Default::default() };
    let half = minimize_error(&rho, &rule, 1, 2.0, &settings, &InitStrategy::Uniform).unwrap();
    assert!(half.value < 2e-3, "{}", half.value);
    let p = half.config.positions[0];
    assert!(p.dist2(d.center()).sqrt() < 0.05, "{p:?}");
}

#[test]
fn corner_cluster_maximum_is_stationary() {
    let rho = TargetDensity::standard_ring();
    let rule = QuadratureRule::default_for(*rho.domain(), 2.0).unwrap();
    let plain = OptimizerSettings { continuation: vec![1.0], ..Default::default() };
    let corner = InitStrategy::Given(vec![Point::new(0.0, 0.0); 200]);
    let first = maximize_error(&rho, &rule, 200, 2.0, &plain, &corner).unwrap();
    let p = first.config.positions[0];
    assert!(first.config.positions.iter().all(|q| q.dist2(p) < 1e-12));
    assert!(p.x < 2.0 && p.y < 2.0 && first.value >= 1.97, "{p:?}");

    let again = maximize_error(&rho, &rule, 200, 2.0, &plain, &InitStrategy::Given(first.config.positions)).unwrap();
    let r = &again.records[0];
    assert!(r.iterations <= 2, "{} iterations", r.iterations);
    assert!((r.final_value - r.initial_value).abs() <= 1e-6);
}

#[test]
fn uniform_target_pushes_delta_to_its_upper_bound() {
    let d = Domain::new(20.0, 20.0).unwrap();
    let rho = TargetDensity::uniform(d);
    let rule = QuadratureRule::new(RuleKind::Rectangle, d, 80, 80).unwrap();
    let ev = GridEvaluator::new(&rho, &rule).unwrap();
    // one-dimensional oracle: the best robot position is the center and e
    // falls monotonically in delta across the bracket
    let es: Vec<f64> = (0..=30)
        .map(|k| 0.5 * (16.0f64).powf(k as f64 / 30.0))
        .map(|dl| ev.raw_error(&[d.center()], dl, Kernel::Gaussian, BlobNormalization::Domain))
        .collect();
    assert!(es.windows(2).all(|w| w[1] < w[0]));
    let settings = OptimizerSettings { starts: 2, seed: 3, ..Default::default() };
    let (half, delta) = minimize_error_with_delta(&rho, &rule, 1, &settings, (0.5, 8.0), &InitStrategy::Uniform).unwrap();
    assert!((delta - 8.0).abs() < 1e-6, "{delta}");
    assert!(half.value <= *es.last().unwrap() + 1e-9);
}

#[test]
fn result_invariants_hold() {
    let rho = TargetDensity::standard_ring();
    let rule = QuadratureRule::default_for(*rho.domain(), 3.0).unwrap();
    let settings = OptimizerSettings { starts: 3, seed: 4, ..Default::default() };
    let r = find_extrema(&rho, &rule, 12, 3.0, &settings, &InitStrategy::Uniform, &InitStrategy::Uniform).unwrap();
    assert!(0.0 <= r.e_minus && r.e_minus <= r.e_plus && r.e_plus <= 2.0);
    assert!(r.min_records.iter().all(|s| r.e_minus <= s.final_value + 1e-12));
    assert!(r.max_records.iter().all(|s| r.e_plus >= s.final_value - 1e-12));
    assert!(r.argmin.positions.iter().chain(&r.argmax.positions).all(|p| rho.domain().contains(*p)));
}

#[test]
fn fixture_argmin_is_stable_under_grid_refinement() {
    let rho = TargetDensity::standard_ring();
    let cfg = io::read_swarm_config(&fixture("ring_n200_argmin.csv")).unwrap();
    let rule = QuadratureRule::default_for(*rho.domain(), 2.0).unwrap();
    let coarse = error(&cfg, &rho, &rule).unwrap();
    let fine = error(&cfg, &rho, &rule.refined(2).unwrap()).unwrap();
    assert!((coarse - fine).abs() < 5e-3, "{coarse} vs {fine}");
}

fn polar(rho: &TargetDensity, cfg: &SwarmConfig) -> Vec<(f64, f64)> {
    let (c, _, _) = rho.annulus().unwrap();
    cfg.positions
        .iter()
        .map(|p| (p.dist2(c).sqrt(), (p.y - c.y).atan2(p.x - c.x).rem_euclid(TAU)))
        .collect()
}

fn design(n: usize) -> SwarmConfig {
    let rho = TargetDensity::standard_ring();
    let rule = QuadratureRule::default_for(*rho.domain(), 1.0).unwrap();
    let settings = OptimizerSettings { starts: 12, seed: 5, ..Default::default() };
    let (half, _) = minimize_error_with_delta(&rho, &rule, n, &settings, (0.5, 12.0), &InitStrategy::Uniform).unwrap();
    half.config
}

#[test]
fn twenty_two_robots_form_one_ring() {
    let rho = TargetDensity::standard_ring();
    let (_, r1, r2) = rho.annulus().unwrap();
    let pts = polar(&rho, &design(22));
    assert!(pts.iter().all(|&(r, _)| r1 < r && r < r2), "{pts:?}");
    let mut angles: Vec<f64> = pts.iter().map(|p| p.1).collect();
    angles.sort_by(f64::total_cmp);
    let wrap = angles[0] + TAU - angles[angles.len() - 1];
    let max_gap = angles.windows(2).map(|w| w[1] - w[0]).fold(wrap, f64::max);
    assert!(max_gap < 2.0 * TAU / 22.0, "{max_gap}");
}

#[test]
fn twenty_five_robots_split_into_two_rings() {
    let rho = TargetDensity::standard_ring();
    let mut radii: Vec<f64> = polar(&rho, &design(25)).iter().map(|p| p.0).collect();
    radii.sort_by(f64::total_cmp);
    // widest gap between consecutive radii separates two populated shells
    let (k, gap) = radii
        .windows(2)
        .enumerate()
        .map(|(k, w)| (k, w[1] - w[0]))
        .fold((0, 0.0), |best, x| if x.1 > best.1 { x } else { best });
    let (inner, outer) = (k + 1, radii.len() - k - 1);
    assert!(gap > 1.5 && inner >= 5 && outer >= 5, "{radii:?}");
}

#[test]
fn lone_robot_maximum_sits_in_a_corner() {
    let d = Domain::new(20.0, 30.0).unwrap();
    let rho = TargetDensity::uniform(d);
    let rule = QuadratureRule::default_for(d, 2.0).unwrap();
    let settings = OptimizerSettings { starts: 4, seed: 6, ..Default::default() };
    let half = maximize_error(&rho, &rule, 1, 2.0, &settings, &InitStrategy::Uniform).unwrap();
    let p = half.config.positions[0];
    let nearest = d.corners().iter().map(|c| c.dist2(p).sqrt()).fold(f64::INFINITY, f64::min);
    assert!(nearest < 2.0, "{p:?}");
}
