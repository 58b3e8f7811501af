use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use swarm_coverage::controller::{run_walkers, WalkerInit, WalkerSettings};
use swarm_coverage::error_metric::{
    discretization_error, error_with, metric_convergence_study, one_sided_error, pitfall_report,
};
use swarm_coverage::extrema::{
    design_sweep, find_extrema, minimize_error_with_delta, InitStrategy, OptimizerSettings, StartRecord,
    SweepSettings,
};
use swarm_coverage::quadrature::study_node_counts;
use swarm_coverage::statistics::{
    benchmark_controller, estimate_error_distribution, relative_error, settling_analysis, Band, ErrorDistribution,
};
use swarm_coverage::*;
use std::result::Result;

use crate::args::*;
use crate::Failure;

pub struct Ctx {
    pub grid: Option<(usize, usize)>,
    pub quiet: bool,
}

impl Ctx {
    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn rule(&self, domain: Domain, delta: f64) -> Result<QuadratureRule, Failure> {
        Ok(match self.grid {
            Some((m1, m2)) => QuadratureRule::new(RuleKind::Rectangle, domain, m1, m2)?,
            None => QuadratureRule::default_for(domain, delta)?,
        })
    }
}

pub fn parse_pair(s: &str) -> Result<(usize, usize), Failure> {
    let bad = || Failure::Input(format!("expected M1xM2, got '{s}'"));
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    if a == 0 || b == 0 {
        return Err(bad());
    }
    Ok((a, b))
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, Failure> {
    s.split(',')
        .map(|v| v.trim().parse().map_err(|_| Failure::Input(format!("cannot parse {what} from '{v}'"))))
        .collect()
}

fn parse_bounds(s: &str) -> Result<(f64, f64), Failure> {
    match parse_list::<f64>(s, "delta bounds")?[..] {
        [lo, hi] => Ok((lo, hi)),
        _ => Err(Failure::Input(format!("delta bounds must be 'lo,hi', got '{s}'"))),
    }
}

fn target(args: &TargetArgs) -> Result<TargetDensity, Failure> {
    let t = args.target.trim();
    Ok(match t {
        "ring" => TargetDensity::standard_ring(),
        "ripple" => TargetDensity::standard_ripple(),
        "uniform" => TargetDensity::uniform(Domain::new(48.0, 70.0)?),
        _ => match t.strip_prefix("csv:") {
            Some(path) => TargetDensity::gridded(io::read_gridded(Path::new(path))?)?,
            None => return Err(Failure::Input(format!("unknown target '{t}'"))),
        },
    })
}

fn init_strategy(s: &str, rho: &TargetDensity) -> Result<InitStrategy, Failure> {
    let s = s.trim();
    Ok(match s {
        "uniform" => InitStrategy::Uniform,
        "cluster" => InitStrategy::Cluster,
        "annulus" => InitStrategy::ring_region(rho)
            .ok_or_else(|| Failure::Input("annulus seeding needs a ring target".into()))?,
        _ => {
            if let Some(r) = s.strip_prefix("region:") {
                match parse_list::<f64>(r, "region")?[..] {
                    [x0, y0, x1, y1] => InitStrategy::Region { x0, y0, x1, y1 },
                    _ => return Err(Failure::Input("region needs x0,y0,x1,y1".into())),
                }
            } else if let Some(path) = s.strip_prefix("file:") {
                InitStrategy::Given(io::read_swarm_config(Path::new(path))?.positions)
            } else {
                return Err(Failure::Input(format!("unknown initialization '{s}'")));
            }
        }
    })
}

fn write(path: impl AsRef<Path>, text: &str) -> Result<(), Failure> {
    let path = path.as_ref();
    fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn key_values(rows: &[(&str, String)]) -> String {
    rows.iter().map(|(k, v)| format!("{k},{v}\n")).collect()
}

pub fn error(ctx: &Ctx, a: &ErrorArgs) -> Result<(), Failure> {
    let rho = target(&a.target)?;
    let cfg = io::read_swarm_config(&a.swarm)?;
    cfg.check_in(rho.domain())?;
    let rule = ctx.rule(*rho.domain(), cfg.delta)?;
    let norm = match a.normalization.as_str() {
        "domain" => BlobNormalization::Domain,
        "count" => BlobNormalization::Count,
        other => return Err(Failure::Input(format!("unknown normalization '{other}'"))),
    };
    let mut rows = vec![("e", error_with(&cfg, &rho, &rule, norm)?.to_string())];
    if norm == BlobNormalization::Domain {
        rows.push(("e_hat", one_sided_error(&cfg, &rho, &rule)?.to_string()));
    }
    if let Some(p) = &a.partition {
        let (m1, m2) = parse_pair(p)?;
        let part = Partition::regular(*rho.domain(), m1, m2)?;
        rows.push(("mu", discretization_error(&cfg.positions, &rho, &part)?.to_string()));
    }
    print!("{}", key_values(&rows));
    Ok(())
}

fn read_summary(prefix: &str) -> Result<(f64, f64), Failure> {
    let path = PathBuf::from(format!("{prefix}_summary.csv"));
    let text = fs::read_to_string(&path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let mut lo = None;
    let mut hi = None;
    for line in text.lines() {
        if let Some((k, v)) = line.split_once(',') {
            let v: Option<f64> = v.trim().parse().ok();
            match k.trim() {
                "e_minus" => lo = v,
                "e_plus" => hi = v,
                _ => {}
            }
        }
    }
    match (lo, hi) {
        (Some(lo), Some(hi)) => Ok((lo, hi)),
        _ => Err(Failure::Input(format!("{} lacks e_minus and e_plus", path.display()))),
    }
}

fn error_series_of(path: &Path, rho: &TargetDensity, ctx: &Ctx, norm: BlobNormalization) -> Result<(Vec<f64>, Vec<f64>), Failure> {
    let traj = io::read_trajectory(path)?;
    let rule = ctx.rule(*rho.domain(), traj.delta)?;
    Ok(traj.error_series(rho, &rule, norm)?.into_iter().unzip())
}

pub fn relerr(ctx: &Ctx, a: &RelerrArgs) -> Result<(), Failure> {
    let rho = target(&a.target)?;
    let (ts, es) = match (&a.series, &a.trajectory) {
        (Some(p), _) => io::read_error_series(p)?,
        (None, Some(p)) => error_series_of(p, &rho, ctx, BlobNormalization::Domain)?,
        (None, None) => return Err(Failure::Input("give --series or --trajectory".into())),
    };
    let (e_minus, e_plus) = if let (Some(lo), Some(hi)) = (a.e_minus, a.e_plus) {
        (lo, hi)
    } else if let Some(prefix) = &a.extrema {
        read_summary(prefix)?
    } else {
        let (Some(n), Some(delta)) = (a.n, a.delta) else {
            return Err(Failure::Input("give --e-minus/--e-plus, --extrema PREFIX, or --n and --delta".into()));
        };
        ctx.note(format!("computing extrema: N={n}, delta={delta}, {} starts", a.starts));
        let rule = ctx.rule(*rho.domain(), delta)?;
        let settings = OptimizerSettings { starts: a.starts, seed: a.seed, ..Default::default() };
        let r = find_extrema(&rho, &rule, n, delta, &settings, &InitStrategy::Uniform, &InitStrategy::Cluster)?;
        (r.e_minus, r.e_plus)
    };
    let s = settling_analysis(&ts, &es)?;
    let e_rel = relative_error(s.e_q3, e_minus, e_plus)?;
    let band = Band::of(e_rel);
    print!(
        "{}",
        key_values(&[
            ("t_s", s.t_s.to_string()),
            ("tau", s.tau.to_string()),
            ("e_q3", s.e_q3.to_string()),
            ("e_minus", e_minus.to_string()),
            ("e_plus", e_plus.to_string()),
            ("e_rel_percent", format!("{:.4}", 100.0 * e_rel)),
            ("band", band.label().to_string()),
        ])
    );
    Ok(())
}

fn records_csv(rows: &[(&str, &StartRecord)]) -> String {
    let mut s = String::from("sense,start,seed,converged,stop,iterations,initial_value,final_value,delta\n");
    for (sense, r) in rows {
        let _ = writeln!(
            s,
            "{sense},{},{},{},{:?},{},{},{},{}",
            r.start, r.seed, r.converged, r.stop, r.iterations, r.initial_value, r.final_value, r.delta
        );
    }
    s
}

pub fn extrema(ctx: &Ctx, a: &ExtremaArgs) -> Result<(), Failure> {
    let rho = target(&a.target)?;
    let d = *rho.domain();
    let settings = OptimizerSettings {
        starts: a.starts,
        seed: a.seed,
        max_iterations: a.max_iterations,
        ..Default::default()
    };
    let min_init = init_strategy(&a.init, &rho)?;
    let converged = match a.delta {
        Some(delta) => {
            let rule = ctx.rule(d, delta)?;
            ctx.note(format!("grid {}x{}, {} starts per sense", rule.grid().m1, rule.grid().m2, a.starts));
            let max_init = init_strategy(&a.max_init, &rho)?;
            let r = find_extrema(&rho, &rule, a.n, delta, &settings, &min_init, &max_init)?;
            let rows: Vec<(&str, &StartRecord)> = r
                .min_records
                .iter()
                .map(|x| ("min", x))
                .chain(r.max_records.iter().map(|x| ("max", x)))
                .collect();
            write(format!("{}_result.csv", a.out), &records_csv(&rows))?;
            write(format!("{}_argmin.csv", a.out), &io::format_swarm_config(&r.argmin))?;
            write(format!("{}_argmax.csv", a.out), &io::format_swarm_config(&r.argmax))?;
            let summary = key_values(&[
                ("e_minus", r.e_minus.to_string()),
                ("e_plus", r.e_plus.to_string()),
                ("converged", r.converged.to_string()),
            ]);
            write(format!("{}_summary.csv", a.out), &summary)?;
            print!("{summary}");
            r.converged
        }
        None => {
            let bounds = parse_bounds(&a.delta_bounds)?;
            let rule = ctx.rule(d, bounds.0)?;
            ctx.note(format!("grid {}x{}, joint delta search in [{}, {}]", rule.grid().m1, rule.grid().m2, bounds.0, bounds.1));
            let (half, delta) = minimize_error_with_delta(&rho, &rule, a.n, &settings, bounds, &min_init)?;
            let rows: Vec<(&str, &StartRecord)> = half.records.iter().map(|x| ("min", x)).collect();
            write(format!("{}_result.csv", a.out), &records_csv(&rows))?;
            write(format!("{}_argmin.csv", a.out), &io::format_swarm_config(&half.config))?;
            let summary = key_values(&[
                ("e_minus", half.value.to_string()),
                ("delta_star", delta.to_string()),
                ("converged", half.converged.to_string()),
            ]);
            write(format!("{}_summary.csv", a.out), &summary)?;
            print!("{summary}");
            half.converged
        }
    };
    if converged {
        Ok(())
    } else {
        Err(Failure::Analysis("no start converged within --max-iterations; best values written".into()))
    }
}

pub fn pdf(ctx: &Ctx, a: &PdfArgs) -> Result<(), Failure> {
    let rho = target(&a.target)?;
    let rule = ctx.rule(*rho.domain(), a.delta)?;
    ctx.note(format!("{} Monte Carlo draws of {} robots", a.samples, a.n));
    let dist = estimate_error_distribution(&rho, a.n, a.delta, Kernel::Gaussian, a.samples, &rule, a.seed)?;
    write(format!("{}_samples.csv", a.out), &io::format_samples(&dist.samples))?;
    let mut cdf = String::from("e,empirical,fitted\n");
    for (e, emp, fit) in dist.cdf_table() {
        let _ = writeln!(cdf, "{e},{emp},{fit}");
    }
    write(format!("{}_cdf.csv", a.out), &cdf)?;
    let fit = key_values(&[
        ("mu", dist.fit.mu.to_string()),
        ("sigma", dist.fit.sigma.to_string()),
        ("rms", dist.fit.rms.to_string()),
        ("max_deviation", dist.fit.max_deviation.to_string()),
        ("sample_mean", dist.sample_mean.to_string()),
        ("sample_std", dist.sample_std.to_string()),
        ("normal", dist.normal.to_string()),
    ]);
    write(format!("{}_fit.csv", a.out), &fit)?;
    print!("{fit}");
    Ok(())
}

pub fn benchmark(ctx: &Ctx, a: &BenchmarkArgs) -> Result<(), Failure> {
    let dist = ErrorDistribution::from_samples(io::read_samples(Path::new(&format!("{}_samples.csv", a.dist)))?)?;
    let ctrl = match (&a.controller_errors, &a.trajectory) {
        (Some(p), _) => io::read_samples(p)?,
        (None, Some(p)) => {
            let rho = target(&a.target)?;
            let (ts, es) = error_series_of(p, &rho, ctx, BlobNormalization::Count)?;
            let s = settling_analysis(&ts, &es)?;
            ctx.note(format!("settling time {:.3}; using {} steady-state snapshots", s.t_s, s.steady_points));
            ts.iter().zip(&es).filter(|(t, _)| **t > s.t_s).map(|(_, e)| *e).collect()
        }
        (None, None) => return Err(Failure::Input("give --controller-errors or --trajectory".into())),
    };
    let v = benchmark_controller(&ctrl, &dist)?;
    let table = key_values(&[
        ("f", v.f_test.f.to_string()),
        ("f_p_value", v.f_test.p_value.to_string()),
        ("f_reject", v.f_test.reject.to_string()),
        ("t", v.t_test.t.to_string()),
        ("t_dof", v.t_test.dof.to_string()),
        ("t_p_value", v.t_test.p_value.to_string()),
        ("t_reject", v.t_test.reject.to_string()),
        ("mean_diff", v.t_test.mean_diff.to_string()),
        ("ci_low", v.t_test.ci.0.to_string()),
        ("ci_high", v.t_test.ci.1.to_string()),
        ("relative_ci_low", v.relative_ci.0.to_string()),
        ("relative_ci_high", v.relative_ci.1.to_string()),
        ("consistent", v.consistent.to_string()),
    ]);
    if let Some(out) = &a.out {
        write(format!("{out}_verdict.csv"), &table)?;
    }
    print!("{table}");
    ctx.note(v.summary());
    Ok(())
}

pub fn simulate(ctx: &Ctx, a: &SimulateArgs) -> Result<(), Failure> {
    let rho = target(&a.target)?;
    if a.snap_every == 0 || a.steps < a.snap_every {
        return Err(Failure::Input("--steps must be at least --snap-every, which must be positive".into()));
    }
    let init = match a.init.trim() {
        "uniform" => WalkerInit::Uniform,
        "corner" => WalkerInit::Corner,
        s => match s.strip_prefix("file:") {
            Some(p) => WalkerInit::Given(io::read_swarm_config(Path::new(p))?.positions),
            None => return Err(Failure::Input(format!("unknown initialization '{s}'"))),
        },
    };
    let settings = WalkerSettings {
        sigma_step: a.sigma_step,
        steps_per_snapshot: a.snap_every,
        snapshots: a.steps / a.snap_every + 1,
        seed: a.seed,
        init,
        ..Default::default()
    };
    let traj = run_walkers(&rho, a.n, a.delta, Kernel::Gaussian, &settings)?;
    write(&a.out, &io::format_trajectory(&traj))?;
    ctx.note(format!("wrote {} snapshots to {}", traj.len(), a.out.display()));
    Ok(())
}

pub fn quadstudy(ctx: &Ctx, a: &QuadstudyArgs) -> Result<(), Failure> {
    let rho = target(&a.target)?;
    let cfg = io::read_swarm_config(&a.swarm)?;
    let rules = a
        .rules
        .split(',')
        .map(|r| match r.trim() {
            "rectangle" => Ok(RuleKind::Rectangle),
            "trapezoid" => Ok(RuleKind::Trapezoid),
            "simpson" => Ok(RuleKind::Simpson),
            other => Err(Failure::Input(format!("unknown rule '{other}'"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let ms = match &a.m {
        Some(m) => parse_list(m, "node count")?,
        None => study_node_counts(),
    };
    ctx.note("computing the polar reference value; this takes a minute");
    let (study, reference) = metric_convergence_study(&cfg, &rho, &rules, &ms)?;
    let text = format!(
        "# reference {} (relative change {:.2e} after {} levels)\n{}",
        reference.value,
        reference.relative_change,
        reference.levels,
        study.to_csv()
    );
    match &a.out {
        Some(out) => write(format!("{out}_study.csv"), &text)?,
        None => print!("{text}"),
    }
    Ok(())
}

pub fn sweep(ctx: &Ctx, a: &SweepArgs) -> Result<(), Failure> {
    let rho = target(&a.target)?;
    let bounds = parse_bounds(&a.delta_bounds)?;
    let n_values: Vec<usize> = parse_list(&a.n_values, "N")?;
    let switch_init = match a.annulus_from {
        Some(n) => Some((
            n,
            InitStrategy::ring_region(&rho).ok_or_else(|| Failure::Input("annulus seeding needs a ring target".into()))?,
        )),
        None => None,
    };
    let settings = SweepSettings {
        optimizer: OptimizerSettings { starts: a.starts, seed: a.seed, ..Default::default() },
        delta_bounds: bounds,
        init: init_strategy(&a.init, &rho)?,
        switch_init,
    };
    let rule = ctx.rule(*rho.domain(), bounds.0)?;
    ctx.note(format!("grid {}x{}, N = {:?}", rule.grid().m1, rule.grid().m2, n_values));
    let r = design_sweep(&rho, &rule, &n_values, &settings)?;
    write(format!("{}_sweep.csv", a.out), &r.to_csv())?;
    for row in &r.rows {
        write(format!("{}_argmin_N{}.csv", a.out, row.n), &io::format_swarm_config(&row.config))?;
    }
    print!("{}", r.to_csv());
    Ok(())
}

pub fn pitfall(_ctx: &Ctx, a: &PitfallArgs) -> Result<(), Failure> {
    let rho = target(&a.target)?;
    let positions = match &a.swarm {
        Some(p) => io::read_swarm_config(p)?.positions,
        None => {
            let mut rng = rng::stream(a.seed, rng::Purpose::MonteCarlo, 0);
            InitStrategy::Uniform.place(rho.domain(), a.random, &mut rng)
        }
    };
    let tilings = a.tilings.split(',').map(parse_pair).collect::<Result<Vec<_>, _>>()?;
    let mut text = String::from("m1,m2,cells,mu\n");
    for row in pitfall_report(&positions, &rho, &tilings)? {
        let _ = writeln!(text, "{},{},{},{}", row.m1, row.m2, row.cells, row.mu);
    }
    match &a.out {
        Some(out) => write(format!("{out}_pitfall.csv"), &text)?,
        None => print!("{text}"),
    }
    Ok(())
}
