//! Plain-text CSV formats.
//!
//! Blank lines and lines starting with `#` are ignored everywhere. Parse
//! failures report the 1-based line number.

use std::fmt::Write as _;
use std::path::Path;

use crate::density::{Domain, GridSpec, Kernel, NodeLayout, Point, ScalarField};
use crate::error::{Error, Result};
use crate::error_metric::{SwarmConfig, Trajectory};

struct Lines<'a> {
    path: &'a str,
    inner: std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str, path: &'a str) -> Self {
        let it: Box<dyn Iterator<Item = (usize, &'a str)> + 'a> = Box::new(
            text.lines()
                .enumerate()
                .map(|(i, l)| (i + 1, l.trim()))
                .filter(|(_, l)| !l.is_empty() && !l.starts_with('#')),
        );
        Lines {
            path,
            inner: it.peekable(),
        }
    }

    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_string(),
            line,
            message: message.into(),
        }
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        self.inner.next()
    }

    /// Skips the next line if it is exactly the given column-name header.
    fn skip_names(&mut self, names: &str) {
        if let Some((_, l)) = self.inner.peek() {
            if l.replace(' ', "").eq_ignore_ascii_case(names) {
                self.inner.next();
            }
        }
    }
}

fn split(line: &str) -> Vec<&str> {
    line.split(',').map(str::trim).collect()
}

fn num(lines: &Lines, line: usize, s: &str, what: &str) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| lines.err(line, format!("cannot parse {what} from '{s}'")))?;
    if !v.is_finite() {
        return Err(lines.err(line, format!("{what} is not finite")));
    }
    Ok(v)
}

fn count(lines: &Lines, line: usize, s: &str, what: &str) -> Result<usize> {
    s.parse()
        .map_err(|_| lines.err(line, format!("cannot parse {what} from '{s}'")))
}

fn header(lines: &mut Lines, names: &str) -> Result<(usize, f64, Kernel)> {
    lines.skip_names(names);
    let (ln, text) = lines
        .next()
        .ok_or_else(|| lines.err(0, format!("missing '{names}' header")))?;
    let f = split(text);
    if f.len() != 3 {
        return Err(lines.err(ln, format!("header must be '{names}'")));
    }
    let n = count(lines, ln, f[0], "N")?;
    if n == 0 {
        return Err(lines.err(ln, "N must be at least 1"));
    }
    let delta = num(lines, ln, f[1], "delta")?;
    if delta <= 0.0 {
        return Err(lines.err(ln, "delta must be positive"));
    }
    let kernel = Kernel::parse(f[2]).map_err(|e| lines.err(ln, e.to_string()))?;
    Ok((n, delta, kernel))
}

fn read_text(path: &Path) -> Result<String> {
    Ok(std::fs::read_to_string(path)?)
}

/// Header `N,delta,kernel` (values), then `N` lines `x,y`.
pub fn parse_swarm_config(text: &str, path: &str) -> Result<SwarmConfig> {
    let mut lines = Lines::new(text, path);
    let (n, delta, kernel) = header(&mut lines, "N,delta,kernel")?;
    lines.skip_names("x,y");
    let mut positions = Vec::with_capacity(n);
    while let Some((ln, text)) = lines.next() {
        let f = split(text);
        if f.len() != 2 {
            return Err(lines.err(ln, "expected 'x,y'"));
        }
        positions.push(Point::new(num(&lines, ln, f[0], "x")?, num(&lines, ln, f[1], "y")?));
    }
    if positions.len() != n {
        return Err(lines.err(
            text.lines().count(),
            format!("header declares {n} robots but {} positions follow", positions.len()),
        ));
    }
    SwarmConfig::new(positions, delta, kernel)
}

pub fn read_swarm_config(path: &Path) -> Result<SwarmConfig> {
    parse_swarm_config(&read_text(path)?, &path.display().to_string())
}

pub fn format_swarm_config(cfg: &SwarmConfig) -> String {
    let mut s = format!("{},{},{}\n", cfg.n(), cfg.delta, cfg.kernel.name());
    for p in &cfg.positions {
        let _ = writeln!(s, "{},{}", p.x, p.y);
    }
    s
}

/// Header `N,delta,kernel` (values), then lines `t,x1,y1,...,xN,yN`.
pub fn parse_trajectory(text: &str, path: &str) -> Result<Trajectory> {
    let mut lines = Lines::new(text, path);
    let (n, delta, kernel) = header(&mut lines, "N,delta,kernel")?;
    let mut times = Vec::new();
    let mut snaps = Vec::new();
    while let Some((ln, text)) = lines.next() {
        let f = split(text);
        if f.len() != 1 + 2 * n {
            return Err(lines.err(ln, format!("expected {} fields, found {}", 1 + 2 * n, f.len())));
        }
        let t = num(&lines, ln, f[0], "t")?;
        if let Some(&last) = times.last() {
            if t <= last {
                return Err(lines.err(ln, "times must increase strictly"));
            }
        }
        let mut pos = Vec::with_capacity(n);
        for k in 0..n {
            pos.push(Point::new(
                num(&lines, ln, f[1 + 2 * k], "x")?,
                num(&lines, ln, f[2 + 2 * k], "y")?,
            ));
        }
        times.push(t);
        snaps.push(pos);
    }
    if times.is_empty() {
        return Err(lines.err(text.lines().count(), "trajectory has no snapshots"));
    }
    Trajectory::new(times, snaps, delta, kernel)
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    parse_trajectory(&read_text(path)?, &path.display().to_string())
}

pub fn format_trajectory(traj: &Trajectory) -> String {
    let mut s = format!("{},{},{}\n", traj.n(), traj.delta, traj.kernel.name());
    for (t, snap) in traj.times.iter().zip(&traj.snapshots) {
        let _ = write!(s, "{t}");
        for p in snap {
            let _ = write!(s, ",{},{}", p.x, p.y);
        }
        s.push('\n');
    }
    s
}

/// Header `m1,m2,w,h` (values), then `m1 * m2` values row-major, x fastest.
/// Nodes sit on cell corners.
pub fn parse_gridded(text: &str, path: &str) -> Result<ScalarField> {
    let mut lines = Lines::new(text, path);
    lines.skip_names("m1,m2,w,h");
    let (ln, head) = lines.next().ok_or_else(|| lines.err(0, "missing 'm1,m2,w,h' header"))?;
    let f = split(head);
    if f.len() != 4 {
        return Err(lines.err(ln, "header must be 'm1,m2,w,h'"));
    }
    let m1 = count(&lines, ln, f[0], "m1")?;
    let m2 = count(&lines, ln, f[1], "m2")?;
    let w = num(&lines, ln, f[2], "w")?;
    let h = num(&lines, ln, f[3], "h")?;
    let domain = Domain::new(w, h).map_err(|e| lines.err(ln, e.to_string()))?;
    let grid = GridSpec::new(domain, m1, m2, NodeLayout::CellCorners).map_err(|e| lines.err(ln, e.to_string()))?;
    let mut values = Vec::with_capacity(m1 * m2);
    while let Some((ln, text)) = lines.next() {
        let v = num(&lines, ln, text, "value")?;
        if v <= 0.0 {
            return Err(lines.err(ln, format!("density value {v} is not positive")));
        }
        values.push(v);
    }
    if values.len() != m1 * m2 {
        return Err(lines.err(
            text.lines().count(),
            format!("expected {} values, found {}", m1 * m2, values.len()),
        ));
    }
    ScalarField::new(grid, values)
}

pub fn read_gridded(path: &Path) -> Result<ScalarField> {
    parse_gridded(&read_text(path)?, &path.display().to_string())
}

pub fn format_gridded(field: &ScalarField) -> String {
    let g = &field.grid;
    let mut s = format!("{},{},{},{}\n", g.m1, g.m2, g.domain.width, g.domain.height);
    for v in &field.values {
        let _ = writeln!(s, "{v}");
    }
    s
}

/// One number per line; the first field of each line is used, and a
/// non-numeric first line is taken as a column header.
pub fn parse_samples(text: &str, path: &str) -> Result<Vec<f64>> {
    let mut lines = Lines::new(text, path);
    let mut out = Vec::new();
    let mut first = true;
    while let Some((ln, text)) = lines.next() {
        let field = split(text)[0];
        if first && field.parse::<f64>().is_err() {
            first = false;
            continue;
        }
        first = false;
        out.push(num(&lines, ln, field, "sample")?);
    }
    if out.is_empty() {
        return Err(lines.err(text.lines().count(), "no samples"));
    }
    Ok(out)
}

pub fn read_samples(path: &Path) -> Result<Vec<f64>> {
    parse_samples(&read_text(path)?, &path.display().to_string())
}

pub fn format_samples(samples: &[f64]) -> String {
    let mut s = String::new();
    for v in samples {
        let _ = writeln!(s, "{v}");
    }
    s
}

/// Lines `t,e` with an optional `t,e` header; times must increase strictly.
pub fn parse_error_series(text: &str, path: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut lines = Lines::new(text, path);
    lines.skip_names("t,e");
    let mut ts = Vec::new();
    let mut es = Vec::new();
    while let Some((ln, text)) = lines.next() {
        let f = split(text);
        if f.len() != 2 {
            return Err(lines.err(ln, "expected 't,e'"));
        }
        let t = num(&lines, ln, f[0], "t")?;
        if ts.last().is_some_and(|&last| t <= last) {
            return Err(lines.err(ln, "times must increase strictly"));
        }
        ts.push(t);
        es.push(num(&lines, ln, f[1], "e")?);
    }
    if ts.is_empty() {
        return Err(lines.err(text.lines().count(), "empty error series"));
    }
    Ok((ts, es))
}

pub fn read_error_series(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    parse_error_series(&read_text(path)?, &path.display().to_string())
}

pub fn format_error_series(ts: &[f64], es: &[f64]) -> String {
    let mut s = String::from("t,e\n");
    for (t, e) in ts.iter().zip(es) {
        let _ = writeln!(s, "{t},{e}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn swarm_config_round_trip() {
        let cfg = SwarmConfig::new(
            vec![Point::new(1.5, 2.25), Point::new(0.0, 70.0)],
            2.0,
            Kernel::Gaussian,
        )
        .unwrap();
        let back = parse_swarm_config(&format_swarm_config(&cfg), "mem").unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn swarm_config_accepts_column_names() {
        let text = "N,delta,kernel\n1,2,indicator\nx,y\n# comment\n3,4\n";
        let cfg = parse_swarm_config(text, "mem").unwrap();
        assert_eq!(cfg.kernel, Kernel::Indicator);
        assert_eq!(cfg.positions, vec![Point::new(3.0, 4.0)]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_swarm_config("2,2,gaussian\n1,1\n1,oops\n", "f.csv").unwrap_err();
        match err {
            Error::Parse { line, path, .. } => {
                assert_eq!(line, 3);
                assert_eq!(path, "f.csv");
            }
            other => panic!("{other}"),
        }
        assert!(parse_swarm_config("", "f").is_err());
        assert!(parse_swarm_config("2,2,gaussian\n1,1\n", "f").is_err());
        assert!(parse_swarm_config("0,2,gaussian\n", "f").is_err());
    }

    #[test]
    fn trajectory_round_trip() {
        let traj = Trajectory::new(
            vec![0.0, 0.5],
            vec![
                vec![Point::new(1.0, 2.0), Point::new(3.0, 4.0)],
                vec![Point::new(1.5, 2.5), Point::new(3.5, 4.5)],
            ],
            1.0,
            Kernel::Gaussian,
        )
        .unwrap();
        let back = parse_trajectory(&format_trajectory(&traj), "mem").unwrap();
        assert_eq!(back, traj);
        assert!(parse_trajectory("1,1,gaussian\n1,0,0\n0.5,1,1\n", "m").is_err());
    }

    #[test]
    fn gridded_round_trip_and_positivity() {
        let d = Domain::new(4.0, 2.0).unwrap();
        let grid = GridSpec::new(d, 2, 3, NodeLayout::CellCorners).unwrap();
        let field = ScalarField::new(grid, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let back = parse_gridded(&format_gridded(&field), "mem").unwrap();
        assert_eq!(back, field);
        let err = parse_gridded("2,2,1,1\n1\n0\n1\n1\n", "g").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
    }

    #[test]
    fn samples_and_series() {
        assert_eq!(parse_samples("e\n0.5\n0.25\n", "s").unwrap(), vec![0.5, 0.25]);
        assert_eq!(parse_samples("0.5,1\n", "s").unwrap(), vec![0.5]);
        assert!(parse_samples("e\n", "s").is_err());
        let (t, e) = parse_error_series(&format_error_series(&[0.0, 1.0], &[0.3, 0.2]), "m").unwrap();
        assert_eq!(t, vec![0.0, 1.0]);
        assert_eq!(e, vec![0.3, 0.2]);
        assert!(parse_error_series("t,e\n1,0.1\n1,0.2\n", "m").is_err());
    }
}
