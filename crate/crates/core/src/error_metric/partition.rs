use rayon::prelude::*;

use crate::density::{Domain, Point, TargetDensity};
use crate::error::{Error, Result};

/// Midpoint sub-samples per cell axis when integrating the target over a cell.
const CELL_SAMPLES: usize = 3;

/// A tiling of the domain by the tensor product of x and y break points.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    domain: Domain,
    xb: Vec<f64>,
    yb: Vec<f64>,
}

impl Partition {
    /// `m1 x m2` equal cells.
    pub fn regular(domain: Domain, m1: usize, m2: usize) -> Result<Self> {
        if m1 == 0 || m2 == 0 {
            return Err(Error::param("a partition needs at least one cell per axis"));
        }
        let breaks = |len: f64, m: usize| -> Vec<f64> {
            (0..=m).map(|k| if k == m { len } else { len * k as f64 / m as f64 }).collect()
        };
        Ok(Partition {
            domain,
            xb: breaks(domain.width, m1),
            yb: breaks(domain.height, m2),
        })
    }

    /// Tiling from explicit break points. Each list must start at 0, end at
    /// the domain side and increase strictly.
    pub fn from_breaks(domain: Domain, xb: Vec<f64>, yb: Vec<f64>) -> Result<Self> {
        let valid = |b: &[f64], len: f64| {
            b.len() >= 2
                && b[0] == 0.0
                && (b[b.len() - 1] - len).abs() <= 1e-12 * len
                && b.windows(2).all(|w| w[1] > w[0])
        };
        if !valid(&xb, domain.width) || !valid(&yb, domain.height) {
            return Err(Error::param("partition break points do not tile the domain"));
        }
        Ok(Partition { domain, xb, yb })
    }

    pub fn cells(&self) -> usize {
        (self.xb.len() - 1) * (self.yb.len() - 1)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.xb.len() - 1, self.yb.len() - 1)
    }

    pub fn cell_area(&self, i: usize, j: usize) -> f64 {
        (self.xb[i + 1] - self.xb[i]) * (self.yb[j + 1] - self.yb[j])
    }

    /// Cell containing `p`; a point on a shared edge goes to the left/bottom cell.
    pub fn locate(&self, p: Point) -> (usize, usize) {
        let find = |b: &[f64], v: f64| -> usize {
            let k = b.partition_point(|&e| e < v);
            k.saturating_sub(1).min(b.len() - 2)
        };
        (find(&self.xb, p.x), find(&self.yb, p.y))
    }
}

/// `mu = sum_i | int_{cell i} rho - N_i / N |`.
///
/// Cell masses come from a midpoint rule inside each cell and are rescaled
/// to sum to one, so a single-cell partition gives exactly zero.
pub fn discretization_error(positions: &[Point], rho: &TargetDensity, part: &Partition) -> Result<f64> {
    if !part.domain.approx_eq(rho.domain()) {
        return Err(Error::param("partition and target use different domains"));
    }
    if positions.is_empty() {
        return Err(Error::param("no robot positions"));
    }
    if let Some(p) = positions.iter().find(|p| !part.domain.contains(**p)) {
        return Err(Error::param(format!("robot at ({}, {}) is outside the domain", p.x, p.y)));
    }
    let (m1, m2) = part.shape();
    let masses: Vec<f64> = (0..m2)
        .into_par_iter()
        .flat_map_iter(|j| {
            (0..m1).map(move |i| {
                rho.box_mass(part.xb[i], part.xb[i + 1], part.yb[j], part.yb[j + 1], CELL_SAMPLES)
            })
        })
        .collect();
    let total: f64 = masses.iter().sum();
    let mut counts = vec![0usize; m1 * m2];
    for &p in positions {
        let (i, j) = part.locate(p);
        counts[j * m1 + i] += 1;
    }
    let n = positions.len() as f64;
    let mu = masses
        .iter()
        .zip(&counts)
        .map(|(m, &c)| (m / total - c as f64 / n).abs())
        .sum::<f64>();
    Ok(mu)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PitfallRow {
    pub m1: usize,
    pub m2: usize,
    pub cells: usize,
    pub mu: f64,
}

/// Discretization metric of one configuration under several regular tilings.
pub fn pitfall_report(
    positions: &[Point],
    rho: &TargetDensity,
    tilings: &[(usize, usize)],
) -> Result<Vec<PitfallRow>> {
    if tilings.len() < 2 {
        return Err(Error::param("a pitfall report compares at least two tilings"));
    }
    tilings
        .iter()
        .map(|&(m1, m2)| {
            let part = Partition::regular(*rho.domain(), m1, m2)?;
            Ok(PitfallRow {
                m1,
                m2,
                cells: part.cells(),
                mu: discretization_error(positions, rho, &part)?,
            })
        })
        .collect()
}
