use rand::Rng;

use crate::density::{Point, TargetDensity};
use crate::error::{Error, Result};
use crate::rng::{stream, Purpose, StreamRng};

/// Proposals per efficiency check.
pub const EFFICIENCY_WINDOW: u64 = 1_000_000;
/// Smallest tolerated acceptance rate over one window.
pub const MIN_ACCEPTANCE: f64 = 1e-4;

/// `n` i.i.d. draws from `rho` by rejection from uniform proposals.
pub fn sample_positions(rho: &TargetDensity, n: usize, seed: u64) -> Result<Vec<Point>> {
    let mut rng = stream(seed, Purpose::MonteCarlo, 0);
    sample_positions_with(rho, n, &mut rng)
}

pub fn sample_positions_with(rho: &TargetDensity, n: usize, rng: &mut StreamRng) -> Result<Vec<Point>> {
    if n == 0 {
        return Err(Error::param("need at least one sample"));
    }
    let d = *rho.domain();
    let max = rho.density_max();
    let mut out = Vec::with_capacity(n);
    let mut proposals = 0u64;
    let mut accepted = 0u64;
    while out.len() < n {
        let p = Point::new(rng.random::<f64>() * d.width, rng.random::<f64>() * d.height);
        let u: f64 = rng.random();
        proposals += 1;
        if u * max < rho.value(p) {
            out.push(p);
            accepted += 1;
        }
        if proposals == EFFICIENCY_WINDOW {
            let rate = accepted as f64 / proposals as f64;
            if rate < MIN_ACCEPTANCE {
                return Err(Error::SamplerEfficiency { rate });
            }
            proposals = 0;
            accepted = 0;
        }
    }
    Ok(out)
}
