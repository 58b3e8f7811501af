use super::Domain;
use crate::error::{Error, Result};

/// Where the nodes of a regular grid sit inside each axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeLayout {
    /// `m` cells of width `L/m`, one node at each cell center.
    CellCenters,
    /// `m` nodes spaced `L/(m-1)` apart, including both ends.
    CellCorners,
}

/// A regular `m1 x m2` node grid over a domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub domain: Domain,
    pub m1: usize,
    pub m2: usize,
    pub layout: NodeLayout,
}

impl GridSpec {
    pub fn new(domain: Domain, m1: usize, m2: usize, layout: NodeLayout) -> Result<Self> {
        if m1 < 2 || m2 < 2 {
            return Err(Error::param(format!("grid needs at least 2 nodes per axis, got {m1}x{m2}")));
        }
        Ok(GridSpec { domain, m1, m2, layout })
    }

    /// Coarsest grid whose node spacing does not exceed `max_spacing` on either axis.
    pub fn with_max_spacing(domain: Domain, max_spacing: f64, layout: NodeLayout) -> Result<Self> {
        if !(max_spacing > 0.0) {
            return Err(Error::param("grid spacing must be positive"));
        }
        let count = |len: f64| -> usize {
            let cells = (len / max_spacing - 1e-9).ceil().max(1.0) as usize;
            match layout {
                NodeLayout::CellCenters => cells.max(2),
                NodeLayout::CellCorners => cells + 1,
            }
        };
        GridSpec::new(domain, count(domain.width), count(domain.height), layout)
    }

    pub fn len(&self) -> usize {
        self.m1 * self.m2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> (f64, f64) {
        match self.layout {
            NodeLayout::CellCenters => (
                self.domain.width / self.m1 as f64,
                self.domain.height / self.m2 as f64,
            ),
            NodeLayout::CellCorners => (
                self.domain.width / (self.m1 - 1) as f64,
                self.domain.height / (self.m2 - 1) as f64,
            ),
        }
    }

    pub fn xs(&self) -> Vec<f64> {
        axis_nodes(self.domain.width, self.m1, self.layout)
    }

    pub fn ys(&self) -> Vec<f64> {
        axis_nodes(self.domain.height, self.m2, self.layout)
    }

    /// Row-major (x fastest) index of node `(i, j)`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.m1 + i
    }
}

fn axis_nodes(len: f64, m: usize, layout: NodeLayout) -> Vec<f64> {
    match layout {
        NodeLayout::CellCenters => {
            let d = len / m as f64;
            (0..m).map(|i| (i as f64 + 0.5) * d).collect()
        }
        NodeLayout::CellCorners => {
            let d = len / (m - 1) as f64;
            // pin the last node so it is exactly on the boundary
            (0..m).map(|i| if i + 1 == m { len } else { i as f64 * d }).collect()
        }
    }
}

/// Values sampled on the nodes of a [`GridSpec`], row-major with x fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::param(format!(
                "field has {} values but the {}x{} grid needs {}",
                values.len(),
                grid.m1,
                grid.m2,
                grid.len()
            )));
        }
        Ok(ScalarField { grid, values })
    }

    /// Samples `f` at every node of `grid`.
    pub fn sample(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let xs = grid.xs();
        let ys = grid.ys();
        let mut values = Vec::with_capacity(grid.len());
        for &y in &ys {
            for &x in &xs {
                values.push(f(x, y));
            }
        }
        ScalarField { grid, values }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_lie_in_domain() {
        let d = Domain::new(48.0, 70.0).unwrap();
        for layout in [NodeLayout::CellCenters, NodeLayout::CellCorners] {
            let g = GridSpec::new(d, 7, 11, layout).unwrap();
            for x in g.xs() {
                assert!((0.0..=48.0).contains(&x));
            }
            for y in g.ys() {
                assert!((0.0..=70.0).contains(&y));
            }
        }
        let g = GridSpec::new(d, 5, 5, NodeLayout::CellCorners).unwrap();
        assert_eq!(g.xs(), vec![0.0, 12.0, 24.0, 36.0, 48.0]);
    }

    #[test]
    fn rejects_degenerate_grids() {
        let d = Domain::new(1.0, 1.0).unwrap();
        assert!(GridSpec::new(d, 1, 4, NodeLayout::CellCenters).is_err());
        let g = GridSpec::new(d, 3, 3, NodeLayout::CellCenters).unwrap();
        assert!(ScalarField::new(g, vec![1.0; 8]).is_err());
    }

    #[test]
    fn max_spacing_is_respected() {
        let d = Domain::new(48.0, 70.0).unwrap();
        let g = GridSpec::with_max_spacing(d, 0.5, NodeLayout::CellCenters).unwrap();
        assert_eq!((g.m1, g.m2), (96, 140));
        let g = GridSpec::with_max_spacing(d, 0.7, NodeLayout::CellCorners).unwrap();
        let (dx, dy) = g.spacing();
        assert!(dx <= 0.7 && dy <= 0.7);
    }
}
