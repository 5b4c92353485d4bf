//! Regular tessellation of a state-space box, used by the recurrence mapper
//! and for deduplicating attractor point clouds.

/// One dimension of the grid box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridDim {
    pub min: f64,
    pub max: f64,
    pub cells: usize,
}

/// A regular grid over an n-dimensional box. Cell indices are flattened into
/// a single `u64`; points outside the box have no cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dims: Vec<GridDim>,
}

impl Grid {
    /// Builds a grid from per-dimension `(min, max, cells)` ranges.
    ///
    /// Panics if a range is empty, inverted, or has fewer than 2 cells, and
    /// if the total cell count overflows `u64`.
    pub fn new(ranges: &[(f64, f64, usize)]) -> Self {
        assert!(!ranges.is_empty(), "grid needs at least one dimension");
        let mut total: u128 = 1;
        let dims = ranges
            .iter()
            .map(|&(min, max, cells)| {
                assert!(min < max, "grid range must satisfy min < max (got {min}..{max})");
                assert!(cells >= 2, "grid needs at least 2 cells per dimension");
                total *= cells as u128;
                GridDim { min, max, cells }
            })
            .collect();
        assert!(total <= u64::MAX as u128, "grid cell count overflows u64");
        Self { dims }
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[GridDim] {
        &self.dims
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.dims).all(|(&xi, d)| xi >= d.min && xi <= d.max)
    }

    /// Flattened cell index of `x`, or `None` if `x` lies outside the box.
    /// The upper box face belongs to the last cell.
    pub fn cell_of(&self, x: &[f64]) -> Option<u64> {
        debug_assert_eq!(x.len(), self.dims.len());
        let mut idx: u64 = 0;
        for (&xi, d) in x.iter().zip(&self.dims) {
            if !(xi >= d.min && xi <= d.max) {
                return None;
            }
            let w = (d.max - d.min) / d.cells as f64;
            let mut c = ((xi - d.min) / w) as usize;
            if c >= d.cells {
                c = d.cells - 1;
            }
            idx = idx * d.cells as u64 + c as u64;
        }
        Some(idx)
    }

    /// Euclidean diagonal of one cell; the length scale below which two
    /// points are indistinguishable to the recurrence bookkeeping.
    pub fn cell_diagonal(&self) -> f64 {
        self.dims
            .iter()
            .map(|d| {
                let w = (d.max - d.min) / d.cells as f64;
                w * w
            })
            .sum::<f64>()
            .sqrt()
    }

    /// The covered box as `(min, max)` pairs.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.dims.iter().map(|d| (d.min, d.max)).collect()
    }

    /// Box volume (product of side lengths).
    pub fn volume(&self) -> f64 {
        self.dims.iter().map(|d| d.max - d.min).product()
    }
}
