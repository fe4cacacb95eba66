use crate::{Error, Real, Result};

/// Largest number of lattice sites a dense grid kernel may have.
pub const MAX_SITES: usize = 4096;

/// Periodic lattice discretizing `R^d`: `points` sites per axis, spacing
/// `spacing`, coordinates `(j - points/2) * spacing` along every axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid<T: Real> {
    dimension: usize,
    points: usize,
    spacing: T,
}

impl<T: Real> Grid<T> {
    pub fn new(dimension: usize, points: usize, spacing: T) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidGrid("dimension must be at least 1".into()));
        }
        if points < 8 {
            return Err(Error::GridTooCoarse(format!(
                "{points} points per axis; at least 8 are required"
            )));
        }
        if !(spacing > T::zero()) || !spacing.is_finite() {
            return Err(Error::InvalidGrid(format!("spacing {spacing} must be positive")));
        }
        let sites = (points as u64).checked_pow(dimension as u32);
        if sites.map_or(true, |s| s > MAX_SITES as u64) {
            return Err(Error::InvalidGrid(format!(
                "{points}^{dimension} sites exceed the dense-kernel limit of {MAX_SITES}"
            )));
        }
        Ok(Self {
            dimension,
            points,
            spacing,
        })
    }

    /// Grid of `points` per axis covering `extent` along each axis.
    pub fn with_extent(dimension: usize, points: usize, extent: T) -> Result<Self> {
        Self::new(dimension, points, extent / T::lit(points as f64))
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }

    pub fn extent(&self) -> T {
        self.spacing * T::lit(self.points as f64)
    }

    pub fn cell_volume(&self) -> T {
        self.spacing.powi(self.dimension as i32)
    }

    /// Number of sites, `points^d`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dimension as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Per-axis indices of a flat site index (row-major).
    pub fn axis_indices(&self, site: usize) -> Vec<usize> {
        let mut out = vec![0; self.dimension];
        let mut rest = site;
        for slot in out.iter_mut().rev() {
            *slot = rest % self.points;
            rest /= self.points;
        }
        out
    }

    pub fn coords(&self, site: usize) -> Vec<T> {
        let half = (self.points / 2) as f64;
        self.axis_indices(site)
            .into_iter()
            .map(|j| T::lit(j as f64 - half) * self.spacing)
            .collect()
    }

    /// Minimal-image displacement `to - from`, each component in
    /// `[-extent/2, extent/2)`.
    pub fn displacement(&self, from: usize, to: usize) -> Vec<T> {
        let n = self.points as i64;
        self.axis_indices(from)
            .into_iter()
            .zip(self.axis_indices(to))
            .map(|(a, b)| {
                let d = (b as i64 - a as i64).rem_euclid(n);
                let d = if d >= n - n / 2 { d - n } else { d };
                T::lit(d as f64) * self.spacing
            })
            .collect()
    }

    /// Site lies in the central half of every axis.
    pub fn is_inner(&self, site: usize) -> bool {
        let (lo, hi) = (self.points / 4, self.points - self.points / 4);
        self.axis_indices(site).iter().all(|&j| j >= lo && j < hi)
    }

    /// Site lies in the outer eighth at either end of some axis.
    pub fn in_boundary_band(&self, site: usize) -> bool {
        let band = (self.points / 8).max(1);
        self.axis_indices(site)
            .iter()
            .any(|&j| j < band || j >= self.points - band)
    }

    /// Index of the site at the origin.
    pub fn center(&self) -> usize {
        let c = self.points / 2;
        (0..self.dimension).fold(0, |acc, _| acc * self.points + c)
    }
}
