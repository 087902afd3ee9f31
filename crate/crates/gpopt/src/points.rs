//! Flat row-major storage for sets of points in R^d.

use crate::error::{Error, Result};

/// A list of `d`-dimensional points stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct Points {
    dim: usize,
    data: Vec<f64>,
}

impl Points {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "point dimension must be positive");
        Points { dim, data: Vec::new() }
    }

    pub fn with_capacity(dim: usize, n: usize) -> Self {
        assert!(dim > 0, "point dimension must be positive");
        Points { dim, data: Vec::with_capacity(dim * n) }
    }

    pub fn from_rows(dim: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let mut pts = Points::with_capacity(dim, rows.len());
        for row in rows {
            pts.push(row)?;
        }
        Ok(pts)
    }

    pub fn push(&mut self, point: &[f64]) -> Result<()> {
        if point.len() != self.dim {
            return Err(Error::Input(format!(
                "point has dimension {}, expected {}",
                point.len(),
                self.dim
            )));
        }
        self.data.extend_from_slice(point);
        Ok(())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.iter().map(|p| p.to_vec()).collect()
    }
}
