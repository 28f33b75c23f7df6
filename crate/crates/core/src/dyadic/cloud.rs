use std::path::Path;

use serde_json::json;

use crate::error::{Error, Result};
use crate::measures::Atoms;

/// `N` points in `R^d`, each carrying weight `1/N`.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
}

impl PointCloud {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || !coords.len().is_multiple_of(dim) {
            return Err(Error::InvalidParameter(format!(
                "{} coordinates do not form points of dimension {dim}",
                coords.len()
            )));
        }
        Ok(Self { dim, coords })
    }

    pub fn from_points(dim: usize, points: &[Vec<f64>]) -> Result<Self> {
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.len(),
            });
        }
        Self::new(dim, points.concat())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            coords: self.coords.iter().map(|v| v * factor).collect(),
        }
    }

    /// The empirical measure, merging runs of repeated points into one atom.
    pub fn to_atoms(&self) -> Result<Atoms> {
        if self.is_empty() {
            return Err(Error::InvalidParameter("empty point cloud".into()));
        }
        let unit = 1.0 / self.len() as f64;
        let mut points: Vec<Vec<f64>> = Vec::new();
        let mut runs: Vec<usize> = Vec::new();
        for p in self.iter() {
            if points.last().is_some_and(|q| q.as_slice() == p) {
                *runs.last_mut().unwrap() += 1;
            } else {
                points.push(p.to_vec());
                runs.push(1);
            }
        }
        let weights = runs.into_iter().map(|r| r as f64 * unit).collect();
        Atoms::new(self.dim, points, weights)
    }

    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record((0..self.dim).map(|i| format!("x{i}")))?;
        for p in self.iter() {
            w.write_record(p.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self, meta: serde_json::Value) -> serde_json::Value {
        let points: Vec<&[f64]> = self.iter().collect();
        json!({ "n": self.len(), "d": self.dim, "points": points, "meta": meta })
    }

    pub fn write_json<P: AsRef<Path>>(&self, path: P, meta: serde_json::Value) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_json(meta))?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }
}
