use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::HalfOpenBox;

/// Finitely supported measure `Σ wᵢ δ_{xᵢ}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Atoms {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
    line: Option<Line>,
}

/// Sorted one-dimensional view: distinct support values and the cumulative
/// mass `P(X ≤ values[i])`.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Line {
    pub values: Vec<f64>,
    pub cum: Vec<f64>,
}

pub(crate) const MASS_TOL: f64 = 1e-12;

impl Atoms {
    /// Builds the measure, checking positivity and unit total mass.
    pub fn new(dim: usize, points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::InvalidParameter(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if points.is_empty() {
            return Err(Error::InvalidParameter("atom list is empty".into()));
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(
                    "atom coordinates must be finite".into(),
                ));
            }
            coords.extend_from_slice(p);
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "atom weight {w} is not strictly positive"
            )));
        }
        let total: f64 = weights.iter().sum();
        let tol = MASS_TOL + weights.len() as f64 * f64::EPSILON;
        if (total - 1.0).abs() > tol {
            return Err(Error::InvalidParameter(format!(
                "atom weights sum to {total}, not 1"
            )));
        }
        Ok(Self::assemble(dim, coords, weights))
    }

    /// `(1/N) Σ δ_{xᵢ}`.
    pub fn uniform(dim: usize, points: Vec<Vec<f64>>) -> Result<Self> {
        let n = points.len();
        Self::new(dim, points, vec![1.0 / n as f64; n])
    }

    fn assemble(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Self {
        let line = (dim == 1).then(|| build_line(&coords, &weights));
        Self {
            dim,
            coords,
            weights,
            line,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.coords
            .chunks_exact(self.dim)
            .zip(self.weights.iter().copied())
    }

    pub(crate) fn line(&self) -> Option<&Line> {
        self.line.as_ref()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let coords = self.coords.iter().map(|v| v * factor).collect();
        Self::assemble(self.dim, coords, self.weights.clone())
    }

    pub fn box_mass(&self, b: &HalfOpenBox) -> f64 {
        self.iter()
            .filter(|(x, _)| b.contains(x))
            .map(|(_, w)| w)
            .sum()
    }

    /// Mass outside `(−r, r]^d`.
    pub fn outside_cube_mass(&self, r: f64) -> f64 {
        self.iter()
            .filter(|(x, _)| x.iter().any(|&v| v <= -r || v > r))
            .map(|(_, w)| w)
            .sum()
    }

    pub fn moment(&self, q: f64) -> f64 {
        self.iter().map(|(x, w)| w * norm(x).powf(q)).sum()
    }

    /// `sup_λ λ^q μ(|x| ≥ λ)`, attained at an atom radius.
    pub fn weak_moment(&self, q: f64) -> f64 {
        let mut radii: Vec<(f64, f64)> = self.iter().map(|(x, w)| (norm(x), w)).collect();
        radii.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut best = 0.0f64;
        let mut tail = 0.0;
        let mut i = 0;
        while i < radii.len() {
            let r = radii[i].0;
            while i < radii.len() && radii[i].0 == r {
                tail += radii[i].1;
                i += 1;
            }
            if r > 0.0 {
                best = best.max(r.powf(q) * tail);
            }
        }
        best
    }

    pub fn read_csv<P: AsRef<Path>>(path: P) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)?;
        let headers = reader.headers()?.clone();
        if headers.len() < 2 {
            return Err(Error::Config(
                "atom CSV needs at least one coordinate column and a weight column".into(),
            ));
        }
        let dim = headers.len() - 1;
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record?;
            let mut row = Vec::with_capacity(dim + 1);
            for field in record.iter() {
                let v: f64 = field.trim().parse().map_err(|_| {
                    Error::Config(format!(
                        "row {}: cannot parse {field:?} as a number",
                        line + 2
                    ))
                })?;
                row.push(v);
            }
            let w = row.pop().expect("nonempty row");
            points.push(row);
            weights.push(w);
        }
        Self::new(dim, points, weights)
    }

    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut writer = csv::Writer::from_path(path)?;
        let mut header: Vec<String> = (0..self.dim).map(|i| format!("x{i}")).collect();
        header.push("weight".into());
        writer.write_record(&header)?;
        for (x, w) in self.iter() {
            let mut row: Vec<String> = x.iter().map(|v| v.to_string()).collect();
            row.push(w.to_string());
            writer.write_record(&row)?;
        }
        writer.flush()?;
        Ok(())
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn build_line(coords: &[f64], weights: &[f64]) -> Line {
    let mut pairs: Vec<(f64, f64)> = coords
        .iter()
        .copied()
        .zip(weights.iter().copied())
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut values = Vec::new();
    let mut masses: Vec<f64> = Vec::new();
    for (v, w) in pairs {
        if values.last() == Some(&v) {
            *masses.last_mut().unwrap() += w;
        } else {
            values.push(v);
            masses.push(w);
        }
    }
    let total: f64 = masses.iter().sum();
    let mut cum = Vec::with_capacity(masses.len());
    let mut acc = 0.0;
    for m in masses {
        acc += m / total;
        cum.push(acc);
    }
    *cum.last_mut().unwrap() = 1.0;
    Line { values, cum }
}

impl Line {
    pub fn cdf(&self, t: f64) -> f64 {
        let k = self.values.partition_point(|&v| v <= t);
        if k == 0 {
            0.0
        } else {
            self.cum[k - 1]
        }
    }

    pub fn cdf_left(&self, t: f64) -> f64 {
        let k = self.values.partition_point(|&v| v < t);
        if k == 0 {
            0.0
        } else {
            self.cum[k - 1]
        }
    }

    pub fn quantile(&self, omega: f64) -> f64 {
        let k = self.cum.partition_point(|&c| c < omega);
        self.values[k.min(self.values.len() - 1)]
    }

    /// Step representation of the quantile function: `(ω_start, ω_end, value)`.
    pub fn steps(&self) -> Vec<(f64, f64, f64)> {
        let mut prev = 0.0;
        self.values
            .iter()
            .zip(&self.cum)
            .map(|(&v, &c)| {
                let s = (prev, c, v);
                prev = c;
                s
            })
            .filter(|(a, b, _)| b > a)
            .collect()
    }
}
