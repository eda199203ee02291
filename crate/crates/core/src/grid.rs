//! Mesh functions on the integer grid `{0, 1, ..., T+1}` and forward differences.
//!
//! Both boundary entries are always stored, so a mesh function for grid
//! parameter `T` holds exactly `T + 2` values.

use std::fmt::Write as _;
use std::ops::Index;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A finite real sequence indexed by `t = 0, ..., T+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshFunction {
    values: Vec<f64>,
}

impl MeshFunction {
    /// Wraps `values` as a mesh function; `values.len()` must be `T + 2` with `T >= 1`.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 3 {
            return Err(Error::InvalidGridSize(values.len().saturating_sub(2)));
        }
        if let Some((t, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { t, value });
        }
        Ok(Self { values })
    }

    /// Wraps `values` after checking they match grid parameter `grid_size`.
    pub fn with_grid(grid_size: usize, values: Vec<f64>) -> Result<Self> {
        check_grid_size(grid_size)?;
        if values.len() != grid_size + 2 {
            return Err(Error::LengthMismatch {
                expected: grid_size + 2,
                found: values.len(),
            });
        }
        Self::new(values)
    }

    pub fn zeros(grid_size: usize) -> Result<Self> {
        check_grid_size(grid_size)?;
        Ok(Self {
            values: vec![0.0; grid_size + 2],
        })
    }

    /// Samples `f` at every grid point `t = 0, ..., T+1`.
    pub fn from_fn<F>(grid_size: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(usize) -> f64,
    {
        check_grid_size(grid_size)?;
        Self::new((0..grid_size + 2).map(&mut f).collect())
    }

    /// Builds a mesh function from interior values `t = 1..=T` and the two boundary values.
    pub fn from_interior(interior: &[f64], left: f64, right: f64) -> Result<Self> {
        let mut values = Vec::with_capacity(interior.len() + 2);
        values.push(left);
        values.extend_from_slice(interior);
        values.push(right);
        Self::new(values)
    }

    /// Grid parameter `T`.
    pub fn grid_size(&self) -> usize {
        self.values.len() - 2
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Values at `t = 1..=T`.
    pub fn interior(&self) -> &[f64] {
        &self.values[1..self.values.len() - 1]
    }

    pub fn left(&self) -> f64 {
        self.values[0]
    }

    pub fn right(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Checked access `y(t)` for `0 <= t <= T+1`.
    pub fn value(&self, t: i64) -> Result<f64> {
        let max = self.values.len() as i64 - 1;
        self.checked_index(t, 0, max).map(|i| self.values[i])
    }

    /// Forward difference `Δy(t) = y(t+1) - y(t)` for `0 <= t <= T`.
    pub fn delta(&self, t: i64) -> Result<f64> {
        let max = self.grid_size() as i64;
        let i = self.checked_index(t, 0, max)?;
        Ok(self.values[i + 1] - self.values[i])
    }

    /// Second difference `Δ²y(t-1) = y(t+1) - 2y(t) + y(t-1)` for `1 <= t <= T`.
    pub fn delta2(&self, t: i64) -> Result<f64> {
        let max = self.grid_size() as i64;
        let i = self.checked_index(t, 1, max)?;
        Ok(self.second_difference(i))
    }

    /// Unchecked second difference for an interior index `1 <= i <= T`.
    pub(crate) fn second_difference(&self, i: usize) -> f64 {
        self.values[i + 1] - 2.0 * self.values[i] + self.values[i - 1]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `max_t |self(t) - other(t)|` over the full grid.
    pub fn sup_distance(&self, other: &MeshFunction) -> Result<f64> {
        self.ensure_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Smallest value of `self(t) - other(t)` over the full grid.
    pub fn min_difference(&self, other: &MeshFunction) -> Result<f64> {
        self.ensure_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(f64::INFINITY, |m, (a, b)| m.min(a - b)))
    }

    pub fn ensure_same_grid(&self, other: &MeshFunction) -> Result<()> {
        if self.grid_size() != other.grid_size() {
            return Err(Error::GridMismatch {
                expected: self.grid_size(),
                found: other.grid_size(),
            });
        }
        Ok(())
    }

    /// Two-column CSV with header `t,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,value\n");
        for (t, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{t},{v:?}");
        }
        out
    }

    /// Parses the two-column CSV written by [`MeshFunction::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut values = Vec::new();
        for (line_no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (line_no == 0 && line.starts_with('t')) {
                continue;
            }
            let (t, v) = line
                .split_once(',')
                .ok_or_else(|| Error::InvalidParameter(format!("malformed CSV line `{line}`")))?;
            let t: usize = t
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad grid index `{t}`")))?;
            if t != values.len() {
                return Err(Error::InvalidParameter(format!(
                    "CSV rows must list t = 0, 1, ... in order; found t={t} at row {}",
                    values.len()
                )));
            }
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad value `{v}`")))?;
            values.push(v);
        }
        Self::new(values)
    }

    fn checked_index(&self, t: i64, min: i64, max: i64) -> Result<usize> {
        if t < min || t > max {
            return Err(Error::IndexOutOfRange { index: t, min, max });
        }
        Ok(t as usize)
    }
}

impl Index<usize> for MeshFunction {
    type Output = f64;

    fn index(&self, t: usize) -> &f64 {
        &self.values[t]
    }
}

impl Serialize for MeshFunction {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.values.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MeshFunction {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let values = Vec::<f64>::deserialize(deserializer)?;
        MeshFunction::new(values).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn check_grid_size(grid_size: usize) -> Result<()> {
    if grid_size < 1 {
        return Err(Error::InvalidGridSize(grid_size));
    }
    Ok(())
}
