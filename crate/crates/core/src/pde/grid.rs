use crate::error::{Error, Result};
use crate::field::SpaceTimeField;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const SCHEMA: &str = "ff-grid-v1";

/// Uniform box; the last axis is `y`, and storage is row-major with `y` contiguous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dims: Vec<usize>,
    spacing: f64,
    origin: Vec<f64>,
}

impl Grid {
    pub fn new(dims: Vec<usize>, spacing: f64, origin: Vec<f64>) -> Result<Self> {
        if !(2..=3).contains(&dims.len()) {
            return Err(Error::InvalidGrid(format!("{} axes; only 2 or 3 are supported", dims.len())));
        }
        if origin.len() != dims.len() {
            return Err(Error::InvalidGrid("origin and dims differ in length".into()));
        }
        if dims.iter().any(|&d| d < 3) {
            return Err(Error::InvalidGrid(format!("every axis needs at least 3 nodes, got {dims:?}")));
        }
        if !(spacing > 0.0 && spacing.is_finite()) || origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidGrid(format!("bad spacing {spacing} or origin {origin:?}")));
        }
        Ok(Self { dims, spacing, origin })
    }

    /// The box `[lo_k, lo_k + (n_k - 1) dx]` per axis.
    pub fn cube(dim: usize, nodes: usize, spacing: f64, lo: f64) -> Result<Self> {
        Self::new(vec![nodes; dim], spacing, vec![lo; dim])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }
    pub fn ndim(&self) -> usize {
        self.dims.len()
    }
    pub fn spacing(&self) -> f64 {
        self.spacing
    }
    pub fn origin(&self) -> &[f64] {
        &self.origin
    }
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    /// Nodes along `y`.
    pub fn row_len(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.dims.len()];
        for k in (0..self.dims.len() - 1).rev() {
            s[k] = s[k + 1] * self.dims[k + 1];
        }
        s
    }

    pub(crate) fn shifted_y(&self, dy: f64) -> Self {
        let mut g = self.clone();
        *g.origin.last_mut().unwrap() += dy;
        g
    }

    pub fn multi_index(&self, mut flat: usize, out: &mut [usize]) {
        for k in (0..self.dims.len()).rev() {
            out[k] = flat % self.dims[k];
            flat /= self.dims[k];
        }
    }

    pub fn point_of(&self, flat: usize, out: &mut [f64]) {
        let mut idx = [0usize; 3];
        let idx = &mut idx[..self.ndim()];
        self.multi_index(flat, idx);
        for k in 0..self.ndim() {
            out[k] = self.origin[k] + idx[k] as f64 * self.spacing;
        }
    }

    pub fn is_boundary(&self, flat: usize) -> bool {
        let mut idx = [0usize; 3];
        let idx = &mut idx[..self.ndim()];
        self.multi_index(flat, idx);
        idx.iter().zip(&self.dims).any(|(&i, &n)| i == 0 || i + 1 == n)
    }
}

/// Nodal values of a field at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub grid: Grid,
    pub time: f64,
    pub values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    dims: Vec<usize>,
    spacing: Vec<f64>,
    origin: Vec<f64>,
    time: f64,
    schema: String,
}

impl GridField {
    pub fn constant(grid: Grid, time: f64, value: f64) -> Self {
        let values = vec![value; grid.len()];
        Self { grid, time, values }
    }

    /// Evaluate `field` at every node.
    pub fn sample<F: SpaceTimeField + ?Sized>(grid: Grid, time: f64, field: &F) -> Self {
        let ny = grid.row_len();
        let mut values = vec![0.0; grid.len()];
        values.par_chunks_mut(ny).enumerate().for_each(|(r, row)| {
            let mut p = [0.0; 3];
            let p = &mut p[..grid.ndim()];
            for (k, v) in row.iter_mut().enumerate() {
                grid.point_of(r * ny + k, p);
                *v = field.value(time, p);
            }
        });
        Self { grid, time, values }
    }

    pub fn max_abs_diff(&self, other: &GridField) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::InvalidGrid("fields live on different grids".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Multilinear interpolation; `None` outside the box.
    pub fn interpolate(&self, point: &[f64]) -> Option<f64> {
        let g = &self.grid;
        let n = g.ndim();
        let strides = g.strides();
        let mut base = 0;
        let mut frac = [0.0; 3];
        for k in 0..n {
            let s = (point[k] - g.origin[k]) / g.spacing;
            if !(s >= 0.0 && s <= (g.dims[k] - 1) as f64) {
                return None;
            }
            let i = (s.floor() as usize).min(g.dims[k] - 2);
            frac[k] = s - i as f64;
            base += i * strides[k];
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut off = 0;
            for k in 0..n {
                if corner >> k & 1 == 1 {
                    w *= frac[k];
                    off += strides[k];
                } else {
                    w *= 1.0 - frac[k];
                }
            }
            if w != 0.0 {
                acc += w * self.values[base + off];
            }
        }
        Some(acc)
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let mut w = BufWriter::new(w);
        let header = Header {
            dims: self.grid.dims.clone(),
            spacing: vec![self.grid.spacing; self.grid.ndim()],
            origin: self.grid.origin.clone(),
            time: self.time,
            schema: SCHEMA.into(),
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut r = BufReader::new(r);
        let mut line = String::new();
        r.read_line(&mut line)?;
        let h: Header = serde_json::from_str(line.trim_end())?;
        if h.schema != SCHEMA {
            return Err(Error::Format(format!("schema `{}`, expected `{SCHEMA}`", h.schema)));
        }
        let dx = *h.spacing.first().ok_or_else(|| Error::Format("empty spacing".into()))?;
        if h.spacing.len() != h.dims.len() || h.spacing.iter().any(|&s| s != dx) {
            return Err(Error::Format("spacing must be uniform and match dims".into()));
        }
        let grid = Grid::new(h.dims, dx, h.origin).map_err(|e| Error::Format(e.to_string()))?;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() != 8 * grid.len() {
            return Err(Error::Format(format!(
                "payload holds {} bytes, expected {}",
                bytes.len(),
                8 * grid.len()
            )));
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self { grid, time: h.time, values })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_to(std::fs::File::create(path)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(std::fs::File::open(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_interpolation() {
        let g = Grid::new(vec![4, 5], 0.5, vec![-1.0, 2.0]).unwrap();
        let f = GridField::sample(g, 1.5, &|t: f64, p: &[f64]| t + 2.0 * p[0] - p[1]);
        let mut buf = Vec::new();
        f.write_to(&mut buf).unwrap();
        let first = buf.iter().position(|&b| b == b'\n').unwrap();
        let header: serde_json::Value = serde_json::from_slice(&buf[..first]).unwrap();
        assert_eq!(header["schema"], SCHEMA);
        assert_eq!(buf.len() - first - 1, 8 * 20);
        let back = GridField::read_from(&buf[..]).unwrap();
        assert_eq!(back, f);
        let v = f.interpolate(&[-0.3, 3.1]).unwrap();
        assert!((v - (1.5 - 0.6 - 3.1)).abs() < 1e-12);
        assert!(f.interpolate(&[-1.1, 3.0]).is_none());
    }

    #[test]
    fn boundary_detection() {
        let g = Grid::new(vec![3, 4], 1.0, vec![0.0, 0.0]).unwrap();
        let interior: Vec<usize> = (0..g.len()).filter(|&i| !g.is_boundary(i)).collect();
        assert_eq!(interior, vec![5, 6]);
        assert!(Grid::new(vec![3, 3, 3, 3], 1.0, vec![0.0; 4]).is_err());
    }
}
