//! Arrangements of planar fronts and the rotation weights between facets.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// One planar front with direction `(nu cos(theta), sin(theta))` and phase `tau`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Front {
    pub nu: Vec<f64>,
    pub theta: f64,
    #[serde(default)]
    pub tau: f64,
}

#[derive(Debug, Clone)]
pub struct FrontArrangement {
    dim: usize,
    speed: f64,
    fronts: Vec<Front>,
    dirs: Vec<Vec<f64>>,
}

const UNIT_TOL: f64 = 1e-12;
const DISTINCT_TOL: f64 = 1e-12;

impl FrontArrangement {
    /// `dim` is the full space dimension `N >= 2`; each `nu` lives in `R^{N-1}`.
    pub fn new(dim: usize, fronts: Vec<Front>, speed: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidArrangement(format!("dimension {dim} < 2")));
        }
        if fronts.is_empty() {
            return Err(Error::InvalidArrangement("no fronts".into()));
        }
        if !(speed.is_finite() && speed > 0.0) {
            return Err(Error::InvalidArrangement(format!("speed {speed} must be positive")));
        }
        let half_pi = std::f64::consts::FRAC_PI_2;
        let mut dirs = Vec::with_capacity(fronts.len());
        for (i, fr) in fronts.iter().enumerate() {
            if fr.nu.len() != dim - 1 {
                return Err(Error::InvalidArrangement(format!(
                    "front {i}: nu has {} components, expected {}",
                    fr.nu.len(),
                    dim - 1
                )));
            }
            if fr.nu.iter().any(|v| !v.is_finite()) || !fr.theta.is_finite() || !fr.tau.is_finite() {
                return Err(Error::InvalidArrangement(format!("front {i}: non-finite entry")));
            }
            let norm = fr.nu.iter().map(|v| v * v).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > UNIT_TOL {
                return Err(Error::InvalidArrangement(format!(
                    "front {i}: |nu| = {norm}, expected 1"
                )));
            }
            if !(fr.theta > 0.0 && fr.theta <= half_pi + 1e-15) {
                return Err(Error::InvalidArrangement(format!(
                    "front {i}: theta = {} outside (0, pi/2]",
                    fr.theta
                )));
            }
            let (s, c) = fr.theta.sin_cos();
            let mut e: Vec<f64> = fr.nu.iter().map(|v| v * c).collect();
            e.push(s);
            dirs.push(e);
        }
        for i in 0..dirs.len() {
            for j in 0..i {
                let d2: f64 = dirs[i].iter().zip(&dirs[j]).map(|(a, b)| (a - b) * (a - b)).sum();
                if d2.sqrt() < DISTINCT_TOL {
                    return Err(Error::InvalidArrangement(format!(
                        "fronts {j} and {i} have the same direction"
                    )));
                }
            }
        }
        Ok(Self {
            dim,
            speed,
            fronts,
            dirs,
        })
    }

    /// Build from raw unit directions in `R^N`, reflecting `e0` onto the last axis.
    pub fn from_directions(raw: &[Vec<f64>], e0: &[f64], taus: &[f64], speed: f64) -> Result<Self> {
        let dim = e0.len();
        if raw.len() != taus.len() {
            return Err(Error::InvalidArrangement("one tau per direction required".into()));
        }
        let n0 = e0.iter().map(|v| v * v).sum::<f64>().sqrt();
        if dim < 2 || !(n0 > 0.0) {
            return Err(Error::InvalidArrangement("e0 must be a nonzero vector in R^N, N >= 2".into()));
        }
        let mut v: Vec<f64> = e0.iter().map(|x| x / n0).collect();
        v[dim - 1] -= 1.0;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        let mut fronts = Vec::with_capacity(raw.len());
        for (i, e) in raw.iter().enumerate() {
            if e.len() != dim {
                return Err(Error::InvalidArrangement(format!("direction {i} has wrong length")));
            }
            let ne = e.iter().map(|x| x * x).sum::<f64>().sqrt();
            let mut r: Vec<f64> = e.iter().map(|x| x / ne).collect();
            if vv > 1e-30 {
                let dot: f64 = r.iter().zip(&v).map(|(a, b)| a * b).sum();
                for (ri, vi) in r.iter_mut().zip(&v) {
                    *ri -= 2.0 * dot / vv * vi;
                }
            }
            let last = r[dim - 1];
            if !(last > 0.0) {
                return Err(Error::InvalidArrangement(format!(
                    "direction {i} is not in the open half-space of e0"
                )));
            }
            let theta = last.min(1.0).asin();
            let cos = (1.0 - last * last).max(0.0).sqrt();
            let nu: Vec<f64> = if cos > 1e-14 {
                let head = &r[..dim - 1];
                let nh = head.iter().map(|x| x * x).sum::<f64>().sqrt();
                head.iter().map(|x| x / nh).collect()
            } else {
                let mut u = vec![0.0; dim - 1];
                u[0] = 1.0;
                u
            };
            fronts.push(Front { nu, theta, tau: taus[i] });
        }
        Self::new(dim, fronts, speed)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn len(&self) -> usize {
        self.fronts.len()
    }
    pub fn is_empty(&self) -> bool {
        self.fronts.is_empty()
    }
    pub fn speed(&self) -> f64 {
        self.speed
    }
    pub fn fronts(&self) -> &[Front] {
        &self.fronts
    }
    pub fn direction(&self, i: usize) -> &[f64] {
        &self.dirs[i]
    }
    pub fn sin_theta(&self, i: usize) -> f64 {
        self.dirs[i][self.dim - 1]
    }
    pub fn min_sin(&self) -> f64 {
        (0..self.len()).map(|i| self.sin_theta(i)).fold(f64::INFINITY, f64::min)
    }

    /// `1 - e_i . e_j`, computed as `|e_i - e_j|^2 / 2` to avoid cancellation.
    pub fn gap(&self, i: usize, j: usize) -> f64 {
        0.5 * self.dirs[i]
            .iter()
            .zip(&self.dirs[j])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
    }

    /// Copy with every phase replaced.
    pub fn with_taus(&self, taus: &[f64]) -> Result<Self> {
        if taus.len() != self.len() {
            return Err(Error::InvalidArrangement("tau count mismatch".into()));
        }
        let mut out = self.clone();
        for (f, &t) in out.fronts.iter_mut().zip(taus) {
            f.tau = t;
        }
        Ok(out)
    }

    /// `x . nu_i cos(theta_i) + y sin(theta_i) - c t + scale tau_i`.
    #[inline]
    pub fn plane_coord(&self, i: usize, t: f64, x: &[f64], y: f64, scale: f64) -> f64 {
        let e = &self.dirs[i];
        let mut q = e[self.dim - 1] * y - self.speed * t + scale * self.fronts[i].tau;
        for (a, b) in e.iter().zip(x) {
            q += a * b;
        }
        q
    }

    /// Smallest plane coordinate and its index (lowest index on ties).
    #[inline]
    pub fn min_plane_coord(&self, t: f64, x: &[f64], y: f64, scale: f64) -> (f64, usize) {
        let mut best = (f64::INFINITY, 0);
        for i in 0..self.len() {
            let q = self.plane_coord(i, t, x, y, scale);
            if q < best.0 {
                best = (q, i);
            }
        }
        best
    }

    /// Space-time distance from `(t, x, y)` to the nearest pairwise intersection
    /// `{q_i = 0} cap {q_j = 0}`.
    pub fn ridge_distance_proxy(&self, t: f64, x: &[f64], y: f64) -> Result<f64> {
        if self.len() < 2 {
            return Err(Error::NoRidges);
        }
        let c2 = self.speed * self.speed;
        let mut best = f64::INFINITY;
        for i in 0..self.len() {
            let qi = self.plane_coord(i, t, x, y, 1.0);
            for j in 0..i {
                let qj = self.plane_coord(j, t, x, y, 1.0);
                // Space-time normals (-c, e) all have squared length 1 + c^2.
                let a = 1.0 + c2;
                let b = c2 + 1.0 - self.gap(i, j);
                let det = a * a - b * b;
                let d2 = (a * qi * qi - 2.0 * b * qi * qj + a * qj * qj) / det;
                best = best.min(d2.max(0.0).sqrt());
            }
        }
        Ok(best)
    }

    /// Rotation weights tilting the other fronts towards facet `i`.
    pub fn rotation_weights(&self, i: usize) -> RotatedFamily {
        let n = self.len();
        let si = self.sin_theta(i);
        let spread = (0..n)
            .filter(|&l| l != i)
            .map(|l| {
                let g = self.gap(i, l);
                g / (1.0 + g)
            })
            .fold(f64::INFINITY, f64::min);
        let mut lambda = vec![0.0; n];
        let mut gamma = vec![1.0; n];
        for j in 0..n {
            if j == i {
                continue;
            }
            let lj = 0.5 * (si / (si + self.sin_theta(j))).min(spread);
            lambda[j] = lj;
            gamma[j] = 1.0 - lj;
        }
        RotatedFamily {
            facet: i,
            lambda,
            gamma,
        }
    }
}

/// `q_ij = -gamma_ij q_i + lambda_ij q_j` for a fixed facet `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct RotatedFamily {
    pub facet: usize,
    pub lambda: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl RotatedFamily {
    #[inline]
    pub fn rotated_coord(&self, arr: &FrontArrangement, j: usize, t: f64, x: &[f64], y: f64, scale: f64) -> f64 {
        -self.gamma[j] * arr.plane_coord(self.facet, t, x, y, scale)
            + self.lambda[j] * arr.plane_coord(j, t, x, y, scale)
    }

    /// Smallest `sin(theta_i) gamma_ij - sin(theta_j) lambda_ij` and smallest
    /// `gamma_ij - lambda_ij` over `j != i`; both are positive for valid weights.
    pub fn margins(&self, arr: &FrontArrangement) -> (f64, f64) {
        let i = self.facet;
        let mut tilt = f64::INFINITY;
        let mut speed = f64::INFINITY;
        for j in 0..arr.len() {
            if j == i {
                continue;
            }
            tilt = tilt.min(arr.sin_theta(i) * self.gamma[j] - arr.sin_theta(j) * self.lambda[j]);
            speed = speed.min(self.gamma[j] - self.lambda[j]);
        }
        (tilt, speed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn pair() -> FrontArrangement {
        FrontArrangement::new(
            2,
            vec![
                Front { nu: vec![1.0], theta: FRAC_PI_4, tau: 0.0 },
                Front { nu: vec![-1.0], theta: FRAC_PI_4, tau: 0.0 },
            ],
            0.5,
        )
        .unwrap()
    }

    #[test]
    fn plane_coordinates() {
        let a = pair();
        let s = FRAC_PI_4.sin();
        assert!((a.plane_coord(0, 1.0, &[2.0], 3.0, 1.0) - (5.0 * s - 0.5)).abs() < 1e-14);
        assert_eq!(a.min_plane_coord(0.0, &[0.0], 1.0, 1.0).1, 0);
        assert_eq!(a.min_plane_coord(0.0, &[1.0], 1.0, 1.0).1, 1);
    }

    #[test]
    fn rejects_bad_input() {
        let f = |nu: Vec<f64>, theta: f64| Front { nu, theta, tau: 0.0 };
        assert!(FrontArrangement::new(2, vec![f(vec![1.0], 0.0)], 1.0).is_err());
        assert!(FrontArrangement::new(2, vec![f(vec![0.5], 1.0)], 1.0).is_err());
        assert!(FrontArrangement::new(3, vec![f(vec![1.0], 1.0)], 1.0).is_err());
        // Distinct (nu, theta) but the same direction at theta = pi/2.
        let h = std::f64::consts::FRAC_PI_2;
        let e = FrontArrangement::new(2, vec![f(vec![1.0], h), f(vec![-1.0], h)], 1.0).unwrap_err();
        assert!(matches!(e, Error::InvalidArrangement(_)));
        assert!(matches!(
            FrontArrangement::new(2, vec![f(vec![1.0], 1.0)], 1.0).unwrap().ridge_distance_proxy(0.0, &[0.0], 0.0),
            Err(Error::NoRidges)
        ));
    }

    #[test]
    fn ridge_distance_of_symmetric_pair() {
        let a = pair();
        // The ridge of the pair is {x = 0, y sin - c t = 0}.
        assert!(a.ridge_distance_proxy(0.0, &[0.0], 0.0).unwrap() < 1e-14);
        let d = a.ridge_distance_proxy(0.0, &[3.0], 0.0).unwrap();
        assert!((d - 3.0).abs() < 1e-12, "{d}");
    }

    #[test]
    fn rotation_weight_bounds() {
        let a = pair();
        let r = a.rotation_weights(0);
        assert_eq!(r.lambda[0], 0.0);
        assert_eq!(r.gamma[0], 1.0);
        // gap = 1 for orthogonal directions: min(1/2, 1/2) / 2.
        assert!((r.lambda[1] - 0.25).abs() < 1e-15);
        let (tilt, speed) = r.margins(&a);
        assert!(tilt > 0.0 && speed > 0.0);
    }

    #[test]
    fn householder_reflection() {
        let e0 = vec![1.0, 0.0];
        let raw = vec![vec![1.0, 1.0], vec![1.0, -1.0]];
        let a = FrontArrangement::from_directions(&raw, &e0, &[0.0, 0.0], 1.0).unwrap();
        for i in 0..2 {
            assert!((a.fronts()[i].theta - FRAC_PI_4).abs() < 1e-14);
        }
        assert!(FrontArrangement::from_directions(&[vec![-1.0, 0.0]], &e0, &[0.0], 1.0).is_err());
    }
}
