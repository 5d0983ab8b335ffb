//! Smooth convex (or concave) interpolation of a family of planes through the
//! implicit relation `sum_j exp(-q_j(T, X, Y)) = 1`, solved for `Y`.
//!
//! Everything here works in the scaled coordinates `T = alpha t`, `X = alpha x`.

use crate::error::{Error, Result};
use crate::geometry::{FrontArrangement, RotatedFamily};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceKind {
    /// Convex envelope of the front planes, decreasing relation in `Y`.
    Phi,
    /// Concave surface of the rotated family about one facet.
    Psi(usize),
}

/// `q_j = a_j . X + b_j Y + c_j T + d_j`.
#[derive(Debug, Clone)]
pub struct ImplicitSurface {
    kind: SurfaceKind,
    alpha: f64,
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    c: Vec<f64>,
    d: Vec<f64>,
    min_abs_b: f64,
    speed: f64,
    /// `K_jk = p_j p_k - n_j . n_k` with `p_j = |c_j| / c_f` and `n_j = (a_j, b_j)`,
    /// assembled from `1 - e . e` gaps so that it stays accurate when small.
    kernel: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SurfacePoint {
    pub height: f64,
    /// `exp(-q_j)` at the solution; they sum to one up to rounding.
    pub weights: Vec<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceDerivatives {
    pub dt: f64,
    pub grad: Vec<f64>,
    /// Row-major `(N-1) x (N-1)`.
    pub hess: Vec<f64>,
    pub grad_dt: Vec<f64>,
    pub dtt: f64,
}

/// Derivatives of `h = sum_{i != j} w_i w_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatnessDerivatives {
    pub value: f64,
    pub dt: f64,
    pub grad: Vec<f64>,
    pub laplacian: f64,
}

/// A surface point together with its normalised weights, used as the origin
/// of a local frame in physical units.
#[derive(Debug, Clone)]
pub struct Anchor {
    pub t: f64,
    pub x: Vec<f64>,
    pub height: f64,
    pub weights: Vec<f64>,
}

const MAX_ITER: usize = 200;

impl ImplicitSurface {
    pub fn phi(arr: &FrontArrangement, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let m = arr.dim() - 1;
        let n = arr.len();
        let mut s = Self {
            kind: SurfaceKind::Phi,
            alpha,
            a: Vec::with_capacity(n),
            b: Vec::with_capacity(n),
            c: vec![-arr.speed(); n],
            d: Vec::with_capacity(n),
            min_abs_b: 0.0,
            speed: arr.speed(),
            kernel: vec![0.0; n * n],
        };
        for j in 0..n {
            let e = arr.direction(j);
            s.a.push(e[..m].to_vec());
            s.b.push(e[m]);
            s.d.push(alpha * arr.fronts()[j].tau);
            for k in 0..n {
                s.kernel[j * n + k] = arr.gap(j, k);
            }
        }
        s.finish()
    }

    pub fn psi(arr: &FrontArrangement, family: &RotatedFamily, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let m = arr.dim() - 1;
        let n = arr.len();
        let i = family.facet;
        if i >= n || family.lambda.len() != n || family.gamma.len() != n {
            return Err(Error::InvalidArrangement("rotation weights do not match the arrangement".into()));
        }
        let ei = arr.direction(i);
        let ti = arr.fronts()[i].tau;
        let mut s = Self {
            kind: SurfaceKind::Psi(i),
            alpha,
            a: Vec::with_capacity(n),
            b: Vec::with_capacity(n),
            c: Vec::with_capacity(n),
            d: Vec::with_capacity(n),
            min_abs_b: 0.0,
            speed: arr.speed(),
            kernel: vec![0.0; n * n],
        };
        for j in 0..n {
            let (g, l) = (family.gamma[j], family.lambda[j]);
            let ej = arr.direction(j);
            s.a.push((0..m).map(|k| -g * ei[k] + l * ej[k]).collect());
            s.b.push(-g * ei[m] + l * ej[m]);
            s.c.push((g - l) * arr.speed());
            s.d.push(alpha * (-g * ti + l * arr.fronts()[j].tau));
        }
        let (gam, lam) = (&family.gamma, &family.lambda);
        for j in 0..n {
            for k in 0..n {
                s.kernel[j * n + k] = -(gam[j] * lam[k] * arr.gap(i, k) + lam[j] * gam[k] * arr.gap(i, j)
                    - lam[j] * lam[k] * arr.gap(j, k));
            }
        }
        s.finish()
    }

    fn finish(mut self) -> Result<Self> {
        let pos = self.b.iter().all(|&b| b > 0.0);
        let neg = self.b.iter().all(|&b| b < 0.0);
        if !(pos || neg) {
            return Err(Error::InvalidArrangement(
                "plane family is not uniformly monotone in y".into(),
            ));
        }
        self.min_abs_b = self.b.iter().map(|b| b.abs()).fold(f64::INFINITY, f64::min);
        Ok(self)
    }

    pub fn kind(&self) -> SurfaceKind {
        self.kind
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn len(&self) -> usize {
        self.b.len()
    }
    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }
    pub fn spatial_dim(&self) -> usize {
        self.a[0].len()
    }
    pub fn coefficients(&self, j: usize) -> (&[f64], f64, f64, f64) {
        (&self.a[j], self.b[j], self.c[j], self.d[j])
    }

    #[inline]
    fn offset(&self, j: usize, t: f64, x: &[f64]) -> f64 {
        let mut l = self.c[j] * t + self.d[j];
        for (a, v) in self.a[j].iter().zip(x) {
            l += a * v;
        }
        l
    }

    /// Heights at which each plane alone would vanish.
    pub fn plane_heights(&self, t: f64, x: &[f64]) -> Vec<f64> {
        (0..self.len()).map(|j| -self.offset(j, t, x) / self.b[j]).collect()
    }

    /// Solve `sum exp(-q_j) = 1` for the height.
    pub fn solve(&self, t: f64, x: &[f64]) -> Result<SurfacePoint> {
        if !t.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NanInput("surface solve"));
        }
        let increasing = self.b[0] < 0.0;
        let eta = self.plane_heights(t, x);
        let y0 = if increasing {
            eta.iter().copied().fold(f64::INFINITY, f64::min)
        } else {
            eta.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        };
        let s: Vec<f64> = (0..self.len()).map(|j| self.b[j] * (y0 - eta[j])).collect();
        let span = (self.len() as f64).ln() / self.min_abs_b;
        let (mut lo, mut hi) = if increasing { (-span, 0.0) } else { (0.0, span) };
        let eval = |z: f64| {
            let mut sum = 0.0;
            let mut dsum = 0.0;
            for j in 0..s.len() {
                let e = (-s[j] - self.b[j] * z).exp();
                sum += e;
                dsum -= self.b[j] * e;
            }
            (sum.ln(), dsum / sum)
        };
        let mut z = 0.0;
        let mut converged = self.len() == 1;
        for _ in 0..MAX_ITER {
            if converged {
                break;
            }
            let (g, dg) = eval(z);
            if g == 0.0 {
                break;
            }
            // Keep the root bracketed: G > 0 on the side of z = 0.
            let towards_zero_side = g > 0.0;
            if increasing == towards_zero_side {
                hi = hi.min(z);
            } else {
                lo = lo.max(z);
            }
            let mut next = z - g / dg;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            if (next - z).abs() <= 4.0 * f64::EPSILON * z.abs().max(1e-300) || hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(lo.abs()) {
                z = next;
                converged = true;
                break;
            }
            z = next;
        }
        let height = y0 + z;
        let mut weights = Vec::with_capacity(self.len());
        let mut direct = 0.0;
        for j in 0..self.len() {
            weights.push((-s[j] - self.b[j] * z).exp());
            let mut q = self.b[j] * height + self.c[j] * t + self.d[j];
            for (a, v) in self.a[j].iter().zip(x) {
                q += a * v;
            }
            direct += (-q).exp();
        }
        let residual = (direct - 1.0).abs();
        if !converged && residual > 1e-10 {
            return Err(Error::SurfaceSolve { t, residual });
        }
        Ok(SurfacePoint {
            height,
            weights,
            residual,
        })
    }

    pub fn height(&self, t: f64, x: &[f64]) -> Result<f64> {
        self.solve(t, x).map(|p| p.height)
    }

    /// First and second derivatives of the height from the weights at a solution.
    pub fn derivatives(&self, weights: &[f64]) -> SurfaceDerivatives {
        let m = self.spatial_dim();
        let n = self.len();
        let bsum: f64 = (0..n).map(|j| weights[j] * self.b[j]).sum();
        let dt = -(0..n).map(|j| weights[j] * self.c[j]).sum::<f64>() / bsum;
        let grad: Vec<f64> = (0..m)
            .map(|k| -(0..n).map(|j| weights[j] * self.a[j][k]).sum::<f64>() / bsum)
            .collect();
        let mut hess = vec![0.0; m * m];
        let mut grad_dt = vec![0.0; m];
        let mut dtt = 0.0;
        let mut r = vec![0.0; m];
        for j in 0..n {
            let w = weights[j] / bsum;
            for k in 0..m {
                r[k] = self.a[j][k] + self.b[j] * grad[k];
            }
            let rt = self.c[j] + self.b[j] * dt;
            for k in 0..m {
                for l in 0..m {
                    hess[k * m + l] += w * r[k] * r[l];
                }
                grad_dt[k] += w * rt * r[k];
            }
            dtt += w * rt * rt;
        }
        SurfaceDerivatives {
            dt,
            grad,
            hess,
            grad_dt,
            dtt,
        }
    }

    /// Normal speed of the level surface minus `c_f`, i.e. `phi_t / sqrt(1 + |grad phi|^2) - c_f`
    /// (positive for `Phi`, negative for `Psi`), without cancellation.
    pub fn normal_speed_gap(&self, weights: &[f64]) -> f64 {
        let n = self.len();
        let total: f64 = weights.iter().sum();
        let mut p = 0.0;
        let mut nv = vec![0.0; self.spatial_dim() + 1];
        let mut kq = 0.0;
        for j in 0..n {
            let w = weights[j] / total;
            p += w * self.c[j].abs() / self.speed;
            for (k, a) in self.a[j].iter().enumerate() {
                nv[k] += w * a;
            }
            *nv.last_mut().unwrap() += w * self.b[j];
            for k in 0..n {
                kq += w * weights[k] / total * self.kernel[j * n + k];
            }
        }
        let root_q = nv.iter().map(|v| v * v).sum::<f64>().sqrt();
        self.speed * kq / (root_q * (root_q + p))
    }

    /// `h = sum_{i != j} w_i w_j` and its derivatives in scaled coordinates.
    pub fn flatness_derivatives(&self, weights: &[f64], d: &SurfaceDerivatives) -> FlatnessDerivatives {
        let m = self.spatial_dim();
        let mut out = FlatnessDerivatives {
            value: flatness(weights),
            dt: 0.0,
            grad: vec![0.0; m],
            laplacian: 0.0,
        };
        let total: f64 = weights.iter().sum();
        for j in 0..self.len() {
            let w = weights[j] / total;
            let w2 = w * w;
            out.dt += 2.0 * w2 * (self.c[j] + self.b[j] * d.dt);
            for k in 0..m {
                let rk = self.a[j][k] + self.b[j] * d.grad[k];
                out.grad[k] += 2.0 * w2 * rk;
                out.laplacian += 2.0 * w2 * (self.b[j] * d.hess[k * m + k] - 2.0 * rk * rk);
            }
        }
        out
    }

    /// Anchor a local frame at scaled `(t, x)`.
    pub fn anchor(&self, t: f64, x: &[f64]) -> Result<Anchor> {
        let p = self.solve(t, x)?;
        let total: f64 = p.weights.iter().sum();
        Ok(Anchor {
            t,
            x: x.to_vec(),
            height: p.height,
            weights: p.weights.iter().map(|w| w / total).collect(),
        })
    }

    /// Height offset `zeta` in physical units and weights at the physical
    /// offset `(dt, dx)` from `anchor`, i.e. the solution of
    /// `sum_j w_j expm1(-alpha v_j) = 0`, `v_j = a_j . dx + c_j dt + b_j zeta`.
    ///
    /// This stays accurate for offsets far below `1/alpha`, where solving in
    /// absolute coordinates would lose every digit.
    pub fn local_offset(&self, anchor: &Anchor, dt: f64, dx: &[f64]) -> (f64, Vec<f64>) {
        let n = self.len();
        let alpha = self.alpha;
        let w0 = &anchor.weights;
        let ell: Vec<f64> = (0..n)
            .map(|j| {
                let mut l = self.c[j] * dt;
                for (a, v) in self.a[j].iter().zip(dx) {
                    l += a * v;
                }
                l
            })
            .collect();
        let wb: f64 = (0..n).map(|j| w0[j] * self.b[j]).sum();
        let mut zeta = -(0..n).map(|j| w0[j] * ell[j]).sum::<f64>() / wb;
        for _ in 0..50 {
            let mut h = 0.0;
            let mut dh = 0.0;
            for j in 0..n {
                let v = ell[j] + self.b[j] * zeta;
                h += w0[j] * (-alpha * v).exp_m1() / alpha;
                dh -= w0[j] * self.b[j] * (-alpha * v).exp();
            }
            let step = h / dh;
            zeta -= step;
            if step.abs() <= 1e-16 * zeta.abs().max(1e-300) || h == 0.0 {
                break;
            }
        }
        let weights = (0..n)
            .map(|j| w0[j] * (-alpha * (ell[j] + self.b[j] * zeta)).exp())
            .collect();
        (zeta, weights)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 {
        Ok(())
    } else {
        Err(Error::Inadmissible(format!("alpha = {alpha} must be positive")))
    }
}

/// `sum_{i != j} w_i w_j` for weights normalised to unit sum, accurate when small.
pub fn flatness(weights: &[f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    let mut h = 0.0;
    for i in 0..weights.len() {
        for j in 0..i {
            h += weights[i] * weights[j];
        }
    }
    2.0 * h / (total * total)
}
