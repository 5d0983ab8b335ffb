//! Bistable reaction terms and the constants derived from them.

use crate::error::{check_finite, Error, Result};
use std::path::Path;

/// Monotone piecewise cubic (Fritsch–Carlson) through tabulated samples,
/// continued linearly outside the sampled interval.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let n = xs.len();
        if n < 3 || ys.len() != n {
            return Err(Error::InvalidReaction(format!(
                "need at least 3 matching samples, got {} abscissae and {} values",
                xs.len(),
                ys.len()
            )));
        }
        if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidReaction("non-finite sample".into()));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidReaction(
                "abscissae must be strictly increasing".into(),
            ));
        }
        let secants: Vec<f64> = (0..n - 1)
            .map(|k| (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]))
            .collect();
        let mut m = vec![0.0; n];
        m[0] = secants[0];
        m[n - 1] = secants[n - 2];
        for k in 1..n - 1 {
            m[k] = if secants[k - 1] * secants[k] <= 0.0 {
                0.0
            } else {
                0.5 * (secants[k - 1] + secants[k])
            };
        }
        for k in 0..n - 1 {
            let d = secants[k];
            if d == 0.0 {
                m[k] = 0.0;
                m[k + 1] = 0.0;
                continue;
            }
            let a = m[k] / d;
            let b = m[k + 1] / d;
            let r = a * a + b * b;
            if r > 9.0 {
                let t = 3.0 / r.sqrt();
                m[k] = t * a * d;
                m[k + 1] = t * b * d;
            }
        }
        Ok(Self { xs, ys, slopes: m })
    }

    fn locate(&self, x: f64) -> usize {
        let n = self.xs.len();
        match self.xs.partition_point(|&v| v <= x) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x < self.xs[0] {
            return self.ys[0] + self.slopes[0] * (x - self.xs[0]);
        }
        if x > self.xs[n - 1] {
            return self.ys[n - 1] + self.slopes[n - 1] * (x - self.xs[n - 1]);
        }
        let k = self.locate(x);
        let h = self.xs[k + 1] - self.xs[k];
        let s = (x - self.xs[k]) / h;
        let (h00, h10, h01, h11) = hermite_basis(s);
        h00 * self.ys[k] + h10 * h * self.slopes[k] + h01 * self.ys[k + 1] + h11 * h * self.slopes[k + 1]
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x < self.xs[0] {
            return self.slopes[0];
        }
        if x > self.xs[n - 1] {
            return self.slopes[n - 1];
        }
        let k = self.locate(x);
        let h = self.xs[k + 1] - self.xs[k];
        let s = (x - self.xs[k]) / h;
        let d00 = 6.0 * s * s - 6.0 * s;
        let d10 = 3.0 * s * s - 4.0 * s + 1.0;
        let d01 = -d00;
        let d11 = 3.0 * s * s - 2.0 * s;
        (d00 * self.ys[k] + d01 * self.ys[k + 1]) / h + d10 * self.slopes[k] + d11 * self.slopes[k + 1]
    }

    /// Exact integral of the interpolant over the sampled interval.
    pub fn integral(&self) -> f64 {
        (0..self.xs.len() - 1)
            .map(|k| {
                let h = self.xs[k + 1] - self.xs[k];
                h * (self.ys[k] + self.ys[k + 1]) / 2.0
                    + h * h * (self.slopes[k] - self.slopes[k + 1]) / 12.0
            })
            .sum()
    }

    /// Integral of the interpolant over `[xs[0], x]` for `x` in the sampled range.
    pub fn primitive(&self, x: f64) -> f64 {
        let x = x.clamp(self.xs[0], *self.xs.last().unwrap());
        let k = self.locate(x);
        let mut acc = 0.0;
        for j in 0..k {
            let h = self.xs[j + 1] - self.xs[j];
            acc += h * (self.ys[j] + self.ys[j + 1]) / 2.0
                + h * h * (self.slopes[j] - self.slopes[j + 1]) / 12.0;
        }
        let h = self.xs[k + 1] - self.xs[k];
        let s = (x - self.xs[k]) / h;
        // Antiderivatives of the Hermite basis from 0 to s.
        let (s2, s3, s4) = (s * s, s * s * s, s * s * s * s);
        let i00 = s4 / 2.0 - s3 + s;
        let i10 = s4 / 4.0 - 2.0 * s3 / 3.0 + s2 / 2.0;
        let i01 = -s4 / 2.0 + s3;
        let i11 = s4 / 4.0 - s3 / 3.0;
        acc + h
            * (i00 * self.ys[k] + i10 * h * self.slopes[k] + i01 * self.ys[k + 1] + i11 * h * self.slopes[k + 1])
    }

    pub fn knots(&self) -> &[f64] {
        &self.xs
    }
}

pub(crate) fn hermite_basis(s: f64) -> (f64, f64, f64, f64) {
    let s2 = s * s;
    let s3 = s2 * s;
    (
        2.0 * s3 - 3.0 * s2 + 1.0,
        s3 - 2.0 * s2 + s,
        -2.0 * s3 + 3.0 * s2,
        s3 - s2,
    )
}

#[derive(Debug, Clone)]
pub enum ReactionKind {
    Cubic,
    Tabulated(MonotoneCubic),
}

/// A bistable nonlinearity `f` with `f(0) = f(1) = f(theta) = 0`,
/// `f'(0), f'(1) < 0` and positive integral over `[0, 1]`.
#[derive(Debug, Clone)]
pub struct ReactionSpec {
    kind: ReactionKind,
    theta: f64,
    df0: f64,
    df1: f64,
    sigma: f64,
    lipschitz: f64,
    mu: f64,
    integral: f64,
}

const SIGMA_SAMPLES: usize = 4000;

impl ReactionSpec {
    /// `f(u) = u (u - theta) (1 - u)`.
    pub fn cubic(theta: f64) -> Result<Self> {
        check_finite("ReactionSpec::cubic", theta)?;
        if !(theta > 0.0 && theta < 0.5) {
            return Err(Error::Unbalanced(format!(
                "cubic threshold must lie in (0, 1/2), got {theta}"
            )));
        }
        let mut spec = Self {
            kind: ReactionKind::Cubic,
            theta,
            df0: -theta,
            df1: theta - 1.0,
            sigma: 0.0,
            lipschitz: 0.0,
            mu: 0.0,
            integral: (1.0 - 2.0 * theta) / 12.0,
        };
        // f' is a downward parabola; |f'| peaks at an endpoint or at the vertex.
        let vertex = (1.0 + theta) / 3.0;
        spec.lipschitz = [0.0, 1.0, vertex]
            .iter()
            .map(|&u| spec.df(u).abs())
            .fold(0.0, f64::max);
        spec.finish()
    }

    /// Tabulated `f` on `u` samples spanning exactly `[0, 1]`.
    pub fn tabulated(u: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        let first = u.first().copied().unwrap_or(f64::NAN);
        let last = u.last().copied().unwrap_or(f64::NAN);
        if first != 0.0 || last != 1.0 {
            return Err(Error::InvalidReaction(format!(
                "samples must span [0, 1], got [{first}, {last}]"
            )));
        }
        let interp = MonotoneCubic::new(u, f)?;
        let (f0, f1) = (interp.value(0.0), interp.value(1.0));
        if f0.abs() > 1e-12 || f1.abs() > 1e-12 {
            return Err(Error::InvalidReaction(format!(
                "f must vanish at 0 and 1, got f(0) = {f0}, f(1) = {f1}"
            )));
        }
        let df0 = interp.derivative(0.0);
        let df1 = interp.derivative(1.0);
        if !(df0 < 0.0 && df1 < 0.0) {
            return Err(Error::InvalidReaction(format!(
                "both states must be stable: f'(0) = {df0}, f'(1) = {df1}"
            )));
        }
        let theta = find_threshold(&interp)?;
        let integral = interp.integral();
        if !(integral > 0.0) {
            return Err(Error::Unbalanced(format!(
                "integral of f over [0, 1] is {integral}, must be positive"
            )));
        }
        let mut lipschitz: f64 = 0.0;
        for k in 0..=20_000 {
            lipschitz = lipschitz.max(interp.derivative(k as f64 / 20_000.0).abs());
        }
        for &x in interp.knots() {
            lipschitz = lipschitz.max(interp.derivative(x).abs());
        }
        let spec = Self {
            kind: ReactionKind::Tabulated(interp),
            theta,
            df0,
            df1,
            sigma: 0.0,
            lipschitz,
            mu: 0.0,
            integral,
        };
        spec.finish()
    }

    /// Two-column CSV (`u,f`); a non-numeric first line is treated as a header.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut us = Vec::new();
        let mut fs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let (a, b) = (cols.next(), cols.next());
            let parsed = match (a, b) {
                (Some(a), Some(b)) => a.parse::<f64>().ok().zip(b.parse::<f64>().ok()),
                _ => None,
            };
            match parsed {
                Some((u, f)) => {
                    us.push(u);
                    fs.push(f);
                }
                None if us.is_empty() && lineno == 0 => continue,
                None => {
                    return Err(Error::InvalidReaction(format!(
                        "{}:{}: expected two numeric columns",
                        path.display(),
                        lineno + 1
                    )))
                }
            }
        }
        Self::tabulated(us, fs)
    }

    fn finish(mut self) -> Result<Self> {
        self.mu = 1.0_f64.min(-self.df0 / 4.0).min(-self.df1 / 4.0);
        self.sigma = self.compute_sigma();
        Ok(self)
    }

    fn sigma_admissible(&self, s: f64) -> bool {
        let (lo, hi) = (self.df0 / 2.0, self.df1 / 2.0);
        (0..=SIGMA_SAMPLES).all(|k| {
            let r = 4.0 * s * k as f64 / SIGMA_SAMPLES as f64;
            self.df(r) <= lo && self.df(1.0 - r) <= hi
        })
    }

    fn compute_sigma(&self) -> f64 {
        let cap = 0.125 * (1.0 - 1e-9);
        if self.sigma_admissible(cap) {
            return cap;
        }
        let (mut lo, mut hi) = (0.0, cap);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.sigma_admissible(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    #[inline]
    pub fn f(&self, u: f64) -> f64 {
        match &self.kind {
            ReactionKind::Cubic => u * (u - self.theta) * (1.0 - u),
            ReactionKind::Tabulated(t) => t.value(u),
        }
    }

    #[inline]
    pub fn df(&self, u: f64) -> f64 {
        match &self.kind {
            ReactionKind::Cubic => -3.0 * u * u + 2.0 * (1.0 + self.theta) * u - self.theta,
            ReactionKind::Tabulated(t) => t.derivative(u),
        }
    }

    /// `F(u) = integral of f over [0, u]`, for `u` in `[0, 1]`.
    pub fn primitive(&self, u: f64) -> f64 {
        match &self.kind {
            ReactionKind::Cubic => {
                let t = self.theta;
                u * u * (-u * u / 4.0 + (1.0 + t) * u / 3.0 - t / 2.0)
            }
            ReactionKind::Tabulated(m) => m.primitive(u),
        }
    }

    /// `f(u)`, rejecting NaN.
    pub fn eval(&self, u: f64) -> Result<f64> {
        check_finite("reaction", u).map(|u| self.f(u))
    }

    pub fn eval_derivative(&self, u: f64) -> Result<f64> {
        check_finite("reaction derivative", u).map(|u| self.df(u))
    }

    pub fn kind(&self) -> &ReactionKind {
        &self.kind
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn df0(&self) -> f64 {
        self.df0
    }
    pub fn df1(&self) -> f64 {
        self.df1
    }
    /// Width of the end layers on which `f'` stays below half its endpoint value.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    /// `max |f'|` on `[0, 1]`.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn integral(&self) -> f64 {
        self.integral
    }
}

fn find_threshold(interp: &MonotoneCubic) -> Result<f64> {
    const N: usize = 20_000;
    let mut sign_changes = Vec::new();
    let mut prev = interp.value(1.0 / N as f64);
    let mut last_nonzero = 1.0 / N as f64;
    for k in 2..N {
        let u = k as f64 / N as f64;
        let v = interp.value(u);
        if (prev < 0.0 && v > 0.0) || (prev > 0.0 && v < 0.0) {
            sign_changes.push((last_nonzero, u, prev < 0.0));
        }
        if v != 0.0 {
            prev = v;
            last_nonzero = u;
        }
    }
    match sign_changes.as_slice() {
        [(a, b, true)] => {
            let (mut lo, mut hi) = (*a, *b);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if interp.value(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(0.5 * (lo + hi))
        }
        _ => Err(Error::InvalidReaction(format!(
            "f must change sign exactly once in (0, 1), from negative to positive; found {} sign changes",
            sign_changes.len()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cubic_constants() {
        let r = ReactionSpec::cubic(0.25).unwrap();
        assert_relative_eq!(r.df0(), -0.25);
        assert_relative_eq!(r.df1(), -0.75);
        assert_relative_eq!(r.lipschitz(), 0.75);
        assert_relative_eq!(r.mu(), 0.0625);
        assert_relative_eq!(r.integral(), 1.0 / 24.0);
        assert!(r.sigma() > 0.0 && r.sigma() < 0.125);
    }

    #[test]
    fn sigma_matches_closed_form_for_cubic() {
        // Near 0, f'(r) <= -theta/2 fails first at the smaller root of
        // -3r^2 + 2(1+theta)r - theta/2 = 0; near 1 the bound is looser.
        let theta: f64 = 0.25;
        let a = 1.0 + theta;
        let r0 = (a - (a * a - 1.5 * theta).sqrt()) / 3.0;
        let r = ReactionSpec::cubic(theta).unwrap();
        assert!((r.sigma() - r0 / 4.0).abs() < 1e-4, "{} vs {}", r.sigma(), r0 / 4.0);
    }

    #[test]
    fn rejects_unbalanced() {
        for th in [0.5, 0.7, 0.0, -0.1] {
            let e = ReactionSpec::cubic(th).unwrap_err();
            assert!(e.to_string().contains("unbalanced condition violated"), "{e}");
        }
        assert!(matches!(ReactionSpec::cubic(f64::NAN), Err(Error::NanInput(_))));
    }

    #[test]
    fn tabulated_reproduces_cubic() {
        let us: Vec<f64> = (0..=200).map(|k| k as f64 / 200.0).collect();
        let fs: Vec<f64> = us.iter().map(|u| u * (u - 0.3) * (1.0 - u)).collect();
        let t = ReactionSpec::tabulated(us, fs).unwrap();
        let c = ReactionSpec::cubic(0.3).unwrap();
        for k in 0..=1000 {
            let u = k as f64 / 1000.0;
            assert!((t.f(u) - c.f(u)).abs() < 2e-5);
        }
        assert!((t.theta() - 0.3).abs() < 1e-4);
        assert!((t.integral() - c.integral()).abs() < 1e-5);
        assert!((t.sigma() - c.sigma()).abs() < 1e-3);
        for k in 0..=20 {
            let u = k as f64 / 20.0;
            assert!((t.primitive(u) - c.primitive(u)).abs() < 1e-6);
        }
        assert_relative_eq!(c.primitive(1.0), c.integral(), epsilon = 1e-15);
    }

    #[test]
    fn tabulated_extrapolates_linearly() {
        let us: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        let fs: Vec<f64> = us.iter().map(|u| u * (u - 0.25) * (1.0 - u)).collect();
        let t = ReactionSpec::tabulated(us, fs).unwrap();
        let s0 = t.df(0.0);
        assert_relative_eq!(t.f(-0.5), -0.5 * s0, epsilon = 1e-14);
        assert_relative_eq!(t.df(1.5), t.df(1.0));
    }

    #[test]
    fn tabulated_rejects_bad_shapes() {
        let us: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        let mono: Vec<f64> = us.iter().map(|u| -u * (1.0 - u)).collect();
        assert!(ReactionSpec::tabulated(us.clone(), mono).is_err());
        let heavy: Vec<f64> = us.iter().map(|u| u * (u - 0.7) * (1.0 - u)).collect();
        let e = ReactionSpec::tabulated(us.clone(), heavy).unwrap_err();
        assert!(e.to_string().contains("unbalanced"), "{e}");
        let short = vec![0.0, 1.0];
        assert!(ReactionSpec::tabulated(short.clone(), short).is_err());
    }

    #[test]
    fn monotone_interpolant_preserves_monotone_data() {
        let xs = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        let ys = vec![0.0, 0.1, 5.0, 5.1, 9.0];
        let m = MonotoneCubic::new(xs, ys).unwrap();
        let mut prev = m.value(0.0);
        for k in 1..=4000 {
            let v = m.value(k as f64 / 1000.0);
            assert!(v >= prev - 1e-14);
            prev = v;
        }
    }
}
