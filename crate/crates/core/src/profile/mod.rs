//! Traveling-wave profile `g'' + c g' + f(g) = 0`, `g(-inf) = 1`, `g(+inf) = 0`,
//! normalised so that `g(0) = 1/2`.

mod dopri;

use crate::error::{check_finite, Error, Result};
use crate::reaction::{hermite_basis, ReactionSpec};
use dopri::{integrate, locate_crossing, State, Stop, Tolerances};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileOptions {
    /// Half-width of the tabulation window.
    pub xi_max: f64,
    pub dxi: f64,
    /// Bisection stops once the speed bracket is narrower than this.
    pub tol_c: f64,
    /// Distance from the rest states at which the shooting and tabulation start.
    pub delta0: f64,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self {
            xi_max: 40.0,
            dxi: 0.01,
            tol_c: 1e-10,
            delta0: 1e-8,
        }
    }
}

/// Constants of the profile that enter the barrier construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileConstants {
    pub sigma: f64,
    /// `g(xi) in [sigma, 1 - sigma]` exactly when `|xi| <= r_sigma` (up to one side).
    pub r_sigma: f64,
    /// `min(-g')` over `[-r_sigma, r_sigma]`.
    pub k_min: f64,
    /// `sup(|g'| + |g' xi| + |g'' xi| + |g'' xi^2|)`.
    pub m_bound: f64,
}

#[derive(Debug, Clone)]
pub struct FrontProfile {
    speed: f64,
    xi_max: f64,
    dxi: f64,
    lambda_plus: f64,
    lambda_minus: f64,
    g: Vec<f64>,
    gp: Vec<f64>,
    gpp: Vec<f64>,
    gppp: Vec<f64>,
    junction_mismatch: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shot {
    Overshoot,
    Undershoot,
}

fn roots(c: f64, df: f64) -> (f64, f64) {
    let d = (c * c - 4.0 * df).sqrt();
    ((-c - d) / 2.0, (-c + d) / 2.0)
}

const SHOOT_SPAN: f64 = 2000.0;

fn shoot(spec: &ReactionSpec, c: f64, delta0: f64) -> Result<Shot> {
    let (_, lm) = roots(c, spec.df1());
    let (lp, _) = roots(c, spec.df0());
    let tol = Tolerances {
        rtol: 1e-12,
        atol: 1e-300,
        max_steps: 2_000_000,
    };
    let mut verdict = None;
    let (_, y, halted) = integrate(
        |y: State| [y[1], -c * y[1] - spec.f(y[0])],
        0.0,
        [1.0 - delta0, -lm * delta0],
        1.0,
        SHOOT_SPAN,
        &tol,
        |_, y| {
            if y[0] < 0.0 {
                verdict = Some(Shot::Overshoot);
                Stop::Halt
            } else if y[1] >= 0.0 {
                verdict = Some(Shot::Undershoot);
                Stop::Halt
            } else if 0.5 * y[1] * y[1] + spec.primitive(y[0]) < 0.0 {
                // The energy g'^2/2 + F(g) only decreases; below F(0) = 0 the
                // orbit can no longer reach g = 0.
                verdict = Some(Shot::Undershoot);
                Stop::Halt
            } else if y[0] < 1e-150 {
                Stop::Halt
            } else {
                Stop::Continue
            }
        },
    )?;
    if let Some(v) = verdict {
        return Ok(v);
    }
    let _ = halted;
    // Still hugging the stable manifold of 0: split along the eigenvectors.
    let b = y[1] - lp * y[0];
    Ok(if b > 0.0 { Shot::Undershoot } else { Shot::Overshoot })
}

fn bisect_speed(spec: &ReactionSpec, opts: &ProfileOptions) -> Result<f64> {
    let mut lo = 0.0;
    let lo_shot = shoot(spec, lo, opts.delta0)?;
    let mut hi = 0.5;
    let mut hi_shot = shoot(spec, hi, opts.delta0)?;
    let mut expansions = 0;
    while hi_shot == lo_shot {
        lo = hi;
        hi *= 2.0;
        expansions += 1;
        if expansions > 40 {
            return Err(Error::BracketFailure(format!(
                "classification never changed up to c = {hi}"
            )));
        }
        hi_shot = shoot(spec, hi, opts.delta0)?;
    }
    while hi - lo >= opts.tol_c {
        let mid = 0.5 * (lo + hi);
        if shoot(spec, mid, opts.delta0)? == lo_shot {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if shoot(spec, lo, opts.delta0)? != lo_shot || shoot(spec, hi, opts.delta0)? != hi_shot {
        return Err(Error::BracketFailure(
            "classification is not monotone in the speed".into(),
        ));
    }
    Ok(0.5 * (lo + hi))
}

/// Solve for the front speed and tabulate the profile on `[-xi_max, xi_max]`.
pub fn solve_profile(spec: &ReactionSpec, opts: &ProfileOptions) -> Result<FrontProfile> {
    for (name, v) in [("xi_max", opts.xi_max), ("dxi", opts.dxi), ("tol_c", opts.tol_c), ("delta0", opts.delta0)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Tabulation(format!("{name} must be positive, got {v}")));
        }
    }
    let c = bisect_speed(spec, opts)?;
    let (lambda_plus, _) = roots(c, spec.df0());
    let (_, lambda_minus) = roots(c, spec.df1());
    let d0 = opts.delta0;
    let tol = Tolerances {
        rtol: 1e-13,
        atol: 1e-300,
        max_steps: 2_000_000,
    };
    let rhs = |y: State| [y[1], -c * y[1] - spec.f(y[0])];
    let half = |y: &State, down: bool| if down { y[0] <= 0.5 } else { y[0] >= 0.5 };

    // Left piece: out of the unstable manifold of 1, forward until g = 1/2.
    let (left, _, ok_l) = integrate(rhs, 0.0, [1.0 - d0, -lambda_minus * d0], 1.0, 1e4, &tol, |_, y| {
        if half(y, true) { Stop::Halt } else { Stop::Continue }
    })?;
    // Right piece: along the stable manifold of 0, backward until g = 1/2.
    let (right, _, ok_r) = integrate(rhs, 0.0, [d0, lambda_plus * d0], -1.0, 1e4, &tol, |_, y| {
        if half(y, false) { Stop::Halt } else { Stop::Continue }
    })?;
    if !(ok_l && ok_r) {
        return Err(Error::Tabulation("profile pieces never reached g = 1/2".into()));
    }
    let xl = locate_crossing(left.steps.last().unwrap(), 0, 0.5);
    let xr = locate_crossing(right.steps.last().unwrap(), 0, 0.5);
    // In normalised coordinates the left piece starts at -xl, the right at -xr > 0.
    let left_start = left.start() - xl;
    let right_start = right.start() - xr;
    let junction_mismatch = (left.eval(xl)[1] - right.eval(xr)[1]).abs();

    let n = (2.0 * opts.xi_max / opts.dxi).round() as usize;
    if ((n as f64) * opts.dxi - 2.0 * opts.xi_max).abs() > 1e-9 * opts.xi_max {
        return Err(Error::Tabulation("2 xi_max must be a multiple of dxi".into()));
    }
    let mut g = Vec::with_capacity(n + 1);
    let mut gp = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let xi = -opts.xi_max + k as f64 * opts.dxi;
        let y = if xi < 0.0 {
            if xi >= left_start {
                left.eval(xi + xl)
            } else {
                let e = d0 * (lambda_minus * (xi - left_start)).exp();
                [1.0 - e, -lambda_minus * e]
            }
        } else if xi <= right_start {
            right.eval(xi + xr)
        } else {
            let e = d0 * (lambda_plus * (xi - right_start)).exp();
            [e, lambda_plus * e]
        };
        g.push(y[0]);
        gp.push(y[1]);
    }
    let gpp: Vec<f64> = g.iter().zip(&gp).map(|(&g, &p)| -c * p - spec.f(g)).collect();
    let gppp: Vec<f64> = (0..=n).map(|k| -c * gpp[k] - spec.df(g[k]) * gp[k]).collect();

    for k in 0..=n {
        if !(gp[k] < 0.0) {
            return Err(Error::ProfileMonotonicity {
                xi: -opts.xi_max + k as f64 * opts.dxi,
                slope: gp[k],
            });
        }
    }
    if g[n] > 1e-10 || 1.0 - g[0] > 1e-10 {
        return Err(Error::Tabulation(format!(
            "xi_max = {} too small: tails are {:e} and {:e}",
            opts.xi_max,
            1.0 - g[0],
            g[n]
        )));
    }
    Ok(FrontProfile {
        speed: c,
        xi_max: opts.xi_max,
        dxi: opts.dxi,
        lambda_plus,
        lambda_minus,
        g,
        gp,
        gpp,
        gppp,
        junction_mismatch,
    })
}

#[derive(Serialize, Deserialize)]
struct BinHeader {
    c_f: f64,
    #[serde(rename = "Xi")]
    xi: f64,
    dxi: f64,
    lambda_plus: f64,
    lambda_minus: f64,
}

impl FrontProfile {
    pub fn speed(&self) -> f64 {
        self.speed
    }
    pub fn xi_max(&self) -> f64 {
        self.xi_max
    }
    pub fn dxi(&self) -> f64 {
        self.dxi
    }
    /// Decay rate towards 0 (negative).
    pub fn lambda_plus(&self) -> f64 {
        self.lambda_plus
    }
    /// Decay rate towards 1 (positive).
    pub fn lambda_minus(&self) -> f64 {
        self.lambda_minus
    }
    pub fn junction_mismatch(&self) -> f64 {
        self.junction_mismatch
    }
    pub fn nodes(&self) -> usize {
        self.g.len()
    }
    pub fn node(&self, k: usize) -> f64 {
        -self.xi_max + k as f64 * self.dxi
    }
    pub fn table(&self) -> (&[f64], &[f64], &[f64]) {
        (&self.g, &self.gp, &self.gpp)
    }

    #[inline]
    fn cell(&self, xi: f64) -> (usize, f64) {
        let n = self.g.len() - 1;
        let pos = (xi + self.xi_max) / self.dxi;
        let k = (pos.floor() as usize).min(n - 1);
        (k, pos - k as f64)
    }

    #[inline]
    fn hermite(&self, v: &[f64], dv: &[f64], xi: f64) -> f64 {
        let (k, s) = self.cell(xi);
        let (h00, h10, h01, h11) = hermite_basis(s);
        h00 * v[k] + self.dxi * (h10 * dv[k] + h11 * dv[k + 1]) + h01 * v[k + 1]
    }

    // Second derivatives of the interpolant stay accurate, which matters when
    // residuals are formed by differencing `g`.
    #[inline]
    fn quintic(&self, v: &[f64], dv: &[f64], ddv: &[f64], xi: f64) -> f64 {
        let (k, s) = self.cell(xi);
        let (s2, s3) = (s * s, s * s * s);
        let (s4, s5) = (s3 * s, s3 * s2);
        let h = self.dxi;
        let p1 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
        let d0 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
        let d1 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
        let dd0 = 0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5);
        let dd1 = 0.5 * (s3 - 2.0 * s4 + s5);
        (1.0 - p1) * v[k]
            + p1 * v[k + 1]
            + h * (d0 * dv[k] + d1 * dv[k + 1])
            + h * h * (dd0 * ddv[k] + dd1 * ddv[k + 1])
    }

    /// `g(xi)`, kept inside the open unit interval.
    #[inline]
    pub fn g(&self, xi: f64) -> f64 {
        let n = self.g.len() - 1;
        let v = if xi >= self.xi_max {
            self.g[n] * (self.lambda_plus * (xi - self.xi_max)).exp()
        } else if xi <= -self.xi_max {
            1.0 - (1.0 - self.g[0]) * (self.lambda_minus * (xi + self.xi_max)).exp()
        } else {
            self.quintic(&self.g, &self.gp, &self.gpp, xi)
        };
        v.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
    }

    #[inline]
    pub fn gp(&self, xi: f64) -> f64 {
        let n = self.g.len() - 1;
        if xi >= self.xi_max {
            self.gp[n] * (self.lambda_plus * (xi - self.xi_max)).exp()
        } else if xi <= -self.xi_max {
            self.gp[0] * (self.lambda_minus * (xi + self.xi_max)).exp()
        } else {
            self.quintic(&self.gp, &self.gpp, &self.gppp, xi)
        }
    }

    #[inline]
    pub fn gpp(&self, xi: f64) -> f64 {
        let n = self.g.len() - 1;
        if xi >= self.xi_max {
            self.gpp[n] * (self.lambda_plus * (xi - self.xi_max)).exp()
        } else if xi <= -self.xi_max {
            self.gpp[0] * (self.lambda_minus * (xi + self.xi_max)).exp()
        } else {
            self.hermite(&self.gpp, &self.gppp, xi)
        }
    }

    pub fn eval_g(&self, xi: f64) -> Result<f64> {
        check_finite("profile", xi).map(|x| self.g(x))
    }

    /// Largest residual of `g'' + c g' + f(g)` on interior nodes, with `g''`
    /// from a fourth-order difference of the tabulated values.
    pub fn ode_residual_max(&self, spec: &ReactionSpec) -> f64 {
        let h2 = self.dxi * self.dxi;
        let g = &self.g;
        (2..g.len() - 2)
            .map(|k| {
                let d2 = (-g[k + 2] + 16.0 * g[k + 1] - 30.0 * g[k] + 16.0 * g[k - 1] - g[k - 2])
                    / (12.0 * h2);
                (d2 + self.speed * self.gp[k] + spec.f(g[k])).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Point where `g` crosses `level` (`g` is strictly decreasing).
    pub fn inverse(&self, level: f64) -> Result<f64> {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::BracketFailure(format!("level {level} outside (0, 1)")));
        }
        let (mut a, mut b) = (-self.xi_max, self.xi_max);
        while self.g(a) < level {
            a *= 2.0;
            if a < -1e6 {
                return Err(Error::BracketFailure(format!("no crossing of {level}")));
            }
        }
        while self.g(b) > level {
            b *= 2.0;
            if b > 1e6 {
                return Err(Error::BracketFailure(format!("no crossing of {level}")));
            }
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m == a || m == b {
                break;
            }
            if self.g(m) > level {
                a = m;
            } else {
                b = m;
            }
        }
        Ok(0.5 * (a + b))
    }

    pub fn constants(&self, sigma: f64) -> Result<ProfileConstants> {
        if !(sigma > 0.0 && sigma < 0.5) {
            return Err(Error::Inadmissible(format!("sigma = {sigma} outside (0, 1/2)")));
        }
        let r_sigma = self.inverse(sigma)?.max(-self.inverse(1.0 - sigma)?);
        let mut k_min = (-self.gp(r_sigma)).min(-self.gp(-r_sigma));
        let mut m_bound: f64 = 0.0;
        for k in 0..self.g.len() {
            let xi = self.node(k);
            let (p, pp) = (self.gp[k], self.gpp[k]);
            if xi.abs() <= r_sigma {
                k_min = k_min.min(-p);
            }
            m_bound = m_bound.max(p.abs() + (p * xi).abs() + (pp * xi).abs() + (pp * xi * xi).abs());
        }
        Ok(ProfileConstants {
            sigma,
            r_sigma,
            k_min,
            m_bound,
        })
    }

    /// Binary table: one JSON header line, then little-endian `(g, g', g'')` triples.
    pub fn write_bin(&self, w: &mut impl Write) -> Result<()> {
        let header = BinHeader {
            c_f: self.speed,
            xi: self.xi_max,
            dxi: self.dxi,
            lambda_plus: self.lambda_plus,
            lambda_minus: self.lambda_minus,
        };
        serde_json::to_writer(&mut *w, &header)?;
        w.write_all(b"\n")?;
        let mut buf = Vec::with_capacity(self.g.len() * 24);
        for k in 0..self.g.len() {
            for v in [self.g[k], self.gp[k], self.gpp[k]] {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_bin(&mut f)?;
        f.flush()?;
        Ok(())
    }

    /// Read a table written by [`FrontProfile::write_bin`]; `spec` restores `g'''`.
    pub fn read_bin(r: &mut impl Read, spec: &ReactionSpec) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let nl = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Format("missing header line".into()))?;
        let h: BinHeader = serde_json::from_slice(&bytes[..nl])?;
        let payload = &bytes[nl + 1..];
        if payload.len() % 24 != 0 {
            return Err(Error::Format(format!("payload of {} bytes is not a whole number of triples", payload.len())));
        }
        let n = payload.len() / 24;
        let expect = (2.0 * h.xi / h.dxi).round() as usize + 1;
        if n != expect {
            return Err(Error::Format(format!("expected {expect} nodes, found {n}")));
        }
        let mut cols = [Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n)];
        for (i, chunk) in payload.chunks_exact(8).enumerate() {
            cols[i % 3].push(f64::from_le_bytes(chunk.try_into().unwrap()));
        }
        let [g, gp, gpp] = cols;
        let gppp = (0..n).map(|k| -h.c_f * gpp[k] - spec.df(g[k]) * gp[k]).collect();
        Ok(Self {
            speed: h.c_f,
            xi_max: h.xi,
            dxi: h.dxi,
            lambda_plus: h.lambda_plus,
            lambda_minus: h.lambda_minus,
            g,
            gp,
            gpp,
            gppp,
            junction_mismatch: f64::NAN,
        })
    }

    pub fn load(path: &Path, spec: &ReactionSpec) -> Result<Self> {
        let mut f = std::fs::File::open(path)?;
        Self::read_bin(&mut f, spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::OnceLock;

    fn quarter() -> &'static FrontProfile {
        static P: OnceLock<FrontProfile> = OnceLock::new();
        P.get_or_init(|| {
            solve_profile(&ReactionSpec::cubic(0.25).unwrap(), &ProfileOptions::default()).unwrap()
        })
    }

    #[test]
    fn eigenvalues_for_quarter_threshold() {
        let p = quarter();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((p.lambda_plus() + r).abs() < 1e-9);
        assert!((p.lambda_minus() - r).abs() < 1e-9);
        assert!(p.junction_mismatch() < 1e-8);
    }

    #[test]
    fn normalised_and_decreasing() {
        let p = quarter();
        assert!((p.g(0.0) - 0.5).abs() < 1e-12);
        let mut prev = p.g(-60.0);
        for k in 1..=12_000 {
            let v = p.g(-60.0 + k as f64 * 0.01);
            assert!(v <= prev);
            prev = v;
        }
        assert!(p.g(1e4) > 0.0 && p.g(-1e4) < 1.0);
    }

    #[test]
    fn derivatives_agree_with_differences() {
        let p = quarter();
        let h = 1e-4;
        for &xi in &[-30.0, -5.3, -0.7, 0.0, 1.234, 12.0, 39.99, 45.0, -45.0] {
            let fd = (p.g(xi + h) - p.g(xi - h)) / (2.0 * h);
            assert!((fd - p.gp(xi)).abs() < 1e-8, "xi={xi}");
            let fd2 = (p.gp(xi + h) - p.gp(xi - h)) / (2.0 * h);
            assert!((fd2 - p.gpp(xi)).abs() < 1e-8, "xi={xi}");
        }
    }

    #[test]
    fn sigma_radius_for_logistic() {
        let c = quarter().constants(0.1).unwrap();
        let want = std::f64::consts::SQRT_2 * 9f64.ln();
        assert!((c.r_sigma - want).abs() < 1e-6, "{}", c.r_sigma);
        assert!(c.k_min > 0.0);
        assert!(quarter().constants(0.6).is_err());
    }

    #[test]
    fn binary_round_trip() {
        let spec = ReactionSpec::cubic(0.25).unwrap();
        let p = quarter();
        let mut buf = Vec::new();
        p.write_bin(&mut buf).unwrap();
        let q = FrontProfile::read_bin(&mut buf.as_slice(), &spec).unwrap();
        assert_eq!(p.speed(), q.speed());
        for &xi in &[-3.3, 0.0, 2.2, 50.0] {
            assert_eq!(p.g(xi), q.g(xi));
            assert!((p.gpp(xi) - q.gpp(xi)).abs() < 1e-15);
        }
        assert!(FrontProfile::read_bin(&mut &buf[..buf.len() - 3], &spec).is_err());
    }
}
