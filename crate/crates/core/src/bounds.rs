//! Explicit sub- and supersolutions built from the profile and the
//! interpolating surfaces, with the parameter formulas that make them valid.

use crate::error::{Error, Result};
use crate::field::SpaceTimeField;
use crate::geometry::FrontArrangement;
use crate::profile::FrontProfile;
use crate::reaction::ReactionSpec;
use crate::surface::{flatness, Anchor, ImplicitSurface, SurfaceDerivatives};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// `max_i g(q_i)`; `time_scale != 1` slows every front down to `c_f * time_scale`.
#[derive(Debug, Clone, Copy)]
pub struct LowerBarrier<'a> {
    arr: &'a FrontArrangement,
    profile: &'a FrontProfile,
    time_scale: f64,
}

impl<'a> LowerBarrier<'a> {
    pub fn new(arr: &'a FrontArrangement, profile: &'a FrontProfile) -> Self {
        Self {
            arr,
            profile,
            time_scale: 1.0,
        }
    }

    /// Same fronts moving at `speed` instead of `c_f`; agrees with [`LowerBarrier::new`] at `t = 0`.
    pub fn with_speed(arr: &'a FrontArrangement, profile: &'a FrontProfile, speed: f64) -> Self {
        Self {
            arr,
            profile,
            time_scale: speed / arr.speed(),
        }
    }

    /// Value and the index of the active front.
    #[inline]
    pub fn eval(&self, t: f64, x: &[f64], y: f64) -> (f64, usize) {
        let (q, i) = self.arr.min_plane_coord(t * self.time_scale, x, y, 1.0);
        (self.profile.g(q), i)
    }
}

impl SpaceTimeField for LowerBarrier<'_> {
    fn value(&self, t: f64, p: &[f64]) -> f64 {
        let m = p.len() - 1;
        self.eval(t, &p[..m], p[m]).0
    }
}

/// Inputs of the admissible-parameter formulas.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BarrierInputs {
    pub n: usize,
    pub sigma: f64,
    pub k: f64,
    pub m_bound: f64,
    pub lipschitz: f64,
    pub df0: f64,
    pub df1: f64,
    pub speed: f64,
    pub c_emp: f64,
}

impl BarrierInputs {
    pub fn new(spec: &ReactionSpec, prof: &FrontProfile, n: usize, c_emp: f64) -> Result<Self> {
        let consts = prof.constants(spec.sigma())?;
        if !(consts.k_min > 0.0) {
            return Err(Error::Inadmissible(format!("k_min = {} must be positive", consts.k_min)));
        }
        Ok(Self {
            n,
            sigma: spec.sigma(),
            k: consts.k_min,
            m_bound: consts.m_bound,
            lipschitz: spec.lipschitz(),
            df0: spec.df0(),
            df1: spec.df1(),
            speed: prof.speed(),
            c_emp,
        })
    }

    pub fn epsilon0(&self) -> f64 {
        let n2 = (self.n * self.n) as f64;
        (self.sigma / n2)
            .min(self.k / (2.0 * self.c_emp * self.lipschitz))
            .min(1.0)
    }

    fn alpha_with_speed_factor(&self, eps: f64, speed_factor: f64) -> f64 {
        let c = self.c_emp;
        let denom = 2.0 * (6.0 * c * self.m_bound + speed_factor * self.speed + c);
        1f64.min(-self.df0 * eps / denom).min(-self.df1 * eps / denom)
    }

    /// Largest admissible `alpha` for the supersolution at this `eps`.
    pub fn alpha_of_eps(&self, eps: f64) -> f64 {
        self.alpha_with_speed_factor(eps, 1.0)
    }

    /// The facet subsolutions carry `2 c_f` in place of `c_f`.
    pub fn alpha_of_eps_sub(&self, eps: f64) -> f64 {
        self.alpha_with_speed_factor(eps, 2.0)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundParams {
    pub epsilon: f64,
    /// Used by the supersolution.
    pub alpha: f64,
    /// Used by the facet subsolutions.
    pub alpha_sub: f64,
    pub epsilon0: f64,
    pub alpha_of_eps: f64,
    pub alpha_of_eps_sub: f64,
    pub c_emp: f64,
    pub omega: f64,
    pub mu: f64,
    pub delta: f64,
    /// Lower bound of `d/dt` of the base barrier on `{delta <= u <= 1 - delta}`.
    pub k_shift: f64,
    pub inputs: BarrierInputs,
}

/// `eps = eps_fraction * eps0`, `alpha = alpha_shrink * alpha(eps)`.
pub fn admissible_params(
    spec: &ReactionSpec,
    prof: &FrontProfile,
    arr: &FrontArrangement,
    c_emp: f64,
    eps_fraction: f64,
    delta: f64,
    alpha_shrink: f64,
) -> Result<BoundParams> {
    if !(c_emp > 0.0 && c_emp.is_finite()) {
        return Err(Error::Inadmissible(format!("C_emp = {c_emp} must be positive")));
    }
    if !(delta > 0.0 && delta <= spec.sigma()) {
        return Err(Error::Inadmissible(format!(
            "delta = {delta} must lie in (0, sigma = {}]",
            spec.sigma()
        )));
    }
    if !(eps_fraction > 0.0 && eps_fraction < 1.0) {
        return Err(Error::Inadmissible(format!("eps_fraction = {eps_fraction} must lie in (0, 1)")));
    }
    if !(alpha_shrink > 0.0 && alpha_shrink <= 1.0) {
        return Err(Error::Inadmissible(format!("alpha_shrink = {alpha_shrink} must lie in (0, 1]")));
    }
    let inputs = BarrierInputs::new(spec, prof, arr.len(), c_emp)?;
    let epsilon0 = inputs.epsilon0();
    let epsilon = eps_fraction * epsilon0;
    let alpha_of_eps = inputs.alpha_of_eps(epsilon);
    let alpha_of_eps_sub = inputs.alpha_of_eps_sub(epsilon);
    let alpha = alpha_shrink * alpha_of_eps;
    let alpha_sub = alpha_shrink * alpha_of_eps_sub;
    let k_delta = prof.constants(delta)?.k_min;
    let k_shift = prof.speed() * k_delta - alpha.max(alpha_sub) * c_emp;
    if !(k_shift > 0.0) {
        return Err(Error::Inadmissible(format!("time derivative bound {k_shift} is not positive")));
    }
    let mu = spec.mu();
    let omega = (mu + spec.lipschitz()) / (mu * k_shift);
    Ok(BoundParams {
        epsilon,
        alpha,
        alpha_sub,
        epsilon0,
        alpha_of_eps,
        alpha_of_eps_sub,
        c_emp,
        omega,
        mu,
        delta,
        k_shift,
        inputs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// `min{g(xi) + eps h, 1}` over the convex surface.
    Upper,
    /// `max{g(xi) - eps h, 0}` over a facet surface.
    Lower,
}

/// The supersolution over `phi` or a facet subsolution over `psi_i`.
#[derive(Debug, Clone)]
pub struct SurfaceBarrier<'a> {
    profile: &'a FrontProfile,
    surface: ImplicitSurface,
    eps: f64,
    side: Side,
}

impl<'a> SurfaceBarrier<'a> {
    /// Rejects parameters outside the admissible range.
    pub fn upper(arr: &FrontArrangement, profile: &'a FrontProfile, p: &BoundParams) -> Result<Self> {
        if !(p.epsilon < p.epsilon0) || !(p.alpha <= p.alpha_of_eps) {
            return Err(Error::Inadmissible(format!(
                "need eps < {} and alpha <= {}, got eps = {}, alpha = {}",
                p.epsilon0, p.alpha_of_eps, p.epsilon, p.alpha
            )));
        }
        Self::upper_unchecked(arr, profile, p.epsilon, p.alpha)
    }

    pub fn facet(arr: &FrontArrangement, profile: &'a FrontProfile, p: &BoundParams, i: usize) -> Result<Self> {
        if !(p.epsilon < p.epsilon0) || !(p.alpha_sub <= p.alpha_of_eps_sub) {
            return Err(Error::Inadmissible(format!(
                "need eps < {} and alpha <= {}, got eps = {}, alpha = {}",
                p.epsilon0, p.alpha_of_eps_sub, p.epsilon, p.alpha_sub
            )));
        }
        Self::facet_unchecked(arr, profile, i, p.epsilon, p.alpha_sub)
    }

    /// No admissibility check; for canaries and cross-checks.
    pub fn upper_unchecked(arr: &FrontArrangement, profile: &'a FrontProfile, eps: f64, alpha: f64) -> Result<Self> {
        Ok(Self {
            profile,
            surface: ImplicitSurface::phi(arr, alpha)?,
            eps,
            side: Side::Upper,
        })
    }

    pub fn facet_unchecked(
        arr: &FrontArrangement,
        profile: &'a FrontProfile,
        i: usize,
        eps: f64,
        alpha: f64,
    ) -> Result<Self> {
        if i >= arr.len() {
            return Err(Error::InvalidArrangement(format!("facet index {i} out of range")));
        }
        let fam = arr.rotation_weights(i);
        Ok(Self {
            profile,
            surface: ImplicitSurface::psi(arr, &fam, alpha)?,
            eps,
            side: Side::Lower,
        })
    }

    pub fn side(&self) -> Side {
        self.side
    }
    pub fn surface(&self) -> &ImplicitSurface {
        &self.surface
    }
    pub fn epsilon(&self) -> f64 {
        self.eps
    }
    pub fn alpha(&self) -> f64 {
        self.surface.alpha()
    }

    fn sign(&self) -> f64 {
        match self.side {
            Side::Upper => 1.0,
            Side::Lower => -1.0,
        }
    }

    #[inline]
    fn clip(&self, raw: f64) -> f64 {
        match self.side {
            Side::Upper => raw.min(1.0),
            Side::Lower => raw.max(0.0),
        }
    }

    fn slope_factor(&self, d: &SurfaceDerivatives) -> f64 {
        (1.0 + d.grad.iter().map(|g| g * g).sum::<f64>()).sqrt()
    }

    /// The literal formula at an absolute point.
    pub fn eval(&self, t: f64, x: &[f64], y: f64) -> Result<f64> {
        let a = self.alpha();
        let xs: Vec<f64> = x.iter().map(|v| a * v).collect();
        let p = self.surface.solve(a * t, &xs)?;
        let d = self.surface.derivatives(&p.weights);
        let xi = (y - p.height / a) / self.slope_factor(&d);
        Ok(self.clip(self.profile.g(xi) + self.sign() * self.eps * flatness(&p.weights)))
    }

    /// Local frame at `(t, x, y)`.
    pub fn local(&self, t: f64, x: &[f64], y: f64) -> Result<LocalBarrier<'_, 'a>> {
        let a = self.alpha();
        let xs: Vec<f64> = x.iter().map(|v| a * v).collect();
        let anchor = self.surface.anchor(a * t, &xs)?;
        let offset = y - anchor.height / a;
        Ok(LocalBarrier {
            barrier: self,
            anchor,
            offset,
        })
    }

    /// Local frame at `(t, x)` and the point whose barrier coordinate is `xi`;
    /// avoids forming `y ~ phi / alpha` when `alpha` is tiny.
    pub fn local_at_xi(&self, t: f64, x: &[f64], xi: f64) -> Result<LocalBarrier<'_, 'a>> {
        let a = self.alpha();
        let xs: Vec<f64> = x.iter().map(|v| a * v).collect();
        let anchor = self.surface.anchor(a * t, &xs)?;
        let d = self.surface.derivatives(&anchor.weights);
        let offset = xi * self.slope_factor(&d);
        Ok(LocalBarrier {
            barrier: self,
            anchor,
            offset,
        })
    }

    /// `d_t u - Delta u - f(u)` of the unclipped barrier from closed-form
    /// surface derivatives; only the third `x`-derivatives of the surface are
    /// differenced. `xi` locates the point as in [`SurfaceBarrier::local_at_xi`].
    pub fn analytic_residual(&self, spec: &ReactionSpec, t: f64, x: &[f64], xi: f64) -> Result<f64> {
        let a = self.alpha();
        let m = x.len();
        let xs: Vec<f64> = x.iter().map(|v| a * v).collect();
        let p = self.surface.solve(a * t, &xs)?;
        let d = self.surface.derivatives(&p.weights);
        let fl = self.surface.flatness_derivatives(&p.weights, &d);
        let w = self.slope_factor(&d);
        let eta = 1e-4;
        // phi_{mkk} by central differences of the closed-form Hessian.
        let mut third = vec![0.0; m * m];
        for k in 0..m {
            let mut xp = xs.clone();
            let mut xm = xs.clone();
            xp[k] += eta;
            xm[k] -= eta;
            let hp = self.surface.derivatives(&self.surface.solve(a * t, &xp)?.weights).hess;
            let hm = self.surface.derivatives(&self.surface.solve(a * t, &xm)?.weights).hess;
            for mm in 0..m {
                third[mm * m + k] = (hp[mm * m + k] - hm[mm * m + k]) / (2.0 * eta);
            }
        }
        let g1 = self.profile.gp(xi);
        let g2 = self.profile.gpp(xi);
        let sgn = self.sign();
        let w_t = a * (0..m).map(|mm| d.grad[mm] * d.grad_dt[mm]).sum::<f64>() / w;
        let xi_t = -d.dt / w - xi * w_t / w;
        let mut grad_sq = 1.0 / (w * w);
        let mut lap_xi = 0.0;
        for k in 0..m {
            let s1: f64 = (0..m).map(|mm| d.grad[mm] * d.hess[mm * m + k]).sum();
            let w_k = a * s1 / w;
            let s2: f64 = (0..m)
                .map(|mm| d.hess[mm * m + k].powi(2) + d.grad[mm] * third[mm * m + k])
                .sum();
            let w_kk = a * a * (s2 / w - s1 * s1 / (w * w * w));
            let xi_k = -d.grad[k] / w - xi * w_k / w;
            let xi_kk = -a * d.hess[k * m + k] / w + 2.0 * d.grad[k] * w_k / (w * w) - xi * w_kk / w
                + 2.0 * xi * w_k * w_k / (w * w);
            grad_sq += xi_k * xi_k;
            lap_xi += xi_kk;
        }
        let u = self.profile.g(xi) + sgn * self.eps * fl.value;
        let u_t = g1 * xi_t + sgn * self.eps * a * fl.dt;
        let lap = g2 * grad_sq + g1 * lap_xi + sgn * self.eps * a * a * fl.laplacian;
        Ok(u_t - lap - spec.f(u))
    }
}

impl SpaceTimeField for SurfaceBarrier<'_> {
    fn value(&self, t: f64, p: &[f64]) -> f64 {
        let m = p.len() - 1;
        self.eval(t, &p[..m], p[m]).unwrap_or(f64::NAN)
    }
}

/// A field that can be evaluated at small offsets from a fixed base point.
pub trait LocalField {
    /// Number of spatial offsets expected in `dx` (that is, `N - 1`).
    fn spatial_dim(&self) -> usize;
    /// Unclipped value at the offset.
    fn raw(&self, dt: f64, dx: &[f64], dy: f64) -> f64;
    /// Whether `raw` lies in the region where the clip is inactive.
    fn unclipped(&self, raw: f64) -> bool;
}

pub struct LocalBarrier<'b, 'a> {
    barrier: &'b SurfaceBarrier<'a>,
    anchor: Anchor,
    /// `y - phi / alpha` at the base point.
    offset: f64,
}

impl LocalBarrier<'_, '_> {
    pub fn value(&self, dt: f64, dx: &[f64], dy: f64) -> f64 {
        self.barrier.clip(self.raw(dt, dx, dy))
    }

    pub fn xi(&self) -> f64 {
        let d = self.barrier.surface.derivatives(&self.anchor.weights);
        self.offset / self.barrier.slope_factor(&d)
    }
}

impl LocalField for LocalBarrier<'_, '_> {
    fn spatial_dim(&self) -> usize {
        self.anchor.x.len()
    }

    fn raw(&self, dt: f64, dx: &[f64], dy: f64) -> f64 {
        let b = self.barrier;
        let (zeta, w) = b.surface.local_offset(&self.anchor, dt, dx);
        let d = b.surface.derivatives(&w);
        let xi = (self.offset + dy - zeta) / b.slope_factor(&d);
        b.profile.g(xi) + b.sign() * b.eps * flatness(&w)
    }

    fn unclipped(&self, raw: f64) -> bool {
        match self.barrier.side {
            Side::Upper => raw < 1.0,
            Side::Lower => raw > 0.0,
        }
    }
}

/// `u^+ = min{u*(t + w d (1 - e^{-mu t})) + d e^{-mu t}, 1}` for an upper base,
/// `u^- = max{u*(t - w d (1 - e^{-mu t})) - d e^{-mu t}, 0}` for a lower one.
#[derive(Debug, Clone, Copy)]
pub struct ShiftCombinator<'b, 'a> {
    base: &'b SurfaceBarrier<'a>,
    omega: f64,
    delta: f64,
    mu: f64,
}

impl<'b, 'a> ShiftCombinator<'b, 'a> {
    pub fn new(base: &'b SurfaceBarrier<'a>, params: &BoundParams) -> Self {
        Self {
            base,
            omega: params.omega,
            delta: params.delta,
            mu: params.mu,
        }
    }

    pub fn with_constants(base: &'b SurfaceBarrier<'a>, omega: f64, delta: f64, mu: f64) -> Self {
        Self { base, omega, delta, mu }
    }

    fn sign(&self) -> f64 {
        self.base.sign()
    }

    pub fn inner_time(&self, t: f64) -> f64 {
        t - self.sign() * self.omega * self.delta * (-self.mu * t).exp_m1()
    }

    pub fn eval(&self, t: f64, x: &[f64], y: f64) -> Result<f64> {
        let inner = self.base.eval(self.inner_time(t), x, y)?;
        Ok(self.base.clip(inner + self.sign() * self.delta * (-self.mu * t).exp()))
    }

    pub fn local_at_xi(&self, t: f64, x: &[f64], xi: f64) -> Result<ShiftedLocal<'_, 'b, 'a>> {
        Ok(ShiftedLocal {
            comb: self,
            inner: self.base.local_at_xi(self.inner_time(t), x, xi)?,
            t,
        })
    }
}

impl SpaceTimeField for ShiftCombinator<'_, '_> {
    fn value(&self, t: f64, p: &[f64]) -> f64 {
        let m = p.len() - 1;
        self.eval(t, &p[..m], p[m]).unwrap_or(f64::NAN)
    }
}

pub struct ShiftedLocal<'c, 'b, 'a> {
    comb: &'c ShiftCombinator<'b, 'a>,
    inner: LocalBarrier<'b, 'a>,
    t: f64,
}

impl LocalField for ShiftedLocal<'_, '_, '_> {
    fn spatial_dim(&self) -> usize {
        self.inner.spatial_dim()
    }

    fn raw(&self, dt: f64, dx: &[f64], dy: f64) -> f64 {
        let c = self.comb;
        let s = c.sign();
        let decay = (-c.mu * self.t).exp();
        let inner_dt = dt - s * c.omega * c.delta * decay * (-c.mu * dt).exp_m1();
        self.inner.raw(inner_dt, dx, dy) + s * c.delta * decay * (-c.mu * dt).exp()
    }

    fn unclipped(&self, raw: f64) -> bool {
        self.inner.unclipped(raw)
    }
}

/// Outcome of a finite-difference residual probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Probe {
    Residual { n: f64, u: f64 },
    /// Some stencil point touches the clip set.
    Clipped,
}

/// `d_t u - Delta u - f(u)` at the base point by central differences with
/// steps `h` and `h/2`, combined by Richardson extrapolation.
pub fn fd_residual<F: LocalField>(field: &F, spec: &ReactionSpec, h: f64) -> Probe {
    let m = field.spatial_dim();
    let zero = vec![0.0; m];
    let u0 = field.raw(0.0, &zero, 0.0);
    if !field.unclipped(u0) {
        return Probe::Clipped;
    }
    let mut clipped = false;
    let mut eval = |dt: f64, dx: &[f64], dy: f64| {
        let v = field.raw(dt, dx, dy);
        if !field.unclipped(v) {
            clipped = true;
        }
        v
    };
    let mut time = [0.0; 2];
    let mut lap = [0.0; 2];
    for (s, hs) in [h, h / 2.0].into_iter().enumerate() {
        time[s] = (eval(hs, &zero, 0.0) - eval(-hs, &zero, 0.0)) / (2.0 * hs);
        let mut l = (eval(0.0, &zero, hs) - 2.0 * u0 + eval(0.0, &zero, -hs)) / (hs * hs);
        let mut dx = zero.clone();
        for k in 0..m {
            dx[k] = hs;
            let up = eval(0.0, &dx, 0.0);
            dx[k] = -hs;
            let dn = eval(0.0, &dx, 0.0);
            dx[k] = 0.0;
            l += (up - 2.0 * u0 + dn) / (hs * hs);
        }
        lap[s] = l;
    }
    if clipped {
        return Probe::Clipped;
    }
    let ut = (4.0 * time[1] - time[0]) / 3.0;
    let du = (4.0 * lap[1] - lap[0]) / 3.0;
    Probe::Residual {
        n: ut - du - spec.f(u0),
        u: u0,
    }
}

/// Largest observed ratios behind the surface constant, per quantity.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CalibrationRatios {
    /// `(normal speed gap) / h` and its reciprocal.
    pub gap_over_h: f64,
    pub h_over_gap: f64,
    pub grad_dt_over_h: f64,
    pub hess_over_h: f64,
    pub third_over_h: f64,
    pub h_dt_over_h: f64,
    pub h_lap_over_h: f64,
    pub samples: usize,
    pub skipped: usize,
}

impl CalibrationRatios {
    pub fn max(&self) -> f64 {
        [
            self.gap_over_h,
            self.h_over_gap,
            self.grad_dt_over_h,
            self.hess_over_h,
            self.third_over_h,
            self.h_dt_over_h,
            self.h_lap_over_h,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    /// The frozen constant: twice the largest observed ratio.
    pub fn c_emp(&self) -> f64 {
        2.0 * self.max()
    }

    fn merge(&mut self, o: &CalibrationRatios) {
        self.gap_over_h = self.gap_over_h.max(o.gap_over_h);
        self.h_over_gap = self.h_over_gap.max(o.h_over_gap);
        self.grad_dt_over_h = self.grad_dt_over_h.max(o.grad_dt_over_h);
        self.hess_over_h = self.hess_over_h.max(o.hess_over_h);
        self.third_over_h = self.third_over_h.max(o.third_over_h);
        self.h_dt_over_h = self.h_dt_over_h.max(o.h_dt_over_h);
        self.h_lap_over_h = self.h_lap_over_h.max(o.h_lap_over_h);
        self.samples += o.samples;
        self.skipped += o.skipped;
    }
}

fn calibrate_surface(surf: &ImplicitSurface, samples: usize, half_width: f64, rng: &mut ChaCha8Rng) -> Result<CalibrationRatios> {
    let m = surf.spatial_dim();
    let mut r = CalibrationRatios::default();
    let eta = 1e-4;
    for _ in 0..samples {
        let t = rng.random_range(-half_width..half_width);
        let x: Vec<f64> = (0..m).map(|_| rng.random_range(-half_width..half_width)).collect();
        let p = surf.solve(t, &x)?;
        let h = flatness(&p.weights);
        if !(h > 1e-200) {
            r.skipped += 1;
            continue;
        }
        let d = surf.derivatives(&p.weights);
        let fl = surf.flatness_derivatives(&p.weights, &d);
        let gap = surf.normal_speed_gap(&p.weights).abs();
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let mut third: f64 = 0.0;
        for k in 0..m {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += eta;
            xm[k] -= eta;
            let hp = surf.derivatives(&surf.solve(t, &xp)?.weights).hess;
            let hm = surf.derivatives(&surf.solve(t, &xm)?.weights).hess;
            let diff: Vec<f64> = hp.iter().zip(&hm).map(|(a, b)| (a - b) / (2.0 * eta)).collect();
            third += norm(&diff).powi(2);
        }
        let one = CalibrationRatios {
            gap_over_h: gap / h,
            h_over_gap: h / gap,
            grad_dt_over_h: norm(&d.grad_dt) / h,
            hess_over_h: norm(&d.hess) / h,
            third_over_h: third.sqrt() / h,
            h_dt_over_h: fl.dt.abs() / h,
            h_lap_over_h: fl.laplacian.abs() / h,
            samples: 1,
            skipped: 0,
        };
        r.merge(&one);
    }
    Ok(r)
}

/// Sample the ratios bounded by the surface constant over the convex surface
/// and every facet surface, in scaled coordinates within `half_width` of the origin.
pub fn calibrate_constant(
    arr: &FrontArrangement,
    alpha: f64,
    samples: usize,
    half_width: f64,
    seed: u64,
) -> Result<CalibrationRatios> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = CalibrationRatios::default();
    if arr.len() < 2 {
        return Ok(out);
    }
    let phi = ImplicitSurface::phi(arr, alpha)?;
    out.merge(&calibrate_surface(&phi, samples, half_width, &mut rng)?);
    for i in 0..arr.len() {
        let psi = ImplicitSurface::psi(arr, &arr.rotation_weights(i), alpha)?;
        out.merge(&calibrate_surface(&psi, samples, half_width, &mut rng)?);
    }
    Ok(out)
}
