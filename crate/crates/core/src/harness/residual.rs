use super::{Check, Context};
use crate::bounds::{fd_residual, Probe, ShiftCombinator, SurfaceBarrier};
use crate::error::Result;
use crate::geometry::FrontArrangement;
use crate::surface::ImplicitSurface;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Central-difference step for residual probes.
const FD_STEP: f64 = 1e-3;
/// Threshold for sampled residuals.
const TOL_FD: f64 = 1e-5;

/// Analytic surface derivatives, root residuals and convexity of `phi` (at `alpha = 1`).
pub fn surface_identity_checks(arr: &FrontArrangement, samples: usize, half_width: f64, seed: u64) -> Result<Vec<Check>> {
    if arr.len() < 2 {
        return Ok(Vec::new());
    }
    let phi = ImplicitSurface::phi(arr, 1.0)?;
    let m = phi.spatial_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0001);
    let h = 1e-5;
    let (mut root, mut e_dt, mut e_grad, mut e_hess) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut min_eig = f64::INFINITY;
    for _ in 0..samples {
        let t = rng.random_range(-half_width..half_width);
        let x: Vec<f64> = (0..m).map(|_| rng.random_range(-half_width..half_width)).collect();
        let p = phi.solve(t, &x)?;
        root = root.max(p.residual);
        let d = phi.derivatives(&p.weights);
        let fd_t = (phi.height(t + h, &x)? - phi.height(t - h, &x)?) / (2.0 * h);
        e_dt = e_dt.max((fd_t - d.dt).abs());
        for k in 0..m {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += h;
            xm[k] -= h;
            let fd = (phi.height(t, &xp)? - phi.height(t, &xm)?) / (2.0 * h);
            e_grad = e_grad.max((fd - d.grad[k]).abs());
            let gp = phi.derivatives(&phi.solve(t, &xp)?.weights).grad;
            let gm = phi.derivatives(&phi.solve(t, &xm)?.weights).grad;
            for l in 0..m {
                e_hess = e_hess.max(((gp[l] - gm[l]) / (2.0 * h) - d.hess[l * m + k]).abs());
            }
        }
        min_eig = min_eig.min(min_eigenvalue(&d.hess, m));
    }
    Ok(vec![
        Check::le("surface_root_residual", "implicit surface solves sum exp(-q) = 1", root, 1e-12).samples(samples),
        Check::le("surface_dt_vs_fd", "closed-form time derivative of the surface", e_dt, 1e-6).samples(samples),
        Check::le("surface_grad_vs_fd", "closed-form gradient of the surface", e_grad, 1e-6).samples(samples),
        Check::le("surface_hessian_vs_fd", "closed-form Hessian of the surface", e_hess, 1e-6).samples(samples),
        Check::ge("surface_hessian_min_eigenvalue", "the surface is convex", min_eig, -1e-10).samples(samples),
    ])
}

fn min_eigenvalue(h: &[f64], m: usize) -> f64 {
    match m {
        1 => h[0],
        2 => {
            let (a, b, d) = (h[0], 0.5 * (h[1] + h[2]), h[3]);
            0.5 * (a + d) - (0.25 * (a - d) * (a - d) + b * b).sqrt()
        }
        _ => unreachable!("grids have at most two horizontal axes"),
    }
}

/// Extremes of sampled residuals.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ResidualStats {
    pub min: f64,
    pub max: f64,
    pub samples: usize,
    /// Draws discarded because the stencil touched the clip set.
    pub clipped: usize,
}

impl ResidualStats {
    fn new() -> Self {
        Self {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            samples: 0,
            clipped: 0,
        }
    }

    fn add(&mut self, p: Probe) {
        match p {
            Probe::Residual { n, .. } => {
                self.min = self.min.min(n);
                self.max = self.max.max(n);
                self.samples += 1;
            }
            Probe::Clipped => self.clipped += 1,
        }
    }
}

/// Draw until `target` off-clip samples (or ten times as many attempts).
fn sample<F>(target: usize, rng: &mut ChaCha8Rng, mut probe: F) -> Result<ResidualStats>
where
    F: FnMut(&mut ChaCha8Rng) -> Result<Probe>,
{
    let mut st = ResidualStats::new();
    let mut attempts = 0;
    while st.samples < target && attempts < 10 * target {
        attempts += 1;
        st.add(probe(rng)?);
    }
    Ok(st)
}

/// Uniform scaled `(T, X)` in the box of half-width `r`, returned as physical `(t, x)`.
fn scaled_point(rng: &mut ChaCha8Rng, m: usize, r: f64, alpha: f64) -> (f64, Vec<f64>) {
    let t = rng.random_range(-r..r) / alpha;
    let x = (0..m).map(|_| rng.random_range(-r..r) / alpha).collect();
    (t, x)
}

fn barrier_stats(b: &SurfaceBarrier, ctx: &Context, target: usize, seed: u64) -> Result<ResidualStats> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = ctx.arr.dim() - 1;
    let xr = ctx.config.experiment.xi_range;
    let r = ctx.config.surface.calibration_half_width;
    sample(target, &mut rng, |rng| {
        let (t, x) = scaled_point(rng, m, r, b.alpha());
        let xi = rng.random_range(-xr..xr);
        Ok(fd_residual(&b.local_at_xi(t, &x, xi)?, &ctx.spec, FD_STEP))
    })
}

fn shift_stats(c: &ShiftCombinator, b: &SurfaceBarrier, ctx: &Context, target: usize, seed: u64) -> Result<ResidualStats> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = ctx.arr.dim() - 1;
    let xr = ctx.config.experiment.xi_range;
    let r = ctx.config.surface.calibration_half_width;
    let t_max = ctx.config.experiment.shift_time_max;
    sample(target, &mut rng, |rng| {
        let t = rng.random_range(0.0..t_max);
        let (_, x) = scaled_point(rng, m, r, b.alpha());
        let xi = rng.random_range(-xr..xr);
        Ok(fd_residual(&c.local_at_xi(t, &x, xi)?, &ctx.spec, FD_STEP))
    })
}

/// Sampled residuals of the barriers, their shifted versions and two canaries.
pub fn residual_checks(ctx: &Context) -> Result<Vec<Check>> {
    let target = ctx.config.experiment.residual_samples;
    let seed = ctx.config.seed;
    let p = &ctx.params;
    let mut out = Vec::new();
    let upper = ctx.upper()?;

    if ctx.arr.len() < 2 {
        // The barrier is the planar front itself.
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x11);
        let xr = ctx.config.experiment.xi_range;
        let m = ctx.arr.dim() - 1;
        let (mut worst, mut fd) = (0.0f64, 0.0f64);
        for _ in 0..target {
            let t = rng.random_range(-50.0..50.0);
            let x: Vec<f64> = (0..m).map(|_| rng.random_range(-50.0..50.0)).collect();
            let xi = rng.random_range(-xr..xr);
            worst = worst.max(upper.analytic_residual(&ctx.spec, t, &x, xi)?.abs());
            if let Probe::Residual { n, .. } = fd_residual(&upper.local_at_xi(t, &x, xi)?, &ctx.spec, FD_STEP) {
                fd = fd.max(n.abs());
            }
        }
        out.push(
            Check::le("planar_residual_exact", "a single front solves the equation", worst, 1e-9)
                .with([fd])
                .samples(target)
                .note("semi-analytic residual; the finite-difference maximum is the second value"),
        );
        return Ok(out);
    }

    let st = barrier_stats(&upper, ctx, target, seed ^ 0x21)?;
    out.push(
        Check::ge("upper_residual_min", "upper barrier is a supersolution", st.min, -TOL_FD)
            .with([st.max, st.clipped as f64])
            .samples(st.samples),
    );

    let mut sub = ResidualStats::new();
    let per = target.div_ceil(ctx.arr.len());
    for i in 0..ctx.arr.len() {
        let b = SurfaceBarrier::facet(&ctx.arr, &ctx.profile, p, i)?;
        let st = barrier_stats(&b, ctx, per, seed ^ (0x31 + i as u64))?;
        sub.min = sub.min.min(st.min);
        sub.max = sub.max.max(st.max);
        sub.samples += st.samples;
        sub.clipped += st.clipped;
    }
    out.push(
        Check::le("facet_residual_max", "facet barriers are subsolutions", sub.max, TOL_FD)
            .with([sub.min, sub.clipped as f64])
            .samples(sub.samples),
    );

    let shifted = ShiftCombinator::new(&upper, p);
    let st = shift_stats(&shifted, &upper, ctx, target, seed ^ 0x41)?;
    out.push(
        Check::ge("shifted_upper_residual_min", "shifted upper barrier is a supersolution for t >= 0", st.min, -TOL_FD)
            .with([st.max, st.clipped as f64])
            .samples(st.samples),
    );
    let mut sub = ResidualStats::new();
    for i in 0..ctx.arr.len() {
        let b = SurfaceBarrier::facet(&ctx.arr, &ctx.profile, p, i)?;
        let c = ShiftCombinator::new(&b, p);
        let st = shift_stats(&c, &b, ctx, per, seed ^ (0x51 + i as u64))?;
        sub.max = sub.max.max(st.max);
        sub.min = sub.min.min(st.min);
        sub.samples += st.samples;
        sub.clipped += st.clipped;
    }
    out.push(
        Check::le("shifted_facet_residual_max", "shifted facet barriers are subsolutions for t >= 0", sub.max, TOL_FD)
            .with([sub.min, sub.clipped as f64])
            .samples(sub.samples),
    );

    // eps = 2 eps0 with alpha(eps) / 2, as the admissibility bound would give.
    let eps = 2.0 * p.epsilon0;
    let alpha = 0.5 * p.inputs.alpha_of_eps(eps);
    let canary = SurfaceBarrier::upper_unchecked(&ctx.arr, &ctx.profile, eps, alpha)?;
    let st = barrier_stats(&canary, ctx, target, seed ^ 0x61)?;
    out.push(
        Check::lt("canary_double_eps0", "residual check detects inadmissible eps", st.min, -TOL_FD)
            .with([eps, alpha])
            .samples(st.samples),
    );
    let (eps, alpha) = (STRONG_CANARY.0, STRONG_CANARY.1);
    let canary = SurfaceBarrier::upper_unchecked(&ctx.arr, &ctx.profile, eps, alpha)?;
    let st = barrier_stats(&canary, ctx, target, seed ^ 0x71)?;
    out.push(
        Check::lt("canary_large_eps", "residual check detects inadmissible eps", st.min, -TOL_FD)
            .with([eps, alpha])
            .samples(st.samples),
    );
    Ok(out)
}

/// `(eps, alpha)` far outside the admissible set.
const STRONG_CANARY: (f64, f64) = (0.5, 1e-3);
