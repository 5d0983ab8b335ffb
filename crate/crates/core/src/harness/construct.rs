use super::{Check, Context};
use crate::bounds::LowerBarrier;
use crate::error::{Error, Result};
use crate::geometry::FrontArrangement;
use crate::pde::{discrete_subsolution_speed, solve_cauchy, Grid, GridField, NullSink, SolveStats, Solver};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// One Cauchy problem started at `start` from the discrete subsolution.
pub struct Leg {
    pub start: f64,
    /// The field `probe` time units before `t = 0`.
    pub before: GridField,
    pub at_zero: GridField,
    pub stats: SolveStats,
}

pub struct Construction {
    pub grid: Grid,
    /// Speed of the discrete subsolution used for initial and boundary data.
    pub sub_speed: f64,
    pub probe: f64,
    /// Ordered by increasing length.
    pub legs: Vec<Leg>,
}

impl Construction {
    /// The longest leg at `t = 0`.
    pub fn approx(&self) -> &GridField {
        &self.legs.last().expect("at least one leg").at_zero
    }
}

fn sub_speed(ctx: &Context, arr: &FrontArrangement, grid: &Grid) -> Result<f64> {
    let dirs: Vec<&[f64]> = (0..arr.len()).map(|i| arr.direction(i)).collect();
    let g = &ctx.config.grid;
    discrete_subsolution_speed(&ctx.spec, &ctx.profile, &dirs, grid.spacing(), g.dt(), g.speed_margin)
}

fn run_leg(ctx: &Context, arr: &FrontArrangement, grid: &Grid, speed: f64, start: f64, probe: f64) -> Result<Leg> {
    let w = LowerBarrier::with_speed(arr, &ctx.profile, speed);
    let cfg = ctx.config.grid.solver();
    let (before, mut stats) = solve_cauchy(&ctx.spec, grid.clone(), &w, start, -probe, &cfg, &w, &mut NullSink)?;
    let mut at_zero = before.clone();
    let mut solver = Solver::new(&ctx.spec, cfg);
    solver.advance(&mut at_zero, 0.0, &w, &mut NullSink)?;
    stats.steps += solver.stats().steps;
    stats.clamp_violations += solver.stats().clamp_violations;
    Ok(Leg {
        start,
        before,
        at_zero,
        stats,
    })
}

/// Solve from the subsolution at each start time up to `t = 0`.
pub fn construct_entire(ctx: &Context) -> Result<Construction> {
    let starts = &ctx.config.experiment.start_times;
    if starts.is_empty() || starts.iter().any(|&s| !(s < 0.0)) || starts.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config {
            path: "experiment.start_times".into(),
            message: format!("need negative, decreasing start times, got {starts:?}"),
        });
    }
    let grid = ctx.config.grid.build()?;
    if grid.ndim() != ctx.arr.dim() {
        return Err(Error::Config {
            path: "grid.nodes".into(),
            message: format!("{} axes for a {}-dimensional arrangement", grid.ndim(), ctx.arr.dim()),
        });
    }
    let speed = sub_speed(ctx, &ctx.arr, &grid)?;
    let probe = ctx.config.experiment.dt_probe;
    let legs = starts
        .par_iter()
        .map(|&s| run_leg(ctx, &ctx.arr, &grid, speed, s, probe))
        .collect::<Result<Vec<_>>>()?;
    Ok(Construction {
        grid,
        sub_speed: speed,
        probe,
        legs,
    })
}

fn interior(grid: &Grid) -> impl Iterator<Item = usize> + '_ {
    (0..grid.len()).filter(move |&i| !grid.is_boundary(i))
}

fn point(grid: &Grid, i: usize) -> Vec<f64> {
    let mut p = vec![0.0; grid.ndim()];
    grid.point_of(i, &mut p);
    p
}

/// Ordering, sandwich, monotonicity in the start time and convergence of the legs.
pub fn construction_checks(ctx: &Context, con: &Construction) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let grid = &con.grid;
    let lower = ctx.lower();
    let upper = ctx.upper()?;
    let m = grid.ndim() - 1;
    let t_min = con.legs.last().unwrap().start;

    if ctx.arr.len() >= 2 {
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.config.seed ^ 0x81);
        let n = ctx.config.experiment.residual_samples;
        let mut gap = f64::INFINITY;
        for _ in 0..n {
            let t = rng.random_range(t_min..0.0);
            let p: Vec<f64> = (0..=m)
                .map(|k| grid.origin()[k] + rng.random_range(0.0..1.0) * (grid.dims()[k] - 1) as f64 * grid.spacing())
                .collect();
            gap = gap.min(upper.eval(t, &p[..m], p[m])? - lower.eval(t, &p[..m], p[m]).0);
        }
        out.push(Check::gt("lower_below_upper", "lower barrier lies strictly below the upper barrier", gap, 0.0).samples(n));
    }

    // Boundary budget.
    let mut beta: f64 = 0.0;
    let boundary: Vec<usize> = (0..grid.len()).filter(|&i| grid.is_boundary(i)).collect();
    for t in std::iter::once(0.0).chain(con.legs.iter().map(|l| l.start)) {
        for &i in &boundary {
            let p = point(grid, i);
            beta = beta.max(upper.eval(t, &p[..m], p[m])? - lower.eval(t, &p[..m], p[m]).0);
        }
    }

    let low0 = GridField::sample(grid.clone(), 0.0, &lower);
    let up0 = GridField::sample(grid.clone(), 0.0, &upper);
    let (mut below, mut above) = (f64::INFINITY, f64::NEG_INFINITY);
    for leg in &con.legs {
        for i in 0..grid.len() {
            let u = leg.at_zero.values[i];
            below = below.min(u - low0.values[i]);
            above = above.max(u - up0.values[i]);
        }
    }
    out.push(
        Check::ge("sandwich_lower", "u_n(0) lies above the lower barrier", below, -1e-12)
            .samples(grid.len() * con.legs.len()),
    );
    out.push(
        Check::le("sandwich_upper", "u_n(0) lies below the upper barrier plus the boundary budget", above, beta)
            .with([beta])
            .samples(grid.len() * con.legs.len()),
    );

    let mut mono = f64::INFINITY;
    let mut diffs = Vec::new();
    for w in con.legs.windows(2) {
        let (a, b) = (&w[0].at_zero, &w[1].at_zero);
        mono = mono.min(a.values.iter().zip(&b.values).map(|(x, y)| y - x).fold(f64::INFINITY, f64::min));
        diffs.push(a.max_abs_diff(b)?);
    }
    if con.legs.len() >= 2 {
        out.push(
            Check::ge("monotone_in_start_time", "u_n(0) is nondecreasing in n", mono, -1e-9).samples(grid.len()),
        );
    }
    if diffs.len() >= 2 {
        let worst = diffs.windows(2).map(|d| d[0] / d[1]).fold(f64::INFINITY, f64::min);
        out.push(
            Check::ge("cauchy_differences_halve", "successive legs converge", worst, 2.0)
                .with(diffs.iter().copied())
                .note("ratio of consecutive sup differences between legs; the differences follow"),
        );
    }
    let clamps: usize = con.legs.iter().map(|l| l.stats.clamp_violations).sum();
    out.push(Check::le("range_guard_clamps", "discrete solutions stay in [0, 1]", clamps as f64, 0.0));
    Ok(out)
}

/// Largest deviation of a planar run from the exact front, on the same grid and
/// leg length; the discretisation floor for the other comparisons.
pub fn planar_floor(ctx: &Context, con: &Construction) -> Result<f64> {
    let single = FrontArrangement::new(ctx.arr.dim(), vec![ctx.arr.fronts()[0].clone()], ctx.arr.speed())?;
    let leg = run_leg(ctx, &single, &con.grid, con.sub_speed, con.legs.last().unwrap().start, con.probe)?;
    let exact = GridField::sample(con.grid.clone(), 0.0, &LowerBarrier::new(&single, &ctx.profile));
    Ok(interior(&con.grid)
        .map(|i| (leg.at_zero.values[i] - exact.values[i]).abs())
        .fold(0.0, f64::max))
}

/// `(slope, intercept, r^2)` of a least-squares line.
pub(crate) fn linfit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, my - slope * mx, r2)
}

/// Sup of `|U - lower|` per ridge-distance bucket, with the bucket centres.
fn bucket_sups(ctx: &Context, u: &GridField, buckets: usize) -> Result<(Vec<f64>, Vec<f64>, Vec<usize>)> {
    let grid = &u.grid;
    let m = grid.ndim() - 1;
    let lower = ctx.lower();
    let nodes: Vec<(f64, f64)> = interior(grid)
        .map(|i| {
            let p = point(grid, i);
            let d = ctx.arr.ridge_distance_proxy(0.0, &p[..m], p[m])?;
            Ok((d, (u.values[i] - lower.eval(0.0, &p[..m], p[m]).0).abs()))
        })
        .collect::<Result<_>>()?;
    let dmax = nodes.iter().map(|n| n.0).fold(0.0, f64::max);
    let width = dmax / buckets as f64;
    let mut sups = vec![0.0f64; buckets];
    let mut counts = vec![0usize; buckets];
    for (d, e) in nodes {
        let k = ((d / width) as usize).min(buckets - 1);
        sups[k] = sups[k].max(e);
        counts[k] += 1;
    }
    let centres = (0..buckets).map(|k| (k as f64 + 0.5) * width).collect();
    Ok((centres, sups, counts))
}

/// Decay of `|U - lower|` away from the ridges.
pub fn asymptotics_checks(ctx: &Context, con: &Construction, floor: f64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let u = con.approx();
    let grid = &con.grid;
    let lower = ctx.lower();
    let m = grid.ndim() - 1;
    if ctx.arr.len() >= 2 {
        let (centres, sups, counts) = bucket_sups(ctx, u, ctx.config.experiment.buckets)?;
        let rise = sups[1..].windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        out.push(
            Check::le("bucket_sups_nonincreasing", "U approaches the lower barrier away from ridges", rise, floor)
                .with(sups.iter().copied())
                .samples(counts.iter().sum())
                .note("largest rise between consecutive buckets beyond the first; bucket sups follow"),
        );
        let n = ctx.arr.len() as f64;
        let upper = ctx.upper()?;
        let mut beta: f64 = 0.0;
        for i in (0..grid.len()).filter(|&i| grid.is_boundary(i)) {
            let p = point(grid, i);
            beta = beta.max(upper.eval(0.0, &p[..m], p[m])? - lower.eval(0.0, &p[..m], p[m]).0);
        }
        let bound = (n * n + 1.0) * ctx.params.epsilon + beta;
        out.push(
            Check::le("far_bucket_bound", "far from ridges U is within (n^2+1) eps of the lower barrier", *sups.last().unwrap(), bound)
                .with([beta]),
        );
        let (xs, ys): (Vec<f64>, Vec<f64>) = centres
            .iter()
            .zip(&sups)
            .filter(|(_, &s)| s > 2.0 * floor)
            .map(|(&c, &s)| (c, s.ln()))
            .unzip();
        if xs.len() >= 3 {
            let (slope, _, r2) = linfit(&xs, &ys);
            out.push(Check::lt("log_sup_slope", "exponential approach away from ridges", slope, 0.0).with([r2]).samples(xs.len()));
            out.push(Check::ge("log_sup_r2", "exponential approach away from ridges", r2, 0.95).with([slope]).samples(xs.len()));
        } else {
            out.push(Check::ge("log_sup_buckets", "enough buckets above the floor to fit a rate", xs.len() as f64, 3.0));
        }
    }
    // Strict ordering where the comparison is not lost to rounding.
    let (mut gap, mut top) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut count = 0;
    for i in interior(grid) {
        let p = point(grid, i);
        let l = lower.eval(0.0, &p[..m], p[m]).0;
        if (1e-12..=1.0 - 1e-12).contains(&l) {
            gap = gap.min(u.values[i] - l);
            top = top.max(u.values[i]);
            count += 1;
        }
    }
    out.push(Check::gt("strictly_above_lower", "U lies strictly above the max of fronts", gap, 0.0).samples(count));
    out.push(Check::lt("strictly_below_one", "U lies strictly below 1", top, 1.0).samples(count));
    Ok(out)
}

/// Signed distance surrogate to the polytope boundary: `|min_i q_i|`, which
/// over-covers the true `rho`-neighbourhood.
fn boundary_distance(arr: &FrontArrangement, t: f64, p: &[f64]) -> f64 {
    let m = p.len() - 1;
    arr.min_plane_coord(t, &p[..m], p[m], 1.0).0.abs()
}

/// Time derivative of `U` near the front, and the translation inequality.
pub fn monotonicity_checks(ctx: &Context, con: &Construction) -> Result<Vec<Check>> {
    let leg = con.legs.last().unwrap();
    let grid = &con.grid;
    let rho = ctx.config.experiment.rho;
    let (mut k_rho, mut k_all) = (f64::INFINITY, f64::INFINITY);
    let mut count = 0;
    for i in interior(grid) {
        let d = (leg.at_zero.values[i] - leg.before.values[i]) / con.probe;
        k_all = k_all.min(d);
        if boundary_distance(&ctx.arr, 0.0, &point(grid, i)) <= rho {
            k_rho = k_rho.min(d);
            count += 1;
        }
    }
    let mut out = vec![
        Check::gt("dt_positive_near_front", "U is increasing in time near the front", k_rho, 0.0)
            .with([rho])
            .samples(count)
            .note("measured k(rho), then rho"),
        Check::ge("dt_nonnegative", "U is nondecreasing in time", k_all, -1e-12),
    ];
    // U(t - t0, x - x0) >= U(t, x) for a shift along y that dominates c_f t0.
    let ny = grid.row_len();
    let shift = (ctx.arr.speed() * con.probe / ctx.arr.min_sin() / grid.spacing()).ceil() as usize;
    let mut worst = f64::INFINITY;
    for i in interior(grid) {
        let j = i % ny;
        if j > shift && j + 1 < ny {
            worst = worst.min(leg.before.values[i - shift] - leg.at_zero.values[i]);
        }
    }
    out.push(
        Check::ge("translation_inequality", "U(t - t0, x - x0) >= U(t, x) when x0.e_i >= c_f t0", worst, -TRANSLATION_TOL)
            .with([shift as f64 * grid.spacing(), con.probe]),
    );
    Ok(out)
}

/// Lowest crossing of the level `1/2` along each `y` line, as `(x, y)`.
fn level_crossings(u: &GridField) -> Vec<(f64, f64)> {
    let grid = &u.grid;
    let ny = grid.row_len();
    let dx = grid.spacing();
    let mut out = Vec::new();
    for (r, col) in u.values.chunks(ny).enumerate() {
        let x = grid.origin()[0] + r as f64 * dx;
        if let Some(j) = (0..ny - 1).find(|&j| col[j] >= 0.5 && col[j + 1] < 0.5) {
            let y = grid.origin()[1] + (j as f64 + (col[j] - 0.5) / (col[j] - col[j + 1])) * dx;
            out.push((x, y));
        }
    }
    out
}

/// Branch slopes of the level set against `cot(theta)` and the planar far field.
pub fn vfront_checks(ctx: &Context, con: &Construction) -> Result<Vec<Check>> {
    if ctx.arr.dim() != 2 || ctx.arr.len() != 2 {
        return Err(Error::Experiment("the V-front regression needs two fronts in two dimensions".into()));
    }
    let u = con.approx();
    let grid = &con.grid;
    let cot = 1.0 / ctx.arr.fronts()[0].theta.tan();
    let (x_lo, x_hi) = (grid.origin()[0], grid.origin()[0] + (grid.dims()[0] - 1) as f64 * grid.spacing());
    let (y_lo, y_hi) = (grid.origin()[1], grid.origin()[1] + (grid.row_len() - 1) as f64 * grid.spacing());
    let margin = 2.0;
    // The apex rounding bends the level set out to |x| of about 8.
    let far = 10.0;
    let pts: Vec<(f64, f64)> = level_crossings(u)
        .into_iter()
        .filter(|&(x, y)| x > x_lo + margin && x < x_hi - margin && y > y_lo + margin && y < y_hi - margin)
        .collect();
    let branch = |sign: f64| -> Vec<(f64, f64)> { pts.iter().copied().filter(|&(x, _)| sign * x >= far).collect() };
    let (right, left) = (branch(1.0), branch(-1.0));
    if right.len() < 5 || left.len() < 5 {
        return Err(Error::Experiment("level set leaves the box; enlarge the grid".into()));
    }
    let fit = |b: &[(f64, f64)]| {
        let (x, y): (Vec<f64>, Vec<f64>) = b.iter().copied().unzip();
        linfit(&x, &y).0
    };
    let (sr, sl) = (fit(&right), fit(&left));
    let mut out = vec![
        Check::le("branch_slope_right", "asymptotic slope of the V-front is cot(theta)", (sr - cot).abs() / cot, 0.02)
            .with([sr, cot])
            .samples(right.len()),
        Check::le("branch_slope_left", "asymptotic slope of the V-front is cot(theta)", (-sl - cot).abs() / cot, 0.02)
            .with([sl, cot])
            .samples(left.len()),
        Check::le("branch_symmetry", "the two branches mirror each other", (sr + sl).abs() / cot, 0.02).with([sr, sl]),
    ];
    // Distance from the planar fronts along the branches, away from the apex.
    let lower = ctx.lower();
    let mut sup: f64 = 0.0;
    let mut count = 0;
    for i in interior(grid) {
        let p = point(grid, i);
        if p[0].abs() >= FAR_FIELD && ctx.arr.ridge_distance_proxy(0.0, &p[..1], p[1])? >= FAR_FIELD {
            sup = sup.max((u.values[i] - lower.eval(0.0, &p[..1], p[1]).0).abs());
            count += 1;
        }
    }
    out.push(
        Check::le("planar_far_field", "away from the apex U matches the planar fronts", sup, VFRONT_FAR_TOL).samples(count),
    );
    Ok(out)
}

/// The discrete front speed differs from c_f at O(dx^2), which shows up here.
const TRANSLATION_TOL: f64 = 1e-6;

/// Far-field deviation allowed in the V-front regression.
const VFRONT_FAR_TOL: f64 = 5e-3;
/// Distance from the apex where the far-field comparison starts.
const FAR_FIELD: f64 = 12.0;

/// Lower bound by the max of fronts and approach away from the ridges.
pub fn pyramid_checks(ctx: &Context, con: &Construction) -> Result<Vec<Check>> {
    let u = con.approx();
    let grid = &con.grid;
    let lower = ctx.lower();
    let m = grid.ndim() - 1;
    let (mut strict, mut weak) = (f64::INFINITY, f64::INFINITY);
    let mut count = 0;
    for i in interior(grid) {
        let p = point(grid, i);
        let l = lower.eval(0.0, &p[..m], p[m]).0;
        let d = u.values[i] - l;
        weak = weak.min(d);
        if (1e-12..=1.0 - 1e-12).contains(&l) {
            strict = strict.min(d);
            count += 1;
        }
    }
    let mut out = vec![
        Check::gt("above_max_of_fronts", "U lies strictly above the max of fronts", strict, 0.0).samples(count),
        Check::ge("above_max_of_fronts_everywhere", "U lies above the max of fronts", weak, -1e-12),
    ];
    if ctx.arr.len() >= 2 {
        let (_, sups, _) = bucket_sups(ctx, u, ctx.config.experiment.buckets)?;
        let peak = sups.iter().copied().fold(0.0, f64::max);
        out.push(
            Check::lt("far_field_approach", "U approaches the max of fronts away from ridges", sups.last().unwrap() / peak, 0.1)
                .with(sups.iter().copied())
                .note("far-bucket sup over the largest bucket sup; bucket sups follow"),
        );
    }
    Ok(out)
}

/// Sensitivity of `U` to one phase shift.
pub fn tau_checks(ctx: &Context) -> Result<Vec<Check>> {
    let e = &ctx.config.experiment;
    let grid = ctx.config.grid.build()?;
    let start = *e.start_times.last().ok_or_else(|| Error::Config {
        path: "experiment.start_times".into(),
        message: "empty".into(),
    })?;
    let i = e.tau_index;
    if i >= ctx.arr.len() {
        return Err(Error::Config {
            path: "experiment.tau_index".into(),
            message: format!("no front {i}"),
        });
    }
    let speed = sub_speed(ctx, &ctx.arr, &grid)?;
    let base = run_leg(ctx, &ctx.arr, &grid, speed, start, e.dt_probe)?.at_zero;
    let mut diffs = Vec::new();
    let mut rise = f64::NEG_INFINITY;
    for &dtau in &e.dtau {
        let taus: Vec<f64> = ctx
            .arr
            .fronts()
            .iter()
            .enumerate()
            .map(|(k, f)| f.tau + if k == i { dtau } else { 0.0 })
            .collect();
        let shifted = ctx.arr.with_taus(&taus)?;
        let u = run_leg(ctx, &shifted, &grid, speed, start, e.dt_probe)?.at_zero;
        diffs.push(u.max_abs_diff(&base)?);
        rise = rise.max(u.values.iter().zip(&base.values).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max));
    }
    let mut out = vec![Check::le("decreasing_in_tau", "U is decreasing in each tau_i", rise, 1e-12)];
    if diffs.len() >= 2 {
        let ratio = diffs[0] / diffs[1];
        let ks: Vec<f64> = diffs.iter().zip(&e.dtau).map(|(d, t)| d / t).collect();
        out.push(
            Check::within("tau_linear_scaling", "U depends continuously on tau", ratio, 1.6, 2.4)
                .with(ks)
                .note("ratio of sup differences, then K = sup / dtau per step"),
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_fit() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let (s, c, r2) = linfit(&x, &y);
        assert!((s + 0.5).abs() < 1e-14 && (c - 2.0).abs() < 1e-14 && (r2 - 1.0).abs() < 1e-14);
    }
}
