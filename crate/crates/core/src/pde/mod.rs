//! Finite differences for `u_t = Delta u + f(u)` on a box, with Dirichlet data
//! from an evaluator or homogeneous Neumann conditions.

mod grid;

pub use grid::{Grid, GridField, SCHEMA};

use crate::error::{Error, Result};
use crate::field::SpaceTimeField;
use crate::profile::FrontProfile;
use crate::reaction::ReactionSpec;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Drift allowed outside `[0, 1]` before the guard clamps.
pub const RANGE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    ExplicitEuler,
    /// Crank–Nicolson diffusion, explicit reaction.
    ImexCn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    #[default]
    DirichletFromEvaluator,
    HomogeneousNeumann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Advection {
    #[default]
    Upwind,
    Central,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Upper bound on the step; derived from the stability limits when absent.
    pub dt: Option<f64>,
    pub cfl_fraction: f64,
    pub scheme: Scheme,
    pub boundary: BoundaryKind,
    /// Steps between snapshots; `0` keeps only the final field.
    pub snapshot_every: usize,
    /// The grid translates along `y` at this speed (0 = fixed frame).
    pub frame_speed: f64,
    pub advection: Advection,
    pub cg_tol: f64,
    /// Where to write the last finite field when a step produces NaN.
    pub diagnostic_dir: Option<PathBuf>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: None,
            cfl_fraction: 0.2,
            scheme: Scheme::ExplicitEuler,
            boundary: BoundaryKind::DirichletFromEvaluator,
            snapshot_every: 0,
            frame_speed: 0.0,
            advection: Advection::Upwind,
            cg_tol: 1e-12,
            diagnostic_dir: None,
        }
    }
}

impl SolverConfig {
    /// Largest step allowed on `grid`.
    pub fn dt_limit(&self, grid: &Grid, spec: &ReactionSpec) -> f64 {
        let dx2 = grid.spacing() * grid.spacing();
        let n = grid.ndim() as f64;
        let reaction = 0.5 / spec.lipschitz();
        match self.scheme {
            Scheme::ExplicitEuler => {
                let diffusion = self.cfl_fraction * dx2 / (2.0 * n);
                // Keeps every stencil coefficient nonnegative.
                let monotone = 1.0 / (2.0 * n / dx2 + self.frame_speed.abs() / grid.spacing() + spec.lipschitz());
                diffusion.min(reaction).min(monotone)
            }
            Scheme::ImexCn => {
                if self.frame_speed != 0.0 {
                    reaction.min(self.cfl_fraction * grid.spacing() / self.frame_speed.abs())
                } else {
                    reaction
                }
            }
        }
    }

    /// Uniform step and step count covering `span` exactly.
    pub fn resolve_dt(&self, grid: &Grid, spec: &ReactionSpec, span: f64) -> Result<(f64, usize)> {
        if !(self.cfl_fraction > 0.0 && self.cfl_fraction <= 1.0) {
            return Err(Error::InvalidGrid(format!("cfl_fraction {} outside (0, 1]", self.cfl_fraction)));
        }
        let limit = self.dt_limit(grid, spec);
        let dt_max = match self.dt {
            Some(dt) if !(dt > 0.0) => return Err(Error::InvalidGrid(format!("dt = {dt} must be positive"))),
            Some(dt) if dt > limit * (1.0 + 1e-12) => {
                return Err(Error::InvalidGrid(format!("dt = {dt} exceeds the stability limit {limit:e}")))
            }
            Some(dt) => dt,
            None => limit,
        };
        if span <= 0.0 {
            return Ok((dt_max, 0));
        }
        let steps = (span / dt_max - 1e-9).ceil().max(1.0) as usize;
        Ok((span / steps as f64, steps))
    }
}

/// Receives snapshots during a solve.
pub trait SnapshotSink {
    fn accept(&mut self, field: &GridField) -> Result<()>;
}

pub struct NullSink;

impl SnapshotSink for NullSink {
    fn accept(&mut self, _: &GridField) -> Result<()> {
        Ok(())
    }
}

#[derive(Default)]
pub struct MemorySink(pub Vec<GridField>);

impl SnapshotSink for MemorySink {
    fn accept(&mut self, field: &GridField) -> Result<()> {
        self.0.push(field.clone());
        Ok(())
    }
}

/// One ff-grid-v1 file per snapshot.
pub struct DirSink {
    dir: PathBuf,
    pub files: Vec<PathBuf>,
}

impl DirSink {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }
}

impl SnapshotSink for DirSink {
    fn accept(&mut self, field: &GridField) -> Result<()> {
        let path = self.dir.join(format!("snap_{:05}.ffg", self.files.len()));
        field.save(&path)?;
        self.files.push(path);
        Ok(())
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SolveStats {
    pub steps: usize,
    pub dt: f64,
    /// Nodes clamped back into `[-slack, 1 + slack]`.
    pub clamp_violations: usize,
    pub max_cg_iterations: usize,
}

/// Neighbour offsets of one row; ends are mirrored.
struct RowInfo {
    start: usize,
    boundary: bool,
    offsets: [(usize, usize); 2],
    /// Weight of the row in the mirrored inner product.
    weight: f64,
}

pub struct Solver<'a> {
    spec: &'a ReactionSpec,
    cfg: SolverConfig,
    scratch: Vec<f64>,
    rhs: Vec<f64>,
    cg: [Vec<f64>; 3],
    rows: Vec<RowInfo>,
    rows_dims: Vec<usize>,
    stats: SolveStats,
}

/// Clamp drift outside `[-slack, 1 + slack]`; returns the clamp count and whether NaN was seen.
fn guard(out: &mut [f64]) -> (usize, bool) {
    let mut v = 0usize;
    let mut nan = false;
    for x in out.iter_mut() {
        if x.is_nan() {
            nan = true;
        } else if *x < -RANGE_SLACK || *x > 1.0 + RANGE_SLACK {
            v += 1;
            *x = x.clamp(-RANGE_SLACK, 1.0 + RANGE_SLACK);
        }
    }
    (v, nan)
}

impl<'a> Solver<'a> {
    pub fn new(spec: &'a ReactionSpec, cfg: SolverConfig) -> Self {
        Self {
            spec,
            cfg,
            scratch: Vec::new(),
            rhs: Vec::new(),
            cg: [Vec::new(), Vec::new(), Vec::new()],
            rows: Vec::new(),
            rows_dims: Vec::new(),
            stats: SolveStats::default(),
        }
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }
    pub fn stats(&self) -> &SolveStats {
        &self.stats
    }

    fn rows(grid: &Grid) -> Vec<RowInfo> {
        let dims = grid.dims();
        let strides = grid.strides();
        let m = dims.len() - 1;
        let ny = grid.row_len();
        (0..grid.len() / ny)
            .map(|r| {
                let mut idx = [0usize; 3];
                grid.multi_index(r * ny, &mut idx[..=m]);
                let mut offsets = [(0, 0); 2];
                let mut boundary = false;
                let mut weight = 1.0;
                for k in 0..m {
                    let s = strides[k];
                    let start = r * ny;
                    let lo = if idx[k] == 0 { start + s } else { start - s };
                    let hi = if idx[k] + 1 == dims[k] { start - s } else { start + s };
                    offsets[k] = (lo, hi);
                    if idx[k] == 0 || idx[k] + 1 == dims[k] {
                        boundary = true;
                        weight *= 0.5;
                    }
                }
                RowInfo {
                    start: r * ny,
                    boundary,
                    offsets,
                    weight,
                }
            })
            .collect()
    }

    /// Mirrored Laplacian of one row.
    #[inline]
    fn row_laplacian(src: &[f64], row: &RowInfo, m: usize, inv_dx2: f64, out: &mut [f64]) {
        let ny = out.len();
        let u = &src[row.start..row.start + ny];
        let centre = -2.0 * (m + 1) as f64;
        out[0] = 2.0 * u[1] + centre * u[0];
        out[ny - 1] = 2.0 * u[ny - 2] + centre * u[ny - 1];
        for k in 1..ny - 1 {
            out[k] = u[k - 1] + u[k + 1] + centre * u[k];
        }
        for &(lo, hi) in &row.offsets[..m] {
            let a = &src[lo..lo + ny];
            let b = &src[hi..hi + ny];
            for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
                *o += x + y;
            }
        }
        for v in out.iter_mut() {
            *v *= inv_dx2;
        }
    }

    /// `s u_y` in the co-moving frame.
    #[inline]
    fn advection(&self, u: &[f64], k: usize, dx: f64) -> f64 {
        let s = self.cfg.frame_speed;
        if s == 0.0 {
            return 0.0;
        }
        let ny = u.len();
        let lo = if k == 0 { u[1] } else { u[k - 1] };
        let hi = if k + 1 == ny { u[ny - 2] } else { u[k + 1] };
        match self.cfg.advection {
            Advection::Central => s * (hi - lo) / (2.0 * dx),
            Advection::Upwind if s > 0.0 => s * (hi - u[k]) / dx,
            Advection::Upwind => s * (u[k] - lo) / dx,
        }
    }

    fn dirichlet(&self) -> bool {
        self.cfg.boundary == BoundaryKind::DirichletFromEvaluator
    }

    /// Advance one step of size `dt`; boundary data are taken at the new time.
    pub fn step<B: SpaceTimeField + ?Sized>(&mut self, field: &mut GridField, dt: f64, boundary: &B) -> Result<()> {
        let t_new = field.time + dt;
        let new_grid = field.grid.shifted_y(self.cfg.frame_speed * dt);
        if self.rows_dims.as_slice() != field.grid.dims() {
            self.rows = Self::rows(&field.grid);
            self.rows_dims = field.grid.dims().to_vec();
        }
        let rows = std::mem::take(&mut self.rows);
        let (mut violations, mut nan) = match self.cfg.scheme {
            Scheme::ExplicitEuler => self.explicit(field, &rows, dt),
            Scheme::ImexCn => {
                self.imex(field, &rows, dt, &new_grid, t_new, boundary)?;
                let ny = new_grid.row_len();
                self.scratch
                    .par_chunks_mut(ny)
                    .map(guard)
                    .reduce(|| (0, false), |a, b| (a.0 + b.0, a.1 || b.1))
            }
        };
        if self.dirichlet() {
            let ny = new_grid.row_len();
            let (v, n) = self
                .scratch
                .par_chunks_mut(ny)
                .zip(rows.par_iter())
                .map(|(out, row)| {
                    let mut p = [0.0; 3];
                    let p = &mut p[..new_grid.ndim()];
                    let mut set = |k: usize| {
                        new_grid.point_of(row.start + k, p);
                        out[k] = boundary.value(t_new, p);
                    };
                    if row.boundary {
                        (0..ny).for_each(&mut set);
                        guard(out)
                    } else {
                        set(0);
                        set(ny - 1);
                        let (a, na) = guard(&mut out[..1]);
                        let (b, nb) = guard(&mut out[ny - 1..]);
                        (a + b, na || nb)
                    }
                })
                .reduce(|| (0, false), |a, b| (a.0 + b.0, a.1 || b.1));
            violations += v;
            nan |= n;
        }
        self.rows = rows;
        if nan {
            let snapshot = match &self.cfg.diagnostic_dir {
                Some(dir) => {
                    std::fs::create_dir_all(dir)?;
                    let path = dir.join(format!("blowup_t{:.6}.ffg", field.time));
                    field.save(&path)?;
                    Some(path)
                }
                None => None,
            };
            return Err(Error::BlowUp {
                time: t_new,
                detail: "NaN in the updated field".into(),
                snapshot,
            });
        }
        self.stats.clamp_violations += violations;
        self.stats.steps += 1;
        std::mem::swap(&mut field.values, &mut self.scratch);
        field.time = t_new;
        field.grid = new_grid;
        Ok(())
    }

    fn explicit(&mut self, field: &GridField, rows: &[RowInfo], dt: f64) -> (usize, bool) {
        let src = &field.values;
        let grid = &field.grid;
        let m = grid.ndim() - 1;
        let ny = grid.row_len();
        let dx = grid.spacing();
        let inv_dx2 = 1.0 / (dx * dx);
        let mut out = std::mem::take(&mut self.scratch);
        out.resize(src.len(), 0.0);
        let this = &*self;
        let moving = this.cfg.frame_speed != 0.0;
        let res = out
            .par_chunks_mut(ny)
            .zip(rows.par_iter())
            .map(|(out, row)| {
                Self::row_laplacian(src, row, m, inv_dx2, out);
                let u = &src[row.start..row.start + ny];
                if moving {
                    for k in 0..ny {
                        out[k] = u[k] + dt * (out[k] + this.spec.f(u[k]) + this.advection(u, k, dx));
                    }
                } else {
                    for (o, &v) in out.iter_mut().zip(u) {
                        *o = v + dt * (*o + this.spec.f(v));
                    }
                }
                guard(out)
            })
            .reduce(|| (0, false), |a, b| (a.0 + b.0, a.1 || b.1));
        self.scratch = out;
        res
    }

    /// `(I - dt/2 Delta) v = u + dt/2 Delta u + dt (f(u) + s u_y)` by conjugate gradients
    /// in the inner product that makes the mirrored Laplacian symmetric.
    fn imex<B: SpaceTimeField + ?Sized>(
        &mut self,
        field: &GridField,
        rows: &[RowInfo],
        dt: f64,
        new_grid: &Grid,
        t_new: f64,
        boundary: &B,
    ) -> Result<()> {
        let src = &field.values;
        let grid = &field.grid;
        let m = grid.ndim() - 1;
        let ny = grid.row_len();
        let dx = grid.spacing();
        let inv_dx2 = 1.0 / (dx * dx);
        let len = src.len();
        let dirichlet = self.dirichlet();
        let half = 0.5 * dt;
        // Which nodes are unknowns, and their weights.
        let weight = |row: &RowInfo, k: usize| -> f64 {
            if dirichlet {
                if row.boundary || k == 0 || k + 1 == ny {
                    0.0
                } else {
                    1.0
                }
            } else if k == 0 || k + 1 == ny {
                0.5 * row.weight
            } else {
                row.weight
            }
        };
        let mut rhs = std::mem::take(&mut self.rhs);
        let mut x = std::mem::take(&mut self.scratch);
        rhs.resize(len, 0.0);
        x.resize(len, 0.0);
        {
            let this = &*self;
            rhs.par_chunks_mut(ny)
                .zip(x.par_chunks_mut(ny))
                .zip(rows.par_iter())
                .for_each(|((b, xr), row)| {
                    Self::row_laplacian(src, row, m, inv_dx2, b);
                    let u = &src[row.start..row.start + ny];
                    let mut p = [0.0; 3];
                    let p = &mut p[..new_grid.ndim()];
                    for k in 0..ny {
                        b[k] = u[k] + half * b[k] + dt * (this.spec.f(u[k]) + this.advection(u, k, dx));
                        if weight(row, k) == 0.0 {
                            new_grid.point_of(row.start + k, p);
                            xr[k] = boundary.value(t_new, p);
                        } else {
                            xr[k] = u[k];
                        }
                    }
                });
        }
        let apply = |v: &[f64], out: &mut [f64]| {
            out.par_chunks_mut(ny).zip(rows.par_iter()).for_each(|(o, row)| {
                Self::row_laplacian(v, row, m, inv_dx2, o);
                for k in 0..ny {
                    o[k] = if weight(row, k) == 0.0 {
                        0.0
                    } else {
                        v[row.start + k] - half * o[k]
                    };
                }
            });
        };
        let dot = |a: &[f64], b: &[f64]| -> f64 {
            a.par_chunks(ny)
                .zip(b.par_chunks(ny))
                .zip(rows.par_iter())
                .map(|((a, b), row)| (0..ny).map(|k| weight(row, k) * a[k] * b[k]).sum::<f64>())
                .sum()
        };
        let [mut r, mut p, mut ap] = std::mem::take(&mut self.cg);
        for v in [&mut r, &mut p, &mut ap] {
            v.resize(len, 0.0);
        }
        apply(&x, &mut ap);
        r.par_chunks_mut(ny)
            .zip(rows.par_iter())
            .for_each(|(rr, row)| {
                for k in 0..ny {
                    let i = row.start + k;
                    rr[k] = if weight(row, k) == 0.0 { 0.0 } else { rhs[i] - ap[i] };
                }
            });
        p.copy_from_slice(&r);
        let bnorm = dot(&rhs, &rhs).sqrt().max(1e-300);
        let mut rr = dot(&r, &r);
        let mut iters = 0;
        while rr.sqrt() > self.cfg.cg_tol * bnorm && iters < 10 * len {
            apply(&p, &mut ap);
            let a = rr / dot(&p, &ap);
            x.par_iter_mut().zip(p.par_iter()).for_each(|(x, p)| *x += a * p);
            r.par_iter_mut().zip(ap.par_iter()).for_each(|(r, ap)| *r -= a * ap);
            let rr_new = dot(&r, &r);
            let beta = rr_new / rr;
            p.par_iter_mut().zip(r.par_iter()).for_each(|(p, r)| *p = r + beta * *p);
            rr = rr_new;
            iters += 1;
        }
        if !rr.is_finite() {
            return Err(Error::BlowUp {
                time: t_new,
                detail: "conjugate gradients diverged".into(),
                snapshot: None,
            });
        }
        self.stats.max_cg_iterations = self.stats.max_cg_iterations.max(iters);
        self.cg = [r, p, ap];
        self.rhs = rhs;
        self.scratch = x;
        Ok(())
    }

    /// Step from `field.time` to `t1`, landing on it exactly.
    pub fn advance<B, S>(&mut self, field: &mut GridField, t1: f64, boundary: &B, sink: &mut S) -> Result<()>
    where
        B: SpaceTimeField + ?Sized,
        S: SnapshotSink + ?Sized,
    {
        let t0 = field.time;
        let (dt, steps) = self.cfg.resolve_dt(&field.grid, self.spec, t1 - t0)?;
        self.stats.dt = dt;
        let every = self.cfg.snapshot_every;
        if every > 0 {
            sink.accept(field)?;
        }
        let origin0 = *field.grid.origin().last().unwrap();
        for k in 1..=steps {
            self.step(field, dt, boundary)?;
            // Times and frame positions from the step index, so that legs started
            // at different times share nodes exactly.
            field.time = if k == steps { t1 } else { t0 + k as f64 * dt };
            let y = origin0 + self.cfg.frame_speed * (field.time - t0);
            field.grid = field.grid.shifted_y(y - field.grid.origin().last().unwrap());
            if every > 0 && k % every == 0 {
                sink.accept(field)?;
            }
        }
        if every == 0 || steps % every != 0 {
            sink.accept(field)?;
        }
        Ok(())
    }
}

/// One step from `field`; see [`Solver::step`].
pub fn step<B: SpaceTimeField + ?Sized>(
    field: &GridField,
    spec: &ReactionSpec,
    cfg: &SolverConfig,
    dt: f64,
    boundary: &B,
) -> Result<GridField> {
    let limit = cfg.dt_limit(&field.grid, spec);
    if !(dt > 0.0 && dt <= limit * (1.0 + 1e-12)) {
        return Err(Error::InvalidGrid(format!("dt = {dt} outside (0, {limit:e}]")));
    }
    let mut out = field.clone();
    Solver::new(spec, cfg.clone()).step(&mut out, dt, boundary)?;
    Ok(out)
}

/// Sample `initial` at `t0` and evolve to `t1`.
#[allow(clippy::too_many_arguments)]
pub fn solve_cauchy<I, B, S>(
    spec: &ReactionSpec,
    grid: Grid,
    initial: &I,
    t0: f64,
    t1: f64,
    cfg: &SolverConfig,
    boundary: &B,
    sink: &mut S,
) -> Result<(GridField, SolveStats)>
where
    I: SpaceTimeField + ?Sized,
    B: SpaceTimeField + ?Sized,
    S: SnapshotSink + ?Sized,
{
    if !(t1 >= t0) {
        return Err(Error::InvalidGrid(format!("t1 = {t1} precedes t0 = {t0}")));
    }
    let mut field = GridField::sample(grid, t0, initial);
    let mut solver = Solver::new(spec, cfg.clone());
    solver.advance(&mut field, t1, boundary, sink)?;
    Ok((field, solver.stats.clone()))
}

/// Largest speed `c` such that every front `g(x.e - c t + tau)` is a subsolution
/// of one explicit Euler step with step `dt` and spacing `dx`, shrunk by `margin`.
///
/// Fronts at this speed, and their maxima, never outrun the discrete solution
/// they bound from below.
pub fn discrete_subsolution_speed(
    spec: &ReactionSpec,
    prof: &FrontProfile,
    directions: &[&[f64]],
    dx: f64,
    dt: f64,
    margin: f64,
) -> Result<f64> {
    let cf = prof.speed();
    let mut best = f64::INFINITY;
    for e in directions {
        let stencil = |lambda: f64| -> f64 {
            e.iter()
                .map(|ek| 2.0 * ((lambda * dx * ek).cosh() - 1.0) / (dx * dx))
                .sum()
        };
        // Exponential tails, solved in closed form.
        let lp = -prof.lambda_plus();
        let lm = prof.lambda_minus();
        let tail_plus = (dt * (stencil(lp) + spec.df0())).ln_1p() / (lp * dt);
        let tail_minus = -(dt * (stencil(lm) + spec.df1())).ln_1p() / (lm * dt);
        best = best.min(tail_plus).min(tail_minus);
        let lo = prof.inverse(1.0 - 1e-6)?;
        let hi = prof.inverse(1e-6)?;
        let samples = ((hi - lo) / 1e-3).ceil() as usize;
        for s in 0..=samples {
            let xi = lo + (hi - lo) * s as f64 / samples as f64;
            let g0 = prof.g(xi);
            let lap: f64 = e
                .iter()
                .map(|ek| (prof.g(xi + dx * ek) - 2.0 * g0 + prof.g(xi - dx * ek)) / (dx * dx))
                .sum();
            let gain = dt * (lap + spec.f(g0));
            let (mut a, mut b) = (0.0, 2.0 * cf);
            if prof.g(xi - b * dt) - g0 <= gain {
                continue;
            }
            if prof.g(xi) - g0 > gain {
                return Err(Error::Experiment(format!("no admissible discrete speed at xi = {xi}")));
            }
            for _ in 0..60 {
                let c = 0.5 * (a + b);
                if prof.g(xi - c * dt) - g0 <= gain {
                    a = c;
                } else {
                    b = c;
                }
            }
            best = best.min(a);
        }
    }
    if !(best > 0.0 && best.is_finite()) {
        return Err(Error::Experiment(format!("discrete front speed {best} is not positive")));
    }
    Ok(best * (1.0 - margin))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Constant;

    fn spec() -> ReactionSpec {
        ReactionSpec::cubic(0.25).unwrap()
    }

    #[test]
    fn equilibria_are_fixed() {
        let s = spec();
        let g = Grid::cube(2, 9, 0.5, -2.0).unwrap();
        for v in [0.0, 1.0] {
            for scheme in [Scheme::ExplicitEuler, Scheme::ImexCn] {
                let cfg = SolverConfig { scheme, ..Default::default() };
                let (out, _) = solve_cauchy(&s, g.clone(), &Constant(v), 0.0, 1.0, &cfg, &Constant(v), &mut NullSink).unwrap();
                assert!(out.values.iter().all(|&u| u == v));
            }
        }
    }

    #[test]
    fn schemes_agree_on_smooth_data() {
        let s = spec();
        let g = Grid::cube(2, 21, 0.25, -2.5).unwrap();
        let init = |_: f64, p: &[f64]| 0.5 + 0.3 * (p[0]).sin() * (0.5 * p[1]).cos();
        let run = |scheme, boundary, dt| {
            let cfg = SolverConfig {
                scheme,
                boundary,
                dt: Some(dt),
                ..Default::default()
            };
            solve_cauchy(&s, g.clone(), &init, 0.0, 0.5, &cfg, &init, &mut NullSink).unwrap().0
        };
        for boundary in [BoundaryKind::DirichletFromEvaluator, BoundaryKind::HomogeneousNeumann] {
            let gap = |dt| {
                run(Scheme::ExplicitEuler, boundary, dt)
                    .max_abs_diff(&run(Scheme::ImexCn, boundary, dt))
                    .unwrap()
            };
            let (coarse, fine) = (gap(2e-3), gap(1e-3));
            assert!(coarse < 3e-4, "{boundary:?}: {coarse}");
            assert!(coarse / fine > 1.8 && coarse / fine < 2.2, "{boundary:?}: {coarse} {fine}");
        }
        let d = run(Scheme::ExplicitEuler, BoundaryKind::DirichletFromEvaluator, 2e-3);
        let n = run(Scheme::ExplicitEuler, BoundaryKind::HomogeneousNeumann, 2e-3);
        assert!(d.max_abs_diff(&n).unwrap() > 1e-2);
    }

    #[test]
    fn snapshots_and_exact_landing() {
        let s = spec();
        let g = Grid::cube(2, 5, 0.5, 0.0).unwrap();
        let cfg = SolverConfig {
            snapshot_every: 10,
            ..Default::default()
        };
        let mut sink = MemorySink::default();
        let (out, stats) = solve_cauchy(&s, g, &Constant(0.3), -1.0, 0.3, &cfg, &Constant(0.3), &mut sink).unwrap();
        assert_eq!(out.time, 0.3);
        assert_eq!(sink.0.first().unwrap().time, -1.0);
        assert_eq!(sink.0.last().unwrap().time, 0.3);
        assert_eq!(sink.0.len(), stats.steps / 10 + 1 + usize::from(stats.steps % 10 != 0));
        let (same, _) = solve_cauchy(&s, out.grid.clone(), &Constant(0.3), 2.0, 2.0, &cfg, &Constant(0.3), &mut NullSink).unwrap();
        assert!(same.values.iter().all(|&u| u == 0.3));
    }

    #[test]
    fn unstable_dt_rejected_and_nan_reported() {
        let s = spec();
        let g = Grid::cube(2, 5, 0.1, 0.0).unwrap();
        let cfg = SolverConfig {
            dt: Some(1.0),
            ..Default::default()
        };
        assert!(matches!(
            solve_cauchy(&s, g.clone(), &Constant(0.0), 0.0, 1.0, &cfg, &Constant(0.0), &mut NullSink),
            Err(Error::InvalidGrid(_))
        ));
        let dir = tempfile::tempdir().unwrap();
        let cfg = SolverConfig {
            diagnostic_dir: Some(dir.path().to_path_buf()),
            ..Default::default()
        };
        let err = solve_cauchy(&s, g, &Constant(0.2), 0.0, 0.01, &cfg, &Constant(f64::NAN), &mut NullSink).unwrap_err();
        match err {
            Error::BlowUp { snapshot: Some(p), .. } => assert!(p.exists()),
            e => panic!("unexpected {e:?}"),
        }
    }
}
