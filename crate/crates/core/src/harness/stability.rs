use super::{Check, Context};
use crate::bounds::LowerBarrier;
use crate::error::{Error, Result};
use crate::field::SpaceTimeField;
use crate::pde::{solve_cauchy, GridField, NullSink, Solver};
use serde::{Deserialize, Serialize};

/// `D(t) = sup |u - U|` at the checkpoints of one perturbed run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityTrace {
    pub amplitude: f64,
    pub times: Vec<f64>,
    pub distances: Vec<f64>,
    pub clamped_initial: usize,
}

/// A point on the interface above the origin at `t = 0`.
fn ridge_point(ctx: &Context) -> Result<Vec<f64>> {
    let m = ctx.arr.dim() - 1;
    let x = vec![0.0; m];
    let q = |y: f64| ctx.arr.min_plane_coord(0.0, &x, y, 1.0).0;
    let (mut a, mut b) = (-1e3, 1e3);
    if !(q(a) < 0.0 && q(b) > 0.0) {
        return Err(Error::Experiment("no interface on the y axis".into()));
    }
    for _ in 0..200 {
        let c = 0.5 * (a + b);
        if q(c) < 0.0 {
            a = c;
        } else {
            b = c;
        }
    }
    let mut p = x;
    p.push(0.5 * (a + b));
    Ok(p)
}

/// `a (1 - r^2/R^2)^2` inside the ball of radius `R`.
struct Bump {
    centre: Vec<f64>,
    radius: f64,
    amplitude: f64,
}

impl Bump {
    fn at(&self, p: &[f64]) -> f64 {
        let r2: f64 = p.iter().zip(&self.centre).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (self.radius * self.radius);
        if r2 < 1.0 {
            self.amplitude * (1.0 - r2) * (1.0 - r2)
        } else {
            0.0
        }
    }
}

/// Perturbed runs against the unperturbed reference in a frame moving with the ridge.
pub fn stability_checks(ctx: &Context) -> Result<(Vec<Check>, Vec<StabilityTrace>)> {
    let s = &ctx.config.experiment.stability;
    let grid = ctx.config.grid.build()?;
    let speed = ctx.arr.speed();
    let frame = s.frame_speed.unwrap_or(speed / ctx.arr.min_sin());
    let dirs: Vec<&[f64]> = (0..ctx.arr.len()).map(|i| ctx.arr.direction(i)).collect();
    let gcfg = &ctx.config.grid;
    let c_sub = crate::pde::discrete_subsolution_speed(&ctx.spec, &ctx.profile, &dirs, grid.spacing(), gcfg.dt(), gcfg.speed_margin)?;
    let w = LowerBarrier::with_speed(&ctx.arr, &ctx.profile, c_sub);
    let (reference0, _) = solve_cauchy(&ctx.spec, grid.clone(), &w, -s.warmup, 0.0, &gcfg.solver(), &w, &mut NullSink)?;

    let lower = ctx.lower();
    let low0 = GridField::sample(grid.clone(), 0.0, &lower);
    let mut centre = ridge_point(ctx)?;
    for (c, o) in centre.iter_mut().zip(&s.perturbation.offset) {
        *c += o;
    }
    let mut amplitudes = vec![s.perturbation.amplitude];
    if s.two_sided {
        amplitudes.push(-s.perturbation.amplitude);
    }
    let moving = crate::pde::SolverConfig {
        frame_speed: frame,
        ..gcfg.solver()
    };
    let boundary: &dyn SpaceTimeField = &lower;
    let n_checks = (s.t_end / s.checkpoint_every).round() as usize;
    let times: Vec<f64> = (0..=n_checks).map(|k| k as f64 * s.checkpoint_every).collect();

    // Reference trajectory at the checkpoints.
    let mut refs = vec![reference0.clone()];
    let mut solver = Solver::new(&ctx.spec, moving.clone());
    let mut f = reference0;
    for &t in &times[1..] {
        solver.advance(&mut f, t, boundary, &mut NullSink)?;
        refs.push(f.clone());
    }

    let interior: Vec<usize> = (0..grid.len()).filter(|&i| !grid.is_boundary(i)).collect();
    let sup = |a: &GridField, b: &GridField| interior.iter().map(|&i| (a.values[i] - b.values[i]).abs()).fold(0.0, f64::max);
    let mut traces = Vec::new();
    for &a in &amplitudes {
        let bump = Bump {
            centre: centre.clone(),
            radius: s.perturbation.radius,
            amplitude: a,
        };
        let mut clamped = 0;
        let mut u = low0.clone();
        let mut p = vec![0.0; grid.ndim()];
        for (i, v) in u.values.iter_mut().enumerate() {
            grid.point_of(i, &mut p);
            let raw = *v + bump.at(&p);
            if !(0.0..=1.0).contains(&raw) {
                clamped += 1;
            }
            *v = raw.clamp(0.0, 1.0);
        }
        let mut solver = Solver::new(&ctx.spec, moving.clone());
        let mut distances = vec![sup(&u, &refs[0])];
        for (k, &t) in times.iter().enumerate().skip(1) {
            solver.advance(&mut u, t, boundary, &mut NullSink)?;
            distances.push(sup(&u, &refs[k]));
        }
        traces.push(StabilityTrace {
            amplitude: a,
            times: times.clone(),
            distances,
            clamped_initial: clamped,
        });
    }

    let mut out = Vec::new();
    for t in &traces {
        let tag = if t.amplitude >= 0.0 { "positive" } else { "negative" };
        let d0 = t.distances[0];
        let end = *t.distances.last().unwrap();
        out.push(
            Check::le(&format!("decay_ratio_{tag}"), "perturbed solutions converge to the entire solution", end / d0, 0.1)
                .with([d0, end, t.clamped_initial as f64])
                .note("D(T)/D(0), D(0), D(T), clamped initial nodes"),
        );
        let rise = t
            .times
            .iter()
            .zip(t.distances.windows(2))
            .filter(|(time, _)| **time >= s.burn_in)
            .map(|(_, w)| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max);
        out.push(
            Check::le(&format!("monotone_decay_{tag}"), "perturbed solutions converge to the entire solution", rise, 0.0)
                .with(t.distances.iter().copied()),
        );
        let half = t.times.iter().zip(&t.distances).find(|(_, &d)| d <= 0.5 * d0).map(|(t, _)| *t);
        if let Some(h) = half {
            out.last_mut().unwrap().note = format!("D halves by t = {h}; the trace follows");
        }
    }
    Ok((out, traces))
}
