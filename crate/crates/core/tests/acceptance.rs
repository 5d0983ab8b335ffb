//! Acceptance run: one verdict line per criterion, details indented below it.
//!
//! `FF_ACCEPTANCE=1,4,9 cargo test --test acceptance` runs a subset.

use front_forge::config::{capped_pair, square_pyramid, symmetric_pair, RunConfig};
use front_forge::harness::{
    asymptotics_checks, construct_entire, construction_checks, monotonicity_checks, planar_floor, pyramid_checks,
    residual_checks, stability_checks, surface_identity_checks, tau_checks, vfront_checks, Check, Construction, Context,
};
use front_forge::{solve_profile, FrontArrangement, ProfileOptions, ReactionSpec, Result};
use std::f64::consts::{FRAC_PI_4, SQRT_2};
use std::process::ExitCode;
use std::time::{Duration, Instant};

/// Checks that are known to fail for reasons recorded in the project notes.
/// They are still run and printed; they do not fail the process.
const DOCUMENTED: &[&str] = &["canary_double_eps0", "cauchy_differences_halve"];

const PROFILE_SPEED_TOL: f64 = 1e-6;
const PROFILE_SUP_TOL: f64 = 1e-5;
const SURFACE_SAMPLES: usize = 10_000;

struct Verdict {
    checks: Vec<Check>,
    budget: Option<Duration>,
    elapsed: Duration,
}

impl Verdict {
    fn undocumented_failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.pass && !documented(&c.name)).count()
            + usize::from(self.over_budget())
    }
    fn documented_failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.pass && documented(&c.name)).count()
    }
    fn over_budget(&self) -> bool {
        self.budget.is_some_and(|b| self.elapsed > b)
    }
}

fn timed(budget: Option<Duration>, f: impl FnOnce() -> Result<Vec<Check>>) -> Verdict {
    let start = Instant::now();
    let checks = f().unwrap_or_else(|e| vec![Check::holds("run_completed", "the experiment ran", false).note(e.to_string())]);
    Verdict {
        checks,
        budget,
        elapsed: start.elapsed(),
    }
}

fn prefix(tag: &str, mut checks: Vec<Check>) -> Vec<Check> {
    for c in &mut checks {
        c.name = format!("{tag}/{}", c.name);
    }
    checks
}

/// Prefixed names (`pair/...`) match the documented list by their last part.
fn documented(name: &str) -> bool {
    DOCUMENTED.contains(&name.rsplit('/').next().unwrap_or(name))
}

fn c1_profile() -> Result<Vec<Check>> {
    let theta = 0.25;
    let prof = solve_profile(&ReactionSpec::cubic(theta)?, &ProfileOptions::default())?;
    let exact = (1.0 - 2.0 * theta) / SQRT_2;
    let sup = (0..=40_000)
        .map(|k| {
            let xi = -20.0 + k as f64 * 1e-3;
            (prof.g(xi) - 1.0 / (1.0 + (xi / SQRT_2).exp())).abs()
        })
        .fold(0.0, f64::max);
    Ok(vec![
        Check::le("speed", "closed-form cubic speed", (prof.speed() - exact).abs(), PROFILE_SPEED_TOL),
        Check::le("logistic_sup", "closed-form cubic profile", sup, PROFILE_SUP_TOL),
    ])
}

fn arrangements(speed: f64) -> Result<Vec<(&'static str, FrontArrangement)>> {
    Ok(vec![
        ("pair", FrontArrangement::new(2, symmetric_pair(FRAC_PI_4, 0.0), speed)?),
        ("triple", FrontArrangement::new(2, capped_pair(FRAC_PI_4, 1.0), speed)?),
        ("pyramid", FrontArrangement::new(3, square_pyramid(FRAC_PI_4, 0.0), speed)?),
    ])
}

fn c2_surface(seed: u64) -> Result<Vec<Check>> {
    let prof = solve_profile(&ReactionSpec::cubic(0.25)?, &ProfileOptions::default())?;
    let mut out = Vec::new();
    for (tag, arr) in arrangements(prof.speed())? {
        out.extend(prefix(tag, surface_identity_checks(&arr, SURFACE_SAMPLES, 10.0, seed)?));
    }
    Ok(out)
}

fn c3_residuals() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (tag, fronts, dim) in [
        ("pair", symmetric_pair(FRAC_PI_4, 0.0), 2),
        ("triple", capped_pair(FRAC_PI_4, 1.0), 2),
    ] {
        let mut cfg = RunConfig::default();
        cfg.arrangement.fronts = fronts;
        cfg.arrangement.dim = dim;
        let ctx = Context::new(cfg)?;
        out.extend(prefix(tag, residual_checks(&ctx)?));
    }
    Ok(out)
}

fn pick(checks: &[Check], names: &[&str]) -> Vec<Check> {
    checks.iter().filter(|c| names.contains(&c.name.as_str())).cloned().collect()
}

fn c8_stability() -> Result<Vec<Check>> {
    let ctx = Context::new(RunConfig::default())?;
    Ok(stability_checks(&ctx)?.0)
}

fn c9_pyramid() -> Result<Vec<Check>> {
    let mut cfg = RunConfig::default();
    cfg.arrangement.dim = 3;
    cfg.arrangement.fronts = square_pyramid(FRAC_PI_4, 0.0);
    cfg.grid.nodes = vec![128, 128, 128];
    cfg.grid.dx = 0.25;
    cfg.grid.y_low = -12.0;
    cfg.grid.steps_per_unit = 200;
    cfg.experiment.start_times = vec![-10.0];
    let ctx = Context::new(cfg)?;
    let con = construct_entire(&ctx)?;
    pyramid_checks(&ctx, &con)
}

fn c10_tau() -> Result<Vec<Check>> {
    let mut cfg = RunConfig::default();
    cfg.grid.nodes = vec![256, 256];
    cfg.grid.dx = 0.2;
    cfg.grid.steps_per_unit = 200;
    cfg.experiment.start_times = vec![-20.0];
    cfg.experiment.dtau = vec![0.1, 0.05];
    let ctx = Context::new(cfg)?;
    tau_checks(&ctx)
}

fn report(n: usize, title: &str, v: &Verdict) {
    let verdict = if v.undocumented_failures() > 0 {
        "FAIL"
    } else if v.documented_failures() > 0 {
        "FAIL (documented)"
    } else {
        "PASS"
    };
    let budget = v.budget.map(|b| format!(", budget {}s", b.as_secs())).unwrap_or_default();
    println!("criterion {n:>2} {title}: {verdict} ({:.1}s{budget})", v.elapsed.as_secs_f64());
    for c in &v.checks {
        let mark = match (c.pass, documented(&c.name)) {
            (true, _) => "ok  ",
            (false, true) => "doc ",
            (false, false) => "FAIL",
        };
        let bound = match c.upper {
            Some(u) => format!("[{:e}, {u:e}]", c.tolerance),
            None => format!("{:e}", c.tolerance),
        };
        let measured: Vec<String> = c.measured.iter().map(|m| format!("{m:.4e}")).collect();
        println!(
            "    {mark} {} {} {bound}: {}",
            c.name,
            c.relation.symbol(),
            measured.join(", ")
        );
    }
    if v.over_budget() {
        println!("    FAIL runtime over budget");
    }
}

fn main() -> ExitCode {
    let wanted: Option<Vec<usize>> = std::env::var("FF_ACCEPTANCE")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let on = |n: usize| wanted.as_ref().is_none_or(|w| w.contains(&n));
    let secs = |s: u64| Some(Duration::from_secs(s));
    let seed = RunConfig::default().seed;
    let mut failures = 0;
    let mut run = |n: usize, title: &str, v: Verdict| {
        report(n, title, &v);
        failures += v.undocumented_failures();
    };

    if on(1) {
        run(1, "profile oracle", timed(secs(5), c1_profile));
    }
    if on(2) {
        run(2, "surface identities", timed(secs(30), || c2_surface(seed)));
    }
    if on(3) {
        run(3, "barrier residuals", timed(secs(120), c3_residuals));
    }

    // Criteria 4 to 7 and the V-front half of 9 share one construction on the default grid.
    if (4..=7).any(on) || on(9) {
        let start = Instant::now();
        let built: Result<(Context, Construction)> = Context::new(RunConfig::default()).and_then(|ctx| {
            let con = construct_entire(&ctx)?;
            Ok((ctx, con))
        });
        let build_time = start.elapsed();
        match built {
            Ok((ctx, con)) => {
                let shared = construction_checks(&ctx, &con);
                if on(4) {
                    let v = timed(secs(600), || {
                        Ok(pick(&shared.as_ref().map_err(clone_err)?.clone(), &["lower_below_upper", "sandwich_lower", "sandwich_upper", "range_guard_clamps"]))
                    });
                    run(4, "ordering and sandwich", Verdict { elapsed: v.elapsed + build_time, ..v });
                }
                if on(5) {
                    run(
                        5,
                        "construction convergence",
                        timed(None, || Ok(pick(&shared.as_ref().map_err(clone_err)?.clone(), &["cauchy_differences_halve", "monotone_in_start_time"]))),
                    );
                }
                if on(6) {
                    run(
                        6,
                        "asymptotics",
                        timed(None, || {
                            let floor = planar_floor(&ctx, &con)?;
                            asymptotics_checks(&ctx, &con, floor)
                        }),
                    );
                }
                if on(7) {
                    run(7, "monotonicity", timed(None, || monotonicity_checks(&ctx, &con)));
                }
                if on(9) {
                    run(
                        9,
                        "V-front and pyramid",
                        timed(None, || {
                            let mut c = prefix("vfront", vfront_checks(&ctx, &con)?);
                            c.extend(prefix("pyramid", c9_pyramid()?));
                            Ok(c)
                        }),
                    );
                }
            }
            Err(e) => {
                for n in [4, 5, 6, 7, 9].into_iter().filter(|&n| on(n)) {
                    let msg = e.to_string();
                    run(n, "construction", timed(None, || Err(front_forge::Error::Experiment(msg))));
                }
            }
        }
    }
    if on(8) {
        run(8, "stability", timed(secs(900), c8_stability));
    }
    if on(10) {
        run(10, "tau continuity", timed(None, c10_tau));
    }

    if failures == 0 {
        println!("acceptance: all criteria pass or fail only as documented");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} undocumented failure(s)");
        ExitCode::FAILURE
    }
}

fn clone_err(e: &front_forge::Error) -> front_forge::Error {
    front_forge::Error::Experiment(e.to_string())
}
