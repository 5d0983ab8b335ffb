use front_forge::field::SpaceTimeField;
use front_forge::pde::*;
use front_forge::*;
use proptest::prelude::*;
use std::sync::OnceLock;

fn setup() -> &'static (ReactionSpec, FrontProfile) {
    static S: OnceLock<(ReactionSpec, FrontProfile)> = OnceLock::new();
    S.get_or_init(|| {
        let spec = ReactionSpec::cubic(0.25).unwrap();
        let prof = solve_profile(&spec, &ProfileOptions::default()).unwrap();
        (spec, prof)
    })
}

/// Exact wave `g(p.e - c_f t)`.
struct Planar<'a> {
    prof: &'a FrontProfile,
    e: [f64; 2],
}

impl SpaceTimeField for Planar<'_> {
    fn value(&self, t: f64, p: &[f64]) -> f64 {
        self.prof.g(p[0] * self.e[0] + p[1] * self.e[1] - self.prof.speed() * t)
    }
}

fn planar_error(dx: f64, angle: f64, cfg: SolverConfig) -> f64 {
    let (spec, prof) = setup();
    let wave = Planar {
        prof,
        e: [angle.cos(), angle.sin()],
    };
    let n = (16.0 / dx).round() as usize + 1;
    let grid = Grid::cube(2, n, dx, -8.0).unwrap();
    let t1 = 2.0 / prof.speed();
    let (out, _) = solve_cauchy(spec, grid, &wave, 0.0, t1, &cfg, &wave, &mut NullSink).unwrap();
    GridField::sample(out.grid.clone(), t1, &wave).max_abs_diff(&out).unwrap()
}

#[test]
fn planar_front_oracle_and_refinement() {
    for angle in [std::f64::consts::FRAC_PI_2, 1.0] {
        let coarse = planar_error(0.2, angle, SolverConfig::default());
        let fine = planar_error(0.1, angle, SolverConfig::default());
        assert!(fine < 2e-3, "angle {angle}: error {fine}");
        assert!(coarse / fine >= 3.0, "angle {angle}: {coarse} -> {fine}");
    }
}

#[test]
fn moving_frame_tracks_front() {
    let (_, prof) = setup();
    for advection in [Advection::Upwind, Advection::Central] {
        let cfg = SolverConfig {
            frame_speed: prof.speed(),
            advection,
            ..Default::default()
        };
        let err = planar_error(0.1, std::f64::consts::FRAC_PI_2, cfg);
        let tol = if advection == Advection::Upwind { 2e-2 } else { 2e-3 };
        assert!(err < tol, "{advection:?}: {err}");
    }
}

#[test]
fn discrete_subsolution_keeps_runs_monotone() {
    let (spec, prof) = setup();
    let pi4 = std::f64::consts::FRAC_PI_4;
    let arr = FrontArrangement::new(
        2,
        vec![
            Front { nu: vec![1.0], theta: pi4, tau: 0.0 },
            Front { nu: vec![-1.0], theta: pi4, tau: 0.0 },
        ],
        prof.speed(),
    )
    .unwrap();
    let dx = 0.2;
    let dt = 1.0 / 200.0;
    let dirs: Vec<&[f64]> = (0..arr.len()).map(|i| arr.direction(i)).collect();
    let c = discrete_subsolution_speed(spec, prof, &dirs, dx, dt, 1e-3).unwrap();
    assert!(c < prof.speed() && c > 0.95 * prof.speed(), "{c}");
    let w = LowerBarrier::with_speed(&arr, prof, c);
    let cfg = SolverConfig {
        dt: Some(dt),
        cfl_fraction: 0.5,
        snapshot_every: 20,
        ..Default::default()
    };
    let grid = Grid::cube(2, 61, dx, -6.0).unwrap();
    let mut sink = MemorySink::default();
    let (out, _) = solve_cauchy(spec, grid, &w, -4.0, 0.0, &cfg, &w, &mut sink).unwrap();
    for pair in sink.0.windows(2) {
        let worst = pair[0]
            .values
            .iter()
            .zip(&pair[1].values)
            .map(|(a, b)| b - a)
            .fold(f64::INFINITY, f64::min);
        assert!(worst >= -1e-12, "decrease {worst} at t = {}", pair[1].time);
    }
    let lower = GridField::sample(out.grid.clone(), 0.0, &LowerBarrier::new(&arr, prof));
    assert!(out.values.iter().zip(&lower.values).all(|(u, l)| u >= l));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn comparison_principle(a in prop::collection::vec(0.0f64..1.0, 64), bump in prop::collection::vec(0.0f64..0.5, 64),
                            neumann in any::<bool>()) {
        let (spec, _) = setup();
        let grid = Grid::cube(2, 8, 0.25, 0.0).unwrap();
        let lo = GridField { grid: grid.clone(), time: 0.0, values: a.clone() };
        let hi = GridField {
            grid,
            time: 0.0,
            values: a.iter().zip(&bump).map(|(x, b)| (x + b).min(1.0)).collect(),
        };
        let cfg = SolverConfig {
            boundary: if neumann { BoundaryKind::HomogeneousNeumann } else { BoundaryKind::DirichletFromEvaluator },
            ..Default::default()
        };
        let edge = |_: f64, p: &[f64]| 0.5 + 0.4 * (p[0] - p[1]).sin();
        let mut out = Vec::new();
        for mut f in [lo, hi] {
            Solver::new(spec, cfg.clone()).advance(&mut f, 0.3, &edge, &mut NullSink).unwrap();
            out.push(f);
        }
        for (l, h) in out[0].values.iter().zip(&out[1].values) {
            prop_assert!(*l <= h + 1e-9);
        }
    }
}
