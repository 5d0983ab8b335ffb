use front_forge::config::{capped_pair, square_pyramid, symmetric_pair};
use front_forge::{
    solve_profile, Front, FrontArrangement, FrontProfile, ImplicitSurface, LowerBarrier, ProfileOptions, ReactionSpec,
};
use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::sync::OnceLock;

const C_F: f64 = 0.353_553_390_593_273_8;

fn profile() -> &'static FrontProfile {
    static P: OnceLock<FrontProfile> = OnceLock::new();
    P.get_or_init(|| solve_profile(&ReactionSpec::cubic(0.25).unwrap(), &ProfileOptions::default()).unwrap())
}

fn arrangements() -> Vec<FrontArrangement> {
    vec![
        FrontArrangement::new(2, symmetric_pair(FRAC_PI_4, 0.0), C_F).unwrap(),
        FrontArrangement::new(2, capped_pair(FRAC_PI_4, 1.0), C_F).unwrap(),
        FrontArrangement::new(3, square_pyramid(FRAC_PI_4, 0.0), C_F).unwrap(),
    ]
}

fn unit(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    v.iter().map(|a| a / n).collect()
}

/// Random arrangement with `n` fronts in dimension `dim`, or `None` when two directions collide.
fn random_arrangement(dim: usize, raw: &[(Vec<f64>, f64, f64)]) -> Option<FrontArrangement> {
    let fronts: Vec<Front> = raw
        .iter()
        .map(|(nu, theta, tau)| Front {
            nu: unit(&nu[..dim - 1]),
            theta: *theta,
            tau: *tau,
        })
        .collect();
    let arr = FrontArrangement::new(dim, fronts, C_F).ok()?;
    for i in 0..arr.len() {
        for j in 0..i {
            if arr.gap(i, j) < 1e-3 {
                return None;
            }
        }
    }
    Some(arr)
}

fn raw_fronts() -> impl Strategy<Value = (usize, Vec<(Vec<f64>, f64, f64)>)> {
    (2usize..=4, 2usize..=5).prop_flat_map(|(dim, n)| {
        let nu = prop::collection::vec(
            prop_oneof![-1.0..-0.1f64, 0.1..1.0f64],
            3,
        );
        (Just(dim), prop::collection::vec((nu, 0.2..FRAC_PI_2, -2.0..2.0f64), n))
    })
}

// Reaction

proptest! {
    #[test]
    fn derivative_matches_differences(theta in 0.01..0.49f64, u in 0.0..1.0f64) {
        let s = ReactionSpec::cubic(theta).unwrap();
        let h = 1e-5;
        let fd = (s.f(u + h) - s.f(u - h)) / (2.0 * h);
        prop_assert!((fd - s.df(u)).abs() <= 1e-8, "{} vs {}", fd, s.df(u));
    }
}

#[test]
fn sigma_inequalities_and_lipschitz_constant() {
    for theta in [0.05, 0.25, 0.4] {
        let s = ReactionSpec::cubic(theta).unwrap();
        let sigma = s.sigma();
        assert!(sigma > 0.0 && sigma < 0.125);
        let n = 10_000;
        for k in 0..=n {
            let r = 4.0 * sigma * k as f64 / n as f64;
            assert!(s.df(r) <= s.df0() / 2.0 + 1e-15, "theta {theta}, u {r}");
            assert!(s.df(1.0 - r) <= s.df1() / 2.0 + 1e-15, "theta {theta}, u {}", 1.0 - r);
        }
        let big = (0..=n).map(|k| s.df(k as f64 / n as f64).abs()).fold(0.0, f64::max);
        assert!(s.lipschitz() >= big - 1e-15);
        assert!(s.lipschitz() - big <= 1e-6, "L = {}, grid max {}", s.lipschitz(), big);
    }
}

// Geometry

proptest! {
    #[test]
    fn positive_region_is_convex(
        p in prop::collection::vec(-20.0..20.0f64, 4),
        q in prop::collection::vec(-20.0..20.0f64, 4),
        scale in 0.1..2.0f64,
    ) {
        for arr in arrangements() {
            let m = arr.dim() - 1;
            let (a, b) = (&p[..arr.dim() + 1], &q[..arr.dim() + 1]);
            let inside = |v: &[f64]| arr.min_plane_coord(v[0], &v[1..=m], v[m + 1], scale).0;
            if inside(a) >= 0.0 && inside(b) >= 0.0 {
                let mid: Vec<f64> = a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
                prop_assert!(inside(&mid) >= -1e-12);
            }
        }
    }

    #[test]
    fn ridge_proxy_is_exact_for_a_pair(theta in 0.2..1.4f64, t in -10.0..10.0f64, x in -10.0..10.0f64, y in -10.0..10.0f64) {
        // The ridge of the symmetric pair is the line x = 0, y = c t / sin(theta).
        let arr = FrontArrangement::new(2, symmetric_pair(theta, 0.0), C_F).unwrap();
        let v = C_F / theta.sin();
        let dir = unit(&[1.0, 0.0, v]);
        let p = [t, x, y];
        let along: f64 = p.iter().zip(&dir).map(|(a, b)| a * b).sum();
        let exact = p.iter().zip(&dir).map(|(a, b)| (a - along * b).powi(2)).sum::<f64>().sqrt();
        let proxy = arr.ridge_distance_proxy(t, &[x], y).unwrap();
        prop_assert!(proxy <= exact + 1e-9 && (proxy - exact).abs() <= 1e-9, "{} vs {}", proxy, exact);
    }

    #[test]
    fn rotation_weights_keep_their_margins((dim, raw) in raw_fronts()) {
        let Some(arr) = random_arrangement(dim, &raw) else { return Ok(()) };
        for i in 0..arr.len() {
            let fam = arr.rotation_weights(i);
            let (tilt, speed) = fam.margins(&arr);
            // lambda <= s_i / (2 (s_i + s_j)) leaves at least half of sin(theta_i).
            prop_assert!(tilt >= 0.5 * arr.sin_theta(i) - 1e-12, "tilt {} at facet {}", tilt, i);
            prop_assert!(speed > 0.0);
            for j in 0..arr.len() {
                if j != i {
                    prop_assert!(fam.lambda[j] > 0.0 && fam.gamma[j] < 1.0);
                }
            }
        }
    }

    #[test]
    fn rotated_family_shares_the_facet((dim, raw) in raw_fronts(), pt in prop::collection::vec(-10.0..10.0f64, 4)) {
        let Some(arr) = random_arrangement(dim, &raw) else { return Ok(()) };
        let m = dim - 1;
        let (t, x) = (pt[0], &pt[1..=m]);
        for i in 0..arr.len() {
            // Put the point on {q_i = 0}.
            let y0 = 0.0;
            let q0 = arr.plane_coord(i, t, x, y0, 1.0);
            let y = y0 - q0 / arr.sin_theta(i);
            if (0..arr.len()).any(|j| arr.plane_coord(j, t, x, y, 1.0) < 0.0) {
                continue;
            }
            let fam = arr.rotation_weights(i);
            let (mut best, mut at) = (f64::INFINITY, usize::MAX);
            for j in 0..arr.len() {
                let r = fam.rotated_coord(&arr, j, t, x, y, 1.0);
                if r < best - 1e-12 || (r <= best + 1e-12 && j == i) {
                    best = r;
                    at = j;
                }
            }
            prop_assert!(best.abs() <= 1e-9 && at == i, "min {} at {} (facet {})", best, at, i);
        }
    }
}

// Surface

fn q(s: &ImplicitSurface, j: usize, t: f64, x: &[f64], y: f64) -> f64 {
    let (a, b, c, d) = s.coefficients(j);
    a.iter().zip(x).map(|(u, v)| u * v).sum::<f64>() + b * y + c * t + d
}

proptest! {
    #[test]
    fn relation_is_strictly_monotone(t in -5.0..5.0f64, x in prop::collection::vec(-5.0..5.0f64, 2), alpha in 0.05..1.0f64) {
        for arr in arrangements() {
            let s = ImplicitSurface::phi(&arr, alpha).unwrap();
            let x = &x[..arr.dim() - 1];
            let h = s.height(t, x).unwrap();
            let big = |y: f64| (0..s.len()).map(|j| (-q(&s, j, t, x, y)).exp()).sum::<f64>() - 1.0;
            let mut prev = f64::INFINITY;
            for k in -50..=50 {
                let v = big(h + 0.05 * k as f64);
                prop_assert!(v < prev);
                prev = v;
            }
        }
    }

    #[test]
    fn common_phase_shift_is_a_time_shift(t in -5.0..5.0f64, x in prop::collection::vec(-5.0..5.0f64, 2), delta in -3.0..3.0f64) {
        let alpha = 0.3;
        for arr in arrangements() {
            let taus: Vec<f64> = arr.fronts().iter().map(|f| f.tau + delta).collect();
            let shifted = arr.with_taus(&taus).unwrap();
            let x = &x[..arr.dim() - 1];
            let a = ImplicitSurface::phi(&shifted, alpha).unwrap().height(t, x).unwrap();
            let b = ImplicitSurface::phi(&arr, alpha).unwrap().height(t - alpha * delta / C_F, x).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{} vs {}", a, b);
        }
    }

    #[test]
    fn hessian_is_positive_semidefinite(t in -5.0..5.0f64, x in prop::collection::vec(-8.0..8.0f64, 2)) {
        for arr in arrangements() {
            let s = ImplicitSurface::phi(&arr, 1.0).unwrap();
            let x = &x[..arr.dim() - 1];
            let p = s.solve(t, x).unwrap();
            let d = s.derivatives(&p.weights);
            let min_eig = match d.grad.len() {
                1 => d.hess[0],
                _ => {
                    let (a, b, c) = (d.hess[0], d.hess[1], d.hess[3]);
                    0.5 * (a + c) - (0.25 * (a - c).powi(2) + b * b).sqrt()
                }
            };
            prop_assert!(min_eig >= -1e-10);
        }
    }

    #[test]
    fn speed_gap_is_comparable_to_flatness(t in -5.0..5.0f64, x in prop::collection::vec(-8.0..8.0f64, 2)) {
        for arr in arrangements() {
            let s = ImplicitSurface::phi(&arr, 1.0).unwrap();
            let x = &x[..arr.dim() - 1];
            let p = s.solve(t, x).unwrap();
            let h = front_forge::surface::flatness(&p.weights);
            if h < 1e-200 {
                continue;
            }
            let ratio = s.normal_speed_gap(&p.weights) / h;
            prop_assert!(ratio.is_finite() && ratio > 1e-3 && ratio < 1e3, "ratio {}", ratio);
        }
    }
}

// Bounds

proptest! {
    #[test]
    fn lower_barrier_decreases_in_each_phase(
        t in -5.0..5.0f64,
        x in prop::collection::vec(-10.0..10.0f64, 2),
        y in -10.0..10.0f64,
        dtau in 0.01..1.0f64,
    ) {
        let prof = profile();
        for arr in arrangements() {
            let x = &x[..arr.dim() - 1];
            let base = LowerBarrier::new(&arr, prof).eval(t, x, y);
            for i in 0..arr.len() {
                let mut taus: Vec<f64> = arr.fronts().iter().map(|f| f.tau).collect();
                taus[i] += dtau;
                let moved = arr.with_taus(&taus).unwrap();
                let v = LowerBarrier::new(&moved, prof).eval(t, x, y).0;
                prop_assert!(v <= base.0);
                if base.1 == i && base.0 > 1e-6 && base.0 < 1.0 - 1e-6 {
                    prop_assert!(v < base.0);
                }
            }
        }
    }

    #[test]
    fn lower_barrier_is_nondecreasing_in_time(
        t in -5.0..5.0f64,
        x in prop::collection::vec(-10.0..10.0f64, 2),
        y in -10.0..10.0f64,
        dt in 0.0..2.0f64,
    ) {
        let prof = profile();
        for arr in arrangements() {
            let x = &x[..arr.dim() - 1];
            let l = LowerBarrier::new(&arr, prof);
            prop_assert!(l.eval(t + dt, x, y).0 >= l.eval(t, x, y).0);
        }
    }
}
