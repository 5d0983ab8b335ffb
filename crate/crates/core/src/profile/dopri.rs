//! Dormand–Prince 5(4) with continuous output for autonomous planar systems.

use crate::error::{Error, Result};

pub(crate) type State = [f64; 2];

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    -71.0 / 57600.0,
    0.0,
    71.0 / 16695.0,
    -71.0 / 1920.0,
    17253.0 / 339200.0,
    -22.0 / 525.0,
    1.0 / 40.0,
];
/// Continuous extension: y(t0 + s h) = y0 + h sum_i k_i (P_i . [s, s^2, s^3, s^4]).
pub(crate) const P: [[f64; 4]; 7] = [
    [
        1.0,
        -8048581381.0 / 2820520608.0,
        8663915743.0 / 2820520608.0,
        -12715105075.0 / 11282082432.0,
    ],
    [0.0, 0.0, 0.0, 0.0],
    [
        0.0,
        131558114200.0 / 32700410799.0,
        -68118460800.0 / 10900136933.0,
        87487479700.0 / 32700410799.0,
    ],
    [
        0.0,
        -1754552775.0 / 470086768.0,
        14199869525.0 / 1410260304.0,
        -10690763975.0 / 1880347072.0,
    ],
    [
        0.0,
        127303824393.0 / 49829197408.0,
        -318862633887.0 / 49829197408.0,
        701980252875.0 / 199316789632.0,
    ],
    [
        0.0,
        -282668133.0 / 205662961.0,
        2019193451.0 / 616988883.0,
        -1453857185.0 / 822651844.0,
    ],
    [
        0.0,
        40617522.0 / 29380423.0,
        -110615467.0 / 29380423.0,
        69997945.0 / 29380423.0,
    ],
];

#[derive(Debug, Clone)]
pub(crate) struct Step {
    pub t0: f64,
    pub h: f64,
    pub y0: State,
    k: [State; 7],
}

impl Step {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn eval(&self, t: f64) -> State {
        let s = (t - self.t0) / self.h;
        let pw = [s, s * s, s * s * s, s * s * s * s];
        let mut y = self.y0;
        for (ki, pi) in self.k.iter().zip(P.iter()) {
            let w = self.h * (pi[0] * pw[0] + pi[1] * pw[1] + pi[2] * pw[2] + pi[3] * pw[3]);
            y[0] += w * ki[0];
            y[1] += w * ki[1];
        }
        y
    }
}

/// Accepted steps of one integration, in integration order.
#[derive(Debug, Clone, Default)]
pub(crate) struct Trajectory {
    pub steps: Vec<Step>,
}

impl Trajectory {
    pub fn eval(&self, t: f64) -> State {
        let forward = self.steps.first().is_none_or(|s| s.h > 0.0);
        let idx = if forward {
            self.steps.partition_point(|s| s.t1() < t)
        } else {
            self.steps.partition_point(|s| s.t1() > t)
        };
        let idx = idx.min(self.steps.len() - 1);
        self.steps[idx].eval(t)
    }

    pub fn start(&self) -> f64 {
        self.steps[0].t0
    }
}

pub(crate) struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

pub(crate) enum Stop {
    Continue,
    Halt,
}

/// Integrate from `t0` in the direction of `sign` until `stop` halts or
/// `span` is exhausted. `stop` sees each accepted step and the new state.
pub(crate) fn integrate<F, S>(
    rhs: F,
    t0: f64,
    y0: State,
    sign: f64,
    span: f64,
    tol: &Tolerances,
    mut stop: S,
) -> Result<(Trajectory, State, bool)>
where
    F: Fn(State) -> State,
    S: FnMut(&Step, &State) -> Stop,
{
    let mut traj = Trajectory::default();
    let mut t = t0;
    let mut y = y0;
    let mut f0 = rhs(y);
    let scale0 = tol.atol + tol.rtol * y[0].abs().max(y[1].abs());
    let fnorm = f0[0].abs().max(f0[1].abs()).max(1e-300);
    let mut h = (0.01 * scale0 / fnorm).clamp(1e-6, 0.1) * sign;
    let t_end = t0 + sign * span;
    for _ in 0..tol.max_steps {
        if (t_end - t) * sign <= 0.0 {
            return Ok((traj, y, false));
        }
        if (t + h - t_end) * sign > 0.0 {
            h = t_end - t;
        }
        let mut k = [[0.0; 2]; 7];
        k[0] = f0;
        for i in 1..7 {
            let mut yi = y;
            for j in 0..i {
                yi[0] += h * A[i][j] * k[j][0];
                yi[1] += h * A[i][j] * k[j][1];
            }
            k[i] = rhs(yi);
        }
        // The last stage is evaluated at the fifth-order solution (FSAL).
        let mut y_new = y;
        for j in 0..6 {
            y_new[0] += h * A[6][j] * k[j][0];
            y_new[1] += h * A[6][j] * k[j][1];
        }
        let mut err2 = 0.0;
        for c in 0..2 {
            let e: f64 = (0..7).map(|i| E[i] * k[i][c]).sum::<f64>() * h;
            let sc = tol.atol + tol.rtol * y[c].abs().max(y_new[c].abs());
            err2 += (e / sc) * (e / sc);
        }
        let err = (err2 / 2.0).sqrt();
        if !err.is_finite() {
            return Err(Error::Tabulation(format!("non-finite step at t = {t}")));
        }
        if err <= 1.0 {
            let step = Step { t0: t, h, y0: y, k };
            let halt = matches!(stop(&step, &y_new), Stop::Halt);
            traj.steps.push(step);
            t += h;
            y = y_new;
            f0 = k[6];
            if halt {
                return Ok((traj, y, true));
            }
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        if h.abs() < 1e-14 {
            return Err(Error::Tabulation(format!("step size underflow at t = {t}")));
        }
    }
    Err(Error::Tabulation("step budget exhausted".into()))
}

/// Locate `t` in `[step.t0, step.t1]` where `component` of the continuous
/// output crosses `level`.
pub(crate) fn locate_crossing(step: &Step, component: usize, level: f64) -> f64 {
    let (mut a, mut b) = (step.t0, step.t1());
    let fa = step.eval(a)[component] - level;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let fm = step.eval(m)[component] - level;
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn continuous_output_reproduces_step_weights() {
        for i in 0..7 {
            let sum: f64 = P[i].iter().sum();
            let b = if i < 6 { A[6][i] } else { 0.0 };
            assert!((sum - b).abs() < 1e-15, "row {i}: {sum} vs {b}");
        }
        assert!((P[0].iter().sum::<f64>() - 35.0 / 384.0).abs() < 1e-15);
    }

    #[test]
    fn harmonic_oscillator() {
        let tol = Tolerances {
            rtol: 1e-12,
            atol: 1e-14,
            max_steps: 100_000,
        };
        let (traj, y, halted) =
            integrate(|y| [y[1], -y[0]], 0.0, [1.0, 0.0], 1.0, 10.0, &tol, |_, _| Stop::Continue).unwrap();
        assert!(!halted);
        assert!((y[0] - 10f64.cos()).abs() < 1e-10);
        for k in 0..1000 {
            let t = k as f64 * 0.01;
            let z = traj.eval(t);
            assert!((z[0] - t.cos()).abs() < 1e-10, "t={t}");
            assert!((z[1] + t.sin()).abs() < 1e-10);
        }
    }

    #[test]
    fn backward_integration_and_crossing() {
        let tol = Tolerances {
            rtol: 1e-12,
            atol: 1e-16,
            max_steps: 100_000,
        };
        let (traj, _, halted) = integrate(
            |y| [y[0], y[1]],
            0.0,
            [1.0, 1.0],
            -1.0,
            10.0,
            &tol,
            |_, y| if y[0] < 0.25 { Stop::Halt } else { Stop::Continue },
        )
        .unwrap();
        assert!(halted);
        let last = traj.steps.last().unwrap();
        let t = locate_crossing(last, 0, 0.25);
        assert!((t - 0.25f64.ln()).abs() < 1e-11);
        assert!((traj.eval(-0.5)[0] - (-0.5f64).exp()).abs() < 1e-12);
    }
}
