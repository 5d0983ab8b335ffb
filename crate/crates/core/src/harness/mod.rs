//! Numerical experiments: the entire-solution construction and the checks run on it.

mod construct;
pub mod report;
mod residual;
mod stability;

pub use construct::{
    asymptotics_checks, construct_entire, construction_checks, monotonicity_checks, planar_floor, pyramid_checks,
    tau_checks, vfront_checks, Construction, Leg,
};
pub use report::{diff, Check, Instance, Provenance, Relation, VerificationReport};
pub use residual::{residual_checks, surface_identity_checks, ResidualStats};
pub use stability::{stability_checks, StabilityTrace};

use crate::bounds::{admissible_params, calibrate_constant, BoundParams, CalibrationRatios, LowerBarrier, SurfaceBarrier};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::geometry::FrontArrangement;
use crate::profile::{solve_profile, FrontProfile};
use crate::reaction::{ReactionKind, ReactionSpec};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::str::FromStr;

/// Everything derived from a [`RunConfig`] before any PDE run.
pub struct Context {
    pub config: RunConfig,
    pub spec: ReactionSpec,
    pub profile: FrontProfile,
    pub arr: FrontArrangement,
    pub calibration: CalibrationRatios,
    pub params: BoundParams,
}

impl Context {
    pub fn new(config: RunConfig) -> Result<Self> {
        let spec = config.reaction.build()?;
        let profile = solve_profile(&spec, &config.profile)?;
        let arr = config.arrangement(profile.speed())?;
        let s = &config.surface;
        let calibration = calibrate_constant(
            &arr,
            s.calibration_alpha,
            s.calibration_samples,
            s.calibration_half_width,
            config.seed,
        )?;
        // A single front has h = 0 and no ratios; any positive constant will do.
        let c_emp = if arr.len() < 2 { 1.0 } else { calibration.c_emp() };
        let b = &config.bounds;
        let params = admissible_params(
            &spec,
            &profile,
            &arr,
            c_emp,
            b.eps_fraction,
            b.delta.unwrap_or(spec.sigma()),
            b.alpha_shrink,
        )?;
        Ok(Self {
            config,
            spec,
            profile,
            arr,
            calibration,
            params,
        })
    }

    pub fn lower(&self) -> LowerBarrier<'_> {
        LowerBarrier::new(&self.arr, &self.profile)
    }

    pub fn upper(&self) -> Result<SurfaceBarrier<'_>> {
        if self.arr.len() < 2 {
            SurfaceBarrier::upper_unchecked(&self.arr, &self.profile, self.params.epsilon, self.params.alpha)
        } else {
            SurfaceBarrier::upper(&self.arr, &self.profile, &self.params)
        }
    }

    pub fn instance(&self) -> Instance {
        let reaction = match self.spec.kind() {
            ReactionKind::Cubic => format!("cubic theta={}", self.spec.theta()),
            ReactionKind::Tabulated(_) => format!("tabulated theta={}", self.spec.theta()),
        };
        Instance {
            dim: self.arr.dim(),
            fronts: self.arr.fronts().to_vec(),
            reaction,
            speed: self.profile.speed(),
        }
    }

    pub fn constants(&self) -> BTreeMap<String, f64> {
        let p = &self.params;
        [
            ("c_f", self.profile.speed()),
            ("C_emp", p.c_emp),
            ("eps0", p.epsilon0),
            ("eps", p.epsilon),
            ("alpha", p.alpha),
            ("alpha_sub", p.alpha_sub),
            ("omega", p.omega),
            ("mu", p.mu),
            ("delta", p.delta),
            ("k_shift", p.k_shift),
            ("sigma", self.spec.sigma()),
            ("lipschitz", self.spec.lipschitz()),
            ("k_min", p.inputs.k),
            ("M", p.inputs.m_bound),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }

    pub fn report(&self, suite: &str, checks: Vec<Check>, extra: BTreeMap<String, f64>) -> VerificationReport {
        let mut constants = self.constants();
        constants.extend(extra);
        VerificationReport {
            suite: suite.into(),
            instance: self.instance(),
            checks,
            constants,
            provenance: Provenance::of(&self.config),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Super,
    Asym,
    Mono,
    Stability,
    Vfront,
    Pyramid,
    Tau,
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "super" => Suite::Super,
            "asym" => Suite::Asym,
            "mono" => Suite::Mono,
            "stability" => Suite::Stability,
            "vfront" => Suite::Vfront,
            "pyramid" => Suite::Pyramid,
            "tau" => Suite::Tau,
            _ => {
                return Err(Error::Config {
                    path: "suite".into(),
                    message: format!("unknown suite `{s}`"),
                })
            }
        })
    }
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Super => "super",
            Suite::Asym => "asym",
            Suite::Mono => "mono",
            Suite::Stability => "stability",
            Suite::Vfront => "vfront",
            Suite::Pyramid => "pyramid",
            Suite::Tau => "tau",
        }
    }
}

/// Run one suite end to end.
pub fn run_suite(ctx: &Context, suite: Suite) -> Result<VerificationReport> {
    let mut extra = BTreeMap::new();
    let checks = match suite {
        Suite::Super => {
            let mut c = surface_identity_checks(&ctx.arr, ctx.config.experiment.residual_samples, 10.0, ctx.config.seed)?;
            c.extend(residual_checks(ctx)?);
            c
        }
        Suite::Asym => {
            let con = construct_entire(ctx)?;
            let floor = planar_floor(ctx, &con)?;
            extra.insert("floor".into(), floor);
            let mut c = construction_checks(ctx, &con)?;
            c.extend(asymptotics_checks(ctx, &con, floor)?);
            c
        }
        Suite::Mono => {
            let con = construct_entire(ctx)?;
            extra.insert("sub_speed".into(), con.sub_speed);
            monotonicity_checks(ctx, &con)?
        }
        Suite::Vfront => {
            let con = construct_entire(ctx)?;
            vfront_checks(ctx, &con)?
        }
        Suite::Pyramid => {
            let con = construct_entire(ctx)?;
            pyramid_checks(ctx, &con)?
        }
        Suite::Tau => tau_checks(ctx)?,
        Suite::Stability => {
            let (checks, traces) = stability_checks(ctx)?;
            for (k, t) in traces.iter().enumerate() {
                extra.insert(format!("D0_{k}"), t.distances[0]);
                extra.insert(format!("D_end_{k}"), *t.distances.last().unwrap());
            }
            checks
        }
    };
    Ok(ctx.report(suite.name(), checks, extra))
}
