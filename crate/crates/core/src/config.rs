//! Run configuration shared by the harness and the command line.

use crate::error::{Error, Result};
use crate::geometry::{Front, FrontArrangement};
use crate::pde::{Grid, SolverConfig};
use crate::profile::ProfileOptions;
use crate::reaction::ReactionSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::FRAC_PI_4;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReactionConfig {
    /// Threshold of the cubic `u (u - theta) (1 - u)`.
    pub theta: f64,
    /// Two-column CSV `u,f`; replaces the cubic when set.
    pub table: Option<PathBuf>,
}

impl Default for ReactionConfig {
    fn default() -> Self {
        Self { theta: 0.25, table: None }
    }
}

impl ReactionConfig {
    pub fn build(&self) -> Result<ReactionSpec> {
        match &self.table {
            Some(path) => ReactionSpec::from_csv(path),
            None => ReactionSpec::cubic(self.theta),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArrangementConfig {
    pub dim: usize,
    pub fronts: Vec<Front>,
}

impl Default for ArrangementConfig {
    fn default() -> Self {
        Self {
            dim: 2,
            fronts: symmetric_pair(FRAC_PI_4, 0.0),
        }
    }
}

/// Two fronts `(+-cos a, sin a)` meeting on the `y` axis.
pub fn symmetric_pair(angle: f64, tau: f64) -> Vec<Front> {
    [1.0, -1.0]
        .into_iter()
        .map(|s| Front {
            nu: vec![s],
            theta: angle,
            tau,
        })
        .collect()
}

/// The symmetric pair capped by a third front moving straight along `y`.
pub fn capped_pair(angle: f64, cap_tau: f64) -> Vec<Front> {
    let mut f = symmetric_pair(angle, 0.0);
    f.push(Front {
        nu: vec![1.0],
        theta: std::f64::consts::FRAC_PI_2,
        tau: cap_tau,
    });
    f
}

/// Four equal-angle fronts in three dimensions.
pub fn square_pyramid(angle: f64, tau: f64) -> Vec<Front> {
    [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]
        .into_iter()
        .map(|nu| Front {
            nu: nu.to_vec(),
            theta: angle,
            tau,
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SurfaceConfig {
    /// `alpha` at which the surface ratios are sampled.
    pub calibration_alpha: f64,
    /// Samples per surface.
    pub calibration_samples: usize,
    /// Scaled half-width of the sampling box.
    pub calibration_half_width: f64,
}

impl Default for SurfaceConfig {
    fn default() -> Self {
        Self {
            calibration_alpha: 1e-3,
            calibration_samples: 4000,
            calibration_half_width: 10.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundsConfig {
    /// `eps = eps_fraction * eps0`.
    pub eps_fraction: f64,
    /// Shift size; defaults to `sigma`.
    pub delta: Option<f64>,
    /// `alpha = alpha_shrink * alpha(eps)`.
    pub alpha_shrink: f64,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        Self {
            eps_fraction: 0.5,
            delta: None,
            alpha_shrink: 0.5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub nodes: Vec<usize>,
    pub dx: f64,
    /// Lower corner; defaults to a box centred on the `x` axes with `y` from `y_low`.
    pub origin: Option<Vec<f64>>,
    pub y_low: f64,
    /// Time steps per unit time (`dt = 1 / steps_per_unit`).
    pub steps_per_unit: usize,
    /// Relative shrink of the discrete subsolution speed.
    pub speed_margin: f64,
    pub solver: SolverConfig,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            nodes: vec![512, 512],
            dx: 0.1,
            origin: None,
            y_low: -30.0,
            steps_per_unit: 800,
            speed_margin: 1e-5,
            solver: SolverConfig {
                cfl_fraction: 0.5,
                ..SolverConfig::default()
            },
        }
    }
}

impl GridConfig {
    pub fn build(&self) -> Result<Grid> {
        let origin = match &self.origin {
            Some(o) => o.clone(),
            None => {
                let mut o: Vec<f64> = self.nodes[..self.nodes.len().saturating_sub(1)]
                    .iter()
                    .map(|&n| -0.5 * (n - 1) as f64 * self.dx)
                    .collect();
                o.push(self.y_low);
                o
            }
        };
        Grid::new(self.nodes.clone(), self.dx, origin)
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.steps_per_unit as f64
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            dt: Some(self.dt()),
            ..self.solver.clone()
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbationConfig {
    pub amplitude: f64,
    pub radius: f64,
    /// Centre relative to the ridge point at `t = 0`.
    pub offset: Vec<f64>,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        Self {
            amplitude: 0.2,
            radius: 3.0,
            offset: vec![0.0, 2.0],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilityConfig {
    pub t_end: f64,
    pub checkpoint_every: f64,
    /// Checkpoints ignored by the monotone-decay check.
    pub burn_in: f64,
    /// Frame speed along `y`; the ridge speed `c_f / sin(theta)` when absent.
    pub frame_speed: Option<f64>,
    /// Length of the unperturbed construction that provides the reference.
    pub warmup: f64,
    pub perturbation: PerturbationConfig,
    pub two_sided: bool,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self {
            t_end: 85.0,
            checkpoint_every: 5.0,
            burn_in: 10.0,
            frame_speed: None,
            warmup: 20.0,
            perturbation: PerturbationConfig::default(),
            two_sided: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Leg lengths `n`: each leg runs from `-n` to `0`.
    pub start_times: Vec<f64>,
    pub residual_samples: usize,
    /// Physical time range for the shifted barriers.
    pub shift_time_max: f64,
    /// Half-width of the transition band sampled by residual probes.
    pub xi_range: f64,
    pub rho: f64,
    pub buckets: usize,
    /// Gap between the two snapshots used for `d/dt`.
    pub dt_probe: f64,
    pub dtau: Vec<f64>,
    pub tau_index: usize,
    pub stability: StabilityConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            start_times: vec![-5.0, -10.0, -20.0, -40.0],
            residual_samples: 10_000,
            shift_time_max: 60.0,
            xi_range: 15.0,
            rho: 5.0,
            buckets: 8,
            dt_probe: 0.25,
            dtau: vec![0.1, 0.05],
            tau_index: 0,
            stability: StabilityConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub reaction: ReactionConfig,
    pub arrangement: ArrangementConfig,
    pub profile: ProfileOptions,
    pub surface: SurfaceConfig,
    pub bounds: BoundsConfig,
    pub grid: GridConfig,
    pub experiment: ExperimentConfig,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            reaction: ReactionConfig::default(),
            arrangement: ArrangementConfig::default(),
            profile: ProfileOptions::default(),
            surface: SurfaceConfig::default(),
            bounds: BoundsConfig::default(),
            grid: GridConfig::default(),
            experiment: ExperimentConfig::default(),
            seed: 20240917,
            output: None,
        }
    }
}

impl RunConfig {
    /// Parse JSON; errors carry the path of the offending key.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn arrangement(&self, speed: f64) -> Result<FrontArrangement> {
        FrontArrangement::new(self.arrangement.dim, self.arrangement.fronts.clone(), speed)
    }

    /// Canonical JSON with every default filled in.
    pub fn resolved_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    /// SHA-256 of the canonical JSON; the output directory is excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        hex::encode(Sha256::digest(serde_json::to_vec(&c).expect("config serialises")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_default() {
        let c = RunConfig::from_json("{}").unwrap();
        assert_eq!(c.hash(), RunConfig::default().hash());
        let back = RunConfig::from_json(&c.resolved_json()).unwrap();
        assert_eq!(back.hash(), c.hash());
    }

    #[test]
    fn unknown_key_reports_path() {
        let e = RunConfig::from_json(r#"{"grid": {"solver": {"cfl": 0.3}}}"#).unwrap_err();
        match e {
            Error::Config { path, .. } => assert_eq!(path, "grid.solver.cfl"),
            e => panic!("{e:?}"),
        }
        let e = RunConfig::from_json(r#"{"bounds": {"eps_fraction": "x"}}"#).unwrap_err();
        assert!(matches!(e, Error::Config { ref path, .. } if path == "bounds.eps_fraction"), "{e:?}");
    }

    #[test]
    fn default_grid_is_centred() {
        let g = GridConfig::default().build().unwrap();
        assert!((g.origin()[0] + 25.55).abs() < 1e-12);
        assert_eq!(g.origin()[1], -30.0);
    }
}
