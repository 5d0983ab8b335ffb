use clap::{Args, Parser, Subcommand};
use front_forge::config::RunConfig;
use front_forge::harness::{diff, run_suite, surface_identity_checks, Context, Suite, VerificationReport};
use front_forge::pde::{solve_cauchy, DirSink, NullSink};
use front_forge::{solve_profile, Error};
use serde_json::json;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Parser)]
#[command(name = "front-forge", version, about = "Entire solutions built from polytopes of planar fronts")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Overrides the seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory (default: the config's `output`, then `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve and tabulate the planar front profile.
    Profile {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides `reaction.theta`.
        #[arg(long)]
        theta: Option<f64>,
    },
    /// Check the implicit surface identities of the arrangement.
    SurfaceCheck {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides `experiment.residual_samples`.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Evolve the max of fronts from t0 to t1 on the configured grid.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        t0: f64,
        #[arg(long, allow_hyphen_values = true)]
        t1: f64,
    },
    /// Run a verification suite and write its report.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        suite: String,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Exit with status 1 when any check fails.
        #[arg(long)]
        strict: bool,
    },
    /// Compare two reports; exits 1 when any check changed verdict.
    ReportDiff { a: PathBuf, b: PathBuf },
}

enum Failure {
    Config(String),
    Numerical(Error),
    Other(String),
    Flagged,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. }
            | Error::Unbalanced(_)
            | Error::InvalidReaction(_)
            | Error::NanInput(_)
            | Error::InvalidArrangement(_)
            | Error::NoRidges
            | Error::Inadmissible(_)
            | Error::InvalidGrid(_) => Failure::Config(e.to_string()),
            e if e.is_numerical() => Failure::Numerical(e),
            e => Failure::Other(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Flagged) => ExitCode::from(1),
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("error: {e}");
            if let Error::BlowUp { snapshot: Some(p), .. } = &e {
                eprintln!("diagnostic snapshot: {}", p.display());
            }
            ExitCode::from(3)
        }
        Err(Failure::Other(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

fn load_config(path: Option<&Path>, common: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.output = Some(o.clone());
    }
    Ok(cfg)
}

/// Collects written files for the manifest.
struct Outputs {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Outputs {
    fn new(cfg: &RunConfig) -> Result<Self, Failure> {
        let dir = cfg.output.clone().unwrap_or_else(|| PathBuf::from("out"));
        std::fs::create_dir_all(&dir)?;
        let mut o = Self { dir, files: Vec::new() };
        o.write("resolved_config.json", cfg.resolved_json().as_bytes())?;
        Ok(o)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, Failure> {
        let p = self.path(name);
        std::fs::write(&p, bytes)?;
        self.files.push(p.clone());
        Ok(p)
    }

    fn manifest(self, command: &str, cfg: &RunConfig) -> Result<(), Failure> {
        let mut files = Vec::new();
        for p in &self.files {
            let bytes = std::fs::read(p)?;
            let name = p.strip_prefix(&self.dir).unwrap_or(p);
            files.push(json!({
                "path": name.to_string_lossy(),
                "bytes": bytes.len(),
                "sha256": hex::encode(Sha256::digest(&bytes)),
            }));
        }
        let body = json!({
            "command": command,
            "config_hash": cfg.hash(),
            "seed": cfg.seed,
            "crate_version": env!("CARGO_PKG_VERSION"),
            "files": files,
        });
        let content_hash = hex::encode(Sha256::digest(serde_json::to_vec(&body).expect("manifest serialises")));
        let mut full = body;
        full["content_hash"] = json!(content_hash);
        // Not covered by the content hash.
        full["timestamp"] = json!(SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0));
        let text = serde_json::to_string_pretty(&full).expect("manifest serialises");
        std::fs::write(self.dir.join("manifest.json"), text)?;
        Ok(())
    }
}

fn write_report(out: &mut Outputs, report: &VerificationReport, path: Option<&Path>) -> Result<(), Failure> {
    let text = report.to_json();
    match path {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(p, &text)?;
            out.files.push(p.to_path_buf());
        }
        None => {
            out.write("report.json", text.as_bytes())?;
        }
    }
    for c in &report.checks {
        println!("{} {}", if c.pass { "pass" } else { "FAIL" }, c.name);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let common = &cli.common;
    match cli.cmd {
        Cmd::Profile { config, theta } => {
            let mut cfg = load_config(config.as_deref(), common)?;
            if let Some(t) = theta {
                cfg.reaction.theta = t;
            }
            let spec = cfg.reaction.build()?;
            let prof = solve_profile(&spec, &cfg.profile)?;
            let mut out = Outputs::new(&cfg)?;
            let mut bin = Vec::new();
            prof.write_bin(&mut bin)?;
            out.write("profile.bin", &bin)?;
            let summary = json!({
                "theta": spec.theta(),
                "c_f": prof.speed(),
                "lambda_plus": prof.lambda_plus(),
                "lambda_minus": prof.lambda_minus(),
                "xi_max": prof.xi_max(),
                "dxi": prof.dxi(),
                "nodes": prof.nodes(),
                "junction_mismatch": prof.junction_mismatch(),
                "ode_residual_max": prof.ode_residual_max(&spec),
            });
            out.write("profile.json", serde_json::to_string_pretty(&summary).expect("json").as_bytes())?;
            println!("c_f = {:.10}", prof.speed());
            out.manifest("profile", &cfg)
        }
        Cmd::SurfaceCheck { config, samples, report } => {
            let cfg = load_config(config.as_deref(), common)?;
            let ctx = Context::new(cfg)?;
            let n = samples.unwrap_or(ctx.config.experiment.residual_samples);
            let checks = surface_identity_checks(&ctx.arr, n, 10.0, ctx.config.seed)?;
            let rep = ctx.report("surface", checks, BTreeMap::new());
            let mut out = Outputs::new(&ctx.config)?;
            write_report(&mut out, &rep, report.as_deref())?;
            out.manifest("surface-check", &ctx.config)
        }
        Cmd::Simulate { config, t0, t1 } => {
            let cfg = load_config(config.as_deref(), common)?;
            let ctx = Context::new(cfg)?;
            let mut out = Outputs::new(&ctx.config)?;
            let grid = ctx.config.grid.build()?;
            let mut solver = ctx.config.grid.solver();
            solver.diagnostic_dir = Some(out.dir.clone());
            let lower = ctx.lower();
            let (field, stats) = if solver.snapshot_every > 0 {
                let mut sink = DirSink::new(&out.path("snapshots"))?;
                let r = solve_cauchy(&ctx.spec, grid, &lower, t0, t1, &solver, &lower, &mut sink)?;
                out.files.extend(sink.files.iter().cloned());
                r
            } else {
                solve_cauchy(&ctx.spec, grid, &lower, t0, t1, &solver, &lower, &mut NullSink)?
            };
            let p = out.path("final.ffg");
            field.save(&p)?;
            out.files.push(p);
            let s = json!({
                "steps": stats.steps,
                "dt": stats.dt,
                "clamp_violations": stats.clamp_violations,
                "max_cg_iterations": stats.max_cg_iterations,
            });
            out.write("stats.json", serde_json::to_string_pretty(&s).expect("json").as_bytes())?;
            println!("{} steps of {:.3e} to t = {}", stats.steps, stats.dt, field.time);
            out.manifest("simulate", &ctx.config)
        }
        Cmd::Verify { config, suite, report, strict } => {
            let suite: Suite = suite.parse()?;
            let cfg = load_config(config.as_deref(), common)?;
            let ctx = Context::new(cfg)?;
            let rep = run_suite(&ctx, suite)?;
            let mut out = Outputs::new(&ctx.config)?;
            write_report(&mut out, &rep, report.as_deref())?;
            out.manifest("verify", &ctx.config)?;
            if strict && !rep.passed() {
                return Err(Failure::Flagged);
            }
            Ok(())
        }
        Cmd::ReportDiff { a, b } => {
            let read = |p: &Path| -> Result<VerificationReport, Failure> {
                let text = std::fs::read_to_string(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))
            };
            let lines = diff(&read(&a)?, &read(&b)?);
            for l in &lines {
                println!("{l}");
            }
            if lines.is_empty() {
                Ok(())
            } else {
                Err(Failure::Flagged)
            }
        }
    }
}
