//! `scardo` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 config error, 3 runtime error.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{load_config, RunConfig};
use crate::io::{write_trajectory, Trajectory};
use crate::meanfield::{
    compare_trajectories, integrate, parameter_sensitivity, IntegrateOptions, MeanFieldTrajectory,
    SensitivityTarget,
};
use crate::simulator::{replica_seed, run, RunSpec, SimTrajectory};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "scardo",
    version,
    about = "Opinion dynamics with heterogeneous agents and ranking gates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and validate a config
    Validate(CommonArgs),
    /// Run stochastic replicas and write their trajectories
    Simulate(CommonArgs),
    /// Integrate the mean-field system and write its trajectory
    Meanfield(CommonArgs),
    /// Run both and report the stochastic-vs-mean-field error
    Compare(CommonArgs),
    /// Finite-difference sensitivity of the final mean-field state
    Sensitivity(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Config file (same as --config)
    #[arg(value_name = "CONFIG")]
    config_path: Option<PathBuf>,
    /// Config file
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed, overriding run.seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding output.dir
    #[arg(long, value_name = "DIR")]
    output: Option<PathBuf>,
    /// Replica count, overriding run.replicas
    #[arg(long)]
    replicas: Option<usize>,
    /// Suppress progress messages
    #[arg(long)]
    quiet: bool,
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn runtime(message: impl ToString) -> Self {
        Failure {
            code: EXIT_RUNTIME,
            message: message.to_string(),
        }
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn cli_main<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    let (name, args) = match &command {
        Command::Validate(a) => ("validate", a),
        Command::Simulate(a) => ("simulate", a),
        Command::Meanfield(a) => ("meanfield", a),
        Command::Compare(a) => ("compare", a),
        Command::Sensitivity(a) => ("sensitivity", a),
    };
    let path = match (&args.config_path, &args.config) {
        (Some(p), None) | (None, Some(p)) => p.clone(),
        (Some(_), Some(_)) => {
            return Err(Failure {
                code: EXIT_USAGE,
                message: "give the config either positionally or with --config, not both".into(),
            })
        }
        (None, None) => {
            return Err(Failure {
                code: EXIT_USAGE,
                message: format!("{name}: a config file is required (--config PATH)"),
            })
        }
    };
    let mut cfg = load_config(&path).map_err(|e| Failure {
        code: EXIT_CONFIG,
        message: format!("{}: {e}", path.display()),
    })?;
    if let Some(seed) = args.seed {
        cfg.run.seed = seed;
    }
    if let Some(r) = args.replicas {
        if r == 0 {
            return Err(Failure {
                code: EXIT_USAGE,
                message: "--replicas must be positive".into(),
            });
        }
        cfg.run.replicas = r;
    }
    let out_dir = args
        .output
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let ctx = Context {
        cfg,
        out_dir,
        quiet: args.quiet,
    };
    match command {
        Command::Validate(_) => ctx.validate(),
        Command::Simulate(_) => ctx.simulate().map(|_| ()),
        Command::Meanfield(_) => ctx.meanfield().map(|_| ()),
        Command::Compare(_) => ctx.compare(),
        Command::Sensitivity(_) => ctx.sensitivity(),
    }
}

struct Context {
    cfg: RunConfig,
    out_dir: PathBuf,
    quiet: bool,
}

impl Context {
    fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", line.as_ref());
        }
    }

    fn prepare_output(&self) -> Result<(), Failure> {
        fs::create_dir_all(&self.out_dir)
            .map_err(|e| Failure::runtime(format!("{}: {e}", self.out_dir.display())))
    }

    fn write_json(&self, name: &str, value: &serde_json::Value) -> Result<PathBuf, Failure> {
        let path = self.out_dir.join(name);
        let text = serde_json::to_string_pretty(value).map_err(Failure::runtime)?;
        fs::write(&path, text + "\n")
            .map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))?;
        Ok(path)
    }

    fn validate(&self) -> Result<(), Failure> {
        let cfg = &self.cfg;
        self.say(format!("config ok: {}", cfg.space));
        self.say(format!(
            "agents {}, iterations {}, horizon {}, step {}, replicas {}",
            cfg.population.num_agents(),
            cfg.run.iterations,
            cfg.run.horizon,
            cfg.run.step,
            cfg.run.replicas
        ));
        self.say(format!("digest {}", cfg.digest));
        Ok(())
    }

    fn run_replicas(&self) -> Result<Vec<(u64, SimTrajectory)>, Failure> {
        let cfg = &self.cfg;
        (0..cfg.run.replicas as u64)
            .into_par_iter()
            .map(|r| {
                let seed = replica_seed(cfg.run.seed, r);
                let spec = RunSpec {
                    iterations: cfg.run.iterations,
                    sample_interval: cfg.run.sample_interval,
                    seed,
                };
                let mut traj = run(&cfg.tensor, &cfg.ranking, cfg.population.clone(), spec)
                    .map_err(Failure::runtime)?;
                traj.config_digest = Some(cfg.digest.clone());
                Ok((seed, traj))
            })
            .collect()
    }

    fn simulate(&self) -> Result<Vec<(u64, SimTrajectory)>, Failure> {
        self.prepare_output()?;
        let replicas = self.run_replicas()?;
        let mut manifest = Vec::new();
        for (r, (seed, traj)) in replicas.iter().enumerate() {
            let name = format!("sim_replica_{}.csv", r + 1);
            let path = self.out_dir.join(&name);
            write_trajectory::<f64>(
                Trajectory::Sim(traj),
                &self.cfg.space,
                &path,
                self.cfg.format,
            )
            .map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))?;
            self.say(format!("wrote {}", path.display()));
            manifest.push(json!({"replica": r + 1, "seed": seed, "file": name}));
        }
        self.write_json(
            "sim_manifest.json",
            &json!({"config_digest": self.cfg.digest, "master_seed": self.cfg.run.seed, "replicas": manifest}),
        )?;
        Ok(replicas)
    }

    fn options(&self) -> IntegrateOptions<f64> {
        let run = &self.cfg.run;
        let mut opts =
            IntegrateOptions::new(run.horizon, run.step).sample_stride(run.ode_sample_stride);
        if let Some(tol) = run.equilibrium_tolerance {
            opts = opts.stop_at_equilibrium(tol);
        }
        opts
    }

    fn meanfield(&self) -> Result<MeanFieldTrajectory<f64>, Failure> {
        self.prepare_output()?;
        let cfg = &self.cfg;
        let traj = integrate(
            &cfg.initial_fractions,
            &cfg.tensor,
            &cfg.ranking,
            self.options(),
        )
        .map_err(Failure::runtime)?;
        let path = self.out_dir.join("meanfield.csv");
        write_trajectory(Trajectory::MeanField(&traj), &cfg.space, &path, cfg.format)
            .map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))?;
        self.say(format!("wrote {}", path.display()));
        self.say(format!(
            "max |sum y - 1| = {:e}, min y = {:e}",
            traj.max_sum_deviation, traj.min_fraction
        ));
        Ok(traj)
    }

    fn compare(&self) -> Result<(), Failure> {
        let mf = self.meanfield()?;
        let replicas = self.simulate()?;
        let mut rows = Vec::new();
        let mut worst: f64 = 0.0;
        for (r, (seed, traj)) in replicas.iter().enumerate() {
            let report =
                compare_trajectories(traj, &mf, &self.cfg.space).map_err(Failure::runtime)?;
            worst = worst.max(report.sup_error);
            rows.push(json!({"replica": r + 1, "seed": seed, "report": report}));
        }
        let path = self.write_json(
            "comparison.json",
            &json!({
                "config_digest": self.cfg.digest,
                "agents": self.cfg.population.num_agents(),
                "horizon": self.cfg.run.horizon,
                "sup_error": worst,
                "replicas": rows,
            }),
        )?;
        self.say(format!("sup_error = {worst:e}"));
        self.say(format!("wrote {}", path.display()));
        Ok(())
    }

    fn sensitivity(&self) -> Result<(), Failure> {
        let cfg = &self.cfg;
        let Some(settings) = &cfg.sensitivity else {
            return Err(Failure {
                code: EXIT_CONFIG,
                message: "config has no `sensitivity` section".into(),
            });
        };
        self.prepare_output()?;
        let s = parameter_sensitivity(
            &cfg.initial_fractions,
            &cfg.tensor,
            &cfg.ranking,
            self.options(),
            &settings.target,
            settings.epsilon,
        )
        .map_err(Failure::runtime)?;
        let target = match &settings.target {
            SensitivityTarget::TensorEntry { s, l, k } => {
                json!({"kind": "tensor", "s": s + 1, "l": l + 1, "k": k + 1})
            }
            SensitivityTarget::RankingEntry { s, l } => {
                json!({"kind": "ranking", "s": s + 1, "l": l + 1})
            }
            SensitivityTarget::InitialDirection(d) => json!({"kind": "initial", "direction": d}),
        };
        let path = self.write_json(
            "sensitivity.json",
            &json!({
                "config_digest": cfg.digest,
                "target": target,
                "epsilon": settings.epsilon,
                "horizon": cfg.run.horizon,
                "step": cfg.run.step,
                "sensitivity": s,
            }),
        )?;
        self.say(format!("wrote {}", path.display()));
        Ok(())
    }
}
