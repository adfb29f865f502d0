use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use toda_core::config::RunConfig;
use toda_core::runner;
use toda_core::Error;

/// Toda hierarchy experiments: Lax flows, cocycle checks, m-function sweeps.
#[derive(Debug, Parser)]
#[command(name = "toda", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate the Lax flow; writes flow.toml and drift.csv.
    Evolve(Common),
    /// Run the configured checks; writes manifest.toml.
    Verify(Common),
    /// Sweep m-functions over the z-grid; writes m_plus.csv and m_minus.csv.
    Mfunc(Common),
    /// Eigenvalues of the initial operator; writes spectrum.csv.
    Spectrum(Common),
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn load(&self) -> toda_core::Result<RunConfig> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        if let Some(dt) = self.dt {
            cfg.dt = dt;
        }
        if let Some(t) = self.t {
            cfg.t = t;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::FlowBreakdown { .. }
        | Error::Integrity { .. }
        | Error::StructureViolation { .. }
        | Error::Pole { .. }
        | Error::Degenerate(_) => 1,
        _ => 2,
    }
}

fn run(cmd: Command) -> toda_core::Result<bool> {
    match cmd {
        Command::Evolve(c) => {
            let cfg = c.load()?;
            let s = runner::cmd_evolve(&cfg)?;
            println!("t = {} after {} steps of {}", s.state.t, s.state.steps, s.state.dt);
            if let Some(d) = s.max_drift {
                println!("max eigenvalue drift {d:.3e}");
            }
            Ok(true)
        }
        Command::Verify(c) => {
            let cfg = c.load()?;
            let m = runner::cmd_verify(&cfg)?;
            print!("{}", m.to_toml());
            for r in &m.checks {
                let verdict = if r.pass { "PASS" } else { "FAIL" };
                eprintln!("{verdict} {} residual {:.3e} tol {:.0e}", r.check_name, r.residual, r.tolerance);
            }
            Ok(m.all_pass())
        }
        Command::Mfunc(c) => {
            let cfg = c.load()?;
            let sweep = runner::cmd_mfunc(&cfg)?;
            let ok = sweep.is_herglotz();
            if !ok {
                eprintln!("Herglotz property violated in the sweep");
            }
            Ok(ok)
        }
        Command::Spectrum(c) => {
            let cfg = c.load()?;
            let report = runner::cmd_spectrum(&cfg)?;
            print!("{}", toml::to_string(&report).expect("spectrum serializes"));
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
