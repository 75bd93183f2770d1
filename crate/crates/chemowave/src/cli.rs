//! Command-line front end.
//!
//! Exit codes are a stable contract: 0 success, 1 hypothesis infeasible,
//! 2 non-convergence or a failed verification criterion, 3 configuration
//! error.

use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{InitialData, RunConfig};
use crate::constants::{self, Kernel};
use crate::grid::{Field, Grid1D};
use crate::params::ModelParams;
use crate::report::fmt_float;
use crate::sim::{self, SimConfig};
use crate::speed;
use crate::verify;
use crate::wave::{self, IterationConfig, WaveError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 1;
pub const EXIT_NO_CONVERGENCE: i32 = 2;
pub const EXIT_BAD_CONFIG: i32 = 3;

#[derive(Parser)]
#[command(
    name = "chemowave",
    about = "Traveling waves and front dynamics of a 1-D attraction-repulsion chemotaxis system",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Path to the key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV and report files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Wave decay exponent (overrides [wave] mu).
    #[arg(long, global = true)]
    mu: Option<f64>,
    /// Wave speed (overrides [wave] c; converted to an exponent).
    #[arg(long, global = true)]
    c: Option<f64>,
    /// Window scan resolution (overrides [window] resolution).
    #[arg(long, global = true)]
    resolution: Option<usize>,
    /// Window endpoint tolerance (overrides [window] tol).
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the kernel constants and, when an exponent is given, their
    /// rate-weighted companions.
    Constants,
    /// Check the feasibility hypothesis and print the speed window.
    Window,
    /// Construct a traveling wave profile.
    Wave,
    /// Run a time-dependent simulation with front tracking.
    Simulate,
    /// Window behaviour as the sensitivities shrink to zero.
    Limits,
    /// Run the verification suite; one pass/fail line per criterion.
    Verify,
}

/// Parses arguments, runs the selected command, and returns the exit code.
pub fn run() -> i32 {
    // Respect the documented thread cap before any parallel region spins up.
    if let Ok(raw) = std::env::var("CHEMOWAVE_THREADS") {
        if let Ok(n) = raw.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_BAD_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };

    match dispatch(&cli) {
        Ok(code) => code,
        Err(CmdError::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            EXIT_BAD_CONFIG
        }
        Err(CmdError::Infeasible(msg)) => {
            eprintln!("hypothesis infeasible: {msg}");
            EXIT_INFEASIBLE
        }
        Err(CmdError::NoConvergence(msg)) => {
            eprintln!("did not converge: {msg}");
            EXIT_NO_CONVERGENCE
        }
    }
}

enum CmdError {
    Config(String),
    Infeasible(String),
    NoConvergence(String),
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError::Config(format!("io: {e}"))
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, CmdError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CmdError::Config("--config <path> is required".to_string()))?;
    RunConfig::from_path(path).map_err(|e| CmdError::Config(e.to_string()))
}

fn out_dir(cli: &Cli, cfg: Option<&RunConfig>) -> Result<PathBuf, CmdError> {
    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.and_then(|c| c.out_dir.clone().map(PathBuf::from)))
        .unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn resolve_mu(cli: &Cli, cfg: &RunConfig) -> Result<f64, CmdError> {
    let p = &cfg.params;
    if let Some(mu) = cli.mu.or(cfg.wave.mu) {
        return Ok(mu);
    }
    if let Some(c) = cli.c.or(cfg.wave.c) {
        return speed::mu_of_c(p.a, c).map_err(|e| CmdError::Config(e.to_string()));
    }
    Err(CmdError::Config(
        "a wave exponent (--mu / [wave] mu) or speed (--c / [wave] c) is required".to_string(),
    ))
}

fn dispatch(cli: &Cli) -> Result<i32, CmdError> {
    match cli.command {
        Command::Constants => cmd_constants(cli),
        Command::Window => cmd_window(cli),
        Command::Wave => cmd_wave(cli),
        Command::Simulate => cmd_simulate(cli),
        Command::Limits => cmd_limits(cli),
        Command::Verify => cmd_verify(cli),
    }
}

fn cmd_constants(cli: &Cli) -> Result<i32, CmdError> {
    let cfg = load_config(cli)?;
    let dir = out_dir(cli, Some(&cfg))?;
    let p = &cfg.params;
    let kc = constants::kernel_constants(p);

    // Identity residual from the independent quadrature path.
    let q_bar = constants::quadrature_oracle(p, Kernel::MBar, 0.0, 1e-12)
        .map_err(|e| CmdError::Config(e.to_string()))?;
    let q_under = constants::quadrature_oracle(p, Kernel::MUnder, 0.0, 1e-12)
        .map_err(|e| CmdError::Config(e.to_string()))?;
    let identity_residual = q_bar - q_under - p.signal_imbalance();

    let mut pairs = vec![
        ("m_bar", fmt_float(kc.m_bar)),
        ("m_under", fmt_float(kc.m_under)),
        ("k", fmt_float(kc.k)),
        (
            "crossing",
            kc.crossing.map_or("absent".to_string(), fmt_float),
        ),
        ("identity_residual", fmt_float(identity_residual)),
    ];

    let mu = match cli.mu.or(cfg.wave.mu) {
        Some(mu) => Some(mu),
        None => match cli.c.or(cfg.wave.c) {
            Some(c) => {
                Some(speed::mu_of_c(p.a, c).map_err(|e| CmdError::Config(e.to_string()))?)
            }
            None => None,
        },
    };
    let rc = match mu {
        Some(mu) => Some(
            constants::rate_constants(p, mu).map_err(|e| CmdError::Config(e.to_string()))?,
        ),
        None => None,
    };
    if let Some(rc) = &rc {
        pairs.push(("mu", fmt_float(rc.mu)));
        pairs.push(("r", fmt_float(rc.r)));
        pairs.push(("m_bar_tm", fmt_float(rc.m_bar_tm)));
        pairs.push(("m_under_tm", fmt_float(rc.m_under_tm)));
        pairs.push(("k_tm", fmt_float(rc.k_tm)));
    }
    print!("{}", crate::report::key_value_block(&pairs));

    let mut csv = String::from("m_bar,m_under,k,identity_residual,mu,r,m_bar_tm,m_under_tm,k_tm\n");
    let tail = match &rc {
        Some(rc) => format!(
            "{},{},{},{},{}",
            fmt_float(rc.mu),
            fmt_float(rc.r),
            fmt_float(rc.m_bar_tm),
            fmt_float(rc.m_under_tm),
            fmt_float(rc.k_tm)
        ),
        None => ",,,,".to_string(),
    };
    csv.push_str(&format!(
        "{},{},{},{},{tail}\n",
        fmt_float(kc.m_bar),
        fmt_float(kc.m_under),
        fmt_float(kc.k),
        fmt_float(identity_residual)
    ));
    fs::write(dir.join("constants.csv"), csv)?;
    Ok(EXIT_OK)
}

fn cmd_window(cli: &Cli) -> Result<i32, CmdError> {
    let cfg = load_config(cli)?;
    let dir = out_dir(cli, Some(&cfg))?;
    let p = &cfg.params;
    let n = cli.resolution.unwrap_or(cfg.window.resolution);
    let tol = cli.tol.unwrap_or(cfg.window.tol);

    let report = speed::hypothesis_h(p, n).map_err(|e| CmdError::Config(e.to_string()))?;
    match &report.witness {
        Some((mu, _f)) => println!(
            "hypothesis holds: min f = {} at mu = {} (b = {})",
            fmt_float(report.min_f),
            fmt_float(*mu),
            fmt_float(p.b)
        ),
        None => {
            println!(
                "hypothesis fails: min f = {} >= b = {}",
                fmt_float(report.min_f),
                fmt_float(p.b)
            );
            return Err(CmdError::Infeasible(format!(
                "min f = {} at resolution {n}",
                fmt_float(report.min_f)
            )));
        }
    }

    let window = speed::wave_window(p, n, tol).map_err(|e| CmdError::Infeasible(e.to_string()))?;
    println!("{}", speed::WaveWindow::CSV_HEADER);
    println!("{}", window.csv_row());
    fs::write(
        dir.join("window.csv"),
        format!("{}\n{}\n", speed::WaveWindow::CSV_HEADER, window.csv_row()),
    )?;
    Ok(EXIT_OK)
}

fn wave_config(cli: &Cli, cfg: &RunConfig, mu: f64) -> Result<IterationConfig, CmdError> {
    let p = &cfg.params;
    let n = cfg.wave.n.unwrap_or(16385);
    let mut it = IterationConfig::auto(p, mu, n).map_err(|e| match e {
        WaveError::Hypothesis { .. } => CmdError::Infeasible(e.to_string()),
        other => CmdError::Config(other.to_string()),
    })?;
    if let Some(grid) = cfg.grid {
        it.grid = grid;
        it.delta = grid.h();
    }
    if let Some(dt) = cfg.wave.dt {
        if dt > 0.0 {
            it.dt = dt;
        }
    }
    if let Some(v) = cfg.wave.inner_tol {
        it.inner_tol = v;
    }
    if let Some(v) = cli.tol.or(cfg.wave.outer_tol) {
        it.outer_tol = v;
    }
    if let Some(v) = cfg.wave.max_inner_steps {
        it.max_inner_steps = v;
    }
    if let Some(v) = cfg.wave.max_outer_iters {
        it.max_outer_iters = v;
    }
    Ok(it)
}

fn cmd_wave(cli: &Cli) -> Result<i32, CmdError> {
    let cfg = load_config(cli)?;
    let dir = out_dir(cli, Some(&cfg))?;
    let mu = resolve_mu(cli, &cfg)?;
    let it = wave_config(cli, &cfg, mu)?;

    let outcome = wave::outer_fixed_point(&cfg.params, &it).map_err(|e| match e {
        WaveError::Hypothesis { .. } | WaveError::Speed(_) => CmdError::Infeasible(e.to_string()),
        WaveError::NonConvergence { .. }
        | WaveError::StepLimit { .. }
        | WaveError::PostCheck { .. }
        | WaveError::MonotonicityViolation { .. }
        | WaveError::EnvelopeViolation { .. } => CmdError::NoConvergence(e.to_string()),
        other => CmdError::Config(other.to_string()),
    })?;

    let prof = &outcome.profile;
    let mut buf = Vec::new();
    prof.write_csv(&mut buf)?;
    fs::write(dir.join("profile.csv"), &buf)?;
    print!(
        "{}",
        crate::report::key_value_block(&[
            ("mu", fmt_float(prof.mu)),
            ("c", fmt_float(prof.c)),
            ("residual", fmt_float(prof.residual)),
            ("plateau", fmt_float(prof.plateau)),
            ("decay_error", fmt_float(prof.decay_error)),
            ("outer_iters", outcome.outer_iters.to_string()),
            ("star_delta", fmt_float(outcome.star_delta)),
        ])
    );
    Ok(EXIT_OK)
}

fn initial_field(p: &ModelParams, grid: Grid1D, initial: &InitialData) -> Result<Field, CmdError> {
    let eq = p.a / p.b;
    let field = match initial {
        InitialData::Equilibrium => Field::constant(grid, eq),
        InitialData::Constant(v) => Field::constant(grid, *v),
        InitialData::Ramp { height, x0, cells } => sim::ramp_initial(grid, *height, *x0, *cells),
        InitialData::Perturbed { amplitude } => {
            Field::from_fn(grid, |x| eq * (1.0 + amplitude * (0.42 * x).sin()))
        }
    };
    field.map_err(|e| CmdError::Config(e.to_string()))
}

fn cmd_simulate(cli: &Cli) -> Result<i32, CmdError> {
    let cfg = load_config(cli)?;
    let dir = out_dir(cli, Some(&cfg))?;
    let p = &cfg.params;
    let sim_sec = cfg
        .sim
        .as_ref()
        .ok_or_else(|| CmdError::Config("simulate needs a [sim] section".to_string()))?;
    let grid = cfg
        .grid
        .ok_or_else(|| CmdError::Config("simulate needs a [grid] section".to_string()))?;

    let sc = SimConfig {
        grid,
        dt: sim_sec.dt,
        t_end: sim_sec.t_end,
        frame_speed: sim_sec.frame_speed,
        chem_mode: sim_sec.chem_mode,
        boundary: RunConfig::sim_boundary(sim_sec),
    };
    let u0 = initial_field(p, grid, &sim_sec.initial)?;
    let level = sim_sec.front_level.unwrap_or(p.a / (2.0 * p.b));
    let run = sim::run_with_tracking(p, u0, &sc, level, sim_sec.sample_every)
        .map_err(|e| CmdError::NoConvergence(e.to_string()))?;

    // Long-format trajectory.
    let mut traj = String::from("t,x,u,v1,v2\n");
    for snap in &run.history {
        for (i, x) in snap.u.grid().nodes().enumerate() {
            traj.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt_float(snap.t),
                fmt_float(x),
                fmt_float(snap.u.values()[i]),
                fmt_float(snap.v1.values()[i]),
                fmt_float(snap.v2.values()[i]),
            ));
        }
    }
    fs::write(dir.join("trajectory.csv"), traj)?;

    let mut track_csv = Vec::new();
    run.track.write_csv(&mut track_csv)?;
    fs::write(dir.join("front.csv"), &track_csv)?;

    let mut pairs = vec![
        ("t_end", fmt_float(run.state.t)),
        ("max_u", fmt_float(run.state.u.max_abs())),
        ("clipped_mass", fmt_float(run.state.clipped_mass)),
        ("front_samples", run.track.samples.len().to_string()),
    ];
    if let Ok(est) = sim::measure_front_speed(&run.track) {
        pairs.push(("front_speed", fmt_float(est.speed)));
        pairs.push(("front_confidence", fmt_float(est.confidence)));
    }
    let report = crate::report::key_value_block(&pairs);
    print!("{report}");
    fs::write(dir.join("report.txt"), report)?;
    Ok(EXIT_OK)
}

fn cmd_limits(cli: &Cli) -> Result<i32, CmdError> {
    let cfg = load_config(cli)?;
    let dir = out_dir(cli, Some(&cfg))?;
    let n = cli.resolution.unwrap_or(cfg.window.resolution);
    let tol = cli.tol.unwrap_or(cfg.window.tol);
    let rows = speed::chi_limit_study(&cfg.params, &cfg.scales, n, tol);

    let mut csv = format!("scale,{}\n", speed::WaveWindow::CSV_HEADER);
    let mut any_err = None;
    for (scale, row) in &rows {
        match row {
            Ok(w) => csv.push_str(&format!("{},{}\n", fmt_float(*scale), w.csv_row())),
            Err(e) => {
                csv.push_str(&format!("{},infeasible,,,,\n", fmt_float(*scale)));
                any_err = Some(e.to_string());
            }
        }
    }
    print!("{csv}");
    fs::write(dir.join("limits.csv"), csv)?;
    match any_err {
        Some(e) => Err(CmdError::Infeasible(e)),
        None => Ok(EXIT_OK),
    }
}

fn cmd_verify(cli: &Cli) -> Result<i32, CmdError> {
    let dir = out_dir(cli, None)?;
    let results = verify::run_all();
    let mut all_ok = true;
    let mut log = String::new();
    for r in &results {
        let line = r.line();
        println!("{line}");
        log.push_str(&line);
        log.push('\n');
        all_ok &= r.passed;
    }
    fs::write(dir.join("verify.txt"), log)?;
    if all_ok {
        Ok(EXIT_OK)
    } else {
        Err(CmdError::NoConvergence(
            "at least one verification criterion failed".to_string(),
        ))
    }
}
