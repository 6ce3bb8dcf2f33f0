//! Command driver behind the `qa-kinetics` binary.
//!
//! Each subcommand resolves a [`RunConfig`] from flags, an optional
//! `key = value` config file and per-command defaults (flags win), runs one
//! computation, writes its CSV into `--out` and prints a key=value summary.

use std::collections::HashMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::annealing_analysis::{
    default_scaled_grid, glauber_time, integrate_density, kz_comparison, optimum, scaled_curves, solve_crossover,
    solve_g0, RateModel, RateSource,
};
use crate::boltzmann_solver::{evolve, EvolveOptions, PopulationState, Schedule};
use crate::chain_model::{semiclassical_density, thermal_density_exact, ModelParams, MomentumGrid};
use crate::output::{self, write_csv, Report};
use crate::spectrum_renorm::{band_shifts, ising_renorm_factor, linear_spectrum_fit, long_wavelength_shift};
use crate::stochastic_lab::{kmc_time_dependent, log_times, KmcSpec, RateScheduleHooks};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Annealing rate of the reference figure.
pub const FIG1_V: f64 = 2.85e-7;

const UNITS: &str = "Reduced units: hbar = J = 1. Energies and fields in units of J \
(fermion energies eps_k in units of 2J), times in hbar/J, rates in J/hbar. \
beta = 2J/(k_B T). The annealing rate v is dg/dt in units of J/hbar.";

#[derive(Debug, Parser)]
#[command(name = "qa-kinetics", version, about = "Dissipative quantum annealing kinetics of the transverse-field Ising chain", long_about = UNITS)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reduced density trajectory and n_th(g) along one anneal (fig1a.csv).
    Fig1a(Opts),
    /// Scaled crossover density against scaled rate for several ln(mu) (fig1b.csv).
    Fig1b(Opts),
    /// Crossover point over a log-spaced range of annealing rates (sweep.csv).
    Sweep(Opts),
    /// Momentum-resolved Boltzmann evolution along the anneal (trajectory.csv).
    Qbe(Opts),
    /// Lattice Monte Carlo of kink annihilation (kmc.csv).
    Kmc(Opts),
    /// Polaronic band shifts (renorm.csv).
    Renorm(Opts),
    /// Optimal annealing rate and the coherent and classical comparisons (optimum.txt).
    Optimum(Opts),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Opts {
    /// Ohmic coupling alpha (dimensionless) [default 0.06]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Inverse temperature beta = 2J/k_BT (dimensionless) [default 25]
    #[arg(long)]
    pub beta: Option<f64>,
    /// Annealing rate v = |dg/dt| in J/hbar [default 2.85e-7]
    #[arg(long)]
    pub v: Option<f64>,
    /// Initial transverse field g (units of J)
    #[arg(long)]
    pub g_init: Option<f64>,
    /// Final transverse field g (units of J)
    #[arg(long)]
    pub g_final: Option<f64>,
    /// Field for fixed-g commands such as renorm (units of J) [default 0.95]
    #[arg(long)]
    pub g: Option<f64>,
    /// Number of momentum modes N (even) [default 1024; qbe 512]
    #[arg(long)]
    pub n_sites: Option<usize>,
    /// Bath cutoff frequency omega_c in units of 2J/hbar [default 100]
    #[arg(long)]
    pub omega_c: Option<f64>,
    /// Polaron cutoff omega_cutoff in units of 2J/hbar [default 10]
    #[arg(long)]
    pub omega_cutoff: Option<f64>,
    /// Order-unity constant k in n* = k w/D [default 1]
    #[arg(long)]
    pub k_order: Option<f64>,
    /// Source of w(g) and n_th(g): exact or asymptotic [default asymptotic]
    #[arg(long)]
    pub rate_source: Option<RateSource>,
    /// 64-bit seed for stochastic commands [default 1]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory [default .]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// ln(mu) value for fig1b, repeatable [default 8 9 10 11]
    #[arg(long)]
    pub log_mu: Vec<f64>,
    /// Lowest rate for sweep (J/hbar) [default 1e-10]
    #[arg(long)]
    pub v_min: Option<f64>,
    /// Highest rate for sweep (J/hbar) [default 1e-5]
    #[arg(long)]
    pub v_max: Option<f64>,
    /// Number of points for sweep and fig1b [default 41 and 400]
    #[arg(long)]
    pub points: Option<usize>,
    /// KMC rate hooks: constant, power_decay or model_g_schedule [default constant]
    #[arg(long)]
    pub hooks: Option<String>,
    /// KMC hop rate Gamma (per walker, both directions) in J/hbar [default 1]
    #[arg(long)]
    pub hop: Option<f64>,
    /// KMC on-contact reaction rate lambda in J/hbar [default 1]
    #[arg(long)]
    pub react: Option<f64>,
    /// Decay time t0 of the power_decay hooks in hbar/J [default 50]
    #[arg(long)]
    pub t0: Option<f64>,
    /// KMC ring length L (sites) [default 4096]
    #[arg(long)]
    pub length: Option<usize>,
    /// KMC initial density per site [default 0.5]
    #[arg(long)]
    pub n0: Option<f64>,
    /// KMC replicas (independent seeds) [default 32]
    #[arg(long)]
    pub replicas: Option<usize>,
    /// KMC horizon in hbar/J [default 1000]
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Upper fermion energy (units of 2J) of the renorm fit window [default 0.3]
    #[arg(long)]
    pub eps_max: Option<f64>,
    /// Relative tolerance of the qbe integrator [default 1e-6]
    #[arg(long)]
    pub rtol: Option<f64>,
    /// Plain-text config file with `key = value` lines, keys as the long flags
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Fig1a,
    Fig1b,
    Sweep,
    Qbe,
    Kmc,
    Renorm,
    Optimum,
}

#[derive(Debug, Clone, PartialEq)]
pub enum HookChoice {
    Constant { hop: f64, react: f64 },
    PowerDecay { hop: f64, t0: f64, react: f64 },
    ModelGSchedule,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KmcSettings {
    pub hooks: HookChoice,
    pub length: usize,
    pub n0: Option<f64>,
    pub replicas: usize,
    pub horizon: Option<f64>,
}

/// Fully resolved settings for one command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub params: ModelParams,
    pub schedule: Option<Schedule>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub rate_source: RateSource,
    pub k_order: f64,
    pub g: f64,
    pub log_mu: Vec<f64>,
    pub beta_given: bool,
    pub v_range: (f64, f64),
    pub points: Option<usize>,
    pub eps_max: f64,
    pub rtol: f64,
    pub kmc: KmcSettings,
}

struct Source {
    file: HashMap<String, String>,
}

impl Source {
    fn get<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            Some(s) => s
                .parse()
                .map(Some)
                .map_err(|e| Error::Config(format!("config key {key}: {e}"))),
            None => Ok(None),
        }
    }
}

/// Reads `key = value` lines; `#` starts a comment and `_` in keys reads as `-`.
pub fn parse_config(text: &str) -> Result<HashMap<String, String>> {
    let mut map = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("config line {}: expected key = value", i + 1)))?;
        map.insert(k.trim().replace('_', "-"), v.trim().to_string());
    }
    Ok(map)
}

impl RunConfig {
    pub fn resolve(command: CommandKind, opts: &Opts) -> Result<Self> {
        let file = match &opts.config {
            Some(path) => parse_config(&std::fs::read_to_string(path)?)?,
            None => HashMap::new(),
        };
        let src = Source { file };
        let o = opts;
        let mut params = ModelParams::default();
        if command == CommandKind::Qbe {
            params.n_sites = 512;
        }
        params.alpha = src.get(o.alpha, "alpha")?.unwrap_or(params.alpha);
        let beta = src.get(o.beta, "beta")?;
        params.beta = beta.unwrap_or(params.beta);
        params.n_sites = src.get(o.n_sites, "n-sites")?.unwrap_or(params.n_sites);
        params.omega_c = src.get(o.omega_c, "omega-c")?.unwrap_or(params.omega_c);
        params.omega_cutoff = src.get(o.omega_cutoff, "omega-cutoff")?.unwrap_or(params.omega_cutoff);
        params.validate()?;

        let v = src.get(o.v, "v")?.unwrap_or(FIG1_V);
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Config(format!("--v must be a positive rate, got {v}")));
        }
        let (g_init_default, g_final_default) = match command {
            CommandKind::Qbe => (1.1, 0.6),
            CommandKind::Kmc => (1.0 - 1.0 / params.beta, 0.3),
            _ => (1.1, 0.3),
        };
        let schedule = match command {
            CommandKind::Fig1a | CommandKind::Qbe | CommandKind::Kmc => Some(Schedule::new(
                src.get(o.g_init, "g-init")?.unwrap_or(g_init_default),
                v,
                src.get(o.g_final, "g-final")?.unwrap_or(g_final_default),
            )?),
            _ => None,
        };
        let k_order = src.get(o.k_order, "k-order")?.unwrap_or(1.0);
        if !(k_order > 0.0) {
            return Err(Error::Config(format!("--k-order must be positive, got {k_order}")));
        }
        let mut log_mu = o.log_mu.clone();
        if log_mu.is_empty() {
            if let Some(s) = src.file.get("log-mu") {
                log_mu = s
                    .split([',', ' '])
                    .filter(|t| !t.is_empty())
                    .map(|t| t.parse().map_err(|e| Error::Config(format!("config key log-mu: {e}"))))
                    .collect::<Result<_>>()?;
            } else {
                log_mu = vec![8.0, 9.0, 10.0, 11.0];
            }
        }
        let v_range = (
            src.get(o.v_min, "v-min")?.unwrap_or(1e-10),
            src.get(o.v_max, "v-max")?.unwrap_or(1e-5),
        );
        if !(v_range.0 > 0.0 && v_range.1 > v_range.0) {
            return Err(Error::Config(format!("need 0 < v-min < v-max, got {v_range:?}")));
        }
        let hook_name = src.get(o.hooks.clone(), "hooks")?.unwrap_or_else(|| "constant".into());
        let hop = src.get(o.hop, "hop")?.unwrap_or(1.0);
        let react = src.get(o.react, "react")?.unwrap_or(1.0);
        let hooks = match hook_name.as_str() {
            "constant" => HookChoice::Constant { hop, react },
            "power_decay" | "power-decay" => HookChoice::PowerDecay {
                hop,
                t0: src.get(o.t0, "t0")?.unwrap_or(50.0),
                react,
            },
            "model_g_schedule" | "model-g-schedule" => HookChoice::ModelGSchedule,
            other => return Err(Error::Config(format!("unknown hooks {other:?}"))),
        };
        let kmc = KmcSettings {
            hooks,
            length: src.get(o.length, "length")?.unwrap_or(4096),
            n0: src.get(o.n0, "n0")?,
            replicas: src.get(o.replicas, "replicas")?.unwrap_or(32),
            horizon: src.get(o.horizon, "horizon")?,
        };
        let output_dir = src.get(o.out.clone(), "out")?.unwrap_or_else(|| PathBuf::from("."));
        let rate_source = src.get(o.rate_source, "rate-source")?.unwrap_or_default();
        Ok(RunConfig {
            command,
            params,
            schedule,
            output_dir,
            seed: src.get(o.seed, "seed")?.unwrap_or(1),
            rate_source,
            k_order,
            g: src.get(o.g, "g")?.unwrap_or(0.95),
            log_mu,
            beta_given: beta.is_some(),
            v_range,
            points: src.get(o.points, "points")?,
            eps_max: src.get(o.eps_max, "eps-max")?.unwrap_or(0.3),
            rtol: src.get(o.rtol, "rtol")?.unwrap_or(1e-6),
            kmc,
        })
    }

    fn path(&self, name: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.output_dir)?;
        Ok(self.output_dir.join(name))
    }
}

pub fn cmd_fig1a(cfg: &RunConfig) -> Result<Report> {
    let schedule = cfg.schedule.expect("fig1a has a schedule");
    let rates = RateModel::new(cfg.rate_source, &cfg.params)?;
    let run = integrate_density(&schedule, &rates, cfg.k_order)?;
    let cross = solve_crossover(schedule.v, &rates, cfg.k_order)?;
    let rows = run.trajectory.samples.iter().map(|s| vec![s.g, s.n_mean, s.n_th]);
    write_csv(&cfg.path("fig1a.csv")?, &output::FIG1A, rows)?;
    let mut r = Report::new();
    r.push("command", "fig1a")
        .push("rate_source", cfg.rate_source)
        .num("v", schedule.v)
        .num("g0", cross.g0)
        .num("g_star", cross.g_star)
        .num("x0", cross.x0)
        .num("x_star", cross.x_star)
        .num("n_star", cross.n_star)
        .num("n_star_frozen", cross.n_star_frozen)
        .push("valid", cross.valid);
    if let Some(c) = run.crossing {
        r.num("crossing_g", c.g).num("crossing_n", c.n);
    }
    if let Some(last) = run.trajectory.samples.last() {
        r.num("g_final", last.g).num("n_final", last.n_mean);
    }
    Ok(r)
}

pub fn cmd_fig1b(cfg: &RunConfig) -> Result<Report> {
    let grid = default_scaled_grid(cfg.points.unwrap_or(400));
    let beta = cfg.beta_given.then_some(cfg.params.beta);
    let curves = scaled_curves(&cfg.log_mu, &grid, beta);
    let rows: Vec<Vec<f64>> = curves
        .iter()
        .flat_map(|c| {
            c.points
                .iter()
                .map(move |p| vec![c.log_mu, p.v_scaled, p.n_scaled, if p.valid { 1.0 } else { 0.0 }])
        })
        .collect();
    write_csv(&cfg.path("fig1b.csv")?, &output::FIG1B, rows)?;
    let mut r = Report::new();
    r.push("command", "fig1b");
    for c in &curves {
        let tag = format!("log_mu_{}", c.log_mu);
        r.push(&format!("{tag}_minima"), c.interior_minima().len());
        if let Some(m) = c.minimum() {
            r.num(&format!("{tag}_v_scaled_min"), m.v_scaled)
                .num(&format!("{tag}_x_star_min"), m.x_star);
        }
    }
    Ok(r)
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<Report> {
    let rates = RateModel::new(cfg.rate_source, &cfg.params)?;
    let n = cfg.points.unwrap_or(41).max(2);
    let (a, b) = (cfg.v_range.0.ln(), cfg.v_range.1.ln());
    let vs: Vec<f64> = (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect();
    let reports: Vec<_> = vs
        .par_iter()
        .map(|&v| solve_crossover(v, &rates, cfg.k_order))
        .collect();
    let mut rows = Vec::new();
    let mut skipped = 0;
    for (v, rep) in vs.iter().zip(reports) {
        match rep {
            Ok(c) => rows.push(vec![c.v, c.g0, c.g_star, c.x0, c.x_star, c.n_star, if c.valid { 1.0 } else { 0.0 }]),
            Err(e) => {
                log::warn!("v = {v:e}: {e}");
                skipped += 1;
            }
        }
    }
    let best = rows.iter().min_by(|x, y| x[5].total_cmp(&y[5])).cloned();
    write_csv(&cfg.path("sweep.csv")?, &output::SWEEP, rows)?;
    let mut r = Report::new();
    r.push("command", "sweep").push("points", n).push("skipped", skipped);
    if let Some(b) = best {
        r.num("v_min_n_star", b[0]).num("n_star_min", b[5]);
    }
    Ok(r)
}

pub fn cmd_qbe(cfg: &RunConfig) -> Result<Report> {
    let schedule = cfg.schedule.expect("qbe has a schedule");
    let p = cfg.params;
    let grid = MomentumGrid::new(p.n_sites)?;
    let start = PopulationState::fermi_dirac(schedule.g_initial, p.beta, &grid, 0.0);
    let opts = EvolveOptions {
        output_stride: 1,
        rtol: cfg.rtol,
        atol: 1e-12,
    };
    let out = evolve(&start, &schedule, &p, &opts)?;
    let rows = out.trajectory.samples.iter().map(|s| {
        let asym = if s.g < 1.0 { semiclassical_density(s.g, p.beta) } else { f64::NAN };
        vec![s.t, s.g, s.n_mean, thermal_density_exact(s.g, p.beta, &grid), asym]
    });
    write_csv(&cfg.path("trajectory.csv")?, &output::TRAJECTORY, rows.collect::<Vec<_>>())?;
    let rates = RateModel::new(cfg.rate_source, &p)?;
    let g0 = solve_g0(schedule.v, &rates)?;
    let mut r = Report::new();
    r.push("command", "qbe")
        .push("n_sites", p.n_sites)
        .push("steps_accepted", out.stats.accepted)
        .push("steps_rejected", out.stats.rejected)
        .push("clipped", out.stats.clipped)
        .num("g0", g0);
    if let Some(gd) = out.trajectory.departure(2.0) {
        r.num("g_departure", gd)
            .push("brackets_g0", (gd - g0).abs() <= 2.0 / p.beta);
    }
    r.num("n_final", out.trajectory.samples.last().map_or(f64::NAN, |s| s.n_mean));
    Ok(r)
}

pub fn cmd_kmc(cfg: &RunConfig) -> Result<Report> {
    let k = &cfg.kmc;
    let (hooks, n0, horizon) = match k.hooks {
        HookChoice::Constant { hop, react } => (
            RateScheduleHooks::constant(hop, react),
            k.n0.unwrap_or(0.5),
            k.horizon.unwrap_or(1000.0),
        ),
        HookChoice::PowerDecay { hop, t0, react } => (
            RateScheduleHooks::power_decay(hop, t0, react),
            k.n0.unwrap_or(0.5),
            k.horizon.unwrap_or(1000.0),
        ),
        HookChoice::ModelGSchedule => {
            let sched = cfg.schedule.expect("kmc has a schedule");
            let rates = Arc::new(RateModel::new(cfg.rate_source, &cfg.params)?);
            let n0 = k.n0.unwrap_or(rates.n_th(sched.g_initial)?);
            let horizon = k.horizon.unwrap_or(sched.duration());
            (RateScheduleHooks::model_g_schedule(rates, sched, 0.0), n0, horizon)
        }
    };
    let spec = KmcSpec {
        length: k.length,
        initial_density: n0,
        seed: cfg.seed,
        replicas: k.replicas,
        horizon,
        times: log_times(horizon * 1e-4, horizon, 81),
    };
    let s = kmc_time_dependent(&spec, &hooks)?;
    let rows = (0..s.times.len()).map(|j| vec![s.times[j], s.mean[j], s.stderr[j], s.replicas as f64]);
    write_csv(&cfg.path("kmc.csv")?, &output::KMC, rows.collect::<Vec<_>>())?;
    let mut r = Report::new();
    r.push("command", "kmc")
        .push("hooks", &hooks.name)
        .push("length", k.length)
        .push("replicas", s.replicas)
        .num("n_final", *s.mean.last().unwrap())
        .num("n_final_stderr", *s.stderr.last().unwrap());
    if let Some(e) = s.decay_exponent(horizon * 1e-2, horizon) {
        r.num("decay_exponent", e);
    }
    Ok(r)
}

pub fn cmd_renorm(cfg: &RunConfig) -> Result<Report> {
    let p = cfg.params;
    let grid = MomentumGrid::new(p.n_sites)?;
    let modes = band_shifts(cfg.g, &p, &grid)?;
    let rows = modes.iter().map(|m| vec![m.k, m.eps, m.sigma, m.sigma_mix]);
    write_csv(&cfg.path("renorm.csv")?, &output::RENORM, rows.collect::<Vec<_>>())?;
    let lw = long_wavelength_shift(cfg.g, &p, &grid)?;
    let ising = ising_renorm_factor(p.alpha, p.omega_c, p.omega_cutoff);
    let mut r = Report::new();
    r.push("command", "renorm")
        .num("g", cfg.g)
        .num("k_min", lw.k)
        .num("sigma_k_min", lw.sigma)
        .num("sigma_mix_k_min", lw.sigma_mix)
        .num("ising_w", ising.w)
        .num("ising_factor", ising.factor);
    match linear_spectrum_fit(cfg.g, &p, &grid, cfg.eps_max) {
        Ok(fit) => {
            r.num("fit_sigma0", fit.fit.sigma0)
                .num("fit_slope_c", fit.fit.slope_c)
                .num("fit_residual", fit.fit.residual)
                .push("fit_points", fit.fit.points);
        }
        Err(Error::Window(n)) => {
            r.push("fit_points", n);
        }
        Err(e) => return Err(e),
    }
    Ok(r)
}

pub fn cmd_optimum(cfg: &RunConfig) -> Result<Report> {
    let rates = RateModel::new(cfg.rate_source, &cfg.params)?;
    let o = optimum(&rates, cfg.k_order)?;
    let kz = kz_comparison(o.v_opt, o.n_opt)?;
    let t_class = glauber_time(o.n_opt, 1.0)?;
    let mut r = Report::new();
    r.push("command", "optimum")
        .num("mu", o.mu)
        .num("x_opt", o.x_opt)
        .num("n_opt", o.n_opt)
        .num("v_opt", o.v_opt)
        .num("v_opt_closed", o.v_opt_closed)
        .num("v_opt_ratio", o.v_opt / o.v_opt_closed)
        .num("v_numeric", o.v_numeric)
        .num("n_numeric", o.n_numeric)
        .num("x_numeric", o.x_numeric)
        .num("v_kz", kz.v_kz)
        .num("v_opt_over_v_kz", kz.ratio)
        .num("t_class_w1", t_class)
        .num("t_class_times_v_opt", t_class * o.v_opt);
    r.write(&cfg.path("optimum.txt")?)?;
    Ok(r)
}

pub fn execute(cfg: &RunConfig) -> Result<Report> {
    match cfg.command {
        CommandKind::Fig1a => cmd_fig1a(cfg),
        CommandKind::Fig1b => cmd_fig1b(cfg),
        CommandKind::Sweep => cmd_sweep(cfg),
        CommandKind::Qbe => cmd_qbe(cfg),
        CommandKind::Kmc => cmd_kmc(cfg),
        CommandKind::Renorm => cmd_renorm(cfg),
        CommandKind::Optimum => cmd_optimum(cfg),
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_USAGE,
        Error::Io(_) => EXIT_IO,
        _ => EXIT_SOLVER,
    }
}

fn split(command: &Command) -> (CommandKind, &Opts) {
    match command {
        Command::Fig1a(o) => (CommandKind::Fig1a, o),
        Command::Fig1b(o) => (CommandKind::Fig1b, o),
        Command::Sweep(o) => (CommandKind::Sweep, o),
        Command::Qbe(o) => (CommandKind::Qbe, o),
        Command::Kmc(o) => (CommandKind::Kmc, o),
        Command::Renorm(o) => (CommandKind::Renorm, o),
        Command::Optimum(o) => (CommandKind::Optimum, o),
    }
}

/// Caps the global rayon pool from `QA_KINETICS_THREADS`, if set.
pub fn configure_threads() {
    if let Some(n) = std::env::var("QA_KINETICS_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        if n > 0 {
            // Fails only if the pool was already built, which keeps the earlier cap.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code. The
/// summary goes to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    configure_threads();
    let (kind, opts) = split(&cli.command);
    let result = RunConfig::resolve(kind, opts).and_then(|cfg| execute(&cfg));
    match result {
        Ok(report) => {
            if write!(out, "{report}").is_err() {
                return EXIT_IO;
            }
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> Opts {
        Opts::default()
    }

    #[test]
    fn defaults_resolve() {
        let c = RunConfig::resolve(CommandKind::Fig1a, &opts()).unwrap();
        assert_eq!(c.params.alpha, 0.06);
        assert_eq!(c.params.beta, 25.0);
        assert_eq!(c.schedule.unwrap().v, FIG1_V);
        assert_eq!(c.log_mu, vec![8.0, 9.0, 10.0, 11.0]);
        let q = RunConfig::resolve(CommandKind::Qbe, &opts()).unwrap();
        assert_eq!(q.params.n_sites, 512);
    }

    #[test]
    fn zero_rate_is_usage_error() {
        let o = Opts { v: Some(0.0), ..opts() };
        let e = RunConfig::resolve(CommandKind::Fig1a, &o).unwrap_err();
        assert_eq!(exit_code(&e), EXIT_USAGE);
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "# comment\nalpha = 0.03\nbeta=40\nrate_source = exact\nlog-mu = 8, 9\n").unwrap();
        let o = Opts {
            beta: Some(30.0),
            config: Some(path),
            ..opts()
        };
        let c = RunConfig::resolve(CommandKind::Fig1b, &o).unwrap();
        assert_eq!(c.params.alpha, 0.03);
        assert_eq!(c.params.beta, 30.0);
        assert_eq!(c.rate_source, RateSource::Exact);
        assert_eq!(c.log_mu, vec![8.0, 9.0]);
    }

    #[test]
    fn bad_config_lines_are_rejected() {
        assert!(parse_config("alpha 0.1").is_err());
        assert!(parse_config("\n  # only a comment\n").unwrap().is_empty());
    }

    #[test]
    fn unknown_hooks_rejected() {
        let o = Opts {
            hooks: Some("ballistic".into()),
            ..opts()
        };
        assert!(RunConfig::resolve(CommandKind::Kmc, &o).is_err());
    }
}
