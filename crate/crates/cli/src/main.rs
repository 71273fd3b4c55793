//! `solitary`: batch front end for computing solitary waves, comparing them
//! with the long-wave limit and evolving them in time.
//!
//! Exit codes: 0 ok, 1 configuration, 2 model regime, 3 iteration or
//! resolution failure. Errors are printed to stderr as one JSON object.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use config::{Config, ConfigError};
use solitary::evolution::{smooth_perturbation, stability_experiment, travel_test};
use solitary::functionals::Penalization;
use solitary::grid::DEFAULT_TAIL_TOL;
use solitary::io::{
    convergence_csv, fmt_g17, profile_csv, read_profile_csv, sweep_csv, trace_csv, write_atomic, write_json,
    write_profile, ProfileMeta, CONVENTION,
};
use solitary::longwave::{compare_long_wave, scale_down, scaling_diagnostics, ReducedGroundState, ScalingExponents};
use solitary::solver::{continuation_sweep, minimize_constrained, renormalize};
use solitary::symbol::{symbol_registry, symbol_report, validate_symbol};
use solitary::{Error, ErrorClass, PeriodicGrid, Problem, SpectralField, WaveProfile};

#[derive(Parser)]
#[command(name = "solitary", version, about = "Solitary waves of Whitham-type equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Computes one wave of momentum `mu` by constrained minimization.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `solver.mu`.
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        /// Minimizes the penalized energy with radius `problem.ball_radius`.
        #[arg(long)]
        penalized: bool,
        /// Starts from this profile CSV instead of the long-wave seed.
        #[arg(long)]
        seed_profile: Option<PathBuf>,
    },
    /// Solves along a list of momenta and compares with the long-wave limit.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `sweep.mu_list`.
        #[arg(long, value_delimiter = ',')]
        mu_list: Option<Vec<f64>>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rescales the profiles of a sweep and compares them with the reduced ground state.
    CompareKdv {
        /// Output directory of `sweep`.
        #[arg(long)]
        sweep: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.9)]
        tau: f64,
    },
    /// Evolves a computed wave and records conservation and shape drift.
    Evolve {
        /// Directory holding `profile.csv` and `meta.json`.
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Supplies the `evolution` section; the problem comes from the profile.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        integrator: Option<String>,
    },
    /// Evolves randomly perturbed copies of a wave and records their orbit distance.
    Stability {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Perturbation sizes relative to the wave's L2 norm.
        #[arg(long, value_delimiter = ',', default_value = "0.005,0.01,0.02")]
        scale: Vec<f64>,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        /// Envelope wavenumber; defaults to the inverse width of the wave.
        #[arg(long)]
        k_c: Option<f64>,
        #[arg(long)]
        horizon: Option<f64>,
    },
    /// Samples a symbol and checks its structural assumptions.
    ValidateSymbol {
        #[arg(long)]
        name: String,
        #[arg(long, default_value_t = 100.0)]
        k_max: f64,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Config(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<ConfigError> for Failure {
    fn from(ConfigError(m): ConfigError) -> Self {
        Failure::Config(m)
    }
}

impl Failure {
    fn class(&self) -> ErrorClass {
        match self {
            Failure::Config(_) => ErrorClass::Config,
            Failure::Core(e) => e.class(),
        }
    }

    fn exit_code(&self) -> u8 {
        match self.class() {
            ErrorClass::Config => 1,
            ErrorClass::ModelRegime => 2,
            ErrorClass::Numerical => 3,
        }
    }

    fn code(&self) -> &'static str {
        match self {
            Failure::Config(_) => "CONFIG",
            Failure::Core(e) => e.code(),
        }
    }

    fn to_json(&self) -> Value {
        let class = match self.class() {
            ErrorClass::Config => "config",
            ErrorClass::ModelRegime => "model-regime",
            ErrorClass::Numerical => "numerical",
        };
        let message = match self {
            Failure::Config(m) => m.clone(),
            Failure::Core(e) => e.to_string(),
        };
        let mut v = json!({ "code": self.code(), "class": class, "message": message });
        if let Failure::Core(Error::MaxIter {
            iterations, residual, ..
        }) = self
        {
            v["iterations"] = json!(iterations);
            v["residual"] = json!(residual);
        }
        json!({ "error": v })
    }
}

type Outcome = Result<(), Failure>;

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    argv: Vec<String>,
    version: &'static str,
    convention: &'static str,
    config: &'a Value,
    seed: Option<u64>,
    status: &'a str,
    elapsed_seconds: f64,
    outputs: &'a [String],
}

/// Output directory of one command; collects what was written for the manifest.
struct Run {
    command: &'static str,
    out: PathBuf,
    start: Instant,
    config: Value,
    seed: Option<u64>,
    outputs: Vec<String>,
}

impl Run {
    fn new(command: &'static str, out: &Path) -> Self {
        Run {
            command,
            out: out.to_path_buf(),
            start: Instant::now(),
            config: Value::Null,
            seed: None,
            outputs: Vec::new(),
        }
    }

    fn write(&mut self, rel: &str, text: &str) -> Result<(), Error> {
        write_atomic(&self.out.join(rel), text.as_bytes())?;
        self.outputs.push(rel.to_string());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<(), Error> {
        write_json(&self.out.join(rel), value)?;
        self.outputs.push(rel.to_string());
        Ok(())
    }

    fn profile(&mut self, rel_dir: &str, p: &WaveProfile) -> Result<(), Error> {
        write_profile(&self.out.join(rel_dir), p)?;
        for f in ["profile.csv", "spectrum.csv", "meta.json"] {
            self.outputs
                .push(Path::new(rel_dir).join(f).to_string_lossy().into_owned());
        }
        Ok(())
    }

    fn finish(self, outcome: &Outcome) -> Outcome {
        let status = match outcome {
            Ok(()) => "ok",
            Err(f) => f.code(),
        };
        let manifest = Manifest {
            command: self.command,
            argv: std::env::args().collect(),
            version: env!("CARGO_PKG_VERSION"),
            convention: CONVENTION,
            config: &self.config,
            seed: self.seed,
            status,
            elapsed_seconds: self.start.elapsed().as_secs_f64(),
            outputs: &self.outputs,
        };
        write_json(&self.out.join("manifest.json"), &manifest)?;
        Ok(())
    }
}

fn echo(cfg: &Config) -> Value {
    serde_json::to_value(cfg).unwrap_or(Value::Null)
}

fn mu_dir(mu: f64) -> String {
    format!("mu_{}", fmt_g17(mu))
}

fn solve(run: &mut Run, config: &Path, mu: Option<f64>, penalized: bool, seed: Option<&Path>) -> Outcome {
    let mut cfg = Config::load(config)?;
    let prob = cfg.problem.build()?;
    if let Some(mu) = mu {
        cfg.solver.mu = mu;
    }
    if penalized {
        cfg.solver.penalization = Some(Penalization::new(prob.ball_radius())?);
    }
    cfg.solver.validate()?;
    run.config = echo(&cfg);
    let profile = match seed {
        Some(path) => {
            let guess = renormalize(&read_profile_csv(path)?, cfg.solver.mu)?;
            minimize_constrained(&prob, &cfg.solver, &guess)?
        }
        None => {
            let mut result = continuation_sweep(&prob, &[cfg.solver.mu], &cfg.solver, &cfg.grid)?;
            result.entries.remove(0).outcome?
        }
    };
    run.profile("", &profile)?;
    println!(
        "mu={} nu={} residual={:e} iterations={}",
        profile.mu, profile.nu, profile.residual, profile.iterations
    );
    Ok(())
}

fn comparison_rows(
    prob: &Problem,
    profiles: &[&WaveProfile],
    tau: f64,
) -> Result<
    Vec<(
        solitary::longwave::LongWaveComparison,
        solitary::longwave::ScalingDiagnostics,
    )>,
    Error,
> {
    let exps = ScalingExponents::for_problem(prob)?;
    let reference = ReducedGroundState::for_problem(prob)?;
    profiles
        .iter()
        .map(|p| {
            Ok((
                compare_long_wave(p, &exps, &reference)?,
                scaling_diagnostics(p, prob, &exps, tau)?,
            ))
        })
        .collect()
}

fn sweep(run: &mut Run, config: &Path, mu_list: Option<Vec<f64>>) -> Outcome {
    let mut cfg = Config::load(config)?;
    if let Some(list) = mu_list {
        cfg.sweep.mu_list = list;
    }
    run.config = echo(&cfg);
    let prob = cfg.problem.build()?;
    let result = continuation_sweep(&prob, &cfg.sweep.mu_list, &cfg.solver, &cfg.grid)?;
    run.write("sweep.csv", &sweep_csv(&result.entries))?;
    let profiles = result.profiles();
    let rows = comparison_rows(&prob, &profiles, cfg.sweep.tau)?;
    run.write("convergence.csv", &convergence_csv(&rows))?;
    for p in &profiles {
        run.profile(&format!("profiles/{}", mu_dir(p.mu)), p)?;
    }
    for e in &result.entries {
        match &e.outcome {
            Ok(p) => println!("mu={} nu={} residual={:e}", e.mu, p.nu, p.residual),
            Err(err) => println!("mu={} failed: {err}", e.mu),
        }
    }
    match result.entries.into_iter().find_map(|e| e.outcome.err()) {
        Some(err) => Err(err.into()),
        None => Ok(()),
    }
}

/// Reads a directory written by `solve` (or one entry of `sweep`).
fn load_profile(dir: &Path) -> Result<(Problem, WaveProfile), Failure> {
    let meta_path = dir.join("meta.json");
    let text = fs::read_to_string(&meta_path).map_err(Error::from)?;
    let meta: ProfileMeta =
        serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", meta_path.display())))?;
    let parsed = read_profile_csv(&dir.join("profile.csv"))?;
    let g = parsed.grid();
    if g.points() != meta.points || (g.period() - meta.period).abs() > 1e-9 * meta.period {
        return Err(Failure::Config(format!(
            "{}: grid (P={}, N={}) disagrees with profile.csv (P={}, N={})",
            meta_path.display(),
            meta.period,
            meta.points,
            g.period(),
            g.points()
        )));
    }
    // the stored period is exact; the one recovered from the node spacing is not
    let grid = PeriodicGrid::new(meta.period, meta.points)?;
    let field = SpectralField::from_values(&grid, parsed.values().to_vec())?;
    let prob = Config::for_problem(&meta.symbol, &meta.nonlinearity).problem.build()?;
    let profile = WaveProfile {
        field,
        mu: meta.mu,
        nu: meta.nu,
        residual: meta.residual,
        energy: meta.energy,
        symbol: meta.symbol,
        nonlinearity: meta.nonlinearity,
        m_zero: prob.symbol().m_zero(),
        iterations: meta.iterations,
    };
    Ok((prob, profile))
}

fn compare_kdv(run: &mut Run, sweep_dir: &Path, tau: f64) -> Outcome {
    run.config = json!({ "sweep": sweep_dir, "tau": tau });
    let root = sweep_dir.join("profiles");
    let mut loaded = Vec::new();
    for entry in fs::read_dir(&root).map_err(Error::from)? {
        let path = entry.map_err(Error::from)?.path();
        if path.join("meta.json").is_file() {
            loaded.push(load_profile(&path)?);
        }
    }
    if loaded.is_empty() {
        return Err(Failure::Config(format!("no profiles under {}", root.display())));
    }
    loaded.sort_by(|a, b| a.1.mu.total_cmp(&b.1.mu));
    let prob = loaded[0].0.clone();
    if loaded.iter().any(|(p, _)| p.symbol().name() != prob.symbol().name()) {
        return Err(Failure::Config("profiles of a sweep must share one symbol".into()));
    }
    let profiles: Vec<&WaveProfile> = loaded.iter().map(|(_, p)| p).collect();
    run.write(
        "convergence.csv",
        &convergence_csv(&comparison_rows(&prob, &profiles, tau)?),
    )?;

    let exps = ScalingExponents::for_problem(&prob)?;
    let reference = ReducedGroundState::for_problem(&prob)?;
    for p in &profiles {
        let w = scale_down(p.mu, &exps, &p.field)?;
        let name = mu_dir(p.mu);
        run.write(&format!("rescaled/{name}.csv"), &profile_csv(&w))?;
        run.write(
            &format!("rescaled/{name}_reference.csv"),
            &profile_csv(&reference.sample(w.grid(), DEFAULT_TAIL_TOL)?),
        )?;
    }
    Ok(())
}

fn evolution_config(
    run: &mut Run,
    config: Option<&Path>,
    prob: &Problem,
    profile: &WaveProfile,
) -> Result<Config, Failure> {
    let cfg = match config {
        Some(path) => Config::load(path)?,
        None => Config::for_problem(&profile.symbol, &profile.nonlinearity),
    };
    let declared = cfg.problem.build()?;
    if declared.symbol().name() != prob.symbol().name() || declared.nonlinearity().name() != prob.nonlinearity().name()
    {
        return Err(Failure::Config(format!(
            "config problem ({}, {}) differs from the profile's ({}, {})",
            declared.symbol().name(),
            declared.nonlinearity().name(),
            prob.symbol().name(),
            prob.nonlinearity().name()
        )));
    }
    run.config = echo(&cfg);
    Ok(cfg)
}

struct EvolveArgs<'a> {
    profile: &'a Path,
    config: Option<&'a Path>,
    dt: Option<f64>,
    horizon: Option<f64>,
    integrator: Option<String>,
}

fn evolve(run: &mut Run, args: EvolveArgs) -> Outcome {
    let (prob, profile) = load_profile(args.profile)?;
    let mut cfg = evolution_config(run, args.config, &prob, &profile)?;
    let ev = &mut cfg.evolution;
    if let Some(dt) = args.dt {
        ev.dt = dt;
    }
    if let Some(t) = args.horizon {
        ev.horizon = t;
    }
    if let Some(name) = args.integrator {
        ev.integrator = name;
    }
    ev.validate()?;
    run.config = echo(&cfg);
    let report = travel_test(&prob, &profile, &cfg.evolution)?;
    run.write("trace.csv", &trace_csv(&report.trace))?;
    run.write("final.csv", &profile_csv(&report.trace.final_field))?;
    let summary = json!({
        "nu": report.nu,
        "measured_speed": report.measured_speed,
        "speed_error": report.speed_error(),
        "max_shape_error": report.max_shape_error,
        "max_abs_e_drift": report.trace.max_abs_e_drift(),
        "max_abs_q_drift": report.trace.max_abs_q_drift(),
    });
    run.json("summary.json", &summary)?;
    println!("{summary}");
    Ok(())
}

struct StabilityArgs<'a> {
    profile: &'a Path,
    config: Option<&'a Path>,
    scales: &'a [f64],
    seed: u64,
    k_c: Option<f64>,
    horizon: Option<f64>,
}

fn stability(run: &mut Run, args: StabilityArgs) -> Outcome {
    let (prob, profile) = load_profile(args.profile)?;
    let mut cfg = evolution_config(run, args.config, &prob, &profile)?;
    if let Some(t) = args.horizon {
        cfg.evolution.horizon = t;
        cfg.evolution.validate()?;
    }
    let k_c = match args.k_c {
        Some(k) => k,
        None => {
            let exps = ScalingExponents::for_problem(&prob)?;
            profile.mu.powf(exps.beta) / ReducedGroundState::for_problem(&prob)?.length_scale()
        }
    };
    run.seed = Some(args.seed);
    run.config = json!({ "config": echo(&cfg), "scale": args.scales, "k_c": k_c, "seed": args.seed });
    let mut summary = String::from("scale,initial_dist,max_dist,ratio\n");
    for &scale in args.scales {
        let p = smooth_perturbation(&profile.field, scale, k_c, args.seed)?;
        let report = stability_experiment(&prob, &profile, &p, &cfg.evolution)?;
        run.write(
            &format!("trace_scale_{}.csv", fmt_g17(scale)),
            &trace_csv(&report.trace),
        )?;
        let row: Vec<String> = [scale, report.initial_dist, report.max_dist, report.ratio()]
            .into_iter()
            .map(fmt_g17)
            .collect();
        summary.push_str(&row.join(","));
        summary.push('\n');
        println!(
            "scale={scale} initial={:e} max={:e} ratio={}",
            report.initial_dist,
            report.max_dist,
            report.ratio()
        );
    }
    run.write("stability.csv", &summary)?;
    Ok(())
}

fn validate(run: Option<&mut Run>, name: &str, k_max: f64, samples: usize) -> Outcome {
    let symbol = symbol_registry().build(name)?;
    let report = symbol_report(&symbol, k_max, samples)?;
    let text = serde_json::to_string_pretty(&json!({ "passed": report.passed(), "report": report }))
        .map_err(|e| Error::Format(e.to_string()))?;
    println!("{text}");
    if let Some(run) = run {
        run.config = json!({ "name": name, "k_max": k_max, "samples": samples });
        run.write("report.json", &format!("{text}\n"))?;
    }
    validate_symbol(&symbol, k_max, samples)?;
    Ok(())
}

fn dispatch(command: Command) -> Outcome {
    let (mut run, outcome) = match command {
        Command::Solve {
            config,
            mu,
            out,
            penalized,
            seed_profile,
        } => {
            let mut run = Run::new("solve", &out);
            let r = solve(&mut run, &config, mu, penalized, seed_profile.as_deref());
            (Some(run), r)
        }
        Command::Sweep { config, mu_list, out } => {
            let mut run = Run::new("sweep", &out);
            let r = sweep(&mut run, &config, mu_list);
            (Some(run), r)
        }
        Command::CompareKdv { sweep, out, tau } => {
            let mut run = Run::new("compare-kdv", &out);
            let r = compare_kdv(&mut run, &sweep, tau);
            (Some(run), r)
        }
        Command::Evolve {
            profile,
            out,
            config,
            dt,
            horizon,
            integrator,
        } => {
            let mut run = Run::new("evolve", &out);
            let args = EvolveArgs {
                profile: &profile,
                config: config.as_deref(),
                dt,
                horizon,
                integrator,
            };
            let r = evolve(&mut run, args);
            (Some(run), r)
        }
        Command::Stability {
            profile,
            out,
            config,
            scale,
            seed,
            k_c,
            horizon,
        } => {
            let mut run = Run::new("stability", &out);
            let args = StabilityArgs {
                profile: &profile,
                config: config.as_deref(),
                scales: &scale,
                seed,
                k_c,
                horizon,
            };
            let r = stability(&mut run, args);
            (Some(run), r)
        }
        Command::ValidateSymbol {
            name,
            k_max,
            samples,
            out,
        } => {
            let mut run = out.as_deref().map(|o| Run::new("validate-symbol", o));
            let r = validate(run.as_mut(), &name, k_max, samples);
            (run, r)
        }
    };
    let configured = !matches!(&outcome, Err(f) if f.class() == ErrorClass::Config);
    match run.take() {
        // a rejected configuration leaves no directory behind
        Some(run) if configured || !run.outputs.is_empty() => run.finish(&outcome).and(outcome),
        _ => outcome,
    }
}

fn fail(f: &Failure) -> ExitCode {
    eprintln!("{}", f.to_json());
    ExitCode::from(f.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.exit_code() == 0 => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&Failure::Config(e.to_string().trim_end().to_string())),
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => fail(&f),
    }
}
