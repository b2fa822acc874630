//! Subcommand implementations and argument plumbing.

use crate::config::{ConfigError, RunConfig};
use crate::output;
use crate::pipeline::{run_pipeline, PipelineError, PipelineResult};
use crate::threads::run_indexed;
use clap::{Args, Parser, Subcommand};
use weakmass_core::num_complex::Complex64 as C64;
use serde_json::json;
use std::path::PathBuf;
use thiserror::Error;
use weakmass_core::detector::{recover_g0, simulate_counts_range, CountRecord, NoiseModel};
use weakmass_core::dynamics::{
    bch_transformed_zc, dyson_first_order, evolve_exact_x, evolve_split_step_z_checked,
    propagate_linear_potential, split_step_linear_potential, CouplingParams, ZcCoefficients,
};
use weakmass_core::hilbert::{
    make_gaussian, to_momentum, Grid1D, JointState, QubitState, WavePacket,
};
use weakmass_core::kd::{
    apply_kd_phase, bessel_spectrum, momentum_class_weights, theta_moment, KDParams,
};
use weakmass_core::weakmeas::{exact_class_oracle, postselect, PostSelection};
use weakmass_core::MASS;

/// Exit code for invalid configuration.
pub const EXIT_CONFIG: i32 = 2;
/// Exit code for a run that hit perturbative breakdown.
pub const EXIT_BREAKDOWN: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Run(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            _ => 1,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(err: ConfigError) -> Self {
        match err {
            ConfigError::Io(io) => CliError::Io(io),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(err: PipelineError) -> Self {
        match err {
            PipelineError::Config(msg) => CliError::Config(msg),
            PipelineError::Core(msg) => CliError::Run(msg),
        }
    }
}

/// Weak-measurement simulator for the mass-energy coupling of cold atoms.
#[derive(Debug, Parser)]
#[command(name = "weakmass", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the closed-form measurement pipeline and emit the per-class table.
    Simulate(SimulateArgs),
    /// Sweep the weak-value target, one pipeline run per point.
    Sweep(SweepArgs),
    /// Emit the scattering spectrum {φ(n)} for a pulse area.
    #[command(name = "kd-spectrum")]
    KdSpectrum(KdSpectrumArgs),
    /// Grid-based validation suites.
    #[command(subcommand)]
    Validate(ValidateCommand),
    /// Monte Carlo detector counts with coupling-strength recovery.
    #[command(name = "noise-mc")]
    NoiseMc(NoiseMcArgs),
}

/// Physics/source flags shared by the pipeline-driven commands.
#[derive(Debug, Args, Clone)]
pub struct PhysicsArgs {
    /// Named SI preset (calcium).
    #[arg(long)]
    pub preset: Option<String>,
    /// Coupling window in seconds (preset mode; defaults to the lifetime).
    #[arg(long)]
    pub t_coupling_s: Option<f64>,
    /// Explicit mass-energy ratio (needs --omega-k-t).
    #[arg(long)]
    pub g0: Option<f64>,
    /// Explicit ω_k·t product (needs --g0).
    #[arg(long)]
    pub omega_k_t: Option<f64>,
    /// Scattering pulse area η.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Initial internal amplitudes (real).
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Post-selection rotation angle θ.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Internal phase ωt.
    #[arg(long)]
    pub omega_t: Option<f64>,
    /// Direct weak value (alternative to the rotation path).
    #[arg(long)]
    pub aw_real: Option<f64>,
    #[arg(long)]
    pub aw_imag: Option<f64>,
    /// Solve ωt so that A_w^i hits this value.
    #[arg(long)]
    pub aw_target: Option<f64>,
}

#[derive(Debug, Args, Clone)]
pub struct NoiseArgs {
    /// Detector classes, comma separated (e.g. 0,5,10).
    #[arg(long, value_delimiter = ',')]
    pub classes: Option<Vec<i32>>,
    /// Monte Carlo trials.
    #[arg(long)]
    pub trials: Option<u32>,
    /// Prepared atoms per trial.
    #[arg(long)]
    pub n_atoms: Option<u64>,
    /// Fractional source-noise standard deviation ξ_s.
    #[arg(long = "xi-s")]
    pub xi_s: Option<f64>,
    /// Fractional detector-noise standard deviation ξ_d.
    #[arg(long = "xi-d")]
    pub xi_d: Option<f64>,
    /// Mean dark counts per detector per trial.
    #[arg(long)]
    pub dark_rate: Option<f64>,
    /// RNG seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Multinomial shot-noise partitioning of atoms.
    #[arg(long)]
    pub shot_noise: bool,
}

#[derive(Debug, Parser)]
pub struct SimulateArgs {
    /// Load the run configuration from a TOML file (only --out-dir may be
    /// combined with it).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub physics: PhysicsArgs,
    #[command(flatten)]
    pub noise: NoiseArgs,
    /// Output directory.
    #[arg(long)]
    pub out_dir: Option<String>,
    /// Write the resolved configuration to this file.
    #[arg(long)]
    pub write_config: Option<PathBuf>,
}

#[derive(Debug, Parser)]
pub struct SweepArgs {
    #[command(flatten)]
    pub physics: PhysicsArgs,
    /// Weak-value targets, comma separated (e.g. 1e2,1e3,1e4).
    #[arg(long, value_delimiter = ',')]
    pub aw_list: Vec<f64>,
    /// Class whose relative shift goes into the sweep table.
    #[arg(long, default_value_t = 10)]
    pub headline_n: i32,
    #[arg(long)]
    pub out_dir: Option<String>,
}

#[derive(Debug, Parser)]
pub struct KdSpectrumArgs {
    /// Pulse area η.
    #[arg(long)]
    pub eta: f64,
    #[arg(long)]
    pub out_dir: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum ValidateCommand {
    /// First-order state error vs exact evolution: slope-2 convergence in g0.
    Dyson(DysonArgs),
    /// Interaction-picture transform of the vertical coupling vs its
    /// coefficient record.
    Bch(BchArgs),
    /// Grid pipeline vs the closed-form per-class oracle.
    Oracle(OracleArgs),
}

#[derive(Debug, Parser)]
pub struct DysonArgs {
    /// Coupling strengths, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1e-4,1e-3,1e-2")]
    pub g0_list: Vec<f64>,
    #[arg(long, default_value_t = 0.8)]
    pub gbar: f64,
    #[arg(long, default_value_t = 2.0)]
    pub t: f64,
    #[arg(long, default_value_t = 0.9)]
    pub omega_t: f64,
    #[arg(long, default_value_t = 8192)]
    pub n_steps: usize,
    #[arg(long)]
    pub out_dir: Option<String>,
}

#[derive(Debug, Parser)]
pub struct BchArgs {
    #[arg(long, default_value_t = 0.5)]
    pub gbar: f64,
    /// Transform time s in Ĥ'_zc(s).
    #[arg(long, default_value_t = 0.7)]
    pub time_s: f64,
    #[arg(long, default_value_t = 512)]
    pub n_steps: usize,
    #[arg(long)]
    pub out_dir: Option<String>,
}

#[derive(Debug, Parser)]
pub struct OracleArgs {
    #[arg(long, default_value_t = 1e-3)]
    pub g0: f64,
    #[arg(long, default_value_t = 10.0)]
    pub eta: f64,
    #[arg(long, default_value_t = 0.8)]
    pub omega_t: f64,
    #[arg(long, default_value_t = 2.0)]
    pub theta: f64,
    /// ω_k·t product for the coupling window (k = 1, so t = omega_k_t/4).
    #[arg(long, default_value_t = 2.0)]
    pub omega_k_t: f64,
    #[arg(long, default_value_t = 4096)]
    pub n_points: usize,
    /// Compare classes |n| ≤ this limit.
    #[arg(long, default_value_t = 15)]
    pub n_limit: i32,
    /// Also dump the post-selected momentum packet as CSV.
    #[arg(long)]
    pub dump_packet: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<String>,
}

#[derive(Debug, Parser)]
pub struct NoiseMcArgs {
    #[command(flatten)]
    pub physics: PhysicsArgs,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[arg(long)]
    pub out_dir: Option<String>,
}

impl PhysicsArgs {
    fn any_set(&self) -> bool {
        self.preset.is_some()
            || self.t_coupling_s.is_some()
            || self.g0.is_some()
            || self.omega_k_t.is_some()
            || self.eta.is_some()
            || self.alpha.is_some()
            || self.beta.is_some()
            || self.theta.is_some()
            || self.omega_t.is_some()
            || self.aw_real.is_some()
            || self.aw_imag.is_some()
            || self.aw_target.is_some()
    }

    fn apply(&self, config: &mut RunConfig) {
        config.preset = self.preset.clone().or(config.preset.take());
        config.t_coupling_s = self.t_coupling_s.or(config.t_coupling_s);
        config.g0 = self.g0.or(config.g0);
        config.omega_k_t = self.omega_k_t.or(config.omega_k_t);
        if let Some(eta) = self.eta {
            config.eta = eta;
        }
        if let Some(alpha) = self.alpha {
            config.alpha = alpha;
        }
        if let Some(beta) = self.beta {
            config.beta = beta;
        }
        if let Some(theta) = self.theta {
            config.theta = theta;
        }
        config.omega_t = self.omega_t.or(config.omega_t);
        config.aw_real = self.aw_real.or(config.aw_real);
        config.aw_imag = self.aw_imag.or(config.aw_imag);
        config.aw_target = self.aw_target.or(config.aw_target);
    }
}

impl NoiseArgs {
    fn any_set(&self) -> bool {
        self.classes.is_some()
            || self.trials.is_some()
            || self.n_atoms.is_some()
            || self.xi_s.is_some()
            || self.xi_d.is_some()
            || self.dark_rate.is_some()
            || self.seed.is_some()
            || self.shot_noise
    }

    fn apply(&self, config: &mut RunConfig) {
        if let Some(classes) = &self.classes {
            config.classes = classes.clone();
        }
        if let Some(trials) = self.trials {
            config.trials = trials;
        }
        if let Some(n_atoms) = self.n_atoms {
            config.n_atoms = n_atoms;
        }
        if let Some(xi_s) = self.xi_s {
            config.xi_s_sd = xi_s;
        }
        if let Some(xi_d) = self.xi_d {
            config.xi_d_sd = xi_d;
        }
        if let Some(dark) = self.dark_rate {
            config.dark_rate = dark;
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if self.shot_noise {
            config.shot_noise = true;
        }
    }
}

pub fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Sweep(args) => sweep(args),
        Command::KdSpectrum(args) => kd_spectrum(args),
        Command::Validate(which) => match which {
            ValidateCommand::Dyson(args) => validate_dyson(args),
            ValidateCommand::Bch(args) => validate_bch(args),
            ValidateCommand::Oracle(args) => validate_oracle(args),
        },
        Command::NoiseMc(args) => noise_mc(args),
    }
}

fn build_config(
    config_file: Option<&PathBuf>,
    physics: &PhysicsArgs,
    noise: &NoiseArgs,
    out_dir: Option<&String>,
) -> Result<RunConfig, CliError> {
    let mut config = if let Some(path) = config_file {
        if physics.any_set() || noise.any_set() {
            return Err(CliError::Config(
                "--config cannot be combined with other parameter flags".into(),
            ));
        }
        RunConfig::load(path)?
    } else {
        let mut config = RunConfig::default();
        physics.apply(&mut config);
        noise.apply(&mut config);
        config
    };
    if let Some(dir) = out_dir {
        config.out_dir = Some(dir.clone());
    }
    config.validate()?;
    Ok(config)
}

fn report_warnings(result: &PipelineResult) {
    for warning in &result.warnings {
        eprintln!("warning: {warning}");
    }
}

fn simulate(args: SimulateArgs) -> Result<i32, CliError> {
    let config = build_config(
        args.config.as_ref(),
        &args.physics,
        &args.noise,
        args.out_dir.as_ref(),
    )?;
    if let Some(path) = &args.write_config {
        std::fs::write(path, config.to_toml_string().map_err(CliError::from)?)?;
    }
    let result = run_pipeline(&config)?;
    report_warnings(&result);

    let dir = output::out_dir(config.out_dir.as_deref());
    output::ensure_dir(&dir)?;
    output::write_per_class_csv(&result, &dir.join("per_class.csv"))?;
    if !result.counts.is_empty() {
        output::write_counts_csv(&result.counts, &dir.join("counts.csv"))?;
    }
    output::write_json(&output::summary_json(&result), &dir.join("summary.json"))?;

    println!(
        "g0 = {:e}, omega_k_t = {:e}, A_w = {:e} + {:e}i, p_s0 = {:e}",
        result.g0, result.omega_k_t, result.a_w.re, result.a_w.im, result.p_s0
    );
    println!(
        "P_s (first order) = {:e}, P_s (exact) = {}",
        result.p_s_first,
        output::fmt(result.p_s_exact)
    );
    println!("wrote {}", dir.join("per_class.csv").display());
    println!("wrote {}", dir.join("summary.json").display());

    if result.breakdown {
        let negatives: Vec<i32> = result
            .rows
            .iter()
            .filter(|r| r.p_first < 0.0)
            .map(|r| r.n)
            .collect();
        eprintln!(
            "perturbative breakdown: first-order P_n < 0 at classes {negatives:?} \
             (g0·ω_k·t·n²·A_w^i ≥ 1)"
        );
        return Ok(EXIT_BREAKDOWN);
    }
    Ok(0)
}

fn sweep(args: SweepArgs) -> Result<i32, CliError> {
    if args.aw_list.is_empty() {
        return Err(CliError::Config("sweep needs a non-empty --aw-list".into()));
    }
    let mut base = RunConfig::default();
    args.physics.apply(&mut base);
    if let Some(dir) = &args.out_dir {
        base.out_dir = Some(dir.clone());
    }
    if base.aw_target.is_some() || base.omega_t.is_some() {
        return Err(CliError::Config(
            "sweep sets the weak value per point; do not pass --aw-target or --omega-t".into(),
        ));
    }
    base.aw_target = Some(args.aw_list[0]);
    base.validate()?;

    let runs: Vec<Result<PipelineResult, PipelineError>> = run_indexed(args.aw_list.len(), |i| {
        let mut config = base.clone();
        config.aw_target = Some(args.aw_list[i]);
        run_pipeline(&config)
    });

    let dir = output::out_dir(base.out_dir.as_deref());
    output::ensure_dir(&dir)?;
    let mut csv = Vec::new();
    use std::io::Write;
    writeln!(
        csv,
        "index,aw_target,omega_t,aw_imag,p_s0,p_s_exact,shift_n{},p_s0_times_aw_sq",
        args.headline_n
    )?;
    let mut rows_json = Vec::new();
    for (i, run) in runs.into_iter().enumerate() {
        let result = run.map_err(CliError::from)?;
        let shift = result
            .rows
            .iter()
            .find(|r| r.n == args.headline_n)
            .map_or(f64::NAN, |r| r.relative_shift);
        let amplification_cost = result.p_s0 * result.a_w.as_complex().norm_sqr();
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            i,
            output::fmt(args.aw_list[i]),
            output::fmt(result.omega_t.unwrap_or(f64::NAN)),
            output::fmt(result.a_w.im),
            output::fmt(result.p_s0),
            output::fmt(result.p_s_exact),
            output::fmt(shift),
            output::fmt(amplification_cost)
        )?;
        rows_json.push(json!({
            "aw_target": args.aw_list[i],
            "omega_t": result.omega_t,
            "p_s0": result.p_s0,
            "breakdown": result.breakdown,
        }));
    }
    std::fs::write(dir.join("sweep.csv"), csv)?;
    output::write_json(
        &json!({ "points": rows_json.len(), "headline_n": args.headline_n, "rows": rows_json }),
        &dir.join("summary.json"),
    )?;
    println!("wrote {}", dir.join("sweep.csv").display());
    Ok(0)
}

fn kd_spectrum(args: KdSpectrumArgs) -> Result<i32, CliError> {
    let params = KDParams::new(args.eta, 1.0).map_err(|e| CliError::Config(e.to_string()))?;
    let spectrum = bessel_spectrum(&params);
    let dir = output::out_dir(args.out_dir.as_deref());
    output::ensure_dir(&dir)?;
    output::write_spectrum_csv(&spectrum, &dir.join("kd_spectrum.csv"))?;
    let weight_sum: f64 = spectrum.iter().map(|(_, phi)| phi.norm_sqr()).sum();
    let vartheta = theta_moment(&params);
    output::write_json(
        &json!({
            "eta": args.eta,
            "n_max": params.n_max(),
            "vartheta": vartheta,
            "weight_sum": weight_sum,
        }),
        &dir.join("summary.json"),
    )?;
    println!(
        "eta = {}, n_max = {}, vartheta = {:.6} (η²/2 = {:.6}), Σ|φ|² = {:.15}",
        args.eta,
        params.n_max(),
        vartheta,
        args.eta * args.eta / 2.0,
        weight_sum
    );
    println!("wrote {}", dir.join("kd_spectrum.csv").display());
    Ok(0)
}

fn validation_state(center_p: f64) -> Result<JointState, CliError> {
    let grid = Grid1D::position(1024, 80.0).map_err(|e| CliError::Run(e.to_string()))?;
    let packet =
        make_gaussian(&grid, 1.0, 0.0, center_p).map_err(|e| CliError::Run(e.to_string()))?;
    let qubit = QubitState::from_unnormalized(C64::new(1.0, 0.0), C64::new(1.0, 0.0))
        .map_err(|e| CliError::Run(e.to_string()))?;
    Ok(JointState::product(&qubit, &packet))
}

fn validate_dyson(args: DysonArgs) -> Result<i32, CliError> {
    let state = validation_state(0.5)?;
    let dir = output::out_dir(args.out_dir.as_deref());
    output::ensure_dir(&dir)?;

    let mut points = Vec::new();
    let mut csv = Vec::new();
    use std::io::Write;
    writeln!(csv, "g0,l2_error")?;
    let mut richardson = f64::NAN;
    for &g0 in &args.g0_list {
        let params = CouplingParams::new(g0, args.omega_t, args.gbar, args.t)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let dyson = dyson_first_order(&state, &params).map_err(|e| CliError::Run(e.to_string()))?;
        let run = evolve_split_step_z_checked(&state, &params, args.n_steps)
            .map_err(|e| CliError::Run(e.to_string()))?;
        richardson = run.doubling_delta;
        let err = joint_l2(&dyson, &run.state).map_err(CliError::Run)?;
        writeln!(csv, "{},{}", output::fmt(g0), output::fmt(err))?;
        points.push((g0.log10(), err.log10()));
    }
    std::fs::write(dir.join("dyson.csv"), csv)?;
    let slope = fit_slope(&points);
    output::write_json(
        &json!({
            "slope": slope,
            "n_steps": args.n_steps,
            "richardson_delta": richardson,
            "gbar": args.gbar,
            "t": args.t,
        }),
        &dir.join("summary.json"),
    )?;
    println!("dyson convergence slope = {slope:.4} (expect 2), richardson delta = {richardson:e}");
    println!("wrote {}", dir.join("dyson.csv").display());
    Ok(0)
}

fn validate_bch(args: BchArgs) -> Result<i32, CliError> {
    let grid = Grid1D::position(1024, 80.0).map_err(|e| CliError::Run(e.to_string()))?;
    let packet =
        make_gaussian(&grid, 1.0, 0.5, 0.4).map_err(|e| CliError::Run(e.to_string()))?;
    let params = CouplingParams::new(1e-3, 0.0, args.gbar, args.time_s)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let record = bch_transformed_zc(&params, args.time_s);
    let direct = record
        .apply(&packet)
        .map_err(|e| CliError::Run(e.to_string()))?;

    let h_zc = ZcCoefficients {
        c_kin: 1.0,
        c_z: -MASS * args.gbar,
        c_pz: 0.0,
        c_const: 0.0,
    };
    let sandwich_with = |steps: usize| -> Result<WavePacket, CliError> {
        let fwd = split_step_linear_potential(&packet, MASS, args.gbar, args.time_s, steps)
            .map_err(|e| CliError::Run(e.to_string()))?;
        let mid = h_zc.apply(&fwd).map_err(|e| CliError::Run(e.to_string()))?;
        split_step_linear_potential(&mid, MASS, args.gbar, -args.time_s, steps)
            .map_err(|e| CliError::Run(e.to_string()))
    };
    let coarse = sandwich_with(args.n_steps)?;
    let fine = sandwich_with(2 * args.n_steps)?;
    let richardson = coarse
        .l2_distance(&fine)
        .map_err(|e| CliError::Run(e.to_string()))?;
    let max_dev_split = max_pointwise(&fine, &direct);

    // the closed-form propagator gives the same sandwich without stepping
    let exact_fwd = propagate_linear_potential(&packet, MASS, args.gbar, args.time_s)
        .map_err(|e| CliError::Run(e.to_string()))?;
    let exact_mid = h_zc
        .apply(&exact_fwd)
        .map_err(|e| CliError::Run(e.to_string()))?;
    let exact_sandwich = propagate_linear_potential(&exact_mid, MASS, args.gbar, -args.time_s)
        .map_err(|e| CliError::Run(e.to_string()))?;
    let max_dev_exact = max_pointwise(&exact_sandwich, &direct);

    let dir = output::out_dir(args.out_dir.as_deref());
    output::ensure_dir(&dir)?;
    let mut csv = Vec::new();
    use std::io::Write;
    writeln!(csv, "time_s,max_deviation_split,max_deviation_exact,richardson_delta")?;
    writeln!(
        csv,
        "{},{},{},{}",
        output::fmt(args.time_s),
        output::fmt(max_dev_split),
        output::fmt(max_dev_exact),
        output::fmt(richardson)
    )?;
    std::fs::write(dir.join("bch.csv"), csv)?;
    output::write_json(
        &json!({
            "time_s": args.time_s,
            "gbar": args.gbar,
            "n_steps": args.n_steps,
            "max_deviation_split": max_dev_split,
            "max_deviation_exact": max_dev_exact,
            "richardson_delta": richardson,
        }),
        &dir.join("summary.json"),
    )?;
    println!(
        "bch sandwich max deviation = {max_dev_split:e} (split-step), {max_dev_exact:e} (exact), \
         richardson delta = {richardson:e}"
    );
    println!("wrote {}", dir.join("bch.csv").display());
    Ok(0)
}

fn validate_oracle(args: OracleArgs) -> Result<i32, CliError> {
    // grid sized so the momentum span covers every class: dx = 0.06 at the
    // default 4096 points
    let extent = 0.06 * args.n_points as f64;
    let grid =
        Grid1D::position(args.n_points, extent).map_err(|e| CliError::Config(e.to_string()))?;
    let delta = 16.0;
    let packet =
        make_gaussian(&grid, delta, 0.0, 0.0).map_err(|e| CliError::Config(e.to_string()))?;
    let params = KDParams::new(args.eta, 1.0).map_err(|e| CliError::Config(e.to_string()))?;
    let spectrum = bessel_spectrum(&params);
    let qubit = QubitState::from_unnormalized(C64::new(1.0, 0.0), C64::new(1.0, 0.0))
        .map_err(|e| CliError::Run(e.to_string()))?;
    let sel = PostSelection::ground(args.theta);

    let scattered = apply_kd_phase(&packet, &params).map_err(|e| CliError::Run(e.to_string()))?;
    let tilde = to_momentum(&scattered).map_err(|e| CliError::Run(e.to_string()))?;
    let state = JointState::product(&qubit, &tilde);
    // ω_k = 4ħk²/m = 4 with k = 1: t = (ω_k·t)/4
    let omega_k = 4.0;
    let t = args.omega_k_t / omega_k;
    let coupling = CouplingParams::gravity_free(args.g0, args.omega_t, t)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let evolved = evolve_exact_x(&state, &coupling).map_err(|e| CliError::Run(e.to_string()))?;
    let selected = postselect(&evolved, &sel);
    let bins = momentum_class_weights(&selected, &params).map_err(|e| CliError::Run(e.to_string()))?;
    let oracle = exact_class_oracle(&qubit, &sel, args.g0, args.omega_t, omega_k, t, &spectrum);

    let dir = output::out_dir(args.out_dir.as_deref());
    output::ensure_dir(&dir)?;
    let mut csv = Vec::new();
    use std::io::Write;
    writeln!(csv, "n,p_grid,p_oracle,abs_diff")?;
    let mut max_diff = 0.0_f64;
    for (&n, &weight) in bins.iter().filter(|(n, _)| n.abs() <= args.n_limit) {
        let diff = (weight - oracle.prob(n)).abs();
        max_diff = max_diff.max(diff);
        writeln!(
            csv,
            "{},{},{},{}",
            n,
            output::fmt(weight),
            output::fmt(oracle.prob(n)),
            output::fmt(diff)
        )?;
    }
    std::fs::write(dir.join("oracle.csv"), csv)?;
    if let Some(path) = &args.dump_packet {
        let mut file = std::fs::File::create(path)?;
        selected.write_csv(&mut file)?;
    }
    output::write_json(
        &json!({
            "g0": args.g0,
            "eta": args.eta,
            "omega_k_t": args.omega_k_t,
            "n_limit": args.n_limit,
            "max_abs_diff": max_diff,
            "p_s_grid": selected.norm_sq(),
            "p_s_oracle": oracle.p_s,
        }),
        &dir.join("summary.json"),
    )?;
    println!("grid vs oracle: max |ΔP_n| = {max_diff:e} over |n| ≤ {}", args.n_limit);
    println!("wrote {}", dir.join("oracle.csv").display());
    Ok(0)
}

/// Monte Carlo counts, chunked over the worker pool; per-trial seeding keeps
/// the result identical to a serial run.
fn parallel_counts(
    dist: &weakmass_core::weakmeas::MomentumClassDistribution,
    noise: &NoiseModel,
    classes: &[i32],
    trials: u32,
) -> Result<Vec<CountRecord>, CliError> {
    let workers = crate::threads::thread_budget().min(trials.max(1) as usize);
    let chunk = trials.div_ceil(workers as u32).max(1);
    let n_chunks = trials.div_ceil(chunk) as usize;
    let chunks: Vec<Result<Vec<CountRecord>, String>> = run_indexed(n_chunks, |i| {
        let start = i as u32 * chunk;
        let count = chunk.min(trials - start);
        simulate_counts_range(dist, noise, classes, start, count).map_err(|e| e.to_string())
    });
    let mut records = Vec::with_capacity(classes.len() * trials as usize);
    for chunk in chunks {
        records.extend(chunk.map_err(CliError::Run)?);
    }
    Ok(records)
}

fn noise_mc(args: NoiseMcArgs) -> Result<i32, CliError> {
    let mut config = build_config(None, &args.physics, &args.noise, args.out_dir.as_ref())?;
    if config.trials == 0 {
        return Err(CliError::Config("noise-mc needs --trials ≥ 1".into()));
    }
    // closed-form stage first; counting is orchestrated here so it can use
    // the worker pool
    let trials = config.trials;
    config.trials = 0;
    let result = run_pipeline(&config)?;
    report_warnings(&result);
    let omega_t = result.omega_t.ok_or_else(|| {
        CliError::Config("noise-mc needs the rotation path: set omega_t or aw_target".into())
    })?;

    let qubit = QubitState::from_unnormalized(
        C64::new(config.alpha, 0.0),
        C64::new(config.beta, 0.0),
    )
    .map_err(|e| CliError::Run(e.to_string()))?;
    let params = KDParams::new(config.eta, 1.0).map_err(|e| CliError::Config(e.to_string()))?;
    let spectrum = bessel_spectrum(&params);
    let sel = PostSelection::ground(config.theta);
    let dist = exact_class_oracle(
        &qubit,
        &sel,
        result.g0,
        omega_t,
        result.omega_k_t,
        1.0,
        &spectrum,
    );
    let noise = NoiseModel::new(
        config.n_atoms,
        config.xi_s_sd,
        config.xi_d_sd,
        config.dark_rate,
        config.seed,
    )
    .map_err(|e| CliError::Config(e.to_string()))?
    .with_shot_noise(config.shot_noise);
    let records = parallel_counts(&dist, &noise, &config.classes, trials)?;

    let fit = if trials >= 2
        && result.a_w.im != 0.0
        && config.classes.contains(&0)
        && config.classes.iter().any(|&n| n != 0)
    {
        Some(
            recover_g0(&records, &result.a_w, result.omega_k_t, 1.0, &spectrum)
                .map_err(|e| CliError::Run(e.to_string()))?,
        )
    } else {
        None
    };

    let dir = output::out_dir(config.out_dir.as_deref());
    output::ensure_dir(&dir)?;
    output::write_counts_csv(&records, &dir.join("counts.csv"))?;
    output::write_json(
        &json!({
            "g0_true": result.g0,
            "omega_k_t": result.omega_k_t,
            "a_w": { "re": result.a_w.re, "im": result.a_w.im },
            "trials": trials,
            "classes": config.classes,
            "n_atoms": config.n_atoms,
            "xi_s_sd": config.xi_s_sd,
            "xi_d_sd": config.xi_d_sd,
            "dark_rate": config.dark_rate,
            "seed": config.seed,
            "shot_noise": config.shot_noise,
            "fit": fit.map(|f| json!({
                "g0_hat": f.g0_hat,
                "stderr": f.stderr,
                "trials": f.trials,
                "detectability": f.stderr.is_finite() && f.significance() >= 3.0,
            })),
        }),
        &dir.join("summary.json"),
    )?;
    if let Some(f) = fit {
        println!(
            "g0_hat = {:e} ± {:e} ({} trials, {}σ)",
            f.g0_hat,
            f.stderr,
            f.trials,
            if f.stderr.is_finite() {
                format!("{:.1}", f.significance())
            } else {
                "n/a".into()
            }
        );
    }
    println!("wrote {}", dir.join("counts.csv").display());
    Ok(0)
}

fn joint_l2(a: &JointState, b: &JointState) -> Result<f64, String> {
    Ok((a
        .comp_g()
        .l2_distance(b.comp_g())
        .map_err(|e| e.to_string())?
        .powi(2)
        + a.comp_e()
            .l2_distance(b.comp_e())
            .map_err(|e| e.to_string())?
            .powi(2))
    .sqrt())
}

fn max_pointwise(a: &WavePacket, b: &WavePacket) -> f64 {
    a.amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn fit_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx: f64 = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my: f64 = points.iter().map(|p| p.1).sum::<f64>() / n;
    let cov: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let var: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    cov / var
}
