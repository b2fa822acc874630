//! Closed-form measurement pipeline: preparation → coupling → post-selection
//! → detection, evaluated through the spectral decomposition and the exact
//! per-class oracle (grid evolution is exercised by the `validate`
//! subcommands; at the physical coupling strength only the closed forms
//! resolve the signal).

use crate::config::RunConfig;
use crate::preset::{derive_groups, PhysicalPreset};
use weakmass_core::num_complex::Complex64 as C64;
use std::f64::consts::PI;
use thiserror::Error;
use weakmass_core::detector::{recover_g0, simulate_counts, G0Fit, NoiseModel};
use weakmass_core::hilbert::QubitState;
use weakmass_core::kd::{bessel_spectrum, theta_moment, KDParams, KDSpectrum};
use weakmass_core::weakmeas::{
    exact_class_oracle, p_n_first_order, p_s_first_order, weak_value_from_rotation,
    MomentumClassDistribution, PostSelection, WeakValue,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{0}")]
    Config(String),
    #[error("core failure: {0}")]
    Core(String),
}

/// One row of the per-class output table.
#[derive(Debug, Clone, Copy)]
pub struct ClassRow {
    pub n: i32,
    pub p_first: f64,
    /// All-orders oracle value; NaN when only a direct weak value was given.
    pub p_exact: f64,
    /// `1 − P_n/(p_s0·J_n²)`, the relative suppression of class `n`.
    pub relative_shift: f64,
    /// Mean counts over trials (counting runs only).
    pub counts_mean: Option<f64>,
}

/// Everything a pipeline run produces.
#[derive(Debug)]
pub struct PipelineResult {
    pub g0: f64,
    pub omega_k_t: f64,
    pub eta: f64,
    pub n_max: usize,
    pub vartheta: f64,
    pub omega_t: Option<f64>,
    pub a_w: WeakValue,
    pub rows: Vec<ClassRow>,
    pub p_s0: f64,
    pub p_s_first: f64,
    /// NaN without the rotation path.
    pub p_s_exact: f64,
    /// Any first-order class probability went negative.
    pub breakdown: bool,
    /// `g0·ω_k·t·n_max²·|A_w^i| < 1`.
    pub perturbative_ok: bool,
    pub fit: Option<G0Fit>,
    pub counts: Vec<weakmass_core::detector::CountRecord>,
    pub warnings: Vec<String>,
    /// Derived SI groups when a preset drove the run.
    pub si_groups: Option<crate::preset::DimensionlessGroups>,
}

/// Solve `ωt` so that the rotation weak value hits `A_w^i = target`.
///
/// Scans `1/A_w^i(ωt) − 1/target` (continuous through the singular points)
/// over a period, bisects every bracketed root, verifies each against the
/// target, and returns the solution with the largest post-selection
/// probability.
pub fn solve_omega_t_for_aw_imag(
    qubit: &QubitState,
    theta: f64,
    target: f64,
) -> Option<(f64, WeakValue)> {
    if target == 0.0 || !target.is_finite() {
        return None;
    }
    let aw_im = |omega_t: f64| weak_value_from_rotation(qubit, omega_t, theta).im;
    let g = |omega_t: f64| {
        let im = aw_im(omega_t);
        if im == 0.0 {
            f64::INFINITY
        } else {
            1.0 / im - 1.0 / target
        }
    };

    const SAMPLES: usize = 16384;
    let step = 2.0 * PI / SAMPLES as f64;
    let mut best: Option<(f64, WeakValue)> = None;
    let mut prev = g(0.0);
    for i in 1..=SAMPLES {
        let omega_t = i as f64 * step;
        let here = g(omega_t);
        if prev.is_finite() && here.is_finite() && prev * here <= 0.0 && prev != here {
            let (mut lo, mut hi) = (omega_t - step, omega_t);
            let mut g_lo = prev;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let g_mid = g(mid);
                if g_lo * g_mid <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    g_lo = g_mid;
                }
            }
            let root = 0.5 * (lo + hi);
            let w = weak_value_from_rotation(qubit, root, theta);
            // discard brackets that straddled a pole of 1/A_w^i
            if ((w.im - target) / target).abs() < 1e-6
                && best.as_ref().is_none_or(|(_, b)| w.p_s0 > b.p_s0)
            {
                best = Some((root, w));
            }
        }
        prev = here;
    }
    best
}

struct ResolvedGroups {
    g0: f64,
    omega_k_t: f64,
    si: Option<crate::preset::DimensionlessGroups>,
    warnings: Vec<String>,
}

fn resolve_groups(config: &RunConfig) -> Result<ResolvedGroups, PipelineError> {
    if let Some(name) = &config.preset {
        let preset = PhysicalPreset::by_name(name)
            .ok_or_else(|| PipelineError::Config(format!("unknown preset {name:?}")))?;
        let t = config.t_coupling_s.unwrap_or(preset.lifetime_s);
        let groups = derive_groups(&preset, t);
        let mut warnings = Vec::new();
        if groups.exceeds_lifetime {
            warnings.push(format!(
                "coupling window {t:e} s exceeds the excited-state lifetime {:e} s",
                preset.lifetime_s
            ));
        }
        Ok(ResolvedGroups {
            g0: groups.g0,
            omega_k_t: groups.omega_k_t,
            si: Some(groups),
            warnings,
        })
    } else {
        Ok(ResolvedGroups {
            g0: config.g0.expect("validated"),
            omega_k_t: config.omega_k_t.expect("validated"),
            si: None,
            warnings: Vec::new(),
        })
    }
}

/// Resolve the weak value: the rotation path whenever an `ωt` is available (given
/// or solved from `aw_target`); direct `aw_real`/`aw_imag` otherwise (with
/// `p_s0 = 1`, i.e. probabilities conditioned on the zeroth-order
/// post-selection). When both are given the rotation path wins and a
/// mismatch warning is recorded.
fn resolve_weak_value(
    config: &RunConfig,
    qubit: &QubitState,
    warnings: &mut Vec<String>,
) -> Result<(Option<f64>, WeakValue), PipelineError> {
    let omega_t = if let Some(target) = config.aw_target {
        let (omega_t, _) = solve_omega_t_for_aw_imag(qubit, config.theta, target).ok_or_else(
            || {
                PipelineError::Config(format!(
                    "aw_target {target:e} unreachable for alpha={}, beta={}, theta={}",
                    config.alpha, config.beta, config.theta
                ))
            },
        )?;
        Some(omega_t)
    } else {
        config.omega_t
    };

    match omega_t {
        Some(omega_t) => {
            let w = weak_value_from_rotation(qubit, omega_t, config.theta);
            if let (Some(re), Some(im)) = (config.aw_real, config.aw_imag) {
                if (w.re - re).abs() > 1e-6 * (1.0 + re.abs())
                    || (w.im - im).abs() > 1e-6 * (1.0 + im.abs())
                {
                    warnings.push(format!(
                        "aw_real/aw_imag ({re:e}, {im:e}) disagree with the rotation weak value \
                         ({:e}, {:e}); using the rotation value",
                        w.re, w.im
                    ));
                }
            }
            Ok((Some(omega_t), w))
        }
        None => match (config.aw_real, config.aw_imag) {
            (Some(re), Some(im)) => Ok((None, WeakValue::new(re, im, 1.0))),
            _ => Err(PipelineError::Config(
                "no weak value: set omega_t, aw_target, or aw_real + aw_imag".into(),
            )),
        },
    }
}

/// Execute the measurement pipeline for a validated config.
pub fn run_pipeline(config: &RunConfig) -> Result<PipelineResult, PipelineError> {
    config
        .validate()
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    let groups = resolve_groups(config)?;
    let mut warnings = groups.warnings;

    let qubit = QubitState::from_unnormalized(
        C64::new(config.alpha, 0.0),
        C64::new(config.beta, 0.0),
    )
    .map_err(|e| PipelineError::Config(e.to_string()))?;
    let (omega_t, a_w) = resolve_weak_value(config, &qubit, &mut warnings)?;
    if a_w.near_singular {
        warnings.push(format!(
            "post-selection is near-singular (p_s0 = {:e}); weak value unreliable",
            a_w.p_s0
        ));
    }

    // k = 1 in simulation units; only the ω_k·t product enters the phases, so
    // the core is called with omega_k = ω_k·t and t = 1.
    let params = KDParams::new(config.eta, 1.0)
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    let spectrum: KDSpectrum = bessel_spectrum(&params);
    let vartheta = theta_moment(&params);
    let (omega_k, t) = (groups.omega_k_t, 1.0);

    let first = p_n_first_order(&a_w, groups.g0, omega_k, t, &spectrum);
    let exact: Option<MomentumClassDistribution> = omega_t.map(|omega_t| {
        let sel = PostSelection::ground(config.theta);
        exact_class_oracle(&qubit, &sel, groups.g0, omega_t, omega_k, t, &spectrum)
    });
    let p_s_first = p_s_first_order(&a_w, groups.g0, omega_k, t, vartheta, 0.0);
    let p_s_exact = exact.as_ref().map_or(f64::NAN, |d| d.p_s);

    let n_max_sq = (params.n_max() * params.n_max()) as f64;
    let perturbative_ok = groups.g0 * omega_k * t * n_max_sq * a_w.im.abs() < 1.0;
    if first.breakdown {
        warnings.push(
            "first-order class probabilities went negative (perturbative breakdown)".into(),
        );
    }

    // counting stage
    let (counts, fit) = if config.trials > 0 {
        let noise = NoiseModel::new(
            config.n_atoms,
            config.xi_s_sd,
            config.xi_d_sd,
            config.dark_rate,
            config.seed,
        )
        .map_err(|e| PipelineError::Config(e.to_string()))?
        .with_shot_noise(config.shot_noise);
        // counts come from the all-orders distribution when available
        let dist = exact.as_ref().unwrap_or(&first);
        let counts = simulate_counts(dist, &noise, &config.classes, config.trials)
            .map_err(|e| PipelineError::Core(e.to_string()))?;
        let fit = if config.trials >= 2
            && a_w.im != 0.0
            && config.classes.contains(&0)
            && config.classes.iter().any(|&n| n != 0)
        {
            Some(
                recover_g0(&counts, &a_w, omega_k, t, &spectrum)
                    .map_err(|e| PipelineError::Core(e.to_string()))?,
            )
        } else {
            None
        };
        (counts, fit)
    } else {
        (Vec::new(), None)
    };

    let counts_mean = |n: i32| -> Option<f64> {
        if counts.is_empty() {
            return None;
        }
        let class: Vec<f64> = counts
            .iter()
            .filter(|r| r.detector_n == n)
            .map(|r| r.counts)
            .collect();
        if class.is_empty() {
            None
        } else {
            Some(class.iter().sum::<f64>() / class.len() as f64)
        }
    };

    let rows: Vec<ClassRow> = spectrum
        .iter()
        .map(|(n, phi)| {
            let weight = phi.norm_sqr();
            let p_first = first.prob(n);
            let p_exact = exact.as_ref().map_or(f64::NAN, |d| d.prob(n));
            let baseline = a_w.p_s0 * weight;
            let reference = if p_exact.is_nan() { p_first } else { p_exact };
            let relative_shift = if baseline > 0.0 {
                1.0 - reference / baseline
            } else {
                0.0
            };
            ClassRow {
                n,
                p_first,
                p_exact,
                relative_shift,
                counts_mean: counts_mean(n),
            }
        })
        .collect();

    Ok(PipelineResult {
        g0: groups.g0,
        omega_k_t: groups.omega_k_t,
        eta: config.eta,
        n_max: params.n_max(),
        vartheta,
        omega_t,
        a_w,
        rows,
        p_s0: a_w.p_s0,
        p_s_first,
        p_s_exact,
        breakdown: first.breakdown,
        perturbative_ok,
        fit,
        counts,
        warnings,
        si_groups: groups.si,
    })
}
