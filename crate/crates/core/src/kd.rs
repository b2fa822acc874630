//! Kapitza-Dirac (Raman-Nath) scattering: the standing-wave phase mask, its
//! Bessel decomposition into momentum classes `|n⟩` displaced by `2ħk·n`, the
//! free-flight separation of classes, and the spectral moment
//! `ϑ = Σ n²J_n²(η)`.

use crate::bessel::bessel_j_sequence;
use crate::hilbert::{AxisKind, Grid1D, HilbertError, WavePacket};
use crate::{HBAR, MASS};
use num_complex::Complex64 as C64;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use thiserror::Error;

/// Default ratio `D_n / spread` above which two classes count as resolvable.
pub const DEFAULT_SEPARATION_RATIO: f64 = 5.0;

/// Series truncation budget: `n_max` is the smallest order with
/// `Σ_{|n|>n_max} J_n²(η)` below this.
pub const TRUNCATION_BUDGET: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum KdError {
    #[error("pulse area must be finite and ≥ 0, got {eta}")]
    BadEta { eta: f64 },
    #[error("light wavenumber must be positive, got {k}")]
    BadWavenumber { k: f64 },
    #[error("grid spacing {spacing} does not resolve the standing wave, need < {required}")]
    GridTooCoarse { spacing: f64, required: f64 },
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
}

/// Pulse parameters of one standing-wave scattering event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KDParams {
    eta: f64,
    k_light: f64,
    n_max: usize,
}

impl KDParams {
    /// Picks the smallest truncation order with tail weight below
    /// [`TRUNCATION_BUDGET`] (roughly `η + 15` for `η ≤ 20`).
    pub fn new(eta: f64, k_light: f64) -> Result<Self, KdError> {
        if eta.is_nan() || eta < 0.0 || !eta.is_finite() {
            return Err(KdError::BadEta { eta });
        }
        if k_light.is_nan() || k_light <= 0.0 || !k_light.is_finite() {
            return Err(KdError::BadWavenumber { k: k_light });
        }
        let probe = eta.ceil() as usize + 60;
        let jn = bessel_j_sequence(probe, eta);
        let mut tail = 0.0;
        let mut n_max = probe;
        // Accumulate the symmetric tail 2·Σ_{m>n} J_m² from the outside in.
        for n in (0..probe).rev() {
            tail += 2.0 * jn[n + 1] * jn[n + 1];
            if tail >= TRUNCATION_BUDGET {
                n_max = n + 1;
                break;
            }
            n_max = n;
        }
        Ok(Self {
            eta,
            k_light,
            n_max: n_max.max(1),
        })
    }

    pub fn with_n_max(eta: f64, k_light: f64, n_max: usize) -> Result<Self, KdError> {
        let mut params = Self::new(eta, k_light)?;
        params.n_max = n_max;
        Ok(params)
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn k_light(&self) -> f64 {
        self.k_light
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Momentum kick of class `n`: `p_n = 2nħk`.
    pub fn class_momentum(&self, n: i32) -> f64 {
        2.0 * n as f64 * HBAR * self.k_light
    }
}

/// Truncated Bessel decomposition `{φ(n) = iⁿ·J_n(η)}` of the scattered state
/// over momentum classes `|n| ≤ n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct KDSpectrum {
    coeffs: Vec<C64>,
    n_max: usize,
}

impl KDSpectrum {
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// `φ(n)`; zero outside the truncation window.
    pub fn phi(&self, n: i32) -> C64 {
        let idx = n + self.n_max as i32;
        if idx < 0 || idx as usize >= self.coeffs.len() {
            C64::new(0.0, 0.0)
        } else {
            self.coeffs[idx as usize]
        }
    }

    /// `|φ(n)|² = J_n²(η)`.
    pub fn weight(&self, n: i32) -> f64 {
        self.phi(n).norm_sqr()
    }

    /// `(n, φ(n))` in ascending class order.
    pub fn iter(&self) -> impl Iterator<Item = (i32, C64)> + '_ {
        let n_max = self.n_max as i32;
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(idx, &c)| (idx as i32 - n_max, c))
    }

    /// Class indices `-n_max ..= n_max`.
    pub fn classes(&self) -> impl Iterator<Item = i32> {
        let n_max = self.n_max as i32;
        -n_max..=n_max
    }
}

/// `{φ(n) = iⁿ·J_n(η)}` for `|n| ≤ n_max`.
pub fn bessel_spectrum(params: &KDParams) -> KDSpectrum {
    let n_max = params.n_max();
    let jn = bessel_j_sequence(n_max, params.eta());
    let mut coeffs = vec![C64::new(0.0, 0.0); 2 * n_max + 1];
    for n in -(n_max as i32)..=(n_max as i32) {
        let j = jn[n.unsigned_abs() as usize];
        // J_{-n} = (-1)^n J_n
        let j = if n < 0 && n % 2 != 0 { -j } else { j };
        coeffs[(n + n_max as i32) as usize] = i_power(n) * j;
    }
    KDSpectrum { coeffs, n_max }
}

/// `iⁿ` for any integer `n`.
fn i_power(n: i32) -> C64 {
    match n.rem_euclid(4) {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// `ϑ = Σ_{|n|≤n_max} n²·J_n²(η)`; equals `η²/2` up to truncation.
pub fn theta_moment(params: &KDParams) -> f64 {
    let jn = bessel_j_sequence(params.n_max(), params.eta());
    2.0 * jn
        .iter()
        .enumerate()
        .skip(1)
        .map(|(n, j)| (n * n) as f64 * j * j)
        .sum::<f64>()
}

/// Raman-Nath scattering: pointwise multiplication by `e^{iη·cos(2kx)}`.
///
/// The kinetic phase accumulated during the pulse and the constant `e^{-iη}`
/// are dropped, as is standard in the Raman-Nath regime; see
/// [`apply_kd_phase_with_kinetic`] to retain the former.
pub fn apply_kd_phase(packet: &WavePacket, params: &KDParams) -> Result<WavePacket, KdError> {
    if packet.grid().axis_kind() != AxisKind::Position {
        return Err(KdError::Hilbert(HilbertError::AxisMismatch {
            expected: AxisKind::Position,
            found: packet.grid().axis_kind(),
        }));
    }
    let limit = PI / (4.0 * params.k_light());
    if packet.grid().spacing() >= limit {
        return Err(KdError::GridTooCoarse {
            spacing: packet.grid().spacing(),
            required: limit,
        });
    }
    let mut out = packet.clone();
    let grid = *packet.grid();
    for (j, a) in out.amplitudes_mut().iter_mut().enumerate() {
        let x = grid.value(j);
        *a *= C64::new(0.0, params.eta() * (2.0 * params.k_light() * x).cos()).exp();
    }
    Ok(out)
}

/// Scattering with the intra-pulse kinetic phase `e^{-ip̂²τ/(2mħ)}` retained,
/// for sensitivity studies outside the strict Raman-Nath limit.
pub fn apply_kd_phase_with_kinetic(
    packet: &WavePacket,
    params: &KDParams,
    tau: f64,
) -> Result<WavePacket, KdError> {
    let masked = apply_kd_phase(packet, params)?;
    let mut tilde = crate::hilbert::to_momentum(&masked)?;
    let grid = *tilde.grid();
    for (j, a) in tilde.amplitudes_mut().iter_mut().enumerate() {
        let p = grid.value(j);
        *a *= C64::new(0.0, -p * p * tau / (2.0 * MASS * HBAR)).exp();
    }
    Ok(crate::hilbert::to_position(&tilde)?)
}

/// Free-flight separation of one momentum class from the undeflected beam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparationReport {
    /// Center displacement `D_n = 4nπħt₀/(mλ)` after flight time `t₀`.
    pub displacement: f64,
    /// Packet size `sqrt(Δ² + Δ_d²)` with diffusion `Δ_d = ħt₀/(2mΔ)`.
    pub spread: f64,
    pub resolvable: bool,
}

/// Resolvability of class `n` after free flight `t0` with the default
/// threshold `D_n > 5·spread`.
pub fn separation_check(params: &KDParams, delta: f64, t0: f64, n: i32) -> SeparationReport {
    separation_check_with_threshold(params, delta, t0, n, DEFAULT_SEPARATION_RATIO)
}

/// Same as [`separation_check`] with an explicit `D_n/spread` threshold.
pub fn separation_check_with_threshold(
    params: &KDParams,
    delta: f64,
    t0: f64,
    n: i32,
    ratio_threshold: f64,
) -> SeparationReport {
    let lambda = 2.0 * PI / params.k_light();
    let displacement = 4.0 * n.abs() as f64 * PI * HBAR * t0 / (MASS * lambda);
    let diffusion = HBAR * t0 / (2.0 * MASS * delta);
    let spread = (delta * delta + diffusion * diffusion).sqrt();
    SeparationReport {
        displacement,
        spread,
        resolvable: displacement > ratio_threshold * spread,
    }
}

/// Integrated `|amplitude|²` per momentum class: bin `n` covers
/// `p ∈ [(2n-1)ħk, (2n+1)ħk)` for `|n| ≤ n_max`.
///
/// This is the detector-side view of a scattered packet; with classes far
/// narrower than the bin width (`σ ≪ ħk`) it recovers the per-class weights.
pub fn momentum_class_weights(
    packet: &WavePacket,
    params: &KDParams,
) -> Result<BTreeMap<i32, f64>, KdError> {
    if packet.grid().axis_kind() != AxisKind::Momentum {
        return Err(KdError::Hilbert(HilbertError::AxisMismatch {
            expected: AxisKind::Momentum,
            found: packet.grid().axis_kind(),
        }));
    }
    let grid: Grid1D = *packet.grid();
    let hk = HBAR * params.k_light();
    let n_max = params.n_max() as i32;
    let mut bins: BTreeMap<i32, f64> = (-n_max..=n_max).map(|n| (n, 0.0)).collect();
    for (j, a) in packet.amplitudes().iter().enumerate() {
        let p = grid.value(j);
        // round(p / 2ħk) with half-open bins [(2n-1)ħk, (2n+1)ħk)
        let n = ((p / (2.0 * hk)) + 0.5).floor() as i32;
        if let Some(w) = bins.get_mut(&n) {
            *w += a.norm_sqr() * grid.spacing();
        }
    }
    Ok(bins)
}
