//! Weak-measurement algebra: weak values from internal-state post-selection,
//! post-selected expectations, the post-selection probability `P_s`, the
//! momentum-class distribution `P_n` at first order in `g₀`, the reshaped
//! momentum state, and a closed-form all-orders per-class oracle.
//!
//! Conventions follow the state-selective scattering scheme: the
//! post-selection bra is `⟨g|R̂` with the single-qubit rotation
//! `R̂ = exp[-iθ(|e⟩⟨g| + |g⟩⟨e|)]`, and the pre-rotated initial state is
//! `|A'_i⟩ = exp(-iωt|e⟩⟨e|)·|A_i⟩`.

use crate::hilbert::{AxisKind, JointState, QubitState, WavePacket};
use crate::kd::KDSpectrum;
use crate::{HBAR, MASS};
use num_complex::Complex64 as C64;
use std::collections::BTreeMap;

/// Post-selection success probability below which a weak value is flagged as
/// near-singular.
pub const NEAR_SINGULAR_P_S0: f64 = 1e-10;

/// Which internal state the state-selective scattering picks out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectedState {
    Ground,
    Excited,
}

/// Post-selection built from a qubit rotation by `θ` followed by
/// state-selective scattering of `selected`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostSelection {
    pub theta: f64,
    pub selected: SelectedState,
}

impl PostSelection {
    pub fn new(theta: f64, selected: SelectedState) -> Self {
        Self { theta, selected }
    }

    /// The scheme's post-selection: scattering on `|g⟩`.
    pub fn ground(theta: f64) -> Self {
        Self::new(theta, SelectedState::Ground)
    }

    /// Components `(⟨A_s|g⟩, ⟨A_s|e⟩)` of the selection bra `⟨sel|R̂`.
    ///
    /// `R̂ = cosθ·1 − i·sinθ·σ_x`, so `⟨g|R̂ = cosθ⟨g| − i·sinθ⟨e|` and
    /// `⟨e|R̂ = −i·sinθ⟨g| + cosθ⟨e|`.
    pub fn bra(&self) -> (C64, C64) {
        let (cos, sin) = (self.theta.cos(), self.theta.sin());
        match self.selected {
            SelectedState::Ground => (C64::new(cos, 0.0), C64::new(0.0, -sin)),
            SelectedState::Excited => (C64::new(0.0, -sin), C64::new(cos, 0.0)),
        }
    }
}

/// Complex weak value `A_w = ⟨A_s|e⟩⟨e|A'_i⟩ / ⟨A_s|A'_i⟩` with the
/// zeroth-order post-selection probability `p_s0 = |⟨A_s|A'_i⟩|²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakValue {
    pub re: f64,
    pub im: f64,
    pub p_s0: f64,
    /// Raised when `p_s0 < 1e-10`; the weak value blows up there.
    pub near_singular: bool,
}

impl WeakValue {
    pub fn new(re: f64, im: f64, p_s0: f64) -> Self {
        Self {
            re,
            im,
            p_s0,
            near_singular: p_s0 < NEAR_SINGULAR_P_S0,
        }
    }

    pub fn as_complex(&self) -> C64 {
        C64::new(self.re, self.im)
    }
}

/// A value carrying a first-order-validity flag instead of an error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakExpectation {
    pub value: f64,
    /// False once `|g·A_w|` leaves the weak-interaction regime.
    pub within_weak_regime: bool,
}

/// Generic first-order post-selected expectation
/// `⟨M̂⟩ ≈ m_i + 2g·Im(A_w·m_b)`,
/// where `m_i = ⟨B_i|M̂|B_i⟩` and `m_b = ⟨B_i|M̂B̂|B_i⟩ − m_i·⟨B_i|B̂|B_i⟩`.
pub fn generic_weak_expectation(a_w: &WeakValue, g: f64, m_i: f64, m_b: C64) -> WeakExpectation {
    let shift = 2.0 * g * (a_w.as_complex() * m_b).im;
    WeakExpectation {
        value: m_i + shift,
        within_weak_regime: (g * a_w.as_complex().norm()).abs() < 0.1,
    }
}

/// Weak value of `|e⟩⟨e|` for the rotation-based post-selection:
/// `A_w = β / (β + i·e^{iωt}·α·cot θ)` for the ground-selective scheme, with
/// `|A_i⟩ = α|g⟩ + β|e⟩` and `|A'_i⟩ = e^{-iωt|e⟩⟨e|}|A_i⟩`.
///
/// An exactly vanishing denominator returns infinite components with the
/// near-singular flag and `p_s0 = 0`.
pub fn weak_value_from_rotation(initial: &QubitState, omega_t: f64, theta: f64) -> WeakValue {
    weak_value_for_selection(initial, omega_t, &PostSelection::ground(theta))
}

/// [`weak_value_from_rotation`] generalized to either selected state.
pub fn weak_value_for_selection(
    initial: &QubitState,
    omega_t: f64,
    sel: &PostSelection,
) -> WeakValue {
    let (s_g, s_e) = sel.bra();
    let beta_rotated = initial.amp_e() * C64::new(0.0, -omega_t).exp();
    let numerator = s_e * beta_rotated;
    let denominator = s_g * initial.amp_g() + numerator;
    let p_s0 = denominator.norm_sqr();
    if p_s0 == 0.0 {
        return WeakValue {
            re: f64::INFINITY,
            im: f64::INFINITY,
            p_s0: 0.0,
            near_singular: true,
        };
    }
    let a_w = numerator / denominator;
    WeakValue::new(a_w.re, a_w.im, p_s0)
}

/// Collapse of the external motion on post-selecting `⟨A_s|`:
/// returns the unnormalized packet `⟨A_s|g⟩·comp_g + ⟨A_s|e⟩·comp_e`.
/// Its squared norm is the exact post-selection probability.
///
/// The internal phase `e^{-iωt|e⟩⟨e|}` must already be carried by the state
/// (every propagator in `dynamics` applies it).
pub fn postselect(state: &JointState, sel: &PostSelection) -> WavePacket {
    let (s_g, s_e) = sel.bra();
    let mut out = state.comp_g().clone();
    for (o, e) in out
        .amplitudes_mut()
        .iter_mut()
        .zip(state.comp_e().amplitudes())
    {
        *o = s_g * *o + s_e * e;
    }
    out
}

/// First-order post-selection probability
/// `P_s = p_s0·(1 − A_w^i·g₀·(ω_k·t·ϑ + t·yz_term/mħ))`.
///
/// `vartheta` is the truncated spectral moment `Σ n²J_n²`; pass the value
/// from [`crate::kd::theta_moment`] so that `Σ_n P_n = P_s` holds exactly.
/// `yz_term` is the transverse/vertical contribution
/// `⟨p_y² + p_z²⟩ − 2m⟨Ĝ⟩` (zero when those directions are neglected).
pub fn p_s_first_order(
    a_w: &WeakValue,
    g0: f64,
    omega_k: f64,
    t: f64,
    vartheta: f64,
    yz_term: f64,
) -> f64 {
    a_w.p_s0 * (1.0 - a_w.im * g0 * t * (omega_k * vartheta + yz_term / (MASS * HBAR)))
}

/// The transverse/vertical scalar `⟨p_y² + p_z²⟩ − 2m·⟨Ĝ⟩` entering the
/// general post-selection probability, evaluated for Gaussian y/z states
/// from their first and second moments.
///
/// Pass the result as `yz_term` to [`p_s_first_order`]; it defaults to zero
/// when the transverse directions are neglected.
pub fn gaussian_yz_term(
    p_y2_mean: f64,
    p_z2_mean: f64,
    effective_g: &crate::dynamics::EffectiveG,
    z_mean: f64,
    pz_mean: f64,
) -> f64 {
    p_y2_mean + p_z2_mean - 2.0 * MASS * effective_g.mean(z_mean, pz_mean)
}

/// Probabilities of the momentum classes after post-selection, with the
/// consistency sum `p_s` and a perturbative-breakdown flag.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumClassDistribution {
    probs: BTreeMap<i32, f64>,
    pub p_s: f64,
    /// Raised when any first-order `P_n` went negative
    /// (`g₀·ω_k·t·n²·A_w^i` approaching 1).
    pub breakdown: bool,
}

impl MomentumClassDistribution {
    fn from_probs(probs: BTreeMap<i32, f64>) -> Self {
        let breakdown = probs.values().any(|p| *p < 0.0);
        // compensated sum so the Σ P_n = P_s identity survives at 1e-12
        let mut sum = 0.0_f64;
        let mut carry = 0.0_f64;
        for p in probs.values() {
            let y = p - carry;
            let t = sum + y;
            carry = (t - sum) - y;
            sum = t;
        }
        Self {
            probs,
            p_s: sum,
            breakdown,
        }
    }

    pub fn prob(&self, n: i32) -> f64 {
        self.probs.get(&n).copied().unwrap_or(0.0)
    }

    /// `(n, P_n)` in ascending class order.
    pub fn iter(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.probs.iter().map(|(&n, &p)| (n, p))
    }

    pub fn n_max(&self) -> i32 {
        self.probs.keys().next_back().copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// First-order momentum-class distribution
/// `P_n = p_s0·J_n²·(1 − g₀·ω_k·t·n²·A_w^i)` for `|n| ≤ n_max`.
///
/// Negative entries flag perturbative breakdown rather than being clamped.
pub fn p_n_first_order(
    a_w: &WeakValue,
    g0: f64,
    omega_k: f64,
    t: f64,
    spectrum: &KDSpectrum,
) -> MomentumClassDistribution {
    let probs = spectrum
        .iter()
        .map(|(n, phi)| {
            let suppression = g0 * omega_k * t * (n as f64) * (n as f64) * a_w.im;
            (n, a_w.p_s0 * phi.norm_sqr() * (1.0 - suppression))
        })
        .collect();
    MomentumClassDistribution::from_probs(probs)
}

/// Post-selected momentum-space state reshaping: multiplies each momentum
/// amplitude by `e^{-i·t_r·p²/2mħ} · e^{-t_i·p²/2mħ}` with
/// `t_r = t(1 − g₀A_w^r)` and `t_i = g₀·t·A_w^i`. The real part of the weak
/// value only contributes phases; the imaginary part damps the momentum
/// distribution. Output is unnormalized, on the momentum grid.
pub fn reshaped_x_state(packet: &WavePacket, a_w: &WeakValue, g0: f64, t: f64) -> WavePacket {
    let mut tilde = match packet.grid().axis_kind() {
        AxisKind::Momentum => packet.clone(),
        AxisKind::Position => {
            crate::hilbert::to_momentum(packet).expect("position packet transforms")
        }
    };
    let t_r = t * (1.0 - g0 * a_w.re);
    let t_i = g0 * t * a_w.im;
    let grid = *tilde.grid();
    for (j, a) in tilde.amplitudes_mut().iter_mut().enumerate() {
        let p = grid.value(j);
        let kinetic = p * p / (2.0 * MASS * HBAR);
        *a *= C64::new(-t_i * kinetic, -t_r * kinetic).exp();
    }
    tilde
}

/// Closed-form all-orders per-class distribution.
///
/// In the orthonormal-class regime (`σ ≪ ħk`) the evolution is diagonal per
/// class: `θ_g(n) = ω_k·t·n²/2` and `θ_e(n) = ωt + (1−g₀)·ω_k·t·n²/2`, so
/// `P_n = |φ(n)|²·|⟨A_s|diag(e^{-iθ_g}, e^{-iθ_e})|A_i⟩|²` with no
/// perturbative assumption. `P_s = Σ P_n` by construction.
pub fn exact_class_oracle(
    initial: &QubitState,
    sel: &PostSelection,
    g0: f64,
    omega_t: f64,
    omega_k: f64,
    t: f64,
    spectrum: &KDSpectrum,
) -> MomentumClassDistribution {
    let (s_g, s_e) = sel.bra();
    let probs = spectrum
        .iter()
        .map(|(n, phi)| {
            let kinetic = omega_k * t * (n as f64) * (n as f64) / 2.0;
            let theta_g = kinetic;
            let theta_e = omega_t + (1.0 - g0) * kinetic;
            let amp = phi
                * (s_g * initial.amp_g() * C64::new(0.0, -theta_g).exp()
                    + s_e * initial.amp_e() * C64::new(0.0, -theta_e).exp());
            (n, amp.norm_sqr())
        })
        .collect();
    MomentumClassDistribution::from_probs(probs)
}
