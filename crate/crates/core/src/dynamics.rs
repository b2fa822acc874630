//! Propagators for the coupled internal/external Hamiltonian
//! `H = ħω|e⟩⟨e| + (1 - g₀|e⟩⟨e|)·p²/2m + (1 + g₀|e⟩⟨e|)·mḡz`.
//!
//! With gravity off the problem is diagonal in momentum and the internal
//! energy basis, so [`evolve_exact_x`] is a closed-form phase multiplication,
//! exact to all orders in `g₀`. Along the gravity direction each internal
//! component sees a scalar linear-potential Hamiltonian; [`evolve_exact_z`]
//! uses the closed-form free-fall propagator and [`evolve_split_step_z`] the
//! symmetric split-step integrator. [`bch_transformed_zc`] and
//! [`dyson_first_order`] implement the interaction-picture expansion of the
//! vertical coupling and the first-order perturbative state.

use crate::fft::CenteredFft;
use crate::hilbert::{AxisKind, HilbertError, JointState, WavePacket};
use crate::{HBAR, MASS};
use num_complex::Complex64 as C64;
use thiserror::Error;

/// Edge-band width (samples per side) used by the wrap-around guard.
const EDGE_BAND: usize = 16;
/// Norm fraction in the edge band that counts as clipping.
const EDGE_BUDGET: f64 = 1e-8;

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    #[error("evolve_exact_x requires gravity off, got gbar = {gbar}")]
    GravityEnabled { gbar: f64 },
    #[error("mass-energy ratio must satisfy 0 ≤ g0 < 1, got {g0}")]
    BadCoupling { g0: f64 },
    #[error("step count must be ≥ 1")]
    ZeroSteps,
    #[error("wave packet reached the grid edge (band weight {edge_weight:e})")]
    ClippedPacket { edge_weight: f64 },
    #[error("dyson_first_order requires a product state input")]
    NonProductInput,
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
}

/// Dimensionless coupling parameters of one evolution window.
///
/// `omega_t` is the internal phase `ωt` accumulated over the window, tracked
/// as an independent input (mod 2π) because the physical `ω` and the grid
/// time scale are separated by many orders of magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingParams {
    pub g0: f64,
    pub omega_t: f64,
    pub gbar: f64,
    pub t: f64,
}

impl CouplingParams {
    pub fn new(g0: f64, omega_t: f64, gbar: f64, t: f64) -> Result<Self, DynamicsError> {
        if !(0.0..1.0).contains(&g0) {
            return Err(DynamicsError::BadCoupling { g0 });
        }
        Ok(Self {
            g0,
            omega_t,
            gbar,
            t,
        })
    }

    pub fn gravity_free(g0: f64, omega_t: f64, t: f64) -> Result<Self, DynamicsError> {
        Self::new(g0, omega_t, 0.0, t)
    }

    /// First-order treatment is trustworthy when `g0` times the largest
    /// kinetic phase on the grid stays below 0.1.
    pub fn perturbative_on(&self, grid: &crate::hilbert::Grid1D) -> bool {
        let momentum = match grid.axis_kind() {
            AxisKind::Momentum => *grid,
            AxisKind::Position => grid.conjugate(),
        };
        let p_max = momentum.extent() / 2.0;
        self.g0 * p_max * p_max * self.t.abs() / (2.0 * MASS * HBAR) <= 0.1
    }
}

/// The operator `Ĝ = mḡẑ + p̂_z·ḡt − m(ḡt)²/3` entering the effective
/// first-order Hamiltonian; identically zero when gravity is off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveG {
    pub gbar: f64,
    pub t: f64,
}

impl EffectiveG {
    pub fn new(gbar: f64, t: f64) -> Self {
        Self { gbar, t }
    }

    pub fn z_coeff(&self) -> f64 {
        MASS * self.gbar
    }

    pub fn pz_coeff(&self) -> f64 {
        self.gbar * self.t
    }

    pub fn const_term(&self) -> f64 {
        -MASS * (self.gbar * self.t) * (self.gbar * self.t) / 3.0
    }

    pub fn is_zero(&self) -> bool {
        self.gbar == 0.0
    }

    /// `⟨Ĝ⟩` for any state with the given position and momentum means.
    pub fn mean(&self, z_mean: f64, pz_mean: f64) -> f64 {
        self.z_coeff() * z_mean + self.pz_coeff() * pz_mean + self.const_term()
    }
}

/// Coefficient record for an operator `c_kin·p̂²/2m + c_z·ẑ + c_pz·p̂ + c_const`
/// acting on the `|e⟩⟨e|` sector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZcCoefficients {
    pub c_kin: f64,
    pub c_z: f64,
    pub c_pz: f64,
    pub c_const: f64,
}

impl ZcCoefficients {
    /// Apply the operator to a packet (returned on the input grid).
    pub fn apply(&self, packet: &WavePacket) -> Result<WavePacket, HilbertError> {
        let mut out = apply_kinetic(packet)?;
        if self.c_kin != 1.0 {
            for a in out.amplitudes_mut() {
                *a *= self.c_kin;
            }
        }
        if self.c_z != 0.0 {
            let zp = apply_scaled_position(packet, self.c_z)?;
            for (o, z) in out.amplitudes_mut().iter_mut().zip(zp.amplitudes()) {
                *o += z;
            }
        }
        if self.c_pz != 0.0 {
            let pp = apply_scaled_momentum(packet, self.c_pz)?;
            for (o, p) in out.amplitudes_mut().iter_mut().zip(pp.amplitudes()) {
                *o += p;
            }
        }
        if self.c_const != 0.0 {
            for (o, a) in out.amplitudes_mut().iter_mut().zip(packet.amplitudes()) {
                *o += self.c_const * a;
            }
        }
        Ok(out)
    }
}

/// `(p̂²/2m)·ψ`, evaluated spectrally; result on the input grid.
pub fn apply_kinetic(packet: &WavePacket) -> Result<WavePacket, HilbertError> {
    apply_momentum_fn(packet, |p| p * p / (2.0 * MASS))
}

/// `(c·ẑ)·ψ`; result on the input grid.
pub fn apply_scaled_position(packet: &WavePacket, c: f64) -> Result<WavePacket, HilbertError> {
    apply_position_fn(packet, |z| c * z)
}

/// `(c·p̂)·ψ`; result on the input grid.
pub fn apply_scaled_momentum(packet: &WavePacket, c: f64) -> Result<WavePacket, HilbertError> {
    apply_momentum_fn(packet, |p| c * p)
}

fn apply_momentum_fn(
    packet: &WavePacket,
    f: impl Fn(f64) -> f64,
) -> Result<WavePacket, HilbertError> {
    match packet.grid().axis_kind() {
        AxisKind::Momentum => {
            let mut out = packet.clone();
            let grid = *packet.grid();
            for (j, a) in out.amplitudes_mut().iter_mut().enumerate() {
                *a *= f(grid.value(j));
            }
            Ok(out)
        }
        AxisKind::Position => {
            let tilde = crate::hilbert::to_momentum(packet)?;
            let applied = apply_momentum_fn(&tilde, f)?;
            crate::hilbert::to_position(&applied)
        }
    }
}

fn apply_position_fn(
    packet: &WavePacket,
    f: impl Fn(f64) -> f64,
) -> Result<WavePacket, HilbertError> {
    match packet.grid().axis_kind() {
        AxisKind::Position => {
            let mut out = packet.clone();
            let grid = *packet.grid();
            for (j, a) in out.amplitudes_mut().iter_mut().enumerate() {
                *a *= f(grid.value(j));
            }
            Ok(out)
        }
        AxisKind::Momentum => {
            let pos = crate::hilbert::to_position(packet)?;
            let applied = apply_position_fn(&pos, f)?;
            crate::hilbert::to_momentum(&applied)
        }
    }
}

/// Exact horizontal evolution under
/// `H = ħω|e⟩⟨e| + (1 − g₀|e⟩⟨e|)·p̂²/2m` (gravity off).
///
/// Diagonal in the internal energy basis and in momentum, so the propagator
/// is a per-sample phase: the `|g⟩` component picks up `e^{-ip²t/2mħ}`, the
/// `|e⟩` component `e^{-iωt}·e^{-i(1-g₀)p²t/2mħ}`. Exact to all orders in
/// `g₀`.
pub fn evolve_exact_x(
    state: &JointState,
    params: &CouplingParams,
) -> Result<JointState, DynamicsError> {
    if params.gbar != 0.0 {
        return Err(DynamicsError::GravityEnabled { gbar: params.gbar });
    }
    if state.grid().axis_kind() != AxisKind::Momentum {
        return Err(HilbertError::AxisMismatch {
            expected: AxisKind::Momentum,
            found: state.grid().axis_kind(),
        }
        .into());
    }
    let mut out = state.clone();
    let grid = *state.grid();
    let (comp_g, comp_e) = out.components_mut();
    let internal_phase = C64::new(0.0, -params.omega_t).exp();
    for j in 0..grid.n_points() {
        let p = grid.value(j);
        let kinetic = p * p * params.t / (2.0 * MASS * HBAR);
        comp_g.amplitudes_mut()[j] *= C64::new(0.0, -kinetic).exp();
        comp_e.amplitudes_mut()[j] *=
            internal_phase * C64::new(0.0, -(1.0 - params.g0) * kinetic).exp();
    }
    Ok(out)
}

/// Closed-form propagator for the scalar free-fall Hamiltonian
/// `H = p̂²/2m + m·a·ẑ` over time `t`:
///
/// `U(t) = e^{-i m a² t³/6ħ} · e^{-i m a t ẑ/ħ} · e^{+i a t² p̂/2ħ} · e^{-i t p̂²/2mħ}`
///
/// The factorization is exact because the algebra `{p̂², ẑ, p̂, 1}` closes
/// under commutation with c-number coefficients. Result on the input grid.
pub fn propagate_linear_potential(
    packet: &WavePacket,
    mass: f64,
    accel: f64,
    t: f64,
) -> Result<WavePacket, HilbertError> {
    let on_position = packet.grid().axis_kind() == AxisKind::Position;
    let mut tilde = if on_position {
        crate::hilbert::to_momentum(packet)?
    } else {
        packet.clone()
    };
    let mgrid = *tilde.grid();
    for (j, a) in tilde.amplitudes_mut().iter_mut().enumerate() {
        let p = mgrid.value(j);
        let phase = -t * p * p / (2.0 * mass * HBAR) + accel * t * t * p / (2.0 * HBAR);
        *a *= C64::new(0.0, phase).exp();
    }
    let mut pos = crate::hilbert::to_position(&tilde)?;
    let pgrid = *pos.grid();
    let global = -mass * accel * accel * t * t * t / (6.0 * HBAR);
    for (j, a) in pos.amplitudes_mut().iter_mut().enumerate() {
        let z = pgrid.value(j);
        *a *= C64::new(0.0, -mass * accel * t * z / HBAR + global).exp();
    }
    if on_position {
        Ok(pos)
    } else {
        crate::hilbert::to_momentum(&pos)
    }
}

/// Symmetric split-step propagator for `H = p̂²/2m + m·a·ẑ`:
/// half-kinetic, full-potential, half-kinetic per step (adjacent half-steps
/// merged). Global error `O(dt²)`. Result on the input grid.
pub fn split_step_linear_potential(
    packet: &WavePacket,
    mass: f64,
    accel: f64,
    t: f64,
    n_steps: usize,
) -> Result<WavePacket, DynamicsError> {
    if n_steps == 0 {
        return Err(DynamicsError::ZeroSteps);
    }
    let on_position = packet.grid().axis_kind() == AxisKind::Position;
    let pos_grid = if on_position {
        *packet.grid()
    } else {
        packet.grid().conjugate()
    };
    let mom_grid = pos_grid.conjugate();
    let n = pos_grid.n_points();
    let dt = t / n_steps as f64;

    let half_kin: Vec<C64> = (0..n)
        .map(|j| {
            let p = mom_grid.value(j);
            C64::new(0.0, -dt * p * p / (4.0 * mass * HBAR)).exp()
        })
        .collect();
    let full_kin: Vec<C64> = half_kin.iter().map(|c| c * c).collect();
    let potential: Vec<C64> = (0..n)
        .map(|j| {
            let z = pos_grid.value(j);
            C64::new(0.0, -dt * mass * accel * z / HBAR).exp()
        })
        .collect();

    let fft = CenteredFft::new(n);
    let mut amps = if on_position {
        fft.position_to_momentum(packet.amplitudes(), pos_grid.spacing())
    } else {
        packet.amplitudes().to_vec()
    };
    for (a, k) in amps.iter_mut().zip(&half_kin) {
        *a *= k;
    }
    for step in 0..n_steps {
        let mut pos = fft.momentum_to_position(&amps, mom_grid.spacing());
        for (a, v) in pos.iter_mut().zip(&potential) {
            *a *= v;
        }
        amps = fft.position_to_momentum(&pos, pos_grid.spacing());
        let kin = if step + 1 == n_steps {
            &half_kin
        } else {
            &full_kin
        };
        for (a, k) in amps.iter_mut().zip(kin) {
            *a *= k;
        }
    }

    let out = if on_position {
        WavePacket::new(pos_grid, fft.momentum_to_position(&amps, mom_grid.spacing()))?
    } else {
        WavePacket::new(mom_grid, amps)?
    };
    Ok(out)
}

fn check_edges(state: &JointState) -> Result<(), DynamicsError> {
    let total = state.total_norm_sq();
    for comp in [state.comp_g(), state.comp_e()] {
        let here = comp.edge_weight(EDGE_BAND);
        let conj = match comp.grid().axis_kind() {
            AxisKind::Position => crate::hilbert::to_momentum(comp)?,
            AxisKind::Momentum => crate::hilbert::to_position(comp)?,
        }
        .edge_weight(EDGE_BAND);
        let edge_weight = here.max(conj);
        if edge_weight > EDGE_BUDGET * total {
            return Err(DynamicsError::ClippedPacket { edge_weight });
        }
    }
    Ok(())
}

/// Split-step evolution of both internal components under the full
/// Hamiltonian with gravity:
/// `H_g = p̂²/2m + mḡẑ`, `H_e = ħω + (1−g₀)·p̂²/2m + (1+g₀)·mḡẑ`.
pub fn evolve_split_step_z(
    state: &JointState,
    params: &CouplingParams,
    n_steps: usize,
) -> Result<JointState, DynamicsError> {
    let comp_g = split_step_linear_potential(state.comp_g(), MASS, params.gbar, params.t, n_steps)?;
    // (1−g₀)p²/2m + (1+g₀)mḡz = p²/2m' + m'a'z with m' = m/(1−g₀),
    // a' = (1−g₀)(1+g₀)ḡ.
    let m_eff = MASS / (1.0 - params.g0);
    let a_eff = (1.0 - params.g0) * (1.0 + params.g0) * params.gbar;
    let mut comp_e = split_step_linear_potential(state.comp_e(), m_eff, a_eff, params.t, n_steps)?;
    let internal = C64::new(0.0, -params.omega_t).exp();
    for a in comp_e.amplitudes_mut() {
        *a *= internal;
    }
    let out = JointState::new(comp_g, comp_e)?;
    check_edges(&out)?;
    Ok(out)
}

/// A split-step run with its own step-doubling convergence check.
#[derive(Debug, Clone)]
pub struct SplitStepRun {
    /// The finer of the two runs (2·n_steps).
    pub state: JointState,
    /// L² distance between the n_steps and 2·n_steps results.
    pub doubling_delta: f64,
    /// True when `doubling_delta ≤ 1e-6`.
    pub converged: bool,
}

/// [`evolve_split_step_z`] at `n_steps` and `2·n_steps`, flagging
/// non-convergence when the doubling changes the final state by more
/// than 1e-6.
pub fn evolve_split_step_z_checked(
    state: &JointState,
    params: &CouplingParams,
    n_steps: usize,
) -> Result<SplitStepRun, DynamicsError> {
    let coarse = evolve_split_step_z(state, params, n_steps)?;
    let fine = evolve_split_step_z(state, params, 2 * n_steps)?;
    let delta = (coarse.comp_g().l2_distance(fine.comp_g())?.powi(2)
        + coarse.comp_e().l2_distance(fine.comp_e())?.powi(2))
    .sqrt();
    Ok(SplitStepRun {
        state: fine,
        doubling_delta: delta,
        converged: delta <= 1e-6,
    })
}

/// Exact evolution with gravity: each internal component propagates under its
/// own scalar linear-potential Hamiltonian via the closed-form free-fall
/// propagator. Exact to all orders in `g₀`; serves as the oracle for both the
/// split-step integrator and the Dyson expansion.
pub fn evolve_exact_z(
    state: &JointState,
    params: &CouplingParams,
) -> Result<JointState, DynamicsError> {
    let comp_g = propagate_linear_potential(state.comp_g(), MASS, params.gbar, params.t)?;
    let m_eff = MASS / (1.0 - params.g0);
    let a_eff = (1.0 - params.g0) * (1.0 + params.g0) * params.gbar;
    let mut comp_e = propagate_linear_potential(state.comp_e(), m_eff, a_eff, params.t)?;
    let internal = C64::new(0.0, -params.omega_t).exp();
    for a in comp_e.amplitudes_mut() {
        *a *= internal;
    }
    Ok(JointState::new(comp_g, comp_e)?)
}

/// Interaction-picture transform of the vertical coupling at time `s`:
/// `e^{iH₀s/ħ}·Ĥ_zc·e^{-iH₀s/ħ} = Ĥ_zc − ḡs(2p̂_z − mḡs)|e⟩⟨e|`.
///
/// The commutator series terminates at second order, so the coefficient
/// record `{c_kin = 1, c_z = −mḡ, c_pz = −2ḡs, c_const = +m(ḡs)²}` is exact.
pub fn bch_transformed_zc(params: &CouplingParams, time_s: f64) -> ZcCoefficients {
    ZcCoefficients {
        c_kin: 1.0,
        c_z: -MASS * params.gbar,
        c_pz: -2.0 * params.gbar * time_s,
        c_const: MASS * (params.gbar * time_s) * (params.gbar * time_s),
    }
}

/// First-order Dyson state
/// `|ψ⟩ = Û₀·[1 + (i g₀ t/ħ)·Ĥ_eff·|e⟩⟨e|]·|ψ_i⟩` with
/// `Ĥ_eff = p̂²/2m − Ĝ`.
///
/// The time integral of the transformed coupling is analytic:
/// `∫₀ᵗ Ĥ'_zc dt₁ = [Ĥ_zc·t − ḡt²·p̂_z + m(ḡt)²·t/3]|e⟩⟨e|`, which is where
/// the `−m(ḡt)²/3` term inside `Ĝ` comes from. The input must be a product
/// state `|A_i⟩ ⊗ |φ⟩`.
pub fn dyson_first_order(
    state: &JointState,
    params: &CouplingParams,
) -> Result<JointState, DynamicsError> {
    if !state.is_product(1e-10) {
        return Err(DynamicsError::NonProductInput);
    }
    let effective_g = EffectiveG::new(params.gbar, params.t);
    let h_eff = ZcCoefficients {
        c_kin: 1.0,
        c_z: -effective_g.z_coeff(),
        c_pz: -effective_g.pz_coeff(),
        c_const: -effective_g.const_term(),
    };
    let correction = h_eff.apply(state.comp_e())?;
    let mut comp_e = state.comp_e().clone();
    let strength = C64::new(0.0, params.g0 * params.t / HBAR);
    for (a, c) in comp_e
        .amplitudes_mut()
        .iter_mut()
        .zip(correction.amplitudes())
    {
        *a += strength * c;
    }

    // Û₀ = e^{-iH₀t/ħ} with H₀ = ħω|e⟩⟨e| + p̂²/2m + mḡẑ: the same free-fall
    // propagator on both components plus the internal phase on |e⟩.
    let comp_g = propagate_linear_potential(state.comp_g(), MASS, params.gbar, params.t)?;
    let mut comp_e = propagate_linear_potential(&comp_e, MASS, params.gbar, params.t)?;
    let internal = C64::new(0.0, -params.omega_t).exp();
    for a in comp_e.amplitudes_mut() {
        *a *= internal;
    }
    Ok(JointState::new(comp_g, comp_e)?)
}
