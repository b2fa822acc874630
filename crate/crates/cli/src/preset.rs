//! Physical presets in SI units and their conversion to the dimensionless
//! groups the simulation core works in.

pub const HBAR_SI: f64 = 1.054_571_817e-34; // J·s
pub const C_LIGHT_SI: f64 = 299_792_458.0; // m/s

/// SI parameters of one atomic species and measurement arrangement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalPreset {
    /// Ground-state rest mass (kg).
    pub mass_kg: f64,
    /// Qubit transition frequency ω (angular, rad/s).
    pub omega_transition_hz: f64,
    /// Wavelength of the scattering light (m).
    pub lambda_kd_m: f64,
    /// Excited-state lifetime, the natural coupling window (s).
    pub lifetime_s: f64,
    /// Initial position uncertainty Δ (m).
    pub delta_m: f64,
    /// Gravitational acceleration (m/s²).
    pub gbar_ms2: f64,
}

impl PhysicalPreset {
    /// Calcium intercombination qubit (¹S₀–³P₁) with the strong ¹S₀–¹P₁ line
    /// driving the scattering.
    pub fn calcium() -> Self {
        Self {
            mass_kg: 6.7e-26,
            omega_transition_hz: 4.6e14,
            lambda_kd_m: 0.4e-6,
            lifetime_s: 0.4e-3,
            delta_m: 1.0e-6,
            gbar_ms2: 9.8,
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "calcium" | "ca" => Some(Self::calcium()),
            _ => None,
        }
    }

    /// Names accepted by [`PhysicalPreset::by_name`].
    pub fn known_names() -> &'static [&'static str] {
        &["calcium"]
    }
}

/// Dimensionless groups derived from a preset and a coupling duration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionlessGroups {
    /// Mass-energy ratio `g0 = ħω/(mc²)`.
    pub g0: f64,
    /// Recoil-scale frequency `ω_k = 4ħk²/m` (rad/s, SI).
    pub omega_k_hz: f64,
    /// `g0·t` (seconds).
    pub g0_t_s: f64,
    /// The headline group `g0·ω_k·t`.
    pub g0_omega_k_t: f64,
    /// `ω_k·t`, the product the class phases depend on.
    pub omega_k_t: f64,
    /// Momentum-kick to packet-width ratio `ħk/σ = 4πΔ/λ`.
    pub hbar_k_over_sigma: f64,
    /// Raised when the coupling window exceeds the excited-state lifetime.
    pub exceeds_lifetime: bool,
}

/// Derive the dimensionless groups for a coupling window `t_coupling_s`.
pub fn derive_groups(preset: &PhysicalPreset, t_coupling_s: f64) -> DimensionlessGroups {
    let g0 = HBAR_SI * preset.omega_transition_hz / (preset.mass_kg * C_LIGHT_SI * C_LIGHT_SI);
    let k = 2.0 * std::f64::consts::PI / preset.lambda_kd_m;
    let omega_k_hz = 4.0 * HBAR_SI * k * k / preset.mass_kg;
    DimensionlessGroups {
        g0,
        omega_k_hz,
        g0_t_s: g0 * t_coupling_s,
        g0_omega_k_t: g0 * omega_k_hz * t_coupling_s,
        omega_k_t: omega_k_hz * t_coupling_s,
        hbar_k_over_sigma: 4.0 * std::f64::consts::PI * preset.delta_m / preset.lambda_kd_m,
        exceeds_lifetime: t_coupling_s > preset.lifetime_s,
    }
}
