//! State representation: internal qubit, external wavefunctions on dual
//! position/momentum grids, Gaussian packets, inner products and observable
//! expectations.

use crate::fft::CenteredFft;
use crate::stats::normal_tail;
use crate::HBAR;
use num_complex::Complex64 as C64;
use std::f64::consts::PI;
use std::io::{self, Write};
use thiserror::Error;

/// Fraction of the norm allowed outside the grid before a packet counts as
/// clipped.
pub const CLIP_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error, PartialEq)]
pub enum HilbertError {
    #[error("qubit amplitudes have norm² {norm_sq}, not 1 within 1e-12")]
    QubitNotNormalized { norm_sq: f64 },
    #[error("qubit amplitudes are both zero")]
    ZeroQubit,
    #[error("grid needs at least 16 points, got {n_points}")]
    TooFewPoints { n_points: usize },
    #[error("grid size {n_points} is not a power of two")]
    NotPowerOfTwo { n_points: usize },
    #[error("grid extent must be positive, got {extent}")]
    BadExtent { extent: f64 },
    #[error("packet width must be positive, got {width}")]
    BadWidth { width: f64 },
    #[error("grid spacing {spacing} too coarse, need < {required}")]
    GridTooCoarse { spacing: f64, required: f64 },
    #[error("grid extent {extent} too small, need > {required}")]
    ExtentTooSmall { extent: f64, required: f64 },
    #[error("packet tail weight {tail_weight:e} outside the grid exceeds 1e-8")]
    PacketClipped { tail_weight: f64 },
    #[error("expected a {expected:?} grid, found {found:?}")]
    AxisMismatch { expected: AxisKind, found: AxisKind },
    #[error("operands live on different grids")]
    GridMismatch,
    #[error("amplitude buffer length {len} does not match grid size {n_points}")]
    LengthMismatch { len: usize, n_points: usize },
    #[error("packet is not normalized: norm² = {norm_sq}")]
    NotNormalized { norm_sq: f64 },
}

/// Normalized two-component internal state `α|g⟩ + β|e⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState {
    amp_g: C64,
    amp_e: C64,
}

impl QubitState {
    /// Build from amplitudes that are already normalized (within 1e-12).
    pub fn new(amp_g: C64, amp_e: C64) -> Result<Self, HilbertError> {
        let norm_sq = amp_g.norm_sqr() + amp_e.norm_sqr();
        if (norm_sq - 1.0).abs() > 1e-12 {
            return Err(HilbertError::QubitNotNormalized { norm_sq });
        }
        Ok(Self { amp_g, amp_e })
    }

    /// Build from arbitrary amplitudes, rescaling to unit norm.
    pub fn from_unnormalized(amp_g: C64, amp_e: C64) -> Result<Self, HilbertError> {
        let norm = (amp_g.norm_sqr() + amp_e.norm_sqr()).sqrt();
        if norm == 0.0 {
            return Err(HilbertError::ZeroQubit);
        }
        Ok(Self {
            amp_g: amp_g / norm,
            amp_e: amp_e / norm,
        })
    }

    pub fn ground() -> Self {
        Self {
            amp_g: C64::new(1.0, 0.0),
            amp_e: C64::new(0.0, 0.0),
        }
    }

    pub fn excited() -> Self {
        Self {
            amp_g: C64::new(0.0, 0.0),
            amp_e: C64::new(1.0, 0.0),
        }
    }

    /// Amplitude on `|g⟩` (α).
    pub fn amp_g(&self) -> C64 {
        self.amp_g
    }

    /// Amplitude on `|e⟩` (β).
    pub fn amp_e(&self) -> C64 {
        self.amp_e
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisKind {
    Position,
    Momentum,
}

/// Uniform centered grid over one spatial direction, `v_j = (j - n/2)·Δ`.
///
/// Position and momentum grids form a conjugate pair with
/// `Δp·Δx = 2π·ħ/n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    n_points: usize,
    spacing: f64,
    axis_kind: AxisKind,
}

impl Grid1D {
    pub fn position(n_points: usize, extent: f64) -> Result<Self, HilbertError> {
        Self::build(n_points, extent, AxisKind::Position)
    }

    pub fn momentum(n_points: usize, extent: f64) -> Result<Self, HilbertError> {
        Self::build(n_points, extent, AxisKind::Momentum)
    }

    fn build(n_points: usize, extent: f64, axis_kind: AxisKind) -> Result<Self, HilbertError> {
        if n_points < 16 {
            return Err(HilbertError::TooFewPoints { n_points });
        }
        if !n_points.is_power_of_two() {
            return Err(HilbertError::NotPowerOfTwo { n_points });
        }
        if extent.is_nan() || extent <= 0.0 || !extent.is_finite() {
            return Err(HilbertError::BadExtent { extent });
        }
        // n is a power of two, so this division is exact.
        Ok(Self {
            n_points,
            spacing: extent / n_points as f64,
            axis_kind,
        })
    }

    /// The conjugate grid (position ↔ momentum) with `Δp·Δx = 2πħ/n`.
    pub fn conjugate(&self) -> Grid1D {
        Grid1D {
            n_points: self.n_points,
            spacing: 2.0 * PI * HBAR / (self.n_points as f64 * self.spacing),
            axis_kind: match self.axis_kind {
                AxisKind::Position => AxisKind::Momentum,
                AxisKind::Momentum => AxisKind::Position,
            },
        }
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn extent(&self) -> f64 {
        self.spacing * self.n_points as f64
    }

    pub fn axis_kind(&self) -> AxisKind {
        self.axis_kind
    }

    /// Coordinate of sample `idx`.
    pub fn value(&self, idx: usize) -> f64 {
        (idx as f64 - (self.n_points / 2) as f64) * self.spacing
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |j| self.value(j))
    }

    fn require_axis(&self, expected: AxisKind) -> Result<(), HilbertError> {
        if self.axis_kind != expected {
            return Err(HilbertError::AxisMismatch {
                expected,
                found: self.axis_kind,
            });
        }
        Ok(())
    }
}

/// Complex amplitudes over one grid; `norm² = Σ|a|²·Δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct WavePacket {
    grid: Grid1D,
    amplitudes: Vec<C64>,
}

impl WavePacket {
    pub fn new(grid: Grid1D, amplitudes: Vec<C64>) -> Result<Self, HilbertError> {
        if amplitudes.len() != grid.n_points() {
            return Err(HilbertError::LengthMismatch {
                len: amplitudes.len(),
                n_points: grid.n_points(),
            });
        }
        Ok(Self { grid, amplitudes })
    }

    pub fn zero(grid: Grid1D) -> Self {
        Self {
            amplitudes: vec![C64::new(0.0, 0.0); grid.n_points()],
            grid,
        }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    pub fn norm_sq(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.spacing()
    }

    pub fn normalize(&mut self) {
        let norm = self.norm_sq().sqrt();
        if norm > 0.0 {
            for a in &mut self.amplitudes {
                *a /= norm;
            }
        }
    }

    /// `⟨self|other⟩ = Σ conj(a)·b·Δ`.
    pub fn inner(&self, other: &WavePacket) -> Result<C64, HilbertError> {
        if self.grid != other.grid {
            return Err(HilbertError::GridMismatch);
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum::<C64>()
            * self.grid.spacing())
    }

    /// `‖self − other‖` in the grid L² norm.
    pub fn l2_distance(&self, other: &WavePacket) -> Result<f64, HilbertError> {
        if self.grid != other.grid {
            return Err(HilbertError::GridMismatch);
        }
        let sum: f64 = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        Ok((sum * self.grid.spacing()).sqrt())
    }

    /// Norm fraction in the outermost `band` samples on each side; the
    /// propagators use this as a wrap-around guard.
    pub fn edge_weight(&self, band: usize) -> f64 {
        let n = self.grid.n_points();
        let band = band.min(n / 2);
        let outer: f64 = self.amplitudes[..band]
            .iter()
            .chain(&self.amplitudes[n - band..])
            .map(|a| a.norm_sqr())
            .sum();
        outer * self.grid.spacing()
    }

    /// CSV rows `grid_value,re,im` with a header line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "grid_value,re,im")?;
        for (j, a) in self.amplitudes.iter().enumerate() {
            writeln!(out, "{:e},{:e},{:e}", self.grid.value(j), a.re, a.im)?;
        }
        Ok(())
    }
}

/// Internal-resolved pair of external wavefunctions on a shared grid:
/// the `|g⟩` component and the `|e⟩` component of an entangled state.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    comp_g: WavePacket,
    comp_e: WavePacket,
}

impl JointState {
    pub fn new(comp_g: WavePacket, comp_e: WavePacket) -> Result<Self, HilbertError> {
        if comp_g.grid != comp_e.grid {
            return Err(HilbertError::GridMismatch);
        }
        Ok(Self { comp_g, comp_e })
    }

    /// Product state `(α|g⟩ + β|e⟩) ⊗ |φ⟩`.
    pub fn product(qubit: &QubitState, external: &WavePacket) -> Self {
        let mut comp_g = external.clone();
        let mut comp_e = external.clone();
        for a in comp_g.amplitudes_mut() {
            *a *= qubit.amp_g();
        }
        for a in comp_e.amplitudes_mut() {
            *a *= qubit.amp_e();
        }
        Self { comp_g, comp_e }
    }

    pub fn comp_g(&self) -> &WavePacket {
        &self.comp_g
    }

    pub fn comp_e(&self) -> &WavePacket {
        &self.comp_e
    }

    pub fn components_mut(&mut self) -> (&mut WavePacket, &mut WavePacket) {
        (&mut self.comp_g, &mut self.comp_e)
    }

    pub fn grid(&self) -> &Grid1D {
        self.comp_g.grid()
    }

    pub fn total_norm_sq(&self) -> f64 {
        self.comp_g.norm_sq() + self.comp_e.norm_sq()
    }

    pub fn to_momentum(&self) -> Result<JointState, HilbertError> {
        Ok(JointState {
            comp_g: to_momentum(&self.comp_g)?,
            comp_e: to_momentum(&self.comp_e)?,
        })
    }

    pub fn to_position(&self) -> Result<JointState, HilbertError> {
        Ok(JointState {
            comp_g: to_position(&self.comp_g)?,
            comp_e: to_position(&self.comp_e)?,
        })
    }

    /// True when the state factorizes as `|internal⟩ ⊗ |external⟩` within
    /// `tol` (Cauchy-Schwarz equality test; zero components always factorize).
    pub fn is_product(&self, tol: f64) -> bool {
        let ng = self.comp_g.norm_sq();
        let ne = self.comp_e.norm_sq();
        if ng < tol || ne < tol {
            return true;
        }
        let overlap = self
            .comp_g
            .inner(&self.comp_e)
            .expect("components share a grid")
            .norm_sqr();
        (overlap - ng * ne).abs() <= tol * ng * ne
    }
}

/// Observables measurable on a packet. Momentum observables are evaluated on
/// the momentum grid, position observables on the position grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    X,
    X2,
    P,
    P2,
}

/// Normalized minimum-uncertainty Gaussian with position width `Δ`,
/// momentum width `σ = ħ/(2Δ)`, centered at (`center_x`, `center_p`).
///
/// On a position grid this samples
/// `(2πΔ²)^{-1/4} exp(-(x-x₀)²/4Δ²) e^{i p₀ (x-x₀)/ħ}`; on a momentum grid it
/// samples the Fourier transform of the same state.
pub fn make_gaussian(
    grid: &Grid1D,
    width_delta: f64,
    center_x: f64,
    center_p: f64,
) -> Result<WavePacket, HilbertError> {
    if width_delta.is_nan() || width_delta <= 0.0 || !width_delta.is_finite() {
        return Err(HilbertError::BadWidth { width: width_delta });
    }
    let sigma = HBAR / (2.0 * width_delta);
    let (width_here, center_here, width_conj, center_conj) = match grid.axis_kind() {
        AxisKind::Position => (width_delta, center_x, sigma, center_p),
        AxisKind::Momentum => (sigma, center_p, width_delta, center_x),
    };

    // Position sampling needs several points per width; momentum sampling
    // tolerates one point per width (Poisson-summation alias error is already
    // e^{-2π²(σ/Δp)²} ≤ 3e-9 at Δp = σ).
    let resolve_limit = match grid.axis_kind() {
        AxisKind::Position => width_here / 4.0,
        AxisKind::Momentum => width_here,
    };
    if grid.spacing() >= resolve_limit {
        return Err(HilbertError::GridTooCoarse {
            spacing: grid.spacing(),
            required: resolve_limit,
        });
    }
    if grid.extent() <= 8.0 * width_here {
        return Err(HilbertError::ExtentTooSmall {
            extent: grid.extent(),
            required: 8.0 * width_here,
        });
    }
    // |ψ|² is normal with standard deviation = width in either basis; clip
    // when the analytic tail mass outside either grid exceeds the budget.
    let half = grid.extent() / 2.0;
    let half_conj = grid.conjugate().extent() / 2.0;
    let tail = normal_tail((half - center_here) / width_here)
        + normal_tail((half + center_here) / width_here)
        + normal_tail((half_conj - center_conj) / width_conj)
        + normal_tail((half_conj + center_conj) / width_conj);
    if tail > CLIP_TOLERANCE {
        return Err(HilbertError::PacketClipped { tail_weight: tail });
    }

    let amplitudes: Vec<C64> = match grid.axis_kind() {
        AxisKind::Position => {
            let norm = (2.0 * PI * width_delta * width_delta).powf(-0.25);
            grid.values()
                .map(|x| {
                    let u = x - center_x;
                    let envelope = norm * (-u * u / (4.0 * width_delta * width_delta)).exp();
                    envelope * C64::new(0.0, center_p * u / HBAR).exp()
                })
                .collect()
        }
        AxisKind::Momentum => {
            let norm = (2.0 * PI * sigma * sigma).powf(-0.25);
            grid.values()
                .map(|p| {
                    let q = p - center_p;
                    let envelope = norm * (-q * q / (4.0 * sigma * sigma)).exp();
                    envelope * C64::new(0.0, -p * center_x / HBAR).exp()
                })
                .collect()
        }
    };
    Ok(WavePacket {
        grid: *grid,
        amplitudes,
    })
}

/// Unitary spectral transform onto the conjugate momentum grid.
pub fn to_momentum(packet: &WavePacket) -> Result<WavePacket, HilbertError> {
    packet.grid.require_axis(AxisKind::Position)?;
    let fft = CenteredFft::new(packet.grid.n_points());
    let amplitudes = fft.position_to_momentum(&packet.amplitudes, packet.grid.spacing());
    Ok(WavePacket {
        grid: packet.grid.conjugate(),
        amplitudes,
    })
}

/// Unitary spectral transform onto the conjugate position grid.
pub fn to_position(packet: &WavePacket) -> Result<WavePacket, HilbertError> {
    packet.grid.require_axis(AxisKind::Momentum)?;
    let fft = CenteredFft::new(packet.grid.n_points());
    let amplitudes = fft.momentum_to_position(&packet.amplitudes, packet.grid.spacing());
    Ok(WavePacket {
        grid: packet.grid.conjugate(),
        amplitudes,
    })
}

/// Expectation value of `obs` in a normalized packet.
pub fn expectation(packet: &WavePacket, obs: Observable) -> Result<f64, HilbertError> {
    let norm_sq = packet.norm_sq();
    if (norm_sq - 1.0).abs() > 1e-8 {
        return Err(HilbertError::NotNormalized { norm_sq });
    }
    let needed = match obs {
        Observable::X | Observable::X2 => AxisKind::Position,
        Observable::P | Observable::P2 => AxisKind::Momentum,
    };
    let transformed;
    let work = if packet.grid.axis_kind() == needed {
        packet
    } else {
        transformed = match needed {
            AxisKind::Momentum => to_momentum(packet)?,
            AxisKind::Position => to_position(packet)?,
        };
        &transformed
    };
    let power = match obs {
        Observable::X | Observable::P => 1,
        Observable::X2 | Observable::P2 => 2,
    };
    let sum: f64 = work
        .amplitudes
        .iter()
        .enumerate()
        .map(|(j, a)| work.grid.value(j).powi(power) * a.norm_sqr())
        .sum();
    Ok(sum * work.grid.spacing())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn position_grid(n: usize, extent: f64) -> Grid1D {
        Grid1D::position(n, extent).unwrap()
    }

    #[test]
    fn grid_invariants() {
        let g = position_grid(64, 32.0);
        assert_eq!(g.spacing() * g.n_points() as f64, 32.0);
        let conj = g.conjugate();
        assert_eq!(conj.axis_kind(), AxisKind::Momentum);
        assert!((conj.spacing() * g.spacing() - 2.0 * PI * HBAR / 64.0).abs() < 1e-16);
        assert_eq!(conj.conjugate(), g);
        assert!(matches!(
            Grid1D::position(8, 1.0),
            Err(HilbertError::TooFewPoints { .. })
        ));
        assert!(matches!(
            Grid1D::position(48, 1.0),
            Err(HilbertError::NotPowerOfTwo { .. })
        ));
        assert!(matches!(
            Grid1D::position(64, -1.0),
            Err(HilbertError::BadExtent { .. })
        ));
    }

    #[test]
    fn qubit_normalization() {
        let s = QubitState::from_unnormalized(C64::new(3.0, 0.0), C64::new(4.0, 0.0)).unwrap();
        assert!((s.amp_g().norm_sqr() + s.amp_e().norm_sqr() - 1.0).abs() < 1e-12);
        assert!(QubitState::new(C64::new(1.0, 0.0), C64::new(0.5, 0.0)).is_err());
        assert_eq!(
            QubitState::from_unnormalized(C64::new(0.0, 0.0), C64::new(0.0, 0.0)),
            Err(HilbertError::ZeroQubit)
        );
    }

    #[test]
    fn gaussian_is_normalized_and_minimum_uncertainty() {
        let grid = position_grid(512, 40.0);
        let packet = make_gaussian(&grid, 1.0, 0.0, 0.0).unwrap();
        assert!((packet.norm_sq() - 1.0).abs() < 1e-10);

        // ⟨x²⟩ = Δ², ⟨p²⟩ − ⟨p⟩² = σ² = ħ²/(4Δ²)
        let x2 = expectation(&packet, Observable::X2).unwrap();
        assert!((x2 - 1.0).abs() < 1e-8, "⟨x²⟩ = {x2}");
        let p = expectation(&packet, Observable::P).unwrap();
        let p2 = expectation(&packet, Observable::P2).unwrap();
        assert!((p2 - p * p - 0.25).abs() < 1e-8, "σ² = {}", p2 - p * p);

        // minimum-uncertainty product Δ·σ = ħ/2
        let delta = x2.sqrt();
        let sigma = (p2 - p * p).sqrt();
        assert!((delta * sigma - 0.5 * HBAR).abs() < 1e-8);
    }

    #[test]
    fn gaussian_centers_are_honored() {
        let grid = position_grid(1024, 80.0);
        let packet = make_gaussian(&grid, 1.5, 2.0, -3.0).unwrap();
        let x = expectation(&packet, Observable::X).unwrap();
        let p = expectation(&packet, Observable::P).unwrap();
        assert!((x - 2.0).abs() < 1e-8);
        assert!((p + 3.0).abs() < 1e-8);
    }

    #[test]
    fn gaussian_guards() {
        // spacing ≥ Δ/4
        let coarse = position_grid(16, 32.0);
        assert!(matches!(
            make_gaussian(&coarse, 1.0, 0.0, 0.0),
            Err(HilbertError::GridTooCoarse { .. })
        ));
        // extent ≤ 8Δ
        let short = position_grid(512, 6.0);
        assert!(matches!(
            make_gaussian(&short, 1.0, 0.0, 0.0),
            Err(HilbertError::ExtentTooSmall { .. })
        ));
        // analytic tail outside the grid above 1e-8: centered near the edge
        let grid = position_grid(512, 40.0);
        assert!(matches!(
            make_gaussian(&grid, 1.0, 16.0, 0.0),
            Err(HilbertError::PacketClipped { .. })
        ));
        // momentum-side clipping: large boost pushes the packet off the
        // conjugate grid
        let p_edge = grid.conjugate().extent() / 2.0;
        assert!(matches!(
            make_gaussian(&grid, 1.0, 0.0, p_edge),
            Err(HilbertError::PacketClipped { .. })
        ));
    }

    #[test]
    fn momentum_grid_sampling_matches_transform() {
        let grid = position_grid(512, 80.0);
        let packet = make_gaussian(&grid, 1.2, 0.7, 1.3).unwrap();
        let via_fft = to_momentum(&packet).unwrap();
        let direct = make_gaussian(&grid.conjugate(), 1.2, 0.7, 1.3).unwrap();
        let dist = via_fft.l2_distance(&direct).unwrap();
        assert!(dist < 1e-10, "sampled vs transformed Gaussian: {dist}");
    }

    #[test]
    fn gaussian_fourier_pair() {
        let grid = position_grid(512, 40.0);
        let packet = make_gaussian(&grid, 1.0, 0.0, 0.0).unwrap();
        let tilde = to_momentum(&packet).unwrap();
        // width in momentum = σ = ħ/(2Δ)
        let p2 = expectation(&tilde, Observable::P2).unwrap();
        assert!((p2 - 0.25).abs() < 1e-10);
        // Parseval in the norm² sense
        assert!((tilde.norm_sq() - packet.norm_sq()).abs() < 1e-12);
    }

    #[test]
    fn plane_wave_modulation_shifts_momentum() {
        // e^{i2kx}·G(x) → Gaussian centered at p = 2ħk; checked against direct
        // quadrature of the transform integral.
        let k = 1.0;
        let grid = position_grid(1024, 80.0);
        let mut packet = make_gaussian(&grid, 2.0, 0.0, 0.0).unwrap();
        for (j, a) in packet.amplitudes_mut().iter_mut().enumerate() {
            let x = grid.value(j);
            *a *= C64::new(0.0, 2.0 * k * x).exp();
        }
        let tilde = to_momentum(&packet).unwrap();
        let p = expectation(&tilde, Observable::P).unwrap();
        assert!((p - 2.0 * HBAR * k).abs() < 1e-8, "⟨p⟩ = {p}");

        // direct O(n²) quadrature of Δx/√(2π)·Σ ψ(x) e^{-ipx}
        let dx = grid.spacing();
        let mgrid = grid.conjugate();
        for idx in (0..mgrid.n_points()).step_by(97) {
            let pv = mgrid.value(idx);
            let direct: C64 = packet
                .amplitudes()
                .iter()
                .enumerate()
                .map(|(j, a)| a * C64::new(0.0, -pv * grid.value(j)).exp())
                .sum::<C64>()
                * (dx / (2.0 * PI).sqrt());
            let diff = (direct - tilde.amplitudes()[idx]).norm();
            assert!(diff < 1e-10, "quadrature mismatch at p={pv}: {diff}");
        }
    }

    #[test]
    fn two_spike_expectations() {
        let grid = Grid1D::momentum(64, 16.0).unwrap();
        let mut packet = WavePacket::zero(grid);
        let p0 = 2.0;
        let hits: Vec<usize> = (0..64).filter(|&j| grid.value(j).abs() == p0).collect();
        assert_eq!(hits.len(), 2);
        let amp = (0.5 / grid.spacing()).sqrt();
        for &j in &hits {
            packet.amplitudes_mut()[j] = C64::new(amp, 0.0);
        }
        assert!((packet.norm_sq() - 1.0).abs() < 1e-12);
        assert!(expectation(&packet, Observable::P).unwrap().abs() < 1e-12);
        let p2 = expectation(&packet, Observable::P2).unwrap();
        assert!((p2 - p0 * p0).abs() < 1e-12);
    }

    #[test]
    fn expectation_requires_normalized_input() {
        let grid = position_grid(256, 32.0);
        let mut packet = make_gaussian(&grid, 1.0, 0.0, 0.0).unwrap();
        for a in packet.amplitudes_mut() {
            *a *= 2.0;
        }
        assert!(matches!(
            expectation(&packet, Observable::X),
            Err(HilbertError::NotNormalized { .. })
        ));
    }

    #[test]
    fn displaced_class_overlap_underflows() {
        // Calcium-like preset in simulation units: ħk/σ = 4πΔ/λ ≈ 31.4 with
        // k = 1, so Δ = ħk/(2σ)·(2Δ) ⇒ Δ = 15.708. The |n=0⟩/|n=1⟩ class
        // overlap exp[-(ħk)²/(2σ²)] is below double-precision resolution.
        let k: f64 = 1.0;
        let delta = 10.0 * PI / 2.0; // 4πΔ/λ = 2Δk = 31.415…
        let ratio = 2.0 * delta * k / HBAR;
        assert!((ratio - 31.415_926_535_897_93).abs() < 1e-10);

        let sigma = HBAR / (2.0 * delta);
        let overlap_formula = (-(HBAR * k) * (HBAR * k) / (2.0 * sigma * sigma)).exp();
        assert!(overlap_formula < 1e-200);

        let grid = Grid1D::momentum(1024, 8.0).unwrap();
        let n0 = make_gaussian(&grid, delta, 0.0, 0.0).unwrap();
        let n1 = make_gaussian(&grid, delta, 0.0, 2.0 * HBAR * k).unwrap();
        let overlap = n0.inner(&n1).unwrap().norm();
        assert!(overlap < 1e-150, "⟨0|1⟩ = {overlap}");
    }

    #[test]
    fn joint_state_product_and_norm() {
        let grid = position_grid(256, 40.0);
        let packet = make_gaussian(&grid, 1.0, 0.0, 0.0).unwrap();
        let qubit =
            QubitState::from_unnormalized(C64::new(1.0, 0.0), C64::new(0.0, 1.0)).unwrap();
        let joint = JointState::product(&qubit, &packet);
        assert!((joint.total_norm_sq() - 1.0).abs() < 1e-10);
        assert!(joint.is_product(1e-12));

        let other = make_gaussian(&grid, 1.0, 3.0, 0.5).unwrap();
        let entangled = JointState::new(joint.comp_g().clone(), other).unwrap();
        assert!(!entangled.is_product(1e-6));
    }

    #[test]
    fn csv_serialization_shape() {
        let grid = position_grid(16, 8.0);
        let mut packet = WavePacket::zero(grid);
        packet.amplitudes_mut()[8] = C64::new(1.0, -2.0);
        let mut buf = Vec::new();
        packet.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("grid_value,re,im"));
        assert_eq!(text.lines().count(), 17);
        assert!(text.lines().nth(9).unwrap().starts_with("0e0,1e0,-2e0"));
    }
}
