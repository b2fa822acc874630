//! Centered spectral transforms between conjugate position/momentum grids.
//!
//! Grids are sampled at `v_j = (j - n/2)·Δ`. With conjugate spacings
//! `Δx·Δp = 2π/n` and `n ≡ 0 (mod 4)`, the continuum kernel
//! `e^{∓i p x}` reduces to a plain DFT after `(-1)^j` pre- and `(-1)^k`
//! post-modulation (the residual constant phase `e^{-iπn/2}` is 1).
//! Both directions are unitary in the `Σ|a|²·Δ` norm.

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

pub(crate) struct CenteredFft {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl CenteredFft {
    pub fn new(n: usize) -> Self {
        debug_assert!(n.is_multiple_of(4), "centered transform requires n ≡ 0 (mod 4)");
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    /// `ψ̃(p_k) = Δx/√(2π) · Σ_j ψ(x_j) e^{-i p_k x_j}`
    pub fn position_to_momentum(&self, amplitudes: &[C64], dx: f64) -> Vec<C64> {
        let mut buf = alternate_signs(amplitudes);
        self.forward.process(&mut buf);
        let scale = dx / (2.0 * PI).sqrt();
        rescale_alternating(&mut buf, scale);
        buf
    }

    /// `ψ(x_j) = Δp/√(2π) · Σ_k ψ̃(p_k) e^{+i p_k x_j}`
    pub fn momentum_to_position(&self, amplitudes: &[C64], dp: f64) -> Vec<C64> {
        let mut buf = alternate_signs(amplitudes);
        self.inverse.process(&mut buf);
        let scale = dp / (2.0 * PI).sqrt();
        rescale_alternating(&mut buf, scale);
        buf
    }
}

fn alternate_signs(amplitudes: &[C64]) -> Vec<C64> {
    amplitudes
        .iter()
        .enumerate()
        .map(|(j, &a)| if j % 2 == 0 { a } else { -a })
        .collect()
}

fn rescale_alternating(buf: &mut [C64], scale: f64) {
    for (k, b) in buf.iter_mut().enumerate() {
        *b *= if k % 2 == 0 { scale } else { -scale };
    }
}
