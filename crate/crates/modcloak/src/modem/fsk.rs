//! Continuous-phase FSK waveforms (CPFSK and GFSK) and the noncoherent
//! discriminator used to demodulate them.
//!
//! Both schemes are binary with modulation index 0.5: each symbol advances
//! the carrier phase by +-pi/2. CPFSK uses a rectangular frequency pulse,
//! GFSK a Gaussian-smoothed one with BT = 0.35 spanning three symbols.

use num_complex::Complex64;
use std::f64::consts::PI;

pub const MOD_INDEX: f64 = 0.5;
pub const GFSK_BT: f64 = 0.35;

/// Per-sample frequency pulse for one symbol: `pulse[i]` is the phase
/// increment contributed at sample offset `i - lead` from the symbol start.
pub struct FreqPulse {
    pub weights: Vec<f64>,
    pub lead: usize,
}

pub fn rect_pulse(sps: usize) -> FreqPulse {
    let inc = PI * MOD_INDEX / sps as f64;
    FreqPulse {
        weights: vec![inc; sps],
        lead: 0,
    }
}

pub fn gaussian_pulse(sps: usize) -> FreqPulse {
    // Gaussian kernel with sigma chosen from the bandwidth-time product,
    // truncated to +-1.5 symbols, convolved with the rectangular pulse.
    let sigma = (2.0f64.ln()).sqrt() / (2.0 * PI * GFSK_BT) * sps as f64;
    let half = (3 * sps) / 2;
    let kernel: Vec<f64> = (0..=2 * half)
        .map(|i| {
            let t = i as f64 - half as f64;
            (-t * t / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let ksum: f64 = kernel.iter().sum();
    let mut weights = vec![0.0; sps + kernel.len() - 1];
    for (j, &k) in kernel.iter().enumerate() {
        for i in 0..sps {
            weights[i + j] += k / ksum;
        }
    }
    let total = PI * MOD_INDEX;
    let wsum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w *= total / wsum;
    }
    FreqPulse {
        weights,
        lead: half,
    }
}

/// Generate the unit-modulus waveform for +-1 symbols. The phase at sample
/// `t` accumulates the increments of samples before `t`, so the phase
/// change across symbol `k`'s window is exactly the pulse mass inside it.
pub fn phase_modulate(symbols: &[f64], pulse: &FreqPulse, sps: usize) -> Vec<Complex64> {
    let n = symbols.len() * sps;
    let mut freq = vec![0.0f64; n];
    for (k, &a) in symbols.iter().enumerate() {
        let start = (k * sps) as isize - pulse.lead as isize;
        for (i, &w) in pulse.weights.iter().enumerate() {
            let t = start + i as isize;
            if t >= 0 && (t as usize) < n {
                freq[t as usize] += a * w;
            }
        }
    }
    let mut phase = 0.0f64;
    let mut out = Vec::with_capacity(n);
    for f in freq {
        out.push(Complex64::from_polar(1.0, phase));
        phase += f;
    }
    out
}

/// Hard decisions from the per-symbol phase advance. `+pi/2` maps to bit 0.
pub fn discriminate(samples: &[Complex64], sps: usize, n_symbols: usize) -> Vec<u8> {
    let len = samples.len();
    (0..n_symbols)
        .map(|k| {
            let a = samples[(k * sps).min(len - 1)];
            let b = samples[(k * sps + sps).min(len - 1)];
            let dphi = (b * a.conj()).arg();
            if dphi >= 0.0 {
                0
            } else {
                1
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cpfsk_phase_advances_quarter_turn_per_symbol() {
        let pulse = rect_pulse(8);
        let symbols = [1.0, 1.0, -1.0, 1.0, -1.0, -1.0];
        let y = phase_modulate(&symbols, &pulse, 8);
        assert_eq!(y.len(), 48);
        for (k, &s) in symbols.iter().enumerate().take(symbols.len() - 1) {
            let dphi = (y[8 * (k + 1)] * y[8 * k].conj()).arg();
            assert!((dphi - s * PI / 2.0).abs() < 1e-9, "symbol {k}");
        }
    }

    #[test]
    fn waveforms_are_unit_modulus() {
        for pulse in [rect_pulse(8), gaussian_pulse(8)] {
            let symbols = [1.0, -1.0, -1.0, 1.0, 1.0, -1.0, 1.0, -1.0];
            for y in phase_modulate(&symbols, &pulse, 8) {
                assert!((y.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gaussian_pulse_mass_is_half_pi() {
        let p = gaussian_pulse(8);
        let sum: f64 = p.weights.iter().sum();
        assert!((sum - PI / 2.0).abs() < 1e-12);
        // Most of the mass stays within the central symbol.
        let central: f64 = p.weights[p.lead..p.lead + 8].iter().sum();
        assert!(central / sum > 0.6, "central fraction {}", central / sum);
    }

    #[test]
    fn discriminator_recovers_symbols() {
        for pulse in [rect_pulse(8), gaussian_pulse(8)] {
            let symbols: Vec<f64> = [0u8, 1, 1, 0, 1, 0, 0, 1, 1, 0]
                .iter()
                .map(|&b| 1.0 - 2.0 * b as f64)
                .collect();
            let y = phase_modulate(&symbols, &pulse, 8);
            let bits = discriminate(&y, 8, symbols.len());
            let expect: Vec<u8> = symbols.iter().map(|&s| if s > 0.0 { 0 } else { 1 }).collect();
            assert_eq!(bits, expect);
        }
    }
}
