//! Expert features for the tree-based classifier.
//!
//! All features are invariant to global phase rotation and to block scale:
//! the block is normalized to unit average power first, envelope and
//! instantaneous-frequency statistics are modulus- or difference-based, and
//! the phase-spread feature is the circular spread of the fourth-power
//! phase. Higher-order cumulants are computed on matched-filter symbol
//! estimates whose pulses lie fully inside the block, normalized to unit
//! symbol energy, and only their magnitudes are kept.

use crate::error::{Error, Result};
use crate::modem::PulseShape;
use num_complex::Complex64;

pub const FEATURE_NAMES: [&str; 10] = [
    "c20_mag",
    "c21_mag",
    "c40_mag",
    "c41_mag",
    "c42_mag",
    "c63_mag",
    "amp_std",
    "phase4_spread",
    "freq_std",
    "amp_kurtosis",
];

/// Fixed-order feature vector, see [`FEATURE_NAMES`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertFeatureVector(pub Vec<f64>);

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn std_dev(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt()
}

/// Normalized cumulant magnitudes of a symbol cloud: |C20|, |C21|, |C40|,
/// |C41|, |C42|, |C63| with the standard moment expansions, scaled by the
/// appropriate power of C21.
pub fn cumulant_magnitudes(symbols: &[Complex64]) -> [f64; 6] {
    let n = symbols.len() as f64;
    let mut m20 = Complex64::new(0.0, 0.0);
    let mut m21 = 0.0f64;
    let mut m40 = Complex64::new(0.0, 0.0);
    let mut m41 = Complex64::new(0.0, 0.0);
    let mut m42 = 0.0f64;
    let mut m63 = 0.0f64;
    for &s in symbols {
        let s2 = s * s;
        let a2 = s.norm_sqr();
        m20 += s2;
        m21 += a2;
        m40 += s2 * s2;
        m41 += s2 * a2;
        m42 += a2 * a2;
        m63 += a2 * a2 * a2;
    }
    m20 /= n;
    m21 /= n;
    m40 /= n;
    m41 /= n;
    m42 /= n;
    m63 /= n;

    let c20 = m20;
    let c21 = m21;
    let c40 = m40 - 3.0 * m20 * m20;
    let c41 = m41 - 3.0 * m20 * m21;
    let c42 = m42 - m20.norm_sqr() - 2.0 * m21 * m21;
    // C63 with M43 = conj(M41) and M22 = conj(M20).
    let c63 = m63 - 9.0 * m21 * m42 + 12.0 * m21 * m21 * m21
        - 3.0 * (m20 * m41.conj()).re
        - 3.0 * (m20.conj() * m41).re
        + 18.0 * m21 * (m20 * m20.conj()).re;
    let k2 = (c21 * c21).max(1e-30);
    let k3 = (c21 * c21 * c21).max(1e-30);
    [
        c20.norm() / c21.max(1e-30),
        1.0,
        c40.norm() / k2,
        c41.norm() / k2,
        c42.abs() / k2,
        c63.abs() / k3,
    ]
}

/// Matched-filter symbol estimates whose full pulse support lies inside the
/// block, rescaled to unit average energy.
fn clean_symbols(samples: &[Complex64], shape: &PulseShape) -> Vec<Complex64> {
    let sps = shape.samples_per_symbol;
    let taps = shape.taps();
    let max_k = (samples.len().saturating_sub(taps.len())) / sps;
    let mut syms = Vec::with_capacity(max_k + 1);
    for k in 0..=max_k {
        let t = k * sps + taps.len() - 1;
        if t >= samples.len() {
            break;
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, &h) in taps.iter().enumerate() {
            acc += samples[t - j] * h;
        }
        syms.push(acc);
    }
    let energy = syms.iter().map(|s| s.norm_sqr()).sum::<f64>() / syms.len().max(1) as f64;
    if energy > 1e-30 {
        let inv = 1.0 / energy.sqrt();
        for s in &mut syms {
            *s *= inv;
        }
    }
    syms
}

/// Extract the fixed feature vector from one received block.
pub fn extract_expert_features(
    samples: &[Complex64],
    shape: &PulseShape,
) -> Result<ExpertFeatureVector> {
    let power = samples.iter().map(|c| c.norm_sqr()).sum::<f64>() / samples.len().max(1) as f64;
    if samples.is_empty() || power < 1e-30 {
        return Err(Error::DegenerateInput(
            "expert features of an all-zero block".into(),
        ));
    }
    let inv = 1.0 / power.sqrt();
    let y: Vec<Complex64> = samples.iter().map(|&c| c * inv).collect();

    let amps: Vec<f64> = y.iter().map(|c| c.norm()).collect();
    let amp_std = std_dev(&amps);
    let amp_mean = mean(&amps);
    let centered4 = amps
        .iter()
        .map(|a| (a - amp_mean).powi(4))
        .sum::<f64>()
        / amps.len() as f64;
    let amp_kurt = if amp_std > 1e-9 {
        centered4 / amp_std.powi(4)
    } else {
        0.0
    };

    let dphi: Vec<f64> = y
        .windows(2)
        .map(|w| (w[1] * w[0].conj()).arg())
        .collect();
    let freq_std = std_dev(&dphi);

    // Circular spread of the fourth-power phase; rotation shifts all
    // fourth-power phases by a common constant, leaving it unchanged.
    let mut r4 = Complex64::new(0.0, 0.0);
    for c in &y {
        let a = c.norm();
        if a > 1e-12 {
            let u = c / a;
            let u2 = u * u;
            r4 += u2 * u2;
        }
    }
    let r4 = (r4.norm() / y.len() as f64).clamp(1e-12, 1.0);
    let phase4_spread = (-2.0 * r4.ln()).sqrt();

    let syms = clean_symbols(&y, shape);
    if syms.is_empty() {
        return Err(Error::DegenerateInput(
            "block too short for matched-filter features".into(),
        ));
    }
    let cums = cumulant_magnitudes(&syms);

    let mut out = Vec::with_capacity(10);
    out.extend_from_slice(&cums);
    out.push(amp_std);
    out.push(phase4_spread);
    out.push(freq_std);
    out.push(amp_kurt);
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("non-finite expert feature".into()));
    }
    Ok(ExpertFeatureVector(out))
}
