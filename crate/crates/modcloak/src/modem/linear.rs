//! Constellations and pulse-shaped modulation for the linear schemes.

use num_complex::Complex64;

use super::ModulationScheme;

fn gray(p: usize) -> usize {
    p ^ (p >> 1)
}

/// Gray-coded PAM levels: index = bit value, level spacing 2, zero mean.
/// Built so that adjacent levels differ in exactly one bit.
fn gray_pam_levels(bits: usize) -> Vec<f64> {
    let m = 1 << bits;
    let mut table = vec![0.0; m];
    for p in 0..m {
        table[gray(p)] = 2.0 * p as f64 - (m as f64 - 1.0);
    }
    table
}

/// The symbol alphabet for a linear scheme, indexed by the bit-group value
/// (first bit of the group is the most significant). Unit average energy,
/// zero mean.
pub fn constellation(s: ModulationScheme) -> Vec<Complex64> {
    match s {
        ModulationScheme::Bpsk => vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)],
        ModulationScheme::Qpsk => {
            // One Gray-coded BPSK per axis.
            let v = std::f64::consts::FRAC_1_SQRT_2;
            (0..4)
                .map(|b| {
                    let i = if b & 0b10 == 0 { v } else { -v };
                    let q = if b & 0b01 == 0 { v } else { -v };
                    Complex64::new(i, q)
                })
                .collect()
        }
        ModulationScheme::Psk8 => {
            let mut table = vec![Complex64::new(0.0, 0.0); 8];
            for p in 0..8 {
                let phase = 2.0 * std::f64::consts::PI * p as f64 / 8.0;
                table[gray(p)] = Complex64::new(phase.cos(), phase.sin());
            }
            table
        }
        ModulationScheme::Pam4 => {
            let norm = 5.0f64.sqrt();
            gray_pam_levels(2)
                .into_iter()
                .map(|l| Complex64::new(l / norm, 0.0))
                .collect()
        }
        ModulationScheme::Qam16 => {
            let lv = gray_pam_levels(2);
            let norm = 10.0f64.sqrt();
            (0..16)
                .map(|b| Complex64::new(lv[b >> 2] / norm, lv[b & 0b11] / norm))
                .collect()
        }
        ModulationScheme::Qam64 => {
            let lv = gray_pam_levels(3);
            let norm = 42.0f64.sqrt();
            (0..64)
                .map(|b| Complex64::new(lv[b >> 3] / norm, lv[b & 0b111] / norm))
                .collect()
        }
        ModulationScheme::Gfsk | ModulationScheme::Cpfsk => {
            unreachable!("FSK schemes have no linear constellation")
        }
    }
}

/// Map a bit group (MSB first) to its alphabet index.
pub fn bits_to_index(bits: &[u8]) -> usize {
    bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize)
}

/// Inverse of [`bits_to_index`].
pub fn index_to_bits(index: usize, bits: usize) -> Vec<u8> {
    (0..bits)
        .rev()
        .map(|k| ((index >> k) & 1) as u8)
        .collect()
}

/// Upsample symbols and convolve with the shaping taps, emitting exactly
/// `symbols.len() * sps` samples (the filter tail is truncated).
pub fn shape_symbols(symbols: &[Complex64], taps: &[f64], sps: usize) -> Vec<Complex64> {
    let n = symbols.len() * sps;
    let mut y = vec![Complex64::new(0.0, 0.0); n];
    for (k, &a) in symbols.iter().enumerate() {
        let base = k * sps;
        let limit = taps.len().min(n.saturating_sub(base));
        for (j, &h) in taps.iter().enumerate().take(limit) {
            y[base + j] += a * h;
        }
    }
    y
}

/// Matched-filter symbol estimates. Symbol `k` is read at full receive
/// delay `taps.len() - 1 + k*sps`; samples outside the stream are zero.
pub fn matched_filter_symbols(
    samples: &[Complex64],
    taps: &[f64],
    sps: usize,
    n_symbols: usize,
) -> Vec<Complex64> {
    let len = samples.len();
    (0..n_symbols)
        .map(|k| {
            let t = k * sps + taps.len() - 1;
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &h) in taps.iter().enumerate() {
                let idx = t - j;
                if idx < len {
                    acc += samples[idx] * h;
                }
            }
            acc
        })
        .collect()
}

/// Nearest constellation point by Euclidean distance; ties broken toward
/// the lowest index.
pub fn nearest_index(point: Complex64, alphabet: &[Complex64]) -> usize {
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for (i, c) in alphabet.iter().enumerate() {
        let d = (point - c).norm_sqr();
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}
