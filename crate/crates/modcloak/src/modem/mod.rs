//! Bits to power-normalized complex baseband blocks and back.
//!
//! Eight modulation schemes share a common framing: symbols are produced at
//! 8 samples per symbol and emitted as blocks of 128 samples (16 symbols).
//! Linear schemes are pulse-shaped by a root-raised-cosine filter whose
//! state runs across block boundaries; the emitted stream starts with the
//! filter's ramp-up and truncates its tail, and the demodulator compensates
//! the combined group delay once per stream. Because the last `span`
//! symbols of a stream lose part of their matched-filter support, messages
//! are padded with at least [`pad_tail_symbols`] trailing symbols; the
//! padding is tracked by the caller and excluded from error rates.
//!
//! Every emitted block is normalized to average sample power exactly 1.
//! The demodulator undoes the per-block scaling blindly, estimating each
//! block's symbol scale from the matched-filter outputs whose pulses are
//! centered inside it (with the known noise variance subtracted), so
//! amplitude-keyed schemes decode exactly on a noiseless round trip.

mod fsk;
mod linear;
mod rrc;

pub use rrc::PulseShape;

use crate::bits::BitSequence;
use crate::error::{Error, Result};
use num_complex::Complex64;

/// Samples per transmitted block.
pub const BLOCK_LEN: usize = 128;

/// The eight supported schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModulationScheme {
    Gfsk,
    Cpfsk,
    Psk8,
    Bpsk,
    Qpsk,
    Pam4,
    Qam16,
    Qam64,
}

impl ModulationScheme {
    pub const ALL: [ModulationScheme; 8] = [
        ModulationScheme::Gfsk,
        ModulationScheme::Cpfsk,
        ModulationScheme::Psk8,
        ModulationScheme::Bpsk,
        ModulationScheme::Qpsk,
        ModulationScheme::Pam4,
        ModulationScheme::Qam16,
        ModulationScheme::Qam64,
    ];

    pub fn bits_per_symbol(self) -> usize {
        match self {
            ModulationScheme::Gfsk | ModulationScheme::Cpfsk | ModulationScheme::Bpsk => 1,
            ModulationScheme::Qpsk | ModulationScheme::Pam4 => 2,
            ModulationScheme::Psk8 => 3,
            ModulationScheme::Qam16 => 4,
            ModulationScheme::Qam64 => 6,
        }
    }

    pub fn is_linear(self) -> bool {
        !matches!(self, ModulationScheme::Gfsk | ModulationScheme::Cpfsk)
    }

    /// Stable numeric id used in dataset files and class labels.
    pub fn id(self) -> usize {
        Self::ALL.iter().position(|&s| s == self).unwrap()
    }

    pub fn from_id(id: usize) -> Result<Self> {
        Self::ALL
            .get(id)
            .copied()
            .ok_or_else(|| Error::Framing(format!("unknown scheme id {id}")))
    }

    pub fn name(self) -> &'static str {
        match self {
            ModulationScheme::Gfsk => "GFSK",
            ModulationScheme::Cpfsk => "CPFSK",
            ModulationScheme::Psk8 => "8PSK",
            ModulationScheme::Bpsk => "BPSK",
            ModulationScheme::Qpsk => "QPSK",
            ModulationScheme::Pam4 => "PAM4",
            ModulationScheme::Qam16 => "QAM16",
            ModulationScheme::Qam64 => "QAM64",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|s| s.name().eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Config(format!("unknown modulation scheme {name:?}")))
    }
}

/// One transmission unit: 128 complex baseband samples plus provenance.
#[derive(Debug, Clone)]
pub struct SignalBlock {
    pub samples: Vec<Complex64>,
    pub label: ModulationScheme,
    /// The slice of the (padded) coded bit stream carried by this block.
    pub src_bits: BitSequence,
    /// Channel SNR the block is associated with; unset pre-channel.
    pub snr_db: Option<f64>,
}

impl SignalBlock {
    /// Average sample power `(1/n) * ||x||^2`.
    pub fn power(&self) -> f64 {
        self.samples.iter().map(|c| c.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }
}

/// Symbols carried by one block.
pub fn symbols_per_block(shape: &PulseShape) -> usize {
    debug_assert_eq!(BLOCK_LEN % shape.samples_per_symbol, 0);
    BLOCK_LEN / shape.samples_per_symbol
}

/// Coded bits consumed by one 128-sample block.
pub fn block_bit_capacity(s: ModulationScheme, shape: &PulseShape) -> usize {
    symbols_per_block(shape) * s.bits_per_symbol()
}

/// Trailing pad symbols every stream carries so that the last data symbol
/// keeps full matched-filter support.
pub fn pad_tail_symbols(shape: &PulseShape) -> usize {
    shape.span
}

/// Data bits a stream of `frame_blocks` blocks can carry after the tail pad.
pub fn frame_data_bit_capacity(
    frame_blocks: usize,
    s: ModulationScheme,
    shape: &PulseShape,
) -> usize {
    let syms = frame_blocks * symbols_per_block(shape) - pad_tail_symbols(shape);
    syms * s.bits_per_symbol()
}

fn normalize_block(samples: &mut [Complex64]) -> Result<f64> {
    let power: f64 = samples.iter().map(|c| c.norm_sqr()).sum::<f64>() / samples.len() as f64;
    if power < 1e-12 {
        return Err(Error::DegenerateInput("all-zero transmit block".into()));
    }
    let scale = 1.0 / power.sqrt();
    for c in samples.iter_mut() {
        *c *= scale;
    }
    Ok(scale)
}

/// Map a bit sequence to a stream of unit-power blocks.
///
/// Bits are zero-padded up to a whole number of blocks (with at least
/// [`pad_tail_symbols`] trailing symbols); callers track the original
/// length and ignore pad bits after demodulation.
pub fn modulate(
    bits: &BitSequence,
    s: ModulationScheme,
    shape: &PulseShape,
) -> Result<Vec<SignalBlock>> {
    if bits.is_empty() {
        return Err(Error::Usage("cannot modulate an empty bit sequence".into()));
    }
    let bps = s.bits_per_symbol();
    let spb = symbols_per_block(shape);
    let data_syms = bits.len().div_ceil(bps);
    let total_syms = (data_syms + pad_tail_symbols(shape)).div_ceil(spb) * spb;
    let padded = bits.zero_padded(total_syms * bps);

    let sps = shape.samples_per_symbol;
    let stream: Vec<Complex64> = if s.is_linear() {
        let table = linear::constellation(s);
        let symbols: Vec<Complex64> = (0..total_syms)
            .map(|k| table[linear::bits_to_index(&padded.as_slice()[k * bps..(k + 1) * bps])])
            .collect();
        linear::shape_symbols(&symbols, shape.taps(), sps)
    } else {
        let symbols: Vec<f64> = (0..total_syms)
            .map(|k| 1.0 - 2.0 * padded[k] as f64)
            .collect();
        let pulse = match s {
            ModulationScheme::Cpfsk => fsk::rect_pulse(sps),
            ModulationScheme::Gfsk => fsk::gaussian_pulse(sps),
            _ => unreachable!(),
        };
        fsk::phase_modulate(&symbols, &pulse, sps)
    };

    let mut blocks = Vec::with_capacity(stream.len() / BLOCK_LEN);
    for (b, chunk) in stream.chunks(BLOCK_LEN).enumerate() {
        let mut samples = chunk.to_vec();
        normalize_block(&mut samples)?;
        let lo = b * spb * bps;
        let hi = (b + 1) * spb * bps;
        blocks.push(SignalBlock {
            samples,
            label: s,
            src_bits: BitSequence::from_bits(padded.as_slice()[lo..hi].to_vec())?,
            snr_db: None,
        });
    }
    Ok(blocks)
}

/// Demodulate a whole stream of concatenated blocks back to hard bits.
///
/// Returns one bit group per symbol including the pad tail; the caller
/// truncates to the coded length it expects. `noise_var` is the per-sample
/// complex noise variance used to unbias the per-block scale estimate.
pub fn demodulate_stream(
    samples: &[Complex64],
    s: ModulationScheme,
    shape: &PulseShape,
    noise_var: f64,
) -> Result<BitSequence> {
    let sps = shape.samples_per_symbol;
    if samples.is_empty() || samples.len() % BLOCK_LEN != 0 {
        return Err(Error::Framing(format!(
            "stream length {} is not a whole number of {BLOCK_LEN}-sample blocks",
            samples.len()
        )));
    }
    let n_syms = samples.len() / sps;
    let bps = s.bits_per_symbol();

    if !s.is_linear() {
        let hard = fsk::discriminate(samples, sps, n_syms);
        return BitSequence::from_bits(hard);
    }

    let table = linear::constellation(s);
    let mut est = linear::matched_filter_symbols(samples, shape.taps(), sps, n_syms);

    // Undo the per-block transmit normalization: group symbols by the block
    // their pulse center lands in and rescale each group to unit average
    // symbol energy, subtracting the known noise power.
    let spb = symbols_per_block(shape);
    let half_span = shape.span / 2;
    let n_blocks = samples.len() / BLOCK_LEN;
    let group_of = |k: usize| ((k + half_span) / spb).min(n_blocks - 1);
    let mut group_energy = vec![0.0f64; n_blocks];
    let mut group_count = vec![0usize; n_blocks];
    for (k, e) in est.iter().enumerate() {
        let g = group_of(k);
        group_energy[g] += e.norm_sqr();
        group_count[g] += 1;
    }
    let scales: Vec<f64> = (0..n_blocks)
        .map(|g| {
            if group_count[g] == 0 {
                return 1.0;
            }
            let mean = group_energy[g] / group_count[g] as f64;
            (mean - noise_var).max(1e-6).sqrt()
        })
        .collect();
    for (k, e) in est.iter_mut().enumerate() {
        *e /= scales[group_of(k)];
    }

    let mut bits = BitSequence::zeros(0);
    for e in est {
        let idx = linear::nearest_index(e, &table);
        for b in linear::index_to_bits(idx, bps) {
            bits.push(b);
        }
    }
    Ok(bits)
}

/// Demodulate a single block (a one-block stream). The block's `snr_db`
/// field, when set, supplies the noise variance for scale estimation.
pub fn demodulate(block: &SignalBlock, s: ModulationScheme, shape: &PulseShape) -> Result<BitSequence> {
    let noise_var = block
        .snr_db
        .map(|snr| 10f64.powf(-snr / 10.0))
        .unwrap_or(0.0);
    demodulate_stream(&block.samples, s, shape, noise_var)
}

/// Concatenate block samples into one stream.
pub fn concat_blocks(blocks: &[SignalBlock]) -> Vec<Complex64> {
    blocks.iter().flat_map(|b| b.samples.iter().copied()).collect()
}
