//! Additive white Gaussian noise channels.
//!
//! SNR is defined per complex sample against the unit transmit power, so
//! the total complex noise variance is `10^(-snr_db/10)`, split evenly
//! between the real and imaginary parts. The noise stream is fully
//! determined by the spec's seed; the receiver and intruder paths use
//! disjoint substreams derived by the caller.

use crate::modem::SignalBlock;
use crate::seeds;
use num_complex::Complex64;

/// One AWGN path: an SNR and the seed of its noise substream.
#[derive(Debug, Clone, Copy)]
pub struct ChannelSpec {
    pub snr_db: f64,
    pub seed: u64,
}

impl ChannelSpec {
    /// Total complex noise variance under unit signal power.
    pub fn noise_variance(&self) -> f64 {
        10f64.powf(-self.snr_db / 10.0)
    }
}

/// Add circularly-symmetric complex Gaussian noise to a sample stream.
pub fn awgn_samples(x: &[Complex64], spec: &ChannelSpec) -> Vec<Complex64> {
    let sigma_axis = (spec.noise_variance() / 2.0).sqrt();
    let mut rng = seeds::rng(spec.seed);
    x.iter()
        .map(|&c| {
            let (a, b) = seeds::normal_pair(&mut rng);
            c + Complex64::new(sigma_axis * a, sigma_axis * b)
        })
        .collect()
}

/// Noisy copy of a block; the output carries the channel SNR.
pub fn awgn(x: &SignalBlock, spec: &ChannelSpec) -> SignalBlock {
    SignalBlock {
        samples: awgn_samples(&x.samples, spec),
        label: x.label,
        src_bits: x.src_bits.clone(),
        snr_db: Some(spec.snr_db),
    }
}

/// Transmit one block to the legitimate receiver and the intruder over
/// independent noise realizations.
pub fn two_path_transmit(
    x: &SignalBlock,
    rx: &ChannelSpec,
    intruder: &ChannelSpec,
) -> (SignalBlock, SignalBlock) {
    (awgn(x, rx), awgn(x, intruder))
}
