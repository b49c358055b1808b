//! Root-raised-cosine pulse shaping filter.

use crate::error::{Error, Result};

/// RRC filter description. Taps are normalized to unit energy so that a
/// transmit/receive filter pair has unit combined peak gain.
#[derive(Debug, Clone)]
pub struct PulseShape {
    pub span: usize,
    pub rolloff: f64,
    pub samples_per_symbol: usize,
    taps: Vec<f64>,
}

impl PulseShape {
    /// Build an RRC filter spanning `span` symbols at `sps` samples per
    /// symbol with the given roll-off factor.
    pub fn rrc(span: usize, rolloff: f64, sps: usize) -> Result<Self> {
        if span == 0 || sps == 0 || !(0.0..=1.0).contains(&rolloff) || rolloff == 0.0 {
            return Err(Error::Config(format!(
                "invalid pulse shape: span {span}, rolloff {rolloff}, sps {sps}"
            )));
        }
        let half = (span * sps) / 2;
        let n = span * sps + 1;
        let beta = rolloff;
        let mut taps = Vec::with_capacity(n);
        for i in 0..n {
            let t = (i as f64 - half as f64) / sps as f64;
            taps.push(rrc_impulse(t, beta));
        }
        let energy: f64 = taps.iter().map(|h| h * h).sum();
        let scale = 1.0 / energy.sqrt();
        for h in &mut taps {
            *h *= scale;
        }
        Ok(Self {
            span,
            rolloff,
            samples_per_symbol: sps,
            taps,
        })
    }

    /// The default shaping used throughout: span 10, roll-off 0.25, 8 sps.
    pub fn default_shape() -> Self {
        Self::rrc(10, 0.25, 8).unwrap()
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Group delay in samples (half the filter length).
    pub fn delay(&self) -> usize {
        (self.span * self.samples_per_symbol) / 2
    }
}

fn rrc_impulse(t: f64, beta: f64) -> f64 {
    use std::f64::consts::PI;
    if t.abs() < 1e-12 {
        return 1.0 + beta * (4.0 / PI - 1.0);
    }
    let tb = 4.0 * beta * t;
    if (tb.abs() - 1.0).abs() < 1e-9 {
        let a = (PI / (4.0 * beta)).sin() * (1.0 + 2.0 / PI);
        let b = (PI / (4.0 * beta)).cos() * (1.0 - 2.0 / PI);
        return beta / std::f64::consts::SQRT_2 * (a + b);
    }
    let num = (PI * t * (1.0 - beta)).sin() + tb * (PI * t * (1.0 + beta)).cos();
    let den = PI * t * (1.0 - tb * tb);
    num / den
}
