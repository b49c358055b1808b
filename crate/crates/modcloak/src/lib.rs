//! Desk-scale simulator of a coded wireless link whose transmitter hides
//! the modulation scheme from an eavesdropping classifier.
//!
//! The pipeline: messages are convolutionally encoded ([`chancode`]),
//! modulated into power-normalized 128-sample blocks ([`modem`]),
//! defensively perturbed at the transmitter ([`defense`]), and sent over
//! independent AWGN channels ([`channel`]) to a legitimate receiver
//! (demodulate + Viterbi) and an intruder running a modulation classifier
//! ([`intruder`]). The [`harness`] generates datasets, trains intruder
//! models, runs the defense/accuracy/BER sweeps, and writes CSV results.

pub mod bits;
pub mod chancode;
pub mod channel;
pub mod defense;
pub mod error;
pub mod harness;
pub mod intruder;
pub mod modem;
pub mod seeds;

pub use error::{Error, Result};
