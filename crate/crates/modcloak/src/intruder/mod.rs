//! Modulation classifiers: a small convolutional network over raw I/Q and
//! a decision tree over expert features, plus their training regimes.

pub mod features;
pub mod network;
pub mod train;
pub mod tree;

pub use features::{extract_expert_features, ExpertFeatureVector, FEATURE_NAMES};
pub use network::{softmax_ce, ConvNet, NetGrads, NetworkArchitecture};
pub use train::{
    curve_csv, train_network, train_tree_classifier, CurvePoint, RegimeKind, TrainExample,
    TrainSet, TrainingRegime,
};
pub use tree::{DecisionTree, TreeConfig};

use crate::error::{Error, Result};
use crate::modem::PulseShape;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

/// Complex block to the 2x128 real network input (I row, then Q row).
pub fn block_input(samples: &[Complex64]) -> Vec<f64> {
    let n = samples.len();
    let mut out = vec![0.0; 2 * n];
    for (i, c) in samples.iter().enumerate() {
        out[i] = c.re;
        out[n + i] = c.im;
    }
    out
}

/// Inverse of [`block_input`].
pub fn block_input_to_samples(input: &[f64]) -> Vec<Complex64> {
    let n = input.len() / 2;
    (0..n)
        .map(|i| Complex64::new(input[i], input[n + i]))
        .collect()
}

/// Argmax with ties broken toward the lowest class index.
pub fn argmax_lowest(scores: &[f64]) -> usize {
    let mut best = 0usize;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Models that expose the cross-entropy input gradient needed by the
/// white-box perturbation schemes.
pub trait GradientModel {
    fn loss_and_input_gradient(&self, samples: &[Complex64], label: usize)
        -> Result<(f64, Vec<f64>)>;
}

impl GradientModel for ConvNet {
    fn loss_and_input_gradient(
        &self,
        samples: &[Complex64],
        label: usize,
    ) -> Result<(f64, Vec<f64>)> {
        let input = block_input(samples);
        Ok(self.loss_and_input_gradient(&input, label))
    }
}

/// Metadata stored with a trained model.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct TrainMeta {
    pub seed: u64,
    pub epochs: u32,
    pub final_train_loss: f64,
    pub final_val_accuracy: f64,
}

/// Either of the intruder's score-based classifiers.
#[derive(Debug, Clone)]
pub enum Classifier {
    Network(ConvNet),
    Tree(DecisionTree),
}

const NET_MAGIC: &[u8; 4] = b"MCN1";
const TREE_MAGIC: &[u8; 4] = b"MCT1";

impl Classifier {
    /// One finite score per class.
    pub fn forward(&self, samples: &[Complex64], shape: &PulseShape) -> Result<Vec<f64>> {
        match self {
            Classifier::Network(net) => Ok(net.forward(&block_input(samples))),
            Classifier::Tree(tree) => {
                let f = extract_expert_features(samples, shape)?;
                Ok(tree.scores(&f.0))
            }
        }
    }

    pub fn classify(&self, samples: &[Complex64], shape: &PulseShape) -> Result<usize> {
        Ok(argmax_lowest(&self.forward(samples, shape)?))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Classifier::Network(_) => "network",
            Classifier::Tree(_) => "tree",
        }
    }

    pub fn as_network(&self) -> Result<&ConvNet> {
        match self {
            Classifier::Network(net) => Ok(net),
            Classifier::Tree(_) => Err(Error::Unsupported(
                "operation requires the network classifier".into(),
            )),
        }
    }

    /// Versioned flat-file dump: architecture descriptor, parameter tensor
    /// as little-endian f64, training metadata.
    pub fn save(&self, path: &Path, meta: &TrainMeta) -> Result<()> {
        let mut buf: Vec<u8> = Vec::new();
        match self {
            Classifier::Network(net) => {
                buf.extend_from_slice(NET_MAGIC);
                for v in [
                    net.arch.conv1_filters as u32,
                    net.arch.conv2_filters as u32,
                    net.arch.dense_units as u32,
                ] {
                    buf.extend_from_slice(&v.to_le_bytes());
                }
                buf.extend_from_slice(&meta.seed.to_le_bytes());
                buf.extend_from_slice(&meta.epochs.to_le_bytes());
                buf.extend_from_slice(&meta.final_train_loss.to_le_bytes());
                buf.extend_from_slice(&meta.final_val_accuracy.to_le_bytes());
                let params = net.flat_params();
                buf.extend_from_slice(&(params.len() as u64).to_le_bytes());
                for p in params {
                    buf.extend_from_slice(&p.to_le_bytes());
                }
            }
            Classifier::Tree(tree) => {
                buf.extend_from_slice(TREE_MAGIC);
                let payload = serde_json::to_vec(&(tree, meta))
                    .map_err(|e| Error::Framing(format!("tree serialization: {e}")))?;
                buf.extend_from_slice(&(payload.len() as u64).to_le_bytes());
                buf.extend_from_slice(&payload);
            }
        }
        let mut f = std::fs::File::create(path)?;
        f.write_all(&buf)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<(Classifier, TrainMeta)> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    fn from_bytes(bytes: &[u8]) -> Result<(Classifier, TrainMeta)> {
        let take = |pos: &mut usize, n: usize| -> Result<&[u8]> {
            if *pos + n > bytes.len() {
                return Err(Error::Framing("truncated model file".into()));
            }
            let s = &bytes[*pos..*pos + n];
            *pos += n;
            Ok(s)
        };
        let mut pos = 0usize;
        let magic = take(&mut pos, 4)?;
        if magic == NET_MAGIC {
            let u32_at = |pos: &mut usize| -> Result<u32> {
                Ok(u32::from_le_bytes(take(pos, 4)?.try_into().unwrap()))
            };
            let k1 = u32_at(&mut pos)? as usize;
            let k2 = u32_at(&mut pos)? as usize;
            let h = u32_at(&mut pos)? as usize;
            let seed = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
            let epochs = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap());
            let loss = f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
            let acc = f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
            let count = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()) as usize;
            let arch = NetworkArchitecture {
                conv1_filters: k1,
                conv2_filters: k2,
                dense_units: h,
            };
            if count != arch.param_count() {
                return Err(Error::Framing(format!(
                    "model file declares {count} parameters, architecture needs {}",
                    arch.param_count()
                )));
            }
            let mut params = Vec::with_capacity(count);
            for _ in 0..count {
                params.push(f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()));
            }
            let mut net = ConvNet::new(arch, 0);
            net.set_flat_params(&params)?;
            Ok((
                Classifier::Network(net),
                TrainMeta {
                    seed,
                    epochs,
                    final_train_loss: loss,
                    final_val_accuracy: acc,
                },
            ))
        } else if magic == TREE_MAGIC {
            let len = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()) as usize;
            let payload = take(&mut pos, len)?;
            let (tree, meta): (DecisionTree, TrainMeta) = serde_json::from_slice(payload)
                .map_err(|e| Error::Framing(format!("tree deserialization: {e}")))?;
            Ok((Classifier::Tree(tree), meta))
        } else {
            Err(Error::Framing("unknown model file magic".into()))
        }
    }
}

impl GradientModel for Classifier {
    fn loss_and_input_gradient(
        &self,
        samples: &[Complex64],
        label: usize,
    ) -> Result<(f64, Vec<f64>)> {
        match self {
            Classifier::Network(net) => GradientModel::loss_and_input_gradient(net, samples, label),
            Classifier::Tree(_) => Err(Error::Unsupported(
                "input gradients are unavailable for the tree model".into(),
            )),
        }
    }
}
