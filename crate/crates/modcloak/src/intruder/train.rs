//! Training regimes for the intruder's classifiers.

use super::network::{ConvNet, NetGrads, NetworkArchitecture};
use super::tree::{DecisionTree, TreeConfig};
use super::{argmax_lowest, block_input_to_samples};
use crate::error::{Error, Result};
use crate::modem::PulseShape;
use crate::seeds::{self, snr_tag};
use serde::{Deserialize, Serialize};

/// One labeled training block: the 2x128 real input, the scheme label and
/// the channel SNR it was realized at.
#[derive(Debug, Clone)]
pub struct TrainExample {
    pub input: Vec<f64>,
    pub label: usize,
    pub snr_db: f64,
}

#[derive(Debug, Clone, Default)]
pub struct TrainSet {
    pub examples: Vec<TrainExample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeKind {
    PerSnr,
    Mixed,
    Curriculum,
}

/// How the network is trained. `snrs_db` lists the tranches; a curriculum
/// presents them cumulatively and must be given in strictly descending
/// order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainingRegime {
    pub kind: RegimeKind,
    pub snrs_db: Vec<f64>,
    pub epochs: usize,
    /// Epochs spent per cumulative curriculum stage.
    pub stage_epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub momentum: f64,
    /// Early-stop patience in epochs (per-SNR and mixed regimes).
    pub patience: usize,
    pub seed: u64,
}

impl TrainingRegime {
    pub fn per_snr(snr_db: f64, seed: u64) -> Self {
        Self {
            kind: RegimeKind::PerSnr,
            snrs_db: vec![snr_db],
            epochs: 30,
            stage_epochs: 1,
            batch: 128,
            lr: 1e-3,
            momentum: 0.9,
            patience: 5,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.snrs_db.is_empty() || self.batch == 0 || self.lr <= 0.0 {
            return Err(Error::Config("invalid training regime".into()));
        }
        if self.kind == RegimeKind::Curriculum {
            if self.stage_epochs == 0 {
                return Err(Error::Config("curriculum needs stage_epochs >= 1".into()));
            }
            let descending = self
                .snrs_db
                .windows(2)
                .all(|w| w[0] > w[1]);
            if !descending {
                return Err(Error::Config(
                    "curriculum tranches must be strictly descending in SNR".into(),
                ));
            }
        }
        Ok(())
    }
}

/// One row of the training-curve record.
#[derive(Debug, Clone)]
pub struct CurvePoint {
    pub epoch: usize,
    pub tranche_snr_db: Option<f64>,
    pub train_loss: f64,
    pub val_accuracy: f64,
}

/// Write the training curve in the documented CSV schema.
pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from("epoch,tranche_snr_db,train_loss,val_accuracy\n");
    for p in points {
        let t = p
            .tranche_snr_db
            .map(|v| v.to_string())
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{}\n",
            p.epoch, t, p.train_loss, p.val_accuracy
        ));
    }
    out
}

/// Deterministic 90/10 train/validation split by index.
fn split_indices(n: usize) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::with_capacity(n - n / 10);
    let mut val = Vec::with_capacity(n / 10);
    for i in 0..n {
        if i % 10 == 9 {
            val.push(i);
        } else {
            train.push(i);
        }
    }
    (train, val)
}

fn val_accuracy(net: &ConvNet, set: &TrainSet, idx: &[usize]) -> f64 {
    if idx.is_empty() {
        return 0.0;
    }
    let correct = idx
        .iter()
        .filter(|&&i| {
            let ex = &set.examples[i];
            argmax_lowest(&net.forward(&ex.input)) == ex.label
        })
        .count();
    correct as f64 / idx.len() as f64
}

struct EpochRunner {
    grads: NetGrads,
    velocity: NetGrads,
    batch: usize,
    lr: f64,
    momentum: f64,
}

impl EpochRunner {
    const GRAD_CLIP: f64 = 5.0;

    fn run(&mut self, net: &mut ConvNet, set: &TrainSet, order: &[usize]) -> f64 {
        let mut total_loss = 0.0;
        for chunk in order.chunks(self.batch) {
            self.grads.clear();
            for &i in chunk {
                let ex = &set.examples[i];
                total_loss += net.accumulate_grads(&ex.input, ex.label, &mut self.grads);
            }
            net.sgd_step(
                &mut self.grads,
                &mut self.velocity,
                self.lr,
                self.momentum,
                chunk.len(),
                Self::GRAD_CLIP,
            );
        }
        total_loss / order.len().max(1) as f64
    }
}

/// Train the convolutional classifier under the given regime.
///
/// Deterministic given the regime seed: identical seeds produce identical
/// final weights bit for bit.
pub fn train_network(
    arch: NetworkArchitecture,
    set: &TrainSet,
    regime: &TrainingRegime,
) -> Result<(ConvNet, Vec<CurvePoint>)> {
    regime.validate()?;
    if set.examples.is_empty() {
        return Err(Error::Config("empty training dataset".into()));
    }
    let mut net = ConvNet::new(arch, regime.seed);
    let mut runner = EpochRunner {
        grads: NetGrads::zeros(&arch),
        velocity: NetGrads::zeros(&arch),
        batch: regime.batch,
        lr: regime.lr,
        momentum: regime.momentum,
    };
    let (train_idx, val_idx) = split_indices(set.examples.len());
    let mut curve = Vec::new();

    match regime.kind {
        RegimeKind::PerSnr | RegimeKind::Mixed => {
            let mut best_acc = -1.0;
            let mut best_params: Option<Vec<f64>> = None;
            let mut stale = 0usize;
            for epoch in 0..regime.epochs {
                let mut order = train_idx.clone();
                shuffle(&mut order, seeds::derive(regime.seed, &[seeds::tag::SHUFFLE, epoch as u64]));
                let loss = runner.run(&mut net, set, &order);
                let acc = val_accuracy(&net, set, &val_idx);
                curve.push(CurvePoint {
                    epoch,
                    tranche_snr_db: if regime.kind == RegimeKind::PerSnr {
                        Some(regime.snrs_db[0])
                    } else {
                        None
                    },
                    train_loss: loss,
                    val_accuracy: acc,
                });
                if acc > best_acc + 1e-4 {
                    best_acc = acc;
                    best_params = Some(net.flat_params());
                    stale = 0;
                } else {
                    stale += 1;
                    if stale >= regime.patience {
                        break;
                    }
                }
            }
            if let Some(p) = best_params {
                net.set_flat_params(&p)?;
            }
        }
        RegimeKind::Curriculum => {
            let mut epoch = 0usize;
            for stage in 0..regime.snrs_db.len() {
                let allowed: Vec<u64> = regime.snrs_db[..=stage].iter().map(|&s| snr_tag(s)).collect();
                let active: Vec<usize> = train_idx
                    .iter()
                    .copied()
                    .filter(|&i| allowed.contains(&snr_tag(set.examples[i].snr_db)))
                    .collect();
                let active_val: Vec<usize> = val_idx
                    .iter()
                    .copied()
                    .filter(|&i| allowed.contains(&snr_tag(set.examples[i].snr_db)))
                    .collect();
                if active.is_empty() {
                    return Err(Error::Config(format!(
                        "curriculum tranche at {} dB has no training data",
                        regime.snrs_db[stage]
                    )));
                }
                for _ in 0..regime.stage_epochs {
                    let mut order = active.clone();
                    shuffle(&mut order, seeds::derive(regime.seed, &[seeds::tag::SHUFFLE, epoch as u64]));
                    let loss = runner.run(&mut net, set, &order);
                    let acc = val_accuracy(&net, set, &active_val);
                    curve.push(CurvePoint {
                        epoch,
                        tranche_snr_db: Some(regime.snrs_db[stage]),
                        train_loss: loss,
                        val_accuracy: acc,
                    });
                    epoch += 1;
                }
            }
        }
    }
    Ok((net, curve))
}

fn shuffle(order: &mut [usize], seed: u64) {
    use rand::seq::SliceRandom;
    let mut rng = seeds::rng(seed);
    order.shuffle(&mut rng);
}

/// Train the expert-feature decision tree on the same realized blocks.
pub fn train_tree_classifier(
    set: &TrainSet,
    shape: &PulseShape,
    config: TreeConfig,
) -> Result<DecisionTree> {
    if set.examples.is_empty() {
        return Err(Error::Config("empty training dataset".into()));
    }
    let mut features = Vec::with_capacity(set.examples.len());
    let mut labels = Vec::with_capacity(set.examples.len());
    for ex in &set.examples {
        let samples = block_input_to_samples(&ex.input);
        match super::features::extract_expert_features(&samples, shape) {
            Ok(f) => {
                features.push(f.0);
                labels.push(ex.label);
            }
            Err(Error::DegenerateInput(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    DecisionTree::train(&features, &labels, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intruder::block_input;
    use crate::modem::{self, ModulationScheme};

    /// A tiny synthetic set: one scheme maps to constant-I blocks, another
    /// to constant-Q, so a single-class problem is trivially separable.
    fn synthetic_set(n: usize, classes: &[usize], snr_db: f64) -> TrainSet {
        let mut examples = Vec::new();
        let mut rng = seeds::rng(99);
        for i in 0..n {
            let label = classes[i % classes.len()];
            let mut input = vec![0.0; 256];
            for x in 0..128 {
                let (a, b) = seeds::normal_pair(&mut rng);
                input[x] = label as f64 + 0.1 * a;
                input[128 + x] = -(label as f64) + 0.1 * b;
            }
            examples.push(TrainExample {
                input,
                label,
                snr_db,
            });
        }
        TrainSet { examples }
    }

    fn small_arch() -> NetworkArchitecture {
        NetworkArchitecture {
            conv1_filters: 8,
            conv2_filters: 4,
            dense_units: 16,
        }
    }

    #[test]
    fn rejects_empty_dataset() {
        let regime = TrainingRegime::per_snr(10.0, 1);
        assert!(train_network(small_arch(), &TrainSet::default(), &regime).is_err());
    }

    #[test]
    fn rejects_unsorted_curriculum() {
        let mut regime = TrainingRegime::per_snr(10.0, 1);
        regime.kind = RegimeKind::Curriculum;
        regime.snrs_db = vec![0.0, 10.0];
        assert!(regime.validate().is_err());
        regime.snrs_db = vec![10.0, 0.0];
        assert!(regime.validate().is_ok());
    }

    #[test]
    fn single_class_reaches_full_accuracy() {
        let set = synthetic_set(60, &[3], 10.0);
        let mut regime = TrainingRegime::per_snr(10.0, 2);
        regime.epochs = 5;
        regime.batch = 16;
        let (net, curve) = train_network(small_arch(), &set, &regime).unwrap();
        assert!(!curve.is_empty());
        let acc = set
            .examples
            .iter()
            .filter(|ex| argmax_lowest(&net.forward(&ex.input)) == ex.label)
            .count() as f64
            / set.examples.len() as f64;
        assert_eq!(acc, 1.0);
    }

    #[test]
    fn training_is_bit_deterministic() {
        let set = synthetic_set(80, &[1, 4], 0.0);
        let mut regime = TrainingRegime::per_snr(0.0, 7);
        regime.epochs = 3;
        regime.batch = 32;
        let (a, _) = train_network(small_arch(), &set, &regime).unwrap();
        let (b, _) = train_network(small_arch(), &set, &regime).unwrap();
        assert_eq!(a.flat_params(), b.flat_params());
    }

    #[test]
    fn curriculum_presents_non_increasing_tranches() {
        let mut examples = Vec::new();
        for &snr in &[20.0, 10.0, 0.0] {
            examples.extend(synthetic_set(40, &[0, 2], snr).examples);
        }
        let set = TrainSet { examples };
        let mut regime = TrainingRegime::per_snr(0.0, 3);
        regime.kind = RegimeKind::Curriculum;
        regime.snrs_db = vec![20.0, 10.0, 0.0];
        regime.stage_epochs = 2;
        regime.batch = 32;
        let (_, curve) = train_network(small_arch(), &set, &regime).unwrap();
        let tranches: Vec<f64> = curve.iter().map(|p| p.tranche_snr_db.unwrap()).collect();
        assert!(tranches.windows(2).all(|w| w[0] >= w[1]));
        assert_eq!(curve.len(), 6);
    }

    #[test]
    fn tree_trains_on_real_blocks() {
        let shape = PulseShape::default_shape();
        let mut examples = Vec::new();
        let mut rng = seeds::rng(5);
        for s in [ModulationScheme::Cpfsk, ModulationScheme::Qam64] {
            for _ in 0..30 {
                let bits = crate::bits::BitSequence::random(
                    2 * modem::block_bit_capacity(s, &shape),
                    &mut rng,
                );
                let blocks = modem::modulate(&bits, s, &shape).unwrap();
                examples.push(TrainExample {
                    input: block_input(&blocks[0].samples),
                    label: s.id(),
                    snr_db: 20.0,
                });
            }
        }
        let set = TrainSet { examples };
        let tree = train_tree_classifier(&set, &shape, TreeConfig::default()).unwrap();
        let correct = set
            .examples
            .iter()
            .filter(|ex| {
                let samples = block_input_to_samples(&ex.input);
                let f = super::super::features::extract_expert_features(&samples, &shape).unwrap();
                argmax_lowest(&tree.scores(&f.0)) == ex.label
            })
            .count();
        assert!(correct as f64 / set.examples.len() as f64 > 0.95);
    }
}
