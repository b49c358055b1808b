//! BER-aware perturbation schemes over block groups.
//!
//! Both schemes iterate stochastic sign-PGD over a whole group of blocks
//! (one codeword), drawing fresh receiver- and intruder-path noise each
//! iteration and estimating the BER gradient with SPSA through the full
//! demodulate-and-decode chain. The BER is evaluated jointly over the
//! group, so one decode serves all of its blocks; single-block groups are
//! supported by framing the dataset with one block per codeword.

use super::spsa::{spsa_gradient, GroupBerEvaluator};
use super::{apply_defensive_encoding, project_l2_ball, sign, DefendedBlock, DefenseConfig};
use crate::chancode::CodeSpec;
use crate::channel::{awgn_samples, ChannelSpec};
use crate::bits::BitSequence;
use crate::error::{Error, Result};
use crate::intruder::GradientModel;
use crate::modem::{ModulationScheme, PulseShape, BLOCK_LEN};
use crate::seeds::{self, tag};
use num_complex::Complex64;

/// Everything the transmitter knows when shaping a BER-aware perturbation:
/// the frame geometry and both channel SNRs.
pub struct BerAwareContext<'a> {
    pub scheme: ModulationScheme,
    pub shape: &'a PulseShape,
    pub code: &'a CodeSpec,
    pub message: &'a BitSequence,
    pub coded_len: usize,
    pub receiver_snr_db: f64,
    pub intruder_snr_db: f64,
}

fn flatten(blocks: &[Vec<Complex64>]) -> Vec<Complex64> {
    blocks.iter().flat_map(|b| b.iter().copied()).collect()
}

enum Combine {
    /// sign(grad_L - lambda * grad_e)
    Linear { lambda: f64 },
    /// Project grad_L orthogonal to the normalized BER gradient.
    Orthogonal,
}

fn run_group(
    x0: &[Vec<Complex64>],
    label: usize,
    model: &dyn GradientModel,
    cfg: &DefenseConfig,
    ctx: &BerAwareContext,
    combine: Combine,
) -> Result<Vec<DefendedBlock>> {
    cfg.validate()?;
    if x0.is_empty() {
        return Err(Error::Usage("empty block group".into()));
    }
    let g = x0.len();
    let n = BLOCK_LEN;
    let evaluator = GroupBerEvaluator {
        scheme: ctx.scheme,
        shape: ctx.shape,
        code: ctx.code,
        message: ctx.message,
        coded_len: ctx.coded_len,
        noise_var: 10f64.powf(-ctx.receiver_snr_db / 10.0),
    };

    let mut current = x0.to_vec();
    for t in 0..cfg.iterations {
        // Fresh simulated channel noise for both paths.
        let z1_spec = ChannelSpec {
            snr_db: ctx.receiver_snr_db,
            seed: seeds::derive(cfg.seed, &[tag::DEFENSE, t as u64, tag::PATH_RECEIVER]),
        };
        let z2_spec = ChannelSpec {
            snr_db: ctx.intruder_snr_db,
            seed: seeds::derive(cfg.seed, &[tag::DEFENSE, t as u64, tag::PATH_INTRUDER]),
        };
        let flat = flatten(&current);
        let y2 = awgn_samples(&flat, &z2_spec);

        // Classifier gradient per block at the intruder-side noisy copy;
        // the additive channel has identity Jacobian back to the input.
        let mut grad_l = vec![0.0f64; 2 * g * n];
        for (b, y2b) in y2.chunks(n).enumerate() {
            let (_, gl) = model.loss_and_input_gradient(y2b, label)?;
            for i in 0..n {
                grad_l[b * n + i] = gl[i];
                grad_l[g * n + b * n + i] = gl[n + i];
            }
        }

        // BER gradient over the whole group at the receiver-side copy.
        let needs_ber = match combine {
            Combine::Linear { lambda } => lambda > 0.0,
            Combine::Orthogonal => true,
        };
        let grad_e = if needs_ber {
            let y1 = awgn_samples(&flat, &z1_spec);
            let mut spsa_rng = seeds::rng(seeds::derive(
                cfg.seed,
                &[tag::SPSA, t as u64],
            ));
            let mut eval = |v: &[Complex64]| evaluator.ber(v);
            spsa_gradient(&y1, &mut eval, cfg.spsa.eta, cfg.spsa.k, &mut spsa_rng)
        } else {
            vec![0.0; 2 * g * n]
        };

        let dir: Vec<f64> = match combine {
            Combine::Linear { lambda } => grad_l
                .iter()
                .zip(&grad_e)
                .map(|(l, e)| l - lambda * e)
                .collect(),
            Combine::Orthogonal => {
                let norm: f64 = grad_e.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm <= 1e-300 {
                    // Flat BER landscape: fall back to the plain gradient.
                    grad_l.clone()
                } else {
                    let dot: f64 = grad_l
                        .iter()
                        .zip(&grad_e)
                        .map(|(l, e)| l * e / norm)
                        .sum();
                    grad_l
                        .iter()
                        .zip(&grad_e)
                        .map(|(l, e)| l - dot * e / norm)
                        .collect()
                }
            }
        };

        for (b, block) in current.iter_mut().enumerate() {
            for i in 0..n {
                block[i] += Complex64::new(
                    cfg.beta * sign(dir[b * n + i]),
                    cfg.beta * sign(dir[g * n + b * n + i]),
                );
            }
            *block = project_l2_ball(block, &x0[b], cfg.epsilon);
        }
    }

    let mut out = Vec::with_capacity(g);
    for (b, block) in current.iter().enumerate() {
        let delta: Vec<Complex64> = block.iter().zip(&x0[b]).map(|(a, c)| a - c).collect();
        out.push(DefendedBlock {
            samples: apply_defensive_encoding(&x0[b], &delta)?,
            delta,
        });
    }
    Ok(out)
}

/// BER-aware scheme: stochastic PGD on the lambda-weighted combination of
/// the classifier loss and the group error rate.
pub fn bdms(
    x0: &[Vec<Complex64>],
    label: usize,
    model: &dyn GradientModel,
    cfg: &DefenseConfig,
    ctx: &BerAwareContext,
) -> Result<Vec<DefendedBlock>> {
    run_group(x0, label, model, cfg, ctx, Combine::Linear { lambda: cfg.lambda })
}

/// BER-orthogonal scheme: each step follows the classifier gradient
/// projected orthogonal to the (SPSA-estimated, normalized) BER gradient.
pub fn bodms(
    x0: &[Vec<Complex64>],
    label: usize,
    model: &dyn GradientModel,
    cfg: &DefenseConfig,
    ctx: &BerAwareContext,
) -> Result<Vec<DefendedBlock>> {
    run_group(x0, label, model, cfg, ctx, Combine::Orthogonal)
}

/// The orthogonalized step direction used by BODMS, exposed for property
/// checks: returns `(direction, unit BER gradient)`.
pub fn orthogonal_direction(grad_l: &[f64], grad_e: &[f64]) -> (Vec<f64>, Option<Vec<f64>>) {
    let norm: f64 = grad_e.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm <= 1e-300 {
        return (grad_l.to_vec(), None);
    }
    let de: Vec<f64> = grad_e.iter().map(|v| v / norm).collect();
    let dot: f64 = grad_l.iter().zip(&de).map(|(l, e)| l * e).sum();
    let dir = grad_l.iter().zip(&de).map(|(l, e)| l - dot * e).collect();
    (dir, Some(de))
}
