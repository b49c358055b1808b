//! Two-point simultaneous-perturbation gradient estimation for the
//! non-differentiable block error rate.

use crate::bits::BitSequence;
use crate::chancode::{self, CodeSpec};
use crate::modem::{self, ModulationScheme, PulseShape};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// SPSA estimate of the gradient of `eval` at `y`, in the stacked real
/// representation (all I components, then all Q components).
///
/// Each of the `k` probes draws a Rademacher direction `r` over the full
/// real representation and accumulates
/// `(eval(y + eta r) - eval(y - eta r)) / (2 eta) * r`.
pub fn spsa_gradient(
    y: &[Complex64],
    eval: &mut dyn FnMut(&[Complex64]) -> f64,
    eta: f64,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let n = y.len();
    let mut grad = vec![0.0f64; 2 * n];
    let mut plus = vec![Complex64::new(0.0, 0.0); n];
    let mut minus = vec![Complex64::new(0.0, 0.0); n];
    let mut r = vec![0.0f64; 2 * n];
    for _ in 0..k {
        for v in r.iter_mut() {
            *v = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        }
        for i in 0..n {
            let d = Complex64::new(eta * r[i], eta * r[n + i]);
            plus[i] = y[i] + d;
            minus[i] = y[i] - d;
        }
        let diff = (eval(&plus) - eval(&minus)) / (2.0 * eta);
        if diff != 0.0 {
            for i in 0..2 * n {
                grad[i] += diff * r[i];
            }
        }
    }
    let inv = 1.0 / k as f64;
    for g in &mut grad {
        *g *= inv;
    }
    grad
}

/// Error-rate evaluator over one group of blocks forming a single
/// codeword: demodulate the stream, truncate the pad bits, Viterbi-decode
/// and compare with the known message.
pub struct GroupBerEvaluator<'a> {
    pub scheme: ModulationScheme,
    pub shape: &'a PulseShape,
    pub code: &'a CodeSpec,
    pub message: &'a BitSequence,
    pub coded_len: usize,
    /// Per-sample noise variance of the receiver path, used by the
    /// demodulator's scale estimator.
    pub noise_var: f64,
}

impl GroupBerEvaluator<'_> {
    pub fn ber(&self, stream: &[Complex64]) -> f64 {
        let rx = modem::demodulate_stream(stream, self.scheme, self.shape, self.noise_var)
            .expect("group stream framing");
        let coded = rx.truncated(self.coded_len);
        let decoded = chancode::viterbi_decode(&coded, self.code).expect("group codeword framing");
        chancode::ber(self.message, &decoded).expect("group message length")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds;

    fn cosine(a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        dot / (na * nb)
    }

    #[test]
    fn constant_function_gives_zero_gradient() {
        let y =
            vec![Complex64::new(0.3, -0.2); 32];
        let mut rng = seeds::rng(1);
        let g = spsa_gradient(&y, &mut |_| 0.75, 0.01, 50, &mut rng);
        assert!(g.iter().all(|&v| v == 0.0));
    }

    /// Analytic-gradient oracle on a smooth surrogate: f(y) = ||y||^2 / m
    /// has gradient 2 y / m in the real representation.
    #[test]
    fn smooth_surrogate_cosine_similarity() {
        let n = 24usize;
        let m = 2.0 * n as f64;
        let mut rng = seeds::rng(2);
        let y: Vec<Complex64> = (0..n)
            .map(|_| {
                let (a, b) = seeds::normal_pair(&mut rng);
                Complex64::new(a, b)
            })
            .collect();
        let mut eval = |v: &[Complex64]| v.iter().map(|c| c.norm_sqr()).sum::<f64>() / m;
        let mut spsa_rng = seeds::rng(3);
        let g = spsa_gradient(&y, &mut eval, 0.01, 400, &mut spsa_rng);
        let analytic: Vec<f64> = (0..2 * n)
            .map(|i| {
                let v = if i < n { y[i].re } else { y[i - n].im };
                2.0 * v / m
            })
            .collect();
        let cos = cosine(&g, &analytic);
        assert!(cos >= 0.9, "cosine {cos}");
    }

    #[test]
    fn estimator_is_seeded() {
        let y = vec![Complex64::new(0.1, 0.4); 16];
        let mut eval = |v: &[Complex64]| v.iter().map(|c| c.re).sum::<f64>();
        let g1 = spsa_gradient(&y, &mut eval, 0.01, 32, &mut seeds::rng(9));
        let g2 = spsa_gradient(&y, &mut eval, 0.01, 32, &mut seeds::rng(9));
        let g3 = spsa_gradient(&y, &mut eval, 0.01, 32, &mut seeds::rng(10));
        assert_eq!(g1, g2);
        assert_ne!(g1, g3);
    }

    #[test]
    fn group_evaluator_reports_zero_on_clean_stream() {
        let shape = PulseShape::default_shape();
        let code = CodeSpec::rate_two_thirds();
        let scheme = ModulationScheme::Qpsk;
        let frame_blocks = 4usize;
        let cap = modem::frame_data_bit_capacity(frame_blocks, scheme, &shape);
        let msg_len = code.max_message_len(cap);
        let mut rng = seeds::rng(11);
        let message = BitSequence::random(msg_len, &mut rng);
        let coded = chancode::conv_encode(&message, &code).unwrap();
        let blocks = modem::modulate(&coded, scheme, &shape).unwrap();
        assert_eq!(blocks.len(), frame_blocks);
        let stream = modem::concat_blocks(&blocks);
        let eval = GroupBerEvaluator {
            scheme,
            shape: &shape,
            code: &code,
            message: &message,
            coded_len: coded.len(),
            noise_var: 0.0,
        };
        assert_eq!(eval.ber(&stream), 0.0);

        // Corrupting the stream hard enough must produce a positive BER.
        let mut bad = stream.clone();
        for c in bad.iter_mut().take(256) {
            *c = -*c;
        }
        assert!(eval.ber(&bad) > 0.0);
    }
}
