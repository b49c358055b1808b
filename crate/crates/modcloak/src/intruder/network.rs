//! Small convolutional network over 2x128 I/Q blocks with hand-written
//! backprop.
//!
//! Architecture: input 2x128 -> conv(k1 filters, 1x3) -> ReLU ->
//! conv(k2 filters, 2x3) -> ReLU -> dense(h) -> ReLU -> dense(8).
//! All arithmetic is f64; training and inference are deterministic given
//! the seed and the data order.

use crate::error::{Error, Result};
use crate::seeds;

pub const IN_H: usize = 2;
pub const IN_W: usize = 128;
pub const C1_W: usize = IN_W - 2;
pub const C2_W: usize = C1_W - 2;
pub const N_CLASSES: usize = 8;

/// Layer sizes; the input and class count are fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct NetworkArchitecture {
    pub conv1_filters: usize,
    pub conv2_filters: usize,
    pub dense_units: usize,
}

impl Default for NetworkArchitecture {
    fn default() -> Self {
        Self {
            conv1_filters: 64,
            conv2_filters: 16,
            dense_units: 128,
        }
    }
}

impl NetworkArchitecture {
    pub fn param_count(&self) -> usize {
        let (k1, k2, h) = (self.conv1_filters, self.conv2_filters, self.dense_units);
        k1 * 3 + k1 + k2 * k1 * 2 * 3 + k2 + h * k2 * C2_W + h + N_CLASSES * h + N_CLASSES
    }
}

/// The network weights.
#[derive(Debug, Clone)]
pub struct ConvNet {
    pub arch: NetworkArchitecture,
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: Vec<f64>,
    w3: Vec<f64>,
    b3: Vec<f64>,
    w4: Vec<f64>,
    b4: Vec<f64>,
}

/// Gradient (or velocity) buffers matching [`ConvNet`]'s tensors.
#[derive(Debug, Clone)]
pub struct NetGrads {
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: Vec<f64>,
    w3: Vec<f64>,
    b3: Vec<f64>,
    w4: Vec<f64>,
    b4: Vec<f64>,
}

impl NetGrads {
    pub fn zeros(arch: &NetworkArchitecture) -> Self {
        let (k1, k2, h) = (arch.conv1_filters, arch.conv2_filters, arch.dense_units);
        Self {
            w1: vec![0.0; k1 * 3],
            b1: vec![0.0; k1],
            w2: vec![0.0; k2 * k1 * 2 * 3],
            b2: vec![0.0; k2],
            w3: vec![0.0; h * k2 * C2_W],
            b3: vec![0.0; h],
            w4: vec![0.0; N_CLASSES * h],
            b4: vec![0.0; N_CLASSES],
        }
    }

    pub fn clear(&mut self) {
        for t in self.tensors_mut() {
            t.fill(0.0);
        }
    }

    pub fn norm(&self) -> f64 {
        let mut s = 0.0;
        for t in [
            &self.w1, &self.b1, &self.w2, &self.b2, &self.w3, &self.b3, &self.w4, &self.b4,
        ] {
            s += t.iter().map(|v| v * v).sum::<f64>();
        }
        s.sqrt()
    }

    fn tensors_mut(&mut self) -> [&mut Vec<f64>; 8] {
        [
            &mut self.w1,
            &mut self.b1,
            &mut self.w2,
            &mut self.b2,
            &mut self.w3,
            &mut self.b3,
            &mut self.w4,
            &mut self.b4,
        ]
    }
}

struct Activations {
    a1: Vec<f64>,
    a2: Vec<f64>,
    a3: Vec<f64>,
    logits: Vec<f64>,
}

impl ConvNet {
    /// He-initialized network; biases start at zero.
    pub fn new(arch: NetworkArchitecture, seed: u64) -> Self {
        let (k1, k2, h) = (arch.conv1_filters, arch.conv2_filters, arch.dense_units);
        let mut rng = seeds::rng(seeds::derive(seed, &[seeds::tag::INIT]));
        let mut init = |n: usize, fan_in: usize| -> Vec<f64> {
            let std = (2.0 / fan_in as f64).sqrt();
            let mut v = Vec::with_capacity(n);
            while v.len() < n {
                let (a, b) = seeds::normal_pair(&mut rng);
                v.push(a * std);
                if v.len() < n {
                    v.push(b * std);
                }
            }
            v
        };
        Self {
            w1: init(k1 * 3, 3),
            b1: vec![0.0; k1],
            w2: init(k2 * k1 * 2 * 3, k1 * 2 * 3),
            b2: vec![0.0; k2],
            w3: init(h * k2 * C2_W, k2 * C2_W),
            b3: vec![0.0; h],
            w4: init(N_CLASSES * h, h),
            b4: vec![0.0; N_CLASSES],
            arch,
        }
    }

    pub fn param_count(&self) -> usize {
        self.arch.param_count()
    }

    fn forward_cached(&self, input: &[f64]) -> Activations {
        debug_assert_eq!(input.len(), IN_H * IN_W);
        let (k1, k2, h) = (
            self.arch.conv1_filters,
            self.arch.conv2_filters,
            self.arch.dense_units,
        );

        // conv1: same 1x3 filter applied to each of the two rows.
        let mut a1 = vec![0.0; k1 * IN_H * C1_W];
        for f in 0..k1 {
            let w = &self.w1[f * 3..f * 3 + 3];
            let b = self.b1[f];
            for r in 0..IN_H {
                let row = &input[r * IN_W..(r + 1) * IN_W];
                let out = &mut a1[(f * IN_H + r) * C1_W..(f * IN_H + r + 1) * C1_W];
                for x in 0..C1_W {
                    let z = b + w[0] * row[x] + w[1] * row[x + 1] + w[2] * row[x + 2];
                    out[x] = if z > 0.0 { z } else { 0.0 };
                }
            }
        }

        // conv2: 2x3 kernel over all conv1 channels, collapsing the height.
        let mut a2 = vec![0.0; k2 * C2_W];
        for f in 0..k2 {
            let out = &mut a2[f * C2_W..(f + 1) * C2_W];
            out.fill(self.b2[f]);
            for c in 0..k1 {
                for dy in 0..2 {
                    let w = &self.w2[((f * k1 + c) * 2 + dy) * 3..((f * k1 + c) * 2 + dy) * 3 + 3];
                    let row = &a1[(c * IN_H + dy) * C1_W..(c * IN_H + dy + 1) * C1_W];
                    for x in 0..C2_W {
                        out[x] += w[0] * row[x] + w[1] * row[x + 1] + w[2] * row[x + 2];
                    }
                }
            }
            for v in out.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
        }

        let mut a3 = vec![0.0; h];
        let flat = k2 * C2_W;
        for (u, out) in a3.iter_mut().enumerate() {
            let w = &self.w3[u * flat..(u + 1) * flat];
            let z = self.b3[u] + dot(w, &a2);
            *out = if z > 0.0 { z } else { 0.0 };
        }

        let mut logits = vec![0.0; N_CLASSES];
        for (j, out) in logits.iter_mut().enumerate() {
            *out = self.b4[j] + dot(&self.w4[j * h..(j + 1) * h], &a3);
        }

        Activations { a1, a2, a3, logits }
    }

    /// Logit scores for one input.
    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        self.forward_cached(input).logits
    }

    /// Cross-entropy loss at `label` and its gradient w.r.t. the input,
    /// by backpropagation through all layers.
    pub fn loss_and_input_gradient(&self, input: &[f64], label: usize) -> (f64, Vec<f64>) {
        let acts = self.forward_cached(input);
        let (loss, dlogits) = softmax_ce(&acts.logits, label);
        let mut din = vec![0.0; IN_H * IN_W];
        self.backward(input, &acts, &dlogits, Some(&mut din), None);
        (loss, din)
    }

    /// Accumulate parameter gradients for one example; returns its loss.
    pub fn accumulate_grads(&self, input: &[f64], label: usize, grads: &mut NetGrads) -> f64 {
        let acts = self.forward_cached(input);
        let (loss, dlogits) = softmax_ce(&acts.logits, label);
        self.backward(input, &acts, &dlogits, None, Some(grads));
        loss
    }

    fn backward(
        &self,
        input: &[f64],
        acts: &Activations,
        dlogits: &[f64],
        mut din: Option<&mut Vec<f64>>,
        mut grads: Option<&mut NetGrads>,
    ) {
        let (k1, k2, h) = (
            self.arch.conv1_filters,
            self.arch.conv2_filters,
            self.arch.dense_units,
        );
        let flat = k2 * C2_W;

        // dense2
        let mut da3 = vec![0.0; h];
        for j in 0..N_CLASSES {
            let g = dlogits[j];
            let w = &self.w4[j * h..(j + 1) * h];
            axpy(g, w, &mut da3);
            if let Some(gr) = grads.as_deref_mut() {
                axpy(g, &acts.a3, &mut gr.w4[j * h..(j + 1) * h]);
                gr.b4[j] += g;
            }
        }

        // dense1 (through its ReLU)
        let mut da2 = vec![0.0; flat];
        for u in 0..h {
            if acts.a3[u] <= 0.0 {
                continue;
            }
            let g = da3[u];
            let w = &self.w3[u * flat..(u + 1) * flat];
            axpy(g, w, &mut da2);
            if let Some(gr) = grads.as_deref_mut() {
                axpy(g, &acts.a2, &mut gr.w3[u * flat..(u + 1) * flat]);
                gr.b3[u] += g;
            }
        }

        // conv2 (through its ReLU)
        let mut da1 = vec![0.0; k1 * IN_H * C1_W];
        for f in 0..k2 {
            let mut dz = acts.a2[f * C2_W..(f + 1) * C2_W].to_vec();
            for (z, g) in dz.iter_mut().zip(&da2[f * C2_W..(f + 1) * C2_W]) {
                *z = if *z > 0.0 { *g } else { 0.0 };
            }
            if let Some(gr) = grads.as_deref_mut() {
                gr.b2[f] += dz.iter().sum::<f64>();
            }
            for c in 0..k1 {
                for dy in 0..2 {
                    let base = ((f * k1 + c) * 2 + dy) * 3;
                    let w = &self.w2[base..base + 3];
                    let row = &acts.a1[(c * IN_H + dy) * C1_W..(c * IN_H + dy + 1) * C1_W];
                    let drow = &mut da1[(c * IN_H + dy) * C1_W..(c * IN_H + dy + 1) * C1_W];
                    for d in 0..3 {
                        let wv = w[d];
                        for x in 0..C2_W {
                            drow[x + d] += dz[x] * wv;
                        }
                    }
                    if let Some(gr) = grads.as_deref_mut() {
                        let gw = &mut gr.w2[base..base + 3];
                        for (d, g) in gw.iter_mut().enumerate() {
                            *g += dot(&dz, &row[d..d + C2_W]);
                        }
                    }
                }
            }
        }

        // conv1 (through its ReLU)
        if din.is_none() && grads.is_none() {
            return;
        }
        for f in 0..k1 {
            let w = &self.w1[f * 3..f * 3 + 3];
            for r in 0..IN_H {
                let a = &acts.a1[(f * IN_H + r) * C1_W..(f * IN_H + r + 1) * C1_W];
                let mut dz = vec![0.0; C1_W];
                for x in 0..C1_W {
                    if a[x] > 0.0 {
                        dz[x] = da1[(f * IN_H + r) * C1_W + x];
                    }
                }
                if let Some(di) = din.as_deref_mut() {
                    let drow = &mut di[r * IN_W..(r + 1) * IN_W];
                    for d in 0..3 {
                        let wv = w[d];
                        for x in 0..C1_W {
                            drow[x + d] += dz[x] * wv;
                        }
                    }
                }
                if let Some(gr) = grads.as_deref_mut() {
                    let row = &input[r * IN_W..(r + 1) * IN_W];
                    for d in 0..3 {
                        gr.w1[f * 3 + d] += dot(&dz, &row[d..d + C1_W]);
                    }
                    gr.b1[f] += dz.iter().sum::<f64>();
                }
            }
        }
    }

    /// One momentum-SGD step from accumulated batch gradients.
    ///
    /// Gradients are averaged over `batch_size` and clipped to a global
    /// norm of `clip` before the velocity update.
    pub fn sgd_step(
        &mut self,
        grads: &mut NetGrads,
        velocity: &mut NetGrads,
        lr: f64,
        momentum: f64,
        batch_size: usize,
        clip: f64,
    ) {
        let inv = 1.0 / batch_size as f64;
        let gnorm = grads.norm() * inv;
        let scale = if gnorm > clip { inv * clip / gnorm } else { inv };
        let params: [&mut Vec<f64>; 8] = [
            &mut self.w1,
            &mut self.b1,
            &mut self.w2,
            &mut self.b2,
            &mut self.w3,
            &mut self.b3,
            &mut self.w4,
            &mut self.b4,
        ];
        let gs = grads.tensors_mut();
        let vs = velocity.tensors_mut();
        for ((p, g), v) in params.into_iter().zip(gs).zip(vs) {
            for i in 0..p.len() {
                v[i] = momentum * v[i] - lr * scale * g[i];
                p[i] += v[i];
            }
        }
    }

    /// All parameters as one flat vector (save order).
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for t in [
            &self.w1, &self.b1, &self.w2, &self.b2, &self.w3, &self.b3, &self.w4, &self.b4,
        ] {
            out.extend_from_slice(t);
        }
        out
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::Framing(format!(
                "parameter dump has {} values, architecture needs {}",
                flat.len(),
                self.param_count()
            )));
        }
        let mut pos = 0;
        for t in [
            &mut self.w1,
            &mut self.b1,
            &mut self.w2,
            &mut self.b2,
            &mut self.w3,
            &mut self.b3,
            &mut self.w4,
            &mut self.b4,
        ] {
            let len = t.len();
            t.copy_from_slice(&flat[pos..pos + len]);
            pos += len;
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Numerically stable softmax cross-entropy: loss and d(loss)/d(logits).
pub fn softmax_ce(logits: &[f64], label: usize) -> (f64, Vec<f64>) {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    let loss = sum.ln() + max - logits[label];
    let mut d: Vec<f64> = exps.iter().map(|e| e / sum).collect();
    d[label] -= 1.0;
    (loss, d)
}
