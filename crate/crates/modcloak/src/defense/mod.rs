//! Transmitter-side perturbation schemes.
//!
//! All schemes emit a perturbation `delta` with `||delta||_2 <= epsilon`
//! and re-normalize the perturbed block to unit average power. Gradient,
//! sign and projection arithmetic operate on the stacked real
//! representation (I components, then Q components); `sign` acts
//! elementwise there, with `sign(0) = 0`. Perturbations are computed on
//! the unnormalized block and the power normalization is applied once at
//! the end.

mod ber_aware;
mod spsa;

pub use ber_aware::{bdms, bodms, orthogonal_direction, BerAwareContext};
pub use spsa::{spsa_gradient, GroupBerEvaluator};

use crate::error::{Error, Result};
use crate::intruder::GradientModel;
use crate::seeds;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Scheme selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DefenseScheme {
    NoPerturb,
    Rni,
    Oracle,
    Pdms,
    BbDms,
    Bdms,
    Bodms,
}

impl DefenseScheme {
    pub const ALL: [DefenseScheme; 7] = [
        DefenseScheme::NoPerturb,
        DefenseScheme::Rni,
        DefenseScheme::Oracle,
        DefenseScheme::Pdms,
        DefenseScheme::BbDms,
        DefenseScheme::Bdms,
        DefenseScheme::Bodms,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DefenseScheme::NoPerturb => "NoPerturb",
            DefenseScheme::Rni => "RNI",
            DefenseScheme::Oracle => "Oracle",
            DefenseScheme::Pdms => "PDMS",
            DefenseScheme::BbDms => "BB-DMS",
            DefenseScheme::Bdms => "BDMS",
            DefenseScheme::Bodms => "BODMS",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|s| s.name().eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Config(format!("unknown defense scheme {name:?}")))
    }
}

/// SPSA estimator parameters for the BER-aware schemes.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SpsaParams {
    pub k: usize,
    pub eta: f64,
    /// Blocks whose error rate is evaluated jointly.
    pub group: usize,
}

impl Default for SpsaParams {
    fn default() -> Self {
        Self {
            k: 400,
            eta: 0.01,
            group: 100,
        }
    }
}

/// Full defense configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DefenseConfig {
    pub scheme: DefenseScheme,
    pub epsilon: f64,
    pub beta: f64,
    pub iterations: usize,
    pub lambda: f64,
    pub spsa: SpsaParams,
    pub seed: u64,
}

impl DefenseConfig {
    pub fn new(scheme: DefenseScheme) -> Self {
        Self {
            scheme,
            epsilon: 3.0,
            beta: 0.2,
            iterations: 20,
            lambda: 1e6,
            spsa: SpsaParams::default(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilon <= 0.0 || self.beta <= 0.0 {
            return Err(Error::Config("defense needs epsilon > 0 and beta > 0".into()));
        }
        if self.lambda < 0.0 {
            return Err(Error::Config("lambda must be nonnegative".into()));
        }
        if self.spsa.k == 0 || self.spsa.eta <= 0.0 || self.spsa.group == 0 {
            return Err(Error::Config("invalid SPSA parameters".into()));
        }
        Ok(())
    }
}

/// A defended block together with the raw perturbation that produced it.
#[derive(Debug, Clone)]
pub struct DefendedBlock {
    pub samples: Vec<Complex64>,
    pub delta: Vec<Complex64>,
}

pub(crate) fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn l2_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Euclidean projection onto the L2 ball of radius `epsilon` around
/// `center`.
pub fn project_l2_ball(v: &[Complex64], center: &[Complex64], epsilon: f64) -> Vec<Complex64> {
    let d = l2_distance(v, center);
    if d <= epsilon {
        return v.to_vec();
    }
    let scale = epsilon / d;
    v.iter()
        .zip(center)
        .map(|(x, c)| c + (x - c) * scale)
        .collect()
}

/// Sign-gradient PGD ascent on the model's cross-entropy at `label`,
/// projected to the epsilon ball around the starting point. Starts at the
/// clean point; deterministic.
pub fn pgd_perturb(
    x0: &[Complex64],
    label: usize,
    model: &dyn GradientModel,
    epsilon: f64,
    beta: f64,
    iterations: usize,
) -> Result<Vec<Complex64>> {
    let n = x0.len();
    let mut y = x0.to_vec();
    for _ in 0..iterations {
        let (_, g) = model.loss_and_input_gradient(&y, label)?;
        for i in 0..n {
            y[i] += Complex64::new(beta * sign(g[i]), beta * sign(g[n + i]));
        }
        y = project_l2_ball(&y, x0, epsilon);
    }
    Ok(y)
}

/// Power-normalizing defensive encoder: `alpha * (x + delta)` with
/// `alpha = sqrt(n) / ||x + delta||`, so the output meets the average
/// power constraint with equality.
pub fn apply_defensive_encoding(x: &[Complex64], delta: &[Complex64]) -> Result<Vec<Complex64>> {
    debug_assert_eq!(x.len(), delta.len());
    let v: Vec<Complex64> = x.iter().zip(delta).map(|(a, d)| a + d).collect();
    let norm_sq: f64 = v.iter().map(|c| c.norm_sqr()).sum();
    if norm_sq < 1e-24 {
        return Err(Error::DegenerateInput(
            "perturbed block is identically zero".into(),
        ));
    }
    let alpha = (x.len() as f64).sqrt() / norm_sq.sqrt();
    Ok(v.into_iter().map(|c| c * alpha).collect())
}

/// White-box perturbation of the clean transmit block, then power
/// normalization.
pub fn pdms(
    x: &[Complex64],
    label: usize,
    model: &dyn GradientModel,
    cfg: &DefenseConfig,
) -> Result<DefendedBlock> {
    cfg.validate()?;
    let y = pgd_perturb(x, label, model, cfg.epsilon, cfg.beta, cfg.iterations)?;
    let delta: Vec<Complex64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
    Ok(DefendedBlock {
        samples: apply_defensive_encoding(x, &delta)?,
        delta,
    })
}

/// PDMS computed against a separately trained surrogate model.
pub fn bb_dms(
    x: &[Complex64],
    label: usize,
    surrogate: &dyn GradientModel,
    cfg: &DefenseConfig,
) -> Result<DefendedBlock> {
    pdms(x, label, surrogate, cfg)
}

/// Idealized attack on the intruder's received block; no power
/// renormalization, the perturbed signal is used as received.
pub fn oracle_attack(
    y2: &[Complex64],
    label: usize,
    model: &dyn GradientModel,
    cfg: &DefenseConfig,
) -> Result<DefendedBlock> {
    cfg.validate()?;
    let y = pgd_perturb(y2, label, model, cfg.epsilon, cfg.beta, cfg.iterations)?;
    let delta: Vec<Complex64> = y.iter().zip(y2).map(|(a, b)| a - b).collect();
    Ok(DefendedBlock { samples: y, delta })
}

/// Uniform random perturbation on the epsilon sphere, then power
/// normalization.
pub fn rni(x: &[Complex64], epsilon: f64, seed: u64) -> Result<DefendedBlock> {
    if epsilon <= 0.0 {
        return Err(Error::Config("RNI needs epsilon > 0".into()));
    }
    let delta = rni_delta(x.len(), epsilon, seed);
    Ok(DefendedBlock {
        samples: apply_defensive_encoding(x, &delta)?,
        delta,
    })
}

/// A direction drawn uniformly on the epsilon sphere in the 2n-dimensional
/// real representation.
pub fn rni_delta(n: usize, epsilon: f64, seed: u64) -> Vec<Complex64> {
    let mut rng = seeds::rng(seed);
    let mut delta = Vec::with_capacity(n);
    for _ in 0..n {
        let (a, b) = seeds::normal_pair(&mut rng);
        delta.push(Complex64::new(a, b));
    }
    let norm: f64 = delta.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let scale = epsilon / norm.max(1e-300);
    delta.into_iter().map(|c| c * scale).collect()
}

/// Signal-to-perturbation ratio in dB: `10 log10(n / ||delta||^2)`.
pub fn spr_of(delta: &[Complex64]) -> Result<f64> {
    let e: f64 = delta.iter().map(|c| c.norm_sqr()).sum();
    if e <= 0.0 {
        return Err(Error::UndefinedValue(
            "SPR of a zero perturbation".into(),
        ));
    }
    Ok(10.0 * (delta.len() as f64 / e).log10())
}

/// The perturbation budget check used in tests and assertions.
pub fn delta_norm(delta: &[Complex64]) -> f64 {
    delta.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modem::BLOCK_LEN;
    use crate::seeds;

    /// A fixed linear surrogate: loss = <w, input>, so the input gradient
    /// is constant and one PGD step has a closed form.
    struct LinearModel {
        w: Vec<f64>,
    }

    impl GradientModel for LinearModel {
        fn loss_and_input_gradient(
            &self,
            samples: &[Complex64],
            _label: usize,
        ) -> Result<(f64, Vec<f64>)> {
            let input = crate::intruder::block_input(samples);
            let loss = input.iter().zip(&self.w).map(|(a, b)| a * b).sum();
            Ok((loss, self.w.clone()))
        }
    }

    fn random_samples(n: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = seeds::rng(seed);
        (0..n)
            .map(|_| {
                let (a, b) = seeds::normal_pair(&mut rng);
                Complex64::new(a, b)
            })
            .collect()
    }

    #[test]
    fn projection_contract() {
        let c = random_samples(16, 1);
        let inside: Vec<Complex64> = c.iter().map(|v| v + Complex64::new(0.01, 0.0)).collect();
        assert_eq!(project_l2_ball(&inside, &c, 1.0), inside);

        // v = center + 2eps * u projects to center + eps * u.
        let mut u = random_samples(16, 2);
        let un = delta_norm(&u);
        for x in &mut u {
            *x /= un;
        }
        let eps = 0.5;
        let v: Vec<Complex64> = c.iter().zip(&u).map(|(a, b)| a + b * (2.0 * eps)).collect();
        let p = project_l2_ball(&v, &c, eps);
        for ((pv, cv), uv) in p.iter().zip(&c).zip(&u) {
            assert!(((pv - cv) - uv * eps).norm() < 1e-12);
        }

        let mut rng = seeds::rng(3);
        for i in 0..1000 {
            let v = random_samples(8, 100 + i);
            let eps = 0.1 + 2.0 * (rand::Rng::gen::<f64>(&mut rng));
            let p = project_l2_ball(&v, &c[..8], eps);
            assert!(l2_distance(&p, &c[..8]) <= eps + 1e-9);
        }
    }

    #[test]
    fn pgd_zero_iterations_is_identity() {
        let x = random_samples(BLOCK_LEN, 4);
        let model = LinearModel {
            w: vec![1.0; 2 * BLOCK_LEN],
        };
        let y = pgd_perturb(&x, 0, &model, 3.0, 0.2, 0).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn pgd_single_step_matches_closed_form() {
        let x = random_samples(BLOCK_LEN, 5);
        let mut rng = seeds::rng(6);
        let w: Vec<f64> = (0..2 * BLOCK_LEN)
            .map(|_| seeds::normal_pair(&mut rng).0)
            .collect();
        let model = LinearModel { w: w.clone() };
        let beta = 0.2;
        let eps = 3.0;
        let y = pgd_perturb(&x, 0, &model, eps, beta, 1).unwrap();
        let stepped: Vec<Complex64> = (0..BLOCK_LEN)
            .map(|i| {
                x[i] + Complex64::new(beta * sign(w[i]), beta * sign(w[BLOCK_LEN + i]))
            })
            .collect();
        let expect = project_l2_ball(&stepped, &x, eps);
        for (a, b) in y.iter().zip(&expect) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn pgd_stays_in_ball() {
        let x = random_samples(BLOCK_LEN, 7);
        let model = LinearModel {
            w: (0..256).map(|i| (i as f64 * 0.7).sin()).collect(),
        };
        let eps = 1.5;
        let y = pgd_perturb(&x, 0, &model, eps, 0.2, 20).unwrap();
        assert!(l2_distance(&y, &x) <= eps + 1e-9);
    }

    #[test]
    fn encoding_identity_and_power() {
        // delta = 0 on an already unit-power block leaves it unchanged.
        let mut x = random_samples(BLOCK_LEN, 8);
        let p: f64 = x.iter().map(|c| c.norm_sqr()).sum::<f64>() / BLOCK_LEN as f64;
        for c in &mut x {
            *c /= p.sqrt();
        }
        let zero = vec![Complex64::new(0.0, 0.0); BLOCK_LEN];
        let out = apply_defensive_encoding(&x, &zero).unwrap();
        for (a, b) in x.iter().zip(&out) {
            assert!((a - b).norm() < 1e-12);
        }

        for i in 0..50 {
            let x = random_samples(BLOCK_LEN, 200 + i);
            let d = rni_delta(BLOCK_LEN, 3.0, 300 + i);
            let out = apply_defensive_encoding(&x, &d).unwrap();
            let power: f64 = out.iter().map(|c| c.norm_sqr()).sum::<f64>() / BLOCK_LEN as f64;
            assert!((power - 1.0).abs() < 1e-9);
        }

        let zeros = vec![Complex64::new(0.0, 0.0); 4];
        assert!(apply_defensive_encoding(&zeros, &zeros).is_err());
    }

    #[test]
    fn epsilon_three_is_seven_percent_energy() {
        // eps^2 / n = 9/128, about 7% of the block energy.
        let frac: f64 = 9.0 / 128.0;
        assert!((frac - 0.0703).abs() < 1e-3);
    }

    #[test]
    fn rni_is_on_the_sphere_and_seeded() {
        let d1 = rni_delta(BLOCK_LEN, 3.0, 1);
        let d2 = rni_delta(BLOCK_LEN, 3.0, 1);
        let d3 = rni_delta(BLOCK_LEN, 3.0, 2);
        assert!((delta_norm(&d1) - 3.0).abs() < 1e-12);
        assert_eq!(d1, d2);
        assert_ne!(d1, d3);
    }

    #[test]
    fn spr_values() {
        let mut d = vec![Complex64::new(0.0, 0.0); BLOCK_LEN];
        d[0] = Complex64::new(3.0, 0.0);
        let spr = spr_of(&d).unwrap();
        assert!((spr - 10.0 * (128.0f64 / 9.0).log10()).abs() < 1e-12);
        assert!((spr - 11.53).abs() < 0.01);

        d[0] = Complex64::new(128.0f64.sqrt(), 0.0);
        assert!(spr_of(&d).unwrap().abs() < 1e-9);

        d[0] = Complex64::new(1.0, 0.0);
        assert!((spr_of(&d).unwrap() - 21.07).abs() < 0.01);

        let zero = vec![Complex64::new(0.0, 0.0); BLOCK_LEN];
        assert!(matches!(spr_of(&zero), Err(Error::UndefinedValue(_))));
    }

    #[test]
    fn defended_blocks_satisfy_power_and_budget() {
        let model = LinearModel {
            w: (0..256).map(|i| ((i * 37 % 17) as f64 - 8.0)).collect(),
        };
        let cfg = DefenseConfig::new(DefenseScheme::Pdms);
        for i in 0..20 {
            let x = random_samples(BLOCK_LEN, 400 + i);
            let out = pdms(&x, 3, &model, &cfg).unwrap();
            assert!(delta_norm(&out.delta) <= cfg.epsilon + 1e-9);
            let power: f64 =
                out.samples.iter().map(|c| c.norm_sqr()).sum::<f64>() / BLOCK_LEN as f64;
            assert!((power - 1.0).abs() < 1e-9);
        }
    }
}
