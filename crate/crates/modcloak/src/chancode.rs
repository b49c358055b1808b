//! Forward error correction: convolutional encoding and hard-decision
//! Viterbi decoding.
//!
//! The mother code is the industry-standard constraint-length-7 rate-1/2
//! code with generator polynomials (171, 133) octal. Rate 2/3 is obtained by
//! puncturing with the pattern `[1 1; 1 0]` (both mother bits kept at even
//! input positions, only the first at odd positions). Codewords are
//! zero-terminated: K-1 zero bits are appended so the trellis ends in
//! state 0.
//!
//! Framing convention: a codeword of a given message length has the exact
//! bit count returned by [`CodeSpec::coded_len`]; conversely
//! [`CodeSpec::message_len_for`] recovers the message length from a received
//! word and rejects lengths that no message produces.

use crate::bits::BitSequence;
use crate::error::{Error, Result};

/// Code rate selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodeRate {
    Half,
    TwoThirds,
}

impl CodeRate {
    pub fn numerator(self) -> usize {
        match self {
            CodeRate::Half => 1,
            CodeRate::TwoThirds => 2,
        }
    }

    pub fn denominator(self) -> usize {
        match self {
            CodeRate::Half => 2,
            CodeRate::TwoThirds => 3,
        }
    }

    pub fn as_f64(self) -> f64 {
        self.numerator() as f64 / self.denominator() as f64
    }

    pub fn label(self) -> &'static str {
        match self {
            CodeRate::Half => "1/2",
            CodeRate::TwoThirds => "2/3",
        }
    }

    pub fn from_label(s: &str) -> Result<Self> {
        match s {
            "1/2" => Ok(CodeRate::Half),
            "2/3" => Ok(CodeRate::TwoThirds),
            other => Err(Error::Config(format!("unknown code rate {other:?}"))),
        }
    }
}

/// Convolutional code description: mother generators plus puncturing.
#[derive(Debug, Clone)]
pub struct CodeSpec {
    rate: CodeRate,
    /// Generator polynomials as binary masks over the 7-bit register,
    /// newest input at the high bit.
    generators: [u64; 2],
    constraint_len: usize,
    /// Puncture pattern columns indexed by input position mod period;
    /// `[keep_g0, keep_g1]`.
    puncture: Vec<[bool; 2]>,
}

impl CodeSpec {
    /// The rate-1/2 mother code, (171, 133) octal, K = 7.
    pub fn rate_half() -> Self {
        Self {
            rate: CodeRate::Half,
            generators: [0o171, 0o133],
            constraint_len: 7,
            puncture: vec![[true, true]],
        }
    }

    /// Rate 2/3 by puncturing the mother code with `[1 1; 1 0]`.
    pub fn rate_two_thirds() -> Self {
        Self {
            rate: CodeRate::TwoThirds,
            generators: [0o171, 0o133],
            constraint_len: 7,
            puncture: vec![[true, true], [true, false]],
        }
    }

    pub fn for_rate(rate: CodeRate) -> Self {
        match rate {
            CodeRate::Half => Self::rate_half(),
            CodeRate::TwoThirds => Self::rate_two_thirds(),
        }
    }

    pub fn rate(&self) -> CodeRate {
        self.rate
    }

    pub fn constraint_len(&self) -> usize {
        self.constraint_len
    }

    fn memory(&self) -> usize {
        self.constraint_len - 1
    }

    /// Checks the declared rate against the puncture pattern.
    pub fn validate(&self) -> Result<()> {
        if self.constraint_len < 3 {
            return Err(Error::Config("constraint length must be >= 3".into()));
        }
        if self.puncture.is_empty() {
            return Err(Error::Config("empty puncture pattern".into()));
        }
        let period = self.puncture.len();
        let kept: usize = self
            .puncture
            .iter()
            .map(|c| c[0] as usize + c[1] as usize)
            .sum();
        if kept == 0 {
            return Err(Error::Config("puncture pattern keeps no bits".into()));
        }
        // Declared rate = inputs per period / kept bits per period.
        if period * self.rate.denominator() != kept * self.rate.numerator() {
            return Err(Error::Config(format!(
                "puncture pattern yields rate {period}/{kept}, declared {}",
                self.rate.label()
            )));
        }
        Ok(())
    }

    /// Codeword length for a message of `msg_len` bits, termination included.
    pub fn coded_len(&self, msg_len: usize) -> usize {
        let inputs = msg_len + self.memory();
        let period = self.puncture.len();
        (0..inputs)
            .map(|i| {
                let col = self.puncture[i % period];
                col[0] as usize + col[1] as usize
            })
            .sum()
    }

    /// Message length whose codeword is exactly `coded_len` bits.
    pub fn message_len_for(&self, coded_len: usize) -> Result<usize> {
        // coded_len grows monotonically with msg_len by at most 2 per bit.
        let mut m = (coded_len * self.rate.numerator()) / self.rate.denominator();
        m = m.saturating_sub(self.memory() + 2);
        loop {
            let c = self.coded_len(m);
            if c == coded_len {
                return Ok(m);
            }
            if c > coded_len || m > coded_len {
                return Err(Error::Framing(format!(
                    "no message length matches a {coded_len}-bit codeword at rate {}",
                    self.rate.label()
                )));
            }
            m += 1;
        }
    }

    /// Largest message length whose codeword fits in `capacity` bits.
    pub fn max_message_len(&self, capacity: usize) -> usize {
        let mut m = (capacity * self.rate.numerator()) / self.rate.denominator();
        while m > 0 && self.coded_len(m) > capacity {
            m -= 1;
        }
        while self.coded_len(m + 1) <= capacity {
            m += 1;
        }
        m
    }

    fn step(&self, state: u64, input: u64) -> (u64, [u8; 2]) {
        let reg = (input << self.memory()) | state;
        let o0 = ((reg & self.generators[0]).count_ones() & 1) as u8;
        let o1 = ((reg & self.generators[1]).count_ones() & 1) as u8;
        (reg >> 1, [o0, o1])
    }
}

/// Encode a message, appending K-1 zero tail bits and puncturing.
pub fn conv_encode(w: &BitSequence, spec: &CodeSpec) -> Result<BitSequence> {
    if w.is_empty() {
        return Err(Error::Usage("cannot encode an empty message".into()));
    }
    spec.validate()?;
    let period = spec.puncture.len();
    let mut state = 0u64;
    let mut out = BitSequence::zeros(0);
    for i in 0..w.len() + spec.memory() {
        let bit = if i < w.len() { w[i] as u64 } else { 0 };
        let (next, pair) = spec.step(state, bit);
        state = next;
        let col = spec.puncture[i % period];
        if col[0] {
            out.push(pair[0]);
        }
        if col[1] {
            out.push(pair[1]);
        }
    }
    Ok(out)
}

/// Hard-decision Viterbi decoding over the punctured code.
///
/// Punctured (erased) positions contribute zero branch metric. Always
/// returns a full-length message, the minimum-Hamming-distance one for the
/// zero-terminated trellis.
pub fn viterbi_decode(r: &BitSequence, spec: &CodeSpec) -> Result<BitSequence> {
    spec.validate()?;
    let msg_len = spec.message_len_for(r.len())?;
    let steps = msg_len + spec.memory();
    let period = spec.puncture.len();

    // Depuncture into per-step mother-bit observations; None = erased.
    let mut obs: Vec<[Option<u8>; 2]> = Vec::with_capacity(steps);
    let mut pos = 0usize;
    for i in 0..steps {
        let col = spec.puncture[i % period];
        let mut pair = [None, None];
        for (j, keep) in col.iter().enumerate() {
            if *keep {
                pair[j] = Some(r[pos]);
                pos += 1;
            }
        }
        obs.push(pair);
    }
    debug_assert_eq!(pos, r.len());

    let mem = spec.memory();
    let n_states = 1usize << mem;
    const INF: u32 = u32::MAX / 2;

    // Transition tables: for each (state, input) the successor and outputs.
    let mut next_state = vec![[0usize; 2]; n_states];
    let mut outputs = vec![[[0u8; 2]; 2]; n_states];
    for s in 0..n_states {
        for b in 0..2u64 {
            let (ns, out) = spec.step(s as u64, b);
            next_state[s][b as usize] = ns as usize;
            outputs[s][b as usize] = out;
        }
    }

    let mut metric = vec![INF; n_states];
    metric[0] = 0;
    let mut scratch = vec![INF; n_states];
    // Survivor choice per step: bit s of the mask is the LSB of the chosen
    // predecessor of state s.
    let mut decisions: Vec<u64> = Vec::with_capacity(steps);

    for pair in &obs {
        scratch.fill(INF);
        let mut mask = 0u64;
        for s in 0..n_states {
            let m = metric[s];
            if m >= INF {
                continue;
            }
            for b in 0..2 {
                let out = outputs[s][b];
                let mut cost = m;
                if let Some(r0) = pair[0] {
                    cost += (r0 != out[0]) as u32;
                }
                if let Some(r1) = pair[1] {
                    cost += (r1 != out[1]) as u32;
                }
                let ns = next_state[s][b];
                // Tie-break toward the predecessor with even LSB for
                // deterministic output.
                if cost < scratch[ns] {
                    scratch[ns] = cost;
                    if s & 1 == 1 {
                        mask |= 1 << ns;
                    } else {
                        mask &= !(1 << ns);
                    }
                }
            }
        }
        decisions.push(mask);
        std::mem::swap(&mut metric, &mut scratch);
    }

    // Zero-terminated: trace back from state 0.
    let mut state = 0usize;
    let mut rev = Vec::with_capacity(steps);
    for t in (0..steps).rev() {
        let input = (state >> (mem - 1)) & 1;
        rev.push(input as u8);
        let lsb = ((decisions[t] >> state) & 1) as usize;
        state = ((state & ((1 << (mem - 1)) - 1)) << 1) | lsb;
    }
    rev.reverse();
    rev.truncate(msg_len);
    BitSequence::from_bits(rev)
}

/// Bit error rate between a message and its decoded estimate.
pub fn ber(w: &BitSequence, w_hat: &BitSequence) -> Result<f64> {
    if w.len() != w_hat.len() {
        return Err(Error::Usage(format!(
            "ber of unequal lengths {} vs {}",
            w.len(),
            w_hat.len()
        )));
    }
    if w.is_empty() {
        return Err(Error::Usage("ber of empty sequences".into()));
    }
    Ok(w.hamming(w_hat).unwrap() as f64 / w.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds;

    /// Independent shift-register oracle, written before the main encoder.
    /// Keeps an explicit register vector and reads taps from octal digits.
    mod oracle {
        pub struct ShiftRegEncoder {
            taps: Vec<Vec<usize>>,
            register: Vec<u8>,
        }

        impl ShiftRegEncoder {
            pub fn new(constraint_len: usize, octal_gens: &[&str]) -> Self {
                let taps = octal_gens
                    .iter()
                    .map(|g| {
                        // Octal digits, most significant first; bit i of the
                        // binary expansion taps register position i counted
                        // from the newest bit.
                        let mut bits = Vec::new();
                        for ch in g.chars() {
                            let d = ch.to_digit(8).unwrap();
                            for k in (0..3).rev() {
                                bits.push((d >> k) & 1);
                            }
                        }
                        while bits.len() > constraint_len {
                            assert_eq!(bits[0], 0);
                            bits.remove(0);
                        }
                        while bits.len() < constraint_len {
                            bits.insert(0, 0);
                        }
                        bits.iter()
                            .enumerate()
                            .filter(|(_, &b)| b == 1)
                            .map(|(i, _)| i)
                            .collect()
                    })
                    .collect();
                Self {
                    taps,
                    register: vec![0; constraint_len],
                }
            }

            pub fn push(&mut self, bit: u8) -> Vec<u8> {
                self.register.insert(0, bit);
                self.register.pop();
                self.taps
                    .iter()
                    .map(|t| t.iter().map(|&i| self.register[i]).sum::<u8>() & 1)
                    .collect()
            }

            pub fn encode_terminated(&mut self, msg: &[u8], tail: usize) -> Vec<u8> {
                let mut out = Vec::new();
                for i in 0..msg.len() + tail {
                    let b = if i < msg.len() { msg[i] } else { 0 };
                    out.extend(self.push(b));
                }
                out
            }
        }

        /// Keep bits of the rate-1/2 stream according to `[1 1; 1 0]`.
        pub fn puncture_two_thirds(mother: &[u8]) -> Vec<u8> {
            let mut out = Vec::new();
            for (i, pair) in mother.chunks(2).enumerate() {
                out.push(pair[0]);
                if i % 2 == 0 {
                    out.push(pair[1]);
                }
            }
            out
        }
    }

    fn oracle_encode(msg: &[u8], rate: CodeRate) -> Vec<u8> {
        let mut enc = oracle::ShiftRegEncoder::new(7, &["171", "133"]);
        let mother = enc.encode_terminated(msg, 6);
        match rate {
            CodeRate::Half => mother,
            CodeRate::TwoThirds => oracle::puncture_two_thirds(&mother),
        }
    }

    #[test]
    fn all_zero_message_encodes_to_zeros() {
        let spec = CodeSpec::rate_half();
        let w = BitSequence::zeros(8);
        let c = conv_encode(&w, &spec).unwrap();
        assert_eq!(c.len(), 28);
        assert!(c.as_slice().iter().all(|&b| b == 0));
    }

    #[test]
    fn encoder_matches_shift_register_oracle() {
        let msg = [1u8, 0, 1, 1, 0, 0, 0, 0];
        let w = BitSequence::from_bits(msg.to_vec()).unwrap();
        for spec in [CodeSpec::rate_half(), CodeSpec::rate_two_thirds()] {
            let c = conv_encode(&w, &spec).unwrap();
            assert_eq!(c.as_slice(), oracle_encode(&msg, spec.rate()));
        }
    }

    #[test]
    fn oracle_equivalence_short_messages() {
        for len in 1..=8usize {
            for v in 0..(1u32 << len) {
                let msg: Vec<u8> = (0..len).map(|i| ((v >> i) & 1) as u8).collect();
                let w = BitSequence::from_bits(msg.clone()).unwrap();
                for spec in [CodeSpec::rate_half(), CodeSpec::rate_two_thirds()] {
                    let c = conv_encode(&w, &spec).unwrap();
                    assert_eq!(c.as_slice(), oracle_encode(&msg, spec.rate()));
                }
            }
        }
    }

    #[test]
    fn length_arithmetic() {
        // 100 message bits at rate 2/3 occupy 150 coded bits before the
        // 6-input termination (9 more punctured bits).
        let spec = CodeSpec::rate_two_thirds();
        assert_eq!(spec.coded_len(100), 150 + 9);
        assert_eq!(CodeSpec::rate_half().coded_len(100), 2 * 106);
        assert_eq!(spec.message_len_for(spec.coded_len(100)).unwrap(), 100);
        assert!(spec.message_len_for(7).is_err());
    }

    #[test]
    fn max_message_len_is_tight() {
        for spec in [CodeSpec::rate_half(), CodeSpec::rate_two_thirds()] {
            for cap in [50usize, 96, 1590, 9540] {
                let m = spec.max_message_len(cap);
                assert!(spec.coded_len(m) <= cap);
                assert!(spec.coded_len(m + 1) > cap);
            }
        }
    }

    #[test]
    fn noiseless_round_trip() {
        let mut rng = seeds::rng(11);
        for spec in [CodeSpec::rate_half(), CodeSpec::rate_two_thirds()] {
            for len in [1usize, 5, 32, 100, 501] {
                let w = BitSequence::random(len, &mut rng);
                let c = conv_encode(&w, &spec).unwrap();
                let d = viterbi_decode(&c, &spec).unwrap();
                assert_eq!(d, w, "len {len} rate {}", spec.rate().label());
                assert_eq!(ber(&w, &d).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn corrects_single_bit_errors() {
        let mut rng = seeds::rng(12);
        let spec = CodeSpec::rate_half();
        let w = BitSequence::random(32, &mut rng);
        let c = conv_encode(&w, &spec).unwrap();
        for flip in 0..c.len() {
            let mut bits = c.as_slice().to_vec();
            bits[flip] ^= 1;
            let r = BitSequence::from_bits(bits).unwrap();
            let d = viterbi_decode(&r, &spec).unwrap();
            assert_eq!(d, w, "flip at {flip}");
        }
    }

    #[test]
    fn heavy_burst_still_returns_full_length() {
        let mut rng = seeds::rng(13);
        let spec = CodeSpec::rate_two_thirds();
        let w = BitSequence::random(64, &mut rng);
        let mut bits = conv_encode(&w, &spec).unwrap().as_slice().to_vec();
        for b in bits.iter_mut().skip(10).take(40) {
            *b ^= 1;
        }
        let d = viterbi_decode(&BitSequence::from_bits(bits).unwrap(), &spec).unwrap();
        assert_eq!(d.len(), w.len());
        assert!(ber(&w, &d).unwrap() > 0.0);
    }

    #[test]
    fn encoding_is_linear_over_gf2() {
        let mut rng = seeds::rng(14);
        for spec in [CodeSpec::rate_half(), CodeSpec::rate_two_thirds()] {
            for _ in 0..20 {
                let a = BitSequence::random(40, &mut rng);
                let b = BitSequence::random(40, &mut rng);
                let ca = conv_encode(&a, &spec).unwrap();
                let cb = conv_encode(&b, &spec).unwrap();
                let cab = conv_encode(&a.xor(&b).unwrap(), &spec).unwrap();
                assert_eq!(cab, ca.xor(&cb).unwrap());
            }
        }
    }

    #[test]
    fn viterbi_is_ml_on_small_instances() {
        // Enumerate all length-6 messages and check the decoder's output is
        // at minimum Hamming distance from arbitrary received words.
        let mut rng = seeds::rng(15);
        for spec in [CodeSpec::rate_half(), CodeSpec::rate_two_thirds()] {
            let len = 6usize;
            let codebook: Vec<(BitSequence, BitSequence)> = (0..(1u32 << len))
                .map(|v| {
                    let msg: Vec<u8> = (0..len).map(|i| ((v >> i) & 1) as u8).collect();
                    let w = BitSequence::from_bits(msg).unwrap();
                    let c = conv_encode(&w, &spec).unwrap();
                    (w, c)
                })
                .collect();
            let coded_len = spec.coded_len(len);
            for _ in 0..25 {
                let r = BitSequence::random(coded_len, &mut rng);
                let d = viterbi_decode(&r, &spec).unwrap();
                let d_code = conv_encode(&d, &spec).unwrap();
                let d_dist = d_code.hamming(&r).unwrap();
                let best = codebook
                    .iter()
                    .map(|(_, c)| c.hamming(&r).unwrap())
                    .min()
                    .unwrap();
                assert_eq!(d_dist, best);
            }
        }
    }

    #[test]
    fn ber_basics() {
        let a = BitSequence::from_bits(vec![1, 0, 1, 0, 1, 0, 1, 0, 1, 0]).unwrap();
        assert_eq!(ber(&a, &a).unwrap(), 0.0);
        let comp: BitSequence = a.as_slice().iter().map(|b| b ^ 1).collect();
        assert_eq!(ber(&a, &comp).unwrap(), 1.0);
        let mut half = a.as_slice().to_vec();
        for b in half.iter_mut().take(5) {
            *b ^= 1;
        }
        assert_eq!(
            ber(&a, &BitSequence::from_bits(half).unwrap()).unwrap(),
            0.5
        );
        assert!(ber(&a, &BitSequence::zeros(9)).is_err());
    }

    #[test]
    fn invalid_puncturing_is_rejected() {
        let mut spec = CodeSpec::rate_two_thirds();
        spec.puncture = vec![[true, true]];
        assert!(spec.validate().is_err());
        assert!(conv_encode(&BitSequence::zeros(4), &spec).is_err());
    }
}
