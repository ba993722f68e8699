//! Rate-1/2 convolutional code (constraint length 7, generators 171/133
//! octal), soft-input Viterbi decoding and a fixed pseudo-random interleaver.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::stream;

pub const CONSTRAINT_LENGTH: usize = 7;
pub const TAIL_BITS: usize = CONSTRAINT_LENGTH - 1;
const STATES: usize = 1 << TAIL_BITS;

/// Octal 171 and 133. Bit 6 taps the current input, bit 0 the oldest.
pub const GENERATORS: [u32; 2] = [0o171, 0o133];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConvCode;

impl ConvCode {
    pub fn coded_len(&self, info_bits: usize) -> usize {
        2 * (info_bits + TAIL_BITS)
    }

    /// Largest message whose terminated codeword fits in `coded_bits`.
    pub fn info_len(&self, coded_bits: usize) -> Option<usize> {
        (coded_bits / 2).checked_sub(TAIL_BITS).filter(|&n| n > 0)
    }
}

fn outputs(reg: u32) -> [u8; 2] {
    GENERATORS.map(|g| ((reg & g).count_ones() & 1) as u8)
}

/// Encodes `bits` and appends six zero tail bits, returning
/// `2·(len + 6)` coded bits.
pub fn conv_encode(bits: &[u8]) -> Vec<u8> {
    let mut state = 0u32;
    let mut out = Vec::with_capacity(2 * (bits.len() + TAIL_BITS));
    for &b in bits.iter().chain([0u8; TAIL_BITS].iter()) {
        let reg = ((b as u32 & 1) << TAIL_BITS) | state;
        out.extend_from_slice(&outputs(reg));
        state = reg >> 1;
    }
    out
}

/// Soft-input Viterbi decoder for the terminated code. `llrs` follow the
/// `log P(0)/P(1)` convention; the decoder maximizes `Σ (1 − 2c)·llr` over
/// codewords `c`.
pub fn viterbi_decode(llrs: &[f64]) -> Result<Vec<u8>> {
    if llrs.len() % 2 != 0 || llrs.len() < 2 * (TAIL_BITS + 1) {
        return Err(Error::DimensionMismatch {
            context: "coded length",
            expected: 2 * (TAIL_BITS + 1),
            found: llrs.len(),
        });
    }
    let steps = llrs.len() / 2;
    // Branch outputs for every (predecessor state, input) pair.
    let branch: Vec<[u8; 2]> = (0..2 * STATES as u32)
        .map(|i| outputs(((i & 1) << TAIL_BITS) | (i >> 1)))
        .collect();
    let mut metric = [f64::NEG_INFINITY; STATES];
    metric[0] = 0.0;
    let mut decisions: Vec<u64> = Vec::with_capacity(steps);
    let mut next = [0.0f64; STATES];
    for t in 0..steps {
        let (l0, l1) = (llrs[2 * t], llrs[2 * t + 1]);
        let gain = |c: [u8; 2]| -> f64 {
            let a = if c[0] == 0 { l0 } else { -l0 };
            let b = if c[1] == 0 { l1 } else { -l1 };
            a + b
        };
        let mut dec = 0u64;
        for (ns, slot) in next.iter_mut().enumerate() {
            let input = (ns >> (TAIL_BITS - 1)) as u32;
            let base = (ns & (STATES / 2 - 1)) << 1;
            let (p0, p1) = (base, base | 1);
            let m0 = metric[p0] + gain(branch[(p0 << 1) | input as usize]);
            let m1 = metric[p1] + gain(branch[(p1 << 1) | input as usize]);
            if m1 > m0 {
                *slot = m1;
                dec |= 1 << ns;
            } else {
                *slot = m0;
            }
        }
        metric = next;
        decisions.push(dec);
    }
    let mut state = 0usize;
    let mut bits = vec![0u8; steps];
    for t in (0..steps).rev() {
        bits[t] = (state >> (TAIL_BITS - 1)) as u8;
        let x = ((decisions[t] >> state) & 1) as usize;
        state = ((state & (STATES / 2 - 1)) << 1) | x;
    }
    bits.truncate(steps - TAIL_BITS);
    Ok(bits)
}

/// Fixed pseudo-random permutation of a given length. The permutation
/// depends only on the length, so transmitter and receiver agree without
/// sharing state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interleaver {
    perm: Vec<usize>,
}

impl Interleaver {
    const SEED: u64 = 0x1D7E_4EA7;

    pub fn new(len: usize) -> Self {
        let mut perm: Vec<usize> = (0..len).collect();
        perm.shuffle(&mut stream(Self::SEED, len as u64));
        Self { perm }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// `out[i] = input[perm[i]]`.
    pub fn interleave<T: Copy>(&self, input: &[T]) -> Vec<T> {
        assert_eq!(input.len(), self.perm.len(), "interleaver length");
        self.perm.iter().map(|&p| input[p]).collect()
    }

    pub fn deinterleave<T: Copy + Default>(&self, input: &[T]) -> Vec<T> {
        assert_eq!(input.len(), self.perm.len(), "interleaver length");
        let mut out = vec![T::default(); input.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            out[p] = input[i];
        }
        out
    }
}
