//! Pseudo-noise spreading codes and frequency-hop sequences.
//!
//! Both transmit chains are driven from here: the DSSS radar spreads its
//! QPSK carrier with a PN code, and the DS-UWB radar multiplies the polarity
//! (or position) of each monocycle by one chip of a PN code.
//!
//! Polynomials are written as exponent lists, highest first:
//! `[3, 1, 0]` is x³ + x + 1. A degree-n polynomial p(x) = xⁿ + Σ cᵢxⁱ
//! drives the recurrence a[k+n] = Σ cᵢ·a[k+i] (mod 2); when p is primitive
//! the output has period 2ⁿ − 1.
//!
//! Bits map to chips as 0 → +1 and 1 → −1, everywhere.

use serde::{Deserialize, Serialize};

use crate::error::CodeError;

pub const MIN_DEGREE: u32 = 2;
pub const MAX_DEGREE: u32 = 24;

/// Known primitive polynomials, one per degree 2..=24.
const PRIMITIVE: &[&[u32]] = &[
    &[2, 1, 0],
    &[3, 1, 0],
    &[4, 1, 0],
    &[5, 2, 0],
    &[6, 1, 0],
    &[7, 1, 0],
    &[8, 4, 3, 2, 0],
    &[9, 4, 0],
    &[10, 3, 0],
    &[11, 2, 0],
    &[12, 6, 4, 1, 0],
    &[13, 4, 3, 1, 0],
    &[14, 10, 6, 1, 0],
    &[15, 1, 0],
    &[16, 12, 3, 1, 0],
    &[17, 3, 0],
    &[18, 7, 0],
    &[19, 5, 2, 1, 0],
    &[20, 3, 0],
    &[21, 2, 0],
    &[22, 1, 0],
    &[23, 5, 0],
    &[24, 7, 2, 1, 0],
];

/// Additional primitive polynomials used by the Gold preferred pairs.
const PRIMITIVE_EXTRA: &[&[u32]] = &[
    &[5, 4, 3, 2, 0],
    &[6, 5, 2, 1, 0],
    &[7, 3, 0],
    &[7, 3, 2, 1, 0],
    &[9, 6, 4, 3, 0],
    &[10, 8, 3, 2, 0],
    &[11, 8, 5, 2, 0],
];

/// Preferred pairs for Gold families.
const PREFERRED_PAIRS: &[(&[u32], &[u32])] = &[
    (&[5, 2, 0], &[5, 4, 3, 2, 0]),
    (&[6, 1, 0], &[6, 5, 2, 1, 0]),
    (&[7, 3, 0], &[7, 3, 2, 1, 0]),
    (&[9, 4, 0], &[9, 6, 4, 3, 0]),
    (&[10, 3, 0], &[10, 8, 3, 2, 0]),
    (&[11, 2, 0], &[11, 8, 5, 2, 0]),
];

/// Feedback polynomial as a descending exponent list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct Taps(Vec<u32>);

impl Taps {
    pub fn new(exponents: &[u32]) -> Result<Self, CodeError> {
        let mut exps = exponents.to_vec();
        exps.sort_unstable_by(|a, b| b.cmp(a));
        exps.dedup();
        if exps.len() < 2 || *exps.last().unwrap() != 0 {
            return Err(CodeError::MalformedTaps);
        }
        let degree = exps[0];
        if !(MIN_DEGREE..=MAX_DEGREE).contains(&degree) {
            return Err(CodeError::DegreeOutOfRange(degree));
        }
        Ok(Taps(exps))
    }

    /// The table polynomial for `degree`.
    pub fn primitive(degree: u32) -> Result<Self, CodeError> {
        if !(MIN_DEGREE..=MAX_DEGREE).contains(&degree) {
            return Err(CodeError::DegreeOutOfRange(degree));
        }
        Ok(Taps(PRIMITIVE[(degree - MIN_DEGREE) as usize].to_vec()))
    }

    pub fn degree(&self) -> u32 {
        self.0[0]
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    /// Whether the polynomial appears in the built-in primitive table.
    pub fn is_known_primitive(&self) -> bool {
        PRIMITIVE
            .iter()
            .chain(PRIMITIVE_EXTRA)
            .any(|p| *p == self.0.as_slice())
    }

    /// Feedback mask over register bits 0..n-1 (x^n itself excluded).
    fn feedback_mask(&self) -> u32 {
        self.0[1..].iter().fold(0, |m, &e| m | (1 << e))
    }
}

impl TryFrom<Vec<u32>> for Taps {
    type Error = CodeError;

    fn try_from(v: Vec<u32>) -> Result<Self, Self::Error> {
        Taps::new(&v)
    }
}

impl From<Taps> for Vec<u32> {
    fn from(t: Taps) -> Self {
        t.0
    }
}

/// Preferred polynomial pair for a Gold family of the given degree.
pub fn preferred_pair(degree: u32) -> Option<(Taps, Taps)> {
    PREFERRED_PAIRS
        .iter()
        .find(|(a, _)| a[0] == degree)
        .map(|(a, b)| (Taps(a.to_vec()), Taps(b.to_vec())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SequenceKind {
    MSequence,
    Gold,
    Manual,
}

/// How a sequence was produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generator {
    pub taps: Vec<Taps>,
    pub seeds: Vec<u32>,
    /// Circular shift applied to the second register (Gold only).
    pub shift: usize,
    /// False when any tap set is outside the built-in primitive table; the
    /// m-sequence properties are then not guaranteed.
    pub known_primitive: bool,
}

/// One full period of a bipolar chip sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PnSequence {
    chips: Vec<i8>,
    kind: SequenceKind,
    generator: Option<Generator>,
}

impl PnSequence {
    /// Wrap a user-supplied chip list.
    pub fn from_chips(chips: Vec<i8>) -> Result<Self, CodeError> {
        if chips.is_empty() {
            return Err(CodeError::EmptySequence);
        }
        if let Some(&bad) = chips.iter().find(|&&c| c != 1 && c != -1) {
            return Err(CodeError::NonBipolarChip(bad));
        }
        Ok(Self {
            chips,
            kind: SequenceKind::Manual,
            generator: None,
        })
    }

    pub fn chips(&self) -> &[i8] {
        &self.chips
    }

    pub fn len(&self) -> usize {
        self.chips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chips.is_empty()
    }

    pub fn kind(&self) -> SequenceKind {
        self.kind
    }

    pub fn generator(&self) -> Option<&Generator> {
        self.generator.as_ref()
    }

    /// Chip at `index`, wrapping around the period.
    pub fn chip(&self, index: usize) -> i8 {
        self.chips[index % self.chips.len()]
    }

    /// Chips as bits (+1 → 0, −1 → 1).
    pub fn bits(&self) -> impl Iterator<Item = u8> + '_ {
        self.chips.iter().map(|&c| u8::from(c < 0))
    }

    /// Periodic correlation Σ self[i]·other[(i + lag) mod N].
    ///
    /// # Panics
    /// If the two sequences have different lengths.
    pub fn periodic_correlation(&self, other: &PnSequence, lag: usize) -> i64 {
        assert_eq!(
            self.len(),
            other.len(),
            "periodic correlation needs equal periods"
        );
        let n = self.len();
        self.chips
            .iter()
            .enumerate()
            .map(|(i, &a)| i64::from(a) * i64::from(other.chips[(i + lag) % n]))
            .sum()
    }

    pub fn autocorrelation(&self, lag: usize) -> i64 {
        self.periodic_correlation(self, lag)
    }

    /// Circularly rotate left by `shift` chips.
    pub fn rotated(&self, shift: usize) -> PnSequence {
        let mut chips = self.chips.clone();
        chips.rotate_left(shift % self.len());
        PnSequence {
            chips,
            kind: self.kind,
            generator: self.generator.clone(),
        }
    }
}

fn bipolar(bit: u32) -> i8 {
    if bit == 0 {
        1
    } else {
        -1
    }
}

fn lfsr_period(taps: &Taps, seed: u32) -> Result<Vec<i8>, CodeError> {
    let n = taps.degree();
    if seed == 0 {
        return Err(CodeError::ZeroSeed);
    }
    if u64::from(seed) >> n != 0 {
        return Err(CodeError::SeedTooWide { seed, degree: n });
    }
    let mask = taps.feedback_mask();
    let len = (1usize << n) - 1;
    let mut state = seed;
    let mut chips = Vec::with_capacity(len);
    for _ in 0..len {
        chips.push(bipolar(state & 1));
        let fb = (state & mask).count_ones() & 1;
        state = (state >> 1) | (fb << (n - 1));
    }
    Ok(chips)
}

/// One period of the maximal-length sequence for `taps`, starting from
/// register state `seed` (bit i of the seed is a[i]).
pub fn gen_mseq(taps: &Taps, seed: u32) -> Result<PnSequence, CodeError> {
    let chips = lfsr_period(taps, seed)?;
    Ok(PnSequence {
        chips,
        kind: SequenceKind::MSequence,
        generator: Some(Generator {
            taps: vec![taps.clone()],
            seeds: vec![seed],
            shift: 0,
            known_primitive: taps.is_known_primitive(),
        }),
    })
}

/// Gold code: chip-wise product of the m-sequences of `taps_a` and `taps_b`,
/// the second rotated left by `shift` chips. Both registers start at state 1.
pub fn gen_gold(taps_a: &Taps, taps_b: &Taps, shift: usize) -> Result<PnSequence, CodeError> {
    let (na, nb) = (taps_a.degree(), taps_b.degree());
    if na != nb {
        return Err(CodeError::DegreeMismatch(na, nb));
    }
    if na % 4 == 0 {
        return Err(CodeError::GoldDegreeMultipleOfFour(na));
    }
    let len = (1usize << na) - 1;
    if shift >= len {
        return Err(CodeError::ShiftOutOfRange { shift, len });
    }
    let a = lfsr_period(taps_a, 1)?;
    let b = lfsr_period(taps_b, 1)?;
    let chips = (0..len).map(|i| a[i] * b[(i + shift) % len]).collect();
    Ok(PnSequence {
        chips,
        kind: SequenceKind::Gold,
        generator: Some(Generator {
            taps: vec![taps_a.clone(), taps_b.clone()],
            seeds: vec![1, 1],
            shift,
            known_primitive: taps_a.is_known_primitive() && taps_b.is_known_primitive(),
        }),
    })
}

/// Channel schedule for a frequency-hopping transmitter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HopSequence {
    pub channel_indices: Vec<usize>,
    pub num_channels: usize,
    pub dwell_chips: usize,
}

impl HopSequence {
    pub fn len(&self) -> usize {
        self.channel_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channel_indices.is_empty()
    }
}

/// Derive hop indices from a PN sequence.
///
/// Hop i reads ⌈log₂ num_channels⌉ successive PN bits starting at bit
/// i·k (wrapping around the period), MSB first, and reduces the value
/// modulo `num_channels`. One hop is produced per PN chip.
pub fn gen_hops(
    pn: &PnSequence,
    num_channels: usize,
    dwell_chips: usize,
) -> Result<HopSequence, CodeError> {
    if num_channels < 2 {
        return Err(CodeError::TooFewChannels(num_channels));
    }
    if dwell_chips == 0 {
        return Err(CodeError::ZeroDwell);
    }
    let bits_per_hop = usize::BITS - (num_channels - 1).leading_zeros();
    let bits: Vec<u8> = pn.bits().collect();
    let n = bits.len();
    let channel_indices = (0..n)
        .map(|i| {
            let start = i * bits_per_hop as usize;
            let value = (0..bits_per_hop as usize)
                .fold(0usize, |v, j| (v << 1) | bits[(start + j) % n] as usize);
            value % num_channels
        })
        .collect();
    Ok(HopSequence {
        channel_indices,
        num_channels,
        dwell_chips,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn taps(e: &[u32]) -> Taps {
        Taps::new(e).unwrap()
    }

    #[test]
    fn degree_three_sequence_matches_hand_enumeration() {
        // a0..a2 = 1,0,0; a[k+3] = a[k+1] ^ a[k] gives 1001011.
        let s = gen_mseq(&taps(&[3, 1, 0]), 0b001).unwrap();
        assert_eq!(s.chips(), &[-1, 1, 1, -1, 1, -1, -1]);
        assert_eq!(s.chips().iter().filter(|&&c| c == -1).count(), 4);
        assert_eq!(s.chips().iter().filter(|&&c| c == 1).count(), 3);
    }

    #[test]
    fn degree_three_autocorrelation_is_two_valued() {
        let s = gen_mseq(&taps(&[3, 1, 0]), 1).unwrap();
        let c = s.chips();
        for lag in 0..7 {
            let r: i32 = (0..7)
                .map(|i| i32::from(c[i]) * i32::from(c[(i + lag) % 7]))
                .sum();
            assert_eq!(r, if lag == 0 { 7 } else { -1 }, "lag {lag}");
        }
    }

    #[test]
    fn zero_seed_and_bad_degree_rejected() {
        assert_eq!(gen_mseq(&taps(&[3, 1, 0]), 0), Err(CodeError::ZeroSeed));
        assert_eq!(Taps::new(&[25, 3, 0]), Err(CodeError::DegreeOutOfRange(25)));
        assert_eq!(Taps::new(&[1, 0]), Err(CodeError::DegreeOutOfRange(1)));
        assert_eq!(Taps::new(&[5, 2]), Err(CodeError::MalformedTaps));
        assert!(matches!(
            gen_mseq(&taps(&[3, 1, 0]), 8),
            Err(CodeError::SeedTooWide { .. })
        ));
    }

    #[test]
    fn unknown_taps_are_flagged() {
        let s = gen_mseq(&taps(&[4, 2, 0]), 1).unwrap();
        assert!(!s.generator().unwrap().known_primitive);
        let s = gen_mseq(&taps(&[4, 1, 0]), 1).unwrap();
        assert!(s.generator().unwrap().known_primitive);
    }

    #[test]
    fn gold_length_and_shift() {
        let (a, b) = preferred_pair(5).unwrap();
        let g0 = gen_gold(&a, &b, 0).unwrap();
        let g5 = gen_gold(&a, &b, 5).unwrap();
        assert_eq!(g0.len(), 31);
        assert_eq!(g5.len(), 31);
        assert_ne!(g0.chips(), g5.chips());
        assert_eq!(g0.kind(), SequenceKind::Gold);
    }

    #[test]
    fn gold_errors() {
        let (a, _) = preferred_pair(5).unwrap();
        let b7 = preferred_pair(7).unwrap().0;
        assert_eq!(gen_gold(&a, &b7, 0), Err(CodeError::DegreeMismatch(5, 7)));
        let t8 = Taps::primitive(8).unwrap();
        assert_eq!(
            gen_gold(&t8, &t8, 0),
            Err(CodeError::GoldDegreeMultipleOfFour(8))
        );
        assert!(matches!(
            gen_gold(&a, &a, 31),
            Err(CodeError::ShiftOutOfRange { .. })
        ));
    }

    #[test]
    fn hops_examples() {
        let pn = gen_mseq(&taps(&[3, 1, 0]), 1).unwrap();
        let h2 = gen_hops(&pn, 2, 4).unwrap();
        assert_eq!(
            h2.channel_indices,
            pn.bits().map(usize::from).collect::<Vec<_>>()
        );
        let h4 = gen_hops(&pn, 4, 4).unwrap();
        assert!(h4.channel_indices.iter().all(|&i| i < 4));
        assert_eq!(h4, gen_hops(&pn, 4, 4).unwrap());
        // bits 1001011 read two at a time from bit 2i, wrapping: 10 01 01 11 00 10 11
        assert_eq!(h4.channel_indices, vec![2, 1, 1, 3, 0, 2, 3]);
        let h3 = gen_hops(&pn, 3, 1).unwrap();
        assert!(h3.channel_indices.iter().all(|&i| i < 3));
        assert_eq!(gen_hops(&pn, 1, 1), Err(CodeError::TooFewChannels(1)));
    }

    #[test]
    fn manual_sequences_validated() {
        assert!(PnSequence::from_chips(vec![1, -1, 1]).is_ok());
        assert_eq!(
            PnSequence::from_chips(vec![1, 0]),
            Err(CodeError::NonBipolarChip(0))
        );
        assert_eq!(
            PnSequence::from_chips(vec![]),
            Err(CodeError::EmptySequence)
        );
    }

    #[test]
    fn taps_deserialize_from_exponent_list() {
        let t: Taps = Taps::try_from(vec![1, 3, 0]).unwrap();
        assert_eq!(t.exponents(), &[3, 1, 0]);
        assert_eq!(t.degree(), 3);
    }
}
