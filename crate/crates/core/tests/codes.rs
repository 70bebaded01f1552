use proptest::prelude::*;
use radsim_core::codes::{gen_gold, gen_hops, gen_mseq, preferred_pair, PnSequence, Taps};

fn brute_autocorrelation(chips: &[i8], lag: usize) -> i64 {
    let n = chips.len();
    (0..n)
        .map(|i| i64::from(chips[i]) * i64::from(chips[(i + lag) % n]))
        .sum()
}

#[test]
fn m_sequence_autocorrelation_is_two_valued_for_degrees_2_to_10() {
    for degree in 2..=10 {
        let pn = gen_mseq(&Taps::primitive(degree).unwrap(), 1).unwrap();
        let n = pn.len() as i64;
        assert_eq!(n, (1 << degree) - 1);
        for lag in 0..pn.len() {
            let r = brute_autocorrelation(pn.chips(), lag);
            let expected = if lag == 0 { n } else { -1 };
            assert_eq!(r, expected, "degree {degree} lag {lag}");
            assert_eq!(pn.autocorrelation(lag), r);
        }
    }
}

#[test]
fn m_sequence_balance() {
    for degree in 2..=16 {
        let pn = gen_mseq(&Taps::primitive(degree).unwrap(), 1).unwrap();
        let minus = pn.chips().iter().filter(|&&c| c == -1).count();
        let plus = pn.len() - minus;
        assert_eq!(minus, plus + 1, "degree {degree}");
    }
}

#[test]
fn every_tabulated_polynomial_reaches_full_period() {
    for degree in 2..=24 {
        let taps = Taps::primitive(degree).unwrap();
        let pn = gen_mseq(&taps, 1).unwrap();
        // the register returns to its seed exactly after 2^n − 1 steps and
        // never earlier: checking that no proper divisor of the period is a
        // period of the chip sequence is enough for a maximal sequence
        let len = pn.len();
        let chips = pn.chips();
        let mut d = 1;
        while d * d <= len {
            if len.is_multiple_of(d) {
                for p in [d, len / d] {
                    if p < len {
                        assert!(
                            (0..len).any(|i| chips[i] != chips[(i + p) % len]),
                            "degree {degree} repeats after {p}"
                        );
                    }
                }
            }
            d += 1;
        }
    }
}

fn gold_values(n: u32) -> [i64; 3] {
    let t = (1i64 << ((n + 2) / 2)) + 1;
    [-1, -t, t - 2]
}

#[test]
fn preferred_pair_cross_correlation_is_three_valued() {
    for degree in [5, 6, 7, 9, 10, 11] {
        let (a, b) = preferred_pair(degree).unwrap();
        let sa = gen_mseq(&a, 1).unwrap();
        let sb = gen_mseq(&b, 1).unwrap();
        let allowed = gold_values(degree);
        for lag in 0..sa.len() {
            let r = sa.periodic_correlation(&sb, lag);
            assert!(
                allowed.contains(&r),
                "degree {degree} lag {lag}: {r} not in {allowed:?}"
            );
        }
    }
}

#[test]
fn gold_family_cross_correlation_is_three_valued_for_5_and_7() {
    for degree in [5u32, 7] {
        let (a, b) = preferred_pair(degree).unwrap();
        let len = (1usize << degree) - 1;
        let family: Vec<PnSequence> = (0..len)
            .step_by(if degree == 5 { 1 } else { 9 })
            .map(|s| gen_gold(&a, &b, s).unwrap())
            .collect();
        let allowed = gold_values(degree);
        for (i, x) in family.iter().enumerate() {
            for y in &family[i + 1..] {
                for lag in 0..len {
                    let r = x.periodic_correlation(y, lag);
                    assert!(
                        allowed.contains(&r),
                        "degree {degree}: {r} not in {allowed:?}"
                    );
                }
            }
            // off-peak autocorrelation obeys the same bound
            for lag in 1..len {
                assert!(allowed.contains(&x.autocorrelation(lag)));
            }
        }
    }
}

proptest! {
    #[test]
    fn any_seed_gives_a_rotation_of_the_same_sequence(degree in 2u32..=12, seed_bits in 1u32..u32::MAX) {
        let taps = Taps::primitive(degree).unwrap();
        let seed = seed_bits & ((1 << degree) - 1);
        prop_assume!(seed != 0);
        let base = gen_mseq(&taps, 1).unwrap();
        let other = gen_mseq(&taps, seed).unwrap();
        let found = (0..base.len()).any(|s| base.rotated(s).chips() == other.chips());
        prop_assert!(found);
    }

    #[test]
    fn correlation_is_shift_invariant(degree in 3u32..=9, shift in 0usize..500, lag in 0usize..500) {
        let pn = gen_mseq(&Taps::primitive(degree).unwrap(), 1).unwrap();
        let shift = shift % pn.len();
        let lag = lag % pn.len();
        let r = pn.rotated(shift);
        prop_assert_eq!(r.autocorrelation(lag), pn.autocorrelation(lag));
    }

    #[test]
    fn hop_indices_stay_in_range(degree in 3u32..=9, channels in 2usize..40, dwell in 1usize..8) {
        let pn = gen_mseq(&Taps::primitive(degree).unwrap(), 1).unwrap();
        let hops = gen_hops(&pn, channels, dwell).unwrap();
        prop_assert_eq!(hops.len(), pn.len());
        prop_assert!(hops.channel_indices.iter().all(|&i| i < channels));
    }
}
