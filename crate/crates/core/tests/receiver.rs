use num_complex::Complex64;
use proptest::prelude::*;
use radsim_core::channel::{add_interferer, add_noise, Interferer};
use radsim_core::codes::{gen_gold, gen_mseq, preferred_pair, PnSequence, Taps};
use radsim_core::receiver::{
    correlate_direct, correlate_fft, cross_correlate_full, despread, integrate_and_dump,
    qpsk_demod, rx_gate, uwb_correlate,
};
use radsim_core::waveform::{gaussian_monocycle, qpsk_baseband, spread, RadarParams, SampleStream};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_bits(n: usize, seed: u64) -> Vec<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random()).collect()
}

fn modulate(
    pn: &PnSequence,
    i_bits: &[bool],
    q_bits: &[bool],
    cpb: usize,
    p: &RadarParams,
) -> SampleStream {
    qpsk_baseband(
        &spread(i_bits, pn, cpb).unwrap(),
        &spread(q_bits, pn, cpb).unwrap(),
        p,
    )
    .unwrap()
}

fn errors(a: &[bool], b: &[bool]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

fn complex_vec(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec(
        (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(r, i)| Complex64::new(r, i)),
        len,
    )
}

proptest! {
    #[test]
    fn fft_route_matches_direct_form(rx in complex_vec(40..400), t in complex_vec(1..40)) {
        let d = correlate_direct(&rx, &t);
        let f = correlate_fft(&rx, &t);
        prop_assert_eq!(d.len(), f.len());
        let scale = d.iter().fold(1e-300f64, |m, z| m.max(z.norm()));
        for (a, b) in d.iter().zip(&f) {
            prop_assert!((a - b).norm() <= 1e-9 * scale);
        }
    }

    #[test]
    fn correlation_is_conjugate_symmetric(a in complex_vec(1..60), b in complex_vec(1..60)) {
        let ab = cross_correlate_full(&a, &b);
        let ba = cross_correlate_full(&b, &a);
        prop_assert_eq!(ab.len(), ba.len());
        let scale = ab.iter().fold(1e-300f64, |m, z| m.max(z.norm()));
        for (x, y) in ab.iter().zip(ba.iter().rev()) {
            prop_assert!((x - y.conj()).norm() <= 1e-9 * scale);
        }
    }

    #[test]
    fn gate_is_idempotent(blank_frac in 0.0f64..0.9, seed in any::<u64>()) {
        let p = RadarParams::nb_default();
        let blank = p.pulse_width_s + blank_frac * (p.pri_s - p.pulse_width_s) * 0.99;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Complex64> = (0..2 * p.pri_samples()).map(|_| Complex64::new(rng.random(), rng.random())).collect();
        let s = SampleStream::new(x, p.sample_rate(), p.carrier_hz, 0.0).unwrap();
        let once = rx_gate(&s, &p, blank).unwrap();
        let twice = rx_gate(&once, &p, blank).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn despread_inverts_spread_on_the_chip_lattice(bits_seed in any::<u64>(), degree in 3u32..=8, nbits in 1usize..40) {
        let p = RadarParams::nb_default();
        let pn = gen_mseq(&Taps::primitive(degree).unwrap(), 1).unwrap();
        let cpb = pn.len();
        let i_bits = random_bits(nbits, bits_seed);
        let q_bits = random_bits(nbits, bits_seed ^ 1);
        let s = modulate(&pn, &i_bits, &q_bits, cpb, &p);
        // after despreading, every sample of a symbol carries the same ±1/√2 pair
        let d = despread(&s, &pn, &p, 0).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for (n, z) in d.samples().iter().enumerate() {
            let b = n / (cpb * p.samples_per_chip);
            let want = Complex64::new(if i_bits[b] { -h } else { h }, if q_bits[b] { -h } else { h });
            prop_assert!((z - want).norm() < 1e-12);
        }
        let (i, q) = qpsk_demod(&d, &p, cpb).unwrap();
        prop_assert_eq!(i, i_bits);
        prop_assert_eq!(q, q_bits);
    }
}

#[test]
fn noiseless_loopback_ber_is_zero_over_ten_thousand_bits() {
    let p = RadarParams::nb_default();
    let pn = gen_mseq(&Taps::primitive(7).unwrap(), 1).unwrap();
    let i_bits = random_bits(5000, 1);
    let q_bits = random_bits(5000, 2);
    let s = modulate(&pn, &i_bits, &q_bits, 127, &p);
    let (i, q) = qpsk_demod(&despread(&s, &pn, &p, 0).unwrap(), &p, 127).unwrap();
    assert_eq!(errors(&i, &i_bits) + errors(&q, &q_bits), 0);
}

/// Processing gain measured by superposition: despread the wanted signal
/// and the interferer separately and compare symbol powers.
fn symbol_sinr_gain_db(seeds: u64) -> f64 {
    let p = RadarParams::nb_default();
    let pn = gen_mseq(&Taps::primitive(7).unwrap(), 1).unwrap();
    let symbols = 20;
    let sps = 127 * p.samples_per_chip;
    let (mut pre_s, mut pre_i, mut post_s, mut post_i) = (0.0, 0.0, 0.0, 0.0);
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let offset = rng.random_range(-0.25..0.25) * p.chip_rate_hz;
        let sig = modulate(
            &pn,
            &random_bits(symbols, seed),
            &random_bits(symbols, !seed),
            127,
            &p,
        );
        let zero = SampleStream::zeros(sig.len(), sig.sample_rate(), sig.carrier_hz()).unwrap();
        let cw = add_interferer(&zero, &Interferer::cw(p.carrier_hz + offset, 10.0), seed).unwrap();
        pre_s += sig.mean_power();
        pre_i += cw.mean_power();
        let ds = integrate_and_dump(&despread(&sig, &pn, &p, 0).unwrap(), sps);
        let di = integrate_and_dump(&despread(&cw, &pn, &p, 0).unwrap(), sps);
        post_s += ds.iter().map(|z| z.norm_sqr()).sum::<f64>() / ds.len() as f64;
        post_i += di.iter().map(|z| z.norm_sqr()).sum::<f64>() / di.len() as f64;
    }
    10.0 * ((post_s / post_i) / (pre_s / pre_i)).log10()
}

#[test]
fn cw_suppression_matches_processing_gain() {
    let gain = symbol_sinr_gain_db(50);
    assert!((gain - 21.04).abs() <= 1.0, "measured {gain:.2} dB");
}

#[test]
fn wrong_code_lag_collapses_the_symbol() {
    // With one full code period per symbol, despreading N−1 chips off turns
    // the symbol amplitude N into the off-peak autocorrelation −1: a
    // 20·log10(N) ≈ 42 dB loss of symbol power against an unchanged noise floor.
    let p = RadarParams::nb_default();
    let pn = gen_mseq(&Taps::primitive(7).unwrap(), 1).unwrap();
    let sig = modulate(&pn, &random_bits(64, 3), &random_bits(64, 4), 127, &p);
    let sps = 127 * p.samples_per_chip;
    let power = |lag| {
        let z = integrate_and_dump(&despread(&sig, &pn, &p, lag).unwrap(), sps);
        z.iter().map(|z| z.norm_sqr()).sum::<f64>() / z.len() as f64
    };
    let drop = 10.0 * (power(0) / power(126)).log10();
    assert!((drop - 20.0 * 127f64.log10()).abs() < 0.01, "{drop}");
}

#[test]
fn wrong_gold_code_gives_coin_flip_decisions_in_noise() {
    let p = RadarParams::nb_default();
    let (a, b) = preferred_pair(7).unwrap();
    let ours = gen_gold(&a, &b, 0).unwrap();
    // a family member whose zero-lag cross-correlation takes the typical value −1
    let other = (1..127)
        .map(|s| gen_gold(&a, &b, s).unwrap())
        .find(|g| ours.periodic_correlation(g, 0) == -1)
        .unwrap();
    let n = 5000;
    let i_bits = random_bits(n, 5);
    let q_bits = random_bits(n, 6);
    let s = modulate(&ours, &i_bits, &q_bits, 127, &p);
    // Eb/N0 = 0 dB for the intended receiver
    let psd = (127 * p.samples_per_chip) as f64 / (2.0 * p.sample_rate());
    let rx = add_noise(&s, psd, 11, 0).unwrap();
    let (i, q) = qpsk_demod(&despread(&rx, &other, &p, 0).unwrap(), &p, 127).unwrap();
    let ber = (errors(&i, &i_bits) + errors(&q, &q_bits)) as f64 / (2 * n) as f64;
    assert!((ber - 0.5).abs() <= 0.02, "{ber}");
}

#[test]
fn matched_filter_beats_the_best_raw_sample() {
    let p = RadarParams::uwb_default();
    let pulse = gaussian_monocycle(&p).unwrap();
    let tmpl = SampleStream::new(pulse.samples().to_vec(), p.uwb_sample_rate_hz, 0.0, 0.0).unwrap();
    let delay = 400;
    let mut clean = vec![Complex64::new(0.0, 0.0); 1000];
    clean[delay..delay + pulse.len()].copy_from_slice(pulse.samples());
    let clean = SampleStream::new(clean, p.uwb_sample_rate_hz, 0.0, 0.0).unwrap();
    let psd = 1.0 / p.uwb_sample_rate_hz; // unit noise variance per sample
    let peak_signal = uwb_correlate(&clean, &tmpl).unwrap().values[delay].norm_sqr();
    let (mut corr_noise, mut raw_noise) = (0.0, 0.0);
    let seeds = 100;
    for seed in 0..seeds {
        let noise = add_noise(
            &SampleStream::zeros(1000, p.uwb_sample_rate_hz, 0.0).unwrap(),
            psd,
            seed,
            0,
        )
        .unwrap();
        corr_noise += uwb_correlate(&noise, &tmpl).unwrap().values[delay].norm_sqr();
        raw_noise += noise.mean_power();
    }
    let corr_snr = peak_signal / (corr_noise / seeds as f64);
    let best_raw_snr = 1.0 / (raw_noise / seeds as f64); // peak sample amplitude is 1
    assert!(corr_snr >= best_raw_snr, "{corr_snr} vs {best_raw_snr}");
    let energy: f64 = pulse.samples().iter().map(|z| z.norm_sqr()).sum();
    // the statistical gain equals the template energy to Monte-Carlo accuracy
    assert!((corr_snr / best_raw_snr / energy - 1.0).abs() < 0.3);
}

#[test]
fn separated_pulses_keep_their_amplitude_ratio() {
    let p = RadarParams::uwb_default();
    let pulse = gaussian_monocycle(&p).unwrap();
    let tmpl = SampleStream::new(pulse.samples().to_vec(), p.uwb_sample_rate_hz, 0.0, 0.0).unwrap();
    let mut x = vec![Complex64::new(0.0, 0.0); 2000];
    let (d1, d2, a2) = (300, 900, 0.37);
    for (k, s) in pulse.samples().iter().enumerate() {
        x[d1 + k] += s;
        x[d2 + k] += s * a2;
    }
    let rx = SampleStream::new(x, p.uwb_sample_rate_hz, 0.0, 0.0).unwrap();
    let c = uwb_correlate(&rx, &tmpl).unwrap();
    let half = |r: std::ops::Range<usize>| r.map(|n| c.values[n].norm()).fold(0.0f64, f64::max);
    let ratio = half(600..c.len()) / half(0..600);
    assert!((ratio - a2).abs() <= 0.01 * a2, "{ratio}");
}
