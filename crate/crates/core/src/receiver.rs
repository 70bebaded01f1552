//! Receive chains.
//!
//! DSSS side: PIN-switch blanking, despreading against the transmit code
//! (the PN-modulated LO and 70 MHz IF collapse to a chip-wise multiply on
//! complex baseband), and QPSK integrate-and-dump demodulation.
//!
//! UWB side: a correlator front end (sliding inner product against a pulse
//! template) followed by sample & hold at chosen gate instants.
//!
//! Timing is genie-aided: the receiver shares the transmitter's clock.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::codes::PnSequence;
use crate::error::ReceiverError;
use crate::waveform::{RadarParams, SampleStream};

/// Correlator output. Value n is the correlation at lag t0_s + n·lag_resolution_s.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationStream {
    pub values: Vec<Complex64>,
    pub lag_resolution_s: f64,
    pub t0_s: f64,
}

impl CorrelationStream {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn lag_s(&self, n: usize) -> f64 {
        self.t0_s + n as f64 * self.lag_resolution_s
    }
}

/// Receiver PIN switch: zeros [m·PRI, m·PRI + blank) and passes the rest.
pub fn rx_gate(
    s: &SampleStream,
    params: &RadarParams,
    blank_width_s: f64,
) -> Result<SampleStream, ReceiverError> {
    if blank_width_s >= params.pri_s {
        return Err(ReceiverError::BlankCoversPri {
            blank_s: blank_width_s,
            pri_s: params.pri_s,
        });
    }
    if blank_width_s < params.pulse_width_s * (1.0 - 1e-12) {
        return Err(ReceiverError::BlankShorterThanPulse {
            blank_s: blank_width_s,
            pulse_width_s: params.pulse_width_s,
        });
    }
    let fs = s.sample_rate();
    let pri = (params.pri_s * fs).round() as i64;
    let blank = (blank_width_s * fs).round() as i64;
    let offset = (s.t0() * fs).round() as i64;
    let zero = Complex64::new(0.0, 0.0);
    let out = s
        .samples()
        .iter()
        .enumerate()
        .map(|(n, &x)| {
            if (n as i64 + offset).rem_euclid(pri) < blank {
                zero
            } else {
                x
            }
        })
        .collect();
    Ok(s.with_samples(out)?)
}

/// Multiply chip block i (samples_per_chip samples) by pn[(i + lag) mod N].
pub fn despread(
    s: &SampleStream,
    pn: &PnSequence,
    params: &RadarParams,
    code_lag_chips: usize,
) -> Result<SampleStream, ReceiverError> {
    if code_lag_chips >= pn.len() {
        return Err(ReceiverError::LagOutOfRange {
            lag: code_lag_chips,
            len: pn.len(),
        });
    }
    let spc = params.samples_per_chip.max(1);
    let out = s
        .samples()
        .iter()
        .enumerate()
        .map(|(n, &x)| x * f64::from(pn.chip(n / spc + code_lag_chips)))
        .collect();
    Ok(s.with_samples(out)?)
}

/// Sum consecutive blocks of `samples_per_symbol` samples; a trailing
/// partial block is dropped.
pub fn integrate_and_dump(s: &SampleStream, samples_per_symbol: usize) -> Vec<Complex64> {
    s.samples()
        .chunks_exact(samples_per_symbol)
        .map(|c| c.iter().sum())
        .collect()
}

/// Per-symbol integrate-and-dump followed by sign decisions on I and Q.
/// A negative decision statistic decodes as bit 1 (chip −1).
pub fn qpsk_demod(
    s: &SampleStream,
    params: &RadarParams,
    chips_per_bit: usize,
) -> Result<(Vec<bool>, Vec<bool>), ReceiverError> {
    if chips_per_bit == 0 {
        return Err(ReceiverError::ZeroChipsPerBit);
    }
    let symbol = chips_per_bit * params.samples_per_chip;
    if s.len() < symbol {
        return Err(ReceiverError::ShorterThanSymbol {
            len: s.len(),
            symbol,
        });
    }
    Ok(integrate_and_dump(s, symbol)
        .into_iter()
        .map(|z| (z.re < 0.0, z.im < 0.0))
        .unzip())
}

/// c[n] = Σ_k rx[n + k]·conj(t[k]) for n in 0..=rx.len() − t.len().
pub fn correlate_direct(rx: &[Complex64], template: &[Complex64]) -> Vec<Complex64> {
    if template.len() > rx.len() {
        return Vec::new();
    }
    let conj: Vec<Complex64> = template.iter().map(|t| t.conj()).collect();
    (0..=rx.len() - template.len())
        .map(|n| {
            rx[n..n + conj.len()]
                .iter()
                .zip(&conj)
                .map(|(a, b)| a * b)
                .sum()
        })
        .collect()
}

/// Same result as [`correlate_direct`], computed through a zero-padded FFT.
pub fn correlate_fft(rx: &[Complex64], template: &[Complex64]) -> Vec<Complex64> {
    if template.len() > rx.len() || template.is_empty() {
        return Vec::new();
    }
    let size = (rx.len() + template.len() - 1).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let zero = Complex64::new(0.0, 0.0);
    let mut a = rx.to_vec();
    a.resize(size, zero);
    let mut b = template.to_vec();
    b.resize(size, zero);
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y.conj();
    }
    inv.process(&mut a);
    let scale = 1.0 / size as f64;
    a.truncate(rx.len() - template.len() + 1);
    a.iter_mut().for_each(|x| *x *= scale);
    a
}

/// Full cross-correlation over every overlapping lag. Entry i holds lag
/// i − (b.len() − 1): r[lag] = Σ_k a[k + lag]·conj(b[k]).
pub fn cross_correlate_full(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let zero = Complex64::new(0.0, 0.0);
    let pad = b.len() - 1;
    let mut padded = vec![zero; pad];
    padded.extend_from_slice(a);
    padded.extend(std::iter::repeat_n(zero, pad));
    correlate_direct(&padded, b)
}

const FFT_THRESHOLD: usize = 1 << 20;

/// Valid-lag correlation, routed through the FFT when the direct product
/// would be large. Both routes agree to rounding.
pub fn correlate(rx: &[Complex64], template: &[Complex64]) -> Vec<Complex64> {
    if template.len() >= 32 && rx.len().saturating_mul(template.len()) > FFT_THRESHOLD {
        correlate_fft(rx, template)
    } else {
        correlate_direct(rx, template)
    }
}

/// Correlator front end: sliding inner product of `rx` against `template`
/// over every lag where the template fits. Long products go through the FFT
/// path; both paths agree to rounding.
pub fn uwb_correlate(
    rx: &SampleStream,
    template: &SampleStream,
) -> Result<CorrelationStream, ReceiverError> {
    rx.check_same_rate(template)?;
    if template.len() > rx.len() {
        return Err(ReceiverError::TemplateTooLong {
            template: template.len(),
            rx: rx.len(),
        });
    }
    let values = correlate(rx.samples(), template.samples());
    Ok(CorrelationStream {
        values,
        lag_resolution_s: 1.0 / rx.sample_rate(),
        t0_s: rx.t0() - template.t0(),
    })
}

/// Analytic version p + j·H{p} of a real pulse, truncated to the pulse's own
/// support. Correlating against it yields the echo envelope instead of the
/// oscillating real correlation, so each echo produces one peak.
pub fn quadrature_template(pulse: &SampleStream) -> SampleStream {
    let n = pulse.len();
    let size = (8 * n).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let zero = Complex64::new(0.0, 0.0);
    // centre the pulse in the buffer so the Hilbert tails stay on both sides
    let start = (size - n) / 2;
    let mut buf = vec![zero; size];
    for (dst, p) in buf[start..start + n].iter_mut().zip(pulse.samples()) {
        *dst = Complex64::new(p.re, 0.0);
    }
    fwd.process(&mut buf);
    for (k, x) in buf.iter_mut().enumerate() {
        let w = if k == 0 || k == size / 2 {
            1.0
        } else if k < size / 2 {
            2.0
        } else {
            0.0
        };
        *x *= w / size as f64;
    }
    inv.process(&mut buf);
    let samples = buf[start..start + n].to_vec();
    pulse.with_samples(samples).expect("finite analytic signal")
}

/// Code-weighted fold of a pulse train onto one PRI:
/// z[n] = Σ_k w_k·rx[k·PRI + offset_k + n], n in 0..PRI (zero past the end).
/// With polarity weights this is the DS despreading step of the UWB
/// correlator; with position offsets it undoes PPM.
pub fn fold_pulses(
    rx: &SampleStream,
    slots: &[(f64, usize)],
    pri_samples: usize,
) -> Result<SampleStream, ReceiverError> {
    let x = rx.samples();
    let mut z = vec![Complex64::new(0.0, 0.0); pri_samples];
    for (k, &(w, offset)) in slots.iter().enumerate() {
        let start = k * pri_samples + offset;
        if start >= x.len() || w == 0.0 {
            continue;
        }
        let end = (start + pri_samples).min(x.len());
        for (dst, s) in z.iter_mut().zip(&x[start..end]) {
            *dst += s * w;
        }
    }
    Ok(rx.with_samples(z)?)
}

/// Sample & hold: the correlation value at the lag bin nearest each gate time.
pub fn sample_hold(
    c: &CorrelationStream,
    gate_times_s: &[f64],
) -> Result<Vec<Complex64>, ReceiverError> {
    let end_s = c.lag_s(c.len().saturating_sub(1));
    gate_times_s
        .iter()
        .enumerate()
        .map(|(index, &t)| {
            let pos = ((t - c.t0_s) / c.lag_resolution_s).round();
            if c.is_empty() || !(pos >= 0.0 && pos < c.len() as f64) {
                return Err(ReceiverError::GateOutOfSpan {
                    index,
                    time_s: t,
                    start_s: c.t0_s,
                    end_s,
                });
            }
            Ok(c.values[pos as usize])
        })
        .collect()
}

/// 10·log10(chips_per_bit).
pub fn processing_gain_db(pn: &PnSequence, chips_per_bit: usize) -> Result<f64, ReceiverError> {
    if chips_per_bit == 0 {
        return Err(ReceiverError::ZeroChipsPerBit);
    }
    if chips_per_bit > pn.len() {
        return Err(ReceiverError::Waveform(
            crate::error::WaveformError::ChipsPerBit {
                chips_per_bit,
                code_len: pn.len(),
            },
        ));
    }
    Ok(10.0 * (chips_per_bit as f64).log10())
}
