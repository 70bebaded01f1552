//! Transmit waveforms.
//!
//! The DSSS chain builds a QPSK composite from two spread chip streams, then
//! chops it with the PIN-switch gate. The UWB chain places one Gaussian
//! monocycle per PRI slot and imposes the spreading code on its polarity
//! (default) or position.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::codes::{HopSequence, PnSequence};
use crate::error::WaveformError;
use crate::SPEED_OF_LIGHT;

/// Uniformly sampled complex baseband signal.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleStream {
    samples: Vec<Complex64>,
    sample_rate: f64,
    carrier_hz: f64,
    t0: f64,
}

impl SampleStream {
    pub fn new(
        samples: Vec<Complex64>,
        sample_rate: f64,
        carrier_hz: f64,
        t0: f64,
    ) -> Result<Self, WaveformError> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(WaveformError::BadSampleRate(sample_rate));
        }
        if let Some(i) = samples
            .iter()
            .position(|s| !(s.re.is_finite() && s.im.is_finite()))
        {
            return Err(WaveformError::NonFiniteSample(i));
        }
        Ok(Self {
            samples,
            sample_rate,
            carrier_hz,
            t0,
        })
    }

    pub fn zeros(len: usize, sample_rate: f64, carrier_hz: f64) -> Result<Self, WaveformError> {
        Self::new(
            vec![Complex64::new(0.0, 0.0); len],
            sample_rate,
            carrier_hz,
            0.0,
        )
    }

    /// Same timing and tags as `self`, different samples.
    pub fn with_samples(&self, samples: Vec<Complex64>) -> Result<Self, WaveformError> {
        Self::new(samples, self.sample_rate, self.carrier_hz, self.t0)
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn carrier_hz(&self) -> f64 {
        self.carrier_hz
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    /// Time of sample `n`.
    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 / self.sample_rate
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum()
    }

    /// Mean |s|² over all samples (0 for an empty stream).
    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            0.0
        } else {
            self.energy() / self.samples.len() as f64
        }
    }

    pub fn scaled(&self, k: Complex64) -> Self {
        Self {
            samples: self.samples.iter().map(|s| s * k).collect(),
            sample_rate: self.sample_rate,
            carrier_hz: self.carrier_hz,
            t0: self.t0,
        }
    }

    pub fn check_same_rate(&self, other: &SampleStream) -> Result<(), WaveformError> {
        if self.sample_rate != other.sample_rate {
            return Err(WaveformError::RateMismatch(
                self.sample_rate,
                other.sample_rate,
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// Pulsed DSSS-QPSK on a sinusoidal carrier.
    NbDsss,
    /// Coded Gaussian-monocycle impulse train.
    DsUwb,
}

/// How the spreading code is imposed on the UWB pulse train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UwbCoding {
    /// Chip −1 inverts the pulse.
    Polarity,
    /// Chip −1 delays the pulse by `ppm_shift_s`.
    Position,
}

/// Radar timing and carrier configuration for one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarParams {
    pub mode: Mode,
    pub carrier_hz: f64,
    pub chip_rate_hz: f64,
    pub samples_per_chip: usize,
    pub pulse_width_s: f64,
    pub pri_s: f64,
    pub monocycle_width_s: f64,
    pub uwb_sample_rate_hz: f64,
    pub uwb_coding: UwbCoding,
    pub ppm_shift_s: f64,
}

pub const NB_BAND_HZ: (f64, f64) = (300e6, 3000e6);

impl RadarParams {
    /// 1 GHz carrier, 10 Mchip/s, 8 samples/chip, 10 µs pulse, 100 µs PRI.
    pub fn nb_default() -> Self {
        Self {
            mode: Mode::NbDsss,
            carrier_hz: 1e9,
            chip_rate_hz: 10e6,
            samples_per_chip: 8,
            pulse_width_s: 10e-6,
            pri_s: 100e-6,
            monocycle_width_s: 0.33e-9,
            uwb_sample_rate_hz: 100e9,
            uwb_coding: UwbCoding::Polarity,
            ppm_shift_s: 0.5e-9,
        }
    }

    /// 0.33 ns monocycle, 100 GHz sampling, 100 ns PRI, 2 ns pulse slot.
    pub fn uwb_default() -> Self {
        Self {
            mode: Mode::DsUwb,
            carrier_hz: 0.0,
            chip_rate_hz: 10e6,
            samples_per_chip: 8,
            pulse_width_s: 2e-9,
            pri_s: 100e-9,
            monocycle_width_s: 0.33e-9,
            uwb_sample_rate_hz: 100e9,
            uwb_coding: UwbCoding::Polarity,
            ppm_shift_s: 0.5e-9,
        }
    }

    pub fn validate(&self) -> Result<(), WaveformError> {
        let bad = |field, reason: String| Err(WaveformError::InvalidParam { field, reason });
        let positive = |field: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(WaveformError::InvalidParam {
                    field,
                    reason: format!("must be positive, got {v}"),
                })
            }
        };
        positive("pulse_width_s", self.pulse_width_s)?;
        positive("pri_s", self.pri_s)?;
        if self.pulse_width_s >= self.pri_s {
            return Err(WaveformError::PulseNotShorterThanPri {
                pulse_width_s: self.pulse_width_s,
                pri_s: self.pri_s,
            });
        }
        match self.mode {
            Mode::NbDsss => {
                if !(NB_BAND_HZ.0..=NB_BAND_HZ.1).contains(&self.carrier_hz) {
                    return bad(
                        "carrier_hz",
                        format!("carrier {} Hz outside 300–3000 MHz", self.carrier_hz),
                    );
                }
                positive("chip_rate_hz", self.chip_rate_hz)?;
                if self.samples_per_chip < 2 {
                    return bad(
                        "samples_per_chip",
                        format!("must be >= 2, got {}", self.samples_per_chip),
                    );
                }
            }
            Mode::DsUwb => {
                if !(self.carrier_hz.is_finite() && self.carrier_hz >= 0.0) {
                    return bad(
                        "carrier_hz",
                        format!("must be non-negative, got {}", self.carrier_hz),
                    );
                }
                positive("monocycle_width_s", self.monocycle_width_s)?;
                positive("uwb_sample_rate_hz", self.uwb_sample_rate_hz)?;
                let required = 10.0 / self.monocycle_width_s;
                if self.uwb_sample_rate_hz < required {
                    return Err(WaveformError::Undersampled {
                        sample_rate: self.uwb_sample_rate_hz,
                        width_s: self.monocycle_width_s,
                        required,
                    });
                }
                if !(self.ppm_shift_s.is_finite() && self.ppm_shift_s >= 0.0) {
                    return bad(
                        "ppm_shift_s",
                        format!("must be non-negative, got {}", self.ppm_shift_s),
                    );
                }
                let support = self.monocycle_support_samples() as f64 / self.uwb_sample_rate_hz;
                if self.pulse_width_s < support {
                    return bad(
                        "pulse_width_s",
                        format!(
                            "{} s cannot hold the {support:.3e} s monocycle support",
                            self.pulse_width_s
                        ),
                    );
                }
            }
        }
        if self.pri_samples() == 0 || self.pulse_samples() == 0 {
            return bad(
                "pulse_width_s",
                "pulse or PRI shorter than one sample".into(),
            );
        }
        Ok(())
    }

    pub fn sample_rate(&self) -> f64 {
        match self.mode {
            Mode::NbDsss => self.chip_rate_hz * self.samples_per_chip as f64,
            Mode::DsUwb => self.uwb_sample_rate_hz,
        }
    }

    /// Carrier tag carried by transmitted streams (0 for the baseband impulse train).
    pub fn stream_carrier_hz(&self) -> f64 {
        match self.mode {
            Mode::NbDsss => self.carrier_hz,
            Mode::DsUwb => 0.0,
        }
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    pub fn pri_samples(&self) -> usize {
        (self.pri_s * self.sample_rate()).round() as usize
    }

    pub fn pulse_samples(&self) -> usize {
        (self.pulse_width_s * self.sample_rate()).round() as usize
    }

    pub fn unambiguous_range_m(&self) -> f64 {
        SPEED_OF_LIGHT * self.pri_s / 2.0
    }

    /// Gaussian σ of the monocycle: the lobe peaks sit at ±σ, so the
    /// configured peak-to-peak width is 2σ.
    pub fn monocycle_sigma_s(&self) -> f64 {
        self.monocycle_width_s / 2.0
    }

    /// Half-length h of the ±4σ monocycle support, in samples.
    pub fn monocycle_half_samples(&self) -> usize {
        (4.0 * self.monocycle_sigma_s() * self.uwb_sample_rate_hz).ceil() as usize
    }

    pub fn monocycle_support_samples(&self) -> usize {
        2 * self.monocycle_half_samples() + 1
    }

    pub fn ppm_shift_samples(&self) -> usize {
        (self.ppm_shift_s * self.uwb_sample_rate_hz).round() as usize
    }

    /// Two-way range resolution of the compressed pulse.
    pub fn range_resolution_m(&self) -> f64 {
        match self.mode {
            Mode::NbDsss => SPEED_OF_LIGHT / (2.0 * self.chip_rate_hz),
            Mode::DsUwb => {
                SPEED_OF_LIGHT * self.monocycle_support_samples() as f64
                    / self.uwb_sample_rate_hz
                    / 2.0
            }
        }
    }
}

/// Spread data bits with a PN code. Chip j of bit b is
/// bipolar(b)·pn[(b·chips_per_bit + j) mod N].
pub fn spread(
    data_bits: &[bool],
    pn: &PnSequence,
    chips_per_bit: usize,
) -> Result<Vec<i8>, WaveformError> {
    if data_bits.is_empty() {
        return Err(WaveformError::EmptyData);
    }
    if chips_per_bit == 0 || chips_per_bit > pn.len() {
        return Err(WaveformError::ChipsPerBit {
            chips_per_bit,
            code_len: pn.len(),
        });
    }
    Ok(data_bits
        .iter()
        .enumerate()
        .flat_map(|(b, &bit)| {
            let sign = if bit { -1 } else { 1 };
            (0..chips_per_bit).map(move |j| sign * pn.chip(b * chips_per_bit + j))
        })
        .collect())
}

fn hold(chips: &[i8], samples_per_chip: usize, scale: Complex64) -> Vec<Complex64> {
    chips
        .iter()
        .flat_map(|&c| std::iter::repeat_n(scale * f64::from(c), samples_per_chip))
        .collect()
}

/// The in-phase and quadrature branches I_M = i/√2 and Q_M = j·q/√2,
/// rectangular chips held for `samples_per_chip` samples each.
pub fn qpsk_branches(
    i_chips: &[i8],
    q_chips: &[i8],
    params: &RadarParams,
) -> Result<(SampleStream, SampleStream), WaveformError> {
    if i_chips.len() != q_chips.len() {
        return Err(WaveformError::LengthMismatch(i_chips.len(), q_chips.len()));
    }
    let fs = params.chip_rate_hz * params.samples_per_chip as f64;
    let fc = params.stream_carrier_hz();
    let spc = params.samples_per_chip;
    let i = SampleStream::new(
        hold(i_chips, spc, Complex64::new(1.0 / SQRT_2, 0.0)),
        fs,
        fc,
        0.0,
    )?;
    let q = SampleStream::new(
        hold(q_chips, spc, Complex64::new(0.0, 1.0 / SQRT_2)),
        fs,
        fc,
        0.0,
    )?;
    Ok((i, q))
}

/// Gray-mapped QPSK: s[n] = (i + j·q)/√2, unit power.
pub fn qpsk_baseband(
    i_chips: &[i8],
    q_chips: &[i8],
    params: &RadarParams,
) -> Result<SampleStream, WaveformError> {
    let (i, q) = qpsk_branches(i_chips, q_chips, params)?;
    combine_iq(&i, &q)
}

/// Element-wise sum of two streams; the first stream's tags are kept.
pub fn combine_iq(
    i_mod: &SampleStream,
    q_mod: &SampleStream,
) -> Result<SampleStream, WaveformError> {
    i_mod.check_same_rate(q_mod)?;
    if i_mod.len() != q_mod.len() {
        return Err(WaveformError::LengthMismatch(i_mod.len(), q_mod.len()));
    }
    i_mod.with_samples(
        i_mod
            .samples()
            .iter()
            .zip(q_mod.samples())
            .map(|(a, b)| a + b)
            .collect(),
    )
}

/// PIN-switch chop: keeps samples with (n + n0) mod PRI < τ, where n0 is the
/// stream start expressed in samples, and zeros everything else.
pub fn gate_pulse(s: &SampleStream, params: &RadarParams) -> Result<SampleStream, WaveformError> {
    if params.pulse_width_s >= params.pri_s {
        return Err(WaveformError::PulseNotShorterThanPri {
            pulse_width_s: params.pulse_width_s,
            pri_s: params.pri_s,
        });
    }
    let fs = s.sample_rate();
    let pri = (params.pri_s * fs).round() as usize;
    if s.len() < pri {
        return Err(WaveformError::StreamShorterThanPri {
            duration_s: s.duration(),
            pri_s: params.pri_s,
        });
    }
    let width = (params.pulse_width_s * fs).round() as usize;
    if pri == 0 {
        return Err(WaveformError::InvalidParam {
            field: "pri_s",
            reason: "shorter than one sample".into(),
        });
    }
    let offset = (s.t0() * fs).round() as i64;
    let zero = Complex64::new(0.0, 0.0);
    let out = s
        .samples()
        .iter()
        .enumerate()
        .map(|(n, &x)| {
            let phase = (n as i64 + offset).rem_euclid(pri as i64) as usize;
            if phase < width {
                x
            } else {
                zero
            }
        })
        .collect();
    s.with_samples(out)
}

/// Gaussian first-derivative monocycle, p(t) ∝ −t·exp(−t²/2σ²), peak
/// normalized to 1, truncated to ±4σ. The centre sample sits at t = 0
/// (the stream's `t0` is −h/fs).
pub fn gaussian_monocycle(params: &RadarParams) -> Result<SampleStream, WaveformError> {
    let fs = params.uwb_sample_rate_hz;
    let width = params.monocycle_width_s;
    let required = 10.0 / width;
    if width.is_nan() || width <= 0.0 || fs < required {
        return Err(WaveformError::Undersampled {
            sample_rate: fs,
            width_s: width,
            required,
        });
    }
    let sigma = params.monocycle_sigma_s();
    let h = params.monocycle_half_samples() as i64;
    let raw: Vec<f64> = (-h..=h)
        .map(|k| {
            let t = k as f64 / fs;
            -t * (-t * t / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let peak = raw.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let samples = raw.iter().map(|v| Complex64::new(v / peak, 0.0)).collect();
    SampleStream::new(samples, fs, 0.0, -(h as f64) / fs)
}

/// Coded monocycle train: slot k (one PRI) carries the pulse scaled by chip
/// k (polarity coding) or delayed by the PPM shift when chip k is −1
/// (position coding). Pulses start at the beginning of their slot.
pub fn ds_uwb_train(
    code: &PnSequence,
    params: &RadarParams,
) -> Result<SampleStream, WaveformError> {
    let pulse = gaussian_monocycle(params)?;
    let pri = params.pri_samples();
    let shift = match params.uwb_coding {
        UwbCoding::Polarity => 0,
        UwbCoding::Position => params.ppm_shift_samples(),
    };
    let needed = pulse.len() + shift;
    if pri < needed {
        return Err(WaveformError::PriTooShort {
            pri_samples: pri,
            needed,
        });
    }
    let mut samples = vec![Complex64::new(0.0, 0.0); pri * code.len()];
    for (k, &chip) in code.chips().iter().enumerate() {
        let (start, sign) = match params.uwb_coding {
            UwbCoding::Polarity => (k * pri, f64::from(chip)),
            UwbCoding::Position => (k * pri + if chip < 0 { shift } else { 0 }, 1.0),
        };
        for (dst, p) in samples[start..start + pulse.len()]
            .iter_mut()
            .zip(pulse.samples())
        {
            *dst = p * sign;
        }
    }
    SampleStream::new(samples, params.uwb_sample_rate_hz, 0.0, 0.0)
}

/// Frequency-hop a stream: dwell block k (dwell_chips·samples_per_chip
/// samples) is multiplied by exp(j2π·f_k·t), f_k = (index − (M−1)/2)·spacing.
/// The hop schedule repeats if the stream is longer than one cycle.
pub fn fhss_synthesize(
    s: &SampleStream,
    hops: &HopSequence,
    channel_spacing_hz: f64,
    samples_per_chip: usize,
) -> Result<SampleStream, WaveformError> {
    let centre = (hops.num_channels as f64 - 1.0) / 2.0;
    let max_offset = centre * channel_spacing_hz.abs();
    let nyquist = s.sample_rate() / 2.0;
    if max_offset >= nyquist {
        return Err(WaveformError::AboveNyquist {
            offset_hz: max_offset,
            nyquist_hz: nyquist,
        });
    }
    let dwell = hops.dwell_chips * samples_per_chip.max(1);
    let out = s
        .samples()
        .iter()
        .enumerate()
        .map(|(n, &x)| {
            let idx = hops.channel_indices[(n / dwell) % hops.len()];
            let f = (idx as f64 - centre) * channel_spacing_hz;
            x * Complex64::from_polar(1.0, 2.0 * PI * f * s.time(n))
        })
        .collect();
    s.with_samples(out)
}
