//! One radar mode wired end to end: transmit waveform, channel, receive
//! chain and range profile.
//!
//! The NB sensor sends `pulses` gated DSSS-QPSK pulses per sweep (I on the
//! code, Q on the code rotated by half a period) and pulse-compresses each
//! PRI against the chips it actually transmitted. The UWB sensor sends one
//! code period of coded monocycles per sweep, folds the received train onto a
//! single PRI with the code weights, and correlates against the analytic
//! monocycle.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{propagate, Polarization, Scene};
use crate::codes::PnSequence;
use crate::error::{Result, WaveformError};
use crate::imaging::{range_profile, DetectionSettings, RangeGate, RangeProfile, RcsMode};
use crate::receiver::{correlate, fold_pulses, quadrature_template, rx_gate, CorrelationStream};
use crate::waveform::{
    ds_uwb_train, gate_pulse, gaussian_monocycle, qpsk_baseband, Mode, RadarParams, SampleStream,
    UwbCoding,
};
use crate::SPEED_OF_LIGHT;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceiverSettings {
    /// PIN-switch blank at the start of every PRI; `None` keeps the receiver
    /// open while transmitting (leakage then shows up at zero range).
    pub blank_width_s: Option<f64>,
    /// NB pulses integrated per sweep. UWB sweeps always span one code period.
    pub pulses: usize,
    /// Margin added on both sides of the target's true range extent when
    /// picking its detections; `None` means half the range resolution.
    pub gate_margin_m: Option<f64>,
    pub detection: DetectionSettings,
}

impl Default for ReceiverSettings {
    fn default() -> Self {
        Self {
            blank_width_s: None,
            pulses: 1,
            gate_margin_m: None,
            detection: DetectionSettings::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Sensor {
    params: RadarParams,
    code: PnSequence,
    settings: ReceiverSettings,
    tx: SampleStream,
    templates: Vec<Vec<Complex64>>,
    slots: Vec<(f64, usize)>,
}

impl Sensor {
    pub fn new(params: RadarParams, code: PnSequence, settings: ReceiverSettings) -> Result<Self> {
        params.validate()?;
        if settings.pulses == 0 {
            return Err(WaveformError::InvalidParam {
                field: "pulses",
                reason: "must be at least 1".into(),
            }
            .into());
        }
        if let Some(m) = settings.gate_margin_m {
            if !(m.is_finite() && m >= 0.0) {
                return Err(WaveformError::InvalidParam {
                    field: "gate_margin_m",
                    reason: format!("must be >= 0, got {m}"),
                }
                .into());
            }
        }
        if let Some(blank) = settings.blank_width_s {
            // validate against a one-PRI dummy so misconfiguration fails before any synthesis
            let probe = SampleStream::zeros(1, params.sample_rate(), 0.0)?;
            rx_gate(&probe, &params, blank)?;
        }
        let mut settings = settings;
        if settings.detection.sidelobe_guard_m.is_none() {
            // NB pulse compression leaves range sidelobes across the whole
            // pulse extent; the UWB envelope has none.
            settings.detection.sidelobe_guard_m = Some(match params.mode {
                Mode::NbDsss => SPEED_OF_LIGHT * params.pulse_width_s / 2.0,
                Mode::DsUwb => 0.0,
            });
        }
        if settings.detection.min_separation_m.is_none() {
            settings.detection.min_separation_m = Some(0.5 * params.range_resolution_m());
        }
        let pri = params.pri_samples();
        let (tx, templates, slots) = match params.mode {
            Mode::NbDsss => {
                let total = pri * settings.pulses;
                let spc = params.samples_per_chip;
                let chips = total.div_ceil(spc);
                let half = code.len() / 2;
                let i: Vec<i8> = (0..chips).map(|j| code.chip(j)).collect();
                let q: Vec<i8> = (0..chips).map(|j| code.chip(j + half)).collect();
                let mut samples = qpsk_baseband(&i, &q, &params)?.into_samples();
                samples.truncate(total);
                let s = SampleStream::new(
                    samples,
                    params.sample_rate(),
                    params.stream_carrier_hz(),
                    0.0,
                )?;
                let tx = gate_pulse(&s, &params)?;
                let width = params.pulse_samples();
                let templates = (0..settings.pulses)
                    .map(|k| tx.samples()[k * pri..k * pri + width].to_vec())
                    .collect();
                (tx, templates, Vec::new())
            }
            Mode::DsUwb => {
                let tx = ds_uwb_train(&code, &params)?;
                let pulse = gaussian_monocycle(&params)?;
                let template = quadrature_template(&pulse).into_samples();
                let shift = params.ppm_shift_samples();
                let slots = code
                    .chips()
                    .iter()
                    .map(|&c| match params.uwb_coding {
                        UwbCoding::Polarity => (f64::from(c), 0),
                        UwbCoding::Position => (1.0, if c < 0 { shift } else { 0 }),
                    })
                    .collect();
                (tx, vec![template], slots)
            }
        };
        Ok(Self {
            params,
            code,
            settings,
            tx,
            templates,
            slots,
        })
    }

    pub fn params(&self) -> &RadarParams {
        &self.params
    }

    pub fn code(&self) -> &PnSequence {
        &self.code
    }

    pub fn settings(&self) -> &ReceiverSettings {
        &self.settings
    }

    /// The transmitted stream for one sweep.
    pub fn tx(&self) -> &SampleStream {
        &self.tx
    }

    pub fn rcs_mode(&self) -> RcsMode {
        match self.params.mode {
            Mode::NbDsss => RcsMode::Nb,
            Mode::DsUwb => RcsMode::Uwb,
        }
    }

    /// First range outside the receiver blank.
    pub fn min_range_m(&self) -> f64 {
        self.settings
            .blank_width_s
            .map_or(0.0, |b| SPEED_OF_LIGHT * b / 2.0)
    }

    pub fn gate_margin_m(&self) -> f64 {
        self.settings
            .gate_margin_m
            .unwrap_or(0.5 * self.params.range_resolution_m())
    }

    /// Range gate around the scene's target: its true extent plus the margin.
    pub fn target_gate(&self, scene: &Scene) -> RangeGate {
        let m = self.gate_margin_m();
        RangeGate {
            lo_m: scene.target.min_range_m() - m,
            hi_m: scene.target.max_range_m() + m,
        }
    }

    /// Gate around a single known range.
    pub fn gate_at(&self, range_m: f64) -> RangeGate {
        let m = self.gate_margin_m();
        RangeGate {
            lo_m: range_m - m,
            hi_m: range_m + m,
        }
    }

    /// Receive chain: optional blanking, then pulse compression. Lag n of
    /// the output is a round-trip delay of n samples.
    pub fn receive(&self, rx: &SampleStream) -> Result<CorrelationStream> {
        let rx = match self.settings.blank_width_s {
            Some(b) => rx_gate(rx, &self.params, b)?,
            None => rx.clone(),
        };
        let pri = self.params.pri_samples();
        let zero = Complex64::new(0.0, 0.0);
        let values = match self.params.mode {
            Mode::NbDsss => {
                let x = rx.samples();
                let mut acc = vec![zero; pri];
                for (k, t) in self.templates.iter().enumerate() {
                    let start = (k * pri).min(x.len());
                    let end = (start + pri + t.len() - 1).min(x.len());
                    let mut seg = x[start..end].to_vec();
                    seg.resize(pri + t.len() - 1, zero);
                    for (a, c) in acc.iter_mut().zip(correlate(&seg, t)) {
                        *a += c;
                    }
                }
                acc
            }
            Mode::DsUwb => {
                let t = &self.templates[0];
                let mut z = fold_pulses(&rx, &self.slots, pri)?.into_samples();
                z.resize(pri + t.len() - 1, zero);
                correlate(&z, t)
            }
        };
        Ok(CorrelationStream {
            values,
            lag_resolution_s: 1.0 / rx.sample_rate(),
            t0_s: 0.0,
        })
    }

    /// Run one sweep through the scene and form its range profile.
    pub fn profile(
        &self,
        scene: &Scene,
        pol: Polarization,
        sweep_index: u64,
    ) -> Result<RangeProfile> {
        scene.validate()?;
        let rx = propagate(&self.tx, scene, &self.params, pol, sweep_index)?;
        let c = self.receive(&rx)?;
        Ok(range_profile(&c, self.min_range_m(), pol, sweep_index)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{BrilliantPoint, TargetModel};
    use crate::codes::{gen_mseq, Taps};
    use crate::imaging::detect_scatterers;

    fn code() -> PnSequence {
        gen_mseq(&Taps::primitive(7).unwrap(), 1).unwrap()
    }

    #[test]
    fn nb_transmit_is_gated_unit_power_qpsk() {
        let p = RadarParams::nb_default();
        let s = Sensor::new(p.clone(), code(), ReceiverSettings::default()).unwrap();
        let x = s.tx().samples();
        assert_eq!(x.len(), p.pri_samples());
        assert!(x[..p.pulse_samples()]
            .iter()
            .all(|z| (z.norm_sqr() - 1.0).abs() < 1e-12));
        assert!(x[p.pulse_samples()..].iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn single_point_lands_in_its_bin() {
        for (params, range) in [
            (RadarParams::nb_default(), 750.0),
            (RadarParams::uwb_default(), 7.3),
        ] {
            let s = Sensor::new(params, code(), ReceiverSettings::default()).unwrap();
            let scene = Scene::clean(
                TargetModel::new(vec![BrilliantPoint::sphere(1.0, range)]).unwrap(),
                1,
            );
            let prof = s.profile(&scene, Polarization::VV, 0).unwrap();
            let dets = detect_scatterers(&prof, &s.settings().detection);
            assert_eq!(dets.len(), 1, "{dets:?}");
            assert!(
                (dets[0].range_m - range).abs() <= prof.bin_width_m,
                "{} vs {range}",
                dets[0].range_m
            );
        }
    }

    #[test]
    fn blank_must_cover_pulse() {
        let settings = ReceiverSettings {
            blank_width_s: Some(1e-6),
            ..Default::default()
        };
        assert!(Sensor::new(RadarParams::nb_default(), code(), settings).is_err());
    }
}
