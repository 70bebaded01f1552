use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised while generating spreading and hopping sequences.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodeError {
    #[error("polynomial degree {0} outside supported range 2..=24")]
    DegreeOutOfRange(u32),
    #[error("tap list must contain the constant term 0 and at least one other exponent")]
    MalformedTaps,
    #[error("LFSR seed is all zeros; the register would lock up")]
    ZeroSeed,
    #[error("seed {seed:#x} does not fit in a degree-{degree} register")]
    SeedTooWide { seed: u32, degree: u32 },
    #[error("Gold pair degrees differ ({0} vs {1})")]
    DegreeMismatch(u32, u32),
    #[error("Gold codes are undefined for degree {0} (multiple of 4)")]
    GoldDegreeMultipleOfFour(u32),
    #[error("Gold shift {shift} outside 0..{len}")]
    ShiftOutOfRange { shift: usize, len: usize },
    #[error("chip value {0} is not +1 or -1")]
    NonBipolarChip(i8),
    #[error("empty chip sequence")]
    EmptySequence,
    #[error("frequency hopping needs at least 2 channels, got {0}")]
    TooFewChannels(usize),
    #[error("dwell must be at least one chip")]
    ZeroDwell,
}

/// Errors raised by waveform synthesis.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum WaveformError {
    #[error("sample rate must be positive and finite, got {0}")]
    BadSampleRate(f64),
    #[error("sample {0} is not finite")]
    NonFiniteSample(usize),
    #[error("sample rates differ ({0} Hz vs {1} Hz)")]
    RateMismatch(f64, f64),
    #[error("stream lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("no data bits to spread")]
    EmptyData,
    #[error("chips_per_bit {chips_per_bit} must lie in 1..={code_len}")]
    ChipsPerBit {
        chips_per_bit: usize,
        code_len: usize,
    },
    #[error("pulse width {pulse_width_s} s must be shorter than PRI {pri_s} s")]
    PulseNotShorterThanPri { pulse_width_s: f64, pri_s: f64 },
    #[error("stream lasts {duration_s} s, shorter than one PRI ({pri_s} s)")]
    StreamShorterThanPri { duration_s: f64, pri_s: f64 },
    #[error(
        "sample rate {sample_rate} Hz undersamples a {width_s} s monocycle (need >= {required} Hz)"
    )]
    Undersampled {
        sample_rate: f64,
        width_s: f64,
        required: f64,
    },
    #[error("PRI of {pri_samples} samples cannot hold a {needed} sample pulse slot")]
    PriTooShort { pri_samples: usize, needed: usize },
    #[error("hop offset {offset_hz} Hz exceeds Nyquist ({nyquist_hz} Hz)")]
    AboveNyquist { offset_hz: f64, nyquist_hz: f64 },
    #[error("invalid radar parameter {field}: {reason}")]
    InvalidParam { field: &'static str, reason: String },
}

/// Errors raised by the propagation channel.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("{what} #{index} at {range_m} m lies beyond the unambiguous range {max_m} m")]
    BeyondUnambiguousRange {
        what: &'static str,
        index: usize,
        range_m: f64,
        max_m: f64,
    },
    #[error("invalid brilliant point: {0}")]
    InvalidPoint(String),
    #[error("target model has no points")]
    EmptyTarget,
    #[error("mean clutter cross section must be non-negative, got {0}")]
    NegativeMeanSigma(f64),
    #[error("clutter range window [{0}, {1}] is invalid")]
    BadClutterWindow(f64, f64),
    #[error("interferer offset {offset_hz} Hz exceeds Nyquist ({nyquist_hz} Hz)")]
    InterfererAboveNyquist { offset_hz: f64, nyquist_hz: f64 },
    #[error("{field} must be non-negative and finite, got {value}")]
    NegativePower { field: &'static str, value: f64 },
    #[error("transmit stream ({duration_s} s) shorter than one PRI ({pri_s} s)")]
    StreamShorterThanPri { duration_s: f64, pri_s: f64 },
    #[error(transparent)]
    Waveform(#[from] WaveformError),
}

/// Errors raised by the receive chains.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReceiverError {
    #[error("blank width {blank_s} s must be at least the pulse width {pulse_width_s} s")]
    BlankShorterThanPulse { blank_s: f64, pulse_width_s: f64 },
    #[error("blank width {blank_s} s >= PRI {pri_s} s: the receiver would never open")]
    BlankCoversPri { blank_s: f64, pri_s: f64 },
    #[error("stream of {len} samples is shorter than one {symbol} sample symbol")]
    ShorterThanSymbol { len: usize, symbol: usize },
    #[error("template ({template} samples) is longer than the received stream ({rx} samples)")]
    TemplateTooLong { template: usize, rx: usize },
    #[error("sample-and-hold gate #{index} at {time_s} s is outside the correlation span [{start_s}, {end_s}] s")]
    GateOutOfSpan {
        index: usize,
        time_s: f64,
        start_s: f64,
        end_s: f64,
    },
    #[error("code lag {lag} outside 0..{len}")]
    LagOutOfRange { lag: usize, len: usize },
    #[error("chips_per_bit must be at least 1")]
    ZeroChipsPerBit,
    #[error(transparent)]
    Waveform(#[from] WaveformError),
}

/// Errors raised while forming images and RCS estimates.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ImagingError {
    #[error("correlation stream is empty")]
    EmptyStream,
    #[error("reference peak near {range_m} m is not detectable 10 dB above the noise floor")]
    ReferenceUndetectable { range_m: f64 },
    #[error("no scatterer detected inside the target gate [{0} m, {1} m]")]
    NoDetection(f64, f64),
    #[error("reference cross section must be positive, got {0}")]
    BadReference(f64),
    #[error("sweep series needs at least one sweep, got {0}")]
    TooFewSweeps(usize),
    #[error("calibration was made in {calibrated} mode but the sensor runs in {sensor} mode")]
    ModeMismatch {
        calibrated: &'static str,
        sensor: &'static str,
    },
    #[error("azimuth span [{0} deg, {1} deg] is empty or not finite")]
    BadAzimuthSpan(f64, f64),
    #[error(
        "azimuth step {step_deg} deg must be positive and not exceed beamwidth {beamwidth_deg} deg"
    )]
    BadAzimuthStep { step_deg: f64, beamwidth_deg: f64 },
}

/// Top-level error. The variant names the module that failed.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("codes: {0}")]
    Codes(#[from] CodeError),
    #[error("waveform: {0}")]
    Waveform(#[from] WaveformError),
    #[error("channel: {0}")]
    Channel(#[from] ChannelError),
    #[error("receiver: {0}")]
    Receiver(#[from] ReceiverError),
    #[error("imaging: {0}")]
    Imaging(#[from] ImagingError),
}
