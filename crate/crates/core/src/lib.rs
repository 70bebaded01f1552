//! Sample-accurate simulation of two open-field imaging radars:
//!
//! - a pulsed DSSS-QPSK spread-spectrum radar (PN-coded QPSK carrier chopped
//!   by a PIN switch, despread against the same code at the receiver), and
//! - a DS-UWB impulse radar (polarity- or position-coded Gaussian monocycle
//!   train received by a correlator front end followed by sample & hold).
//!
//! Everything runs on complex baseband. RF and IF carriers exist only as
//! frequency tags plus explicit phase rotations applied by the channel.
//!
//! Module map:
//!
//! | module      | contents                                                   |
//! |-------------|------------------------------------------------------------|
//! | [`codes`]   | m-sequences, Gold codes, frequency-hop index sequences     |
//! | [`waveform`]| sample streams, radar parameters, transmit waveforms       |
//! | [`channel`] | brilliant-point targets, clutter, interference, noise      |
//! | [`receiver`]| gating, despreading, QPSK demod, correlator, sample & hold |
//! | [`imaging`] | range profiles, detection, RCS models and estimators       |
//! | [`sensor`]  | a complete Tx/channel/Rx chain for one radar mode          |

pub mod channel;
pub mod codes;
pub mod error;
pub mod imaging;
pub mod receiver;
pub mod rng;
pub mod sensor;
pub mod waveform;

pub use num_complex::Complex64;

pub use error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
