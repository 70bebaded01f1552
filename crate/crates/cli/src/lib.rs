//! Scenario-driven experiment runner for the radsim radar simulator.
//!
//! | module     | role                                                    |
//! |------------|---------------------------------------------------------|
//! | `scenario` | TOML schema, default materialisation, validation        |
//! | `run`      | experiments, CSV rendering, manifest, output directory  |
//! | `error`    | error type and exit-code mapping                        |

pub mod error;
pub mod run;
pub mod scenario;

pub use error::CliError;
pub use run::{compare_modes, run, RunReport};
pub use scenario::{load_scenario, Overrides, Scenario};
