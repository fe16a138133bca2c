//! Rotordynamics vibration diagnostics.
//!
//! The crate is organised along the processing chain of a vibration data
//! collector:
//!
//! - [`signal`]: calibrated multi-channel time records, spectra and filters.
//! - [`rotor`]: system matrices `M q'' + (C + ΩG) q' + K q = F`, modal
//!   extraction (real and complex modes) and Newmark time integration.
//! - [`modal_io`]: versioned JSON export of modal models.
//! - [`frf`]: receptance synthesis by modal superposition, a direct-inversion
//!   reference and H1 estimation from excitation/response records.
//! - [`orbit`]: key-phasor detection, revolution slicing and shaft orbits.
//! - [`shock`]: transient capture, pulse parameters, limit overlays and decay
//!   windows.
//! - [`diagnosis`]: order spectra, overall levels, the rule-based fault
//!   classifier and the trend store.
//! - [`checks`]: end-to-end checks run by the self-test.
//! - [`corpus`]: seeded synthetic systems and fault cases used by the self-test.

pub mod checks;
pub mod corpus;
pub mod diagnosis;
pub mod error;
pub mod frf;
pub mod modal_io;
pub mod orbit;
pub mod rotor;
pub mod shock;
pub mod signal;

pub use error::{Error, Result};
