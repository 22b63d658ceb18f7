//! Polarisation response of a charged quantum dot in a birefringent
//! micropillar cavity.
//!
//! * [`model`]: weak-drive scattering matrix of the cavity–trion system.
//! * [`tomography`]: six-basis intensities, Stokes vectors, purity, fidelity.
//! * [`ensemble`]: averaging over spectral wandering and ground-state occupation.
//! * [`lindblad`]: truncated-Fock master-equation steady state, used to check the linear model.
//! * [`calibrate`]: parameter fits and operating-point search.
//! * [`io`]: run configuration and spectrum file formats.

pub mod calibrate;
pub mod ensemble;
pub mod error;
pub mod io;
pub mod lindblad;
pub mod model;
pub mod params;
pub mod polarisation;
pub mod quadrature;
pub mod tomography;

pub use error::{Error, Result};
pub use params::{Chirality, DeviceParams, GroundState};
pub use polarisation::{Basis, CoherenceMatrix, JonesVector, ScatteringMatrix};
