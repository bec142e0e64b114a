//! Forward models: grating mirrors, the lumped lossy cavity and sampled spectra.

pub mod cavity;
pub mod grating;
pub mod trace;

pub use cavity::{
    airy_finesse, airy_response, cavity_spectrum, cavity_spectrum_side_2, exact_on_resonance,
    length_for_fsr, on_resonance_closed_form, on_resonance_values, stopband_spectrum, CavityModel,
    OnResonance, DEFAULT_GROUP_INDEX,
};
pub use grating::{
    grating_coupling_from_peak, grating_response, grating_stopband, uniform_grating_response,
    GratingSpec, MirrorResponse,
};
pub use trace::{Channel, SpectrumTrace};
