//! The DEER sequence: Hamiltonian segments, coherent and dissipative propagation, and
//! tumbling-averaged spectra.

pub mod explicit;
pub mod lindblad;
pub mod model;
pub mod sequence;
pub mod spectrum;
pub mod unitary;

pub use explicit::{run_explicit, ExplicitOptions, ExplicitOutcome};
pub use lindblad::{run_lindblad, run_lindblad_detailed, LindbladRoute, LindbladStats};
pub use model::{build_segments, channels, ChannelSegments, Couplings, FlipFlop, Mode, Segment, SystemModel};
pub use sequence::{NoiseParams, SequenceParams};
pub use spectrum::{
    linear_grid, spectrum, spectrum_with, Spectrum, SpectrumMeta, SpectrumOptions, Tumble, TumbleMode, TumbleSampling,
};
pub use unitary::{run_unitary, run_unitary_channels, UnitaryOutcome};
