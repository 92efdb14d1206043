//! Measurement families: grids, filters, modulators, response matrices and
//! synthetic measurements.

pub mod filter;
pub mod grid;
pub mod measure;
pub mod modulator;
pub mod operator;
pub mod presets;

pub use filter::{default_fine_grid, filter_gram, orthogonalize_filters, FilterSpec};
pub use grid::{RegularLayout, SamplingGrid};
pub use measure::{apply_operator, draw_noise, norm, synthesize_measurement, Measurement, NoiseSpec, Source, SpikeTrain};
pub use modulator::{Modulator, ModulatorSpec};
pub use operator::{assemble_response, FamilyKind, OperatorFamily, ResponseMatrix};
