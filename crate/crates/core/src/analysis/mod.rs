//! Encoder Jacobian spectra and filter visualization.

mod filters;
mod spectrum;

pub use filters::{export_filter_grid, write_pgm, FilterGrid, DEFAULT_HIGH, DEFAULT_LOW};
pub use spectrum::{average_spectrum, encoder_jacobian, SpectrumReport};
