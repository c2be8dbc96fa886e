//! File formats, configuration, the acceptance suite and the command
//! implementations behind the `hqmap` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod commands;
pub mod config;
pub mod error;
pub mod formats;

use hqmap_core::catalog::NormalFormId;
use hqmap_core::hypersurfaces::SourcePoint;
use hqmap_core::topology_lab::{sweep_point, SweepRecord};
use rayon::prelude::*;

pub use error::CliError;

/// [`hqmap_core::topology_lab::orbit_sweep`] with points evaluated in
/// parallel; records come back in grid order.
pub fn parallel_sweep(base: &NormalFormId, grid: &[SourcePoint]) -> Result<Vec<SweepRecord>, CliError> {
    base.validate()?;
    Ok(grid.par_iter().map(|p| sweep_point(base, *p)).collect::<Result<Vec<_>, _>>()?)
}
