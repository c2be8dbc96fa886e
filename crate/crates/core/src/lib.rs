#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]
extern crate alloc;

pub mod algebra;
pub mod catalog;
pub mod error;
pub mod group_action;
pub mod hypersurfaces;
pub mod isotropies;
pub mod laws;
pub mod normalization;
pub mod optimize;
pub mod topology_lab;

pub use error::{Error, Result};
