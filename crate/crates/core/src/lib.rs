//! Multi-sensor convective-system detection, tracking and flood early warning.
//!
//! Brightness-temperature, precipitation and surface-wind rasters are brought onto a
//! common grid, reduced to per-region indicators, and combined by a rule table into
//! warning levels. SAR change detection supplies flood masks used to score warnings.

pub mod config;
pub mod convection;
pub mod error;
pub mod floodmap;
pub mod fusion;
pub mod geogrid;
pub mod precip;
pub mod scenario;
pub mod time;
pub mod tracking;
pub mod wind;

pub use config::Config;
pub use error::{Error, Result};
pub use fusion::Level;
pub use geogrid::{GeoGrid, Geometry, GridStack, RegionBox, Variable};
