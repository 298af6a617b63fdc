//! Georeferenced raster model shared by every other module.
//!
//! Grids are plate-carrée, cell-center registered: `lat_min`/`lon_min` locate the
//! center of the south-west cell and row 0 is the northernmost row.

mod gsf;
mod region;
mod resample;

pub use gsf::{parse_gsf, read_gsf, to_gsf_string, write_gsf};
pub use region::{central_vietnam_regions, parse_regions, read_regions, RegionBox};
pub use resample::{resample_nn, subset};

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};

use crate::error::{Error, Result};

/// Default missing-value sentinel.
pub const NODATA: f64 = -9999.0;

/// Kilometres per degree of arc on the reference sphere.
pub const KM_PER_DEG: f64 = 111.195;

/// Sphere radius consistent with [`KM_PER_DEG`].
pub const EARTH_RADIUS_KM: f64 = KM_PER_DEG * 180.0 / std::f64::consts::PI;

/// Haversine distance in km.
pub fn great_circle_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * a.sqrt().min(1.0).asin()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variable {
    Bt,
    RainRate,
    RainAccum,
    WindSpeed,
    Nrcs,
    FloodMask,
    /// Backscatter change between two acquisitions, in dB.
    ChangeDb,
}

impl Variable {
    pub fn name(self) -> &'static str {
        match self {
            Variable::Bt => "BT",
            Variable::RainRate => "RAIN_RATE",
            Variable::RainAccum => "RAIN_ACCUM",
            Variable::WindSpeed => "WIND_SPEED",
            Variable::Nrcs => "NRCS",
            Variable::FloodMask => "FLOOD_MASK",
            Variable::ChangeDb => "CHANGE_DB",
        }
    }

    pub fn units(self) -> &'static str {
        match self {
            Variable::Bt => "K",
            Variable::RainRate => "mm/h",
            Variable::RainAccum => "mm",
            Variable::WindSpeed => "m/s",
            Variable::Nrcs => "linear",
            Variable::FloodMask => "bool",
            Variable::ChangeDb => "dB",
        }
    }

    /// Whether a finite value is physically admissible for this variable.
    pub fn admits(self, v: f64) -> bool {
        match self {
            Variable::Bt => (100.0..=400.0).contains(&v),
            Variable::RainRate | Variable::RainAccum => v >= 0.0,
            Variable::WindSpeed => (0.0..=100.0).contains(&v),
            Variable::Nrcs => v >= 0.0,
            Variable::FloodMask => v == 0.0 || v == 1.0,
            Variable::ChangeDb => true,
        }
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variable {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s {
            "BT" => Variable::Bt,
            "RAIN_RATE" => Variable::RainRate,
            "RAIN_ACCUM" => Variable::RainAccum,
            "WIND_SPEED" => Variable::WindSpeed,
            "NRCS" => Variable::Nrcs,
            "FLOOD_MASK" => Variable::FloodMask,
            "CHANGE_DB" => Variable::ChangeDb,
            _ => return Err(format!("unknown variable {s:?}")),
        })
    }
}

/// Placement and shape of a regular lat/lon grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub lat_min: f64,
    pub lon_min: f64,
    pub dlat: f64,
    pub dlon: f64,
    pub nrows: usize,
    pub ncols: usize,
}

impl Geometry {
    pub fn new(
        lat_min: f64,
        lon_min: f64,
        dlat: f64,
        dlon: f64,
        nrows: usize,
        ncols: usize,
    ) -> Result<Self> {
        let g = Self {
            lat_min,
            lon_min,
            dlat,
            dlon,
            nrows,
            ncols,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nrows == 0 || self.ncols == 0 {
            return Err(Error::InvalidGrid(format!(
                "shape {}x{} has no cells",
                self.nrows, self.ncols
            )));
        }
        if !(self.dlat > 0.0 && self.dlat.is_finite() && self.dlon > 0.0 && self.dlon.is_finite())
        {
            return Err(Error::InvalidGrid(format!(
                "spacing dlat={} dlon={} must be positive",
                self.dlat, self.dlon
            )));
        }
        if !self.lat_min.is_finite() || !self.lon_min.is_finite() {
            return Err(Error::InvalidGrid("non-finite origin".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nrows * self.ncols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.ncols + col
    }

    /// Latitude of the center of `row` (row 0 is north).
    pub fn lat(&self, row: usize) -> f64 {
        self.lat_min + (self.nrows - 1 - row) as f64 * self.dlat
    }

    pub fn lon(&self, col: usize) -> f64 {
        self.lon_min + col as f64 * self.dlon
    }

    /// Center latitude of the northernmost row.
    pub fn lat_max(&self) -> f64 {
        self.lat(0)
    }

    pub fn lon_max(&self) -> f64 {
        self.lon(self.ncols - 1)
    }

    /// Outer cell edges of the grid.
    pub fn extent(&self) -> RegionBox {
        RegionBox {
            name: "extent".into(),
            lat_min: self.lat_min - self.dlat / 2.0,
            lat_max: self.lat_max() + self.dlat / 2.0,
            lon_min: self.lon_min - self.dlon / 2.0,
            lon_max: self.lon_max() + self.dlon / 2.0,
        }
    }

    /// Rows whose center latitude lies in `[lo, hi]`, as an inclusive north-to-south range.
    pub(crate) fn rows_within(&self, lo: f64, hi: f64) -> Option<(usize, usize)> {
        let rows: Vec<usize> = (0..self.nrows)
            .filter(|&r| {
                let lat = self.lat(r);
                lat >= lo && lat <= hi
            })
            .collect();
        Some((*rows.first()?, *rows.last()?))
    }

    pub(crate) fn cols_within(&self, lo: f64, hi: f64) -> Option<(usize, usize)> {
        let cols: Vec<usize> = (0..self.ncols)
            .filter(|&c| {
                let lon = self.lon(c);
                lon >= lo && lon <= hi
            })
            .collect();
        Some((*cols.first()?, *cols.last()?))
    }

    /// `(row, col)` of every cell whose center lies inside `region` (edges inclusive),
    /// in raster order.
    pub fn cells_in(&self, region: &RegionBox) -> Vec<(usize, usize)> {
        let (Some((r0, r1)), Some((c0, c1))) = (
            self.rows_within(region.lat_min, region.lat_max),
            self.cols_within(region.lon_min, region.lon_max),
        ) else {
            return Vec::new();
        };
        (r0..=r1)
            .flat_map(|r| (c0..=c1).map(move |c| (r, c)))
            .collect()
    }

    /// Cell area in km² on the spherical-degree approximation.
    pub fn cell_area_km2(&self, row: usize) -> f64 {
        (self.dlat * KM_PER_DEG) * (self.dlon * KM_PER_DEG * self.lat(row).to_radians().cos())
    }
}

/// One raster of a single variable at one timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct GeoGrid {
    variable: Variable,
    time: DateTime<Utc>,
    geometry: Geometry,
    values: Vec<f64>,
    nodata: f64,
}

impl GeoGrid {
    /// Builds a grid, checking shape and the variable's physical bounds.
    /// Cells equal to `nodata` are missing; every other value must be finite.
    pub fn new(
        variable: Variable,
        time: DateTime<Utc>,
        geometry: Geometry,
        values: Vec<f64>,
        nodata: f64,
    ) -> Result<Self> {
        geometry.validate()?;
        if !nodata.is_finite() {
            return Err(Error::InvalidGrid("nodata sentinel must be finite".into()));
        }
        if values.len() != geometry.len() {
            return Err(Error::InvalidGrid(format!(
                "{} values for a {}x{} grid",
                values.len(),
                geometry.nrows,
                geometry.ncols
            )));
        }
        for (i, &v) in values.iter().enumerate() {
            if v == nodata {
                continue;
            }
            if !v.is_finite() || !variable.admits(v) {
                return Err(Error::InvalidGrid(format!(
                    "{variable} value {v} at row {} col {} is outside its physical range",
                    i / geometry.ncols,
                    i % geometry.ncols
                )));
            }
        }
        Ok(Self {
            variable,
            time,
            geometry,
            values,
            nodata,
        })
    }

    /// Grid filled with one value.
    pub fn filled(
        variable: Variable,
        time: DateTime<Utc>,
        geometry: Geometry,
        value: f64,
    ) -> Result<Self> {
        Self::new(variable, time, geometry, vec![value; geometry.len()], NODATA)
    }

    pub fn variable(&self) -> Variable {
        self.variable
    }

    pub fn units(&self) -> &'static str {
        self.variable.units()
    }

    pub fn time(&self) -> DateTime<Utc> {
        self.time
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nodata(&self) -> f64 {
        self.nodata
    }

    pub fn is_nodata(&self, v: f64) -> bool {
        v == self.nodata
    }

    /// Value at `(row, col)`, `None` when missing.
    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        let v = self.values[self.geometry.index(row, col)];
        (v != self.nodata).then_some(v)
    }

    /// Iterator over the non-missing values.
    pub fn valid_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().copied().filter(move |&v| v != self.nodata)
    }

    pub fn expect_variable(&self, expected: Variable) -> Result<()> {
        if self.variable != expected {
            return Err(Error::WrongVariable {
                expected,
                found: self.variable,
            });
        }
        Ok(())
    }

    /// Same time and geometry, new variable and values.
    pub fn derive(&self, variable: Variable, values: Vec<f64>) -> Result<GeoGrid> {
        GeoGrid::new(variable, self.time, self.geometry, values, self.nodata)
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// A time-ordered sequence of grids of one variable on one geometry.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GridStack {
    frames: Vec<GeoGrid>,
}

impl GridStack {
    pub fn new(frames: Vec<GeoGrid>) -> Result<Self> {
        let mut stack = GridStack::default();
        for f in frames {
            stack.push(f)?;
        }
        Ok(stack)
    }

    pub fn push(&mut self, frame: GeoGrid) -> Result<()> {
        if let Some(last) = self.frames.last() {
            let frame_no = self.frames.len() + 1;
            if frame.time <= last.time {
                return Err(Error::Ordering {
                    frame: frame_no,
                    prev: last.time,
                    next: frame.time,
                });
            }
            if frame.geometry != last.geometry {
                return Err(Error::GeometryMismatch(format!(
                    "frame {frame_no} geometry {:?} differs from {:?}",
                    frame.geometry, last.geometry
                )));
            }
            if frame.variable != last.variable {
                return Err(Error::GeometryMismatch(format!(
                    "frame {frame_no} holds {} but the stack holds {}",
                    frame.variable, last.variable
                )));
            }
        }
        self.frames.push(frame);
        Ok(())
    }

    pub fn frames(&self) -> &[GeoGrid] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn geometry(&self) -> Option<&Geometry> {
        self.frames.first().map(|f| &f.geometry)
    }

    pub fn variable(&self) -> Option<Variable> {
        self.frames.first().map(|f| f.variable)
    }

    pub fn into_frames(self) -> Vec<GeoGrid> {
        self.frames
    }
}
