//! SAR change detection and warning verification.

use chrono::{DateTime, Utc};

use crate::convection::label::components;
use crate::error::{Error, Result};
use crate::fusion::{Level, WarningSummary};
use crate::geogrid::{GeoGrid, RegionBox, Variable};

/// Default darkening threshold in dB.
pub const THRESHOLD_DB: f64 = -3.0;
/// Smallest flooded patch kept, in pixels.
pub const MIN_REGION_PX: usize = 8;
/// Flooded fraction at which a region counts as flooded.
pub const F_FLOOD: f64 = 0.01;

/// Log-ratio change image.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRatio {
    /// `10·log10(flood/reference)` in dB, stamped with the flood time.
    pub grid: GeoGrid,
    pub reference_time: DateTime<Utc>,
    /// Cells where either scene was zero or negative; stored as nodata.
    pub nonpositive: usize,
}

/// `10·log10(flood/reference)` per cell.
pub fn log_ratio_db(flood: &GeoGrid, reference: &GeoGrid) -> Result<LogRatio> {
    flood.expect_variable(Variable::Nrcs)?;
    reference.expect_variable(Variable::Nrcs)?;
    if flood.geometry() != reference.geometry() {
        return Err(Error::GeometryMismatch(
            "flood and reference scenes are on different grids".into(),
        ));
    }
    let nodata = flood.nodata();
    let mut nonpositive = 0;
    let values = flood
        .values()
        .iter()
        .zip(reference.values())
        .map(|(&f, &r)| {
            if flood.is_nodata(f) || reference.is_nodata(r) {
                nodata
            } else if f <= 0.0 || r <= 0.0 {
                nonpositive += 1;
                nodata
            } else {
                10.0 * (f / r).log10()
            }
        })
        .collect();
    Ok(LogRatio {
        grid: flood.derive(Variable::ChangeDb, values)?,
        reference_time: reference.time(),
        nonpositive,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FloodMask {
    /// FLOOD_MASK grid of 0/1, stamped with the flood scene time.
    pub grid: GeoGrid,
    /// Known when the mask came from a log-ratio image.
    pub reference_time: Option<DateTime<Utc>>,
}

impl FloodMask {
    /// Wraps an existing 0/1 mask, for instance one read from disk.
    pub fn from_grid(grid: GeoGrid) -> Result<Self> {
        grid.expect_variable(Variable::FloodMask)?;
        Ok(Self {
            grid,
            reference_time: None,
        })
    }

    pub fn flood_time(&self) -> DateTime<Utc> {
        self.grid.time()
    }

    pub fn flooded_cells(&self) -> usize {
        self.grid.valid_values().filter(|&v| v == 1.0).count()
    }
}

/// Cells darkened by at least `threshold_db`, in 8-connected patches of at least
/// `min_region_px` pixels. Unknown ratios stay nodata.
pub fn flood_mask(ratio: &LogRatio, threshold_db: f64, min_region_px: usize) -> Result<FloodMask> {
    let grid = &ratio.grid;
    grid.expect_variable(Variable::ChangeDb)?;
    if !(threshold_db.is_finite() && threshold_db < 0.0) {
        return Err(Error::OutOfRange {
            what: "flood threshold (dB)",
            value: threshold_db,
        });
    }
    if ratio.reference_time >= grid.time() {
        return Err(Error::InvalidGrid(
            "the reference scene must precede the flood scene".into(),
        ));
    }
    let g = grid.geometry();
    let dark: Vec<bool> = grid
        .values()
        .iter()
        .map(|&v| !grid.is_nodata(v) && v <= threshold_db)
        .collect();
    let mut values: Vec<f64> = grid
        .values()
        .iter()
        .map(|&v| if grid.is_nodata(v) { grid.nodata() } else { 0.0 })
        .collect();
    for comp in components(&dark, g.nrows, g.ncols) {
        if comp.len() >= min_region_px {
            for (r, c) in comp {
                values[g.index(r, c)] = 1.0;
            }
        }
    }
    Ok(FloodMask {
        grid: grid.derive(Variable::FloodMask, values)?,
        reference_time: Some(ratio.reference_time),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Hit,
    Miss,
    FalseAlarm,
    CorrectNegative,
}

impl Outcome {
    pub fn name(self) -> &'static str {
        match self {
            Outcome::Hit => "hit",
            Outcome::Miss => "miss",
            Outcome::FalseAlarm => "false_alarm",
            Outcome::CorrectNegative => "correct_negative",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionOutcome {
    pub region: String,
    pub flooded_fraction: f64,
    pub flooded: bool,
    pub warned: bool,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Validation {
    pub regions: Vec<RegionOutcome>,
    pub hits: usize,
    pub misses: usize,
    pub false_alarms: usize,
    pub correct_negatives: usize,
}

impl Validation {
    /// Probability of detection; undefined without flooded regions.
    pub fn pod(&self) -> Option<f64> {
        let d = self.hits + self.misses;
        (d > 0).then(|| self.hits as f64 / d as f64)
    }

    /// False-alarm ratio; undefined without warned regions.
    pub fn far(&self) -> Option<f64> {
        let d = self.hits + self.false_alarms;
        (d > 0).then(|| self.false_alarms as f64 / d as f64)
    }
}

/// Scores warnings issued up to the flood scene against the flood mask.
///
/// A region is warned if some report at or above WARNING was issued no later than
/// the flood time (and after the reference scene, when that is known). A region is
/// flooded when at least `f_flood` of its observed cells are flagged.
pub fn validate(
    warnings: &[WarningSummary],
    mask: &FloodMask,
    regions: &[RegionBox],
    f_flood: f64,
) -> Result<Validation> {
    if !(f_flood > 0.0 && f_flood <= 1.0) {
        return Err(Error::OutOfRange {
            what: "flooded fraction",
            value: f_flood,
        });
    }
    let flood_time = mask.flood_time();
    let in_period: Vec<&WarningSummary> = warnings
        .iter()
        .filter(|w| w.epoch <= flood_time && mask.reference_time.is_none_or(|r| w.epoch > r))
        .collect();
    if in_period.is_empty() {
        return Err(Error::NoWarnings);
    }
    let g = mask.grid.geometry();
    let mut v = Validation {
        regions: Vec::with_capacity(regions.len()),
        hits: 0,
        misses: 0,
        false_alarms: 0,
        correct_negatives: 0,
    };
    for region in regions {
        let observed: Vec<f64> = g
            .cells_in(region)
            .into_iter()
            .filter_map(|(r, c)| mask.grid.get(r, c))
            .collect();
        let fraction = if observed.is_empty() {
            0.0
        } else {
            observed.iter().filter(|&&x| x == 1.0).count() as f64 / observed.len() as f64
        };
        let flooded = fraction >= f_flood;
        let warned = in_period
            .iter()
            .any(|w| w.region == region.name && w.level >= Level::Warning);
        let outcome = match (warned, flooded) {
            (true, true) => {
                v.hits += 1;
                Outcome::Hit
            }
            (false, true) => {
                v.misses += 1;
                Outcome::Miss
            }
            (true, false) => {
                v.false_alarms += 1;
                Outcome::FalseAlarm
            }
            (false, false) => {
                v.correct_negatives += 1;
                Outcome::CorrectNegative
            }
        };
        v.regions.push(RegionOutcome {
            region: region.name.clone(),
            flooded_fraction: fraction,
            flooded,
            warned,
            outcome,
        });
    }
    Ok(v)
}

pub const VALIDATION_CSV_HEADER: &str = "region,flooded,warned,outcome";

pub fn validation_to_csv(v: &Validation) -> String {
    let mut out = String::from(VALIDATION_CSV_HEADER);
    out.push('\n');
    for r in &v.regions {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.region,
            u8::from(r.flooded),
            u8::from(r.warned),
            r.outcome.name()
        ));
    }
    out
}
