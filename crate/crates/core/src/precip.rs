//! Rain-rate accumulation, heavy-rain flags and per-region persistence.
//!
//! A rain-rate frame stamped `t` stands for the interval `(t - Δt, t]`, where `Δt`
//! is the stack cadence. Frames absent from the cadence and nodata cells contribute
//! nothing and are reported through a missing fraction.

use std::collections::BTreeMap;

use chrono::{DateTime, Duration, Utc};

use crate::error::{Error, Result};
use crate::geogrid::{resample_nn, GeoGrid, GridStack, RegionBox, Variable};
use crate::time::{format_time, TimeWindow};

/// Default heavy-rain threshold in mm/h.
pub const R_HEAVY: f64 = 8.0;
/// Default persistence (h) regarded as prolonged heavy rain.
pub const PERSISTENCE_H: f64 = 3.0;

/// Frame cadence of a stack: the smallest spacing, which every spacing must divide.
pub fn cadence_s(stack: &GridStack) -> Result<i64> {
    let frames = stack.frames();
    if frames.len() < 2 {
        return Err(Error::InvalidGrid(
            "cannot infer a cadence from fewer than two frames".into(),
        ));
    }
    let gaps: Vec<i64> = frames
        .windows(2)
        .map(|w| (w[1].time() - w[0].time()).num_seconds())
        .collect();
    let step = *gaps.iter().min().expect("at least one gap");
    if let Some(bad) = gaps.iter().find(|&&g| g % step != 0) {
        return Err(Error::InvalidGrid(format!(
            "frame spacing {bad} s is not a multiple of the cadence {step} s"
        )));
    }
    Ok(step)
}

/// Expected frame slots of `stack` inside `window`, each with its frame if present.
fn slots<'a>(
    stack: &'a GridStack,
    window: &TimeWindow,
    cadence: i64,
) -> Result<Vec<(DateTime<Utc>, Option<&'a GeoGrid>)>> {
    if cadence <= 0 {
        return Err(Error::OutOfRange {
            what: "cadence (s)",
            value: cadence as f64,
        });
    }
    let frames = stack.frames();
    let anchor = frames.first().ok_or(Error::EmptyStack)?.time();
    let offset = |t: DateTime<Utc>| (t - anchor).num_seconds();
    let k_min = offset(window.start).div_euclid(cadence) + 1;
    let k_max = offset(window.end).div_euclid(cadence);
    if k_max < k_min {
        return Err(Error::EmptyWindow);
    }
    Ok((k_min..=k_max)
        .map(|k| {
            let t = anchor + Duration::seconds(k * cadence);
            let frame = frames
                .binary_search_by(|f| f.time().cmp(&t))
                .ok()
                .map(|i| &frames[i]);
            (t, frame)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Accumulation {
    /// Depth in mm, stamped with the window end.
    pub grid: GeoGrid,
    /// Per cell, the fraction of expected frames that were absent or nodata.
    pub missing_fraction: Vec<f64>,
    pub expected_frames: usize,
}

/// Cellwise `Σ rate · Δt` over the frames of `window`, with the cadence inferred.
pub fn accumulate(stack: &GridStack, window: &TimeWindow) -> Result<Accumulation> {
    accumulate_with_cadence(stack, window, cadence_s(stack)?)
}

pub fn accumulate_with_cadence(
    stack: &GridStack,
    window: &TimeWindow,
    cadence: i64,
) -> Result<Accumulation> {
    let first = stack.frames().first().ok_or(Error::EmptyStack)?;
    first.expect_variable(Variable::RainRate)?;
    let geometry = *first.geometry();
    let slots = slots(stack, window, cadence)?;
    let hours = cadence as f64 / 3600.0;
    let mut depth = vec![0.0; geometry.len()];
    let mut missing = vec![0usize; geometry.len()];
    for (_, frame) in &slots {
        match frame {
            Some(f) => {
                for (i, &v) in f.values().iter().enumerate() {
                    if f.is_nodata(v) {
                        missing[i] += 1;
                    } else {
                        depth[i] += v * hours;
                    }
                }
            }
            None => missing.iter_mut().for_each(|m| *m += 1),
        }
    }
    let n = slots.len();
    let grid = GeoGrid::new(Variable::RainAccum, window.end, geometry, depth, first.nodata())?;
    Ok(Accumulation {
        grid,
        missing_fraction: missing.into_iter().map(|m| m as f64 / n as f64).collect(),
        expected_frames: n,
    })
}

/// 1 where `rate >= r_heavy`; nodata stays nodata.
pub fn heavy_mask(rate: &GeoGrid, r_heavy: f64) -> Result<GeoGrid> {
    rate.expect_variable(Variable::RainRate)?;
    let values = rate
        .values()
        .iter()
        .map(|&v| {
            if rate.is_nodata(v) {
                v
            } else if v >= r_heavy {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    rate.derive(Variable::FloodMask, values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RainStats {
    pub region: String,
    pub window: TimeWindow,
    /// Highest rate in the region over the window.
    pub max_rate_mmh: f64,
    /// Largest accumulated depth of any region cell.
    pub accum_mm: f64,
    /// Longest run of consecutive frames whose region maximum is heavy, in hours.
    pub persistence_h: f64,
    /// Fraction of region cell-frames that were absent or nodata.
    pub missing_fraction: f64,
}

impl RainStats {
    /// Nothing at all was observed over the region.
    pub fn no_observation(&self) -> bool {
        self.missing_fraction >= 1.0
    }
}

pub fn region_rain_stats(
    stack: &GridStack,
    region: &RegionBox,
    r_heavy: f64,
    window: &TimeWindow,
) -> Result<RainStats> {
    region_rain_stats_with_cadence(stack, region, r_heavy, window, cadence_s(stack)?)
}

pub fn region_rain_stats_with_cadence(
    stack: &GridStack,
    region: &RegionBox,
    r_heavy: f64,
    window: &TimeWindow,
    cadence: i64,
) -> Result<RainStats> {
    let first = stack.frames().first().ok_or(Error::EmptyStack)?;
    first.expect_variable(Variable::RainRate)?;
    let geometry = first.geometry();
    let cells = geometry.cells_in(region);
    if cells.is_empty() {
        return Err(Error::EmptySubset(region.name.clone()));
    }
    let slots = slots(stack, window, cadence)?;
    let hours = cadence as f64 / 3600.0;

    let mut depth = vec![0.0; cells.len()];
    let mut max_rate = 0.0f64;
    let (mut run, mut longest, mut missing) = (0usize, 0usize, 0usize);
    for (_, frame) in &slots {
        let mut frame_max: Option<f64> = None;
        match frame {
            Some(f) => {
                for (k, &(r, c)) in cells.iter().enumerate() {
                    match f.get(r, c) {
                        Some(v) => {
                            depth[k] += v * hours;
                            frame_max = Some(frame_max.map_or(v, |m| m.max(v)));
                        }
                        None => missing += 1,
                    }
                }
            }
            None => missing += cells.len(),
        }
        match frame_max {
            Some(m) => {
                max_rate = max_rate.max(m);
                if m >= r_heavy {
                    run += 1;
                    longest = longest.max(run);
                } else {
                    run = 0;
                }
            }
            None => run = 0,
        }
    }
    Ok(RainStats {
        region: region.name.clone(),
        window: *window,
        max_rate_mmh: max_rate,
        accum_mm: depth.into_iter().fold(0.0, f64::max),
        persistence_h: longest as f64 * hours,
        missing_fraction: missing as f64 / (cells.len() * slots.len()) as f64,
    })
}

/// Merges rain-rate sources onto the geometry and cadence of `primary`.
///
/// Each secondary frame is resampled and folded into the primary slot that covers
/// its time; where several values meet in one cell the maximum wins.
pub fn merge_max(primary: &GridStack, others: &[GridStack], cadence: i64) -> Result<GridStack> {
    let first = primary.frames().first().ok_or(Error::EmptyStack)?;
    first.expect_variable(Variable::RainRate)?;
    let geometry = *first.geometry();
    let anchor = first.time();
    let nodata = first.nodata();

    let mut slots: BTreeMap<DateTime<Utc>, Vec<f64>> = primary
        .frames()
        .iter()
        .map(|f| (f.time(), f.values().iter().map(|&v| if f.is_nodata(v) { nodata } else { v }).collect()))
        .collect();
    for stack in others {
        for frame in stack.frames() {
            frame.expect_variable(Variable::RainRate)?;
            let frame = resample_nn(frame, &geometry)?;
            let k = (frame.time() - anchor).num_seconds().div_euclid(cadence)
                + i64::from((frame.time() - anchor).num_seconds().rem_euclid(cadence) != 0);
            let slot = anchor + Duration::seconds(k * cadence);
            let acc = slots.entry(slot).or_insert_with(|| vec![nodata; geometry.len()]);
            for (a, &v) in acc.iter_mut().zip(frame.values()) {
                if frame.is_nodata(v) {
                    continue;
                }
                *a = if *a == nodata { v } else { a.max(v) };
            }
        }
    }
    GridStack::new(
        slots
            .into_iter()
            .map(|(t, values)| GeoGrid::new(Variable::RainRate, t, geometry, values, nodata))
            .collect::<Result<_>>()?,
    )
}

pub const STATS_CSV_HEADER: &str =
    "region,window_start,window_end,max_rate_mmh,accum_mm,persistence_h,missing_fraction";

pub fn stats_csv_line(s: &RainStats) -> String {
    format!(
        "{},{},{},{},{},{},{}",
        s.region,
        format_time(&s.window.start),
        format_time(&s.window.end),
        s.max_rate_mmh,
        s.accum_mm,
        s.persistence_h,
        s.missing_fraction
    )
}
