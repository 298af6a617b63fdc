//! Frame-to-frame association of convective cells and motion extrapolation.

use chrono::{DateTime, Utc};

use crate::convection::CSObject;
use crate::error::{Error, Result};
use crate::geogrid::{great_circle_km, RegionBox, KM_PER_DEG};
use crate::time::format_time;

pub const MAX_GAP_KM: f64 = 50.0;
pub const FIT_WINDOW: usize = 6;
/// Step between candidate horizons in [`time_to_region`].
pub const APPROACH_STEP_S: i64 = 600;
/// Longest horizon searched by [`time_to_region`]: one day.
pub const APPROACH_HORIZON_S: i64 = 86_400;

/// Speeds below this are treated as stationary.
const STATIONARY_MPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub track_id: u32,
    pub observations: Vec<CSObject>,
}

impl Track {
    pub fn last(&self) -> &CSObject {
        self.observations
            .last()
            .expect("a track always holds at least one observation")
    }
}

/// Estimated motion. `bearing_deg` is the direction of travel, clockwise from north,
/// and is `None` for a stationary cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Motion {
    pub speed_mps: f64,
    pub bearing_deg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastExtent {
    pub track_id: u32,
    pub horizon_s: i64,
    pub bbox: RegionBox,
}

/// Greedy one-to-one matching of `prev` to `next` by ascending centroid distance.
///
/// Candidate pairs farther apart than `max_gap_km` are never matched. Ties are broken
/// by the lower `(prev_id, next_id)` pair, so input order does not matter.
pub fn associate(prev: &[CSObject], next: &[CSObject], max_gap_km: f64) -> Vec<(u32, u32)> {
    let mut candidates: Vec<(f64, u32, u32)> = prev
        .iter()
        .flat_map(|p| {
            next.iter().map(move |n| {
                let d = great_circle_km(p.centroid_lat, p.centroid_lon, n.centroid_lat, n.centroid_lon);
                (d, p.id, n.id)
            })
        })
        .filter(|&(d, _, _)| d <= max_gap_km)
        .collect();
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut used_prev = Vec::new();
    let mut used_next = Vec::new();
    let mut pairs = Vec::new();
    for (_, p, n) in candidates {
        if used_prev.contains(&p) || used_next.contains(&n) {
            continue;
        }
        used_prev.push(p);
        used_next.push(n);
        pairs.push((p, n));
    }
    pairs.sort_unstable();
    pairs
}

/// Least-squares slope and intercept of `y` against `t`.
fn linear_fit(t: &[f64], y: &[f64]) -> (f64, f64) {
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let (mut sty, mut stt) = (0.0, 0.0);
    for (&ti, &yi) in t.iter().zip(y) {
        sty += (ti - tm) * (yi - ym);
        stt += (ti - tm) * (ti - tm);
    }
    let slope = sty / stt;
    (slope, ym - slope * tm)
}

/// Motion from a linear fit of centroid position over the trailing `fit_window`
/// observations.
pub fn motion_vector(track: &Track, fit_window: usize) -> Result<Motion> {
    motion_of(&track.observations, fit_window).ok_or(Error::UndefinedMotion(track.track_id))
}

fn motion_of(observations: &[CSObject], fit_window: usize) -> Option<Motion> {
    if observations.len() < 2 {
        return None;
    }
    let window = &observations[observations.len().saturating_sub(fit_window.max(2))..];
    let t0 = window[0].time;
    let t: Vec<f64> = window
        .iter()
        .map(|o| (o.time - t0).num_seconds() as f64)
        .collect();
    let lat: Vec<f64> = window.iter().map(|o| o.centroid_lat).collect();
    let lon: Vec<f64> = window.iter().map(|o| o.centroid_lon).collect();
    let (lat_rate, lat0) = linear_fit(&t, &lat);
    let (lon_rate, lon0) = linear_fit(&t, &lon);

    let span = t[t.len() - 1] - t[0];
    let (lat_a, lon_a) = (lat0 + lat_rate * t[0], lon0 + lon_rate * t[0]);
    let (lat_b, lon_b) = (lat0 + lat_rate * span, lon0 + lon_rate * span);
    let speed_mps = great_circle_km(lat_a, lon_a, lat_b, lon_b) * 1000.0 / span;
    if speed_mps < STATIONARY_MPS {
        return Some(Motion {
            speed_mps: 0.0,
            bearing_deg: None,
        });
    }
    let north = lat_b - lat_a;
    let east = (lon_b - lon_a) * ((lat_a + lat_b) / 2.0).to_radians().cos();
    let mut bearing = east.atan2(north).to_degrees().rem_euclid(360.0);
    if bearing >= 360.0 {
        bearing = 0.0;
    }
    Some(Motion {
        speed_mps,
        bearing_deg: Some(bearing),
    })
}

/// Translates `bbox` by `motion` over `horizon_s`, flat-earth with the longitude
/// scale taken at `ref_lat`.
pub fn displace(bbox: &RegionBox, ref_lat: f64, motion: Motion, horizon_s: f64) -> RegionBox {
    let Some(bearing) = motion.bearing_deg else {
        return bbox.clone();
    };
    let dist_km = motion.speed_mps * horizon_s / 1000.0;
    let b = bearing.to_radians();
    let dlat = dist_km * b.cos() / KM_PER_DEG;
    let dlon = dist_km * b.sin() / (KM_PER_DEG * ref_lat.to_radians().cos());
    bbox.translated(dlat, dlon)
}

/// Last observed bbox moved along the track's motion for `horizon_s` seconds.
pub fn forecast_extent(track: &Track, horizon_s: i64, fit_window: usize) -> Result<ForecastExtent> {
    if horizon_s <= 0 {
        return Err(Error::OutOfRange {
            what: "forecast horizon (s)",
            value: horizon_s as f64,
        });
    }
    let motion = motion_vector(track, fit_window)?;
    let last = track.last();
    Ok(ForecastExtent {
        track_id: track.track_id,
        horizon_s,
        bbox: displace(&last.bbox, last.centroid_lat, motion, horizon_s as f64),
    })
}

/// Smallest multiple of [`APPROACH_STEP_S`] up to one day at which the forecast
/// extent touches `region`; `None` when the cell is not approaching.
pub fn time_to_region(track: &Track, region: &RegionBox, fit_window: usize) -> Result<Option<i64>> {
    let motion = motion_vector(track, fit_window)?;
    let last = track.last();
    Ok((1..=APPROACH_HORIZON_S / APPROACH_STEP_S)
        .map(|k| k * APPROACH_STEP_S)
        .find(|&h| displace(&last.bbox, last.centroid_lat, motion, h as f64).intersects(region)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerParams {
    pub max_gap_km: f64,
    pub fit_window: usize,
}

impl Default for TrackerParams {
    fn default() -> Self {
        Self {
            max_gap_km: MAX_GAP_KM,
            fit_window: FIT_WINDOW,
        }
    }
}

/// Sequential tracker: feed it one frame of detections at a time.
#[derive(Debug, Clone, Default)]
pub struct Tracker {
    params: TrackerParams,
    tracks: Vec<Track>,
    alive: Vec<usize>,
    last_time: Option<DateTime<Utc>>,
}

impl Tracker {
    pub fn new(params: TrackerParams) -> Self {
        Self {
            params,
            ..Self::default()
        }
    }

    pub fn params(&self) -> &TrackerParams {
        &self.params
    }

    /// Extends, terminates and seeds tracks with the detections of one frame.
    pub fn update(&mut self, time: DateTime<Utc>, objects: Vec<CSObject>) -> Result<()> {
        if let Some(prev) = self.last_time {
            if time <= prev {
                return Err(Error::Ordering {
                    frame: self.tracks.len(),
                    prev,
                    next: time,
                });
            }
        }
        let prev: Vec<CSObject> = self
            .alive
            .iter()
            .map(|&i| self.tracks[i].last().clone())
            .collect();
        let pairs = associate(&prev, &objects, self.params.max_gap_km);

        let mut alive = Vec::with_capacity(objects.len());
        for obj in objects {
            let matched = pairs
                .iter()
                .find(|&&(_, n)| n == obj.id)
                .and_then(|&(p, _)| {
                    self.alive
                        .iter()
                        .copied()
                        .find(|&i| self.tracks[i].last().id == p)
                });
            match matched {
                Some(i) => {
                    self.tracks[i].observations.push(obj);
                    alive.push(i);
                }
                None => {
                    let track_id = self.tracks.len() as u32 + 1;
                    self.tracks.push(Track {
                        track_id,
                        observations: vec![obj],
                    });
                    alive.push(self.tracks.len() - 1);
                }
            }
        }
        alive.sort_unstable();
        self.alive = alive;
        self.last_time = Some(time);
        Ok(())
    }

    /// Every track ever started, in id order.
    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    /// Tracks observed in the most recent frame.
    pub fn alive(&self) -> impl Iterator<Item = &Track> {
        self.alive.iter().map(|&i| &self.tracks[i])
    }

    pub fn last_time(&self) -> Option<DateTime<Utc>> {
        self.last_time
    }
}

pub const TRACKS_CSV_HEADER: &str =
    "track_id,time,centroid_lat,centroid_lon,pixel_count,min_bt,speed_mps,bearing_deg";

/// One line per observation; motion is the estimate available at that observation.
pub fn track_csv_lines(track: &Track, fit_window: usize) -> Vec<String> {
    (0..track.observations.len())
        .map(|i| {
            let o = &track.observations[i];
            let motion = motion_of(&track.observations[..=i], fit_window);
            format!(
                "{},{},{},{},{},{},{},{}",
                track.track_id,
                format_time(&o.time),
                o.centroid_lat,
                o.centroid_lon,
                o.pixel_count,
                o.min_bt.map(|v| v.to_string()).unwrap_or_default(),
                motion.map(|m| m.speed_mps.to_string()).unwrap_or_default(),
                motion
                    .and_then(|m| m.bearing_deg)
                    .map(|b| b.to_string())
                    .unwrap_or_default(),
            )
        })
        .collect()
}
