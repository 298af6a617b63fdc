use std::path::Path;

use crate::error::{Error, Result};
use crate::geogrid::KM_PER_DEG;

/// A named lat/lon rectangle.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionBox {
    pub name: String,
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

impl RegionBox {
    pub fn new(
        name: impl Into<String>,
        lat_min: f64,
        lat_max: f64,
        lon_min: f64,
        lon_max: f64,
    ) -> Result<Self> {
        let name = name.into();
        if name.is_empty() || name.contains(|c: char| c == ',' || c.is_whitespace()) {
            return Err(Error::InvalidRegion(format!(
                "region name {name:?} must be non-empty without commas or spaces"
            )));
        }
        if !(lat_min < lat_max && lon_min < lon_max) {
            return Err(Error::InvalidRegion(format!(
                "{name}: need lat_min < lat_max and lon_min < lon_max, got \
                 [{lat_min}, {lat_max}] x [{lon_min}, {lon_max}]"
            )));
        }
        Ok(Self {
            name,
            lat_min,
            lat_max,
            lon_min,
            lon_max,
        })
    }

    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        lat >= self.lat_min && lat <= self.lat_max && lon >= self.lon_min && lon <= self.lon_max
    }

    /// Closed-set intersection: touching edges count.
    pub fn intersects(&self, other: &RegionBox) -> bool {
        self.lat_min <= other.lat_max
            && other.lat_min <= self.lat_max
            && self.lon_min <= other.lon_max
            && other.lon_min <= self.lon_max
    }

    pub fn center(&self) -> (f64, f64) {
        (
            (self.lat_min + self.lat_max) / 2.0,
            (self.lon_min + self.lon_max) / 2.0,
        )
    }

    pub fn translated(&self, dlat: f64, dlon: f64) -> RegionBox {
        RegionBox {
            name: self.name.clone(),
            lat_min: self.lat_min + dlat,
            lat_max: self.lat_max + dlat,
            lon_min: self.lon_min + dlon,
            lon_max: self.lon_max + dlon,
        }
    }

    /// Grows the box by `km` on every side (longitude scaled at the box center).
    pub fn expanded_km(&self, km: f64) -> RegionBox {
        let dlat = km / KM_PER_DEG;
        let dlon = km / (KM_PER_DEG * self.center().0.to_radians().cos());
        RegionBox {
            name: self.name.clone(),
            lat_min: self.lat_min - dlat,
            lat_max: self.lat_max + dlat,
            lon_min: self.lon_min - dlon,
            lon_max: self.lon_max + dlon,
        }
    }
}

/// Parses a regions file: `name lat_min lat_max lon_min lon_max` per line, `#` comments.
pub fn parse_regions(text: &str) -> Result<Vec<RegionBox>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 5 fields, found {}", fields.len()),
            });
        }
        let mut nums = [0.0; 4];
        for (slot, s) in nums.iter_mut().zip(&fields[1..]) {
            *slot = s.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("{s:?} is not a number"),
            })?;
        }
        let region = RegionBox::new(fields[0], nums[0], nums[1], nums[2], nums[3]).map_err(|e| {
            Error::Parse {
                line: line_no,
                message: e.to_string(),
            }
        })?;
        out.push(region);
    }
    Ok(out)
}

/// Approximate boxes for the central Vietnam provinces, north to south.
pub fn central_vietnam_regions() -> Vec<RegionBox> {
    [
        ("NA", 18.6, 19.9, 103.9, 105.8),
        ("HT", 17.9, 18.6, 105.3, 106.6),
        ("QB", 17.0, 17.9, 105.8, 107.0),
        ("QT", 16.4, 17.0, 106.5, 107.4),
        ("TT", 16.0, 16.4, 107.0, 107.85),
        ("DN", 15.85, 16.25, 107.85, 108.35),
        ("QN1", 15.0, 15.85, 107.2, 108.7),
        ("QN2", 14.5, 15.0, 108.1, 109.1),
    ]
    .into_iter()
    .map(|(n, a, b, c, d)| RegionBox::new(n, a, b, c, d).expect("valid built-in box"))
    .collect()
}

pub fn read_regions(path: impl AsRef<Path>) -> Result<Vec<RegionBox>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::from(e).context(path.display().to_string()))?;
    parse_regions(&text).map_err(|e| e.context(path.display().to_string()))
}
