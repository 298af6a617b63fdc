//! Engine configuration: a sectioned `key=value` file.
//!
//! ```text
//! [detection]
//! t_deep=220
//! min_area_px=4
//! [wind]
//! gmf=synth1
//! bins=5,10,15
//! ```
//!
//! Every key is optional and falls back to its default; unknown sections or keys,
//! repeated keys and out-of-range values are rejected.

use std::path::Path;

use crate::error::{Error, Result};
use crate::{convection, floodmap, precip, tracking, wind};

/// One `[section]` of a key=value file.
#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

fn cfg_err(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

/// Splits text into sections. `#` starts a comment; blank lines are ignored.
pub fn parse_sections(text: &str) -> Result<Vec<Section>> {
    let mut sections: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            sections.push(Section {
                name: name.trim().to_string(),
                line: line_no,
                entries: Vec::new(),
            });
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(cfg_err(line_no, format!("expected key=value, found {line:?}")));
        };
        let section = sections
            .last_mut()
            .ok_or_else(|| cfg_err(line_no, "key outside of any [section]"))?;
        let key = key.trim().to_string();
        if section.entries.iter().any(|e| e.key == key) {
            return Err(cfg_err(line_no, format!("duplicate key {key:?} in [{}]", section.name)));
        }
        section.entries.push(Entry {
            line: line_no,
            key,
            value: value.trim().to_string(),
        });
    }
    Ok(sections)
}

pub(crate) fn parse_value<T: std::str::FromStr>(e: &Entry) -> Result<T> {
    e.value
        .parse()
        .map_err(|_| cfg_err(e.line, format!("{}: cannot parse {:?}", e.key, e.value)))
}

pub(crate) fn parse_list(e: &Entry) -> Result<Vec<f64>> {
    if e.value.is_empty() {
        return Ok(Vec::new());
    }
    e.value
        .split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| cfg_err(e.line, format!("{}: cannot parse {s:?}", e.key)))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionConfig {
    pub t_deep: f64,
    pub min_area_px: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindConfig {
    pub gmf: String,
    pub v_max: f64,
    pub bins: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct RainConfig {
    pub r_heavy: f64,
    pub persistence_h: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionConfig {
    pub fraction: f64,
    pub epoch_s: i64,
    pub window_s: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FloodmapConfig {
    pub threshold_db: f64,
    pub min_region_px: usize,
    pub f_flood: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingConfig {
    pub max_gap_km: f64,
    pub fit_window: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub detection: DetectionConfig,
    pub wind: WindConfig,
    pub rain: RainConfig,
    pub fusion: FusionConfig,
    pub floodmap: FloodmapConfig,
    pub tracking: TrackingConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            detection: DetectionConfig {
                t_deep: convection::T_DEEP_K,
                min_area_px: convection::MIN_AREA_PX,
            },
            wind: WindConfig {
                gmf: "synth1".into(),
                v_max: wind::V_MAX,
                bins: wind::DEFAULT_BINS,
            },
            rain: RainConfig {
                r_heavy: precip::R_HEAVY,
                persistence_h: precip::PERSISTENCE_H,
            },
            fusion: FusionConfig {
                fraction: 0.2,
                epoch_s: 1800,
                window_s: 10_800,
            },
            floodmap: FloodmapConfig {
                threshold_db: floodmap::THRESHOLD_DB,
                min_region_px: floodmap::MIN_REGION_PX,
                f_flood: floodmap::F_FLOOD,
            },
            tracking: TrackingConfig {
                max_gap_km: tracking::MAX_GAP_KM,
                fit_window: tracking::FIT_WINDOW,
            },
        }
    }
}

fn check(ok: bool, e: &Entry, why: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(cfg_err(e.line, format!("{}={} {why}", e.key, e.value)))
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let mut cfg = Config::default();
        let mut seen: Vec<&str> = Vec::new();
        let sections = parse_sections(text)?;
        for s in &sections {
            if seen.contains(&s.name.as_str()) {
                return Err(cfg_err(s.line, format!("section [{}] repeated", s.name)));
            }
            seen.push(&s.name);
            for e in &s.entries {
                cfg.apply(&s.name, s.line, e)?;
            }
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Config> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::from(e).context(path.display().to_string()))?;
        Config::parse(&text).map_err(|e| e.context(path.display().to_string()))
    }

    fn apply(&mut self, section: &str, section_line: usize, e: &Entry) -> Result<()> {
        match (section, e.key.as_str()) {
            ("detection", "t_deep") => {
                let v: f64 = parse_value(e)?;
                check((100.0..=400.0).contains(&v), e, "must lie in [100, 400] K")?;
                self.detection.t_deep = v;
            }
            ("detection", "min_area_px") => {
                let v: usize = parse_value(e)?;
                check(v >= 1, e, "must be at least 1")?;
                self.detection.min_area_px = v;
            }
            ("wind", "gmf") => {
                check(!e.value.is_empty(), e, "must name a model")?;
                self.wind.gmf = e.value.clone();
            }
            ("wind", "v_max") => {
                let v: f64 = parse_value(e)?;
                check(v > 0.0 && v <= wind::V_DOMAIN_MAX, e, "must lie in (0, 60] m/s")?;
                self.wind.v_max = v;
            }
            ("wind", "bins") => {
                let v = parse_list(e)?;
                let bins: [f64; 3] = v
                    .try_into()
                    .map_err(|_| cfg_err(e.line, "bins needs exactly three values"))?;
                check(wind::check_bins(&bins).is_ok(), e, "must be positive and increasing")?;
                self.wind.bins = bins;
            }
            ("rain", "r_heavy") => {
                let v: f64 = parse_value(e)?;
                check(v > 0.0 && v.is_finite(), e, "must be positive")?;
                self.rain.r_heavy = v;
            }
            ("rain", "persistence_h") => {
                let v: f64 = parse_value(e)?;
                check(v > 0.0 && v.is_finite(), e, "must be positive")?;
                self.rain.persistence_h = v;
            }
            ("fusion", "fraction") => {
                let v: f64 = parse_value(e)?;
                check(v > 0.0 && v <= 1.0, e, "must lie in (0, 1]")?;
                self.fusion.fraction = v;
            }
            ("fusion", "epoch_s") => {
                let v: i64 = parse_value(e)?;
                check(v > 0, e, "must be positive")?;
                self.fusion.epoch_s = v;
            }
            ("fusion", "window_s") => {
                let v: i64 = parse_value(e)?;
                check(v > 0, e, "must be positive")?;
                self.fusion.window_s = v;
            }
            ("floodmap", "threshold_db") => {
                let v: f64 = parse_value(e)?;
                check(v < 0.0 && v.is_finite(), e, "must be a negative dB value")?;
                self.floodmap.threshold_db = v;
            }
            ("floodmap", "min_region_px") => {
                let v: usize = parse_value(e)?;
                check(v >= 1, e, "must be at least 1")?;
                self.floodmap.min_region_px = v;
            }
            ("floodmap", "f_flood") => {
                let v: f64 = parse_value(e)?;
                check(v > 0.0 && v <= 1.0, e, "must lie in (0, 1]")?;
                self.floodmap.f_flood = v;
            }
            ("tracking", "max_gap_km") => {
                let v: f64 = parse_value(e)?;
                check(v > 0.0 && v.is_finite(), e, "must be positive")?;
                self.tracking.max_gap_km = v;
            }
            ("tracking", "fit_window") => {
                let v: usize = parse_value(e)?;
                check(v >= 2, e, "must be at least 2")?;
                self.tracking.fit_window = v;
            }
            ("detection" | "wind" | "rain" | "fusion" | "floodmap" | "tracking", key) => {
                return Err(cfg_err(e.line, format!("unknown key {key:?} in [{section}]")));
            }
            (other, _) => {
                return Err(cfg_err(section_line, format!("unknown section [{other}]")));
            }
        }
        Ok(())
    }

    /// Canonical text form; parses back to an equal config.
    pub fn to_text(&self) -> String {
        let b = &self.wind.bins;
        format!(
            "[detection]\nt_deep={}\nmin_area_px={}\n\n\
             [wind]\ngmf={}\nv_max={}\nbins={},{},{}\n\n\
             [rain]\nr_heavy={}\npersistence_h={}\n\n\
             [fusion]\nfraction={}\nepoch_s={}\nwindow_s={}\n\n\
             [floodmap]\nthreshold_db={}\nmin_region_px={}\nf_flood={}\n\n\
             [tracking]\nmax_gap_km={}\nfit_window={}\n",
            self.detection.t_deep,
            self.detection.min_area_px,
            self.wind.gmf,
            self.wind.v_max,
            b[0],
            b[1],
            b[2],
            self.rain.r_heavy,
            self.rain.persistence_h,
            self.fusion.fraction,
            self.fusion.epoch_s,
            self.fusion.window_s,
            self.floodmap.threshold_db,
            self.floodmap.min_region_px,
            self.floodmap.f_flood,
            self.tracking.max_gap_km,
            self.tracking.fit_window,
        )
    }

    pub fn tracker_params(&self) -> tracking::TrackerParams {
        tracking::TrackerParams {
            max_gap_km: self.tracking.max_gap_km,
            fit_window: self.tracking.fit_window,
        }
    }
}
