//! Decision-level fusion of per-region indicators into warning levels.
//!
//! Every warning traces back to named rules over named indicators. All rule atoms
//! are monotone, so worsening any indicator can only raise the level, and an
//! indicator flagged as unobserved never satisfies an atom.

mod pipeline;

pub use pipeline::{run_epoch, Pipeline, PipelineInputs};

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};

use crate::convection::CSObject;
use crate::error::{Error, Result};
use crate::geogrid::{GeoGrid, RegionBox};
use crate::precip::RainStats;
use crate::time::{format_time, parse_time, TimeWindow};
use crate::tracking::{time_to_region, Track, APPROACH_HORIZON_S};
use crate::wind::{max_category_in, CategoryGrid, WindCategory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Level {
    None,
    Watch,
    Warning,
    Severe,
}

impl Level {
    pub fn name(self) -> &'static str {
        match self {
            Level::None => "NONE",
            Level::Watch => "WATCH",
            Level::Warning => "WARNING",
            Level::Severe => "SEVERE",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        [Level::None, Level::Watch, Level::Warning, Level::Severe]
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| format!("unknown warning level {s:?}"))
    }
}

/// How many sensors contributed to each variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SourceCounts {
    pub bt: usize,
    pub wind: usize,
    pub rain: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionIndicators {
    pub region: String,
    pub epoch: DateTime<Utc>,
    /// Fraction of region cells inside a detected deep-convective object.
    pub deep_cloud_fraction: f64,
    /// Coldest observed BT over the region.
    pub min_bt_k: Option<f64>,
    pub cloud_no_observation: bool,
    pub wind_cat: WindCategory,
    pub wind_no_observation: bool,
    pub max_rain_mmh: f64,
    pub rain_persistence_h: f64,
    pub rain_no_observation: bool,
    /// Earliest forecast arrival of a tracked cell, seconds from the epoch.
    pub approach_s: Option<i64>,
    pub source_count: SourceCounts,
}

impl RegionIndicators {
    /// Nothing observed for any variable.
    pub fn unobserved(region: impl Into<String>, epoch: DateTime<Utc>) -> Self {
        Self {
            region: region.into(),
            epoch,
            deep_cloud_fraction: 0.0,
            min_bt_k: None,
            cloud_no_observation: true,
            wind_cat: WindCategory::None,
            wind_no_observation: true,
            max_rain_mmh: 0.0,
            rain_persistence_h: 0.0,
            rain_no_observation: true,
            approach_s: None,
            source_count: SourceCounts::default(),
        }
    }
}

/// Monotone condition over indicators.
#[derive(Debug, Clone, PartialEq)]
pub enum Predicate {
    All(Vec<Predicate>),
    Any(Vec<Predicate>),
    CloudFractionAtLeast(f64),
    WindAtLeast(WindCategory),
    RainAtLeast(f64),
    PersistenceAtLeast(f64),
    Approaching,
}

impl Predicate {
    pub fn holds(&self, ind: &RegionIndicators) -> bool {
        match self {
            Predicate::All(ps) => ps.iter().all(|p| p.holds(ind)),
            Predicate::Any(ps) => ps.iter().any(|p| p.holds(ind)),
            Predicate::CloudFractionAtLeast(f) => {
                !ind.cloud_no_observation && ind.deep_cloud_fraction >= *f
            }
            Predicate::WindAtLeast(c) => !ind.wind_no_observation && ind.wind_cat >= *c,
            Predicate::RainAtLeast(r) => !ind.rain_no_observation && ind.max_rain_mmh >= *r,
            Predicate::PersistenceAtLeast(h) => {
                !ind.rain_no_observation && ind.rain_persistence_h >= *h
            }
            Predicate::Approaching => ind.approach_s.is_some(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub id: String,
    pub level: Level,
    pub predicate: Predicate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub fraction: f64,
    pub r_heavy: f64,
    pub persistence_h: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            fraction: 0.2,
            r_heavy: crate::precip::R_HEAVY,
            persistence_h: crate::precip::PERSISTENCE_H,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleSet {
    pub rules: Vec<Rule>,
}

impl Default for RuleSet {
    fn default() -> Self {
        RuleSet::standard(Thresholds::default())
    }
}

impl RuleSet {
    /// R1 WATCH, R2 WARNING and R3 SEVERE.
    pub fn standard(th: Thresholds) -> Self {
        use Predicate::*;
        let cloud = || CloudFractionAtLeast(th.fraction);
        let rain = || RainAtLeast(th.r_heavy);
        let severe_wind = || WindAtLeast(WindCategory::Severe);
        RuleSet {
            rules: vec![
                Rule {
                    id: "R1".into(),
                    level: Level::Watch,
                    predicate: Any(vec![cloud(), WindAtLeast(WindCategory::Moderate)]),
                },
                Rule {
                    id: "R2".into(),
                    level: Level::Warning,
                    predicate: Any(vec![
                        All(vec![cloud(), rain()]),
                        All(vec![severe_wind(), Approaching]),
                    ]),
                },
                Rule {
                    id: "R3".into(),
                    level: Level::Severe,
                    predicate: All(vec![
                        cloud(),
                        rain(),
                        PersistenceAtLeast(th.persistence_h),
                        severe_wind(),
                    ]),
                },
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WarningReport {
    pub region: String,
    pub epoch: DateTime<Utc>,
    pub level: Level,
    pub lead_time_s: Option<i64>,
    pub triggered_rules: Vec<String>,
    pub indicators: RegionIndicators,
}

impl WarningReport {
    pub fn summary(&self) -> WarningSummary {
        WarningSummary {
            epoch: self.epoch,
            region: self.region.clone(),
            level: self.level,
        }
    }
}

/// The part of a report that verification needs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WarningSummary {
    pub epoch: DateTime<Utc>,
    pub region: String,
    pub level: Level,
}

/// Applies `rules` to one region's indicators.
pub fn decide(ind: &RegionIndicators, rules: &RuleSet) -> WarningReport {
    let mut level = Level::None;
    let mut triggered = Vec::new();
    for rule in &rules.rules {
        if rule.predicate.holds(ind) {
            level = level.max(rule.level);
            triggered.push(rule.id.clone());
        }
    }
    WarningReport {
        region: ind.region.clone(),
        epoch: ind.epoch,
        level,
        lead_time_s: ind.approach_s.map(|a| a.clamp(0, APPROACH_HORIZON_S)),
        triggered_rules: triggered,
        indicators: ind.clone(),
    }
}

/// One BT frame and what was detected on it.
#[derive(Debug, Clone, Copy)]
pub struct Detections<'a> {
    pub bt: &'a GeoGrid,
    pub objects: &'a [CSObject],
}

/// Everything known at one epoch, already collocated onto the common grid.
#[derive(Debug, Clone, Copy)]
pub struct Evidence<'a> {
    pub window: TimeWindow,
    /// Latest BT frame inside the window.
    pub detections: Option<Detections<'a>>,
    /// Tracks observed in that frame.
    pub tracks: &'a [&'a Track],
    pub wind: &'a [&'a [CategoryGrid]],
    pub rain: Option<&'a RainStats>,
    pub rain_sources: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndicatorParams {
    pub fit_window: usize,
    /// Wind observed this close to an approaching cell is attributed to it.
    pub gust_margin_km: f64,
}

pub fn build_indicators(
    epoch: DateTime<Utc>,
    region_name: &str,
    regions: &[RegionBox],
    evidence: &Evidence<'_>,
    params: &IndicatorParams,
) -> Result<RegionIndicators> {
    let region = regions
        .iter()
        .find(|r| r.name == region_name)
        .ok_or_else(|| Error::UnknownRegion(region_name.to_string()))?;
    let mut ind = RegionIndicators::unobserved(region_name, epoch);

    if let Some(det) = evidence.detections {
        let g = det.bt.geometry();
        let cells = g.cells_in(region);
        let observed: Vec<f64> = cells.iter().filter_map(|&(r, c)| det.bt.get(r, c)).collect();
        if !observed.is_empty() {
            let mut member = vec![false; g.len()];
            for obj in det.objects {
                for &(r, c) in &obj.cells {
                    member[g.index(r, c)] = true;
                }
            }
            let deep = cells.iter().filter(|&&(r, c)| member[g.index(r, c)]).count();
            ind.cloud_no_observation = false;
            ind.deep_cloud_fraction = deep as f64 / cells.len() as f64;
            ind.min_bt_k = observed.into_iter().reduce(f64::min);
            ind.source_count.bt = 1;
        }
    }

    let mut areas = vec![region.clone()];
    for track in evidence.tracks {
        if track.observations.len() < 2 {
            continue;
        }
        if let Some(t) = time_to_region(track, region, params.fit_window)? {
            ind.approach_s = Some(ind.approach_s.map_or(t, |a| a.min(t)));
            areas.push(track.last().bbox.expanded_km(params.gust_margin_km));
        }
    }

    let w = max_category_in(evidence.wind, &areas, &evidence.window);
    ind.wind_cat = w.category;
    ind.wind_no_observation = w.no_observation;
    ind.source_count.wind = w.sources;

    if let Some(rain) = evidence.rain {
        if rain.region != region.name {
            return Err(Error::UnknownRegion(rain.region.clone()));
        }
        if !rain.no_observation() {
            ind.rain_no_observation = false;
            ind.max_rain_mmh = rain.max_rate_mmh;
            ind.rain_persistence_h = rain.persistence_h;
            ind.source_count.rain = evidence.rain_sources;
        }
    }
    Ok(ind)
}

pub const REPORT_CSV_HEADER: &str = "epoch,region,level,lead_time_s,triggered_rules,\
deep_cloud_fraction,min_bt,wind_cat,max_rain_mmh,rain_persistence_h,approach_s";

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn report_csv_line(r: &WarningReport) -> String {
    let ind = &r.indicators;
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        format_time(&r.epoch),
        r.region,
        r.level,
        opt(r.lead_time_s),
        r.triggered_rules.join(";"),
        ind.deep_cloud_fraction,
        opt(ind.min_bt_k),
        ind.wind_cat,
        ind.max_rain_mmh,
        ind.rain_persistence_h,
        opt(ind.approach_s)
    )
}

/// Header plus one line per report, LF-terminated.
pub fn reports_to_csv(reports: &[WarningReport]) -> String {
    let mut out = String::from(REPORT_CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&report_csv_line(r));
        out.push('\n');
    }
    out
}

/// Reads epoch, region and level back from a warning report file.
pub fn parse_report_csv(text: &str) -> Result<Vec<WarningSummary>> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = reader.headers().map_err(csv_err)?;
    if header.iter().collect::<Vec<_>>().join(",") != REPORT_CSV_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: "missing warning report header".into(),
        });
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let err = |m: String| Error::Parse { line, message: m };
        out.push(WarningSummary {
            epoch: parse_time(&record[0]).ok_or_else(|| err(format!("bad epoch {:?}", &record[0])))?,
            region: record[1].to_string(),
            level: record[2].parse().map_err(err)?,
        });
    }
    Ok(out)
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}
