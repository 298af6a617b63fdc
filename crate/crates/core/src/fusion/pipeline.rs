use chrono::{DateTime, TimeZone, Utc};

use super::{
    build_indicators, decide, Detections, Evidence, IndicatorParams, RuleSet, Thresholds,
    WarningReport,
};
use crate::config::Config;
use crate::convection::{detect, CSObject};
use crate::error::{Error, Result};
use crate::geogrid::{resample_nn, Geometry, GridStack, RegionBox};
use crate::precip::{cadence_s, merge_max, region_rain_stats_with_cadence};
use crate::time::TimeWindow;
use crate::tracking::{Track, Tracker};
use crate::wind::{
    categorize_grid_with, retrieve_wind_grid, CategoryGrid, GeometryGrid, GmfGeometry,
    GmfRegistry,
};

/// Observation stacks for one run. BT defines the common grid.
#[derive(Debug, Clone, Default)]
pub struct PipelineInputs {
    pub bt: GridStack,
    pub rain: Vec<GridStack>,
    pub wind: Vec<GridStack>,
    pub nrcs: Vec<GridStack>,
}

struct Rain {
    merged: GridStack,
    cadence: i64,
    frame_times: Vec<Vec<DateTime<Utc>>>,
}

/// Epoch-by-epoch fusion over a fixed set of inputs.
///
/// Detection and wind categorization run once up front; the tracker advances as
/// epochs are stepped, so epochs must be visited in increasing order.
pub struct Pipeline {
    config: Config,
    rules: RuleSet,
    regions: Vec<RegionBox>,
    frames: Vec<(DateTime<Utc>, usize)>,
    bt: GridStack,
    detections: Vec<Vec<CSObject>>,
    wind: Vec<Vec<CategoryGrid>>,
    rain: Option<Rain>,
    tracker: Tracker,
    fed: usize,
    last_epoch: Option<DateTime<Utc>>,
}

impl Pipeline {
    pub fn new(
        inputs: &PipelineInputs,
        regions: &[RegionBox],
        config: &Config,
        registry: &GmfRegistry,
    ) -> Result<Self> {
        let rules = RuleSet::standard(Thresholds {
            fraction: config.fusion.fraction,
            r_heavy: config.rain.r_heavy,
            persistence_h: config.rain.persistence_h,
        });
        Self::with_rules(inputs, regions, rules, config, registry)
    }

    pub fn with_rules(
        inputs: &PipelineInputs,
        regions: &[RegionBox],
        rules: RuleSet,
        config: &Config,
        registry: &GmfRegistry,
    ) -> Result<Self> {
        let mut regions = regions.to_vec();
        regions.sort_by(|a, b| a.name.cmp(&b.name));
        if let Some(w) = regions.windows(2).find(|w| w[0].name == w[1].name) {
            return Err(Error::InvalidRegion(format!("region {} listed twice", w[0].name)));
        }
        let geometry = *inputs.bt.geometry().ok_or(Error::EmptyStack)?;
        let detections = inputs
            .bt
            .frames()
            .iter()
            .map(|f| detect(f, config.detection.t_deep, config.detection.min_area_px))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| e.context("brightness temperature"))?;
        let frames = inputs
            .bt
            .frames()
            .iter()
            .enumerate()
            .map(|(i, f)| (f.time(), i))
            .collect();

        let mut wind = Vec::new();
        for stack in &inputs.wind {
            let cats = stack
                .frames()
                .iter()
                .map(|f| categorize_grid_with(&resample_nn(f, &geometry)?, &config.wind.bins))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| e.context("wind speed"))?;
            wind.push(cats);
        }
        if !inputs.nrcs.is_empty() {
            let gmf = registry.get(&config.wind.gmf)?;
            for stack in &inputs.nrcs {
                let mut cats = Vec::with_capacity(stack.len());
                for f in stack.frames() {
                    let g = f.geometry();
                    let view = GeometryGrid::uniform(GmfGeometry::default(), g.nrows, g.ncols);
                    let speed = retrieve_wind_grid(f, &view, gmf.as_ref(), config.wind.v_max)
                        .map_err(|e| e.context("NRCS"))?;
                    cats.push(categorize_grid_with(
                        &resample_nn(&speed.grid, &geometry)?,
                        &config.wind.bins,
                    )?);
                }
                wind.push(cats);
            }
        }

        let rain = prepare_rain(&inputs.rain, &geometry)?;
        Ok(Self {
            tracker: Tracker::new(config.tracker_params()),
            config: config.clone(),
            rules,
            regions,
            frames,
            bt: inputs.bt.clone(),
            detections,
            wind,
            rain,
            fed: 0,
            last_epoch: None,
        })
    }

    /// Multiples of the epoch step (counted from the Unix epoch) spanning the BT frames.
    pub fn epoch_times(&self) -> Vec<DateTime<Utc>> {
        let step = self.config.fusion.epoch_s;
        let (Some(first), Some(last)) = (self.frames.first(), self.frames.last()) else {
            return Vec::new();
        };
        let t0 = first.0.timestamp();
        let t1 = last.0.timestamp();
        let k0 = t0.div_euclid(step) + i64::from(t0.rem_euclid(step) != 0);
        let k1 = t1.div_euclid(step);
        (k0..=k1)
            .filter_map(|k| Utc.timestamp_opt(k * step, 0).single())
            .collect()
    }

    pub fn regions(&self) -> &[RegionBox] {
        &self.regions
    }

    pub fn tracker(&self) -> &Tracker {
        &self.tracker
    }

    /// Rain merged onto the common grid, with its cadence in seconds.
    pub fn rain(&self) -> Option<(&GridStack, i64)> {
        self.rain.as_ref().map(|r| (&r.merged, r.cadence))
    }

    pub fn detections(&self) -> &[Vec<CSObject>] {
        &self.detections
    }

    /// Reports for every region at `epoch`, ordered by region name.
    pub fn step(&mut self, epoch: DateTime<Utc>) -> Result<Vec<WarningReport>> {
        if let Some(prev) = self.last_epoch {
            if epoch < prev {
                return Err(Error::Ordering {
                    frame: self.fed,
                    prev,
                    next: epoch,
                });
            }
        }
        self.last_epoch = Some(epoch);
        let window = TimeWindow::trailing(epoch, self.config.fusion.window_s)?;

        while self.fed < self.frames.len() && self.frames[self.fed].0 <= epoch {
            let (t, i) = self.frames[self.fed];
            self.tracker.update(t, self.detections[i].clone())?;
            self.fed += 1;
        }
        let latest = self
            .fed
            .checked_sub(1)
            .map(|k| self.frames[k])
            .filter(|(t, _)| window.contains(t));
        let detections = latest.map(|(_, i)| Detections {
            bt: &self.bt.frames()[i],
            objects: &self.detections[i],
        });
        let tracks: Vec<&Track> = if latest.is_some() {
            self.tracker.alive().collect()
        } else {
            Vec::new()
        };
        let wind: Vec<&[CategoryGrid]> = self.wind.iter().map(Vec::as_slice).collect();
        let params = IndicatorParams {
            fit_window: self.config.tracking.fit_window,
            gust_margin_km: self.config.tracking.max_gap_km,
        };

        let mut reports = Vec::with_capacity(self.regions.len());
        for region in &self.regions {
            let (stats, sources) = match &self.rain {
                Some(rain) => {
                    let stats = match region_rain_stats_with_cadence(
                        &rain.merged,
                        region,
                        self.config.rain.r_heavy,
                        &window,
                        rain.cadence,
                    ) {
                        Ok(s) => Some(s),
                        Err(Error::EmptySubset(_) | Error::EmptyWindow) => None,
                        Err(e) => return Err(e),
                    };
                    let sources = rain
                        .frame_times
                        .iter()
                        .filter(|ts| ts.iter().any(|t| window.contains(t)))
                        .count();
                    (stats, sources)
                }
                None => (None, 0),
            };
            let evidence = Evidence {
                window,
                detections,
                tracks: &tracks,
                wind: &wind,
                rain: stats.as_ref(),
                rain_sources: sources,
            };
            let ind = build_indicators(epoch, &region.name, &self.regions, &evidence, &params)?;
            reports.push(decide(&ind, &self.rules));
        }
        Ok(reports)
    }

    /// Steps through every epoch; reports are ordered by epoch, then region.
    pub fn run(&mut self) -> Result<Vec<WarningReport>> {
        let mut out = Vec::new();
        for epoch in self.epoch_times() {
            out.extend(self.step(epoch)?);
        }
        Ok(out)
    }
}

fn prepare_rain(stacks: &[GridStack], geometry: &Geometry) -> Result<Option<Rain>> {
    let mut on_grid = Vec::with_capacity(stacks.len());
    for s in stacks.iter().filter(|s| !s.is_empty()) {
        let frames = s
            .frames()
            .iter()
            .map(|f| resample_nn(f, geometry))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| e.context("rain rate"))?;
        on_grid.push(GridStack::new(frames)?);
    }
    let Some(primary) = on_grid.iter().position(|s| s.len() >= 2) else {
        return match on_grid.is_empty() {
            true => Ok(None),
            false => Err(Error::InvalidGrid(
                "no rain stack has enough frames to define a cadence".into(),
            )),
        };
    };
    let cadence = cadence_s(&on_grid[primary])?;
    let frame_times = on_grid
        .iter()
        .map(|s| s.frames().iter().map(|f| f.time()).collect())
        .collect();
    let main = on_grid.remove(primary);
    let merged = merge_max(&main, &on_grid, cadence)?;
    Ok(Some(Rain {
        merged,
        cadence,
        frame_times,
    }))
}

/// Single-epoch convenience wrapper around [`Pipeline`].
pub fn run_epoch(
    inputs: &PipelineInputs,
    regions: &[RegionBox],
    rules: &RuleSet,
    epoch: DateTime<Utc>,
    config: &Config,
    registry: &GmfRegistry,
) -> Result<Vec<WarningReport>> {
    let mut p = Pipeline::with_rules(inputs, regions, rules.clone(), config, registry)?;
    p.step(epoch)
}

