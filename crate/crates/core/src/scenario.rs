//! Synthetic multi-sensor scenarios with analytic ground truth.
//!
//! Each cell is a Gaussian BT depression on a 280 K background,
//! `BT = 280 - (280 - min_bt)·exp(-(d/r)²)`, moving in a straight line in
//! degrees (the longitude scale is fixed at the birth latitude). A rain disc of
//! radius `r/2` ramps linearly to its peak over `rain_lag_s` after birth, and a wind
//! annulus `peak·exp(-((d - r)/(r/2))²)` surrounds it. NRCS scenes are the SYNTH1
//! forward model applied to the wind field.
//!
//! A cell is rendered while its centroid lies inside the grid; the truth record
//! notes when it leaves.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, Duration, Utc};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::config::{parse_sections, parse_value, Entry, Section};
use crate::convection::T_DEEP_K;
use crate::error::{Error, Result};
use crate::fusion::csv_err;
use crate::geogrid::{
    central_vietnam_regions, GeoGrid, Geometry, GridStack, RegionBox, Variable, KM_PER_DEG,
    NODATA,
};
use crate::time::{format_time, parse_time};
use crate::wind::{gmf_forward, GmfGeometry, Synth1};

pub const BACKGROUND_BT_K: f64 = 280.0;
const MIN_BT_FLOOR_K: f64 = 180.0;
const MAX_SPEED_MPS: f64 = 60.0;
/// Dry-land backscatter of the synthetic flood reference scene.
pub const LAND_NRCS: f64 = 0.05;
/// Darkening applied to flooded patches.
pub const FLOOD_DROP_DB: f64 = -10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct CellSpec {
    pub birth_s: i64,
    pub lat: f64,
    pub lon: f64,
    pub speed_mps: f64,
    pub bearing_deg: f64,
    pub min_bt_k: f64,
    pub radius_km: f64,
    pub rain_peak_mmh: f64,
    pub wind_peak_mps: f64,
}

impl CellSpec {
    /// Centroid `dt` seconds after birth.
    pub fn position(&self, dt: f64) -> (f64, f64) {
        let km = self.speed_mps * dt / 1000.0;
        let b = self.bearing_deg.to_radians();
        (
            self.lat + km * b.cos() / KM_PER_DEG,
            self.lon + km * b.sin() / (KM_PER_DEG * self.lat.to_radians().cos()),
        )
    }

    /// Degrees per second, (lat, lon).
    fn rate(&self) -> (f64, f64) {
        let (lat1, lon1) = self.position(1.0);
        (lat1 - self.lat, lon1 - self.lon)
    }

    fn distance_km(&self, lat_c: f64, lon_c: f64, lat: f64, lon: f64) -> f64 {
        let dy = (lat - lat_c) * KM_PER_DEG;
        let dx = (lon - lon_c) * KM_PER_DEG * self.lat.to_radians().cos();
        dx.hypot(dy)
    }

    /// Radius within which BT is at or below `t_deep`; none if the cell never gets that cold.
    pub fn core_radius_km(&self, t_deep: f64) -> Option<f64> {
        let depth = BACKGROUND_BT_K - self.min_bt_k;
        let needed = BACKGROUND_BT_K - t_deep;
        (needed > 0.0 && depth >= needed).then(|| self.radius_km * (depth / needed).ln().sqrt())
    }

    /// Box around the cold core of a cell centered at (`lat_c`, `lon_c`).
    pub fn core_box(&self, lat_c: f64, lon_c: f64, t_deep: f64) -> Option<RegionBox> {
        let d = self.core_radius_km(t_deep)?;
        let a_lat = d / KM_PER_DEG;
        let a_lon = d / (KM_PER_DEG * self.lat.to_radians().cos());
        RegionBox::new("core", lat_c - a_lat, lat_c + a_lat, lon_c - a_lon, lon_c + a_lon).ok()
    }

    fn validate(&self, n: usize, duration_s: i64) -> Result<()> {
        let bad = |m: String| Err(Error::Scenario(format!("cell {n}: {m}")));
        if !(0.0..=MAX_SPEED_MPS).contains(&self.speed_mps) {
            return bad(format!("speed {} m/s outside [0, 60]", self.speed_mps));
        }
        if !(0.0..360.0).contains(&self.bearing_deg) {
            return bad(format!("bearing {} outside [0, 360)", self.bearing_deg));
        }
        if !(MIN_BT_FLOOR_K..=BACKGROUND_BT_K).contains(&self.min_bt_k) {
            return bad(format!("min BT {} K outside [180, 280]", self.min_bt_k));
        }
        if !(self.radius_km > 0.0 && self.radius_km.is_finite()) {
            return bad(format!("radius {} km must be positive", self.radius_km));
        }
        if !(self.rain_peak_mmh >= 0.0 && self.rain_peak_mmh.is_finite())
            || !(0.0..=100.0).contains(&self.wind_peak_mps)
        {
            return bad("peaks must be non-negative".into());
        }
        if !(0..=duration_s).contains(&self.birth_s) {
            return bad(format!("birth {} s outside the run", self.birth_s));
        }
        if !(self.lat.abs() < 80.0 && self.lon.is_finite()) {
            return bad(format!("position ({}, {}) unusable", self.lat, self.lon));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub start: DateTime<Utc>,
    pub geometry: Geometry,
    pub duration_s: i64,
    pub bt_every_s: i64,
    pub rain_every_s: i64,
    pub wind_every_s: i64,
    pub nrcs_every_s: i64,
    pub rain_lag_s: i64,
    pub bt_noise_k: f64,
    pub rain_noise_mmh: f64,
    pub wind_noise_mps: f64,
    pub cells: Vec<CellSpec>,
    pub regions: Vec<RegionBox>,
    pub flooded: Vec<String>,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        if self.duration_s <= 0 {
            return Err(Error::Scenario("duration must be positive".into()));
        }
        for (name, v) in [
            ("bt_every_s", self.bt_every_s),
            ("rain_every_s", self.rain_every_s),
            ("wind_every_s", self.wind_every_s),
            ("nrcs_every_s", self.nrcs_every_s),
        ] {
            if v <= 0 {
                return Err(Error::Scenario(format!("{name} must be positive")));
            }
        }
        if self.rain_lag_s < 0 {
            return Err(Error::Scenario("rain_lag_s must be non-negative".into()));
        }
        for v in [self.bt_noise_k, self.rain_noise_mmh, self.wind_noise_mps] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Scenario("noise levels must be non-negative".into()));
            }
        }
        for (i, c) in self.cells.iter().enumerate() {
            c.validate(i + 1, self.duration_s)?;
        }
        for name in &self.flooded {
            if !self.regions.iter().any(|r| &r.name == name) {
                return Err(Error::UnknownRegion(name.clone()));
            }
        }
        Ok(())
    }

    fn times(&self, every: i64) -> Vec<DateTime<Utc>> {
        (0..=self.duration_s / every)
            .map(|k| self.start + Duration::seconds(k * every))
            .collect()
    }

    pub fn bt_times(&self) -> Vec<DateTime<Utc>> {
        self.times(self.bt_every_s)
    }

    fn alive(&self, cell: &CellSpec, t: DateTime<Utc>) -> Option<(f64, f64)> {
        let dt = (t - self.start).num_seconds() - cell.birth_s;
        if dt < 0 {
            return None;
        }
        let (lat, lon) = cell.position(dt as f64);
        self.geometry.extent().contains(lat, lon).then_some((lat, lon))
    }

    /// Reads the key=value form; see [`ScenarioSpec::to_text`].
    pub fn parse(text: &str) -> Result<ScenarioSpec> {
        let mut spec = paper_replay_spec();
        spec.cells.clear();
        spec.flooded.clear();
        let mut regions: Option<Vec<RegionBox>> = None;
        let mut g = spec.geometry;
        for s in parse_sections(text)? {
            match s.name.as_str() {
                "scenario" => apply_scenario(&mut spec, &s)?,
                "grid" => apply_grid(&mut g, &s)?,
                "cell" => spec.cells.push(parse_cell(&s)?),
                "regions" => {
                    let list = regions.get_or_insert_with(Vec::new);
                    for e in &s.entries {
                        let v = crate::config::parse_list(e)?;
                        if v.len() != 4 {
                            return Err(spec_err(e.line, "region needs lat_min,lat_max,lon_min,lon_max"));
                        }
                        list.push(
                            RegionBox::new(e.key.clone(), v[0], v[1], v[2], v[3])
                                .map_err(|err| spec_err(e.line, err.to_string()))?,
                        );
                    }
                }
                other => return Err(spec_err(s.line, format!("unknown section [{other}]"))),
            }
        }
        spec.geometry = g;
        if let Some(r) = regions {
            spec.regions = r;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ScenarioSpec> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::from(e).context(path.display().to_string()))?;
        ScenarioSpec::parse(&text).map_err(|e| e.context(path.display().to_string()))
    }

    pub fn to_text(&self) -> String {
        let g = &self.geometry;
        let mut out = format!(
            "[scenario]\nstart={}\nduration_s={}\nbt_every_s={}\nrain_every_s={}\n\
             wind_every_s={}\nnrcs_every_s={}\nrain_lag_s={}\nbt_noise_k={}\n\
             rain_noise_mmh={}\nwind_noise_mps={}\nflooded={}\n\n\
             [grid]\nlat_min={}\nlon_min={}\ndlat={}\ndlon={}\nnrows={}\nncols={}\n",
            format_time(&self.start),
            self.duration_s,
            self.bt_every_s,
            self.rain_every_s,
            self.wind_every_s,
            self.nrcs_every_s,
            self.rain_lag_s,
            self.bt_noise_k,
            self.rain_noise_mmh,
            self.wind_noise_mps,
            self.flooded.join(","),
            g.lat_min,
            g.lon_min,
            g.dlat,
            g.dlon,
            g.nrows,
            g.ncols,
        );
        for c in &self.cells {
            out.push_str(&format!(
                "\n[cell]\nbirth_s={}\nlat={}\nlon={}\nspeed_mps={}\nbearing_deg={}\n\
                 min_bt={}\nradius_km={}\nrain_peak={}\nwind_peak={}\n",
                c.birth_s,
                c.lat,
                c.lon,
                c.speed_mps,
                c.bearing_deg,
                c.min_bt_k,
                c.radius_km,
                c.rain_peak_mmh,
                c.wind_peak_mps
            ));
        }
        out.push_str("\n[regions]\n");
        for r in &self.regions {
            out.push_str(&format!(
                "{}={},{},{},{}\n",
                r.name, r.lat_min, r.lat_max, r.lon_min, r.lon_max
            ));
        }
        out
    }
}

fn spec_err(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

fn unknown(s: &Section, e: &Entry) -> Error {
    spec_err(e.line, format!("unknown key {:?} in [{}]", e.key, s.name))
}

fn apply_scenario(spec: &mut ScenarioSpec, s: &Section) -> Result<()> {
    for e in &s.entries {
        match e.key.as_str() {
            "start" => {
                spec.start = parse_time(&e.value)
                    .ok_or_else(|| spec_err(e.line, format!("bad time {:?}", e.value)))?
            }
            "duration_s" => spec.duration_s = parse_value(e)?,
            "bt_every_s" => spec.bt_every_s = parse_value(e)?,
            "rain_every_s" => spec.rain_every_s = parse_value(e)?,
            "wind_every_s" => spec.wind_every_s = parse_value(e)?,
            "nrcs_every_s" => spec.nrcs_every_s = parse_value(e)?,
            "rain_lag_s" => spec.rain_lag_s = parse_value(e)?,
            "bt_noise_k" => spec.bt_noise_k = parse_value(e)?,
            "rain_noise_mmh" => spec.rain_noise_mmh = parse_value(e)?,
            "wind_noise_mps" => spec.wind_noise_mps = parse_value(e)?,
            "flooded" => {
                spec.flooded = e
                    .value
                    .split(',')
                    .map(str::trim)
                    .filter(|n| !n.is_empty())
                    .map(String::from)
                    .collect()
            }
            _ => return Err(unknown(s, e)),
        }
    }
    Ok(())
}

fn apply_grid(g: &mut Geometry, s: &Section) -> Result<()> {
    for e in &s.entries {
        match e.key.as_str() {
            "lat_min" => g.lat_min = parse_value(e)?,
            "lon_min" => g.lon_min = parse_value(e)?,
            "dlat" => g.dlat = parse_value(e)?,
            "dlon" => g.dlon = parse_value(e)?,
            "nrows" => g.nrows = parse_value(e)?,
            "ncols" => g.ncols = parse_value(e)?,
            _ => return Err(unknown(s, e)),
        }
    }
    Ok(())
}

fn parse_cell(s: &Section) -> Result<CellSpec> {
    let mut c = paper_replay_spec().cells.remove(0);
    for e in &s.entries {
        match e.key.as_str() {
            "birth_s" => c.birth_s = parse_value(e)?,
            "lat" => c.lat = parse_value(e)?,
            "lon" => c.lon = parse_value(e)?,
            "speed_mps" => c.speed_mps = parse_value(e)?,
            "bearing_deg" => c.bearing_deg = parse_value(e)?,
            "min_bt" => c.min_bt_k = parse_value(e)?,
            "radius_km" => c.radius_km = parse_value(e)?,
            "rain_peak" => c.rain_peak_mmh = parse_value(e)?,
            "wind_peak" => c.wind_peak_mps = parse_value(e)?,
            _ => return Err(unknown(s, e)),
        }
    }
    Ok(c)
}

/// Westward squall approaching the central Vietnam coast over 24 h.
pub fn paper_replay_spec() -> ScenarioSpec {
    let regions = central_vietnam_regions();
    let dn = regions.iter().find(|r| r.name == "DN").expect("DN is built in");
    let lat = 15.5;
    let lon = dn.lon_max + 150.0 / (KM_PER_DEG * f64::to_radians(lat).cos());
    ScenarioSpec {
        start: parse_time("2020-10-06T00:00:00Z").expect("valid literal"),
        geometry: Geometry::new(14.025, 103.025, 0.05, 0.05, 120, 140).expect("valid literal"),
        duration_s: 86_400,
        bt_every_s: 600,
        rain_every_s: 1800,
        wind_every_s: 10_800,
        nrcs_every_s: 21_600,
        rain_lag_s: 1800,
        bt_noise_k: 0.0,
        rain_noise_mmh: 0.0,
        wind_noise_mps: 0.0,
        cells: vec![CellSpec {
            birth_s: 0,
            lat,
            lon,
            speed_mps: 8.0,
            bearing_deg: 270.0,
            min_bt_k: 200.0,
            radius_km: 124.0,
            rain_peak_mmh: 10.0,
            wind_peak_mps: 20.0,
        }],
        flooded: ["TT", "DN", "QN1", "QN2"].map(String::from).to_vec(),
        regions,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruthPoint {
    pub cell: usize,
    pub time: DateTime<Utc>,
    pub lat: f64,
    pub lon: f64,
    pub speed_mps: f64,
    pub bearing_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Intersection {
    pub cell: usize,
    pub region: String,
    /// First BT frame at which the cell's cold-core box touches the region.
    pub time: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Truth {
    pub track: Vec<TruthPoint>,
    pub intersections: Vec<Intersection>,
    /// Cells whose centroid left the grid, with the first frame they were gone.
    pub exits: Vec<(usize, DateTime<Utc>)>,
    pub flooded: Vec<String>,
}

impl Truth {
    /// Earliest intersection of any cell with `region`.
    pub fn first_intersection(&self, region: &str) -> Option<DateTime<Utc>> {
        self.intersections
            .iter()
            .filter(|i| i.region == region)
            .map(|i| i.time)
            .min()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(TRUTH_CSV_HEADER);
        out.push('\n');
        for p in &self.track {
            out.push_str(&format!(
                "track,{},{},{},{},{},{},\n",
                p.cell,
                format_time(&p.time),
                p.lat,
                p.lon,
                p.speed_mps,
                p.bearing_deg
            ));
        }
        for i in &self.intersections {
            out.push_str(&format!(
                "intersect,{},{},,,,,{}\n",
                i.cell,
                format_time(&i.time),
                i.region
            ));
        }
        for (cell, t) in &self.exits {
            out.push_str(&format!("exit,{cell},{},,,,,\n", format_time(t)));
        }
        for r in &self.flooded {
            out.push_str(&format!("flooded,,,,,,,{r}\n"));
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<Truth> {
        let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let header = reader.headers().map_err(csv_err)?;
        if header.iter().collect::<Vec<_>>().join(",") != TRUTH_CSV_HEADER {
            return Err(Error::Parse {
                line: 1,
                message: "missing truth header".into(),
            });
        }
        let mut truth = Truth::default();
        for record in reader.records() {
            let f = record.map_err(csv_err)?;
            let line = f.position().map_or(0, |p| p.line() as usize);
            let err = |m: String| Error::Parse { line, message: m };
            let num = |s: &str| s.parse::<f64>().map_err(|_| err(format!("bad number {s:?}")));
            let cell = || f[1].parse::<usize>().map_err(|_| err(format!("bad cell {:?}", &f[1])));
            let time = || parse_time(&f[2]).ok_or_else(|| err(format!("bad time {:?}", &f[2])));
            match &f[0] {
                "track" => truth.track.push(TruthPoint {
                    cell: cell()?,
                    time: time()?,
                    lat: num(&f[3])?,
                    lon: num(&f[4])?,
                    speed_mps: num(&f[5])?,
                    bearing_deg: num(&f[6])?,
                }),
                "intersect" => truth.intersections.push(Intersection {
                    cell: cell()?,
                    region: f[7].to_string(),
                    time: time()?,
                }),
                "exit" => truth.exits.push((cell()?, time()?)),
                "flooded" => truth.flooded.push(f[7].to_string()),
                other => return Err(err(format!("unknown record {other:?}"))),
            }
        }
        Ok(truth)
    }
}

pub const TRUTH_CSV_HEADER: &str = "record,cell,time,lat,lon,speed_mps,bearing_deg,region";

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub bt: GridStack,
    pub rain: GridStack,
    pub wind: GridStack,
    pub nrcs: GridStack,
    pub truth: Truth,
}

struct Noise {
    rng: ChaCha8Rng,
}

impl Noise {
    fn apply(&mut self, values: &mut [f64], sigma: f64, lo: f64, hi: f64) {
        if sigma <= 0.0 {
            return;
        }
        let normal = Normal::new(0.0, sigma).expect("sigma is positive and finite");
        for v in values {
            *v = (*v + normal.sample(&mut self.rng)).clamp(lo, hi);
        }
    }
}

/// Renders every stack and the truth record. Deterministic for a given spec and seed.
pub fn generate(spec: &ScenarioSpec, seed: u64) -> Result<Scenario> {
    spec.validate()?;
    let g = spec.geometry;
    let mut noise = Noise {
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    let render = |t: DateTime<Utc>, f: &dyn Fn(&CellSpec, f64, f64, i64) -> Vec<f64>| {
        spec.cells
            .iter()
            .filter_map(|c| {
                let (lat, lon) = spec.alive(c, t)?;
                let age = (t - spec.start).num_seconds() - c.birth_s;
                Some(f(c, lat, lon, age))
            })
            .collect::<Vec<_>>()
    };
    let field = |lat_c: f64, lon_c: f64, c: &CellSpec, shape: &dyn Fn(f64) -> f64| {
        let mut out = Vec::with_capacity(g.len());
        for r in 0..g.nrows {
            for col in 0..g.ncols {
                out.push(shape(c.distance_km(lat_c, lon_c, g.lat(r), g.lon(col))));
            }
        }
        out
    };

    let mut bt = Vec::new();
    for t in spec.bt_times() {
        let layers = render(t, &|c, lat, lon, _| {
            let depth = BACKGROUND_BT_K - c.min_bt_k;
            field(lat, lon, c, &|d| BACKGROUND_BT_K - depth * (-(d / c.radius_km).powi(2)).exp())
        });
        let mut values = combine(&layers, g.len(), BACKGROUND_BT_K, f64::min);
        noise.apply(&mut values, spec.bt_noise_k, 100.0, 400.0);
        bt.push(GeoGrid::new(Variable::Bt, t, g, values, NODATA)?);
    }

    let mut rain = Vec::new();
    for t in spec.times(spec.rain_every_s) {
        let layers = render(t, &|c, lat, lon, age| {
            let ramp = if spec.rain_lag_s == 0 {
                1.0
            } else {
                (age as f64 / spec.rain_lag_s as f64).min(1.0)
            };
            let amp = c.rain_peak_mmh * ramp;
            field(lat, lon, c, &|d| if d <= c.radius_km / 2.0 { amp } else { 0.0 })
        });
        let mut values = combine(&layers, g.len(), 0.0, f64::max);
        noise.apply(&mut values, spec.rain_noise_mmh, 0.0, f64::INFINITY);
        rain.push(GeoGrid::new(Variable::RainRate, t, g, values, NODATA)?);
    }

    let wind_times = spec.times(spec.wind_every_s);
    let nrcs_times = spec.times(spec.nrcs_every_s);
    let mut all: Vec<DateTime<Utc>> = wind_times.iter().chain(&nrcs_times).copied().collect();
    all.sort();
    all.dedup();
    let mut wind_fields = BTreeMap::new();
    for t in all {
        let layers = render(t, &|c, lat, lon, _| {
            let w = c.radius_km / 2.0;
            field(lat, lon, c, &|d| c.wind_peak_mps * (-((d - c.radius_km) / w).powi(2)).exp())
        });
        let mut values = combine(&layers, g.len(), 0.0, f64::max);
        noise.apply(&mut values, spec.wind_noise_mps, 0.0, 100.0);
        wind_fields.insert(t, values);
    }
    let wind = wind_times
        .iter()
        .map(|t| GeoGrid::new(Variable::WindSpeed, *t, g, wind_fields[t].clone(), NODATA))
        .collect::<Result<Vec<_>>>()?;
    let view = GmfGeometry::default();
    let mut nrcs = Vec::new();
    for t in &nrcs_times {
        let values = wind_fields[t]
            .iter()
            .map(|&v| gmf_forward(&Synth1, v, &view))
            .collect::<Result<Vec<_>>>()?;
        nrcs.push(GeoGrid::new(Variable::Nrcs, *t, g, values, NODATA)?);
    }

    Ok(Scenario {
        bt: GridStack::new(bt)?,
        rain: GridStack::new(rain)?,
        wind: GridStack::new(wind)?,
        nrcs: GridStack::new(nrcs)?,
        truth: truth(spec),
    })
}

fn combine(layers: &[Vec<f64>], len: usize, background: f64, pick: fn(f64, f64) -> f64) -> Vec<f64> {
    let mut out = vec![background; len];
    for layer in layers {
        for (o, &v) in out.iter_mut().zip(layer) {
            *o = pick(*o, v);
        }
    }
    out
}

/// Times (s after birth) during which `x0 + rate·t` stays within `[lo, hi]`.
fn dwell(x0: f64, rate: f64, lo: f64, hi: f64) -> Option<(f64, f64)> {
    if rate == 0.0 {
        return (lo..=hi).contains(&x0).then_some((f64::NEG_INFINITY, f64::INFINITY));
    }
    let (a, b) = ((lo - x0) / rate, (hi - x0) / rate);
    Some((a.min(b), a.max(b)))
}

/// Ground truth. Intersection times come from the straight-line motion of the core
/// box, snapped up to the next frame at which the cell is alive.
pub fn truth(spec: &ScenarioSpec) -> Truth {
    let mut out = Truth {
        flooded: spec.flooded.clone(),
        ..Truth::default()
    };
    let times = spec.bt_times();
    for (k, c) in spec.cells.iter().enumerate() {
        let cell = k + 1;
        let mut was_alive = false;
        let mut alive_times = Vec::new();
        for &t in &times {
            match spec.alive(c, t) {
                Some((lat, lon)) => {
                    was_alive = true;
                    alive_times.push(t);
                    out.track.push(TruthPoint {
                        cell,
                        time: t,
                        lat,
                        lon,
                        speed_mps: c.speed_mps,
                        bearing_deg: c.bearing_deg,
                    });
                }
                None if was_alive => {
                    out.exits.push((cell, t));
                    break;
                }
                None => {}
            }
        }
        let Some(core) = c.core_box(c.lat, c.lon, T_DEEP_K) else {
            continue;
        };
        let (a_lat, a_lon) = ((core.lat_max - core.lat_min) / 2.0, (core.lon_max - core.lon_min) / 2.0);
        let (v_lat, v_lon) = c.rate();
        for region in &spec.regions {
            let spans = [
                dwell(c.lat, v_lat, region.lat_min - a_lat, region.lat_max + a_lat),
                dwell(c.lon, v_lon, region.lon_min - a_lon, region.lon_max + a_lon),
            ];
            let [Some(la), Some(lo)] = spans else {
                continue;
            };
            let (enter, leave) = (la.0.max(lo.0), la.1.min(lo.1));
            if enter > leave {
                continue;
            }
            let hit = alive_times.iter().find(|t| {
                let age = ((**t - spec.start).num_seconds() - c.birth_s) as f64;
                age >= enter && age <= leave
            });
            if let Some(&time) = hit {
                out.intersections.push(Intersection {
                    cell,
                    region: region.name.clone(),
                    time,
                });
            }
        }
    }
    out
}

/// Reference and flooded NRCS scenes on the scenario grid.
///
/// The reference precedes the run by one day; the flood scene is stamped at the end
/// of the run and darkens the central half of every flooded region.
pub fn flood_scenes(spec: &ScenarioSpec, seed: u64) -> Result<(GeoGrid, GeoGrid)> {
    spec.validate()?;
    let g = spec.geometry;
    let drop = 10f64.powf(FLOOD_DROP_DB / 10.0);
    let mut flood = vec![LAND_NRCS; g.len()];
    for name in &spec.flooded {
        let r = spec
            .regions
            .iter()
            .find(|r| &r.name == name)
            .ok_or_else(|| Error::UnknownRegion(name.clone()))?;
        let (h_lat, h_lon) = ((r.lat_max - r.lat_min) / 4.0, (r.lon_max - r.lon_min) / 4.0);
        let (clat, clon) = r.center();
        let patch = RegionBox::new(name.clone(), clat - h_lat, clat + h_lat, clon - h_lon, clon + h_lon)?;
        for (row, col) in g.cells_in(&patch) {
            flood[g.index(row, col)] = LAND_NRCS * drop;
        }
    }
    let mut reference = vec![LAND_NRCS; g.len()];
    let mut noise = Noise {
        rng: ChaCha8Rng::seed_from_u64(seed ^ 0x5a5a_5a5a),
    };
    // Multiplicative speckle of about 0.3 dB when any noise is requested.
    if spec.bt_noise_k > 0.0 || spec.wind_noise_mps > 0.0 || spec.rain_noise_mmh > 0.0 {
        for v in [&mut reference, &mut flood] {
            let mut db: Vec<f64> = v.iter().map(|x| 10.0 * x.log10()).collect();
            noise.apply(&mut db, 0.3, -60.0, 20.0);
            for (x, d) in v.iter_mut().zip(db) {
                *x = 10f64.powf(d / 10.0);
            }
        }
    }
    let end = spec.start + Duration::seconds(spec.duration_s);
    Ok((
        GeoGrid::new(Variable::Nrcs, spec.start - Duration::days(1), g, reference, NODATA)?,
        GeoGrid::new(Variable::Nrcs, end, g, flood, NODATA)?,
    ))
}
