//! Radar wind retrieval through invertible geophysical model functions, and
//! harmonization of multi-source wind speeds into severity categories.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use chrono::{DateTime, Utc};

use crate::error::{Error, Result};
use crate::geogrid::{GeoGrid, Geometry, RegionBox, Variable};
use crate::time::TimeWindow;

/// Default inversion cap in m/s.
pub const V_MAX: f64 = 25.0;
/// Upper bound of the forward-model domain in m/s.
pub const V_DOMAIN_MAX: f64 = 60.0;
/// Bisection stops once the bracket is this narrow (m/s).
pub const INVERT_TOL: f64 = 1e-4;
/// Lower edges of WEAK, MODERATE and SEVERE in m/s.
pub const DEFAULT_BINS: [f64; 3] = [5.0, 10.0, 15.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum WindCategory {
    None,
    Weak,
    Moderate,
    Severe,
}

impl WindCategory {
    pub const ALL: [WindCategory; 4] = [
        WindCategory::None,
        WindCategory::Weak,
        WindCategory::Moderate,
        WindCategory::Severe,
    ];

    pub fn rank(self) -> u8 {
        self as u8
    }

    pub fn name(self) -> &'static str {
        match self {
            WindCategory::None => "NONE",
            WindCategory::Weak => "WEAK",
            WindCategory::Moderate => "MODERATE",
            WindCategory::Severe => "SEVERE",
        }
    }
}

impl fmt::Display for WindCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WindCategory {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        WindCategory::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown wind category {s:?}"))
    }
}

/// Viewing geometry of one radar measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmfGeometry {
    incidence_deg: f64,
    rel_azimuth_deg: f64,
}

impl GmfGeometry {
    pub fn new(incidence_deg: f64, rel_azimuth_deg: f64) -> Result<Self> {
        if !(incidence_deg > 0.0 && incidence_deg < 90.0) {
            return Err(Error::OutOfRange {
                what: "incidence angle (deg)",
                value: incidence_deg,
            });
        }
        if !(0.0..360.0).contains(&rel_azimuth_deg) {
            return Err(Error::OutOfRange {
                what: "relative azimuth (deg)",
                value: rel_azimuth_deg,
            });
        }
        Ok(Self {
            incidence_deg,
            rel_azimuth_deg,
        })
    }

    pub fn incidence_deg(&self) -> f64 {
        self.incidence_deg
    }

    pub fn rel_azimuth_deg(&self) -> f64 {
        self.rel_azimuth_deg
    }
}

impl Default for GmfGeometry {
    /// Mid-swath C-band SAR geometry, upwind look.
    fn default() -> Self {
        Self {
            incidence_deg: 35.0,
            rel_azimuth_deg: 0.0,
        }
    }
}

/// Forward model from wind speed and geometry to linear NRCS.
///
/// Implementations must return a positive σ0 that increases strictly with speed on
/// `[0, 25]` m/s for every geometry; [`gmf_invert`] relies on it.
pub trait Gmf: Send + Sync {
    fn name(&self) -> &str;
    fn sigma0(&self, speed_mps: f64, geometry: &GmfGeometry) -> f64;
}

/// Geometry-independent reference model `σ0 = 0.001 (1 + v)^1.5`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Synth1;

impl Gmf for Synth1 {
    fn name(&self) -> &str {
        "synth1"
    }

    fn sigma0(&self, speed_mps: f64, _geometry: &GmfGeometry) -> f64 {
        0.001 * (1.0 + speed_mps).powf(1.5)
    }
}

/// Named GMFs. `synth1` is always present.
#[derive(Clone)]
pub struct GmfRegistry {
    models: BTreeMap<String, Arc<dyn Gmf>>,
}

impl Default for GmfRegistry {
    fn default() -> Self {
        let mut r = Self {
            models: BTreeMap::new(),
        };
        r.register(Arc::new(Synth1));
        r
    }
}

impl fmt::Debug for GmfRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.models.keys()).finish()
    }
}

impl GmfRegistry {
    pub fn register(&mut self, gmf: Arc<dyn Gmf>) {
        self.models.insert(gmf.name().to_string(), gmf);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Gmf>> {
        self.models
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownGmf(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.models.keys().map(String::as_str)
    }
}

pub fn gmf_forward(gmf: &dyn Gmf, speed_mps: f64, geometry: &GmfGeometry) -> Result<f64> {
    if !(0.0..=V_DOMAIN_MAX).contains(&speed_mps) {
        return Err(Error::OutOfRange {
            what: "wind speed (m/s)",
            value: speed_mps,
        });
    }
    let s = gmf.sigma0(speed_mps, geometry);
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::OutOfRange {
            what: "model sigma0",
            value: s,
        });
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clip {
    Low,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inversion {
    pub speed_mps: f64,
    pub clip: Option<Clip>,
}

/// Wind speed whose forward σ0 matches `sigma0`, by bisection on `[0, v_max]`.
///
/// σ0 below the model's zero-wind value returns 0 flagged [`Clip::Low`]; above the
/// value at `v_max` returns `v_max` flagged [`Clip::High`].
pub fn gmf_invert(
    gmf: &dyn Gmf,
    sigma0: f64,
    geometry: &GmfGeometry,
    v_max: f64,
) -> Result<Inversion> {
    if !(sigma0 >= 0.0 && sigma0.is_finite()) {
        return Err(Error::OutOfRange {
            what: "sigma0",
            value: sigma0,
        });
    }
    if !(v_max > 0.0 && v_max <= V_DOMAIN_MAX) {
        return Err(Error::OutOfRange {
            what: "v_max (m/s)",
            value: v_max,
        });
    }
    if sigma0 < gmf_forward(gmf, 0.0, geometry)? {
        return Ok(Inversion {
            speed_mps: 0.0,
            clip: Some(Clip::Low),
        });
    }
    if sigma0 > gmf_forward(gmf, v_max, geometry)? {
        return Ok(Inversion {
            speed_mps: v_max,
            clip: Some(Clip::High),
        });
    }
    let (mut lo, mut hi) = (0.0, v_max);
    while hi - lo > INVERT_TOL {
        let mid = 0.5 * (lo + hi);
        if gmf.sigma0(mid, geometry) < sigma0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Inversion {
        speed_mps: 0.5 * (lo + hi),
        clip: None,
    })
}

/// Per-cell viewing geometry for a radar scene.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryGrid {
    pub nrows: usize,
    pub ncols: usize,
    cells: Vec<GmfGeometry>,
}

impl GeometryGrid {
    pub fn new(nrows: usize, ncols: usize, cells: Vec<GmfGeometry>) -> Result<Self> {
        if cells.len() != nrows * ncols {
            return Err(Error::GeometryMismatch(format!(
                "{} viewing geometries for a {nrows}x{ncols} grid",
                cells.len()
            )));
        }
        Ok(Self { nrows, ncols, cells })
    }

    pub fn uniform(geometry: GmfGeometry, nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            cells: vec![geometry; nrows * ncols],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindRetrieval {
    pub grid: GeoGrid,
    pub clipped_low: usize,
    pub clipped_high: usize,
}

/// Cellwise inversion of an NRCS scene into wind speed.
pub fn retrieve_wind_grid(
    nrcs: &GeoGrid,
    geometry: &GeometryGrid,
    gmf: &dyn Gmf,
    v_max: f64,
) -> Result<WindRetrieval> {
    nrcs.expect_variable(Variable::Nrcs)?;
    let g = nrcs.geometry();
    if geometry.nrows != g.nrows || geometry.ncols != g.ncols {
        return Err(Error::GeometryMismatch(format!(
            "viewing geometry is {}x{} but the scene is {}x{}",
            geometry.nrows, geometry.ncols, g.nrows, g.ncols
        )));
    }
    let (mut low, mut high) = (0, 0);
    let mut values = Vec::with_capacity(g.len());
    for (&s, geom) in nrcs.values().iter().zip(&geometry.cells) {
        if nrcs.is_nodata(s) {
            values.push(s);
            continue;
        }
        let inv = gmf_invert(gmf, s, geom, v_max)?;
        match inv.clip {
            Some(Clip::Low) => low += 1,
            Some(Clip::High) => high += 1,
            None => {}
        }
        values.push(inv.speed_mps);
    }
    Ok(WindRetrieval {
        grid: nrcs.derive(Variable::WindSpeed, values)?,
        clipped_low: low,
        clipped_high: high,
    })
}

/// Category with half-open bins `[lo, hi)`; `bins` are the lower edges of
/// WEAK, MODERATE and SEVERE.
pub fn categorize_with(speed_mps: f64, bins: &[f64; 3]) -> Result<WindCategory> {
    if speed_mps.is_nan() || speed_mps < 0.0 {
        return Err(Error::OutOfRange {
            what: "wind speed (m/s)",
            value: speed_mps,
        });
    }
    check_bins(bins)?;
    Ok(match bins.iter().filter(|&&edge| speed_mps >= edge).count() {
        0 => WindCategory::None,
        1 => WindCategory::Weak,
        2 => WindCategory::Moderate,
        _ => WindCategory::Severe,
    })
}

/// Category under the default 5/10/15 m/s bins.
pub fn categorize(speed_mps: f64) -> Result<WindCategory> {
    categorize_with(speed_mps, &DEFAULT_BINS)
}

/// Validates a bin triple: finite, positive, strictly increasing.
pub fn check_bins(bins: &[f64; 3]) -> Result<()> {
    let ok = bins[0] > 0.0 && bins[0] < bins[1] && bins[1] < bins[2] && bins[2].is_finite();
    if ok {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            what: "wind category bins",
            value: bins[0],
        })
    }
}

/// Wind categories on a grid; `None` cells had no observation.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryGrid {
    pub time: DateTime<Utc>,
    pub geometry: Geometry,
    pub cells: Vec<Option<WindCategory>>,
}

pub fn categorize_grid_with(wind: &GeoGrid, bins: &[f64; 3]) -> Result<CategoryGrid> {
    wind.expect_variable(Variable::WindSpeed)?;
    let cells = wind
        .values()
        .iter()
        .map(|&v| {
            if wind.is_nodata(v) {
                Ok(None)
            } else {
                categorize_with(v, bins).map(Some)
            }
        })
        .collect::<Result<_>>()?;
    Ok(CategoryGrid {
        time: wind.time(),
        geometry: *wind.geometry(),
        cells,
    })
}

pub fn categorize_grid(wind: &GeoGrid) -> Result<CategoryGrid> {
    categorize_grid_with(wind, &DEFAULT_BINS)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegionWind {
    pub category: WindCategory,
    /// No source observed any cell of the area in the window.
    pub no_observation: bool,
    /// Number of sources with at least one observed cell.
    pub sources: usize,
}

/// Maximum category over sources, frames inside `window` and cells whose centers fall
/// inside any of `areas`.
pub fn max_category_in(
    sources: &[&[CategoryGrid]],
    areas: &[RegionBox],
    window: &TimeWindow,
) -> RegionWind {
    let mut best: Option<WindCategory> = None;
    let mut observing = 0;
    for frames in sources {
        let mut seen = false;
        for frame in frames.iter().filter(|f| window.contains(&f.time)) {
            for area in areas {
                for (r, c) in frame.geometry.cells_in(area) {
                    if let Some(cat) = frame.cells[frame.geometry.index(r, c)] {
                        seen = true;
                        best = Some(best.map_or(cat, |b| b.max(cat)));
                    }
                }
            }
        }
        observing += usize::from(seen);
    }
    RegionWind {
        category: best.unwrap_or(WindCategory::None),
        no_observation: best.is_none(),
        sources: observing,
    }
}

/// Maximum category over all sources, frames in `window` and cells in `region`.
pub fn region_max_category(
    sources: &[&[CategoryGrid]],
    region: &RegionBox,
    window: &TimeWindow,
) -> RegionWind {
    max_category_in(sources, std::slice::from_ref(region), window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geogrid::NODATA;
    use crate::time::parse_time;

    #[test]
    fn synth1_anchors() {
        let g = GmfGeometry::default();
        assert_eq!(gmf_forward(&Synth1, 0.0, &g).unwrap(), 0.001);
        assert!((gmf_forward(&Synth1, 24.0, &g).unwrap() - 0.125).abs() < 1e-15);
        assert!(gmf_forward(&Synth1, -1.0, &g).is_err());
        assert!(gmf_forward(&Synth1, 60.5, &g).is_err());
    }

    #[test]
    fn invert_round_trip_and_clips() {
        let g = GmfGeometry::default();
        let s = gmf_forward(&Synth1, 12.3, &g).unwrap();
        let inv = gmf_invert(&Synth1, s, &g, V_MAX).unwrap();
        assert!((inv.speed_mps - 12.3).abs() <= 1e-3);
        assert_eq!(inv.clip, None);

        let s40 = gmf_forward(&Synth1, 40.0, &g).unwrap();
        let inv = gmf_invert(&Synth1, s40, &g, V_MAX).unwrap();
        assert_eq!(inv.speed_mps, 25.0);
        assert_eq!(inv.clip, Some(Clip::High));

        let inv = gmf_invert(&Synth1, 0.0005, &g, V_MAX).unwrap();
        assert_eq!(inv.speed_mps, 0.0);
        assert_eq!(inv.clip, Some(Clip::Low));
        assert!(gmf_invert(&Synth1, -1.0, &g, V_MAX).is_err());
    }

    #[test]
    fn geometry_ranges() {
        assert!(GmfGeometry::new(0.0, 0.0).is_err());
        assert!(GmfGeometry::new(90.0, 0.0).is_err());
        assert!(GmfGeometry::new(30.0, 360.0).is_err());
        assert!(GmfGeometry::new(30.0, 359.9).is_ok());
    }

    #[test]
    fn bins_are_half_open() {
        let cases = [
            (3.0, WindCategory::None),
            (5.0, WindCategory::Weak),
            (7.0, WindCategory::Weak),
            (10.0, WindCategory::Moderate),
            (12.0, WindCategory::Moderate),
            (15.0, WindCategory::Severe),
            (18.0, WindCategory::Severe),
            (25.0, WindCategory::Severe),
        ];
        for (v, want) in cases {
            assert_eq!(categorize(v).unwrap(), want, "{v} m/s");
        }
        assert!(categorize(-0.1).is_err());
        assert!(categorize(f64::NAN).is_err());
    }

    #[test]
    fn retrieval_propagates_nodata_and_checks_shape() {
        let geom = Geometry::new(15.0, 108.0, 0.1, 0.1, 1, 3).unwrap();
        let t = parse_time("2020-10-05T22:36:04Z").unwrap();
        let s = gmf_forward(&Synth1, 20.0, &GmfGeometry::default()).unwrap();
        let nrcs = GeoGrid::new(Variable::Nrcs, t, geom, vec![s, NODATA, s], NODATA).unwrap();
        let view = GeometryGrid::uniform(GmfGeometry::default(), 1, 3);
        let out = retrieve_wind_grid(&nrcs, &view, &Synth1, V_MAX).unwrap();
        assert_eq!(out.grid.values()[1], NODATA);
        assert!((out.grid.values()[0] - 20.0).abs() < 1e-3);
        assert_eq!(out.grid.values()[0], out.grid.values()[2]);
        let wrong = GeometryGrid::uniform(GmfGeometry::default(), 3, 1);
        assert!(retrieve_wind_grid(&nrcs, &wrong, &Synth1, V_MAX).is_err());
    }

    #[test]
    fn registry_lookup() {
        let r = GmfRegistry::default();
        assert_eq!(r.get("synth1").unwrap().name(), "synth1");
        assert!(matches!(r.get("cmod9"), Err(Error::UnknownGmf(_))));
    }

    fn cat_grid(t: &str, cells: Vec<Option<WindCategory>>) -> CategoryGrid {
        CategoryGrid {
            time: parse_time(t).unwrap(),
            geometry: Geometry::new(15.0, 108.0, 1.0, 1.0, 1, cells.len()).unwrap(),
            cells,
        }
    }

    #[test]
    fn region_max_over_sources() {
        let hr = vec![cat_grid("2020-10-05T22:00:00Z", vec![Some(WindCategory::Moderate), None])];
        let lr = vec![cat_grid("2020-10-05T23:00:00Z", vec![Some(WindCategory::Severe), None])];
        let region = RegionBox::new("r", 14.0, 16.0, 107.5, 108.5).unwrap();
        let w = TimeWindow::new(
            parse_time("2020-10-05T21:00:00Z").unwrap(),
            parse_time("2020-10-06T00:00:00Z").unwrap(),
        )
        .unwrap();
        let one = region_max_category(&[&hr], &region, &w);
        assert_eq!(one.category, WindCategory::Moderate);
        let both = region_max_category(&[&hr, &lr], &region, &w);
        assert_eq!(both.category, WindCategory::Severe);
        assert_eq!(both.sources, 2);

        let east = RegionBox::new("e", 14.0, 16.0, 108.5, 109.5).unwrap();
        let none = region_max_category(&[&hr, &lr], &east, &w);
        assert_eq!(none.category, WindCategory::None);
        assert!(none.no_observation);
    }
}
