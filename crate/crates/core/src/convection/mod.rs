//! Deep-convective cloud detection on brightness-temperature frames.

pub(crate) mod label;

pub(crate) use label::components;

use chrono::{DateTime, Utc};

use crate::error::{Error, Result};
use crate::geogrid::{GeoGrid, Geometry, RegionBox, Variable};
use crate::time::format_time;

/// Default deep-convection threshold in kelvin.
pub const T_DEEP_K: f64 = 220.0;
/// Default minimum component size in cells.
pub const MIN_AREA_PX: usize = 4;

/// One detected convective cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CSObject {
    pub id: u32,
    pub time: DateTime<Utc>,
    pub pixel_count: usize,
    pub area_km2: f64,
    pub centroid_lat: f64,
    pub centroid_lon: f64,
    /// Filled by [`summarize`].
    pub min_bt: Option<f64>,
    pub mean_bt: Option<f64>,
    /// Cell-edge bounding box of the member cells.
    pub bbox: RegionBox,
    /// Member cells as `(row, col)` in raster order.
    pub cells: Vec<(usize, usize)>,
    pub geometry: Geometry,
}

/// Marks cells with `BT <= t_deep` as 1; nodata stays nodata.
pub fn convective_mask(bt: &GeoGrid, t_deep: f64) -> Result<GeoGrid> {
    bt.expect_variable(Variable::Bt)?;
    let values = bt
        .values()
        .iter()
        .map(|&v| {
            if bt.is_nodata(v) {
                v
            } else if v <= t_deep {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    bt.derive(Variable::FloodMask, values)
}

/// 8-connected components of the 1-cells of `mask` holding at least `min_area_px` cells.
///
/// Ids count up from 1 in raster-scan order of each component's first cell.
pub fn label_components(mask: &GeoGrid, min_area_px: usize) -> Vec<CSObject> {
    let g = *mask.geometry();
    let on: Vec<bool> = mask.values().iter().map(|&v| v == 1.0).collect();
    let mut id = 0;
    components(&on, g.nrows, g.ncols)
        .into_iter()
        .filter(|cells| cells.len() >= min_area_px.max(1))
        .map(|cells| {
            id += 1;
            describe(id, mask.time(), &g, cells)
        })
        .collect()
}

fn describe(id: u32, time: DateTime<Utc>, g: &Geometry, cells: Vec<(usize, usize)>) -> CSObject {
    let n = cells.len() as f64;
    let (mut lat_sum, mut lon_sum, mut area) = (0.0, 0.0, 0.0);
    let (mut r_min, mut r_max, mut c_min, mut c_max) = (usize::MAX, 0, usize::MAX, 0);
    for &(r, c) in &cells {
        lat_sum += g.lat(r);
        lon_sum += g.lon(c);
        area += g.cell_area_km2(r);
        r_min = r_min.min(r);
        r_max = r_max.max(r);
        c_min = c_min.min(c);
        c_max = c_max.max(c);
    }
    let bbox = RegionBox {
        name: format!("cs{id}"),
        lat_min: g.lat(r_max) - g.dlat / 2.0,
        lat_max: g.lat(r_min) + g.dlat / 2.0,
        lon_min: g.lon(c_min) - g.dlon / 2.0,
        lon_max: g.lon(c_max) + g.dlon / 2.0,
    };
    CSObject {
        id,
        time,
        pixel_count: cells.len(),
        area_km2: area,
        centroid_lat: lat_sum / n,
        centroid_lon: lon_sum / n,
        min_bt: None,
        mean_bt: None,
        bbox,
        cells,
        geometry: *g,
    }
}

/// Fills `min_bt` / `mean_bt` from the member cells of each object.
pub fn summarize(bt: &GeoGrid, objects: &mut [CSObject]) -> Result<()> {
    bt.expect_variable(Variable::Bt)?;
    for obj in objects.iter_mut() {
        if obj.geometry != *bt.geometry() {
            return Err(Error::GeometryMismatch(format!(
                "object {} was labeled on a different grid than the BT frame",
                obj.id
            )));
        }
        let (mut min, mut sum, mut n) = (f64::INFINITY, 0.0, 0usize);
        for v in obj.cells.iter().filter_map(|&(r, c)| bt.get(r, c)) {
            min = min.min(v);
            sum += v;
            n += 1;
        }
        if n > 0 {
            obj.min_bt = Some(min);
            obj.mean_bt = Some(sum / n as f64);
        }
    }
    Ok(())
}

/// Threshold, label and summarize one BT frame.
pub fn detect(bt: &GeoGrid, t_deep: f64, min_area_px: usize) -> Result<Vec<CSObject>> {
    let mask = convective_mask(bt, t_deep)?;
    let mut objects = label_components(&mask, min_area_px);
    summarize(bt, &mut objects)?;
    Ok(objects)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const OBJECTS_CSV_HEADER: &str =
    "time,id,pixel_count,area_km2,centroid_lat,centroid_lon,min_bt,mean_bt";

/// One CSV line per object, without trailing newline.
pub fn object_csv_line(o: &CSObject) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        format_time(&o.time),
        o.id,
        o.pixel_count,
        o.area_km2,
        o.centroid_lat,
        o.centroid_lon,
        opt(o.min_bt),
        opt(o.mean_bt)
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geogrid::NODATA;
    use crate::time::parse_time;

    fn bt_grid(nrows: usize, ncols: usize, values: Vec<f64>) -> GeoGrid {
        let g = Geometry::new(15.0, 107.0, 0.05, 0.05, nrows, ncols).unwrap();
        GeoGrid::new(
            Variable::Bt,
            parse_time("2020-10-05T22:40:00Z").unwrap(),
            g,
            values,
            NODATA,
        )
        .unwrap()
    }

    #[test]
    fn threshold_is_inclusive() {
        let bt = bt_grid(1, 4, vec![210.0, 225.0, 220.0, 220.1]);
        let m = convective_mask(&bt, T_DEEP_K).unwrap();
        assert_eq!(m.values(), &[1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn nodata_passes_through() {
        let bt = bt_grid(2, 2, vec![NODATA; 4]);
        let m = convective_mask(&bt, T_DEEP_K).unwrap();
        assert!(m.values().iter().all(|&v| v == NODATA));
    }

    #[test]
    fn mask_requires_bt() {
        let g = Geometry::new(0.0, 0.0, 1.0, 1.0, 1, 1).unwrap();
        let rain = GeoGrid::filled(
            Variable::RainRate,
            parse_time("2020-10-05T00:00:00Z").unwrap(),
            g,
            1.0,
        )
        .unwrap();
        assert!(matches!(
            convective_mask(&rain, T_DEEP_K),
            Err(Error::WrongVariable { .. })
        ));
    }

    #[test]
    fn two_blobs_and_area_filter() {
        let mut v = vec![280.0; 8 * 8];
        for r in 0..3 {
            for c in 0..3 {
                v[r * 8 + c] = 205.0;
                v[(r + 5) * 8 + c + 5] = 205.0;
            }
        }
        v[7] = 205.0; // isolated pixel at row 0, col 7
        let bt = bt_grid(8, 8, v);
        let objs = detect(&bt, T_DEEP_K, 1).unwrap();
        assert_eq!(objs.len(), 3);
        assert_eq!(objs[0].pixel_count, 9);
        assert_eq!(objs[1].pixel_count, 1);
        assert_eq!(objs[2].pixel_count, 9);
        let objs = detect(&bt, T_DEEP_K, 4).unwrap();
        assert_eq!(objs.len(), 2);
        assert_eq!(objs.iter().map(|o| o.id).collect::<Vec<_>>(), vec![1, 2]);
        for o in &objs {
            assert_eq!(o.min_bt, Some(205.0));
            assert_eq!(o.mean_bt, Some(205.0));
            assert!(o.bbox.contains(o.centroid_lat, o.centroid_lon));
        }
    }

    #[test]
    fn min_semantics() {
        let mut v = vec![210.0; 9];
        v[4] = 200.0;
        let bt = bt_grid(3, 3, v);
        let objs = detect(&bt, T_DEEP_K, 1).unwrap();
        assert_eq!(objs[0].min_bt, Some(200.0));
        assert!((objs[0].mean_bt.unwrap() - (8.0 * 210.0 + 200.0) / 9.0).abs() < 1e-12);
    }

    #[test]
    fn area_uses_cell_latitude() {
        let bt = bt_grid(1, 1, vec![205.0]);
        let objs = detect(&bt, T_DEEP_K, 1).unwrap();
        let expected = (0.05 * 111.195) * (0.05 * 111.195 * 15f64.to_radians().cos());
        assert!((objs[0].area_km2 - expected).abs() < 1e-9);
    }

    #[test]
    fn summarize_rejects_other_geometry() {
        let bt = bt_grid(3, 3, vec![205.0; 9]);
        let mut objs = detect(&bt, T_DEEP_K, 1).unwrap();
        let other = bt_grid(3, 4, vec![205.0; 12]);
        assert!(matches!(
            summarize(&other, &mut objs),
            Err(Error::GeometryMismatch(_))
        ));
    }
}
