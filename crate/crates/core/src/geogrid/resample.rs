use crate::error::{Error, Result};
use crate::geogrid::{GeoGrid, Geometry, RegionBox};

/// Cells of `grid` whose centers lie inside `region` (edges inclusive).
pub fn subset(grid: &GeoGrid, region: &RegionBox) -> Result<GeoGrid> {
    let g = grid.geometry();
    let (Some((r0, r1)), Some((c0, c1))) = (
        g.rows_within(region.lat_min, region.lat_max),
        g.cols_within(region.lon_min, region.lon_max),
    ) else {
        return Err(Error::EmptySubset(region.name.clone()));
    };
    let geometry = Geometry {
        lat_min: g.lat(r1),
        lon_min: g.lon(c0),
        dlat: g.dlat,
        dlon: g.dlon,
        nrows: r1 - r0 + 1,
        ncols: c1 - c0 + 1,
    };
    let values = (r0..=r1)
        .flat_map(|r| (c0..=c1).map(move |c| (r, c)))
        .map(|(r, c)| grid.values()[g.index(r, c)])
        .collect();
    GeoGrid::new(grid.variable(), grid.time(), geometry, values, grid.nodata())
}

/// Index of the axis center `origin + i * step` (i < n) nearest to `x`; ties go to the lower index.
fn nearest_on_axis(x: f64, origin: f64, step: f64, n: usize) -> usize {
    let f = ((x - origin) / step).floor();
    let last = (n - 1) as f64;
    let lo = f.clamp(0.0, last) as usize;
    let hi = (f + 1.0).clamp(0.0, last) as usize;
    let d_lo = (x - (origin + lo as f64 * step)).abs();
    let d_hi = (x - (origin + hi as f64 * step)).abs();
    if d_hi < d_lo {
        hi
    } else {
        lo
    }
}

/// Nearest-neighbor regridding of `src` onto `target`.
///
/// Each target cell takes the value of the source cell with the nearest center.
/// Target cells farther than `max(dlat, dlon)` of the source from every source center
/// become nodata.
pub fn resample_nn(src: &GeoGrid, target: &Geometry) -> Result<GeoGrid> {
    target.validate()?;
    let s = src.geometry();
    if !s.extent().intersects(&target.extent()) {
        return Err(Error::GeometryMismatch(
            "target geometry does not overlap the source grid".into(),
        ));
    }
    if s == target {
        return Ok(src.clone());
    }
    let reach = s.dlat.max(s.dlon);
    let cols: Vec<(usize, f64)> = (0..target.ncols)
        .map(|c| {
            let lon = target.lon(c);
            let j = nearest_on_axis(lon, s.lon_min, s.dlon, s.ncols);
            (j, lon - s.lon(j))
        })
        .collect();
    let mut values = Vec::with_capacity(target.len());
    for r in 0..target.nrows {
        let lat = target.lat(r);
        let south = nearest_on_axis(lat, s.lat_min, s.dlat, s.nrows);
        let src_row = s.nrows - 1 - south;
        let dy = lat - s.lat(src_row);
        for &(j, dx) in &cols {
            if (dy * dy + dx * dx).sqrt() <= reach {
                values.push(src.values()[s.index(src_row, j)]);
            } else {
                values.push(src.nodata());
            }
        }
    }
    GeoGrid::new(src.variable(), src.time(), *target, values, src.nodata())
}
