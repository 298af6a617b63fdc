//! Grid Stack Format: a plain-text, line-oriented container for [`GridStack`].
//!
//! ```text
//! GSF1
//! variable=BT
//! units=K
//! time=2020-10-05T22:40:00Z
//! nrows=2
//! ncols=2
//! lat_min=14.025
//! lon_min=103.025
//! dlat=0.05
//! dlon=0.05
//! nodata=-9999
//! 210 210
//! 210 210
//! ---
//! GSF1
//! ...
//! ```
//!
//! Reals are written in their shortest round-trip decimal form, so a
//! read/write cycle is bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geogrid::{GeoGrid, Geometry, GridStack, Variable};
use crate::time::{format_time, parse_time};

const MAGIC: &str = "GSF1";
const SEPARATOR: &str = "---";
const KEYS: [&str; 10] = [
    "variable", "units", "time", "nrows", "ncols", "lat_min", "lon_min", "dlat", "dlon", "nodata",
];

/// Canonical serialization of a stack.
pub fn to_gsf_string(stack: &GridStack) -> Result<String> {
    if stack.is_empty() {
        return Err(Error::EmptyStack);
    }
    let mut out = String::new();
    for (i, frame) in stack.frames().iter().enumerate() {
        if i > 0 {
            out.push_str(SEPARATOR);
            out.push('\n');
        }
        let g = frame.geometry();
        // write! into a String cannot fail
        let _ = write!(
            out,
            "{MAGIC}\nvariable={}\nunits={}\ntime={}\nnrows={}\nncols={}\n\
             lat_min={}\nlon_min={}\ndlat={}\ndlon={}\nnodata={}\n",
            frame.variable(),
            frame.units(),
            format_time(&frame.time()),
            g.nrows,
            g.ncols,
            g.lat_min,
            g.lon_min,
            g.dlat,
            g.dlon,
            frame.nodata()
        );
        for row in frame.values().chunks(g.ncols) {
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{v}");
            }
            out.push('\n');
        }
    }
    Ok(out)
}

/// Writes the canonical serialization of `stack` to `path`.
pub fn write_gsf(stack: &GridStack, path: impl AsRef<Path>) -> Result<()> {
    let text = to_gsf_string(stack)?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_gsf(path: impl AsRef<Path>) -> Result<GridStack> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::from(e).context(path.display().to_string()))?;
    parse_gsf(&text).map_err(|e| e.context(path.display().to_string()))
}

struct Lines<'a> {
    lines: Vec<&'a str>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Option<(usize, &'a str)> {
        let line = *self.lines.get(self.pos)?;
        self.pos += 1;
        Some((self.pos, line))
    }

    fn peek(&self) -> Option<&'a str> {
        self.lines.get(self.pos).copied()
    }

    fn last_line_no(&self) -> usize {
        self.pos.max(1)
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn header_value<'a>(lines: &mut Lines<'a>, key: &str) -> Result<(usize, &'a str)> {
    let (no, line) = lines
        .next()
        .ok_or_else(|| parse_err(lines.last_line_no(), format!("missing `{key}=` line")))?;
    match line.split_once('=') {
        Some((k, v)) if k == key => Ok((no, v)),
        _ => Err(parse_err(no, format!("expected `{key}=...`, found {line:?}"))),
    }
}

fn parse_num<T: std::str::FromStr>(no: usize, key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| parse_err(no, format!("{key}: {v:?} is not a valid number")))
}

/// Parses GSF text.
pub fn parse_gsf(text: &str) -> Result<GridStack> {
    let mut raw: Vec<&str> = text.split('\n').collect();
    if raw.last() == Some(&"") {
        raw.pop();
    }
    let mut lines = Lines { lines: raw, pos: 0 };
    let mut stack = GridStack::default();
    let mut frame_no = 0;

    loop {
        frame_no += 1;
        let (no, magic) = lines
            .next()
            .ok_or_else(|| parse_err(lines.last_line_no(), "expected `GSF1`"))?;
        if magic != MAGIC {
            return Err(parse_err(no, format!("expected `GSF1`, found {magic:?}")));
        }
        let mut header = Vec::with_capacity(KEYS.len());
        for key in KEYS {
            header.push(header_value(&mut lines, key)?);
        }
        let (no, v) = header[0];
        let variable: Variable = v.parse().map_err(|e: String| parse_err(no, e))?;
        let (no, v) = header[1];
        if v != variable.units() {
            return Err(parse_err(
                no,
                format!("units {v:?} do not match {variable} (expected {:?})", variable.units()),
            ));
        }
        let (no, v) = header[2];
        let time = parse_time(v).ok_or_else(|| parse_err(no, format!("bad time {v:?}")))?;
        let nrows: usize = parse_num(header[3].0, "nrows", header[3].1)?;
        let ncols: usize = parse_num(header[4].0, "ncols", header[4].1)?;
        let lat_min: f64 = parse_num(header[5].0, "lat_min", header[5].1)?;
        let lon_min: f64 = parse_num(header[6].0, "lon_min", header[6].1)?;
        let dlat: f64 = parse_num(header[7].0, "dlat", header[7].1)?;
        let dlon: f64 = parse_num(header[8].0, "dlon", header[8].1)?;
        let nodata: f64 = parse_num(header[9].0, "nodata", header[9].1)?;
        let geometry = Geometry::new(lat_min, lon_min, dlat, dlon, nrows, ncols)
            .map_err(|e| parse_err(header[3].0, e.to_string()))?;

        let mut values = Vec::with_capacity(geometry.len());
        for r in 0..nrows {
            let Some((no, line)) = lines.next().filter(|(_, l)| *l != SEPARATOR) else {
                return Err(Error::Payload {
                    frame: frame_no,
                    message: format!("expected {nrows} data rows, found {r}"),
                });
            };
            let before = values.len();
            for tok in line.split(' ') {
                values.push(parse_num::<f64>(no, "value", tok)?);
            }
            if values.len() - before != ncols {
                return Err(Error::Payload {
                    frame: frame_no,
                    message: format!(
                        "line {no}: expected {ncols} values, found {}",
                        values.len() - before
                    ),
                });
            }
        }
        let frame = GeoGrid::new(variable, time, geometry, values, nodata).map_err(|e| {
            Error::Payload {
                frame: frame_no,
                message: e.to_string(),
            }
        })?;
        stack.push(frame)?;

        match lines.next() {
            None => break,
            Some((_, SEPARATOR)) if lines.peek().is_some() => continue,
            Some((no, SEPARATOR)) => {
                return Err(parse_err(no, "separator not followed by a frame"));
            }
            Some((no, _)) => {
                return Err(Error::Payload {
                    frame: frame_no,
                    message: format!("line {no}: more than {nrows} data rows"),
                });
            }
        }
    }
    Ok(stack)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE: &str = "GSF1\nvariable=BT\nunits=K\ntime=2020-10-05T10:00:00Z\nnrows=2\nncols=2\n\
lat_min=14\nlon_min=103\ndlat=0.5\ndlon=0.5\nnodata=-9999\n210 210\n210 210\n";

    #[test]
    fn reads_single_frame() {
        let s = parse_gsf(ONE).unwrap();
        assert_eq!(s.len(), 1);
        assert!(s.frames()[0].values().iter().all(|&v| v == 210.0));
        assert_eq!(to_gsf_string(&s).unwrap(), ONE);
    }

    #[test]
    fn duplicate_time_is_ordering_error() {
        let text = format!("{ONE}---\n{ONE}");
        assert!(matches!(parse_gsf(&text), Err(Error::Ordering { frame: 2, .. })));
    }

    #[test]
    fn malformed_header_names_line() {
        let text = ONE.replace("ncols=2", "cols=2");
        match parse_gsf(&text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 6),
            other => panic!("unexpected {other:?}"),
        }
        let text = ONE.replace("units=K", "units=C");
        assert!(matches!(parse_gsf(&text), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn payload_count_errors() {
        let short_row = ONE.replace("210 210\n210 210\n", "210 210\n210\n");
        assert!(matches!(parse_gsf(&short_row), Err(Error::Payload { .. })));
        let missing_row = ONE.replace("210 210\n210 210\n", "210 210\n");
        assert!(matches!(parse_gsf(&missing_row), Err(Error::Payload { .. })));
        let extra_row = format!("{ONE}210 210\n");
        assert!(matches!(parse_gsf(&extra_row), Err(Error::Payload { .. })));
    }

    #[test]
    fn empty_stack_is_rejected() {
        assert!(matches!(
            to_gsf_string(&GridStack::default()),
            Err(Error::EmptyStack)
        ));
        assert!(parse_gsf("").is_err());
    }

    #[test]
    fn geometry_mismatch_between_frames() {
        let second = ONE
            .replace("10:00:00", "10:10:00")
            .replace("dlat=0.5", "dlat=0.25");
        assert!(matches!(
            parse_gsf(&format!("{ONE}---\n{second}")),
            Err(Error::GeometryMismatch(_))
        ));
    }
}
