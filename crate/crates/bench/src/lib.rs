//! Benchmark fixtures.

use floodwarn_core::fusion::PipelineInputs;
use floodwarn_core::scenario::{generate, paper_replay_spec, Scenario};
use floodwarn_core::{GeoGrid, Geometry, Variable};

/// Replay scenario with the default seed.
pub fn replay() -> Scenario {
    generate(&paper_replay_spec(), 0).expect("replay scenario")
}

pub fn inputs(s: &Scenario) -> PipelineInputs {
    PipelineInputs {
        bt: s.bt.clone(),
        rain: vec![s.rain.clone()],
        wind: vec![s.wind.clone()],
        nrcs: vec![s.nrcs.clone()],
    }
}

/// BT frame with the replay cell near its peak coverage.
pub fn busy_bt_frame(s: &Scenario) -> GeoGrid {
    let frames = s.bt.frames();
    frames[frames.len() / 4].clone()
}

/// NRCS field with a fixed pseudo-random pattern, `days` after the replay start.
pub fn nrcs_field(geometry: Geometry, scale: f64, days: i64) -> GeoGrid {
    let t = paper_replay_spec().start + chrono::Duration::days(days);
    let values = (0..geometry.len())
        .map(|i| scale * (0.02 + 0.01 * ((i * 7919) % 13) as f64))
        .collect();
    GeoGrid::new(Variable::Nrcs, t, geometry, values, -9999.0).expect("nrcs field")
}
