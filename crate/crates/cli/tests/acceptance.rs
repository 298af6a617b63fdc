//! Acceptance criteria 1-9. Each criterion prints one PASS/FAIL line; the process
//! exits nonzero if any criterion fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use floodwarn_cli::{cmd_floodmap, cmd_fuse, cmd_synth, cmd_validate, FloodmapArgs, FuseArgs, SynthArgs, ValidateArgs};
use floodwarn_core::convection::{convective_mask, detect, label_components};
use floodwarn_core::floodmap::{flood_mask, log_ratio_db};
use floodwarn_core::fusion::{decide, parse_report_csv, Level, RegionIndicators, RuleSet};
use floodwarn_core::geogrid::{GeoGrid, Geometry, GridStack, Variable, NODATA};
use floodwarn_core::precip::accumulate;
use floodwarn_core::scenario::{generate, paper_replay_spec, CellSpec, ScenarioSpec, Truth};
use floodwarn_core::time::{parse_time, TimeWindow};
use floodwarn_core::tracking::{motion_vector, Track, Tracker, TrackerParams};
use floodwarn_core::wind::{categorize, gmf_forward, gmf_invert, Gmf, GmfGeometry, GmfRegistry, WindCategory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = std::result::Result<(), String>;
type Criterion = (&'static str, &'static str, Duration, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn repo(path: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(path)
}

fn ac1_constants() -> Check {
    let speeds = [3.0, 5.0, 7.0, 10.0, 12.0, 15.0, 18.0, 25.0];
    use WindCategory::*;
    let expected = [None, Weak, Weak, Moderate, Moderate, Severe, Severe, Severe];
    for (v, want) in speeds.into_iter().zip(expected) {
        let got = categorize(v).map_err(|e| e.to_string())?;
        ensure(got == want, || format!("categorize({v}) = {got}, expected {want}"))?;
    }
    let g = Geometry::new(15.0, 108.0, 0.05, 0.05, 1, 2).unwrap();
    let t = parse_time("2020-10-06T00:00:00Z").unwrap();
    let bt = GeoGrid::new(Variable::Bt, t, g, vec![220.0, 220.1], NODATA).unwrap();
    let mask = convective_mask(&bt, floodwarn_core::convection::T_DEEP_K).unwrap();
    ensure(mask.values() == [1.0, 0.0], || format!("mask of [220, 220.1] = {:?}", mask.values()))?;
    let geom = GmfGeometry::default();
    let gmf = floodwarn_core::wind::Synth1;
    let sigma = gmf_forward(&gmf, 40.0, &geom).unwrap();
    let inv = gmf_invert(&gmf, sigma, &geom, floodwarn_core::wind::V_MAX).unwrap();
    ensure(inv.speed_mps == 25.0, || format!("invert(forward(40)) = {}", inv.speed_mps))
}

/// Monotone stand-in for a second registered model.
struct Quadratic;

impl Gmf for Quadratic {
    fn name(&self) -> &str {
        "quadratic"
    }

    fn sigma0(&self, v: f64, geometry: &GmfGeometry) -> f64 {
        (0.0005 + 0.0002 * v * v) * (1.0 + 0.1 * geometry.rel_azimuth_deg().to_radians().cos())
    }
}

fn ac2_gmf_round_trip() -> Check {
    let mut registry = GmfRegistry::default();
    registry.register(Arc::new(Quadratic));
    let geom = GmfGeometry::default();
    for name in registry.names().map(String::from).collect::<Vec<_>>() {
        let gmf = registry.get(&name).unwrap();
        let mut worst = 0.0f64;
        for k in 0..=50 {
            let v = k as f64 * 0.5;
            let s = gmf_forward(gmf.as_ref(), v, &geom).map_err(|e| e.to_string())?;
            let back = gmf_invert(gmf.as_ref(), s, &geom, 25.0).map_err(|e| e.to_string())?;
            worst = worst.max((v - back.speed_mps).abs());
        }
        ensure(worst <= 1e-3, || format!("{name}: sup error {worst} m/s"))?;
    }
    Ok(())
}

fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

fn ac3_tracking_fidelity() -> Check {
    for speed in [5.0, 10.0, 20.0] {
        for bearing in [0.0, 90.0, 270.0] {
            let spec = ScenarioSpec {
                geometry: Geometry::new(14.01, 106.01, 0.02, 0.02, 150, 150).unwrap(),
                duration_s: 3600,
                cells: vec![CellSpec {
                    birth_s: 0,
                    lat: 15.5,
                    lon: 107.5,
                    speed_mps: speed,
                    bearing_deg: bearing,
                    min_bt_k: 200.0,
                    radius_km: 60.0,
                    rain_peak_mmh: 10.0,
                    wind_peak_mps: 20.0,
                }],
                flooded: Vec::new(),
                ..paper_replay_spec()
            };
            let s = generate(&spec, 0).map_err(|e| e.to_string())?;
            let mut tracker = Tracker::new(TrackerParams::default());
            for f in s.bt.frames() {
                tracker.update(f.time(), detect(f, 220.0, 4).unwrap()).unwrap();
            }
            ensure(tracker.tracks().len() == 1, || format!("{speed} m/s {bearing}°: {} tracks", tracker.tracks().len()))?;
            let track = &tracker.tracks()[0];
            for n in 3..=track.observations.len() {
                let partial = Track {
                    track_id: track.track_id,
                    observations: track.observations[..n].to_vec(),
                };
                let m = motion_vector(&partial, 6).unwrap();
                let truth = s
                    .truth
                    .track
                    .iter()
                    .find(|p| p.time == partial.last().time)
                    .ok_or("truth record lacks a tracked frame")?;
                let rel = (m.speed_mps - truth.speed_mps).abs() / truth.speed_mps;
                let b = m.bearing_deg.ok_or("moving cell estimated as stationary")?;
                ensure(rel <= 0.05 && angle_diff(b, truth.bearing_deg) <= 5.0, || {
                    format!(
                        "{speed} m/s {bearing}° after {n} frames: estimated {:.3} m/s {b:.2}°",
                        m.speed_mps
                    )
                })?;
            }
        }
    }
    Ok(())
}

/// Union-find over all on-cells with full 8-neighbour scans.
fn union_find_oracle(on: &[bool], n: usize) -> Vec<Vec<(usize, usize)>> {
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut parent: Vec<usize> = (0..on.len()).collect();
    for i in 0..on.len() {
        if !on[i] {
            continue;
        }
        let (r, c) = ((i / n) as i64, (i % n) as i64);
        for dr in -1..=1 {
            for dc in -1..=1 {
                let (rr, cc) = (r + dr, c + dc);
                if (dr, dc) == (0, 0) || rr < 0 || cc < 0 || rr >= n as i64 || cc >= n as i64 {
                    continue;
                }
                let j = rr as usize * n + cc as usize;
                if on[j] {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<(usize, usize)>> = Default::default();
    for i in (0..on.len()).filter(|&i| on[i]) {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push((i / n, i % n));
    }
    let mut comps: Vec<_> = groups.into_values().collect();
    comps.sort_by_key(|c| c[0]);
    comps
}

fn ac4_labeling() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let n = 32;
    let g = Geometry::new(15.0, 108.0, 0.05, 0.05, n, n).unwrap();
    let t = parse_time("2020-10-06T00:00:00Z").unwrap();
    for trial in 0..200 {
        let p: f64 = rng.gen_range(0.05..0.75);
        let on: Vec<bool> = (0..n * n).map(|_| rng.gen_bool(p)).collect();
        let bt: Vec<f64> = on.iter().map(|&b| if b { rng.gen_range(185.0..220.0) } else { 260.0 }).collect();
        let bt = GeoGrid::new(Variable::Bt, t, g, bt, NODATA).unwrap();
        let mask = convective_mask(&bt, 220.0).unwrap();
        let got = label_components(&mask, 1);
        let want = union_find_oracle(&on, n);
        ensure(got.len() == want.len(), || format!("mask {trial}: {} components, oracle {}", got.len(), want.len()))?;
        let objects = detect(&bt, 220.0, 1).unwrap();
        for (obj, cells) in objects.iter().zip(&want) {
            ensure(&obj.cells == cells, || format!("mask {trial}: membership of object {}", obj.id))?;
            let k = cells.len() as f64;
            let lat = cells.iter().map(|&(r, _)| g.lat(r)).sum::<f64>() / k;
            let lon = cells.iter().map(|&(_, c)| g.lon(c)).sum::<f64>() / k;
            let vals: Vec<f64> = cells.iter().map(|&(r, c)| bt.get(r, c).unwrap()).collect();
            let min = vals.iter().copied().fold(f64::MAX, f64::min);
            let mean = vals.iter().sum::<f64>() / k;
            let stats_ok = obj.pixel_count == cells.len()
                && (obj.centroid_lat - lat).abs() < 1e-9
                && (obj.centroid_lon - lon).abs() < 1e-9
                && obj.min_bt == Some(min)
                && (obj.mean_bt.unwrap() - mean).abs() < 1e-9;
            ensure(stats_ok, || format!("mask {trial}: statistics of object {}", obj.id))?;
        }
    }
    Ok(())
}

fn ac5_rain() -> Check {
    let g = Geometry::new(15.0, 108.0, 0.1, 0.1, 3, 3).unwrap();
    let t0 = parse_time("2020-10-06T00:00:00Z").unwrap();
    let dt = 1800i64;
    // rate held over (t_k - dt, t_k]
    let rate = |cell: usize, k: i64| 12.5 * (0.3 * k as f64 + cell as f64).sin().powi(2) + 0.1 * cell as f64;
    let stack = |f: &dyn Fn(usize, i64) -> f64| {
        GridStack::new(
            (0..=48)
                .map(|k| {
                    let v = (0..9).map(|c| f(c, k)).collect();
                    GeoGrid::new(Variable::RainRate, t0 + chrono::Duration::seconds(k * dt), g, v, NODATA).unwrap()
                })
                .collect(),
        )
        .unwrap()
    };
    let smooth = stack(&rate);
    let w = |a: i64, b: i64| TimeWindow::new(t0 + chrono::Duration::seconds(a * dt), t0 + chrono::Duration::seconds(b * dt)).unwrap();
    for (a, b) in [(0, 48), (5, 29), (47, 48)] {
        let acc = accumulate(&smooth, &w(a, b)).map_err(|e| e.to_string())?;
        for c in 0..9 {
            let integral: f64 = (a + 1..=b).map(|k| rate(c, k) * dt as f64 / 3600.0).sum();
            let got = acc.grid.values()[c];
            ensure((got - integral).abs() <= 1e-9 * integral, || format!("cell {c} over ({a}, {b}]: {got} vs {integral}"))?;
        }
    }
    let dyadic = stack(&|c, k| ((c as i64 * 7 + k * 13) % 60) as f64 * 0.25);
    for (a, m, b) in [(0, 24, 48), (3, 4, 40), (10, 33, 47)] {
        let whole = accumulate(&dyadic, &w(a, b)).unwrap();
        let left = accumulate(&dyadic, &w(a, m)).unwrap();
        let right = accumulate(&dyadic, &w(m, b)).unwrap();
        for c in 0..9 {
            let (x, y, z) = (whole.grid.values()[c], left.grid.values()[c], right.grid.values()[c]);
            ensure(x == y + z, || format!("({a},{b}] split at {m}, cell {c}: {x} != {y} + {z}"))?;
        }
    }
    Ok(())
}

fn ac6_flood_mask() -> Check {
    let n = 64;
    let g = Geometry::new(15.0, 107.0, 0.05, 0.05, n, n).unwrap();
    let t_ref = parse_time("2020-10-01T00:00:00Z").unwrap();
    let t_flood = parse_time("2020-10-10T00:00:00Z").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for trial in 0..100 {
        let blocks: Vec<f64> = (0..64).map(|_| rng.gen_range(-12.0..3.0)).collect();
        let mut reference = Vec::new();
        let mut flood = Vec::new();
        for i in 0..n * n {
            let base: f64 = rng.gen_range(0.005..0.3);
            let db = blocks[(i / n / 8) * 8 + (i % n) / 8] + rng.gen_range(-4.0..4.0);
            reference.push(if rng.gen_bool(0.01) { NODATA } else { base });
            flood.push(base * 10f64.powf(db / 10.0));
        }
        let reference = GeoGrid::new(Variable::Nrcs, t_ref, g, reference, NODATA).unwrap();
        let flood = GeoGrid::new(Variable::Nrcs, t_flood, g, flood, NODATA).unwrap();
        let ratio = log_ratio_db(&flood, &reference).map_err(|e| e.to_string())?;
        let mask = flood_mask(&ratio, -3.0, 8).map_err(|e| e.to_string())?;

        let db: Vec<Option<f64>> = flood
            .values()
            .iter()
            .zip(reference.values())
            .map(|(&f, &r)| (r != NODATA).then(|| 10.0 * (f / r).log10()))
            .collect();
        let dark: Vec<bool> = db.iter().map(|v| v.is_some_and(|x| x <= -3.0)).collect();
        let mut want: Vec<f64> = db.iter().map(|v| if v.is_some() { 0.0 } else { NODATA }).collect();
        for comp in union_find_oracle(&dark, n) {
            if comp.len() >= 8 {
                for (r, c) in comp {
                    want[r * n + c] = 1.0;
                }
            }
        }
        ensure(mask.grid.values() == want.as_slice(), || format!("pair {trial}: mask differs from oracle"))?;

        let back = log_ratio_db(&reference, &flood).unwrap();
        for (a, b) in ratio.grid.values().iter().zip(back.grid.values()) {
            let ok = if *a == NODATA { *b == NODATA } else { (a + b).abs() <= 1e-12 };
            ensure(ok, || format!("pair {trial}: antisymmetry {a} vs {b}"))?;
        }
    }
    Ok(())
}

struct RunFiles {
    data: PathBuf,
    warnings: PathBuf,
    mask: PathBuf,
    score: PathBuf,
    stdout: Vec<u8>,
}

fn full_run(root: &Path) -> Result<RunFiles, String> {
    let data = root.join("data");
    let regions = repo("data/central_vietnam.regions");
    let config = Some(repo("config/default.conf"));
    let mut stdout = Vec::new();
    let e = |e: anyhow::Error| format!("{e:#}");
    cmd_synth(
        &SynthArgs { spec: None, paper_replay: true, seed: 0, flood_scenes: true, out: data.clone() },
        &mut stdout,
    )
    .map_err(e)?;
    let warnings = root.join("warnings.csv");
    cmd_fuse(
        &FuseArgs {
            data_dir: data.clone(),
            regions: regions.clone(),
            config: config.clone(),
            out: Some(warnings.clone()),
            rain_stats: Some(root.join("rain_stats.csv")),
        },
        &mut stdout,
    )
    .map_err(e)?;
    let mask = root.join("mask.gsf");
    cmd_floodmap(
        &FloodmapArgs {
            flood: data.join("sar_flood.gsf"),
            reference: data.join("sar_reference.gsf"),
            config: config.clone(),
            out: mask.clone(),
        },
        &mut stdout,
    )
    .map_err(e)?;
    let score = root.join("score.csv");
    cmd_validate(
        &ValidateArgs { warnings: warnings.clone(), mask: mask.clone(), regions, config, out: Some(score.clone()) },
        &mut stdout,
    )
    .map_err(e)?;
    Ok(RunFiles { data, warnings, mask, score, stdout })
}

fn ac7_replay() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = full_run(dir.path())?;
    let truth = Truth::parse_csv(&fs::read_to_string(run.data.join("truth.csv")).unwrap()).map_err(|e| e.to_string())?;
    let hit = truth.first_intersection("DN").ok_or("truth has no DN intersection")?;
    let warnings = parse_report_csv(&fs::read_to_string(&run.warnings).unwrap()).map_err(|e| e.to_string())?;
    let first = warnings
        .iter()
        .filter(|w| w.region == "DN" && w.level >= Level::Warning)
        .map(|w| w.epoch)
        .min()
        .ok_or("DN never reached WARNING")?;
    let lead = (hit - first).num_seconds();
    ensure(lead >= 7200, || format!("DN warned at {first}, intersected at {hit}: lead {lead} s"))?;
    let summary = String::from_utf8(run.stdout).unwrap();
    ensure(summary.lines().any(|l| l == "POD=1 FAR=0"), || format!("validation summary: {summary:?}"))?;
    println!("    DN lead time {lead} s (warned {first}, cell arrives {hit})");
    Ok(())
}

fn ac8_monotonicity() -> Check {
    let fractions: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
    let rains = [0.0, 8.0, 13.0];
    let pers = [0.0, 3.0, 6.0];
    let approaches = [None, Some(3600)];
    let t = parse_time("2020-10-06T00:00:00Z").unwrap();
    let rules = RuleSet::default();
    let ind = |f: usize, w: usize, r: usize, p: usize, a: usize| RegionIndicators {
        deep_cloud_fraction: fractions[f],
        wind_cat: WindCategory::ALL[w],
        max_rain_mmh: rains[r],
        rain_persistence_h: pers[p],
        approach_s: approaches[a],
        cloud_no_observation: false,
        wind_no_observation: false,
        rain_no_observation: false,
        ..RegionIndicators::unobserved("DN", t)
    };
    let level = |x: [usize; 5]| decide(&ind(x[0], x[1], x[2], x[3], x[4]), &rules).level;
    let dims = [fractions.len(), 4, rains.len(), pers.len(), approaches.len()];
    let mut checked = 0usize;
    for f in 0..dims[0] {
        for w in 0..dims[1] {
            for r in 0..dims[2] {
                for p in 0..dims[3] {
                    for a in 0..dims[4] {
                        let base = [f, w, r, p, a];
                        let lb = level(base);
                        for d in 0..5 {
                            for up in base[d] + 1..dims[d] {
                                let mut worse = base;
                                worse[d] = up;
                                checked += 1;
                                let lw = level(worse);
                                ensure(lw >= lb, || format!("{base:?} -> {worse:?}: {lb} became {lw}"))?;
                            }
                        }
                    }
                }
            }
        }
    }
    println!("    {checked} single-indicator worsenings checked");
    Ok(())
}

fn ac9_determinism() -> Check {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let ra = full_run(a.path())?;
    let rb = full_run(b.path())?;
    let mut files = vec![
        (ra.warnings.clone(), rb.warnings.clone()),
        (ra.mask.clone(), rb.mask.clone()),
        (ra.score.clone(), rb.score.clone()),
        (a.path().join("rain_stats.csv"), b.path().join("rain_stats.csv")),
    ];
    for entry in fs::read_dir(&ra.data).unwrap() {
        let name = entry.unwrap().file_name();
        files.push((ra.data.join(&name), rb.data.join(&name)));
    }
    for (x, y) in files {
        ensure(fs::read(&x).unwrap() == fs::read(&y).unwrap(), || format!("{} differs between runs", x.display()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("AC1", "threshold and bin constants", Duration::from_secs(1), ac1_constants),
        ("AC2", "GMF round trip", Duration::from_secs(1), ac2_gmf_round_trip),
        ("AC3", "tracking fidelity", Duration::from_secs(5), ac3_tracking_fidelity),
        ("AC4", "labeling oracle equivalence", Duration::from_secs(5), ac4_labeling),
        ("AC5", "rain conservation and additivity", Duration::from_secs(1), ac5_rain),
        ("AC6", "flood-mask oracle equivalence", Duration::from_secs(5), ac6_flood_mask),
        ("AC7", "end-to-end replay", Duration::from_secs(30), ac7_replay),
        ("AC8", "fusion monotonicity", Duration::from_secs(5), ac8_monotonicity),
        ("AC9", "determinism", Duration::from_secs(30), ac9_determinism),
    ];
    let mut failed = 0;
    for (id, name, budget, check) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let verdict = match result {
            Ok(()) if elapsed <= budget => Ok(()),
            Ok(()) => Err(format!("took {elapsed:.2?}, budget {budget:?}")),
            Err(e) => Err(e),
        };
        match verdict {
            Ok(()) => println!("[PASS] {id} {name} ({elapsed:.2?})"),
            Err(e) => {
                failed += 1;
                println!("[FAIL] {id} {name} ({elapsed:.2?}): {e}");
            }
        }
    }
    if failed == 0 {
        println!("acceptance: all 9 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of 9 criteria failed");
        ExitCode::FAILURE
    }
}
