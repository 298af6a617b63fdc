//! Command-line front end: synthetic scenarios, detection, tracking, fusion and
//! flood-map verification.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use floodwarn_core::convection::{detect, object_csv_line, OBJECTS_CSV_HEADER};
use floodwarn_core::floodmap::{flood_mask, log_ratio_db, validate, validation_to_csv, FloodMask};
use floodwarn_core::fusion::{parse_report_csv, reports_to_csv, Pipeline, PipelineInputs};
use floodwarn_core::geogrid::{read_gsf, read_regions, to_gsf_string, GeoGrid, GridStack};
use floodwarn_core::precip::{region_rain_stats_with_cadence, stats_csv_line, STATS_CSV_HEADER};
use floodwarn_core::scenario::{flood_scenes, generate, paper_replay_spec, ScenarioSpec};
use floodwarn_core::time::TimeWindow;
use floodwarn_core::tracking::{track_csv_lines, Tracker, TRACKS_CSV_HEADER};
use floodwarn_core::wind::GmfRegistry;
use floodwarn_core::{Config, Variable};

#[derive(Debug, Parser)]
#[command(name = "floodwarn", version, about = "Multi-sensor convective flood early warning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic scenario (GSF stacks plus truth.csv)
    Synth(SynthArgs),
    /// Detect deep-convective objects in every BT frame
    Detect(DetectArgs),
    /// Track detected objects across BT frames
    Track(DetectArgs),
    /// Fuse a data directory into per-region warnings
    Fuse(FuseArgs),
    /// Build a flood mask from a flood/reference NRCS pair
    Floodmap(FloodmapArgs),
    /// Score warnings against a flood mask
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Scenario spec file
    #[arg(long, conflicts_with = "paper_replay", required_unless_present = "paper_replay")]
    pub spec: Option<PathBuf>,
    /// Use the built-in coastal squall replay
    #[arg(long)]
    pub paper_replay: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write sar_reference.gsf and sar_flood.gsf
    #[arg(long)]
    pub flood_scenes: bool,
    /// Output directory (created if missing)
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// BRIGHTNESS_TEMP stack
    pub bt: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output CSV; stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    /// Directory holding bt.gsf and optional rain*.gsf, wind*.gsf, nrcs*.gsf
    pub data_dir: PathBuf,
    #[arg(long)]
    pub regions: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output CSV; stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write per-region rain statistics over the whole run
    #[arg(long)]
    pub rain_stats: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FloodmapArgs {
    pub flood: PathBuf,
    pub reference: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub warnings: PathBuf,
    pub mask: PathBuf,
    #[arg(long)]
    pub regions: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output CSV; stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Runs one command. Tabular output without `--out` and summaries go to `stdout`.
pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Synth(a) => cmd_synth(&a, stdout),
        Command::Detect(a) => cmd_detect(&a, stdout),
        Command::Track(a) => cmd_track(&a, stdout),
        Command::Fuse(a) => cmd_fuse(&a, stdout),
        Command::Floodmap(a) => cmd_floodmap(&a, stdout),
        Command::Validate(a) => cmd_validate(&a, stdout),
    }
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    let config = match path {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    GmfRegistry::default()
        .get(&config.wind.gmf)
        .with_context(|| "config key wind.gmf")?;
    Ok(config)
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating a temporary file in {}", dir.display()))?;
    tmp.write_all(contents)?;
    tmp.flush()?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => Ok(stdout.write_all(text.as_bytes())?),
    }
}

fn read_stack(path: &Path, expected: Variable) -> Result<GridStack> {
    let stack = read_gsf(path)?;
    if let Some(found) = stack.variable() {
        if found != expected {
            bail!("{}: expected a {expected} stack, found {found}", path.display());
        }
    }
    Ok(stack)
}

fn read_single(path: &Path, expected: Variable) -> Result<GeoGrid> {
    let mut frames = read_stack(path, expected)?.into_frames();
    if frames.len() != 1 {
        bail!("{}: expected one frame, found {}", path.display(), frames.len());
    }
    Ok(frames.remove(0))
}

pub fn cmd_synth(a: &SynthArgs, stdout: &mut dyn Write) -> Result<()> {
    let spec = match &a.spec {
        Some(p) => ScenarioSpec::load(p)?,
        None => paper_replay_spec(),
    };
    let scenario = generate(&spec, a.seed)?;
    let mut files = vec![
        ("bt.gsf", to_gsf_string(&scenario.bt)?),
        ("rain.gsf", to_gsf_string(&scenario.rain)?),
        ("wind.gsf", to_gsf_string(&scenario.wind)?),
        ("nrcs.gsf", to_gsf_string(&scenario.nrcs)?),
        ("truth.csv", scenario.truth.to_csv()),
    ];
    if a.flood_scenes {
        let (reference, flood) = flood_scenes(&spec, a.seed)?;
        files.push(("sar_reference.gsf", to_gsf_string(&GridStack::new(vec![reference])?)?));
        files.push(("sar_flood.gsf", to_gsf_string(&GridStack::new(vec![flood])?)?));
    }
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    for (name, text) in &files {
        write_atomic(&a.out.join(name), text.as_bytes())?;
    }
    writeln!(stdout, "wrote {} files to {}", files.len(), a.out.display())?;
    Ok(())
}

pub fn cmd_detect(a: &DetectArgs, stdout: &mut dyn Write) -> Result<()> {
    let config = load_config(a.config.as_deref())?;
    let bt = read_stack(&a.bt, Variable::Bt)?;
    let mut text = format!("{OBJECTS_CSV_HEADER}\n");
    for frame in bt.frames() {
        for obj in detect(frame, config.detection.t_deep, config.detection.min_area_px)? {
            text.push_str(&object_csv_line(&obj));
            text.push('\n');
        }
    }
    emit(a.out.as_deref(), &text, stdout)
}

pub fn cmd_track(a: &DetectArgs, stdout: &mut dyn Write) -> Result<()> {
    let config = load_config(a.config.as_deref())?;
    let bt = read_stack(&a.bt, Variable::Bt)?;
    let mut tracker = Tracker::new(config.tracker_params());
    for frame in bt.frames() {
        let objects = detect(frame, config.detection.t_deep, config.detection.min_area_px)?;
        tracker.update(frame.time(), objects)?;
    }
    let mut text = format!("{TRACKS_CSV_HEADER}\n");
    for track in tracker.tracks() {
        for line in track_csv_lines(track, config.tracking.fit_window) {
            text.push_str(&line);
            text.push('\n');
        }
    }
    emit(a.out.as_deref(), &text, stdout)
}

/// Files in `dir` named `<prefix>*.gsf`, sorted by name.
fn matching(dir: &Path, prefix: &str) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if name.starts_with(prefix) && name.ends_with(".gsf") {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

pub fn load_inputs(dir: &Path) -> Result<PipelineInputs> {
    let read_all = |prefix: &str, v: Variable| -> Result<Vec<GridStack>> {
        matching(dir, prefix)?.iter().map(|p| read_stack(p, v)).collect()
    };
    Ok(PipelineInputs {
        bt: read_stack(&dir.join("bt.gsf"), Variable::Bt)?,
        rain: read_all("rain", Variable::RainRate)?,
        wind: read_all("wind", Variable::WindSpeed)?,
        nrcs: read_all("nrcs", Variable::Nrcs)?,
    })
}

pub fn cmd_fuse(a: &FuseArgs, stdout: &mut dyn Write) -> Result<()> {
    let config = load_config(a.config.as_deref())?;
    let regions = read_regions(&a.regions)?;
    let inputs = load_inputs(&a.data_dir)?;
    let mut pipeline = Pipeline::new(&inputs, &regions, &config, &GmfRegistry::default())?;
    let reports = pipeline.run()?;

    let stats = match (&a.rain_stats, pipeline.rain()) {
        (Some(path), Some((rain, cadence))) => {
            let frames = rain.frames();
            let first = frames.first().map(|f| f.time()).context("rain stack is empty")?;
            let last = frames.last().map(|f| f.time()).context("rain stack is empty")?;
            let window = TimeWindow::new(first - chrono::Duration::seconds(cadence), last)?;
            let mut text = format!("{STATS_CSV_HEADER}\n");
            for region in pipeline.regions() {
                if let Ok(s) = region_rain_stats_with_cadence(
                    rain,
                    region,
                    config.rain.r_heavy,
                    &window,
                    cadence,
                ) {
                    text.push_str(&stats_csv_line(&s));
                    text.push('\n');
                }
            }
            Some((path, text))
        }
        (Some(_), None) => bail!("--rain-stats needs rain*.gsf in {}", a.data_dir.display()),
        _ => None,
    };
    emit(a.out.as_deref(), &reports_to_csv(&reports), stdout)?;
    if let Some((path, text)) = stats {
        write_atomic(path, text.as_bytes())?;
    }
    Ok(())
}

pub fn cmd_floodmap(a: &FloodmapArgs, stdout: &mut dyn Write) -> Result<()> {
    let config = load_config(a.config.as_deref())?;
    let flood = read_single(&a.flood, Variable::Nrcs)?;
    let reference = read_single(&a.reference, Variable::Nrcs)?;
    let ratio = log_ratio_db(&flood, &reference)?;
    let mask = flood_mask(&ratio, config.floodmap.threshold_db, config.floodmap.min_region_px)?;
    write_atomic(&a.out, to_gsf_string(&GridStack::new(vec![mask.grid.clone()])?)?.as_bytes())?;
    writeln!(
        stdout,
        "flooded cells: {} (non-positive backscatter: {})",
        mask.flooded_cells(),
        ratio.nonpositive
    )?;
    Ok(())
}

pub fn cmd_validate(a: &ValidateArgs, stdout: &mut dyn Write) -> Result<()> {
    let config = load_config(a.config.as_deref())?;
    let text = fs::read_to_string(&a.warnings)
        .with_context(|| format!("reading {}", a.warnings.display()))?;
    let warnings = parse_report_csv(&text).with_context(|| a.warnings.display().to_string())?;
    let mask = FloodMask::from_grid(read_single(&a.mask, Variable::FloodMask)?)?;
    let regions = read_regions(&a.regions)?;
    let score = validate(&warnings, &mask, &regions, config.floodmap.f_flood)?;
    emit(a.out.as_deref(), &validation_to_csv(&score), stdout)?;
    let fmt = |v: Option<f64>| v.map_or("undefined".to_string(), |x| x.to_string());
    let summary = format!("POD={} FAR={}", fmt(score.pod()), fmt(score.far()));
    if a.out.is_some() {
        writeln!(stdout, "{summary}")?;
    } else {
        eprintln!("{summary}");
    }
    Ok(())
}
