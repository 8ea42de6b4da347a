//! The `ctstack` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or format error, 3 backend
//! failure. Every run leaves a `manifest.json` (or `<file>.manifest.json`)
//! next to its outputs recording the arguments, tool version and SHA-256
//! digests of the inputs.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::bench::{render_paired, time_both_modes, time_inference};
use crate::dicom::{load_dicom_dir, OrderingKey};
use crate::error::{Error, Result};
use crate::metrics::{area_plot, continuity_tv, dice_score, evaluate, AreaPlot};
use crate::native::{read_native, read_native_any, write_atomic, write_json, write_native, NativeVolume, META_FILE};
use crate::plot::{area_plot_csv, line_chart_svg, series_csv, Series};
use crate::segment::{run_pipeline_with_overlap, BackendDescriptor, PipelineConfig, PipelineMode};
use crate::stacker::{plan_stacks, slice_into_stacks, StackParams, StackPlan};
use crate::synth::{generate_phantom, PhantomSpec};
use crate::volume::{MaskVolume, ScanVolume, Volume, Voxel, WindowSpec, DEFAULT_THRESHOLD};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_BACKEND: i32 = 3;

/// Overlap factors of the sweep experiment.
pub const SWEEP_FACTORS: [f64; 3] = [0.0, 0.375, 0.625];

#[derive(Debug, Parser)]
#[command(name = "ctstack", version, about = "Stack-based volumetric CT segmentation toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Assemble a directory of DICOM slices into a native scan volume.
    Ingest(IngestArgs),
    /// Generate a synthetic phantom scan and its ground-truth mask.
    Synth(SynthArgs),
    /// Split a volume into stacks and write them with plan.json.
    Stack(StackArgs),
    /// Segment a scan with a backend in 2D or 3D mode.
    Predict(PredictArgs),
    /// Dice evaluation of predicted masks against ground truth.
    Evaluate(EvaluateArgs),
    /// Area-plot CSV and SVG for a mask and optional prediction.
    Areaplot(AreaplotArgs),
    /// Time the pipeline in 2D and/or 3D mode.
    Bench(BenchArgs),
    /// Predict and plot for overlap factors 0, 0.375 and 0.625.
    Sweep(SweepArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct IngestArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// instance, location or name; defaults to the first key every slice carries.
    #[arg(long)]
    pub order: Option<String>,
    /// Defaults to the input directory name.
    #[arg(long)]
    pub scan_id: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 128)]
    pub width: usize,
    #[arg(long, default_value_t = 128)]
    pub height: usize,
    #[arg(long, default_value_t = 120)]
    pub depth: usize,
    #[arg(long, default_value_t = 3)]
    pub lesions: usize,
    /// Half-width of uniform HU jitter (0 = noiseless).
    #[arg(long, default_value_t = 0)]
    pub noise: u16,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct StackArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 32)]
    pub stack_size: usize,
    #[arg(long, conflicts_with = "overlap_factor")]
    pub overlap_slices: Option<usize>,
    /// Converted to round(f * S) slices; must be a whole number of slices.
    #[arg(long)]
    pub overlap_factor: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize, Clone)]
pub struct WindowArgs {
    /// Overrides the window stored with the scan.
    #[arg(long, requires = "window_width", allow_hyphen_values = true)]
    pub window_center: Option<f64>,
    #[arg(long, requires = "window_center")]
    pub window_width: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct PredictArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// 2d or 3d; defaults to the backend's natural mode.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long, default_value = "threshold3d")]
    pub backend: String,
    #[arg(long, default_value_t = 32)]
    pub stack_size: usize,
    /// Slices shared by adjacent stacks (3D mode); inference default is 0.
    #[arg(long, default_value_t = 0)]
    pub overlap_slices: usize,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Resample windowed slices to WIDTHxHEIGHT, e.g. 512x512.
    #[arg(long)]
    pub resize: Option<String>,
    #[command(flatten)]
    pub window: WindowArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    /// A mask volume, a predict output directory, or a directory of them.
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct AreaplotArgs {
    #[arg(long)]
    pub mask: PathBuf,
    #[arg(long)]
    pub pred: Option<PathBuf>,
    #[arg(long)]
    pub csv: PathBuf,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct BenchArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// 2d, 3d or both.
    #[arg(long, default_value = "both")]
    pub mode: String,
    #[arg(long, default_value = "threshold3d")]
    pub backend: String,
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    #[arg(long, default_value_t = 32)]
    pub stack_size: usize,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub window: WindowArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    /// Scan volume, or a synth output directory holding scan/ and mask/.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Ground-truth mask; defaults to <in>/mask when present.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 32)]
    pub stack_size: usize,
    #[arg(long, default_value = "threshold3d")]
    pub backend: String,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[command(flatten)]
    pub window: WindowArgs,
}

/// Maps an error to its exit status.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidInput(_) | Error::InvalidStackParams { .. } => EXIT_USAGE,
        Error::Backend { .. } => EXIT_BACKEND,
        _ => EXIT_DATA,
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let recorded: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match dispatch(&cli.command, &recorded) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::Backend { diagnostics, .. } = &e {
                if !diagnostics.is_empty() {
                    eprintln!("backend diagnostics:\n{diagnostics}");
                }
            }
            exit_code(&e)
        }
    }
}

fn dispatch(command: &Command, argv: &[String]) -> Result<()> {
    match command {
        Command::Ingest(a) => ingest(a, argv),
        Command::Synth(a) => synth(a, argv),
        Command::Stack(a) => stack(a, argv),
        Command::Predict(a) => predict(a, argv),
        Command::Evaluate(a) => evaluate_cmd(a, argv),
        Command::Areaplot(a) => areaplot(a, argv),
        Command::Bench(a) => bench(a, argv),
        Command::Sweep(a) => sweep(a, argv),
    }
}

#[derive(Serialize)]
struct InputDigest {
    path: String,
    sha256: String,
}

fn collect_files(path: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(path, err)))
            .collect::<Result<_>>()?;
        entries.sort();
        for entry in entries {
            if entry.file_name().is_some_and(|n| n.to_string_lossy().ends_with("manifest.json")) {
                continue;
            }
            collect_files(&entry, out)?;
        }
    } else if path.is_file() {
        out.push(path.to_path_buf());
    }
    Ok(())
}

fn digests(inputs: &[&Path]) -> Result<Vec<InputDigest>> {
    let mut files = Vec::new();
    for p in inputs {
        collect_files(p, &mut files)?;
    }
    files
        .iter()
        .map(|f| {
            let bytes = fs::read(f).map_err(|e| Error::io(f, e))?;
            Ok(InputDigest {
                path: f.to_string_lossy().into_owned(),
                sha256: hex::encode(Sha256::digest(&bytes)),
            })
        })
        .collect()
}

fn write_manifest<C: Serialize>(path: &Path, subcommand: &str, argv: &[String], config: &C, inputs: &[&Path]) -> Result<()> {
    let manifest = json!({
        "tool": "ctstack",
        "version": env!("CARGO_PKG_VERSION"),
        "subcommand": subcommand,
        "argv": argv,
        "config": config,
        "inputs": digests(inputs)?,
    });
    write_json(path, &manifest)
}

fn file_manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn resolve_window(args: &WindowArgs, scan: &ScanVolume) -> Result<(WindowSpec, &'static str)> {
    match (args.window_center, args.window_width) {
        (Some(c), Some(w)) => Ok((WindowSpec::new(c, w)?, "override")),
        _ => Ok(match scan.window {
            Some(w) => (w, "scan metadata"),
            None => (WindowSpec::LUNG, "default lung window"),
        }),
    }
}

fn parse_resize(spec: &str) -> Result<(usize, usize)> {
    let bad = || Error::invalid(format!("--resize expects WIDTHxHEIGHT, got {spec:?}"));
    let (w, h) = spec.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((w.trim().parse().map_err(|_| bad())?, h.trim().parse().map_err(|_| bad())?))
}

/// Accepts a scan volume directory or a directory holding `scan/`.
fn resolve_scan_dir(dir: &Path) -> PathBuf {
    if !dir.join(META_FILE).exists() && dir.join("scan").join(META_FILE).exists() {
        dir.join("scan")
    } else {
        dir.to_path_buf()
    }
}

/// Accepts a mask volume directory or a directory holding `mask/`.
fn resolve_mask_dir(dir: &Path) -> Option<PathBuf> {
    if dir.join(META_FILE).exists() {
        Some(dir.to_path_buf())
    } else if dir.join("mask").join(META_FILE).exists() {
        Some(dir.join("mask"))
    } else {
        None
    }
}

fn ingest(a: &IngestArgs, argv: &[String]) -> Result<()> {
    let key = a.order.as_deref().map(str::parse::<OrderingKey>).transpose()?;
    let scan_id = a.scan_id.clone().unwrap_or_else(|| {
        a.input
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scan".into())
    });
    let assembled = load_dicom_dir(&a.input, key, &scan_id)?;
    for w in &assembled.warnings {
        log::warn!("{w}");
    }
    write_native(&a.out, &assembled.volume)?;
    let g = assembled.volume.geometry();
    write_json(
        &a.out.join("ingest.json"),
        &json!({
            "scan_id": scan_id,
            "slices": g.depth,
            "width": g.width,
            "height": g.height,
            "ordering_key": assembled.ordering_key,
            "saturated_voxels": assembled.saturated_voxels,
            "window": assembled.volume.window,
            "warnings": assembled.warnings,
        }),
    )?;
    write_manifest(&a.out.join("manifest.json"), "ingest", argv, a, &[&a.input])?;
    println!(
        "ingest: {} slices of {}x{} ordered by {:?}",
        g.depth, g.width, g.height, assembled.ordering_key
    );
    Ok(())
}

fn synth(a: &SynthArgs, argv: &[String]) -> Result<()> {
    let mut spec = PhantomSpec::new(a.seed, a.width, a.height, a.depth, a.lesions);
    spec.noise_hu = a.noise;
    let phantom = generate_phantom(&spec)?;
    write_native(a.out.join("scan"), &phantom.scan)?;
    write_native(a.out.join("mask"), &phantom.mask)?;
    write_json(
        &a.out.join("phantom.json"),
        &json!({ "spec": spec, "lesions": phantom.lesions }),
    )?;
    write_manifest(&a.out.join("manifest.json"), "synth", argv, a, &[])?;
    println!(
        "synth: {}x{}x{} phantom with {} lesions ({} positive voxels)",
        a.width,
        a.height,
        a.depth,
        phantom.lesions.len(),
        phantom.mask.count_positive()
    );
    Ok(())
}

fn write_slabs<T: Voxel>(volume: &Volume<T>, plan: &StackPlan, out: &Path) -> Result<()> {
    for slab in slice_into_stacks(volume, plan)? {
        write_native(out.join(format!("slab_{:04}", slab.plan_index)), &slab.data)?;
    }
    Ok(())
}

fn stack(a: &StackArgs, argv: &[String]) -> Result<()> {
    let params = match (a.overlap_slices, a.overlap_factor) {
        (_, Some(f)) => StackParams::from_factor(a.stack_size, f)?,
        (o, None) => StackParams::new(a.stack_size, o.unwrap_or(0))?,
    };
    let volume = read_native_any(&a.input)?;
    let depth = match &volume {
        NativeVolume::Scan(v) => v.depth(),
        NativeVolume::Mask(v) => v.depth(),
        NativeVolume::Prob(v) => v.depth(),
    };
    let plan = plan_stacks(depth, params)?;
    match &volume {
        NativeVolume::Scan(v) => write_slabs(v, &plan, &a.out)?,
        NativeVolume::Mask(v) => write_slabs(v, &plan, &a.out)?,
        NativeVolume::Prob(v) => write_slabs(v, &plan, &a.out)?,
    }
    write_json(&a.out.join("plan.json"), &plan)?;
    write_manifest(&a.out.join("manifest.json"), "stack", argv, a, &[&a.input])?;
    println!(
        "stack: {} stacks of {} slices (overlap {} = factor {}), last pad {}",
        plan.len(),
        params.stack_size,
        params.overlap,
        params.overlap_factor(),
        plan.entries.last().map_or(0, |e| e.pad)
    );
    Ok(())
}

fn backend_for(desc: &str, mode: Option<&str>) -> Result<BackendDescriptor> {
    let mut d: BackendDescriptor = desc.parse()?;
    if let Some(m) = mode {
        d.mode = m.parse()?;
    }
    Ok(d)
}

fn predict(a: &PredictArgs, argv: &[String]) -> Result<()> {
    let descriptor = backend_for(&a.backend, a.mode.as_deref())?;
    let scan_dir = resolve_scan_dir(&a.input);
    let scan: ScanVolume = read_native(&scan_dir)?;
    let (window, window_source) = resolve_window(&a.window, &scan)?;
    let config = PipelineConfig {
        mode: descriptor.mode,
        stack_size: a.stack_size,
        threshold: a.threshold,
        workers: a.workers,
        resize: a.resize.as_deref().map(parse_resize).transpose()?,
    };
    let backend = descriptor.build(&window)?;
    let out = run_pipeline_with_overlap(&scan, &window, backend.as_ref(), &config, a.overlap_slices)?;
    write_native(a.out.join("prob"), &out.prob)?;
    write_native(a.out.join("mask"), &out.mask)?;
    write_json(
        &a.out.join("predict.json"),
        &json!({
            "scan_id": scan.scan_id,
            "backend": descriptor,
            "mode": config.mode,
            "stack_size": config.stack_size,
            "overlap_slices": a.overlap_slices,
            "threshold": config.threshold,
            "workers": config.workers,
            "resize": config.resize,
            "window": window,
            "window_source": window_source,
            "backend_calls": out.backend_calls,
            "plan": out.plan,
            "positive_voxels": out.mask.count_positive(),
        }),
    )?;
    write_manifest(&a.out.join("manifest.json"), "predict", argv, a, &[&scan_dir])?;
    println!(
        "predict: {} backend calls ({} mode, backend {}), {} positive voxels",
        out.backend_calls,
        config.mode,
        descriptor,
        out.mask.count_positive()
    );
    Ok(())
}

/// Pairs prediction and truth masks. Either both paths are single masks
/// (or predict/synth outputs), or both are directories of such entries
/// matched by name.
fn mask_pairs(pred: &Path, truth: &Path) -> Result<Vec<(String, MaskVolume, MaskVolume)>> {
    if let (Some(p), Some(t)) = (resolve_mask_dir(pred), resolve_mask_dir(truth)) {
        let t: MaskVolume = read_native(t)?;
        return Ok(vec![(t.scan_id.clone(), read_native(p)?, t)]);
    }
    let mut names: Vec<String> = fs::read_dir(truth)
        .map_err(|e| Error::io(truth, e))?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    let mut pairs = Vec::new();
    for name in names {
        let (Some(t), Some(p)) = (resolve_mask_dir(&truth.join(&name)), resolve_mask_dir(&pred.join(&name))) else {
            continue;
        };
        pairs.push((name, read_native(p)?, read_native(t)?));
    }
    if pairs.is_empty() {
        return Err(Error::format(
            "truth",
            format!("no matching mask volumes under {} and {}", truth.display(), pred.display()),
        ));
    }
    Ok(pairs)
}

fn evaluate_cmd(a: &EvaluateArgs, argv: &[String]) -> Result<()> {
    let pairs = mask_pairs(&a.pred, &a.truth)?;
    let refs: Vec<(&MaskVolume, &MaskVolume)> = pairs.iter().map(|(_, p, t)| (p, t)).collect();
    let mut report = evaluate(&refs)?;
    for (scan, (name, _, _)) in report.scans.iter_mut().zip(&pairs) {
        scan.scan_id = name.clone();
    }
    write_json(&a.out, &report)?;
    write_manifest(&file_manifest_path(&a.out), "evaluate", argv, a, &[&a.pred, &a.truth])?;
    println!(
        "evaluate: {} scans, mean dice {:.4}, pooled dice {:.4}, prevalence {:.4}",
        report.scans.len(),
        report.mean_dice,
        report.pooled_dice,
        report.prevalence
    );
    Ok(())
}

fn areaplot(a: &AreaplotArgs, argv: &[String]) -> Result<()> {
    let mask_dir = resolve_mask_dir(&a.mask).unwrap_or_else(|| a.mask.clone());
    let truth: MaskVolume = read_native(&mask_dir)?;
    let truth_plot = area_plot(&truth);
    let pred_plot = match &a.pred {
        Some(p) => {
            let dir = resolve_mask_dir(p).unwrap_or_else(|| p.clone());
            let pred: MaskVolume = read_native(dir)?;
            truth.geometry().ensure_same(&pred.geometry(), "mask and prediction differ")?;
            Some(area_plot(&pred))
        }
        None => None,
    };
    write_atomic(&a.csv, &area_plot_csv(&truth_plot, pred_plot.as_ref())?)?;
    if let Some(svg) = &a.svg {
        let mut series = vec![Series {
            name: "truth",
            values: &truth_plot.normalized,
        }];
        if let Some(p) = &pred_plot {
            series.push(Series {
                name: "prediction",
                values: &p.normalized,
            });
        }
        write_atomic(svg, line_chart_svg(&format!("Area-plot: {}", truth.scan_id), &series).as_bytes())?;
    }
    let mut inputs: Vec<&Path> = vec![&a.mask];
    if let Some(p) = &a.pred {
        inputs.push(p);
    }
    write_manifest(&file_manifest_path(&a.csv), "areaplot", argv, a, &inputs)?;
    let tv = |p: &AreaPlot| continuity_tv(p).map(|v| format!("{v:.4}")).unwrap_or_else(|_| "n/a".into());
    match &pred_plot {
        Some(p) => println!("areaplot: truth TV {}, prediction TV {}", tv(&truth_plot), tv(p)),
        None => println!("areaplot: truth TV {}", tv(&truth_plot)),
    }
    Ok(())
}

fn bench(a: &BenchArgs, argv: &[String]) -> Result<()> {
    let scan_dir = resolve_scan_dir(&a.input);
    let scan: ScanVolume = read_native(&scan_dir)?;
    let (window, _) = resolve_window(&a.window, &scan)?;
    let descriptor: BackendDescriptor = a.backend.parse()?;
    let backend = descriptor.build(&window)?;
    let config = PipelineConfig {
        stack_size: a.stack_size,
        workers: a.workers,
        ..Default::default()
    };
    let report = match a.mode.as_str() {
        "both" => {
            let paired = time_both_modes(&scan, &window, backend.as_ref(), &config, a.reps)?;
            print!("{}", render_paired(&paired));
            serde_json::to_value(&paired)
        }
        m => {
            let mode: PipelineMode = m.parse()?;
            let r = time_inference(&scan, &window, backend.as_ref(), &PipelineConfig { mode, ..config }, a.reps)?;
            println!(
                "bench: {} mode, {} backend calls, median wall {:.4} s over {} reps",
                r.mode, r.backend_calls, r.wall_seconds, r.repetitions
            );
            serde_json::to_value(&r)
        }
    }
    .expect("timing reports serialize");
    write_json(&a.out, &report)?;
    write_manifest(&file_manifest_path(&a.out), "bench", argv, a, &[&scan_dir])?;
    Ok(())
}

fn factor_label(f: f64) -> String {
    format!("{f}")
}

#[derive(Serialize)]
struct SweepEntry {
    overlap_factor: f64,
    overlap_slices: usize,
    stacks: usize,
    backend_calls: usize,
    continuity_tv: f64,
    dice: Option<f64>,
}

fn sweep(a: &SweepArgs, argv: &[String]) -> Result<()> {
    let scan_dir = resolve_scan_dir(&a.input);
    let scan: ScanVolume = read_native(&scan_dir)?;
    let truth_dir = match &a.truth {
        Some(t) => resolve_mask_dir(t).or_else(|| Some(t.clone())),
        None => resolve_mask_dir(&a.input).filter(|d| d != &scan_dir),
    };
    let truth: Option<MaskVolume> = truth_dir.as_ref().map(read_native).transpose()?;
    if let Some(t) = &truth {
        t.geometry().ensure_same(&scan.geometry(), "truth and scan differ")?;
    }
    let (window, window_source) = resolve_window(&a.window, &scan)?;
    let descriptor = backend_for(&a.backend, Some("3d"))?;
    let backend = descriptor.build(&window)?;
    let config = PipelineConfig {
        mode: PipelineMode::Stacked3d,
        stack_size: a.stack_size,
        threshold: a.threshold,
        workers: a.workers,
        resize: None,
    };

    let truth_plot = truth.as_ref().map(area_plot);
    let mut entries = Vec::new();
    let mut plots: Vec<(String, AreaPlot)> = Vec::new();
    for &factor in &SWEEP_FACTORS {
        let params = StackParams::from_factor(a.stack_size, factor)?;
        let out = run_pipeline_with_overlap(&scan, &window, backend.as_ref(), &config, params.overlap)?;
        let plan = out.plan.clone().expect("3D mode always plans");
        let label = factor_label(factor);
        let dir = a.out.join(format!("overlap_{label}"));
        write_json(&dir.join("plan.json"), &plan)?;
        write_native(dir.join("mask"), &out.mask)?;
        let plot = area_plot(&out.mask);
        let csv = area_plot_csv(truth_plot.as_ref().unwrap_or(&plot), truth_plot.as_ref().map(|_| &plot))?;
        write_atomic(&a.out.join(format!("areaplot_overlap_{label}.csv")), &csv)?;
        let mut series = Vec::new();
        if let Some(t) = &truth_plot {
            series.push(Series {
                name: "truth",
                values: &t.normalized,
            });
        }
        let pred_name = format!("overlap {label}");
        series.push(Series {
            name: &pred_name,
            values: &plot.normalized,
        });
        let svg = line_chart_svg(&format!("Area-plot, overlap factor {label}"), &series);
        write_atomic(&a.out.join(format!("areaplot_overlap_{label}.svg")), svg.as_bytes())?;
        entries.push(SweepEntry {
            overlap_factor: factor,
            overlap_slices: params.overlap,
            stacks: plan.len(),
            backend_calls: out.backend_calls,
            continuity_tv: continuity_tv(&plot).unwrap_or(0.0),
            dice: truth.as_ref().map(|t| dice_score(&out.mask, t)).transpose()?,
        });
        plots.push((format!("overlap_{label}"), plot));
    }

    let mut series: Vec<Series> = Vec::new();
    if let Some(t) = &truth_plot {
        series.push(Series {
            name: "truth",
            values: &t.normalized,
        });
    }
    for (name, p) in &plots {
        series.push(Series {
            name,
            values: &p.normalized,
        });
    }
    write_atomic(&a.out.join("sweep.csv"), &series_csv(&series)?)?;
    write_atomic(
        &a.out.join("sweep.svg"),
        line_chart_svg(&format!("Overlap sweep: {}", scan.scan_id), &series).as_bytes(),
    )?;
    write_json(
        &a.out.join("sweep.json"),
        &json!({
            "scan_id": scan.scan_id,
            "backend": descriptor,
            "stack_size": a.stack_size,
            "threshold": a.threshold,
            "window": window,
            "window_source": window_source,
            "truth_continuity_tv": truth_plot.as_ref().and_then(|p| continuity_tv(p).ok()),
            "factors": entries,
        }),
    )?;
    let mut inputs: Vec<&Path> = vec![&scan_dir];
    if let Some(t) = &truth_dir {
        inputs.push(t);
    }
    write_manifest(&a.out.join("manifest.json"), "sweep", argv, a, &inputs)?;
    for e in &entries {
        println!(
            "sweep: factor {} (O={}): {} stacks, TV {:.4}{}",
            e.overlap_factor,
            e.overlap_slices,
            e.stacks,
            e.continuity_tv,
            e.dice.map(|d| format!(", dice {d:.4}")).unwrap_or_default()
        );
    }
    Ok(())
}
