//! Wall-clock timing of the prediction pipeline in 2D and 3D mode.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::segment::{run_pipeline, PipelineConfig, PipelineMode, Segmenter};
use crate::volume::{ScanVolume, WindowSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub mode: PipelineMode,
    pub backend: String,
    pub scan_depth: usize,
    pub stack_size: usize,
    pub backend_calls: usize,
    pub repetitions: usize,
    /// Median pipeline-total wall time over repetitions.
    pub wall_seconds: f64,
    /// Median wall time spent in backend calls.
    pub backend_seconds: f64,
    pub per_call_mean_seconds: f64,
    pub per_call_min_seconds: f64,
    pub per_call_max_seconds: f64,
    pub workers: usize,
    /// True when backend calls overlapped, which skews per-call statistics.
    pub parallel: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairedTiming {
    pub per_slice_2d: TimingReport,
    pub stacked_3d: TimingReport,
    /// 2D calls divided by 3D calls.
    pub call_ratio: f64,
    /// 2D wall time divided by 3D wall time.
    pub wall_ratio: f64,
}

impl PairedTiming {
    pub fn new(per_slice_2d: TimingReport, stacked_3d: TimingReport) -> Self {
        PairedTiming {
            call_ratio: per_slice_2d.backend_calls as f64 / stacked_3d.backend_calls as f64,
            wall_ratio: per_slice_2d.wall_seconds / stacked_3d.wall_seconds,
            per_slice_2d,
            stacked_3d,
        }
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    }
}

/// Runs the pipeline `repetitions` times and reports median timings.
/// A failing backend aborts the measurement; no partial report is returned.
pub fn time_inference(
    scan: &ScanVolume,
    window: &WindowSpec,
    backend: &dyn Segmenter,
    config: &PipelineConfig,
    repetitions: usize,
) -> Result<TimingReport> {
    if repetitions == 0 {
        return Err(Error::invalid("repetitions must be at least 1"));
    }
    let mut walls = Vec::with_capacity(repetitions);
    let mut backend_walls = Vec::with_capacity(repetitions);
    let mut calls = Vec::new();
    let mut backend_calls = 0;
    for _ in 0..repetitions {
        let out = run_pipeline(scan, window, backend, config)?;
        walls.push(out.timing.total_seconds);
        backend_walls.push(out.timing.backend_seconds);
        calls.extend(out.timing.call_seconds);
        backend_calls = out.backend_calls;
    }
    let stats = if calls.is_empty() {
        (0.0, 0.0, 0.0)
    } else {
        (
            calls.iter().sum::<f64>() / calls.len() as f64,
            calls.iter().copied().fold(f64::INFINITY, f64::min),
            calls.iter().copied().fold(0.0, f64::max),
        )
    };
    Ok(TimingReport {
        mode: config.mode,
        backend: backend.name().to_string(),
        scan_depth: scan.depth(),
        stack_size: config.stack_size,
        backend_calls,
        repetitions,
        wall_seconds: median(&walls),
        backend_seconds: median(&backend_walls),
        per_call_mean_seconds: stats.0,
        per_call_min_seconds: stats.1,
        per_call_max_seconds: stats.2,
        workers: config.workers,
        parallel: config.workers > 1,
    })
}

/// Times both modes with otherwise identical settings.
pub fn time_both_modes(
    scan: &ScanVolume,
    window: &WindowSpec,
    backend: &dyn Segmenter,
    config: &PipelineConfig,
    repetitions: usize,
) -> Result<PairedTiming> {
    let two = PipelineConfig {
        mode: PipelineMode::PerSlice2d,
        ..*config
    };
    let three = PipelineConfig {
        mode: PipelineMode::Stacked3d,
        ..*config
    };
    Ok(PairedTiming::new(
        time_inference(scan, window, backend, &two, repetitions)?,
        time_inference(scan, window, backend, &three, repetitions)?,
    ))
}

/// Technique-by-condition table of seconds, one row per technique.
///
/// ```
/// let t = ctstack::bench::render_timing_table(
///     &["With GPU", "Without GPU"],
///     &[("2D", vec![70.0, 1145.0]), ("3D", vec![17.0, 229.0])],
/// );
/// assert!(t.contains("| 3D | 17 | 229 |"));
/// ```
pub fn render_timing_table(columns: &[&str], rows: &[(&str, Vec<f64>)]) -> String {
    let mut out = String::from("| Technique |");
    for c in columns {
        out.push_str(&format!(" Inference time {c} |"));
    }
    out.push('\n');
    out.push_str(&"|---".repeat(columns.len() + 1));
    out.push_str("|\n");
    for (name, secs) in rows {
        out.push_str(&format!("| {name} |"));
        for s in secs {
            if s.fract() == 0.0 {
                out.push_str(&format!(" {s:.0} |"));
            } else {
                out.push_str(&format!(" {s:.3} |"));
            }
        }
        out.push('\n');
    }
    out
}

/// Two-row table of a paired measurement: wall seconds and backend calls.
pub fn render_paired(p: &PairedTiming) -> String {
    let mut t = render_timing_table(
        &["(s)"],
        &[
            ("2D", vec![p.per_slice_2d.wall_seconds]),
            ("3D", vec![p.stacked_3d.wall_seconds]),
        ],
    );
    t.push_str(&format!(
        "\nbackend calls: 2D {} / 3D {} (ratio {:.2}); wall ratio {:.2}\n",
        p.per_slice_2d.backend_calls, p.stacked_3d.backend_calls, p.call_ratio, p.wall_ratio
    ));
    t
}
