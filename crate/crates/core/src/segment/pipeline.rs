use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stacker::{plan_stacks, reassemble, slice_into_stacks, StackParams, StackPlan, StackSlab};
use crate::volume::{
    apply_window, resize, threshold_prob, MaskVolume, NormalizedVolume, ProbVolume, ScanVolume, WindowSpec,
    DEFAULT_THRESHOLD,
};

use super::{PipelineMode, SegmentContext, Segmenter};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub mode: PipelineMode,
    pub stack_size: usize,
    pub threshold: f64,
    /// Backend calls in flight at once; 1 runs them serially.
    pub workers: usize,
    /// In-plane size to resample windowed slices to before segmentation.
    pub resize: Option<(usize, usize)>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            mode: PipelineMode::Stacked3d,
            stack_size: 32,
            threshold: DEFAULT_THRESHOLD,
            workers: 1,
            resize: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CallTiming {
    /// Wall time of each backend call, in call order.
    pub call_seconds: Vec<f64>,
    /// Wall time spent inside backend calls (the join, when parallel).
    pub backend_seconds: f64,
    /// Wall time of the whole pipeline including windowing and reassembly.
    pub total_seconds: f64,
}

#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub prob: ProbVolume,
    pub mask: MaskVolume,
    /// Stack plan used in 3D mode.
    pub plan: Option<StackPlan>,
    pub backend_calls: usize,
    pub timing: CallTiming,
}

/// Window -> (optional resize) -> backend calls -> reassembly -> threshold.
///
/// In 2D mode the backend sees one depth-1 slice per call. In 3D mode the
/// scan is cut into non-overlapping stacks of `config.stack_size` slices,
/// the last one padded.
pub fn run_pipeline(
    scan: &ScanVolume,
    window: &WindowSpec,
    backend: &dyn Segmenter,
    config: &PipelineConfig,
) -> Result<PipelineOutput> {
    run_pipeline_with_overlap(scan, window, backend, config, 0)
}

/// [`run_pipeline`] with `overlap` slices shared by adjacent stacks (3D mode
/// only); overlapping predictions are averaged on reassembly.
pub fn run_pipeline_with_overlap(
    scan: &ScanVolume,
    window: &WindowSpec,
    backend: &dyn Segmenter,
    config: &PipelineConfig,
    overlap: usize,
) -> Result<PipelineOutput> {
    if config.workers == 0 {
        return Err(Error::invalid("worker count must be at least 1"));
    }
    if config.mode == PipelineMode::PerSlice2d && overlap != 0 {
        return Err(Error::invalid("stack overlap applies to 3D mode only"));
    }
    let started = Instant::now();
    let mut normalized = apply_window(scan, window)?;
    if let Some((w, h)) = config.resize {
        normalized = resize(&normalized, w, h)?;
    }
    // validate the threshold before spending time on backend calls
    threshold_prob(&normalized.sub_volume(0..1)?, config.threshold)?;

    let (inputs, plan) = match config.mode {
        PipelineMode::PerSlice2d => {
            let slices = (0..normalized.depth())
                .map(|z| {
                    Ok(StackSlab {
                        plan_index: z,
                        data: normalized.sub_volume(z..z + 1)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            (slices, None)
        }
        PipelineMode::Stacked3d => {
            let plan = plan_stacks(normalized.depth(), StackParams::new(config.stack_size, overlap)?)?;
            (slice_into_stacks(&normalized, &plan)?, Some(plan))
        }
    };

    let first_slice = |slab: &StackSlab<f32>| match &plan {
        Some(p) => p.entries[slab.plan_index].start,
        None => slab.plan_index,
    };
    let call = |slab: &StackSlab<f32>| -> Result<(StackSlab<f32>, f64)> {
        let ctx = SegmentContext {
            scan_id: &scan.scan_id,
            first_slice: first_slice(slab),
        };
        let t0 = Instant::now();
        let prob = backend.segment(&slab.data, &ctx)?;
        let seconds = t0.elapsed().as_secs_f64();
        check_backend_output(backend, &slab.data, &prob)?;
        Ok((
            StackSlab {
                plan_index: slab.plan_index,
                data: prob,
            },
            seconds,
        ))
    };

    let backend_started = Instant::now();
    let results: Vec<(StackSlab<f32>, f64)> = if config.workers == 1 {
        inputs.iter().map(call).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::invalid(format!("cannot build worker pool: {e}")))?;
        pool.install(|| inputs.par_iter().map(call).collect::<Result<_>>())?
    };
    let backend_seconds = backend_started.elapsed().as_secs_f64();
    let backend_calls = results.len();
    let (outputs, call_seconds): (Vec<_>, Vec<_>) = results.into_iter().unzip();

    let prob = match &plan {
        Some(p) => reassemble(&outputs, p)?,
        None => concat_slices(&normalized, outputs),
    };
    let mask = threshold_prob(&prob, config.threshold)?;
    Ok(PipelineOutput {
        prob,
        mask,
        plan,
        backend_calls,
        timing: CallTiming {
            call_seconds,
            backend_seconds,
            total_seconds: started.elapsed().as_secs_f64(),
        },
    })
}

fn check_backend_output(backend: &dyn Segmenter, input: &NormalizedVolume, prob: &ProbVolume) -> Result<()> {
    if prob.geometry() != input.geometry() {
        return Err(Error::backend(
            format!("{} returned a volume of different geometry", backend.name()),
            format!("{:?} vs {:?}", prob.geometry(), input.geometry()),
        ));
    }
    prob.validate_unit_range()
        .map_err(|e| Error::backend(format!("{} returned an invalid probability", backend.name()), e.to_string()))
}

fn concat_slices(template: &NormalizedVolume, slices: Vec<StackSlab<f32>>) -> ProbVolume {
    let mut voxels = Vec::with_capacity(template.geometry().len());
    for s in slices {
        voxels.extend(s.data.into_voxels());
    }
    template.with_voxels(template.geometry(), voxels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segment::{Band, Threshold3d};
    use crate::volume::Geometry;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct Counting {
        calls: AtomicUsize,
        depths: std::sync::Mutex<Vec<usize>>,
    }

    impl Segmenter for Counting {
        fn name(&self) -> &str {
            "counting"
        }

        fn segment(&self, input: &NormalizedVolume, _ctx: &SegmentContext) -> Result<ProbVolume> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            self.depths.lock().unwrap().push(input.depth());
            Ok(input.clone())
        }
    }

    fn counting() -> Counting {
        Counting {
            calls: AtomicUsize::new(0),
            depths: Default::default(),
        }
    }

    fn scan(depth: usize) -> ScanVolume {
        ScanVolume::filled("s", Geometry::new(2, 2, depth).unwrap(), -600).unwrap()
    }

    #[test]
    fn stacked_mode_call_count_601() {
        let b = counting();
        let out = run_pipeline(&scan(601), &WindowSpec::LUNG, &b, &PipelineConfig::default()).unwrap();
        assert_eq!(out.backend_calls, 19);
        assert_eq!(b.calls.load(Ordering::SeqCst), 19);
        assert!(b.depths.lock().unwrap().iter().all(|&d| d == 32));
        assert_eq!(out.prob.depth(), 601);
        assert_eq!(out.timing.call_seconds.len(), 19);
    }

    #[test]
    fn per_slice_mode_call_count_601() {
        let b = counting();
        let config = PipelineConfig {
            mode: PipelineMode::PerSlice2d,
            workers: 4,
            ..Default::default()
        };
        let out = run_pipeline(&scan(601), &WindowSpec::LUNG, &b, &config).unwrap();
        assert_eq!(out.backend_calls, 601);
        assert!(b.depths.lock().unwrap().iter().all(|&d| d == 1));
        // identity backend: windowed -600 under the lung window is exactly 0.5
        assert!(out.prob.voxels().iter().all(|&v| v == 0.5));
        assert_eq!(out.mask.count_positive(), out.mask.geometry().len());
    }

    #[test]
    fn parallel_and_serial_agree() {
        let g = Geometry::new(5, 4, 70).unwrap();
        let s = ScanVolume::new("p", g, (0..g.len()).map(|i| ((i * 37) % 900) as i16 - 900).collect()).unwrap();
        let backend = Threshold3d {
            band: Band::new(0.2, 0.5).unwrap(),
            radius: 1,
        };
        let serial = run_pipeline(&s, &WindowSpec::LUNG, &backend, &PipelineConfig::default()).unwrap();
        let config = PipelineConfig {
            workers: 3,
            ..Default::default()
        };
        let parallel = run_pipeline(&s, &WindowSpec::LUNG, &backend, &config).unwrap();
        assert_eq!(serial.prob, parallel.prob);
    }

    #[test]
    fn rejects_bad_config() {
        let b = counting();
        let zero_workers = PipelineConfig {
            workers: 0,
            ..Default::default()
        };
        assert!(run_pipeline(&scan(3), &WindowSpec::LUNG, &b, &zero_workers).is_err());
        let bad_t = PipelineConfig {
            threshold: 2.0,
            ..Default::default()
        };
        assert!(run_pipeline(&scan(3), &WindowSpec::LUNG, &b, &bad_t).is_err());
        assert_eq!(b.calls.load(Ordering::SeqCst), 0);
    }

    #[test]
    fn resize_happens_after_windowing() {
        let b = counting();
        let config = PipelineConfig {
            resize: Some((4, 4)),
            ..Default::default()
        };
        let out = run_pipeline(&scan(3), &WindowSpec::LUNG, &b, &config).unwrap();
        assert_eq!(out.prob.geometry(), Geometry::new(4, 4, 3).unwrap());
    }
}
