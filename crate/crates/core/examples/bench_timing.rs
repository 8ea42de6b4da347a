//! Inference timing for a 709-slice scan in both modes, with a backend whose
//! every call costs a fixed 2 ms so the call-count structure shows in wall time.

use std::time::Duration;

use ctstack::bench::{render_paired, time_both_modes};
use ctstack::segment::{PipelineConfig, SegmentContext};
use ctstack::volume::Geometry;
use ctstack::{NormalizedVolume, ProbVolume, ScanVolume, Segmenter, WindowSpec};

struct FixedCost(Duration);

impl Segmenter for FixedCost {
    fn name(&self) -> &str {
        "fixed-cost"
    }

    fn segment(&self, input: &NormalizedVolume, _ctx: &SegmentContext) -> ctstack::Result<ProbVolume> {
        std::thread::sleep(self.0);
        Ok(input.map(|v| v))
    }
}

fn main() -> ctstack::Result<()> {
    let scan = ScanVolume::filled("bench", Geometry::new(16, 16, 709)?, -600)?;
    let paired = time_both_modes(
        &scan,
        &WindowSpec::LUNG,
        &FixedCost(Duration::from_millis(2)),
        &PipelineConfig::default(),
        3,
    )?;
    print!("{}", render_paired(&paired));
    println!("expected ratio 709/23 = {:.2}", 709.0 / 23.0);
    Ok(())
}
