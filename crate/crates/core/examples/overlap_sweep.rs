//! Predicts one phantom with 3D stacks at overlap factors 0, 0.375 and 0.625
//! and reports stack count, dice and area-plot TV per factor.

use ctstack::metrics::{area_plot, continuity_tv, dice_score};
use ctstack::segment::{run_pipeline_with_overlap, PipelineConfig};
use ctstack::synth::{generate_phantom, PhantomSpec};
use ctstack::{BackendDescriptor, StackParams, WindowSpec};

fn main() -> ctstack::Result<()> {
    let phantom = generate_phantom(&PhantomSpec::new(11, 96, 96, 120, 3))?;
    let window = WindowSpec::LUNG;
    let backend = "threshold3d:radius=2".parse::<BackendDescriptor>()?.build(&window)?;
    println!("truth TV {:.3}", continuity_tv(&area_plot(&phantom.mask))?);
    for factor in [0.0, 0.375, 0.625] {
        let params = StackParams::from_factor(32, factor)?;
        let out = run_pipeline_with_overlap(&phantom.scan, &window, backend.as_ref(), &PipelineConfig::default(), params.overlap)?;
        println!(
            "factor {factor:<5} O={:<2} {:>2} stacks  dice {:.4}  TV {:.3}",
            params.overlap,
            out.backend_calls,
            dice_score(&out.mask, &phantom.mask)?,
            continuity_tv(&area_plot(&out.mask))?
        );
    }
    Ok(())
}
