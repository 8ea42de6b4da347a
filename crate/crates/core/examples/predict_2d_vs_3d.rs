//! Segments one phantom with the per-slice 2D backend and the stacked 3D
//! backend and compares dice, call counts and area-plot smoothness.

use ctstack::metrics::{area_plot, continuity_tv, dice_score, render_dice_table};
use ctstack::segment::{run_pipeline, PipelineConfig};
use ctstack::synth::{generate_phantom, PhantomSpec};
use ctstack::{BackendDescriptor, WindowSpec};

fn main() -> ctstack::Result<()> {
    let phantom = generate_phantom(&PhantomSpec::new(3, 96, 96, 96, 3))?;
    let window = WindowSpec::LUNG;
    let mut rows = Vec::new();
    for (label, desc) in [
        ("2D Model", "slice2d:radius=1;rate=0.25;seed=3"),
        ("3D Model", "threshold3d:radius=1"),
    ] {
        let desc: BackendDescriptor = desc.parse()?;
        let backend = desc.build(&window)?;
        let config = PipelineConfig {
            mode: desc.mode,
            ..Default::default()
        };
        let out = run_pipeline(&phantom.scan, &window, backend.as_ref(), &config)?;
        let dice = dice_score(&out.mask, &phantom.mask)?;
        let tv = continuity_tv(&area_plot(&out.mask))?;
        println!("{label}: {} backend calls, dice {dice:.3}, area-plot TV {tv:.3}", out.backend_calls);
        rows.push((label, dice));
    }
    println!("truth TV {:.3}\n", continuity_tv(&area_plot(&phantom.mask))?);
    let rows: Vec<(&str, f64)> = rows.into_iter().collect();
    print!("{}", render_dice_table(&rows));
    Ok(())
}
