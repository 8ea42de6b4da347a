//! Dataset evaluation over several phantoms plus an area-plot CSV and SVG for
//! the first one.
//!
//!     cargo run --example evaluate_areaplot [-- <out-dir>]

use ctstack::metrics::{area_plot, evaluate};
use ctstack::plot::{area_plot_csv, line_chart_svg, Series};
use ctstack::segment::{run_pipeline, PipelineConfig};
use ctstack::synth::{generate_phantom, PhantomSpec};
use ctstack::{BackendDescriptor, MaskVolume, WindowSpec};

fn main() -> ctstack::Result<()> {
    let window = WindowSpec::LUNG;
    let backend = "threshold3d:radius=1".parse::<BackendDescriptor>()?.build(&window)?;
    let mut pairs: Vec<(MaskVolume, MaskVolume)> = Vec::new();
    for seed in 0..4 {
        let p = generate_phantom(&PhantomSpec::new(seed, 64, 64, 64, 2))?;
        let out = run_pipeline(&p.scan, &window, backend.as_ref(), &PipelineConfig::default())?;
        pairs.push((out.mask, p.mask));
    }
    let refs: Vec<(&MaskVolume, &MaskVolume)> = pairs.iter().map(|(p, t)| (p, t)).collect();
    let report = evaluate(&refs)?;
    println!("{}", serde_json::to_string_pretty(&report).unwrap());

    let (pred, truth) = (area_plot(&pairs[0].0), area_plot(&pairs[0].1));
    let csv = area_plot_csv(&truth, Some(&pred))?;
    let svg = line_chart_svg(
        "phantom-0",
        &[
            Series { name: "truth", values: &truth.normalized },
            Series { name: "prediction", values: &pred.normalized },
        ],
    );
    match std::env::args().nth(1) {
        Some(dir) => {
            std::fs::create_dir_all(&dir).unwrap();
            std::fs::write(format!("{dir}/areaplot.csv"), csv).unwrap();
            std::fs::write(format!("{dir}/areaplot.svg"), svg).unwrap();
            println!("wrote {dir}/areaplot.csv and {dir}/areaplot.svg");
        }
        None => print!("{}", String::from_utf8_lossy(&csv).lines().take(6).collect::<Vec<_>>().join("\n") + "\n...\n"),
    }
    Ok(())
}
