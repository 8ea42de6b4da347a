//! Attaches an external program as the segmentation backend. Defaults to the
//! bundled Python stub, which marks every voxel whose windowed value exceeds
//! 0.5: soft tissue as well as the brighter lesion voxels.
//!
//!     cargo run --example external_backend [-- "<program> <args...>"]

use ctstack::metrics::dice_score;
use ctstack::segment::{run_pipeline, PipelineConfig};
use ctstack::synth::{generate_phantom, PhantomSpec};
use ctstack::{BackendDescriptor, Error, WindowSpec};

fn main() {
    let cmd = std::env::args().nth(1).unwrap_or_else(|| {
        format!("python3 {}/tests/fixtures/stub_backend.py echo", env!("CARGO_MANIFEST_DIR"))
    });
    let phantom = generate_phantom(&PhantomSpec::new(5, 32, 32, 40, 1)).unwrap();
    let window = WindowSpec::LUNG;
    let desc: BackendDescriptor = format!("external:cmd={cmd};timeout=60").parse().unwrap();
    let backend = desc.build(&window).unwrap();
    let config = PipelineConfig {
        workers: 2,
        ..Default::default()
    };
    match run_pipeline(&phantom.scan, &window, backend.as_ref(), &config) {
        Ok(out) => println!(
            "{} calls to `{cmd}`: {} voxels flagged, {} lesion voxels, dice {:.3}",
            out.backend_calls,
            out.mask.count_positive(),
            phantom.mask.count_positive(),
            dice_score(&out.mask, &phantom.mask).unwrap()
        ),
        Err(Error::Backend { message, diagnostics }) => {
            eprintln!("backend failed: {message}\n{diagnostics}");
            std::process::exit(3);
        }
        Err(e) => panic!("{e}"),
    }
}
