mod common;

use std::time::{Duration, Instant};

use common::{python_available, stub_command};
use ctstack::segment::{run_pipeline, segment_external, BackendDescriptor, ExternalCommand, PipelineConfig};
use ctstack::volume::Geometry;
use ctstack::{Error, NormalizedVolume, ScanVolume, WindowSpec};

fn stub(mode: &str) -> ExternalCommand {
    ExternalCommand::parse(&format!("{} {mode}", stub_command("stub_backend.py"))).unwrap()
}

fn slab() -> NormalizedVolume {
    NormalizedVolume::new("slab", Geometry::new(3, 2, 2).unwrap(), vec![0.1, 0.6, 0.5, 0.9, 0.0, 1.0, 0.2, 0.7, 0.51, 0.49, 0.3, 0.8])
        .unwrap()
}

macro_rules! require_python {
    () => {
        if !python_available() {
            eprintln!("python3 not found; skipping");
            return;
        }
    };
}

#[test]
fn echo_stub_thresholds_its_input() {
    require_python!();
    let out = segment_external(&slab(), &stub("echo")).unwrap();
    let expected: Vec<f32> = slab().voxels().iter().map(|&v| if v > 0.5 { 1.0 } else { 0.0 }).collect();
    assert_eq!(out.voxels(), &expected[..]);
    assert_eq!(out.scan_id, "slab");
}

#[test]
fn constant_stub_is_accepted() {
    require_python!();
    let out = segment_external(&slab(), &stub("const")).unwrap();
    assert!(out.voxels().iter().all(|&v| v == 0.3f32));
}

#[test]
fn failing_stub_carries_its_diagnostics() {
    require_python!();
    match segment_external(&slab(), &stub("fail")) {
        Err(Error::Backend { message, diagnostics }) => {
            assert!(message.contains("exited"), "{message}");
            assert!(diagnostics.contains("simulated model crash"), "{diagnostics}");
        }
        other => panic!("expected backend failure, got {other:?}"),
    }
}

#[test]
fn out_of_range_values_are_rejected() {
    require_python!();
    let err = segment_external(&slab(), &stub("const 1.5")).unwrap_err();
    assert!(matches!(err, Error::Backend { .. }), "{err:?}");
}

#[test]
fn wrong_geometry_and_garbage_are_backend_failures() {
    require_python!();
    for mode in ["badshape", "garbage"] {
        let err = segment_external(&slab(), &stub(mode)).unwrap_err();
        assert!(matches!(err, Error::Backend { .. }), "{mode}: {err:?}");
    }
}

#[test]
fn hung_program_times_out() {
    require_python!();
    let cmd = stub("hang").with_timeout(Duration::from_millis(500));
    let t = Instant::now();
    let err = segment_external(&slab(), &cmd).unwrap_err();
    assert!(t.elapsed() < Duration::from_secs(10));
    match err {
        Error::Backend { message, .. } => assert!(message.contains("timed out"), "{message}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn missing_program_is_a_backend_failure() {
    let cmd = ExternalCommand::parse("/nonexistent/ctstack-model").unwrap();
    assert!(matches!(segment_external(&slab(), &cmd), Err(Error::Backend { .. })));
}

#[test]
fn parallel_pipeline_with_external_backend() {
    require_python!();
    let scan = ScanVolume::new(
        "s",
        Geometry::new(2, 2, 10).unwrap(),
        (0..40).map(|i| if i % 3 == 0 { -100 } else { -1000 }).collect(),
    )
    .unwrap();
    let desc: BackendDescriptor = format!("external:cmd={} echo;timeout=60", stub_command("stub_backend.py"))
        .parse()
        .unwrap();
    let backend = desc.build(&WindowSpec::LUNG).unwrap();
    let config = PipelineConfig {
        stack_size: 4,
        workers: 3,
        ..Default::default()
    };
    let out = run_pipeline(&scan, &WindowSpec::LUNG, backend.as_ref(), &config).unwrap();
    assert_eq!(out.backend_calls, 3);
    // -100 HU windows to 0.833, -1000 HU to 0.233
    let expected: Vec<u8> = scan.voxels().iter().map(|&h| u8::from(h == -100)).collect();
    assert_eq!(out.mask.voxels(), &expected[..]);
}
