mod common;

use common::{DicomFixture, IMPLICIT_LE};
use ctstack::dicom::{load_dicom_dir, parse_dicom_file, OrderingKey};
use ctstack::Error;

fn ramp(rows: u16, cols: u16, base: i16) -> Vec<i16> {
    (0..rows as i32 * cols as i32).map(|i| base + (i % 50) as i16).collect()
}

#[test]
fn attributes_round_trip() {
    let mut f = DicomFixture::new(3, 4, (0..12).map(|v| v * 100).collect());
    f.slope = 2.0;
    f.intercept = -1024.0;
    f.window = Some((40.0, 400.0));
    f.instance_number = Some(17);
    f.slice_location = Some(-12.5);
    let s = parse_dicom_file(&f.encode()).unwrap();
    assert_eq!((s.rows, s.columns), (3, 4));
    assert_eq!(s.rescale_slope, 2.0);
    assert_eq!(s.rescale_intercept, -1024.0);
    let w = s.window.unwrap();
    assert_eq!((w.center, w.width), (40.0, 400.0));
    assert_eq!(s.instance_number, Some(17));
    assert_eq!(s.slice_location, Some(-12.5));
    assert_eq!(s.pixels, f.pixels);
}

#[test]
fn sequences_are_skipped() {
    let mut f = DicomFixture::new(2, 2, vec![1, 2, 3, 4]);
    f.with_sequence = true;
    let s = parse_dicom_file(&f.encode()).unwrap();
    assert_eq!(s.pixels, vec![1, 2, 3, 4]);
}

#[test]
fn implicit_vr_is_unsupported() {
    let mut f = DicomFixture::new(2, 2, vec![0; 4]);
    f.transfer_syntax = IMPLICIT_LE.into();
    assert!(matches!(parse_dicom_file(&f.encode()), Err(Error::UnsupportedEncoding(_))));
}

#[test]
fn missing_magic_is_not_dicom() {
    let mut bytes = DicomFixture::new(2, 2, vec![0; 4]).encode();
    bytes[128] = b'X';
    assert!(matches!(parse_dicom_file(&bytes), Err(Error::NotDicom(_))));
    assert!(matches!(parse_dicom_file(b"short"), Err(Error::NotDicom(_))));
}

#[test]
fn short_pixel_data_is_geometry_mismatch() {
    let mut f = DicomFixture::new(4, 4, vec![0; 16]);
    f.rows = 5;
    assert!(matches!(parse_dicom_file(&f.encode()), Err(Error::GeometryMismatch(_))));
}

#[test]
fn unsigned_representation_and_default_warning() {
    let mut f = DicomFixture::new(1, 2, vec![0xFFFF, 1]);
    f.pixel_representation = Some(0);
    assert_eq!(parse_dicom_file(&f.encode()).unwrap().stored_values(), vec![65535, 1]);
    f.pixel_representation = Some(1);
    assert_eq!(parse_dicom_file(&f.encode()).unwrap().stored_values(), vec![-1, 1]);
    f.pixel_representation = None;
    let s = parse_dicom_file(&f.encode()).unwrap();
    assert_eq!(s.pixel_representation, 0);
    assert!(!s.warnings.is_empty());
}

#[test]
fn directory_is_sorted_by_instance_number() {
    let dir = tempfile::tempdir().unwrap();
    // Written in scrambled order with names that sort differently.
    for (name, instance) in [("b.dcm", 3), ("c.dcm", 1), ("a.dcm", 2)] {
        let hu = vec![instance as i16 * 10; 6];
        DicomFixture::from_hu(2, 3, &hu, instance).write(dir.path().join(name));
    }
    std::fs::write(dir.path().join("README.txt"), b"not an image").unwrap();
    let scan = load_dicom_dir(dir.path(), None, "s").unwrap();
    assert_eq!(scan.ordering_key, OrderingKey::InstanceNumber);
    let v = &scan.volume;
    assert_eq!((v.width(), v.height(), v.depth()), (3, 2, 3));
    assert_eq!(v.slice(0)[0], 10);
    assert_eq!(v.slice(2)[0], 30);
    assert_eq!(v.window.unwrap().center, -600.0);

    let by_name = load_dicom_dir(dir.path(), Some(OrderingKey::Filename), "s").unwrap();
    let firsts: Vec<i16> = (0..3).map(|z| by_name.volume.slice(z)[0]).collect();
    assert_eq!(firsts, vec![20, 30, 10]);
}

#[test]
fn duplicate_instances_are_ambiguous() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.dcm", "b.dcm"] {
        DicomFixture::from_hu(2, 2, &[0; 4], 5).write(dir.path().join(name));
    }
    let err = load_dicom_dir(dir.path(), Some(OrderingKey::InstanceNumber), "s").unwrap_err();
    assert!(matches!(err, Error::AmbiguousOrder(_)));
}

#[test]
fn mixed_geometry_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    DicomFixture::from_hu(2, 2, &[0; 4], 1).write(dir.path().join("a.dcm"));
    DicomFixture::from_hu(3, 2, &[0; 6], 2).write(dir.path().join("b.dcm"));
    assert!(matches!(load_dicom_dir(dir.path(), None, "s"), Err(Error::GeometryMismatch(_))));
}

#[test]
fn rescale_saturation_is_counted() {
    let dir = tempfile::tempdir().unwrap();
    let mut f = DicomFixture::new(1, 2, vec![30000, 10]);
    f.pixel_representation = Some(0);
    f.slope = 2.0;
    f.intercept = 0.0;
    f.write(dir.path().join("a.dcm"));
    let scan = load_dicom_dir(dir.path(), None, "s").unwrap();
    assert_eq!(scan.volume.voxels(), &[i16::MAX, 20]);
    assert_eq!(scan.saturated_voxels, 1);
}

#[test]
fn location_ordering_of_generated_series() {
    let dir = tempfile::tempdir().unwrap();
    for z in 0..6 {
        let mut f = DicomFixture::from_hu(4, 5, &ramp(4, 5, -900 + z as i16), 1);
        f.instance_number = None;
        f.slice_location = Some(100.0 - 2.5 * z as f64);
        f.write(dir.path().join(format!("{z:02}.dcm")));
    }
    let scan = load_dicom_dir(dir.path(), None, "s").unwrap();
    assert_eq!(scan.ordering_key, OrderingKey::SliceLocation);
    // Ascending location reverses the write order.
    assert_eq!(scan.volume.slice(0)[0], -895);
    assert_eq!(scan.volume.slice(5)[0], -900);
}
