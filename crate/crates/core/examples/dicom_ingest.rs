//! Reads a directory of DICOM slices into a scan volume. Without an argument,
//! writes a small synthetic series to a temporary directory first.
//!
//!     cargo run --example dicom_ingest [-- <dicom-dir>]

use std::path::{Path, PathBuf};

use ctstack::dicom::load_dicom_dir;

fn element(out: &mut Vec<u8>, group: u16, elem: u16, vr: &[u8; 2], value: &[u8]) {
    let mut v = value.to_vec();
    if v.len() % 2 == 1 {
        v.push(if vr == b"UI" { 0 } else { b' ' });
    }
    out.extend(group.to_le_bytes());
    out.extend(elem.to_le_bytes());
    out.extend(vr);
    if vr == b"OW" {
        out.extend([0, 0]);
        out.extend((v.len() as u32).to_le_bytes());
    } else {
        out.extend((v.len() as u16).to_le_bytes());
    }
    out.extend(v);
}

fn write_series(dir: &Path) {
    let (rows, cols) = (16u16, 16u16);
    for z in 0..8u16 {
        let mut f = vec![0u8; 128];
        f.extend(b"DICM");
        element(&mut f, 0x0002, 0x0010, b"UI", b"1.2.840.10008.1.2.1");
        element(&mut f, 0x0020, 0x0013, b"IS", (8 - z).to_string().as_bytes());
        element(&mut f, 0x0028, 0x0010, b"US", &rows.to_le_bytes());
        element(&mut f, 0x0028, 0x0011, b"US", &cols.to_le_bytes());
        element(&mut f, 0x0028, 0x0100, b"US", &16u16.to_le_bytes());
        element(&mut f, 0x0028, 0x0103, b"US", &0u16.to_le_bytes());
        element(&mut f, 0x0028, 0x1050, b"DS", b"-600");
        element(&mut f, 0x0028, 0x1051, b"DS", b"1500");
        element(&mut f, 0x0028, 0x1052, b"DS", b"-1024");
        element(&mut f, 0x0028, 0x1053, b"DS", b"1");
        let pixels: Vec<u8> = (0..rows * cols).flat_map(|i| (24 + 50 * z + i % 16).to_le_bytes()).collect();
        element(&mut f, 0x7FE0, 0x0010, b"OW", &pixels);
        std::fs::write(dir.join(format!("slice{z:03}.dcm")), f).unwrap();
    }
}

fn main() -> ctstack::Result<()> {
    let _tmp;
    let dir: PathBuf = match std::env::args().nth(1) {
        Some(d) => d.into(),
        None => {
            _tmp = tempfile::tempdir().unwrap();
            write_series(_tmp.path());
            _tmp.path().to_path_buf()
        }
    };
    let scan = load_dicom_dir(&dir, None, "example")?;
    let v = &scan.volume;
    println!(
        "{}x{}x{} volume ordered by {:?}, window {:?}",
        v.width(),
        v.height(),
        v.depth(),
        scan.ordering_key,
        v.window
    );
    for z in 0..v.depth() {
        println!("slice {z}: first voxel {} HU", v.slice(z)[0]);
    }
    for w in &scan.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
