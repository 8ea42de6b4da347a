//! Test-only helpers: a byte-level DICOM writer written independently of the
//! parser, and paths to the backend stub scripts.

#![allow(dead_code)]

use std::path::{Path, PathBuf};

pub const EXPLICIT_LE: &str = "1.2.840.10008.1.2.1";
pub const IMPLICIT_LE: &str = "1.2.840.10008.1.2";

#[derive(Clone, Debug)]
pub struct DicomFixture {
    pub rows: u16,
    pub columns: u16,
    pub pixel_representation: Option<u16>,
    pub slope: f64,
    pub intercept: f64,
    pub window: Option<(f64, f64)>,
    pub instance_number: Option<i64>,
    pub slice_location: Option<f64>,
    /// Row-major 16-bit words.
    pub pixels: Vec<u16>,
    pub transfer_syntax: String,
    /// Adds an undefined-length sequence before the image attributes.
    pub with_sequence: bool,
}

impl DicomFixture {
    pub fn new(rows: u16, columns: u16, pixels: Vec<u16>) -> Self {
        assert_eq!(pixels.len(), rows as usize * columns as usize);
        DicomFixture {
            rows,
            columns,
            pixel_representation: Some(1),
            slope: 1.0,
            intercept: -1024.0,
            window: Some((-600.0, 1500.0)),
            instance_number: Some(1),
            slice_location: None,
            pixels,
            transfer_syntax: EXPLICIT_LE.into(),
            with_sequence: false,
        }
    }

    /// A slice whose stored values are `hu - intercept` for slope 1.
    pub fn from_hu(rows: u16, columns: u16, hu: &[i16], instance: i64) -> Self {
        let pixels = hu.iter().map(|&h| ((h as i32) + 1024) as i16 as u16).collect();
        let mut f = DicomFixture::new(rows, columns, pixels);
        f.instance_number = Some(instance);
        f
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut meta = Vec::new();
        short_element(&mut meta, 0x0002, 0x0010, b"UI", &ui(&self.transfer_syntax));
        let mut out = vec![0u8; 128];
        out.extend_from_slice(b"DICM");
        short_element(&mut out, 0x0002, 0x0000, b"UL", &(meta.len() as u32).to_le_bytes());
        out.extend_from_slice(&meta);

        if self.with_sequence {
            out.extend_from_slice(&tag_bytes(0x0008, 0x1140));
            out.extend_from_slice(b"SQ\0\0");
            out.extend_from_slice(&u32::MAX.to_le_bytes());
            out.extend_from_slice(&tag_bytes(0xFFFE, 0xE000));
            out.extend_from_slice(&u32::MAX.to_le_bytes());
            short_element(&mut out, 0x0008, 0x1150, b"UI", &ui("1.2.3"));
            out.extend_from_slice(&tag_bytes(0xFFFE, 0xE00D));
            out.extend_from_slice(&0u32.to_le_bytes());
            out.extend_from_slice(&tag_bytes(0xFFFE, 0xE0DD));
            out.extend_from_slice(&0u32.to_le_bytes());
        }
        if let Some(n) = self.instance_number {
            short_element(&mut out, 0x0020, 0x0013, b"IS", &text(&n.to_string()));
        }
        if let Some(loc) = self.slice_location {
            short_element(&mut out, 0x0020, 0x1041, b"DS", &text(&ds(loc)));
        }
        short_element(&mut out, 0x0028, 0x0010, b"US", &self.rows.to_le_bytes());
        short_element(&mut out, 0x0028, 0x0011, b"US", &self.columns.to_le_bytes());
        short_element(&mut out, 0x0028, 0x0100, b"US", &16u16.to_le_bytes());
        if let Some(pr) = self.pixel_representation {
            short_element(&mut out, 0x0028, 0x0103, b"US", &pr.to_le_bytes());
        }
        if let Some((c, w)) = self.window {
            short_element(&mut out, 0x0028, 0x1050, b"DS", &text(&ds(c)));
            short_element(&mut out, 0x0028, 0x1051, b"DS", &text(&ds(w)));
        }
        short_element(&mut out, 0x0028, 0x1052, b"DS", &text(&ds(self.intercept)));
        short_element(&mut out, 0x0028, 0x1053, b"DS", &text(&ds(self.slope)));

        let data: Vec<u8> = self.pixels.iter().flat_map(|p| p.to_le_bytes()).collect();
        out.extend_from_slice(&tag_bytes(0x7FE0, 0x0010));
        out.extend_from_slice(b"OW\0\0");
        out.extend_from_slice(&(data.len() as u32).to_le_bytes());
        out.extend_from_slice(&data);
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) {
        std::fs::write(path, self.encode()).unwrap();
    }
}

fn tag_bytes(group: u16, element: u16) -> [u8; 4] {
    let g = group.to_le_bytes();
    let e = element.to_le_bytes();
    [g[0], g[1], e[0], e[1]]
}

fn short_element(out: &mut Vec<u8>, group: u16, element: u16, vr: &[u8; 2], value: &[u8]) {
    out.extend_from_slice(&tag_bytes(group, element));
    out.extend_from_slice(vr);
    out.extend_from_slice(&(value.len() as u16).to_le_bytes());
    out.extend_from_slice(value);
}

fn ds(v: f64) -> String {
    let s = format!("{v}");
    assert!(s.len() <= 16, "DS value {s} too long");
    s
}

fn text(s: &str) -> Vec<u8> {
    let mut b = s.as_bytes().to_vec();
    if b.len() % 2 == 1 {
        b.push(b' ');
    }
    b
}

fn ui(s: &str) -> Vec<u8> {
    let mut b = s.as_bytes().to_vec();
    if b.len() % 2 == 1 {
        b.push(0);
    }
    b
}

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures")
}

/// `python3 <fixtures>/<script>` as a backend command line.
pub fn stub_command(script: &str) -> String {
    format!("python3 {}", fixtures_dir().join(script).display())
}

pub fn python_available() -> bool {
    std::process::Command::new("python3")
        .arg("--version")
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}
