//! Minimal DICOM reader: explicit-VR little-endian files with uncompressed
//! 16-bit pixel data, plus assembly of parsed slices into a [`ScanVolume`].
//!
//! Only the handful of attributes needed to rebuild Hounsfield volumes are
//! decoded. Every other element is skipped by its declared length; sequences
//! of undefined length are walked item by item until their delimiter.

use std::cmp::Ordering;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{apply_rescale, Geometry, ScanVolume, WindowSpec};

pub const PREAMBLE_LEN: usize = 128;
pub const MAGIC: &[u8; 4] = b"DICM";
pub const EXPLICIT_VR_LITTLE_ENDIAN: &str = "1.2.840.10008.1.2.1";

const UNDEFINED_LENGTH: u32 = 0xFFFF_FFFF;
const MAX_SEQUENCE_DEPTH: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Tag(pub u16, pub u16);

impl std::fmt::Display for Tag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({:04X},{:04X})", self.0, self.1)
    }
}

pub mod tags {
    use super::Tag;

    pub const TRANSFER_SYNTAX_UID: Tag = Tag(0x0002, 0x0010);
    pub const INSTANCE_NUMBER: Tag = Tag(0x0020, 0x0013);
    pub const SLICE_LOCATION: Tag = Tag(0x0020, 0x1041);
    pub const ROWS: Tag = Tag(0x0028, 0x0010);
    pub const COLUMNS: Tag = Tag(0x0028, 0x0011);
    pub const BITS_ALLOCATED: Tag = Tag(0x0028, 0x0100);
    pub const PIXEL_REPRESENTATION: Tag = Tag(0x0028, 0x0103);
    pub const WINDOW_CENTER: Tag = Tag(0x0028, 0x1050);
    pub const WINDOW_WIDTH: Tag = Tag(0x0028, 0x1051);
    pub const RESCALE_INTERCEPT: Tag = Tag(0x0028, 0x1052);
    pub const RESCALE_SLOPE: Tag = Tag(0x0028, 0x1053);
    pub const PIXEL_DATA: Tag = Tag(0x7FE0, 0x0010);

    pub const ITEM: Tag = Tag(0xFFFE, 0xE000);
    pub const ITEM_DELIMITATION: Tag = Tag(0xFFFE, 0xE00D);
    pub const SEQUENCE_DELIMITATION: Tag = Tag(0xFFFE, 0xE0DD);
}

/// VRs whose explicit-VR header carries two reserved bytes and a 32-bit length.
fn has_long_length(vr: [u8; 2]) -> bool {
    matches!(
        &vr,
        b"OB" | b"OD" | b"OF" | b"OL" | b"OV" | b"OW" | b"SQ" | b"SV" | b"UC" | b"UN" | b"UR" | b"UT" | b"UV"
    )
}

/// One decoded CT slice.
#[derive(Clone, Debug, PartialEq)]
pub struct SliceRecord {
    pub rows: usize,
    pub columns: usize,
    pub bits_allocated: u16,
    /// 0 = unsigned stored values, 1 = two's complement.
    pub pixel_representation: u16,
    pub rescale_slope: f64,
    pub rescale_intercept: f64,
    pub window: Option<WindowSpec>,
    pub instance_number: Option<i64>,
    pub slice_location: Option<f64>,
    /// Raw 16-bit pixel words, row-major.
    pub pixels: Vec<u16>,
    /// File name the slice was read from, when known.
    pub source: Option<String>,
    pub warnings: Vec<String>,
}

impl SliceRecord {
    /// Stored values interpreted according to the pixel representation.
    pub fn stored_values(&self) -> Vec<i32> {
        if self.pixel_representation == 1 {
            self.pixels.iter().map(|&w| w as i16 as i32).collect()
        } else {
            self.pixels.iter().map(|&w| w as i32).collect()
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

struct Header {
    start: usize,
    tag: Tag,
    vr: [u8; 2],
    len: u32,
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn at_end(&self) -> bool {
        self.pos >= self.bytes.len()
    }

    fn malformed(&self, offset: usize, reason: impl Into<String>) -> Error {
        Error::Malformed {
            offset,
            reason: reason.into(),
        }
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(self.malformed(
                self.pos,
                format!("truncated {what}: need {n} bytes, {} remain", self.remaining()),
            ));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        let b = self.take(2, what)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn tag(&mut self) -> Result<Tag> {
        Ok(Tag(self.u16("element tag")?, self.u16("element tag")?))
    }

    fn peek_group(&self) -> Option<u16> {
        (self.remaining() >= 2).then(|| u16::from_le_bytes([self.bytes[self.pos], self.bytes[self.pos + 1]]))
    }

    /// Reads an explicit-VR element header. Item and delimiter tags carry no VR.
    fn header(&mut self) -> Result<Header> {
        let start = self.pos;
        let tag = self.tag()?;
        if tag.0 == 0xFFFE {
            let len = self.u32("item length")?;
            return Ok(Header {
                start,
                tag,
                vr: *b"  ",
                len,
            });
        }
        let vr_bytes = self.take(2, "value representation")?;
        let vr = [vr_bytes[0], vr_bytes[1]];
        if !vr.iter().all(u8::is_ascii_uppercase) {
            return Err(self.malformed(start, format!("element {tag} has invalid VR bytes {vr:02X?}")));
        }
        let len = if has_long_length(vr) {
            self.take(2, "reserved bytes")?;
            self.u32("element length")?
        } else {
            self.u16("element length")? as u32
        };
        Ok(Header { start, tag, vr, len })
    }

    fn value(&mut self, h: &Header) -> Result<&'a [u8]> {
        let len = h.len as usize;
        if self.remaining() < len {
            return Err(self.malformed(
                h.start,
                format!(
                    "element {} declares {len} value bytes, only {} remain",
                    h.tag,
                    self.remaining()
                ),
            ));
        }
        self.take(len, "element value")
    }

    /// Skips the items of an undefined-length sequence, up to and including
    /// its delimiter.
    fn skip_undefined_sequence(&mut self, depth: usize) -> Result<()> {
        if depth > MAX_SEQUENCE_DEPTH {
            return Err(self.malformed(self.pos, "sequence nesting too deep"));
        }
        loop {
            let h = self.header()?;
            match h.tag {
                tags::SEQUENCE_DELIMITATION => return Ok(()),
                tags::ITEM if h.len == UNDEFINED_LENGTH => self.skip_until_item_end(depth + 1)?,
                tags::ITEM => {
                    self.value(&h)?;
                }
                other => {
                    return Err(self.malformed(h.start, format!("unexpected {other} inside sequence")));
                }
            }
        }
    }

    fn skip_until_item_end(&mut self, depth: usize) -> Result<()> {
        loop {
            let h = self.header()?;
            match h.tag {
                tags::ITEM_DELIMITATION => return Ok(()),
                _ if h.len == UNDEFINED_LENGTH && &h.vr == b"SQ" => self.skip_undefined_sequence(depth)?,
                _ if h.len == UNDEFINED_LENGTH => {
                    return Err(Error::UnsupportedEncoding(format!(
                        "undefined length on non-sequence element {} at byte {}",
                        h.tag, h.start
                    )));
                }
                _ => {
                    self.value(&h)?;
                }
            }
        }
    }
}

fn trimmed_text(value: &[u8]) -> String {
    String::from_utf8_lossy(value)
        .trim_matches(|c: char| c == '\0' || c.is_whitespace())
        .to_string()
}

fn parse_first<T: std::str::FromStr>(tag: Tag, value: &[u8], offset: usize) -> Result<T> {
    let text = trimmed_text(value);
    let first = text.split('\\').next().unwrap_or("").trim();
    first.parse().map_err(|_| Error::Malformed {
        offset,
        reason: format!("cannot parse {tag} value {first:?}"),
    })
}

fn parse_us(h: &Header, value: &[u8]) -> Result<u16> {
    if value.len() < 2 {
        return Err(Error::Malformed {
            offset: h.start,
            reason: format!("{} needs a 2-byte US value, found {} bytes", h.tag, value.len()),
        });
    }
    Ok(u16::from_le_bytes([value[0], value[1]]))
}

/// Parses one DICOM Part 10 file held in memory.
pub fn parse_dicom_file(bytes: &[u8]) -> Result<SliceRecord> {
    if bytes.len() < PREAMBLE_LEN + MAGIC.len() {
        return Err(Error::NotDicom(format!(
            "{} bytes is shorter than the preamble and magic",
            bytes.len()
        )));
    }
    if &bytes[PREAMBLE_LEN..PREAMBLE_LEN + 4] != MAGIC {
        return Err(Error::NotDicom("missing DICM magic after the preamble".into()));
    }
    let mut r = Reader {
        bytes,
        pos: PREAMBLE_LEN + 4,
    };

    // File meta group: always explicit VR little endian.
    let mut transfer_syntax = None;
    while r.peek_group() == Some(0x0002) {
        let h = r.header()?;
        if h.len == UNDEFINED_LENGTH {
            return Err(r.malformed(h.start, format!("undefined length in file meta element {}", h.tag)));
        }
        let value = r.value(&h)?;
        if h.tag == tags::TRANSFER_SYNTAX_UID {
            transfer_syntax = Some(trimmed_text(value));
        }
    }
    match transfer_syntax.as_deref() {
        None => return Err(r.malformed(r.pos, "file meta group has no transfer syntax UID")),
        Some(EXPLICIT_VR_LITTLE_ENDIAN) => {}
        Some(other) => {
            return Err(Error::UnsupportedEncoding(format!(
                "transfer syntax {other} (only explicit VR little endian is supported)"
            )))
        }
    }

    let mut rows = None;
    let mut columns = None;
    let mut bits_allocated = None;
    let mut pixel_representation = None;
    let mut slope = None;
    let mut intercept = None;
    let mut center = None;
    let mut width = None;
    let mut instance_number = None;
    let mut slice_location = None;
    let mut pixel_bytes: Option<&[u8]> = None;

    while !r.at_end() {
        let h = r.header()?;
        if h.tag.0 == 0xFFFE {
            return Err(r.malformed(h.start, format!("stray {} outside a sequence", h.tag)));
        }
        if h.len == UNDEFINED_LENGTH {
            if h.tag == tags::PIXEL_DATA {
                return Err(Error::UnsupportedEncoding(
                    "encapsulated (compressed) pixel data".into(),
                ));
            }
            if &h.vr == b"SQ" {
                r.skip_undefined_sequence(1)?;
                continue;
            }
            return Err(Error::UnsupportedEncoding(format!(
                "undefined length on non-sequence element {} at byte {}",
                h.tag, h.start
            )));
        }
        let value = r.value(&h)?;
        match h.tag {
            tags::ROWS => rows = Some(parse_us(&h, value)?),
            tags::COLUMNS => columns = Some(parse_us(&h, value)?),
            tags::BITS_ALLOCATED => bits_allocated = Some(parse_us(&h, value)?),
            tags::PIXEL_REPRESENTATION => pixel_representation = Some(parse_us(&h, value)?),
            tags::RESCALE_SLOPE => slope = Some(parse_first::<f64>(h.tag, value, h.start)?),
            tags::RESCALE_INTERCEPT => intercept = Some(parse_first::<f64>(h.tag, value, h.start)?),
            tags::WINDOW_CENTER => center = Some(parse_first::<f64>(h.tag, value, h.start)?),
            tags::WINDOW_WIDTH => width = Some(parse_first::<f64>(h.tag, value, h.start)?),
            tags::INSTANCE_NUMBER => instance_number = Some(parse_first::<i64>(h.tag, value, h.start)?),
            tags::SLICE_LOCATION => slice_location = Some(parse_first::<f64>(h.tag, value, h.start)?),
            tags::PIXEL_DATA => pixel_bytes = Some(value),
            _ => {}
        }
    }

    let end = bytes.len();
    let missing = |what: &str| Error::Malformed {
        offset: end,
        reason: format!("stream ended without a {what} element"),
    };
    let pixel_bytes = pixel_bytes.ok_or_else(|| missing("PixelData"))?;
    let rows = rows.ok_or_else(|| missing("Rows"))? as usize;
    let columns = columns.ok_or_else(|| missing("Columns"))? as usize;
    let bits_allocated = bits_allocated.ok_or_else(|| missing("BitsAllocated"))?;
    if bits_allocated != 16 {
        return Err(Error::UnsupportedEncoding(format!(
            "BitsAllocated {bits_allocated} (only 16 is supported)"
        )));
    }
    if rows == 0 || columns == 0 {
        return Err(Error::geometry(format!("slice has {rows} rows and {columns} columns")));
    }
    if pixel_bytes.len() != 2 * rows * columns {
        return Err(Error::geometry(format!(
            "PixelData holds {} bytes, expected 2 x {rows} x {columns} = {}",
            pixel_bytes.len(),
            2 * rows * columns
        )));
    }

    let mut warnings = Vec::new();
    let pixel_representation = match pixel_representation {
        Some(p @ (0 | 1)) => p,
        Some(p) => {
            return Err(Error::UnsupportedEncoding(format!("PixelRepresentation {p}")));
        }
        None => {
            warnings.push("PixelRepresentation missing, assuming unsigned pixels".to_string());
            0
        }
    };
    let window = match (center, width) {
        (Some(c), Some(w)) => match WindowSpec::new(c, w) {
            Ok(spec) => Some(spec),
            Err(e) => {
                warnings.push(format!("ignoring window: {e}"));
                None
            }
        },
        (None, None) => None,
        _ => {
            warnings.push("window center without width (or vice versa), ignoring".to_string());
            None
        }
    };

    Ok(SliceRecord {
        rows,
        columns,
        bits_allocated,
        pixel_representation,
        rescale_slope: slope.unwrap_or(1.0),
        rescale_intercept: intercept.unwrap_or(0.0),
        window,
        instance_number,
        slice_location,
        pixels: pixel_bytes
            .chunks_exact(2)
            .map(|b| u16::from_le_bytes([b[0], b[1]]))
            .collect(),
        source: None,
        warnings,
    })
}

/// Attribute used to order slices along z.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderingKey {
    InstanceNumber,
    SliceLocation,
    Filename,
}

impl std::str::FromStr for OrderingKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "instance" | "instance_number" => Ok(OrderingKey::InstanceNumber),
            "location" | "slice_location" => Ok(OrderingKey::SliceLocation),
            "name" | "filename" => Ok(OrderingKey::Filename),
            other => Err(Error::invalid(format!(
                "unknown ordering key {other:?} (expected instance, location or name)"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ScanAssembly {
    pub slices: Vec<SliceRecord>,
    pub ordering_key: OrderingKey,
}

impl ScanAssembly {
    pub fn new(slices: Vec<SliceRecord>, ordering_key: OrderingKey) -> Self {
        ScanAssembly { slices, ordering_key }
    }

    /// Picks the first key present on every slice: instance number, then
    /// slice location, then file name.
    pub fn with_preferred_key(slices: Vec<SliceRecord>) -> Result<Self> {
        let key = [
            OrderingKey::InstanceNumber,
            OrderingKey::SliceLocation,
            OrderingKey::Filename,
        ]
        .into_iter()
        .find(|&k| slices.iter().all(|s| key_present(s, k)))
        .ok_or_else(|| {
            Error::AmbiguousOrder("no ordering key (instance number, slice location, file name) on every slice".into())
        })?;
        Ok(ScanAssembly::new(slices, key))
    }
}

fn key_present(s: &SliceRecord, key: OrderingKey) -> bool {
    match key {
        OrderingKey::InstanceNumber => s.instance_number.is_some(),
        OrderingKey::SliceLocation => s.slice_location.is_some_and(f64::is_finite),
        OrderingKey::Filename => s.source.is_some(),
    }
}

fn compare_by(key: OrderingKey, a: &SliceRecord, b: &SliceRecord) -> Ordering {
    match key {
        OrderingKey::InstanceNumber => a.instance_number.cmp(&b.instance_number),
        OrderingKey::SliceLocation => a
            .slice_location
            .unwrap_or(f64::NAN)
            .total_cmp(&b.slice_location.unwrap_or(f64::NAN)),
        OrderingKey::Filename => a.source.cmp(&b.source),
    }
}

/// An assembled scan with the bookkeeping the ingest report records.
#[derive(Clone, Debug)]
pub struct AssembledScan {
    pub volume: ScanVolume,
    pub ordering_key: OrderingKey,
    /// Voxels clamped to the i16 range during rescale.
    pub saturated_voxels: usize,
    pub warnings: Vec<String>,
}

/// Sorts slices ascending by the assembly's key and rescales them into a volume.
pub fn assemble_scan(assembly: &ScanAssembly, scan_id: &str) -> Result<AssembledScan> {
    let key = assembly.ordering_key;
    let first = assembly
        .slices
        .first()
        .ok_or_else(|| Error::invalid("cannot assemble a scan from zero slices"))?;
    for (i, s) in assembly.slices.iter().enumerate() {
        if s.rows != first.rows || s.columns != first.columns || s.pixel_representation != first.pixel_representation {
            return Err(Error::geometry(format!(
                "slice {i} is {}x{} (representation {}), slice 0 is {}x{} (representation {})",
                s.columns, s.rows, s.pixel_representation, first.columns, first.rows, first.pixel_representation
            )));
        }
        if !key_present(s, key) {
            return Err(Error::AmbiguousOrder(format!("slice {i} has no {key:?}")));
        }
    }

    let mut order: Vec<&SliceRecord> = assembly.slices.iter().collect();
    order.sort_by(|a, b| compare_by(key, a, b));
    if let Some(pair) = order.windows(2).find(|w| compare_by(key, w[0], w[1]) != Ordering::Less) {
        return Err(Error::AmbiguousOrder(format!(
            "two slices share the same {key:?} ({:?} / {:?} / {:?})",
            pair[0].instance_number, pair[0].slice_location, pair[0].source
        )));
    }

    let geometry = Geometry::new(first.columns, first.rows, order.len())?;
    let mut voxels = Vec::with_capacity(geometry.len());
    let mut saturated_voxels = 0;
    let mut warnings = Vec::new();
    for s in &order {
        let rescaled = apply_rescale(&s.stored_values(), s.rescale_slope, s.rescale_intercept)?;
        saturated_voxels += rescaled.saturated;
        voxels.extend(rescaled.values);
        warnings.extend(s.warnings.iter().cloned());
    }
    if saturated_voxels > 0 {
        warnings.push(format!("{saturated_voxels} voxels saturated at the 16-bit bounds"));
    }
    warnings.dedup();

    let mut volume = ScanVolume::new(scan_id, geometry, voxels)?;
    volume.window = order[0].window;
    Ok(AssembledScan {
        volume,
        ordering_key: key,
        saturated_voxels,
        warnings,
    })
}

/// Parses every DICOM file in `dir` (files without the DICM magic are
/// skipped) and assembles them. `key = None` applies the preferred-key rule.
pub fn load_dicom_dir(dir: impl AsRef<Path>, key: Option<OrderingKey>, scan_id: &str) -> Result<AssembledScan> {
    let dir = dir.as_ref();
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        if entry.file_type().map_err(|e| Error::io(entry.path(), e))?.is_file() {
            paths.push(entry.path());
        }
    }
    paths.sort();
    let parsed: Vec<Option<SliceRecord>> = paths
        .par_iter()
        .map(|path| {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            match parse_dicom_file(&bytes) {
                Ok(mut s) => {
                    s.source = path.file_name().map(|n| n.to_string_lossy().into_owned());
                    Ok(Some(s))
                }
                Err(Error::NotDicom(_)) => {
                    log::warn!("skipping non-DICOM file {}", path.display());
                    Ok(None)
                }
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let slices: Vec<SliceRecord> = parsed.into_iter().flatten().collect();
    if slices.is_empty() {
        return Err(Error::NotDicom(format!("no DICOM files in {}", dir.display())));
    }
    let assembly = match key {
        Some(k) => ScanAssembly::new(slices, k),
        None => ScanAssembly::with_preferred_key(slices)?,
    };
    assemble_scan(&assembly, scan_id)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn slice(instance: Option<i64>, location: Option<f64>, fill: u16) -> SliceRecord {
        SliceRecord {
            rows: 2,
            columns: 2,
            bits_allocated: 16,
            pixel_representation: 0,
            rescale_slope: 1.0,
            rescale_intercept: -1024.0,
            window: None,
            instance_number: instance,
            slice_location: location,
            pixels: vec![fill; 4],
            source: None,
            warnings: vec![],
        }
    }

    fn preamble_only() -> Vec<u8> {
        let mut b = vec![0u8; PREAMBLE_LEN];
        b.extend_from_slice(MAGIC);
        b
    }

    #[test]
    fn short_or_unmarked_input_is_not_dicom() {
        assert!(matches!(parse_dicom_file(b"hello"), Err(Error::NotDicom(_))));
        assert!(matches!(parse_dicom_file(&[0u8; 200]), Err(Error::NotDicom(_))));
    }

    #[test]
    fn vacuous_stream_is_malformed() {
        let bytes = preamble_only();
        assert_eq!(bytes.len(), 132);
        assert!(matches!(parse_dicom_file(&bytes), Err(Error::Malformed { .. })));
    }

    #[test]
    fn assemble_sorts_by_instance_number() {
        let slices = vec![slice(Some(3), None, 3), slice(Some(1), None, 1), slice(Some(2), None, 2)];
        let out = assemble_scan(&ScanAssembly::new(slices, OrderingKey::InstanceNumber), "s").unwrap();
        assert_eq!(out.volume.depth(), 3);
        for z in 0..3 {
            assert_eq!(out.volume.slice(z)[0], z as i16 + 1 - 1024);
        }
    }

    #[test]
    fn assemble_single_slice() {
        let out = assemble_scan(&ScanAssembly::new(vec![slice(Some(9), None, 0)], OrderingKey::InstanceNumber), "s")
            .unwrap();
        assert_eq!(out.volume.depth(), 1);
    }

    #[test]
    fn assemble_by_location_ignores_file_order() {
        let mut slices = vec![
            slice(None, Some(5.0), 50),
            slice(None, Some(0.0), 0),
            slice(None, Some(2.5), 25),
        ];
        for (i, s) in slices.iter_mut().enumerate() {
            s.source = Some(format!("f{i}.dcm"));
        }
        let assembly = ScanAssembly::with_preferred_key(slices).unwrap();
        assert_eq!(assembly.ordering_key, OrderingKey::SliceLocation);
        let out = assemble_scan(&assembly, "s").unwrap();
        let firsts: Vec<i16> = (0..3).map(|z| out.volume.slice(z)[0]).collect();
        assert_eq!(firsts, vec![-1024, -999, -974]);
    }

    #[test]
    fn duplicate_keys_are_ambiguous() {
        let slices = vec![slice(Some(1), None, 0), slice(Some(1), None, 0)];
        assert!(matches!(
            assemble_scan(&ScanAssembly::new(slices, OrderingKey::InstanceNumber), "s"),
            Err(Error::AmbiguousOrder(_))
        ));
    }

    #[test]
    fn inconsistent_geometry_is_rejected() {
        let mut b = slice(Some(2), None, 0);
        b.rows = 1;
        b.pixels = vec![0; 2];
        let slices = vec![slice(Some(1), None, 0), b];
        assert!(matches!(
            assemble_scan(&ScanAssembly::new(slices, OrderingKey::InstanceNumber), "s"),
            Err(Error::GeometryMismatch(_))
        ));
    }

    #[test]
    fn signed_pixels_follow_representation() {
        let mut s = slice(Some(1), None, 0xFFFF);
        assert_eq!(s.stored_values()[0], 65535);
        s.pixel_representation = 1;
        assert_eq!(s.stored_values()[0], -1);
    }
}
