//! File formats: `HSIC` cubes, CSV/PGM ground truth, CSV labels and PPM maps.
//!
//! `HSIC` layout (all integers little-endian):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "HSIC"
//! 4       4     version (u32) = 1
//! 8       4     height H (u32)
//! 12      4     width W (u32)
//! 16      4     bands d (u32)
//! 20      4*n*d IEEE-754 binary32 values, pixel 0 bands 0..d, pixel 1, ...
//! ```
//!
//! Values are held as `f64` in memory and written as `f32`, so the pair
//! `load_cube(save_cube(x))` reproduces `x` exactly whenever every value of
//! `x` is representable in `f32` (as with anything loaded from disk).

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;

use crate::cube::{GroundTruth, HsiCube};
use crate::pipeline::ClusteringResult;
use crate::ssdm::CandidateMode;
use crate::error::{Error, Result};

pub const CUBE_MAGIC: &[u8; 4] = b"HSIC";
pub const CUBE_VERSION: u32 = 1;
pub const CUBE_HEADER_LEN: usize = 20;

/// Map colors for labels `1..=16`; label `l` uses entry `(l - 1) % 16`.
pub const PALETTE: [[u8; 3]; 16] = [
    [230, 25, 75],
    [60, 180, 75],
    [255, 225, 25],
    [0, 130, 200],
    [245, 130, 48],
    [145, 30, 180],
    [70, 240, 240],
    [240, 50, 230],
    [210, 245, 60],
    [250, 190, 212],
    [0, 128, 128],
    [220, 190, 255],
    [170, 110, 40],
    [255, 250, 200],
    [128, 0, 0],
    [170, 255, 195],
];

fn format_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Format {
        offset: offset as u64,
        message: message.into(),
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn u32_at(bytes: &[u8], offset: usize) -> u32 {
    u32::from_le_bytes(bytes[offset..offset + 4].try_into().expect("4 bytes"))
}

pub fn encode_cube(cube: &HsiCube) -> Result<Vec<u8>> {
    let dims = [cube.height(), cube.width(), cube.bands()];
    let mut out = Vec::with_capacity(CUBE_HEADER_LEN + 4 * cube.as_slice().len());
    out.extend_from_slice(CUBE_MAGIC);
    out.extend_from_slice(&CUBE_VERSION.to_le_bytes());
    for dim in dims {
        let dim = u32::try_from(dim)
            .map_err(|_| Error::InvalidData(format!("dimension {dim} exceeds u32")))?;
        out.extend_from_slice(&dim.to_le_bytes());
    }
    for &v in cube.as_slice() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    Ok(out)
}

pub fn decode_cube(bytes: &[u8]) -> Result<HsiCube> {
    if bytes.len() < CUBE_HEADER_LEN {
        return Err(format_err(bytes.len(), "truncated header"));
    }
    if &bytes[0..4] != CUBE_MAGIC {
        return Err(format_err(0, format!("bad magic {:?}", &bytes[0..4])));
    }
    let version = u32_at(bytes, 4);
    if version != CUBE_VERSION {
        return Err(format_err(4, format!("unsupported version {version}")));
    }
    let height = u32_at(bytes, 8) as usize;
    let width = u32_at(bytes, 12) as usize;
    let bands = u32_at(bytes, 16) as usize;
    for (offset, dim) in [(8, height), (12, width), (16, bands)] {
        if dim == 0 {
            return Err(format_err(offset, "zero dimension"));
        }
    }
    let count = height
        .checked_mul(width)
        .and_then(|n| n.checked_mul(bands))
        .ok_or_else(|| format_err(8, "dimensions overflow"))?;
    let payload = &bytes[CUBE_HEADER_LEN..];
    let expected = count
        .checked_mul(4)
        .ok_or_else(|| format_err(8, "dimensions overflow"))?;
    if payload.len() < expected {
        return Err(format_err(
            bytes.len(),
            format!("truncated payload: {} of {expected} bytes", payload.len()),
        ));
    }
    if payload.len() > expected {
        return Err(format_err(
            CUBE_HEADER_LEN + expected,
            format!("{} trailing bytes", payload.len() - expected),
        ));
    }
    let mut values = Vec::with_capacity(count);
    for (idx, chunk) in payload.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().expect("4 bytes"));
        if !v.is_finite() {
            return Err(format_err(CUBE_HEADER_LEN + 4 * idx, "non-finite value"));
        }
        values.push(v as f64);
    }
    let values = Array2::from_shape_vec((height * width, bands), values).expect("sized above");
    HsiCube::new(height, width, values)
}

pub fn save_cube(cube: &HsiCube, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &encode_cube(cube)?)
}

pub fn load_cube(path: impl AsRef<Path>) -> Result<HsiCube> {
    decode_cube(&read_file(path.as_ref())?)
}

/// Sample encodings accepted by [`load_raw_bip`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RawSample {
    U8,
    U16Le,
    I16Le,
    F32Le,
    F64Le,
}

impl RawSample {
    pub fn size(self) -> usize {
        match self {
            RawSample::U8 => 1,
            RawSample::U16Le | RawSample::I16Le => 2,
            RawSample::F32Le => 4,
            RawSample::F64Le => 8,
        }
    }

    fn decode(self, b: &[u8]) -> f64 {
        match self {
            RawSample::U8 => b[0] as f64,
            RawSample::U16Le => u16::from_le_bytes([b[0], b[1]]) as f64,
            RawSample::I16Le => i16::from_le_bytes([b[0], b[1]]) as f64,
            RawSample::F32Le => f32::from_le_bytes(b.try_into().expect("4 bytes")) as f64,
            RawSample::F64Le => f64::from_le_bytes(b.try_into().expect("8 bytes")),
        }
    }
}

/// Reads a headerless band-interleaved-by-pixel cube.
pub fn decode_raw_bip(
    bytes: &[u8],
    height: usize,
    width: usize,
    bands: usize,
    sample: RawSample,
) -> Result<HsiCube> {
    let count = height * width * bands;
    let expected = count * sample.size();
    if bytes.len() != expected {
        return Err(format_err(
            bytes.len().min(expected),
            format!("raw cube holds {} bytes, expected {expected}", bytes.len()),
        ));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(sample.size())
        .map(|c| sample.decode(c))
        .collect();
    if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
        return Err(format_err(idx * sample.size(), "non-finite value"));
    }
    let values = Array2::from_shape_vec((height * width, bands), values).expect("sized above");
    HsiCube::new(height, width, values)
}

pub fn load_raw_bip(
    path: impl AsRef<Path>,
    height: usize,
    width: usize,
    bands: usize,
    sample: RawSample,
) -> Result<HsiCube> {
    decode_raw_bip(&read_file(path.as_ref())?, height, width, bands, sample)
}

/// Parses CSV or binary PGM (`P5`) ground truth. When `expected` is given
/// as `(H, W)` the label grid must match it.
pub fn decode_ground_truth(bytes: &[u8], expected: Option<(usize, usize)>) -> Result<GroundTruth> {
    let (height, width, labels) = if bytes.starts_with(b"P5") {
        decode_pgm(bytes)?
    } else {
        decode_label_csv(bytes)?
    };
    if let Some((eh, ew)) = expected {
        if (eh, ew) != (height, width) {
            return Err(Error::Shape {
                expected_h: eh,
                expected_w: ew,
                found_h: height,
                found_w: width,
            });
        }
    }
    GroundTruth::new(height, width, labels)
}

pub fn load_ground_truth(
    path: impl AsRef<Path>,
    expected: Option<(usize, usize)>,
) -> Result<GroundTruth> {
    decode_ground_truth(&read_file(path.as_ref())?, expected)
}

fn decode_label_csv(bytes: &[u8]) -> Result<(usize, usize, Vec<u32>)> {
    let text =
        std::str::from_utf8(bytes).map_err(|e| format_err(e.valid_up_to(), "not UTF-8 text"))?;
    let mut labels = Vec::new();
    let mut width = None;
    let mut height = 0;
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let start = offset;
        offset += line.len();
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let row: Vec<u32> = trimmed
            .split(',')
            .map(|f| f.trim().parse::<u32>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| format_err(start, format!("row {}: {e}", height + 1)))?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(format_err(
                    start,
                    format!("row {} has {} columns, expected {w}", height + 1, row.len()),
                ))
            }
            _ => {}
        }
        labels.extend(row);
        height += 1;
    }
    let width = width.ok_or_else(|| format_err(0, "empty ground truth"))?;
    Ok((height, width, labels))
}

/// Splits a netpbm header into its first `count` tokens and returns the
/// offset just past the single whitespace byte that ends the header.
fn pnm_header(bytes: &[u8], count: usize) -> Result<(Vec<usize>, usize)> {
    let mut pos = 2;
    let mut fields = Vec::with_capacity(count);
    while fields.len() < count {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(format_err(pos, "expected an unsigned integer in header"));
        }
        let value = std::str::from_utf8(&bytes[start..pos])
            .expect("ascii digits")
            .parse()
            .map_err(|_| format_err(start, "header value out of range"))?;
        fields.push(value);
    }
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(format_err(pos, "missing whitespace after header"));
    }
    Ok((fields, pos + 1))
}

fn decode_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<u32>)> {
    let (fields, data_start) = pnm_header(bytes, 3)?;
    let (width, height, maxval) = (fields[0], fields[1], fields[2]);
    if width == 0 || height == 0 {
        return Err(format_err(2, "zero dimension"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(format_err(2, format!("maxval {maxval} outside 1..=65535")));
    }
    let sample = if maxval < 256 { 1 } else { 2 };
    let n = width * height;
    let data = &bytes[data_start..];
    if data.len() < n * sample {
        return Err(format_err(bytes.len(), "truncated PGM raster"));
    }
    // netpbm stores 16-bit samples most significant byte first
    let labels = (0..n)
        .map(|i| match sample {
            1 => data[i] as u32,
            _ => u16::from_be_bytes([data[2 * i], data[2 * i + 1]]) as u32,
        })
        .collect();
    Ok((height, width, labels))
}

pub fn encode_pgm(gt: &GroundTruth) -> Vec<u8> {
    let maxval = gt.classes().max(1);
    let mut out = format!("P5\n{} {}\n{}\n", gt.width(), gt.height(), maxval).into_bytes();
    for &l in gt.labels() {
        if maxval < 256 {
            out.push(l as u8);
        } else {
            out.extend_from_slice(&(l as u16).to_be_bytes());
        }
    }
    out
}

pub fn save_ground_truth(gt: &GroundTruth, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &encode_pgm(gt))
}

/// `pixel_index,label` per line, 0-based pixel index.
pub fn encode_labels(labels: &[u32]) -> Vec<u8> {
    let mut out = Vec::with_capacity(labels.len() * 8);
    for (i, l) in labels.iter().enumerate() {
        writeln!(out, "{i},{l}").expect("write to Vec");
    }
    out
}

pub fn decode_labels(bytes: &[u8]) -> Result<Vec<u32>> {
    let text =
        std::str::from_utf8(bytes).map_err(|e| format_err(e.valid_up_to(), "not UTF-8 text"))?;
    let mut labels = Vec::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let start = offset;
        offset += line.len();
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let (idx, label) = trimmed
            .split_once(',')
            .ok_or_else(|| format_err(start, "expected `pixel_index,label`"))?;
        let idx: usize = idx
            .trim()
            .parse()
            .map_err(|_| format_err(start, "bad pixel index"))?;
        let label: u32 = label
            .trim()
            .parse()
            .map_err(|_| format_err(start, "bad label"))?;
        if idx != labels.len() {
            return Err(format_err(
                start,
                format!("pixel index {idx} out of order, expected {}", labels.len()),
            ));
        }
        labels.push(label);
    }
    Ok(labels)
}

pub fn save_labels(labels: &[u32], path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &encode_labels(labels))
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<Vec<u32>> {
    decode_labels(&read_file(path.as_ref())?)
}

/// Binary PPM of a label map. Pixels outside `mask` (when given) and label 0
/// are black.
pub fn encode_map(labels: &[u32], height: usize, width: usize, mask: Option<&[bool]>) -> Vec<u8> {
    assert_eq!(labels.len(), height * width, "label count must equal H*W");
    if let Some(mask) = mask {
        assert_eq!(mask.len(), labels.len(), "mask length must equal H*W");
    }
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    for (i, &l) in labels.iter().enumerate() {
        let visible = mask.is_none_or(|m| m[i]);
        let rgb = if visible && l > 0 {
            PALETTE[(l as usize - 1) % PALETTE.len()]
        } else {
            [0, 0, 0]
        };
        out.extend_from_slice(&rgb);
    }
    out
}

pub fn render_map(
    labels: &[u32],
    height: usize,
    width: usize,
    mask: Option<&[bool]>,
    path: impl AsRef<Path>,
) -> Result<()> {
    write_file(path.as_ref(), &encode_map(labels, height, width, mask))
}

/// Reads back a binary PPM into `(height, width, rgb)`.
pub fn decode_ppm(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    if !bytes.starts_with(b"P6") {
        return Err(format_err(0, "not a binary PPM"));
    }
    let (fields, start) = pnm_header(bytes, 3)?;
    let (width, height, maxval) = (fields[0], fields[1], fields[2]);
    if maxval != 255 {
        return Err(format_err(2, "only 8-bit PPM is supported"));
    }
    let data = &bytes[start..];
    if data.len() != width * height * 3 {
        return Err(format_err(bytes.len(), "raster size mismatch"));
    }
    Ok((height, width, data.to_vec()))
}

/// Run metadata as `key,value` lines: parameters, then per-stage seconds
/// (`time.<stage>`), then `oa`, `aa` and `kappa` when ground truth was given.
/// A negative kappa is additionally flagged by `kappa_negative,true`.
pub fn encode_metadata(result: &ClusteringResult) -> Vec<u8> {
    let p = &result.params;
    let scales: Vec<String> = p.scales.iter().map(usize::to_string).collect();
    let window = match p.candidates {
        CandidateMode::Exact => 0,
        CandidateMode::Window(side) => side,
    };
    let mut out = Vec::new();
    let mut line = |key: &str, value: String| {
        writeln!(out, "{key},{value}").expect("write to Vec");
    };
    line("clusters", p.clusters.to_string());
    line("anchors", p.anchors.to_string());
    line("neighbors", p.neighbors.to_string());
    line("alpha", p.alpha.to_string());
    line("gamma0", p.gamma0.to_string());
    line("scales", scales.join(" "));
    line("seed", p.seed.to_string());
    line("restarts", p.restarts.to_string());
    line("window", window.to_string());
    line("normalize_rows", p.normalize_rows.to_string());
    line("pixels", result.labels.len().to_string());
    for (stage, t) in &result.timings.stages {
        line(&format!("time.{stage}"), format!("{:.6}", t.as_secs_f64()));
    }
    line("time.total", format!("{:.6}", result.timings.total().as_secs_f64()));
    if let Some(eval) = &result.evaluation {
        line("oa", eval.overall_accuracy.to_string());
        line("aa", eval.average_accuracy.to_string());
        line("kappa", eval.kappa.to_string());
        if eval.kappa < 0.0 {
            line("kappa_negative", "true".into());
        }
    }
    out
}

pub fn save_metadata(result: &ClusteringResult, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &encode_metadata(result))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cube() -> HsiCube {
        let values = Array2::from_shape_vec((4, 1), vec![0.0, 0.25, 0.5, 1.0]).unwrap();
        HsiCube::new(2, 2, values).unwrap()
    }

    #[test]
    fn cube_byte_layout() {
        let bytes = encode_cube(&small_cube()).unwrap();
        assert_eq!(bytes.len(), 36);
        let mut expected = b"HSIC".to_vec();
        for v in [1u32, 2, 2, 1] {
            expected.extend_from_slice(&v.to_le_bytes());
        }
        for v in [0.0f32, 0.25, 0.5, 1.0] {
            expected.extend_from_slice(&v.to_le_bytes());
        }
        assert_eq!(bytes, expected);
        assert_eq!(&bytes[32..36], &[0x00, 0x00, 0x80, 0x3f]);
    }

    #[test]
    fn bad_magic() {
        let mut bytes = encode_cube(&small_cube()).unwrap();
        bytes[..4].copy_from_slice(b"XXXX");
        assert!(matches!(
            decode_cube(&bytes),
            Err(Error::Format { offset: 0, .. })
        ));
    }

    #[test]
    fn truncated_and_oversized_payload() {
        let bytes = encode_cube(&small_cube()).unwrap();
        match decode_cube(&bytes[..30]) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 30),
            other => panic!("unexpected {other:?}"),
        }
        let mut long = bytes.clone();
        long.push(0);
        match decode_cube(&long) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 36),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            decode_cube(&bytes[..10]),
            Err(Error::Format { offset: 10, .. })
        ));
    }

    #[test]
    fn csv_ground_truth() {
        let gt = decode_ground_truth(b"0,1\n2,0\n", None).unwrap();
        assert_eq!(gt.labels(), &[0, 1, 2, 0]);
        assert_eq!((gt.height(), gt.width()), (2, 2));
    }

    #[test]
    fn pgm_ground_truth() {
        let mut bytes = b"P5\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 1, 2, 0]);
        let gt = decode_ground_truth(&bytes, Some((2, 2))).unwrap();
        assert_eq!(gt.labels(), &[0, 1, 2, 0]);
    }

    #[test]
    fn pgm_with_comment_and_wide_samples() {
        let mut bytes = b"P5 # labels\n3 1\n# max\n300\n".to_vec();
        for v in [1u16, 300, 2] {
            bytes.extend_from_slice(&v.to_be_bytes());
        }
        let (h, w, labels) = decode_pgm(&bytes).unwrap();
        assert_eq!((h, w), (1, 3));
        assert_eq!(labels, vec![1, 300, 2]);
    }

    #[test]
    fn ground_truth_shape_mismatch() {
        let err = decode_ground_truth(b"1,1,1\n1,1,1\n1,1,1\n", Some((2, 2))).unwrap_err();
        assert!(matches!(
            err,
            Error::Shape {
                expected_h: 2,
                found_h: 3,
                ..
            }
        ));
    }

    #[test]
    fn ragged_csv() {
        assert!(matches!(
            decode_ground_truth(b"1,2\n1\n", None),
            Err(Error::Format { offset: 4, .. })
        ));
    }

    #[test]
    fn pgm_round_trip() {
        let gt = GroundTruth::new(2, 3, vec![0, 1, 2, 3, 0, 1]).unwrap();
        let back = decode_ground_truth(&encode_pgm(&gt), Some((2, 3))).unwrap();
        assert_eq!(back, gt);
    }

    #[test]
    fn labels_csv() {
        let bytes = encode_labels(&[3, 1, 2]);
        assert_eq!(bytes, b"0,3\n1,1\n2,2\n");
        assert_eq!(decode_labels(&bytes).unwrap(), vec![3, 1, 2]);
        assert!(decode_labels(b"1,3\n").is_err());
    }

    #[test]
    fn background_renders_black() {
        let ppm = encode_map(&[1, 2, 3, 4], 2, 2, Some(&[false; 4]));
        let (_, _, rgb) = decode_ppm(&ppm).unwrap();
        assert!(rgb.iter().all(|&b| b == 0));
    }

    #[test]
    fn two_labels_two_colors() {
        let ppm = encode_map(&[1, 2], 1, 2, None);
        assert!(ppm.starts_with(b"P6\n2 1\n255\n"));
        let (h, w, rgb) = decode_ppm(&ppm).unwrap();
        assert_eq!((h, w), (1, 2));
        assert_eq!(&rgb[0..3], &PALETTE[0]);
        assert_eq!(&rgb[3..6], &PALETTE[1]);
        assert_ne!(&rgb[0..3], &rgb[3..6]);
    }

    #[test]
    fn palette_cycles() {
        let ppm = encode_map(&[1, 17], 1, 2, None);
        let (_, _, rgb) = decode_ppm(&ppm).unwrap();
        assert_eq!(&rgb[0..3], &rgb[3..6]);
    }

    #[test]
    fn raw_bip_u16() {
        let mut bytes = Vec::new();
        for v in [1u16, 2, 3, 4] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let cube = decode_raw_bip(&bytes, 1, 2, 2, RawSample::U16Le).unwrap();
        assert_eq!(cube.as_slice(), &[1.0, 2.0, 3.0, 4.0]);
        assert!(decode_raw_bip(&bytes[..7], 1, 2, 2, RawSample::U16Le).is_err());
    }
}
