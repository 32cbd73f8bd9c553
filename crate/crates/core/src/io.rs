//! Readers and writers for every file the workbench produces or consumes.
//!
//! Text formats are line oriented; CSV files carry a header row. Floats are
//! written in Rust's shortest round-trip form, so reading a written file
//! gives back the same bits. Parse failures report the line (text) or byte
//! offset (PGM) where they happened.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::em::SystemMatrix;
use crate::net::{Edge, Graph, LinkCounts, RouteMatrix};
use crate::ocr::{BenchRow, GlyphImage, LabeledCorpus, PIXELS, SIDE};
use crate::pet::{Ellipse, Sinogram};
use crate::renewal::{BiasStats, GridCdf, ScalingReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Line(usize),
    Offset(usize),
    /// The file parsed but its content as a whole is invalid.
    Whole,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Line(n) => write!(f, "line {n}"),
            Location::Offset(n) => write!(f, "byte offset {n}"),
            Location::Whole => write!(f, "content"),
        }
    }
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("MalformedFile: {}: {location}: {reason}", .path.display())]
    Malformed {
        path: PathBuf,
        location: Location,
        reason: String,
    },
}

impl IoError {
    pub fn location(&self) -> Option<Location> {
        match self {
            IoError::Malformed { location, .. } => Some(*location),
            IoError::Io { .. } => None,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn malformed(path: &Path, location: Location, reason: impl fmt::Display) -> IoError {
    IoError::Malformed {
        path: path.to_path_buf(),
        location,
        reason: reason.to_string(),
    }
}

/// Shortest round-trip text for `v`; exponent form outside `[1e-5, 1e15)`.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-5..1e15).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    fs::write(path, text).map_err(io_err(path))
}

fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(io_err(path))
}

/// Non-empty lines with their 1-based numbers.
fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_field<T: std::str::FromStr>(
    path: &Path,
    line: usize,
    field: &str,
    what: &str,
) -> Result<T, IoError> {
    field
        .trim()
        .parse()
        .map_err(|_| malformed(path, Location::Line(line), format!("bad {what} {field:?}")))
}

fn fields<'a>(
    path: &Path,
    line: usize,
    text: &'a str,
    expected: usize,
) -> Result<Vec<&'a str>, IoError> {
    let parts: Vec<&str> = text.split_whitespace().collect();
    if parts.len() != expected {
        return Err(malformed(
            path,
            Location::Line(line),
            format!("expected {expected} fields, found {}", parts.len()),
        ));
    }
    Ok(parts)
}

// ---------------------------------------------------------------- CSV

struct Csv {
    header: Vec<String>,
    /// (line number, fields)
    rows: Vec<(usize, Vec<String>)>,
}

fn read_csv(path: &Path, expected_header: Option<&[&str]>) -> Result<Csv, IoError> {
    let text = read_text(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    if let Some(expected) = expected_header {
        if header != expected {
            return Err(malformed(
                path,
                Location::Line(header_line(&text)),
                format!(
                    "header {:?}, expected {:?}",
                    header.join(","),
                    expected.join(",")
                ),
            ));
        }
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        rows.push((line, record.iter().map(str::to_string).collect()));
    }
    Ok(Csv { header, rows })
}

fn header_line(text: &str) -> usize {
    text.lines()
        .position(|l| !l.trim_start().starts_with('#'))
        .map_or(1, |i| i + 1)
}

fn csv_error(path: &Path, e: csv::Error) -> IoError {
    let location = e
        .position()
        .map_or(Location::Whole, |p| Location::Line(p.line() as usize));
    match e.into_kind() {
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => malformed(
            path,
            location,
            format!("expected {expected_len} fields, found {len}"),
        ),
        kind => malformed(path, location, format!("{kind:?}")),
    }
}

fn write_csv(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<(), IoError> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write_text(path, &out)
}

// ---------------------------------------------------------------- PGM

/// Grayscale raster as stored in a binary PGM.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    /// Row-major samples.
    pub data: Vec<u16>,
}

/// Writes a 16-bit big-endian `P5` image with maxval 65535.
pub fn write_pgm(path: &Path, width: usize, height: usize, data: &[u16]) -> Result<(), IoError> {
    assert_eq!(data.len(), width * height, "pgm size");
    let mut bytes = format!("P5\n{width} {height}\n65535\n").into_bytes();
    bytes.reserve(2 * data.len());
    for v in data {
        bytes.extend_from_slice(&v.to_be_bytes());
    }
    fs::write(path, bytes).map_err(io_err(path))
}

/// Reads a binary `P5` image, 8-bit (maxval < 256) or 16-bit big-endian.
pub fn read_pgm(path: &Path) -> Result<Pgm, IoError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    parse_pgm(path, &bytes)
}

fn parse_pgm(path: &Path, bytes: &[u8]) -> Result<Pgm, IoError> {
    let mut pos = 0;
    if bytes.get(..2) != Some(b"P5") {
        return Err(malformed(path, Location::Offset(0), "missing P5 magic"));
    }
    pos += 2;
    let mut header = [0usize; 3];
    for (k, slot) in header.iter_mut().enumerate() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|b| *b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            let what = ["width", "height", "maxval"][k];
            return Err(malformed(
                path,
                Location::Offset(pos),
                format!("expected {what}"),
            ));
        }
        let digits = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
        *slot = digits
            .parse()
            .map_err(|_| malformed(path, Location::Offset(start), "number too large"))?;
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => {
            return Err(malformed(
                path,
                Location::Offset(pos),
                "expected whitespace after maxval",
            ))
        }
    }
    let [width, height, maxval] = header;
    if width == 0 || height == 0 {
        return Err(malformed(path, Location::Offset(pos), "empty image"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(malformed(
            path,
            Location::Offset(pos),
            format!("maxval {maxval} out of range"),
        ));
    }
    let sample = if maxval < 256 { 1 } else { 2 };
    let n = width * height;
    let needed = n * sample;
    let available = bytes.len() - pos;
    if available < needed {
        return Err(malformed(
            path,
            Location::Offset(bytes.len()),
            format!("truncated raster: {needed} bytes expected, {available} present"),
        ));
    }
    let raster = &bytes[pos..pos + needed];
    let data: Vec<u16> = if sample == 1 {
        raster.iter().map(|&b| b as u16).collect()
    } else {
        raster
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    };
    if let Some(i) = data.iter().position(|&v| v as usize > maxval) {
        return Err(malformed(
            path,
            Location::Offset(pos + i * sample),
            format!("sample exceeds maxval {maxval}"),
        ));
    }
    Ok(Pgm {
        width,
        height,
        maxval: maxval as u16,
        data,
    })
}

/// Sidecar path holding an image's scale: `recon.pgm` → `recon.scale`.
pub fn scale_path(pgm: &Path) -> PathBuf {
    pgm.with_extension("scale")
}

/// Writes nonnegative values as a max-scaled 16-bit PGM plus a sidecar with
/// `scale=s`, where value ≈ sample · s.
pub fn write_scaled_image(
    path: &Path,
    width: usize,
    height: usize,
    values: &[f64],
) -> Result<f64, IoError> {
    let max = values.iter().copied().fold(0.0, f64::max);
    let scale = if max > 0.0 { max / 65535.0 } else { 1.0 };
    let data: Vec<u16> = values
        .iter()
        .map(|v| (v.max(0.0) / scale).round().min(65535.0) as u16)
        .collect();
    write_pgm(path, width, height, &data)?;
    let side = scale_path(path);
    write_text(&side, &format!("scale={}\n", fmt_f64(scale)))?;
    Ok(scale)
}

/// Inverse of [`write_scaled_image`]; returns `(width, height, values)`.
pub fn read_scaled_image(path: &Path) -> Result<(usize, usize, Vec<f64>), IoError> {
    let pgm = read_pgm(path)?;
    let side = scale_path(path);
    let text = read_text(&side)?;
    let (line, body) = numbered_lines(&text)
        .next()
        .ok_or_else(|| malformed(&side, Location::Line(1), "empty scale file"))?;
    let value = body
        .strip_prefix("scale=")
        .ok_or_else(|| malformed(&side, Location::Line(line), "expected scale=<value>"))?;
    let scale: f64 = parse_field(&side, line, value, "scale")?;
    Ok((
        pgm.width,
        pgm.height,
        pgm.data.iter().map(|&v| v as f64 * scale).collect(),
    ))
}

// ---------------------------------------------------------------- EM

/// Header `sources detectors nnz`, then one `b d a_bd` per line.
pub fn write_matrix(path: &Path, a: &SystemMatrix) -> Result<(), IoError> {
    let mut out = format!("{} {} {}\n", a.n_sources(), a.n_detectors(), a.nnz());
    let mut entries: Vec<(usize, usize, f64)> = a.entries().collect();
    entries.sort_by_key(|&(b, d, _)| (b, d));
    for (b, d, w) in entries {
        out.push_str(&format!("{b} {d} {}\n", fmt_f64(w)));
    }
    write_text(path, &out)
}

pub fn read_matrix(path: &Path) -> Result<SystemMatrix, IoError> {
    let text = read_text(path)?;
    let mut lines = numbered_lines(&text);
    let (hl, header) = lines
        .next()
        .ok_or_else(|| malformed(path, Location::Line(1), "empty matrix file"))?;
    let h = fields(path, hl, header, 3)?;
    let n_sources: usize = parse_field(path, hl, h[0], "source count")?;
    let n_detectors: usize = parse_field(path, hl, h[1], "detector count")?;
    let nnz: usize = parse_field(path, hl, h[2], "entry count")?;
    let mut triplets = Vec::with_capacity(nnz);
    let mut last = hl;
    for (line, body) in lines {
        let f = fields(path, line, body, 3)?;
        let b: usize = parse_field(path, line, f[0], "source index")?;
        let d: usize = parse_field(path, line, f[1], "detector index")?;
        let w: f64 = parse_field(path, line, f[2], "weight")?;
        if b >= n_sources || d >= n_detectors {
            return Err(malformed(
                path,
                Location::Line(line),
                "index outside the declared shape",
            ));
        }
        if !(w.is_finite() && w >= 0.0) {
            return Err(malformed(
                path,
                Location::Line(line),
                format!("invalid weight {w}"),
            ));
        }
        triplets.push((b, d, w));
        last = line;
    }
    if triplets.len() != nnz {
        return Err(malformed(
            path,
            Location::Line(last),
            format!("header declares {nnz} entries, found {}", triplets.len()),
        ));
    }
    SystemMatrix::from_triplets(n_sources, n_detectors, triplets)
        .map_err(|e| malformed(path, Location::Whole, e))
}

/// One value per line.
pub fn write_vector(path: &Path, values: &[f64]) -> Result<(), IoError> {
    let mut out = String::with_capacity(values.len() * 12);
    for v in values {
        out.push_str(&fmt_f64(*v));
        out.push('\n');
    }
    write_text(path, &out)
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>, IoError> {
    let text = read_text(path)?;
    numbered_lines(&text)
        .map(|(line, body)| {
            let v: f64 = parse_field(path, line, body, "value")?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(malformed(path, Location::Line(line), "non-finite value"))
            }
        })
        .collect()
}

/// `iteration,log_likelihood`; iteration 0 is the initial point.
pub fn write_trace(path: &Path, trace: &[f64]) -> Result<(), IoError> {
    write_csv(
        path,
        &["iteration", "log_likelihood"],
        trace
            .iter()
            .enumerate()
            .map(|(i, v)| vec![i.to_string(), fmt_f64(*v)]),
    )
}

// ---------------------------------------------------------------- PET

pub fn write_sinogram(path: &Path, s: &Sinogram) -> Result<(), IoError> {
    write_csv(
        path,
        &["angle", "bin", "count"],
        (0..s.n_angles).flat_map(|k| {
            (0..s.n_bins)
                .map(move |m| vec![k.to_string(), m.to_string(), s.count(k, m).to_string()])
        }),
    )
}

/// The shape is read from the largest indices; every `(angle, bin)` cell
/// must appear exactly once.
pub fn read_sinogram(path: &Path) -> Result<Sinogram, IoError> {
    let csv = read_csv(path, Some(&["angle", "bin", "count"]))?;
    let mut cells = Vec::with_capacity(csv.rows.len());
    for (line, row) in &csv.rows {
        let k: usize = parse_field(path, *line, &row[0], "angle index")?;
        let m: usize = parse_field(path, *line, &row[1], "bin index")?;
        let c: u64 = parse_field(path, *line, &row[2], "count")?;
        cells.push((*line, k, m, c));
    }
    let n_angles = cells.iter().map(|c| c.1 + 1).max().unwrap_or(0);
    let n_bins = cells.iter().map(|c| c.2 + 1).max().unwrap_or(0);
    if n_angles == 0 {
        return Err(malformed(path, Location::Whole, "no sinogram rows"));
    }
    let mut counts = vec![None; n_angles * n_bins];
    for &(line, k, m, c) in &cells {
        let slot = &mut counts[k * n_bins + m];
        if slot.is_some() {
            return Err(malformed(
                path,
                Location::Line(line),
                format!("cell ({k}, {m}) repeated"),
            ));
        }
        *slot = Some(c);
    }
    let counts: Vec<u64> = counts
        .iter()
        .enumerate()
        .map(|(i, c)| {
            c.ok_or_else(|| {
                malformed(
                    path,
                    Location::Whole,
                    format!("cell ({}, {}) missing", i / n_bins, i % n_bins),
                )
            })
        })
        .collect::<Result<_, _>>()?;
    Sinogram::new(n_angles, n_bins, counts).map_err(|e| malformed(path, Location::Whole, e))
}

const ELLIPSE_HEADER: [&str; 6] = ["cx", "cy", "a", "b", "theta", "intensity"];

pub fn write_ellipses(path: &Path, ellipses: &[Ellipse]) -> Result<(), IoError> {
    write_csv(
        path,
        &ELLIPSE_HEADER,
        ellipses.iter().map(|e| {
            [e.cx, e.cy, e.a, e.b, e.theta, e.intensity]
                .iter()
                .map(|v| fmt_f64(*v))
                .collect()
        }),
    )
}

pub fn read_ellipses(path: &Path) -> Result<Vec<Ellipse>, IoError> {
    let csv = read_csv(path, Some(&ELLIPSE_HEADER))?;
    csv.rows
        .iter()
        .map(|(line, row)| {
            let v = row
                .iter()
                .zip(ELLIPSE_HEADER)
                .map(|(f, name)| parse_field::<f64>(path, *line, f, name))
                .collect::<Result<Vec<f64>, _>>()?;
            if v.iter().any(|x| !x.is_finite()) || v[2] <= 0.0 || v[3] <= 0.0 {
                return Err(malformed(
                    path,
                    Location::Line(*line),
                    "ellipse needs finite values and positive axes",
                ));
            }
            Ok(Ellipse::new(v[0], v[1], v[2], v[3], v[4], v[5]))
        })
        .collect()
}

// ---------------------------------------------------------------- networks

/// First line `n_nodes n_edges`, then `u v weight` per edge.
pub fn write_graph(path: &Path, g: &Graph) -> Result<(), IoError> {
    let mut out = format!("{} {}\n", g.n_nodes(), g.n_links());
    for e in g.edges() {
        out.push_str(&format!("{} {} {}\n", e.u, e.v, fmt_f64(e.weight)));
    }
    write_text(path, &out)
}

/// Loads and validates a connected graph. Bad edges are reported by line.
pub fn read_graph(path: &Path) -> Result<Graph, IoError> {
    let text = read_text(path)?;
    let mut lines = numbered_lines(&text);
    let (hl, header) = lines
        .next()
        .ok_or_else(|| malformed(path, Location::Line(1), "empty graph file"))?;
    let h = fields(path, hl, header, 2)?;
    let n_nodes: usize = parse_field(path, hl, h[0], "node count")?;
    let n_edges: usize = parse_field(path, hl, h[1], "edge count")?;
    let mut edges = Vec::with_capacity(n_edges);
    let mut edge_lines = Vec::with_capacity(n_edges);
    for (line, body) in lines {
        let f = fields(path, line, body, 3)?;
        let u: usize = parse_field(path, line, f[0], "node")?;
        let v: usize = parse_field(path, line, f[1], "node")?;
        let weight: f64 = parse_field(path, line, f[2], "weight")?;
        if u == v {
            return Err(malformed(
                path,
                Location::Line(line),
                format!("self-loop on node {u}"),
            ));
        }
        edges.push(Edge { u, v, weight });
        edge_lines.push(line);
    }
    if edges.len() != n_edges {
        return Err(malformed(
            path,
            Location::Line(hl),
            format!("header declares {n_edges} edges, found {}", edges.len()),
        ));
    }
    use crate::net::NetError;
    let g = Graph::new(n_nodes, edges).map_err(|e| {
        let location = match &e {
            NetError::SelfLoop { edge, .. }
            | NetError::DuplicateEdge { edge, .. }
            | NetError::InvalidWeight { edge, .. } => Location::Line(edge_lines[*edge]),
            _ => Location::Whole,
        };
        // unknown endpoints are reported by the graph without an edge index
        let location = match (&e, location) {
            (NetError::UnknownNode { node, .. }, Location::Whole) => {
                edges_line_of(&text, *node).map_or(Location::Whole, Location::Line)
            }
            (_, l) => l,
        };
        malformed(path, location, e)
    })?;
    g.check_connected()
        .map_err(|e| malformed(path, Location::Whole, e))?;
    Ok(g)
}

/// First edge line naming `node`.
fn edges_line_of(text: &str, node: usize) -> Option<usize> {
    numbered_lines(text).skip(1).find_map(|(line, body)| {
        body.split_whitespace()
            .take(2)
            .any(|f| f.parse() == Ok(node))
            .then_some(line)
    })
}

pub fn write_od(path: &Path, od: &[(usize, usize)]) -> Result<(), IoError> {
    write_csv(
        path,
        &["origin", "destination"],
        od.iter().map(|(o, d)| vec![o.to_string(), d.to_string()]),
    )
}

pub fn read_od(path: &Path) -> Result<Vec<(usize, usize)>, IoError> {
    let csv = read_csv(path, Some(&["origin", "destination"]))?;
    csv.rows
        .iter()
        .map(|(line, row)| {
            Ok((
                parse_field(path, *line, &row[0], "origin")?,
                parse_field(path, *line, &row[1], "destination")?,
            ))
        })
        .collect()
}

/// Header `link_0,…`; one row per epoch.
pub fn write_counts(path: &Path, counts: &LinkCounts) -> Result<(), IoError> {
    let header: Vec<String> = (0..counts.n_links).map(|l| format!("link_{l}")).collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(
        path,
        &header,
        counts
            .epochs
            .iter()
            .map(|row| row.iter().map(u64::to_string).collect()),
    )
}

pub fn read_counts(path: &Path) -> Result<LinkCounts, IoError> {
    let csv = read_csv(path, None)?;
    let n_links = csv.header.len();
    for (l, name) in csv.header.iter().enumerate() {
        if *name != format!("link_{l}") {
            return Err(malformed(
                path,
                Location::Line(1),
                format!("column {l} is {name:?}, expected link_{l}"),
            ));
        }
    }
    let epochs = csv
        .rows
        .iter()
        .map(|(line, row)| {
            row.iter()
                .map(|f| parse_field::<u64>(path, *line, f, "count"))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    LinkCounts::new(n_links, epochs).map_err(|e| malformed(path, Location::Whole, e))
}

pub fn write_estimates(path: &Path, routes: &RouteMatrix, rates: &[f64]) -> Result<(), IoError> {
    write_csv(
        path,
        &["route_id", "origin", "destination", "rate"],
        routes
            .routes
            .iter()
            .zip(rates)
            .enumerate()
            .map(|(i, (r, v))| {
                vec![
                    i.to_string(),
                    r.origin.to_string(),
                    r.destination.to_string(),
                    fmt_f64(*v),
                ]
            }),
    )
}

/// Rates column of an estimates file, in route order.
pub fn read_estimates(path: &Path) -> Result<Vec<f64>, IoError> {
    let csv = read_csv(path, Some(&["route_id", "origin", "destination", "rate"]))?;
    csv.rows
        .iter()
        .map(|(line, row)| parse_field(path, *line, &row[3], "rate"))
        .collect()
}

// ---------------------------------------------------------------- OCR

fn pixel_header() -> Vec<String> {
    std::iter::once("label".to_string())
        .chain((0..PIXELS).map(|i| format!("p{i}")))
        .collect()
}

/// `label,p0,…,p255`, pixels in [0, 1].
pub fn write_corpus(path: &Path, corpus: &LabeledCorpus) -> Result<(), IoError> {
    let header = pixel_header();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(
        path,
        &header,
        corpus.iter().map(|(img, label)| {
            std::iter::once(label.to_string())
                .chain(img.pixels().iter().map(|v| fmt_f64(*v)))
                .collect()
        }),
    )
}

pub fn read_corpus(path: &Path) -> Result<LabeledCorpus, IoError> {
    let header = pixel_header();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let csv = read_csv(path, Some(&header))?;
    let mut items = Vec::with_capacity(csv.rows.len());
    for (line, row) in &csv.rows {
        let label: u8 = parse_field(path, *line, &row[0], "label")?;
        if label > 9 {
            return Err(malformed(
                path,
                Location::Line(*line),
                format!("label {label} is not a digit"),
            ));
        }
        let pixels = row[1..]
            .iter()
            .map(|f| {
                let v: f64 = parse_field(path, *line, f, "pixel")?;
                if (0.0..=1.0).contains(&v) {
                    Ok(v)
                } else {
                    Err(malformed(
                        path,
                        Location::Line(*line),
                        format!("pixel {v} outside [0, 1]"),
                    ))
                }
            })
            .collect::<Result<Vec<f64>, _>>()?;
        let img = GlyphImage::new(pixels).map_err(|e| malformed(path, Location::Line(*line), e))?;
        items.push((img, label));
    }
    LabeledCorpus::new(items).map_err(|e| malformed(path, Location::Whole, e))
}

/// Corpus from 16×16 PGM files listed in a `file,label` CSV. File names are
/// relative to the CSV's directory; samples are divided by maxval.
pub fn read_pgm_corpus(labels: &Path) -> Result<LabeledCorpus, IoError> {
    let csv = read_csv(labels, Some(&["file", "label"]))?;
    let dir = labels.parent().unwrap_or(Path::new("."));
    let mut items = Vec::with_capacity(csv.rows.len());
    for (line, row) in &csv.rows {
        let label: u8 = parse_field(labels, *line, &row[1], "label")?;
        if label > 9 {
            return Err(malformed(
                labels,
                Location::Line(*line),
                format!("label {label} is not a digit"),
            ));
        }
        let file = dir.join(&row[0]);
        let pgm = read_pgm(&file)?;
        if (pgm.width, pgm.height) != (SIDE, SIDE) {
            return Err(malformed(
                &file,
                Location::Whole,
                format!(
                    "image is {}x{}, expected {SIDE}x{SIDE}",
                    pgm.width, pgm.height
                ),
            ));
        }
        let max = pgm.maxval as f64;
        let img = GlyphImage::new(pgm.data.iter().map(|&v| v as f64 / max).collect())
            .map_err(|e| malformed(&file, Location::Whole, e))?;
        items.push((img, label));
    }
    LabeledCorpus::new(items).map_err(|e| malformed(labels, Location::Whole, e))
}

/// 8-bit `P5` glyph, samples `round(255·v)`.
pub fn write_pgm8(path: &Path, img: &GlyphImage) -> Result<(), IoError> {
    let mut bytes = format!("P5\n{SIDE} {SIDE}\n255\n").into_bytes();
    bytes.extend(img.pixels().iter().map(|v| (v * 255.0).round() as u8));
    fs::write(path, bytes).map_err(io_err(path))
}

pub fn write_bench(path: &Path, rows: &[BenchRow]) -> Result<(), IoError> {
    write_csv(
        path,
        &[
            "method",
            "n_train",
            "n_test",
            "errors",
            "error_rate",
            "wall_ms",
        ],
        rows.iter().map(|r| {
            vec![
                r.method.name().to_string(),
                r.n_train.to_string(),
                r.n_test.to_string(),
                r.errors.to_string(),
                fmt_f64(r.error_rate),
                r.wall_ms.to_string(),
            ]
        }),
    )
}

// ---------------------------------------------------------------- renewal

/// `x,F` rows after `# x_max=` and `# tail_rate=` comment lines.
pub fn write_grid_cdf(path: &Path, f: &GridCdf) -> Result<(), IoError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = std::io::BufWriter::new(file);
    let mut body = || -> std::io::Result<()> {
        writeln!(w, "# x_max={}", fmt_f64(f.x_max()))?;
        writeln!(w, "# tail_rate={}", fmt_f64(f.tail_rate()))?;
        writeln!(w, "x,F")?;
        for (i, v) in f.values().iter().enumerate() {
            writeln!(w, "{},{}", fmt_f64(f.x(i)), fmt_f64(*v))?;
        }
        w.flush()
    };
    body().map_err(io_err(path))
}

pub fn read_grid_cdf(path: &Path) -> Result<GridCdf, IoError> {
    let text = read_text(path)?;
    let mut x_max = None;
    let mut tail_rate = None;
    for (line, body) in numbered_lines(&text) {
        let Some(comment) = body.strip_prefix('#') else {
            break;
        };
        let comment = comment.trim();
        if let Some(v) = comment.strip_prefix("x_max=") {
            x_max = Some(parse_field::<f64>(path, line, v, "x_max")?);
        } else if let Some(v) = comment.strip_prefix("tail_rate=") {
            tail_rate = Some(parse_field::<f64>(path, line, v, "tail_rate")?);
        }
    }
    let x_max =
        x_max.ok_or_else(|| malformed(path, Location::Line(1), "missing # x_max= header"))?;
    let tail_rate = tail_rate
        .ok_or_else(|| malformed(path, Location::Line(1), "missing # tail_rate= header"))?;
    let csv = read_csv(path, Some(&["x", "F"]))?;
    let n = csv.rows.len().saturating_sub(1).max(1);
    let dx = x_max / n as f64;
    let mut values = Vec::with_capacity(csv.rows.len());
    for (i, (line, row)) in csv.rows.iter().enumerate() {
        let x: f64 = parse_field(path, *line, &row[0], "x")?;
        if (x - i as f64 * dx).abs() > 1e-9 * x_max.max(1.0) {
            return Err(malformed(
                path,
                Location::Line(*line),
                format!("x = {x} is off the uniform grid"),
            ));
        }
        values.push(parse_field::<f64>(path, *line, &row[1], "F")?);
    }
    let first_row = csv.rows.first().map_or(1, |r| r.0);
    GridCdf::new(x_max, values, tail_rate).map_err(|e| {
        let location = match &e {
            crate::renewal::RenewalError::InvalidCdf { index, .. } => {
                Location::Line(first_row + index)
            }
            _ => Location::Whole,
        };
        malformed(path, location, e)
    })
}

pub fn write_reports(path: &Path, reports: &[ScalingReport]) -> Result<(), IoError> {
    write_csv(
        path,
        &["q", "defect", "iterations", "converged"],
        reports.iter().map(|r| {
            vec![
                fmt_f64(r.q),
                fmt_f64(r.defect),
                r.iterations.to_string(),
                r.converged.to_string(),
            ]
        }),
    )
}

/// `mode,bin_start,bin_end,count`; the overflow bin ends at `inf`.
pub fn write_bias(path: &Path, stats: &[BiasStats]) -> Result<(), IoError> {
    let rows = stats.iter().flat_map(|s| {
        let name = s.mode.name();
        let n = s.histogram.len();
        s.histogram
            .iter()
            .enumerate()
            .map(move |(i, c)| {
                vec![
                    name.to_string(),
                    fmt_f64(i as f64 * s.bin_width),
                    fmt_f64((i + 1) as f64 * s.bin_width),
                    c.to_string(),
                ]
            })
            .chain(std::iter::once(vec![
                name.to_string(),
                fmt_f64(n as f64 * s.bin_width),
                "inf".to_string(),
                s.overflow.to_string(),
            ]))
    });
    write_csv(path, &["mode", "bin_start", "bin_end", "count"], rows)
}
