//! Binary field and trajectory-record files.
//!
//! Field record (little-endian): `u32 d`, `u32 N`, `f64 L`, then `N^d`
//! interleaved `(re, im)` `f64` pairs in row-major order.
//!
//! Trajectory record: the magic `SNLSREC1`, a `u32` byte length and a UTF-8
//! `key=value` header describing the run, then one frame per checkpoint:
//!
//! ```text
//! "FRAM" u64 step  f64 mass  f64 dissipation (NaN if absent)
//!        u64 rng_cursor  f64 B  (u64::MAX / NaN if absent)
//!        field record
//!        [ito block, milstein block]   when the header has a convolution
//!                                      ledger and step > 0
//! ```
//!
//! Frames are appended as checkpoints complete, so a run stopped between
//! checkpoints leaves a readable record of everything before the stop.

use std::fs::{File, OpenOptions};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use snls_core::flows::Potential;
use snls_core::record::{ConvolutionLedger, ConvolutionWeight, ModelKind, RunMeta};
use snls_core::stochastic::StreamKey;
use snls_core::{Complex64, ComplexField, SpatialGrid, TrajectoryRecord};

use crate::error::{LabError, LabResult};

pub const RECORD_MAGIC: &[u8; 8] = b"SNLSREC1";
const FRAME_TAG: &[u8; 4] = b"FRAM";

pub fn encode_field(u: &ComplexField, out: &mut Vec<u8>) {
    let g = u.grid();
    out.extend_from_slice(&(g.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(g.points() as u32).to_le_bytes());
    out.extend_from_slice(&g.extent().to_le_bytes());
    for v in u.values() {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
}

/// Byte cursor that reports truncation against the file it came from.
struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> LabResult<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(LabError::format(
                self.path,
                format!(
                    "truncated while reading {what}: need {n} bytes at offset {}, {} left",
                    self.pos,
                    self.bytes.len() - self.pos
                ),
            ));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> LabResult<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> LabResult<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> LabResult<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn at_end(&self) -> bool {
        self.pos == self.bytes.len()
    }

    fn field(&mut self, expect: Option<&SpatialGrid>) -> LabResult<ComplexField> {
        let d = self.u32("field header")? as usize;
        let n = self.u32("field header")? as usize;
        let l = self.f64("field header")?;
        let grid = SpatialGrid::new(d, l, n)
            .map_err(|e| LabError::format(self.path, format!("bad field header (d={d}, N={n}, L={l}): {e}")))?;
        if let Some(g) = expect {
            if *g != grid {
                return Err(LabError::format(self.path, "field header does not match the record grid"));
            }
        }
        let raw = self.take(grid.len() * 16, "field values")?;
        let values = raw
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..].try_into().unwrap()),
                )
            })
            .collect();
        ComplexField::from_values(grid, values).map_err(|e| LabError::format(self.path, e.to_string()))
    }
}

pub fn write_field(path: &Path, u: &ComplexField) -> LabResult<()> {
    let mut buf = Vec::with_capacity(16 + 16 * u.values().len());
    encode_field(u, &mut buf);
    std::fs::write(path, buf).map_err(|e| LabError::io(path, e))
}

pub fn read_field(path: &Path) -> LabResult<ComplexField> {
    let bytes = std::fs::read(path).map_err(|e| LabError::io(path, e))?;
    let mut r = Reader {
        bytes: &bytes,
        pos: 0,
        path,
    };
    let u = r.field(None)?;
    if !r.at_end() {
        return Err(LabError::format(path, format!("{} trailing bytes after field", bytes.len() - r.pos)));
    }
    Ok(u)
}

fn header_text(rec: &TrajectoryRecord) -> String {
    let m = &rec.meta;
    let mut lines = vec![
        format!("model={}", m.model.name()),
        format!("dim={}", m.grid.dim()),
        format!("points={}", m.grid.points()),
        format!("extent={}", m.grid.extent()),
        format!("dt={}", m.dt),
        format!("dealias={}", m.dealias),
        format!("gamma={}", m.gamma),
        format!("v0={}", m.potential.amplitude),
        format!("width={}", m.potential.width),
        format!("dissipation={}", rec.dissipation.is_some()),
    ];
    if let Some(k) = m.stream {
        lines.push(format!("seed={}", k.seed));
        lines.push(format!("path={}", k.path));
    }
    if let Some(c) = &rec.convolution {
        lines.push(format!("convolution_strength={}", c.damping_strength));
        lines.push(format!("convolution_weight={}", c.weight.name()));
    }
    lines.join("\n")
}

struct Header {
    meta: RunMeta,
    dissipation: bool,
    convolution: Option<(f64, ConvolutionWeight)>,
}

fn parse_header(text: &str, path: &Path) -> LabResult<Header> {
    let bad = |k: &str, v: &str| LabError::format(path, format!("header entry `{k}={v}` is invalid"));
    let mut kv = std::collections::BTreeMap::new();
    for line in text.lines() {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| LabError::format(path, format!("header line `{line}` has no `=`")))?;
        kv.insert(k, v);
    }
    let get = |k: &str| -> LabResult<&str> {
        kv.get(k)
            .copied()
            .ok_or_else(|| LabError::format(path, format!("header lacks `{k}`")))
    };
    fn num<T: std::str::FromStr>(v: &str, k: &str, bad: &dyn Fn(&str, &str) -> LabError) -> LabResult<T> {
        v.parse().map_err(|_| bad(k, v))
    }
    let model = ModelKind::from_name(get("model")?).ok_or_else(|| bad("model", kv["model"]))?;
    let dim: usize = num(get("dim")?, "dim", &bad)?;
    let points: usize = num(get("points")?, "points", &bad)?;
    let extent: f64 = num(get("extent")?, "extent", &bad)?;
    let grid = SpatialGrid::new(dim, extent, points).map_err(|e| LabError::format(path, e.to_string()))?;
    let stream = match (kv.get("seed"), kv.get("path")) {
        (Some(s), Some(p)) => Some(StreamKey::new(num(s, "seed", &bad)?, num(p, "path", &bad)?)),
        _ => None,
    };
    let convolution = match kv.get("convolution_strength") {
        Some(s) => {
            let w = get("convolution_weight")?;
            Some((
                num(s, "convolution_strength", &bad)?,
                ConvolutionWeight::from_name(w).ok_or_else(|| bad("convolution_weight", w))?,
            ))
        }
        None => None,
    };
    Ok(Header {
        meta: RunMeta {
            model,
            grid,
            dt: num(get("dt")?, "dt", &bad)?,
            dealias: num(get("dealias")?, "dealias", &bad)?,
            gamma: num(get("gamma")?, "gamma", &bad)?,
            potential: Potential {
                amplitude: num(get("v0")?, "v0", &bad)?,
                width: num(get("width")?, "width", &bad)?,
            },
            stream,
            rng_cursor: None,
            brownian_value: None,
        },
        dissipation: num(get("dissipation")?, "dissipation", &bad)?,
        convolution,
    })
}

fn encode_frame(rec: &TrajectoryRecord, k: usize, cursor: Option<u64>, b: Option<f64>, out: &mut Vec<u8>) {
    out.extend_from_slice(FRAME_TAG);
    out.extend_from_slice(&(rec.steps[k] as u64).to_le_bytes());
    out.extend_from_slice(&rec.mass[k].to_le_bytes());
    let d = rec.dissipation.as_ref().map_or(f64::NAN, |d| d[k]);
    out.extend_from_slice(&d.to_le_bytes());
    out.extend_from_slice(&cursor.unwrap_or(u64::MAX).to_le_bytes());
    out.extend_from_slice(&b.unwrap_or(f64::NAN).to_le_bytes());
    encode_field(&rec.fields[k], out);
    if let (Some(c), true) = (&rec.convolution, k > 0) {
        encode_field(&c.ito[k - 1], out);
        encode_field(&c.milstein[k - 1], out);
    }
}

/// Appends checkpoint frames to a record file as a run progresses.
pub struct RecordWriter {
    path: PathBuf,
    file: BufWriter<File>,
    written: usize,
}

impl RecordWriter {
    /// Creates (or replaces) `path` with the header and every frame of `rec`.
    /// Only the final frame carries the RNG position, which is all resuming
    /// needs.
    pub fn create(path: &Path, rec: &TrajectoryRecord) -> LabResult<Self> {
        let file = File::create(path).map_err(|e| LabError::io(path, e))?;
        let mut w = RecordWriter {
            path: path.to_path_buf(),
            file: BufWriter::new(file),
            written: 0,
        };
        let header = header_text(rec);
        let mut buf = Vec::new();
        buf.extend_from_slice(RECORD_MAGIC);
        buf.extend_from_slice(&(header.len() as u32).to_le_bytes());
        buf.extend_from_slice(header.as_bytes());
        w.write(&buf)?;
        w.append_new(rec)?;
        Ok(w)
    }

    /// Opens an existing record file for appending after `frames` frames.
    pub fn append_to(path: &Path, frames: usize) -> LabResult<Self> {
        let file = OpenOptions::new()
            .append(true)
            .open(path)
            .map_err(|e| LabError::io(path, e))?;
        Ok(RecordWriter {
            path: path.to_path_buf(),
            file: BufWriter::new(file),
            written: frames,
        })
    }

    /// Writes the frames of `rec` not yet on disk and flushes.
    pub fn append_new(&mut self, rec: &TrajectoryRecord) -> LabResult<()> {
        let mut buf = Vec::new();
        for k in self.written..rec.len() {
            let last = k + 1 == rec.len();
            let (c, b) = if last {
                (rec.meta.rng_cursor, rec.meta.brownian_value)
            } else {
                (None, None)
            };
            encode_frame(rec, k, c, b, &mut buf);
        }
        self.written = rec.len();
        self.write(&buf)?;
        self.file.flush().map_err(|e| LabError::io(&self.path, e))
    }

    fn write(&mut self, buf: &[u8]) -> LabResult<()> {
        self.file.write_all(buf).map_err(|e| LabError::io(&self.path, e))
    }
}

pub fn write_record(path: &Path, rec: &TrajectoryRecord) -> LabResult<()> {
    RecordWriter::create(path, rec).map(|_| ())
}

/// Reads a record file; any structural problem is reported against `path`.
pub fn read_record(path: &Path) -> LabResult<TrajectoryRecord> {
    let mut bytes = Vec::new();
    File::open(path)
        .map(BufReader::new)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| LabError::io(path, e))?;
    let mut r = Reader {
        bytes: &bytes,
        pos: 0,
        path,
    };
    if r.take(8, "magic")? != RECORD_MAGIC {
        return Err(LabError::format(path, "not a trajectory record (bad magic)"));
    }
    let hlen = r.u32("header length")? as usize;
    let text = std::str::from_utf8(r.take(hlen, "header")?)
        .map_err(|_| LabError::format(path, "header is not UTF-8"))?;
    let header = parse_header(text, path)?;
    let grid = header.meta.grid;
    let mut rec = TrajectoryRecord {
        meta: header.meta,
        steps: Vec::new(),
        fields: Vec::new(),
        mass: Vec::new(),
        dissipation: header.dissipation.then(Vec::new),
        convolution: header.convolution.map(|(s, w)| ConvolutionLedger {
            damping_strength: s,
            weight: w,
            ito: Vec::new(),
            milstein: Vec::new(),
        }),
    };
    while !r.at_end() {
        if r.take(4, "frame tag")? != FRAME_TAG {
            return Err(LabError::format(path, format!("bad frame tag at offset {}", r.pos - 4)));
        }
        let step = r.u64("frame")? as usize;
        let mass = r.f64("frame")?;
        let diss = r.f64("frame")?;
        let cursor = r.u64("frame")?;
        let b = r.f64("frame")?;
        let field = r.field(Some(&grid))?;
        if let Some(c) = rec.convolution.as_mut() {
            if !rec.steps.is_empty() {
                c.ito.push(r.field(Some(&grid))?);
                c.milstein.push(r.field(Some(&grid))?);
            }
        }
        rec.steps.push(step);
        rec.mass.push(mass);
        rec.fields.push(field);
        if let Some(d) = rec.dissipation.as_mut() {
            d.push(diss);
        }
        rec.meta.rng_cursor = (cursor != u64::MAX).then_some(cursor);
        rec.meta.brownian_value = (!b.is_nan()).then_some(b);
    }
    if rec.steps.is_empty() {
        return Err(LabError::format(path, "record holds no checkpoint frames"));
    }
    rec.validate().map_err(|e| LabError::format(path, e.to_string()))?;
    Ok(rec)
}
