//! The MFBS1 binary array file, CSV tables with headers, and log–log SVG plots.
//!
//! Layout, all little-endian: magic `MFBS1`, version u16, N u16, d u16,
//! counts u32 × N, lower bounds f64 × N, upper bounds f64 × N, seed u64,
//! tag u8, then Π counts × d float64 values in row-major point order.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Grid, Interval};
use crate::simulate::{FieldSample, SamplerTag};

pub const MAGIC: &[u8; 5] = b"MFBS1";
pub const VERSION: u16 = 1;
/// Tag of a covariance matrix stored as an n × n "field" with d = 1.
pub const TAG_COVARIANCE: u8 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayFile {
    pub version: u16,
    pub d: u16,
    pub counts: Vec<u32>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub seed: u64,
    pub tag: u8,
    pub values: Vec<f64>,
}

impl ArrayFile {
    pub fn n_dims(&self) -> usize {
        self.counts.len()
    }

    pub fn payload_len(&self) -> usize {
        self.counts.iter().map(|&c| c as usize).product::<usize>() * self.d as usize
    }

    pub fn tag_name(&self) -> &'static str {
        match self.tag {
            TAG_COVARIANCE => "covariance",
            t => match SamplerTag::from_code(t) {
                Some(SamplerTag::Cholesky) => "cholesky",
                Some(SamplerTag::WhiteNoise) => "white-noise",
                None => "unknown",
            },
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let n = self.n_dims();
        if n == 0 || n > u16::MAX as usize || self.lo.len() != n || self.hi.len() != n {
            return Err(Error::Format("header dimensions are inconsistent".into()));
        }
        if self.values.len() != self.payload_len() {
            return Err(Error::Format(format!("payload has {} values, header implies {}", self.values.len(), self.payload_len())));
        }
        let mut out = Vec::with_capacity(5 + 6 + 20 * n + 9 + 8 * self.values.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&self.version.to_le_bytes());
        out.extend_from_slice(&(n as u16).to_le_bytes());
        out.extend_from_slice(&self.d.to_le_bytes());
        for c in &self.counts {
            out.extend_from_slice(&c.to_le_bytes());
        }
        for v in self.lo.iter().chain(&self.hi) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.push(self.tag);
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(5)? != MAGIC {
            return Err(Error::Format("bad magic: not an MFBS1 array file".into()));
        }
        let version = r.u16()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}, expected {VERSION}")));
        }
        let n = r.u16()? as usize;
        let d = r.u16()?;
        let counts = (0..n).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        let lo = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let hi = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let seed = r.u64()?;
        let tag = r.take(1)?[0];
        let expected = counts.iter().map(|&c| c as usize).product::<usize>() * d as usize * 8;
        let actual = bytes.len() - r.pos;
        if actual != expected {
            return Err(Error::Format(format!("payload is {actual} bytes, header implies {expected} bytes")));
        }
        let values = bytes[r.pos..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(ArrayFile { version, d, counts, lo, hi, seed, tag, values })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        let mut f = fs::File::create(path)?;
        f.write_all(&bytes)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Format(format!("header truncated at byte {}", self.bytes.len())));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

impl From<&FieldSample> for ArrayFile {
    fn from(f: &FieldSample) -> Self {
        ArrayFile {
            version: VERSION,
            d: f.d as u16,
            counts: f.grid.counts.iter().map(|&c| c as u32).collect(),
            lo: f.grid.interval.lo.clone(),
            hi: f.grid.interval.hi.clone(),
            seed: f.seed,
            tag: f.sampler.code(),
            values: f.values.clone(),
        }
    }
}

impl TryFrom<ArrayFile> for FieldSample {
    type Error = Error;

    fn try_from(a: ArrayFile) -> Result<Self> {
        let sampler = SamplerTag::from_code(a.tag).ok_or_else(|| Error::Format(format!("tag {} is not a field sampler", a.tag)))?;
        let interval = Interval::new(a.lo, a.hi).map_err(|e| Error::Format(e.to_string()))?;
        let grid = Grid::new(interval, a.counts.iter().map(|&c| c as usize).collect()).map_err(|e| Error::Format(e.to_string()))?;
        Ok(FieldSample { grid, d: a.d as usize, values: a.values, seed: a.seed, sampler, noise: None })
    }
}

pub fn write_field(path: &Path, field: &FieldSample) -> Result<()> {
    ArrayFile::from(field).write(path)
}

pub fn read_field(path: &Path) -> Result<FieldSample> {
    FieldSample::try_from(ArrayFile::read(path)?)
}

/// Stores an n × n matrix as a 2-axis array over index bounds [0, n − 1].
pub fn covariance_array(m: &nalgebra::DMatrix<f64>) -> ArrayFile {
    let n = m.nrows();
    let top = n.saturating_sub(1) as f64;
    ArrayFile {
        version: VERSION,
        d: 1,
        counts: vec![n as u32, n as u32],
        lo: vec![0.0, 0.0],
        hi: vec![top, top],
        seed: 0,
        tag: TAG_COVARIANCE,
        values: (0..n * n).map(|k| m[(k / n, k % n)]).collect(),
    }
}

/// Header, shape and payload statistics.
pub fn summarize(a: &ArrayFile) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "format     MFBS1 version {}", a.version);
    let _ = writeln!(s, "tag        {} ({})", a.tag, a.tag_name());
    let _ = writeln!(s, "N          {}", a.n_dims());
    let _ = writeln!(s, "d          {}", a.d);
    let _ = writeln!(s, "counts     {:?}", a.counts);
    let _ = writeln!(s, "lower      {:?}", a.lo);
    let _ = writeln!(s, "upper      {:?}", a.hi);
    let _ = writeln!(s, "seed       {}", a.seed);
    let _ = writeln!(s, "values     {}", a.values.len());
    if !a.values.is_empty() {
        let min = a.values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = a.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mean = a.values.iter().sum::<f64>() / a.values.len() as f64;
        let _ = writeln!(s, "min        {min:e}");
        let _ = writeln!(s, "max        {max:e}");
        let _ = writeln!(s, "mean       {mean:e}");
    }
    s
}

/// Header and row count; for fit tables also slope, CI half-width and theoretical target.
pub fn summarize_table(t: &Table) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "format       CSV");
    let _ = writeln!(s, "columns      {}", t.header.join(", "));
    let _ = writeln!(s, "rows         {}", t.rows.len());
    if let Some(first) = t.rows.first() {
        for key in ["slope", "ci_halfwidth", "theoretical", "median_slope", "spearman"] {
            if let Some(c) = t.column(key) {
                let _ = writeln!(s, "{key:<12} {}", first[c]);
            }
        }
    }
    s
}

/// Summary of an array file or, for a `.csv` path, of a table.
pub fn inspect(path: &Path) -> Result<String> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        return Ok(summarize_table(&Table::read(path)?));
    }
    Ok(summarize(&ArrayFile::read(path)?))
}

/// A table with a header row; numbers are written with shortest round-trip formatting.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push<I: IntoIterator<Item = String>>(&mut self, row: I) {
        self.rows.push(row.into_iter().collect());
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            if r.len() != self.header.len() {
                return Err(Error::Format(format!("row has {} fields, header has {}", r.len(), self.header.len())));
            }
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let header = r.headers()?.iter().map(|s| s.to_string()).collect();
        let rows = r.records().map(|rec| Ok(rec?.iter().map(|s| s.to_string()).collect())).collect::<Result<_>>()?;
        Ok(Table { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

/// Formats a number so that parsing it back gives the same bits.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

/// Log–log scatter with an optional fitted line ln y = intercept + slope·ln x.
pub fn loglog_svg(title: &str, x_label: &str, y_label: &str, xs: &[f64], ys: &[f64], line: Option<(f64, f64)>) -> String {
    let (w, h, m) = (480.0, 360.0, 56.0);
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).filter(|(x, y)| **x > 0.0 && **y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="20" text-anchor="middle">{}</text>"#, w / 2.0, escape(title));
    if !pts.is_empty() {
        let (x0, x1) = bounds(pts.iter().map(|p| p.0));
        let (y0, y1) = bounds(pts.iter().map(|p| p.1));
        let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
        let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
        let _ = writeln!(svg, r#"<rect x="{m}" y="{m}" width="{}" height="{}" fill="none" stroke="black"/>"#, w - 2.0 * m, h - 2.0 * m);
        for (x, y) in &pts {
            let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#, sx(*x), sy(*y));
        }
        if let Some((slope, icpt)) = line {
            let (ya, yb) = (icpt + slope * x0, icpt + slope * x1);
            let _ = writeln!(
                svg,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="firebrick"/>"#,
                sx(x0),
                sy(ya),
                sx(x1),
                sy(yb)
            );
            let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">slope {slope:.4}</text>"#, w - m, m - 6.0);
        }
        let _ = writeln!(svg, r#"<text x="{m}" y="{}">{:.3}</text>"#, h - m + 16.0, x0.exp());
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{:.3}</text>"#, w - m, h - m + 16.0, x1.exp());
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{:.3e}</text>"#, m - 4.0, h - m, y0.exp());
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{:.3e}</text>"#, m - 4.0, m + 10.0, y1.exp());
    }
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{} (log)</text>"#, w / 2.0, h - 12.0, escape(x_label));
    let _ = writeln!(svg, r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">{} (log)</text>"#, h / 2.0, h / 2.0, escape(y_label));
    svg.push_str("</svg>\n");
    svg
}

fn bounds(it: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> FieldSample {
        let grid = Grid::uniform(&[0.5, 1.0], &[1.5, 3.0], &[3, 2]).unwrap();
        let values = (0..12).map(|i| (i as f64).sin() * 1e-3 + f64::EPSILON * i as f64).collect();
        FieldSample { grid, d: 2, values, seed: 0xDEAD_BEEF, sampler: SamplerTag::WhiteNoise, noise: None }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let f = sample();
        let a = ArrayFile::from(&f);
        let b = ArrayFile::from_bytes(&a.to_bytes().unwrap()).unwrap();
        assert_eq!(a, b);
        let g = FieldSample::try_from(b).unwrap();
        assert_eq!(g.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), f.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        assert_eq!(g.grid, f.grid);
        assert_eq!(g.seed, f.seed);
    }

    #[test]
    fn header_layout() {
        let bytes = ArrayFile::from(&sample()).to_bytes().unwrap();
        assert_eq!(&bytes[..5], b"MFBS1");
        assert_eq!(u16::from_le_bytes([bytes[5], bytes[6]]), 1);
        assert_eq!(u16::from_le_bytes([bytes[7], bytes[8]]), 2);
        assert_eq!(u16::from_le_bytes([bytes[9], bytes[10]]), 2);
        // 5 + 6 + 2·4 + 4·8 + 8 + 1 header bytes, then 12 values
        assert_eq!(bytes.len(), 60 + 96);
    }

    #[test]
    fn truncated_and_bad_magic() {
        let bytes = ArrayFile::from(&sample()).to_bytes().unwrap();
        let err = ArrayFile::from_bytes(&bytes[..bytes.len() - 3]).unwrap_err().to_string();
        assert!(err.contains("93 bytes") && err.contains("96 bytes"), "{err}");
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(ArrayFile::from_bytes(&bad), Err(Error::Format(_))));
        let mut v2 = bytes;
        v2[5] = 2;
        assert!(ArrayFile::from_bytes(&v2).unwrap_err().to_string().contains("version"));
    }

    #[test]
    fn numbers_round_trip_through_text() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23] {
            assert_eq!(num(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }
}
