//! Job directory, CSV tables, SVG overlays and the manifest.
//!
//! CSV schemas (one header row, floats as `{:.16e}`):
//!
//! | file | columns |
//! |---|---|
//! | `periods.csv` | loop, re, im |
//! | `trajectory.csv` | arc, s, re, im, p |
//! | `spectrum.csv` | arc, s, re, im |
//! | `measure.csv` | arc, s, re, im, u, weight |
//! | `sprop_*.csv` | arc, s, re, im, dv_plus, dv_minus, mismatch, du_tilde, u |
//! | `jenkins.csv` | target, sample, arc, re, im, side, end, hit |
//! | `margins.csv` | param, in_class, intensity, margin, hausdorff, jenkins, status |
//! | `curves.csv` | t, intensity_1, intensity_2, difference |
//!
//! Everything written goes through [`JobDir`], which records a SHA-256 per
//! file in `manifest.json`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64 as C;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geom::PolyContinuum;

/// Fixed-width scientific notation, 17 significant digits; `nan` for
/// missing values.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "nan".to_string()
    }
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".to_string(), num)
}

/// A header plus rows, rendered through the csv crate.
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(&self.header).map_err(err)?;
        for r in &self.rows {
            w.write_record(r).map_err(err)?;
        }
        w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
    }
}

/// Polyline samples of every arc with cumulative arclength.
pub fn continuum_table(k: &PolyContinuum) -> Table {
    let mut t = Table::new(&["arc", "s", "re", "im"]);
    for (a, arc) in k.arcs().iter().enumerate() {
        let mut s = 0.0;
        let mut prev = arc.start();
        for &z in arc.samples() {
            s += (z - prev).norm();
            prev = z;
            t.push(vec![a.to_string(), num(s), num(z.re), num(z.im)]);
        }
    }
    t
}

#[derive(Serialize)]
struct ManifestEntry {
    name: String,
    bytes: usize,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a, M: Serialize> {
    command: &'a str,
    version: &'a str,
    meta: &'a M,
    files: &'a [ManifestEntry],
}

pub struct JobDir {
    root: PathBuf,
    files: Vec<ManifestEntry>,
}

impl JobDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root)?;
        Ok(Self { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        std::fs::write(self.root.join(name), bytes)?;
        let digest = Sha256::digest(bytes);
        let mut hex = String::with_capacity(64);
        for b in digest {
            let _ = write!(hex, "{b:02x}");
        }
        self.files.retain(|f| f.name != name);
        self.files.push(ManifestEntry { name: name.to_string(), bytes: bytes.len(), sha256: hex });
        Ok(())
    }

    pub fn csv(&mut self, name: &str, t: &Table) -> Result<()> {
        self.write(name, &t.to_bytes()?)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, v: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Io(std::io::Error::other(e)))?;
        s.push('\n');
        self.write(name, s.as_bytes())
    }

    /// Write `manifest.json` listing every file written so far.
    pub fn finish<M: Serialize>(mut self, command: &str, meta: &M) -> Result<PathBuf> {
        self.files.sort_by(|a, b| a.name.cmp(&b.name));
        let m = Manifest { command, version: env!("CARGO_PKG_VERSION"), meta, files: &self.files };
        let mut s = serde_json::to_string_pretty(&m).map_err(|e| Error::Io(std::io::Error::other(e)))?;
        s.push('\n');
        std::fs::write(self.root.join("manifest.json"), s)?;
        Ok(self.root)
    }
}

enum Mark {
    Line(Vec<C>, &'static str),
    Dot(C, &'static str),
}

/// Static overlay in the upper half-plane. Style classes: `spectrum`,
/// `candidate`, `alt`, `ortho`, `anchor`, `hit`, `miss`, `stagnation`.
#[derive(Default)]
pub struct Figure {
    marks: Vec<Mark>,
    title: String,
}

const STYLE: &str = "\
.axis{stroke:#888;stroke-width:1}\
.spectrum{fill:none;stroke:#111;stroke-width:2.5}\
.candidate{fill:none;stroke:#c0392b;stroke-width:1.5;stroke-dasharray:6 3}\
.alt{fill:none;stroke:#2e7d32;stroke-width:2}\
.ortho{fill:none;stroke:#1f6fb2;stroke-width:0.8}\
.anchor{fill:#111}\
.hit{fill:#2e7d32}\
.miss{fill:#c0392b}\
.stagnation{fill:#f39c12}";

impl Figure {
    pub fn new(title: &str) -> Self {
        Self { marks: Vec::new(), title: title.to_string() }
    }

    pub fn line(&mut self, pts: &[C], class: &'static str) {
        if pts.len() >= 2 {
            self.marks.push(Mark::Line(pts.to_vec(), class));
        }
    }

    pub fn continuum(&mut self, k: &PolyContinuum, class: &'static str) {
        for a in k.arcs() {
            self.line(a.samples(), class);
        }
    }

    pub fn dot(&mut self, z: C, class: &'static str) {
        self.marks.push(Mark::Dot(z, class));
    }

    pub fn render(&self) -> String {
        let (mut lo, mut hi) = (C::new(f64::INFINITY, 0.0), C::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
        let mut grow = |z: C| {
            lo = C::new(lo.re.min(z.re), lo.im.min(z.im));
            hi = C::new(hi.re.max(z.re), hi.im.max(z.im));
        };
        for m in &self.marks {
            match m {
                Mark::Line(p, _) => p.iter().for_each(|&z| grow(z)),
                Mark::Dot(z, _) => grow(*z),
            }
        }
        if !lo.re.is_finite() {
            lo = C::new(-1.0, 0.0);
            hi = C::new(1.0, 1.0);
        }
        let span = (hi.re - lo.re).max(hi.im - lo.im).max(1e-9);
        let pad = 0.08 * span;
        let (x0, x1) = (lo.re - pad, hi.re + pad);
        let (y0, y1) = (lo.im.min(0.0) - pad, hi.im + pad);
        // 600 px along the longer side
        let px = 600.0 / (x1 - x0).max(y1 - y0);
        let map = |z: C| ((z.re - x0) * px, (y1 - z.im) * px);
        let (w, h) = ((x1 - x0) * px, (y1 - y0) * px);
        let mut s = String::new();
        let _ = writeln!(
            s,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.1}\" height=\"{h:.1}\" viewBox=\"0 0 {w:.1} {h:.1}\">"
        );
        let _ = writeln!(s, "<title>{}</title>", escape(&self.title));
        let _ = writeln!(s, "<style>{STYLE}</style>");
        let (ax0, ay) = map(C::new(x0, 0.0));
        let (ax1, _) = map(C::new(x1, 0.0));
        let _ = writeln!(s, "<line class=\"axis\" x1=\"{ax0:.2}\" y1=\"{ay:.2}\" x2=\"{ax1:.2}\" y2=\"{ay:.2}\"/>");
        for m in &self.marks {
            match m {
                Mark::Line(p, class) => {
                    let mut pts = String::new();
                    for &z in p {
                        let (x, y) = map(z);
                        let _ = write!(pts, "{x:.2},{y:.2} ");
                    }
                    let _ = writeln!(s, "<polyline class=\"{class}\" points=\"{}\"/>", pts.trim_end());
                }
                Mark::Dot(z, class) => {
                    let (x, y) = map(*z);
                    let _ = writeln!(s, "<circle class=\"{class}\" cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"3.5\"/>");
                }
            }
        }
        s.push_str("</svg>\n");
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
