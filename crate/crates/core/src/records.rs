//! Output formats: key=value records, point-cloud and contour text files,
//! and binary portable pixmaps. Every file starts with a manifest header
//! recording the tool version and the run configuration, so identical
//! configurations reproduce identical bytes.

use num_complex::Complex64;
use std::fmt::Write as _;

use crate::atlas::{SliceRaster, TheoremAReport};
use crate::classify::{MapClass, MapLabel};
use crate::cubic::{CubicMap, OrbitFate};
use crate::raster::Grid;
use crate::renorm::{CaptureReport, RenormStatus, RenormVerdict};
use crate::xset::{Connectivity, PointCloud};

pub const TOOL_NAME: &str = "quadlike";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// 17 significant digits: enough to round-trip any f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{:.16e}", x)
}

pub fn fmt_complex(z: Complex64) -> String {
    format!("{},{}", fmt_f64(z.re), fmt_f64(z.im))
}

/// `key=value` manifest lines shared by every output file.
pub struct Manifest {
    lines: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(subcommand: &str) -> Manifest {
        let mut m = Manifest { lines: Vec::new() };
        m.push("tool", format!("{TOOL_NAME} {TOOL_VERSION}"));
        m.push("subcommand", subcommand.to_string());
        m
    }

    pub fn push(&mut self, key: &str, value: String) {
        self.lines.push((key.to_string(), value));
    }

    pub fn push_map(&mut self, map: &CubicMap) {
        self.push("lambda", fmt_complex(map.lambda));
        self.push("b", fmt_complex(map.b));
    }

    /// Render as bare `key=value` lines (record files).
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.lines {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }

    /// Render as `# key=value` comment lines (data files, pixmaps).
    pub fn to_comments(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.lines {
            let _ = writeln!(s, "# {k}={v}");
        }
        s
    }
}

pub fn fate_str(f: OrbitFate) -> String {
    match f {
        OrbitFate::EscapedAt(n) => format!("EscapedAt({n})"),
        OrbitFate::ConvergedToZeroAt(n) => format!("ConvergedToZeroAt({n})"),
        OrbitFate::BoundedUnresolved => "BoundedUnresolved".to_string(),
    }
}

pub fn label_str(l: MapLabel) -> &'static str {
    match l {
        MapLabel::JuliaDisconnected => "JuliaDisconnected",
        MapLabel::Phd3Proxy => "Phd3Proxy",
        MapLabel::PotentiallyRenormalizable => "PotentiallyRenormalizable",
        MapLabel::Unresolved => "Unresolved",
    }
}

pub fn status_str(s: RenormStatus) -> &'static str {
    match s {
        RenormStatus::ImmediatelyRenormalizable => "ImmediatelyRenormalizable",
        RenormStatus::NotRenormalizable => "NotRenormalizable",
        RenormStatus::Undetermined => "Undetermined",
    }
}

pub fn connectivity_str(c: Connectivity) -> &'static str {
    match c {
        Connectivity::Connected => "Connected",
        Connectivity::Disconnected => "Disconnected",
        Connectivity::Undetermined => "Undetermined",
    }
}

/// Per-map record printed by the classify command and embedded in reports.
pub struct ClassificationRecord {
    pub map: CubicMap,
    pub class: MapClass,
    pub omega1: Option<Complex64>,
}

impl ClassificationRecord {
    pub fn render(&self, manifest: &Manifest) -> String {
        let mut s = manifest.to_kv();
        let _ = writeln!(s, "label={}", label_str(self.class.label));
        let _ = writeln!(s, "fate_omega_first={}", fate_str(self.class.fates.0));
        let _ = writeln!(s, "fate_omega_second={}", fate_str(self.class.fates.1));
        if let Some(w) = self.omega1 {
            let _ = writeln!(s, "omega1={}", fmt_complex(w));
        }
        s
    }
}

/// Verdict record, with the straightening-target parameter for the map's λ.
pub fn render_verdict(
    manifest: &Manifest,
    verdict: &RenormVerdict,
    reported: RenormStatus,
    cardioid_c: Complex64,
    continued: bool,
    domain_failure: Option<&str>,
) -> String {
    let mut s = manifest.to_kv();
    let _ = writeln!(s, "status={}", status_str(reported));
    let _ = writeln!(s, "raw_status={}", status_str(verdict.status));
    let _ = writeln!(
        s,
        "connectivity={}",
        connectivity_str(verdict.evidence.connectivity)
    );
    let _ = writeln!(
        s,
        "two_preimage_fraction={}",
        fmt_f64(verdict.evidence.two_preimage_fraction)
    );
    let _ = writeln!(s, "defect={}", fmt_f64(verdict.evidence.defect));
    let _ = writeln!(s, "cardioid_c={}", fmt_complex(cardioid_c));
    let _ = writeln!(s, "continued={continued}");
    if let Some(f) = domain_failure {
        let _ = writeln!(s, "domain_failure={f}");
    }
    s
}

pub fn render_capture(manifest: &Manifest, report: &CaptureReport) -> String {
    let mut s = manifest.to_kv();
    let _ = writeln!(s, "captured={}", report.captured);
    match report.entry_time {
        Some(n) => {
            let _ = writeln!(s, "entry_time={n}");
        }
        None => {
            let _ = writeln!(s, "entry_time=none");
        }
    }
    s
}

/// Point cloud: manifest comments, then one `depth re im` line per point,
/// 17 significant digits.
pub fn render_cloud(manifest: &Manifest, cloud: &PointCloud) -> String {
    let mut s = manifest.to_comments();
    s.push_str("# columns: depth re im\n");
    for p in &cloud.points {
        let _ = writeln!(s, "{} {} {}", p.depth, fmt_f64(p.z.re), fmt_f64(p.z.im));
    }
    s
}

/// Closed polyline: manifest comments, then one `re im` line per vertex.
pub fn render_contour(manifest: &Manifest, contour: &[Complex64]) -> String {
    let mut s = manifest.to_comments();
    s.push_str("# closed=true columns: re im\n");
    for v in contour {
        let _ = writeln!(s, "{} {}", fmt_f64(v.re), fmt_f64(v.im));
    }
    s
}

/// Fixed palette, one color per label; documented in the slice manifest.
pub fn label_color(l: MapLabel) -> [u8; 3] {
    match l {
        MapLabel::JuliaDisconnected => [40, 40, 72],
        MapLabel::Phd3Proxy => [214, 78, 54],
        MapLabel::PotentiallyRenormalizable => [240, 238, 225],
        MapLabel::Unresolved => [128, 128, 128],
    }
}

/// Binary P6 pixmap with the manifest embedded as header comments.
pub fn render_ppm_rgb(manifest: &Manifest, res: usize, rgb: &[[u8; 3]]) -> Vec<u8> {
    assert_eq!(rgb.len(), res * res);
    let mut out = Vec::with_capacity(res * res * 3 + 512);
    out.extend_from_slice(b"P6\n");
    out.extend_from_slice(manifest.to_comments().as_bytes());
    out.extend_from_slice(format!("{res} {res}\n255\n").as_bytes());
    for px in rgb {
        out.extend_from_slice(px);
    }
    out
}

pub fn slice_image(manifest: &Manifest, slice: &SliceRaster) -> Vec<u8> {
    let res = slice.labels.res;
    let rgb: Vec<[u8; 3]> = slice
        .labels
        .as_slice()
        .iter()
        .map(|&l| label_color(l))
        .collect();
    render_ppm_rgb(manifest, res, &rgb)
}

/// Occupancy image for an X raster (white on black).
pub fn occupancy_image(manifest: &Manifest, grid: &Grid<bool>) -> Vec<u8> {
    let rgb: Vec<[u8; 3]> = grid
        .as_slice()
        .iter()
        .map(|&b| if b { [255, 255, 255] } else { [0, 0, 0] })
        .collect();
    render_ppm_rgb(manifest, grid.res, &rgb)
}

/// Slice manifest: parameters, palette, summary counts, and the fixed-width
/// layout of the per-cell record file.
pub fn render_slice_manifest(
    manifest: &Manifest,
    slice: &SliceRaster,
    cell_record_len: usize,
    header_len: usize,
) -> String {
    let mut s = manifest.to_kv();
    for l in [
        MapLabel::JuliaDisconnected,
        MapLabel::Phd3Proxy,
        MapLabel::PotentiallyRenormalizable,
        MapLabel::Unresolved,
    ] {
        let c = label_color(l);
        let _ = writeln!(s, "palette_{}={},{},{}", label_str(l), c[0], c[1], c[2]);
    }
    let _ = writeln!(s, "count_JuliaDisconnected={}", slice.counts.julia_disconnected);
    let _ = writeln!(s, "count_Phd3Proxy={}", slice.counts.phd3_proxy);
    let _ = writeln!(
        s,
        "count_PotentiallyRenormalizable={}",
        slice.counts.potentially_renormalizable
    );
    let _ = writeln!(s, "count_Unresolved={}", slice.counts.unresolved);
    let _ = writeln!(s, "unbounded_component_ids={}", {
        let ids: Vec<String> = slice.unbounded.iter().map(|i| i.to_string()).collect();
        ids.join(",")
    });
    let _ = writeln!(s, "cells_header_bytes={header_len}");
    let _ = writeln!(s, "cells_record_bytes={cell_record_len}");
    let _ = writeln!(s, "cells_order=row_major");
    s
}

/// Fixed-width per-cell records: `ixxxx iyyyy L ccccccc\n` so that the byte
/// offset of cell (ix, iy) is `header + (iy*res + ix) * record_len`.
pub fn render_slice_cells(manifest: &Manifest, slice: &SliceRaster) -> (String, usize, usize) {
    let header = manifest.to_comments() + "# columns: ix iy label component\n";
    let mut s = header.clone();
    let res = slice.labels.res;
    let mut record_len = 0;
    for iy in 0..res {
        for ix in 0..res {
            let l = match slice.labels.get(ix, iy) {
                MapLabel::JuliaDisconnected => 'D',
                MapLabel::Phd3Proxy => 'P',
                MapLabel::PotentiallyRenormalizable => 'R',
                MapLabel::Unresolved => 'U',
            };
            let comp = *slice.components.get(ix, iy);
            let line = format!("{ix:04} {iy:04} {l} {comp:07}\n");
            record_len = line.len();
            s.push_str(&line);
        }
    }
    (s, record_len, header.len())
}

pub fn render_theorem_a(manifest: &Manifest, report: &TheoremAReport) -> String {
    let mut s = manifest.to_kv();
    let _ = writeln!(s, "samples={}", report.samples.len());
    let _ = writeln!(
        s,
        "immediately_renormalizable={}",
        report.immediately_renormalizable
    );
    let _ = writeln!(s, "undetermined={}", report.undetermined);
    let _ = writeln!(s, "not_renormalizable={}", report.not_renormalizable);
    let _ = writeln!(
        s,
        "siegel_capture_prediction=untested (certified Siegel disks out of scope)"
    );
    for (i, sample) in report.samples.iter().enumerate() {
        let _ = writeln!(
            s,
            "sample_{i}={} status={} captured={}",
            fmt_complex(sample.b),
            status_str(sample.status),
            match sample.captured {
                Some(true) => "true",
                Some(false) => "false",
                None => "n/a",
            }
        );
        if let Some(note) = &sample.note {
            let _ = writeln!(s, "sample_{i}_note={note}");
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f64_formatting_round_trips() {
        for &x in &[0.0, 1.0, -0.5, 1.0 / 3.0, 1e-300, std::f64::consts::PI] {
            let s = fmt_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, x, "{s}");
        }
    }

    #[test]
    fn ppm_has_magic_and_size() {
        let m = Manifest::new("test");
        let img = render_ppm_rgb(&m, 2, &[[0, 0, 0]; 4]);
        assert!(img.starts_with(b"P6\n"));
        assert!(img.len() > 12 + 2);
        assert_eq!(&img[img.len() - 12..], &[0u8; 12][..]);
    }
}
