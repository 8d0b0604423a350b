//! Topographic scalp maps: electrode positions, inverse-distance-weighted
//! interpolation onto a square grid, and CSV/SVG rendering.
//!
//! Electrode coordinates come from the standard BESA spherical table for the
//! 10-20 montage. Each electrode has a polar angle `theta` (degrees from the
//! vertex, negative toward the left ear) and an in-plane angle `phi`. The
//! 2-D projection used here is azimuthal-equidistant: radius `|theta| / 92`
//! (the Fp/T/O ring lands on the unit circle) at screen angle `90 - phi`
//! measured clockwise from the nose for right-hemisphere electrodes, mirrored
//! for the left.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use valaro_core::error::{Error, Result};

/// BESA spherical coordinates (theta, phi) in degrees for the 32 electrodes,
/// in recording order.
const BESA_DEGREES: [(&str, f64, f64); 32] = [
    ("Fp1", -92.0, -72.0),
    ("AF3", -74.0, -65.0),
    ("F3", -60.0, -51.0),
    ("F7", -92.0, -36.0),
    ("FC5", -72.0, -21.0),
    ("FC1", -32.0, -45.0),
    ("C3", -46.0, 0.0),
    ("T7", -92.0, 0.0),
    ("CP5", -72.0, 21.0),
    ("CP1", -32.0, 45.0),
    ("P3", -60.0, 51.0),
    ("P7", -92.0, 36.0),
    ("PO3", -74.0, 65.0),
    ("O1", -92.0, 72.0),
    ("Oz", 92.0, -90.0),
    ("Pz", 46.0, -90.0),
    ("Fp2", 92.0, 72.0),
    ("AF4", 74.0, 65.0),
    ("Fz", 46.0, 90.0),
    ("F4", 60.0, 51.0),
    ("F8", 92.0, 36.0),
    ("FC6", 72.0, 21.0),
    ("FC2", 32.0, 45.0),
    ("Cz", 0.0, 0.0),
    ("C4", 46.0, 0.0),
    ("T8", 92.0, 0.0),
    ("CP6", 72.0, -21.0),
    ("CP2", 32.0, -45.0),
    ("P4", 60.0, -51.0),
    ("P8", 92.0, -36.0),
    ("PO4", 74.0, -65.0),
    ("O2", 92.0, -72.0),
];

/// Unit-circle position of one electrode. +y is the nose, +x the right ear.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElectrodePosition {
    pub name: &'static str,
    pub x: f64,
    pub y: f64,
}

/// 2-D positions for the standard 32-electrode montage, recording order.
pub fn electrode_positions() -> Vec<ElectrodePosition> {
    BESA_DEGREES
        .iter()
        .map(|&(name, theta, phi)| {
            let radius = theta.abs() / 92.0;
            let screen_deg = if theta >= 0.0 { 90.0 - phi } else { -(90.0 + phi) };
            let screen = screen_deg.to_radians();
            ElectrodePosition {
                name,
                x: radius * screen.sin(),
                y: radius * screen.cos(),
            }
        })
        .collect()
}

/// Interpolated scalp map over `[-1, 1]^2`.
#[derive(Debug, Clone)]
pub struct TopomapGrid {
    pub band: String,
    pub t_start: f64,
    pub t_end: f64,
    pub size: usize,
    /// Row-major values; row 0 is the top of the head (y = +1).
    pub values: Vec<f64>,
    pub electrodes: Vec<ElectrodePosition>,
    pub electrode_values: Vec<f64>,
}

impl TopomapGrid {
    pub fn value_at(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.size + col]
    }

    /// Grid-cell center in head coordinates.
    pub fn cell_center(&self, row: usize, col: usize) -> (f64, f64) {
        let step = 2.0 / self.size as f64;
        let x = -1.0 + (col as f64 + 0.5) * step;
        let y = 1.0 - (row as f64 + 0.5) * step;
        (x, y)
    }
}

const IDW_NEIGHBORS: usize = 4;

/// Inverse-distance-weighted interpolation (power 2, 4 nearest electrodes)
/// of per-electrode values onto a `size x size` grid.
pub fn interpolate_grid(
    band: &str,
    t_start: f64,
    t_end: f64,
    electrodes: &[ElectrodePosition],
    electrode_values: &[f64],
    size: usize,
) -> Result<TopomapGrid> {
    if electrodes.len() != electrode_values.len() {
        return Err(Error::Size(format!(
            "{} electrode positions for {} values",
            electrodes.len(),
            electrode_values.len()
        )));
    }
    if electrodes.len() < IDW_NEIGHBORS {
        return Err(Error::Size(format!(
            "need at least {IDW_NEIGHBORS} electrodes, got {}",
            electrodes.len()
        )));
    }
    if electrode_values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("electrode values must be finite".into()));
    }

    let mut grid = TopomapGrid {
        band: band.to_string(),
        t_start,
        t_end,
        size,
        values: vec![0.0; size * size],
        electrodes: electrodes.to_vec(),
        electrode_values: electrode_values.to_vec(),
    };
    let mut nearest: Vec<(f64, usize)> = Vec::with_capacity(electrodes.len());
    for row in 0..size {
        for col in 0..size {
            let (x, y) = grid.cell_center(row, col);
            nearest.clear();
            nearest.extend(electrodes.iter().enumerate().map(|(i, e)| {
                let dx = e.x - x;
                let dy = e.y - y;
                (dx * dx + dy * dy, i)
            }));
            nearest.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));

            let value = if nearest[0].0 < 1e-18 {
                electrode_values[nearest[0].1]
            } else {
                let mut weight_sum = 0.0;
                let mut value_sum = 0.0;
                for &(dist_sq, idx) in nearest.iter().take(IDW_NEIGHBORS) {
                    // Power-2 IDW: weight is 1 / distance^2.
                    let weight = 1.0 / dist_sq;
                    weight_sum += weight;
                    value_sum += weight * electrode_values[idx];
                }
                value_sum / weight_sum
            };
            grid.values[row * size + col] = value;
        }
    }
    Ok(grid)
}

/// Long-format CSV: `x,y,value`, one row per grid cell, row-major from the
/// top of the head.
pub fn write_grid_csv(grid: &TopomapGrid, path: &Path) -> Result<()> {
    let file = File::create(path)?;
    let mut out = BufWriter::new(file);
    writeln!(out, "x,y,value")?;
    for row in 0..grid.size {
        for col in 0..grid.size {
            let (x, y) = grid.cell_center(row, col);
            writeln!(out, "{x},{y},{}", grid.value_at(row, col))?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Linear three-stop color ramp: blue through white to red.
fn color_of(t: f64) -> (u8, u8, u8) {
    let t = t.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64, f: f64| (a + (b - a) * f).round() as u8;
    if t < 0.5 {
        let f = t / 0.5;
        (lerp(48.0, 255.0, f), lerp(98.0, 255.0, f), lerp(208.0, 255.0, f))
    } else {
        let f = (t - 0.5) / 0.5;
        (lerp(255.0, 208.0, f), lerp(255.0, 60.0, f), lerp(255.0, 44.0, f))
    }
}

/// SVG heatmap with a linear color scale, head outline, and electrode
/// markers.
pub fn write_grid_svg(grid: &TopomapGrid, path: &Path) -> Result<()> {
    let px = 8.0;
    let side = grid.size as f64 * px;
    let file = File::create(path)?;
    let mut out = BufWriter::new(file);

    let min = grid.values.iter().cloned().fold(f64::MAX, f64::min);
    let max = grid.values.iter().cloned().fold(f64::MIN, f64::max);
    let span = if max > min { max - min } else { 1.0 };

    writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{side}\" height=\"{}\" viewBox=\"0 0 {side} {}\">",
        side + 24.0,
        side + 24.0
    )?;
    writeln!(
        out,
        "<title>{} band, {:.3}-{:.3} s</title>",
        grid.band, grid.t_start, grid.t_end
    )?;
    for row in 0..grid.size {
        for col in 0..grid.size {
            let t = (grid.value_at(row, col) - min) / span;
            let (r, g, b) = color_of(t);
            writeln!(
                out,
                "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{px}\" height=\"{px}\" fill=\"rgb({r},{g},{b})\"/>",
                col as f64 * px,
                row as f64 * px
            )?;
        }
    }
    // Head outline and nose marker in head coordinates mapped to pixels.
    let to_px = |x: f64, y: f64| ((x + 1.0) / 2.0 * side, (1.0 - y) / 2.0 * side);
    let (cx, cy) = to_px(0.0, 0.0);
    writeln!(
        out,
        "<circle cx=\"{cx:.1}\" cy=\"{cy:.1}\" r=\"{:.1}\" fill=\"none\" stroke=\"black\" stroke-width=\"2\"/>",
        side / 2.0
    )?;
    let (nx, ny) = to_px(0.0, 1.0);
    writeln!(
        out,
        "<path d=\"M {:.1} {ny:.1} L {nx:.1} {:.1} L {:.1} {ny:.1}\" fill=\"none\" stroke=\"black\" stroke-width=\"2\"/>",
        nx - 12.0,
        ny - 14.0,
        nx + 12.0
    )?;
    for electrode in &grid.electrodes {
        let (ex, ey) = to_px(electrode.x, electrode.y);
        writeln!(
            out,
            "<circle cx=\"{ex:.1}\" cy=\"{ey:.1}\" r=\"3\" fill=\"black\"/>"
        )?;
    }
    writeln!(
        out,
        "<text x=\"4\" y=\"{:.1}\" font-size=\"12\" font-family=\"monospace\">{} band  [{:.6}, {:.6}] uV^2  {:.3}-{:.3} s</text>",
        side + 16.0,
        grid.band,
        min,
        max,
        grid.t_start,
        grid.t_end
    )?;
    writeln!(out, "</svg>")?;
    out.flush()?;
    Ok(())
}
