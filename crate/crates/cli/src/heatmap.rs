//! Heatmap emission: exact values as CSV, and a labeled SVG grid with a
//! five-stop linear color scale (cool to hot).

use std::io::Write;
use std::path::Path;

use aspect_topics::{Error, Result};

/// Color anchors from low to high, interpolated linearly in RGB.
/// Documented in the README; cool colors mean low weight, hot colors high.
pub const COLOR_STOPS: [[u8; 3]; 5] = [
    [0x31, 0x36, 0x95], // deep blue
    [0x74, 0xad, 0xd1], // light blue
    [0xfe, 0xe0, 0x90], // pale yellow
    [0xf4, 0x6d, 0x43], // orange
    [0xa5, 0x00, 0x26], // deep red
];

#[derive(Debug, Clone)]
pub struct HeatmapSpec {
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl HeatmapSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.row_labels.len() {
            return Err(Error::DimensionMismatch {
                expected: self.row_labels.len(),
                got: self.values.len(),
            });
        }
        for (r, row) in self.values.iter().enumerate() {
            if row.len() != self.col_labels.len() {
                return Err(Error::DimensionMismatch {
                    expected: self.col_labels.len(),
                    got: row.len(),
                });
            }
            for (c, v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFiniteValue { row: r, col: c });
                }
            }
        }
        Ok(())
    }

    fn min_max(&self) -> (f64, f64) {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for row in &self.values {
            for &v in row {
                min = min.min(v);
                max = max.max(v);
            }
        }
        (min, max)
    }
}

/// Position in [0, 1] mapped through the five stops. A degenerate range
/// maps everything to the hottest anchor.
pub fn color_at(t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0);
    let scaled = t * (COLOR_STOPS.len() - 1) as f64;
    let i = (scaled.floor() as usize).min(COLOR_STOPS.len() - 2);
    let frac = scaled - i as f64;
    let lo = COLOR_STOPS[i];
    let hi = COLOR_STOPS[i + 1];
    [
        (lo[0] as f64 + frac * (hi[0] as f64 - lo[0] as f64)).round() as u8,
        (lo[1] as f64 + frac * (hi[1] as f64 - lo[1] as f64)).round() as u8,
        (lo[2] as f64 + frac * (hi[2] as f64 - lo[2] as f64)).round() as u8,
    ]
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
        .replace('\'', "&apos;")
}

/// Write the exact cell values (17 significant digits) as CSV.
pub fn write_heatmap_csv(spec: &HeatmapSpec, path: &Path) -> Result<()> {
    spec.validate()?;
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec![String::new()];
    header.extend(spec.col_labels.iter().cloned());
    w.write_record(&header)?;
    for (label, row) in spec.row_labels.iter().zip(&spec.values) {
        let mut record = vec![label.clone()];
        record.extend(row.iter().map(|v| format!("{v:.16e}")));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Render the labeled grid as SVG.
pub fn write_heatmap_svg(spec: &HeatmapSpec, path: &Path) -> Result<()> {
    spec.validate()?;
    let (min, max) = spec.min_max();
    let cell = 26.0;
    let left = 140.0;
    let top = 90.0;
    let width = left + cell * spec.col_labels.len() as f64 + 20.0;
    let height = top + cell * spec.row_labels.len() as f64 + 20.0;
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n"
    ));
    out.push_str("<style>text { font-family: sans-serif; font-size: 11px; }</style>\n");
    for (c, label) in spec.col_labels.iter().enumerate() {
        let x = left + cell * c as f64 + cell / 2.0;
        let y = top - 8.0;
        out.push_str(&format!(
            "<text x=\"{x:.1}\" y=\"{y:.1}\" text-anchor=\"start\" transform=\"rotate(-55 {x:.1} {y:.1})\">{}</text>\n",
            xml_escape(label)
        ));
    }
    for (r, label) in spec.row_labels.iter().enumerate() {
        let y = top + cell * r as f64 + cell / 2.0 + 4.0;
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{y:.1}\" text-anchor=\"end\">{}</text>\n",
            left - 8.0,
            xml_escape(label)
        ));
    }
    for (r, row) in spec.values.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            let t = if max > min { (v - min) / (max - min) } else { 1.0 };
            let [red, green, blue] = color_at(t);
            let x = left + cell * c as f64;
            let y = top + cell * r as f64;
            out.push_str(&format!(
                "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{cell}\" height=\"{cell}\" fill=\"#{red:02x}{green:02x}{blue:02x}\" stroke=\"#ffffff\" stroke-width=\"0.5\"><title>{}</title></rect>\n",
                xml_escape(&format!("{} / {}: {v}", spec.row_labels[r], spec.col_labels[c]))
            ));
        }
    }
    out.push_str("</svg>\n");
    let mut file = std::fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}
