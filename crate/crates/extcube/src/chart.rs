//! Ext charts: homology dimensions indexed by (weight, filtration s, stem),
//! with JSON/CSV serialization and a dependency-light SVG renderer in the
//! usual Adams layout (stem horizontal, s vertical).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ChartKey {
    pub w: i64,
    pub s: i64,
    pub stem: i64,
}

/// Homology dimensions per (weight, s, stem). Absent keys are zero inside the
/// computed window. `edge_uncertain` lists spots whose value could be affected
/// by the truncation; the construction keeps kernels exact through s = s_max,
/// so it is normally empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtChart {
    pub p: u32,
    pub n: u32,
    pub w_max: i64,
    pub s_max: i64,
    pub entries: BTreeMap<ChartKey, usize>,
    pub edge_uncertain: BTreeSet<ChartKey>,
}

#[derive(Serialize, Deserialize)]
struct ChartEntryDoc {
    w: i64,
    s: i64,
    stem: i64,
    dim: usize,
}

#[derive(Serialize, Deserialize)]
struct ChartDoc {
    p: u32,
    n: u32,
    w_max: i64,
    s_max: i64,
    entries: Vec<ChartEntryDoc>,
    edge_uncertain: Vec<ChartKey>,
}

impl ExtChart {
    pub fn new(p: u32, n: u32, w_max: i64, s_max: i64) -> ExtChart {
        ExtChart {
            p,
            n,
            w_max,
            s_max,
            entries: BTreeMap::new(),
            edge_uncertain: BTreeSet::new(),
        }
    }

    pub fn insert(&mut self, key: ChartKey, dim: usize) {
        if dim > 0 {
            self.entries.insert(key, dim);
        }
    }

    pub fn dim(&self, key: &ChartKey) -> usize {
        self.entries.get(key).copied().unwrap_or(0)
    }

    /// Dimensions aggregated over weights, per (s, stem) — the usual Adams
    /// chart view.
    pub fn aggregated(&self) -> BTreeMap<(i64, i64), usize> {
        let mut out = BTreeMap::new();
        for (k, &d) in &self.entries {
            *out.entry((k.s, k.stem)).or_insert(0) += d;
        }
        out
    }

    pub fn to_json(&self) -> String {
        let doc = ChartDoc {
            p: self.p,
            n: self.n,
            w_max: self.w_max,
            s_max: self.s_max,
            entries: self
                .entries
                .iter()
                .map(|(k, &dim)| ChartEntryDoc {
                    w: k.w,
                    s: k.s,
                    stem: k.stem,
                    dim,
                })
                .collect(),
            edge_uncertain: self.edge_uncertain.iter().copied().collect(),
        };
        serde_json::to_string_pretty(&doc).expect("chart serialization")
    }

    pub fn from_json(text: &str) -> Result<ExtChart, serde_json::Error> {
        let doc: ChartDoc = serde_json::from_str(text)?;
        let mut chart = ExtChart::new(doc.p, doc.n, doc.w_max, doc.s_max);
        for e in doc.entries {
            chart.insert(
                ChartKey {
                    w: e.w,
                    s: e.s,
                    stem: e.stem,
                },
                e.dim,
            );
        }
        chart.edge_uncertain = doc.edge_uncertain.into_iter().collect();
        Ok(chart)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("w,s,stem,dim\n");
        for (k, dim) in &self.entries {
            let _ = writeln!(out, "{},{},{},{}", k.w, k.s, k.stem, dim);
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "Ext chart p={} n={} w<={} s<={}\n",
            self.p, self.n, self.w_max, self.s_max
        );
        let mut last_w = None;
        for (k, dim) in &self.entries {
            if last_w != Some(k.w) {
                let _ = writeln!(out, "weight {}", k.w);
                last_w = Some(k.w);
            }
            let _ = writeln!(out, "  s={:<3} stem={:<6} dim={}", k.s, k.stem, dim);
        }
        if !self.edge_uncertain.is_empty() {
            let _ = writeln!(out, "edge-uncertain spots: {}", self.edge_uncertain.len());
        }
        out
    }

    /// Render the aggregated chart as SVG: a dot per (stem, s) labelled with
    /// the dimension when it exceeds one, and a line for every certified
    /// v_i-multiplication in `lines` (entries `(s, stem, i)`).
    pub fn to_svg(&self, lines: &[(i64, i64, u32)]) -> String {
        let agg = self.aggregated();
        let cell = 28i64;
        let margin = 46i64;
        let (mut stem_lo, mut stem_hi, mut s_hi) = (0i64, 0i64, 0i64);
        for &(s, stem) in agg.keys() {
            stem_lo = stem_lo.min(stem);
            stem_hi = stem_hi.max(stem);
            s_hi = s_hi.max(s);
        }
        let width = margin * 2 + (stem_hi - stem_lo + 1) * cell;
        let height = margin * 2 + (s_hi + 1) * cell;
        let x = |stem: i64| margin + (stem - stem_lo) * cell + cell / 2;
        let y = |s: i64| height - margin - s * cell - cell / 2;
        let mut svg = format!(
            r#"<svg version="1.1" xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
        );
        svg.push('\n');
        let _ = writeln!(
            svg,
            r#"<rect width="{width}" height="{height}" fill="white"/>"#
        );
        // light grid
        for s in 0..=s_hi {
            let _ = writeln!(
                svg,
                r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#eeeeee"/>"##,
                margin,
                y(s),
                width - margin,
                y(s)
            );
        }
        for stem in stem_lo..=stem_hi {
            let _ = writeln!(
                svg,
                r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#eeeeee"/>"##,
                x(stem),
                margin,
                x(stem),
                height - margin
            );
        }
        // axis labels every few columns
        for stem in (stem_lo..=stem_hi).step_by(2) {
            let _ = writeln!(
                svg,
                r##"<text x="{}" y="{}" font-size="10" text-anchor="middle" fill="#666666">{stem}</text>"##,
                x(stem),
                height - margin / 2
            );
        }
        for s in 0..=s_hi {
            let _ = writeln!(
                svg,
                r##"<text x="{}" y="{}" font-size="10" text-anchor="middle" fill="#666666">{s}</text>"##,
                margin / 2,
                y(s) + 3
            );
        }
        let palette = ["#888888", "#4477cc", "#cc5544", "#44aa66", "#aa66cc"];
        for &(s, stem, i) in lines {
            let color = palette[(i as usize) % palette.len()];
            let p = self.p as i64;
            let _ = writeln!(
                svg,
                r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-width="1"/>"#,
                x(stem),
                y(s),
                x(stem + 2 * p.pow(i) - 2),
                y(s + 1)
            );
        }
        for (&(s, stem), &dim) in &agg {
            let _ = writeln!(
                svg,
                r#"<circle cx="{}" cy="{}" r="3.5" fill="black"/>"#,
                x(stem),
                y(s)
            );
            if dim > 1 {
                let _ = writeln!(
                    svg,
                    r#"<text x="{}" y="{}" font-size="9" fill="black">{dim}</text>"#,
                    x(stem) + 5,
                    y(s) - 4
                );
            }
        }
        svg.push_str("</svg>\n");
        svg
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExtChart {
        let mut c = ExtChart::new(3, 2, 162, 8);
        c.insert(
            ChartKey {
                w: 162,
                s: 1,
                stem: -4,
            },
            1,
        );
        c.insert(
            ChartKey {
                w: 0,
                s: 0,
                stem: 0,
            },
            1,
        );
        c.insert(
            ChartKey {
                w: 0,
                s: 2,
                stem: 8,
            },
            3,
        );
        c
    }

    #[test]
    fn json_round_trip_is_identity() {
        let c = sample();
        let json = c.to_json();
        let back = ExtChart::from_json(&json).unwrap();
        assert_eq!(back, c);
        // and the serialization itself is stable
        assert_eq!(back.to_json(), json);
    }

    #[test]
    fn json_has_expected_shape() {
        let c = sample();
        let v: serde_json::Value = serde_json::from_str(&c.to_json()).unwrap();
        assert_eq!(v["p"], 3);
        assert_eq!(v["n"], 2);
        assert!(v["entries"].is_array());
        assert!(v["edge_uncertain"].is_array());
        let entry = &v["entries"][2];
        assert_eq!(entry["w"], 162);
        assert_eq!(entry["s"], 1);
        assert_eq!(entry["stem"], -4);
        assert_eq!(entry["dim"], 1);
    }

    #[test]
    fn csv_and_svg_render() {
        let c = sample();
        let csv = c.to_csv();
        assert!(csv.starts_with("w,s,stem,dim\n"));
        assert!(csv.contains("162,1,-4,1"));
        let svg = c.to_svg(&[(0, 0, 1)]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("circle"));
        assert!(svg.contains("line"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn aggregation_sums_weights() {
        let mut c = ExtChart::new(2, 0, 8, 4);
        c.insert(
            ChartKey {
                w: 4,
                s: 1,
                stem: -3,
            },
            1,
        );
        c.insert(
            ChartKey {
                w: 8,
                s: 1,
                stem: -3,
            },
            2,
        );
        assert_eq!(c.aggregated().get(&(1, -3)), Some(&3));
    }
}
