//! Hand-rolled SVG line charts of sweep results.
//!
//! One panel per `(decoder, s)`, x = ε, y = mean err/k, one series per `p`
//! plus a dashed uncoded line. Output depends only on the rows given.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::CsvRow;
use crate::error::{Error, Result};

const PANEL_W: f64 = 380.0;
const PANEL_H: f64 = 300.0;
const MARGIN_L: f64 = 56.0;
const MARGIN_R: f64 = 16.0;
const MARGIN_T: f64 = 28.0;
const MARGIN_B: f64 = 44.0;
const LEGEND_H: f64 = 24.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

fn fmt_num(x: f64) -> String {
    let s = format!("{x:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.to_string() }
}

fn nice_ticks(max: f64) -> Vec<f64> {
    let raw = max / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let n = (max / step - 1e-9).ceil().max(1.0) as usize;
    (0..=n).map(|i| i as f64 * step).collect()
}

struct Panel<'a> {
    decoder: &'a str,
    s: usize,
    // p bits -> points sorted by ε
    series: BTreeMap<u64, Vec<(f64, f64)>>,
    epsilons: Vec<f64>,
}

fn panels(rows: &[CsvRow]) -> Vec<Panel<'_>> {
    let mut map: BTreeMap<(&str, usize), Panel> = BTreeMap::new();
    for row in rows {
        let panel = map.entry((row.decoder.as_str(), row.s)).or_insert_with(|| Panel {
            decoder: &row.decoder,
            s: row.s,
            series: BTreeMap::new(),
            epsilons: Vec::new(),
        });
        panel
            .series
            .entry(row.p.to_bits())
            .or_default()
            .push((row.epsilon, row.mean_err_over_k));
        panel.epsilons.push(row.epsilon);
    }
    let mut out: Vec<Panel> = map.into_values().collect();
    for p in &mut out {
        for pts in p.series.values_mut() {
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        }
        p.epsilons.sort_by(f64::total_cmp);
        p.epsilons.dedup();
    }
    out
}

/// Renders `rows` as an SVG document.
pub fn render_svg(rows: &[CsvRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::invalid("results CSV has no rows to plot"));
    }
    let panels = panels(rows);
    let width = PANEL_W * panels.len() as f64;
    let height = PANEL_H + LEGEND_H;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#,
        w = fmt_num(width),
        h = fmt_num(height)
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);

    for (pi, panel) in panels.iter().enumerate() {
        let x0 = pi as f64 * PANEL_W + MARGIN_L;
        let x1 = (pi + 1) as f64 * PANEL_W - MARGIN_R;
        let y0 = PANEL_H - MARGIN_B;
        let y1 = MARGIN_T;
        let eps_max = panel.epsilons.last().copied().unwrap_or(1.0).max(1e-12);
        let y_max = panel
            .series
            .values()
            .flatten()
            .map(|&(_, y)| y)
            .chain(panel.epsilons.iter().copied())
            .fold(0.0, f64::max)
            .max(1e-12);
        let ticks_y = nice_ticks(y_max);
        let y_top = *ticks_y.last().unwrap();
        let sx = |e: f64| x0 + (x1 - x0) * e / eps_max;
        let sy = |v: f64| y0 - (y0 - y1) * v / y_top;

        let _ = writeln!(
            svg,
            r#"<text x="{}" y="18" text-anchor="middle" font-size="13">{} s = {}</text>"#,
            fmt_num((x0 + x1) / 2.0),
            panel.decoder,
            panel.s
        );
        let _ = writeln!(
            svg,
            r#"<path d="M{} {} V{} H{}" fill="none" stroke="black"/>"#,
            fmt_num(x0),
            fmt_num(y1),
            fmt_num(y0),
            fmt_num(x1)
        );
        for &t in &ticks_y {
            let _ = writeln!(
                svg,
                r##"<line x1="{a}" y1="{y}" x2="{b}" y2="{y}" stroke="#ddd"/><text x="{c}" y="{ty}" text-anchor="end">{t}</text>"##,
                a = fmt_num(x0),
                b = fmt_num(x1),
                c = fmt_num(x0 - 4.0),
                y = fmt_num(sy(t)),
                ty = fmt_num(sy(t) + 4.0),
                t = fmt_num(t)
            );
        }
        for &e in &panel.epsilons {
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
                fmt_num(sx(e)),
                fmt_num(y0 + 14.0),
                fmt_num(e)
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">epsilon</text>"#,
            fmt_num((x0 + x1) / 2.0),
            fmt_num(y0 + 30.0)
        );
        let _ = writeln!(
            svg,
            r#"<text transform="translate({} {}) rotate(-90)" text-anchor="middle">mean err / k</text>"#,
            fmt_num(x0 - 42.0),
            fmt_num((y0 + y1) / 2.0)
        );

        let uncoded: Vec<String> = panel
            .epsilons
            .iter()
            .map(|&e| format!("{},{}", fmt_num(sx(e)), fmt_num(sy(e))))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="black" stroke-dasharray="5,4"/>"#,
            uncoded.join(" ")
        );
        for (ci, pts) in panel.series.values().enumerate() {
            let color = PALETTE[ci % PALETTE.len()];
            let pts: Vec<String> = pts
                .iter()
                .map(|&(e, y)| format!("{},{}", fmt_num(sx(e)), fmt_num(sy(y))))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                pts.join(" ")
            );
        }

        let mut lx = pi as f64 * PANEL_W + 8.0;
        let ly = PANEL_H + 8.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black" stroke-dasharray="5,4"/><text x="{}" y="{}">uncoded</text>"#,
            fmt_num(lx),
            fmt_num(ly),
            fmt_num(lx + 16.0),
            fmt_num(ly),
            fmt_num(lx + 19.0),
            fmt_num(ly + 4.0)
        );
        lx += 72.0;
        for (ci, &pbits) in panel.series.keys().enumerate() {
            let color = PALETTE[ci % PALETTE.len()];
            let _ = writeln!(
                svg,
                r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-width="1.5"/><text x="{}" y="{}">p={}</text>"#,
                fmt_num(lx),
                fmt_num(ly),
                fmt_num(lx + 16.0),
                fmt_num(ly),
                fmt_num(lx + 19.0),
                fmt_num(ly + 4.0),
                fmt_num(f64::from_bits(pbits))
            );
            lx += 60.0;
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(s: usize, p: f64, eps: f64, y: f64) -> CsvRow {
        CsvRow {
            family: "SBC".into(),
            k: 100,
            s,
            p,
            q: 0.0,
            epsilon: eps,
            r: 80,
            decoder: "OPTIMAL".into(),
            straggler_model: "RANDOM".into(),
            trials: 1,
            mean_err: y * 100.0,
            mean_err_over_k: y,
            stddev_err: 0.0,
            bound_value: None,
            bound_applicable: false,
            violation_fraction: None,
            uncoded: eps,
            master_seed: 0,
        }
    }

    #[test]
    fn one_panel_per_s() {
        let rows = vec![
            row(5, 0.9, 0.1, 0.01),
            row(5, 0.9, 0.2, 0.02),
            row(10, 1.0, 0.1, 0.0),
            row(10, 1.0, 0.2, 0.001),
        ];
        let svg = render_svg(&rows).unwrap();
        assert!(svg.contains("OPTIMAL s = 5"));
        assert!(svg.contains("OPTIMAL s = 10"));
        assert_eq!(svg.matches("stroke-dasharray").count(), 4);
        assert_eq!(svg, render_svg(&rows).unwrap());
    }

    #[test]
    fn empty_is_an_error() {
        assert!(render_svg(&[]).is_err());
    }

    #[test]
    fn ticks_cover_range() {
        let t = nice_ticks(0.37);
        assert_eq!(t.first(), Some(&0.0));
        assert!(*t.last().unwrap() >= 0.37 - 1e-12);
    }
}
