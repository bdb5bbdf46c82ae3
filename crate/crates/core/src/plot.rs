//! Static SVG rendering of a trajectory log: states with references, inputs,
//! and geodesic length in three stacked panels.

use std::fmt::Write as _;

use crate::sim::TrajectoryLog;

const WIDTH: f64 = 760.0;
const PANEL_H: f64 = 200.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 30.0;
const GAP: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

struct Series<'a> {
    label: String,
    values: Vec<f64>,
    color: &'a str,
    dashed: bool,
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.1e}")
    } else {
        format!("{v:.3}")
    }
}

fn panel(out: &mut String, top: f64, title: &str, steps: usize, series: &[Series]) {
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let (mut lo, mut hi) = series
        .iter()
        .flat_map(|s| s.values.iter().copied())
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        lo -= 0.5;
        hi += 0.5;
    }
    let pad = 0.05 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);
    let sx = |k: f64| MARGIN_L + plot_w * k / (steps.max(2) - 1) as f64;
    let sy = |v: f64| top + PANEL_H * (hi - v) / (hi - lo);

    writeln!(
        out,
        r##"<rect x="{MARGIN_L}" y="{top}" width="{plot_w}" height="{PANEL_H}" fill="none" stroke="#444"/>"##
    )
    .unwrap();
    writeln!(out, r#"<text x="{MARGIN_L}" y="{:.1}" font-size="13">{title}</text>"#, top - 8.0).unwrap();
    for i in 0..=4 {
        let v = lo + (hi - lo) * i as f64 / 4.0;
        let y = sy(v);
        writeln!(
            out,
            r##"<line x1="{:.1}" y1="{y:.1}" x2="{MARGIN_L}" y2="{y:.1}" stroke="#444"/><text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{}</text>"##,
            MARGIN_L - 4.0,
            MARGIN_L - 6.0,
            y + 3.0,
            fmt_tick(v)
        )
        .unwrap();
    }
    for (i, s) in series.iter().enumerate() {
        let mut pts = String::new();
        for (k, v) in s.values.iter().enumerate() {
            if v.is_finite() {
                write!(pts, "{:.2},{:.2} ", sx(k as f64), sy(*v)).unwrap();
            }
        }
        let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        writeln!(
            out,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5"{dash} points="{}"/>"#,
            s.color,
            pts.trim_end()
        )
        .unwrap();
        let lx = MARGIN_L + plot_w - 110.0;
        let ly = top + 16.0 + 14.0 * i as f64;
        writeln!(
            out,
            r#"<line x1="{lx:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{}"{dash}/><text x="{:.1}" y="{ly:.1}" font-size="11">{}</text>"#,
            ly - 4.0,
            lx + 20.0,
            ly - 4.0,
            s.color,
            lx + 25.0,
            s.label
        )
        .unwrap();
    }
}

pub fn trajectory_svg(log: &TrajectoryLog) -> String {
    let steps = log.rows.len();
    let (n, m) = log.rows.first().map_or((0, 0), |r| (r.x.len(), r.u.len()));
    let column = |f: &dyn Fn(&crate::sim::TrajectoryRow) -> f64| log.rows.iter().map(f).collect::<Vec<f64>>();

    let mut states = Vec::new();
    for i in 0..n {
        let color = COLORS[i % COLORS.len()];
        states.push(Series {
            label: format!("x{}", i + 1),
            values: column(&|r| r.x[i]),
            color,
            dashed: false,
        });
        states.push(Series {
            label: format!("x{}*", i + 1),
            values: column(&|r| r.x_star[i]),
            color,
            dashed: true,
        });
    }
    let inputs: Vec<Series> = (0..m)
        .map(|j| Series {
            label: format!("u{}", j + 1),
            values: column(&|r| r.u[j]),
            color: COLORS[(n + j) % COLORS.len()],
            dashed: false,
        })
        .collect();
    let length = [Series {
        label: "d".into(),
        values: column(&|r| r.length),
        color: COLORS[0],
        dashed: false,
    }];

    let height = MARGIN_T + 3.0 * PANEL_H + 2.0 * GAP + 40.0;
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif">"#
    )
    .unwrap();
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    let tops: Vec<f64> = (0..3).map(|i| MARGIN_T + i as f64 * (PANEL_H + GAP)).collect();
    panel(&mut out, tops[0], "state and reference", steps, &states);
    panel(&mut out, tops[1], "input", steps, &inputs);
    panel(&mut out, tops[2], "geodesic length", steps, &length);
    writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">step k</text>"#,
        MARGIN_L + (WIDTH - MARGIN_L - MARGIN_R) / 2.0,
        tops[2] + PANEL_H + 30.0
    )
    .unwrap();
    out.push_str("</svg>\n");
    out
}
