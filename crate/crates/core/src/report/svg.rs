//! SVG rendering of stream plots and convergence plots.
//!
//! Output is built with fixed number formatting so the same input always
//! gives the same bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::hen::HenDesign;
use crate::solver::ConvergenceTrace;
use crate::superstructure::Side;

pub const WIDTH: f64 = 1200.0;
pub const LANE_HEIGHT: f64 = 80.0;
const MARGIN_LEFT: f64 = 140.0;
const MARGIN_RIGHT: f64 = 60.0;
const HOT: &str = "#c0392b";
const COLD: &str = "#2c6fbb";
const GLYPH: &str = "#d9d9d9";
const GLYPH_R: f64 = 9.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn header(out: &mut String, height: f64, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{height}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text class="title" x="{}" y="18" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

/// Lanes of a stream plot: one per stream, then one row per conventional
/// utility that appears in the design.
pub fn stream_plot_lanes(design: &HenDesign) -> (usize, Vec<String>) {
    let mut utils: Vec<String> = design.utilities.iter().map(|u| u.utility.clone()).collect();
    utils.sort();
    utils.dedup();
    (design.streams.len(), utils)
}

/// Stream plot: hot lanes in red, cold lanes in blue, temperature positions
/// left to right. Each match is a pair of connected circles, each utility
/// exchanger an unconnected circle at the stream end. A stream with several
/// matches in one interval is drawn as parallel branches there.
pub fn render_stream_plot(design: &HenDesign) -> String {
    let (n_streams, util_rows) = stream_plot_lanes(design);
    let lanes = (n_streams + util_rows.len()).max(1);
    let height = LANE_HEIGHT * lanes as f64;
    let positions = design.n_stages + 2;
    let intervals = design.n_stages + 1;
    let x_pos = |k: usize| -> f64 {
        MARGIN_LEFT + (WIDTH - MARGIN_LEFT - MARGIN_RIGHT) * (k - 1) as f64 / (positions - 1) as f64
    };
    // lane centre lines leave the top 30 px for the title
    let usable = height - 30.0;
    let lane_y = |i: usize| 30.0 + usable * (i as f64 + 0.5) / lanes as f64;
    let lane_of: BTreeMap<&str, usize> = design
        .streams
        .iter()
        .enumerate()
        .map(|(i, s)| (s.id.as_str(), i))
        .collect();

    let title = format!(
        "{}: TAC = {:.2} {}/yr",
        design.case, design.tac_exact, design.currency
    );
    let mut out = String::new();
    header(&mut out, height, &title);

    for k in 1..=intervals {
        let _ = writeln!(
            out,
            r##"<text class="stage" x="{:.2}" y="30" text-anchor="middle" fill="#777">k={k}</text>"##,
            0.5 * (x_pos(k) + x_pos(k + 1))
        );
    }
    for k in 1..=positions {
        let x = x_pos(k);
        let _ = writeln!(
            out,
            r##"<line x1="{x:.2}" y1="24" x2="{x:.2}" y2="{height:.2}" stroke="#eeeeee" stroke-dasharray="4 4"/>"##
        );
    }

    // branch offsets per (stream, interval)
    let mut per_interval: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (mi, m) in design.matches.iter().enumerate() {
        for id in [&m.hot, &m.cold] {
            if let Some(&lane) = lane_of.get(id.as_str()) {
                per_interval.entry((lane, m.stage)).or_default().push(mi);
            }
        }
    }
    let branch_gap = (LANE_HEIGHT * 0.5).min(usable / lanes as f64 * 0.5);
    let branch_y = |lane: usize, k: usize, mi: usize| -> f64 {
        let base = lane_y(lane);
        match per_interval.get(&(lane, k)) {
            Some(list) if list.len() > 1 => {
                let j = list.iter().position(|&x| x == mi).unwrap_or(0);
                let n = list.len() as f64;
                base + branch_gap * ((j as f64) / (n - 1.0) - 0.5)
            }
            _ => base,
        }
    };

    for (i, s) in design.streams.iter().enumerate() {
        let y = lane_y(i);
        let color = if s.side == Side::Hot { HOT } else { COLD };
        let (x0, x1) = (x_pos(1) - 40.0, x_pos(positions) + 40.0);
        let _ = writeln!(
            out,
            r#"<g class="lane" data-stream="{id}"><line x1="{x0:.2}" y1="{y:.2}" x2="{x1:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"/>"#,
            id = escape(&s.id)
        );
        // arrow head at the outlet end
        let (tip, dir) = if s.side == Side::Hot { (x1, -1.0) } else { (x0, 1.0) };
        let _ = writeln!(
            out,
            r#"<path d="M{tip:.2},{y:.2} L{:.2},{:.2} L{:.2},{:.2} Z" fill="{color}"/>"#,
            tip + 8.0 * dir,
            y - 4.0,
            tip + 8.0 * dir,
            y + 4.0
        );
        let flow_note = if s.is_utility_stream { format!(" F={:.3}", s.flow) } else { String::new() };
        let _ = writeln!(
            out,
            r#"<text x="10" y="{:.2}" fill="{color}">{}{}</text>"#,
            y + 4.0,
            escape(&s.id),
            flow_note
        );
        for (k, t) in s.temperatures.iter().enumerate() {
            let _ = writeln!(
                out,
                r##"<text class="temp" x="{:.2}" y="{:.2}" text-anchor="middle" fill="#333">{t:.1}</text>"##,
                x_pos(k + 1),
                y - 6.0
            );
        }
        for k in 1..=intervals {
            if let Some(list) = per_interval.get(&(i, k)) {
                if list.len() > 1 {
                    let (xa, xb) = (x_pos(k) + 6.0, x_pos(k + 1) - 6.0);
                    for &mi in list {
                        let yb = branch_y(i, k, mi);
                        let _ = writeln!(
                            out,
                            r#"<polyline class="branch" points="{:.2},{y:.2} {xa:.2},{yb:.2} {xb:.2},{yb:.2} {:.2},{y:.2}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                            x_pos(k),
                            x_pos(k + 1)
                        );
                    }
                }
            }
        }
        let _ = writeln!(out, "</g>");
    }

    // matches, spread over each interval so connectors never overlap
    let mut by_stage: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (mi, m) in design.matches.iter().enumerate() {
        by_stage.entry(m.stage).or_default().push(mi);
    }
    for (&k, list) in &by_stage {
        let n = list.len() as f64;
        for (j, &mi) in list.iter().enumerate() {
            let m = &design.matches[mi];
            let (Some(&lh), Some(&lc)) = (lane_of.get(m.hot.as_str()), lane_of.get(m.cold.as_str())) else {
                continue;
            };
            let x = x_pos(k) + (x_pos(k + 1) - x_pos(k)) * (j as f64 + 1.0) / (n + 1.0);
            let (yh, yc) = (branch_y(lh, k, mi), branch_y(lc, k, mi));
            let _ = writeln!(
                out,
                r##"<g class="hex" data-hot="{}" data-cold="{}" data-stage="{k}"><line x1="{x:.2}" y1="{yh:.2}" x2="{x:.2}" y2="{yc:.2}" stroke="#555"/><circle cx="{x:.2}" cy="{yh:.2}" r="{GLYPH_R}" fill="{GLYPH}" stroke="#555"/><circle cx="{x:.2}" cy="{yc:.2}" r="{GLYPH_R}" fill="{GLYPH}" stroke="#555"/><text x="{:.2}" y="{:.2}" fill="#333">{:.2}</text></g>"##,
                escape(&m.hot),
                escape(&m.cold),
                x + GLYPH_R + 2.0,
                0.5 * (yh + yc) + 4.0,
                m.duty
            );
        }
    }

    for u in &design.utilities {
        let Some(&lane) = lane_of.get(u.stream.as_str()) else { continue };
        let y = lane_y(lane);
        // coolers at the hot stream's outlet end, heaters at the cold stream's outlet end
        let x = match u.side {
            Side::Cold => 0.5 * (x_pos(positions - 1) + x_pos(positions)),
            Side::Hot => 0.5 * (x_pos(1) + x_pos(2)),
        };
        let color = if u.side == Side::Hot { HOT } else { COLD };
        let _ = writeln!(
            out,
            r##"<g class="utility" data-utility="{}" data-stream="{}"><circle cx="{x:.2}" cy="{y:.2}" r="{GLYPH_R}" fill="white" stroke="{color}" stroke-width="2"/><text x="{x:.2}" y="{:.2}" text-anchor="middle" fill="#333">{} {:.2}</text></g>"##,
            escape(&u.utility),
            escape(&u.stream),
            y + GLYPH_R + 12.0,
            escape(&u.utility),
            u.duty
        );
    }

    for (r, id) in util_rows.iter().enumerate() {
        let y = lane_y(n_streams + r);
        let recs: Vec<_> = design.utilities.iter().filter(|u| &u.utility == id).collect();
        let duty: f64 = recs.iter().map(|u| u.duty).sum();
        let area: f64 = recs.iter().map(|u| u.area).sum();
        let _ = writeln!(
            out,
            r##"<text class="utility-row" x="10" y="{:.2}" fill="#333">{}: {} exchanger(s), {duty:.2} kW, {area:.2} m²</text>"##,
            y + 4.0,
            escape(id),
            recs.len()
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Convergence plot on a log-time axis: incumbent and bound curves, with the
/// final gap written in the corner.
pub fn render_convergence(trace: &ConvergenceTrace, title: &str) -> String {
    let height = 480.0;
    let (left, right, top, bottom) = (90.0, WIDTH - 40.0, 50.0, height - 50.0);
    let mut out = String::new();
    header(&mut out, height, title);

    let times: Vec<f64> = trace.samples.iter().map(|p| p.time_s.max(1e-2)).collect();
    let values: Vec<f64> = trace
        .samples
        .iter()
        .flat_map(|p| [p.incumbent, p.bound])
        .flatten()
        .filter(|v| v.is_finite())
        .collect();
    if times.is_empty() || values.is_empty() {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">no samples</text>"#,
            WIDTH / 2.0,
            height / 2.0
        );
        out.push_str("</svg>\n");
        return out;
    }
    let (mut t0, mut t1) = times
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &t| (a.min(t.log10()), b.max(t.log10())));
    if t1 - t0 < 1e-9 {
        t0 -= 0.5;
        t1 += 0.5;
    }
    let (mut v0, mut v1) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let pad = if v1 - v0 < 1e-9 { v0.abs().max(1.0) * 0.01 } else { 0.05 * (v1 - v0) };
    v0 -= pad;
    v1 += pad;
    let px = |t: f64| left + (right - left) * (t.max(1e-2).log10() - t0) / (t1 - t0);
    let py = |v: f64| bottom - (bottom - top) * (v - v0) / (v1 - v0);

    let _ = writeln!(
        out,
        r##"<g class="axes" stroke="#333"><line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}"/><line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}"/></g>"##
    );
    for e in t0.ceil() as i32..=t1.floor() as i32 {
        let x = left + (right - left) * (e as f64 - t0) / (t1 - t0);
        let _ = writeln!(
            out,
            r##"<line x1="{x:.2}" y1="{bottom}" x2="{x:.2}" y2="{:.2}" stroke="#333"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{e}</text>"##,
            bottom + 5.0,
            bottom + 18.0
        );
    }
    for i in 0..=4 {
        let v = v0 + (v1 - v0) * i as f64 / 4.0;
        let y = py(v);
        let _ = writeln!(
            out,
            r##"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.4e}</text>"##,
            left - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">time / s (log)</text>"#,
        0.5 * (left + right),
        height - 12.0
    );

    for (class, color, get) in [
        ("incumbent", "#c0392b", (|p: &crate::solver::TracePoint| p.incumbent) as fn(&_) -> _),
        ("bound", "#2c6fbb", |p: &crate::solver::TracePoint| p.bound),
    ] {
        let pts: Vec<(f64, f64)> = trace
            .samples
            .iter()
            .filter_map(|p| get(p).filter(|v: &f64| v.is_finite()).map(|v| (px(p.time_s), py(v))))
            .collect();
        if pts.is_empty() {
            continue;
        }
        let mut line = String::new();
        for (i, (x, y)) in pts.iter().enumerate() {
            if i > 0 {
                line.push(' ');
            }
            let _ = write!(line, "{x:.2},{y:.2}");
        }
        let _ = writeln!(
            out,
            r#"<g class="{class}"><polyline points="{line}" fill="none" stroke="{color}" stroke-width="2"/>"#
        );
        for (x, y) in &pts {
            let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{color}"/>"#);
        }
        let _ = writeln!(out, "</g>");
    }
    let gap = trace.last().and_then(|p| p.gap_pct());
    let label = match gap {
        Some(g) => format!("gap = {g:.4} %"),
        None => "gap = n/a".to_string(),
    };
    let _ = writeln!(
        out,
        r#"<text class="gap" x="{:.2}" y="{:.2}" text-anchor="end" font-size="13">{label}</text>"#,
        right,
        top - 10.0
    );
    out.push_str("</svg>\n");
    out
}
