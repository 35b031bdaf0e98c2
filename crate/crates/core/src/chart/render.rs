use std::fmt::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::geometry::{
    fit_text, format_tick, nice_ticks, plan, text_box, text_width, Anchor, Plan, Rect, ANNOTATION_FONT, TICK_FONT,
};
use super::{ChartError, ChartSpec, ChartType};

const FONTS: [&str; 4] = ["Noto Sans CJK SC", "Source Han Sans SC", "Microsoft YaHei", "PingFang SC"];
const GRID_DASH: [&str; 3] = ["none", "4 2", "2 3"];

pub(crate) fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

struct Svg {
    out: String,
}

impl Svg {
    #[allow(clippy::too_many_arguments)]
    fn text(&mut self, role: &str, text: &str, size: f64, x: f64, baseline: f64, anchor: Anchor, bbox: Rect) {
        let _ = writeln!(
            self.out,
            r#"<text data-role="{role}" data-bbox="{}" x="{x:.2}" y="{baseline:.2}" font-size="{size}" text-anchor="{}">{}</text>"#,
            bbox.attr(),
            anchor.svg(),
            escape(text)
        );
    }

    fn placed(&mut self, role: &str, text: &str, size: f64, x: f64, baseline: f64, anchor: Anchor) {
        let bbox = text_box(text, size, x, baseline, anchor);
        self.text(role, text, size, x, baseline, anchor, bbox);
    }

    fn rect(&mut self, r: Rect, fill: &str) {
        let _ = writeln!(
            self.out,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
            r.x0,
            r.y0,
            r.width().max(0.0),
            r.height().max(0.0)
        );
    }

    fn line(&mut self, x0: f64, y0: f64, x1: f64, y1: f64, stroke: &str, dash: &str) {
        let dash_attr = if dash == "none" { String::new() } else { format!(r#" stroke-dasharray="{dash}""#) };
        let _ = writeln!(
            self.out,
            r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y1:.2}" stroke="{stroke}"{dash_attr}/>"#
        );
    }
}

/// Maps data values to pixel rows of the plot area.
struct ValueAxis {
    lo: f64,
    hi: f64,
    plot: Rect,
}

impl ValueAxis {
    fn y(&self, v: f64) -> f64 {
        self.plot.y1 - (v - self.lo) / (self.hi - self.lo) * self.plot.height()
    }
}

fn color(spec: &ChartSpec, i: usize) -> &str {
    &spec.colors[i % spec.colors.len()]
}

/// Category tick labels under bands, thinned and shortened so none overlap or leave the canvas.
fn category_ticks(svg: &mut Svg, labels: &[&str], plot: Rect, canvas: Rect) {
    if labels.is_empty() {
        return;
    }
    let band = plot.width() / labels.len() as f64;
    let widest = labels.iter().map(|l| text_width(l, TICK_FONT)).fold(0.0, f64::max).min(8.0 * TICK_FONT) + 6.0;
    let stride = (widest / band).ceil().max(1.0) as usize;
    let max_w = (stride as f64 * band - 6.0).max(TICK_FONT);
    let baseline = plot.y1 + 4.0 + 0.8 * TICK_FONT;
    for (i, label) in labels.iter().enumerate().step_by(stride) {
        let text = fit_text(label, TICK_FONT, max_w);
        let w = text_width(&text, TICK_FONT);
        let cx = (plot.x0 + (i as f64 + 0.5) * band).clamp(canvas.x0 + w / 2.0, canvas.x1 - w / 2.0);
        svg.placed("tick", &text, TICK_FONT, cx, baseline, Anchor::Middle);
    }
}

fn value_ticks(svg: &mut Svg, p: &Plan, axis: &ValueAxis, dash: &str) {
    for t in &p.y_ticks {
        let y = axis.y(*t);
        svg.line(p.plot.x0, y, p.plot.x1, y, "#DDDDDD", dash);
        svg.placed("tick", &format_tick(*t), TICK_FONT, p.plot.x0 - 4.0, y + 0.3 * TICK_FONT, Anchor::End);
    }
}

fn axes(svg: &mut Svg, plot: Rect) {
    svg.line(plot.x0, plot.y1, plot.x1, plot.y1, "#333333", "none");
    svg.line(plot.x0, plot.y0, plot.x0, plot.y1, "#333333", "none");
}

fn bars(svg: &mut Svg, spec: &ChartSpec, p: &Plan, axis: &ValueAxis) {
    let cats = spec.categories();
    let band = p.plot.width() / cats.len() as f64;
    let stacked = spec.chart_type == ChartType::StackedBar;
    let gap = if spec.chart_type == ChartType::Histogram { 0.0 } else { 0.15 * band };
    let groups = if stacked { 1 } else { spec.series.len() };
    let bw = (band - 2.0 * gap) / groups as f64;
    for i in 0..cats.len() {
        let mut base = 0.0;
        for (si, s) in spec.series.iter().enumerate() {
            let v = s.points[i].y;
            let x0 = p.plot.x0 + i as f64 * band + gap + if stacked { 0.0 } else { si as f64 * bw };
            let (from, to) = if stacked { (base, base + v) } else { (0.0, v) };
            base += v;
            let (ya, yb) = (axis.y(from), axis.y(to));
            svg.rect(Rect::new(x0, ya.min(yb), x0 + bw, ya.max(yb)), color(spec, si));
        }
    }
    category_ticks(svg, &cats, p.plot, p.canvas);
}

fn lines(svg: &mut Svg, spec: &ChartSpec, p: &Plan, axis: &ValueAxis) {
    let cats = spec.categories();
    let band = p.plot.width() / cats.len() as f64;
    for (si, s) in spec.series.iter().enumerate() {
        let pts: Vec<(f64, f64)> =
            s.points.iter().enumerate().map(|(i, pt)| (p.plot.x0 + (i as f64 + 0.5) * band, axis.y(pt.y))).collect();
        let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        if spec.chart_type == ChartType::Area {
            let base = axis.y(axis.lo.max(0.0).min(axis.hi));
            let (first, last) = (pts[0].0, pts[pts.len() - 1].0);
            let _ = writeln!(
                svg.out,
                r#"<polygon points="{first:.2},{base:.2} {} {last:.2},{base:.2}" fill="{}" fill-opacity="0.6"/>"#,
                path.join(" "),
                color(spec, si)
            );
        }
        let _ = writeln!(
            svg.out,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
            path.join(" "),
            color(spec, si)
        );
        for (x, y) in &pts {
            let _ = writeln!(svg.out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{}"/>"#, color(spec, si));
        }
    }
    category_ticks(svg, &cats, p.plot, p.canvas);
}

fn scatter(svg: &mut Svg, spec: &ChartSpec, p: &Plan, axis: &ValueAxis, dash: &str) {
    let xs: Vec<f64> =
        spec.series.iter().flat_map(|s| &s.points).map(|pt| pt.x.trim().parse::<f64>().unwrap_or(0.0)).collect();
    let (lo, hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)));
    let (lo, hi, ticks) = nice_ticks(lo, hi);
    let px = |x: f64| p.plot.x0 + (x - lo) / (hi - lo) * p.plot.width();
    let mut k = 0;
    for (si, s) in spec.series.iter().enumerate() {
        for pt in &s.points {
            let _ = writeln!(
                svg.out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}"/>"#,
                px(xs[k]),
                axis.y(pt.y),
                color(spec, si)
            );
            k += 1;
        }
    }
    let baseline = p.plot.y1 + 4.0 + 0.8 * TICK_FONT;
    let widest = ticks.iter().map(|t| text_width(&format_tick(*t), TICK_FONT)).fold(0.0, f64::max) + 6.0;
    let spacing = p.plot.width() / (ticks.len().max(2) - 1) as f64;
    let stride = (widest / spacing).ceil().max(1.0) as usize;
    for t in ticks.iter().step_by(stride) {
        let x = px(*t);
        svg.line(x, p.plot.y0, x, p.plot.y1, "#EEEEEE", dash);
        let label = format_tick(*t);
        let w = text_width(&label, TICK_FONT);
        svg.placed("tick", &label, TICK_FONT, x.clamp(w / 2.0, p.canvas.x1 - w / 2.0), baseline, Anchor::Middle);
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos.fract());
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

fn boxes(svg: &mut Svg, spec: &ChartSpec, p: &Plan, axis: &ValueAxis) {
    let band = p.plot.width() / spec.series.len() as f64;
    for (si, s) in spec.series.iter().enumerate() {
        let mut v: Vec<f64> = s.points.iter().map(|pt| pt.y).collect();
        v.sort_by(f64::total_cmp);
        let (q1, med, q3) = (quantile(&v, 0.25), quantile(&v, 0.5), quantile(&v, 0.75));
        let cx = p.plot.x0 + (si as f64 + 0.5) * band;
        let half = 0.3 * band;
        svg.line(cx, axis.y(v[0]), cx, axis.y(v[v.len() - 1]), "#333333", "none");
        svg.rect(Rect::new(cx - half, axis.y(q3), cx + half, axis.y(q1)), color(spec, si));
        svg.line(cx - half, axis.y(med), cx + half, axis.y(med), "#111111", "none");
    }
    let labels: Vec<&str> = spec.series.iter().map(|s| s.label.as_str()).collect();
    category_ticks(svg, &labels, p.plot, p.canvas);
}

fn hex_rgb(c: &str) -> (u8, u8, u8) {
    let n = u32::from_str_radix(&c[1..], 16).unwrap_or(0);
    ((n >> 16) as u8, (n >> 8) as u8, n as u8)
}

fn lerp_color(a: &str, b: &str, t: f64) -> String {
    let (a, b) = (hex_rgb(a), hex_rgb(b));
    let mix = |x: u8, y: u8| (x as f64 + (y as f64 - x as f64) * t).round() as u8;
    format!("#{:02X}{:02X}{:02X}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

fn heatmap(svg: &mut Svg, spec: &ChartSpec, p: &Plan) {
    let cats = spec.categories();
    let (lo, hi) = p.y_range;
    let cw = p.plot.width() / cats.len() as f64;
    let rh = p.plot.height() / spec.series.len() as f64;
    for (ri, s) in spec.series.iter().enumerate() {
        for (ci, pt) in s.points.iter().enumerate() {
            let t = if hi > lo { (pt.y - lo) / (hi - lo) } else { 0.5 };
            let cell = Rect::new(p.plot.x0 + ci as f64 * cw, p.plot.y0 + ri as f64 * rh, 0.0, 0.0);
            let cell = Rect::new(cell.x0, cell.y0, cell.x0 + cw, cell.y0 + rh);
            svg.rect(cell, &lerp_color(color(spec, 0), color(spec, 1), t));
            let label = format_tick(pt.y);
            if text_width(&label, 10.0) + 4.0 <= cw && rh >= 14.0 {
                svg.placed("value-label", &label, 10.0, cell.x0 + cw / 2.0, cell.y0 + rh / 2.0 + 3.5, Anchor::Middle);
            }
        }
        let label = fit_text(&s.label, TICK_FONT, p.tick_label_w - 6.0);
        let baseline = (p.plot.y0 + (ri as f64 + 0.5) * rh + 0.3 * TICK_FONT).max(0.8 * TICK_FONT);
        svg.placed("tick", &label, TICK_FONT, p.plot.x0 - 4.0, baseline, Anchor::End);
    }
    category_ticks(svg, &cats, p.plot, p.canvas);
}

fn pie(svg: &mut Svg, spec: &ChartSpec, p: &Plan) {
    let s = &spec.series[0];
    let total: f64 = s.points.iter().map(|pt| pt.y).sum();
    let cx = (p.plot.x0 + p.plot.x1) / 2.0;
    let cy = (p.plot.y0 + p.plot.y1) / 2.0;
    let r = p.plot.width().min(p.plot.height()) / 2.0 - 4.0;
    if total <= 0.0 {
        let _ = writeln!(svg.out, r##"<circle cx="{cx:.2}" cy="{cy:.2}" r="{r:.2}" fill="none" stroke="#999999"/>"##);
        return;
    }
    let mut angle = -std::f64::consts::FRAC_PI_2;
    for (i, pt) in s.points.iter().enumerate() {
        let frac = pt.y / total;
        if frac <= 0.0 {
            continue;
        }
        let sweep = frac * std::f64::consts::TAU;
        if frac >= 1.0 - 1e-12 {
            let _ = writeln!(svg.out, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="{r:.2}" fill="{}"/>"#, color(spec, i));
        } else {
            let (x0, y0) = (cx + r * angle.cos(), cy + r * angle.sin());
            let end = angle + sweep;
            let (x1, y1) = (cx + r * end.cos(), cy + r * end.sin());
            let large = u8::from(sweep > std::f64::consts::PI);
            let _ = writeln!(
                svg.out,
                r#"<path d="M{cx:.2},{cy:.2} L{x0:.2},{y0:.2} A{r:.2},{r:.2} 0 {large} 1 {x1:.2},{y1:.2} Z" fill="{}"/>"#,
                color(spec, i)
            );
        }
        if frac >= 0.06 {
            let mid = angle + sweep / 2.0;
            let label = format!("{}%", format_tick((frac * 1000.0).round() / 10.0));
            svg.placed(
                "value-label",
                &label,
                10.0,
                cx + 0.62 * r * mid.cos(),
                cy + 0.62 * r * mid.sin() + 3.5,
                Anchor::Middle,
            );
        }
        angle += sweep;
    }
}

/// Renders `spec` to SVG. Output bytes depend only on `(spec, rng_seed)`.
pub fn render(spec: &ChartSpec, rng_seed: u64) -> Result<String, ChartError> {
    spec.check()?;
    let p = plan(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let font = FONTS.choose(&mut rng).copied().unwrap_or(FONTS[0]);
    let dash = GRID_DASH.choose(&mut rng).copied().unwrap_or("none");
    let (w, h) = (spec.width_px, spec.height_px);

    let mut svg = Svg { out: String::new() };
    let _ = writeln!(
        svg.out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="{font}" data-chart-type="{}">"#,
        spec.chart_type
    );
    svg.rect(p.canvas, "#FFFFFF");

    if let Some(t) = &p.title {
        svg.text("title", &t.text, t.size, t.x, t.baseline, t.anchor, t.bbox);
    }

    let axis = ValueAxis { lo: p.y_range.0, hi: p.y_range.1, plot: p.plot };
    let _ = writeln!(svg.out, r#"<g data-role="plot" data-bbox="{}">"#, p.plot.attr());
    match spec.chart_type {
        ChartType::Pie => pie(&mut svg, spec, &p),
        ChartType::Heatmap => heatmap(&mut svg, spec, &p),
        t => {
            value_ticks(&mut svg, &p, &axis, dash);
            match t {
                ChartType::Bar | ChartType::StackedBar | ChartType::Histogram => bars(&mut svg, spec, &p, &axis),
                ChartType::Line | ChartType::Area => lines(&mut svg, spec, &p, &axis),
                ChartType::Scatter => scatter(&mut svg, spec, &p, &axis, dash),
                _ => boxes(&mut svg, spec, &p, &axis),
            }
            axes(&mut svg, p.plot);
        }
    }
    svg.out.push_str("</g>\n");

    if let Some(t) = &p.x_label {
        svg.text("axis-label", &t.text, t.size, t.x, t.baseline, t.anchor, t.bbox);
    }
    if let Some(v) = &p.y_label {
        let _ = writeln!(
            svg.out,
            r#"<text data-role="axis-label" data-bbox="{}" x="{:.2}" y="{:.2}" font-size="{}" text-anchor="middle" transform="rotate(-90 {:.2} {:.2})" dominant-baseline="central">{}</text>"#,
            v.bbox.attr(),
            v.cx,
            v.cy,
            v.size,
            v.cx,
            v.cy,
            escape(&v.text)
        );
    }

    if let Some(legend) = &p.legend {
        let _ = writeln!(svg.out, r#"<g data-role="legend" data-bbox="{}">"#, legend.bbox.attr());
        let b = legend.bbox;
        let _ = writeln!(
            svg.out,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#FFFFFF" stroke="#CCCCCC"/>"##,
            b.x0,
            b.y0,
            b.width(),
            b.height()
        );
        for item in &legend.items {
            svg.out.push_str("<g data-role=\"legend-entry\">\n");
            svg.rect(item.swatch, &item.color);
            let l = &item.label;
            svg.text("legend-text", &l.text, l.size, l.x, l.baseline, l.anchor, l.bbox);
            svg.out.push_str("</g>\n");
        }
        svg.out.push_str("</g>\n");
    }

    for a in &spec.annotations {
        svg.placed("annotation", &a.text, ANNOTATION_FONT, a.anchor[0], a.anchor[1], Anchor::Start);
    }
    svg.out.push_str("</svg>\n");
    Ok(svg.out)
}
