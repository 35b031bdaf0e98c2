//! Text metrics and canvas layout shared by the renderer and rule-based mutation.
//!
//! Widths are conservative upper bounds: CJK and full-width glyphs count as
//! one em, everything else as 0.6 em. Every element is placed inside the
//! canvas by construction so the lint pass sees no violations for specs the
//! engine lays out itself.

use super::{ChartError, ChartSpec, ChartType, LegendPosition};
use crate::normalize::format_number;

pub const MARGIN: f64 = 12.0;
pub const TITLE_FONT: f64 = 18.0;
pub const LEGEND_FONT: f64 = 12.0;
pub const TICK_FONT: f64 = 11.0;
pub const AXIS_FONT: f64 = 12.0;
pub const ANNOTATION_FONT: f64 = 12.0;
pub const SWATCH: f64 = 10.0;
const LEGEND_PAD: f64 = 6.0;
const LEGEND_ROW: f64 = 16.0;
const MIN_PLOT: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn inside(&self, outer: &Rect) -> bool {
        self.x0 >= outer.x0 && self.y0 >= outer.y0 && self.x1 <= outer.x1 && self.y1 <= outer.y1
    }

    /// Intersection with positive area.
    pub fn overlaps(&self, other: &Rect) -> bool {
        self.x0 < other.x1 && other.x0 < self.x1 && self.y0 < other.y1 && other.y0 < self.y1
    }

    pub fn attr(&self) -> String {
        format!("{:.2} {:.2} {:.2} {:.2}", self.x0, self.y0, self.x1, self.y1)
    }
}

fn is_wide(c: char) -> bool {
    crate::corpus::is_cjk(c)
        || matches!(c as u32, 0x3000..=0x303F | 0xFF00..=0xFFEF | 0x2E80..=0x2FDF | 0x3040..=0x30FF | 0xAC00..=0xD7AF)
}

pub fn text_width(text: &str, size: f64) -> f64 {
    text.chars().map(|c| if is_wide(c) { size } else { 0.6 * size }).sum()
}

/// Box of a horizontal text run. `anchor_x` is interpreted per `anchor`.
pub fn text_box(text: &str, size: f64, anchor_x: f64, baseline: f64, anchor: Anchor) -> Rect {
    let w = text_width(text, size);
    let x0 = match anchor {
        Anchor::Start => anchor_x,
        Anchor::Middle => anchor_x - w / 2.0,
        Anchor::End => anchor_x - w,
    };
    Rect::new(x0, baseline - 0.8 * size, x0 + w, baseline + 0.25 * size)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Anchor {
    Start,
    Middle,
    End,
}

impl Anchor {
    pub fn svg(self) -> &'static str {
        match self {
            Anchor::Start => "start",
            Anchor::Middle => "middle",
            Anchor::End => "end",
        }
    }
}

/// Longest prefix of `text` that fits in `max_w`, with an ellipsis when cut.
pub fn fit_text(text: &str, size: f64, max_w: f64) -> String {
    if text_width(text, size) <= max_w {
        return text.to_string();
    }
    let budget = max_w - text_width("…", size);
    let mut out = String::new();
    let mut w = 0.0;
    for c in text.chars() {
        let cw = text_width(c.encode_utf8(&mut [0; 4]), size);
        if w + cw > budget {
            break;
        }
        w += cw;
        out.push(c);
    }
    out.push('…');
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacedText {
    pub text: String,
    pub size: f64,
    pub x: f64,
    pub baseline: f64,
    pub anchor: Anchor,
    pub bbox: Rect,
}

impl PlacedText {
    fn new(text: String, size: f64, x: f64, baseline: f64, anchor: Anchor) -> Self {
        let bbox = text_box(&text, size, x, baseline, anchor);
        Self { text, size, x, baseline, anchor, bbox }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LegendItem {
    pub swatch: Rect,
    pub color: String,
    pub label: PlacedText,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LegendPlan {
    pub bbox: Rect,
    pub items: Vec<LegendItem>,
}

/// Rotated y-axis label: the run is centered on `(cx, cy)` and turned -90°.
#[derive(Debug, Clone, PartialEq)]
pub struct VerticalText {
    pub text: String,
    pub size: f64,
    pub cx: f64,
    pub cy: f64,
    pub bbox: Rect,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub canvas: Rect,
    pub title: Option<PlacedText>,
    pub legend: Option<LegendPlan>,
    pub plot: Rect,
    pub x_label: Option<PlacedText>,
    pub y_label: Option<VerticalText>,
    /// Value axis range for cartesian types.
    pub y_range: (f64, f64),
    pub y_ticks: Vec<f64>,
    /// Width reserved left of the plot for tick labels.
    pub tick_label_w: f64,
}

/// Entries shown in the legend: one per series, per slice for pie, and a
/// low/high pair for heatmap.
pub fn legend_entries(spec: &ChartSpec) -> Vec<(String, String)> {
    let color = |i: usize| spec.colors.get(i % spec.colors.len().max(1)).cloned().unwrap_or_else(|| "#000000".into());
    match spec.chart_type {
        ChartType::Pie => spec.series[0].points.iter().enumerate().map(|(i, p)| (p.x.clone(), color(i))).collect(),
        ChartType::Heatmap => {
            let (lo, hi) = value_extent(spec);
            vec![(format_tick(lo), color(0)), (format_tick(hi), color(1))]
        }
        _ => spec.series.iter().enumerate().map(|(i, s)| (s.label.clone(), color(i))).collect(),
    }
}

pub fn value_extent(spec: &ChartSpec) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for p in spec.series.iter().flat_map(|s| &s.points) {
        lo = lo.min(p.y);
        hi = hi.max(p.y);
    }
    if spec.chart_type == ChartType::StackedBar {
        let n = spec.series[0].points.len();
        for i in 0..n {
            hi = hi.max(spec.series.iter().map(|s| s.points[i].y).sum());
        }
    }
    (lo, hi)
}

pub fn format_tick(v: f64) -> String {
    let r = (v * 1e6).round() / 1e6;
    if r.abs() >= 1e15 {
        return format!("{r:e}");
    }
    format_number(if r == 0.0 { 0.0 } else { r })
}

fn nice_step(raw: f64) -> f64 {
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let nice = if f <= 1.0 {
        1.0
    } else if f <= 2.0 {
        2.0
    } else if f <= 2.5 {
        2.5
    } else if f <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

/// Tick values covering `[lo, hi]` with round steps; the range is widened to the outer ticks.
pub fn nice_ticks(lo: f64, hi: f64) -> (f64, f64, Vec<f64>) {
    let (mut lo, mut hi) = (lo, hi);
    if hi - lo < 1e-9 {
        let pad = if hi.abs() > 1e-9 { hi.abs() * 0.5 } else { 1.0 };
        lo -= pad;
        hi += pad;
    }
    let step = nice_step((hi - lo) / 5.0);
    let start = (lo / step).floor() * step;
    let end = (hi / step).ceil() * step;
    let n = ((end - start) / step).round() as usize;
    let ticks = (0..=n).map(|i| start + i as f64 * step).collect();
    (start, end, ticks)
}

fn uses_value_axis(t: ChartType) -> bool {
    !matches!(t, ChartType::Pie | ChartType::Heatmap)
}

fn includes_zero(t: ChartType) -> bool {
    matches!(t, ChartType::Bar | ChartType::StackedBar | ChartType::Area | ChartType::Histogram)
}

fn legend_size(labels: &[String], font: f64, columns: usize) -> (f64, f64, f64) {
    let label_w = labels.iter().map(|l| text_width(l, font)).fold(0.0, f64::max);
    let col_w = SWATCH + 4.0 + label_w;
    let rows = labels.len().div_ceil(columns);
    let w = 2.0 * LEGEND_PAD + columns as f64 * col_w + (columns.saturating_sub(1)) as f64 * 10.0;
    let h = 2.0 * LEGEND_PAD + rows as f64 * LEGEND_ROW - 4.0;
    (w, h, col_w)
}

fn place_legend(entries: &[(String, String)], font: f64, columns: usize, x0: f64, y0: f64, col_w: f64) -> LegendPlan {
    let rows = entries.len().div_ceil(columns);
    let mut items = Vec::new();
    for (i, (label, color)) in entries.iter().enumerate() {
        let (col, row) = (i / rows, i % rows);
        let ex = x0 + LEGEND_PAD + col as f64 * (col_w + 10.0);
        let ey = y0 + LEGEND_PAD + row as f64 * LEGEND_ROW;
        let swatch = Rect::new(ex, ey + 1.0, ex + SWATCH, ey + 1.0 + SWATCH);
        let label = PlacedText::new(label.clone(), font, ex + SWATCH + 4.0, ey + 10.0, Anchor::Start);
        items.push(LegendItem { swatch, color: color.clone(), label });
    }
    let (w, h, _) = legend_size(&entries.iter().map(|e| e.0.clone()).collect::<Vec<_>>(), font, columns);
    LegendPlan { bbox: Rect::new(x0, y0, x0 + w, y0 + h), items }
}

/// Lays out every non-data element of the chart.
pub fn plan(spec: &ChartSpec) -> Result<Plan, ChartError> {
    let w = spec.width_px as f64;
    let h = spec.height_px as f64;
    let canvas = Rect::new(0.0, 0.0, w, h);
    let too_small = || ChartError::CanvasTooSmall { width: spec.width_px, height: spec.height_px };
    if w < 4.0 * MIN_PLOT || h < 4.0 * MIN_PLOT {
        return Err(too_small());
    }
    let inner_w = w - 2.0 * MARGIN;

    let mut top = MARGIN;
    let title = (!spec.title.trim().is_empty()).then(|| {
        let mut size = TITLE_FONT;
        while size > 10.0 && text_width(&spec.title, size) > inner_w {
            size -= 1.0;
        }
        let text = fit_text(&spec.title, size, inner_w);
        let t = PlacedText::new(text, size, w / 2.0, MARGIN + 0.8 * size, Anchor::Middle);
        top = t.bbox.y1 + 8.0;
        t
    });

    let mut left = MARGIN;
    let mut right = w - MARGIN;
    let mut bottom = h - MARGIN;

    let entries = legend_entries(spec);
    let side_max = (0.3 * w).min(200.0);
    let legend = if entries.is_empty() {
        None
    } else {
        let avail_h = bottom - top;
        let side = matches!(
            spec.legend_position,
            LegendPosition::TopRight | LegendPosition::TopLeft | LegendPosition::Right
        );
        let max_label = if side { side_max - 2.0 * LEGEND_PAD - SWATCH - 4.0 } else { (0.25 * inner_w).max(40.0) };
        let labels: Vec<String> = entries.iter().map(|(l, _)| fit_text(l, LEGEND_FONT, max_label)).collect();
        let fitted: Vec<(String, String)> = labels.iter().cloned().zip(entries.iter().map(|e| e.1.clone())).collect();
        let plan = match spec.legend_position {
            LegendPosition::Custom { x, y } => {
                let (_, _, col_w) = legend_size(&labels, LEGEND_FONT, 1);
                place_legend(&fitted, LEGEND_FONT, 1, x, y, col_w)
            }
            LegendPosition::Bottom => {
                let mut columns = labels.len();
                let (mut lw, mut lh, mut col_w) = legend_size(&labels, LEGEND_FONT, columns);
                while lw > inner_w && columns > 1 {
                    columns -= 1;
                    (lw, lh, col_w) = legend_size(&labels, LEGEND_FONT, columns);
                }
                if lw > inner_w || lh > 0.3 * avail_h {
                    return Err(too_small());
                }
                let x0 = (w - lw) / 2.0;
                let y0 = bottom - lh;
                bottom = y0 - 6.0;
                place_legend(&fitted, LEGEND_FONT, columns, x0, y0, col_w)
            }
            _ => {
                let mut columns = 1;
                let (mut lw, mut lh, mut col_w) = legend_size(&labels, LEGEND_FONT, columns);
                while lh > avail_h && columns < labels.len() {
                    columns += 1;
                    (lw, lh, col_w) = legend_size(&labels, LEGEND_FONT, columns);
                }
                if lh > avail_h || lw > 0.45 * inner_w {
                    return Err(too_small());
                }
                let x0 = if spec.legend_position == LegendPosition::TopLeft { left } else { right - lw };
                let y0 = if spec.legend_position == LegendPosition::Right { top + (avail_h - lh) / 2.0 } else { top };
                if spec.legend_position == LegendPosition::TopLeft {
                    left = x0 + lw + 10.0;
                } else {
                    right = x0 - 10.0;
                }
                place_legend(&fitted, LEGEND_FONT, columns, x0, y0, col_w)
            }
        };
        Some(plan)
    };

    let x_label = (!spec.x_label.trim().is_empty() && spec.chart_type != ChartType::Pie).then(|| {
        let text = fit_text(&spec.x_label, AXIS_FONT, right - left);
        let t = PlacedText::new(text, AXIS_FONT, (left + right) / 2.0, bottom - 0.25 * AXIS_FONT, Anchor::Middle);
        bottom = t.bbox.y0 - 4.0;
        t
    });

    let cartesian = spec.chart_type != ChartType::Pie;
    let y_label = (cartesian && !spec.y_label.trim().is_empty()).then(|| {
        let text = fit_text(&spec.y_label, AXIS_FONT, (bottom - top).max(0.0));
        let len = text_width(&text, AXIS_FONT);
        let cx = left + 0.6 * AXIS_FONT;
        let cy = (top + bottom) / 2.0;
        let bbox = Rect::new(cx - 0.6 * AXIS_FONT, cy - len / 2.0, cx + 0.6 * AXIS_FONT, cy + len / 2.0);
        left = bbox.x1 + 4.0;
        VerticalText { text, size: AXIS_FONT, cx, cy, bbox }
    });

    let (lo, hi) = value_extent(spec);
    let (y_range, y_ticks) = if uses_value_axis(spec.chart_type) {
        let (lo, hi) = if includes_zero(spec.chart_type) { (lo.min(0.0), hi.max(0.0)) } else { (lo, hi) };
        let (a, b, ticks) = nice_ticks(lo, hi);
        ((a, b), ticks)
    } else {
        ((lo, hi), Vec::new())
    };

    let tick_label_w = if cartesian {
        let labels: Vec<String> = if spec.chart_type == ChartType::Heatmap {
            spec.series.iter().map(|s| fit_text(&s.label, TICK_FONT, 0.2 * w)).collect()
        } else {
            y_ticks.iter().map(|t| format_tick(*t)).collect()
        };
        labels.iter().map(|l| text_width(l, TICK_FONT)).fold(0.0, f64::max) + 6.0
    } else {
        0.0
    };
    if cartesian {
        left += tick_label_w;
        bottom -= TICK_FONT * 1.05 + 6.0;
    }
    let plot = Rect::new(left, top + 0.5 * TICK_FONT, right - 4.0, bottom);
    if plot.width() < MIN_PLOT || plot.height() < MIN_PLOT {
        return Err(too_small());
    }
    Ok(Plan { canvas, title, legend, plot, x_label, y_label, y_range, y_ticks, tick_label_w })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn widths_count_cjk_as_one_em() {
        assert_eq!(text_width("ab", 10.0), 12.0);
        assert_eq!(text_width("销售", 10.0), 20.0);
    }

    #[test]
    fn fit_text_bounds_width() {
        let s = fit_text("a very long chart title that overflows", 18.0, 100.0);
        assert!(text_width(&s, 18.0) <= 100.0);
        assert!(s.ends_with('…'));
        assert_eq!(fit_text("ok", 18.0, 100.0), "ok");
    }

    #[test]
    fn ticks_cover_range() {
        let (a, b, t) = nice_ticks(3.0, 97.0);
        assert!(a <= 3.0 && b >= 97.0);
        assert!(t.len() >= 3 && t.len() <= 12);
        let (a, b, _) = nice_ticks(0.0, 0.0);
        assert!(a < 0.0 && b > 0.0);
    }
}
