use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::Serialize;

use super::geometry::Rect;
use super::ChartSpec;

/// Half a unit of the two-decimal precision bounding boxes are written with.
const SLACK: f64 = 0.005 + 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diagnostic {
    TextOutOfBounds { role: String, text: String, bbox: [f64; 4] },
    AnnotationOutOfBounds { text: String, bbox: [f64; 4] },
    LegendClipped { bbox: [f64; 4] },
    LegendOverlapsTitle { legend: [f64; 4], title: [f64; 4] },
    CanvasMismatch { svg: [u32; 2], spec: [u32; 2] },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::TextOutOfBounds { role, text, bbox } => {
                write!(f, "{role} text {text:?} at {bbox:?} leaves the canvas")
            }
            Diagnostic::AnnotationOutOfBounds { text, bbox } => {
                write!(f, "annotation {text:?} at {bbox:?} leaves the canvas")
            }
            Diagnostic::LegendClipped { bbox } => write!(f, "legend at {bbox:?} is clipped by the canvas"),
            Diagnostic::LegendOverlapsTitle { legend, title } => {
                write!(f, "legend at {legend:?} overlaps title at {title:?}")
            }
            Diagnostic::CanvasMismatch { svg, spec } => {
                write!(f, "svg canvas {}x{} differs from spec {}x{}", svg[0], svg[1], spec[0], spec[1])
            }
        }
    }
}

static ELEMENT: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r#"<(\w+) data-role="([^"]+)" data-bbox="([^"]+)"[^>]*>([^<]*)"#).unwrap()
});
static CANVAS: LazyLock<Regex> = LazyLock::new(|| Regex::new(r#"<svg [^>]*width="(\d+)" height="(\d+)""#).unwrap());

fn parse_bbox(s: &str) -> Option<Rect> {
    let v: Vec<f64> = s.split_whitespace().map(str::parse).collect::<Result<_, _>>().ok()?;
    (v.len() == 4).then(|| Rect::new(v[0], v[1], v[2], v[3]))
}

fn unescape(s: &str) -> String {
    s.replace("&lt;", "<").replace("&gt;", ">").replace("&quot;", "\"").replace("&amp;", "&")
}

/// Checks placement of every text element and the legend in rendered SVG.
/// An empty list means the chart passes.
pub fn lint_layout(spec: &ChartSpec, rendered: &str) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if let Some(c) = CANVAS.captures(rendered) {
        let svg = [c[1].parse().unwrap_or(0), c[2].parse().unwrap_or(0)];
        if svg != [spec.width_px, spec.height_px] {
            out.push(Diagnostic::CanvasMismatch { svg, spec: [spec.width_px, spec.height_px] });
        }
    }
    let canvas = Rect::new(-SLACK, -SLACK, spec.width_px as f64 + SLACK, spec.height_px as f64 + SLACK);
    let mut title = None;
    let mut legend = None;
    for c in ELEMENT.captures_iter(rendered) {
        let Some(bbox) = parse_bbox(&c[3]) else { continue };
        let arr = [bbox.x0, bbox.y0, bbox.x1, bbox.y1];
        let role = &c[2];
        let inside = bbox.inside(&canvas);
        match (&c[1], role) {
            (_, "plot") => {}
            (_, "legend") => {
                if !inside {
                    out.push(Diagnostic::LegendClipped { bbox: arr });
                }
                legend = Some(bbox);
            }
            (_, "annotation") => {
                if !inside {
                    out.push(Diagnostic::AnnotationOutOfBounds { text: unescape(&c[4]), bbox: arr });
                }
            }
            ("text", _) => {
                if role == "title" {
                    title = Some(bbox);
                }
                if !inside {
                    out.push(Diagnostic::TextOutOfBounds { role: role.to_string(), text: unescape(&c[4]), bbox: arr });
                }
            }
            _ => {}
        }
    }
    if let (Some(l), Some(t)) = (legend, title) {
        if l.overlaps(&t) {
            out.push(Diagnostic::LegendOverlapsTitle { legend: [l.x0, l.y0, l.x1, l.y1], title: [t.x0, t.y0, t.x1, t.y1] });
        }
    }
    out
}
