//! OCR layout documents: typed regions holding recognized lines.
//!
//! Schema (version 1):
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "page_width": 1240,
//!   "page_height": 1754,
//!   "regions": [
//!     {
//!       "kind": "printed_text",
//!       "bbox": [x0, y0, x1, y1],
//!       "lines": [{ "text": "...", "bbox": [x0, y0, x1, y1] }]
//!     }
//!   ]
//! }
//! ```
//!
//! `kind` is one of `printed_text`, `table`, `chart`, `printed_formula`, `seal`.
//! Boxes are pixel coordinates with the origin at the top-left corner.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

/// Slack allowed between a line box and its region box.
pub const LINE_TOLERANCE_PX: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    PrintedText,
    Table,
    Chart,
    PrintedFormula,
    Seal,
}

impl RegionKind {
    pub const ALL: [RegionKind; 5] = [
        RegionKind::PrintedText,
        RegionKind::Table,
        RegionKind::Chart,
        RegionKind::PrintedFormula,
        RegionKind::Seal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RegionKind::PrintedText => "printed_text",
            RegionKind::Table => "table",
            RegionKind::Chart => "chart",
            RegionKind::PrintedFormula => "printed_formula",
            RegionKind::Seal => "seal",
        }
    }
}

impl fmt::Display for RegionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RegionKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        RegionKind::ALL.into_iter().find(|k| k.as_str() == s).ok_or(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl BBox {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn is_proper(&self) -> bool {
        self.x0 < self.x1 && self.y0 < self.y1
    }

    pub fn contains(&self, other: &BBox, slack: f64) -> bool {
        other.x0 >= self.x0 - slack
            && other.y0 >= self.y0 - slack
            && other.x1 <= self.x1 + slack
            && other.y1 <= self.y1 + slack
    }
}

impl From<[f64; 4]> for BBox {
    fn from(v: [f64; 4]) -> Self {
        BBox::new(v[0], v[1], v[2], v[3])
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        [b.x0, b.y0, b.x1, b.y1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Line {
    pub text: String,
    pub bbox: BBox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub kind: RegionKind,
    pub bbox: BBox,
    #[serde(default)]
    pub lines: Vec<Line>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutDocument {
    pub schema_version: u32,
    pub page_width: f64,
    pub page_height: f64,
    #[serde(default)]
    pub regions: Vec<Region>,
}

#[derive(Debug, Error, PartialEq)]
pub enum LayoutError {
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("unsupported schema_version {0}")]
    UnsupportedVersion(u32),
    #[error("page dimensions must be positive, got {width}x{height}")]
    InvalidPage { width: f64, height: f64 },
    #[error("degenerate box at {0}")]
    DegenerateBox(String),
    #[error("box at {0} lies outside the page")]
    OutOfPage(String),
    #[error("line box at {0} lies outside its region")]
    LineOutsideRegion(String),
}

pub fn parse_layout(json_text: &str) -> Result<LayoutDocument, LayoutError> {
    let de = &mut serde_json::Deserializer::from_str(json_text);
    let doc: LayoutDocument = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        LayoutError::Schema {
            path: if path == "." { "$".into() } else { format!("$.{path}") },
            message: e.into_inner().to_string(),
        }
    })?;
    check_layout(&doc)?;
    Ok(doc)
}

/// Checks the geometric invariants of an already-deserialized document.
pub fn check_layout(doc: &LayoutDocument) -> Result<(), LayoutError> {
    if doc.schema_version != SCHEMA_VERSION {
        return Err(LayoutError::UnsupportedVersion(doc.schema_version));
    }
    if !(doc.page_width > 0.0 && doc.page_height > 0.0) {
        return Err(LayoutError::InvalidPage { width: doc.page_width, height: doc.page_height });
    }
    let page = BBox::new(0.0, 0.0, doc.page_width, doc.page_height);
    for (ri, region) in doc.regions.iter().enumerate() {
        let path = format!("$.regions[{ri}].bbox");
        if !region.bbox.is_proper() {
            return Err(LayoutError::DegenerateBox(path));
        }
        if !page.contains(&region.bbox, 0.0) {
            return Err(LayoutError::OutOfPage(path));
        }
        for (li, line) in region.lines.iter().enumerate() {
            let path = format!("$.regions[{ri}].lines[{li}].bbox");
            if !line.bbox.is_proper() {
                return Err(LayoutError::DegenerateBox(path));
            }
            if !region.bbox.contains(&line.bbox, LINE_TOLERANCE_PX) {
                return Err(LayoutError::LineOutsideRegion(path));
            }
        }
    }
    Ok(())
}

/// Compact canonical JSON form; `parse_layout` inverts it.
pub fn to_json(doc: &LayoutDocument) -> String {
    serde_json::to_string(doc).expect("layout serializes")
}

fn reading_order(a: &Line, b: &Line) -> Ordering {
    a.bbox
        .y0
        .total_cmp(&b.bbox.y0)
        .then(a.bbox.x0.total_cmp(&b.bbox.x0))
        .then(a.bbox.y1.total_cmp(&b.bbox.y1))
        .then(a.bbox.x1.total_cmp(&b.bbox.x1))
        .then_with(|| a.text.cmp(&b.text))
}

/// All line texts in reading order (top edge, then left edge), one per line.
pub fn splice_text(doc: &LayoutDocument) -> String {
    let mut lines: Vec<&Line> = doc.regions.iter().flat_map(|r| r.lines.iter()).collect();
    lines.sort_by(|a, b| reading_order(a, b));
    lines.iter().map(|l| l.text.as_str()).collect::<Vec<_>>().join("\n")
}

pub fn kinds_present(doc: &LayoutDocument) -> BTreeSet<RegionKind> {
    doc.regions.iter().map(|r| r.kind).collect()
}
