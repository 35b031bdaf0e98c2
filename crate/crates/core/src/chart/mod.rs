//! Synthetic chart generation.
//!
//! A [`ChartSeed`] (plot script, data table, chart type) is mutated into a
//! localized [`ChartSpec`] either by seeded rules or by asking a model for a
//! new spec plus a fenced data table. Specs render to SVG whose text elements
//! carry their bounding boxes, so [`lint_layout`] can check placement on the
//! rendered bytes. QA pairs are produced against the data table and checked by
//! [`verify_chart_answer`].

mod data;
mod geometry;
mod lint;
mod mutate;
mod qa;
mod render;
mod seeds;
mod verify;

use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::GatewayError;
use crate::prompts::PromptError;

pub use data::{extract_fenced_table, series_from_table, spec_to_table, DataTable, TableLayout};
pub use lint::{lint_layout, Diagnostic};
pub use mutate::{
    mutate_spec, mutation_request, DictionaryTranslator, LlmTranslator, MutationRoute, Mutation, TopicPool,
    Translator,
};
pub use qa::{
    chart_qa_prompt, chart_qa_request, default_chart_output_template, gen_chart_qa, preset_questions, preset_records, ChartQaBatch,
    ChartQaConfig, ChartTaskType, PresetIntent, PresetQa, TaskMatrix,
};
pub use render::render;
pub use seeds::{load_seed, load_seeds, ChartSeed, SeedMeta};
pub use verify::{verify_chart_answer, ChartData};

#[derive(Debug, Error)]
pub enum ChartError {
    #[error("invalid chart spec: {0}")]
    InvalidSpec(String),
    #[error("unsupported series shape for {chart_type}: {reason}")]
    SeriesShape { chart_type: ChartType, reason: String },
    #[error("canvas {width}x{height} is too small to lay out the chart")]
    CanvasTooSmall { width: u32, height: u32 },
    #[error("invalid data table: {0}")]
    Table(String),
    #[error("no fenced block parses as a CSV table")]
    NoTable,
    #[error("task matrix has no task types for {0}")]
    EmptyTaskList(ChartType),
    #[error("model returned a {got} spec for a {expected} seed")]
    TypeMismatch { expected: ChartType, got: ChartType },
    #[error("invalid seed {id}: {reason}")]
    Seed { id: String, reason: String },
    #[error("translation failed: {0}")]
    Translation(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("spec JSON does not match the schema: {0}")]
    SpecJson(String),
    #[error("{0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChartType {
    Bar,
    Line,
    Pie,
    Area,
    Scatter,
    StackedBar,
    Histogram,
    Box,
    Heatmap,
}

impl ChartType {
    pub const ALL: [ChartType; 9] = [
        ChartType::Bar,
        ChartType::Line,
        ChartType::Pie,
        ChartType::Area,
        ChartType::Scatter,
        ChartType::StackedBar,
        ChartType::Histogram,
        ChartType::Box,
        ChartType::Heatmap,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ChartType::Bar => "bar",
            ChartType::Line => "line",
            ChartType::Pie => "pie",
            ChartType::Area => "area",
            ChartType::Scatter => "scatter",
            ChartType::StackedBar => "stacked-bar",
            ChartType::Histogram => "histogram",
            ChartType::Box => "box",
            ChartType::Heatmap => "heatmap",
        }
    }

    /// Name used inside prompts, e.g. "stacked bar".
    pub fn prose_name(self) -> &'static str {
        match self {
            ChartType::StackedBar => "stacked bar",
            other => other.as_str(),
        }
    }

    /// Whether every series shares one ordered list of x categories.
    pub fn shared_categories(self) -> bool {
        !matches!(self, ChartType::Scatter | ChartType::Box)
    }

    pub fn single_series(self) -> bool {
        matches!(self, ChartType::Pie | ChartType::Area | ChartType::Histogram)
    }

    fn non_negative(self) -> bool {
        matches!(self, ChartType::Pie | ChartType::Histogram | ChartType::StackedBar)
    }
}

impl fmt::Display for ChartType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ChartType {
    type Err = ChartError;

    fn from_str(s: &str) -> Result<Self, ChartError> {
        let key = s.trim().to_ascii_lowercase().replace(['_', ' '], "-");
        ChartType::ALL
            .into_iter()
            .find(|t| t.as_str() == key)
            .ok_or_else(|| ChartError::InvalidSpec(format!("unknown chart type {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Locale {
    Zh,
    En,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataPoint {
    pub x: String,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub label: String,
    pub points: Vec<DataPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub text: String,
    /// Left end of the text baseline, canvas pixels.
    pub anchor: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LegendPosition {
    TopRight,
    TopLeft,
    Right,
    Bottom,
    /// Top-left corner of the legend box in canvas pixels, placed verbatim.
    Custom { x: f64, y: f64 },
}

impl LegendPosition {
    pub const AUTO: [LegendPosition; 4] =
        [LegendPosition::TopRight, LegendPosition::TopLeft, LegendPosition::Right, LegendPosition::Bottom];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartSpec {
    pub chart_type: ChartType,
    pub title: String,
    pub topic: String,
    pub width_px: u32,
    pub height_px: u32,
    pub series: Vec<Series>,
    pub colors: Vec<String>,
    #[serde(default)]
    pub x_label: String,
    #[serde(default)]
    pub y_label: String,
    #[serde(default)]
    pub annotations: Vec<Annotation>,
    pub locale: Locale,
    pub legend_position: LegendPosition,
}

static HEX_COLOR: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^#[0-9A-Fa-f]{6}$").unwrap());

pub fn is_hex_color(s: &str) -> bool {
    HEX_COLOR.is_match(s)
}

impl ChartSpec {
    /// Distinct x categories in first-seen order.
    pub fn categories(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for p in self.series.iter().flat_map(|s| s.points.iter()) {
            if !out.contains(&p.x.as_str()) {
                out.push(&p.x);
            }
        }
        out
    }

    /// Number of colors the renderer consumes.
    pub fn required_colors(&self) -> usize {
        match self.chart_type {
            ChartType::Pie => self.series.first().map_or(1, |s| s.points.len()).max(1),
            ChartType::Heatmap => 2,
            _ => self.series.len().max(1),
        }
    }

    pub fn check(&self) -> Result<(), ChartError> {
        if self.width_px == 0 || self.height_px == 0 {
            return Err(ChartError::InvalidSpec("width and height must be positive".into()));
        }
        if let Some(bad) = self.colors.iter().find(|c| !is_hex_color(c)) {
            return Err(ChartError::InvalidSpec(format!("color {bad:?} is not #RRGGBB")));
        }
        if self.colors.len() < self.required_colors() {
            return Err(ChartError::InvalidSpec(format!(
                "{} colors given, {} needed",
                self.colors.len(),
                self.required_colors()
            )));
        }
        for a in &self.annotations {
            if !(a.anchor[0].is_finite() && a.anchor[1].is_finite()) {
                return Err(ChartError::InvalidSpec("annotation anchor is not finite".into()));
            }
        }
        self.check_shape()
    }

    pub fn check_shape(&self) -> Result<(), ChartError> {
        let t = self.chart_type;
        let shape = |reason: String| Err(ChartError::SeriesShape { chart_type: t, reason });
        if self.series.is_empty() {
            return shape("no series".into());
        }
        if t.single_series() && self.series.len() != 1 {
            return shape(format!("expects exactly one series, got {}", self.series.len()));
        }
        for s in &self.series {
            if s.points.is_empty() {
                return shape(format!("series {:?} has no points", s.label));
            }
            if let Some(p) = s.points.iter().find(|p| !p.y.is_finite()) {
                return shape(format!("non-finite value at {:?}", p.x));
            }
            if t.non_negative() {
                if let Some(p) = s.points.iter().find(|p| p.y < 0.0) {
                    return shape(format!("negative value {} at {:?}", p.y, p.x));
                }
            }
        }
        if t.shared_categories() {
            let first: Vec<&str> = self.series[0].points.iter().map(|p| p.x.as_str()).collect();
            let mut uniq = first.clone();
            uniq.sort_unstable();
            uniq.dedup();
            if uniq.len() != first.len() {
                return shape("duplicate x category".into());
            }
            for s in &self.series[1..] {
                if !s.points.iter().map(|p| p.x.as_str()).eq(first.iter().copied()) {
                    return shape(format!("series {:?} does not share the x categories", s.label));
                }
            }
        }
        if t == ChartType::Scatter {
            if let Some(p) = self.series.iter().flat_map(|s| &s.points).find(|p| p.x.trim().parse::<f64>().is_err()) {
                return shape(format!("scatter x {:?} is not numeric", p.x));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spec serializes")
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub fn bar_spec(values: &[(&str, f64)], n_series: usize) -> ChartSpec {
        ChartSpec {
            chart_type: ChartType::Bar,
            title: "Monthly Sales".into(),
            topic: "Business".into(),
            width_px: 640,
            height_px: 480,
            series: (0..n_series)
                .map(|i| Series {
                    label: format!("S{i}"),
                    points: values.iter().map(|(x, y)| DataPoint { x: (*x).into(), y: *y + i as f64 }).collect(),
                })
                .collect(),
            colors: (0..n_series.max(1)).map(|i| format!("#1{i}3A5F")).collect(),
            x_label: "Month".into(),
            y_label: "Sales".into(),
            annotations: vec![],
            locale: Locale::En,
            legend_position: LegendPosition::TopRight,
        }
    }

    #[test]
    fn chart_type_names_round_trip() {
        for t in ChartType::ALL {
            assert_eq!(t.as_str().parse::<ChartType>().unwrap(), t);
            let json = serde_json::to_string(&t).unwrap();
            assert_eq!(json, format!("\"{}\"", t.as_str()));
        }
        assert_eq!("Stacked Bar".parse::<ChartType>().unwrap(), ChartType::StackedBar);
    }

    #[test]
    fn spec_checks() {
        let mut s = bar_spec(&[("a", 1.0), ("b", 2.0)], 2);
        assert!(s.check().is_ok());
        s.colors[0] = "red".into();
        assert!(matches!(s.check(), Err(ChartError::InvalidSpec(_))));

        let mut s = bar_spec(&[("a", 1.0)], 2);
        s.series[1].points[0].x = "z".into();
        assert!(matches!(s.check(), Err(ChartError::SeriesShape { .. })));

        let mut s = bar_spec(&[("a", 1.0)], 2);
        s.chart_type = ChartType::Pie;
        assert!(matches!(s.check_shape(), Err(ChartError::SeriesShape { .. })));
    }

    #[test]
    fn hex_regex() {
        assert!(is_hex_color("#A1b2C3"));
        assert!(!is_hex_color("#A1b2C"));
        assert!(!is_hex_color("A1b2C3"));
    }
}
