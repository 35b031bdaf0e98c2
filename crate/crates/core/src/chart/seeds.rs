use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::data::apply_table;
use super::{ChartError, ChartSpec, ChartType, DataTable, LegendPosition, Locale};

const BASE_PALETTE: [&str; 8] =
    ["#4E79A7", "#F28E2B", "#E15759", "#76B7B2", "#59A14F", "#EDC948", "#B07AA1", "#FF9DA7"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedMeta {
    pub chart_type: ChartType,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub topic: String,
    #[serde(default)]
    pub x_label: String,
    #[serde(default)]
    pub y_label: String,
    #[serde(default = "default_locale")]
    pub locale: Locale,
}

fn default_locale() -> Locale {
    Locale::En
}

/// One seed chart: an opaque plotting script kept for provenance, its data
/// table and the chart type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartSeed {
    pub id: String,
    pub script_text: String,
    pub data_table: String,
    pub chart_type: ChartType,
    pub meta: SeedMeta,
}

impl ChartSeed {
    pub fn new(id: impl Into<String>, script_text: impl Into<String>, data_table: impl Into<String>, meta: SeedMeta) -> Self {
        Self {
            id: id.into(),
            script_text: script_text.into(),
            data_table: data_table.into(),
            chart_type: meta.chart_type,
            meta,
        }
    }

    pub fn table(&self) -> Result<DataTable, ChartError> {
        DataTable::parse(&self.data_table).map_err(|e| ChartError::Seed { id: self.id.clone(), reason: e.to_string() })
    }

    /// Spec reproducing the seed as-is, with a stock palette and canvas.
    pub fn base_spec(&self) -> Result<ChartSpec, ChartError> {
        let table = self.table()?;
        let mut spec = ChartSpec {
            chart_type: self.chart_type,
            title: if self.meta.title.is_empty() { self.id.clone() } else { self.meta.title.clone() },
            topic: self.meta.topic.clone(),
            width_px: 640,
            height_px: 480,
            series: Vec::new(),
            colors: Vec::new(),
            x_label: self.meta.x_label.clone(),
            y_label: self.meta.y_label.clone(),
            annotations: Vec::new(),
            locale: self.meta.locale,
            legend_position: LegendPosition::TopRight,
        };
        apply_table(&mut spec, &table).map_err(|e| ChartError::Seed { id: self.id.clone(), reason: e.to_string() })?;
        spec.colors = (0..spec.required_colors()).map(|i| BASE_PALETTE[i % BASE_PALETTE.len()].to_string()).collect();
        Ok(spec)
    }
}

/// Reads one seed folder holding `script.txt`, `table.csv` and `meta.json`.
pub fn load_seed(dir: &Path) -> Result<ChartSeed, ChartError> {
    let id = dir.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
    let read = |name: &str| {
        fs::read_to_string(dir.join(name)).map_err(|e| ChartError::Io(format!("{}: {e}", dir.join(name).display())))
    };
    let meta: SeedMeta = serde_json::from_str(&read("meta.json")?)
        .map_err(|e| ChartError::Seed { id: id.clone(), reason: format!("meta.json: {e}") })?;
    let seed = ChartSeed::new(id, read("script.txt")?, read("table.csv")?, meta);
    seed.base_spec()?;
    Ok(seed)
}

/// Loads every seed folder under `root`, sorted by id.
pub fn load_seeds(root: &Path) -> Result<Vec<ChartSeed>, ChartError> {
    let entries = fs::read_dir(root).map_err(|e| ChartError::Io(format!("{}: {e}", root.display())))?;
    let mut dirs = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| ChartError::Io(e.to_string()))?.path();
        if path.is_dir() {
            dirs.push(path);
        }
    }
    dirs.sort();
    dirs.iter().map(|d| load_seed(d)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loads_seed_folder() {
        let root = tempfile::tempdir().unwrap();
        let dir = root.path().join("area-01");
        fs::create_dir(&dir).unwrap();
        fs::write(dir.join("script.txt"), "plt.fill_between(x, y)").unwrap();
        fs::write(dir.join("table.csv"), "month,visitors\nJan,120\nFeb,150\n").unwrap();
        fs::write(dir.join("meta.json"), r#"{"chart_type": "area", "title": "Visitors"}"#).unwrap();
        let seeds = load_seeds(root.path()).unwrap();
        assert_eq!(seeds.len(), 1);
        let spec = seeds[0].base_spec().unwrap();
        assert_eq!(spec.chart_type, ChartType::Area);
        assert_eq!(spec.x_label, "month");
        assert_eq!(spec.series[0].points[1].y, 150.0);
    }

    #[test]
    fn area_seed_with_two_series_is_rejected() {
        let meta = SeedMeta {
            chart_type: ChartType::Area,
            title: String::new(),
            topic: String::new(),
            x_label: String::new(),
            y_label: String::new(),
            locale: Locale::En,
        };
        let seed = ChartSeed::new("s", "", "m,a,b\nJan,1,2\n", meta);
        assert!(matches!(seed.base_spec(), Err(ChartError::Seed { .. })));
    }
}
