use serde::{Deserialize, Serialize};

use super::{ChartError, ChartSpec, DataPoint, Series};
use crate::gateway::fenced_blocks;
use crate::normalize::{format_number, parse_number};

/// Column layout of a chart data table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableLayout {
    /// Category column followed by one value column per series.
    Wide,
    /// Header `series,x,y`, one row per point.
    Long,
}

const LONG_HEADER: [&str; 3] = ["series", "x", "y"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl DataTable {
    /// Parses CSV with a header row; every data row must match the header width.
    pub fn parse(text: &str) -> Result<Self, ChartError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(false)
            .trim(csv::Trim::All)
            .from_reader(text.trim().as_bytes());
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| ChartError::Table(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        if header.iter().all(|h| h.is_empty()) {
            return Err(ChartError::Table("missing header row".into()));
        }
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| ChartError::Table(e.to_string()))?;
            rows.push(rec.iter().map(str::to_string).collect());
        }
        Ok(Self { header, rows })
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv of utf-8 fields")
    }

    pub fn layout(&self) -> TableLayout {
        let is_long = self.header.len() == 3
            && self.header.iter().zip(LONG_HEADER).all(|(h, l)| h.eq_ignore_ascii_case(l));
        if is_long {
            TableLayout::Long
        } else {
            TableLayout::Wide
        }
    }
}

/// Canonical table for a spec. Values are written in shortest round-trip
/// form, so [`series_from_table`] recovers them bit for bit.
pub fn spec_to_table(spec: &ChartSpec) -> DataTable {
    if spec.chart_type.shared_categories() {
        let x_header = if spec.x_label.trim().is_empty() { "category".to_string() } else { spec.x_label.clone() };
        let mut header = vec![x_header];
        header.extend(spec.series.iter().map(|s| s.label.clone()));
        let n = spec.series.first().map_or(0, |s| s.points.len());
        let rows = (0..n)
            .map(|i| {
                let mut row = vec![spec.series[0].points[i].x.clone()];
                row.extend(spec.series.iter().map(|s| format_number(s.points[i].y)));
                row
            })
            .collect();
        DataTable { header, rows }
    } else {
        let rows = spec
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| vec![s.label.clone(), p.x.clone(), format_number(p.y)]))
            .collect();
        DataTable { header: LONG_HEADER.iter().map(|h| h.to_string()).collect(), rows }
    }
}

fn cell_value(cell: &str, row: usize, col: usize) -> Result<f64, ChartError> {
    parse_number(cell).ok_or_else(|| ChartError::Table(format!("row {row} column {col}: {cell:?} is not a number")))
}

/// Series encoded by a table, in column (wide) or first-appearance (long) order.
pub fn series_from_table(table: &DataTable) -> Result<Vec<Series>, ChartError> {
    match table.layout() {
        TableLayout::Wide => {
            if table.header.len() < 2 {
                return Err(ChartError::Table("wide table needs a category column and a value column".into()));
            }
            let mut series: Vec<Series> =
                table.header[1..].iter().map(|h| Series { label: h.clone(), points: Vec::new() }).collect();
            for (r, row) in table.rows.iter().enumerate() {
                for (c, s) in series.iter_mut().enumerate() {
                    let y = cell_value(&row[c + 1], r, c + 1)?;
                    s.points.push(DataPoint { x: row[0].clone(), y });
                }
            }
            Ok(series)
        }
        TableLayout::Long => {
            let mut series: Vec<Series> = Vec::new();
            for (r, row) in table.rows.iter().enumerate() {
                let y = cell_value(&row[2], r, 2)?;
                let point = DataPoint { x: row[1].clone(), y };
                match series.iter_mut().find(|s| s.label == row[0]) {
                    Some(s) => s.points.push(point),
                    None => series.push(Series { label: row[0].clone(), points: vec![point] }),
                }
            }
            Ok(series)
        }
    }
}

/// Rebuilds the spec's series from `table` and checks the result against the chart type.
pub(crate) fn apply_table(spec: &mut ChartSpec, table: &DataTable) -> Result<(), ChartError> {
    spec.series = series_from_table(table)?;
    if table.layout() == TableLayout::Wide && spec.x_label.trim().is_empty() && table.header[0] != "category" {
        spec.x_label = table.header[0].clone();
    }
    spec.check_shape()
}

/// First fenced block that parses as a CSV table with at least two columns
/// and one data row. Blocks labeled `json` are skipped; other format labels
/// on the fence line are ignored.
pub fn extract_fenced_table(text: &str) -> Result<DataTable, ChartError> {
    fenced_blocks(text)
        .into_iter()
        .filter(|b| !b.label.as_deref().is_some_and(|l| l.eq_ignore_ascii_case("json")))
        .find_map(|b| {
            let t = DataTable::parse(&b.body).ok()?;
            (t.header.len() >= 2 && !t.rows.is_empty()).then_some(t)
        })
        .ok_or(ChartError::NoTable)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::tests::bar_spec;
    use crate::chart::{ChartType, LegendPosition, Locale};
    use proptest::prelude::*;

    #[test]
    fn plain_fence() {
        let t = extract_fenced_table("here\n```\na,b\n1,2\n```\n").unwrap();
        assert_eq!(t.header, vec!["a", "b"]);
        assert_eq!(t.rows, vec![vec!["1", "2"]]);
    }

    #[test]
    fn format_label_is_stripped() {
        let t = extract_fenced_table("```csv\nmonth,sales\nJan,3\n```").unwrap();
        assert_eq!(t.header, vec!["month", "sales"]);
        let t = extract_fenced_table("```plaintext\nmonth,sales\nJan,3\n```").unwrap();
        assert_eq!(t.rows.len(), 1);
    }

    #[test]
    fn json_block_is_skipped_and_missing_table_errors() {
        let text = "```json\n{\"a\": 1}\n```\n```\nx,y\n1,2\n```";
        assert_eq!(extract_fenced_table(text).unwrap().header, vec!["x", "y"]);
        assert!(matches!(extract_fenced_table("no fences"), Err(ChartError::NoTable)));
        assert!(matches!(extract_fenced_table("```\njust prose\n```"), Err(ChartError::NoTable)));
    }

    #[test]
    fn ragged_csv_is_rejected() {
        assert!(DataTable::parse("a,b\n1,2,3\n").is_err());
    }

    #[test]
    fn long_layout_for_scatter() {
        let mut s = bar_spec(&[("1", 1.0), ("2.5", 4.0)], 2);
        s.chart_type = ChartType::Scatter;
        let t = spec_to_table(&s);
        assert_eq!(t.layout(), TableLayout::Long);
        assert_eq!(t.rows.len(), 4);
        assert_eq!(series_from_table(&t).unwrap(), s.series);
    }

    fn arb_value() -> impl Strategy<Value = f64> {
        prop_oneof![
            (-1e6f64..1e6),
            (-10_000i64..10_000).prop_map(|v| v as f64),
            (0i64..100_000).prop_map(|v| v as f64 / 100.0),
        ]
    }

    proptest! {
        #[test]
        fn table_and_series_are_value_identical(
            values in prop::collection::vec(arb_value(), 1..12),
            n_series in 1usize..4,
        ) {
            let cats: Vec<(String, f64)> = values.iter().enumerate().map(|(i, v)| (format!("类{i}"), *v)).collect();
            let refs: Vec<(&str, f64)> = cats.iter().map(|(c, v)| (c.as_str(), *v)).collect();
            let mut spec = bar_spec(&refs, n_series);
            spec.legend_position = LegendPosition::Bottom;
            spec.locale = Locale::Zh;
            let table = spec_to_table(&spec);
            let reparsed = DataTable::parse(&table.to_csv()).unwrap();
            prop_assert_eq!(&reparsed, &table);
            let back = series_from_table(&reparsed).unwrap();
            prop_assert_eq!(back.len(), spec.series.len());
            for (a, b) in back.iter().zip(&spec.series) {
                prop_assert_eq!(&a.label, &b.label);
                for (p, q) in a.points.iter().zip(&b.points) {
                    prop_assert_eq!(&p.x, &q.x);
                    prop_assert_eq!(p.y.to_bits(), q.y.to_bits());
                }
            }
        }
    }
}
