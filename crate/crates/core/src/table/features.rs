use serde::Serialize;

use super::TableGrid;
use crate::normalize::parse_number;

/// Share of non-header cells that must parse for a column to count as numeric.
pub const NUMERIC_SHARE: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnStats {
    pub col: usize,
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub sum: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableFeatures {
    pub themes: Vec<String>,
    pub numeric_columns: Vec<ColumnStats>,
    pub n_rows: usize,
    pub n_cols: usize,
}

/// Header flags per position. Tagged header cells count; when the table has
/// none, a first row without any number is taken as the header row.
pub(crate) fn header_mask(grid: &TableGrid) -> Vec<Vec<bool>> {
    let mut mask: Vec<Vec<bool>> = grid.cells.iter().map(|r| r.iter().map(|c| c.is_header).collect()).collect();
    let tagged = mask.iter().flatten().any(|h| *h);
    if !tagged && grid.n_rows > 1 && grid.cells[0].iter().all(|c| parse_number(&c.text).is_none()) {
        mask[0].iter_mut().for_each(|h| *h = true);
    }
    mask
}

fn stats(col: usize, values: &[f64]) -> ColumnStats {
    let sum: f64 = values.iter().sum();
    ColumnStats {
        col,
        count: values.len(),
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        sum,
        mean: sum / values.len() as f64,
    }
}

pub fn grid_features(grid: &TableGrid) -> TableFeatures {
    let mask = header_mask(grid);
    let mut themes: Vec<String> = Vec::new();
    for (r, row) in grid.cells.iter().enumerate() {
        for (c, cell) in row.iter().enumerate() {
            if mask[r][c] && !cell.span_member && !cell.text.is_empty() && !themes.contains(&cell.text) {
                themes.push(cell.text.clone());
            }
        }
    }
    let mut numeric_columns = Vec::new();
    for c in 0..grid.n_cols {
        let body: Vec<&str> =
            grid.cells.iter().zip(&mask).filter(|(_, m)| !m[c]).map(|(row, _)| row[c].text.as_str()).collect();
        let values: Vec<f64> = body.iter().filter_map(|t| parse_number(t)).collect();
        if !values.is_empty() && values.len() as f64 >= NUMERIC_SHARE * body.len() as f64 {
            numeric_columns.push(stats(c, &values));
        }
    }
    TableFeatures { themes, numeric_columns, n_rows: grid.n_rows, n_cols: grid.n_cols }
}

/// Every sum, mean, min, max and pairwise absolute difference over the
/// numbers in a single row or column, header cells excluded.
pub fn line_aggregates(grid: &TableGrid) -> Vec<f64> {
    let mask = header_mask(grid);
    let value = |r: usize, c: usize| if mask[r][c] { None } else { parse_number(&grid.cells[r][c].text) };
    let rows = (0..grid.n_rows).map(|r| (0..grid.n_cols).filter_map(|c| value(r, c)).collect::<Vec<f64>>());
    let cols = (0..grid.n_cols).map(|c| (0..grid.n_rows).filter_map(|r| value(r, c)).collect::<Vec<f64>>());
    let mut out = Vec::new();
    for v in rows.chain(cols).filter(|v| !v.is_empty()) {
        let s = stats(0, &v);
        out.extend([s.sum, s.mean, s.min, s.max]);
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                out.push((v[i] - v[j]).abs());
            }
        }
    }
    out
}
