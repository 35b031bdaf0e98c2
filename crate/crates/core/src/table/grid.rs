use std::sync::LazyLock;

use scraper::{ElementRef, Html, Selector};
use serde::{Deserialize, Serialize};

use super::TableError;

/// Upper bound on a single span; larger values are clamped.
const MAX_SPAN: usize = 1000;

static TABLE: LazyLock<Selector> = LazyLock::new(|| Selector::parse("table").unwrap());
static ROW: LazyLock<Selector> = LazyLock::new(|| Selector::parse("tr").unwrap());

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridCell {
    pub text: String,
    /// Position of the source cell this one was expanded from.
    pub origin: (usize, usize),
    pub is_header: bool,
    /// True for positions covered by a span but not at its origin.
    pub span_member: bool,
}

/// Dense cell matrix with every rowspan/colspan expanded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableGrid {
    pub n_rows: usize,
    pub n_cols: usize,
    pub cells: Vec<Vec<GridCell>>,
}

impl TableGrid {
    pub fn cell(&self, r: usize, c: usize) -> &GridCell {
        &self.cells[r][c]
    }

    /// Number of source cells, i.e. positions that are their own origin.
    pub fn source_cells(&self) -> usize {
        self.cells.iter().flatten().filter(|c| !c.span_member).count()
    }

    pub fn iter(&self) -> impl Iterator<Item = &GridCell> {
        self.cells.iter().flatten()
    }
}

fn span(el: &ElementRef<'_>, attr: &str) -> usize {
    el.value()
        .attr(attr)
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or(1)
        .clamp(1, MAX_SPAN)
}

fn collapse(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn inside_thead(el: &ElementRef<'_>) -> bool {
    el.ancestors().any(|a| a.value().as_element().is_some_and(|e| e.name() == "thead"))
}

/// Parses the single `<table>` in `html` into a dense grid.
///
/// Rowspans running past the last row are cut at the table end. A position
/// claimed by two cells, or a row that leaves holes, is an error.
pub fn parse_html_table(html: &str) -> Result<TableGrid, TableError> {
    if html.trim().is_empty() {
        return Err(TableError::EmptyHtml);
    }
    let doc = Html::parse_fragment(html);
    let tables: Vec<ElementRef<'_>> = doc.select(&TABLE).collect();
    let table = match tables.as_slice() {
        [] => return Err(TableError::NoTable),
        [t] => *t,
        many => {
            let nested = many.iter().any(|t| {
                t.ancestors().any(|a| a.value().as_element().is_some_and(|e| e.name() == "table"))
            });
            return Err(if nested { TableError::Nested } else { TableError::MultipleTables(many.len()) });
        }
    };

    // (header-row flag, cells) for every <tr> that has cells or lies under a
    // rowspan from an earlier row.
    let mut reach: usize = 0;
    let rows: Vec<(bool, Vec<ElementRef<'_>>)> = table
        .select(&ROW)
        .map(|tr| {
            let cells: Vec<ElementRef<'_>> = tr
                .children()
                .filter_map(ElementRef::wrap)
                .filter(|c| matches!(c.value().name(), "td" | "th"))
                .collect();
            (inside_thead(&tr), cells)
        })
        .filter(|(_, cells)| {
            let keep = !cells.is_empty() || reach > 0;
            reach = reach.saturating_sub(1).max(cells.iter().map(|c| span(c, "rowspan") - 1).max().unwrap_or(0));
            keep
        })
        .collect();
    let n_rows = rows.len();
    if n_rows == 0 {
        return Err(TableError::EmptyTable);
    }

    let mut slots: Vec<Vec<Option<GridCell>>> = vec![Vec::new(); n_rows];
    for (r, (in_head, cells)) in rows.iter().enumerate() {
        let mut c = 0;
        for el in cells {
            while slots[r].get(c).is_some_and(Option::is_some) {
                c += 1;
            }
            let rs = span(el, "rowspan").min(n_rows - r);
            let cs = span(el, "colspan");
            let text = collapse(&el.text().collect::<String>());
            let is_header = *in_head || el.value().name() == "th";
            for dr in 0..rs {
                for dc in 0..cs {
                    let row = &mut slots[r + dr];
                    if row.len() <= c + dc {
                        row.resize(c + dc + 1, None);
                    }
                    if row[c + dc].is_some() {
                        return Err(TableError::OverlappingSpans { row: r + dr, col: c + dc });
                    }
                    row[c + dc] = Some(GridCell {
                        text: text.clone(),
                        origin: (r, c),
                        is_header,
                        span_member: dr > 0 || dc > 0,
                    });
                }
            }
            c += cs;
        }
    }

    let n_cols = slots.iter().map(Vec::len).max().unwrap_or(0);
    if n_cols == 0 {
        return Err(TableError::EmptyTable);
    }
    let mut cells = Vec::with_capacity(n_rows);
    for (r, row) in slots.into_iter().enumerate() {
        let got = row.iter().filter(|c| c.is_some()).count();
        if got != n_cols {
            return Err(TableError::Ragged { row: r, got, expected: n_cols });
        }
        cells.push(row.into_iter().map(|c| c.expect("row is full")).collect());
    }
    Ok(TableGrid { n_rows, n_cols, cells })
}
