//! Table QA: HTML tables are expanded into dense grids, summarized, sent to
//! the model with the task taxonomy, and every returned answer is checked
//! against values computed from the grid.

mod features;
mod grid;
mod qa;
mod verify;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::GatewayError;
use crate::prompts::PromptError;

pub use features::{grid_features, line_aggregates, ColumnStats, TableFeatures};
pub use grid::{parse_html_table, GridCell, TableGrid};
pub use qa::{build_table_prompt, default_table_output_template, gen_table_qa, table_request, TableQaBatch, TableQaConfig};
pub use verify::verify_table_answer;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("html is empty")]
    EmptyHtml,
    #[error("no <table> element")]
    NoTable,
    #[error("nested tables are not supported")]
    Nested,
    #[error("{0} tables found, expected exactly one")]
    MultipleTables(usize),
    #[error("spans overlap at row {row}, column {col}")]
    OverlappingSpans { row: usize, col: usize },
    #[error("row {row} has {got} columns, expected {expected}")]
    Ragged { row: usize, got: usize, expected: usize },
    #[error("table has no cells")]
    EmptyTable,
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TableTaskType {
    Factoid,
    FreeForm,
    MultipleChoice,
    List,
    YesNo,
    Explanation,
    Comparison,
    Causal,
    Computation,
    Classification,
    TimeSeries,
}

impl TableTaskType {
    pub const ALL: [TableTaskType; 11] = [
        TableTaskType::Factoid,
        TableTaskType::FreeForm,
        TableTaskType::MultipleChoice,
        TableTaskType::List,
        TableTaskType::YesNo,
        TableTaskType::Explanation,
        TableTaskType::Comparison,
        TableTaskType::Causal,
        TableTaskType::Computation,
        TableTaskType::Classification,
        TableTaskType::TimeSeries,
    ];

    /// Name as it appears in the task definitions of the prompt.
    pub fn as_str(self) -> &'static str {
        match self {
            TableTaskType::Factoid => "Factoid",
            TableTaskType::FreeForm => "Free Form",
            TableTaskType::MultipleChoice => "Multiple Choice",
            TableTaskType::List => "List",
            TableTaskType::YesNo => "Yes/No",
            TableTaskType::Explanation => "Explanation",
            TableTaskType::Comparison => "Comparison",
            TableTaskType::Causal => "Causal",
            TableTaskType::Computation => "Computation",
            TableTaskType::Classification => "Classification",
            TableTaskType::TimeSeries => "Time Series",
        }
    }

    fn key(s: &str) -> String {
        s.chars().filter(|c| !matches!(c, ' ' | '/' | '-' | '_')).flat_map(char::to_lowercase).collect()
    }
}

impl fmt::Display for TableTaskType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown task type {0:?}")]
pub struct UnknownTaskType(pub String);

impl FromStr for TableTaskType {
    type Err = UnknownTaskType;

    /// Case-insensitive; spaces, slashes, dashes and underscores are ignored.
    fn from_str(s: &str) -> Result<Self, UnknownTaskType> {
        let k = Self::key(s.trim());
        TableTaskType::ALL
            .into_iter()
            .find(|t| Self::key(t.as_str()) == k)
            .ok_or_else(|| UnknownTaskType(s.to_string()))
    }
}
