//! Synthesis of document-understanding training data.
//!
//! Three generators produce image-grounded QA conversations:
//! [`docqa`] (OCR layout + LLM for text-rich pages), [`chart`] (seeded chart
//! mutation, SVG rendering and data-checked QA) and [`table`] (HTML tables with
//! grid-computed answer checks). [`corpus`] persists their output as JSONL with
//! distribution manifests, and [`mix`], [`preprocess`] and [`augment`] cover the
//! training and inference side: ratio sampling, patch-aligned resizing and OCR
//! context prompts.

pub mod corpus;
pub mod gateway;
pub mod layout;
pub mod normalize;
pub mod docqa;
pub mod pairs;
pub mod prompts;
pub mod chart;
pub mod verdict;
pub mod table;
pub mod preprocess;
pub mod mix;
pub mod augment;
pub mod config;
pub mod report;
pub mod pipeline;
