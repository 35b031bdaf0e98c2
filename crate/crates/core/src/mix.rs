//! Repetition weights that hit a target synthetic share, and seeded epochs.

use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Solved weights within this distance of 1 are snapped to exactly 1.
const UNIT_SNAP: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MixError {
    #[error("target synthetic fraction must lie strictly between 0 and 1, got {0}")]
    Fraction(f64),
    #[error("no {0} source with records")]
    MissingClass(&'static str),
    #[error("source {name}: {reason}")]
    Source { name: String, reason: String },
    #[error("target {p} is unreachable: fixed weights already give {achieved}")]
    Infeasible { p: f64, achieved: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub name: String,
    pub size: u64,
    pub is_synthetic: bool,
    /// Fixed repetition factor; synthetic sources without one share the solved weight.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
}

/// Input of the `sample` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixRequest {
    pub target_synthetic_fraction: f64,
    pub sources: Vec<SourceSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedSource {
    pub name: String,
    pub size: u64,
    pub is_synthetic: bool,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixPlan {
    pub target_synthetic_fraction: f64,
    pub sources: Vec<PlannedSource>,
    /// Expected records per epoch, Σ weight·size.
    pub expected_epoch_length: f64,
}

/// Solves the common synthetic weight r so that
/// Σ_syn r·size / Σ_all weight·size equals `p`.
///
/// Public sources default to weight 1. With one synthetic and one public
/// source this is r = p·P / ((1−p)·S).
pub fn solve_weights(sources: &[SourceSpec], p: f64) -> Result<MixPlan, MixError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(MixError::Fraction(p));
    }
    for s in sources {
        if let Some(w) = s.weight {
            if !(w.is_finite() && w >= 0.0) {
                return Err(MixError::Source { name: s.name.clone(), reason: format!("weight {w} is not a non-negative number") });
            }
        }
    }
    if !sources.iter().any(|s| !s.is_synthetic && s.size > 0) {
        return Err(MixError::MissingClass("public"));
    }
    if !sources.iter().any(|s| s.is_synthetic && s.size > 0) {
        return Err(MixError::MissingClass("synthetic"));
    }
    let mass = |f: &dyn Fn(&SourceSpec) -> bool| -> f64 {
        sources.iter().filter(|s| f(s)).map(|s| s.size as f64 * s.weight.unwrap_or(1.0)).sum()
    };
    let public = mass(&|s| !s.is_synthetic);
    let fixed_syn = mass(&|s| s.is_synthetic && s.weight.is_some());
    let free_syn: f64 = sources.iter().filter(|s| s.is_synthetic && s.weight.is_none()).map(|s| s.size as f64).sum();

    let r = if free_syn > 0.0 {
        let r = (p * (public + fixed_syn) - fixed_syn) / ((1.0 - p) * free_syn);
        if !(r > 0.0 && r.is_finite()) {
            return Err(MixError::Infeasible { p, achieved: fixed_syn / (public + fixed_syn) });
        }
        if (r - 1.0).abs() < UNIT_SNAP {
            1.0
        } else {
            r
        }
    } else {
        let achieved = fixed_syn / (public + fixed_syn);
        if (achieved - p).abs() > 1e-9 {
            return Err(MixError::Infeasible { p, achieved });
        }
        1.0
    };

    let planned: Vec<PlannedSource> = sources
        .iter()
        .map(|s| PlannedSource {
            name: s.name.clone(),
            size: s.size,
            is_synthetic: s.is_synthetic,
            weight: s.weight.unwrap_or(if s.is_synthetic { r } else { 1.0 }),
        })
        .collect();
    let expected_epoch_length = planned.iter().map(|s| s.weight * s.size as f64).sum();
    Ok(MixPlan { target_synthetic_fraction: p, sources: planned, expected_epoch_length })
}

/// Synthetic share implied by the plan's weights.
pub fn expected_synthetic_fraction(plan: &MixPlan) -> f64 {
    let syn: f64 = plan.sources.iter().filter(|s| s.is_synthetic).map(|s| s.weight * s.size as f64).sum();
    syn / plan.expected_epoch_length
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Draw {
    /// Index into `MixPlan::sources`.
    pub source: u32,
    pub index: u64,
}

/// One shuffled epoch. Each record appears floor(w) times plus one more with
/// probability frac(w), so no record appears more than ceil(w) times.
pub fn sample_epoch(plan: &MixPlan, seed: u64) -> Vec<Draw> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(plan.expected_epoch_length.ceil() as usize);
    for (si, s) in plan.sources.iter().enumerate() {
        let whole = s.weight.floor();
        let frac = s.weight - whole;
        for index in 0..s.size {
            let copies = whole as u64 + u64::from(frac > 0.0 && rng.gen_bool(frac));
            for _ in 0..copies {
                out.push(Draw { source: si as u32, index });
            }
        }
    }
    out.shuffle(&mut rng);
    out
}

/// Share of the stream drawn from each source, by name.
pub fn empirical_fractions(plan: &MixPlan, stream: &[Draw]) -> BTreeMap<String, f64> {
    let mut counts = vec![0u64; plan.sources.len()];
    for d in stream {
        counts[d.source as usize] += 1;
    }
    let total = stream.len().max(1) as f64;
    plan.sources.iter().zip(counts).map(|(s, n)| (s.name.clone(), n as f64 / total)).collect()
}

pub fn empirical_synthetic_fraction(plan: &MixPlan, stream: &[Draw]) -> f64 {
    let syn = stream.iter().filter(|d| plan.sources[d.source as usize].is_synthetic).count();
    syn as f64 / stream.len().max(1) as f64
}

/// Writes one `{"source": name, "index": i}` line per draw.
pub fn write_stream_jsonl(plan: &MixPlan, stream: &[Draw], mut out: impl Write) -> Result<(), MixError> {
    #[derive(Serialize)]
    struct Line<'a> {
        source: &'a str,
        index: u64,
    }
    for d in stream {
        serde_json::to_writer(&mut out, &Line { source: &plan.sources[d.source as usize].name, index: d.index })?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
