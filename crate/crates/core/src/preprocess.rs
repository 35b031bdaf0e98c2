//! Patch-aligned image geometry for the vision encoder.
//!
//! Only dimensions are computed; pixel resampling belongs to the training
//! stack. Every output side is a positive multiple of the patch size.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PreprocessError {
    #[error("invalid resize policy: {0}")]
    Policy(String),
    #[error("image dimensions must be at least 1x1, got {0}x{1}")]
    EmptyImage(u32, u32),
    #[error("{w}x{h} is not aligned to {patch}px patches")]
    Unaligned { w: u32, h: u32, patch: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResizePolicy {
    pub patch_px: u32,
    /// Bounds of the longest-side threshold drawn per training image.
    pub train_threshold_min: u32,
    pub train_threshold_max: u32,
    /// Bounds of the upscale factor drawn per inference image.
    pub infer_upscale_min: f64,
    pub infer_upscale_max: f64,
    /// Longest side below which an image counts as low resolution.
    pub low_res_cutoff: u32,
    pub max_tokens: Option<u64>,
}

impl Default for ResizePolicy {
    fn default() -> Self {
        Self {
            patch_px: 28,
            train_threshold_min: 512,
            train_threshold_max: 768,
            infer_upscale_min: 1.1,
            infer_upscale_max: 1.3,
            low_res_cutoff: 448,
            max_tokens: None,
        }
    }
}

impl ResizePolicy {
    pub fn check(&self) -> Result<(), PreprocessError> {
        let bad = |m: &str| Err(PreprocessError::Policy(m.to_string()));
        if self.patch_px == 0 {
            return bad("patch_px must be positive");
        }
        if self.train_threshold_min == 0 || self.train_threshold_min > self.train_threshold_max {
            return bad("train thresholds must satisfy 0 < min <= max");
        }
        if !(self.infer_upscale_min > 0.0 && self.infer_upscale_min <= self.infer_upscale_max)
            || !self.infer_upscale_max.is_finite()
        {
            return bad("upscale factors must satisfy 0 < min <= max");
        }
        if self.low_res_cutoff == 0 {
            return bad("low_res_cutoff must be positive");
        }
        if self.max_tokens == Some(0) {
            return bad("max_tokens must be positive when set");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResizeMode {
    Train,
    Infer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Resolution {
    Conventional,
    Low,
}

pub fn classify_resolution(w: u32, h: u32, policy: &ResizePolicy) -> Resolution {
    if w.max(h) < policy.low_res_cutoff {
        Resolution::Low
    } else {
        Resolution::Conventional
    }
}

fn round_to_patch(x: f64, patch: u32) -> u32 {
    ((x / patch as f64).round().max(1.0) as u32) * patch
}

/// Draws the training threshold for `seed`.
pub fn draw_threshold(policy: &ResizePolicy, seed: u64) -> u32 {
    ChaCha8Rng::seed_from_u64(seed).gen_range(policy.train_threshold_min..=policy.train_threshold_max)
}

/// Draws the inference upscale factor for `seed`.
pub fn draw_upscale(policy: &ResizePolicy, seed: u64) -> f64 {
    ChaCha8Rng::seed_from_u64(seed).gen_range(policy.infer_upscale_min..=policy.infer_upscale_max)
}

fn check_dims(w: u32, h: u32) -> Result<(), PreprocessError> {
    if w == 0 || h == 0 {
        return Err(PreprocessError::EmptyImage(w, h));
    }
    Ok(())
}

/// Shrinks so the longest side is at most `threshold`, then rounds each side
/// to the nearest patch multiple. A side that rounding pushes past the
/// threshold steps down one patch.
pub fn resize_with_threshold(w: u32, h: u32, threshold: u32, policy: &ResizePolicy) -> Result<(u32, u32), PreprocessError> {
    check_dims(w, h)?;
    let longest = w.max(h) as f64;
    let t = threshold as f64;
    let side = |s: u32| -> u32 {
        let scaled = if longest > t { s as f64 * t / longest } else { s as f64 };
        let mut r = round_to_patch(scaled, policy.patch_px);
        if r as f64 > t && r > policy.patch_px {
            r -= policy.patch_px;
        }
        r
    };
    Ok(cap_tokens(side(w), side(h), policy))
}

/// Scales both sides by `factor`, then rounds to patch multiples.
pub fn resize_with_factor(w: u32, h: u32, factor: f64, policy: &ResizePolicy) -> Result<(u32, u32), PreprocessError> {
    check_dims(w, h)?;
    let (w2, h2) = (round_to_patch(w as f64 * factor, policy.patch_px), round_to_patch(h as f64 * factor, policy.patch_px));
    Ok(cap_tokens(w2, h2, policy))
}

/// Re-shrinks aligned dimensions until the token cap holds.
fn cap_tokens(w: u32, h: u32, policy: &ResizePolicy) -> (u32, u32) {
    let Some(cap) = policy.max_tokens else {
        return (w, h);
    };
    let p = policy.patch_px;
    let tokens = |w: u32, h: u32| (w / p) as u64 * (h / p) as u64;
    if tokens(w, h) <= cap {
        return (w, h);
    }
    let s = (cap as f64 / tokens(w, h) as f64).sqrt();
    let floor = |x: u32| ((x as f64 * s / p as f64).floor().max(1.0) as u32) * p;
    let (mut w, mut h) = (floor(w), floor(h));
    while tokens(w, h) > cap {
        if w >= h && w > p {
            w -= p;
        } else if h > p {
            h -= p;
        } else {
            break;
        }
    }
    (w, h)
}

/// Patch-aligned target size for an image.
///
/// Train mode draws a longest-side threshold; infer mode upscales images at
/// or above the low-resolution cutoff by a drawn factor and only rounds the
/// rest. Draws are seeded by `seed`.
pub fn smart_resize(
    w: u32,
    h: u32,
    policy: &ResizePolicy,
    mode: ResizeMode,
    seed: u64,
) -> Result<(u32, u32), PreprocessError> {
    policy.check()?;
    match mode {
        ResizeMode::Train => resize_with_threshold(w, h, draw_threshold(policy, seed), policy),
        ResizeMode::Infer => {
            let factor = match classify_resolution(w, h, policy) {
                Resolution::Conventional => draw_upscale(policy, seed),
                Resolution::Low => 1.0,
            };
            resize_with_factor(w, h, factor, policy)
        }
    }
}

/// Visual tokens for aligned dimensions: one per patch.
pub fn token_count(w: u32, h: u32, policy: &ResizePolicy) -> Result<u64, PreprocessError> {
    let p = policy.patch_px;
    if p == 0 || w == 0 || h == 0 || !w.is_multiple_of(p) || !h.is_multiple_of(p) {
        return Err(PreprocessError::Unaligned { w, h, patch: p });
    }
    Ok((w / p) as u64 * (h / p) as u64)
}
