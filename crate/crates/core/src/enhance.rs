//! Per-image contrast enhancement: percentile contrast stretching, global
//! histogram equalization and tile-based adaptive equalization (CLAHE when a
//! clip limit is set).

use serde::{Deserialize, Serialize};

use crate::ingest::RawImage;
use crate::{Error, Result};

/// Default number of intensity levels for 8-bit images.
pub const LEVELS: usize = 256;

/// Percentile window `[p_low, p_high]` of the input mapped onto `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StretchLimits {
    pub p_low: f64,
    pub p_high: f64,
    pub a: u8,
    pub b: u8,
}

impl Default for StretchLimits {
    fn default() -> Self {
        Self {
            p_low: 2.0,
            p_high: 98.0,
            a: 0,
            b: 255,
        }
    }
}

impl StretchLimits {
    pub fn new(p_low: f64, p_high: f64, a: u8, b: u8) -> Result<Self> {
        let limits = Self {
            p_low,
            p_high,
            a,
            b,
        };
        limits.validate()?;
        Ok(limits)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.p_low && self.p_low < self.p_high && self.p_high <= 100.0) {
            return Err(Error::Config(format!(
                "percentiles ({}, {}) must satisfy 0 <= low < high <= 100",
                self.p_low, self.p_high
            )));
        }
        if self.a >= self.b {
            return Err(Error::Config(format!(
                "output range [{}, {}] must satisfy a < b",
                self.a, self.b
            )));
        }
        Ok(())
    }
}

/// Percentile with linear interpolation between order statistics.
fn percentile(sorted: &[u8], p: f64) -> f64 {
    let pos = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let f = pos - lo as f64;
    f64::from(sorted[lo]) * (1.0 - f) + f64::from(sorted[hi]) * f
}

/// Maps each pixel by `(P - c)(b - a)/(d - c) + a`, clamped to `[a, b]` and
/// rounded half-up, with `c`, `d` the image's `p_low`/`p_high` percentiles.
/// A flat window (`d == c`) yields the constant-`a` image.
pub fn contrast_stretch(image: &RawImage, limits: &StretchLimits) -> Result<RawImage> {
    limits.validate()?;
    if image.pixels().is_empty() {
        return Ok(image.clone());
    }
    let mut sorted = image.pixels().to_vec();
    sorted.sort_unstable();
    let c = percentile(&sorted, limits.p_low);
    let d = percentile(&sorted, limits.p_high);
    Ok(stretch_with(image, c, d, limits.a, limits.b))
}

/// Stretch with explicit input window `[c, d]`.
pub fn stretch_with(image: &RawImage, c: f64, d: f64, a: u8, b: u8) -> RawImage {
    let (af, bf) = (f64::from(a), f64::from(b));
    let pixels = if d <= c {
        vec![a; image.pixels().len()]
    } else {
        image
            .pixels()
            .iter()
            .map(|&p| {
                let v = (f64::from(p) - c) * (bf - af) / (d - c) + af;
                (v.clamp(af, bf) + 0.5).floor() as u8
            })
            .collect()
    };
    RawImage::new(image.width(), image.height(), pixels).expect("same shape")
}

fn histogram(pixels: impl Iterator<Item = u8>, levels: usize) -> Result<Vec<u64>> {
    let mut hist = vec![0u64; levels];
    for p in pixels {
        let p = usize::from(p);
        if p >= levels {
            return Err(Error::Enhance(format!(
                "intensity {p} is not below the level count {levels}"
            )));
        }
        hist[p] += 1;
    }
    Ok(hist)
}

/// Equalization lookup `T(k) = floor((L - 1) * cdf(k))`, computed exactly in
/// integers.
fn equalization_map(hist: &[u64]) -> Vec<u8> {
    let total: u64 = hist.iter().sum();
    let top = (hist.len() - 1) as u64;
    let mut cum = 0u64;
    hist.iter()
        .map(|&h| {
            cum += h;
            if total == 0 {
                0
            } else {
                (top * cum / total) as u8
            }
        })
        .collect()
}

fn check_levels(levels: usize) -> Result<()> {
    if !(2..=LEVELS).contains(&levels) {
        return Err(Error::Enhance(format!(
            "level count {levels} must be within 2..=256"
        )));
    }
    Ok(())
}

/// Global histogram equalization with `levels` intensity levels.
pub fn hist_equalize(image: &RawImage, levels: usize) -> Result<RawImage> {
    check_levels(levels)?;
    let hist = histogram(image.pixels().iter().copied(), levels)?;
    let map = equalization_map(&hist);
    let pixels = image.pixels().iter().map(|&p| map[usize::from(p)]).collect();
    RawImage::new(image.width(), image.height(), pixels)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveParams {
    /// `(rows, cols)` of the tile grid.
    pub tiles: (usize, usize),
    /// Histogram clip limit as a fraction of the tile pixel count.
    pub clip_limit: Option<f64>,
    pub levels: usize,
}

impl Default for AdaptiveParams {
    fn default() -> Self {
        Self {
            tiles: (8, 8),
            clip_limit: Some(0.01),
            levels: LEVELS,
        }
    }
}

/// Clipped histogram equalization lookup. Counts above `limit` are cut and
/// the excess spread uniformly over all bins before accumulating.
fn clipped_map(hist: &[u64], limit: f64) -> Vec<u8> {
    let total: f64 = hist.iter().sum::<u64>() as f64;
    if total == 0.0 {
        return vec![0; hist.len()];
    }
    let mut clipped: Vec<f64> = hist.iter().map(|&h| h as f64).collect();
    let mut excess = 0.0;
    for v in &mut clipped {
        if *v > limit {
            excess += *v - limit;
            *v = limit;
        }
    }
    let share = excess / hist.len() as f64;
    let top = (hist.len() - 1) as f64;
    let mut cum = 0.0;
    clipped
        .iter()
        .map(|&v| {
            cum += v + share;
            (top * (cum / total)).floor().clamp(0.0, top) as u8
        })
        .collect()
}

/// Tile boundaries `[start, end)` splitting `len` into `parts` near-equal spans.
fn spans(len: usize, parts: usize) -> Vec<(usize, usize)> {
    (0..parts)
        .map(|i| (i * len / parts, (i + 1) * len / parts))
        .collect()
}

/// For each coordinate along one axis: the two neighbouring tile indices and
/// the interpolation weight of the second.
fn axis_weights(len: usize, spans: &[(usize, usize)]) -> Vec<(usize, usize, f64)> {
    let centers: Vec<f64> = spans
        .iter()
        .map(|&(s, e)| (s + e - 1) as f64 / 2.0)
        .collect();
    let last = centers.len() - 1;
    (0..len)
        .map(|p| {
            let p = p as f64;
            if p <= centers[0] {
                (0, 0, 0.0)
            } else if p >= centers[last] {
                (last, last, 0.0)
            } else {
                let i = centers.partition_point(|&c| c <= p) - 1;
                let t = (p - centers[i]) / (centers[i + 1] - centers[i]);
                (i, i + 1, t)
            }
        })
        .collect()
}

/// Tile-based adaptive equalization. Each tile gets its own (optionally
/// clipped) equalization mapping; every pixel's output is the bilinear blend
/// of the mappings of the surrounding tile centres evaluated at its input
/// intensity.
pub fn adaptive_equalize(image: &RawImage, params: &AdaptiveParams) -> Result<RawImage> {
    check_levels(params.levels)?;
    let (tr, tc) = params.tiles;
    let (h, w) = (image.height(), image.width());
    if tr == 0 || tc == 0 {
        return Err(Error::Enhance("tile grid dimensions must be >= 1".into()));
    }
    if h / tr < 2 || w / tc < 2 {
        return Err(Error::Enhance(format!(
            "{tr}x{tc} tiles on a {h}x{w} image are smaller than 2x2 pixels"
        )));
    }
    if let Some(clip) = params.clip_limit {
        if !(clip > 0.0 && clip.is_finite()) {
            return Err(Error::Enhance(format!("clip limit {clip} must be positive")));
        }
    }

    let row_spans = spans(h, tr);
    let col_spans = spans(w, tc);
    let mut maps = Vec::with_capacity(tr * tc);
    for &(r0, r1) in &row_spans {
        for &(c0, c1) in &col_spans {
            let tile = (r0..r1).flat_map(|r| (c0..c1).map(move |c| image.at(r, c)));
            let hist = histogram(tile, params.levels)?;
            let map = match params.clip_limit {
                None => equalization_map(&hist),
                Some(clip) => clipped_map(&hist, clip * ((r1 - r0) * (c1 - c0)) as f64),
            };
            maps.push(map);
        }
    }

    let ys = axis_weights(h, &row_spans);
    let xs = axis_weights(w, &col_spans);
    let mut pixels = Vec::with_capacity(h * w);
    for (r, &(y0, y1, fy)) in ys.iter().enumerate() {
        for (c, &(x0, x1, fx)) in xs.iter().enumerate() {
            let p = usize::from(image.at(r, c));
            let m = |ty: usize, tx: usize| f64::from(maps[ty * tc + tx][p]);
            let top = m(y0, x0) * (1.0 - fx) + m(y0, x1) * fx;
            let bottom = m(y1, x0) * (1.0 - fx) + m(y1, x1) * fx;
            let v = top * (1.0 - fy) + bottom * fy;
            pixels.push(v.round().clamp(0.0, (params.levels - 1) as f64) as u8);
        }
    }
    RawImage::new(w, h, pixels)
}

/// Enhancement selected for a pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Enhancement {
    #[default]
    None,
    Stretch(StretchLimits),
    Histeq,
    Adapthist(AdaptiveParams),
}

impl Enhancement {
    pub fn apply(&self, image: &RawImage) -> Result<RawImage> {
        match self {
            Enhancement::None => Ok(image.clone()),
            Enhancement::Stretch(limits) => contrast_stretch(image, limits),
            Enhancement::Histeq => hist_equalize(image, LEVELS),
            Enhancement::Adapthist(params) => adaptive_equalize(image, params),
        }
    }
}
