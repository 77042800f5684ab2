//! Image ingestion: GDXray-style directory loading, synthetic defect images,
//! resizing/flattening and per-feature scaling.

mod gdxray;
mod scale;
mod synthetic;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, FeatureMatrix, Label, Result};

pub use gdxray::{load_gdxray, parse_annotations, read_gray_png, write_gray_png};
pub use scale::{minmax_scale, standardize_apply, standardize_fit, MinMaxModel, StandardizerModel};
pub use synthetic::{generate_synthetic, SyntheticConfig};

/// Height of the resized images fed to the pipelines.
pub const TARGET_HEIGHT: usize = 320;
/// Width of the resized images fed to the pipelines.
pub const TARGET_WIDTH: usize = 428;

/// 8-bit grayscale image, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl RawImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::Ingest(format!(
                "{} pixels do not fill a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub image: RawImage,
    pub label: Label,
    pub series_id: String,
    pub image_id: String,
}

/// Ordered collection of labeled images.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub samples: Vec<LabeledSample>,
}

impl Dataset {
    pub fn new(samples: Vec<LabeledSample>) -> Self {
        Self { samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.samples.iter().map(|s| s.label).collect()
    }

    pub fn count_positive(&self) -> usize {
        self.samples.iter().filter(|s| s.label == 1).count()
    }

    /// Per-series `(samples, positives)` counts, ordered by series id.
    pub fn series_counts(&self) -> BTreeMap<String, (usize, usize)> {
        let mut counts = BTreeMap::new();
        for s in &self.samples {
            let e = counts.entry(s.series_id.clone()).or_insert((0, 0));
            e.0 += 1;
            if s.label == 1 {
                e.1 += 1;
            }
        }
        counts
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset::new(indices.iter().map(|&i| self.samples[i].clone()).collect())
    }

    /// Applies `f` to every image, preserving order and metadata.
    pub fn map_images<F>(&self, f: F) -> Result<Dataset>
    where
        F: Fn(&RawImage) -> Result<RawImage> + Sync,
    {
        let samples = self
            .samples
            .par_iter()
            .map(|s| {
                Ok(LabeledSample {
                    image: f(&s.image)?,
                    ..s.clone()
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset::new(samples))
    }

    /// Flattens every image into a feature row. With `target = Some((h, w))`
    /// each image is bilinearly resized first; with `None` all images must
    /// already share one size.
    pub fn to_features(&self, target: Option<(usize, usize)>) -> Result<FeatureMatrix> {
        if self.samples.is_empty() {
            return Err(Error::Shape("dataset is empty".into()));
        }
        let rows = self
            .samples
            .par_iter()
            .map(|s| match target {
                Some((h, w)) => resize_flatten_to(&s.image, h, w),
                None => Ok(s.image.pixels.iter().map(|&p| f64::from(p)).collect()),
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        FeatureMatrix::from_rows(&rows)
    }
}

/// Bilinear resize to 320x428 followed by row-major flattening.
pub fn resize_flatten(image: &RawImage) -> Result<Vec<f64>> {
    resize_flatten_to(image, TARGET_HEIGHT, TARGET_WIDTH)
}

/// Bilinear resize to `height` x `width` with corner-aligned sampling, so the
/// four corner pixels of the input are reproduced exactly.
pub fn resize_flatten_to(image: &RawImage, height: usize, width: usize) -> Result<Vec<f64>> {
    if image.width == 0 || image.height == 0 {
        return Err(Error::Ingest(format!(
            "cannot resize a degenerate {}x{} image",
            image.width, image.height
        )));
    }
    if height == 0 || width == 0 {
        return Err(Error::Config(format!(
            "resize target {height}x{width} is empty"
        )));
    }
    if height == image.height && width == image.width {
        return Ok(image.pixels.iter().map(|&p| f64::from(p)).collect());
    }

    let axis = |out: usize, inp: usize| -> Vec<(usize, usize, f64)> {
        (0..out)
            .map(|o| {
                let src = if out == 1 || inp == 1 {
                    0.0
                } else {
                    o as f64 * (inp - 1) as f64 / (out - 1) as f64
                };
                let lo = (src.floor() as usize).min(inp - 1);
                let hi = (lo + 1).min(inp - 1);
                (lo, hi, src - lo as f64)
            })
            .collect()
    };
    let ys = axis(height, image.height);
    let xs = axis(width, image.width);

    let mut out = Vec::with_capacity(height * width);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            let p00 = f64::from(image.at(y0, x0));
            let p01 = f64::from(image.at(y0, x1));
            let p10 = f64::from(image.at(y1, x0));
            let p11 = f64::from(image.at(y1, x1));
            let top = p00 + (p01 - p00) * fx;
            let bottom = p10 + (p11 - p10) * fx;
            out.push(top + (bottom - top) * fy);
        }
    }
    Ok(out)
}
