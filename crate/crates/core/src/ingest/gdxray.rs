use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageFormat};
use rayon::prelude::*;

use super::{Dataset, LabeledSample, RawImage};
use crate::{Error, Result};

const ANNOTATION_FILE: &str = "ground_truth.txt";

/// Loads `<root>/<SERIES>/<SERIES>_<NNNN>.png` images. An image is labeled
/// `+1` iff its series' `ground_truth.txt` has at least one box row for its
/// 1-based index. A series without annotation file is defect free.
pub fn load_gdxray(root: &Path, series_filter: Option<&[String]>) -> Result<Dataset> {
    let entries = fs::read_dir(root).map_err(|e| Error::IngestFile {
        path: root.to_path_buf(),
        message: format!("unreadable dataset root: {e}"),
    })?;

    let mut series_dirs = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        let path = entry.path();
        if !path.is_dir() {
            continue;
        }
        let Some(name) = path.file_name().and_then(|n| n.to_str()).map(str::to_owned) else {
            continue;
        };
        if series_filter.is_some_and(|f| !f.iter().any(|s| s == &name)) {
            continue;
        }
        series_dirs.push((name, path));
    }
    series_dirs.sort();

    let mut jobs: Vec<(String, String, PathBuf, bool)> = Vec::new();
    for (series, dir) in &series_dirs {
        let annotated = read_annotation_indices(&dir.join(ANNOTATION_FILE))?;
        let listing = fs::read_dir(dir).map_err(|e| Error::IngestFile {
            path: dir.clone(),
            message: format!("unreadable series directory: {e}"),
        })?;
        let mut images = Vec::new();
        for entry in listing {
            let path = entry.map_err(|e| Error::io(dir, e))?.path();
            if let Some((stem, index)) = image_index(&path, series) {
                images.push((stem, index, path));
            }
        }
        images.sort();
        for (stem, index, path) in images {
            jobs.push((series.clone(), stem, path, annotated.contains(&index)));
        }
    }

    let samples = jobs
        .into_par_iter()
        .map(|(series_id, image_id, path, defect)| {
            Ok(LabeledSample {
                image: read_gray_png(&path)?,
                label: if defect { 1 } else { -1 },
                series_id,
                image_id,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset::new(samples))
}

/// Returns `(file stem, image index)` for files named `<series>_<NNNN>.png`.
fn image_index(path: &Path, series: &str) -> Option<(String, u32)> {
    if path.extension().and_then(|e| e.to_str()) != Some("png") {
        return None;
    }
    let stem = path.file_stem()?.to_str()?;
    let digits = stem.strip_prefix(series)?.strip_prefix('_')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Some((stem.to_owned(), digits.parse().ok()?))
}

fn read_annotation_indices(path: &Path) -> Result<BTreeSet<u32>> {
    match fs::read_to_string(path) {
        Ok(text) => parse_annotations(&text, path),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(BTreeSet::new()),
        Err(e) => Err(Error::io(path, e)),
    }
}

/// Parses `image_index x1 x2 y1 y2` rows and returns the set of annotated
/// 1-based image indices. Blank lines are skipped. Values may be written in
/// floating-point notation, but the index must be a positive integer.
pub fn parse_annotations(text: &str, path: &Path) -> Result<BTreeSet<u32>> {
    let mut indices = BTreeSet::new();
    for (n, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let bad = |message: String| Error::Annotation {
            path: path.to_path_buf(),
            line: n + 1,
            message,
        };
        if fields.len() != 5 {
            return Err(bad(format!("expected 5 fields, found {}", fields.len())));
        }
        let values = fields
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| bad(format!("'{f}' is not a number"))))
            .collect::<Result<Vec<_>>>()?;
        let index = values[0];
        if !(index >= 1.0 && index.fract() == 0.0 && index <= f64::from(u32::MAX)) {
            return Err(bad(format!("image index {} is not a positive integer", fields[0])));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(bad("non-finite coordinate".into()));
        }
        indices.insert(index as u32);
    }
    Ok(indices)
}

/// Reads an 8-bit grayscale PNG.
pub fn read_gray_png(path: &Path) -> Result<RawImage> {
    let bytes = fs::read(path).map_err(|e| Error::IngestFile {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let decoded =
        image::load_from_memory_with_format(&bytes, ImageFormat::Png).map_err(|e| {
            Error::IngestFile {
                path: path.to_path_buf(),
                message: format!("corrupt PNG: {e}"),
            }
        })?;
    match decoded {
        DynamicImage::ImageLuma8(img) => {
            let (w, h) = img.dimensions();
            RawImage::new(w as usize, h as usize, img.into_raw())
        }
        other => Err(Error::IngestFile {
            path: path.to_path_buf(),
            message: format!("expected 8-bit grayscale PNG, found {:?}", other.color()),
        }),
    }
}

/// Writes an 8-bit grayscale PNG.
pub fn write_gray_png(image: &RawImage, path: &Path) -> Result<()> {
    let buf = image::GrayImage::from_raw(image.width() as u32, image.height() as u32, image.pixels().to_vec())
        .expect("pixel count matches dimensions");
    buf.save_with_format(path, ImageFormat::Png).map_err(|e| Error::IngestFile {
        path: path.to_path_buf(),
        message: format!("cannot write PNG: {e}"),
    })
}
