use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Dataset, LabeledSample, RawImage};
use crate::{Error, Label, Result};

const BACKGROUND_LEVEL: f64 = 110.0;
const MAX_DEFECT_AMPLITUDE: f64 = 90.0;
const BLUR_RADIUS: usize = 2;

/// Parameters of the synthetic defect generator. Serialized as the dataset
/// manifest JSON (`image_size` is `[height, width]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub n_positive: usize,
    pub n_negative: usize,
    pub image_size: [usize; 2],
    pub defect_contrast: f64,
    pub noise_std: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_positive: 50,
            n_negative: 50,
            image_size: [32, 32],
            defect_contrast: 0.8,
            noise_std: 12.0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let [h, w] = self.image_size;
        if h < 8 || w < 8 {
            return Err(Error::Config(format!(
                "synthetic image size {h}x{w} is below the 8x8 minimum"
            )));
        }
        if !(0.0..=1.0).contains(&self.defect_contrast) {
            return Err(Error::Config(format!(
                "defect_contrast {} outside [0, 1]",
                self.defect_contrast
            )));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::Config(format!(
                "noise_std {} must be finite and non-negative",
                self.noise_std
            )));
        }
        Ok(())
    }
}

/// Textured background images; positives additionally carry one to three
/// bright elliptical blobs whose amplitude scales with `defect_contrast`.
pub fn generate_synthetic(config: &SyntheticConfig) -> Result<Dataset> {
    config.validate()?;
    let mut labels: Vec<Label> = std::iter::repeat_n(1, config.n_positive)
        .chain(std::iter::repeat_n(-1, config.n_negative))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    labels.shuffle(&mut rng);

    let samples = labels
        .par_iter()
        .enumerate()
        .map(|(i, &label)| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(i as u64 + 1);
            LabeledSample {
                image: render(config, label, &mut rng),
                label,
                series_id: "SYN".to_owned(),
                image_id: format!("SYN_{:04}", i + 1),
            }
        })
        .collect();
    Ok(Dataset::new(samples))
}

fn render(config: &SyntheticConfig, label: Label, rng: &mut ChaCha8Rng) -> RawImage {
    let [h, w] = config.image_size;
    let mut field = smoothed_noise(h, w, config.noise_std, rng);
    for v in &mut field {
        *v += BACKGROUND_LEVEL;
    }

    // Defect geometry is drawn for every image so both classes consume the
    // same random stream shape.
    let blobs = rng.random_range(1..=3usize);
    for _ in 0..blobs {
        let cy = rng.random_range(0.15..0.85) * h as f64;
        let cx = rng.random_range(0.15..0.85) * w as f64;
        let ry = rng.random_range(0.08..0.2) * h as f64;
        let rx = rng.random_range(0.08..0.2) * w as f64;
        let angle = rng.random_range(0.0..std::f64::consts::PI);
        let strength = rng.random_range(0.7..1.0);
        if label != 1 {
            continue;
        }
        let amplitude = config.defect_contrast * MAX_DEFECT_AMPLITUDE * strength;
        let (sin, cos) = angle.sin_cos();
        for r in 0..h {
            for c in 0..w {
                let dy = r as f64 - cy;
                let dx = c as f64 - cx;
                let u = (dx * cos + dy * sin) / rx;
                let v = (-dx * sin + dy * cos) / ry;
                let d2 = u * u + v * v;
                if d2 < 1.0 {
                    field[r * w + c] += amplitude * (1.0 - d2);
                }
            }
        }
    }

    let pixels = field
        .into_iter()
        .map(|v| v.round().clamp(0.0, 255.0) as u8)
        .collect();
    RawImage {
        width: w,
        height: h,
        pixels,
    }
}

/// Gaussian noise box-blurred with radius 2 and rescaled back to `std`.
fn smoothed_noise(h: usize, w: usize, std: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let raw: Vec<f64> = (0..h * w).map(|_| normal.sample(rng)).collect();
    let mut out = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            let (r0, r1) = (r.saturating_sub(BLUR_RADIUS), (r + BLUR_RADIUS).min(h - 1));
            let (c0, c1) = (c.saturating_sub(BLUR_RADIUS), (c + BLUR_RADIUS).min(w - 1));
            let mut sum = 0.0;
            for rr in r0..=r1 {
                for cc in c0..=c1 {
                    sum += raw[rr * w + cc];
                }
            }
            let count = ((r1 - r0 + 1) * (c1 - c0 + 1)) as f64;
            // mean of `count` unit normals has std 1/sqrt(count)
            out[r * w + c] = sum / count.sqrt() * std;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(seed: u64) -> SyntheticConfig {
        SyntheticConfig {
            seed,
            n_positive: 50,
            n_negative: 50,
            image_size: [16, 16],
            defect_contrast: 0.8,
            noise_std: 10.0,
        }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        assert_eq!(
            generate_synthetic(&config(3)).unwrap(),
            generate_synthetic(&config(3)).unwrap()
        );
        assert_ne!(
            generate_synthetic(&config(3)).unwrap(),
            generate_synthetic(&config(4)).unwrap()
        );
    }

    #[test]
    fn counts_follow_config() {
        let ds = generate_synthetic(&config(1)).unwrap();
        assert_eq!(ds.len(), 100);
        assert_eq!(ds.count_positive(), 50);
    }

    #[test]
    fn rejects_tiny_images_and_bad_contrast() {
        let mut c = config(0);
        c.image_size = [4, 16];
        assert!(matches!(generate_synthetic(&c), Err(Error::Config(_))));
        let mut c = config(0);
        c.defect_contrast = 1.5;
        assert!(matches!(generate_synthetic(&c), Err(Error::Config(_))));
    }

    #[test]
    fn zero_contrast_classes_are_indistinguishable() {
        let mut c = config(11);
        c.defect_contrast = 0.0;
        c.n_positive = 200;
        c.n_negative = 200;
        let ds = generate_synthetic(&c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut draw = |label: Label| -> Vec<f64> {
            let pool: Vec<&LabeledSample> =
                ds.samples.iter().filter(|s| s.label == label).collect();
            (0..1000)
                .map(|_| {
                    let s = pool[rng.random_range(0..pool.len())];
                    let p = s.image.pixels();
                    f64::from(p[rng.random_range(0..p.len())])
                })
                .collect()
        };
        let a = draw(1);
        let b = draw(-1);
        let stats = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
            (m, var)
        };
        let (ma, va) = stats(&a);
        let (mb, vb) = stats(&b);
        let z = (ma - mb) / (va / 1000.0 + vb / 1000.0).sqrt();
        // two-sided critical value at alpha = 0.01
        assert!(z.abs() < 2.576, "z = {z}");
    }
}
