use serde::{Deserialize, Serialize};

use super::draw;
use super::SynthError;
use crate::image::{Image, Rgb, HEIGHT, WIDTH};
use crate::rng::Stream;

/// Purple marker dots pasted onto an image.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DotIntervention {
    pub n_dots: usize,
    pub radius: f64,
    pub color: Rgb,
}

impl Default for DotIntervention {
    fn default() -> Self {
        Self {
            n_dots: 4,
            radius: 30.0,
            color: [60, 34, 112],
        }
    }
}

impl DotIntervention {
    pub fn apply(&self, img: &Image, seed: u64) -> Result<Image, SynthError> {
        apply_dot_intervention(img, self.n_dots, self.radius, self.color, seed)
    }
}

/// Paints `n_dots` filled disks with centers drawn uniformly so that each
/// disk lies fully inside the canvas. Pixels outside the disks are left
/// untouched.
pub fn apply_dot_intervention(img: &Image, n_dots: usize, radius: f64, color: Rgb, seed: u64) -> Result<Image, SynthError> {
    let half = WIDTH.min(HEIGHT) as f64 / 2.0;
    if !(radius > 0.0 && radius < half) {
        return Err(SynthError::InvalidRadius(radius));
    }
    let mut out = img.clone();
    let mut rng = Stream::keyed(seed, &[0xD07]);
    for _ in 0..n_dots {
        let cx = rng.uniform(radius, WIDTH as f64 - radius);
        let cy = rng.uniform(radius, HEIGHT as f64 - radius);
        draw::fill_disk(&mut out, cx, cy, radius, color);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::{render_feature_image, FeaturePair};
    use std::f64::consts::PI;

    fn base() -> Image {
        render_feature_image(FeaturePair::SquareCircle, true, true, 4)
    }

    #[test]
    fn zero_dots_is_identity() {
        let img = base();
        assert_eq!(apply_dot_intervention(&img, 0, 30.0, [60, 34, 112], 1).unwrap(), img);
    }

    #[test]
    fn default_dots_change_only_disk_pixels() {
        let img = base();
        let iv = DotIntervention::default();
        for seed in 0..10 {
            let out = iv.apply(&img, seed).unwrap();
            let changed = out.diff_count(&img);
            let disk = PI * 30.0 * 30.0;
            assert!(changed as f64 >= disk * 0.99 && changed as f64 <= disk * 4.0 * 1.01, "{changed}");
            // Every changed pixel carries the dot color.
            for y in 0..HEIGHT {
                for x in 0..WIDTH {
                    if out.get(x, y) != img.get(x, y) {
                        assert_eq!(out.get(x, y), [60, 34, 112]);
                    }
                }
            }
        }
    }

    #[test]
    fn radius_must_fit() {
        let img = base();
        assert!(matches!(apply_dot_intervention(&img, 4, 112.0, [0, 0, 0], 0), Err(SynthError::InvalidRadius(_))));
        assert!(apply_dot_intervention(&img, 4, 111.0, [0, 0, 0], 0).is_ok());
    }
}
