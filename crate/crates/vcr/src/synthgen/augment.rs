//! Random rotation, translation and resized crop with nearest-neighbor
//! resampling. Uncovered pixels take the image's modal (background) color.

use serde::{Deserialize, Serialize};

use crate::image::{Image, HEIGHT, WIDTH};
use crate::rng::Stream;

pub const MAX_ROTATION_DEG: f64 = 15.0;
pub const MAX_TRANSLATION_FRAC: f64 = 0.10;
pub const MIN_CROP_SCALE: f64 = 0.85;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentParams {
    pub rotation_deg: f64,
    /// Shift in pixels.
    pub tx: f64,
    pub ty: f64,
    /// Fraction of the image area kept by the crop before resizing back.
    pub crop_scale: f64,
}

impl AugmentParams {
    pub const IDENTITY: AugmentParams = AugmentParams {
        rotation_deg: 0.0,
        tx: 0.0,
        ty: 0.0,
        crop_scale: 1.0,
    };

    pub fn draw(seed: u64) -> Self {
        let mut rng = Stream::keyed(seed, &[0xA46]);
        let max_tx = MAX_TRANSLATION_FRAC * WIDTH as f64;
        let max_ty = MAX_TRANSLATION_FRAC * HEIGHT as f64;
        Self {
            rotation_deg: rng.uniform(-MAX_ROTATION_DEG, MAX_ROTATION_DEG),
            tx: rng.uniform(-max_tx, max_tx),
            ty: rng.uniform(-max_ty, max_ty),
            crop_scale: rng.uniform(MIN_CROP_SCALE, 1.0),
        }
    }
}

pub fn augment(img: &Image, seed: u64) -> Image {
    augment_with(img, &AugmentParams::draw(seed))
}

/// Maps each output pixel center back through the inverse transform and
/// copies the source pixel it lands in.
pub fn augment_with(img: &Image, p: &AugmentParams) -> Image {
    let fill = img.modal_color();
    let mut out = Image::filled(fill, img.has_a, img.has_b, img.seed);
    let (sin, cos) = p.rotation_deg.to_radians().sin_cos();
    // A centered crop of side sqrt(scale) resized to full size zooms in.
    let zoom = p.crop_scale.sqrt();
    let cx = WIDTH as f64 / 2.0;
    let cy = HEIGHT as f64 / 2.0;
    for y in 0..HEIGHT {
        for x in 0..WIDTH {
            let u = (x as f64 + 0.5 - cx - p.tx) * zoom;
            let v = (y as f64 + 0.5 - cy - p.ty) * zoom;
            let sx = (cos * u + sin * v + cx).floor();
            let sy = (-sin * u + cos * v + cy).floor();
            if sx >= 0.0 && sy >= 0.0 && (sx as usize) < WIDTH && (sy as usize) < HEIGHT {
                out.set(x, y, img.get(sx as usize, sy as usize));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::{render_feature_image, FeaturePair};

    #[test]
    fn identity_params_copy_the_image() {
        let img = render_feature_image(FeaturePair::HorizVert, true, true, 2);
        assert_eq!(augment_with(&img, &AugmentParams::IDENTITY), img);
    }

    #[test]
    fn drawn_params_stay_in_range() {
        for seed in 0..500 {
            let p = AugmentParams::draw(seed);
            assert!(p.rotation_deg.abs() <= 15.0);
            assert!(p.tx.abs() <= 22.4 && p.ty.abs() <= 22.4);
            assert!((0.85..=1.0).contains(&p.crop_scale));
        }
    }

    #[test]
    fn seeded_and_flag_preserving() {
        let img = render_feature_image(FeaturePair::RedGreen, true, false, 8);
        let a = augment(&img, 5);
        assert_eq!(a, augment(&img, 5));
        assert!(a.has_a && !a.has_b);
        assert_ne!(a, img);
    }

    #[test]
    fn pure_translation_shifts_pixels() {
        let img = render_feature_image(FeaturePair::SquareCircle, true, false, 1);
        let p = AugmentParams { tx: 5.0, ty: -3.0, ..AugmentParams::IDENTITY };
        let out = augment_with(&img, &p);
        assert_eq!(out.get(100, 100), img.get(95, 103));
    }
}
