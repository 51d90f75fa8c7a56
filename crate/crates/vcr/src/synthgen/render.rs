//! Per-pair image generators.
//!
//! Each image is a neutral gray canvas (level 200–235) holding the object
//! for feature A when `has_a`, the object for feature B when `has_b`, and,
//! for some pairs, up to three small distractor ellipses. Object colors are
//! drawn from `[50, 150]^3` except on the red/green pair. Appearance and
//! placement use separate streams keyed by pair and seed, so toggling one
//! flag leaves the background level and the other object's size and color
//! unchanged.

use super::draw::{self, BBox, Placer};
use super::FeaturePair;
use crate::image::{Image, Rgb, HEIGHT, WIDTH};
use crate::rng::Stream;

pub const RED: Rgb = [220, 50, 50];
pub const GREEN: Rgb = [50, 180, 50];
pub const DARK_OUTLINE: Rgb = [30, 30, 30];
pub const BLACK: Rgb = [0, 0, 0];

const W: i64 = WIDTH as i64;
const H: i64 = HEIGHT as i64;
const OBJECT_MARGIN: i64 = 8;
const DISTRACTOR_MARGIN: i64 = 4;

fn object_color(rng: &mut Stream) -> Rgb {
    [
        rng.int_in(50, 150) as u8,
        rng.int_in(50, 150) as u8,
        rng.int_in(50, 150) as u8,
    ]
}

fn background(rng: &mut Stream) -> Rgb {
    let g = rng.int_in(200, 235) as u8;
    [g, g, g]
}

fn has_distractors(pair: FeaturePair) -> bool {
    matches!(
        pair,
        FeaturePair::RedGreen | FeaturePair::HorizVert | FeaturePair::SquareCircle | FeaturePair::StripedSolid
    )
}

/// Renders one image for `pair` with the requested features present.
pub fn render_feature_image(pair: FeaturePair, has_a: bool, has_b: bool, seed: u64) -> Image {
    let mut rng = Stream::keyed(seed, &[pair.index()]);
    let mut pos = Stream::keyed(seed, &[pair.index(), 1]);
    let bg = background(&mut rng);
    let mut img = Image::filled(bg, has_a, has_b, seed);
    let mut placer = Placer::default();

    match pair {
        FeaturePair::RedGreen => {
            for (present, color) in [(has_a, RED), (has_b, GREEN)] {
                let w = rng.int_in(50, 80);
                let h = rng.int_in(50, 80);
                if present {
                    let (xr, yr) = Placer::anywhere(w, h, OBJECT_MARGIN);
                    let b = placer.place(&mut pos, w, h, xr, yr, OBJECT_MARGIN);
                    draw::outlined_rect(&mut img, b, 2, color, DARK_OUTLINE);
                }
            }
        }
        FeaturePair::LeftRight => {
            // Horizontal start ranges keep the two halves disjoint.
            let ranges = [(10, W / 2 - 60), (W / 2 + 10, W - 60)];
            for (present, xr) in [(has_a, ranges[0]), (has_b, ranges[1])] {
                let w = rng.int_in(40, 50);
                let h = rng.int_in(40, 50);
                let color = object_color(&mut rng);
                if present {
                    let b = placer.place(&mut pos, w, h, xr, (10, H - 60), 0);
                    draw::fill_ellipse(&mut img, b, color);
                }
            }
        }
        FeaturePair::TopBottom => {
            let ranges = [(15, H / 2 - 65), (H / 2 + 15, H - 65)];
            for (present, yr) in [(has_a, ranges[0]), (has_b, ranges[1])] {
                let w = rng.int_in(40, 50);
                let h = rng.int_in(40, 50);
                let color = object_color(&mut rng);
                if present {
                    let b = placer.place(&mut pos, w, h, (10, W - 60), yr, 0);
                    draw::fill_ellipse(&mut img, b, color);
                }
            }
        }
        FeaturePair::OneMany => {
            let one_color = object_color(&mut rng);
            let many_color = object_color(&mut rng);
            if has_b {
                // A cluster of 6-10 small ellipses inside a square region.
                const REGION: i64 = 96;
                let (xr, yr) = Placer::anywhere(REGION, REGION, OBJECT_MARGIN);
                let region = placer.place(&mut pos, REGION, REGION, xr, yr, OBJECT_MARGIN);
                let n = rng.int_in(6, 10);
                let mut inner = Placer::default();
                for _ in 0..n {
                    let w = rng.int_in(18, 20);
                    let h = rng.int_in(18, 20);
                    let b = inner.place(
                        &mut pos,
                        w,
                        h,
                        (region.x0, region.x1 - w),
                        (region.y0, region.y1 - h),
                        3,
                    );
                    draw::fill_ellipse(&mut img, b, many_color);
                }
            }
            if has_a {
                let (xr, yr) = Placer::anywhere(50, 50, OBJECT_MARGIN);
                let b = placer.place(&mut pos, 50, 50, xr, yr, OBJECT_MARGIN);
                draw::fill_ellipse(&mut img, b, one_color);
            }
        }
        FeaturePair::HorizVert => {
            for (present, horizontal) in [(has_a, true), (has_b, false)] {
                let long = rng.int_in(90, 130);
                let short = rng.int_in(14, 20);
                let color = object_color(&mut rng);
                let (w, h) = if horizontal { (long, short) } else { (short, long) };
                if present {
                    let (xr, yr) = Placer::anywhere(w, h, OBJECT_MARGIN);
                    let b = placer.place(&mut pos, w, h, xr, yr, OBJECT_MARGIN);
                    draw::fill_rect(&mut img, b, color);
                }
            }
        }
        FeaturePair::SquareCircle => {
            for (present, square) in [(has_a, true), (has_b, false)] {
                let color = object_color(&mut rng);
                if present {
                    let (xr, yr) = Placer::anywhere(60, 60, OBJECT_MARGIN);
                    let b = placer.place(&mut pos, 60, 60, xr, yr, OBJECT_MARGIN);
                    if square {
                        draw::outlined_rect(&mut img, b, 3, color, BLACK);
                    } else {
                        draw::outlined_ellipse(&mut img, b, 3.0, color, BLACK);
                    }
                }
            }
        }
        FeaturePair::EmptyFilled => {
            for (present, hollow) in [(has_a, true), (has_b, false)] {
                let w = rng.int_in(50, 70);
                let h = rng.int_in(50, 70);
                let color = object_color(&mut rng);
                if present {
                    let (xr, yr) = Placer::anywhere(w, h, OBJECT_MARGIN);
                    let b = placer.place(&mut pos, w, h, xr, yr, OBJECT_MARGIN);
                    if hollow {
                        draw::ellipse_ring(&mut img, b, 5.0, color);
                    } else {
                        draw::fill_ellipse(&mut img, b, color);
                    }
                }
            }
        }
        FeaturePair::StripedSolid => {
            for (present, striped) in [(has_a, true), (has_b, false)] {
                let w = rng.int_in(60, 80);
                let h = rng.int_in(60, 80);
                let color = object_color(&mut rng);
                if present {
                    let (xr, yr) = Placer::anywhere(w, h, OBJECT_MARGIN);
                    let b = placer.place(&mut pos, w, h, xr, yr, OBJECT_MARGIN);
                    if striped {
                        let dark = color.map(|c| (f64::from(c) * 0.3) as u8);
                        draw::striped_rect(&mut img, b, 3, 8, color, dark);
                    } else {
                        draw::fill_rect(&mut img, b, color);
                    }
                }
            }
        }
    }

    if has_distractors(pair) {
        let n = rng.int_in(0, 3);
        for _ in 0..n {
            let w = rng.int_in(8, 14);
            let h = rng.int_in(8, 14);
            let color = object_color(&mut rng);
            let (xr, yr) = Placer::anywhere(w, h, 2);
            if let Some(b) = placer.try_place(&mut pos, w, h, xr, yr, DISTRACTOR_MARGIN) {
                draw::fill_ellipse(&mut img, b, color);
            }
        }
    }
    img
}

/// Bounding box of the pixels that differ from the background.
pub fn foreground_bbox(img: &Image) -> Option<BBox> {
    let bg = img.modal_color();
    let mut b: Option<BBox> = None;
    for y in 0..HEIGHT {
        for x in 0..WIDTH {
            if img.get(x, y) != bg {
                let (x, y) = (x as i64, y as i64);
                b = Some(match b {
                    None => BBox::new(x, y, 1, 1),
                    Some(b) => BBox {
                        x0: b.x0.min(x),
                        y0: b.y0.min(y),
                        x1: b.x1.max(x + 1),
                        y1: b.y1.max(y + 1),
                    },
                });
            }
        }
    }
    b
}
