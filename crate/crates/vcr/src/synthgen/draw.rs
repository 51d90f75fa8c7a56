//! Integer raster primitives. A pixel is covered when its center lies inside
//! the shape; nothing is anti-aliased.

use crate::image::{Image, Rgb, HEIGHT, WIDTH};
use crate::rng::Stream;

/// Half-open pixel box `[x0, x1) × [y0, y1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BBox {
    pub x0: i64,
    pub y0: i64,
    pub x1: i64,
    pub y1: i64,
}

impl BBox {
    pub fn new(x: i64, y: i64, w: i64, h: i64) -> Self {
        Self {
            x0: x,
            y0: y,
            x1: x + w,
            y1: y + h,
        }
    }

    pub fn width(&self) -> i64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> i64 {
        self.y1 - self.y0
    }

    /// True when the boxes, each grown by `margin`, intersect.
    pub fn near(&self, other: &BBox, margin: i64) -> bool {
        self.x0 - margin < other.x1 && other.x0 - margin < self.x1 && self.y0 - margin < other.y1 && other.y0 - margin < self.y1
    }
}

fn clip(b: &BBox) -> (usize, usize, usize, usize) {
    let x0 = b.x0.clamp(0, WIDTH as i64) as usize;
    let x1 = b.x1.clamp(0, WIDTH as i64) as usize;
    let y0 = b.y0.clamp(0, HEIGHT as i64) as usize;
    let y1 = b.y1.clamp(0, HEIGHT as i64) as usize;
    (x0, x1, y0, y1)
}

pub fn fill_rect(img: &mut Image, b: BBox, color: Rgb) {
    let (x0, x1, y0, y1) = clip(&b);
    for y in y0..y1 {
        for x in x0..x1 {
            img.set(x, y, color);
        }
    }
}

/// Draws a solid rectangle whose outermost `thickness` pixels use `outline`.
pub fn outlined_rect(img: &mut Image, b: BBox, thickness: i64, fill: Rgb, outline: Rgb) {
    fill_rect(img, b, outline);
    let inner = BBox {
        x0: b.x0 + thickness,
        y0: b.y0 + thickness,
        x1: b.x1 - thickness,
        y1: b.y1 - thickness,
    };
    if inner.x1 > inner.x0 && inner.y1 > inner.y0 {
        fill_rect(img, inner, fill);
    }
}

/// Rectangle filled with `fill` and crossed by vertical stripes of
/// `stripe_width` pixels repeating every `period` pixels.
pub fn striped_rect(img: &mut Image, b: BBox, stripe_width: i64, period: i64, fill: Rgb, stripe: Rgb) {
    let (x0, x1, y0, y1) = clip(&b);
    for y in y0..y1 {
        for x in x0..x1 {
            let phase = (x as i64 - b.x0).rem_euclid(period);
            img.set(x, y, if phase < stripe_width { stripe } else { fill });
        }
    }
}

#[inline]
fn inside_ellipse(px: f64, py: f64, cx: f64, cy: f64, rx: f64, ry: f64) -> bool {
    if rx <= 0.0 || ry <= 0.0 {
        return false;
    }
    let dx = (px - cx) / rx;
    let dy = (py - cy) / ry;
    dx * dx + dy * dy <= 1.0
}

/// Visits every pixel whose center lies in the ellipse inscribed in `b`.
fn for_ellipse_pixels(b: BBox, inset: f64, mut f: impl FnMut(usize, usize, bool)) {
    let cx = (b.x0 + b.x1) as f64 / 2.0;
    let cy = (b.y0 + b.y1) as f64 / 2.0;
    let rx = b.width() as f64 / 2.0;
    let ry = b.height() as f64 / 2.0;
    let (x0, x1, y0, y1) = clip(&b);
    for y in y0..y1 {
        for x in x0..x1 {
            let px = x as f64 + 0.5;
            let py = y as f64 + 0.5;
            if inside_ellipse(px, py, cx, cy, rx, ry) {
                let interior = inside_ellipse(px, py, cx, cy, rx - inset, ry - inset);
                f(x, y, interior);
            }
        }
    }
}

pub fn fill_ellipse(img: &mut Image, b: BBox, color: Rgb) {
    for_ellipse_pixels(b, 0.0, |x, y, _| img.set(x, y, color));
}

/// Ellipse ring of the given thickness; the interior keeps its pixels.
pub fn ellipse_ring(img: &mut Image, b: BBox, thickness: f64, color: Rgb) {
    for_ellipse_pixels(b, thickness, |x, y, interior| {
        if !interior {
            img.set(x, y, color);
        }
    });
}

pub fn outlined_ellipse(img: &mut Image, b: BBox, thickness: f64, fill: Rgb, outline: Rgb) {
    for_ellipse_pixels(b, thickness, |x, y, interior| {
        img.set(x, y, if interior { fill } else { outline });
    });
}

/// Disk of radius `r` (pixels) centered at a real-valued point.
pub fn fill_disk(img: &mut Image, cx: f64, cy: f64, r: f64, color: Rgb) {
    let b = BBox {
        x0: (cx - r).floor() as i64,
        y0: (cy - r).floor() as i64,
        x1: (cx + r).ceil() as i64 + 1,
        y1: (cy + r).ceil() as i64 + 1,
    };
    let (x0, x1, y0, y1) = clip(&b);
    for y in y0..y1 {
        for x in x0..x1 {
            if inside_ellipse(x as f64 + 0.5, y as f64 + 0.5, cx, cy, r, r) {
                img.set(x, y, color);
            }
        }
    }
}

/// Rejection-sampling placement of non-overlapping boxes.
#[derive(Default)]
pub struct Placer {
    pub placed: Vec<BBox>,
}

const PLACEMENT_TRIES: usize = 200;

impl Placer {
    /// Places a `w × h` box with its top-left corner drawn uniformly from
    /// `[x_lo, x_hi] × [y_lo, y_hi]`, keeping `margin` pixels from earlier
    /// boxes. Falls back to the last draw if no free spot turns up.
    #[allow(clippy::too_many_arguments)]
    pub fn place(&mut self, rng: &mut Stream, w: i64, h: i64, x_range: (i64, i64), y_range: (i64, i64), margin: i64) -> BBox {
        let mut b = BBox::new(x_range.0, y_range.0, w, h);
        for _ in 0..PLACEMENT_TRIES {
            b = BBox::new(rng.int_in(x_range.0, x_range.1), rng.int_in(y_range.0, y_range.1), w, h);
            if self.placed.iter().all(|p| !p.near(&b, margin)) {
                break;
            }
        }
        self.placed.push(b);
        b
    }

    /// Like [`Placer::place`] but gives up instead of overlapping.
    pub fn try_place(&mut self, rng: &mut Stream, w: i64, h: i64, x_range: (i64, i64), y_range: (i64, i64), margin: i64) -> Option<BBox> {
        for _ in 0..PLACEMENT_TRIES {
            let b = BBox::new(rng.int_in(x_range.0, x_range.1), rng.int_in(y_range.0, y_range.1), w, h);
            if self.placed.iter().all(|p| !p.near(&b, margin)) {
                self.placed.push(b);
                return Some(b);
            }
        }
        None
    }

    /// Top-left range that keeps a `w × h` box `pad` pixels inside the canvas.
    pub fn anywhere(w: i64, h: i64, pad: i64) -> ((i64, i64), (i64, i64)) {
        ((pad, WIDTH as i64 - pad - w), (pad, HEIGHT as i64 - pad - h))
    }
}
