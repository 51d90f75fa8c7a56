//! Hand-built image descriptor.
//!
//! The foreground is every pixel whose largest per-channel deviation from
//! the modal color exceeds 30. Components are 4-connected. A component is
//! *major* when it covers at least 200 pixels (which drops the small
//! distractor blobs) and *large* from 1000 pixels on. Shape statistics are
//! computed over major components only.

use crate::image::{Image, HEIGHT, WIDTH};

pub const DESCRIPTOR_DIM: usize = 16;
pub const FOREGROUND_THRESHOLD: i32 = 30;
pub const MAJOR_AREA: usize = 200;
pub const LARGE_AREA: usize = 1000;

/// Descriptor component indices.
pub mod axis {
    pub const CHROMA_R: usize = 0;
    pub const CHROMA_G: usize = 1;
    pub const CHROMA_B: usize = 2;
    pub const SPREAD: usize = 3;
    pub const CORNER: usize = 4;
    pub const ROUND: usize = 5;
    pub const EDGE_H: usize = 6;
    pub const EDGE_V: usize = 7;
    pub const FILL: usize = 8;
    pub const OUTLINE: usize = 9;
    pub const STRIPE: usize = 10;
    pub const COUNT: usize = 11;
    pub const CENTROID_X: usize = 12;
    pub const CENTROID_Y: usize = 13;
    pub const ASPECT: usize = 14;
    pub const SOLID: usize = 15;
}

pub type Descriptor = [f64; DESCRIPTOR_DIM];

/// One 4-connected foreground component.
#[derive(Clone, Debug, PartialEq)]
pub struct Component {
    pub area: usize,
    /// Pixels with at least one 4-neighbor outside the component.
    pub boundary: usize,
    /// Pixels whose four neighbors all share their exact color.
    pub uniform: usize,
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl Component {
    pub fn bbox_width(&self) -> usize {
        self.x1 - self.x0
    }

    pub fn bbox_height(&self) -> usize {
        self.y1 - self.y0
    }

    pub fn bbox_fill(&self) -> f64 {
        self.area as f64 / (self.bbox_width() * self.bbox_height()) as f64
    }

    pub fn uniform_fraction(&self) -> f64 {
        self.uniform as f64 / self.area as f64
    }

    pub fn is_major(&self) -> bool {
        self.area >= MAJOR_AREA
    }
}

/// Foreground mask and its components.
#[derive(Clone, Debug)]
pub struct Foreground {
    pub mask: Vec<bool>,
    pub components: Vec<Component>,
}

impl Foreground {
    pub fn area(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn major(&self) -> impl Iterator<Item = &Component> {
        self.components.iter().filter(|c| c.is_major())
    }
}

fn luminance(p: [u8; 3]) -> f64 {
    (f64::from(p[0]) + f64::from(p[1]) + f64::from(p[2])) / 3.0
}

pub fn foreground(img: &Image) -> Foreground {
    let bg = img.modal_color();
    let px = img.pixels();
    let mask: Vec<bool> = px
        .chunks_exact(3)
        .map(|p| (0..3).map(|c| (i32::from(p[c]) - i32::from(bg[c])).abs()).max().unwrap() > FOREGROUND_THRESHOLD)
        .collect();

    let mut label = vec![usize::MAX; WIDTH * HEIGHT];
    let mut components = Vec::new();
    let mut stack = Vec::new();
    for start in 0..WIDTH * HEIGHT {
        if !mask[start] || label[start] != usize::MAX {
            continue;
        }
        let id = components.len();
        let mut c = Component {
            area: 0,
            boundary: 0,
            uniform: 0,
            x0: usize::MAX,
            y0: usize::MAX,
            x1: 0,
            y1: 0,
        };
        label[start] = id;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = (i % WIDTH, i / WIDTH);
            c.area += 1;
            c.x0 = c.x0.min(x);
            c.y0 = c.y0.min(y);
            c.x1 = c.x1.max(x + 1);
            c.y1 = c.y1.max(y + 1);
            let neighbors = [
                (x > 0).then(|| i - 1),
                (x + 1 < WIDTH).then(|| i + 1),
                (y > 0).then(|| i - WIDTH),
                (y + 1 < HEIGHT).then(|| i + WIDTH),
            ];
            let mut on_edge = false;
            let mut same = true;
            for n in neighbors {
                match n {
                    Some(j) if mask[j] => {
                        same &= px[3 * j..3 * j + 3] == px[3 * i..3 * i + 3];
                        if label[j] == usize::MAX {
                            label[j] = id;
                            stack.push(j);
                        }
                    }
                    _ => on_edge = true,
                }
            }
            if on_edge {
                c.boundary += 1;
            } else if same {
                c.uniform += 1;
            }
        }
        components.push(c);
    }
    Foreground { mask, components }
}

/// Computes the 16-component descriptor.
pub fn image_descriptor(img: &Image) -> Descriptor {
    let fg = foreground(img);
    let px = img.pixels();
    let n = (WIDTH * HEIGHT) as f64;
    let mut d = [0.0; DESCRIPTOR_DIM];

    // Chroma and centroid over foreground pixels.
    let mut chroma = [0.0; 3];
    let (mut sx, mut sy, mut fg_n) = (0.0, 0.0, 0usize);
    for (i, p) in px.chunks_exact(3).enumerate() {
        if fg.mask[i] {
            let lum = luminance([p[0], p[1], p[2]]);
            for c in 0..3 {
                chroma[c] += (f64::from(p[c]) - lum).max(0.0);
            }
            sx += (i % WIDTH) as f64 + 0.5;
            sy += (i / WIDTH) as f64 + 0.5;
            fg_n += 1;
        }
    }
    if fg_n > 0 {
        let m = fg_n as f64;
        d[axis::CENTROID_X] = (sx / m / WIDTH as f64 - 0.5) * 4.0;
        d[axis::CENTROID_Y] = (sy / m / HEIGHT as f64 - 0.5) * 4.0;
    }

    // Excess chroma summed over the foreground, so two objects add up.
    for c in 0..3 {
        d[axis::CHROMA_R + c] = chroma[c] / n / 255.0 * 40.0;
    }

    // Whole-image channel spread, averaged over channels.
    for c in 0..3 {
        let mean = px.iter().skip(c).step_by(3).map(|&v| f64::from(v)).sum::<f64>() / n;
        let var = px.iter().skip(c).step_by(3).map(|&v| (f64::from(v) - mean).powi(2)).sum::<f64>() / n;
        d[axis::SPREAD] += var.sqrt() / 255.0 * 2.0 / 3.0;
    }

    // Edge energies and stripe transitions on luminance.
    let lum: Vec<f64> = px.chunks_exact(3).map(|p| luminance([p[0], p[1], p[2]])).collect();
    let (mut eh, mut ev, mut jumps) = (0.0, 0.0, 0usize);
    for y in 0..HEIGHT {
        for x in 0..WIDTH {
            let i = y * WIDTH + x;
            if x + 1 < WIDTH {
                let g = (lum[i + 1] - lum[i]).abs();
                eh += g;
                if fg.mask[i] && fg.mask[i + 1] && g > 40.0 {
                    jumps += 1;
                }
            }
            if y + 1 < HEIGHT {
                ev += (lum[i + WIDTH] - lum[i]).abs();
            }
        }
    }
    d[axis::EDGE_H] = eh / n / 255.0 * 160.0;
    d[axis::EDGE_V] = ev / n / 255.0 * 160.0;

    d[axis::FILL] = fg_n as f64 / n * 10.0;
    d[axis::STRIPE] = jumps as f64 / n * 40.0;

    let major: Vec<&Component> = fg.major().collect();
    let major_area: usize = major.iter().map(|c| c.area).sum();
    if major_area > 0 {
        let boundary: usize = major.iter().map(|c| c.boundary).sum();
        d[axis::OUTLINE] = (boundary as f64 / major_area as f64 - 0.2) * 4.0;
        let w = |c: &Component| c.area as f64 / major_area as f64;
        d[axis::ASPECT] = major
            .iter()
            .map(|c| w(c) * (c.bbox_width() as f64 / c.bbox_height() as f64).ln())
            .sum();
    }
    // Per-object shape evidence, summed so that two objects add up.
    for c in &major {
        let f = c.bbox_fill();
        d[axis::CORNER] += ((f - 0.9) * 10.0).max(0.0);
        d[axis::ROUND] += (1.0 - (f - std::f64::consts::FRAC_PI_4).abs() / 0.08).max(0.0);
        d[axis::SOLID] += ((c.uniform_fraction() - 0.7) * 4.0).max(0.0);
    }
    let small = major.iter().filter(|c| c.area < LARGE_AREA).count() as f64;
    let large = major.iter().filter(|c| c.area >= LARGE_AREA).count() as f64;
    d[axis::COUNT] = (small - 2.0 * large) / 4.0;
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::{render_feature_image, FeaturePair};

    #[test]
    fn uniform_image_has_no_foreground() {
        let img = Image::filled([210, 210, 210], false, false, 0);
        let d = image_descriptor(&img);
        assert_eq!(d[axis::FILL], 0.0);
        assert_eq!(d[axis::COUNT], 0.0);
        assert!(foreground(&img).components.is_empty());
        assert!(d.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn red_dominates_green_for_red_rectangles() {
        for seed in 0..10 {
            let d = image_descriptor(&render_feature_image(FeaturePair::RedGreen, true, false, seed));
            assert!(d[axis::CHROMA_R] > d[axis::CHROMA_G]);
        }
    }

    #[test]
    fn cluster_yields_many_components() {
        for seed in 0..10 {
            let fg = foreground(&render_feature_image(FeaturePair::OneMany, false, true, seed));
            assert!(fg.components.len() >= 6, "seed {seed}: {}", fg.components.len());
        }
    }

    #[test]
    fn square_and_circle_box_fill() {
        for seed in 0..10 {
            let sq = foreground(&render_feature_image(FeaturePair::SquareCircle, true, false, seed));
            let big = sq.major().max_by_key(|c| c.area).unwrap();
            assert!((big.bbox_fill() - 1.0).abs() < 0.05);
            let ci = foreground(&render_feature_image(FeaturePair::SquareCircle, false, true, seed));
            let big = ci.major().max_by_key(|c| c.area).unwrap();
            assert!((big.bbox_fill() - std::f64::consts::FRAC_PI_4).abs() < 0.05);
        }
    }

    #[test]
    fn single_component_boundary() {
        let mut img = Image::filled([220, 220, 220], false, false, 0);
        for y in 10..20 {
            for x in 10..20 {
                img.set(x, y, [0, 0, 0]);
            }
        }
        let fg = foreground(&img);
        assert_eq!(fg.components.len(), 1);
        assert_eq!(fg.components[0].area, 100);
        assert_eq!(fg.components[0].boundary, 36);
    }
}
