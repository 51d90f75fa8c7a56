//! Fixed-size RGB rasters and their binary PPM (P6) encoding.

use std::fmt;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

pub const WIDTH: usize = 224;
pub const HEIGHT: usize = 224;

pub type Rgb = [u8; 3];

/// A 224×224 RGB image, row-major, carrying the ground-truth feature flags
/// and the seed it was generated from.
#[derive(Clone, PartialEq, Eq)]
pub struct Image {
    pixels: Vec<u8>,
    pub has_a: bool,
    pub has_b: bool,
    pub seed: u64,
}

impl fmt::Debug for Image {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Image")
            .field("has_a", &self.has_a)
            .field("has_b", &self.has_b)
            .field("seed", &self.seed)
            .finish_non_exhaustive()
    }
}

impl Image {
    pub fn filled(color: Rgb, has_a: bool, has_b: bool, seed: u64) -> Self {
        let mut pixels = Vec::with_capacity(WIDTH * HEIGHT * 3);
        for _ in 0..WIDTH * HEIGHT {
            pixels.extend_from_slice(&color);
        }
        Self {
            pixels,
            has_a,
            has_b,
            seed,
        }
    }

    pub fn from_raw(pixels: Vec<u8>, has_a: bool, has_b: bool, seed: u64) -> Result<Self, PpmError> {
        if pixels.len() != WIDTH * HEIGHT * 3 {
            return Err(PpmError::Truncated {
                expected: WIDTH * HEIGHT * 3,
                found: pixels.len(),
            });
        }
        Ok(Self {
            pixels,
            has_a,
            has_b,
            seed,
        })
    }

    pub fn width(&self) -> usize {
        WIDTH
    }

    pub fn height(&self) -> usize {
        HEIGHT
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Rgb {
        let i = (y * WIDTH + x) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: Rgb) {
        let i = (y * WIDTH + x) * 3;
        self.pixels[i..i + 3].copy_from_slice(&c);
    }

    /// Number of pixels whose color differs from `other`.
    pub fn diff_count(&self, other: &Image) -> usize {
        self.pixels
            .chunks_exact(3)
            .zip(other.pixels.chunks_exact(3))
            .filter(|(a, b)| a != b)
            .count()
    }

    /// The most frequent color. Rendered images are dominated by their
    /// background, so a majority vote settles almost every case; the full
    /// histogram is the fallback.
    pub fn modal_color(&self) -> Rgb {
        let pack = |p: &[u8]| (u32::from(p[0]) << 16) | (u32::from(p[1]) << 8) | u32::from(p[2]);
        let mut candidate = 0u32;
        let mut count = 0usize;
        for p in self.pixels.chunks_exact(3) {
            let v = pack(p);
            if count == 0 {
                candidate = v;
                count = 1;
            } else if v == candidate {
                count += 1;
            } else {
                count -= 1;
            }
        }
        let n = self.pixels.chunks_exact(3).filter(|p| pack(p) == candidate).count();
        let winner = if 2 * n > WIDTH * HEIGHT {
            candidate
        } else {
            let mut hist = std::collections::HashMap::<u32, usize>::new();
            for p in self.pixels.chunks_exact(3) {
                *hist.entry(pack(p)).or_default() += 1;
            }
            hist.into_iter()
                .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
                .map(|(c, _)| c)
                .unwrap_or(0)
        };
        [(winner >> 16) as u8, (winner >> 8) as u8, winner as u8]
    }
}

#[derive(Debug, Error)]
pub enum PpmError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("not a binary PPM (magic {0:?})")]
    Format(String),
    #[error("malformed PPM header: {0}")]
    Header(String),
    #[error("truncated pixel payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("unsupported dimensions {width}x{height} (expected {WIDTH}x{HEIGHT})")]
    Dimensions { width: usize, height: usize },
}

impl PpmError {
    /// Stable numeric code per error kind.
    pub fn code(&self) -> u8 {
        match self {
            PpmError::Io(_) => 1,
            PpmError::Format(_) => 2,
            PpmError::Header(_) => 3,
            PpmError::Truncated { .. } => 4,
            PpmError::Dimensions { .. } => 5,
        }
    }
}

pub fn encode_ppm<W: Write>(img: &Image, mut w: W) -> io::Result<()> {
    write!(
        w,
        "P6\n# vcr has_a={} has_b={} seed={}\n{} {}\n255\n",
        u8::from(img.has_a),
        u8::from(img.has_b),
        img.seed,
        WIDTH,
        HEIGHT
    )?;
    w.write_all(&img.pixels)?;
    w.flush()
}

pub fn write_ppm(img: &Image, path: impl AsRef<Path>) -> Result<(), PpmError> {
    let f = File::create(path)?;
    encode_ppm(img, BufWriter::new(f))?;
    Ok(())
}

pub fn read_ppm(path: impl AsRef<Path>) -> Result<Image, PpmError> {
    let f = File::open(path)?;
    decode_ppm(BufReader::new(f))
}

struct Meta {
    has_a: bool,
    has_b: bool,
    seed: u64,
}

fn parse_meta(comment: &str) -> Option<Meta> {
    let rest = comment.trim().strip_prefix("vcr")?;
    let mut meta = Meta {
        has_a: false,
        has_b: false,
        seed: 0,
    };
    for kv in rest.split_whitespace() {
        let (k, v) = kv.split_once('=')?;
        match k {
            "has_a" => meta.has_a = parse_flag(v)?,
            "has_b" => meta.has_b = parse_flag(v)?,
            "seed" => meta.seed = v.parse().ok()?,
            _ => return None,
        }
    }
    Some(meta)
}

fn parse_flag(v: &str) -> Option<bool> {
    match v {
        "0" => Some(false),
        "1" => Some(true),
        _ => None,
    }
}

/// Reads a P6 stream. A `# vcr ...` comment restores flags and seed; other
/// comments are skipped.
pub fn decode_ppm<R: Read>(mut r: R) -> Result<Image, PpmError> {
    let mut magic = [0u8; 2];
    r.read_exact(&mut magic)
        .map_err(|_| PpmError::Header("missing magic number".into()))?;
    if &magic != b"P6" {
        return Err(PpmError::Format(String::from_utf8_lossy(&magic).into_owned()));
    }

    let mut meta = Meta {
        has_a: false,
        has_b: false,
        seed: 0,
    };
    let mut fields = Vec::with_capacity(3);
    let mut byte = [0u8; 1];
    let mut token = String::new();
    // Header tokens are separated by whitespace; exactly one whitespace byte
    // follows the maxval before the payload.
    while fields.len() < 3 {
        if r.read(&mut byte)? == 0 {
            return Err(PpmError::Header("unexpected end of header".into()));
        }
        let c = byte[0];
        if c == b'#' {
            let mut line = Vec::new();
            loop {
                if r.read(&mut byte)? == 0 || byte[0] == b'\n' {
                    break;
                }
                line.push(byte[0]);
            }
            if let Some(m) = parse_meta(&String::from_utf8_lossy(&line)) {
                meta = m;
            }
            continue;
        }
        if c.is_ascii_whitespace() {
            if !token.is_empty() {
                let v: usize = token
                    .parse()
                    .map_err(|_| PpmError::Header(format!("bad number {token:?}")))?;
                fields.push(v);
                token.clear();
            }
            continue;
        }
        if !c.is_ascii_digit() {
            return Err(PpmError::Header(format!("unexpected byte 0x{c:02x}")));
        }
        token.push(c as char);
    }

    let (width, height, maxval) = (fields[0], fields[1], fields[2]);
    if maxval != 255 {
        return Err(PpmError::Header(format!("unsupported maxval {maxval}")));
    }
    if width != WIDTH || height != HEIGHT {
        return Err(PpmError::Dimensions { width, height });
    }

    let expected = WIDTH * HEIGHT * 3;
    let mut pixels = Vec::with_capacity(expected);
    r.take(expected as u64).read_to_end(&mut pixels)?;
    if pixels.len() != expected {
        return Err(PpmError::Truncated {
            expected,
            found: pixels.len(),
        });
    }
    Image::from_raw(pixels, meta.has_a, meta.has_b, meta.seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Image {
        let mut img = Image::filled([210, 210, 210], true, false, 987_654_321);
        for x in 10..40 {
            img.set(x, 20, [1, 2, 3]);
        }
        img
    }

    fn encoded(img: &Image) -> Vec<u8> {
        let mut buf = Vec::new();
        encode_ppm(img, &mut buf).unwrap();
        buf
    }

    #[test]
    fn roundtrip_preserves_pixels_and_metadata() {
        let img = sample();
        let back = decode_ppm(&encoded(&img)[..]).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn header_comment_format() {
        let buf = encoded(&sample());
        let head = String::from_utf8_lossy(&buf[..60]);
        assert!(head.starts_with("P6\n# vcr has_a=1 has_b=0 seed=987654321\n224 224\n255\n"));
    }

    #[test]
    fn p5_is_a_format_error() {
        let mut buf = encoded(&sample());
        buf[1] = b'5';
        let err = decode_ppm(&buf[..]).unwrap_err();
        assert!(matches!(err, PpmError::Format(_)));
        assert_eq!(err.code(), 2);
    }

    #[test]
    fn truncated_payload() {
        let buf = encoded(&sample());
        let err = decode_ppm(&buf[..buf.len() - 10]).unwrap_err();
        assert!(matches!(err, PpmError::Truncated { .. }), "{err}");
    }

    #[test]
    fn wrong_dimensions() {
        let mut buf = b"P6\n10 10\n255\n".to_vec();
        buf.extend(std::iter::repeat_n(0u8, 300));
        let err = decode_ppm(&buf[..]).unwrap_err();
        assert!(matches!(err, PpmError::Dimensions { width: 10, height: 10 }));
    }

    #[test]
    fn garbage_header() {
        let err = decode_ppm(&b"P6\n22x 224\n255\n"[..]).unwrap_err();
        assert!(matches!(err, PpmError::Header(_)));
        let err = decode_ppm(&b"P6\n224"[..]).unwrap_err();
        assert!(matches!(err, PpmError::Header(_)));
    }

    #[test]
    fn error_codes_are_distinct() {
        let codes = [
            PpmError::Io(io::Error::other("x")).code(),
            PpmError::Format(String::new()).code(),
            PpmError::Header(String::new()).code(),
            PpmError::Truncated { expected: 0, found: 0 }.code(),
            PpmError::Dimensions { width: 0, height: 0 }.code(),
        ];
        let mut sorted = codes.to_vec();
        sorted.dedup();
        assert_eq!(sorted.len(), codes.len());
    }

    #[test]
    fn modal_color_of_background() {
        assert_eq!(sample().modal_color(), [210, 210, 210]);
    }
}
