use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::RipplePair;

/// Row-major grayscale image with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::validation(format!("empty image {width}x{height}")));
        }
        if pixels.len() != width * height {
            return Err(Error::shape(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        if let Some(v) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::validation(format!("pixel value {v} outside [0, 1]")));
        }
        Ok(GrayImage {
            width,
            height,
            pixels,
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    /// Copies the half-open rectangle `[x0, x0 + w) × [y0, y0 + h)`; must lie inside the image.
    pub fn sub_image(&self, x0: usize, y0: usize, w: usize, h: usize) -> GrayImage {
        assert!(x0 + w <= self.width && y0 + h <= self.height && w > 0 && h > 0);
        let mut pixels = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            let row = y * self.width;
            pixels.extend_from_slice(&self.pixels[row + x0..row + x0 + w]);
        }
        GrayImage {
            width: w,
            height: h,
            pixels,
        }
    }
}

/// Half-open pixel span `[lo, hi)` covering `[a, b]`, clamped to `[0, len)`.
/// Spans that miss the image collapse to the nearest single pixel.
fn clamp_span(a: f64, b: f64, len: usize) -> (usize, usize) {
    let lo = a.min(b).floor();
    let hi = a.max(b).ceil();
    let max = len as f64;
    let lo_c = lo.clamp(0.0, max);
    let hi_c = hi.clamp(0.0, max);
    if hi_c > lo_c {
        (lo_c as usize, hi_c as usize)
    } else {
        let p = lo.clamp(0.0, max - 1.0) as usize;
        (p, p + 1)
    }
}

/// Crops the ripple region spanned by R1's top-left and R2's bottom-right corners.
pub fn crop_region(image: &GrayImage, pair: &RipplePair) -> GrayImage {
    let (x0, x1) = clamp_span(pair.tl1.x, pair.br2.x, image.width);
    let (y0, y1) = clamp_span(pair.tl1.y, pair.br2.y, image.height);
    image.sub_image(x0, y0, x1 - x0, y1 - y0)
}

fn luminance(r: f64, g: f64, b: f64) -> f64 {
    (0.299 * r + 0.587 * g + 0.114 * b).clamp(0.0, 1.0)
}

struct Header {
    magic: [u8; 2],
    width: usize,
    height: usize,
    maxval: usize,
    data_start: usize,
}

fn pnm_error(message: impl Into<String>) -> Error {
    Error::Parse {
        line: 0,
        message: message.into(),
    }
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    if bytes.len() < 2 {
        return Err(pnm_error("truncated image header"));
    }
    let magic = [bytes[0], bytes[1]];
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&c| c != b'\n') {
                        pos += 1;
                    }
                }
                Some(c) if c.is_ascii_whitespace() => pos += 1,
                Some(_) => break,
                None => return Err(pnm_error("truncated image header")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| pnm_error("bad number in image header"))?;
    }
    // exactly one whitespace byte separates the header from binary data
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(pnm_error("missing separator after image header"));
    }
    Ok(Header {
        magic,
        width: fields[0],
        height: fields[1],
        maxval: fields[2],
        data_start: pos + 1,
    })
}

/// Decodes 8-bit binary PGM (`P5`), or PPM (`P6`) converted by luminance.
pub fn decode_pnm(bytes: &[u8]) -> Result<GrayImage> {
    let h = parse_header(bytes)?;
    if h.maxval == 0 || h.maxval > 255 {
        return Err(pnm_error(format!(
            "unsupported maxval {} (8-bit only)",
            h.maxval
        )));
    }
    let channels = match &h.magic {
        b"P5" => 1,
        b"P6" => 3,
        m => {
            return Err(pnm_error(format!(
                "unsupported image type {:?}",
                String::from_utf8_lossy(m)
            )))
        }
    };
    let n = h.width * h.height;
    let data = &bytes[h.data_start..];
    if data.len() < n * channels {
        return Err(pnm_error("truncated image data"));
    }
    let scale = h.maxval as f64;
    let pixels = if channels == 1 {
        data[..n].iter().map(|&v| f64::from(v) / scale).collect()
    } else {
        data[..n * 3]
            .chunks_exact(3)
            .map(|c| {
                luminance(
                    f64::from(c[0]) / scale,
                    f64::from(c[1]) / scale,
                    f64::from(c[2]) / scale,
                )
            })
            .collect()
    };
    GrayImage::new(h.width, h.height, pixels)
}

pub fn encode_pgm(image: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend(image.pixels.iter().map(|v| (v * 255.0).round() as u8));
    out
}

pub fn load_image(path: &Path) -> Result<GrayImage> {
    decode_pnm(&std::fs::read(path)?)
}

pub fn save_pgm(image: &GrayImage, path: &Path) -> Result<()> {
    std::fs::write(path, encode_pgm(image))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::BoundingBox;

    fn pair_spanning(tl: (f64, f64), br: (f64, f64)) -> RipplePair {
        // zero-extent boxes put tl1 and br2 exactly on the centers
        RipplePair::new(
            BoundingBox::new(tl.0, tl.1, 0.0, 0.0).unwrap(),
            BoundingBox::new(br.0, br.1, 0.0, 0.0).unwrap(),
        )
    }

    fn gradient_image(w: usize, h: usize) -> GrayImage {
        GrayImage::from_fn(w, h, |x, y| ((x + y * w) % 256) as f64 / 255.0).unwrap()
    }

    #[test]
    fn crop_by_hand() {
        let img = gradient_image(100, 100);
        let c = crop_region(&img, &pair_spanning((10.0, 10.0), (20.0, 15.0)));
        assert_eq!((c.width(), c.height()), (10, 5));
        assert_eq!(c.get(0, 0), img.get(10, 10));
        assert_eq!(c.get(9, 4), img.get(19, 14));
    }

    #[test]
    fn crop_rounds_outward() {
        let img = gradient_image(50, 50);
        let c = crop_region(&img, &pair_spanning((10.5, 3.2), (12.1, 7.0)));
        assert_eq!((c.width(), c.height()), (3, 4));
        assert_eq!(c.get(0, 0), img.get(10, 3));
    }

    #[test]
    fn degenerate_and_outside_crops() {
        let img = gradient_image(100, 100);
        let c = crop_region(&img, &pair_spanning((10.0, 10.0), (10.0, 10.0)));
        assert_eq!((c.width(), c.height()), (1, 1));
        assert_eq!(c.get(0, 0), img.get(10, 10));

        let c = crop_region(&img, &pair_spanning((150.0, -40.0), (180.0, -20.0)));
        assert_eq!((c.width(), c.height()), (1, 1));
        assert_eq!(c.get(0, 0), img.get(99, 0));

        let c = crop_region(&img, &pair_spanning((-10.0, 90.0), (5.0, 130.0)));
        assert_eq!((c.width(), c.height()), (5, 10));
        assert_eq!(c.get(0, 0), img.get(0, 90));
    }

    #[test]
    fn pgm_round_trip() {
        let img = GrayImage::from_fn(7, 3, |x, y| ((x * 31 + y * 7) % 256) as f64 / 255.0).unwrap();
        let back = decode_pnm(&encode_pgm(&img)).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn pgm_with_comment_and_ppm_luminance() {
        let mut bytes = b"P5\n# comment\n2 1\n255\n".to_vec();
        bytes.extend([0u8, 255]);
        let img = decode_pnm(&bytes).unwrap();
        assert_eq!(img.pixels(), &[0.0, 1.0]);

        let mut ppm = b"P6 1 1 255\n".to_vec();
        ppm.extend([255u8, 0, 0]);
        let img = decode_pnm(&ppm).unwrap();
        assert!((img.get(0, 0) - 0.299).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_images() {
        assert!(decode_pnm(b"P2 1 1 255\n0").is_err());
        assert!(decode_pnm(b"P5 2 2 255\n\x00").is_err());
        assert!(decode_pnm(b"P5 1 1 65535\n\x00\x00").is_err());
        assert!(GrayImage::new(2, 1, vec![0.0, 1.5]).is_err());
        assert!(GrayImage::new(0, 1, vec![]).is_err());
    }
}
