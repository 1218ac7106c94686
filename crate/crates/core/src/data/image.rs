use crate::error::{Error, Result};

/// Grayscale raster, row-major, pixels in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch {
                context: "image pixels",
                expected: width * height,
                actual: pixels.len(),
            });
        }
        if let Some(p) = pixels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidArgument(format!(
                "pixel value {p} outside [0, 1]"
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn blank(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            pixels: vec![0.0; width * height],
        }
    }

    /// Square image from a flat row of `side²` pixels.
    pub fn from_square_row(row: &[f64]) -> Result<Self> {
        let side = square_side(row.len())?;
        Self::new(side, side, row.to_vec())
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    /// Pixel at signed coordinates; zero outside the raster.
    #[inline]
    fn get_or_zero(&self, x: isize, y: isize) -> f64 {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            0.0
        } else {
            self.get(x as usize, y as usize)
        }
    }

    /// Bilinear sample at real coordinates with zero fill outside.
    fn sample_zero_fill(&self, sx: f64, sy: f64) -> f64 {
        let x0 = sx.floor();
        let y0 = sy.floor();
        let fx = sx - x0;
        let fy = sy - y0;
        let (xi, yi) = (x0 as isize, y0 as isize);
        let p00 = self.get_or_zero(xi, yi);
        let p10 = self.get_or_zero(xi + 1, yi);
        let p01 = self.get_or_zero(xi, yi + 1);
        let p11 = self.get_or_zero(xi + 1, yi + 1);
        (1.0 - fy) * ((1.0 - fx) * p00 + fx * p10) + fy * ((1.0 - fx) * p01 + fx * p11)
    }
}

pub(crate) fn square_side(len: usize) -> Result<usize> {
    let side = (len as f64).sqrt().round() as usize;
    if side * side != len || len == 0 {
        return Err(Error::InvalidArgument(format!(
            "length {len} is not a positive perfect square"
        )));
    }
    Ok(side)
}

/// Source coordinate of destination index `i` on a corner-aligned grid.
#[inline]
fn corner_aligned(i: usize, src: usize, dst: usize) -> f64 {
    if dst == 1 {
        (src as f64 - 1.0) / 2.0
    } else {
        i as f64 * (src as f64 - 1.0) / (dst as f64 - 1.0)
    }
}

/// Bilinear resize on a corner-aligned grid: destination corners sample the
/// source corners exactly.
pub fn resize_bilinear(img: &Image, width: usize, height: usize) -> Result<Image> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidArgument(
            "resize target must be at least 1x1".into(),
        ));
    }
    if width == img.width && height == img.height {
        return Ok(img.clone());
    }
    let mut out = Vec::with_capacity(width * height);
    for y in 0..height {
        let sy = corner_aligned(y, img.height, height);
        let y0 = (sy.floor() as usize).min(img.height - 1);
        let y1 = (y0 + 1).min(img.height - 1);
        let fy = sy - y0 as f64;
        for x in 0..width {
            let sx = corner_aligned(x, img.width, width);
            let x0 = (sx.floor() as usize).min(img.width - 1);
            let x1 = (x0 + 1).min(img.width - 1);
            let fx = sx - x0 as f64;
            let top = lerp(img.get(x0, y0), img.get(x1, y0), fx);
            let bottom = lerp(img.get(x0, y1), img.get(x1, y1), fx);
            out.push(lerp(top, bottom, fy).clamp(0.0, 1.0));
        }
    }
    Ok(Image {
        width,
        height,
        pixels: out,
    })
}

/// Exact at both ends and for equal endpoints.
#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + t * (b - a)
}

/// `(sin θ, cos θ)` with exact values on multiples of 90°.
fn sin_cos_degrees(degrees: f64) -> (f64, f64) {
    let quarter = degrees / 90.0;
    if quarter == quarter.round() {
        match (quarter.round() as i64).rem_euclid(4) {
            0 => (0.0, 1.0),
            1 => (1.0, 0.0),
            2 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        }
    } else {
        degrees.to_radians().sin_cos()
    }
}

/// Counterclockwise rotation about the pixel-grid center by inverse mapping
/// with bilinear interpolation; source samples outside the raster are zero.
pub fn rotate_image(img: &Image, degrees: f64) -> Result<Image> {
    if img.width != img.height {
        return Err(Error::InvalidArgument(format!(
            "rotation needs a square image, got {}x{}",
            img.width, img.height
        )));
    }
    if !degrees.is_finite() {
        return Err(Error::NonFinite("rotation angle"));
    }
    let (s, c) = sin_cos_degrees(degrees);
    let cx = (img.width as f64 - 1.0) / 2.0;
    let cy = (img.height as f64 - 1.0) / 2.0;
    let mut out = Vec::with_capacity(img.pixels.len());
    for y in 0..img.height {
        let dy = y as f64 - cy;
        for x in 0..img.width {
            let dx = x as f64 - cx;
            // image rows grow downward, so a visually counterclockwise turn
            // pulls each output pixel from the clockwise-rotated position
            let sx = cx + c * dx - s * dy;
            let sy = cy + s * dx + c * dy;
            out.push(img.sample_zero_fill(sx, sy).clamp(0.0, 1.0));
        }
    }
    Ok(Image {
        width: img.width,
        height: img.height,
        pixels: out,
    })
}

/// Shrinks the content to `round(factor·dim)` and pads it back, centered,
/// with zeros.
pub fn dilate_image(img: &Image, factor: f64) -> Result<Image> {
    if !(factor > 0.0 && factor <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "dilation factor {factor} outside (0, 1]"
        )));
    }
    let w = ((factor * img.width as f64).round() as usize).max(1);
    let h = ((factor * img.height as f64).round() as usize).max(1);
    let inner = resize_bilinear(img, w, h)?;
    let ox = (img.width - w) / 2;
    let oy = (img.height - h) / 2;
    let mut out = Image::blank(img.width, img.height);
    for y in 0..h {
        let dst = (oy + y) * img.width + ox;
        out.pixels[dst..dst + w].copy_from_slice(&inner.pixels[y * w..(y + 1) * w]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::RandomSource;

    fn random_image(side: usize, seed: u64) -> Image {
        let mut r = RandomSource::new(seed);
        Image::new(side, side, (0..side * side).map(|_| r.next_f64()).collect()).unwrap()
    }

    /// A 16x16 glyph: an off-center bar plus a diagonal stroke.
    pub(crate) fn glyph16() -> Image {
        let mut px = vec![0.0; 256];
        for y in 3..13 {
            px[y * 16 + 5] = 1.0;
            px[y * 16 + 6] = 0.6;
        }
        for k in 4..12 {
            px[k * 16 + k] = 0.8;
        }
        Image::new(16, 16, px).unwrap()
    }

    #[test]
    fn rejects_out_of_range_pixels() {
        assert!(Image::new(1, 1, vec![1.5]).is_err());
        assert!(Image::new(2, 1, vec![0.5]).is_err());
    }

    #[test]
    fn identity_resize() {
        let img = random_image(5, 1);
        assert_eq!(resize_bilinear(&img, 5, 5).unwrap(), img);
        assert!(resize_bilinear(&img, 0, 3).is_err());
    }

    #[test]
    fn constant_columns_stay_constant() {
        let img = Image::new(2, 2, vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        for (w, h) in [(1, 2), (3, 5), (7, 4)] {
            let r = resize_bilinear(&img, w, h).unwrap();
            for x in 0..w {
                let v = r.get(x, 0);
                assert!((0..h).all(|y| r.get(x, y) == v));
            }
        }
    }

    #[test]
    fn ramp_downsample_matches_direct_formula() {
        // 4x4 ramp p(x, y) = (x + 4y) / 15 resized to 2x2 samples the corners
        let img = Image::new(4, 4, (0..16).map(|v| v as f64 / 15.0).collect()).unwrap();
        let r = resize_bilinear(&img, 2, 2).unwrap();
        let expect = |x: f64, y: f64| (x + 4.0 * y) / 15.0;
        assert!((r.get(0, 0) - expect(0.0, 0.0)).abs() < 1e-15);
        assert!((r.get(1, 0) - expect(3.0, 0.0)).abs() < 1e-15);
        assert!((r.get(0, 1) - expect(0.0, 3.0)).abs() < 1e-15);
        assert!((r.get(1, 1) - expect(3.0, 3.0)).abs() < 1e-15);

        // 4x4 ramp to 3x3 samples the half-integer grid; bilinear is exact on ramps
        let r = resize_bilinear(&img, 3, 3).unwrap();
        for y in 0..3 {
            for x in 0..3 {
                let v = expect(1.5 * x as f64, 1.5 * y as f64);
                assert!((r.get(x, y) - v).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_rotation_is_identity() {
        let img = random_image(16, 2);
        let r = rotate_image(&img, 0.0).unwrap();
        for (a, b) in r.pixels().iter().zip(img.pixels()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn quarter_turn_is_a_pixel_permutation() {
        let img = random_image(6, 3);
        let r = rotate_image(&img, 90.0).unwrap();
        // counterclockwise: the right column moves to the top row
        for y in 0..6 {
            for x in 0..6 {
                assert_eq!(r.get(x, y), img.get(5 - y, x));
            }
        }
        let back = rotate_image(&r, -90.0).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn rotation_needs_square_input() {
        let img = Image::blank(3, 2);
        assert!(rotate_image(&img, 15.0).is_err());
    }

    #[test]
    fn dilation_geometry() {
        let img = random_image(16, 4);
        assert_eq!(dilate_image(&img, 1.0).unwrap(), img);
        let d = dilate_image(&img, 0.5).unwrap();
        for y in 0..16 {
            for x in 0..16 {
                let inside = (4..12).contains(&x) && (4..12).contains(&y);
                if !inside {
                    assert_eq!(d.get(x, y), 0.0);
                }
            }
        }
        assert!(dilate_image(&img, 0.0).is_err());
        assert!(dilate_image(&img, 1.1).is_err());
    }

    #[test]
    fn dilation_is_resize_then_center_pad() {
        let img = glyph16();
        let d = dilate_image(&img, 0.7).unwrap();
        // round(0.7 * 16) = 11, offset (16 - 11) / 2 = 2
        let inner = resize_bilinear(&img, 11, 11).unwrap();
        for y in 0..16 {
            for x in 0..16 {
                let expect = if (2..13).contains(&x) && (2..13).contains(&y) {
                    inner.get(x - 2, y - 2)
                } else {
                    0.0
                };
                assert_eq!(d.get(x, y), expect);
            }
        }
    }
}
