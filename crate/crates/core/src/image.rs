//! HDR image buffers, PFM/PPM files and error metrics.
//!
//! Metrics compare tone-mapped luma: each channel is clamped to `[0, 1]`,
//! raised to `1/2.2`, then combined with Rec.709 weights.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::math::{luminance, Rgb};

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("image I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed image file: {0}")]
    Format(String),
    #[error("image dimensions differ: {0}x{1} vs {2}x{3}")]
    Dimensions(usize, usize, usize, usize),
    #[error("pixel ({0}, {1}) is negative or not finite")]
    BadPixel(usize, usize),
    #[error("unsupported image extension {0:?} (expected .pfm or .ppm)")]
    Extension(String),
}

/// Row-major RGB radiance, top row first.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<[f32; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Pfm,
    Ppm,
}

impl Format {
    pub fn from_path(path: &Path) -> Result<Format, ImageError> {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("pfm") => Ok(Format::Pfm),
            Some("ppm") => Ok(Format::Ppm),
            other => Err(ImageError::Extension(other.unwrap_or("").to_string())),
        }
    }
}

impl Image {
    pub fn new(width: usize, height: usize) -> Self {
        Image { width, height, pixels: vec![[0.0; 3]; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> Rgb) -> Self {
        let mut img = Image::new(width, height);
        for y in 0..height {
            for x in 0..width {
                img.set(x, y, f(x, y));
            }
        }
        img
    }

    /// Builds an image from rows of `width` pixels each.
    pub fn from_rows(width: usize, rows: Vec<Vec<Rgb>>) -> Self {
        let height = rows.len();
        let pixels = rows.into_iter().flatten().map(to_f32).collect::<Vec<_>>();
        assert_eq!(pixels.len(), width * height);
        Image { width, height, pixels }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[f32; 3]] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> Rgb {
        let p = self.pixels[y * self.width + x];
        Rgb::new(p[0] as f64, p[1] as f64, p[2] as f64)
    }

    pub fn set(&mut self, x: usize, y: usize, c: Rgb) {
        self.pixels[y * self.width + x] = to_f32(c);
    }

    /// Pixel-wise sum.
    pub fn add(&self, other: &Image) -> Result<Image, ImageError> {
        self.check_same_size(other)?;
        let pixels = self
            .pixels
            .iter()
            .zip(&other.pixels)
            .map(|(a, b)| [a[0] + b[0], a[1] + b[1], a[2] + b[2]])
            .collect();
        Ok(Image { width: self.width, height: self.height, pixels })
    }

    pub fn scaled(&self, s: f32) -> Image {
        let pixels = self.pixels.iter().map(|p| [p[0] * s, p[1] * s, p[2] * s]).collect();
        Image { width: self.width, height: self.height, pixels }
    }

    fn check_same_size(&self, other: &Image) -> Result<(), ImageError> {
        if self.width != other.width || self.height != other.height {
            return Err(ImageError::Dimensions(self.width, self.height, other.width, other.height));
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), ImageError> {
        for (i, p) in self.pixels.iter().enumerate() {
            if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(ImageError::BadPixel(i % self.width.max(1), i / self.width.max(1)));
            }
        }
        Ok(())
    }

    /// Little-endian PFM, rows bottom to top.
    pub fn write_pfm(&self, w: &mut impl Write) -> Result<(), ImageError> {
        self.validate()?;
        write!(w, "PF\n{} {}\n-1.0\n", self.width, self.height)?;
        let mut buf = Vec::with_capacity(self.width * 12);
        for y in (0..self.height).rev() {
            buf.clear();
            for p in &self.pixels[y * self.width..(y + 1) * self.width] {
                for c in p {
                    buf.extend_from_slice(&c.to_le_bytes());
                }
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn read_pfm(r: &mut impl Read) -> Result<Image, ImageError> {
        let mut r = BufReader::new(r);
        let magic = header_token(&mut r)?;
        if magic != "PF" {
            return Err(ImageError::Format(format!("expected PF magic, found {magic:?}")));
        }
        let width = parse_token::<usize>(&mut r, "width")?;
        let height = parse_token::<usize>(&mut r, "height")?;
        let scale = parse_token::<f64>(&mut r, "scale")?;
        if scale == 0.0 || !scale.is_finite() {
            return Err(ImageError::Format(format!("bad scale {scale}")));
        }
        let little = scale < 0.0;
        let mut data = vec![0u8; width * height * 12];
        r.read_exact(&mut data).map_err(|_| ImageError::Format("truncated pixel data".into()))?;
        let mut img = Image::new(width, height);
        for (k, chunk) in data.chunks_exact(12).enumerate() {
            let (x, row) = (k % width, k / width);
            let y = height - 1 - row;
            let mut p = [0f32; 3];
            for (c, b) in p.iter_mut().zip(chunk.chunks_exact(4)) {
                let bytes = b.try_into().unwrap();
                *c = if little { f32::from_le_bytes(bytes) } else { f32::from_be_bytes(bytes) };
            }
            img.pixels[y * width + x] = p;
        }
        Ok(img)
    }

    /// 8-bit tone-mapped binary PPM.
    pub fn write_ppm(&self, w: &mut impl Write) -> Result<(), ImageError> {
        self.validate()?;
        write!(w, "P6\n{} {}\n255\n", self.width, self.height)?;
        let bytes: Vec<u8> = self
            .pixels
            .iter()
            .flat_map(|p| p.map(|c| (tone_map(c as f64) * 255.0).round() as u8))
            .collect();
        w.write_all(&bytes)?;
        Ok(())
    }

    /// Reads a P6 file; values are the 8-bit codes scaled to `[0, 1]`
    /// (no inverse tone map).
    pub fn read_ppm(r: &mut impl Read) -> Result<Image, ImageError> {
        let mut r = BufReader::new(r);
        let magic = header_token(&mut r)?;
        if magic != "P6" {
            return Err(ImageError::Format(format!("expected P6 magic, found {magic:?}")));
        }
        let width = parse_token::<usize>(&mut r, "width")?;
        let height = parse_token::<usize>(&mut r, "height")?;
        let maxval = parse_token::<u32>(&mut r, "maxval")?;
        if maxval != 255 {
            return Err(ImageError::Format(format!("unsupported maxval {maxval}")));
        }
        let mut data = vec![0u8; width * height * 3];
        r.read_exact(&mut data).map_err(|_| ImageError::Format("truncated pixel data".into()))?;
        let pixels = data.chunks_exact(3).map(|c| [c[0] as f32 / 255.0, c[1] as f32 / 255.0, c[2] as f32 / 255.0]).collect();
        Ok(Image { width, height, pixels })
    }

    /// Writes by extension (`.pfm` or `.ppm`).
    pub fn save(&self, path: &Path) -> Result<(), ImageError> {
        let format = Format::from_path(path)?;
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        match format {
            Format::Pfm => self.write_pfm(&mut w)?,
            Format::Ppm => self.write_ppm(&mut w)?,
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Image, ImageError> {
        let format = Format::from_path(path)?;
        let mut f = std::fs::File::open(path)?;
        match format {
            Format::Pfm => Image::read_pfm(&mut f),
            Format::Ppm => Image::read_ppm(&mut f),
        }
    }

    /// Tone-mapped luma plane.
    pub fn luma(&self) -> Vec<f64> {
        self.pixels
            .iter()
            .map(|p| luminance(Rgb::new(tone_map(p[0] as f64), tone_map(p[1] as f64), tone_map(p[2] as f64))))
            .collect()
    }
}

fn to_f32(c: Rgb) -> [f32; 3] {
    [c.x as f32, c.y as f32, c.z as f32]
}

/// Reads one whitespace-delimited header token, skipping `#` comments, and
/// consumes exactly one trailing whitespace byte.
fn header_token(r: &mut impl BufRead) -> Result<String, ImageError> {
    let mut tok = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        if r.read(&mut byte)? == 0 {
            return Err(ImageError::Format("unexpected end of header".into()));
        }
        let b = byte[0];
        if b == b'#' && tok.is_empty() {
            let mut line = Vec::new();
            r.read_until(b'\n', &mut line)?;
            continue;
        }
        if b.is_ascii_whitespace() {
            if tok.is_empty() {
                continue;
            }
            break;
        }
        tok.push(b);
        if tok.len() > 64 {
            return Err(ImageError::Format("header token too long".into()));
        }
    }
    String::from_utf8(tok).map_err(|_| ImageError::Format("non-ASCII header".into()))
}

fn parse_token<T: std::str::FromStr>(r: &mut impl BufRead, what: &str) -> Result<T, ImageError> {
    let t = header_token(r)?;
    t.parse().map_err(|_| ImageError::Format(format!("bad {what} {t:?}")))
}

/// Display transform: clamp to `[0, 1]`, then gamma `1/2.2`.
pub fn tone_map(v: f64) -> f64 {
    v.clamp(0.0, 1.0).powf(1.0 / 2.2)
}

/// Inverse of [`tone_map`] on `[0, 1]`.
pub fn inverse_tone_map(t: f64) -> f64 {
    t.clamp(0.0, 1.0).powf(2.2)
}

pub const PSNR_CAP_DB: f64 = 99.0;

/// The three comparison metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub rmse: f64,
    pub psnr: f64,
    pub ssim: f64,
}

pub fn compare(a: &Image, b: &Image) -> Result<Metrics, ImageError> {
    a.check_same_size(b)?;
    let (la, lb) = (a.luma(), b.luma());
    let rmse = rmse_plane(&la, &lb);
    Ok(Metrics { rmse, psnr: psnr_from_rmse(rmse), ssim: ssim_plane(&la, &lb, a.width, a.height) })
}

pub fn rmse(a: &Image, b: &Image) -> Result<f64, ImageError> {
    a.check_same_size(b)?;
    Ok(rmse_plane(&a.luma(), &b.luma()))
}

pub fn psnr(a: &Image, b: &Image) -> Result<f64, ImageError> {
    Ok(psnr_from_rmse(rmse(a, b)?))
}

pub fn ssim(a: &Image, b: &Image) -> Result<f64, ImageError> {
    a.check_same_size(b)?;
    Ok(ssim_plane(&a.luma(), &b.luma(), a.width, a.height))
}

pub fn rmse_plane(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (s / a.len() as f64).sqrt()
}

/// `20 log10(1 / rmse)` with peak 1, capped at [`PSNR_CAP_DB`].
pub fn psnr_from_rmse(rmse: f64) -> f64 {
    if rmse <= 0.0 {
        return PSNR_CAP_DB;
    }
    (20.0 * (1.0 / rmse).log10()).min(PSNR_CAP_DB)
}

pub const SSIM_RADIUS: usize = 5;
pub const SSIM_SIGMA: f64 = 1.5;
const SSIM_C1: f64 = 0.01 * 0.01;
const SSIM_C2: f64 = 0.03 * 0.03;

fn gaussian_taps() -> [f64; 2 * SSIM_RADIUS + 1] {
    let mut k = [0.0; 2 * SSIM_RADIUS + 1];
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - SSIM_RADIUS as f64;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    k
}

/// Gaussian-weighted local mean with the window clipped at the borders and
/// renormalized.
fn blur(src: &[f64], w: usize, h: usize, taps: &[f64]) -> Vec<f64> {
    let r = SSIM_RADIUS as isize;
    let pass = |src: &[f64], horizontal: bool| -> Vec<f64> {
        let mut out = vec![0.0; w * h];
        for y in 0..h {
            for x in 0..w {
                let (mut s, mut ws) = (0.0, 0.0);
                for (k, t) in taps.iter().enumerate() {
                    let o = k as isize - r;
                    let (xx, yy) = if horizontal { (x as isize + o, y as isize) } else { (x as isize, y as isize + o) };
                    if xx < 0 || yy < 0 || xx >= w as isize || yy >= h as isize {
                        continue;
                    }
                    s += t * src[yy as usize * w + xx as usize];
                    ws += t;
                }
                out[y * w + x] = s / ws;
            }
        }
        out
    };
    pass(&pass(src, true), false)
}

/// Mean local SSIM of two luma planes (11×11 Gaussian window, σ = 1.5,
/// dynamic range 1).
pub fn ssim_plane(a: &[f64], b: &[f64], w: usize, h: usize) -> f64 {
    if a.is_empty() {
        return 1.0;
    }
    let taps = gaussian_taps();
    let prod = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(x, y)| x * y).collect::<Vec<_>>();
    let mu_a = blur(a, w, h, &taps);
    let mu_b = blur(b, w, h, &taps);
    let aa = blur(&prod(a, a), w, h, &taps);
    let bb = blur(&prod(b, b), w, h, &taps);
    let ab = blur(&prod(a, b), w, h, &taps);
    let mut total = 0.0;
    for i in 0..a.len() {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let va = aa[i] - ma * ma;
        let vb = bb[i] - mb * mb;
        let cov = ab[i] - ma * mb;
        total += ((2.0 * ma * mb + SSIM_C1) * (2.0 * cov + SSIM_C2))
            / ((ma * ma + mb * mb + SSIM_C1) * (va + vb + SSIM_C2));
    }
    total / a.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient(w: usize, h: usize) -> Image {
        Image::from_fn(w, h, |x, y| Rgb::new(x as f64 / w as f64, y as f64 / h as f64, 0.3))
    }

    #[test]
    fn pfm_round_trip() {
        let img = Image::from_fn(3, 2, |x, y| Rgb::new(x as f64 * 1.5, y as f64 + 0.25, 7.0));
        let mut buf = Vec::new();
        img.write_pfm(&mut buf).unwrap();
        assert!(buf.starts_with(b"PF\n3 2\n-1.0\n"));
        assert_eq!(Image::read_pfm(&mut buf.as_slice()).unwrap(), img);

        let one = Image::from_fn(1, 1, |_, _| Rgb::new(0.5, 0.25, 1.0));
        let mut buf = Vec::new();
        one.write_pfm(&mut buf).unwrap();
        assert_eq!(Image::read_pfm(&mut buf.as_slice()).unwrap().pixels(), &[[0.5f32, 0.25, 1.0]]);
    }

    #[test]
    fn pfm_rows_are_bottom_to_top() {
        let img = Image::from_fn(1, 2, |_, y| Rgb::splat(y as f64));
        let mut buf = Vec::new();
        img.write_pfm(&mut buf).unwrap();
        let body = &buf[buf.len() - 24..];
        assert_eq!(f32::from_le_bytes(body[0..4].try_into().unwrap()), 1.0);
        assert_eq!(f32::from_le_bytes(body[12..16].try_into().unwrap()), 0.0);
    }

    #[test]
    fn negative_pixels_are_rejected() {
        let mut img = Image::new(2, 2);
        img.set(1, 0, Rgb::new(0.0, -1.0, 0.0));
        assert!(matches!(img.write_pfm(&mut Vec::new()), Err(ImageError::BadPixel(1, 0))));
        img.set(1, 0, Rgb::new(0.0, f64::NAN, 0.0));
        assert!(img.write_ppm(&mut Vec::new()).is_err());
    }

    #[test]
    fn malformed_headers() {
        assert!(Image::read_pfm(&mut &b"P6\n1 1\n-1.0\n"[..]).is_err());
        assert!(Image::read_pfm(&mut &b"PF\n2 2\n-1.0\n\0\0\0\0"[..]).is_err());
        assert!(Image::read_pfm(&mut &b"PF\nx 2\n-1.0\n"[..]).is_err());
    }

    #[test]
    fn ppm_is_tone_mapped() {
        let img = Image::from_fn(2, 1, |x, _| Rgb::splat(if x == 0 { 0.5 } else { 4.0 }));
        let mut buf = Vec::new();
        img.write_ppm(&mut buf).unwrap();
        assert!(buf.starts_with(b"P6\n2 1\n255\n"));
        let body = &buf[buf.len() - 6..];
        assert_eq!(body[0], (0.5f64.powf(1.0 / 2.2) * 255.0).round() as u8);
        assert_eq!(body[3], 255);
        let back = Image::read_ppm(&mut buf.as_slice()).unwrap();
        assert_eq!(back.width(), 2);
    }

    #[test]
    fn identical_images() {
        let a = gradient(16, 12);
        let m = compare(&a, &a).unwrap();
        assert_eq!(m.rmse, 0.0);
        assert_eq!(m.psnr, PSNR_CAP_DB);
        assert!((m.ssim - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_tone_mapped_offset() {
        let a = Image::from_fn(8, 8, |x, y| Rgb::splat(0.05 + 0.01 * (x + y) as f64));
        let b = Image::from_fn(8, 8, |x, y| {
            let c = a.get(x, y);
            Rgb::new(
                inverse_tone_map(tone_map(c.x) + 0.1),
                inverse_tone_map(tone_map(c.y) + 0.1),
                inverse_tone_map(tone_map(c.z) + 0.1),
            )
        });
        let r = rmse(&a, &b).unwrap();
        assert!((r - 0.1).abs() < 1e-6, "{r}");
        assert!((psnr(&a, &b).unwrap() - 20.0).abs() < 1e-4);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(compare(&gradient(4, 4), &gradient(4, 5)), Err(ImageError::Dimensions(4, 4, 4, 5))));
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(Format::from_path(Path::new("a.PFM")).unwrap(), Format::Pfm);
        assert!(Format::from_path(Path::new("a.exr")).is_err());
    }
}
