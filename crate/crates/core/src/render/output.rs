//! Display conversion and image files.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use glam::DVec3;

use super::debug::heat_color;
use super::framebuffer::FrameBuffer;
use super::Mode;

fn srgb_encode(v: f64) -> f64 {
    if v <= 0.003_130_8 {
        12.92 * v
    } else {
        1.055 * v.powf(1.0 / 2.4) - 0.055
    }
}

/// Exposure, Reinhard `x/(1+x)`, sRGB encode, 8-bit quantize.
pub fn tonemap_pixel(c: [f32; 3], exposure: f32) -> [u8; 3] {
    c.map(|v| {
        let x = (v as f64 * exposure as f64).max(0.0);
        let x = if x.is_finite() { x / (1.0 + x) } else if x > 0.0 { 1.0 } else { 0.0 };
        (srgb_encode(x).clamp(0.0, 1.0) * 255.0).round() as u8
    })
}

pub fn tonemap_for_display(img: &[[f32; 3]], exposure: f32) -> Vec<u8> {
    img.iter().flat_map(|c| tonemap_pixel(*c, exposure)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DisplayImage {
    pub width: u32,
    pub height: u32,
    /// Packed 8-bit sRGB.
    pub rgb: Vec<u8>,
}

impl DisplayImage {
    /// Converts a framebuffer for display. Id, albedo and normal modes are
    /// shown without tone mapping; cost heat is normalized to the frame's
    /// most expensive pixel.
    pub fn from_framebuffer(fb: &FrameBuffer, mode: Mode, exposure: f32) -> Self {
        Self::from_linear(fb.width, fb.height, &fb.color_image(), &fb.cost_image(), fb.sample_count().unwrap_or(1), mode, exposure)
    }

    pub fn from_linear(
        width: u32,
        height: u32,
        color: &[[f32; 3]],
        cost: &[u32],
        samples: u32,
        mode: Mode,
        exposure: f32,
    ) -> Self {
        let direct = |c: [f32; 3]| c.map(|v| (srgb_encode(v.clamp(0.0, 1.0) as f64) * 255.0).round() as u8);
        let rgb = match mode {
            Mode::PathTrace => tonemap_for_display(color, exposure),
            Mode::CostHeat => {
                let per = |c: u32| c as f64 / samples.max(1) as f64;
                let max = cost.iter().map(|&c| per(c)).fold(0.0, f64::max).max(1.0);
                cost.iter()
                    .flat_map(|&c| {
                        let h: DVec3 = heat_color(per(c) / max);
                        direct(h.as_vec3().to_array())
                    })
                    .collect()
            }
            _ => color.iter().flat_map(|c| direct(*c)).collect(),
        };
        Self { width, height, rgb }
    }

    pub fn encode_png(&self) -> Result<Vec<u8>, image::ImageError> {
        let mut out = Vec::new();
        encode_png_to(&mut out, self)?;
        Ok(out)
    }
}

fn encode_png_to<W: Write>(out: W, img: &DisplayImage) -> Result<(), image::ImageError> {
    use image::ImageEncoder;
    image::codecs::png::PngEncoder::new(out).write_image(&img.rgb, img.width, img.height, image::ExtendedColorType::Rgb8)
}

pub fn write_png(path: &Path, img: &DisplayImage) -> Result<(), image::ImageError> {
    let mut f = BufWriter::new(File::create(path)?);
    encode_png_to(&mut f, img)?;
    f.flush()?;
    Ok(())
}

/// Writes a little-endian color PFM (rows stored bottom to top).
pub fn write_pfm(path: &Path, width: u32, height: u32, pixels: &[[f32; 3]]) -> io::Result<()> {
    if pixels.len() != (width * height) as usize {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, "pixel count does not match size"));
    }
    let mut f = BufWriter::new(File::create(path)?);
    write!(f, "PF\n{width} {height}\n-1.0\n")?;
    for y in (0..height as usize).rev() {
        for p in &pixels[y * width as usize..(y + 1) * width as usize] {
            for c in p {
                f.write_all(&c.to_le_bytes())?;
            }
        }
    }
    f.flush()
}

pub fn read_pfm(path: &Path) -> io::Result<(u32, u32, Vec<[f32; 3]>)> {
    let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
    let mut r = BufReader::new(File::open(path)?);
    let mut header = Vec::new();
    while header.len() < 4 {
        let mut line = String::new();
        if r.read_line(&mut line)? == 0 {
            return Err(bad("truncated header"));
        }
        header.extend(line.split_whitespace().map(str::to_owned));
    }
    if header[0] != "PF" {
        return Err(bad("not a color PFM"));
    }
    let w: u32 = header[1].parse().map_err(|_| bad("width"))?;
    let h: u32 = header[2].parse().map_err(|_| bad("height"))?;
    let scale: f32 = header[3].parse().map_err(|_| bad("scale"))?;
    let mut raw = vec![0u8; w as usize * h as usize * 12];
    r.read_exact(&mut raw)?;
    let rd = |b: &[u8]| {
        let a = [b[0], b[1], b[2], b[3]];
        if scale < 0.0 {
            f32::from_le_bytes(a)
        } else {
            f32::from_be_bytes(a)
        }
    };
    let mut out = vec![[0f32; 3]; (w * h) as usize];
    for (i, px) in raw.chunks_exact(12).enumerate() {
        let (x, yb) = (i % w as usize, i / w as usize);
        let y = h as usize - 1 - yb;
        out[y * w as usize + x] = [rd(&px[0..4]), rd(&px[4..8]), rd(&px[8..12])];
    }
    Ok((w, h, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tonemap_closed_forms() {
        assert_eq!(tonemap_pixel([0.0; 3], 1.0), [0; 3]);
        assert_eq!(tonemap_pixel([1.0; 3], 1.0), [188; 3]);
        assert_eq!(tonemap_pixel([1e9; 3], 1.0), [255; 3]);
        assert_eq!(tonemap_pixel([f32::INFINITY, -1.0, f32::NAN], 1.0), [255, 0, 0]);
    }

    #[test]
    fn pfm_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.pfm");
        let px: Vec<[f32; 3]> = (0..6).map(|i| [i as f32, -(i as f32), 0.5]).collect();
        write_pfm(&p, 3, 2, &px).unwrap();
        assert_eq!(read_pfm(&p).unwrap(), (3, 2, px));
    }

    #[test]
    fn png_encodes() {
        let img = DisplayImage { width: 2, height: 1, rgb: vec![0, 10, 20, 30, 40, 50] };
        let png = img.encode_png().unwrap();
        let back = image::load_from_memory(&png).unwrap().into_rgb8();
        assert_eq!(back.into_raw(), img.rgb);
    }
}
