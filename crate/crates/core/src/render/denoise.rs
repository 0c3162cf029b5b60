//! Edge-avoiding à-trous wavelet filter guided by albedo and normals.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DenoiseError {
    #[error("image buffers have {got} pixels, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("sample count must be at least 1")]
    NoSamples,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DenoiseParams {
    pub iterations: u32,
    pub sigma_albedo: f32,
    pub sigma_normal: f32,
    /// Color sigma at one sample per pixel; shrinks as `1/√spp`.
    pub sigma_color: f32,
    /// Half-width of the window that must be uniform for a pixel to pass
    /// through untouched.
    pub flat_radius: u32,
}

impl Default for DenoiseParams {
    fn default() -> Self {
        Self { iterations: 5, sigma_albedo: 0.25, sigma_normal: 0.3, sigma_color: 1.0, flat_radius: 4 }
    }
}

const KERNEL: [f32; 5] = [1.0 / 16.0, 1.0 / 4.0, 3.0 / 8.0, 1.0 / 4.0, 1.0 / 16.0];

fn dist2(a: [f32; 3], b: [f32; 3]) -> f32 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
}

/// Marks pixels whose `(2r+1)²` window (clipped to the image) holds one
/// value in every buffer. Uses separable run lengths.
fn flat_mask(bufs: [&[[f32; 3]]; 3], w: usize, h: usize, r: usize) -> Vec<bool> {
    let same = |i: usize, j: usize| bufs.iter().all(|b| b[i] == b[j]);
    // horizontal: window [x-r, x+r] equals its left-most pixel in a row
    let mut row_flat = vec![false; w * h];
    for y in 0..h {
        // run[x] = length of the equal run ending at x
        let mut run = vec![1usize; w];
        for x in 1..w {
            if same(y * w + x, y * w + x - 1) {
                run[x] = run[x - 1] + 1;
            }
        }
        for x in 0..w {
            let lo = x.saturating_sub(r);
            let hi = (x + r).min(w - 1);
            row_flat[y * w + x] = run[hi] > hi - lo;
        }
    }
    let mut out = vec![false; w * h];
    for x in 0..w {
        let mut run = vec![1usize; h];
        for y in 1..h {
            if row_flat[y * w + x] && row_flat[(y - 1) * w + x] && same(y * w + x, (y - 1) * w + x) {
                run[y] = run[y - 1] + 1;
            }
        }
        for y in 0..h {
            let lo = y.saturating_sub(r);
            let hi = (y + r).min(h - 1);
            out[y * w + x] = row_flat[hi * w + x] && run[hi] > hi - lo;
        }
    }
    out
}

/// Filters `color` in place of a learned denoiser. All buffers are
/// row-major `width × height`.
pub fn denoise(
    color: &[[f32; 3]],
    albedo: &[[f32; 3]],
    normal: &[[f32; 3]],
    width: u32,
    height: u32,
    sample_count: u32,
    params: &DenoiseParams,
) -> Result<Vec<[f32; 3]>, DenoiseError> {
    let (w, h) = (width as usize, height as usize);
    let n = w * h;
    for b in [color, albedo, normal] {
        if b.len() != n {
            return Err(DenoiseError::DimensionMismatch { expected: n, got: b.len() });
        }
    }
    if sample_count == 0 {
        return Err(DenoiseError::NoSamples);
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let flat = flat_mask([color, albedo, normal], w, h, params.flat_radius as usize);
    let inv_c = 1.0 / (params.sigma_color * params.sigma_color / sample_count as f32);
    let inv_a = 1.0 / (params.sigma_albedo * params.sigma_albedo);
    let inv_n = 1.0 / (params.sigma_normal * params.sigma_normal);

    let mut cur = color.to_vec();
    let mut next = vec![[0f32; 3]; n];
    for it in 0..params.iterations {
        let step = 1i64 << it;
        for y in 0..h as i64 {
            for x in 0..w as i64 {
                let p = y as usize * w + x as usize;
                let (cp, ap, np) = (cur[p], albedo[p], normal[p]);
                let mut sum = [0f32; 3];
                let mut wsum = 0f32;
                for (j, kj) in KERNEL.iter().enumerate() {
                    let qy = y + (j as i64 - 2) * step;
                    if qy < 0 || qy >= h as i64 {
                        continue;
                    }
                    for (i, ki) in KERNEL.iter().enumerate() {
                        let qx = x + (i as i64 - 2) * step;
                        if qx < 0 || qx >= w as i64 {
                            continue;
                        }
                        let q = qy as usize * w + qx as usize;
                        let e = dist2(cp, cur[q]) * inv_c + dist2(ap, albedo[q]) * inv_a + dist2(np, normal[q]) * inv_n;
                        let wq = ki * kj * (-e).exp();
                        wsum += wq;
                        for c in 0..3 {
                            sum[c] += wq * cur[q][c];
                        }
                    }
                }
                next[p] = if wsum > 0.0 { sum.map(|s| (s / wsum).max(0.0)) } else { cp };
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    for p in 0..n {
        if flat[p] {
            cur[p] = color[p];
        }
    }
    Ok(cur)
}
