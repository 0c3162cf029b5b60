//! Per-face texture files.
//!
//! Layout (little-endian): magic `FTEX`, `u32` version = 1, `u32` face count,
//! `u8` channels (1 or 3), `u8` encoding (0 = 8-bit sRGB, 1 = 32-bit float
//! linear), then one `{u16 resU, u16 resV, u64 dataOffset}` entry per face.
//! Texel data is row-major with `v` selecting the row; offsets are absolute.

use std::io::{self, Read, Seek, SeekFrom, Write};

use glam::DVec3;

use super::TextureError;

pub const MAGIC: [u8; 4] = *b"FTEX";
pub const VERSION: u32 = 1;
pub const HEADER_BYTES: u64 = 14;
pub const ENTRY_BYTES: u64 = 12;
pub const MAX_FACE_RES: u16 = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TexelEncoding {
    SrgbU8 = 0,
    LinearF32 = 1,
}

impl TexelEncoding {
    pub fn bytes_per_channel(self) -> u64 {
        match self {
            TexelEncoding::SrgbU8 => 1,
            TexelEncoding::LinearF32 => 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FaceData {
    U8 { res: [u16; 2], texels: Vec<u8> },
    F32 { res: [u16; 2], texels: Vec<f32> },
}

impl FaceData {
    pub fn res(&self) -> [u16; 2] {
        match self {
            FaceData::U8 { res, .. } | FaceData::F32 { res, .. } => *res,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FaceTextureFile {
    pub channels: u8,
    pub encoding: TexelEncoding,
    pub faces: Vec<FaceData>,
}

fn valid_res(r: u16) -> bool {
    r >= 1 && r <= MAX_FACE_RES && r.is_power_of_two()
}

impl FaceTextureFile {
    pub fn write<W: Write>(&self, out: &mut W) -> io::Result<u64> {
        let bpc = self.encoding.bytes_per_channel();
        out.write_all(&MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        out.write_all(&(self.faces.len() as u32).to_le_bytes())?;
        out.write_all(&[self.channels, self.encoding as u8])?;
        let mut offset = HEADER_BYTES + ENTRY_BYTES * self.faces.len() as u64;
        for f in &self.faces {
            let [ru, rv] = f.res();
            if !valid_res(ru) || !valid_res(rv) {
                return Err(io::Error::new(io::ErrorKind::InvalidInput, "face resolution must be a power of two ≤ 256"));
            }
            out.write_all(&ru.to_le_bytes())?;
            out.write_all(&rv.to_le_bytes())?;
            out.write_all(&offset.to_le_bytes())?;
            offset += ru as u64 * rv as u64 * self.channels as u64 * bpc;
        }
        for f in &self.faces {
            let [ru, rv] = f.res();
            let expect = ru as usize * rv as usize * self.channels as usize;
            match (f, self.encoding) {
                (FaceData::U8 { texels, .. }, TexelEncoding::SrgbU8) if texels.len() == expect => out.write_all(texels)?,
                (FaceData::F32 { texels, .. }, TexelEncoding::LinearF32) if texels.len() == expect => {
                    for v in texels {
                        out.write_all(&v.to_le_bytes())?;
                    }
                }
                _ => return Err(io::Error::new(io::ErrorKind::InvalidInput, "face data does not match encoding/resolution")),
            }
        }
        Ok(offset)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FaceEntry {
    pub res: [u16; 2],
    pub offset: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FaceTable {
    pub channels: u8,
    pub encoding: TexelEncoding,
    pub faces: Vec<FaceEntry>,
}

impl FaceTable {
    pub fn face_bytes(&self, face: usize) -> u64 {
        let e = &self.faces[face];
        e.res[0] as u64 * e.res[1] as u64 * self.channels as u64 * self.encoding.bytes_per_channel()
    }
}

pub fn read_table<R: Read>(r: &mut R, path: &str) -> Result<FaceTable, TextureError> {
    let io_err = |e: io::Error| TextureError::Io { path: path.to_string(), message: e.to_string() };
    let mut head = [0u8; HEADER_BYTES as usize];
    r.read_exact(&mut head).map_err(io_err)?;
    if head[0..4] != MAGIC {
        return Err(TextureError::Format { path: path.into(), message: "bad magic".into() });
    }
    let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(TextureError::Format { path: path.into(), message: format!("unsupported version {version}") });
    }
    let count = u32::from_le_bytes(head[8..12].try_into().unwrap()) as usize;
    let channels = head[12];
    let encoding = match head[13] {
        0 => TexelEncoding::SrgbU8,
        1 => TexelEncoding::LinearF32,
        e => return Err(TextureError::Format { path: path.into(), message: format!("unknown encoding {e}") }),
    };
    if channels != 1 && channels != 3 {
        return Err(TextureError::Format { path: path.into(), message: format!("{channels} channels") });
    }
    let mut entries = vec![0u8; count * ENTRY_BYTES as usize];
    r.read_exact(&mut entries).map_err(io_err)?;
    let faces = entries
        .chunks_exact(ENTRY_BYTES as usize)
        .map(|e| FaceEntry {
            res: [u16::from_le_bytes([e[0], e[1]]), u16::from_le_bytes([e[2], e[3]])],
            offset: u64::from_le_bytes(e[4..12].try_into().unwrap()),
        })
        .collect::<Vec<_>>();
    if let Some(bad) = faces.iter().find(|f| !valid_res(f.res[0]) || !valid_res(f.res[1])) {
        return Err(TextureError::Format { path: path.into(), message: format!("face resolution {:?}", bad.res) });
    }
    Ok(FaceTable { channels, encoding, faces })
}

pub fn srgb_to_linear(v: f32) -> f32 {
    if v <= 0.04045 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

fn srgb_lut() -> &'static [f32; 256] {
    static LUT: std::sync::OnceLock<[f32; 256]> = std::sync::OnceLock::new();
    LUT.get_or_init(|| std::array::from_fn(|i| srgb_to_linear(i as f32 / 255.0)))
}

/// Reads one face and returns its texels as linear `f32`.
pub fn read_face<R: Read + Seek>(r: &mut R, table: &FaceTable, face: usize, path: &str) -> Result<Vec<f32>, TextureError> {
    let io_err = |e: io::Error| TextureError::Io { path: path.to_string(), message: e.to_string() };
    let entry = table.faces[face];
    let bytes = table.face_bytes(face) as usize;
    r.seek(SeekFrom::Start(entry.offset)).map_err(io_err)?;
    let mut raw = vec![0u8; bytes];
    r.read_exact(&mut raw).map_err(io_err)?;
    Ok(match table.encoding {
        TexelEncoding::SrgbU8 => {
            let lut = srgb_lut();
            raw.iter().map(|&b| lut[b as usize]).collect()
        }
        TexelEncoding::LinearF32 => raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect(),
    })
}

/// Bilinear filtering inside one face. Texel centers sit at
/// `(i + 0.5) / res`; coordinates clamp at the face border.
pub fn bilinear(res: [u16; 2], channels: u8, texels: &[f32], u: f64, v: f64) -> DVec3 {
    let (ru, rv) = (res[0] as usize, res[1] as usize);
    let ch = channels as usize;
    let x = (u * ru as f64 - 0.5).clamp(0.0, (ru - 1) as f64);
    let y = (v * rv as f64 - 0.5).clamp(0.0, (rv - 1) as f64);
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(ru - 1);
    let y1 = (y0 + 1).min(rv - 1);
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let at = |x: usize, y: usize| -> DVec3 {
        let i = (y * ru + x) * ch;
        if ch == 1 {
            DVec3::splat(texels[i] as f64)
        } else {
            DVec3::new(texels[i] as f64, texels[i + 1] as f64, texels[i + 2] as f64)
        }
    };
    let top = at(x0, y0) * (1.0 - fx) + at(x1, y0) * fx;
    let bottom = at(x0, y1) * (1.0 - fx) + at(x1, y1) * fx;
    top * (1.0 - fy) + bottom * fy
}
