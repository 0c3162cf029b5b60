//! Binary scene format.
//!
//! Header: magic `BIFF`, `u32` version, `u32` section count, then one
//! `{u32 tag, u64 offset, u64 length}` entry per section. Empty sections have
//! length zero. Every array is a `u64` element count followed by raw
//! little-endian elements; strings are stored once in the string section and
//! referenced by index.

use std::collections::HashMap;
use std::io::{self, Read, Write};
use std::path::Path;

use glam::Vec3;
use thiserror::Error;

use crate::math::Affine;
use crate::scene::{
    CameraDesc, CurveSet, CurveStyle, FaceTextureRef, Geometry, Instance, LightDesc, MaterialDesc, NamedObject,
    QuadMesh, SceneDesc, ShapeDesc, TriangleMesh,
};
use crate::shade::DisneyMaterial;

pub const MAGIC: [u8; 4] = *b"BIFF";
pub const VERSION: u32 = 1;
const TAGS: [u32; 7] = [1, 2, 3, 4, 5, 6, 7];
pub const HEADER_BYTES: usize = 12 + 20 * TAGS.len();

#[derive(Debug, Error)]
pub enum BiffError {
    #[error("not a BIFF file")]
    BadMagic,
    #[error("unsupported BIFF version {found} (expected {expected})")]
    UnsupportedVersion { found: u32, expected: u32 },
    #[error("stream truncated at byte {0}")]
    TruncatedStream(u64),
    #[error("malformed BIFF data: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Default)]
struct Strings {
    list: Vec<String>,
    index: HashMap<String, u32>,
}

impl Strings {
    fn id(&mut self, s: &str) -> u32 {
        if let Some(&i) = self.index.get(s) {
            return i;
        }
        let i = self.list.len() as u32;
        self.list.push(s.to_string());
        self.index.insert(s.to_string(), i);
        i
    }
}

#[derive(Default)]
struct Sink(Vec<u8>);

impl Sink {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn i32(&mut self, v: i32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f32s(&mut self, v: &[f32]) {
        for x in v {
            self.0.extend_from_slice(&x.to_le_bytes());
        }
    }
    fn pod_array<T: bytemuck::Pod>(&mut self, v: &[T]) {
        self.u64(v.len() as u64);
        if cfg!(target_endian = "little") {
            self.0.extend_from_slice(bytemuck::cast_slice(v));
        } else {
            unimplemented!("big-endian hosts")
        }
    }
}

fn material_block(s: &mut Sink, m: &DisneyMaterial) {
    s.f32s(&m.base_color);
    s.f32s(&[
        m.metallic,
        m.roughness,
        m.specular,
        m.specular_tint,
        m.sheen,
        m.sheen_tint,
        m.clearcoat,
        m.clearcoat_gloss,
        m.ior,
    ]);
    s.u8(m.dielectric as u8);
}

/// Writes `scene` and returns the number of bytes written.
pub fn write_biff<W: Write>(scene: &SceneDesc, out: &mut W) -> io::Result<u64> {
    let mut strings = Strings::default();
    let mut sections: Vec<Sink> = (0..TAGS.len()).map(|_| Sink::default()).collect();

    if !scene.materials.is_empty() {
        let s = &mut sections[1];
        s.u64(scene.materials.len() as u64);
        for m in &scene.materials {
            s.u32(strings.id(&m.name));
            s.i32(m.texture);
            material_block(s, &m.params);
        }
    }
    if !scene.textures.is_empty() {
        let s = &mut sections[2];
        s.u64(scene.textures.len() as u64);
        for t in &scene.textures {
            s.u32(strings.id(&t.name));
            s.u32(strings.id(&t.path));
            s.u32(t.channels);
        }
    }
    if !scene.lights.is_empty() {
        let s = &mut sections[3];
        s.u64(scene.lights.len() as u64);
        for l in &scene.lights {
            match l {
                LightDesc::QuadArea { corners, radiance } => {
                    s.u32(0);
                    for c in corners {
                        s.f32s(&c.to_array());
                    }
                    s.f32s(radiance);
                }
                LightDesc::Environment { radiance, image } => {
                    s.u32(1);
                    s.f32s(radiance);
                    s.i32(image.as_ref().map_or(-1, |p| strings.id(p) as i32));
                }
            }
        }
    }
    if let Some(c) = &scene.camera {
        let s = &mut sections[4];
        for v in [c.position, c.look_at, c.up] {
            s.f32s(&v.to_array());
        }
        s.f32s(&[c.fov_degrees, c.aspect]);
        s.u32(c.resolution[0]);
        s.u32(c.resolution[1]);
    }
    if !scene.objects.is_empty() {
        let s = &mut sections[5];
        s.u64(scene.objects.len() as u64);
        for o in &scene.objects {
            s.u32(strings.id(&o.name));
            s.u64(o.shapes.len() as u64);
            for shape in &o.shapes {
                let kind = match &shape.geometry {
                    Geometry::Triangles(_) => 0,
                    Geometry::Quads(_) => 1,
                    Geometry::Curves(_) => 2,
                };
                s.u32(kind);
                s.u32(shape.material);
                s.i32(shape.light_base.map_or(-1, |b| b as i32));
                match &shape.geometry {
                    Geometry::Triangles(m) => {
                        s.pod_array(&m.positions);
                        s.pod_array(&m.indices);
                        s.u8(m.normals.is_some() as u8);
                        if let Some(n) = &m.normals {
                            s.pod_array(n);
                        }
                    }
                    Geometry::Quads(m) => {
                        s.pod_array(&m.positions);
                        s.pod_array(&m.indices);
                    }
                    Geometry::Curves(c) => {
                        s.u8(matches!(c.style, CurveStyle::Round) as u8);
                        s.pod_array(&c.control_points);
                        s.pod_array(&c.widths);
                    }
                }
            }
        }
    }
    if !scene.instances.is_empty() {
        let s = &mut sections[6];
        let objects: Vec<u32> = scene.instances.iter().map(|i| i.object).collect();
        let transforms: Vec<[f32; 12]> = scene.instances.iter().map(|i| i.transform.0).collect();
        s.pod_array(&objects);
        s.pod_array(&transforms);
    }
    if !strings.list.is_empty() {
        let s = &mut sections[0];
        s.u64(strings.list.len() as u64);
        for st in &strings.list {
            s.u32(st.len() as u32);
            s.0.extend_from_slice(st.as_bytes());
        }
    }

    let mut header = Sink::default();
    header.0.extend_from_slice(&MAGIC);
    header.u32(VERSION);
    header.u32(TAGS.len() as u32);
    let mut offset = HEADER_BYTES as u64;
    for (tag, sec) in TAGS.iter().zip(&sections) {
        header.u32(*tag);
        header.u64(if sec.0.is_empty() { 0 } else { offset });
        header.u64(sec.0.len() as u64);
        offset += sec.0.len() as u64;
    }
    out.write_all(&header.0)?;
    for sec in &sections {
        out.write_all(&sec.0)?;
    }
    Ok(offset)
}

pub fn write_biff_file(scene: &SceneDesc, path: &Path) -> io::Result<u64> {
    let mut f = io::BufWriter::new(std::fs::File::create(path)?);
    let n = write_biff(scene, &mut f)?;
    f.flush()?;
    Ok(n)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
    end: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], BiffError> {
        match self.pos.checked_add(n) {
            Some(e) if e <= self.end => {
                let s = &self.buf[self.pos..e];
                self.pos = e;
                Ok(s)
            }
            _ => Err(BiffError::TruncatedStream(self.end as u64)),
        }
    }
    fn u8(&mut self) -> Result<u8, BiffError> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32, BiffError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn i32(&mut self) -> Result<i32, BiffError> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, BiffError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f32(&mut self) -> Result<f32, BiffError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn f32s<const N: usize>(&mut self) -> Result<[f32; N], BiffError> {
        let mut out = [0f32; N];
        for v in &mut out {
            *v = self.f32()?;
        }
        Ok(out)
    }
    fn vec3(&mut self) -> Result<Vec3, BiffError> {
        Ok(Vec3::from_array(self.f32s::<3>()?))
    }
    fn count(&mut self) -> Result<usize, BiffError> {
        let n = self.u64()?;
        usize::try_from(n).map_err(|_| BiffError::TruncatedStream(self.end as u64))
    }
    fn pod_array<T: bytemuck::Pod>(&mut self) -> Result<Vec<T>, BiffError> {
        let n = self.count()?;
        let bytes = n.checked_mul(std::mem::size_of::<T>()).ok_or(BiffError::TruncatedStream(self.end as u64))?;
        Ok(bytemuck::pod_collect_to_vec(self.take(bytes)?))
    }
}

fn section<'a>(buf: &'a [u8], table: &[(u32, u64, u64)], tag: u32) -> Result<Option<Cursor<'a>>, BiffError> {
    let Some(&(_, offset, len)) = table.iter().find(|e| e.0 == tag) else { return Ok(None) };
    if len == 0 {
        return Ok(None);
    }
    let end = offset.checked_add(len).ok_or(BiffError::TruncatedStream(buf.len() as u64))?;
    if end > buf.len() as u64 {
        return Err(BiffError::TruncatedStream(buf.len() as u64));
    }
    Ok(Some(Cursor { buf, pos: offset as usize, end: end as usize }))
}

/// Decodes a BIFF image held in memory.
pub fn read_biff_bytes(buf: &[u8]) -> Result<SceneDesc, BiffError> {
    if buf.len() < 4 || buf[0..4] != MAGIC {
        return Err(BiffError::BadMagic);
    }
    let mut head = Cursor { buf, pos: 4, end: buf.len() };
    let version = head.u32()?;
    if version != VERSION {
        return Err(BiffError::UnsupportedVersion { found: version, expected: VERSION });
    }
    let count = head.u32()? as usize;
    let mut table = Vec::with_capacity(count.min(64));
    for _ in 0..count {
        table.push((head.u32()?, head.u64()?, head.u64()?));
    }

    let mut strings = Vec::new();
    if let Some(mut c) = section(buf, &table, 1)? {
        let n = c.count()?;
        for _ in 0..n {
            let len = c.u32()? as usize;
            let bytes = c.take(len)?;
            strings.push(String::from_utf8(bytes.to_vec()).map_err(|_| BiffError::Malformed("non-UTF-8 string".into()))?);
        }
    }
    let string = |i: u32| -> Result<String, BiffError> {
        strings.get(i as usize).cloned().ok_or_else(|| BiffError::Malformed(format!("string index {i}")))
    };

    let mut scene = SceneDesc::default();
    if let Some(mut c) = section(buf, &table, 2)? {
        for _ in 0..c.count()? {
            let name = string(c.u32()?)?;
            let texture = c.i32()?;
            let base_color = c.f32s::<3>()?;
            let [metallic, roughness, specular, specular_tint, sheen, sheen_tint, clearcoat, clearcoat_gloss, ior] =
                c.f32s::<9>()?;
            let dielectric = c.u8()? != 0;
            scene.materials.push(MaterialDesc {
                name,
                texture,
                params: DisneyMaterial {
                    base_color,
                    metallic,
                    roughness,
                    specular,
                    specular_tint,
                    sheen,
                    sheen_tint,
                    clearcoat,
                    clearcoat_gloss,
                    ior,
                    dielectric,
                },
            });
        }
    }
    if let Some(mut c) = section(buf, &table, 3)? {
        for _ in 0..c.count()? {
            let name = string(c.u32()?)?;
            let path = string(c.u32()?)?;
            let channels = c.u32()?;
            scene.textures.push(FaceTextureRef { name, path, channels });
        }
    }
    if let Some(mut c) = section(buf, &table, 4)? {
        for _ in 0..c.count()? {
            let light = match c.u32()? {
                0 => LightDesc::QuadArea {
                    corners: [c.vec3()?, c.vec3()?, c.vec3()?, c.vec3()?],
                    radiance: c.f32s::<3>()?,
                },
                1 => {
                    let radiance = c.f32s::<3>()?;
                    let img = c.i32()?;
                    LightDesc::Environment { radiance, image: if img < 0 { None } else { Some(string(img as u32)?) } }
                }
                k => return Err(BiffError::Malformed(format!("light kind {k}"))),
            };
            scene.lights.push(light);
        }
    }
    if let Some(mut c) = section(buf, &table, 5)? {
        let (position, look_at, up) = (c.vec3()?, c.vec3()?, c.vec3()?);
        let [fov_degrees, aspect] = c.f32s::<2>()?;
        let resolution = [c.u32()?, c.u32()?];
        scene.camera = Some(CameraDesc { position, look_at, up, fov_degrees, aspect, resolution });
    }
    if let Some(mut c) = section(buf, &table, 6)? {
        let n = c.count()?;
        for _ in 0..n {
            let name = string(c.u32()?)?;
            let shape_count = c.count()?;
            let mut shapes = Vec::new();
            for _ in 0..shape_count {
                let kind = c.u32()?;
                let material = c.u32()?;
                let lb = c.i32()?;
                let geometry = match kind {
                    0 => {
                        let positions = c.pod_array::<Vec3>()?;
                        let indices = c.pod_array::<[u32; 3]>()?;
                        let normals = if c.u8()? != 0 { Some(c.pod_array::<Vec3>()?) } else { None };
                        Geometry::Triangles(TriangleMesh { positions, indices, normals })
                    }
                    1 => Geometry::Quads(QuadMesh { positions: c.pod_array()?, indices: c.pod_array()? }),
                    2 => {
                        let style = if c.u8()? != 0 { CurveStyle::Round } else { CurveStyle::Flat };
                        Geometry::Curves(CurveSet { control_points: c.pod_array()?, widths: c.pod_array()?, style })
                    }
                    k => return Err(BiffError::Malformed(format!("shape kind {k}"))),
                };
                shapes.push(ShapeDesc { geometry, material, light_base: (lb >= 0).then_some(lb as u32) });
            }
            scene.objects.push(NamedObject { name, shapes });
        }
    }
    if let Some(mut c) = section(buf, &table, 7)? {
        let objects = c.pod_array::<u32>()?;
        let transforms = c.pod_array::<[f32; 12]>()?;
        if objects.len() != transforms.len() {
            return Err(BiffError::Malformed("instance arrays differ in length".into()));
        }
        scene.instances =
            objects.into_iter().zip(transforms).map(|(object, t)| Instance { object, transform: Affine(t) }).collect();
    }
    Ok(scene)
}

/// Reads a whole BIFF stream.
pub fn read_biff<R: Read>(source: &mut R) -> Result<SceneDesc, BiffError> {
    let mut buf = Vec::new();
    source.read_to_end(&mut buf)?;
    read_biff_bytes(&buf)
}

pub fn read_biff_file(path: &Path) -> Result<SceneDesc, BiffError> {
    read_biff_bytes(&std::fs::read(path)?)
}
