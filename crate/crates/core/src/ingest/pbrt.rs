//! Streaming parser for the supported PBRT subset.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use glam::Vec3;
use thiserror::Error;

use super::quad::merge_triangle_pairs;
use crate::math::Affine;
use crate::scene::{
    CameraDesc, CurveSet, CurveStyle, FaceTextureRef, Geometry, Instance, LightDesc, MaterialDesc, NamedObject,
    QuadMesh, SceneDesc, ShapeDesc, TriangleMesh,
};
use crate::shade::DisneyMaterial;

pub const MAX_INCLUDE_DEPTH: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("unsupported directive {name} at line {line}")]
    UnsupportedDirective { name: String, line: usize },
    #[error("syntax error at line {line}: expected {expected}")]
    SyntaxError { line: usize, expected: String },
    #[error("unbalanced block at line {line}")]
    UnbalancedBlock { line: usize },
    #[error("missing include {path}")]
    MissingInclude { path: String },
}

fn syntax(line: usize, expected: impl Into<String>) -> ParseError {
    ParseError::SyntaxError { line, expected: expected.into() }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Word(String),
    Str(String),
    Num(usize, usize),
    Open,
    Close,
}

struct Lexer {
    src: String,
    pos: usize,
    line: usize,
    peeked: Option<(Tok, usize)>,
}

impl Lexer {
    fn new(src: String) -> Self {
        Self { src, pos: 0, line: 1, peeked: None }
    }

    fn scan(&mut self) -> Result<Option<(Tok, usize)>, ParseError> {
        let b = self.src.as_bytes();
        loop {
            while self.pos < b.len() && b[self.pos].is_ascii_whitespace() {
                if b[self.pos] == b'\n' {
                    self.line += 1;
                }
                self.pos += 1;
            }
            if self.pos < b.len() && b[self.pos] == b'#' {
                while self.pos < b.len() && b[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            break;
        }
        if self.pos >= b.len() {
            return Ok(None);
        }
        let line = self.line;
        let start = self.pos;
        let c = b[start];
        let tok = match c {
            b'[' => {
                self.pos += 1;
                Tok::Open
            }
            b']' => {
                self.pos += 1;
                Tok::Close
            }
            b'"' => {
                let mut end = start + 1;
                while end < b.len() && b[end] != b'"' {
                    if b[end] == b'\n' {
                        return Err(syntax(line, "closing quote"));
                    }
                    end += 1;
                }
                if end >= b.len() {
                    return Err(syntax(line, "closing quote"));
                }
                self.pos = end + 1;
                Tok::Str(self.src[start + 1..end].to_string())
            }
            b'0'..=b'9' | b'-' | b'+' | b'.' => {
                let mut end = start + 1;
                while end < b.len() && matches!(b[end], b'0'..=b'9' | b'-' | b'+' | b'.' | b'e' | b'E') {
                    end += 1;
                }
                self.pos = end;
                Tok::Num(start, end)
            }
            c if c.is_ascii_alphabetic() => {
                let mut end = start + 1;
                while end < b.len() && (b[end].is_ascii_alphanumeric() || b[end] == b'_') {
                    end += 1;
                }
                self.pos = end;
                Tok::Word(self.src[start..end].to_string())
            }
            _ => return Err(syntax(line, "directive, string, number or bracket")),
        };
        Ok(Some((tok, line)))
    }

    fn next(&mut self) -> Result<Option<(Tok, usize)>, ParseError> {
        match self.peeked.take() {
            Some(t) => Ok(Some(t)),
            None => self.scan(),
        }
    }

    fn peek(&mut self) -> Result<Option<&(Tok, usize)>, ParseError> {
        if self.peeked.is_none() {
            self.peeked = self.scan()?;
        }
        Ok(self.peeked.as_ref())
    }

    fn text(&self, a: usize, b: usize) -> &str {
        &self.src[a..b]
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Values {
    Floats(Vec<f32>),
    Ints(Vec<i64>),
    Strings(Vec<String>),
    Bools(Vec<bool>),
}

#[derive(Clone, Debug)]
struct Param {
    ty: String,
    name: String,
    values: Values,
    line: usize,
}

struct Params(Vec<Param>);

impl Params {
    fn get(&self, name: &str) -> Option<&Param> {
        self.0.iter().find(|p| p.name == name)
    }

    fn floats(&self, name: &str) -> Option<&[f32]> {
        match self.get(name).map(|p| &p.values) {
            Some(Values::Floats(v)) => Some(v),
            _ => None,
        }
    }

    fn float(&self, name: &str) -> Option<f32> {
        self.floats(name).and_then(|v| v.first().copied())
    }

    fn ints(&self, name: &str) -> Option<&[i64]> {
        match self.get(name).map(|p| &p.values) {
            Some(Values::Ints(v)) => Some(v),
            _ => None,
        }
    }

    fn int(&self, name: &str) -> Option<i64> {
        self.ints(name).and_then(|v| v.first().copied())
    }

    fn string(&self, name: &str) -> Option<&str> {
        match self.get(name).map(|p| &p.values) {
            Some(Values::Strings(v)) => v.first().map(String::as_str),
            _ => None,
        }
    }

    fn rgb(&self, name: &str) -> Option<[f32; 3]> {
        let p = self.0.iter().find(|p| p.name == name && (p.ty == "rgb" || p.ty == "color"))?;
        match &p.values {
            Values::Floats(v) if v.len() == 3 => Some([v[0], v[1], v[2]]),
            _ => None,
        }
    }

    fn bool(&self, name: &str) -> Option<bool> {
        match self.get(name).map(|p| &p.values) {
            Some(Values::Bools(v)) => v.first().copied(),
            _ => None,
        }
    }
}

fn points(v: &[f32], line: usize, what: &str) -> Result<Vec<Vec3>, ParseError> {
    if v.len() % 3 != 0 {
        return Err(syntax(line, format!("{what} as a multiple of 3 floats")));
    }
    Ok(v.chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect())
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Frame {
    Attribute,
    Transform,
    Object,
}

#[derive(Clone)]
struct GraphicsState {
    ctm: Affine,
    material: Option<u32>,
    area_light: Option<[f32; 3]>,
}

struct Parser {
    base: PathBuf,
    scene: SceneDesc,
    gs: GraphicsState,
    stack: Vec<(Frame, GraphicsState, usize)>,
    named_materials: HashMap<String, u32>,
    named_textures: HashMap<String, u32>,
    named_objects: HashMap<String, u32>,
    current_object: Option<u32>,
    default_material: Option<u32>,
    /// Raw `LookAt` arguments while the CTM is exactly that `LookAt`.
    pure_look_at: Option<(Vec3, Vec3, Vec3)>,
    camera_ctm: Option<(Affine, Option<(Vec3, Vec3, Vec3)>, f32)>,
    film: Option<([u32; 2], Option<f32>)>,
}

/// Parses PBRT text. `Include` paths resolve against `base_path`.
pub fn parse_pbrt(source: &str, base_path: &Path) -> Result<SceneDesc, ParseError> {
    let mut p = Parser {
        base: base_path.to_path_buf(),
        scene: SceneDesc::default(),
        gs: GraphicsState { ctm: Affine::IDENTITY, material: None, area_light: None },
        stack: Vec::new(),
        named_materials: HashMap::new(),
        named_textures: HashMap::new(),
        named_objects: HashMap::new(),
        current_object: None,
        default_material: None,
        pure_look_at: None,
        camera_ctm: None,
        film: None,
    };
    let mut lexer = Lexer::new(source.to_string());
    let last_line = p.run(&mut lexer, 0)?;
    if let Some((_, _, line)) = p.stack.last() {
        return Err(ParseError::UnbalancedBlock { line: *line.max(&last_line) });
    }
    p.finish_camera();
    Ok(p.scene)
}

/// Reads and parses a file; includes resolve against its directory.
pub fn parse_pbrt_file(path: &Path) -> Result<SceneDesc, ParseError> {
    let src = std::fs::read_to_string(path)
        .map_err(|_| ParseError::MissingInclude { path: path.display().to_string() })?;
    parse_pbrt(&src, path.parent().unwrap_or(Path::new(".")))
}

fn look_at_matrix(eye: Vec3, target: Vec3, up: Vec3) -> Option<Affine> {
    let (e, t, u) = (eye.as_dvec3(), target.as_dvec3(), up.as_dvec3());
    let dir = (t - e).try_normalize()?;
    let right = u.try_normalize()?.cross(dir).try_normalize()?;
    let new_up = dir.cross(right);
    let c2w = Affine(
        [
            right.x, new_up.x, dir.x, e.x, right.y, new_up.y, dir.y, e.y, right.z, new_up.z, dir.z, e.z,
        ]
        .map(|v| v as f32),
    );
    c2w.inverse()
}

impl Parser {
    fn run(&mut self, lx: &mut Lexer, depth: usize) -> Result<usize, ParseError> {
        let mut last_line = 1;
        while let Some((tok, line)) = lx.next()? {
            last_line = line;
            let Tok::Word(name) = tok else {
                return Err(syntax(line, "directive"));
            };
            self.directive(lx, &name, line, depth)?;
        }
        Ok(last_line)
    }

    fn floats_n<const N: usize>(&self, lx: &mut Lexer, line: usize) -> Result<[f32; N], ParseError> {
        let mut out = [0f32; N];
        let bracketed = matches!(lx.peek()?, Some((Tok::Open, _)));
        if bracketed {
            lx.next()?;
        }
        for v in out.iter_mut() {
            match lx.next()? {
                Some((Tok::Num(a, b), l)) => {
                    *v = lx.text(a, b).parse().map_err(|_| syntax(l, "number"))?;
                }
                _ => return Err(syntax(line, format!("{N} numbers"))),
            }
        }
        if bracketed && !matches!(lx.next()?, Some((Tok::Close, _))) {
            return Err(syntax(line, "]"));
        }
        Ok(out)
    }

    fn string_arg(&self, lx: &mut Lexer, line: usize) -> Result<String, ParseError> {
        match lx.next()? {
            Some((Tok::Str(s), _)) => Ok(s),
            _ => Err(syntax(line, "quoted string")),
        }
    }

    fn params(&self, lx: &mut Lexer) -> Result<Params, ParseError> {
        let mut out = Vec::new();
        while let Some((Tok::Str(_), _)) = lx.peek()? {
            let Some((Tok::Str(decl), line)) = lx.next()? else { unreachable!() };
            let mut parts = decl.split_whitespace();
            let (Some(ty), Some(name), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(syntax(line, "parameter declaration \"type name\""));
            };
            let ty = match ty {
                "point3" => "point",
                "normal3" => "normal",
                "vector3" => "vector",
                t => t,
            }
            .to_string();
            let mut raw = Vec::new();
            match lx.next()? {
                Some((Tok::Open, _)) => loop {
                    match lx.next()? {
                        Some((Tok::Close, _)) => break,
                        Some((t @ (Tok::Num(..) | Tok::Str(_) | Tok::Word(_)), l)) => raw.push((t, l)),
                        _ => return Err(syntax(line, "]")),
                    }
                },
                Some((t @ (Tok::Num(..) | Tok::Str(_) | Tok::Word(_)), l)) => raw.push((t, l)),
                _ => return Err(syntax(line, format!("value for parameter \"{name}\""))),
            }
            let values = match ty.as_str() {
                "float" | "point" | "normal" | "vector" | "rgb" | "color" => {
                    let mut v = Vec::with_capacity(raw.len());
                    for (t, l) in raw {
                        let Tok::Num(a, b) = t else { return Err(syntax(l, "number")) };
                        v.push(lx.text(a, b).parse::<f32>().map_err(|_| syntax(l, "number"))?);
                    }
                    Values::Floats(v)
                }
                "integer" => {
                    let mut v = Vec::with_capacity(raw.len());
                    for (t, l) in raw {
                        let Tok::Num(a, b) = t else { return Err(syntax(l, "integer")) };
                        v.push(lx.text(a, b).parse::<i64>().map_err(|_| syntax(l, "integer"))?);
                    }
                    Values::Ints(v)
                }
                "string" | "texture" => {
                    let mut v = Vec::new();
                    for (t, l) in raw {
                        let Tok::Str(s) = t else { return Err(syntax(l, "quoted string")) };
                        v.push(s);
                    }
                    Values::Strings(v)
                }
                "bool" => {
                    let mut v = Vec::new();
                    for (t, l) in raw {
                        match t {
                            Tok::Str(s) | Tok::Word(s) if s == "true" => v.push(true),
                            Tok::Str(s) | Tok::Word(s) if s == "false" => v.push(false),
                            _ => return Err(syntax(l, "true or false")),
                        }
                    }
                    Values::Bools(v)
                }
                other => return Err(syntax(line, format!("known parameter type, found \"{other}\""))),
            };
            out.push(Param { ty, name: name.to_string(), values, line });
        }
        Ok(Params(out))
    }

    fn apply(&mut self, m: Affine) {
        self.gs.ctm = self.gs.ctm.then_local(&m);
        self.pure_look_at = None;
    }

    fn push(&mut self, f: Frame, line: usize) {
        self.stack.push((f, self.gs.clone(), line));
    }

    fn pop(&mut self, f: Frame, line: usize) -> Result<(), ParseError> {
        match self.stack.pop() {
            Some((frame, gs, _)) if frame == f => {
                if f == Frame::Transform {
                    self.gs.ctm = gs.ctm;
                } else {
                    self.gs = gs;
                }
                self.pure_look_at = None;
                Ok(())
            }
            _ => Err(ParseError::UnbalancedBlock { line }),
        }
    }

    fn directive(&mut self, lx: &mut Lexer, name: &str, line: usize, depth: usize) -> Result<(), ParseError> {
        match name {
            "Include" => {
                let file = self.string_arg(lx, line)?;
                if depth + 1 > MAX_INCLUDE_DEPTH {
                    return Err(syntax(line, format!("include depth at most {MAX_INCLUDE_DEPTH}")));
                }
                let path = self.base.join(&file);
                let src = std::fs::read_to_string(&path)
                    .map_err(|_| ParseError::MissingInclude { path: path.display().to_string() })?;
                let mut inner = Lexer::new(src);
                self.run(&mut inner, depth + 1)?;
            }
            "WorldBegin" => {
                self.gs.ctm = Affine::IDENTITY;
                self.pure_look_at = None;
            }
            "WorldEnd" => {
                if let Some((_, _, l)) = self.stack.last() {
                    return Err(ParseError::UnbalancedBlock { line: (*l).max(line) });
                }
            }
            "AttributeBegin" => self.push(Frame::Attribute, line),
            "AttributeEnd" => self.pop(Frame::Attribute, line)?,
            "TransformBegin" => self.push(Frame::Transform, line),
            "TransformEnd" => self.pop(Frame::Transform, line)?,
            "ObjectBegin" => {
                let obj_name = self.string_arg(lx, line)?;
                if self.current_object.is_some() {
                    return Err(syntax(line, "ObjectEnd before nested ObjectBegin"));
                }
                self.push(Frame::Object, line);
                let idx = self.scene.objects.len() as u32;
                self.scene.objects.push(NamedObject { name: obj_name.clone(), shapes: Vec::new() });
                self.named_objects.insert(obj_name, idx);
                self.current_object = Some(idx);
            }
            "ObjectEnd" => {
                self.pop(Frame::Object, line)?;
                self.current_object = None;
            }
            "ObjectInstance" => {
                let obj_name = self.string_arg(lx, line)?;
                if self.current_object.is_some() {
                    return Err(syntax(line, "ObjectInstance outside ObjectBegin/ObjectEnd"));
                }
                let &object = self
                    .named_objects
                    .get(&obj_name)
                    .ok_or_else(|| syntax(line, format!("a defined object, found \"{obj_name}\"")))?;
                if self.gs.ctm.determinant().abs() <= 1e-12 {
                    return Err(syntax(line, "an invertible instance transform"));
                }
                self.scene.instances.push(Instance { object, transform: self.gs.ctm });
            }
            "Translate" => {
                let [x, y, z] = self.floats_n::<3>(lx, line)?;
                self.apply(Affine::translation(Vec3::new(x, y, z)));
            }
            "Scale" => {
                let [x, y, z] = self.floats_n::<3>(lx, line)?;
                self.apply(Affine::scale(Vec3::new(x, y, z)));
            }
            "Rotate" => {
                let [a, x, y, z] = self.floats_n::<4>(lx, line)?;
                self.apply(Affine::rotation(a, Vec3::new(x, y, z)));
            }
            "Transform" => {
                let m = self.floats_n::<16>(lx, line)?;
                self.gs.ctm = Affine::from_column_major(&m);
                self.pure_look_at = None;
            }
            "ConcatTransform" => {
                let m = self.floats_n::<16>(lx, line)?;
                self.apply(Affine::from_column_major(&m));
            }
            "LookAt" => {
                let v = self.floats_n::<9>(lx, line)?;
                let (eye, target, up) =
                    (Vec3::new(v[0], v[1], v[2]), Vec3::new(v[3], v[4], v[5]), Vec3::new(v[6], v[7], v[8]));
                let m = look_at_matrix(eye, target, up).ok_or_else(|| syntax(line, "a non-degenerate LookAt"))?;
                let was_identity = self.gs.ctm.is_identity();
                self.apply(m);
                if was_identity {
                    self.pure_look_at = Some((eye, target, up));
                }
            }
            "Camera" => {
                let kind = self.string_arg(lx, line)?;
                let params = self.params(lx)?;
                if kind != "perspective" {
                    return Err(syntax(line, "Camera \"perspective\""));
                }
                let fov = params.float("fov").unwrap_or(90.0);
                self.camera_ctm = Some((self.gs.ctm, self.pure_look_at, fov));
            }
            "Film" => {
                self.string_arg(lx, line)?;
                let params = self.params(lx)?;
                let x = params.int("xresolution").unwrap_or(640).max(1) as u32;
                let y = params.int("yresolution").unwrap_or(480).max(1) as u32;
                self.film = Some(([x, y], params.float("frameaspectratio")));
            }
            "Shape" => {
                let kind = self.string_arg(lx, line)?;
                let params = self.params(lx)?;
                self.shape(&kind, &params, line)?;
            }
            "Material" => {
                let ty = self.string_arg(lx, line)?;
                let params = self.params(lx)?;
                let name = format!("material{}", self.scene.materials.len());
                let idx = self.material(name, &ty, &params, line)?;
                self.gs.material = Some(idx);
            }
            "MakeNamedMaterial" => {
                let name = self.string_arg(lx, line)?;
                let params = self.params(lx)?;
                let ty = params.string("type").unwrap_or("").to_string();
                let idx = self.material(name.clone(), &ty, &params, line)?;
                self.named_materials.insert(name, idx);
            }
            "NamedMaterial" => {
                let name = self.string_arg(lx, line)?;
                let &idx = self
                    .named_materials
                    .get(&name)
                    .ok_or_else(|| syntax(line, format!("a defined material, found \"{name}\"")))?;
                self.gs.material = Some(idx);
            }
            "Texture" => {
                let name = self.string_arg(lx, line)?;
                let ty = self.string_arg(lx, line)?;
                let class = self.string_arg(lx, line)?;
                let params = self.params(lx)?;
                if ty != "color" && ty != "spectrum" {
                    return Err(syntax(line, "texture type \"color\""));
                }
                if class != "facetex" {
                    return Err(syntax(line, "texture class \"facetex\""));
                }
                let path = params.string("filename").ok_or_else(|| syntax(line, "\"string filename\""))?;
                let channels = params.int("channels").unwrap_or(3) as u32;
                let idx = self.scene.textures.len() as u32;
                self.scene.textures.push(FaceTextureRef { name: name.clone(), path: path.to_string(), channels });
                self.named_textures.insert(name, idx);
            }
            "LightSource" => {
                let kind = self.string_arg(lx, line)?;
                let params = self.params(lx)?;
                if kind != "infinite" {
                    return Err(syntax(line, "LightSource \"infinite\""));
                }
                let radiance = params.rgb("L").unwrap_or([1.0; 3]);
                let image = params.string("mapname").map(str::to_string);
                self.scene.lights.push(LightDesc::Environment { radiance, image });
            }
            "AreaLightSource" => {
                let kind = self.string_arg(lx, line)?;
                let params = self.params(lx)?;
                if kind != "diffuse" {
                    return Err(syntax(line, "AreaLightSource \"diffuse\""));
                }
                self.gs.area_light = Some(params.rgb("L").unwrap_or([1.0; 3]));
            }
            other => {
                return Err(ParseError::UnsupportedDirective { name: other.to_string(), line });
            }
        }
        Ok(())
    }

    fn material(&mut self, name: String, ty: &str, params: &Params, line: usize) -> Result<u32, ParseError> {
        if ty != "disney" {
            return Err(syntax(line, format!("material type \"disney\", found \"{ty}\"")));
        }
        let mut m = DisneyMaterial::default();
        if let Some(c) = params.rgb("color") {
            m.base_color = c;
        }
        let scalars: [(&str, &mut f32); 9] = [
            ("metallic", &mut m.metallic),
            ("roughness", &mut m.roughness),
            ("specular", &mut m.specular),
            ("speculartint", &mut m.specular_tint),
            ("sheen", &mut m.sheen),
            ("sheentint", &mut m.sheen_tint),
            ("clearcoat", &mut m.clearcoat),
            ("clearcoatgloss", &mut m.clearcoat_gloss),
            ("eta", &mut m.ior),
        ];
        for (key, slot) in scalars {
            if let Some(v) = params.float(key) {
                *slot = v;
            }
        }
        if let Some(t) = params.float("spectrans") {
            m.dielectric = t >= 0.5;
        }
        if let Some(b) = params.bool("dielectric") {
            m.dielectric = b;
        }
        let mut texture = -1;
        if let Some(p) = params.0.iter().find(|p| p.name == "color" && p.ty == "texture") {
            let Values::Strings(v) = &p.values else { unreachable!() };
            let tname = v.first().ok_or_else(|| syntax(p.line, "texture name"))?;
            texture = *self
                .named_textures
                .get(tname)
                .ok_or_else(|| syntax(p.line, format!("a defined texture, found \"{tname}\"")))? as i32;
        }
        let idx = self.scene.materials.len() as u32;
        self.scene.materials.push(MaterialDesc { name, params: m, texture });
        Ok(idx)
    }

    fn current_material(&mut self) -> u32 {
        if let Some(m) = self.gs.material {
            return m;
        }
        if let Some(m) = self.default_material {
            return m;
        }
        self.scene.materials.push(MaterialDesc { name: "default".into(), params: DisneyMaterial::default(), texture: -1 });
        let m = self.scene.materials.len() as u32 - 1;
        self.default_material = Some(m);
        m
    }

    fn shape(&mut self, kind: &str, params: &Params, line: usize) -> Result<(), ParseError> {
        let ctm = self.gs.ctm;
        let bake = !ctm.is_identity();
        let positions = |p: &Params| -> Result<Vec<Vec3>, ParseError> {
            let v = p.floats("P").ok_or_else(|| syntax(line, "\"point P\""))?;
            let mut pts = points(v, line, "P")?;
            if bake {
                for q in &mut pts {
                    *q = ctm.point(*q);
                }
            }
            Ok(pts)
        };
        let indices = |p: &Params, n: usize, count: usize| -> Result<Vec<u32>, ParseError> {
            let v = p.ints("indices").ok_or_else(|| syntax(line, "\"integer indices\""))?;
            if v.len() % n != 0 {
                return Err(syntax(line, format!("indices as a multiple of {n}")));
            }
            v.iter()
                .map(|&i| {
                    if i < 0 || i as usize >= count {
                        Err(syntax(line, format!("index < {count}, found {i}")))
                    } else {
                        Ok(i as u32)
                    }
                })
                .collect()
        };
        let geometry = match kind {
            "trianglemesh" => {
                let pos = positions(params)?;
                let idx = indices(params, 3, pos.len())?;
                let normals = match params.floats("N") {
                    Some(v) => {
                        let mut n = points(v, line, "N")?;
                        if n.len() != pos.len() {
                            return Err(syntax(line, "one normal per vertex"));
                        }
                        if bake {
                            let inv = ctm.inverse().ok_or_else(|| syntax(line, "an invertible transform"))?;
                            for q in &mut n {
                                *q = inv.transpose_vector(*q).normalize_or_zero();
                            }
                        }
                        Some(n)
                    }
                    None => None,
                };
                let mesh = TriangleMesh {
                    positions: pos,
                    indices: idx.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
                    normals,
                };
                if self.gs.area_light.is_some() {
                    let q = merge_triangle_pairs(&mesh)
                        .map_err(|_| syntax(line, "area-light trianglemesh made of quad pairs"))?;
                    Geometry::Quads(q)
                } else {
                    Geometry::Triangles(mesh)
                }
            }
            "quadmesh" => {
                let pos = positions(params)?;
                let idx = indices(params, 4, pos.len())?;
                Geometry::Quads(QuadMesh {
                    positions: pos,
                    indices: idx.chunks_exact(4).map(|c| [c[0], c[1], c[2], c[3]]).collect(),
                })
            }
            "curve" => Geometry::Curves(self.curve(params, line, bake.then_some(ctm))?),
            other => return Err(syntax(line, format!("shape trianglemesh, quadmesh or curve, found \"{other}\""))),
        };
        if let Geometry::Curves(_) = geometry {
            if self.gs.area_light.is_some() {
                return Err(syntax(line, "quad shape under AreaLightSource"));
            }
        }
        let light_base = match (self.gs.area_light, &geometry) {
            (Some(radiance), Geometry::Quads(q)) => {
                let base = self.scene.lights.len() as u32;
                for quad in &q.indices {
                    let corners = quad.map(|i| q.positions[i as usize]);
                    self.scene.lights.push(LightDesc::QuadArea { corners, radiance });
                }
                Some(base)
            }
            _ => None,
        };
        let material = self.current_material();
        let shape = ShapeDesc { geometry, material, light_base };
        match self.current_object {
            Some(o) => self.scene.objects[o as usize].shapes.push(shape),
            None => {
                let idx = self.scene.objects.len() as u32;
                self.scene.objects.push(NamedObject { name: format!("shape{idx}"), shapes: vec![shape] });
                self.scene.instances.push(Instance { object: idx, transform: Affine::IDENTITY });
            }
        }
        Ok(())
    }

    /// Curves follow PBRT's cubic Bézier convention (`3n + 1` shared control
    /// points, `width` or `width0`/`width1`), unless a `float widths` array
    /// is given: then `P` holds independent four-point segments with one
    /// width per control point.
    fn curve(&self, params: &Params, line: usize, ctm: Option<Affine>) -> Result<CurveSet, ParseError> {
        let v = params.floats("P").ok_or_else(|| syntax(line, "\"point P\""))?;
        let mut pts = points(v, line, "P")?;
        if let Some(m) = ctm {
            for q in &mut pts {
                *q = m.point(*q);
            }
        }
        let style = match params.string("type").unwrap_or("flat") {
            "flat" | "ribbon" => CurveStyle::Flat,
            "round" | "cylinder" => CurveStyle::Round,
            other => return Err(syntax(line, format!("curve type flat or round, found \"{other}\""))),
        };
        if let Some(w) = params.floats("widths") {
            if pts.len() % 4 != 0 || w.len() != pts.len() {
                return Err(syntax(line, "four control points and four widths per segment"));
            }
            return Ok(CurveSet {
                control_points: pts.chunks_exact(4).map(|c| [c[0], c[1], c[2], c[3]]).collect(),
                widths: w.chunks_exact(4).map(|c| [c[0], c[1], c[2], c[3]]).collect(),
                style,
            });
        }
        if pts.len() < 4 || (pts.len() - 1) % 3 != 0 {
            return Err(syntax(line, "3n+1 Bézier control points"));
        }
        let w = params.float("width").unwrap_or(1.0);
        let w0 = params.float("width0").unwrap_or(w);
        let w1 = params.float("width1").unwrap_or(w);
        let segments = (pts.len() - 1) / 3;
        let cps = (pts.len() - 1) as f32;
        let width_at = |i: usize| w0 + (w1 - w0) * (i as f32 / cps);
        let mut control_points = Vec::with_capacity(segments);
        let mut widths = Vec::with_capacity(segments);
        for s in 0..segments {
            let b = 3 * s;
            control_points.push([pts[b], pts[b + 1], pts[b + 2], pts[b + 3]]);
            widths.push([width_at(b), width_at(b + 1), width_at(b + 2), width_at(b + 3)]);
        }
        Ok(CurveSet { control_points, widths, style })
    }

    fn finish_camera(&mut self) {
        let Some((ctm, raw, fov)) = self.camera_ctm else { return };
        let (resolution, aspect) = match self.film {
            Some((res, aspect)) => (res, aspect.unwrap_or(res[0] as f32 / res[1] as f32)),
            None => {
                let d = CameraDesc::default();
                (d.resolution, d.aspect)
            }
        };
        let (position, look_at, up) = match raw {
            Some(r) => r,
            None => match ctm.inverse() {
                Some(c2w) => {
                    let p = c2w.point(Vec3::ZERO);
                    (p, p + c2w.vector(Vec3::Z).normalize_or_zero(), c2w.vector(Vec3::Y).normalize_or_zero())
                }
                None => (Vec3::ZERO, Vec3::Z, Vec3::Y),
            },
        };
        self.scene.camera = Some(CameraDesc { position, look_at, up, fov_degrees: fov, aspect, resolution });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<SceneDesc, ParseError> {
        parse_pbrt(s, Path::new("."))
    }

    #[test]
    fn single_triangle() {
        let s = parse(
            r#"WorldBegin
            Shape "trianglemesh" "point P" [0 0 0 1 0 0 0 1 0] "integer indices" [0 1 2]
            WorldEnd"#,
        )
        .unwrap();
        assert_eq!(s.objects.len(), 1);
        assert_eq!(s.objects[0].shapes.len(), 1);
        assert_eq!(s.instances, vec![Instance { object: 0, transform: Affine::IDENTITY }]);
        s.validate().unwrap();
    }

    #[test]
    fn object_instancing() {
        let s = parse(
            r#"WorldBegin
            ObjectBegin "x"
              Shape "quadmesh" "point P" [0 0 0 1 0 0 1 1 0 0 1 0] "integer indices" [0 1 2 3]
            ObjectEnd
            AttributeBegin Translate 1 0 0 ObjectInstance "x" AttributeEnd
            AttributeBegin Translate 0 2 0 ObjectInstance "x" AttributeEnd
            WorldEnd"#,
        )
        .unwrap();
        assert_eq!(s.objects.len(), 1);
        assert_eq!(s.instances.len(), 2);
        assert_ne!(s.instances[0].transform, s.instances[1].transform);
        assert_eq!(s.instances[1].transform.0[7], 2.0);
    }

    #[test]
    fn unsupported_directive_reports_line() {
        let e = parse("WorldBegin\n\nMakeNamedMedium \"fog\"\n").unwrap_err();
        assert_eq!(e, ParseError::UnsupportedDirective { name: "MakeNamedMedium".into(), line: 3 });
    }

    #[test]
    fn unbalanced_attribute() {
        assert!(matches!(parse("AttributeBegin\n"), Err(ParseError::UnbalancedBlock { .. })));
        assert!(matches!(parse("AttributeEnd\n"), Err(ParseError::UnbalancedBlock { line: 1 })));
        assert!(matches!(parse("AttributeBegin TransformEnd"), Err(ParseError::UnbalancedBlock { .. })));
    }

    #[test]
    fn missing_include() {
        assert!(matches!(parse("Include \"nope.pbrt\""), Err(ParseError::MissingInclude { .. })));
    }

    #[test]
    fn include_depth_is_capped() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("self.pbrt"), "Include \"self.pbrt\"\n").unwrap();
        let e = parse_pbrt("Include \"self.pbrt\"", dir.path()).unwrap_err();
        assert!(matches!(e, ParseError::SyntaxError { .. }), "{e:?}");
    }

    #[test]
    fn look_at_camera_is_kept_exactly() {
        let s = parse(
            r#"LookAt 0.1 0.2 5.3  0 0.5 0  0 1 0
            Camera "perspective" "float fov" [37.5]
            Film "image" "integer xresolution" [320] "integer yresolution" [200]
            WorldBegin WorldEnd"#,
        )
        .unwrap();
        let c = s.camera.unwrap();
        assert_eq!(c.position, Vec3::new(0.1, 0.2, 5.3));
        assert_eq!(c.look_at, Vec3::new(0.0, 0.5, 0.0));
        assert_eq!(c.fov_degrees, 37.5);
        assert_eq!(c.resolution, [320, 200]);
        assert_eq!(c.aspect, 1.6);
    }

    #[test]
    fn transformed_camera_is_derived() {
        let s = parse(
            r#"Translate 0 0 -4
            Camera "perspective" "float fov" [40]
            WorldBegin WorldEnd"#,
        )
        .unwrap();
        let c = s.camera.unwrap();
        assert!((c.position - Vec3::new(0.0, 0.0, 4.0)).length() < 1e-6);
        assert!((c.look_at - Vec3::new(0.0, 0.0, 5.0)).length() < 1e-6);
    }

    #[test]
    fn area_light_on_quads() {
        let s = parse(
            r#"WorldBegin
            AttributeBegin
              AreaLightSource "diffuse" "rgb L" [4 4 4]
              Shape "trianglemesh" "point P" [0 1 0 1 1 0 1 1 1 0 1 1] "integer indices" [0 1 2 0 2 3]
            AttributeEnd
            Shape "quadmesh" "point P" [0 0 0 1 0 0 1 1 0 0 1 0] "integer indices" [0 1 2 3]
            WorldEnd"#,
        )
        .unwrap();
        assert_eq!(s.lights.len(), 1);
        assert_eq!(s.objects[0].shapes[0].light_base, Some(0));
        assert_eq!(s.objects[1].shapes[0].light_base, None);
    }

    #[test]
    fn materials_and_textures() {
        let s = parse(
            r#"WorldBegin
            Texture "bark" "color" "facetex" "string filename" "bark.ftex"
            MakeNamedMaterial "wood" "string type" "disney" "texture color" "bark" "float roughness" [0.7]
            Material "disney" "rgb color" [0.1 0.2 0.3] "float metallic" 1
            NamedMaterial "wood"
            Shape "quadmesh" "point P" [0 0 0 1 0 0 1 1 0 0 1 0] "integer indices" [0 1 2 3]
            WorldEnd"#,
        )
        .unwrap();
        assert_eq!(s.textures[0].path, "bark.ftex");
        assert_eq!(s.materials[0].texture, 0);
        assert_eq!(s.materials[0].params.roughness, 0.7);
        assert_eq!(s.materials[1].params.metallic, 1.0);
        assert_eq!(s.objects[0].shapes[0].material, 0);
    }

    #[test]
    fn shared_endpoint_curve() {
        let s = parse(
            r#"WorldBegin
            Shape "curve" "point P" [0 0 0 1 0 0 2 0 0 3 0 0 4 0 0 5 0 0 6 0 0] "float width0" 0.3 "float width1" 0.1
            WorldEnd"#,
        )
        .unwrap();
        let Geometry::Curves(c) = &s.objects[0].shapes[0].geometry else { panic!() };
        assert_eq!(c.control_points.len(), 2);
        assert_eq!(c.control_points[1][0], Vec3::new(3.0, 0.0, 0.0));
        assert_eq!(c.widths[0][0], 0.3);
        assert!((c.widths[1][3] - 0.1).abs() < 1e-7);
    }

    #[test]
    fn bad_index_is_syntax_error() {
        let e = parse(r#"Shape "trianglemesh" "point P" [0 0 0 1 0 0 0 1 0] "integer indices" [0 1 3]"#);
        assert!(matches!(e, Err(ParseError::SyntaxError { line: 1, .. })));
    }
}
