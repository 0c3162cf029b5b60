//! Emits a [`SceneDesc`] as PBRT text that parses back to an equal scene.

use std::collections::HashSet;
use std::fmt::Display;
use std::io::{self, Write};

use crate::scene::{CurveStyle, Geometry, LightDesc, SceneDesc};

fn unrepresentable(msg: String) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidInput, msg)
}

fn list<W: Write, T: Display>(out: &mut W, values: impl IntoIterator<Item = T>) -> io::Result<()> {
    out.write_all(b"[")?;
    let mut first = true;
    for v in values {
        if !first {
            out.write_all(b" ")?;
        }
        first = false;
        write!(out, "{v}")?;
    }
    out.write_all(b"]")
}

fn unique_names<'a>(kind: &str, names: impl Iterator<Item = &'a str>) -> io::Result<()> {
    let mut seen = HashSet::new();
    for n in names {
        if n.contains('"') || n.contains('\n') {
            return Err(unrepresentable(format!("{kind} name {n:?} cannot be quoted")));
        }
        if !seen.insert(n) {
            return Err(unrepresentable(format!("duplicate {kind} name {n:?}")));
        }
    }
    Ok(())
}

/// Every object is written inside `ObjectBegin`/`ObjectEnd` and every
/// instance as an `ObjectInstance`, so object and instance order survive.
/// Area lights must be attached to quad shapes in light-index order.
pub fn write_pbrt<W: Write>(scene: &SceneDesc, out: &mut W) -> io::Result<()> {
    unique_names("object", scene.objects.iter().map(|o| o.name.as_str()))?;
    unique_names("material", scene.materials.iter().map(|m| m.name.as_str()))?;
    unique_names("texture", scene.textures.iter().map(|t| t.name.as_str()))?;

    writeln!(out, "# elephant scene")?;
    if let Some(c) = &scene.camera {
        writeln!(
            out,
            "LookAt {} {} {}  {} {} {}  {} {} {}",
            c.position.x, c.position.y, c.position.z, c.look_at.x, c.look_at.y, c.look_at.z, c.up.x, c.up.y, c.up.z
        )?;
        writeln!(out, "Camera \"perspective\" \"float fov\" [{}]", c.fov_degrees)?;
        writeln!(
            out,
            "Film \"image\" \"integer xresolution\" [{}] \"integer yresolution\" [{}] \"float frameaspectratio\" [{}]",
            c.resolution[0], c.resolution[1], c.aspect
        )?;
    }
    writeln!(out, "WorldBegin")?;
    for t in &scene.textures {
        writeln!(
            out,
            "Texture \"{}\" \"color\" \"facetex\" \"string filename\" \"{}\" \"integer channels\" [{}]",
            t.name, t.path, t.channels
        )?;
    }
    for m in &scene.materials {
        let p = &m.params;
        write!(out, "MakeNamedMaterial \"{}\" \"string type\" \"disney\" \"rgb color\" ", m.name)?;
        list(out, p.base_color)?;
        if m.texture >= 0 {
            let t = scene
                .textures
                .get(m.texture as usize)
                .ok_or_else(|| unrepresentable(format!("material {} texture out of range", m.name)))?;
            write!(out, " \"texture color\" \"{}\"", t.name)?;
        }
        for (k, v) in [
            ("metallic", p.metallic),
            ("roughness", p.roughness),
            ("specular", p.specular),
            ("speculartint", p.specular_tint),
            ("sheen", p.sheen),
            ("sheentint", p.sheen_tint),
            ("clearcoat", p.clearcoat),
            ("clearcoatgloss", p.clearcoat_gloss),
            ("eta", p.ior),
        ] {
            write!(out, " \"float {k}\" [{v}]")?;
        }
        writeln!(out, " \"bool dielectric\" \"{}\"", p.dielectric)?;
    }

    let mut next_light = 0usize;
    let flush_env = |out: &mut W, next_light: &mut usize, upto: usize| -> io::Result<()> {
        while *next_light < upto {
            match &scene.lights[*next_light] {
                LightDesc::Environment { radiance, image } => {
                    write!(out, "LightSource \"infinite\" \"rgb L\" ")?;
                    list(out, *radiance)?;
                    if let Some(img) = image {
                        write!(out, " \"string mapname\" \"{img}\"")?;
                    }
                    writeln!(out)?;
                }
                LightDesc::QuadArea { .. } => {
                    return Err(unrepresentable(format!("area light {} is not attached to a shape", *next_light)))
                }
            }
            *next_light += 1;
        }
        Ok(())
    };

    for obj in &scene.objects {
        for shape in &obj.shapes {
            if let Some(base) = shape.light_base {
                flush_env(out, &mut next_light, base as usize)?;
            }
        }
        writeln!(out, "ObjectBegin \"{}\"", obj.name)?;
        for shape in &obj.shapes {
            let material = scene
                .materials
                .get(shape.material as usize)
                .ok_or_else(|| unrepresentable(format!("object {} material out of range", obj.name)))?;
            writeln!(out, "  NamedMaterial \"{}\"", material.name)?;
            if let Some(base) = shape.light_base {
                let Geometry::Quads(q) = &shape.geometry else {
                    return Err(unrepresentable(format!("emissive shape in {} is not a quad mesh", obj.name)));
                };
                let base = base as usize;
                if base != next_light {
                    return Err(unrepresentable(format!("area lights of {} are out of order", obj.name)));
                }
                let mut radiance = None;
                for (k, quad) in q.indices.iter().enumerate() {
                    match scene.lights.get(base + k) {
                        Some(LightDesc::QuadArea { corners, radiance: r })
                            if *corners == quad.map(|i| q.positions[i as usize])
                                && radiance.map_or(true, |x: [f32; 3]| x == *r) =>
                        {
                            radiance = Some(*r)
                        }
                        _ => {
                            return Err(unrepresentable(format!(
                                "area light {} does not match its quad in {}",
                                base + k,
                                obj.name
                            )))
                        }
                    }
                }
                write!(out, "  AreaLightSource \"diffuse\" \"rgb L\" ")?;
                list(out, radiance.unwrap_or([0.0; 3]))?;
                writeln!(out)?;
                next_light = base + q.indices.len();
            }
            write_geometry(out, &shape.geometry)?;
        }
        writeln!(out, "ObjectEnd")?;
    }
    flush_env(out, &mut next_light, scene.lights.len())?;

    for inst in &scene.instances {
        let obj = scene
            .objects
            .get(inst.object as usize)
            .ok_or_else(|| unrepresentable(format!("instance references object {}", inst.object)))?;
        if inst.transform.is_identity() {
            writeln!(out, "ObjectInstance \"{}\"", obj.name)?;
        } else {
            write!(out, "AttributeBegin Transform ")?;
            list(out, inst.transform.to_column_major())?;
            writeln!(out, " ObjectInstance \"{}\" AttributeEnd", obj.name)?;
        }
    }
    writeln!(out, "WorldEnd")?;
    Ok(())
}

fn write_geometry<W: Write>(out: &mut W, g: &Geometry) -> io::Result<()> {
    match g {
        Geometry::Triangles(m) => {
            write!(out, "  Shape \"trianglemesh\" \"integer indices\" ")?;
            list(out, m.indices.iter().flatten())?;
            write!(out, " \"point P\" ")?;
            list(out, m.positions.iter().flat_map(|p| p.to_array()))?;
            if let Some(n) = &m.normals {
                write!(out, " \"normal N\" ")?;
                list(out, n.iter().flat_map(|p| p.to_array()))?;
            }
        }
        Geometry::Quads(m) => {
            write!(out, "  Shape \"quadmesh\" \"integer indices\" ")?;
            list(out, m.indices.iter().flatten())?;
            write!(out, " \"point P\" ")?;
            list(out, m.positions.iter().flat_map(|p| p.to_array()))?;
        }
        Geometry::Curves(c) => {
            let ty = match c.style {
                CurveStyle::Flat => "flat",
                CurveStyle::Round => "round",
            };
            write!(out, "  Shape \"curve\" \"string type\" \"{ty}\" \"point P\" ")?;
            list(out, c.control_points.iter().flatten().flat_map(|p| p.to_array()))?;
            write!(out, " \"float widths\" ")?;
            list(out, c.widths.iter().flatten())?;
        }
    }
    writeln!(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_pbrt;
    use crate::scene::{generate_challenge_scene, GeneratorSpec, Preset};
    use std::path::Path;

    fn roundtrip(s: &SceneDesc) -> SceneDesc {
        let mut buf = Vec::new();
        write_pbrt(s, &mut buf).unwrap();
        parse_pbrt(std::str::from_utf8(&buf).unwrap(), Path::new(".")).unwrap()
    }

    #[test]
    fn generated_scene_survives_text_roundtrip() {
        let (scene, _) = generate_challenge_scene(&Preset::Mini.spec(), 7).unwrap();
        assert_eq!(roundtrip(&scene), scene);
    }

    #[test]
    fn minimal_scene_roundtrip() {
        let (scene, _) = generate_challenge_scene(&GeneratorSpec::minimal(), 1).unwrap();
        assert_eq!(roundtrip(&scene), scene);
    }

    #[test]
    fn duplicate_names_are_rejected() {
        let (mut scene, _) = generate_challenge_scene(&GeneratorSpec::minimal(), 1).unwrap();
        let o = scene.objects[0].clone();
        scene.objects.push(o);
        assert!(write_pbrt(&scene, &mut Vec::new()).is_err());
    }
}
