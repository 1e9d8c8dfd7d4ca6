use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::mesh::TriangleMesh;
use crate::{Error, Result, Vec3};

/// Loads an OBJ or binary little-endian PLY mesh, chosen by extension.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let path = path.as_ref();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    let file = BufReader::new(crate::error::open(path)?);
    let mesh = match ext.as_deref() {
        Some("obj") => read_obj(file, path)?,
        Some("ply") => read_ply(file, path)?,
        _ => {
            return Err(Error::Format(format!(
                "{}: unsupported mesh extension (expected .obj or .ply)",
                path.display()
            )))
        }
    };
    if mesh.is_empty() {
        return Err(Error::EmptyMesh);
    }
    Ok(mesh)
}

/// Positions and faces only; polygons are fan-triangulated.
pub fn read_obj(reader: impl BufRead, path: &Path) -> Result<TriangleMesh> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let mut xyz = [0.0; 3];
                for c in &mut xyz {
                    let tok = tokens
                        .next()
                        .ok_or_else(|| parse_err(lineno, "vertex needs 3 coordinates".into()))?;
                    *c = tok
                        .parse()
                        .map_err(|_| parse_err(lineno, format!("bad coordinate {tok:?}")))?;
                }
                vertices.push(Vec3::from(xyz));
            }
            Some("f") => {
                let mut face = Vec::with_capacity(4);
                for tok in tokens {
                    let idx = tok.split('/').next().unwrap_or("");
                    let i: i64 = idx
                        .parse()
                        .map_err(|_| parse_err(lineno, format!("bad face index {tok:?}")))?;
                    let resolved = match i {
                        0 => return Err(parse_err(lineno, "face index 0 (OBJ indices are 1-based)".into())),
                        i if i > 0 => i - 1,
                        i => vertices.len() as i64 + i,
                    };
                    if resolved < 0 || resolved >= vertices.len() as i64 {
                        return Err(parse_err(lineno, format!("face index {i} out of range")));
                    }
                    face.push(resolved as u32);
                }
                if face.len() < 3 {
                    return Err(parse_err(lineno, "face needs at least 3 vertices".into()));
                }
                for k in 1..face.len() - 1 {
                    triangles.push([face[0], face[k], face[k + 1]]);
                }
            }
            _ => {}
        }
    }
    TriangleMesh::new(vertices, triangles)
}

#[derive(Clone, Copy, Debug)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Self::I8,
            "uchar" | "uint8" => Self::U8,
            "short" | "int16" => Self::I16,
            "ushort" | "uint16" => Self::U16,
            "int" | "int32" => Self::I32,
            "uint" | "uint32" => Self::U32,
            "float" | "float32" => Self::F32,
            "double" | "float64" => Self::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Self::I8 | Self::U8 => 1,
            Self::I16 | Self::U16 => 2,
            Self::I32 | Self::U32 | Self::F32 => 4,
            Self::F64 => 8,
        }
    }

    fn read(self, bytes: &[u8]) -> f64 {
        match self {
            Self::I8 => bytes[0] as i8 as f64,
            Self::U8 => bytes[0] as f64,
            Self::I16 => i16::from_le_bytes([bytes[0], bytes[1]]) as f64,
            Self::U16 => u16::from_le_bytes([bytes[0], bytes[1]]) as f64,
            Self::I32 => i32::from_le_bytes(bytes[..4].try_into().unwrap()) as f64,
            Self::U32 => u32::from_le_bytes(bytes[..4].try_into().unwrap()) as f64,
            Self::F32 => f32::from_le_bytes(bytes[..4].try_into().unwrap()) as f64,
            Self::F64 => f64::from_le_bytes(bytes[..8].try_into().unwrap()),
        }
    }
}

enum Property {
    Scalar(String, Scalar),
    List(String, Scalar, Scalar),
}

struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

/// Binary little-endian PLY with `vertex` (x, y, z) and `face`
/// (`vertex_indices` or `vertex_index` list) elements.
pub fn read_ply(mut reader: impl BufRead, path: &Path) -> Result<TriangleMesh> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut elements: Vec<Element> = Vec::new();
    let mut lineno = 0;
    let mut line = String::new();
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            return Err(parse_err(lineno, "unexpected end of header".into()));
        }
        lineno += 1;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            ["ply"] if lineno == 1 => {}
            _ if lineno == 1 => return Err(parse_err(1, "missing 'ply' magic".into())),
            ["format", "binary_little_endian", _] => {}
            ["format", other, ..] => {
                return Err(parse_err(lineno, format!("unsupported PLY format {other}")))
            }
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("bad element count {count:?}")))?,
                properties: Vec::new(),
            }),
            ["property", "list", count_ty, item_ty, name] => {
                let (Some(c), Some(i)) = (Scalar::parse(count_ty), Scalar::parse(item_ty)) else {
                    return Err(parse_err(lineno, "unknown list property type".into()));
                };
                elements
                    .last_mut()
                    .ok_or_else(|| parse_err(lineno, "property before element".into()))?
                    .properties
                    .push(Property::List(name.to_string(), c, i));
            }
            ["property", ty, name] => {
                let ty = Scalar::parse(ty)
                    .ok_or_else(|| parse_err(lineno, format!("unknown property type {ty}")))?;
                elements
                    .last_mut()
                    .ok_or_else(|| parse_err(lineno, "property before element".into()))?
                    .properties
                    .push(Property::Scalar(name.to_string(), ty));
            }
            ["end_header"] => break,
            _ => {}
        }
    }

    let mut body = Vec::new();
    reader.read_to_end(&mut body)?;
    let mut cursor = 0usize;
    let truncated = || Error::Format(format!("{}: truncated PLY body", path.display()));
    let mut take = |n: usize| -> Result<&[u8]> {
        let s = body.get(cursor..cursor + n).ok_or_else(truncated)?;
        cursor += n;
        Ok(s)
    };

    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for el in &elements {
        for _ in 0..el.count {
            let mut xyz = [0.0; 3];
            for prop in &el.properties {
                match prop {
                    Property::Scalar(name, ty) => {
                        let v = ty.read(take(ty.size())?);
                        if el.name == "vertex" {
                            match name.as_str() {
                                "x" => xyz[0] = v,
                                "y" => xyz[1] = v,
                                "z" => xyz[2] = v,
                                _ => {}
                            }
                        }
                    }
                    Property::List(name, cty, ity) => {
                        let n = cty.read(take(cty.size())?) as usize;
                        let raw = take(n * ity.size())?;
                        if el.name == "face" && (name == "vertex_indices" || name == "vertex_index") {
                            let idx: Vec<u32> = raw
                                .chunks_exact(ity.size())
                                .map(|b| ity.read(b) as u32)
                                .collect();
                            if idx.len() < 3 {
                                return Err(Error::Format(format!(
                                    "{}: face with {} vertices",
                                    path.display(),
                                    idx.len()
                                )));
                            }
                            for k in 1..idx.len() - 1 {
                                triangles.push([idx[0], idx[k], idx[k + 1]]);
                            }
                        }
                    }
                }
            }
            if el.name == "vertex" {
                vertices.push(Vec3::from(xyz));
            }
        }
    }
    TriangleMesh::new(vertices, triangles)
}

pub fn write_obj(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for v in mesh.vertices() {
        writeln!(w, "v {} {} {}", v.x, v.y, v.z)?;
    }
    for t in mesh.triangles() {
        writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    w.flush()?;
    Ok(())
}

/// Binary little-endian PLY with float32 positions and int32 indices.
pub fn write_ply(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write!(
        w,
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\nproperty float x\nproperty float y\nproperty float z\nelement face {}\nproperty list uchar int vertex_indices\nend_header\n",
        mesh.vertices().len(),
        mesh.triangle_count()
    )?;
    for v in mesh.vertices() {
        for c in v.iter() {
            w.write_all(&(*c as f32).to_le_bytes())?;
        }
    }
    for t in mesh.triangles() {
        w.write_all(&[3u8])?;
        for &i in t {
            w.write_all(&(i as i32).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}
