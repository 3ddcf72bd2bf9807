//! Mesh ingestion (OBJ, ASCII/binary PLY) and the per-face label file.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use glam::DVec3;
use ply_rs::parser::Parser;
use ply_rs::ply::{DefaultElement, Property};

use super::{BoundaryLabel, GeometryError};

/// Raw indexed triangle soup as read from disk.
#[derive(Clone, Debug, Default)]
pub struct TriangleMesh {
    pub vertices: Vec<DVec3>,
    pub triangles: Vec<[u32; 3]>,
}

impl TriangleMesh {
    /// Merges vertices with bit-identical coordinates so that faces split
    /// across OBJ groups share edges.
    pub fn weld(mut self) -> Self {
        let mut remap = Vec::with_capacity(self.vertices.len());
        let mut unique: Vec<DVec3> = Vec::new();
        let mut index: HashMap<[u64; 3], u32> = HashMap::new();
        for v in &self.vertices {
            let key = [v.x.to_bits(), v.y.to_bits(), v.z.to_bits()];
            let id = *index.entry(key).or_insert_with(|| {
                unique.push(*v);
                (unique.len() - 1) as u32
            });
            remap.push(id);
        }
        for t in &mut self.triangles {
            for i in t.iter_mut() {
                *i = remap[*i as usize];
            }
        }
        self.vertices = unique;
        self
    }

    /// Uniformly scales and translates so the bounding box is centered at the
    /// origin and its longest side spans [−1, 1].
    pub fn fit_unit_cube(mut self) -> Self {
        let Some(&first) = self.vertices.first() else {
            return self;
        };
        let (lo, hi) = self
            .vertices
            .iter()
            .fold((first, first), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
        let center = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo).max_element();
        if half > 0.0 {
            for v in &mut self.vertices {
                *v = (*v - center) / half;
            }
        }
        self
    }

    pub fn write_obj(&self, path: &Path) -> std::io::Result<()> {
        let mut out = std::io::BufWriter::new(File::create(path)?);
        for v in &self.vertices {
            writeln!(out, "v {} {} {}", v.x, v.y, v.z)?;
        }
        for t in &self.triangles {
            writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
        }
        out.flush()
    }
}

pub fn read_mesh(path: &Path) -> Result<TriangleMesh, GeometryError> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    let mesh = match ext.as_str() {
        "obj" => read_obj(path)?,
        "ply" => read_ply(path)?,
        _ => {
            return Err(GeometryError::Parse {
                path: path.display().to_string(),
                reason: format!("unsupported mesh extension {ext:?} (expected obj or ply)"),
            })
        }
    };
    Ok(mesh.weld())
}

fn read_obj(path: &Path) -> Result<TriangleMesh, GeometryError> {
    let opts = tobj::LoadOptions {
        single_index: false,
        triangulate: true,
        ..Default::default()
    };
    let (models, _) = tobj::load_obj(path, &opts).map_err(|e| GeometryError::Parse {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    let mut mesh = TriangleMesh::default();
    for model in models {
        let base = mesh.vertices.len() as u32;
        let m = model.mesh;
        mesh.vertices.extend(
            m.positions
                .chunks_exact(3)
                .map(|p| DVec3::new(p[0], p[1], p[2])),
        );
        mesh.triangles.extend(
            m.indices
                .chunks_exact(3)
                .map(|t| [base + t[0], base + t[1], base + t[2]]),
        );
    }
    Ok(mesh)
}

fn scalar(p: &Property) -> Option<f64> {
    Some(match *p {
        Property::Char(v) => v as f64,
        Property::UChar(v) => v as f64,
        Property::Short(v) => v as f64,
        Property::UShort(v) => v as f64,
        Property::Int(v) => v as f64,
        Property::UInt(v) => v as f64,
        Property::Float(v) => v as f64,
        Property::Double(v) => v,
        _ => return None,
    })
}

fn index_list(p: &Property) -> Option<Vec<u32>> {
    Some(match p {
        Property::ListChar(v) => v.iter().map(|&i| i as u32).collect(),
        Property::ListUChar(v) => v.iter().map(|&i| i as u32).collect(),
        Property::ListShort(v) => v.iter().map(|&i| i as u32).collect(),
        Property::ListUShort(v) => v.iter().map(|&i| i as u32).collect(),
        Property::ListInt(v) => v.iter().map(|&i| i as u32).collect(),
        Property::ListUInt(v) => v.clone(),
        _ => return None,
    })
}

fn read_ply(path: &Path) -> Result<TriangleMesh, GeometryError> {
    let parse_err = |reason: String| GeometryError::Parse {
        path: path.display().to_string(),
        reason,
    };
    let mut file = File::open(path).map_err(|e| parse_err(e.to_string()))?;
    let parser = Parser::<DefaultElement>::new();
    let ply = parser
        .read_ply(&mut file)
        .map_err(|e| parse_err(e.to_string()))?;

    let mut mesh = TriangleMesh::default();
    let vertices = ply
        .payload
        .get("vertex")
        .ok_or_else(|| parse_err("missing vertex element".into()))?;
    for (i, v) in vertices.iter().enumerate() {
        let coord = |k: &str| {
            v.get(k)
                .and_then(scalar)
                .ok_or_else(|| parse_err(format!("vertex {i}: missing scalar property {k}")))
        };
        mesh.vertices.push(DVec3::new(coord("x")?, coord("y")?, coord("z")?));
    }
    let faces = ply
        .payload
        .get("face")
        .ok_or_else(|| parse_err("missing face element".into()))?;
    for (i, f) in faces.iter().enumerate() {
        let idx = f
            .get("vertex_indices")
            .or_else(|| f.get("vertex_index"))
            .and_then(index_list)
            .ok_or_else(|| parse_err(format!("face {i}: missing vertex index list")))?;
        if idx.len() < 3 {
            return Err(parse_err(format!("face {i}: fewer than three vertices")));
        }
        if let Some(&bad) = idx.iter().find(|&&k| k as usize >= mesh.vertices.len()) {
            return Err(parse_err(format!("face {i}: vertex index {bad} out of range")));
        }
        // fan triangulation for polygons
        for k in 1..idx.len() - 1 {
            mesh.triangles.push([idx[0], idx[k], idx[k + 1]]);
        }
    }
    Ok(mesh)
}

/// Reads a label file: one `face_index label` pair per line. Blank lines and
/// lines starting with `#` are skipped. Labels are `D`/`DIRICHLET` or
/// `R`/`REFLECTING` (case-insensitive).
pub fn read_label_file(path: &Path, face_count: usize) -> Result<Vec<BoundaryLabel>, GeometryError> {
    let file = File::open(path).map_err(|e| GeometryError::LabelFile {
        path: path.display().to_string(),
        line: 0,
        reason: e.to_string(),
    })?;
    let err = |line: usize, reason: String| GeometryError::LabelFile {
        path: path.display().to_string(),
        line,
        reason,
    };
    let mut labels: Vec<Option<BoundaryLabel>> = vec![None; face_count];
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| err(n + 1, e.to_string()))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(idx), Some(label), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(err(n + 1, format!("expected `face_index label`, got {line:?}")));
        };
        let idx: usize = idx
            .parse()
            .map_err(|_| err(n + 1, format!("bad face index {idx:?}")))?;
        if idx >= face_count {
            return Err(err(n + 1, format!("face index {idx} out of range ({face_count} faces)")));
        }
        labels[idx] = Some(label.parse().map_err(|e: String| err(n + 1, e))?);
    }
    labels
        .into_iter()
        .enumerate()
        .map(|(i, l)| l.ok_or_else(|| err(0, format!("no label for face {i}"))))
        .collect()
}
