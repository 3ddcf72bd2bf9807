//! Procedural closed meshes used by tests, examples and built-in scenarios.
//! All shapes are outward oriented (counter-clockwise seen from outside).

use std::collections::HashMap;
use std::f64::consts::TAU;

use glam::DVec3;

use super::TriangleMesh;

/// Geodesic sphere: an icosahedron subdivided `level` times (20·4^level faces).
pub fn icosphere(center: DVec3, radius: f64, level: u32) -> TriangleMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<DVec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| DVec3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut midpoints: HashMap<(u32, u32), u32> = HashMap::new();
        let mut mid = |a: u32, b: u32, vertices: &mut Vec<DVec3>| {
            *midpoints.entry((a.min(b), a.max(b))).or_insert_with(|| {
                vertices.push((0.5 * (vertices[a as usize] + vertices[b as usize])).normalize());
                (vertices.len() - 1) as u32
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    TriangleMesh {
        vertices: vertices.into_iter().map(|v| center + radius * v).collect(),
        triangles: faces,
    }
}

/// Axis-aligned box split into 12 triangles.
pub fn cuboid(min: DVec3, max: DVec3) -> TriangleMesh {
    let corner = |i: usize| {
        DVec3::new(
            if i & 1 == 0 { min.x } else { max.x },
            if i & 2 == 0 { min.y } else { max.y },
            if i & 4 == 0 { min.z } else { max.z },
        )
    };
    let quads = [
        [0, 2, 3, 1], // z = min
        [4, 5, 7, 6], // z = max
        [0, 1, 5, 4], // y = min
        [2, 6, 7, 3], // y = max
        [0, 4, 6, 2], // x = min
        [1, 3, 7, 5], // x = max
    ];
    TriangleMesh {
        vertices: (0..8).map(corner).collect(),
        triangles: quads
            .iter()
            .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
            .collect(),
    }
}

/// Torus around the z axis with `major` and `minor` radii.
pub fn torus(major: f64, minor: f64, segments: u32, rings: u32) -> TriangleMesh {
    let mut vertices = Vec::with_capacity((segments * rings) as usize);
    for i in 0..segments {
        let u = TAU * i as f64 / segments as f64;
        for j in 0..rings {
            let v = TAU * j as f64 / rings as f64;
            let r = major + minor * v.cos();
            vertices.push(DVec3::new(r * u.cos(), r * u.sin(), minor * v.sin()));
        }
    }
    let id = |i: u32, j: u32| (i % segments) * rings + (j % rings);
    let mut triangles = Vec::with_capacity((2 * segments * rings) as usize);
    for i in 0..segments {
        for j in 0..rings {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    TriangleMesh {
        vertices,
        triangles,
    }
}

/// Prism whose cross-section in the xz plane is the trapezoid with bottom
/// half-width `bottom`, top half-width `top` and height `height`, extruded
/// over `y ∈ [-depth/2, depth/2]`.
pub fn trapezoid_prism(bottom: f64, top: f64, height: f64, depth: f64) -> TriangleMesh {
    let section = [
        (-bottom, 0.0),
        (bottom, 0.0),
        (top, height),
        (-top, height),
    ];
    let hy = 0.5 * depth;
    let mut vertices = Vec::with_capacity(8);
    for y in [-hy, hy] {
        for &(x, z) in &section {
            vertices.push(DVec3::new(x, y, z));
        }
    }
    // front face at y = -hy is seen from -y, so its outline runs clockwise in xz
    let mut triangles = vec![[0, 1, 2], [0, 2, 3], [4, 6, 5], [4, 7, 6]];
    for k in 0..4u32 {
        let n = (k + 1) % 4;
        triangles.push([k, k + 4, n + 4]);
        triangles.push([k, n + 4, n]);
    }
    TriangleMesh {
        vertices,
        triangles,
    }
}
