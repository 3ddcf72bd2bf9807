use std::f64::consts::PI;
use std::io::Write;

use glam::DVec3;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64Mcg;

use super::shapes::{cuboid, icosphere, torus};
use super::*;

fn sphere_scene(level: u32) -> Scene {
    Scene::from_mesh(
        icosphere(DVec3::ZERO, 1.0, level),
        &LabelRule::Uniform(BoundaryLabel::Reflecting),
    )
    .unwrap()
}

fn brute_closest(scene: &Scene, x: DVec3, filter: LabelSet) -> f64 {
    (0..scene.triangle_count() as u32)
        .filter(|&t| filter.contains(scene.label(t)))
        .map(|t| {
            let [a, b, c] = scene.triangle_vertices(t);
            (closest_point_on_triangle(x, a, b, c).0 - x).length()
        })
        .fold(f64::INFINITY, f64::min)
}

fn brute_ray(scene: &Scene, o: DVec3, d: DVec3, t_min: f64, t_max: f64) -> Option<f64> {
    (0..scene.triangle_count() as u32)
        .filter_map(|t| {
            let [a, b, c] = scene.triangle_vertices(t);
            intersect_triangle(o, d, a, b, c).map(|h| h.0)
        })
        .filter(|&t| t > t_min && t < t_max)
        .min_by(f64::total_cmp)
}

/// Independent edge scan: faces are regrouped from scratch and each edge is
/// classified by the signs of the two plane distances.
fn brute_silhouette(scene: &Scene, x: DVec3, filter: LabelSet) -> f64 {
    let mut faces: HashMap<(u32, u32), Vec<u32>> = HashMap::new();
    for t in 0..scene.triangle_count() as u32 {
        if !filter.contains(scene.label(t)) {
            continue;
        }
        let tri = scene.triangles()[t as usize];
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            faces.entry((a.min(b), a.max(b))).or_default().push(t);
        }
    }
    let eps = 1e-10 * scene.diagonal();
    let mut best = f64::INFINITY;
    for ((a, b), f) in faces {
        let pa = scene.vertices()[a as usize];
        let pb = scene.vertices()[b as usize];
        let sil = if f.len() == 1 {
            true
        } else {
            let s0 = (x - pa).dot(scene.normal(f[0]));
            let s1 = (x - pa).dot(scene.normal(f[1]));
            if s0.abs() <= eps && s1.abs() <= eps {
                false
            } else if s0.abs() <= eps {
                s1 > 0.0
            } else if s1.abs() <= eps {
                s0 > 0.0
            } else {
                (s0 > 0.0) != (s1 > 0.0)
            }
        };
        if sil {
            best = best.min((closest_point_on_segment(x, pa, pb) - x).length());
        }
    }
    best
}

fn winding_number(scene: &Scene, y: DVec3) -> f64 {
    (0..scene.triangle_count() as u32)
        .map(|t| {
            let [a, b, c] = scene.triangle_vertices(t);
            solid_angle(y, a, b, c)
        })
        .sum::<f64>()
        / (4.0 * PI)
}

/// Splits the first triangle's first edge at its midpoint and closes the
/// T-junction with a zero-area sliver, keeping the mesh watertight.
fn with_sliver(mut mesh: TriangleMesh) -> TriangleMesh {
    let [a, b, c] = mesh.triangles[0];
    let m = mesh.vertices.len() as u32;
    mesh.vertices
        .push(0.5 * (mesh.vertices[a as usize] + mesh.vertices[b as usize]));
    mesh.triangles[0] = [a, m, c];
    mesh.triangles.push([m, b, c]);
    mesh.triangles.push([a, b, m]);
    mesh
}

#[test]
fn cube_half_space_labels_split_evenly() {
    let scene = Scene::from_mesh(
        cuboid(DVec3::splat(-0.5), DVec3::splat(0.5)),
        &LabelRule::HalfSpace {
            point: DVec3::ZERO,
            normal: -DVec3::X,
        },
    )
    .unwrap();
    let d = scene
        .labels()
        .iter()
        .filter(|&&l| l == BoundaryLabel::Dirichlet)
        .count();
    assert_eq!((d, scene.triangle_count() - d), (6, 6));
    for t in 0..12u32 {
        let [a, b, c] = scene.triangle_vertices(t);
        let cx = (a.x + b.x + c.x) / 3.0;
        assert_eq!(scene.label(t) == BoundaryLabel::Dirichlet, cx < 0.0);
    }
}

#[test]
fn uniform_rule_labels_everything() {
    let scene = sphere_scene(2);
    assert!(scene.labels().iter().all(|&l| l == BoundaryLabel::Reflecting));
    assert!(!scene.has_label(BoundaryLabel::Dirichlet));
    assert!(matches!(
        scene.closest_point(DVec3::ZERO, LabelSet::Dirichlet),
        Err(GeometryError::EmptyFilter(LabelSet::Dirichlet))
    ));
}

#[test]
fn torus_label_file_matches_rows() {
    let dir = tempfile::tempdir().unwrap();
    let mesh_path = dir.path().join("torus.obj");
    let label_path = dir.path().join("torus.labels");
    let mesh = torus(1.0, 0.4, 24, 12);
    mesh.write_obj(&mesh_path).unwrap();
    let n = mesh.triangles.len();
    let mut f = std::fs::File::create(&label_path).unwrap();
    writeln!(f, "# face label").unwrap();
    for i in (0..n).rev() {
        let l = if i % 2 == 0 { "DIRICHLET" } else { "REFLECTING" };
        writeln!(f, "{i} {l}").unwrap();
    }
    drop(f);
    let labels = read_label_file(&label_path, n).unwrap();
    let scene = Scene::load(&mesh_path, &LabelRule::PerFace(labels)).unwrap();
    // reread the file by hand as the oracle
    let text = std::fs::read_to_string(&label_path).unwrap();
    for line in text.lines().filter(|l| !l.starts_with('#')) {
        let mut it = line.split_whitespace();
        let i: usize = it.next().unwrap().parse().unwrap();
        let expected = if it.next().unwrap() == "DIRICHLET" {
            BoundaryLabel::Dirichlet
        } else {
            BoundaryLabel::Reflecting
        };
        assert_eq!(scene.label(i as u32), expected);
        assert_eq!(scene.source_face(i as u32), i as u32);
    }
}

#[test]
fn label_file_errors_carry_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.labels");
    std::fs::write(&p, "0 D\n1 PURPLE\n").unwrap();
    match read_label_file(&p, 2) {
        Err(GeometryError::LabelFile { line, .. }) => assert_eq!(line, 2),
        other => panic!("unexpected {other:?}"),
    }
    std::fs::write(&p, "0 D\n").unwrap();
    assert!(read_label_file(&p, 2).is_err());
}

#[test]
fn rejects_open_mesh() {
    let mut mesh = cuboid(DVec3::ZERO, DVec3::ONE);
    mesh.triangles.pop();
    let err = Scene::from_mesh(mesh, &LabelRule::Uniform(BoundaryLabel::Dirichlet)).unwrap_err();
    assert!(matches!(err, GeometryError::NotWatertight { open_edges: 3, .. }), "{err}");
}

#[test]
fn degenerate_triangles_dropped_or_rejected() {
    let rule = LabelRule::Uniform(BoundaryLabel::Reflecting);
    // one sliver among ~1300 faces is dropped
    let scene = Scene::from_mesh(with_sliver(icosphere(DVec3::ZERO, 1.0, 3)), &rule).unwrap();
    assert_eq!(scene.triangle_count(), 1281);
    assert!(scene.areas.iter().all(|&a| a > 0.0));
    // one sliver among 14 faces is above the 1% threshold
    let err = Scene::from_mesh(with_sliver(cuboid(DVec3::ZERO, DVec3::ONE)), &rule).unwrap_err();
    assert!(matches!(err, GeometryError::Degenerate { degenerate: 1, total: 14, .. }));
}

#[test]
fn inward_mesh_is_flipped() {
    let mut mesh = icosphere(DVec3::ZERO, 1.0, 1);
    for t in &mut mesh.triangles {
        t.swap(1, 2);
    }
    let scene = Scene::from_mesh(mesh, &LabelRule::Uniform(BoundaryLabel::Dirichlet)).unwrap();
    for t in 0..scene.triangle_count() as u32 {
        let [a, b, c] = scene.triangle_vertices(t);
        assert!(scene.normal(t).dot((a + b + c) / 3.0) > 0.0);
        assert!((scene.normal(t).length() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn ply_ascii_and_binary_load() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = cuboid(DVec3::ZERO, DVec3::ONE);
    let mut text = format!(
        "ply\nformat ascii 1.0\nelement vertex {}\nproperty float x\nproperty float y\nproperty float z\nelement face 6\nproperty list uchar int vertex_indices\nend_header\n",
        mesh.vertices.len()
    );
    for v in &mesh.vertices {
        text += &format!("{} {} {}\n", v.x, v.y, v.z);
    }
    // write quads to exercise fan triangulation
    for q in mesh.triangles.chunks(2) {
        text += &format!("4 {} {} {} {}\n", q[0][0], q[0][1], q[0][2], q[1][2]);
    }
    let ascii = dir.path().join("cube.ply");
    std::fs::write(&ascii, text).unwrap();
    let s = Scene::load(&ascii, &LabelRule::Uniform(BoundaryLabel::Dirichlet)).unwrap();
    assert_eq!(s.triangle_count(), 12);

    let mut bin = format!(
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\nelement face {}\nproperty list uchar uint vertex_indices\nend_header\n",
        mesh.vertices.len(),
        mesh.triangles.len()
    )
    .into_bytes();
    for v in &mesh.vertices {
        for c in v.to_array() {
            bin.extend(c.to_le_bytes());
        }
    }
    for t in &mesh.triangles {
        bin.push(3);
        for i in t {
            bin.extend(i.to_le_bytes());
        }
    }
    let binary = dir.path().join("cube_bin.ply");
    std::fs::write(&binary, bin).unwrap();
    let s = Scene::load(&binary, &LabelRule::Uniform(BoundaryLabel::Dirichlet)).unwrap();
    assert_eq!(s.triangle_count(), 12);
    assert!((s.filter_area(LabelSet::All).unwrap() - 6.0).abs() < 1e-12);

    let junk = dir.path().join("junk.ply");
    std::fs::write(&junk, "not a ply").unwrap();
    assert!(matches!(
        Scene::load(&junk, &LabelRule::Uniform(BoundaryLabel::Dirichlet)),
        Err(GeometryError::Parse { .. })
    ));
}

#[test]
fn obj_groups_are_welded() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("split.obj");
    // two objects, each with its own copy of the shared vertices
    let mesh = cuboid(DVec3::ZERO, DVec3::ONE);
    let mut text = String::new();
    for (k, half) in mesh.triangles.chunks(6).enumerate() {
        text += &format!("o part{k}\n");
        for v in &mesh.vertices {
            text += &format!("v {} {} {}\n", v.x, v.y, v.z);
        }
        for t in half {
            let base = 1 + 8 * k as u32;
            text += &format!("f {} {} {}\n", t[0] + base, t[1] + base, t[2] + base);
        }
    }
    std::fs::write(&p, text).unwrap();
    let s = Scene::load(&p, &LabelRule::Uniform(BoundaryLabel::Dirichlet)).unwrap();
    assert_eq!(s.vertices().len(), 8);
}

#[test]
fn closest_point_examples() {
    let scene = sphere_scene(2);
    let (_, d) = scene.closest_point(DVec3::ZERO, LabelSet::All).unwrap();
    assert!((d - brute_closest(&scene, DVec3::ZERO, LabelSet::All)).abs() < 1e-12);
    assert!(d <= 1.0);
    let v = scene.vertices()[5];
    assert!(scene.closest_point(v, LabelSet::All).unwrap().1 < 1e-15);
    let (s, d) = scene.closest_point(DVec3::new(2.0, 0.0, 0.0), LabelSet::All).unwrap();
    assert!((d - 1.0).abs() < 0.02);
    let [a, b, c] = scene.triangle_vertices(s.triangle);
    let on = s.barycentric[0] * a + s.barycentric[1] * b + s.barycentric[2] * c;
    assert!((on - s.position).length() < 1e-9 * scene.diagonal());
}

#[test]
fn closest_point_matches_brute_force_with_filters() {
    let scene = Scene::from_mesh(
        torus(1.0, 0.35, 32, 16),
        &LabelRule::HalfSpace {
            point: DVec3::ZERO,
            normal: DVec3::new(1.0, 0.3, 0.2),
        },
    )
    .unwrap();
    let mut rng = Pcg64Mcg::seed_from_u64(3);
    for _ in 0..300 {
        let x = DVec3::new(
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(-1.0..1.0),
        );
        for f in LabelSet::ALL_SETS {
            let (s, d) = scene.closest_point(x, f).unwrap();
            assert!((d - brute_closest(&scene, x, f)).abs() < 1e-9 * scene.diagonal());
            assert!(f.contains(scene.label(s.triangle)));
        }
    }
}

#[test]
fn silhouette_examples() {
    let sphere = sphere_scene(3);
    assert_eq!(
        sphere.closest_silhouette_distance(DVec3::ZERO, LabelSet::All).unwrap(),
        f64::INFINITY
    );

    let t = Scene::from_mesh(
        torus(1.0, 0.4, 32, 16),
        &LabelRule::Uniform(BoundaryLabel::Reflecting),
    )
    .unwrap();
    let mut rng = Pcg64Mcg::seed_from_u64(11);
    let mut checked = 0;
    while checked < 200 {
        let x = DVec3::new(
            rng.random_range(-1.5..1.5),
            rng.random_range(-1.5..1.5),
            rng.random_range(-0.5..0.5),
        );
        if !t.is_inside(x) {
            continue;
        }
        let fast = t.closest_silhouette_distance(x, LabelSet::All).unwrap();
        let slow = brute_silhouette(&t, x, LabelSet::All);
        assert!(fast.is_finite());
        assert!((fast - slow).abs() < 1e-12, "{fast} vs {slow}");
        assert!(fast >= t.closest_point(x, LabelSet::All).unwrap().1 - 1e-12);
        checked += 1;
    }
}

#[test]
fn silhouette_of_open_patch_is_its_rim() {
    // a cap of reflecting faces on an otherwise Dirichlet sphere
    let scene = Scene::from_mesh(
        icosphere(DVec3::ZERO, 1.0, 3),
        &LabelRule::HalfSpace {
            point: DVec3::new(0.0, 0.0, 0.6),
            normal: -DVec3::Z,
        },
    )
    .unwrap();
    for x in [DVec3::ZERO, DVec3::new(0.1, 0.2, 0.5), DVec3::new(0.0, 0.0, 0.9)] {
        let fast = scene.closest_silhouette_distance(x, LabelSet::Dirichlet).unwrap();
        let slow = brute_silhouette(&scene, x, LabelSet::Dirichlet);
        assert!((fast - slow).abs() < 1e-12);
        // the rim sits near z = 0.6 on the unit sphere
        let rim_r = (1.0f64 - 0.36).sqrt();
        let approx = ((x.x * x.x + x.y * x.y).sqrt() - rim_r).hypot(x.z - 0.6);
        assert!(fast < approx + 0.1);
    }
}

#[test]
fn first_hit_examples() {
    let cube = Scene::from_mesh(
        cuboid(DVec3::splat(-1.0), DVec3::splat(1.0)),
        &LabelRule::Uniform(BoundaryLabel::Reflecting),
    )
    .unwrap();
    for dir in [DVec3::X, -DVec3::Y, DVec3::Z] {
        match cube.first_hit_in_ball(DVec3::ZERO, dir, 20.0, false) {
            BallHit::Boundary { distance, sample } => {
                assert!((distance - 1.0).abs() < 1e-12);
                assert!((sample.normal - dir).length() < 1e-12);
            }
            other => panic!("expected a hit, got {other:?}"),
        }
    }
    assert_eq!(
        cube.first_hit_in_ball(DVec3::ZERO, DVec3::X, 0.5, false),
        BallHit::SphereExit {
            point: DVec3::new(0.5, 0.0, 0.0)
        }
    );
    // grazing along a face from a point on it
    let x = DVec3::new(0.0, 0.0, -1.0);
    let d = DVec3::new(1.0, 1.0, 0.0).normalize();
    assert!(brute_ray(&cube, x, d, cube.ray_guard(), 0.5).is_none());
    assert!(matches!(cube.first_hit_in_ball(x, d, 0.5, true), BallHit::SphereExit { .. }));
}

#[test]
fn rays_match_brute_force() {
    let scene = Scene::from_mesh(
        torus(1.0, 0.4, 24, 12),
        &LabelRule::Uniform(BoundaryLabel::Reflecting),
    )
    .unwrap();
    let mut rng = Pcg64Mcg::seed_from_u64(5);
    for _ in 0..1000 {
        let o = DVec3::new(
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(-1.0..1.0),
        );
        let d = crate::kernels::uniform_sphere(rng.random(), rng.random());
        let fast = match scene.first_hit_in_ball(o, d, 1e3, true) {
            BallHit::Boundary { distance, .. } => Some(distance),
            BallHit::SphereExit { .. } => None,
        };
        let slow = brute_ray(&scene, o, d, scene.ray_guard(), 1e3);
        assert_eq!(fast, slow);
    }
}

#[test]
fn inside_examples_and_winding_oracle() {
    let cube = Scene::from_mesh(
        cuboid(DVec3::splat(-1.0), DVec3::splat(1.0)),
        &LabelRule::Uniform(BoundaryLabel::Reflecting),
    )
    .unwrap();
    assert!(cube.is_inside(DVec3::ZERO));
    assert!(!cube.is_inside(DVec3::splat(2.0 * 3f64.sqrt())));

    let t = Scene::from_mesh(torus(1.0, 0.4, 24, 12), &LabelRule::Uniform(BoundaryLabel::Reflecting)).unwrap();
    let mut rng = Pcg64Mcg::seed_from_u64(9);
    for _ in 0..1000 {
        let y = DVec3::new(
            rng.random_range(-1.6..1.6),
            rng.random_range(-1.6..1.6),
            rng.random_range(-0.6..0.6),
        );
        let (_, d) = t.closest_point(y, LabelSet::All).unwrap();
        if d < 1e-9 * t.diagonal() {
            continue;
        }
        assert_eq!(t.is_inside(y), winding_number(&t, y).abs() > 0.5, "{y}");
    }
}

#[test]
fn inside_fraction_matches_volume() {
    let s = sphere_scene(4);
    let mut rng = Pcg64Mcg::seed_from_u64(17);
    let n = 10_000;
    let hits = (0..n)
        .filter(|_| {
            s.is_inside(DVec3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ))
        })
        .count();
    let p = 4.0 / 3.0 * PI / 8.0;
    let sigma = (p * (1.0 - p) / n as f64).sqrt();
    assert!((hits as f64 / n as f64 - p).abs() < 3.0 * sigma + 0.005);
}

#[test]
fn boundary_sampling_follows_area() {
    // quad split into triangles of area 1.5 and 0.5
    let mesh = TriangleMesh {
        vertices: vec![
            DVec3::new(0.0, 0.0, 0.0),
            DVec3::new(3.0, 0.0, 0.0),
            DVec3::new(1.0, 1.0, 0.0),
            DVec3::new(0.0, 1.0, 0.0),
        ],
        triangles: vec![[0, 1, 2], [0, 2, 3]],
    };
    let s = Scene::from_open_mesh(mesh, &LabelRule::Uniform(BoundaryLabel::Reflecting)).unwrap();
    let n = 100_000;
    let samples = s.sample_boundary_uniform(LabelSet::All, n, 42).unwrap();
    let first = samples.iter().filter(|p| p.triangle == 0).count() as f64;
    let p = 0.75;
    let sigma = (n as f64 * p * (1.0 - p)).sqrt();
    assert!((first - n as f64 * p).abs() < 4.0 * sigma);
    for smp in &samples[..1000] {
        let sum: f64 = smp.barycentric.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12 && smp.barycentric.iter().all(|&b| b >= 0.0));
    }
    assert_eq!(s.sample_boundary_uniform(LabelSet::All, 1, 1).unwrap().len(), 1);
    assert_eq!(samples, s.sample_boundary_uniform(LabelSet::All, n, 42).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distance_is_one_lipschitz(
        a in prop::array::uniform3(-2.0f64..2.0),
        b in prop::array::uniform3(-2.0f64..2.0),
    ) {
        let scene = sphere_scene(2);
        let (a, b) = (DVec3::from_array(a), DVec3::from_array(b));
        let da = scene.closest_point(a, LabelSet::All).unwrap().1;
        let db = scene.closest_point(b, LabelSet::All).unwrap().1;
        prop_assert!((da - db).abs() <= (a - b).length() + 1e-12);
    }

    #[test]
    fn silhouette_never_closer_than_surface(p in prop::array::uniform3(-1.4f64..1.4)) {
        let scene = Scene::from_mesh(torus(1.0, 0.4, 16, 8), &LabelRule::HalfSpace {
            point: DVec3::ZERO,
            normal: DVec3::Y,
        }).unwrap();
        let x = DVec3::from_array(p);
        for f in LabelSet::ALL_SETS {
            let sil = scene.closest_silhouette_distance(x, f).unwrap();
            let d = scene.closest_point(x, f).unwrap().1;
            prop_assert!(sil >= d - 1e-12);
        }
    }
}


#[test]
fn interior_rays_near_a_face_cannot_tunnel() {
    let cube = Scene::from_mesh(
        cuboid(DVec3::splat(-1.0), DVec3::splat(1.0)),
        &LabelRule::Uniform(BoundaryLabel::Reflecting),
    )
    .unwrap();
    // closer to the floor than the ray guard
    let x = DVec3::new(0.0, 0.0, -1.0 + 0.5 * cube.ray_guard());
    let d = DVec3::new(1.0, 0.0, -1.0).normalize();
    assert!(matches!(cube.first_hit_in_ball(x, d, 0.5, false), BallHit::Boundary { .. }));
    // a face just past the sphere is reported instead of an exit point
    let r = 1.0 - 0.1 * cube.ray_guard();
    match cube.first_hit_in_ball(DVec3::ZERO, DVec3::X, r, false) {
        BallHit::Boundary { distance, .. } => assert!(distance > r),
        other => panic!("expected a hit, got {other:?}"),
    }
}

#[test]
fn fit_unit_cube_centers_and_scales() {
    let mesh = cuboid(DVec3::new(2.0, 3.0, 4.0), DVec3::new(6.0, 5.0, 5.0)).fit_unit_cube();
    let lo = mesh.vertices.iter().fold(DVec3::INFINITY, |a, v| a.min(*v));
    let hi = mesh.vertices.iter().fold(DVec3::NEG_INFINITY, |a, v| a.max(*v));
    assert_eq!(lo, DVec3::new(-1.0, -0.5, -0.25));
    assert_eq!(hi, DVec3::new(1.0, 0.5, 0.25));
}

#[test]
fn ball_sampling_integrates_area_inside_the_ball() {
    let cube = Scene::from_mesh(
        cuboid(DVec3::splat(-1.0), DVec3::splat(1.0)),
        &LabelRule::Uniform(BoundaryLabel::Reflecting),
    )
    .unwrap();
    let mut rng = Pcg64Mcg::seed_from_u64(4);
    // a disk on the floor, once from the floor itself and once from above
    for (x, r, area) in [
        (DVec3::new(0.0, 0.0, -1.0), 0.5, PI * 0.25),
        (DVec3::new(0.5, 0.0, -0.7), 0.5, PI * 0.16),
    ] {
        let n = 200_000;
        let total: f64 = (0..n)
            .filter_map(|_| cube.sample_boundary_in_ball(x, r, LabelSet::All, &mut rng))
            .map(|(s, pdf)| {
                assert!((s.position - x).length() < r);
                1.0 / pdf
            })
            .sum();
        let est = total / n as f64;
        assert!((est - area).abs() < 0.01 * area, "{est} vs {area}");
    }
    assert!(cube
        .sample_boundary_in_ball(DVec3::ZERO, 0.5, LabelSet::All, &mut rng)
        .is_none());
}

#[test]
fn segments_inside_a_face_plane_are_visible() {
    let ico = sphere_scene(2);
    let [a, b, c] = ico.triangle_vertices(7);
    assert!(ico.visible((a + b + c) / 3.0, 0.8 * a + 0.1 * b + 0.1 * c));
    // across the diagonal shared by two coplanar triangles
    let cube = Scene::from_mesh(
        cuboid(DVec3::splat(-1.0), DVec3::splat(1.0)),
        &LabelRule::Uniform(BoundaryLabel::Reflecting),
    )
    .unwrap();
    assert!(cube.visible(DVec3::new(-0.5, 0.5, -1.0), DVec3::new(0.5, -0.5, -1.0)));
    // a face crossed head-on still blocks
    assert!(!cube.visible(DVec3::new(0.0, 0.0, -0.5), DVec3::new(0.0, 0.0, -1.5)));
}
