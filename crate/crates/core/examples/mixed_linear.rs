//! Linear mixed problem on a faceted ball: Dirichlet data on the `x > 0`
//! half, prescribed flux on the rest. The exact solution `a·x + b` is linear,
//! so every estimate can be checked against it.
//!
//! cargo run --release --example mixed_linear [walks]

use glam::DVec3;
use radwalk::estimator::{
    estimate_interior, BoundaryConditionSpec, ConstantProxy, EstimatorConfig, RobinBounds, SurfaceField, WalkContext,
};
use radwalk::geometry::shapes::icosphere;
use radwalk::geometry::{LabelRule, Scene};

fn main() {
    let walks = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4096);
    let scene = Scene::from_mesh(
        icosphere(DVec3::ZERO, 1.0, 2),
        &LabelRule::HalfSpace {
            point: DVec3::ZERO,
            normal: DVec3::X,
        },
    )
    .expect("icosphere is closed");
    let (a, b) = (DVec3::new(1.0, -2.0, 0.5), 3.0);
    let bc = BoundaryConditionSpec::dirichlet(SurfaceField::func(move |s| a.dot(s.position) + b))
        .with_flux(SurfaceField::func(move |s| a.dot(s.normal)));
    let bounds = RobinBounds::zero(&scene);
    let cfg = EstimatorConfig::for_scene(&scene).with_walks(walks).with_seed(1);
    let ctx = WalkContext {
        scene: &scene,
        bounds: &bounds,
        bc: &bc,
        proxy: &ConstantProxy(0.0),
        config: &cfg,
    };
    let points = [
        DVec3::new(-0.6, 0.0, 0.0),
        DVec3::new(-0.3, 0.4, -0.2),
        DVec3::new(0.2, -0.3, 0.5),
        DVec3::ZERO,
    ];
    println!("x,y,z,exact,estimate,std_error");
    for (p, s) in points.iter().zip(estimate_interior(&ctx, &points, 0)) {
        println!("{},{},{},{:.4},{:.4},{:.4}", p.x, p.y, p.z, a.dot(*p) + b, s.mean, s.std_error());
    }
}
