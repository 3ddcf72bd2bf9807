//! How the certified star radius shrinks as a point approaches a Robin wall,
//! and how it grows back once the coefficient bound drops.
//!
//! cargo run --release --example star_radius

use glam::DVec3;
use radwalk::estimator::{certified_star_radius, RobinBounds};
use radwalk::geometry::shapes::cuboid;
use radwalk::geometry::{BoundaryLabel, LabelRule, Scene};

fn main() {
    let scene = Scene::from_mesh(
        cuboid(DVec3::splat(-1.0), DVec3::splat(1.0)),
        &LabelRule::Uniform(BoundaryLabel::Reflecting),
    )
    .expect("cube is closed");
    println!("height,mu,radius");
    for mu in [0.5, 5.0, 50.0] {
        let bounds = RobinBounds::uniform(&scene, mu, mu);
        for height in [0.5, 0.1, 0.01] {
            let x = DVec3::new(0.1, -0.2, -1.0 + height);
            let star = certified_star_radius(&scene, &bounds, x, f64::INFINITY, 1e-6);
            println!("{height},{mu},{:.5}", star.radius);
        }
    }
}
