//! Radiative sphere whose exact solution is the constant 10, solved by
//! Picard iteration from a proxy of 8.
//!
//! cargo run --release --example constant_sphere

use glam::DVec3;
use radwalk::estimator::EstimatorConfig;
use radwalk::geometry::shapes::icosphere;
use radwalk::geometry::{BoundaryLabel, LabelRule, Scene};
use radwalk::picard::{run_picard, InitialGuess, PicardConfig};
use radwalk::scenarios::constant_problem;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let level = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let samples = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let scene = Scene::from_mesh(
        icosphere(DVec3::ZERO, 1.0, level),
        &LabelRule::Uniform(BoundaryLabel::Reflecting),
    )
    .expect("icosphere is closed");
    let problem = constant_problem(10.0, 1e-3, 4.0);
    let est = EstimatorConfig::for_scene(&scene).with_walks(64).with_seed(1);
    let mut cfg = PicardConfig::new(est, InitialGuess::Constant(8.0));
    cfg.samples = samples;
    let reference = problem.reference.clone().unwrap();
    let history = run_picard(&scene, &problem.bc, &cfg, Some(&*reference)).expect("solve");
    println!("iteration,mse,rel_change,seconds");
    for m in &history.metrics {
        println!("{},{:.6},{:.3e},{:.2}", m.iteration, m.mse.unwrap(), m.rel_change, m.seconds);
    }
}
