//! Manufactured radiative problem on a ball split into a Dirichlet half and a
//! radiative half, solved by Picard iteration. Prints the error per iteration.
//!
//! cargo run --release --example manufactured_ball [level] [samples]

use glam::DVec3;
use radwalk::estimator::EstimatorConfig;
use radwalk::geometry::shapes::icosphere;
use radwalk::geometry::{LabelRule, Scene};
use radwalk::picard::{run_picard, InitialGuess, PicardConfig};
use radwalk::scenarios::ManufacturedProblem;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let level = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let samples = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(1000);
    let scene = Scene::from_mesh(
        icosphere(DVec3::ZERO, 1.0, level),
        &LabelRule::HalfSpace {
            point: DVec3::ZERO,
            normal: DVec3::X,
        },
    )
    .expect("icosphere is closed");
    let problem = ManufacturedProblem::new(std::f64::consts::PI, 1e-3).problem();
    let est = EstimatorConfig::for_scene(&scene).with_walks(64).with_seed(5);
    let mut cfg = PicardConfig::new(est, InitialGuess::Constant(problem.initial_guess));
    cfg.samples = samples;
    let reference = problem.reference.clone().unwrap();
    let history = run_picard(&scene, &problem.bc, &cfg, Some(&*reference)).expect("solve");
    println!("iteration,mse,mean_increment");
    for m in &history.metrics {
        println!("{},{:.6},{:+.4}", m.iteration, m.mse.unwrap(), m.mean_increment);
    }
}
