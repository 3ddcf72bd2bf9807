//! Black conducting ball in vacuum lit from +z. Reports the lit and shadowed
//! mean temperatures next to the equilibrium and subsolar references.
//!
//! cargo run --release --example black_ball [samples]

use std::sync::Arc;

use glam::DVec3;
use radwalk::estimator::EstimatorConfig;
use radwalk::geometry::shapes::icosphere;
use radwalk::geometry::{BoundaryLabel, LabelRule, Scene};
use radwalk::picard::{run_picard, InitialGuess, PicardConfig};
use radwalk::scenarios::{equilibrium_initial_guess, subsolar_bound, RadiativeVacuumProblem};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let samples = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1000);
    let l0 = 1000.0;
    let scene = Arc::new(
        Scene::from_mesh(
            icosphere(DVec3::ZERO, 1.0, 2),
            &LabelRule::Uniform(BoundaryLabel::Reflecting),
        )
        .expect("icosphere is closed"),
    );
    let problem = RadiativeVacuumProblem::black_body(l0, DVec3::Z).problem(scene.clone());
    let est = EstimatorConfig::for_scene(&scene).with_walks(64).with_seed(2);
    let mut cfg = PicardConfig::new(est, InitialGuess::Constant(problem.initial_guess));
    cfg.samples = samples;
    cfg.iterations = 8;
    let history = run_picard(&scene, &problem.bc, &cfg, None).expect("solve");

    let mean = |lit: bool| {
        let v: Vec<f64> = history
            .final_field()
            .samples()
            .iter()
            .filter(|s| (s.position.z > 0.0) == lit)
            .map(|s| s.value)
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    println!("equilibrium {:.1} K", equilibrium_initial_guess(l0, 1.0));
    println!("subsolar    {:.1} K", subsolar_bound(l0, 1.0));
    println!("lit mean    {:.1} K", mean(true));
    println!("shadow mean {:.1} K", mean(false));
}
