//! Builds the smoothed boundary proxy from noisy samples of `1 + z` on the
//! unit sphere and evaluates it at a few query points, including one far from
//! every sample.
//!
//! cargo run --release --example proxy_query

use glam::DVec3;
use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64Mcg;
use radwalk::boundary_field::{MlsParams, ProxyField, ProxySample};

fn main() {
    let mut rng = Pcg64Mcg::seed_from_u64(9);
    let samples: Vec<ProxySample> = (0..3000)
        .map(|_| {
            let p = radwalk::kernels::uniform_sphere(rng.random(), rng.random());
            ProxySample::new(p, 1.0 + p.z + 0.05 * (rng.random::<f64>() - 0.5))
        })
        .collect();
    let field = ProxyField::build(samples, MlsParams::default()).expect("samples are finite");
    println!("radius {:.4} bandwidth {:.4}", field.radius(), field.bandwidth());
    println!("x,y,z,exact,proxy");
    for q in [DVec3::Z, -DVec3::Z, DVec3::X, DVec3::new(0.6, 0.0, 0.8), DVec3::new(40.0, 0.0, 0.0)] {
        println!("{},{},{},{:.4},{:.4}", q.x, q.y, q.z, 1.0 + q.z, field.eval_mls(q));
    }
}
