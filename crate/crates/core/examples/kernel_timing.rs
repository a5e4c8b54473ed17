//! Times the layer kernels on one sampled environment.
//!
//! cargo run --release --example kernel_timing -- <alpha> <n> <window_factor>

use std::time::Instant;

use dfpp::env::{sample_environment, WindowSpec};
use dfpp::geodesic::{geodesic_to_hyperplane_with, JumpConstraint, Kernel};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let alpha: f64 = args.get(1).map_or(0.5, |s| s.parse().unwrap());
    let n: usize = args.get(2).map_or(1024, |s| s.parse().unwrap());
    let factor: f64 = args.get(3).map_or(4.0, |s| s.parse().unwrap());
    let kernels: Vec<Kernel> = match args.get(4).map(String::as_str) {
        Some("all") => vec![Kernel::Auto, Kernel::Pruned],
        _ => vec![Kernel::Auto],
    };
    let window = WindowSpec::scaled(n, 1, factor, 0.75).unwrap();
    let t = Instant::now();
    let env = sample_environment(n, 1, window, 1).unwrap();
    println!("sampled {} points in {:?}", env.total_points(), t.elapsed());
    for kernel in kernels {
        let t = Instant::now();
        let r = geodesic_to_hyperplane_with(&env, alpha, JumpConstraint::Unbounded, kernel)
            .unwrap()
            .reached()
            .unwrap();
        println!(
            "{kernel:?}: T={} max_jump={:.3} max_disp={:.3} boundary={} in {:?}",
            r.passage_time(),
            r.max_jump(),
            r.max_displacement(),
            r.boundary_hit(),
            t.elapsed()
        );
    }
}
