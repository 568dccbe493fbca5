use lapshape::{assemble_spcl_with, solve_eigs, PointCloud};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::time::Instant;

fn sphere(n: usize, seed: u64) -> PointCloud<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nrm = Normal::new(0.0f64, 1.0).unwrap();
    let pts: Vec<[f64; 3]> = (0..n)
        .map(|_| {
            let v = [nrm.sample(&mut rng), nrm.sample(&mut rng), nrm.sample(&mut rng)];
            let len = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            [v[0] / len, v[1] / len, v[2] / len]
        })
        .collect();
    PointCloud::from_points(pts).unwrap()
}

fn main() {
    let a: f64 = std::env::args().nth(1).map(|s| s.parse().unwrap()).unwrap_or(0.4);
    for n in [4000usize, 8000] {
        let cloud = sphere(n, 1234);
        let h = cloud.spacing();
        let eps = a * h.sqrt();
        let r = 5.0 * eps;
        let t0 = Instant::now();
        let op = assemble_spcl_with(&cloud, r, eps).unwrap();
        let eigs = solve_eigs(&op, 20).unwrap();
        let vals = eigs.eigenvalues();
        let g1: f64 = vals[1..4].iter().sum::<f64>() / 3.0;
        let g2: f64 = vals[4..9].iter().sum::<f64>() / 5.0;
        let e1 = (g1 - 2.0).abs() / 2.0;
        let e2 = (g2 - 6.0).abs() / 6.0;
        println!(
            "n={n} h={h:.4} eps={:.2}h r={:.2}h | g1 {g1:.4} ({:+.2}%) g2 {g2:.4} ({:+.2}%) maxerr {:.2}% | {:.2?}",
            eps / h, r / h,
            (g1 - 2.0) / 2.0 * 100.0,
            (g2 - 6.0) / 6.0 * 100.0,
            e1.max(e2) * 100.0,
            t0.elapsed()
        );
    }
}
