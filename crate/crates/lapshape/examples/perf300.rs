use lapshape::{assemble_spcl_with, solve_eigs, PointCloud};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::time::Instant;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let nrm = Normal::new(0.0f64, 1.0).unwrap();
    // blobby closed surface: unit sphere radially modulated
    let pts: Vec<[f64; 3]> = (0..5500)
        .map(|_| {
            let v = [nrm.sample(&mut rng), nrm.sample(&mut rng), nrm.sample(&mut rng)];
            let len = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            let u = [v[0] / len, v[1] / len, v[2] / len];
            let rad = 1.0 + 0.25 * (3.0 * u[0]).sin() * (2.0 * u[1]).cos() + 0.15 * (4.0 * u[2]).sin();
            [u[0] * rad, u[1] * rad, u[2] * rad]
        })
        .collect();
    let cloud = PointCloud::from_points(pts).unwrap();
    let h = cloud.spacing();
    let eps = 0.4 * h.sqrt();
    let r = 5.0 * eps;
    let t0 = Instant::now();
    let op = assemble_spcl_with(&cloud, r, eps).unwrap();
    let t_asm = t0.elapsed();
    let t1 = Instant::now();
    let eigs = solve_eigs(&op, 300).unwrap();
    let t_eig = t1.elapsed();
    println!(
        "n=5500 nnz/row={} | assembly {:.2?} eigs(k=300) {:.2?} | lambda_1={:.3} lambda_299={:.3}",
        op.nnz_off_diagonal() / op.len(),
        t_asm,
        t_eig,
        eigs.eigenvalue(1),
        eigs.eigenvalue(299)
    );
}
