use lapshape::{assemble_spcl_with, PointCloud};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

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
    let n = 4000;
    let cloud = sphere(n, 1234);
    let h = cloud.spacing();
    let r = 5.0 * h;
    let eps = r / 6.0;
    let op = assemble_spcl_with(&cloud, r, eps).unwrap();

    // mass sum vs sphere area
    let mass_sum: f64 = (0..n).map(|i| op.mass(i)).sum();
    println!("sum B = {mass_sum:.4} vs 4*pi = {:.4}  ratio {:.4}", 4.0 * std::f64::consts::PI, mass_sum / (4.0 * std::f64::consts::PI));

    // Rayleigh quotient of f = z (true eigenvalue 2)
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..n {
        let zi = cloud.point(i)[2];
        den += op.mass(i) * zi * zi;
        let (cols, vals) = op.row(i);
        for (&j, &w) in cols.iter().zip(vals) {
            let zj = cloud.point(j as usize)[2];
            num += 0.5 * (-w) * (zi - zj) * (zi - zj);
        }
    }
    println!("Rayleigh(z) = {:.4} (want ~2); num={num:.4} den={den:.4}", num / den);
    println!("  num vs 8pi/3 = {:.4}: ratio {:.4}", 8.0 * std::f64::consts::PI / 3.0, num / (8.0 * std::f64::consts::PI / 3.0));
    println!("  den vs 4pi/3 = {:.4}: ratio {:.4}", 4.0 * std::f64::consts::PI / 3.0, den / (4.0 * std::f64::consts::PI / 3.0));

    // row moments: sum(-W_ij * d3d^2) / (A_i/3) should be ~4
    // and sum(-W_ij) / (A_i/3) should be ~1/eps^2
    let mut m2_sum = 0.0;
    let mut m0_sum = 0.0;
    let mut cnt = 0.0;
    for i in (0..n).step_by(7) {
        let (cols, vals) = op.row(i);
        let pi = cloud.point(i);
        let mut m2 = 0.0;
        let mut m0 = 0.0;
        for (&j, &w) in cols.iter().zip(vals) {
            let pj = cloud.point(j as usize);
            let d2 = (pi[0]-pj[0]).powi(2) + (pi[1]-pj[1]).powi(2) + (pi[2]-pj[2]).powi(2);
            m2 += -w * d2;
            m0 += -w;
        }
        m2_sum += m2 / op.mass(i);
        m0_sum += m0 / op.mass(i) * eps * eps;
        cnt += 1.0;
    }
    println!("mean row m2 / (A/3) = {:.4} (want 4)", m2_sum / cnt);
    println!("mean row m0 * eps^2 / (A/3) = {:.4} (want 1)", m0_sum / cnt);
}
