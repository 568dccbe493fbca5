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
    let args: Vec<String> = std::env::args().collect();
    let n: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(4000);
    let c: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(5.0);
    let frac: f64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(1.0 / 6.0);
    let seed: u64 = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(1234);

    let cloud = sphere(n, seed);
    let h = cloud.spacing();
    let r = c * h;
    let t0 = Instant::now();
    let op = match assemble_spcl_with(&cloud, r, r * frac) {
        Ok(op) => op,
        Err(e) => {
            eprintln!("assembly failed: {e}");
            std::process::exit(1);
        }
    };
    let t_asm = t0.elapsed();
    let t1 = Instant::now();
    let eigs = solve_eigs(&op, 20).unwrap();
    let t_eig = t1.elapsed();

    let vals = eigs.eigenvalues();
    let g1: f64 = vals[1..4].iter().sum::<f64>() / 3.0;
    let g2: f64 = vals[4..9].iter().sum::<f64>() / 5.0;
    println!(
        "n={n} c={c} frac={frac:.4} seed={seed} h={h:.4} | asm {:.2?} eig {:.2?}",
        t_asm, t_eig
    );
    println!("lambda[0..10] = {:?}", &vals[0..10.min(vals.len())]);
    println!(
        "group1 mean {:.4} (want 2, err {:+.2}%)  group2 mean {:.4} (want 6, err {:+.2}%)",
        g1,
        (g1 - 2.0) / 2.0 * 100.0,
        g2,
        (g2 - 6.0) / 6.0 * 100.0
    );
}
