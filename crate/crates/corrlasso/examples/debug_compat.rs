// scratch diagnostic
use corrlasso::compat::*;
use corrlasso::linalg::*;
use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn random_design(n: usize, p: usize, seed: u64) -> DesignMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
    for j in 0..p {
        let norm = m.column(j).norm();
        m.column_mut(j).scale_mut((n as f64).sqrt() / norm);
    }
    DesignMatrix::new(m).unwrap()
}

fn main() {
    let base = random_design(9, 5, 7);
    let mut m = base.matrix().clone();
    let col0 = m.column(0).into_owned();
    m.set_column(1, &col0);
    let x = DesignMatrix::new(m).unwrap();
    let t = SupportSet::new(vec![0]).unwrap();
    let (_, bar) = correlation_weights(&x, &t).unwrap();
    println!("weights (bar): {:?}", bar.values());
    let cone = ConeSpec::weighted(t.clone(), 2.0, bar).unwrap();
    // manual probe: orthant values near the stall
    for kappa in [0.5f64, 0.25, 0.125, 0.9849811330675632/2.0] {
        let mu = (9.0 * kappa / 1.0).sqrt();
        for s in [1.0f64, -1.0] {
            match orthant_subproblem(&x, &cone, mu, &[s]) {
                Ok(out) => println!("kappa={kappa:.4} mu={mu:.4} s={s}: value={:.9} dual={:.9} gap={:.2e} iters={}", out.value, out.dual_lower, out.value-out.dual_lower, out.iterations),
                Err(e) => println!("kappa={kappa:.4} s={s}: ERR {e}"),
            }
        }
        println!("   threshold = {:.9}", mu);
    }
    match compat_factor(&x, &cone, 1e-3) {
        Ok(c) => println!("cert: [{}, {}] rounds={} orthants={}", c.kappa_lower, c.kappa_upper, c.iterations, c.orthant_count),
        Err(e) => println!("ERR: {e}"),
    }
}
