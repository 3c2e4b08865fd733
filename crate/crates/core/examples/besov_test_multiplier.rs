//! Test multipliers of Bochner–Riesz type: the Besov norm at the critical smoothness tracks
//! the ℓ^q norm of the coefficients.

use radial_multipliers::besov_multipliers::{besov_norm, lq_norm, test_multiplier, TestMultiplierSpec};

fn main() {
    let p = 4.0 / 3.0;
    println!("single blocks, q = 2:");
    for j0 in 2..=10usize {
        let mut c = vec![0.0; 10];
        c[j0 - 1] = 1.0;
        let spec = TestMultiplierSpec { d: 2, p, coefficients: c };
        let m = test_multiplier(&spec).unwrap();
        println!("  j0={j0:>2}: {:.5}", besov_norm(&m, spec.alpha(), 2.0).unwrap());
    }
    for q in [2.0, f64::INFINITY] {
        for big_j in [5usize, 10, 15] {
            let c: Vec<f64> = (1..=big_j).map(|j| 2f64.powf(-(j as f64) / 2.0)).collect();
            let spec = TestMultiplierSpec { d: 2, p, coefficients: c.clone() };
            let norm = besov_norm(&test_multiplier(&spec).unwrap(), spec.alpha(), q).unwrap();
            println!("q={q} J={big_j:>2}: norm / |c|_q = {:.5}", norm / lq_norm(&c, q));
        }
    }
}
