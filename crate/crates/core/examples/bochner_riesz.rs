//! Bochner–Riesz means and generalized spherical means of a Gaussian.

use radial_multipliers::grids_norms::{lp_norm, GridField};
use radial_multipliers::multiplier_operators::{bochner_riesz, spherical_mean};

fn main() {
    let f = GridField::from_real_fn(2, 128, 32.0, |x| (-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp()).unwrap();
    let norm = lp_norm(&f, 2.0, None);
    println!("{:>6} {:>10} {:>14}", "t", "lambda", "|R_t f|_2/|f|_2");
    for lambda in [0.5, 1.0, 2.0] {
        for t in [0.5, 1.0, 2.0, 4.0] {
            let r = bochner_riesz(&f, lambda, t).unwrap();
            println!("{t:>6} {lambda:>10} {:>14.6}", lp_norm(&r, 2.0, None) / norm);
        }
    }
    for beta in [0.0, 0.5, 1.0] {
        let a = spherical_mean(&f, beta, 2.0).unwrap();
        println!("A^beta_2 f at the origin, beta={beta}: {:.6}", a.values[a.ravel(64, 64)].re);
    }
}
