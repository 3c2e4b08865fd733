//! Bochner–Riesz maximal function and the Hardy–Littlewood maximal function.

use radial_multipliers::grids_norms::{lp_norm, GridField, TGrid};
use radial_multipliers::maximal_operators::{hl_maximal, riesz_maximal};

fn main() {
    let f = GridField::from_real_fn(2, 128, 32.0, |x| {
        let bump = |a: f64, b: f64| (-((x[0] - a).powi(2) + (x[1] - b).powi(2))).exp();
        bump(-4.0, 0.0) - 0.5 * bump(5.0, 3.0)
    })
    .unwrap();
    for lambda in [0.5, 1.0, 2.0] {
        let res = riesz_maximal(&f, lambda, &TGrid::new(-2, 3, 16).unwrap()).unwrap();
        println!(
            "lambda={lambda}: |R_* f|_2 / |f|_2 = {:.4}, refinement-stable {}",
            lp_norm(&res.field, 2.0, None) / lp_norm(&f, 2.0, None),
            res.monotone_flag
        );
    }
    let m = hl_maximal(&f);
    for p in [1.5, 2.0, 4.0] {
        println!("p={p}: |Mf|_p / |f|_p = {:.4}", lp_norm(&m, p, None) / lp_norm(&f, p, None));
    }
}
