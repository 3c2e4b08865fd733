//! Radial Bessel kernels: 𝒥 against closed forms and the large-argument expansion.

use radial_multipliers::special_functions::{bessel_asymptotic, script_j, script_j_alpha};
use std::f64::consts::PI;

fn main() {
    println!("{:>6} {:>22} {:>22}", "s", "J_3(s)", "4π sin(s)/s");
    for s in [0.5, 2.0, 10.0, 40.0] {
        println!("{s:>6} {:>22.15e} {:>22.15e}", script_j(3, s).unwrap(), 4.0 * PI * s.sin() / s);
    }

    let (d, alpha, s) = (2, 1.5, 60.0);
    let direct = script_j_alpha(d, alpha, s).unwrap();
    let asym = bessel_asymptotic(d, alpha, s, 2).unwrap();
    println!("\nJ_alpha(d={d}, alpha={alpha}) at s={s}: direct {direct:.15e}, asymptotic {:.15e} (bound {:.1e})", asym.value, asym.bound);
}
