//! Decay of separated inner products, growth of `sup|𝓕[ψ∗σ_r]|`, and the constant in the
//! fixed-`x` Plancherel step.

use radial_multipliers::experiments::{orthogonality_decay, plancherel_step_check, sphere_growth, OrthogonalitySetup, PlancherelSetup};

fn main() {
    let fit = orthogonality_decay(&OrthogonalitySetup::default(), 8.0, 128.0, 9).unwrap();
    println!("separated inner products: slope {:.4}, predicted {}", fit.slope, fit.predicted);
    for (m, v) in &fit.data {
        println!("  M={m:>8.2}  {v:.6e}");
    }

    for d in [2, 3] {
        let fit = sphere_growth(d, 2.0, 128.0, 7).unwrap();
        println!("sup|F[psi*sigma_r]| in d={d}: slope {:.4}, predicted {}", fit.slope, fit.predicted);
    }

    let rep = plancherel_step_check(&PlancherelSetup::default(), &[3, 4, 5], &[1.0, 2.0], 20, 1).unwrap();
    for (j, v) in &rep.per_j {
        println!("Plancherel step j={j}: max ratio {v:.5}");
    }
}
