//! `G_α f`: the L² identity `‖G_α f‖² = α/(4(2α-1)) ‖f‖²` and the pointwise comparison with
//! the spherical-mean square function.

use radial_multipliers::grids_norms::TGrid;
use radial_multipliers::square_functions::{equivalence_probe, g_alpha, gaussian_input, plancherel_ratio, plancherel_target, ring_spectrum_input};

fn main() {
    let f = gaussian_input(2, 256, 64.0, 1.0);
    let grid = TGrid::standard();
    for alpha in [0.75, 1.0, 2.0, 3.0] {
        let res = g_alpha(&f, alpha, &grid).unwrap();
        println!(
            "alpha={alpha}: |G f|^2/|f|^2 = {:.6}, expected {:.6}, converged {}",
            plancherel_ratio(&f, &res),
            plancherel_target(alpha),
            res.convergence_flag
        );
    }

    let grid = TGrid::new(-6, 6, 128).unwrap();
    for (name, g) in [("gaussian", gaussian_input(2, 128, 32.0, 1.0)), ("ring", ring_spectrum_input(2, 128, 32.0, 2.0, 0.3))] {
        let p = equivalence_probe(&g, 1.0, 1e-2, &grid).unwrap();
        println!("{name}: G_1 / G_spherical in [{:.4}, {:.4}], spread {:.4}", p.ratio_min, p.ratio_max, p.spread());
    }
}
