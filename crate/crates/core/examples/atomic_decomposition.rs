//! Peetre square function, level sets, Whitney cubes and atoms for a random input.

use radial_multipliers::decomposition_lab::{admissible_k_range, decompose, random_band_limited};

fn main() {
    let f = random_band_limited(128, 32.0, 0.5, 6.0, 42).unwrap();
    let range = admissible_k_range(&f);
    let dec = decompose(&f, range, 6).unwrap();
    println!("bands k in {range:?}, cell size 2^-{}", dec.cell_log2_inv);
    println!("{:>4} {:>10} {:>10} {:>8} {:>7} {:>10}", "n", "|Omega|", "|Omega*|", "Whitney", "atoms", "ratio");
    for lev in &dec.levels {
        println!(
            "{:>4} {:>10.3} {:>10.3} {:>8} {:>7} {:>10.4}",
            lev.set.n,
            lev.measure,
            lev.star_measure,
            lev.whitney.len(),
            lev.atoms.len(),
            lev.ratio
        );
    }
}
