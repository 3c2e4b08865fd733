//! The radial Hankel engine against the 2-D grid FFT on a Gaussian.

use num_complex::Complex64;
use radial_multipliers::grids_norms::GridField;
use radial_multipliers::radial_transforms::{grid_fft, radial_fourier_fn, Direction};

fn main() {
    let s2 = 0.64;
    let f = GridField::from_real_fn(2, 256, 32.0, |x| (-(x[0] * x[0] + x[1] * x[1]) / (2.0 * s2)).exp()).unwrap();
    let fh = grid_fft(&f, Direction::Forward);
    let n = fh.n;
    let ray: Vec<usize> = (0..12).map(|k| fh.ravel(n / 2, n / 2 + 3 * k)).collect();
    let rho: Vec<f64> = ray.iter().map(|&i| fh.radius(i)).collect();
    let (radial, reliable) = radial_fourier_fn(2, |r| Complex64::new((-r * r / (2.0 * s2)).exp(), 0.0), &[], 12.0, &rho);
    println!("{:>8} {:>20} {:>20} {:>10}", "rho", "grid FFT", "radial", "|diff|");
    for ((&i, r), (z, ok)) in ray.iter().zip(&rho).zip(radial.iter().zip(&reliable)) {
        println!("{r:>8.4} {:>20.12e} {:>20.12e} {:>10.1e}{}", fh.values[i].re, z.re, (fh.values[i] - z).norm(), if *ok { "" } else { " unreliable" });
    }
}
