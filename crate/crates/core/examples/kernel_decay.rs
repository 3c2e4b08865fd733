//! Radial decay of `(∫₁²|K_t^α∗η|²dt)^{1/2}` and the necessity threshold it implies.
//! Runs on a reduced grid; pass `--full` for the 2048² setup.

use radial_multipliers::experiments::{kernel_decay_experiment, necessity_probe, KernelSetup};

fn main() {
    let full = std::env::args().any(|a| a == "--full");
    let (setup, r_hi) = if full {
        (KernelSetup::default(), 512.0)
    } else {
        (
            KernelSetup {
                n: 1024,
                extent: 1536.0,
                ..KernelSetup::default()
            },
            256.0,
        )
    };
    for alpha in [1.0, 2.0] {
        let fit = kernel_decay_experiment(&setup, alpha, 16.0, r_hi, 16).unwrap();
        println!("alpha={alpha}: slope {:.4} ± {:.4}, predicted {}", fit.slope, fit.stderr, fit.predicted);
    }
    let rep = necessity_probe(&setup, 4.0 / 3.0, &[0.75, 1.0, 1.25], 16.0, r_hi, 16).unwrap();
    println!("necessity p=4/3: crossing {:?}, predicted {}", rep.crossing, rep.predicted);
}
