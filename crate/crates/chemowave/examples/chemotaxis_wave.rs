//! Full chemotactic wave construction at small sensitivities: envelope
//! setup, monotone inner evolution, outer fixed point, and the converged
//! profile written as CSV.
//!
//! ```sh
//! cargo run --example chemotaxis_wave
//! ```

use std::fs;

use chemowave::wave::{self, IterationConfig, OuterStart};
use chemowave::{speed, ModelParams};

fn main() {
    let p = ModelParams::new(1.0, 0.02, 0.05, 1.0, 1.0, 1.0, 1.0, 1.0, 4.0).unwrap();
    let mu = 0.5;

    let window = speed::wave_window(&p, 1024, 1e-6).unwrap();
    println!(
        "window ({:.6}, {:.6}) -> speeds [{:.4}, {}); constructing at mu = {mu}",
        window.mu_lo, window.mu_hi, window.c_star, window.c_double_star
    );
    assert!(window.mu_lo < mu && mu < window.mu_hi);

    let cfg = IterationConfig::auto(&p, mu, 16385).unwrap();
    println!(
        "ceiling C0 = {:.6}, secondary exponent {:.6}, sub coefficient d = {:.4}",
        cfg.c0, cfg.mu_tilde, cfg.d
    );

    let first = wave::outer_fixed_point(&p, &cfg).unwrap();
    println!(
        "upper start: {} outer iterations, residual {:.2e}, plateau {:.6}, decay {:.4}",
        first.outer_iters,
        first.profile.residual,
        first.profile.plateau,
        first.profile.decay_error
    );

    let second = wave::outer_fixed_point_from(&p, &cfg, OuterStart::LowerShifted).unwrap();
    let gap = wave::star_norm(&first.profile.u, &second.profile.u).unwrap();
    println!("independent start reproduces the profile within {gap:.2e}");

    let mut buf = Vec::new();
    first.profile.write_csv(&mut buf).unwrap();
    let path = std::env::temp_dir().join("chemotaxis_wave_profile.csv");
    fs::write(&path, &buf).unwrap();
    println!("profile written to {}", path.display());
}
