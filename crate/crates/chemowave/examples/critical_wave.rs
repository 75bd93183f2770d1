//! Qualitative probe of the critical wave: constructions at exponents
//! approaching the window's right endpoint. The sub-solution coefficient
//! blows up as the endpoint nears, so the runs degrade gracefully rather
//! than pass or fail a criterion.
//!
//! ```sh
//! cargo run --example critical_wave
//! ```

use chemowave::wave::{self, IterationConfig};
use chemowave::{speed, ModelParams};

fn main() {
    let p = ModelParams::new(1.0, 0.02, 0.05, 1.0, 1.0, 1.0, 1.0, 1.0, 4.0).unwrap();
    let w = speed::wave_window(&p, 1024, 1e-6).unwrap();
    println!(
        "window endpoint mu* = {:.6} (c* = {:.6}); probing mu = mu* (1 - eta)",
        w.mu_hi, w.c_star
    );

    for eta in [0.3, 0.2, 0.1, 0.05] {
        let mu = w.mu_hi * (1.0 - eta);
        match IterationConfig::auto(&p, mu, 16385) {
            Err(e) => println!("eta = {eta}: setup fails ({e})"),
            Ok(cfg) => {
                println!(
                    "eta = {eta}: mu = {mu:.4}, c = {:.4}, d = {:.3e}, grid [{:.1}, {:.1}]",
                    mu + p.a / mu,
                    cfg.d,
                    cfg.grid.x_lo,
                    cfg.grid.x_hi
                );
                match wave::outer_fixed_point(&p, &cfg) {
                    Ok(out) => println!(
                        "           converged: residual {:.2e}, plateau {:.6}, decay {:.4}",
                        out.profile.residual, out.profile.plateau, out.profile.decay_error
                    ),
                    Err(e) => println!("           did not complete: {e}"),
                }
            }
        }
    }
    println!("(the construction degenerates at the endpoint itself; no criterion is attached)");
}
