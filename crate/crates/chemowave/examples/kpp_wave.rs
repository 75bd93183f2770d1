//! Chemotaxis-free wave construction checked against an independent
//! two-point boundary-value solve of `U'' + c U' + U (a - b U) = 0`.
//!
//! ```sh
//! cargo run --example kpp_wave
//! ```

use chemowave::verify::kpp_profile_bvp;
use chemowave::wave::{self, IterationConfig};
use chemowave::ModelParams;

fn main() {
    let p = ModelParams::fisher_kpp(1.0, 1.0).unwrap();
    let mu = 0.5;
    let cfg = IterationConfig::auto(&p, mu, 16385).unwrap();
    println!(
        "mu = {mu}, c = {}, grid [{:.2}, {:.2}] with {} nodes",
        mu + p.a / mu,
        cfg.grid.x_lo,
        cfg.grid.x_hi,
        cfg.grid.n
    );

    let outcome = wave::outer_fixed_point(&p, &cfg).unwrap();
    let prof = &outcome.profile;
    println!(
        "converged in {} outer iterations; residual {:.2e}, plateau {:.6}, decay error {:.4}",
        outcome.outer_iters, prof.residual, prof.plateau, prof.decay_error
    );

    let oracle = kpp_profile_bvp(p.a, p.b, prof.c, mu, cfg.grid).unwrap();
    let sup = prof.u.sup_distance(&oracle).unwrap();
    println!("sup distance to the boundary-value oracle: {sup:.3e}");

    println!("\nz,constructed,oracle");
    for k in 0..=12 {
        let z = -10.0 + 3.0 * k as f64;
        println!("{z:.1},{:.8},{:.8}", prof.u.interp(z), oracle.interp(z));
    }
}
