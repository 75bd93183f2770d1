//! Convergence of perturbed states to the positive equilibrium, in both
//! chemical modes, with the chemotaxis-free case checked against the exact
//! logistic clock.
//!
//! ```sh
//! cargo run --example equilibrium_stability
//! ```

use chemowave::sim::{self, Boundary, ChemMode, SimConfig};
use chemowave::{Field, Grid1D, ModelParams};

fn main() {
    let p = ModelParams::new(1.0, 0.02, 0.05, 1.0, 1.0, 1.0, 1.0, 1.0, 4.0).unwrap();
    let grid = Grid1D::new(-30.0, 30.0, 601).unwrap();
    let eq = p.a / p.b;

    for mode in [ChemMode::Elliptic, ChemMode::Parabolic] {
        let cfg = SimConfig {
            grid,
            dt: 0.01,
            t_end: 80.0,
            frame_speed: 0.0,
            chem_mode: mode,
            boundary: Boundary::NeumannBoth,
        };
        let u0 = Field::from_fn(grid, |x| eq * (1.0 + 0.5 * (0.42 * x).sin())).unwrap();
        match sim::run_stability_experiment(&p, u0, &cfg, 1e-3) {
            Ok(rep) => println!(
                "{mode:?}: within 1e-3 of the equilibrium at t = {:.3}",
                rep.convergence_time
            ),
            Err(e) => println!("{mode:?}: {e}"),
        }
    }

    // Spatially constant chemotaxis-free dynamics follow the logistic law;
    // |u - a/b| = e^{-a t} / (2 - e^{-a t}) starting from u = 2 a/b.
    let kpp = ModelParams::fisher_kpp(1.0, 1.0).unwrap();
    let small = Grid1D::new(-2.0, 2.0, 9).unwrap();
    let cfg = SimConfig {
        grid: small,
        dt: 0.002,
        t_end: 20.0,
        frame_speed: 0.0,
        chem_mode: ChemMode::Elliptic,
        boundary: Boundary::NeumannBoth,
    };
    let u0 = Field::constant(small, 2.0).unwrap();
    let rep = sim::run_stability_experiment(&kpp, u0, &cfg, 1e-3).unwrap();
    let exact = (1.0f64 / (2e-3 / (1.0 + 1e-3))).ln();
    println!(
        "logistic clock: measured {:.4}, exact {:.4} ({:+.2}%)",
        rep.convergence_time,
        exact,
        100.0 * (rep.convergence_time - exact) / exact
    );
}
