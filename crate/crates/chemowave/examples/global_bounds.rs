//! Sup-norm ceilings along time-dependent runs: the density stays under
//! `max(|u0|, a / (b - m_under - c tau k))` and each chemical under the
//! matching production/decay ratio.
//!
//! ```sh
//! cargo run --example global_bounds
//! ```

use chemowave::sim::{self, Boundary, ChemMode, SimConfig};
use chemowave::{Field, Grid1D, ModelParams};

fn main() {
    let p = ModelParams::new(1.0, 0.02, 0.05, 1.0, 1.0, 1.0, 1.0, 1.0, 4.0).unwrap();
    let grid = Grid1D::new(-30.0, 30.0, 601).unwrap();
    let cfg = SimConfig {
        grid,
        dt: 0.02,
        t_end: 30.0,
        frame_speed: 0.0,
        chem_mode: ChemMode::Elliptic,
        boundary: Boundary::NeumannBoth,
    };

    for (label, u0) in [
        (
            "wavy data above the asymptotic bound",
            Field::from_fn(grid, |x| 0.3 + 0.2 * (0.4 * x).cos()).unwrap(),
        ),
        (
            "constant data below it",
            Field::constant(grid, 0.2).unwrap(),
        ),
    ] {
        match sim::run_bound_check(&p, u0, &cfg) {
            Ok(rep) => println!(
                "{label}:\n  u  <= {:.6} (attained {:.6})\n  v1 <= {:.6} (attained {:.6})\n  v2 <= {:.6} (attained {:.6})  [{} checkpoints]",
                rep.ceiling_u, rep.max_u, rep.ceiling_v1, rep.max_v1, rep.ceiling_v2, rep.max_v2,
                rep.checkpoints
            ),
            Err(e) => println!("{label}: {e}"),
        }
    }
}
