//! Lab-frame front propagation from ramped step data, with the spreading
//! speed measured by level-set tracking.
//!
//! ```sh
//! cargo run --example front_speed
//! ```

use chemowave::sim::{self, Boundary, ChemMode, SimConfig};
use chemowave::{Grid1D, ModelParams};

fn main() {
    let grid = Grid1D::new(-30.0, 160.0, 3801).unwrap();
    let cfg = SimConfig {
        grid,
        dt: 0.01,
        t_end: 50.0,
        frame_speed: 0.0,
        chem_mode: ChemMode::Elliptic,
        boundary: Boundary::NeumannBoth,
    };

    for (label, p) in [
        ("chemotaxis-free", ModelParams::fisher_kpp(1.0, 1.0).unwrap()),
        (
            "small sensitivities",
            ModelParams::new(1.0, 0.02, 0.05, 1.0, 1.0, 1.0, 1.0, 1.0, 4.0).unwrap(),
        ),
    ] {
        let level = p.a / (2.0 * p.b);
        let u0 = sim::ramp_initial(grid, p.a / p.b, 0.0, 10).unwrap();
        let run = sim::run_with_tracking(&p, u0, &cfg, level, 0.5).unwrap();
        let est = sim::measure_front_speed(&run.track).unwrap();
        println!(
            "{label}: speed {:.4} (2 sqrt(a) = {:.4}), confidence {:.2e}, {} samples",
            est.speed,
            2.0 * p.a.sqrt(),
            est.confidence,
            est.samples_used
        );
        println!("  last track points:");
        for (t, x) in run.track.samples.iter().rev().take(4).rev() {
            println!("    t = {t:5.1}  front at x = {x:8.3}");
        }
    }
}
