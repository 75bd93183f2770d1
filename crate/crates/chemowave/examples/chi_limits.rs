//! Window behaviour as both sensitivities shrink to zero: the lower speed
//! endpoint falls to the chemotaxis-free minimum while the upper endpoint
//! grows without bound.
//!
//! ```sh
//! cargo run --example chi_limits
//! ```

use chemowave::{speed, ModelParams};

fn main() {
    let p = ModelParams::new(1.0, 0.5, 3.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.6).unwrap();
    let scales = [1.0, 3e-1, 1e-1, 3e-2, 1e-2, 1e-3, 0.0];

    println!("limit speed c = 2 sqrt(a) = {}", 2.0 * p.a.sqrt());
    println!("scale,{}", speed::WaveWindow::CSV_HEADER);
    for (scale, row) in speed::chi_limit_study(&p, &scales, 2048, 1e-8) {
        match row {
            Ok(w) => println!("{scale:.0e},{}", w.csv_row()),
            Err(e) => println!("{scale:.0e},infeasible ({e})"),
        }
    }
}
