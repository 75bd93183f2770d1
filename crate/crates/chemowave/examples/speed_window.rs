//! Feasibility hypothesis and the admissible wave-speed window.
//!
//! ```sh
//! cargo run --example speed_window
//! ```

use chemowave::{speed, ModelParams};

fn main() {
    let p = ModelParams::new(1.0, 0.02, 0.05, 1.0, 1.0, 1.0, 1.0, 1.0, 4.0).unwrap();

    let report = speed::hypothesis_h(&p, 2048).unwrap();
    match report.witness {
        Some((mu, f)) => println!(
            "hypothesis holds: min f = {f:.6e} at mu = {mu:.6} (b = {})",
            p.b
        ),
        None => {
            println!("hypothesis fails: min f = {:.6e} >= b = {}", report.min_f, p.b);
            return;
        }
    }
    println!(
        "branch formulations agree: {} (largest gap {:.1e})",
        report.formulations_agree, report.equivalence_gap
    );

    let w = speed::wave_window(&p, 2048, 1e-8).unwrap();
    println!("{}", speed::WaveWindow::CSV_HEADER);
    println!("{}", w.csv_row());
    println!(
        "speeds c in [{:.6}, {}) admit the construction; the exponent cap is {:.6}",
        w.c_star, w.c_double_star, w.mu_cap
    );

    // Sample the threshold along the window for plotting.
    println!("\nmu,f(mu)");
    for i in 1..=24 {
        let mu = w.mu_cap * i as f64 / 25.0;
        if let Ok(f) = speed::f_of_mu(&p, mu) {
            println!("{mu:.4},{f:.8}");
        }
    }
}
