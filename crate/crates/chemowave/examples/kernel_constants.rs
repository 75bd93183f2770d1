//! Kernel aggregates by closed form and by the quadrature oracle.
//!
//! ```sh
//! cargo run --example kernel_constants
//! ```

use chemowave::constants::{self, Kernel};
use chemowave::ModelParams;

fn main() {
    let cases = [
        ("attraction only", ModelParams::new(1.0, 0.8, 0.0, 4.0, 1.0, 1.0, 1.0, 1.0, 1.0)),
        ("repulsion only", ModelParams::new(1.0, 0.0, 0.6, 1.0, 2.5, 1.0, 1.2, 1.0, 1.0)),
        ("crossing kernels", ModelParams::new(1.0, 1.0, 1.0, 1.0, 2.0, 1.0, 1.0, 1.0, 1.0)),
        ("equal decay rates", ModelParams::new(1.0, 2.0, 1.0, 1.5, 1.5, 1.0, 1.0, 1.0, 1.0)),
    ];

    println!(
        "{:<20} {:>12} {:>12} {:>12} {:>12} {:>10}",
        "case", "m_bar", "m_under", "k", "identity", "crossing"
    );
    for (label, p) in cases {
        let p = p.expect("valid parameters");
        let kc = constants::kernel_constants(&p);
        let q_bar = constants::quadrature_oracle(&p, Kernel::MBar, 0.0, 1e-12).unwrap();
        let q_under = constants::quadrature_oracle(&p, Kernel::MUnder, 0.0, 1e-12).unwrap();
        let identity = q_bar - q_under - p.signal_imbalance();
        println!(
            "{label:<20} {:>12.8} {:>12.8} {:>12.8} {:>12.2e} {:>10}",
            kc.m_bar,
            kc.m_under,
            kc.k,
            identity,
            kc.crossing.map_or("absent".to_string(), |s| format!("{s:.4}")),
        );

        let mu = 0.4;
        let rc = constants::rate_constants(&p, mu).unwrap();
        println!(
            "{:<20} mu = {mu}: r = {:.6}, m_bar_tm = {:.8}, m_under_tm = {:.8}, k_tm = {:.8}",
            "", rc.r, rc.m_bar_tm, rc.m_under_tm, rc.k_tm
        );
    }
}
