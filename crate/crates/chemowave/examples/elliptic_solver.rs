//! Convergence study of the quasi-static chemical solve against the
//! exponential eigenfunction, plus a pointwise comparison with the
//! Green's-function convolution oracle.
//!
//! ```sh
//! cargo run --example elliptic_solver
//! ```

use chemowave::elliptic::{self, ExtendedField};
use chemowave::{Field, Grid1D, ModelParams, Species};

fn main() {
    let p = ModelParams::new(1.0, 0.1, 0.1, 4.0, 4.0, 1.0, 1.0, 1.0, 1.0).unwrap();
    let mu = 0.25;
    let c = mu + p.a / mu;
    let denom = p.lambda1 + p.tau * mu * c - mu * mu;

    println!("nodes,h,relative_error");
    let mut prev: Option<(f64, f64)> = None;
    for n in [512usize, 1024, 2048, 4096, 8192] {
        let grid = Grid1D::new(-20.0, 40.0, n).unwrap();
        let u = Field::from_fn(grid, |x| (-mu * x).exp()).unwrap();
        let v = elliptic::solve_v(&p, c, &u, Species::Attractant, mu);
        let mut worst = 0.0f64;
        for (i, x) in grid.nodes().enumerate() {
            if !(-10.0..=39.5).contains(&x) {
                continue;
            }
            let exact = p.mu1 * (-mu * x).exp() / denom;
            worst = worst.max((v.values()[i] / exact - 1.0).abs());
        }
        let order = prev
            .map(|(e, h)| (e / worst).ln() / (h / grid.h()).ln())
            .map_or(String::new(), |o| format!("  (order {o:.3})"));
        println!("{n},{:.6e},{worst:.3e}{order}", grid.h());
        prev = Some((worst, grid.h()));
    }

    // Independent route: the heat-kernel convolution at a few probe points.
    let grid = Grid1D::new(-20.0, 40.0, 4096).unwrap();
    let u = Field::from_fn(grid, |x| (1.0f64).min((-mu * x).exp()) * (0.7 + 0.3 * (0.4 * x).sin()))
        .unwrap();
    let v = elliptic::solve_v(&p, c, &u, Species::Attractant, mu);
    let ext = ExtendedField {
        field: &u,
        decay_mu: mu,
    };
    println!("\nx,fd_solve,greens_oracle,gap");
    for k in 0..6 {
        let x = -5.0 + 6.0 * k as f64;
        let oracle = elliptic::greens_quadrature_v(&p, c, &ext, Species::Attractant, x, 1e-8)
            .unwrap();
        let fd = v.interp(x);
        println!("{x:.1},{fd:.10},{oracle:.10},{:.2e}", (fd - oracle).abs());
    }
}
