//! Bath-induced rates: intraband relaxation, pair recombination, the
//! intraband kernel spectrum and the diffusion coefficient.
//!
//! Run: `cargo run --release --example bath_rates`

use qa_kinetics::bath_rates::{
    diffusion_closed, diffusion_quadrature, kernel_spectrum, momentum_relaxation_rate, recombination_rate_asymptotic,
    recombination_rate_exact, DiffusionTol, TransitionRateTable, KERNEL_K_MAX,
};
use qa_kinetics::chain_model::{ModelParams, MomentumGrid};

fn main() -> qa_kinetics::Result<()> {
    let params = ModelParams::new(0.06, 25.0);
    let grid = MomentumGrid::new(params.n_sites)?;

    let table = TransitionRateTable::new(0.8, &params, &grid);
    let n = grid.len();
    println!("W+- near k = 0, first row: {:.4e} {:.4e} {:.4e}", table.plus_minus[(n / 2, n / 2)], table.plus_minus[(n / 2, n / 2 + 1)], table.plus_minus[(n / 2, n / 2 + 2)]);

    println!("\n{:>6} {:>12} {:>12} {:>12} {:>12} {:>8}", "g", "tau_r^-1", "w exact", "w asym", "D closed", "c_D");
    for g in [0.5, 0.7, 0.8, 0.9, 0.95] {
        let d = diffusion_quadrature(g, &params, DiffusionTol::default())?;
        println!(
            "{g:6.2} {:12.4e} {:12.4e} {:12.4e} {:12.4e} {:8.4}",
            momentum_relaxation_rate(g, &params)?,
            recombination_rate_exact(g, &params, &grid),
            recombination_rate_asymptotic(g, &params),
            diffusion_closed(g, &params)?,
            d.c_d
        );
    }

    let spec = kernel_spectrum(400, KERNEL_K_MAX)?;
    println!("\nkernel spectrum (units of tau_r^-1): e0 = {:.2e}, e1 = {:.4}, e2 = {:.4}", spec.e0(), spec.e1(), spec.eigenvalues[2]);
    Ok(())
}
