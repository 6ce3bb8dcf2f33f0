//! Second-order polaronic shift of the fermion band in narrow- and broadband
//! baths.
//!
//! Run: `cargo run --release --example band_renorm`

use qa_kinetics::chain_model::{ModelParams, MomentumGrid};
use qa_kinetics::spectrum_renorm::{ising_renorm_factor, linear_spectrum_fit, long_wavelength_shift};

fn main() -> qa_kinetics::Result<()> {
    let grid = MomentumGrid::new(512)?;
    let alpha = 0.05;

    println!("narrow band, g = 1.01: Sigma_0 / (alpha omega_c^2)");
    for omega_c in [0.4, 0.2, 0.1, 0.05] {
        let p = ModelParams { alpha, omega_c, ..ModelParams::new(alpha, 25.0) };
        let s = long_wavelength_shift(1.01, &p, &grid)?;
        println!("  omega_c = {omega_c:5.2}: {:.4}", s.sigma / (alpha * omega_c * omega_c));
    }

    println!("\nbroadband, omega_c = 100, g = 0.95: Sigma_0 against the cutoff");
    for cutoff in [5.0, 10.0, 20.0] {
        let p = ModelParams { alpha, omega_c: 100.0, omega_cutoff: cutoff, ..ModelParams::new(alpha, 25.0) };
        let s = long_wavelength_shift(0.95, &p, &grid)?;
        let w = ising_renorm_factor(alpha, p.omega_c, cutoff);
        println!("  omega_cutoff = {cutoff:5.1}: Sigma_0 = {:.5}, J factor = {:.4}", s.sigma, w.factor);
    }

    let p = ModelParams { alpha, omega_c: 0.2, ..ModelParams::new(alpha, 25.0) };
    let fit = linear_spectrum_fit(0.95, &p, &grid, 0.3)?;
    println!(
        "\nlinear fit at g = 0.95, eps < 0.3: Sigma_0 = {:.4e}, C = {:.4e}, residual {:.1}% over {} modes",
        fit.fit.sigma0,
        fit.fit.slope_c,
        100.0 * fit.fit.residual,
        fit.fit.points
    );
    Ok(())
}
