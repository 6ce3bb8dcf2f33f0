//! Free-fermion band of the chain and its thermal excitation density.
//!
//! Run: `cargo run --release --example band_structure`

use qa_kinetics::chain_model::{
    bogoliubov_angle, dispersion, gap, thermal_density_asymptotic, thermal_density_exact, thermal_wavelength,
    MomentumGrid,
};

fn main() -> qa_kinetics::Result<()> {
    let beta = 25.0;
    let grid = MomentumGrid::new(1024)?;

    println!("# dispersion and Bogoliubov angle at g = 0.8");
    println!("{:>8} {:>12} {:>12}", "k", "eps_k", "theta_k");
    for k in [0.0, 0.1, 0.5, 1.0, 2.0, std::f64::consts::PI] {
        println!("{k:8.4} {:12.6} {:12.6}", dispersion(0.8, k), bogoliubov_angle(0.8, k)?);
    }

    println!("\n# thermal density, beta = {beta}");
    println!("{:>6} {:>8} {:>12} {:>12} {:>8} {:>10}", "g", "gap", "n_th exact", "asymptotic", "ratio", "lambda_T");
    for g in [0.5, 0.6, 0.7, 0.8, 0.85, 0.9] {
        let exact = thermal_density_exact(g, beta, &grid);
        let asym = thermal_density_asymptotic(g, beta);
        println!(
            "{g:6.2} {:8.4} {exact:12.4e} {asym:12.4e} {:8.4} {:10.3}",
            gap(g),
            asym / exact,
            thermal_wavelength(g, beta)?
        );
    }
    Ok(())
}
