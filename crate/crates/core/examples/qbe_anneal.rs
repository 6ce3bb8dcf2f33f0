//! Momentum-resolved Boltzmann evolution through the critical point and the
//! freeze-out of the excitation density.
//!
//! Run: `cargo run --release --example qbe_anneal [n_sites]`

use qa_kinetics::annealing_analysis::{solve_g0, RateModel, RateSource};
use qa_kinetics::boltzmann_solver::{evolve, EvolveOptions, PopulationState, Schedule};
use qa_kinetics::chain_model::{ModelParams, MomentumGrid};

fn main() -> qa_kinetics::Result<()> {
    let n_sites = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(256);
    let params = ModelParams::new(0.06, 25.0).with_sites(n_sites);
    let grid = MomentumGrid::new(n_sites)?;
    let schedule = Schedule::new(1.1, 2.85e-7, 0.6)?;
    let start = PopulationState::fermi_dirac(schedule.g_initial, params.beta, &grid, 0.0);
    let opts = EvolveOptions {
        output_stride: 200,
        rtol: 1e-6,
        atol: 1e-12,
    };
    let out = evolve(&start, &schedule, &params, &opts)?;

    println!("{:>8} {:>12} {:>12} {:>8}", "g", "<n>", "n_th", "ratio");
    for s in &out.trajectory.samples {
        println!("{:8.4} {:12.4e} {:12.4e} {:8.3}", s.g, s.n_mean, s.n_th, s.n_mean / s.n_th);
    }
    let g0 = solve_g0(schedule.v, &RateModel::new(RateSource::Exact, &params)?)?;
    println!("\nsteps {} (rejected {}), symmetric sector {}", out.stats.accepted, out.stats.rejected, out.stats.reduced_sector);
    println!("departure from 2 n_th at g = {:.4}, freeze-out g0 = {g0:.4}", out.trajectory.departure(2.0).unwrap_or(f64::NAN));
    Ok(())
}
