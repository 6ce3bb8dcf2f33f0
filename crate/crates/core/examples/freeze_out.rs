//! Reduced generation-recombination kinetics along one anneal: freeze-out,
//! the logarithmic tail and the diffusion-limited crossover.
//!
//! Run: `cargo run --release --example freeze_out [v]`

use qa_kinetics::annealing_analysis::{integrate_density, log_law_density, solve_crossover, RateModel, RateSource};
use qa_kinetics::boltzmann_solver::Schedule;
use qa_kinetics::chain_model::ModelParams;

fn main() -> qa_kinetics::Result<()> {
    let v = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2.85e-7);
    let params = ModelParams::new(0.06, 25.0);
    let rates = RateModel::new(RateSource::Asymptotic, &params)?;
    let run = integrate_density(&Schedule::new(1.1, v, 0.2)?, &rates, 1.0)?;
    let c = solve_crossover(v, &rates, 1.0)?;

    println!("v = {v:e}: g0 = {:.4}, g* = {:.4}, n* = {:.3e}, valid = {}", c.g0, c.g_star, c.n_star, c.valid);
    if let Some(x) = run.crossing {
        println!("trajectory meets n = k w/D at g = {:.4}, n = {:.3e}", x.g, x.n);
    }
    println!("\n{:>7} {:>12} {:>12} {:>12}", "g", "<n>", "n_th", "log law");
    for g in [0.95, 0.9, 0.85, 0.8, 0.77, 0.75, 0.72, 0.7, 0.65, 0.6, 0.5, 0.4, 0.3, 0.2] {
        let n = run.trajectory.n_at(g).unwrap_or(f64::NAN);
        let tail = if g < c.g0 { log_law_density(g, c.g0, &rates)? } else { f64::NAN };
        println!("{g:7.3} {n:12.4e} {:12.4e} {tail:12.4e}", rates.n_th(g)?);
    }
    Ok(())
}
