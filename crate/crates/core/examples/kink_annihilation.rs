//! Lattice Monte Carlo of A + A -> 0: the classical t^{-1/2} law, and the frozen
//! plateau when diffusion decays in time, compared with the touching criterion.
//!
//! Run: `cargo run --release --example kink_annihilation`

use qa_kinetics::annealing_analysis::glauber_time;
use qa_kinetics::stochastic_lab::{
    glauber_kink_mc, kmc_time_dependent, log_times, touching_crossover, KmcSpec, RateScheduleHooks,
    CONTACT_CALIBRATION,
};

fn main() -> qa_kinetics::Result<()> {
    let spec = KmcSpec {
        length: 4096,
        initial_density: 0.5,
        seed: 2024,
        replicas: 32,
        horizon: 1000.0,
        times: log_times(0.1, 1000.0, 50),
    };
    let run = glauber_kink_mc(&spec, 1.0, 0.05)?;
    println!(
        "Glauber kinks: exponent {:.3}, time to n = 0.05: {:.2} (8 pi w_G n^2)^-1 = {:.2}",
        run.series.decay_exponent(10.0, 1000.0).unwrap_or(f64::NAN),
        run.time_to_target.unwrap_or(f64::NAN),
        glauber_time(0.05, 1.0)?
    );

    let (hop, t0, react, n0) = (20.0, 50.0, 0.02, 0.1);
    let hooks = RateScheduleHooks::power_decay(hop, t0, react);
    let horizon = 2e5;
    let spec = KmcSpec { initial_density: n0, horizon, times: log_times(0.1, horizon, 40), ..spec };
    let s = kmc_time_dependent(&spec, &hooks)?;
    println!("\ndecaying diffusion, D(t) = {}(1 + t/{t0})^-3/2:", hop / 2.0);
    for j in (0..s.times.len()).step_by(4) {
        println!("  t = {:10.3e}  n = {:.4e} +- {:.1e}", s.times[j], s.mean[j], s.stderr[j]);
    }
    let law = move |t: f64| n0 / (1.0 + CONTACT_CALIBRATION * react * n0 * t);
    let touch = touching_crossover(&hooks, law, 0.01, horizon)?;
    println!(
        "plateau {:.4e}, touching n* = {:.4e} at t* = {:.1}, ratio {:.3}",
        s.mean.last().unwrap(),
        touch.n_star,
        touch.t_star,
        s.mean.last().unwrap() / touch.n_star
    );
    Ok(())
}
