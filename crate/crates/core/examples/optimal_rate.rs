//! Nonmonotone crossover density, the optimal annealing rate and comparisons
//! with coherent (Kibble-Zurek) and classical (Glauber) annealing.
//!
//! Run: `cargo run --release --example optimal_rate`

use qa_kinetics::annealing_analysis::{
    default_scaled_grid, glauber_time, kz_comparison, optimum, scaled_curves, x_opt, RateModel, RateSource,
};
use qa_kinetics::chain_model::ModelParams;

fn main() -> qa_kinetics::Result<()> {
    let curves = scaled_curves(&[8.0, 9.0, 10.0, 11.0], &default_scaled_grid(400), None);
    println!("{:>6} {:>12} {:>10} {:>10}", "ln mu", "v~ at min", "x* at min", "x_opt");
    for c in &curves {
        let m = c.minimum().expect("non-empty curve");
        println!("{:6.1} {:12.4e} {:10.4} {:10.4}", c.log_mu, m.v_scaled, m.x_star, x_opt(c.log_mu.exp()));
    }

    for (alpha, beta) in [(0.06, 25.0), (0.03, 25.0), (0.06, 40.0)] {
        let rates = RateModel::new(RateSource::Asymptotic, &ModelParams::new(alpha, beta))?;
        let o = optimum(&rates, 1.0)?;
        let kz = kz_comparison(o.v_opt, o.n_opt)?;
        println!("\nalpha = {alpha}, beta = {beta}: mu = {:.1}, x_opt = {:.3}", o.mu, o.x_opt);
        println!("  v_opt = {:.3e} (closed form {:.3e}, numeric minimum {:.3e})", o.v_opt, o.v_opt_closed, o.v_numeric);
        println!("  n_opt = {:.3e} (numeric {:.3e})", o.n_opt, o.n_numeric);
        println!("  v_opt / v_KZ = {:.3}, t_class(w_G = 1) v_opt = {:.3}", kz.ratio, glauber_time(o.n_opt, 1.0)? * o.v_opt);
    }
    Ok(())
}
