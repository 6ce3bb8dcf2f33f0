//! Reduced generation-recombination kinetics ⟨ṅ⟩ = −w(⟨n⟩² − n_th²) along a
//! linear schedule, the freeze-out field g₀, the crossover to diffusion-limited
//! recombination and the optimal annealing rate.
//!
//! Scaled variables: x = β(1−g), ṽ = β³v/(4√(2π)α), ñ = c_Dβ³n/(8πkα²). In the
//! semiclassical limit the crossover condition depends on (α, β, k, c_D) only
//! through μ = c_Dβ²/(8α²k√(2π³)):
//!
//!   μ x₀^{1/2} e^{−x₀} = x*^{3/2} (x* − x₀).

use std::f64::consts::PI;
use std::str::FromStr;
use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::bath_rates::{diffusion_closed_with, recombination_rate_exact, semiclassical_recombination, C_D_REFERENCE};
use crate::boltzmann_solver::Schedule;
use crate::chain_model::{semiclassical_density, thermal_density_exact, ModelParams, MomentumGrid};
use crate::numerics::{bisect, golden_min, Rosenbrock, StepControl, StiffSystem};
use crate::{Error, Result, SEMICLASSICAL_THRESHOLD};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensitySample {
    pub t: f64,
    pub g: f64,
    pub n_mean: f64,
    pub n_th: f64,
}

/// Point where the density trajectory meets n = k w(g)/D(g).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingEvent {
    pub t: f64,
    pub g: f64,
    pub n: f64,
}

#[derive(Debug, Clone)]
pub struct DensityTrajectory {
    pub samples: Vec<DensitySample>,
    pub schedule: Schedule,
}

impl DensityTrajectory {
    /// Linear interpolation of ⟨n⟩ in g.
    pub fn n_at(&self, g: f64) -> Option<f64> {
        self.samples.windows(2).find_map(|w| {
            let (a, b) = (w[0], w[1]);
            (g <= a.g && g >= b.g).then(|| a.n_mean + (b.n_mean - a.n_mean) * (g - a.g) / (b.g - a.g))
        })
    }

    /// First g (scanning in time) at which ⟨n⟩ ≥ factor·n_th.
    pub fn departure(&self, factor: f64) -> Option<f64> {
        self.samples.windows(2).find_map(|w| {
            let ra = w[0].n_mean / w[0].n_th - factor;
            let rb = w[1].n_mean / w[1].n_th - factor;
            (ra < 0.0 && rb >= 0.0).then(|| w[0].g + (w[1].g - w[0].g) * ra / (ra - rb))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RateSource {
    /// Band sums on the momentum grid.
    Exact,
    /// Semiclassical closed forms, valid for β(1−g) ≫ 1.
    #[default]
    Asymptotic,
}

impl FromStr for RateSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(RateSource::Exact),
            "asymptotic" => Ok(RateSource::Asymptotic),
            _ => Err(Error::Config(format!("unknown rate source {s:?} (exact|asymptotic)"))),
        }
    }
}

impl std::fmt::Display for RateSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RateSource::Exact => "exact",
            RateSource::Asymptotic => "asymptotic",
        })
    }
}

/// Mesh spacing in g of the lazily filled table of exact band sums.
pub const EXACT_MESH: f64 = 0.002;

/// Recombination rate, thermal density and diffusion coefficient as functions of g.
pub struct RateModel {
    pub source: RateSource,
    pub params: ModelParams,
    pub c_d: f64,
    grid: Option<MomentumGrid>,
    /// (ln w, ln n_th) at g = m·EXACT_MESH.
    nodes: Vec<OnceLock<(f64, f64)>>,
}

impl RateModel {
    pub fn new(source: RateSource, params: &ModelParams) -> Result<Self> {
        params.validate()?;
        let grid = match source {
            RateSource::Exact => Some(MomentumGrid::new(params.n_sites)?),
            RateSource::Asymptotic => None,
        };
        let n_nodes = (2.0 / EXACT_MESH) as usize + 2;
        Ok(RateModel {
            source,
            params: *params,
            c_d: C_D_REFERENCE,
            grid,
            nodes: (0..n_nodes).map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn with_c_d(mut self, c_d: f64) -> Self {
        self.c_d = c_d;
        self
    }

    pub fn beta(&self) -> f64 {
        self.params.beta
    }

    fn node(&self, m: usize) -> (f64, f64) {
        *self.nodes[m].get_or_init(|| {
            let g = m as f64 * EXACT_MESH;
            let grid = self.grid.as_ref().unwrap();
            let w = recombination_rate_exact(g, &self.params, grid);
            let n = thermal_density_exact(g, self.params.beta, grid);
            (w.ln(), n.ln())
        })
    }

    fn interpolate(&self, g: f64) -> (f64, f64) {
        let s = g / EXACT_MESH;
        let m = (s.floor() as usize).min(self.nodes.len() - 2);
        let u = s - m as f64;
        let (a, b) = (self.node(m), self.node(m + 1));
        (a.0 + u * (b.0 - a.0), a.1 + u * (b.1 - a.1))
    }

    fn check(&self, g: f64) -> Result<()> {
        let ok = match self.source {
            RateSource::Exact => g >= EXACT_MESH && g < 2.0,
            RateSource::Asymptotic => g > 0.0 && g < 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("{} rates undefined at g = {g}", self.source)))
        }
    }

    /// Recombination rate w(g).
    pub fn w(&self, g: f64) -> Result<f64> {
        self.check(g)?;
        Ok(match self.source {
            RateSource::Exact => self.interpolate(g).0.exp(),
            RateSource::Asymptotic => semiclassical_recombination(g, &self.params),
        })
    }

    /// Thermal density n_th(g).
    pub fn n_th(&self, g: f64) -> Result<f64> {
        self.check(g)?;
        Ok(match self.source {
            RateSource::Exact => self.interpolate(g).1.exp(),
            RateSource::Asymptotic => semiclassical_density(g, self.params.beta),
        })
    }

    /// Diffusion coefficient D(g), closed form for both sources.
    pub fn diffusion(&self, g: f64) -> Result<f64> {
        diffusion_closed_with(g, &self.params, self.c_d)
    }

    /// μ = c_Dβ²/(8α²k√(2π³)).
    pub fn mu(&self, k_order: f64) -> f64 {
        let p = &self.params;
        self.c_d * p.beta * p.beta / (8.0 * p.alpha * p.alpha * k_order * (2.0 * PI.powi(3)).sqrt())
    }

    /// Largest g at which a trajectory may start.
    pub fn g_max(&self) -> f64 {
        match self.source {
            RateSource::Exact => 2.0 - EXACT_MESH,
            RateSource::Asymptotic => 1.0 - 1.0 / self.params.beta,
        }
    }
}

struct ReducedSystem<'a> {
    rates: &'a RateModel,
    schedule: Schedule,
}

impl ReducedSystem<'_> {
    fn coefficients(&self, t: f64) -> (f64, f64) {
        let g = self.schedule.g_at(t).max(EXACT_MESH);
        (
            self.rates.w(g).unwrap_or(f64::NAN),
            self.rates.n_th(g).unwrap_or(f64::NAN),
        )
    }
}

impl StiffSystem for ReducedSystem<'_> {
    fn dim(&self) -> usize {
        1
    }

    fn rhs(&mut self, t: f64, y: &[f64], dy: &mut [f64]) {
        let (w, n_th) = self.coefficients(t);
        dy[0] = -w * (y[0] * y[0] - n_th * n_th);
    }

    fn jacobian(&mut self, t: f64, y: &[f64], jac: &mut DMatrix<f64>) {
        let (w, _) = self.coefficients(t);
        jac[(0, 0)] = -2.0 * w * y[0];
    }
}

#[derive(Debug, Clone)]
pub struct ReducedRun {
    pub trajectory: DensityTrajectory,
    /// First meeting with n = k w/D, located on the continuous solution.
    pub crossing: Option<CrossingEvent>,
}

/// Integrates the reduced equation from n = n_th at the start of the schedule.
///
/// With the asymptotic source the start is moved to g = 1 − 1/β if the schedule
/// begins closer to (or beyond) the critical point.
pub fn integrate_density(schedule: &Schedule, rates: &RateModel, k_order: f64) -> Result<ReducedRun> {
    schedule.validate()?;
    let g_start = schedule.g_initial.min(rates.g_max());
    if g_start <= schedule.g_final {
        return Err(Error::Config(format!(
            "schedule ends at g = {} above the first usable field {g_start}",
            schedule.g_final
        )));
    }
    let beta = rates.beta();
    let t0 = schedule.t_at(g_start);
    let t_end = schedule.duration();
    let n0 = rates.n_th(g_start)?;
    let mut sys = ReducedSystem {
        rates,
        schedule: *schedule,
    };
    let mut samples = vec![DensitySample {
        t: t0,
        g: g_start,
        n_mean: n0,
        n_th: n0,
    }];
    // n − k w/D; positive before the crossover.
    let gap = |g: f64, n: f64| -> Option<f64> {
        if g >= 1.0 {
            return None;
        }
        Some(n - k_order * rates.w(g).ok()? / rates.diffusion(g).ok()?)
    };
    let mut crossing = None;
    let mut last_gap = gap(g_start, n0);
    let solver = Rosenbrock::with_tol(1e-10, 1e-12 * n0);
    let mut failure = None;
    solver.integrate(&mut sys, t0, &[n0], t_end, |info| {
        let g = schedule.g_at(info.t);
        let n = info.y[0];
        let n_th = match rates.n_th(g.max(EXACT_MESH)) {
            Ok(v) => v,
            Err(e) => {
                failure = Some(e);
                return StepControl::Stop;
            }
        };
        samples.push(DensitySample { t: info.t, g, n_mean: n, n_th });
        let now = gap(g, n);
        if crossing.is_none() {
            if let (Some(a), Some(b)) = (last_gap, now) {
                if a > 0.0 && b <= 0.0 {
                    let f = |s: f64| gap(schedule.g_at(s), info.hermite(0, s)).unwrap_or(f64::NAN);
                    if let Ok(ts) = bisect(f, info.t_prev, info.t, 0.0) {
                        crossing = Some(CrossingEvent {
                            t: ts,
                            g: schedule.g_at(ts),
                            n: info.hermite(0, ts),
                        });
                    }
                }
            }
        }
        last_gap = now;
        StepControl::Continue
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    if beta * (1.0 - schedule.g_final) < SEMICLASSICAL_THRESHOLD && rates.source == RateSource::Asymptotic {
        log::warn!("schedule ends inside the critical window where the asymptotic rates are inaccurate");
    }
    Ok(ReducedRun {
        trajectory: DensityTrajectory {
            samples,
            schedule: *schedule,
        },
        crossing,
    })
}

/// Freeze-out field: root of β⁻¹ w(g₀) n_th(g₀) = v.
pub fn solve_g0(v: f64, rates: &RateModel) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::Domain(format!("annealing rate must be positive, got {v}")));
    }
    let beta = rates.beta();
    let lo = (2.0 / beta).max(0.02);
    let hi = 1.0 - 0.5 / beta;
    let residual = |g: f64| match (rates.w(g), rates.n_th(g)) {
        (Ok(w), Ok(n)) => (w * n / beta).ln() - v.ln(),
        _ => f64::NAN,
    };
    bisect(residual, lo, hi, 0.0).map_err(|e| {
        Error::NoRoot(format!(
            "freeze-out equation for v = {v:e} on g in [{lo}, {hi}] (residuals {:e}, {:e}): {e}",
            residual(lo),
            residual(hi)
        ))
    })
}

/// Frozen density after falling out of equilibrium at g₀:
/// n(g) = n_th(g₀) / (β g₀ ln(g₀/g)).
pub fn log_law_density(g: f64, g0: f64, rates: &RateModel) -> Result<f64> {
    if !(g > 0.0 && g < g0) {
        return Err(Error::Domain(format!("log law needs 0 < g < g0 = {g0}, got {g}")));
    }
    let beta = rates.beta();
    if beta * (g0 - g) < SEMICLASSICAL_THRESHOLD {
        log::warn!("log law used at beta(g0 - g) = {:.3}, before the density has frozen", beta * (g0 - g));
    }
    Ok(rates.n_th(g0)? / (beta * g0 * (g0 / g).ln()))
}

/// Right side minus left side of the scaled crossover equation.
pub fn crossover_residual(mu: f64, x0: f64, x_star: f64) -> f64 {
    x_star.powf(1.5) * (x_star - x0) - mu * x0.sqrt() * (-x0).exp()
}

/// Unique root x* > x₀ of the scaled crossover equation.
pub fn solve_x_star(mu: f64, x0: f64) -> Result<f64> {
    let (lo, hi) = (x0 + 1e-6, x0 + 50.0);
    let f = |x: f64| crossover_residual(mu, x0, x);
    if f(lo) >= 0.0 || f(hi) <= 0.0 {
        return Err(Error::NoCrossover(format!(
            "no x* in [x0 + 1e-6, x0 + 50] for mu = {mu:.6e}, x0 = {x0:.6}"
        )));
    }
    bisect(f, lo, hi, 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossoverReport {
    pub v: f64,
    pub g0: f64,
    pub g_star: f64,
    pub x0: f64,
    pub x_star: f64,
    /// n* = k w(g*)/D(g*).
    pub n_star: f64,
    /// The frozen log-law density at g*.
    pub n_star_frozen: f64,
    pub mu: f64,
    pub k_order: f64,
    /// β > x* and x* − x₀ ≥ 1.
    pub valid: bool,
    /// Whether the two n* routes agree within 1 + 4x*/β.
    pub routes_agree: bool,
}

/// Falling out of equilibrium at g₀, then crossover to diffusion-limited
/// recombination at g*.
pub fn solve_crossover(v: f64, rates: &RateModel, k_order: f64) -> Result<CrossoverReport> {
    if !(k_order > 0.0) {
        return Err(Error::Config(format!("k must be positive, got {k_order}")));
    }
    let beta = rates.beta();
    let mu = rates.mu(k_order);
    if mu < 100.0 {
        log::warn!("mu = {mu:.3} is not large; the crossover asymptotics are unreliable");
    }
    let g0 = solve_g0(v, rates)?;
    let x0 = beta * (1.0 - g0);
    let x_star = solve_x_star(mu, x0)?;
    let g_star = 1.0 - x_star / beta;
    if g_star <= 0.0 {
        return Err(Error::NoCrossover(format!("x* = {x_star} exceeds beta = {beta}")));
    }
    let n_star = k_order * rates.w(g_star)? / rates.diffusion(g_star)?;
    let n_star_frozen = rates.n_th(g0)? / (beta * g0 * (g0 / g_star).ln());
    let tol = 1.0 + 4.0 * x_star / beta;
    let ratio = n_star / n_star_frozen;
    let routes_agree = ratio < tol && ratio > 1.0 / tol;
    if !routes_agree {
        log::warn!("crossover routes disagree: n*(rate) / n*(frozen) = {ratio:.4}, tolerance {tol:.4}");
    }
    Ok(CrossoverReport {
        v,
        g0,
        g_star,
        x0,
        x_star,
        n_star,
        n_star_frozen,
        mu,
        k_order,
        valid: beta > x_star && x_star - x0 >= 1.0,
        routes_agree,
    })
}

/// x_opt = ln μ + 1 − ln ln μ.
pub fn x_opt(mu: f64) -> f64 {
    let l = mu.ln();
    l + 1.0 - l.ln()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimumReport {
    pub mu: f64,
    pub k_order: f64,
    pub x_opt: f64,
    pub n_opt: f64,
    /// β⁻¹w(g₀)n_th(g₀) at x₀ = x_opt − 1.
    pub v_opt: f64,
    /// (64kπ²α³/c_Dβ⁵) [ln(β²/α²)]^{1/2}.
    pub v_opt_closed: f64,
    /// Minimizer of the computed n*(v).
    pub v_numeric: f64,
    pub n_numeric: f64,
    /// x* at the numerical minimum.
    pub x_numeric: f64,
}

/// Optimal annealing rate and the minimal crossover density.
pub fn optimum(rates: &RateModel, k_order: f64) -> Result<OptimumReport> {
    let p = rates.params;
    let (alpha, beta) = (p.alpha, p.beta);
    let mu = rates.mu(k_order);
    if mu <= std::f64::consts::E {
        return Err(Error::Domain(format!("optimum needs mu >> 1, got {mu}")));
    }
    let x_opt = x_opt(mu);
    if beta <= x_opt {
        log::warn!("beta = {beta} <= x_opt = {x_opt:.3}: optimum lies outside the low-temperature regime");
    }
    let g0 = 1.0 - (x_opt - 1.0) / beta;
    let v_opt = rates.w(g0)? * rates.n_th(g0)? / beta;
    let n_opt = 8.0 * PI * k_order * alpha * alpha / (rates.c_d * beta.powi(3)) * x_opt.powf(1.5);
    let v_opt_closed = 64.0 * k_order * PI * PI * alpha.powi(3) / (rates.c_d * beta.powi(5))
        * (beta * beta / (alpha * alpha)).ln().sqrt();

    // Bracket ln v between freeze-out at x₀ = x_opt + 2 and x₀ = x_opt − 3.
    let v_of_x0 = |x0: f64| -> Result<f64> {
        let g = 1.0 - x0 / beta;
        Ok(rates.w(g)? * rates.n_th(g)? / beta)
    };
    let lo = v_of_x0(x_opt + 2.0)?.ln();
    let hi = v_of_x0((x_opt - 3.0).max(0.75))?.ln();
    let n_of = |lnv: f64| {
        solve_crossover(lnv.exp(), rates, k_order)
            .map(|r| r.n_star)
            .unwrap_or(f64::INFINITY)
    };
    let (lnv, _) = golden_min(|s| n_of(s).ln(), lo, hi, 1e-9);
    let best = solve_crossover(lnv.exp(), rates, k_order)?;
    Ok(OptimumReport {
        mu,
        k_order,
        x_opt,
        n_opt,
        v_opt,
        v_opt_closed,
        v_numeric: best.v,
        n_numeric: best.n_star,
        x_numeric: best.x_star,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledPoint {
    pub v_scaled: f64,
    pub n_scaled: f64,
    pub x0: f64,
    pub x_star: f64,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaledCurve {
    pub log_mu: f64,
    pub points: Vec<ScaledPoint>,
}

impl ScaledCurve {
    /// Indices of interior local minima of ñ*.
    pub fn interior_minima(&self) -> Vec<usize> {
        let p = &self.points;
        (1..p.len().saturating_sub(1))
            .filter(|&i| p[i].n_scaled < p[i - 1].n_scaled && p[i].n_scaled <= p[i + 1].n_scaled)
            .collect()
    }

    pub fn minimum(&self) -> Option<&ScaledPoint> {
        self.points.iter().min_by(|a, b| a.n_scaled.total_cmp(&b.n_scaled))
    }
}

/// Largest scaled rate with a freeze-out root: max of √x e^{−x}, at x = 1/2.
pub fn max_scaled_rate() -> f64 {
    (0.5f64).sqrt() * (-0.5f64).exp()
}

/// x₀ > 1/2 with √x₀ e^{−x₀} = ṽ.
pub fn scaled_x0(v_scaled: f64) -> Result<f64> {
    if !(v_scaled > 0.0 && v_scaled < max_scaled_rate()) {
        return Err(Error::Domain(format!("scaled rate {v_scaled} outside (0, {})", max_scaled_rate())));
    }
    bisect(|x| x.sqrt() * (-x).exp() - v_scaled, 0.5, 800.0, 0.0)
}

/// Log-spaced scaled rates covering the minima for ln μ between about 4 and 20.
pub fn default_scaled_grid(points: usize) -> Vec<f64> {
    let (a, b) = (-12.0f64, -0.5f64);
    (0..points)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (points - 1) as f64))
        .collect()
}

/// Scaled crossover density ñ* = x*^{3/2} against scaled rate ṽ = √x₀ e^{−x₀},
/// one curve per ln μ. Points with x* − x₀ < 1, or x* ≥ β when `beta` is given,
/// are flagged invalid.
pub fn scaled_curves(log_mu_values: &[f64], v_scaled: &[f64], beta: Option<f64>) -> Vec<ScaledCurve> {
    log_mu_values
        .iter()
        .map(|&log_mu| {
            let mu = log_mu.exp();
            let points = v_scaled
                .iter()
                .filter_map(|&v| {
                    let x0 = scaled_x0(v).ok()?;
                    let x_star = solve_x_star(mu, x0).ok()?;
                    let valid = x_star - x0 >= 1.0 && beta.is_none_or(|b| b > x_star);
                    Some(ScaledPoint {
                        v_scaled: v,
                        n_scaled: x_star.powf(1.5),
                        x0,
                        x_star,
                        valid,
                    })
                })
                .collect();
            ScaledCurve { log_mu, points }
        })
        .collect()
}

/// Kibble-Zurek rate producing density n: v_KZ = 8πn².
pub fn kz_rate(n: f64) -> f64 {
    8.0 * PI * n * n
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KzComparison {
    pub n_target: f64,
    pub v_kz: f64,
    pub v_opt: f64,
    pub ratio: f64,
}

/// Compares the optimal rate with the coherent rate reaching the same density.
pub fn kz_comparison(v_opt: f64, n_target: f64) -> Result<KzComparison> {
    if !(n_target > 0.0 && n_target < 1.0) {
        return Err(Error::Domain(format!("target density must lie in (0, 1), got {n_target}")));
    }
    let v_kz = kz_rate(n_target);
    Ok(KzComparison {
        n_target,
        v_kz,
        v_opt,
        ratio: v_opt / v_kz,
    })
}

/// Time for diffusing kinks with hop rate w_G to annihilate down to density n:
/// (8π w_G n²)⁻¹.
pub fn glauber_time(n: f64, w_g: f64) -> Result<f64> {
    if !(n > 0.0 && w_g > 0.0) {
        return Err(Error::Domain(format!("need n > 0 and w_G > 0, got {n}, {w_g}")));
    }
    Ok(1.0 / (8.0 * PI * w_g * n * n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain_model::kz_density;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const V_CAPTION: f64 = 2.85e-7;

    fn asym() -> RateModel {
        RateModel::new(RateSource::Asymptotic, &ModelParams::new(0.06, 25.0)).unwrap()
    }

    #[test]
    fn mu_value() {
        // Direct substitution with c_D = 0.17, k = 1.
        let direct = 0.17 * 625.0 / (8.0 * 0.0036 * (2.0 * PI.powi(3)).sqrt());
        assert_relative_eq!(asym().mu(1.0), direct, max_relative = 1e-14);
        assert_relative_eq!(direct, 468.486, max_relative = 1e-5);
    }

    #[test]
    fn exact_table_interpolation() {
        let p = ModelParams::new(0.06, 25.0).with_sites(256);
        let rates = RateModel::new(RateSource::Exact, &p).unwrap();
        let grid = MomentumGrid::new(256).unwrap();
        for &g in &[0.5013, 0.7477, 0.9031, 0.9917, 1.0009, 1.2345] {
            let w = recombination_rate_exact(g, &p, &grid);
            let n = thermal_density_exact(g, 25.0, &grid);
            assert_relative_eq!(rates.w(g).unwrap(), w, max_relative = 1e-3);
            assert_relative_eq!(rates.n_th(g).unwrap(), n, max_relative = 1e-3);
        }
    }

    #[test]
    fn g0_forward_inverse() {
        for source in [RateSource::Asymptotic, RateSource::Exact] {
            let rates = RateModel::new(source, &ModelParams::new(0.06, 25.0).with_sites(256)).unwrap();
            let v = rates.w(0.9).unwrap() * rates.n_th(0.9).unwrap() / 25.0;
            assert!((solve_g0(v, &rates).unwrap() - 0.9).abs() < 1e-9);
        }
    }

    #[test]
    fn g0_residual_and_monotonicity() {
        let rates = asym();
        let g0 = solve_g0(V_CAPTION, &rates).unwrap();
        let lhs = rates.w(g0).unwrap() * rates.n_th(g0).unwrap() / 25.0;
        assert!((lhs / V_CAPTION - 1.0).abs() < 1e-12);
        assert_relative_eq!(g0, 0.749820, epsilon = 1e-6);
        assert!(solve_g0(10.0 * V_CAPTION, &rates).unwrap() > g0);
        assert!(matches!(solve_g0(1.0, &rates), Err(Error::NoRoot(_))));
    }

    #[test]
    fn log_law_examples() {
        let rates = asym();
        let g0 = 0.8;
        let at_e = log_law_density(g0 / std::f64::consts::E, g0, &rates).unwrap();
        assert_relative_eq!(at_e, rates.n_th(g0).unwrap() / (25.0 * g0), max_relative = 1e-14);
        let half = log_law_density(0.5 * g0 / std::f64::consts::E, g0, &rates).unwrap();
        assert_relative_eq!(at_e / half, 1.0 + 2f64.ln(), max_relative = 1e-12);
        assert!(log_law_density(0.8, g0, &rates).is_err());
    }

    #[test]
    fn adiabatic_limit() {
        let rates = asym();
        let s = Schedule::new(0.95, 1e-12, 0.8).unwrap();
        let run = integrate_density(&s, &rates, 1.0).unwrap();
        for smp in &run.trajectory.samples {
            assert!((smp.n_mean / smp.n_th - 1.0).abs() < 1e-3, "{smp:?}");
        }
    }

    #[test]
    fn caption_rate_trajectory() {
        let rates = asym();
        let s = Schedule::new(1.2, V_CAPTION, 0.3).unwrap();
        let run = integrate_density(&s, &rates, 1.0).unwrap();
        let tr = &run.trajectory;
        let g0 = solve_g0(V_CAPTION, &rates).unwrap();
        // Falls out of equilibrium near g₀.
        let dep = tr.departure(2.0).unwrap();
        assert!(dep < g0 && dep > g0 - 2.0 / 25.0, "{dep} vs {g0}");
        // Frozen tail.
        for dx in [4.0, 6.0, 10.0] {
            let g = g0 - dx / 25.0;
            let n = tr.n_at(g).unwrap();
            let law = log_law_density(g, g0, &rates).unwrap();
            assert!((n / law - 1.0).abs() < 0.15, "dx {dx}: {}", n / law);
        }
        // Never below equilibrium.
        assert!(tr.samples.iter().all(|s| s.n_mean >= s.n_th * (1.0 - 1e-9)));
        // At this rate the trajectory meets k w/D before freeze-out, well above
        // the asymptotic g* (x* − x₀ < 1 here).
        let c = run.crossing.unwrap();
        let r = solve_crossover(V_CAPTION, &rates, 1.0).unwrap();
        assert!(c.g > g0 && r.g_star < g0);
        let kwd = rates.w(c.g).unwrap() / rates.diffusion(c.g).unwrap();
        assert_relative_eq!(c.n, kwd, max_relative = 1e-6);
    }

    #[test]
    fn quasistationary_deviation() {
        // Above g₀, δn ≈ −ṅ_th/(2 w n_th) with ṅ_th = −v dn_th/dg.
        let rates = asym();
        let s = Schedule::new(0.96, V_CAPTION, 0.7).unwrap();
        let tr = integrate_density(&s, &rates, 1.0).unwrap().trajectory;
        let g0 = solve_g0(V_CAPTION, &rates).unwrap();
        for g in [g0 + 0.12, g0 + 0.16] {
            let h = 1e-6;
            let dndg = (rates.n_th(g + h).unwrap() - rates.n_th(g - h).unwrap()) / (2.0 * h);
            let predicted = V_CAPTION * dndg / (2.0 * rates.w(g).unwrap() * rates.n_th(g).unwrap());
            let actual = tr.n_at(g).unwrap() - rates.n_th(g).unwrap();
            assert!((actual / predicted - 1.0).abs() < 0.2, "g {g}: {actual:e} vs {predicted:e}");
        }
    }

    #[test]
    fn crossover_at_caption_rate() {
        let rates = asym();
        let r = solve_crossover(V_CAPTION, &rates, 1.0).unwrap();
        assert!(r.g_star < r.g0 && r.g0 < 1.0);
        assert!(r.x_star > r.x0 && r.x0 > 0.0);
        let scale = r.x_star.powf(2.5);
        assert!(crossover_residual(r.mu, r.x0, r.x_star).abs() < 1e-10 * scale);
        // x* − x₀ < 1 at this rate, so the point is outside the asymptotic window.
        assert!(!r.valid);
    }

    #[test]
    fn n_star_nonmonotone() {
        let rates = asym();
        let opt = optimum(&rates, 1.0).unwrap();
        let vs: Vec<f64> = (0..21).map(|i| opt.v_numeric * 10f64.powf(-1.0 + 0.1 * i as f64)).collect();
        let ns: Vec<f64> = vs.iter().map(|&v| solve_crossover(v, &rates, 1.0).unwrap().n_star).collect();
        let imin = ns.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert!(imin > 0 && imin < 20);
        assert!(ns[..=imin].windows(2).all(|w| w[1] <= w[0]));
        assert!(ns[imin..].windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn optimum_values() {
        let rates = asym();
        let o = optimum(&rates, 1.0).unwrap();
        assert_relative_eq!(o.x_opt, 5.333134, epsilon = 1e-5);
        assert!((o.x_numeric / o.x_opt - 1.0).abs() < 0.1, "{} vs {}", o.x_numeric, o.x_opt);
        assert_relative_eq!(o.v_opt_closed, 2.85457e-7, max_relative = 1e-5);
        let n_closed = 8.0 * PI * 0.0036 / (0.17 * 25f64.powi(3)) * o.x_opt.powf(1.5);
        assert_relative_eq!(o.n_opt, n_closed, max_relative = 1e-14);
    }

    #[test]
    fn n_opt_alpha_scaling() {
        let a = optimum(&asym(), 1.0).unwrap();
        let b = optimum(&RateModel::new(RateSource::Asymptotic, &ModelParams::new(0.12, 25.0)).unwrap(), 1.0).unwrap();
        let expected = 4.0 * (b.x_opt / a.x_opt).powf(1.5);
        assert_relative_eq!(b.n_opt / a.n_opt, expected, max_relative = 1e-12);
    }

    #[test]
    fn scaled_curves_have_single_minimum() {
        let grid = default_scaled_grid(400);
        let curves = scaled_curves(&[8.0, 9.0, 10.0, 11.0], &grid, None);
        let mut last_v = f64::INFINITY;
        for c in &curves {
            assert_eq!(c.interior_minima().len(), 1, "log mu {}", c.log_mu);
            let m = c.minimum().unwrap();
            assert!((m.x_star / x_opt(c.log_mu.exp()) - 1.0).abs() < 0.1);
            assert!(m.v_scaled < last_v);
            last_v = m.v_scaled;
        }
    }

    #[test]
    fn scaled_curves_depend_only_on_mu() {
        let a = RateModel::new(RateSource::Asymptotic, &ModelParams::new(0.06, 25.0)).unwrap();
        let b = RateModel::new(RateSource::Asymptotic, &ModelParams::new(0.12, 50.0)).unwrap();
        assert_relative_eq!(a.mu(1.0), b.mu(1.0), max_relative = 1e-14);
        let grid = default_scaled_grid(50);
        let ca = scaled_curves(&[a.mu(1.0).ln()], &grid, None);
        let cb = scaled_curves(&[b.mu(1.0).ln()], &grid, None);
        for (p, q) in ca[0].points.iter().zip(&cb[0].points) {
            assert!((p.n_scaled - q.n_scaled).abs() <= 1e-10 * p.n_scaled);
        }
    }

    #[test]
    fn crossover_routes_converge_with_mu() {
        // Discrepancy between the two n* routes at the optimum shrinks as μ grows.
        let mut last = f64::INFINITY;
        for beta in [25.0, 50.0, 100.0, 200.0] {
            let rates = RateModel::new(RateSource::Asymptotic, &ModelParams::new(0.06, beta)).unwrap();
            let o = optimum(&rates, 1.0).unwrap();
            let r = solve_crossover(o.v_numeric, &rates, 1.0).unwrap();
            let d = (r.n_star / r.n_star_frozen).ln().abs();
            assert!(d < last, "beta {beta}: {d}");
            last = d;
        }
    }

    #[test]
    fn kz_round_trip_and_glauber_scaling() {
        for v in [1e-9, 2.85e-7, 1e-3] {
            let n = kz_density(v);
            assert!((kz_comparison(1.0, n).unwrap().v_kz / v - 1.0).abs() < 1e-12);
        }
        let t1 = glauber_time(0.01, 1.0).unwrap();
        let t2 = glauber_time(0.02, 1.0).unwrap();
        assert_relative_eq!(t1 / t2, 4.0, max_relative = 1e-14);
        assert_relative_eq!(glauber_time(0.05, 1.0).unwrap(), 15.915494, max_relative = 1e-6);
    }

    #[test]
    fn kz_ratio_grows_as_alpha_decreases() {
        let mut last = 0.0;
        for alpha in [0.06, 0.03, 0.01, 0.003] {
            let rates = RateModel::new(RateSource::Asymptotic, &ModelParams::new(alpha, 25.0)).unwrap();
            let o = optimum(&rates, 1.0).unwrap();
            let c = kz_comparison(o.v_opt, o.n_opt).unwrap();
            assert!(c.ratio > last);
            last = c.ratio;
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn eq16_root_is_exact(log_mu in 4.0f64..14.0, x0 in 1.0f64..12.0) {
            let mu = log_mu.exp();
            if let Ok(xs) = solve_x_star(mu, x0) {
                prop_assert!(xs > x0);
                prop_assert!(crossover_residual(mu, x0, xs).abs() <= 1e-10 * xs.powf(2.5));
            }
        }

        #[test]
        fn trajectory_stays_above_equilibrium(v in 1e-8f64..1e-4, alpha in 0.02f64..0.1) {
            let rates = RateModel::new(RateSource::Asymptotic, &ModelParams::new(alpha, 25.0)).unwrap();
            let s = Schedule::new(0.96, v, 0.5).unwrap();
            let run = integrate_density(&s, &rates, 1.0).unwrap();
            for smp in &run.trajectory.samples {
                prop_assert!(smp.n_mean >= smp.n_th * (1.0 - 1e-8));
            }
        }
    }
}
