//! Spatially uniform quantum Boltzmann equation for the mode occupations ρ_k,
//!
//! dρ_k/dt = Σ_q [W⁺⁻_qk (1−ρ_k) ρ_q − W⁺⁻_kq ρ_k (1−ρ_q)]
//!         + Σ_q [W⁻⁻_kq (1−ρ_k)(1−ρ_q) − W⁺⁺_kq ρ_k ρ_q],
//!
//! integrated along a linear schedule g(t) = g_i − vt with a Rosenbrock method.
//! Momentum-symmetric states are evolved in the reduced sector of k > 0 modes.

use nalgebra::DMatrix;

use crate::annealing_analysis::{DensitySample, DensityTrajectory};
use crate::bath_rates::RATE_PREFACTOR;
use crate::chain_model::{thermal_density_exact, Band, ModelParams, MomentumGrid};
use crate::numerics::{Rosenbrock, StepControl, StiffSystem};
use crate::{Error, Result};

/// Linear annealing schedule g(t) = g_initial − v t, stopped at g_final.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub g_initial: f64,
    pub v: f64,
    pub g_final: f64,
}

impl Schedule {
    pub fn new(g_initial: f64, v: f64, g_final: f64) -> Result<Self> {
        let s = Schedule {
            g_initial,
            v,
            g_final,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v > 0.0 && self.v.is_finite()) {
            return Err(Error::Config(format!("annealing rate must be positive, got {}", self.v)));
        }
        if !(self.g_initial > self.g_final && self.g_final >= 0.0) {
            return Err(Error::Config(format!(
                "schedule needs g_initial > g_final >= 0, got {} -> {}",
                self.g_initial, self.g_final
            )));
        }
        Ok(())
    }

    pub fn g_at(&self, t: f64) -> f64 {
        self.g_initial - self.v * t
    }

    pub fn t_at(&self, g: f64) -> f64 {
        (self.g_initial - g) / self.v
    }

    pub fn duration(&self) -> f64 {
        self.t_at(self.g_final)
    }
}

/// Occupations ρ_k on a momentum grid at time t and field g.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationState {
    pub rho: Vec<f64>,
    pub t: f64,
    pub g: f64,
}

impl PopulationState {
    pub fn fermi_dirac(g: f64, beta: f64, grid: &MomentumGrid, t: f64) -> Self {
        let band = Band::new(g, grid);
        PopulationState {
            rho: band.eps.iter().map(|e| 1.0 / ((beta * e).exp() + 1.0)).collect(),
            t,
            g,
        }
    }

    pub fn uniform(value: f64, n: usize, g: f64) -> Self {
        PopulationState {
            rho: vec![value; n],
            t: 0.0,
            g,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.rho.len();
        (0..n / 2).all(|m| self.rho[m] == self.rho[n - 1 - m])
    }
}

/// ⟨n⟩ = N⁻¹ Σ_k ρ_k.
pub fn mean_density(state: &PopulationState) -> f64 {
    state.rho.iter().sum::<f64>() / state.rho.len() as f64
}

/// Fermionic relative entropy of ρ with respect to the zero-chemical-potential
/// Fermi-Dirac distribution at field g.
pub fn relative_entropy(rho: &[f64], g: f64, beta: f64, grid: &MomentumGrid) -> f64 {
    let band = Band::new(g, grid);
    let xlogy = |x: f64, y: f64| if x > 0.0 { x * (x / y).ln() } else { 0.0 };
    rho.iter()
        .zip(&band.eps)
        .map(|(&r, &e)| {
            let f = 1.0 / ((beta * e).exp() + 1.0);
            let fbar = 1.0 / ((-beta * e).exp() + 1.0);
            xlogy(r, f) + xlogy(1.0 - r, fbar)
        })
        .sum()
}

/// Grid modes grouped into orbits that share an occupation.
#[derive(Debug, Clone)]
struct Sector {
    /// Grid index of each orbit's representative.
    reps: Vec<usize>,
    /// Orbit index of every grid mode.
    class: Vec<usize>,
    mult: Vec<f64>,
}

impl Sector {
    fn full(n: usize) -> Self {
        Sector {
            reps: (0..n).collect(),
            class: (0..n).collect(),
            mult: vec![1.0; n],
        }
    }

    /// Orbits {k, −k}, represented by the k > 0 modes.
    fn symmetric(n: usize) -> Self {
        let half = n / 2;
        let class = (0..n).map(|m| if m >= half { m - half } else { n - 1 - m - half }).collect();
        Sector {
            reps: (half..n).collect(),
            class,
            mult: vec![2.0; half],
        }
    }

    fn len(&self) -> usize {
        self.reps.len()
    }

    fn expand(&self, y: &[f64]) -> Vec<f64> {
        self.class.iter().map(|&c| y[c]).collect()
    }

    fn reduce(&self, rho: &[f64]) -> Vec<f64> {
        self.reps.iter().map(|&m| rho[m]).collect()
    }
}

/// Rates at one g, summed over the modes of each orbit (row-major M×M).
struct FoldedRates {
    g: f64,
    m: usize,
    /// Σ_{q∈s} W⁺⁻_{q,k_r}
    gain: Vec<f64>,
    /// Σ_{q∈s} W⁺⁻_{k_r,q}
    loss: Vec<f64>,
    /// Σ_{q∈s} W⁻⁻_{k_r,q}
    generation: Vec<f64>,
    /// Σ_{q∈s} W⁺⁺_{k_r,q}
    recombination: Vec<f64>,
}

fn weight_series(x: f64, beta: f64) -> f64 {
    let bx = beta * x;
    (1.0 + bx / 2.0 + bx * bx / 12.0) / beta
}

impl FoldedRates {
    fn build(g: f64, params: &ModelParams, grid: &MomentumGrid, sector: &Sector) -> Self {
        let band = Band::new(g, grid);
        let n = grid.len();
        let m = sector.len();
        let beta = params.beta;
        let pre = RATE_PREFACTOR * params.alpha / n as f64;
        let e_min = band.eps.iter().cloned().fold(f64::INFINITY, f64::min);
        // Shifted Boltzmann factors give e^{−β(ε_k−ε_q)} as a ratio without exp calls.
        let shifted: Vec<f64> = band.eps.iter().map(|e| (-beta * (e - e_min)).exp()).collect();
        let boltz: Vec<f64> = band.eps.iter().map(|e| (-beta * e).exp()).collect();
        let mut out = FoldedRates {
            g,
            m,
            gain: vec![0.0; m * m],
            loss: vec![0.0; m * m],
            generation: vec![0.0; m * m],
            recombination: vec![0.0; m * m],
        };
        for (r, &k) in sector.reps.iter().enumerate() {
            let (ek, ck, sk, bk) = (band.eps[k], band.cos_theta[k], band.sin_theta[k], shifted[k]);
            let row = r * m;
            for q in 0..n {
                let s = sector.class[q];
                let (eq, cq, sq) = (band.eps[q], band.cos_theta[q], band.sin_theta[q]);
                let cc = ck * cq;
                let ss = sk * sq;
                let de = ek - eq;
                let ratio = if bk > 1e-280 && shifted[q] > 1e-280 {
                    bk / shifted[q]
                } else {
                    (-beta * de).exp()
                };
                let h_intra = if (beta * de).abs() < 1e-3 {
                    weight_series(de, beta)
                } else {
                    de / (1.0 - ratio)
                };
                let w_kq = pre * h_intra * (1.0 + cc - ss);
                out.loss[row + s] += w_kq;
                out.gain[row + s] += w_kq * ratio;
                let om = ek + eq;
                let pair = boltz[k] * boltz[q];
                let w_pp = pre * om / (1.0 - pair) * (1.0 - cc - ss);
                out.recombination[row + s] += w_pp;
                out.generation[row + s] += w_pp * pair;
            }
        }
        out
    }

    fn rhs(&self, y: &[f64], dy: &mut [f64]) {
        let m = self.m;
        for r in 0..m {
            let row = r * m;
            let (mut gain, mut loss, mut gen, mut rec) = (0.0, 0.0, 0.0, 0.0);
            for s in 0..m {
                let (ys, hs) = (y[s], 1.0 - y[s]);
                gain += self.gain[row + s] * ys;
                loss += self.loss[row + s] * hs;
                gen += self.generation[row + s] * hs;
                rec += self.recombination[row + s] * ys;
            }
            let (yr, hr) = (y[r], 1.0 - y[r]);
            dy[r] = hr * gain - yr * loss + hr * gen - yr * rec;
        }
    }

    fn jacobian(&self, y: &[f64], jac: &mut DMatrix<f64>) {
        let m = self.m;
        for r in 0..m {
            let row = r * m;
            let (yr, hr) = (y[r], 1.0 - y[r]);
            let (mut gain, mut loss, mut gen, mut rec) = (0.0, 0.0, 0.0, 0.0);
            for s in 0..m {
                let (ys, hs) = (y[s], 1.0 - y[s]);
                gain += self.gain[row + s] * ys;
                loss += self.loss[row + s] * hs;
                gen += self.generation[row + s] * hs;
                rec += self.recombination[row + s] * ys;
                jac[(r, s)] = hr * self.gain[row + s] + yr * self.loss[row + s]
                    - hr * self.generation[row + s]
                    - yr * self.recombination[row + s];
            }
            jac[(r, r)] += -gain - loss - gen - rec;
        }
    }

    /// Jacobian of the intraband terms alone.
    fn intraband_jacobian(&self, y: &[f64]) -> DMatrix<f64> {
        let m = self.m;
        let mut jac = DMatrix::zeros(m, m);
        for r in 0..m {
            let row = r * m;
            let (yr, hr) = (y[r], 1.0 - y[r]);
            let (mut gain, mut loss) = (0.0, 0.0);
            for s in 0..m {
                gain += self.gain[row + s] * y[s];
                loss += self.loss[row + s] * (1.0 - y[s]);
                jac[(r, s)] = hr * self.gain[row + s] + yr * self.loss[row + s];
            }
            jac[(r, r)] += -gain - loss;
        }
        jac
    }
}

/// dρ_k/dt on the full grid at the state's field.
pub fn qbe_rhs(state: &PopulationState, params: &ModelParams) -> Result<Vec<f64>> {
    let grid = grid_for(state, params)?;
    let sector = Sector::full(grid.len());
    let rates = FoldedRates::build(state.g, params, &grid, &sector);
    let mut dy = vec![0.0; grid.len()];
    rates.rhs(&state.rho, &mut dy);
    Ok(dy)
}

fn grid_for(state: &PopulationState, params: &ModelParams) -> Result<MomentumGrid> {
    if state.rho.len() != params.n_sites {
        return Err(Error::Config(format!(
            "state has {} modes but n_sites = {}",
            state.rho.len(),
            params.n_sites
        )));
    }
    MomentumGrid::new(params.n_sites)
}

struct QbeSystem<'a> {
    params: &'a ModelParams,
    grid: &'a MomentumGrid,
    sector: &'a Sector,
    /// g(t) = g0 − v t
    g0: f64,
    v: f64,
    cache: Option<FoldedRates>,
}

impl QbeSystem<'_> {
    fn rates(&mut self, t: f64) -> &FoldedRates {
        let g = self.g0 - self.v * t;
        if self.cache.as_ref().map(|c| c.g) != Some(g) {
            self.cache = Some(FoldedRates::build(g, self.params, self.grid, self.sector));
        }
        self.cache.as_ref().unwrap()
    }
}

impl StiffSystem for QbeSystem<'_> {
    fn dim(&self) -> usize {
        self.sector.len()
    }

    fn rhs(&mut self, t: f64, y: &[f64], dy: &mut [f64]) {
        self.rates(t).rhs(y, dy);
    }

    fn jacobian(&mut self, t: f64, y: &[f64], jac: &mut DMatrix<f64>) {
        self.rates(t).jacobian(y, jac);
    }

    fn dfdt(&mut self, t: f64, y: &[f64], f0: &[f64], out: &mut [f64]) {
        if self.v == 0.0 {
            out.fill(0.0);
            return;
        }
        // Finite difference in g with a step that does not depend on the size of t.
        let dg = 1e-6;
        let dt = dg / self.v;
        let rates = FoldedRates::build(self.g0 - self.v * (t + dt), self.params, self.grid, self.sector);
        rates.rhs(y, out);
        for (o, f) in out.iter_mut().zip(f0) {
            *o = (*o - f) / dt;
        }
    }
}

/// Tolerance below which out-of-range occupations are clamped without being counted.
pub const POPULATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct EvolveOptions {
    /// Record every n-th accepted step (the final step is always recorded).
    pub output_stride: usize,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            output_stride: 1,
            rtol: 1e-8,
            atol: 1e-14,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct EvolveStats {
    pub accepted: usize,
    pub rejected: usize,
    /// Occupations found outside [−1e−12, 1+1e−12] after an accepted step.
    pub clipped: usize,
    pub reduced_sector: bool,
}

#[derive(Debug, Clone)]
pub struct EvolveOutput {
    pub trajectory: DensityTrajectory,
    pub final_state: PopulationState,
    pub stats: EvolveStats,
}

fn clamp_populations(y: &mut [f64], clipped: &mut usize) -> bool {
    let mut changed = false;
    for v in y.iter_mut() {
        if *v < 0.0 || *v > 1.0 {
            if *v < -POPULATION_TOL || *v > 1.0 + POPULATION_TOL {
                *clipped += 1;
            }
            *v = v.clamp(0.0, 1.0);
            changed = true;
        }
    }
    changed
}

/// Integrates the QBE along the schedule, starting from `initial` (whose g must
/// equal the schedule's g_initial).
pub fn evolve(
    initial: &PopulationState,
    schedule: &Schedule,
    params: &ModelParams,
    opts: &EvolveOptions,
) -> Result<EvolveOutput> {
    schedule.validate()?;
    params.validate()?;
    let grid = grid_for(initial, params)?;
    if (initial.g - schedule.g_initial).abs() > 1e-12 {
        return Err(Error::Config(format!(
            "initial state at g = {} does not match schedule start {}",
            initial.g, schedule.g_initial
        )));
    }
    if schedule.v > 2.0 / params.beta {
        log::warn!(
            "annealing rate v = {} exceeds the collision-duration bound 2/beta = {}",
            schedule.v,
            2.0 / params.beta
        );
    }
    let symmetric = initial.is_symmetric();
    let sector = if symmetric {
        Sector::symmetric(grid.len())
    } else {
        Sector::full(grid.len())
    };
    let mut sys = QbeSystem {
        params,
        grid: &grid,
        sector: &sector,
        g0: schedule.g_initial,
        v: schedule.v,
        cache: None,
    };
    let beta = params.beta;
    let mut samples = vec![DensitySample {
        t: 0.0,
        g: schedule.g_initial,
        n_mean: mean_density(initial),
        n_th: thermal_density_exact(schedule.g_initial, beta, &grid),
    }];
    let mut stats = EvolveStats {
        reduced_sector: symmetric,
        ..Default::default()
    };
    let t_end = schedule.duration();
    let stride = opts.output_stride.max(1);
    let mut count = 0usize;
    let mut clipped = 0usize;
    let solver = Rosenbrock::with_tol(opts.rtol, opts.atol);
    let y0 = sector.reduce(&initial.rho);
    let run = solver.integrate(&mut sys, 0.0, &y0, t_end, |info| {
        let changed = clamp_populations(info.y, &mut clipped);
        count += 1;
        if count % stride == 0 || info.t >= t_end {
            let g = schedule.g_at(info.t);
            let n_mean = info
                .y
                .iter()
                .zip(&sector.mult)
                .map(|(y, m)| y * m)
                .sum::<f64>()
                / grid.len() as f64;
            samples.push(DensitySample {
                t: info.t,
                g,
                n_mean,
                n_th: thermal_density_exact(g, beta, &grid),
            });
        }
        if changed {
            StepControl::Modified
        } else {
            StepControl::Continue
        }
    })?;
    stats.accepted = run.accepted;
    stats.rejected = run.rejected;
    stats.clipped = clipped;
    let final_state = PopulationState {
        rho: sector.expand(&run.y),
        t: run.t,
        g: schedule.g_at(run.t),
    };
    Ok(EvolveOutput {
        trajectory: DensityTrajectory {
            samples,
            schedule: *schedule,
        },
        final_state,
        stats,
    })
}

#[derive(Debug, Clone)]
pub struct Relaxation {
    /// (t, ⟨n⟩, relative entropy to Fermi-Dirac) after each recorded step.
    pub samples: Vec<(f64, f64, f64)>,
    pub final_state: PopulationState,
    pub stats: EvolveStats,
}

/// Evolves at fixed g for a time `duration`.
pub fn relax_fixed_g(
    initial: &PopulationState,
    params: &ModelParams,
    duration: f64,
    opts: &EvolveOptions,
) -> Result<Relaxation> {
    params.validate()?;
    let grid = grid_for(initial, params)?;
    let symmetric = initial.is_symmetric();
    let sector = if symmetric {
        Sector::symmetric(grid.len())
    } else {
        Sector::full(grid.len())
    };
    let mut sys = QbeSystem {
        params,
        grid: &grid,
        sector: &sector,
        g0: initial.g,
        v: 0.0,
        cache: None,
    };
    let g = initial.g;
    let beta = params.beta;
    let mut samples = vec![(
        initial.t,
        mean_density(initial),
        relative_entropy(&initial.rho, g, beta, &grid),
    )];
    let mut clipped = 0usize;
    let mut count = 0usize;
    let stride = opts.output_stride.max(1);
    let solver = Rosenbrock::with_tol(opts.rtol, opts.atol);
    let y0 = sector.reduce(&initial.rho);
    let t0 = initial.t;
    let run = solver.integrate(&mut sys, t0, &y0, t0 + duration, |info| {
        let changed = clamp_populations(info.y, &mut clipped);
        count += 1;
        if count % stride == 0 || info.t >= t0 + duration {
            let rho = sector.expand(info.y);
            let n = rho.iter().sum::<f64>() / rho.len() as f64;
            samples.push((info.t, n, relative_entropy(&rho, g, beta, &grid)));
        }
        if changed {
            StepControl::Modified
        } else {
            StepControl::Continue
        }
    })?;
    Ok(Relaxation {
        samples,
        final_state: PopulationState {
            rho: sector.expand(&run.y),
            t: run.t,
            g,
        },
        stats: EvolveStats {
            accepted: run.accepted,
            rejected: run.rejected,
            clipped,
            reduced_sector: symmetric,
        },
    })
}

/// Slowest nonzero decay rate of the intraband collision operator linearized
/// about Fermi-Dirac at fixed g, for momentum-symmetric perturbations.
///
/// The linearized operator is self-adjoint in the weight 1/(f(1−f)) per mode, so
/// its spectrum is obtained from a symmetric eigenproblem.
pub fn intraband_relaxation_rate(g: f64, params: &ModelParams) -> Result<f64> {
    params.validate()?;
    let grid = MomentumGrid::new(params.n_sites)?;
    let sector = Sector::symmetric(grid.len());
    let fd = PopulationState::fermi_dirac(g, params.beta, &grid, 0.0);
    let y = sector.reduce(&fd.rho);
    let rates = FoldedRates::build(g, params, &grid, &sector);
    let jac = rates.intraband_jacobian(&y);
    let m = sector.len();
    let scale: Vec<f64> = (0..m)
        .map(|r| (sector.mult[r] / (y[r] * (1.0 - y[r]))).sqrt())
        .collect();
    let mut sym = DMatrix::zeros(m, m);
    for r in 0..m {
        for s in 0..m {
            sym[(r, s)] = scale[r] * jac[(r, s)] / scale[s];
        }
    }
    let sym = (&sym + sym.transpose()) * 0.5;
    let mut eig: Vec<f64> = sym.symmetric_eigen().eigenvalues.iter().cloned().collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    // eig[0] is the conserved-number mode.
    Ok(-eig[1])
}
