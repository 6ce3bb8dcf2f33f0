//! Lattice Monte Carlo for pair annihilation A + A → 0 of hard-core walkers on a
//! ring, with time-dependent hop and reaction rates.
//!
//! Each walker attempts hops at total rate Γ(t), half to each neighbour, so that
//! D(t) = Γ(t)/2 in lattice units. A hop onto an occupied site annihilates both
//! walkers with probability p(t) = min(1, λ(t)/Γ(t)); otherwise the hop is
//! rejected. In the reaction-limited regime this gives ṅ ≈ −Cλn² with
//! C = [`CONTACT_CALIBRATION`].
//!
//! Time-dependent rates are sampled by thinning against a piecewise-constant
//! envelope on a fixed time mesh. Every replica uses its own ChaCha8 stream
//! derived from (seed, replica index).

use std::sync::Arc;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::annealing_analysis::RateModel;
use crate::boltzmann_solver::Schedule;
use crate::numerics::{bisect, integrate, QuadTol};
use crate::{Error, Result};

/// Mean-field constant C in ṅ = −Cλn² for the contact rule above. Each contact
/// removes two walkers, so C = 2; the reaction-limited tests confirm it to 10%.
pub const CONTACT_CALIBRATION: f64 = 2.0;

/// Relative overshoot allowed between the envelope and the true hop rate.
pub const ENVELOPE_SLACK: f64 = 0.05;

type RateFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Hop rate Γ(t) and on-contact reaction rate λ(t).
#[derive(Clone)]
pub struct RateScheduleHooks {
    pub name: String,
    hop: RateFn,
    reaction: RateFn,
}

impl std::fmt::Debug for RateScheduleHooks {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "RateScheduleHooks({})", self.name)
    }
}

impl RateScheduleHooks {
    pub fn new(
        name: &str,
        hop: impl Fn(f64) -> f64 + Send + Sync + 'static,
        reaction: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        RateScheduleHooks {
            name: name.to_string(),
            hop: Arc::new(hop),
            reaction: Arc::new(reaction),
        }
    }

    pub fn constant(hop: f64, reaction: f64) -> Self {
        Self::new("constant", move |_| hop, move |_| reaction)
    }

    /// Γ(t) = Γ₀(1 + t/t₀)^{−3/2}, mimicking D ∝ (1−g)^{−3/2} as g moves away
    /// from the critical point; constant λ.
    pub fn power_decay(hop0: f64, t0: f64, reaction: f64) -> Self {
        Self::new("power_decay", move |t| hop0 * (1.0 + t / t0).powf(-1.5), move |_| reaction)
    }

    /// Γ(t) = 2D(g(t)) and λ(t) = w(g(t))/C along the annealing schedule, with the
    /// simulation clock started at schedule time `t_start`.
    pub fn model_g_schedule(rates: Arc<RateModel>, schedule: Schedule, t_start: f64) -> Self {
        let r2 = rates.clone();
        Self::new(
            "model_g_schedule",
            move |t| {
                let g = schedule.g_at(t_start + t);
                rates.diffusion(g).map(|d| 2.0 * d).unwrap_or(f64::NAN)
            },
            move |t| {
                let g = schedule.g_at(t_start + t);
                r2.w(g).map(|w| w / CONTACT_CALIBRATION).unwrap_or(f64::NAN)
            },
        )
    }

    pub fn hop_rate(&self, t: f64) -> f64 {
        (self.hop)(t)
    }

    pub fn reaction_rate(&self, t: f64) -> f64 {
        (self.reaction)(t)
    }

    pub fn diffusion(&self, t: f64) -> f64 {
        0.5 * self.hop_rate(t)
    }

    /// Checks both rates are finite and nonnegative on a sampling of [0, horizon].
    pub fn validate(&self, horizon: f64) -> Result<()> {
        for i in 0..=256 {
            let t = horizon * i as f64 / 256.0;
            let (h, r) = (self.hop_rate(t), self.reaction_rate(t));
            if !(h >= 0.0 && h.is_finite() && r >= 0.0 && r.is_finite()) {
                return Err(Error::Config(format!(
                    "hooks {} invalid at t = {t}: hop {h}, reaction {r}",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

/// Piecewise-constant upper bound of Γ(t).
#[derive(Debug, Clone)]
pub struct Envelope {
    /// Cell edges, starting at 0 and ending at the horizon.
    pub edges: Vec<f64>,
    pub bounds: Vec<f64>,
}

impl Envelope {
    /// Refines cells until the sampled rate varies by less than half the slack.
    pub fn build(hooks: &RateScheduleHooks, horizon: f64) -> Result<Self> {
        let half = 0.5 * ENVELOPE_SLACK;
        let mut edges = vec![0.0];
        let mut bounds = Vec::new();
        let mut stack: Vec<(f64, f64)> = (0..64)
            .rev()
            .map(|i| (horizon * i as f64 / 64.0, horizon * (i + 1) as f64 / 64.0))
            .collect();
        while let Some((a, b)) = stack.pop() {
            let samples: Vec<f64> = (0..=4).map(|j| hooks.hop_rate(a + (b - a) * j as f64 / 4.0)).collect();
            let hi = samples.iter().cloned().fold(0.0, f64::max);
            let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
            if !hi.is_finite() || lo < 0.0 {
                return Err(Error::Config(format!("hop rate not finite and nonnegative on [{a}, {b}]")));
            }
            if hi > lo * (1.0 + half) && b - a > horizon * 1e-12 {
                let m = 0.5 * (a + b);
                stack.push((m, b));
                stack.push((a, m));
            } else {
                edges.push(b);
                bounds.push(hi * (1.0 + half));
            }
        }
        Ok(Envelope { edges, bounds })
    }

    pub fn cells(&self) -> usize {
        self.bounds.len()
    }
}

/// Hard-core walkers on a ring of `length` sites.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeConfig {
    pub length: usize,
    pub positions: Vec<usize>,
    /// Index into `positions` of the walker on each site.
    slot: Vec<u32>,
    pub rng_seed: u64,
    pub time: f64,
}

const EMPTY: u32 = u32::MAX;

impl LatticeConfig {
    /// Random configuration with round(density·length) walkers.
    pub fn random(length: usize, density: f64, rng: &mut ChaCha8Rng, seed: u64) -> Result<Self> {
        if length < 2 || !(density > 0.0 && density <= 1.0) {
            return Err(Error::Config(format!("need length >= 2 and 0 < density <= 1, got {length}, {density}")));
        }
        let count = ((density * length as f64).round() as usize).clamp(1, length);
        let positions = sample(rng, length, count).into_vec();
        Ok(Self::from_positions(length, positions, seed))
    }

    pub fn from_positions(length: usize, positions: Vec<usize>, seed: u64) -> Self {
        let mut slot = vec![EMPTY; length];
        for (i, &p) in positions.iter().enumerate() {
            assert!(p < length && slot[p] == EMPTY, "positions must be distinct sites");
            slot[p] = i as u32;
        }
        LatticeConfig {
            length,
            positions,
            slot,
            rng_seed: seed,
            time: 0.0,
        }
    }

    pub fn count(&self) -> usize {
        self.positions.len()
    }

    pub fn density(&self) -> f64 {
        self.count() as f64 / self.length as f64
    }

    fn remove(&mut self, site: usize) {
        let i = self.slot[site] as usize;
        self.slot[site] = EMPTY;
        self.positions.swap_remove(i);
        if i < self.positions.len() {
            self.slot[self.positions[i]] = i as u32;
        }
    }

    /// Walker `i` attempts a hop by `dir` = ±1. Returns true on annihilation.
    fn attempt(&mut self, i: usize, right: bool, p_react: f64, rng: &mut ChaCha8Rng) -> bool {
        let from = self.positions[i];
        let to = if right { (from + 1) % self.length } else { (from + self.length - 1) % self.length };
        if self.slot[to] == EMPTY {
            self.slot[to] = i as u32;
            self.slot[from] = EMPTY;
            self.positions[i] = to;
            false
        } else if p_react >= 1.0 || rng.random::<f64>() < p_react {
            self.remove(from);
            self.remove(to);
            true
        } else {
            false
        }
    }

    pub fn check_invariants(&self) -> bool {
        let mut seen = vec![false; self.length];
        self.positions.iter().enumerate().all(|(i, &p)| {
            let ok = p < self.length && !seen[p] && self.slot[p] == i as u32;
            seen[p] = true;
            ok
        }) && self.slot.iter().filter(|&&s| s != EMPTY).count() == self.positions.len()
    }
}

/// Density of one replica on the output time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaRun {
    pub density: Vec<f64>,
    pub events: u64,
    pub annihilations: u64,
    pub final_config: LatticeConfig,
}

fn replica_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

/// One continuous-time KMC run recording the density at each time in `times`
/// (ascending, within [0, horizon]).
pub fn run_replica(
    length: usize,
    initial_density: f64,
    hooks: &RateScheduleHooks,
    envelope: &Envelope,
    seed: u64,
    replica: u64,
    times: &[f64],
) -> Result<ReplicaRun> {
    let mut rng = replica_rng(seed, replica);
    let mut cfg = LatticeConfig::random(length, initial_density, &mut rng, seed)?;
    let mut density = Vec::with_capacity(times.len());
    let mut next_out = 0;
    let (mut events, mut annihilations) = (0u64, 0u64);
    let mut t = 0.0;
    let horizon = *envelope.edges.last().unwrap();
    let record = |t_now: f64, n: f64, next_out: &mut usize, density: &mut Vec<f64>| {
        while *next_out < times.len() && times[*next_out] <= t_now {
            density.push(n);
            *next_out += 1;
        }
    };
    for cell in 0..envelope.cells() {
        let (t_end, bound) = (envelope.edges[cell + 1], envelope.bounds[cell]);
        loop {
            let walkers = cfg.count();
            if walkers < 2 || bound == 0.0 {
                t = t_end;
                break;
            }
            let total = walkers as f64 * bound;
            let dt = -(1.0 - rng.random::<f64>()).ln() / total;
            if t + dt >= t_end {
                t = t_end;
                break;
            }
            record(t + dt, cfg.density(), &mut next_out, &mut density);
            t += dt;
            let hop = hooks.hop_rate(t);
            if hop > bound {
                return Err(Error::Envelope { t, rate: hop, bound });
            }
            if rng.random::<f64>() * bound >= hop {
                continue;
            }
            events += 1;
            let i = rng.random_range(0..walkers);
            let right = rng.random::<bool>();
            let p = (hooks.reaction_rate(t) / hop).min(1.0);
            if cfg.attempt(i, right, p, &mut rng) {
                annihilations += 1;
            }
        }
        record(t, cfg.density(), &mut next_out, &mut density);
    }
    record(horizon * (1.0 + 1e-15) + 1e-300, cfg.density(), &mut next_out, &mut density);
    cfg.time = t;
    Ok(ReplicaRun {
        density,
        events,
        annihilations,
        final_config: cfg,
    })
}

/// Ensemble mean and standard error of the density on a fixed time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensitySeries {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub replicas: usize,
}

impl DensitySeries {
    /// First time at which the mean density falls to `n`, interpolated in ln n.
    pub fn time_to_density(&self, n: f64) -> Option<f64> {
        let idx = self.mean.iter().position(|&m| m <= n)?;
        if idx == 0 {
            return Some(self.times[0]);
        }
        let (t0, t1) = (self.times[idx - 1], self.times[idx]);
        let (a, b) = (self.mean[idx - 1].ln(), self.mean[idx].ln());
        if a == b {
            return Some(t1);
        }
        Some(t0 + (t1 - t0) * (a - n.ln()) / (a - b))
    }

    /// Least-squares slope of ln n against ln t over t in [t_min, t_max].
    pub fn decay_exponent(&self, t_min: f64, t_max: f64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .times
            .iter()
            .zip(&self.mean)
            .filter(|(&t, &m)| t >= t_min && t <= t_max && t > 0.0 && m > 0.0)
            .map(|(t, m)| (t.ln(), m.ln()))
            .collect();
        if pts.len() < 3 {
            return None;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        Some(sxy / sxx)
    }
}

/// Log-spaced output times between `t_min` and `horizon`, preceded by t = 0.
pub fn log_times(t_min: f64, horizon: f64, points: usize) -> Vec<f64> {
    let mut v = vec![0.0];
    let (a, b) = (t_min.ln(), horizon.ln());
    v.extend((0..points).map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp()));
    *v.last_mut().unwrap() = horizon;
    v
}

#[derive(Debug, Clone)]
pub struct KmcSpec {
    pub length: usize,
    pub initial_density: f64,
    pub seed: u64,
    pub replicas: usize,
    pub horizon: f64,
    pub times: Vec<f64>,
}

/// Runs independent replicas concurrently and averages them on the time grid.
pub fn kmc_time_dependent(spec: &KmcSpec, hooks: &RateScheduleHooks) -> Result<DensitySeries> {
    if spec.replicas == 0 || !(spec.horizon > 0.0) {
        return Err(Error::Config("need at least one replica and a positive horizon".into()));
    }
    if spec.times.windows(2).any(|w| w[1] < w[0]) || spec.times.last().is_some_and(|&t| t > spec.horizon) {
        return Err(Error::Config("output times must be ascending within the horizon".into()));
    }
    hooks.validate(spec.horizon)?;
    let envelope = Envelope::build(hooks, spec.horizon)?;
    let runs = (0..spec.replicas as u64)
        .into_par_iter()
        .map(|r| {
            run_replica(
                spec.length,
                spec.initial_density,
                hooks,
                &envelope,
                spec.seed,
                r,
                &spec.times,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(&spec.times, &runs))
}

fn aggregate(times: &[f64], runs: &[ReplicaRun]) -> DensitySeries {
    let m = runs.len() as f64;
    let mut mean = vec![0.0; times.len()];
    let mut stderr = vec![0.0; times.len()];
    for j in 0..times.len() {
        let mu = runs.iter().map(|r| r.density[j]).sum::<f64>() / m;
        let var = if runs.len() > 1 {
            runs.iter().map(|r| (r.density[j] - mu).powi(2)).sum::<f64>() / (m - 1.0)
        } else {
            0.0
        };
        mean[j] = mu;
        stderr[j] = (var / m).sqrt();
    }
    DensitySeries {
        times: times.to_vec(),
        mean,
        stderr,
        replicas: runs.len(),
    }
}

#[derive(Debug, Clone)]
pub struct GlauberRun {
    pub series: DensitySeries,
    /// Whether the mean density reached `target` within the horizon.
    pub reached: bool,
    pub time_to_target: Option<f64>,
}

/// Diffusing kinks (D = w_G) annihilating on contact, the low-temperature
/// picture of Glauber dynamics.
pub fn glauber_kink_mc(spec: &KmcSpec, w_g: f64, target: f64) -> Result<GlauberRun> {
    if !(spec.initial_density > 0.0 && spec.initial_density <= 0.5) || !(w_g > 0.0) {
        return Err(Error::Config(format!(
            "need 0 < n0 <= 0.5 and w_G > 0, got {}, {w_g}",
            spec.initial_density
        )));
    }
    // λ = Γ makes every contact annihilate.
    let hooks = RateScheduleHooks::constant(2.0 * w_g, 2.0 * w_g);
    let series = kmc_time_dependent(spec, &hooks)?;
    let time_to_target = series.time_to_density(target);
    if time_to_target.is_none() {
        log::warn!("density {target} not reached within horizon {}", spec.horizon);
    }
    Ok(GlauberRun {
        reached: time_to_target.is_some(),
        time_to_target,
        series,
    })
}

/// ℓ_D(t, τ) = [4∫_τ^t D(t')dt']^{1/2}.
pub fn diffusion_length(t: f64, tau: f64, hooks: &RateScheduleHooks) -> Result<f64> {
    if t < tau {
        return Err(Error::Domain(format!("diffusion length needs t >= tau, got {t} < {tau}")));
    }
    if t == tau {
        return Ok(0.0);
    }
    let r = integrate(|s| hooks.diffusion(s), tau, t, QuadTol::new(0.0, 1e-10))?;
    Ok((4.0 * r.value).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Touching {
    pub t_star: f64,
    pub n_star: f64,
    /// Time at which ℓ_D(t, t*) touches ℓ(t).
    pub t_touch: f64,
}

/// Latest start time τ = t* from which diffusion still reaches the mean
/// inter-particle distance ℓ(t) = 1/n(t) at some later t ≤ t_hi. The density is
/// assumed to freeze at n(t*).
pub fn touching_crossover(
    hooks: &RateScheduleHooks,
    density_law: impl Fn(f64) -> f64,
    t_lo: f64,
    t_hi: f64,
) -> Result<Touching> {
    if !(t_lo > 0.0 && t_hi > t_lo) {
        return Err(Error::Config(format!("need 0 < t_lo < t_hi, got {t_lo}, {t_hi}")));
    }
    // Cumulative ∫4D on a log mesh, cell by cell.
    let m = 4000;
    let ts: Vec<f64> = (0..=m)
        .map(|i| (t_lo.ln() + (t_hi.ln() - t_lo.ln()) * i as f64 / m as f64).exp())
        .collect();
    let mut cum = vec![0.0; ts.len()];
    for i in 1..ts.len() {
        let r = integrate(|s| 4.0 * hooks.diffusion(s), ts[i - 1], ts[i], QuadTol::new(0.0, 1e-10))?;
        cum[i] = cum[i - 1] + r.value;
    }
    let ell2: Vec<f64> = ts.iter().map(|&t| density_law(t).powi(-2)).collect();
    if ell2.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("density law must be positive and finite on the window".into()));
    }
    let cum_at = |tau: f64| -> f64 {
        let j = ts.partition_point(|&t| t <= tau).clamp(1, m);
        let u = (tau.ln() - ts[j - 1].ln()) / (ts[j].ln() - ts[j - 1].ln());
        cum[j - 1] + u * (cum[j] - cum[j - 1])
    };
    // G(τ) = max_{t ≥ τ} [ℓ_D²(t, τ) − ℓ(t)²], non-increasing in τ.
    let gain = |tau: f64| -> (f64, f64) {
        let start = ts.partition_point(|&t| t < tau);
        let c0 = cum_at(tau);
        (start..ts.len())
            .map(|j| (cum[j] - c0 - ell2[j], ts[j]))
            .fold((f64::NEG_INFINITY, tau), |a, b| if b.0 > a.0 { b } else { a })
    };
    if gain(t_lo).0 < 0.0 {
        return Err(Error::NoTangency(format!(
            "diffusion never reaches the inter-particle distance after t = {t_lo}"
        )));
    }
    let late = ts[m - 1];
    let t_star = if gain(late).0 >= 0.0 {
        late
    } else {
        bisect(|s| gain(s.exp()).0, t_lo.ln(), late.ln(), 1e-10)?.exp()
    };
    let t_touch = gain(t_star).1;
    if t_star > 0.99 * t_hi {
        return Err(Error::NoTangency(format!(
            "diffusion still outruns the inter-particle distance at the end of the window t = {t_hi}"
        )));
    }
    Ok(Touching {
        t_star,
        n_star: density_law(t_star),
        t_touch,
    })
}
