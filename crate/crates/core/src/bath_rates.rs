//! Bath-induced transition rates between fermion modes and the quantities derived
//! from them: momentum relaxation, recombination, the scale-free intraband kernel
//! and the diffusion coefficient.
//!
//! Rates are in units of J/ħ. Frequencies passed to [`emission_weight`] and
//! [`bose_occupation`] are in units of 2J/ħ, so that βΩ is the Boltzmann exponent.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::chain_model::{self, check_ferro, Band, ModelParams, MomentumGrid};
use crate::numerics::{integrate, QuadTol};
use crate::{Error, Result, SEMICLASSICAL_THRESHOLD};

/// Diffusion constant quoted with the closed-form diffusion coefficient.
pub const C_D_REFERENCE: f64 = 0.17;

/// Prefactor of W^{μν}_{kq} in units of α/N: 2π from the golden rule times 2 from
/// converting the 2J/ħ frequency unit of Ω into J/ħ.
pub const RATE_PREFACTOR: f64 = 4.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

/// n̄(ω) = 1/(e^{βω} − 1).
pub fn bose_occupation(omega: f64, beta: f64) -> Result<f64> {
    if omega == 0.0 {
        return Err(Error::Singular("Bose occupation diverges at omega = 0".into()));
    }
    Ok(1.0 / (beta * omega).exp_m1())
}

/// (c, |s|) = (2cos[(θ_k+θ_k')/2], sin[(θ_k+θ_k')/2]) before the 1/√N factor.
pub fn coupling_coeffs(g: f64, k: f64, kp: f64) -> Result<(f64, f64)> {
    let half = 0.5 * (chain_model::bogoliubov_angle(g, k)? + chain_model::bogoliubov_angle(g, kp)?);
    Ok((2.0 * half.cos(), half.sin()))
}

/// h(Ω) = Ω(n̄(Ω) + 1) = Ω/(1 − e^{−βΩ}), with h(0) = 1/β.
pub fn emission_weight(omega: f64, beta: f64) -> f64 {
    let x = beta * omega;
    if x.abs() < 1e-8 {
        (1.0 + 0.5 * x) / beta
    } else {
        omega / -(-x).exp_m1()
    }
}

/// W^{μν}_{kq} = (4πα/N) h(με_k + νε_q) [1 − μν cos(μθ_k − νθ_q)].
pub fn transition_rate(mu: Branch, nu: Branch, g: f64, k: f64, q: f64, params: &ModelParams) -> Result<f64> {
    let (m, n) = (mu.sign(), nu.sign());
    let (ek, eq) = (chain_model::dispersion(g, k), chain_model::dispersion(g, q));
    let (tk, tq) = (
        chain_model::bogoliubov_angle(g, k)?,
        chain_model::bogoliubov_angle(g, q)?,
    );
    let angular = 1.0 - m * n * (m * tk - n * tq).cos();
    Ok(RATE_PREFACTOR * params.alpha / params.n_sites as f64
        * emission_weight(m * ek + n * eq, params.beta)
        * angular)
}

/// All rates on a grid at fixed g, stored as dense N×N tables.
#[derive(Debug, Clone)]
pub struct TransitionRateTable {
    pub grid: MomentumGrid,
    pub g: f64,
    /// W^{+−}_{kq}: intraband scattering k → q.
    pub plus_minus: DMatrix<f64>,
    /// W^{++}_{kq}: pair annihilation.
    pub plus_plus: DMatrix<f64>,
    /// W^{−−}_{kq}: pair creation.
    pub minus_minus: DMatrix<f64>,
}

impl TransitionRateTable {
    pub fn new(g: f64, params: &ModelParams, grid: &MomentumGrid) -> Self {
        let band = Band::new(g, grid);
        let n = grid.len();
        let pre = RATE_PREFACTOR * params.alpha / n as f64;
        let beta = params.beta;
        let mut pm = DMatrix::zeros(n, n);
        let mut pp = DMatrix::zeros(n, n);
        let mut mm = DMatrix::zeros(n, n);
        for k in 0..n {
            for q in 0..n {
                let cc = band.cos_theta[k] * band.cos_theta[q];
                let ss = band.sin_theta[k] * band.sin_theta[q];
                let (ek, eq) = (band.eps[k], band.eps[q]);
                pm[(k, q)] = pre * emission_weight(ek - eq, beta) * (1.0 + cc - ss);
                pp[(k, q)] = pre * emission_weight(ek + eq, beta) * (1.0 - cc - ss);
                mm[(k, q)] = pre * emission_weight(-(ek + eq), beta) * (1.0 - cc - ss);
            }
        }
        TransitionRateTable {
            grid: grid.clone(),
            g,
            plus_minus: pm,
            plus_plus: pp,
            minus_minus: mm,
        }
    }

    pub fn get(&self, mu: Branch, nu: Branch, k: usize, q: usize) -> f64 {
        match (mu, nu) {
            (Branch::Plus, Branch::Minus) => self.plus_minus[(k, q)],
            // W^{−+}_{kq} is the reverse process of W^{+−}_{qk}.
            (Branch::Minus, Branch::Plus) => self.plus_minus[(q, k)],
            (Branch::Plus, Branch::Plus) => self.plus_plus[(k, q)],
            (Branch::Minus, Branch::Minus) => self.minus_minus[(k, q)],
        }
    }
}

/// τ_r⁻¹ = (4α/β)√((1−g)/βg).
pub fn momentum_relaxation_rate(g: f64, params: &ModelParams) -> Result<f64> {
    check_ferro(g)?;
    let b = params.beta;
    Ok(4.0 * params.alpha / b * ((1.0 - g) / (b * g)).sqrt())
}

/// w(g) = Σ_{k,q} W^{++}_{kq} e^{−β(ε_k+ε_q)} / (N n_th²) on the grid.
pub fn recombination_rate_exact(g: f64, params: &ModelParams, grid: &MomentumGrid) -> f64 {
    let band = Band::new(g, grid);
    let n = grid.len();
    let beta = params.beta;
    let boltz: Vec<f64> = band.eps.iter().map(|e| (-beta * e).exp()).collect();
    let n_th: f64 = boltz.iter().sum::<f64>() / n as f64;
    let mut sum = 0.0;
    for k in 0..n {
        let mut row = 0.0;
        for q in 0..n {
            let omega = band.eps[k] + band.eps[q];
            let angular = 1.0
                - band.cos_theta[k] * band.cos_theta[q]
                - band.sin_theta[k] * band.sin_theta[q];
            // h(Ω)e^{−βΩ} = Ω/(e^{βΩ} − 1)
            row += omega / (beta * omega).exp_m1() * angular;
        }
        sum += row;
    }
    let pre = RATE_PREFACTOR * params.alpha / n as f64;
    pre * sum / (n as f64 * n_th * n_th)
}

/// Semiclassical recombination rate w ≃ 8πα/(βg).
pub fn recombination_rate_asymptotic(g: f64, params: &ModelParams) -> f64 {
    let x = params.beta * (1.0 - g);
    if x < SEMICLASSICAL_THRESHOLD || params.beta * g < SEMICLASSICAL_THRESHOLD {
        log::warn!("recombination_rate_asymptotic used outside beta >> 1-g, 1/g (g = {g})");
    }
    semiclassical_recombination(g, params)
}

pub(crate) fn semiclassical_recombination(g: f64, params: &ModelParams) -> f64 {
    2.0 * RATE_PREFACTOR * params.alpha / (params.beta * g)
}

/// D = c_D (√β/α) (g/(1−g))^{3/2} with the quoted constant c_D = 0.17.
pub fn diffusion_closed(g: f64, params: &ModelParams) -> Result<f64> {
    diffusion_closed_with(g, params, C_D_REFERENCE)
}

pub fn diffusion_closed_with(g: f64, params: &ModelParams, c_d: f64) -> Result<f64> {
    check_ferro(g)?;
    Ok(c_d * params.beta.sqrt() / params.alpha * (g / (1.0 - g)).powf(1.5))
}

/// Scale-free intraband rate K → Q in units of (4α/β) per unit scaled momentum:
/// f((K² − Q²)/2) with f(x) = x/(1 − e^{−x}).
pub fn intraband_kernel(k: f64, q: f64) -> f64 {
    let x = 0.5 * (k * k - q * q);
    if x == 0.0 {
        1.0
    } else {
        x / -(-x).exp_m1()
    }
}

/// Total scaled out-scattering rate λ(K) = ∫dQ f((K²−Q²)/2).
pub fn kernel_loss_rate(k: f64, tol: QuadTol) -> Result<f64> {
    let k = k.abs();
    let f = |q: f64| intraband_kernel(k, q);
    // Beyond |Q| = K the integrand decays like e^{−(Q²−K²)/2}.
    let q_max = (k * k + 90.0).sqrt();
    let inner = integrate(f, 0.0, k, tol)?;
    let outer = integrate(f, k, q_max, tol)?;
    Ok(2.0 * (inner.value + outer.value))
}

#[derive(Debug, Clone, Copy)]
pub struct DiffusionEstimate {
    /// D in lattice units squared per ħ/J.
    pub d: f64,
    /// c_D = D α (1−g)^{3/2} / (√β g^{3/2}).
    pub c_d: f64,
    /// Error estimate of the outer integral.
    pub error: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct DiffusionTol {
    pub inner: f64,
    pub outer: f64,
}

impl Default for DiffusionTol {
    fn default() -> Self {
        DiffusionTol {
            inner: 1e-9,
            outer: 1e-8,
        }
    }
}

/// D = ∫dk ρ_W(k) τ_s(k) v(k)², with τ_s⁻¹(k) = ∫dq w⁽⁰⁾_{k→q} and the
/// parabolic velocity v = 2gk/(1−g).
pub fn diffusion_quadrature(g: f64, params: &ModelParams, tol: DiffusionTol) -> Result<DiffusionEstimate> {
    check_ferro(g)?;
    let beta = params.beta;
    let k_th = ((1.0 - g) / (beta * g)).sqrt();
    let rate_unit = 4.0 * params.alpha / beta;
    let inner_tol = QuadTol::new(tol.inner, 0.0);
    let mut failure = None;
    let integrand = |k: f64| {
        let kk = k / k_th;
        // τ_s⁻¹(k) = ∫dq (4α/β) f((K²−Q²)/2), with dq = k_th dQ.
        let out_rate = match kernel_loss_rate(kk, inner_tol) {
            Ok(l) => rate_unit * k_th * l,
            Err(e) => {
                failure.get_or_insert(e);
                return 0.0;
            }
        };
        let weight = (-0.5 * kk * kk).exp() / ((2.0 * PI).sqrt() * k_th);
        let vel = 2.0 * g * k / (1.0 - g);
        weight * vel * vel / out_rate
    };
    let k_max = 12.0 * k_th;
    let outer = integrate(integrand, 0.0, k_max, QuadTol::new(tol.outer * 1e-3, tol.outer * 1e-3));
    if let Some(e) = failure {
        return Err(e);
    }
    let outer = outer?;
    let d = 2.0 * outer.value;
    let c_d = d * params.alpha * (1.0 - g).powf(1.5) / (beta.sqrt() * g.powf(1.5));
    if (2.0 * outer.error) > tol.outer * d.max(1.0) {
        return Err(Error::Quadrature {
            achieved: 2.0 * outer.error,
            requested: tol.outer,
        });
    }
    Ok(DiffusionEstimate {
        d,
        c_d,
        error: 2.0 * outer.error,
    })
}

#[derive(Debug, Clone)]
pub struct KernelSpectrum {
    /// Descending eigenvalues in units of τ_r⁻¹.
    pub eigenvalues: Vec<f64>,
    pub grid_size: usize,
    pub k_max: f64,
    /// Overlap |⟨v₀|√(wM)⟩| of the top eigenvector with the Maxwellian.
    pub maxwell_overlap: f64,
}

impl KernelSpectrum {
    pub fn e0(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn e1(&self) -> f64 {
        self.eigenvalues[1]
    }
}

pub const KERNEL_K_MAX: f64 = 6.0;

/// Discretizes the linearized intraband operator
/// (L̄ρ)_K = ∫dQ [f((Q²−K²)/2) ρ_Q − f((K²−Q²)/2) ρ_K]
/// on a uniform trapezoid grid over [−K_max, K_max] and diagonalizes it after
/// the Maxwell-weighted similarity transform.
pub fn kernel_spectrum(grid_size: usize, k_max: f64) -> Result<KernelSpectrum> {
    if grid_size < 3 || !(k_max > 0.0) {
        return Err(Error::Domain(format!(
            "kernel grid needs at least 3 points and K_max > 0 (got {grid_size}, {k_max})"
        )));
    }
    let m = grid_size;
    let h = 2.0 * k_max / (m - 1) as f64;
    let ks: Vec<f64> = (0..m).map(|i| -k_max + i as f64 * h).collect();
    let wts: Vec<f64> = (0..m)
        .map(|i| if i == 0 || i == m - 1 { 0.5 * h } else { h })
        .collect();
    let maxwell: Vec<f64> = ks.iter().map(|k| (-0.5 * k * k).exp()).collect();
    // S = diag(√(w/p)) L diag(√(p/w)) is symmetric because of detailed balance.
    let mut s = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        let mut loss = 0.0;
        for j in 0..m {
            if j != i {
                loss += intraband_kernel(ks[i], ks[j]) * wts[j];
            }
        }
        s[(i, i)] = -loss;
    }
    for i in 0..m {
        for j in (i + 1)..m {
            // Gain term L_ij = f((Q_j² − K_i²)/2) w_j, symmetrized.
            let lij = intraband_kernel(ks[j], ks[i]) * wts[j];
            let v = lij * (wts[i] / maxwell[i]).sqrt() * (maxwell[j] / wts[j]).sqrt();
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    let eig = s.symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let top = eig.eigenvectors.column(order[0]);
    let ref_vec: Vec<f64> = (0..m).map(|i| (wts[i] * maxwell[i]).sqrt()).collect();
    let norm = ref_vec.iter().map(|x| x * x).sum::<f64>().sqrt();
    let overlap = top
        .iter()
        .zip(&ref_vec)
        .map(|(a, b)| a * b)
        .sum::<f64>()
        .abs()
        / norm;
    Ok(KernelSpectrum {
        eigenvalues,
        grid_size,
        k_max,
        maxwell_overlap: overlap,
    })
}

/// Kernel spectrum with a truncation check: recomputes at doubled K_max (same
/// spacing) and fails when e₁ drifts by more than `drift_tol` relative.
pub fn kernel_spectrum_checked(grid_size: usize, k_max: f64, drift_tol: f64) -> Result<KernelSpectrum> {
    let base = kernel_spectrum(grid_size, k_max)?;
    let wide = kernel_spectrum(2 * grid_size - 1, 2.0 * k_max)?;
    let drift = ((wide.e1() - base.e1()) / base.e1()).abs();
    if drift > drift_tol {
        return Err(Error::Domain(format!(
            "K_max = {k_max} too small: e1 drifts by {drift:.3e} when K_max is doubled"
        )));
    }
    Ok(base)
}
