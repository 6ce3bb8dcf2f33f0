//! Second-order polaronic shift Σ_k and particle-hole mixing Σ_k^{(c)} of the
//! fermion band from zero-temperature Ohmic bosons, in units of 2J:
//!
//!   Σ_k = (α/2) v.p.∫ dω φ(ω) Σ_k' [ |c_kk'|²/(ε_k−ε_k'−ω) + 4|s_kk'|²/(ε_k+ε_k'−ω) ],
//!
//! with φ(ω) = ω e^{−ω/ω_c}, |c_kk'|² = 4cos²[(θ_k+θ_k')/2]/N and
//! |s_kk'|² = sin²[(θ_k+θ_k')/2]/N. Frequencies are in units of 2J/ħ.
//!
//! Nothing here feeds back into the rates or the kinetics.

use rayon::prelude::*;

use crate::chain_model::{bogoliubov_angle, dispersion, Band, ModelParams, MomentumGrid};
use crate::numerics::{integrate, QuadTol};
use crate::{Error, Result};

/// Upper frequency limit in units of ω_c for narrow-band baths (e^{−60} is negligible).
pub const NARROW_BAND_LIMIT: f64 = 60.0;

/// Bath parameters above which a Ising-energy renormalization is reported as not small.
pub const RENORM_WARN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsingRenorm {
    /// W = 2α ln(ω_c/ω_cutoff).
    pub w: f64,
    /// J → J e^{−W}.
    pub factor: f64,
    /// W above [`RENORM_WARN`].
    pub large: bool,
}

/// Renormalization of the Ising energy by bosons above ω_cutoff. Only applies to
/// broadband baths with ω_c ≥ ω_cutoff > 1; otherwise W = 0.
pub fn ising_renorm_factor(alpha: f64, omega_c: f64, omega_cutoff: f64) -> IsingRenorm {
    let w = if omega_cutoff > 1.0 && omega_c >= omega_cutoff {
        2.0 * alpha * (omega_c / omega_cutoff).ln()
    } else {
        0.0
    };
    let large = w > RENORM_WARN;
    if large {
        log::warn!("Ising energy renormalization W = {w:.4} is not small");
    }
    IsingRenorm {
        w,
        factor: (-w).exp(),
        large,
    }
}

/// Controls the principal-value frequency integrals.
#[derive(Debug, Clone, Copy)]
pub struct PvOptions {
    /// Half-width around the pole inside which the subtracted integrand is
    /// replaced by its Taylor expansion.
    pub window: f64,
    pub tol: QuadTol,
}

impl Default for PvOptions {
    fn default() -> Self {
        PvOptions {
            window: 1e-4,
            tol: QuadTol::new(1e-13, 1e-10),
        }
    }
}

/// Spectral weight and integration range of the bath.
#[derive(Debug, Clone, Copy)]
struct Bath {
    omega_c: f64,
    upper: f64,
}

impl Bath {
    fn new(params: &ModelParams) -> Self {
        let upper = if params.omega_c <= 1.0 {
            NARROW_BAND_LIMIT * params.omega_c
        } else {
            params.omega_cutoff
        };
        Bath {
            omega_c: params.omega_c,
            upper,
        }
    }

    fn phi(&self, w: f64) -> f64 {
        w * (-w / self.omega_c).exp()
    }

    /// v.p.∫_0^U φ(ω)/(ω − e) dω.
    fn pv(&self, e: f64, opts: &PvOptions) -> Result<f64> {
        let (c, u) = (self.omega_c, self.upper);
        if e.abs() < 1e-300 {
            return Ok(integrate(|w| (-w / c).exp(), 0.0, u, opts.tol)?.value);
        }
        if e < 0.0 || e >= u {
            return Ok(integrate(|w| self.phi(w) / (w - e), 0.0, u, opts.tol)?.value);
        }
        let pe = self.phi(e);
        let ex = (-e / c).exp();
        let d1 = (1.0 - e / c) * ex;
        let d2 = (e / c - 2.0) / c * ex;
        let delta = opts.window * e.max(1e-3);
        let reg = |w: f64| {
            let x = w - e;
            if x.abs() < delta {
                d1 + 0.5 * d2 * x
            } else {
                (self.phi(w) - pe) / x
            }
        };
        let left = integrate(reg, 0.0, e, opts.tol)?.value;
        let right = integrate(reg, e, u, opts.tol)?.value;
        Ok(left + right + pe * ((u - e) / e).ln())
    }
}

/// Σ_k and Σ_k^{(c)} at one momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeShift {
    pub k: f64,
    pub eps: f64,
    pub sigma: f64,
    pub sigma_mix: f64,
}

/// Evaluates both shifts at momentum `k`, summing k' over `grid`.
pub fn mode_shift(g: f64, k: f64, params: &ModelParams, grid: &MomentumGrid, opts: &PvOptions) -> Result<ModeShift> {
    if !(g > 0.0) {
        return Err(Error::Domain(format!("renormalization needs g > 0, got {g}")));
    }
    let bath = Bath::new(params);
    let band = Band::new(g, grid);
    let eps = dispersion(g, k);
    let theta = bogoliubov_angle(g, k)?;
    let n = grid.len() as f64;
    let (mut sigma, mut mix) = (0.0, 0.0);
    for q in 0..grid.len() {
        let theta_q = band.sin_theta[q].atan2(band.cos_theta[q]);
        let half = 0.5 * (theta + theta_q);
        // 1/(E − ω) = −1/(ω − E)
        let j_minus = bath.pv(eps - band.eps[q], opts)?;
        let j_plus = bath.pv(eps + band.eps[q], opts)?;
        let (c, s) = (half.cos(), half.sin());
        sigma -= 4.0 * (c * c * j_minus + s * s * j_plus);
        mix += (2.0 * half).sin() * (j_plus - j_minus);
    }
    let pre = 0.5 * params.alpha / n;
    Ok(ModeShift {
        k,
        eps,
        sigma: pre * sigma,
        sigma_mix: pre * mix,
    })
}

/// Polaronic shift Σ_k.
pub fn polaron_shift(g: f64, k: f64, params: &ModelParams, grid: &MomentumGrid) -> Result<f64> {
    Ok(mode_shift(g, k, params, grid, &PvOptions::default())?.sigma)
}

/// Mixing amplitude Σ_k^{(c)} (coefficient of i in the pair term).
pub fn mixing_term(g: f64, k: f64, params: &ModelParams, grid: &MomentumGrid) -> Result<f64> {
    Ok(mode_shift(g, k, params, grid, &PvOptions::default())?.sigma_mix)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumFit {
    /// Σ extrapolated to ε = 0 along the fitted line.
    pub sigma0: f64,
    pub slope_c: f64,
    /// Largest deviation from the line divided by the range of Σ in the window.
    pub residual: f64,
    pub points: usize,
}

#[derive(Debug, Clone)]
pub struct RenormResult {
    pub modes: Vec<ModeShift>,
    pub fit: SpectrumFit,
}

/// Least-squares line Σ ≈ Σ₀ + C ε.
pub fn fit_line(modes: &[ModeShift]) -> Result<SpectrumFit> {
    if modes.len() < 8 {
        return Err(Error::Window(modes.len()));
    }
    let n = modes.len() as f64;
    let mx = modes.iter().map(|m| m.eps).sum::<f64>() / n;
    let my = modes.iter().map(|m| m.sigma).sum::<f64>() / n;
    let sxy: f64 = modes.iter().map(|m| (m.eps - mx) * (m.sigma - my)).sum();
    let sxx: f64 = modes.iter().map(|m| (m.eps - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let sigma0 = my - slope * mx;
    let dev = modes
        .iter()
        .map(|m| (m.sigma - sigma0 - slope * m.eps).abs())
        .fold(0.0, f64::max);
    let (lo, hi) = modes
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), m| (a.min(m.sigma), b.max(m.sigma)));
    Ok(SpectrumFit {
        sigma0,
        slope_c: slope,
        residual: dev / (hi - lo),
        points: modes.len(),
    })
}

/// Shifts at the grid momenta 0 < k with ε_k < `eps_max`, and the linear fit
/// Σ_k ≈ Σ₀ + C ε_k over them.
pub fn linear_spectrum_fit(g: f64, params: &ModelParams, grid: &MomentumGrid, eps_max: f64) -> Result<RenormResult> {
    let ks: Vec<f64> = grid
        .momenta
        .iter()
        .cloned()
        .filter(|&k| k > 0.0 && dispersion(g, k) < eps_max)
        .collect();
    if ks.len() < 8 {
        return Err(Error::Window(ks.len()));
    }
    let opts = PvOptions::default();
    let modes = ks
        .par_iter()
        .map(|&k| mode_shift(g, k, params, grid, &opts))
        .collect::<Result<Vec<_>>>()?;
    let fit = fit_line(&modes)?;
    Ok(RenormResult { modes, fit })
}

/// Shifts at the smallest positive grid momentum, standing in for k → 0.
pub fn long_wavelength_shift(g: f64, params: &ModelParams, grid: &MomentumGrid) -> Result<ModeShift> {
    let k = grid.momenta[grid.len() / 2];
    mode_shift(g, k, params, grid, &PvOptions::default())
}

/// Shifts at all grid momenta k > 0.
pub fn band_shifts(g: f64, params: &ModelParams, grid: &MomentumGrid) -> Result<Vec<ModeShift>> {
    let opts = PvOptions::default();
    grid.momenta
        .par_iter()
        .filter(|&&k| k > 0.0)
        .map(|&k| mode_shift(g, k, params, grid, &opts))
        .collect()
}
