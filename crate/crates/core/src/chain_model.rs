//! Free-fermion description of the isolated transverse-field Ising chain.

use std::f64::consts::PI;

use crate::{Error, Result, SEMICLASSICAL_THRESHOLD};

/// Physical parameters in reduced units (ħ = J = 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Dimensionless Ohmic coupling.
    pub alpha: f64,
    /// Inverse temperature 2J/k_BT.
    pub beta: f64,
    /// Bath cutoff frequency in units of 2J/ħ.
    pub omega_c: f64,
    /// Polaron-transformation cutoff in units of 2J/ħ.
    pub omega_cutoff: f64,
    /// Number of momentum modes N.
    pub n_sites: usize,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            alpha: 0.06,
            beta: 25.0,
            omega_c: 100.0,
            omega_cutoff: 10.0,
            n_sites: 1024,
        }
    }
}

impl ModelParams {
    pub fn new(alpha: f64, beta: f64) -> Self {
        ModelParams {
            alpha,
            beta,
            ..Default::default()
        }
    }

    pub fn with_sites(mut self, n_sites: usize) -> Self {
        self.n_sites = n_sites;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Config(format!("beta must be positive, got {}", self.beta)));
        }
        if self.n_sites < 4 || self.n_sites % 2 != 0 {
            return Err(Error::Config(format!(
                "n_sites must be even and at least 4, got {}",
                self.n_sites
            )));
        }
        if !(self.omega_c > 0.0) || !(self.omega_cutoff > 0.0) {
            return Err(Error::Config("bath cutoffs must be positive".into()));
        }
        if self.omega_c > 1.0 && self.omega_cutoff > self.omega_c {
            return Err(Error::Config(format!(
                "omega_cutoff ({}) must not exceed omega_c ({}) in the broadband regime",
                self.omega_cutoff, self.omega_c
            )));
        }
        if self.alpha >= 0.2 {
            log::warn!("alpha = {} is not small; weak-coupling rates are inaccurate", self.alpha);
        }
        Ok(())
    }
}

/// Antiperiodic momentum grid k_m = π(2m+1−N)/N, m = 0..N−1.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumGrid {
    pub momenta: Vec<f64>,
    /// Band-sum normalization 1/N.
    pub weight: f64,
}

impl MomentumGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::Config(format!("grid size must be even and >= 4, got {n}")));
        }
        let nf = n as f64;
        let momenta = (0..n)
            .map(|m| PI * (2.0 * m as f64 + 1.0 - nf) / nf)
            .collect();
        Ok(MomentumGrid {
            momenta,
            weight: 1.0 / nf,
        })
    }

    pub fn len(&self) -> usize {
        self.momenta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.momenta.is_empty()
    }

    /// Index of −k for the mode at index `m`.
    pub fn partner(&self, m: usize) -> usize {
        self.momenta.len() - 1 - m
    }
}

/// Dispersion ε_k, cos θ_k and sin θ_k tabulated on a grid at fixed g.
#[derive(Debug, Clone)]
pub struct Band {
    pub g: f64,
    pub eps: Vec<f64>,
    pub cos_theta: Vec<f64>,
    pub sin_theta: Vec<f64>,
}

impl Band {
    pub fn new(g: f64, grid: &MomentumGrid) -> Self {
        let n = grid.len();
        let mut eps = Vec::with_capacity(n);
        let mut cos_theta = Vec::with_capacity(n);
        let mut sin_theta = Vec::with_capacity(n);
        for &k in &grid.momenta {
            let (a, b) = (g - k.cos(), k.sin());
            let e = a.hypot(b);
            eps.push(e);
            cos_theta.push(a / e);
            sin_theta.push(b / e);
        }
        Band {
            g,
            eps,
            cos_theta,
            sin_theta,
        }
    }
}

/// ε_k = √((g − cos k)² + sin²k), in units of 2J.
pub fn dispersion(g: f64, k: f64) -> f64 {
    (g - k.cos()).hypot(k.sin())
}

/// θ_k = atan2(sin k, g − cos k).
pub fn bogoliubov_angle(g: f64, k: f64) -> Result<f64> {
    let (a, b) = (g - k.cos(), k.sin());
    if a == 0.0 && b == 0.0 {
        return Err(Error::Singular(format!("Bogoliubov angle undefined at g = {g}, k = {k}")));
    }
    Ok(b.atan2(a))
}

/// Gap Δ = 2|1 − g| in units of J.
pub fn gap(g: f64) -> f64 {
    2.0 * (1.0 - g).abs()
}

/// m_e = (1 − g)/2g, ferromagnetic side only.
pub fn effective_mass(g: f64) -> Result<f64> {
    check_ferro(g)?;
    Ok((1.0 - g) / (2.0 * g))
}

/// λ_T = 2π √(βg / 2(1 − g)) in lattice units.
pub fn thermal_wavelength(g: f64, beta: f64) -> Result<f64> {
    check_ferro(g)?;
    if !(beta > 0.0) {
        return Err(Error::Domain(format!("beta must be positive, got {beta}")));
    }
    Ok(2.0 * PI * (beta * g / (2.0 * (1.0 - g))).sqrt())
}

/// n_th = N⁻¹ Σ_k e^{−βε_k}.
pub fn thermal_density_exact(g: f64, beta: f64, grid: &MomentumGrid) -> f64 {
    let sum: f64 = grid
        .momenta
        .iter()
        .map(|&k| (-beta * dispersion(g, k)).exp())
        .sum();
    sum * grid.weight
}

/// Semiclassical n_th ≃ √((1−g)/2πβg) e^{−β(1−g)}.
pub fn thermal_density_asymptotic(g: f64, beta: f64) -> f64 {
    let x = beta * (1.0 - g);
    if x < SEMICLASSICAL_THRESHOLD {
        log::warn!("thermal_density_asymptotic used at beta(1-g) = {x:.3} < {SEMICLASSICAL_THRESHOLD}");
    }
    semiclassical_density(g, beta)
}

pub(crate) fn semiclassical_density(g: f64, beta: f64) -> f64 {
    ((1.0 - g) / (2.0 * PI * beta * g)).sqrt() * (-beta * (1.0 - g)).exp()
}

/// Kibble-Zurek defect density n_v = √(v/8π).
pub fn kz_density(v: f64) -> f64 {
    (v / (8.0 * PI)).sqrt()
}

pub(crate) fn check_ferro(g: f64) -> Result<()> {
    if g > 0.0 && g < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("requires 0 < g < 1, got g = {g}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn dispersion_examples() {
        assert_eq!(dispersion(1.0, 0.0), 0.0);
        assert_relative_eq!(dispersion(0.0, 0.7), 1.0, epsilon = 1e-15);
        assert_relative_eq!(dispersion(2.0, PI), 3.0, epsilon = 1e-15);
    }

    #[test]
    fn angle_examples() {
        assert_eq!(bogoliubov_angle(2.0, 0.0).unwrap(), 0.0);
        assert!(bogoliubov_angle(0.7, PI).unwrap().abs() < 1e-15);
        assert!(bogoliubov_angle(1.0, 0.0).is_err());
        // Small-k expansion at g = 1: θ = π/2 − k/2.
        let k: f64 = 0.01;
        let oracle = k.sin().atan2(1.0 - k.cos());
        let th = bogoliubov_angle(1.0, k).unwrap();
        assert_relative_eq!(th, oracle, epsilon = 1e-15);
        assert!((th - (PI / 2.0 - k / 2.0)).abs() < 1e-6);
    }

    #[test]
    fn gap_and_mass() {
        assert_eq!(gap(1.0), 0.0);
        assert_relative_eq!(gap(0.9), 0.2, epsilon = 1e-12);
        assert_relative_eq!(gap(1.1), 0.2, epsilon = 1e-12);
        assert_relative_eq!(effective_mass(0.5).unwrap(), 0.5);
        assert_relative_eq!(effective_mass(0.8).unwrap(), 0.125, epsilon = 1e-12);
        assert!(effective_mass(1.0 - 1e-12).unwrap() < 1e-11);
        assert!(effective_mass(1.0).is_err());
        assert!(effective_mass(0.0).is_err());
    }

    #[test]
    fn wavelength() {
        assert_relative_eq!(thermal_wavelength(0.5, 2.0).unwrap(), 2.0 * PI, epsilon = 1e-14);
        assert_relative_eq!(
            thermal_wavelength(0.9, 25.0).unwrap(),
            66.6432,
            max_relative = 1e-5
        );
        assert!(thermal_wavelength(1.0 - 1e-14, 25.0).unwrap() > 1e7);
        assert!(thermal_wavelength(1.2, 25.0).is_err());
    }

    #[test]
    fn thermal_density_limits() {
        let grid = MomentumGrid::new(256).unwrap();
        assert!(thermal_density_exact(0.5, 1e4, &grid) < 1e-300);
        assert_relative_eq!(thermal_density_exact(0.3, 0.0, &grid), 1.0, epsilon = 1e-14);
        assert!(thermal_density_asymptotic(1.0 - 1e-12, 25.0) < 1e-6);
        assert_eq!(thermal_density_asymptotic(0.9, 1e4), 0.0);
    }

    #[test]
    fn thermal_density_asymptotic_value() {
        let direct = (0.1f64 / (2.0 * PI * 25.0 * 0.9)).sqrt() * (-2.5f64).exp();
        assert_relative_eq!(thermal_density_asymptotic(0.9, 25.0), direct, epsilon = 1e-15);
        assert_relative_eq!(direct, 2.1832e-3, max_relative = 1e-4);
    }

    // Continuum oracle: (1/π)∫_0^π e^{−βε(k)} dk by composite Simpson.
    fn continuum_density(g: f64, beta: f64) -> f64 {
        let m = 200_000;
        let h = PI / m as f64;
        let f = |k: f64| (-beta * dispersion(g, k)).exp();
        let mut s = f(0.0) + f(PI);
        for i in 1..m {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        s * h / 3.0 / PI
    }

    #[test]
    fn exact_density_against_continuum() {
        let grid = MomentumGrid::new(4096).unwrap();
        for &(g, b) in &[(0.9, 25.0), (0.96, 25.0), (0.5, 10.0)] {
            assert_relative_eq!(
                thermal_density_exact(g, b, &grid),
                continuum_density(g, b),
                max_relative = 1e-9
            );
        }
    }

    #[test]
    fn exact_over_asymptotic_ratios() {
        // Frozen from the continuum oracle above: the closed form misses O(1/x)
        // corrections from the non-parabolic band.
        let grid = MomentumGrid::new(8192).unwrap();
        let r = |g: f64| thermal_density_exact(g, 25.0, &grid) / thermal_density_asymptotic(g, 25.0);
        assert_relative_eq!(r(0.96), 1.30620, max_relative = 1e-4);
        assert_relative_eq!(r(0.9), 1.13667, max_relative = 1e-4);
    }

    #[test]
    fn exact_density_converged_in_n() {
        let a = MomentumGrid::new(4096).unwrap();
        let b = MomentumGrid::new(8192).unwrap();
        for &(g, beta) in &[(0.96, 25.0), (0.9, 25.0), (0.5, 4.0)] {
            let (na, nb) = (thermal_density_exact(g, beta, &a), thermal_density_exact(g, beta, &b));
            assert!(((na - nb) / nb).abs() < 1e-6);
        }
    }

    #[test]
    fn asymptotic_ratio_approaches_one() {
        let grid = MomentumGrid::new(8192).unwrap();
        let beta = 100.0;
        let ratios: Vec<f64> = [3.0, 5.0, 8.0]
            .iter()
            .map(|x| {
                let g = 1.0 - x / beta;
                thermal_density_exact(g, beta, &grid) / thermal_density_asymptotic(g, beta)
            })
            .collect();
        assert!(ratios[0] > ratios[1] && ratios[1] > ratios[2] && ratios[2] > 1.0);
    }

    #[test]
    fn kz() {
        assert_relative_eq!(kz_density(8.0 * PI), 1.0, epsilon = 1e-15);
        assert_relative_eq!(kz_density(2.85e-7), 1.065e-4, max_relative = 1e-3);
        assert_eq!(kz_density(0.0), 0.0);
    }

    #[test]
    fn grid_pairs() {
        let grid = MomentumGrid::new(16).unwrap();
        for m in 0..16 {
            assert_eq!(grid.momenta[grid.partner(m)], -grid.momenta[m]);
        }
        assert!(MomentumGrid::new(7).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::default().validate().is_ok());
        assert!(ModelParams::new(-0.1, 25.0).validate().is_err());
        assert!(ModelParams::default().with_sites(5).validate().is_err());
        let mut p = ModelParams::default();
        p.omega_cutoff = 2.0 * p.omega_c;
        assert!(p.validate().is_err());
    }

    proptest! {
        #[test]
        fn band_minimum(g in 0.0f64..3.0, k in -PI..PI) {
            prop_assert!(dispersion(g, k) >= (g - 1.0).abs() - 1e-14);
        }

        #[test]
        fn parity(g in 0.01f64..3.0, k in 0.001f64..PI) {
            prop_assert_eq!(dispersion(g, k), dispersion(g, -k));
            let a = bogoliubov_angle(g, k).unwrap();
            let b = bogoliubov_angle(g, -k).unwrap();
            prop_assert!((a + b).abs() < 1e-15);
            prop_assert!((0.0..=PI).contains(&a));
        }

        #[test]
        fn parabolic_expansion(g in 0.2f64..0.9, k in 0.0f64..0.05) {
            let e = 2.0 * dispersion(g, k);
            let m = effective_mass(g).unwrap();
            let approx = gap(g) + k * k / (2.0 * m);
            // Quartic remainder with a generous bound on its coefficient.
            let c = 10.0 / (1.0 - g).powi(3);
            prop_assert!((e - approx).abs() <= c * k.powi(4) + 1e-15);
        }
    }
}
