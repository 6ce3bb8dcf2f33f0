//! Kinetics of quantum annealing of a transverse-field Ising chain coupled to an
//! Ohmic bath.
//!
//! Reduced units throughout: ħ = J = 1, so energies are in units of J, times in
//! ħ/J and rates in J/ħ. Temperature enters through `beta = 2J/k_BT`, and fermion
//! energies `eps_k` are in units of 2J (physical energy `2 J eps_k`).
//!
//! The modules follow the physics from the bottom up:
//!
//! - [`chain_model`]: free-fermion dispersion, Bogoliubov angles, thermal densities.
//! - [`bath_rates`]: bath-induced transition rates, relaxation/recombination rates,
//!   the scale-free intraband kernel and the diffusion coefficient.
//! - [`boltzmann_solver`]: the momentum-resolved quantum Boltzmann equation.
//! - [`annealing_analysis`]: reduced generation-recombination kinetics, the
//!   diffusion-limited crossover and the optimal annealing rate.
//! - [`spectrum_renorm`]: second-order polaronic shift of the fermion band.
//! - [`stochastic_lab`]: lattice Monte Carlo for kink annihilation with
//!   time-dependent diffusion.
//! - [`cli`]: the command driver behind the `qa-kinetics` binary.

pub mod annealing_analysis;
pub mod bath_rates;
pub mod boltzmann_solver;
pub mod chain_model;
pub mod cli;
pub mod error;
pub mod numerics;
pub mod output;
pub mod spectrum_renorm;
pub mod stochastic_lab;

pub use error::{Error, Result};

/// Below this value of `beta (1 - g)` the semiclassical closed forms are flagged as inaccurate.
pub const SEMICLASSICAL_THRESHOLD: f64 = 3.0;
