//! Second-order Rosenbrock integrator with a third-order error estimate
//! (the modified Rosenbrock pair of Shampine and Reichelt, as in MATLAB's ode23s).
//!
//! The stage matrix W = I − h·d·J is factorized once per step. The last stage
//! derivative is the first one of the next step.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

const D: f64 = 0.292_893_218_813_452_5; // 1/(2+√2)
const E32: f64 = 7.414_213_562_373_095; // 6+√2

pub trait StiffSystem {
    fn dim(&self) -> usize;
    fn rhs(&mut self, t: f64, y: &[f64], dy: &mut [f64]);
    fn jacobian(&mut self, t: f64, y: &[f64], jac: &mut DMatrix<f64>);

    /// ∂f/∂t; forward difference by default.
    fn dfdt(&mut self, t: f64, y: &[f64], f0: &[f64], out: &mut [f64]) {
        let dt = f64::EPSILON.sqrt() * t.abs().max(1.0);
        self.rhs(t + dt, y, out);
        for (o, f) in out.iter_mut().zip(f0) {
            *o = (*o - f) / dt;
        }
    }

    /// Rejects candidate states (a rejected step is retried with a smaller h).
    fn admissible(&self, _y: &[f64]) -> bool {
        true
    }
}

pub enum StepControl {
    Continue,
    Stop,
    /// The callback changed `y`; the derivative is recomputed.
    Modified,
}

pub struct StepInfo<'a> {
    pub t_prev: f64,
    pub y_prev: &'a [f64],
    pub f_prev: &'a [f64],
    pub t: f64,
    pub y: &'a mut [f64],
    pub f: &'a [f64],
}

impl StepInfo<'_> {
    /// Cubic Hermite interpolant of component `i` at time `s` inside the step.
    pub fn hermite(&self, i: usize, s: f64) -> f64 {
        let h = self.t - self.t_prev;
        let u = (s - self.t_prev) / h;
        let (y0, y1) = (self.y_prev[i], self.y[i]);
        let (m0, m1) = (self.f_prev[i] * h, self.f[i] * h);
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * y0
            + (u3 - 2.0 * u2 + u) * m0
            + (-2.0 * u3 + 3.0 * u2) * y1
            + (u3 - u2) * m1
    }
}

#[derive(Debug, Clone)]
pub struct Rosenbrock {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for Rosenbrock {
    fn default() -> Self {
        Rosenbrock {
            rtol: 1e-8,
            atol: 1e-14,
            h_init: None,
            h_max: f64::INFINITY,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Stats {
    pub t: f64,
    pub y: Vec<f64>,
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    pub jac_evals: usize,
    pub stopped: bool,
}

impl Rosenbrock {
    pub fn with_tol(rtol: f64, atol: f64) -> Self {
        Rosenbrock {
            rtol,
            atol,
            ..Default::default()
        }
    }

    fn norm(&self, err: &[f64], y0: &[f64], y1: &[f64]) -> f64 {
        err.iter()
            .zip(y0.iter().zip(y1))
            .map(|(e, (a, b))| e.abs() / (self.atol + self.rtol * a.abs().max(b.abs())))
            .fold(0.0, f64::max)
    }

    /// Integrates from `t0` to `t_end`, calling `on_step` after every accepted step.
    pub fn integrate<S, C>(&self, sys: &mut S, t0: f64, y0: &[f64], t_end: f64, mut on_step: C) -> Result<Stats>
    where
        S: StiffSystem + ?Sized,
        C: FnMut(&mut StepInfo) -> StepControl,
    {
        let n = sys.dim();
        assert_eq!(y0.len(), n);
        let mut st = Stats {
            t: t0,
            y: y0.to_vec(),
            ..Default::default()
        };
        if t_end <= t0 {
            return Ok(st);
        }
        let mut t = t0;
        let mut y = y0.to_vec();
        let mut f0 = vec![0.0; n];
        sys.rhs(t, &y, &mut f0);
        st.rhs_evals += 1;

        let mut h = match self.h_init {
            Some(h) => h,
            None => {
                let rate = f0
                    .iter()
                    .zip(&y)
                    .map(|(f, y)| f.abs() / (self.atol + self.rtol * y.abs()))
                    .fold(0.0, f64::max);
                if rate > 0.0 {
                    0.8 * self.rtol.powf(1.0 / 3.0) / (rate * self.rtol)
                } else {
                    t_end - t0
                }
            }
        };
        h = h.min(self.h_max).min(t_end - t0);

        let mut jac = DMatrix::<f64>::zeros(n, n);
        let mut dfdt = vec![0.0; n];
        let mut f1 = vec![0.0; n];
        let mut f2 = vec![0.0; n];
        let mut y1 = vec![0.0; n];
        let mut ynew = vec![0.0; n];
        let mut err = vec![0.0; n];
        let mut fresh_jac = true;

        while t < t_end {
            if st.accepted + st.rejected >= self.max_steps {
                return Err(Error::StepUnderflow { t, h });
            }
            if fresh_jac {
                sys.jacobian(t, &y, &mut jac);
                sys.dfdt(t, &y, &f0, &mut dfdt);
                st.jac_evals += 1;
                st.rhs_evals += 1;
                fresh_jac = false;
            }
            let h_min = 16.0 * f64::EPSILON * t.abs().max(1e-300);
            if h < h_min {
                return Err(Error::StepUnderflow { t, h });
            }
            let last = t + h >= t_end;
            if last {
                h = t_end - t;
            }
            let mut w = DMatrix::<f64>::identity(n, n);
            w -= &jac * (h * D);
            let lu = w.lu();
            let solve = |b: Vec<f64>| -> Option<Vec<f64>> {
                lu.solve(&DVector::from_vec(b)).map(|v| v.data.into())
            };
            let hd = h * D;
            let Some(k1) = solve(f0.iter().zip(&dfdt).map(|(f, d)| f + hd * d).collect()) else {
                h *= 0.5;
                st.rejected += 1;
                continue;
            };
            for i in 0..n {
                y1[i] = y[i] + 0.5 * h * k1[i];
            }
            sys.rhs(t + 0.5 * h, &y1, &mut f1);
            let k2 = solve((0..n).map(|i| f1[i] - k1[i]).collect()).unwrap();
            let k2: Vec<f64> = (0..n).map(|i| k2[i] + k1[i]).collect();
            for i in 0..n {
                ynew[i] = y[i] + h * k2[i];
            }
            let ok = ynew.iter().all(|v| v.is_finite()) && sys.admissible(&ynew);
            if !ok {
                h *= 0.25;
                st.rejected += 1;
                continue;
            }
            sys.rhs(t + h, &ynew, &mut f2);
            st.rhs_evals += 2;
            let k3 = solve(
                (0..n)
                    .map(|i| f2[i] - E32 * (k2[i] - f1[i]) - 2.0 * (k1[i] - f0[i]) + hd * dfdt[i])
                    .collect(),
            )
            .unwrap();
            for i in 0..n {
                err[i] = h / 6.0 * (k1[i] - 2.0 * k2[i] + k3[i]);
            }
            let e = self.norm(&err, &y, &ynew);
            if !(e <= 1.0) {
                let fac = if e.is_finite() { (0.8 * e.powf(-1.0 / 3.0)).max(0.1) } else { 0.1 };
                h *= fac;
                st.rejected += 1;
                continue;
            }
            let t_new = if last { t_end } else { t + h };
            st.accepted += 1;
            let control = {
                let mut info = StepInfo {
                    t_prev: t,
                    y_prev: &y,
                    f_prev: &f0,
                    t: t_new,
                    y: &mut ynew,
                    f: &f2,
                };
                on_step(&mut info)
            };
            t = t_new;
            std::mem::swap(&mut y, &mut ynew);
            std::mem::swap(&mut f0, &mut f2);
            match control {
                StepControl::Continue => {}
                StepControl::Modified => {
                    sys.rhs(t, &y, &mut f0);
                    st.rhs_evals += 1;
                }
                StepControl::Stop => {
                    st.stopped = true;
                    break;
                }
            }
            fresh_jac = true;
            let grow = if e > 0.0 { (0.8 * e.powf(-1.0 / 3.0)).min(5.0) } else { 5.0 };
            h = (h * grow).min(self.h_max);
        }
        st.t = t;
        st.y = y;
        Ok(st)
    }
}
