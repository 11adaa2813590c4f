//! Dormand-Prince 5(4) explicit Runge-Kutta pair for complex linear
//! systems, with a proportional-integral step-size controller.
//!
//! The controller bounds the local error per unit time: a step of size `h`
//! is accepted when the max-norm of the embedded error estimate is at most
//! `tol * h`. The fifth-order solution is propagated (local extrapolation).

use num_complex::Complex64;

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
// fifth-order weights (also row 7 of the tableau, FSAL)
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// difference between fifth- and fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Classical order of the propagated solution.
pub const ORDER: i32 = 5;

/// Settings for the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveOptions {
    /// Allowed local error per unit time.
    pub tol: f64,
    pub h_init: f64,
    pub h_max: f64,
    /// Steps smaller than this abort the integration.
    pub h_min: f64,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            h_init: 1e-2,
            h_max: f64::INFINITY,
            h_min: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    /// Largest `| ||y||^2 - ||y0||^2 |` seen on accepted steps.
    pub max_norm_drift: f64,
}

/// Integrator workspace; reusable across calls with the same dimension.
pub struct DormandPrince {
    k: [Vec<Complex64>; 7],
    tmp: Vec<Complex64>,
    next: Vec<Complex64>,
}

fn axpy_into(out: &mut [Complex64], y: &[Complex64], h: f64, terms: &[(f64, &[Complex64])]) {
    for i in 0..out.len() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (c, k) in terms {
            acc += k[i] * *c;
        }
        out[i] = y[i] + acc * h;
    }
}

fn norm_sqr(y: &[Complex64]) -> f64 {
    y.iter().map(|c| c.norm_sqr()).sum()
}

impl DormandPrince {
    pub fn new(dim: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); dim];
        Self {
            k: std::array::from_fn(|_| z.clone()),
            tmp: z.clone(),
            next: z,
        }
    }

    /// One step from `(t, y)` with size `h`; leaves the fifth-order result in
    /// `self.next` and the derivative at the new point in `self.k[6]`.
    /// `self.k[0]` must already hold `f(t, y)`. Returns the error estimate
    /// (max-norm).
    fn step<F>(&mut self, f: &mut F, t: f64, y: &[Complex64], h: f64) -> f64
    where
        F: FnMut(f64, &[Complex64], &mut [Complex64]),
    {
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        axpy_into(&mut self.tmp, y, h, &[(A21, k1)]);
        f(t + C2 * h, &self.tmp, k2);
        axpy_into(&mut self.tmp, y, h, &[(A31, k1), (A32, k2)]);
        f(t + C3 * h, &self.tmp, k3);
        axpy_into(&mut self.tmp, y, h, &[(A41, k1), (A42, k2), (A43, k3)]);
        f(t + C4 * h, &self.tmp, k4);
        axpy_into(
            &mut self.tmp,
            y,
            h,
            &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)],
        );
        f(t + C5 * h, &self.tmp, k5);
        axpy_into(
            &mut self.tmp,
            y,
            h,
            &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)],
        );
        f(t + h, &self.tmp, k6);
        axpy_into(
            &mut self.next,
            y,
            h,
            &[(B1, k1), (B3, k3), (B4, k4), (B5, k5), (B6, k6)],
        );
        f(t + h, &self.next, k7);
        let mut err: f64 = 0.0;
        for i in 0..y.len() {
            let e =
                (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
            err = err.max(e.norm());
        }
        err
    }

    /// Fixed-step integration over `[t0, t1]` in `steps` equal steps.
    pub fn integrate_fixed<F>(
        &mut self,
        mut f: F,
        y: &mut [Complex64],
        t0: f64,
        t1: f64,
        steps: usize,
    ) where
        F: FnMut(f64, &[Complex64], &mut [Complex64]),
    {
        let h = (t1 - t0) / steps as f64;
        for s in 0..steps {
            let t = t0 + h * s as f64;
            f(t, y, &mut self.k[0]);
            self.step(&mut f, t, y, h);
            y.copy_from_slice(&self.next);
        }
    }

    /// Adaptive integration from `t0` to the last entry of `checkpoints`.
    ///
    /// Steps are shortened so that every checkpoint time is hit exactly, and
    /// `observe(t, y)` is called there. Checkpoints must be ascending and
    /// greater than or equal to `t0`.
    pub fn integrate<F, O>(
        &mut self,
        mut f: F,
        y: &mut [Complex64],
        t0: f64,
        checkpoints: &[f64],
        opts: &AdaptiveOptions,
        mut observe: O,
    ) -> Result<IntegrationStats>
    where
        F: FnMut(f64, &[Complex64], &mut [Complex64]),
        O: FnMut(f64, &[Complex64]),
    {
        const SAFETY: f64 = 0.9;
        const ALPHA: f64 = 0.7 / 4.0;
        const BETA: f64 = 0.4 / 4.0;

        let mut stats = IntegrationStats::default();
        let norm0 = norm_sqr(y);
        let mut t = t0;
        let mut h = opts.h_init.min(opts.h_max);
        let mut err_prev: f64 = 1.0;
        f(t, y, &mut self.k[0]);

        for &target in checkpoints {
            while t < target {
                let remaining = target - t;
                let landing = h >= remaining;
                let h_try = if landing { remaining } else { h };
                let err = self.step(&mut f, t, y, h_try) / (opts.tol * h_try);
                if err <= 1.0 {
                    t = if landing { target } else { t + h_try };
                    y.copy_from_slice(&self.next);
                    self.k.swap(0, 6);
                    stats.accepted += 1;
                    stats.max_norm_drift = stats.max_norm_drift.max((norm_sqr(y) - norm0).abs());
                    let e = err.max(1e-10);
                    let fac = SAFETY * e.powf(-ALPHA) * err_prev.powf(BETA);
                    err_prev = e;
                    if !landing {
                        h = (h_try * fac.clamp(0.2, 5.0)).min(opts.h_max);
                    }
                } else {
                    stats.rejected += 1;
                    let fac = if err.is_finite() {
                        (SAFETY * err.powf(-ALPHA)).max(0.2)
                    } else {
                        0.2
                    };
                    h = h_try * fac;
                    if h < opts.h_min {
                        return Err(Error::StepUnderflow(h));
                    }
                }
            }
            observe(t, y);
        }
        Ok(stats)
    }
}
