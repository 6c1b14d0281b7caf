//! Product integration of the Riemann-Liouville integral `I^{1-alpha}`
//! against piecewise-linear interpolants on a uniform grid.
//!
//! For samples `w_0..w_n` at `t_i = i dt`,
//! `q_n(w) = dt^{1-alpha} / Gamma(3-alpha) * sum_i B(n, i) w_i`, which is the
//! exact fractional integral of the piecewise-linear interpolant of the
//! samples. The error is `O(dt^2)` for twice differentiable `w`.

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::rates::fit_log_slope;

pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

/// `sum_i B(n, i)` for any `n >= 1`: the rule is exact on constants.
pub fn weight_sum(alpha: f64, n: usize) -> f64 {
    (2.0 - alpha) * (n as f64).powf(1.0 - alpha)
}

/// Interior weight `B(n, i)` for `m = n - i >= 1`:
/// `(m-1)^{2-a} + (m+1)^{2-a} - 2 m^{2-a}`, evaluated without cancellation.
fn interior_weight(alpha: f64, m: usize) -> f64 {
    let beta = 2.0 - alpha;
    let x = 1.0 / m as f64;
    let lower = (beta * (-x).ln_1p()).exp_m1();
    let upper = (beta * x.ln_1p()).exp_m1();
    (m as f64).powf(beta) * (lower + upper)
}

/// `B(n, 0) = n^{1-a} (2 - a - n) + (n-1)^{2-a}`, evaluated without
/// cancellation.
fn first_weight(alpha: f64, n: usize) -> f64 {
    let beta = 2.0 - alpha;
    let x = 1.0 / n as f64;
    (n as f64).powf(beta) * (beta * x + (beta * (-x).ln_1p()).exp_m1())
}

/// Quadrature weights for a uniform grid of `steps` intervals on `[0, T]`.
#[derive(Debug, Clone)]
pub struct FracWeights {
    alpha: f64,
    steps: usize,
    dt: f64,
    scale: f64,
    /// `interior[m] = B(n, n - m)` for `1 <= m <= steps`; index 0 unused.
    interior: Vec<f64>,
}

impl FracWeights {
    pub fn new(alpha: f64, final_time: f64, steps: usize) -> Result<FracWeights> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha must lie in (0, 1), got {alpha}"
            )));
        }
        if !(final_time > 0.0 && final_time.is_finite()) || steps == 0 {
            return Err(Error::InvalidArgument(format!(
                "need T > 0 and N >= 1, got T = {final_time}, N = {steps}"
            )));
        }
        let dt = final_time / steps as f64;
        let scale = dt.powf(1.0 - alpha) / gamma(3.0 - alpha);
        let mut interior = vec![0.0; steps + 1];
        for (m, v) in interior.iter_mut().enumerate().skip(1) {
            *v = interior_weight(alpha, m);
        }
        Ok(FracWeights {
            alpha,
            steps,
            dt,
            scale,
            interior,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `dt^{1-alpha} / Gamma(3-alpha)`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    /// `B(n, i)` for `0 <= i <= n <= steps`, `n >= 1`.
    pub fn weight(&self, n: usize, i: usize) -> Result<f64> {
        if n == 0 || i > n || n > self.steps {
            return Err(Error::InvalidArgument(format!(
                "weight index (n = {n}, i = {i}) outside 0 <= i <= n <= {}, n >= 1",
                self.steps
            )));
        }
        Ok(self.b(n, i))
    }

    pub(crate) fn b(&self, n: usize, i: usize) -> f64 {
        if i == n {
            1.0
        } else if i == 0 {
            first_weight(self.alpha, n)
        } else {
            self.interior[n - i]
        }
    }

    /// Coefficients `c_i`, `i = 0..=n`, such that
    /// `q_{n+1} + q_n = scale * (W^{n+1} + sum_i c_i W^i)`, with `q_0 = 0`.
    pub fn step_history_coefficients(&self, n: usize) -> Vec<f64> {
        assert!(n < self.steps, "step {n} beyond the grid");
        (0..=n)
            .map(|i| {
                let next = self.b(n + 1, i);
                if n == 0 {
                    next
                } else {
                    next + self.b(n, i)
                }
            })
            .collect()
    }
}

/// `sum_i coef_i * history_i`, accumulated in index order per entry.
pub fn combine_history(exec: Exec, coefs: &[f64], history: &[Vec<f64>]) -> Result<Vec<f64>> {
    if coefs.len() != history.len() {
        return Err(Error::DimensionMismatch {
            expected: history.len(),
            found: coefs.len(),
        });
    }
    let dim = history.first().map_or(0, Vec::len);
    if let Some(bad) = history.iter().find(|v| v.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: bad.len(),
        });
    }
    let mut out = vec![0.0; dim];
    exec.for_each_chunk_mut(&mut out, |off, chunk| {
        let end = off + chunk.len();
        for (c, w) in coefs.iter().zip(history) {
            for (o, x) in chunk.iter_mut().zip(&w[off..end]) {
                *o += c * x;
            }
        }
    });
    Ok(out)
}

/// Discrete fractional integral `q_n` from samples `W^0..W^n`; `q_0 = 0`.
pub fn qn_apply(weights: &FracWeights, history: &[Vec<f64>]) -> Result<Vec<f64>> {
    let Some(first) = history.first() else {
        return Err(Error::InvalidArgument("empty history".into()));
    };
    let n = history.len() - 1;
    if n == 0 {
        return Ok(vec![0.0; first.len()]);
    }
    if n > weights.steps() {
        return Err(Error::InvalidArgument(format!(
            "history of {} samples exceeds the {}-step grid",
            history.len(),
            weights.steps()
        )));
    }
    let coefs: Vec<f64> = (0..=n).map(|i| weights.scale() * weights.b(n, i)).collect();
    combine_history(Exec::default(), &coefs, history)
}

/// `I^{1-alpha} t^p = Gamma(p+1) / Gamma(p+2-alpha) * t^{p+1-alpha}`.
pub fn rl_integral_power(alpha: f64, p: f64, t: f64) -> Result<f64> {
    if p <= -1.0 {
        return Err(Error::InvalidArgument(format!(
            "power must exceed -1, got {p}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) || t < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "need alpha in (0, 1) and t >= 0, got alpha = {alpha}, t = {t}"
        )));
    }
    let exponent = p + 1.0 - alpha;
    if t == 0.0 && exponent > 0.0 {
        return Ok(0.0);
    }
    Ok(gamma(p + 1.0) / gamma(p + 2.0 - alpha) * t.powf(exponent))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObservedOrder {
    /// Errors at rounding level for every grid.
    Exact,
    Fitted(f64),
}

#[derive(Debug, Clone)]
pub struct QuadratureOrderStudy {
    pub dts: Vec<f64>,
    /// Maximum over grid points of `|I^{1-alpha} w(t_n) - q_n(w)|`.
    pub errors: Vec<f64>,
    pub order: ObservedOrder,
}

/// Measures the convergence order of `q_n` for a scalar test function
/// against its exact fractional integral over a sweep of step counts.
pub fn quadrature_error_order(
    alpha: f64,
    test_fn: impl Fn(f64) -> f64,
    exact_integral: impl Fn(f64) -> f64,
    final_time: f64,
    sweep: &[usize],
) -> Result<QuadratureOrderStudy> {
    let mut dts = Vec::with_capacity(sweep.len());
    let mut errors = Vec::with_capacity(sweep.len());
    let mut magnitude = 0.0f64;
    for &steps in sweep {
        let w = FracWeights::new(alpha, final_time, steps)?;
        let samples: Vec<f64> = (0..=steps).map(|i| test_fn(w.time(i))).collect();
        let mut worst = 0.0f64;
        for n in 1..=steps {
            let q: f64 = w.scale() * (0..=n).map(|i| w.b(n, i) * samples[i]).sum::<f64>();
            let exact = exact_integral(w.time(n));
            magnitude = magnitude.max(exact.abs());
            worst = worst.max((q - exact).abs());
        }
        dts.push(w.dt());
        errors.push(worst);
    }
    let floor = 1e-12 * magnitude.max(1.0);
    let order = if errors.iter().all(|&e| e <= floor) {
        ObservedOrder::Exact
    } else {
        ObservedOrder::Fitted(fit_log_slope(&dts, &errors))
    };
    Ok(QuadratureOrderStudy { dts, errors, order })
}
