// SPDX-License-Identifier: Apache-2.0

//! Cumulative quadrature on a uniform grid.
//!
//! Even indices use composite Simpson from the origin. An odd index adds one
//! more interval to the preceding even value using the three-point quadratic
//! rule over that interval, so every index carries O(h⁴) accuracy. With only
//! two grid points the single interval falls back to the trapezoid rule.

use crate::linalg::{c, CMatrix};

/// Values that can be accumulated by a linear quadrature rule.
pub trait Accumulate: Clone {
    fn zero_like(&self) -> Self;
    fn add_scaled(&mut self, other: &Self, s: f64);
}

impl Accumulate for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn add_scaled(&mut self, other: &Self, s: f64) {
        *self += s * other;
    }
}

impl Accumulate for CMatrix {
    fn zero_like(&self) -> Self {
        CMatrix::zeros(self.nrows(), self.ncols())
    }
    fn add_scaled(&mut self, other: &Self, s: f64) {
        *self += other * c(s);
    }
}

impl Accumulate for nalgebra::DVector<f64> {
    fn zero_like(&self) -> Self {
        nalgebra::DVector::zeros(self.len())
    }
    fn add_scaled(&mut self, other: &Self, s: f64) {
        self.axpy(s, other, 1.0);
    }
}

/// One step of the cumulative rule: `F[k] = F[base] + Σ w_j f[j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub base: usize,
    pub weights: Vec<(usize, f64)>,
}

/// The step table for a grid of `n` points with spacing `h`. Entry 0 is the
/// empty step (`F[0] = 0`).
pub fn cumulative_steps(n: usize, h: f64) -> Vec<Step> {
    let mut steps = Vec::with_capacity(n);
    if n == 0 {
        return steps;
    }
    steps.push(Step {
        base: 0,
        weights: Vec::new(),
    });
    for k in 1..n {
        let step = if n == 2 {
            Step {
                base: 0,
                weights: vec![(0, h / 2.0), (1, h / 2.0)],
            }
        } else if k == 1 {
            Step {
                base: 0,
                weights: vec![(0, 5.0 * h / 12.0), (1, 8.0 * h / 12.0), (2, -h / 12.0)],
            }
        } else if k % 2 == 0 {
            Step {
                base: k - 2,
                weights: vec![(k - 2, h / 3.0), (k - 1, 4.0 * h / 3.0), (k, h / 3.0)],
            }
        } else {
            Step {
                base: k - 1,
                weights: vec![
                    (k - 2, -h / 12.0),
                    (k - 1, 8.0 * h / 12.0),
                    (k, 5.0 * h / 12.0),
                ],
            }
        };
        steps.push(step);
    }
    steps
}

/// `F[k] = ∫_{t_0}^{t_k} f` for every grid index.
pub fn cumulative<T: Accumulate>(values: &[T], h: f64) -> Vec<T> {
    if values.is_empty() {
        return Vec::new();
    }
    let steps = cumulative_steps(values.len(), h);
    let mut out: Vec<T> = Vec::with_capacity(values.len());
    out.push(values[0].zero_like());
    for step in steps.iter().skip(1) {
        let mut acc = out[step.base].clone();
        for &(j, w) in &step.weights {
            acc.add_scaled(&values[j], w);
        }
        out.push(acc);
    }
    out
}

/// Cumulative integral of the scalar samples `f`.
pub fn cumulative_scalar(f: &[f64], h: f64) -> Vec<f64> {
    cumulative(f, h)
}

/// `∫_{t_0}^{t_k} f(s) e^{g(s) - g(t_k)} ds` for every `k`, accumulated without
/// forming `e^{g}` on its own, so it stays finite when `g` grows large.
pub fn cumulative_damped(f: &[f64], g: &[f64], h: f64) -> Vec<f64> {
    assert_eq!(f.len(), g.len());
    if f.is_empty() {
        return Vec::new();
    }
    let steps = cumulative_steps(f.len(), h);
    let mut out = vec![0.0; f.len()];
    for (k, step) in steps.iter().enumerate().skip(1) {
        let mut acc = out[step.base] * (g[step.base] - g[k]).exp();
        for &(j, w) in &step.weights {
            acc += w * f[j] * (g[j] - g[k]).exp();
        }
        out[k] = acc;
    }
    out
}
