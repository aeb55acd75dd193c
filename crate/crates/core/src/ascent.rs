//! Alternating ascent for the best 1-bounded product correlating with a
//! function, and its use under random restrictions.
//!
//! With all factors but `Pⱼ` fixed, `E[f·ΠP] = Σ_s Pⱼ(s)·c_s` is linear in
//! the values of `Pⱼ`, and its modulus is maximized over the unit disc by
//! `Pⱼ(s) = c̄_s/|c_s|`. Each such update can only increase the objective.

use num_complex::Complex64;
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rayon::prelude::*;

use crate::function::{restrict, Measure, ProductFunction, TableFunction};
use crate::sampling::rng_for;
use crate::tensor::contract_axis_complex;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AscentOptions {
    pub restarts: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for AscentOptions {
    fn default() -> Self {
        Self {
            restarts: 8,
            max_iters: 200,
            tol: 1e-9,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AscentResult {
    pub value: f64,
    pub product: ProductFunction,
    /// Objective after every sweep, one list per restart.
    pub history: Vec<Vec<f64>>,
}

impl AscentResult {
    /// Whether every restart's objective sequence is nondecreasing up to `slack`.
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.history
            .iter()
            .all(|h| h.windows(2).all(|w| w[1] >= w[0] - slack))
    }
}

/// Coefficients `c_s = ν(s)·E[f·Π_{l≠j} P_l | x_j = s]`.
fn coefficients(f: &TableFunction, nu: &Measure, factors: &[Vec<Complex64>], j: usize) -> Vec<Complex64> {
    let (q, n) = (f.q(), f.n());
    let weighted: Vec<Vec<Complex64>> = factors
        .iter()
        .map(|p| p.iter().zip(nu.weights()).map(|(z, &w)| z * w).collect())
        .collect();
    let mut values = f.values().to_vec();
    for axis in (j + 1..n).rev() {
        values = contract_axis_complex(&values, q, axis + 1, axis, &weighted[axis]);
    }
    for (done, axis) in (0..j).enumerate() {
        values = contract_axis_complex(&values, q, j + 1 - done, 0, &weighted[axis]);
    }
    values.iter().zip(nu.weights()).map(|(v, &w)| v * w).collect()
}

fn objective(f: &TableFunction, nu: &Measure, factors: &[Vec<Complex64>]) -> f64 {
    if factors.is_empty() {
        return f.values()[0].norm();
    }
    let c = coefficients(f, nu, factors, 0);
    c.iter().zip(&factors[0]).map(|(a, b)| a * b).sum::<Complex64>().norm()
}

fn phase_of_conj(c: Complex64) -> Complex64 {
    if c.norm() == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        c.conj() / c.norm()
    }
}

fn run(f: &TableFunction, nu: &Measure, opts: &AscentOptions, restart: usize) -> (f64, Vec<Vec<Complex64>>, Vec<f64>) {
    let mut rng = rng_for(opts.seed, restart as u64);
    let mut factors: Vec<Vec<Complex64>> = (0..f.n())
        .map(|_| {
            (0..f.q())
                .map(|_| Complex64::from_polar(1.0, rng.gen::<f64>() * std::f64::consts::TAU))
                .collect()
        })
        .collect();
    let mut history = vec![objective(f, nu, &factors)];
    for _ in 0..opts.max_iters {
        for j in 0..f.n() {
            let c = coefficients(f, nu, &factors, j);
            factors[j] = c.into_iter().map(phase_of_conj).collect();
        }
        let value = objective(f, nu, &factors);
        let prev = *history.last().expect("history starts non-empty");
        debug_assert!(value >= prev - 1e-12, "ascent objective decreased: {prev} → {value}");
        history.push(value);
        if value - prev < opts.tol {
            break;
        }
    }
    (*history.last().unwrap(), factors, history)
}

/// Best `|E_{ν^⊗n}[f·ΠPⱼ]|` found over seeded random restarts.
pub fn best_product_correlation(nu: &Measure, f: &TableFunction, opts: &AscentOptions) -> Result<AscentResult> {
    if nu.len() != f.q() {
        return Err(Error::shape("measure and function alphabets differ in size"));
    }
    if opts.restarts == 0 {
        return Err(Error::invalid("at least one restart is needed"));
    }
    let runs: Vec<_> = (0..opts.restarts).into_par_iter().map(|r| run(f, nu, opts, r)).collect();
    let best = runs
        .iter()
        .enumerate()
        .fold(0, |b, (i, r)| if r.0 > runs[b].0 { i } else { b });
    let product = ProductFunction::new(f.alphabet().clone(), runs[best].1.clone())?;
    Ok(AscentResult {
        value: runs[best].0,
        product,
        history: runs.into_iter().map(|r| r.2).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedResult {
    pub probability: f64,
    pub hits: usize,
    pub trials: usize,
}

/// Parameters of [`restricted_product_correlation`].
#[derive(Debug, Clone)]
pub struct RestrictionSpec<'a> {
    /// Each coordinate is fixed independently with probability `1 − δ`.
    pub delta: f64,
    /// Law of the fixed values `z`.
    pub restriction: &'a Measure,
    /// Product measure on the free coordinates.
    pub inner: &'a Measure,
    pub trials: usize,
    pub seed: u64,
    pub threshold: f64,
}

/// Fraction of draws `(I, z)` for which some product correlates with
/// `f_{I→z}` at least `threshold`.
pub fn restricted_product_correlation(
    f: &TableFunction,
    spec: &RestrictionSpec<'_>,
    opts: &AscentOptions,
) -> Result<RestrictedResult> {
    if !(0.0..=1.0).contains(&spec.delta) {
        return Err(Error::invalid("δ must lie in [0, 1]"));
    }
    if spec.restriction.len() != f.q() || spec.inner.len() != f.q() {
        return Err(Error::shape("measures and function alphabets differ in size"));
    }
    let pick = WeightedIndex::new(spec.restriction.weights()).map_err(|e| Error::invalid(e.to_string()))?;
    let hits: Vec<bool> = (0..spec.trials)
        .into_par_iter()
        .map(|t| -> Result<bool> {
            let mut rng = rng_for(spec.seed, t as u64);
            let mut coords = Vec::new();
            let mut z = Vec::new();
            for c in 0..f.n() {
                if rng.gen::<f64>() < 1.0 - spec.delta {
                    coords.push(c);
                    z.push(pick.sample(&mut rng));
                }
            }
            let g = restrict(f, &coords, &z)?;
            let inner_opts = AscentOptions {
                seed: rng.gen(),
                ..*opts
            };
            Ok(best_product_correlation(spec.inner, &g, &inner_opts)?.value >= spec.threshold)
        })
        .collect::<Result<_>>()?;
    let count = hits.iter().filter(|&&h| h).count();
    Ok(RestrictedResult {
        probability: if spec.trials == 0 { 0.0 } else { count as f64 / spec.trials as f64 },
        hits: count,
        trials: spec.trials,
    })
}
