//! Efron–Stein decomposition `f = Σ_S f^{=S}` under a product measure.
//!
//! `f^{=S} = Π_{j∈S}(I − Eⱼ) Π_{j∉S} Eⱼ f`. The decomposition is computed by
//! splitting on one coordinate at a time; the averaged branch drops that
//! axis from the table, so intermediate tables only carry the coordinates
//! still in play.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::function::{expect_values, Measure, TableFunction};
use crate::tensor::{contract_axis, decode, map_axis, table_len};
use crate::{Error, Result};

/// Largest `n` accepted by [`efron_stein`] by default.
pub const DEFAULT_N_MAX: usize = 10;

/// Components are materialized only when `2ⁿ·qⁿ` stays below this.
pub const COMPONENT_LIMIT: usize = 1 << 24;

#[derive(Debug, Clone)]
pub struct EfronSteinDecomposition {
    pub n: usize,
    /// `W_d = Σ_{|S| = d} ‖f^{=S}‖²` for `d = 0..=n`.
    pub weights: Vec<f64>,
    /// `f^{=S}` keyed by the sorted subset `S`, when small enough to keep.
    pub components: Option<BTreeMap<Vec<usize>, TableFunction>>,
}

impl EfronSteinDecomposition {
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `Σ_S f^{=S}`, when the components were kept.
    pub fn reconstruct(&self) -> Option<TableFunction> {
        let comps = self.components.as_ref()?;
        let mut it = comps.values();
        let first = it.next()?.clone();
        Some(it.fold(first, |acc, c| acc.add(c).expect("components share a shape")))
    }
}

/// A component living on the coordinates `kept`, constant in the others.
struct Leaf {
    kept: Vec<usize>,
    values: Vec<Complex64>,
}

#[allow(clippy::too_many_arguments)]
fn split(
    values: Vec<Complex64>,
    q: usize,
    n: usize,
    nu: &Measure,
    coord: usize,
    kept: &mut Vec<usize>,
    max_degree: usize,
    visit: &mut dyn FnMut(Leaf),
) {
    if coord == n {
        visit(Leaf {
            kept: kept.clone(),
            values,
        });
        return;
    }
    let axes = kept.len() + (n - coord);
    let axis = kept.len();
    if kept.len() < max_degree {
        let mut centred = values.clone();
        map_axis(&mut centred, q, axes, axis, |fibre| {
            let m = nu.expectation(fibre);
            fibre.iter_mut().for_each(|v| *v -= m);
        });
        kept.push(coord);
        split(centred, q, n, nu, coord + 1, kept, max_degree, visit);
        kept.pop();
    }
    let averaged = contract_axis(&values, q, axes, axis, nu.weights());
    split(averaged, q, n, nu, coord + 1, kept, max_degree, visit);
}

fn for_each_component(f: &TableFunction, nu: &Measure, max_degree: usize, visit: &mut dyn FnMut(Leaf)) -> Result<()> {
    if nu.len() != f.q() {
        return Err(Error::shape("measure and function alphabets differ in size"));
    }
    let mut kept = Vec::new();
    split(f.values().to_vec(), f.q(), f.n(), nu, 0, &mut kept, max_degree, visit);
    Ok(())
}

fn leaf_weight(leaf: &Leaf, q: usize, nu: &Measure) -> f64 {
    let sq = leaf.values.iter().map(|z| Complex64::new(z.norm_sqr(), 0.0)).collect();
    expect_values(sq, q, leaf.kept.len(), nu).re
}

/// Broadcasts a leaf back to a full table on `Σⁿ`.
fn expand(leaf: &Leaf, f: &TableFunction) -> TableFunction {
    let q = f.q();
    let mut x = vec![0; f.n()];
    let values = (0..f.values().len())
        .map(|i| {
            decode(i, q, &mut x);
            let idx = leaf.kept.iter().fold(0, |acc, &c| acc * q + x[c]);
            leaf.values[idx]
        })
        .collect();
    TableFunction::new(f.n(), f.alphabet().clone(), values).expect("same shape as f")
}

pub fn efron_stein(f: &TableFunction, nu: &Measure) -> Result<EfronSteinDecomposition> {
    efron_stein_with(f, nu, DEFAULT_N_MAX)
}

pub fn efron_stein_with(f: &TableFunction, nu: &Measure, n_max: usize) -> Result<EfronSteinDecomposition> {
    let n = f.n();
    Error::guard("Efron–Stein arity", n as f64, n_max as f64)?;
    let materialize = table_len(2 * f.q(), n).is_some_and(|len| len <= COMPONENT_LIMIT);
    let mut weights = vec![0.0; n + 1];
    let mut components = materialize.then(BTreeMap::new);
    for_each_component(f, nu, n, &mut |leaf| {
        weights[leaf.kept.len()] += leaf_weight(&leaf, f.q(), nu);
        if let Some(map) = components.as_mut() {
            map.insert(leaf.kept.clone(), expand(&leaf, f));
        }
    })?;
    Ok(EfronSteinDecomposition {
        n,
        weights,
        components,
    })
}

/// Degree weights `W_0, …, W_n` without materializing components.
pub fn degree_weights(f: &TableFunction, nu: &Measure) -> Result<Vec<f64>> {
    let mut weights = vec![0.0; f.n() + 1];
    for_each_component(f, nu, f.n(), &mut |leaf| {
        weights[leaf.kept.len()] += leaf_weight(&leaf, f.q(), nu);
    })?;
    Ok(weights)
}

/// `L = Σ_{|S| ≤ d} f^{=S}` and `‖L‖₂`.
pub fn low_degree_project(f: &TableFunction, d: usize, nu: &Measure) -> Result<(TableFunction, f64)> {
    let mut acc = vec![Complex64::default(); f.values().len()];
    let mut norm_sq = 0.0;
    for_each_component(f, nu, d, &mut |leaf| {
        norm_sq += leaf_weight(&leaf, f.q(), nu);
        let full = expand(&leaf, f);
        acc.iter_mut().zip(full.values()).for_each(|(a, v)| *a += v);
    })?;
    let l = TableFunction::new(f.n(), f.alphabet().clone(), acc)?;
    Ok((l, norm_sq.sqrt()))
}

/// Largest `|S|` carrying weight above `tol`, or `None` for the zero function.
pub fn degree(f: &TableFunction, nu: &Measure, tol: f64) -> Result<Option<usize>> {
    Ok(degree_weights(f, nu)?.iter().rposition(|&w| w > tol))
}
