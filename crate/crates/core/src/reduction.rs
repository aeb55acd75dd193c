//! The constructions that reduce a k-ary correlation to lower arity: the
//! doubled distribution `μ₋ₖ,₋ₖ`, the three-wise distribution `ξ` over
//! `Σ × Σ × Σ⁺` with its `⋆`-sampling and companion function `g`, the
//! conditional expectations `f̃ₖ` and `P̃`, and the numerical checks built
//! on them.

use std::collections::BTreeMap;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::correlation::{exact_correlation, Function};
use crate::distribution::{decompose_mixture, to_f64, Alphabet, JointDistribution};
use crate::function::{checked_table_len, restrict, stability, Measure, ProductFunction, TableFunction};
use crate::sampling::{rng_for, ExactCategorical};
use crate::tensor::{csum, decode, CompensatedSum};
use crate::{Error, Result};

fn require_arity(dist: &JointDistribution, min: usize) -> Result<()> {
    if dist.arity() < min {
        return Err(Error::invalid(format!("needs arity at least {min}, got {}", dist.arity())));
    }
    Ok(())
}

/// Draw `xₖ ∼ μₖ`, then two independent `(x₁, …, xₖ₋₁)` from `μ | xₖ`.
/// The result lives on `2(k − 1)` coordinates, the two copies side by side.
pub fn build_mu_mk_mk(dist: &JointDistribution) -> Result<JointDistribution> {
    require_arity(dist, 2)?;
    let last = dist.arity() - 1;
    let mk = dist.coordinate_masses(last);
    let mut groups: BTreeMap<usize, Vec<(&[usize], &BigRational)>> = BTreeMap::new();
    for (x, p) in dist.atoms() {
        groups.entry(x[last]).or_default().push((&x[..last], p));
    }
    let mut atoms = Vec::new();
    for (s, group) in &groups {
        for (y, p) in group {
            for (y2, p2) in group {
                let mut atom = y.to_vec();
                atom.extend_from_slice(y2);
                atoms.push((atom, *p * *p2 / &mk[*s]));
            }
        }
    }
    let mut alphabets = dist.alphabets()[..last].to_vec();
    alphabets.extend_from_slice(&dist.alphabets()[..last]);
    JointDistribution::new(alphabets, atoms)
}

/// `μ₋ₖ` placed on the diagonal of the doubled space.
pub fn diagonal_embedding(dist: &JointDistribution) -> Result<JointDistribution> {
    require_arity(dist, 2)?;
    let last = dist.arity() - 1;
    let coords: Vec<usize> = (0..last).collect();
    let marginal = dist.marginal(&coords)?;
    let mut alphabets = marginal.alphabets().to_vec();
    alphabets.extend_from_slice(marginal.alphabets());
    JointDistribution::new(
        alphabets,
        marginal.atoms().map(|(y, p)| {
            let mut atom = y.clone();
            atom.extend_from_slice(y);
            (atom, p.clone())
        }),
    )
}

/// Whether `μ₋ₖ,₋ₖ(y, y) ≥ μ₋ₖ(y)²` for every `y`.
pub fn diagonal_dominance(dist: &JointDistribution) -> Result<bool> {
    let doubled = build_mu_mk_mk(dist)?;
    let diag = diagonal_embedding(dist)?;
    let dominated = diag.atoms().all(|(yy, p)| doubled.mass(yy) >= p * p);
    Ok(dominated)
}

/// `ν` with `μ₋ₖ,₋ₖ = α²·μ₋ₖ + (1 − α²)·ν`, `α` the least atom mass of `μ`.
pub fn residual_mixture(dist: &JointDistribution) -> Result<JointDistribution> {
    let alpha = dist.min_atom_mass();
    decompose_mixture(&build_mu_mk_mk(dist)?, &diagonal_embedding(dist)?, &(&alpha * &alpha))
}

/// `Σ⁺ = (Σ × Σ) ∪ {⋆}`. The pair `(a, b)` has index `a·|Σ| + b` and `⋆`
/// comes last.
#[derive(Debug, Clone, PartialEq)]
pub struct StarAlphabet {
    base: Alphabet,
    alphabet: Alphabet,
}

pub const STAR: &str = "*";

impl StarAlphabet {
    pub fn new(base: Alphabet) -> Self {
        let mut symbols: Vec<String> = Vec::with_capacity(base.len() * base.len() + 1);
        for a in base.symbols() {
            for b in base.symbols() {
                symbols.push(format!("({a},{b})"));
            }
        }
        symbols.push(STAR.to_string());
        let alphabet = Alphabet::new(symbols).expect("pair names are distinct");
        Self { base, alphabet }
    }

    pub fn base(&self) -> &Alphabet {
        &self.base
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn len(&self) -> usize {
        self.alphabet.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn pair(&self, a: usize, b: usize) -> usize {
        a * self.base.len() + b
    }

    pub fn star(&self) -> usize {
        self.alphabet.len() - 1
    }

    /// The pair behind a symbol, or `None` for `⋆`.
    pub fn unpair(&self, s: usize) -> Option<(usize, usize)> {
        (s != self.star()).then(|| (s / self.base.len(), s % self.base.len()))
    }
}

/// Parameters of `ξ`.
#[derive(Debug, Clone, PartialEq)]
pub struct XiParams {
    /// Probability of the `ν₁` branch.
    pub p_nu: BigRational,
    /// Probability of `⋆` within the diagonal branch.
    pub p_star: BigRational,
    /// A distribution on `Σ × Σ`.
    pub nu1: JointDistribution,
    /// A distribution on `Σ`.
    pub mu1: JointDistribution,
}

fn check_probability(name: &str, p: &BigRational) -> Result<()> {
    if p.is_negative() || p > &BigRational::one() {
        return Err(Error::invalid(format!("{name} = {p} is not a probability")));
    }
    Ok(())
}

/// Parameters derived from `μ`: `p_nu = 1 − α²`, `ν₁` the marginal of the
/// residual mixture on the first coordinate of each copy, `μ₁` the first
/// marginal of `μ`.
///
/// A single-atom `μ` has `α = 1`, so the residual is undefined; the `ν₁`
/// branch then has probability zero and `ν₁` is set to the diagonal of `μ₁`.
pub fn xi_params_from(dist: &JointDistribution, p_star: BigRational) -> Result<XiParams> {
    require_arity(dist, 2)?;
    check_probability("p_star", &p_star)?;
    let alpha = dist.min_atom_mass();
    let mu1 = dist.marginal(&[0])?;
    let (p_nu, nu1) = if alpha.is_one() {
        let sigma = dist.alphabet(0).clone();
        let diag = JointDistribution::new(
            vec![sigma.clone(), sigma],
            mu1.atoms().map(|(x, p)| (vec![x[0], x[0]], p.clone())),
        )?;
        (BigRational::zero(), diag)
    } else {
        let nu = residual_mixture(dist)?;
        (BigRational::one() - &alpha * &alpha, nu.marginal(&[0, dist.arity() - 1])?)
    };
    Ok(XiParams {
        p_nu,
        p_star,
        nu1,
        mu1,
    })
}

/// `ξ` on `Σ × Σ × Σ⁺`: with probability `p_nu` emit `(x, x', (x, x'))` for
/// `(x, x') ∼ ν₁`; otherwise draw `x ∼ μ₁` and emit `(x, x, ⋆)` with
/// probability `p_star`, `(x, x, (x, x))` otherwise.
pub fn build_xi(params: &XiParams) -> Result<(JointDistribution, StarAlphabet)> {
    check_probability("p_nu", &params.p_nu)?;
    check_probability("p_star", &params.p_star)?;
    if params.mu1.arity() != 1 || params.nu1.arity() != 2 {
        return Err(Error::shape("μ₁ must be unary and ν₁ binary"));
    }
    let sigma = params.mu1.alphabet(0).clone();
    if params.nu1.alphabet(0) != &sigma || params.nu1.alphabet(1) != &sigma {
        return Err(Error::shape("ν₁ and μ₁ use different alphabets"));
    }
    let star = StarAlphabet::new(sigma.clone());
    let one = BigRational::one();
    let diag = &one - &params.p_nu;
    let mut atoms = Vec::new();
    for (ab, p) in params.nu1.atoms() {
        atoms.push((vec![ab[0], ab[1], star.pair(ab[0], ab[1])], &params.p_nu * p));
    }
    for (x, p) in params.mu1.atoms() {
        let x = x[0];
        atoms.push((vec![x, x, star.pair(x, x)], &diag * (&one - &params.p_star) * p));
        atoms.push((vec![x, x, star.star()], &diag * &params.p_star * p));
    }
    let xi = JointDistribution::new(vec![sigma.clone(), sigma, star.alphabet().clone()], atoms)?;
    Ok((xi, star))
}

/// `(x, x') ∼⋆ x⁺`: pair entries are copied, and every `⋆` entry becomes a
/// fresh shared draw `xᵢ = x'ᵢ ∼ μ₁`.
pub fn star_sample(
    x_plus: &[usize],
    star: &StarAlphabet,
    mu1: &JointDistribution,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let symbols: Vec<usize> = mu1.atoms().map(|(x, _)| x[0]).collect();
    let cat = ExactCategorical::new(mu1.atoms().map(|(_, p)| p))?;
    let mut rng = rng_for(seed, 0);
    let mut x = Vec::with_capacity(x_plus.len());
    let mut x2 = Vec::with_capacity(x_plus.len());
    for &s in x_plus {
        if s >= star.len() {
            return Err(Error::invalid(format!("symbol index {s} outside Σ⁺")));
        }
        let (a, b) = star.unpair(s).unwrap_or_else(|| {
            let w = symbols[cat.sample(&mut rng)];
            (w, w)
        });
        x.push(a);
        x2.push(b);
    }
    Ok((x, x2))
}

/// `g(x⁺) = E_{(x, x') ∼⋆ x⁺}[f₁(x)·conj(f₁(x'))]`, exactly.
pub fn build_g(f1: &TableFunction, mu1: &Measure, star: &StarAlphabet) -> Result<TableFunction> {
    if f1.alphabet() != star.base() || mu1.len() != f1.q() {
        return Err(Error::shape("f₁, μ₁ and Σ⁺ disagree on the base alphabet"));
    }
    let n = f1.n();
    let len = checked_table_len(star.len(), n)?;
    let q = f1.q();
    let values: Vec<Complex64> = (0..len)
        .into_par_iter()
        .map(|i| {
            let mut xp = vec![0; n];
            decode(i, star.len(), &mut xp);
            let mut a = vec![0; n];
            let mut b = vec![0; n];
            let mut stars = Vec::new();
            for (j, &s) in xp.iter().enumerate() {
                match star.unpair(s) {
                    Some((u, v)) => {
                        a[j] = u;
                        b[j] = v;
                    }
                    None => stars.push(j),
                }
            }
            let mut acc = CompensatedSum::new();
            let mut w = vec![0; stars.len()];
            for t in 0..q.pow(stars.len() as u32) {
                decode(t, q, &mut w);
                let mut weight = 1.0;
                for (&j, &s) in stars.iter().zip(&w) {
                    a[j] = s;
                    b[j] = s;
                    weight *= mu1.weights()[s];
                }
                acc.add(f1.eval(&a) * f1.eval(&b).conj() * weight);
            }
            acc.value()
        })
        .collect();
    TableFunction::new(n, star.alphabet().clone(), values)
}

/// Both sides of the identity between the three-wise correlation under `ξ`
/// and the averaged stability of restricted products.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obs34Report {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub gap: f64,
}

/// Largest `n` for which the identity is checked by full enumeration.
pub const OBS34_N_MAX: usize = 3;

/// Evaluates `E_{ξ^⊗n}[f₁(x)·conj(f₁(x'))·conj(g(x⁺))]` and
/// `E_{I ∼_r [n]} E_{(z, z') ∼ ν₁^I}[Stab_{1−p⋆}((f₁)_{I→z}·conj((f₁)_{I→z'}))]`,
/// where `I ∼_r [n]` keeps each coordinate independently with probability
/// `r` and the stability is taken under `μ₁`.
pub fn check_obs34(
    dist: &JointDistribution,
    f1: &TableFunction,
    restriction_rate: &BigRational,
    p_star: &BigRational,
) -> Result<Obs34Report> {
    let params = xi_params_from(dist, p_star.clone())?;
    check_obs34_with(&params, f1, restriction_rate)
}

/// [`check_obs34`] for explicit `ξ` parameters.
pub fn check_obs34_with(params: &XiParams, f1: &TableFunction, restriction_rate: &BigRational) -> Result<Obs34Report> {
    check_probability("restriction rate", restriction_rate)?;
    let n = f1.n();
    Error::guard("identity check arity", n as f64, OBS34_N_MAX as f64)?;
    let (xi, star) = build_xi(params)?;
    let mu1 = Measure::from_rationals(&params.mu1.coordinate_masses(0))?;
    let g = build_g(f1, &mu1, &star)?;
    let functions: Vec<Function> = vec![f1.clone().into(), f1.conj().into(), g.conj().into()];
    let lhs = exact_correlation(&xi, &functions, n)?.value;

    let r = to_f64(restriction_rate);
    let rho = 1.0 - to_f64(&params.p_star);
    let pairs: Vec<(usize, usize, f64)> = params.nu1.atoms().map(|(ab, p)| (ab[0], ab[1], to_f64(p))).collect();
    let mut terms = Vec::new();
    for mask in 0..1usize << n {
        let coords: Vec<usize> = (0..n).filter(|&j| mask >> j & 1 == 1).collect();
        let m = coords.len();
        let p_i = r.powi(m as i32) * (1.0 - r).powi((n - m) as i32);
        if p_i == 0.0 {
            continue;
        }
        let mut choice = vec![0; m];
        for t in 0..pairs.len().pow(m as u32) {
            decode(t, pairs.len(), &mut choice);
            let z: Vec<usize> = choice.iter().map(|&c| pairs[c].0).collect();
            let z2: Vec<usize> = choice.iter().map(|&c| pairs[c].1).collect();
            let weight: f64 = choice.iter().map(|&c| pairs[c].2).product();
            let h = restrict(f1, &coords, &z)?.mul(&restrict(f1, &coords, &z2)?.conj())?;
            terms.push(Complex64::new(stability(&h, rho, &mu1)? * weight * p_i, 0.0));
        }
    }
    let rhs = csum(terms);
    Ok(Obs34Report {
        lhs,
        rhs,
        gap: (lhs - rhs).norm(),
    })
}

/// Outcome of testing both candidate restriction rates against the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct RateResolution {
    /// `(label, rate, gap)` for `1 − α²` and `1 − α`.
    pub candidates: Vec<(&'static str, BigRational, f64)>,
    /// The single candidate within `tol`, if exactly one is.
    pub selected: Option<&'static str>,
}

pub fn resolve_obs34_rate(
    dist: &JointDistribution,
    f1: &TableFunction,
    p_star: &BigRational,
    tol: f64,
) -> Result<RateResolution> {
    let alpha = dist.min_atom_mass();
    let one = BigRational::one();
    let candidates = [("1-alpha^2", &one - &alpha * &alpha), ("1-alpha", &one - &alpha)];
    let mut out = Vec::new();
    for (label, rate) in candidates {
        let gap = check_obs34(dist, f1, &rate, p_star)?.gap;
        out.push((label, rate, gap));
    }
    let passing: Vec<&'static str> = out.iter().filter(|c| c.2 <= tol).map(|c| c.0).collect();
    Ok(RateResolution {
        selected: (passing.len() == 1).then(|| passing[0]),
        candidates: out,
    })
}

/// Atoms grouped by one coordinate, each with its conditional weight
/// `μ(x)/μᵢ(xᵢ)` and the remaining coordinates.
fn conditional_groups(dist: &JointDistribution, coord: usize) -> Vec<Vec<(Vec<usize>, BigRational)>> {
    let masses = dist.coordinate_masses(coord);
    let mut groups = vec![Vec::new(); dist.alphabet(coord).len()];
    for (x, p) in dist.atoms() {
        let mut rest = x.clone();
        rest.remove(coord);
        groups[x[coord]].push((rest, p / &masses[x[coord]]));
    }
    groups
}

/// `f̃ₖ(x) = E_{μ^⊗n}[Π_{i<k} fᵢ(xᵢ) | xₖ = x]`.
pub fn tilde_f(dist: &JointDistribution, functions: &[TableFunction]) -> Result<TableFunction> {
    require_arity(dist, 2)?;
    let last = dist.arity() - 1;
    if functions.len() != last {
        return Err(Error::shape(format!("need {last} functions, got {}", functions.len())));
    }
    let n = functions[0].n();
    for (i, f) in functions.iter().enumerate() {
        if f.n() != n || f.alphabet() != dist.alphabet(i) {
            return Err(Error::shape(format!("function {i} does not match coordinate {i}")));
        }
    }
    let masses = dist.coordinate_masses(last);
    if let Some(s) = masses.iter().position(Zero::is_zero) {
        return Err(Error::ZeroMass {
            coord: last,
            symbol: dist.alphabet(last).symbol(s).to_string(),
        });
    }
    let terms: f64 = (dist.support_len() as f64).powi(n as i32);
    Error::guard("conditional expectation terms", terms, crate::correlation::EXACT_TERM_LIMIT)?;
    let groups: Vec<Vec<(Vec<usize>, f64)>> = conditional_groups(dist, last)
        .into_iter()
        .map(|g| g.into_iter().map(|(y, w)| (y, to_f64(&w))).collect())
        .collect();
    let qk = dist.alphabet(last).len();
    let len = checked_table_len(qk, n)?;
    let values: Vec<Complex64> = (0..len)
        .into_par_iter()
        .map(|i| {
            let mut x = vec![0; n];
            decode(i, qk, &mut x);
            let mut acc = CompensatedSum::new();
            conditional_walk(&groups, &x, functions, 0, &vec![0; last], 1.0, &mut acc);
            acc.value()
        })
        .collect();
    TableFunction::new(n, dist.alphabet(last).clone(), values)
}

fn conditional_walk(
    groups: &[Vec<(Vec<usize>, f64)>],
    x: &[usize],
    functions: &[TableFunction],
    j: usize,
    idx: &[usize],
    weight: f64,
    acc: &mut CompensatedSum,
) {
    if j == x.len() {
        acc.add(functions.iter().zip(idx).map(|(f, &i)| f.values()[i]).product::<Complex64>() * weight);
        return;
    }
    for (y, w) in &groups[x[j]] {
        let next: Vec<usize> = idx
            .iter()
            .zip(functions)
            .zip(y)
            .map(|((&i, f), &s)| i * f.q() + s)
            .collect();
        conditional_walk(groups, x, functions, j + 1, &next, weight * w, acc);
    }
}

/// `P̃(x) = E[Π_{i≥2} Pᵢ(xᵢ) | x₁ = x]`, factor by factor. Symbols of zero
/// mass get the value 0.
pub fn tilde_p(dist: &JointDistribution, products: &[ProductFunction]) -> Result<ProductFunction> {
    require_arity(dist, 2)?;
    if products.len() != dist.arity() - 1 {
        return Err(Error::shape(format!("need {} product functions", dist.arity() - 1)));
    }
    let n = products[0].n();
    for (i, p) in products.iter().enumerate() {
        if p.n() != n || p.alphabet() != dist.alphabet(i + 1) {
            return Err(Error::shape(format!("product {i} does not match coordinate {}", i + 1)));
        }
    }
    let masses = dist.coordinate_masses(0);
    let groups: Vec<Vec<(Vec<usize>, f64)>> = dist
        .alphabet(0)
        .symbols()
        .iter()
        .enumerate()
        .map(|(s, _)| {
            if masses[s].is_zero() {
                Vec::new()
            } else {
                dist.atoms()
                    .filter(|(x, _)| x[0] == s)
                    .map(|(x, p)| (x[1..].to_vec(), to_f64(&(p / &masses[s]))))
                    .collect()
            }
        })
        .collect();
    let factors = (0..n)
        .map(|j| {
            groups
                .iter()
                .map(|g| {
                    csum(g.iter().map(|(y, w)| {
                        products.iter().zip(y).map(|(p, &s)| p.factors()[j][s]).product::<Complex64>() * *w
                    }))
                })
                .collect()
        })
        .collect();
    ProductFunction::new(dist.alphabet(0).clone(), factors)
}

/// `E_{x ∼ μ₁^⊗n, y ∼_{1−γ} x}|P(x) − P(y)|²` in closed form:
/// `2Πⱼ‖Pⱼ‖² − 2Πⱼ((1 − γ)‖Pⱼ‖² + γ|E Pⱼ|²)`.
pub fn product_smoothness(p: &ProductFunction, mu1: &Measure, gamma: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::invalid(format!("γ = {gamma} is outside [0, 1]")));
    }
    if mu1.len() != p.q() {
        return Err(Error::shape("measure and product alphabets differ in size"));
    }
    let mut norms = 1.0;
    let mut cross = 1.0;
    for f in p.factors() {
        let sq: f64 = f.iter().zip(mu1.weights()).map(|(z, w)| z.norm_sqr() * w).sum();
        norms *= sq;
        cross *= (1.0 - gamma) * sq + gamma * mu1.expectation(f).norm_sqr();
    }
    Ok((2.0 * norms - 2.0 * cross).max(0.0))
}

/// Least atom mass of `ξ` against three lower bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct XiMassReport {
    pub min_mass: BigRational,
    /// Least nonzero branch contribution; every atom receives at least one.
    pub branch_bound: BigRational,
    /// `α³·min(p⋆, 1 − p⋆)`, valid when `ξ` comes from `μ` with least atom `α`.
    pub corrected_bound: BigRational,
    /// `α²·p⋆`.
    pub literal_bound: BigRational,
}

impl XiMassReport {
    pub fn branch_holds(&self) -> bool {
        self.min_mass >= self.branch_bound
    }

    pub fn corrected_holds(&self) -> bool {
        self.min_mass >= self.corrected_bound
    }

    pub fn literal_holds(&self) -> bool {
        self.min_mass >= self.literal_bound
    }
}

pub fn xi_mass_report(params: &XiParams, alpha: &BigRational) -> Result<XiMassReport> {
    let (xi, _) = build_xi(params)?;
    let one = BigRational::one();
    let min_of = |d: &JointDistribution| d.min_atom_mass();
    let diag = &one - &params.p_nu;
    let contributions = [
        &params.p_nu * min_of(&params.nu1),
        &diag * (&one - &params.p_star) * min_of(&params.mu1),
        &diag * &params.p_star * min_of(&params.mu1),
    ];
    let branch_bound = contributions
        .into_iter()
        .filter(|c| !c.is_zero())
        .min()
        .unwrap_or_else(BigRational::zero);
    let spread = (&params.p_star).min(&(&one - &params.p_star)).clone();
    Ok(XiMassReport {
        min_mass: xi.min_atom_mass(),
        branch_bound,
        corrected_bound: alpha * alpha * alpha * spread,
        literal_bound: alpha * alpha * &params.p_star,
    })
}

/// One spot check of the stability-transfer conclusion.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferReport {
    /// `|E_{μ^⊗n}[f(x₁)·Π_{i≥2} Pᵢ(xᵢ)]|`.
    pub delta: f64,
    /// `min(1, c·δ²/ln(1/δ))`, or 0 when `δ` rounds to 1.
    pub gamma: f64,
    /// `Stab_{1−γ}(f)` under `μ₁`.
    pub stability: f64,
    pub bound: f64,
}

impl TransferReport {
    pub fn holds(&self) -> bool {
        self.stability >= self.bound - 1e-12
    }
}

pub const TRANSFER_C: f64 = 1e-2;

pub fn stability_transfer_check(
    dist: &JointDistribution,
    f: &TableFunction,
    products: &[ProductFunction],
    c: f64,
) -> Result<TransferReport> {
    let mut functions: Vec<Function> = vec![f.clone().into()];
    functions.extend(products.iter().cloned().map(Function::from));
    let delta = exact_correlation(dist, &functions, f.n())?.value.norm();
    let gamma = if delta >= 1.0 - 1e-15 || delta == 0.0 {
        0.0
    } else {
        (c * delta * delta / (1.0 / delta).ln()).min(1.0)
    };
    let mu1 = Measure::marginal(dist, 0);
    Ok(TransferReport {
        delta,
        gamma,
        stability: stability(f, 1.0 - gamma, &mu1)?,
        bound: delta * delta / 4.0,
    })
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlation::exact_correlation;
    use crate::distribution::rat;

    fn bits() -> Alphabet {
        Alphabet::numeric(2)
    }

    fn three_lin() -> JointDistribution {
        let atoms = (0..8usize)
            .map(|m| vec![m >> 2 & 1, m >> 1 & 1, m & 1])
            .filter(|x| x.iter().sum::<usize>() % 2 == 0);
        JointDistribution::uniform(vec![bits(); 3], atoms).unwrap()
    }

    fn table(n: usize, q: usize, seed: u64) -> TableFunction {
        use rand::Rng;
        let mut rng = rng_for(seed, 0);
        let values = (0..q.pow(n as u32))
            .map(|_| Complex64::from_polar(rng.gen::<f64>().sqrt(), rng.gen::<f64>() * 6.3))
            .collect();
        TableFunction::new(n, Alphabet::numeric(q), values).unwrap()
    }

    #[test]
    fn doubled_distribution_of_three_lin() {
        let d = build_mu_mk_mk(&three_lin()).unwrap();
        assert_eq!(d.support_len(), 8);
        assert!(d.atoms().all(|(_, p)| *p == rat(1, 8)));
        // pairs share the parity class of x₁ ⊕ x₂
        assert!(d.atoms().all(|(x, _)| (x[0] ^ x[1]) == (x[2] ^ x[3])));
        assert!(diagonal_dominance(&three_lin()).unwrap());
    }

    #[test]
    fn doubled_distribution_of_a_product() {
        let a = JointDistribution::new(vec![Alphabet::numeric(3)], [(vec![0], rat(1, 2)), (vec![2], rat(1, 2))]).unwrap();
        let b = JointDistribution::new(vec![bits()], [(vec![0], rat(1, 3)), (vec![1], rat(2, 3))]).unwrap();
        let d = build_mu_mk_mk(&a.product(&b)).unwrap();
        assert_eq!(d, a.product(&a));
    }

    #[test]
    fn mixture_residual_is_a_distribution() {
        let nu = residual_mixture(&three_lin()).unwrap();
        // μ₋ₖ,₋ₖ = 1/16·diag + 15/16·ν, diag atoms 1/4 each
        let diag_mass = (rat(1, 8) - rat(1, 16) * rat(1, 4)) / rat(15, 16);
        assert_eq!(nu.mass(&[0, 0, 0, 0]), diag_mass);
        assert_eq!(nu.mass(&[0, 0, 1, 1]), rat(1, 8) / rat(15, 16));
    }

    #[test]
    fn xi_degenerate_branches() {
        let mu1 = JointDistribution::new(vec![bits()], [(vec![0], rat(1, 3)), (vec![1], rat(2, 3))]).unwrap();
        let nu1 = JointDistribution::uniform(vec![bits(); 2], [vec![0, 1], vec![1, 0]]).unwrap();
        let params = XiParams {
            p_nu: rat(0, 1),
            p_star: rat(0, 1),
            nu1: nu1.clone(),
            mu1: mu1.clone(),
        };
        let (xi, star) = build_xi(&params).unwrap();
        let atoms: Vec<_> = xi.atoms().map(|(x, p)| (x.clone(), p.clone())).collect();
        assert_eq!(
            atoms,
            vec![(vec![0, 0, star.pair(0, 0)], rat(1, 3)), (vec![1, 1, star.pair(1, 1)], rat(2, 3))]
        );
        let (xi, star) = build_xi(&XiParams { p_star: rat(1, 1), ..params }).unwrap();
        assert!(xi.atoms().all(|(x, _)| x[2] == star.star() && x[0] == x[1]));
    }

    #[test]
    fn star_alphabet_layout() {
        let s = StarAlphabet::new(Alphabet::new(["a", "b", "c"]).unwrap());
        assert_eq!(s.len(), 10);
        assert_eq!(s.alphabet().symbol(s.pair(1, 2)), "(b,c)");
        assert_eq!(s.alphabet().symbol(s.star()), "*");
        assert_eq!(s.unpair(5), Some((1, 2)));
        assert_eq!(s.unpair(9), None);
    }

    #[test]
    fn star_sampling() {
        let s = StarAlphabet::new(bits());
        let mu1 = JointDistribution::uniform(vec![bits()], [vec![0], vec![1]]).unwrap();
        let (x, y) = star_sample(&[s.pair(0, 1), s.pair(1, 1)], &s, &mu1, 1).unwrap();
        assert_eq!((x, y), (vec![0, 1], vec![1, 1]));
        let (x, y) = star_sample(&[s.star(); 32], &s, &mu1, 1).unwrap();
        assert_eq!(x, y);
        assert!(x.contains(&0) && x.contains(&1));
        let (x, y) = star_sample(&[s.pair(1, 0), s.star(), s.pair(0, 1)], &s, &mu1, 5).unwrap();
        assert_eq!((x[0], y[0], x[2], y[2]), (1, 0, 0, 1));
        assert_eq!(x[1], y[1]);
    }

    #[test]
    fn g_examples() {
        let star = StarAlphabet::new(bits());
        let nu = Measure::new(vec![0.25, 0.75]).unwrap();
        let one = TableFunction::constant(2, bits(), Complex64::new(1.0, 0.0)).unwrap();
        assert!(build_g(&one, &nu, &star).unwrap().values().iter().all(|z| (z - 1.0).norm() < 1e-15));
        let f = table(1, 2, 4);
        let g = build_g(&f, &nu, &star).unwrap();
        assert!((g.eval(&[star.pair(0, 1)]) - f.eval(&[0]) * f.eval(&[1]).conj()).norm() < 1e-15);
        let e = 0.25 * f.eval(&[0]).norm_sqr() + 0.75 * f.eval(&[1]).norm_sqr();
        assert!((g.eval(&[star.star()]).re - e).abs() < 1e-15);
        assert!(g.is_one_bounded());
    }

    #[test]
    fn obs34_constant_function() {
        let one = TableFunction::constant(2, bits(), Complex64::new(1.0, 0.0)).unwrap();
        let r = check_obs34(&three_lin(), &one, &rat(15, 16), &rat(1, 3)).unwrap();
        assert!((r.lhs - 1.0).norm() < 1e-14 && (r.rhs - 1.0).norm() < 1e-14);
    }

    #[test]
    fn obs34_singles_out_one_rate() {
        let f = table(1, 2, 11);
        let res = resolve_obs34_rate(&three_lin(), &f, &rat(1, 5), 1e-12).unwrap();
        assert_eq!(res.selected, Some("1-alpha^2"));
        assert!(res.candidates[1].2 > 1e-6);
    }

    #[test]
    fn tilde_f_examples() {
        let mu = three_lin();
        let ones: Vec<TableFunction> = (0..2).map(|_| TableFunction::constant(2, bits(), 1.0.into()).unwrap()).collect();
        let t = tilde_f(&mu, &ones).unwrap();
        assert!(t.values().iter().all(|z| (z - 1.0).norm() < 1e-15));

        // k = 2: f̃₂(x) = E[f₁(x₁) | x₂ = x]
        let mu2 = JointDistribution::new(
            vec![bits(), bits()],
            [(vec![0, 0], rat(1, 4)), (vec![1, 0], rat(1, 4)), (vec![1, 1], rat(1, 2))],
        )
        .unwrap();
        let f1 = table(1, 2, 2);
        let t = tilde_f(&mu2, std::slice::from_ref(&f1)).unwrap();
        assert!((t.eval(&[0]) - (f1.eval(&[0]) + f1.eval(&[1])) * 0.5).norm() < 1e-15);
        assert!((t.eval(&[1]) - f1.eval(&[1])).norm() < 1e-15);
    }

    #[test]
    fn tilde_p_transfers_correlation() {
        let mu = three_lin();
        let f = table(3, 2, 8);
        let p2 = ProductFunction::new(bits(), (0..3).map(|j| vec![Complex64::from_polar(1.0, j as f64), Complex64::new(0.3, 0.1)]).collect()).unwrap();
        let p3 = ProductFunction::from_phases(bits(), vec![vec![rat(1, 8), rat(3, 5)]; 3]).unwrap();
        let direct = exact_correlation(&mu, &[f.clone().into(), p2.clone().into(), p3.clone().into()], 3).unwrap();
        let pt = tilde_p(&mu, &[p2, p3]).unwrap();
        let via = crate::function::inner_product(&f, &pt.to_table().unwrap().conj(), &Measure::marginal(&mu, 0)).unwrap();
        assert!((direct.value.norm() - via.norm()).abs() < 1e-14);
    }

    #[test]
    fn smoothness_matches_two_point_enumeration() {
        let nu = Measure::new(vec![0.2, 0.5, 0.3]).unwrap();
        let p = ProductFunction::new(
            Alphabet::numeric(3),
            vec![vec![Complex64::new(0.5, 0.5), Complex64::new(-0.2, 0.9), Complex64::new(0.7, 0.0)]],
        )
        .unwrap();
        for gamma in [0.0, 0.1, 0.5, 1.0] {
            let mut brute = 0.0;
            for x in 0..3 {
                for y in 0..3 {
                    let py = gamma * nu.weights()[y] + if x == y { 1.0 - gamma } else { 0.0 };
                    brute += nu.weights()[x] * py * (p.factors()[0][x] - p.factors()[0][y]).norm_sqr();
                }
            }
            assert!((product_smoothness(&p, &nu, gamma).unwrap() - brute).abs() < 1e-12);
        }
        assert_eq!(product_smoothness(&ProductFunction::ones(3, Alphabet::numeric(3)), &nu, 0.4).unwrap(), 0.0);
    }

    #[test]
    fn literal_xi_mass_bound_fails_on_three_lin() {
        let mu = three_lin();
        let alpha = mu.min_atom_mass();
        let params = xi_params_from(&mu, rat(1, 10)).unwrap();
        let report = xi_mass_report(&params, &alpha).unwrap();
        // the (x, x, ⋆) atom has mass α²·p⋆·μ₁(x) = 1/16 · 1/10 · 1/2
        assert_eq!(report.min_mass, rat(1, 320));
        assert!(!report.literal_holds());
        assert!(report.branch_holds() && report.corrected_holds());
    }
}
