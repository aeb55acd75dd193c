//! The dictatorship test for a weighted CSP instance.
//!
//! One round picks a constraint with probability proportional to its
//! weight, draws a `k × n` matrix whose columns are i.i.d. from that
//! constraint's local distribution, and accepts iff the predicate holds on
//! `(f(row₁), …, f(rowₖ))`.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::correlation::hoeffding_half_width;
use crate::distribution::{to_f64, Alphabet, JointDistribution};
use crate::embedding::{connected, detect_embedding, pairwise_connected};
use crate::sampling::{rng_for, ExactCategorical};
use crate::tensor::{decode, table_len};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Predicate {
    alphabet: Alphabet,
    k: usize,
    truth: Vec<bool>,
}

impl Predicate {
    /// `truth` lists `P` on `Σᵏ` in lexicographic order.
    pub fn new(alphabet: Alphabet, k: usize, truth: Vec<bool>) -> Result<Self> {
        let len = table_len(alphabet.len(), k).ok_or_else(|| Error::invalid("predicate table overflows"))?;
        if truth.len() != len {
            return Err(Error::shape(format!("predicate table has {} entries, expected {len}", truth.len())));
        }
        Ok(Self { alphabet, k, truth })
    }

    pub fn from_fn(alphabet: Alphabet, k: usize, p: impl Fn(&[usize]) -> bool) -> Result<Self> {
        let q = alphabet.len();
        let len = table_len(q, k).ok_or_else(|| Error::invalid("predicate table overflows"))?;
        let mut x = vec![0; k];
        let truth = (0..len)
            .map(|i| {
                decode(i, q, &mut x);
                p(&x)
            })
            .collect();
        Self::new(alphabet, k, truth)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn arity(&self) -> usize {
        self.k
    }

    pub fn truth(&self) -> &[bool] {
        &self.truth
    }

    pub fn eval(&self, x: &[usize]) -> bool {
        self.truth[x.iter().fold(0, |acc, &s| acc * self.alphabet.len() + s)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub weight: BigRational,
    pub mu: JointDistribution,
}

/// A predicate with weighted local distributions. Construction checks
/// shapes only; weight normalization and the support condition are
/// reported by [`validate_instance`].
#[derive(Debug, Clone, PartialEq)]
pub struct TestInstance {
    predicate: Predicate,
    constraints: Vec<Constraint>,
}

impl TestInstance {
    pub fn new(predicate: Predicate, constraints: Vec<Constraint>) -> Result<Self> {
        if constraints.is_empty() {
            return Err(Error::invalid("an instance needs at least one constraint"));
        }
        for (i, c) in constraints.iter().enumerate() {
            if c.mu.arity() != predicate.k || c.mu.alphabets().iter().any(|a| a != &predicate.alphabet) {
                return Err(Error::shape(format!("constraint {i} does not live on Σ^k of the predicate")));
            }
            if c.weight <= BigRational::zero() {
                return Err(Error::invalid(format!("constraint {i} has nonpositive weight {}", c.weight)));
            }
        }
        Ok(Self {
            predicate,
            constraints,
        })
    }

    pub fn predicate(&self) -> &Predicate {
        &self.predicate
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// The same instance with `Σ` renamed by the permutation `perm`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        let q = self.predicate.alphabet.len();
        let inverse = invert(perm, q)?;
        let predicate = Predicate::from_fn(self.predicate.alphabet.clone(), self.predicate.k, |x| {
            let back: Vec<usize> = x.iter().map(|&s| inverse[s]).collect();
            self.predicate.eval(&back)
        })?;
        let maps = vec![perm.to_vec(); self.predicate.k];
        let alphabets = vec![self.predicate.alphabet.clone(); self.predicate.k];
        let constraints = self
            .constraints
            .iter()
            .map(|c| {
                Ok(Constraint {
                    weight: c.weight.clone(),
                    mu: c.mu.relabel(alphabets.clone(), &maps)?,
                })
            })
            .collect::<Result<_>>()?;
        Self::new(predicate, constraints)
    }
}

fn invert(perm: &[usize], q: usize) -> Result<Vec<usize>> {
    let mut inverse = vec![usize::MAX; q];
    if perm.len() != q {
        return Err(Error::shape("permutation has the wrong length"));
    }
    for (a, &b) in perm.iter().enumerate() {
        if b >= q || inverse[b] != usize::MAX {
            return Err(Error::invalid("not a permutation"));
        }
        inverse[b] = a;
    }
    Ok(inverse)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintReport {
    pub weight: BigRational,
    /// Support atoms on which the predicate is false, as symbols.
    pub falsifying_atoms: Vec<Vec<String>>,
    pub admits_embedding: bool,
    /// Group order of the witness, 0 for `ℤ`.
    pub witness_modulus: Option<u64>,
    pub connected: bool,
    pub pairwise_connected: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceReport {
    pub weight_sum: BigRational,
    pub constraints: Vec<ConstraintReport>,
}

impl InstanceReport {
    pub fn weights_normalized(&self) -> bool {
        self.weight_sum.is_one()
    }

    pub fn supports_satisfying(&self) -> bool {
        self.constraints.iter().all(|c| c.falsifying_atoms.is_empty())
    }

    /// Weights sum to one and every local distribution lives on `P⁻¹(1)`.
    pub fn is_valid(&self) -> bool {
        self.weights_normalized() && self.supports_satisfying()
    }

    /// No local distribution admits an Abelian embedding.
    pub fn embedding_free(&self) -> bool {
        self.constraints.iter().all(|c| !c.admits_embedding)
    }
}

pub fn validate_instance(inst: &TestInstance) -> InstanceReport {
    let constraints = inst
        .constraints
        .iter()
        .map(|c| {
            let verdict = detect_embedding(&c.mu);
            ConstraintReport {
                weight: c.weight.clone(),
                falsifying_atoms: c
                    .mu
                    .atoms()
                    .filter(|(x, _)| !inst.predicate.eval(x))
                    .map(|(x, _)| c.mu.atom_symbols(x))
                    .collect(),
                admits_embedding: verdict.admits,
                witness_modulus: verdict.witness.map(|w| w.modulus),
                connected: connected(&c.mu),
                pairwise_connected: pairwise_connected(&c.mu).connected,
            }
        })
        .collect();
    InstanceReport {
        weight_sum: inst.constraints.iter().map(|c| &c.weight).sum(),
        constraints,
    }
}

/// A function `Σⁿ → Σ`. Dictators and constants are kept symbolic so that
/// they can be evaluated at any `n` without a table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SymbolFunction {
    Table { n: usize, alphabet: Alphabet, values: Vec<usize> },
    Dictator { n: usize, alphabet: Alphabet, coord: usize },
    Constant { n: usize, alphabet: Alphabet, symbol: usize },
}

impl SymbolFunction {
    pub fn table(n: usize, alphabet: Alphabet, values: Vec<usize>) -> Result<Self> {
        let len = table_len(alphabet.len(), n).ok_or_else(|| Error::invalid("table length overflows"))?;
        if values.len() != len {
            return Err(Error::shape(format!("table has {} entries, expected {len}", values.len())));
        }
        if values.iter().any(|&v| v >= alphabet.len()) {
            return Err(Error::invalid("table value outside the alphabet"));
        }
        Ok(Self::Table { n, alphabet, values })
    }

    pub fn dictator(n: usize, alphabet: Alphabet, coord: usize) -> Result<Self> {
        if coord >= n {
            return Err(Error::invalid(format!("dictator coordinate {coord} ≥ n = {n}")));
        }
        Ok(Self::Dictator { n, alphabet, coord })
    }

    pub fn constant(n: usize, alphabet: Alphabet, symbol: usize) -> Result<Self> {
        if symbol >= alphabet.len() {
            return Err(Error::invalid("constant symbol outside the alphabet"));
        }
        Ok(Self::Constant { n, alphabet, symbol })
    }

    pub fn n(&self) -> usize {
        match self {
            Self::Table { n, .. } | Self::Dictator { n, .. } | Self::Constant { n, .. } => *n,
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        match self {
            Self::Table { alphabet, .. } | Self::Dictator { alphabet, .. } | Self::Constant { alphabet, .. } => alphabet,
        }
    }

    pub fn eval(&self, x: &[usize]) -> usize {
        match self {
            Self::Table { alphabet, values, .. } => values[x.iter().fold(0, |acc, &s| acc * alphabet.len() + s)],
            Self::Dictator { coord, .. } => x[*coord],
            Self::Constant { symbol, .. } => *symbol,
        }
    }

    /// Coordinates the function actually reads, in increasing order.
    pub fn relevant_coordinates(&self) -> Vec<usize> {
        match self {
            Self::Dictator { coord, .. } => vec![*coord],
            Self::Constant { .. } => Vec::new(),
            Self::Table { n, alphabet, values } => {
                let q = alphabet.len();
                (0..*n)
                    .filter(|&j| {
                        let stride = q.pow((n - 1 - j) as u32);
                        (0..values.len()).any(|i| {
                            let digit = i / stride % q;
                            digit > 0 && values[i] != values[i - digit * stride]
                        })
                    })
                    .collect()
            }
        }
    }
}

/// Upper bound on enumerated matrices in [`run_test_exact`].
pub const DICT_EXACT_LIMIT: f64 = 1e7;

/// Exact acceptance probability.
///
/// Only the coordinates `J` that `f` depends on matter, so each constraint
/// costs `|supp μᵢ|^{|J|}` terms.
pub fn run_test_exact(inst: &TestInstance, f: &SymbolFunction) -> Result<BigRational> {
    check_function(inst, f)?;
    let relevant = f.relevant_coordinates();
    let m = relevant.len();
    let terms: f64 = inst
        .constraints
        .iter()
        .map(|c| (c.mu.support_len() as f64).powi(m as i32))
        .sum();
    Error::guard("dictatorship test matrices", terms, DICT_EXACT_LIMIT)?;
    let mut total = BigRational::zero();
    for c in &inst.constraints {
        total += &c.weight * constraint_acceptance(&inst.predicate, &c.mu, f, &relevant);
    }
    Ok(total)
}

fn constraint_acceptance(p: &Predicate, mu: &JointDistribution, f: &SymbolFunction, relevant: &[usize]) -> BigRational {
    let atoms: Vec<&Vec<usize>> = mu.atoms().map(|(x, _)| x).collect();
    let denom = mu
        .atoms()
        .fold(BigInt::one(), |acc, (_, p)| num_integer::Integer::lcm(&acc, p.denom()));
    let numers: Vec<BigUint> = mu
        .atoms()
        .map(|(_, p)| (p.numer() * (&denom / p.denom())).to_biguint().expect("masses are nonnegative"))
        .collect();
    let m = relevant.len();
    let s = atoms.len();
    let k = p.arity();
    let count = s.pow(m as u32);
    let accepted: BigUint = (0..count)
        .into_par_iter()
        .fold(BigUint::zero, |mut acc, t| {
            let mut choice = vec![0; m];
            decode(t, s, &mut choice);
            let mut rows = vec![vec![0; f.n()]; k];
            for (&j, &c) in relevant.iter().zip(&choice) {
                for (row, &sym) in rows.iter_mut().zip(atoms[c]) {
                    row[j] = sym;
                }
            }
            let images: Vec<usize> = rows.iter().map(|r| f.eval(r)).collect();
            if p.eval(&images) {
                acc += choice.iter().fold(BigUint::one(), |w, &c| w * &numers[c]);
            }
            acc
        })
        .reduce(BigUint::zero, |a, b| a + b);
    BigRational::new(accepted.into(), denom.pow(m as u32))
}

fn check_function(inst: &TestInstance, f: &SymbolFunction) -> Result<()> {
    if f.alphabet() != inst.predicate.alphabet() {
        return Err(Error::shape("function and predicate use different alphabets"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcceptanceEstimate {
    pub acceptance: f64,
    pub accepted: u64,
    pub samples: u64,
    pub half_width: f64,
}

const CHUNK: u64 = 1024;

/// Monte Carlo acceptance, reproducible per seed. Samples are drawn in
/// fixed chunks, each from its own stream.
pub fn run_test_mc(inst: &TestInstance, f: &SymbolFunction, samples: u64, seed: u64) -> Result<AcceptanceEstimate> {
    check_function(inst, f)?;
    if samples == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    let pick = ExactCategorical::new(inst.constraints.iter().map(|c| &c.weight))?;
    let locals: Vec<(Vec<&Vec<usize>>, ExactCategorical)> = inst
        .constraints
        .iter()
        .map(|c| Ok((c.mu.atoms().map(|(x, _)| x).collect(), ExactCategorical::new(c.mu.atoms().map(|(_, p)| p))?)))
        .collect::<Result<_>>()?;
    let k = inst.predicate.arity();
    let n = f.n();
    let chunks = samples.div_ceil(CHUNK);
    let accepted: u64 = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = rng_for(seed, chunk);
            let len = CHUNK.min(samples - chunk * CHUNK);
            let mut rows = vec![vec![0; n]; k];
            let mut images = vec![0; k];
            let mut hits = 0;
            for _ in 0..len {
                let (atoms, cat) = &locals[pick.sample(&mut rng)];
                for j in 0..n {
                    let col = atoms[cat.sample(&mut rng)];
                    for (row, &s) in rows.iter_mut().zip(col) {
                        row[j] = s;
                    }
                }
                for (img, row) in images.iter_mut().zip(&rows) {
                    *img = f.eval(row);
                }
                hits += u64::from(inst.predicate.eval(&images));
            }
            hits
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    Ok(AcceptanceEstimate {
        acceptance: accepted as f64 / samples as f64,
        accepted,
        samples,
        half_width: hoeffding_half_width(samples),
    })
}

/// Most functions enumerated by [`max_acceptance`].
pub const EXHAUSTIVE_FUNCTION_LIMIT: f64 = 1e6;

/// Largest exact acceptance over every table `Σⁿ → Σ`, with a maximizer.
pub fn max_acceptance(inst: &TestInstance, n: usize) -> Result<(BigRational, SymbolFunction)> {
    let alphabet = inst.predicate.alphabet().clone();
    let q = alphabet.len();
    let len = table_len(q, n).ok_or_else(|| Error::invalid("table length overflows"))?;
    let functions = (q as f64).powf(len as f64);
    Error::guard("functions to enumerate", functions, EXHAUSTIVE_FUNCTION_LIMIT)?;
    let mut best: Option<(BigRational, SymbolFunction)> = None;
    let mut values = vec![0; len];
    for t in 0..functions as usize {
        decode(t, q, &mut values);
        let f = SymbolFunction::table(n, alphabet.clone(), values.clone())?;
        let a = run_test_exact(inst, &f)?;
        if best.as_ref().is_none_or(|(b, _)| a > *b) {
            best = Some((a, f));
        }
    }
    Ok(best.expect("at least one function"))
}

impl AcceptanceEstimate {
    /// Whether `exact` lies within `factor` half-widths of the estimate.
    pub fn agrees_with(&self, exact: &BigRational, factor: f64) -> bool {
        (self.acceptance - to_f64(exact)).abs() <= factor * self.half_width
    }
}
