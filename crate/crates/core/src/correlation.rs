//! k-wise correlations `E_{μ^⊗n}[Πᵢ fᵢ(xᵢ)]`, exactly and by sampling.

use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::distribution::{to_f64, Alphabet, JointDistribution, ProductPowerSampler};
use crate::function::{reduce_turns, ProductFunction, TableFunction};
use crate::tensor::{csum, CompensatedSum};
use crate::{Error, Result};

/// Exact complex numbers with rational parts.
pub type ExactComplex = Complex<BigRational>;

/// Failure probability of the reported Monte Carlo interval.
pub const CONFIDENCE_DELTA: f64 = 0.01;

/// Most terms the general exact path will sum.
pub const EXACT_TERM_LIMIT: f64 = 1e8;

const CHUNK: u64 = 1024;

/// A function on `Σⁿ` in either representation.
#[derive(Debug, Clone, PartialEq)]
pub enum Function {
    Table(TableFunction),
    Product(ProductFunction),
}

impl Function {
    pub fn n(&self) -> usize {
        match self {
            Function::Table(t) => t.n(),
            Function::Product(p) => p.n(),
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        match self {
            Function::Table(t) => t.alphabet(),
            Function::Product(p) => p.alphabet(),
        }
    }

    pub fn eval(&self, x: &[usize]) -> Complex64 {
        match self {
            Function::Table(t) => t.eval(x),
            Function::Product(p) => p.eval(x),
        }
    }

    pub fn to_table(&self) -> Result<TableFunction> {
        match self {
            Function::Table(t) => Ok(t.clone()),
            Function::Product(p) => p.to_table(),
        }
    }

    pub fn is_one_bounded(&self) -> bool {
        match self {
            Function::Table(t) => t.is_one_bounded(),
            Function::Product(p) => p.is_one_bounded(),
        }
    }
}

impl From<TableFunction> for Function {
    fn from(t: TableFunction) -> Self {
        Function::Table(t)
    }
}

impl From<ProductFunction> for Function {
    fn from(p: ProductFunction) -> Self {
        Function::Product(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Exact,
    MonteCarlo,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Exact => "exact",
            Mode::MonteCarlo => "monte-carlo",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationResult {
    pub value: Complex64,
    pub mode: Mode,
    pub samples: u64,
    pub half_width: f64,
    /// The value as an exact complex rational, when every term could be
    /// evaluated without rounding.
    pub exact: Option<ExactComplex>,
}

/// Hoeffding half-width at confidence `1 − CONFIDENCE_DELTA` for a mean of
/// `samples` draws with range one.
pub fn hoeffding_half_width(samples: u64) -> f64 {
    ((2.0 / CONFIDENCE_DELTA).ln() / (2.0 * samples as f64)).sqrt()
}

fn check_shapes(dist: &JointDistribution, functions: &[Function], n: usize) -> Result<()> {
    if functions.len() != dist.arity() {
        return Err(Error::shape(format!(
            "{} functions for a distribution of arity {}",
            functions.len(),
            dist.arity()
        )));
    }
    for (i, f) in functions.iter().enumerate() {
        if f.n() != n {
            return Err(Error::shape(format!("function {i} has n = {} instead of {n}", f.n())));
        }
        if f.alphabet() != dist.alphabet(i) {
            return Err(Error::shape(format!("function {i} is not over the alphabet of coordinate {i}")));
        }
    }
    Ok(())
}

pub fn exact_correlation(dist: &JointDistribution, functions: &[Function], n: usize) -> Result<CorrelationResult> {
    check_shapes(dist, functions, n)?;
    let products: Option<Vec<&ProductFunction>> = functions
        .iter()
        .map(|f| match f {
            Function::Product(p) => Some(p),
            Function::Table(_) => None,
        })
        .collect();
    match products {
        Some(ps) => Ok(product_correlation(dist, &ps, n)),
        None => general_correlation(dist, functions, n),
    }
}

/// `e^{2πi t}` for `t` a multiple of 1/4, as an exact complex number.
fn exact_quarter(turns: &BigRational) -> Option<ExactComplex> {
    let four = reduce_turns(turns) * BigRational::from_integer(4.into());
    if !four.is_integer() {
        return None;
    }
    let (o, z) = (BigRational::one(), BigRational::zero());
    Some(match four.to_integer().to_u8() {
        Some(0) => Complex::new(o, z),
        Some(1) => Complex::new(z, o),
        Some(2) => Complex::new(-o, z),
        _ => Complex::new(z, -o),
    })
}

fn exact_value(z: Complex64) -> Option<ExactComplex> {
    Some(Complex::new(BigRational::from_float(z.re)?, BigRational::from_float(z.im)?))
}

/// One term `Πᵢ Pᵢ⁽ʲ⁾(xᵢ)` evaluated exactly: phases are added as rationals,
/// other factor values enter as the dyadic rationals they are.
fn exact_term(products: &[&ProductFunction], j: usize, x: &[usize]) -> Option<ExactComplex> {
    let mut turns = BigRational::zero();
    let mut value = Complex::new(BigRational::one(), BigRational::zero());
    for (p, &s) in products.iter().zip(x) {
        match p.phases() {
            Some(ph) => turns += &ph[j][s],
            None => value *= exact_value(p.factors()[j][s])?,
        }
    }
    Some(value * exact_quarter(&turns)?)
}

/// `Πⱼ E_μ[Πᵢ Pᵢ⁽ʲ⁾(xᵢ)]`, one coordinate at a time.
fn product_correlation(dist: &JointDistribution, products: &[&ProductFunction], n: usize) -> CorrelationResult {
    let atoms: Vec<(&Vec<usize>, &BigRational)> = dist.atoms().collect();
    let mut value = Complex64::new(1.0, 0.0);
    let mut exact = Some(Complex::new(BigRational::one(), BigRational::zero()));
    for j in 0..n {
        value *= csum(atoms.iter().map(|(x, p)| {
            let t: Complex64 = products.iter().zip(x.iter()).map(|(f, &s)| f.factors()[j][s]).product();
            t * to_f64(p)
        }));
        if let Some(acc) = exact.take() {
            let mut e = Complex::new(BigRational::zero(), BigRational::zero());
            let mut ok = true;
            for (x, p) in &atoms {
                match exact_term(products, j, x) {
                    Some(t) => e += t * Complex::new((*p).clone(), BigRational::zero()),
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            exact = ok.then(|| acc * e);
        }
    }
    if let Some(e) = &exact {
        value = Complex64::new(to_f64(&e.re), to_f64(&e.im));
    }
    CorrelationResult {
        value,
        mode: Mode::Exact,
        samples: 0,
        half_width: 0.0,
        exact,
    }
}

/// Sums over every matrix with columns in the support.
fn general_correlation(dist: &JointDistribution, functions: &[Function], n: usize) -> Result<CorrelationResult> {
    let terms = (dist.support_len() as f64).powi(n as i32);
    Error::guard("exact correlation terms", terms, EXACT_TERM_LIMIT)?;
    let tables: Vec<TableFunction> = functions.iter().map(Function::to_table).collect::<Result<_>>()?;
    let atoms: Vec<(Vec<usize>, f64)> = dist.atoms().map(|(x, p)| (x.clone(), to_f64(p))).collect();
    let k = functions.len();
    let qs: Vec<usize> = tables.iter().map(TableFunction::q).collect();

    let walk = |first: Option<usize>| -> Complex64 {
        let mut acc = CompensatedSum::new();
        let mut idx = vec![vec![0usize; k]; n + 1];
        let mut w = vec![1.0f64; n + 1];
        let mut choice = vec![0usize; n];
        let start = usize::from(first.is_some());
        if let Some(a) = first {
            idx[1][..k].copy_from_slice(&atoms[a].0[..k]);
            w[1] = atoms[a].1;
        }
        // iterative depth-first walk over columns start..n
        let mut depth = start;
        loop {
            if depth == n {
                let prod: Complex64 = tables.iter().zip(&idx[n]).map(|(t, &i)| t.values()[i]).product();
                acc.add(prod * w[n]);
                // backtrack
                loop {
                    if depth == start {
                        return acc.value();
                    }
                    depth -= 1;
                    choice[depth] += 1;
                    if choice[depth] < atoms.len() {
                        break;
                    }
                    choice[depth] = 0;
                }
            }
            let (x, p) = &atoms[choice[depth]];
            for i in 0..k {
                idx[depth + 1][i] = idx[depth][i] * qs[i] + x[i];
            }
            w[depth + 1] = w[depth] * p;
            depth += 1;
        }
    };
    let value = if n == 0 {
        tables.iter().map(|t| t.values()[0]).product()
    } else {
        let parts: Vec<Complex64> = (0..atoms.len()).into_par_iter().map(|a| walk(Some(a))).collect();
        csum(parts)
    };
    Ok(CorrelationResult {
        value,
        mode: Mode::Exact,
        samples: 0,
        half_width: 0.0,
        exact: None,
    })
}

/// Empirical mean of `Πᵢ fᵢ(xᵢ)` over `samples` i.i.d. draws from `μ^⊗n`.
///
/// Samples are drawn in fixed-size chunks, each from its own seeded stream,
/// and chunk sums are combined in order, so the result depends only on
/// `seed` and not on scheduling.
pub fn mc_correlation(
    dist: &JointDistribution,
    functions: &[Function],
    n: usize,
    samples: u64,
    seed: u64,
) -> Result<CorrelationResult> {
    check_shapes(dist, functions, n)?;
    if samples == 0 {
        return Err(Error::invalid("Monte Carlo needs at least one sample"));
    }
    let chunks = samples.div_ceil(CHUNK);
    let sums: Vec<Complex64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut sampler = ProductPowerSampler::with_stream(dist, n, seed, c);
            let count = CHUNK.min(samples - c * CHUNK);
            let mut acc = CompensatedSum::new();
            for _ in 0..count {
                let rows = sampler.draw();
                acc.add(functions.iter().zip(&rows).map(|(f, x)| f.eval(x)).product());
            }
            acc.value()
        })
        .collect();
    Ok(CorrelationResult {
        value: csum(sums) / samples as f64,
        mode: Mode::MonteCarlo,
        samples,
        half_width: hoeffding_half_width(samples),
        exact: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::rat;

    fn bits() -> Alphabet {
        Alphabet::numeric(2)
    }

    fn cube_minus_top() -> JointDistribution {
        let atoms = (0..7usize).map(|m| vec![m >> 2 & 1, m >> 1 & 1, m & 1]);
        JointDistribution::uniform(vec![bits(); 3], atoms).unwrap()
    }

    fn three_lin() -> JointDistribution {
        let atoms = (0..8usize)
            .map(|m| vec![m >> 2 & 1, m >> 1 & 1, m & 1])
            .filter(|x| x.iter().sum::<usize>() % 2 == 0);
        JointDistribution::uniform(vec![bits(); 3], atoms).unwrap()
    }

    fn parity(n: usize) -> ProductFunction {
        ProductFunction::from_phases(bits(), vec![vec![rat(0, 1), rat(1, 2)]; n]).unwrap()
    }

    #[test]
    fn all_ones_correlate_to_one() {
        let f: Vec<Function> = (0..3).map(|_| ProductFunction::ones(4, bits()).into()).collect();
        let r = exact_correlation(&three_lin(), &f, 4).unwrap();
        assert_eq!(r.exact.unwrap(), Complex::new(BigRational::one(), BigRational::zero()));
        let r = mc_correlation(&three_lin(), &f, 4, 100, 1).unwrap();
        assert_eq!(r.value, Complex64::new(1.0, 0.0));
        assert_eq!(r.half_width, hoeffding_half_width(100));
    }

    #[test]
    fn parity_decays_on_seven_atoms() {
        for n in 0..=6 {
            let f: Vec<Function> = (0..3).map(|_| parity(n).into()).collect();
            let r = exact_correlation(&cube_minus_top(), &f, n).unwrap();
            let want = rat(1, 7).pow(n as i32);
            assert_eq!(r.exact.unwrap(), Complex::new(want, BigRational::zero()));
        }
    }

    #[test]
    fn fast_path_matches_general_path() {
        let p = ProductFunction::new(
            bits(),
            vec![
                vec![Complex64::new(0.3, -0.4), Complex64::new(-0.9, 0.1)],
                vec![Complex64::new(0.5, 0.5), Complex64::new(0.2, 0.0)],
            ],
        )
        .unwrap();
        let fast: Vec<Function> = vec![p.clone().into(), parity(2).into(), p.conj().into()];
        let slow: Vec<Function> = fast.iter().map(|f| f.to_table().unwrap().into()).collect();
        let a = exact_correlation(&cube_minus_top(), &fast, 2).unwrap();
        let b = exact_correlation(&cube_minus_top(), &slow, 2).unwrap();
        assert!((a.value - b.value).norm() < 1e-15);
        assert!(b.exact.is_none());
    }

    #[test]
    fn mc_is_reproducible_and_honours_the_constant_integrand() {
        let f: Vec<Function> = (0..3).map(|_| parity(5).into()).collect();
        let a = mc_correlation(&three_lin(), &f, 5, 3000, 9).unwrap();
        let b = mc_correlation(&three_lin(), &f, 5, 3000, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.value, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn shape_errors() {
        let f: Vec<Function> = (0..2).map(|_| parity(2).into()).collect();
        assert!(matches!(exact_correlation(&three_lin(), &f, 2), Err(Error::Shape(_))));
        let g: Vec<Function> = (0..3).map(|_| parity(2).into()).collect();
        assert!(matches!(exact_correlation(&three_lin(), &g, 3), Err(Error::Shape(_))));
    }
}
