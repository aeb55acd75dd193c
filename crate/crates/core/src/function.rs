//! Complex-valued functions on `Σⁿ`: dense tables, product functions and
//! characters, with the noise operator and noise stability.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::distribution::{to_f64, Alphabet, JointDistribution, Support};
use crate::embedding::{verify_witness, EmbeddingWitness};
use crate::tensor::{contract_axis, csum, decode, encode, map_axis, table_len};
use crate::{Error, Result};

/// Slack allowed when testing `|f| ≤ 1`.
pub const BOUND_SLACK: f64 = 1e-12;

/// Largest dense table the library will allocate, in entries.
pub const TABLE_LIMIT: usize = 1 << 24;

pub(crate) fn checked_table_len(q: usize, n: usize) -> Result<usize> {
    match table_len(q, n) {
        Some(len) if len <= TABLE_LIMIT => Ok(len),
        _ => Err(Error::SizeGuard {
            what: "dense function table",
            needed: (q as f64).powi(n as i32),
            limit: TABLE_LIMIT as f64,
        }),
    }
}

/// A probability measure on an alphabet, in floating point.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure(Vec<f64>);

impl Measure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid("measure weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 * weights.len() as f64 {
            return Err(Error::invalid(format!("measure weights sum to {total}, not 1")));
        }
        Ok(Self(weights))
    }

    pub fn uniform(q: usize) -> Self {
        Self(vec![1.0 / q as f64; q])
    }

    pub fn from_rationals(weights: &[BigRational]) -> Result<Self> {
        Self::new(weights.iter().map(to_f64).collect())
    }

    /// The marginal of `dist` on one coordinate.
    pub fn marginal(dist: &JointDistribution, coord: usize) -> Self {
        Self(dist.coordinate_masses(coord).iter().map(to_f64).collect())
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn expectation(&self, values: &[Complex64]) -> Complex64 {
        csum(values.iter().zip(&self.0).map(|(v, &w)| v * w))
    }
}

/// A function `Σⁿ → ℂ` stored densely. Index `Σⱼ xⱼ·q^(n−1−j)` holds
/// `f(x)`; for `n = 0` the table has the single entry of a constant.
#[derive(Debug, Clone, PartialEq)]
pub struct TableFunction {
    n: usize,
    alphabet: Alphabet,
    values: Vec<Complex64>,
}

impl TableFunction {
    pub fn new(n: usize, alphabet: Alphabet, values: Vec<Complex64>) -> Result<Self> {
        let len = checked_table_len(alphabet.len(), n)?;
        if values.len() != len {
            return Err(Error::shape(format!(
                "table for n = {n} over {} symbols needs {len} values, got {}",
                alphabet.len(),
                values.len()
            )));
        }
        Ok(Self { n, alphabet, values })
    }

    pub fn constant(n: usize, alphabet: Alphabet, c: Complex64) -> Result<Self> {
        let len = checked_table_len(alphabet.len(), n)?;
        Ok(Self {
            n,
            alphabet,
            values: vec![c; len],
        })
    }

    pub fn from_fn(n: usize, alphabet: Alphabet, f: impl Fn(&[usize]) -> Complex64) -> Result<Self> {
        let q = alphabet.len();
        let len = checked_table_len(q, n)?;
        let mut x = vec![0; n];
        let values = (0..len)
            .map(|i| {
                decode(i, q, &mut x);
                f(&x)
            })
            .collect();
        Ok(Self { n, alphabet, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn q(&self) -> usize {
        self.alphabet.len()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn index(&self, x: &[usize]) -> usize {
        encode(x, self.q())
    }

    pub fn eval(&self, x: &[usize]) -> Complex64 {
        self.values[self.index(x)]
    }

    pub fn max_modulus(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_one_bounded(&self) -> bool {
        self.max_modulus() <= 1.0 + BOUND_SLACK
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            n: self.n,
            alphabet: self.alphabet.clone(),
            values: self.values.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|z| z * c)
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.n != other.n || self.alphabet != other.alphabet {
            return Err(Error::shape(format!(
                "functions on Σ^{} (|Σ| = {}) and Σ^{} (|Σ| = {})",
                self.n,
                self.q(),
                other.n,
                other.q()
            )));
        }
        Ok(())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            n: self.n,
            alphabet: self.alphabet.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Largest pointwise distance to `other`.
    pub fn max_distance(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}

fn check_measure(f: &TableFunction, nu: &Measure) -> Result<()> {
    if nu.len() != f.q() {
        return Err(Error::shape(format!(
            "measure on {} symbols for a function over {} symbols",
            nu.len(),
            f.q()
        )));
    }
    Ok(())
}

/// `E_{ν^⊗n}` of a raw table, contracting the last axis first.
pub(crate) fn expect_values(mut values: Vec<Complex64>, q: usize, n: usize, nu: &Measure) -> Complex64 {
    for axis in (0..n).rev() {
        values = contract_axis(&values, q, axis + 1, axis, nu.weights());
    }
    values[0]
}

pub fn expectation(f: &TableFunction, nu: &Measure) -> Result<Complex64> {
    check_measure(f, nu)?;
    Ok(expect_values(f.values.clone(), f.q(), f.n, nu))
}

/// `⟨f, g⟩ = E_{ν^⊗n}[f · ḡ]`.
pub fn inner_product(f: &TableFunction, g: &TableFunction, nu: &Measure) -> Result<Complex64> {
    let prod = f.zip_with(g, |a, b| a * b.conj())?;
    expectation(&prod, nu)
}

pub fn norm_sq(f: &TableFunction, nu: &Measure) -> Result<f64> {
    check_measure(f, nu)?;
    let sq: Vec<Complex64> = f.values.iter().map(|z| Complex64::new(z.norm_sqr(), 0.0)).collect();
    Ok(expect_values(sq, f.q(), f.n, nu).re)
}

fn check_rho(rho: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::invalid(format!("noise rate ρ = {rho} is outside [0, 1]")));
    }
    Ok(())
}

/// One-coordinate noise `v ↦ ρ v + (1 − ρ) E_ν v` on a fibre.
fn noise_fibre(rho: f64, nu: &Measure) -> impl Fn(&mut [Complex64]) + '_ {
    move |fibre: &mut [Complex64]| {
        let mean = nu.expectation(fibre);
        fibre.iter_mut().for_each(|v| *v = *v * rho + mean * (1.0 - rho));
    }
}

/// `T_ρ f`, applied coordinate by coordinate.
pub fn noise_apply(f: &TableFunction, rho: f64, nu: &Measure) -> Result<TableFunction> {
    let all: Vec<usize> = (0..f.n).collect();
    noise_apply_coords(f, rho, nu, &all)
}

/// `T_ρ` on the listed coordinates only.
pub fn noise_apply_coords(f: &TableFunction, rho: f64, nu: &Measure, coords: &[usize]) -> Result<TableFunction> {
    check_rho(rho)?;
    check_measure(f, nu)?;
    if let Some(&c) = coords.iter().find(|&&c| c >= f.n) {
        return Err(Error::shape(format!("coordinate {c} out of range for n = {}", f.n)));
    }
    let mut out = f.clone();
    let op = noise_fibre(rho, nu);
    for &axis in coords {
        map_axis(&mut out.values, f.q(), f.n, axis, &op);
    }
    Ok(out)
}

/// `Stab_ρ(f) = ⟨f, T_ρ f⟩`, which is real.
pub fn stability(f: &TableFunction, rho: f64, nu: &Measure) -> Result<f64> {
    let t = noise_apply(f, rho, nu)?;
    let s = inner_product(f, &t, nu)?;
    assert!(
        s.im.abs() <= 1e-10 * s.re.abs().max(1.0),
        "noise stability has imaginary part {}",
        s.im
    );
    Ok(s.re)
}

/// `f_{I→z}`: fixes coordinates `coords` to the symbols `z` and returns the
/// function of the remaining coordinates in increasing order.
pub fn restrict(f: &TableFunction, coords: &[usize], z: &[usize]) -> Result<TableFunction> {
    if coords.len() != z.len() {
        return Err(Error::shape("restriction needs one symbol per fixed coordinate"));
    }
    let mut fixed = vec![None; f.n];
    for (&c, &s) in coords.iter().zip(z) {
        if c >= f.n || fixed[c].is_some() {
            return Err(Error::invalid(format!("bad restriction coordinate {c}")));
        }
        if s >= f.q() {
            return Err(Error::invalid(format!("restriction symbol index {s} outside the alphabet")));
        }
        fixed[c] = Some(s);
    }
    let free: Vec<usize> = (0..f.n).filter(|&c| fixed[c].is_none()).collect();
    let mut x: Vec<usize> = fixed.iter().map(|s| s.unwrap_or(0)).collect();
    let mut y = vec![0; free.len()];
    let len = table_len(f.q(), free.len()).expect("smaller than the source table");
    let values = (0..len)
        .map(|i| {
            decode(i, f.q(), &mut y);
            for (&c, &s) in free.iter().zip(&y) {
                x[c] = s;
            }
            f.eval(&x)
        })
        .collect();
    TableFunction::new(free.len(), f.alphabet.clone(), values)
}

/// `e^{2πi t}` for a rational number of turns, exact at quarter turns.
pub fn unit_phase(turns: &BigRational) -> Complex64 {
    let t = reduce_turns(turns);
    let four = &t * BigRational::from_integer(BigInt::from(4));
    if four.is_integer() {
        return match four.to_integer().to_u8() {
            Some(0) => Complex64::new(1.0, 0.0),
            Some(1) => Complex64::new(0.0, 1.0),
            Some(2) => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    }
    Complex64::from_polar(1.0, std::f64::consts::TAU * to_f64(&t))
}

/// Representative of `t mod 1` in `[0, 1)`.
pub fn reduce_turns(t: &BigRational) -> BigRational {
    let (n, d) = (t.numer(), t.denom());
    BigRational::new(n.mod_floor(d), d.clone())
}

/// `P(x) = Πⱼ Pⱼ(xⱼ)`. When built from phases, the exact number of turns
/// of every factor value is kept alongside, so that products of characters
/// can be evaluated without rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductFunction {
    alphabet: Alphabet,
    factors: Vec<Vec<Complex64>>,
    phases: Option<Vec<Vec<BigRational>>>,
}

impl ProductFunction {
    pub fn new(alphabet: Alphabet, factors: Vec<Vec<Complex64>>) -> Result<Self> {
        if let Some(j) = factors.iter().position(|f| f.len() != alphabet.len()) {
            return Err(Error::shape(format!(
                "factor {j} has {} values for {} symbols",
                factors[j].len(),
                alphabet.len()
            )));
        }
        Ok(Self {
            alphabet,
            factors,
            phases: None,
        })
    }

    /// Unimodular factors `e^{2πi·phases[j][s]}`.
    pub fn from_phases(alphabet: Alphabet, phases: Vec<Vec<BigRational>>) -> Result<Self> {
        let phases: Vec<Vec<BigRational>> = phases
            .into_iter()
            .map(|f| f.iter().map(reduce_turns).collect())
            .collect();
        let factors = phases.iter().map(|f| f.iter().map(unit_phase).collect()).collect();
        let mut p = Self::new(alphabet, factors)?;
        p.phases = Some(phases);
        Ok(p)
    }

    pub fn ones(n: usize, alphabet: Alphabet) -> Self {
        let q = alphabet.len();
        let zero = vec![vec![BigRational::zero(); q]; n];
        Self::from_phases(alphabet, zero).expect("factor lengths match")
    }

    pub fn n(&self) -> usize {
        self.factors.len()
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn q(&self) -> usize {
        self.alphabet.len()
    }

    pub fn factors(&self) -> &[Vec<Complex64>] {
        &self.factors
    }

    pub fn phases(&self) -> Option<&[Vec<BigRational>]> {
        self.phases.as_deref()
    }

    pub fn eval(&self, x: &[usize]) -> Complex64 {
        self.factors.iter().zip(x).map(|(f, &s)| f[s]).product()
    }

    pub fn to_table(&self) -> Result<TableFunction> {
        TableFunction::from_fn(self.n(), self.alphabet.clone(), |x| self.eval(x))
    }

    pub fn is_one_bounded(&self) -> bool {
        self.factors.iter().flatten().all(|z| z.norm() <= 1.0 + BOUND_SLACK)
    }

    pub fn is_unimodular(&self) -> bool {
        self.factors.iter().flatten().all(|z| (z.norm() - 1.0).abs() <= BOUND_SLACK)
    }

    pub fn conj(&self) -> Self {
        Self {
            alphabet: self.alphabet.clone(),
            factors: self.factors.iter().map(|f| f.iter().map(|z| z.conj()).collect()).collect(),
            phases: self
                .phases
                .as_ref()
                .map(|p| p.iter().map(|f| f.iter().map(|t| reduce_turns(&-t)).collect()).collect()),
        }
    }

    /// Splits `P_{I→z}` into the scalar `Π_{j∈I} Pⱼ(zⱼ)` and the product of
    /// the remaining factors.
    pub fn restrict(&self, coords: &[usize], z: &[usize]) -> Result<(Complex64, ProductFunction)> {
        if coords.len() != z.len() {
            return Err(Error::shape("restriction needs one symbol per fixed coordinate"));
        }
        let mut fixed = vec![None; self.n()];
        for (&c, &s) in coords.iter().zip(z) {
            if c >= self.n() || fixed[c].is_some() || s >= self.q() {
                return Err(Error::invalid(format!("bad restriction ({c}, {s})")));
            }
            fixed[c] = Some(s);
        }
        let scalar = coords.iter().zip(z).map(|(&c, &s)| self.factors[c][s]).product();
        let keep: Vec<usize> = (0..self.n()).filter(|&c| fixed[c].is_none()).collect();
        let rest = Self {
            alphabet: self.alphabet.clone(),
            factors: keep.iter().map(|&c| self.factors[c].clone()).collect(),
            phases: self.phases.as_ref().map(|p| keep.iter().map(|&c| p[c].clone()).collect()),
        };
        Ok((scalar, rest))
    }

    fn check_measure(&self, nu: &Measure) -> Result<()> {
        if nu.len() != self.q() {
            return Err(Error::shape("measure and product function alphabets differ in size"));
        }
        Ok(())
    }

    /// `E_{ν^⊗n} P = Πⱼ E_ν Pⱼ`.
    pub fn expectation(&self, nu: &Measure) -> Result<Complex64> {
        self.check_measure(nu)?;
        Ok(self.factors.iter().map(|f| nu.expectation(f)).product())
    }

    /// `Stab_ρ(P) = Πⱼ (ρ‖Pⱼ‖² + (1 − ρ)|E Pⱼ|²)`.
    pub fn stability(&self, rho: f64, nu: &Measure) -> Result<f64> {
        check_rho(rho)?;
        self.check_measure(nu)?;
        Ok(self
            .factors
            .iter()
            .map(|f| {
                let sq: f64 = f.iter().zip(nu.weights()).map(|(z, w)| z.norm_sqr() * w).sum();
                rho * sq + (1.0 - rho) * nu.expectation(f).norm_sqr()
            })
            .product())
    }
}

/// The character witness `fᵢ(x) = Πⱼ χ(σᵢ(xⱼ))`.
///
/// For a witness into `ℤ_m`, `χ(t) = e^{2πi t/m}`. For a witness into `ℤ`,
/// `χ(t) = e^{2πi θ t}` with the rational `θ` given, defaulting to `1/Q`
/// where `Q` exceeds the spread of every `σᵢ`, so that `χ∘σᵢ` is
/// nonconstant whenever `σᵢ` is.
pub fn character_function(
    support: &Support,
    alphabet: &Alphabet,
    witness: &EmbeddingWitness,
    coord: usize,
    n: usize,
    theta: Option<BigRational>,
) -> Result<ProductFunction> {
    if !verify_witness(support, witness) {
        return Err(Error::UnverifiedWitness);
    }
    if coord >= witness.sigma.len() || witness.sigma[coord].len() != alphabet.len() {
        return Err(Error::shape("coordinate or alphabet does not match the witness"));
    }
    let theta = match (witness.modulus, theta) {
        (0, Some(t)) => t,
        (0, None) => {
            let span = witness
                .sigma
                .iter()
                .map(|t| {
                    let max = t.iter().max().cloned().unwrap_or_default();
                    let min = t.iter().min().cloned().unwrap_or_default();
                    max - min
                })
                .max()
                .unwrap_or_default();
            BigRational::new(BigInt::from(1), span.abs() + 1)
        }
        (m, _) => BigRational::new(BigInt::from(1), BigInt::from(m)),
    };
    let factor: Vec<BigRational> = witness.sigma[coord]
        .iter()
        .map(|s| &theta * BigRational::from_integer(s.clone()))
        .collect();
    ProductFunction::from_phases(alphabet.clone(), vec![factor; n])
}

/// Outcome of [`global_inverse_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalInverseReport {
    /// `|⟨f, L·P⟩|`.
    pub value: f64,
    /// Degree of `L`, ignoring Efron–Stein weight below `1e-20`.
    pub degree: Option<usize>,
    pub degree_ok: bool,
    pub norm: f64,
    pub norm_ok: bool,
    pub unimodular: bool,
}

impl GlobalInverseReport {
    pub fn valid(&self) -> bool {
        self.degree_ok && self.norm_ok && self.unimodular
    }
}

/// Evaluates a supplied global witness `(L, P)` for `f`: the correlation
/// `|⟨f, L·P⟩|` together with `deg L ≤ d`, `‖L‖₂ ≤ 1` and `|Pⱼ| = 1`.
pub fn global_inverse_check(
    f: &TableFunction,
    l: &TableFunction,
    p: &ProductFunction,
    d: usize,
    nu: &Measure,
) -> Result<GlobalInverseReport> {
    let lp = l.mul(&p.to_table()?)?;
    let value = inner_product(f, &lp, nu)?.norm();
    let degree = crate::efron_stein::degree(l, nu, 1e-20)?;
    let norm = norm_sq(l, nu)?.sqrt();
    Ok(GlobalInverseReport {
        value,
        degree,
        degree_ok: degree.is_none_or(|g| g <= d),
        norm,
        norm_ok: norm <= 1.0 + BOUND_SLACK,
        unimodular: p.is_unimodular(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::rat;

    #[test]
    fn global_inverse_examples() {
        let nu = Measure::uniform(2);
        let alpha = Alphabet::numeric(2);
        let p = ProductFunction::from_phases(alpha.clone(), vec![vec![rat(0, 1), rat(1, 3)]; 3]).unwrap();
        let one = TableFunction::constant(3, alpha.clone(), c(1.0)).unwrap();
        let r = global_inverse_check(&p.to_table().unwrap(), &one, &p, 0, &nu).unwrap();
        assert!((r.value - 1.0).abs() < 1e-14 && r.valid());

        let ones = ProductFunction::ones(3, alpha.clone());
        let r = global_inverse_check(&parity(3), &one, &ones, 2, &nu).unwrap();
        assert!(r.value < 1e-15);
        let r = global_inverse_check(&parity(3), &parity(3), &ones, 3, &nu).unwrap();
        assert!((r.value - 1.0).abs() < 1e-15 && r.valid());
        let r = global_inverse_check(&parity(3), &parity(3), &ones, 2, &nu).unwrap();
        assert!(!r.degree_ok);
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn parity(n: usize) -> TableFunction {
        TableFunction::from_fn(n, Alphabet::numeric(2), |x| {
            c(if x.iter().sum::<usize>() % 2 == 0 { 1.0 } else { -1.0 })
        })
        .unwrap()
    }

    #[test]
    fn inner_product_examples() {
        let nu = Measure::uniform(2);
        let one = TableFunction::constant(3, Alphabet::numeric(2), c(1.0)).unwrap();
        assert_eq!(inner_product(&one, &one, &nu).unwrap(), c(1.0));
        let f = TableFunction::new(1, Alphabet::numeric(2), vec![c(1.0), c(-1.0)]).unwrap();
        let g = TableFunction::new(1, Alphabet::numeric(2), vec![c(1.0), c(1.0)]).unwrap();
        assert_eq!(inner_product(&f, &g, &nu).unwrap(), c(0.0));
        let h = parity(3).map(|z| z * Complex64::new(0.6, 0.8));
        let nn = inner_product(&h, &h, &nu).unwrap();
        assert!((nn.re - 1.0).abs() < 1e-15 && nn.im == 0.0);
    }

    #[test]
    fn noise_examples() {
        let nu = Measure::new(vec![0.2, 0.3, 0.5]).unwrap();
        let f = TableFunction::from_fn(2, Alphabet::numeric(3), |x| Complex64::new(x[0] as f64, x[1] as f64 - 1.0))
            .unwrap();
        assert_eq!(noise_apply(&f, 1.0, &nu).unwrap(), f);
        let mean = expectation(&f, &nu).unwrap();
        let t0 = noise_apply(&f, 0.0, &nu).unwrap();
        assert!(t0.values().iter().all(|z| (z - mean).norm() < 1e-14));

        let g = TableFunction::new(1, Alphabet::numeric(3), vec![c(1.0), c(-2.0), c(0.5)]).unwrap();
        let eg = expectation(&g, &nu).unwrap();
        let t = noise_apply(&g, 0.3, &nu).unwrap();
        for (a, b) in t.values().iter().zip(g.values()) {
            assert!((a - (b * 0.3 + eg * 0.7)).norm() < 1e-15);
        }
        assert!(noise_apply(&g, 1.5, &nu).is_err());
    }

    #[test]
    fn stability_examples() {
        let nu = Measure::uniform(2);
        let k = TableFunction::constant(2, Alphabet::numeric(2), Complex64::new(0.6, 0.8)).unwrap();
        assert!((stability(&k, 0.4, &nu).unwrap() - 1.0).abs() < 1e-15);
        let g = TableFunction::new(1, Alphabet::numeric(2), vec![c(0.5), c(-0.5)]).unwrap();
        assert!((stability(&g, 0.3, &nu).unwrap() - 0.3 * 0.25).abs() < 1e-15);
        for n in 1..=4 {
            let s = stability(&parity(n), 0.7, &nu).unwrap();
            assert!((s - 0.7f64.powi(n as i32)).abs() < 1e-12);
        }
    }

    #[test]
    fn restriction_examples() {
        let f = TableFunction::from_fn(3, Alphabet::numeric(3), |x| c((9 * x[0] + 3 * x[1] + x[2]) as f64)).unwrap();
        assert_eq!(restrict(&f, &[], &[]).unwrap(), f);
        let full = restrict(&f, &[2, 0, 1], &[1, 2, 0]).unwrap();
        assert_eq!((full.n(), full.values()), (0, &[c(19.0)][..]));
        let mid = restrict(&f, &[1], &[2]).unwrap();
        assert_eq!(mid.eval(&[1, 0]), c(15.0));
        assert!(restrict(&f, &[1, 1], &[0, 0]).is_err());

        let p = ProductFunction::new(
            Alphabet::numeric(2),
            vec![vec![c(1.0), c(0.5)], vec![c(-1.0), c(2.0)], vec![c(3.0), c(0.25)]],
        )
        .unwrap();
        let (s, rest) = p.restrict(&[1], &[1]).unwrap();
        assert_eq!(s, c(2.0));
        let direct = restrict(&p.to_table().unwrap(), &[1], &[1]).unwrap();
        assert!(rest.to_table().unwrap().scale(s).max_distance(&direct).unwrap() < 1e-15);
    }

    #[test]
    fn quarter_turns_are_exact() {
        assert_eq!(unit_phase(&rat(1, 2)), c(-1.0));
        assert_eq!(unit_phase(&rat(-1, 4)), Complex64::new(0.0, -1.0));
        assert_eq!(unit_phase(&rat(7, 1)), c(1.0));
        let w = unit_phase(&rat(1, 3));
        assert!((w - Complex64::new(-0.5, 3f64.sqrt() / 2.0)).norm() < 1e-15);
    }

    #[test]
    fn product_closed_forms_match_tables() {
        let nu = Measure::new(vec![0.25, 0.75]).unwrap();
        let p = ProductFunction::new(
            Alphabet::numeric(2),
            vec![vec![Complex64::new(0.3, 0.4), c(-0.9)], vec![c(1.0), Complex64::new(0.0, 0.5)]],
        )
        .unwrap();
        let t = p.to_table().unwrap();
        assert!((p.expectation(&nu).unwrap() - expectation(&t, &nu).unwrap()).norm() < 1e-15);
        for rho in [0.0, 0.3, 1.0] {
            assert!((p.stability(rho, &nu).unwrap() - stability(&t, rho, &nu).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn characters_of_witnesses() {
        let sizes = vec![2, 2, 2];
        let s = Support::new(sizes, vec![vec![0, 0, 0], vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]]).unwrap();
        let w = EmbeddingWitness {
            modulus: 2,
            sigma: vec![vec![BigInt::from(0), BigInt::from(1)]; 3],
        };
        let f = character_function(&s, &Alphabet::numeric(2), &w, 0, 3, None).unwrap();
        assert_eq!(f.to_table().unwrap(), parity(3));

        let bad = EmbeddingWitness {
            modulus: 2,
            sigma: vec![vec![BigInt::from(0), BigInt::from(1)], vec![BigInt::from(0); 2], vec![BigInt::from(0); 2]],
        };
        assert!(matches!(
            character_function(&s, &Alphabet::numeric(2), &bad, 0, 1, None),
            Err(Error::UnverifiedWitness)
        ));

        // ℤ₃ sum: x + y + z ≡ 0 on {0,1,2}³
        let atoms = (0..27usize).map(|m| vec![m / 9, m / 3 % 3, m % 3]).filter(|x| x.iter().sum::<usize>() % 3 == 0);
        let s3 = Support::new(vec![3; 3], atoms).unwrap();
        let id = EmbeddingWitness {
            modulus: 3,
            sigma: vec![(0..3).map(BigInt::from).collect(); 3],
        };
        let f = character_function(&s3, &Alphabet::numeric(3), &id, 1, 1, None).unwrap();
        let omega = unit_phase(&rat(1, 3));
        for (z, want) in f.factors()[0].iter().zip([c(1.0), omega, omega * omega]) {
            assert!((z - want).norm() < 1e-15);
        }
    }

    #[test]
    fn constant_coordinate_gives_constant_character() {
        // σ₁ ≡ 0, σ₂ = σ₃ = anti-diagonal over ℤ on a support where x₂ = x₃
        let s = Support::new(vec![2, 2, 2], vec![vec![0, 0, 0], vec![1, 1, 1], vec![0, 1, 1]]).unwrap();
        let w = EmbeddingWitness {
            modulus: 0,
            sigma: vec![
                vec![BigInt::from(0); 2],
                vec![BigInt::from(0), BigInt::from(1)],
                vec![BigInt::from(0), BigInt::from(-1)],
            ],
        };
        let f = character_function(&s, &Alphabet::numeric(2), &w, 0, 2, None).unwrap();
        assert!(f.to_table().unwrap().values().iter().all(|&z| z == c(1.0)));
        let g = character_function(&s, &Alphabet::numeric(2), &w, 1, 1, None).unwrap();
        // θ = 1/2 for spread 1
        assert_eq!(g.factors()[0], vec![c(1.0), c(-1.0)]);
    }
}
