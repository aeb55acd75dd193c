//! Exact k-ary distributions over finite alphabets.
//!
//! Masses are arbitrary-precision rationals. Atoms are keyed by symbol
//! indices and kept in lexicographic order, which fixes every enumeration
//! order downstream. Zero-mass atoms are dropped at construction, so the
//! atom map *is* the support.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::sampling::{rng_for, ExactCategorical, SeededRng};
use crate::{Error, Result};

/// Shorthand for an exact rational.
pub fn rat(numer: i64, denom: i64) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

/// An ordered list of distinct symbol names.
#[derive(Clone)]
pub struct Alphabet {
    symbols: Vec<String>,
    index: HashMap<String, usize>,
}

impl Alphabet {
    pub fn new<S: Into<String>>(symbols: impl IntoIterator<Item = S>) -> Result<Self> {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.is_empty() {
            return Err(Error::invalid("alphabet is empty"));
        }
        let mut index = HashMap::with_capacity(symbols.len());
        for (i, s) in symbols.iter().enumerate() {
            if index.insert(s.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate symbol {s:?}")));
            }
        }
        Ok(Self { symbols, index })
    }

    /// The alphabet `{"0", "1", ..., "size-1"}`.
    pub fn numeric(size: usize) -> Self {
        Self::new((0..size).map(|i| i.to_string())).expect("size must be positive")
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbol(&self, i: usize) -> &str {
        &self.symbols[i]
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn index_of(&self, symbol: &str) -> Option<usize> {
        self.index.get(symbol).copied()
    }
}

impl PartialEq for Alphabet {
    fn eq(&self, other: &Self) -> bool {
        self.symbols == other.symbols
    }
}

impl Eq for Alphabet {}

impl fmt::Debug for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.symbols).finish()
    }
}

/// The support of a distribution: alphabet sizes and the sorted set of atoms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Support {
    sizes: Vec<usize>,
    atoms: Vec<Vec<usize>>,
}

impl Support {
    pub fn new(sizes: Vec<usize>, atoms: impl IntoIterator<Item = Vec<usize>>) -> Result<Self> {
        if sizes.contains(&0) {
            return Err(Error::invalid("alphabet of size zero"));
        }
        let mut atoms: Vec<Vec<usize>> = atoms.into_iter().collect();
        for a in &atoms {
            if a.len() != sizes.len() || a.iter().zip(&sizes).any(|(x, s)| x >= s) {
                return Err(Error::invalid(format!("atom {a:?} does not fit sizes {sizes:?}")));
            }
        }
        atoms.sort();
        atoms.dedup();
        if atoms.is_empty() {
            return Err(Error::invalid("support is empty"));
        }
        Ok(Self { sizes, atoms })
    }

    pub fn arity(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn atoms(&self) -> &[Vec<usize>] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

/// A distribution over `Σ₁ × … × Σₖ` with exact rational masses.
#[derive(Clone, PartialEq)]
pub struct JointDistribution {
    alphabets: Vec<Alphabet>,
    atoms: BTreeMap<Vec<usize>, BigRational>,
}

impl fmt::Debug for JointDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut m = f.debug_map();
        for (x, p) in &self.atoms {
            let syms: Vec<&str> = x
                .iter()
                .enumerate()
                .map(|(i, &s)| self.alphabets[i].symbol(s))
                .collect();
            m.entry(&syms, &format_args!("{p}"));
        }
        m.finish()
    }
}

impl JointDistribution {
    /// Builds a distribution from atoms given as symbol indices.
    ///
    /// Repeated atoms have their masses added. Masses must be nonnegative and
    /// sum to exactly one.
    pub fn new(
        alphabets: Vec<Alphabet>,
        atoms: impl IntoIterator<Item = (Vec<usize>, BigRational)>,
    ) -> Result<Self> {
        let mut map: BTreeMap<Vec<usize>, BigRational> = BTreeMap::new();
        for (x, p) in atoms {
            if x.len() != alphabets.len() {
                return Err(Error::invalid(format!(
                    "atom {x:?} has arity {} but there are {} alphabets",
                    x.len(),
                    alphabets.len()
                )));
            }
            if let Some(i) = (0..x.len()).find(|&i| x[i] >= alphabets[i].len()) {
                return Err(Error::invalid(format!(
                    "atom {x:?} uses symbol index {} outside alphabet {i}",
                    x[i]
                )));
            }
            if p.is_negative() {
                return Err(Error::invalid(format!("negative mass {p} at atom {x:?}")));
            }
            *map.entry(x).or_insert_with(BigRational::zero) += p;
        }
        map.retain(|_, p| !p.is_zero());
        let total: BigRational = map.values().sum();
        if !total.is_one() {
            return Err(Error::invalid(format!("mass sum {total} ≠ 1")));
        }
        Ok(Self {
            alphabets,
            atoms: map,
        })
    }

    /// Builds a distribution from atoms named by their symbols.
    pub fn from_symbols<S: AsRef<str>>(
        alphabets: Vec<Alphabet>,
        atoms: impl IntoIterator<Item = (Vec<S>, BigRational)>,
    ) -> Result<Self> {
        let mut indexed = Vec::new();
        for (x, p) in atoms {
            if x.len() != alphabets.len() {
                return Err(Error::invalid("atom arity does not match alphabets"));
            }
            let idx = x
                .iter()
                .zip(&alphabets)
                .map(|(s, a)| {
                    a.index_of(s.as_ref())
                        .ok_or_else(|| Error::invalid(format!("unknown symbol {:?}", s.as_ref())))
                })
                .collect::<Result<Vec<_>>>()?;
            indexed.push((idx, p));
        }
        Self::new(alphabets, indexed)
    }

    /// The uniform distribution on the given (deduplicated) atoms.
    pub fn uniform(alphabets: Vec<Alphabet>, atoms: impl IntoIterator<Item = Vec<usize>>) -> Result<Self> {
        let mut atoms: Vec<Vec<usize>> = atoms.into_iter().collect();
        atoms.sort();
        atoms.dedup();
        if atoms.is_empty() {
            return Err(Error::invalid("no atoms"));
        }
        let p = rat(1, atoms.len() as i64);
        Self::new(alphabets, atoms.into_iter().map(|x| (x, p.clone())))
    }

    pub fn arity(&self) -> usize {
        self.alphabets.len()
    }

    pub fn alphabets(&self) -> &[Alphabet] {
        &self.alphabets
    }

    pub fn alphabet(&self, coord: usize) -> &Alphabet {
        &self.alphabets[coord]
    }

    /// Atoms of the support with their masses, in lexicographic order.
    pub fn atoms(&self) -> impl ExactSizeIterator<Item = (&Vec<usize>, &BigRational)> {
        self.atoms.iter()
    }

    pub fn support_len(&self) -> usize {
        self.atoms.len()
    }

    pub fn mass(&self, atom: &[usize]) -> BigRational {
        self.atoms.get(atom).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn support(&self) -> Support {
        Support {
            sizes: self.alphabets.iter().map(Alphabet::len).collect(),
            atoms: self.atoms.keys().cloned().collect(),
        }
    }

    /// The smallest mass over the support.
    pub fn min_atom_mass(&self) -> BigRational {
        self.atoms
            .values()
            .min()
            .cloned()
            .expect("distributions have non-empty support")
    }

    /// Symbol names of an atom.
    pub fn atom_symbols(&self, atom: &[usize]) -> Vec<String> {
        atom.iter()
            .enumerate()
            .map(|(i, &s)| self.alphabets[i].symbol(s).to_string())
            .collect()
    }

    /// Marginal on `coords`, in the order given.
    pub fn marginal(&self, coords: &[usize]) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::invalid("marginal needs at least one coordinate"));
        }
        let mut seen = vec![false; self.arity()];
        for &c in coords {
            if c >= self.arity() || std::mem::replace(&mut seen[c], true) {
                return Err(Error::invalid(format!("bad marginal coordinates {coords:?}")));
            }
        }
        let mut map: BTreeMap<Vec<usize>, BigRational> = BTreeMap::new();
        for (x, p) in &self.atoms {
            let y: Vec<usize> = coords.iter().map(|&c| x[c]).collect();
            *map.entry(y).or_insert_with(BigRational::zero) += p;
        }
        Ok(Self {
            alphabets: coords.iter().map(|&c| self.alphabets[c].clone()).collect(),
            atoms: map,
        })
    }

    /// Single-coordinate marginal masses, indexed by symbol.
    pub fn coordinate_masses(&self, coord: usize) -> Vec<BigRational> {
        let mut m = vec![BigRational::zero(); self.alphabets[coord].len()];
        for (x, p) in &self.atoms {
            m[x[coord]] += p;
        }
        m
    }

    /// Distribution of the remaining coordinates given `x[coord] = value`.
    pub fn condition(&self, coord: usize, value: usize) -> Result<Self> {
        if self.arity() < 2 {
            return Err(Error::invalid("conditioning needs arity at least 2"));
        }
        if coord >= self.arity() || value >= self.alphabets[coord].len() {
            return Err(Error::invalid("conditioning index out of range"));
        }
        let z = self.coordinate_masses(coord)[value].clone();
        if z.is_zero() {
            return Err(Error::ZeroMass {
                coord,
                symbol: self.alphabets[coord].symbol(value).to_string(),
            });
        }
        let atoms = self.atoms.iter().filter(|(x, _)| x[coord] == value).map(|(x, p)| {
            let mut y = x.clone();
            y.remove(coord);
            (y, p / &z)
        });
        let mut alphabets = self.alphabets.clone();
        alphabets.remove(coord);
        Ok(Self {
            alphabets,
            atoms: atoms.collect(),
        })
    }

    /// Conditioning by symbol name.
    pub fn condition_symbol(&self, coord: usize, symbol: &str) -> Result<Self> {
        let value = self
            .alphabets
            .get(coord)
            .and_then(|a| a.index_of(symbol))
            .ok_or_else(|| Error::invalid(format!("unknown symbol {symbol:?}")))?;
        self.condition(coord, value)
    }

    /// The product distribution `self ⊗ other` on the concatenated coordinates.
    pub fn product(&self, other: &Self) -> Self {
        let mut atoms = BTreeMap::new();
        for (x, p) in &self.atoms {
            for (y, q) in &other.atoms {
                let mut xy = x.clone();
                xy.extend_from_slice(y);
                atoms.insert(xy, p * q);
            }
        }
        let mut alphabets = self.alphabets.clone();
        alphabets.extend(other.alphabets.iter().cloned());
        Self { alphabets, atoms }
    }

    /// Reorders coordinates: coordinate `i` of the result is `perm[i]` of self.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.arity() {
            return Err(Error::invalid("permutation has the wrong length"));
        }
        self.marginal(perm)
    }

    /// Renames symbols: `maps[i][s]` is the new index of symbol `s` at
    /// coordinate `i`, and `alphabets` the new alphabets.
    pub fn relabel(&self, alphabets: Vec<Alphabet>, maps: &[Vec<usize>]) -> Result<Self> {
        let atoms = self.atoms.iter().map(|(x, p)| {
            (x.iter().enumerate().map(|(i, &s)| maps[i][s]).collect(), p.clone())
        });
        Self::new(alphabets, atoms)
    }

    /// Drops every symbol of zero marginal mass, keeping the order of the rest.
    pub fn trim_alphabets(&self) -> Result<Self> {
        let mut alphabets = Vec::with_capacity(self.arity());
        let mut maps = Vec::with_capacity(self.arity());
        for i in 0..self.arity() {
            let masses = self.coordinate_masses(i);
            let mut map = vec![usize::MAX; masses.len()];
            let mut kept = Vec::new();
            for (s, m) in masses.iter().enumerate() {
                if !m.is_zero() {
                    map[s] = kept.len();
                    kept.push(self.alphabets[i].symbol(s).to_string());
                }
            }
            alphabets.push(Alphabet::new(kept)?);
            maps.push(map);
        }
        self.relabel(alphabets, &maps)
    }

    /// Masses as `f64`, in atom order.
    pub fn masses_f64(&self) -> Vec<f64> {
        self.atoms.values().map(to_f64).collect()
    }
}

/// Converts an exact rational to the nearest `f64`.
pub fn to_f64(q: &BigRational) -> f64 {
    num_traits::ToPrimitive::to_f64(q).expect("rational converts to f64")
}

/// Solves `total = c·base + (1−c)·ν` for `ν`.
///
/// Fails with [`Error::NegativeMixture`] naming the first atom (in
/// lexicographic order) where `total − c·base` is negative.
pub fn decompose_mixture(
    total: &JointDistribution,
    base: &JointDistribution,
    c: &BigRational,
) -> Result<JointDistribution> {
    if total.alphabets != base.alphabets {
        return Err(Error::shape("mixture components live on different alphabets"));
    }
    if !c.is_positive() || *c >= BigRational::one() {
        return Err(Error::invalid(format!("mixture weight {c} is not in (0,1)")));
    }
    let one_minus = BigRational::one() - c;
    let mut keys: Vec<&Vec<usize>> = total.atoms.keys().chain(base.atoms.keys()).collect();
    keys.sort();
    keys.dedup();
    let mut atoms = Vec::with_capacity(keys.len());
    for x in keys {
        let rest = total.mass(x) - c * base.mass(x);
        if rest.is_negative() {
            return Err(Error::NegativeMixture {
                atom: total.atom_symbols(x),
            });
        }
        atoms.push((x.clone(), rest / &one_minus));
    }
    JointDistribution::new(total.alphabets.clone(), atoms)
}

/// Why a raw distribution fails validation.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    BadAlphabet { coord: usize, reason: String },
    WrongArity { atom: Vec<String> },
    UnknownSymbol { atom: Vec<String>, coord: usize },
    DuplicateAtom { atom: Vec<String> },
    NegativeMass { atom: Vec<String>, mass: BigRational },
    MassSum { sum: BigRational },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::BadAlphabet { coord, reason } => write!(f, "alphabet {coord}: {reason}"),
            Violation::WrongArity { atom } => write!(f, "atom {atom:?} has the wrong arity"),
            Violation::UnknownSymbol { atom, coord } => {
                write!(f, "atom {atom:?} has an unknown symbol at coordinate {coord}")
            }
            Violation::DuplicateAtom { atom } => write!(f, "atom {atom:?} is listed twice"),
            Violation::NegativeMass { atom, mass } => {
                write!(f, "negative mass {mass} at atom {atom:?}")
            }
            Violation::MassSum { sum } => write!(f, "mass sum ≠ 1 (got {sum})"),
        }
    }
}

/// An unvalidated distribution, as read from a file.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDistribution {
    pub alphabets: Vec<Vec<String>>,
    pub atoms: Vec<(Vec<String>, BigRational)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub mass_sum: BigRational,
    /// Minimum positive mass, when there is any.
    pub min_atom_mass: Option<BigRational>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl RawDistribution {
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let mut alphabets = Vec::new();
        for (coord, syms) in self.alphabets.iter().enumerate() {
            match Alphabet::new(syms.iter().cloned()) {
                Ok(a) => alphabets.push(Some(a)),
                Err(e) => {
                    violations.push(Violation::BadAlphabet {
                        coord,
                        reason: e.to_string(),
                    });
                    alphabets.push(None);
                }
            }
        }
        let mut seen = std::collections::HashSet::new();
        let mut sum = BigRational::zero();
        let mut min: Option<BigRational> = None;
        for (atom, p) in &self.atoms {
            if atom.len() != self.alphabets.len() {
                violations.push(Violation::WrongArity { atom: atom.clone() });
            } else if let Some(coord) = (0..atom.len()).find(|&i| {
                alphabets[i]
                    .as_ref()
                    .is_some_and(|a| a.index_of(&atom[i]).is_none())
            }) {
                violations.push(Violation::UnknownSymbol {
                    atom: atom.clone(),
                    coord,
                });
            }
            if !seen.insert(atom.clone()) {
                violations.push(Violation::DuplicateAtom { atom: atom.clone() });
            }
            if p.is_negative() {
                violations.push(Violation::NegativeMass {
                    atom: atom.clone(),
                    mass: p.clone(),
                });
            } else if p.is_positive() && min.as_ref().is_none_or(|m| p < m) {
                min = Some(p.clone());
            }
            sum += p;
        }
        if !sum.is_one() {
            violations.push(Violation::MassSum { sum: sum.clone() });
        }
        ValidationReport {
            violations,
            mass_sum: sum,
            min_atom_mass: min,
        }
    }

    pub fn into_distribution(self) -> Result<JointDistribution> {
        let report = self.validate();
        if !report.is_valid() {
            let msg: Vec<String> = report.violations.iter().map(ToString::to_string).collect();
            return Err(Error::Invalid(msg.join("; ")));
        }
        let alphabets = self
            .alphabets
            .into_iter()
            .map(Alphabet::new)
            .collect::<Result<Vec<_>>>()?;
        JointDistribution::from_symbols(alphabets, self.atoms)
    }
}

impl From<&JointDistribution> for RawDistribution {
    fn from(d: &JointDistribution) -> Self {
        Self {
            alphabets: d.alphabets.iter().map(|a| a.symbols().to_vec()).collect(),
            atoms: d
                .atoms
                .iter()
                .map(|(x, p)| (d.atom_symbols(x), p.clone()))
                .collect(),
        }
    }
}

/// Draws i.i.d. columns from a base distribution, producing the `k × n`
/// matrices of `μ^⊗n`.
#[derive(Debug, Clone)]
pub struct ProductPowerSampler {
    atoms: Vec<Vec<usize>>,
    categorical: ExactCategorical,
    arity: usize,
    n: usize,
    rng: SeededRng,
}

impl ProductPowerSampler {
    pub fn new(base: &JointDistribution, n: usize, seed: u64) -> Self {
        Self::with_stream(base, n, seed, 0)
    }

    pub fn with_stream(base: &JointDistribution, n: usize, seed: u64, stream: u64) -> Self {
        let categorical =
            ExactCategorical::new(base.atoms.values()).expect("distribution masses are valid weights");
        Self {
            atoms: base.atoms.keys().cloned().collect(),
            categorical,
            arity: base.arity(),
            n,
            rng: rng_for(seed, stream),
        }
    }

    /// One support atom drawn from the base distribution.
    pub fn draw_column(&mut self) -> &[usize] {
        let i = self.categorical.sample(&mut self.rng);
        &self.atoms[i]
    }

    /// A `k × n` matrix as `k` rows of length `n`.
    pub fn draw(&mut self) -> Vec<Vec<usize>> {
        let mut rows = vec![Vec::with_capacity(self.n); self.arity];
        for _ in 0..self.n {
            let i = self.categorical.sample(&mut self.rng);
            for (row, &s) in rows.iter_mut().zip(&self.atoms[i]) {
                row.push(s);
            }
        }
        rows
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(k: usize) -> Vec<Alphabet> {
        vec![Alphabet::numeric(2); k]
    }

    fn three_lin() -> JointDistribution {
        let atoms = (0..8usize)
            .map(|m| vec![m >> 2 & 1, m >> 1 & 1, m & 1])
            .filter(|x| x.iter().sum::<usize>() % 2 == 0);
        JointDistribution::uniform(bits(3), atoms).unwrap()
    }

    #[test]
    fn alphabet_rejects_duplicates_and_empty() {
        assert!(Alphabet::new(["a", "b", "a"]).is_err());
        assert!(Alphabet::new(Vec::<String>::new()).is_err());
        let a = Alphabet::new(["x"]).unwrap();
        assert_eq!(a.index_of("x"), Some(0));
    }

    #[test]
    fn validate_uniform_cube() {
        let raw = RawDistribution {
            alphabets: vec![vec!["0".into(), "1".into()]; 3],
            atoms: (0..8)
                .map(|m: usize| {
                    (
                        (0..3).map(|b| (m >> (2 - b) & 1).to_string()).collect(),
                        rat(1, 8),
                    )
                })
                .collect(),
        };
        let r = raw.validate();
        assert!(r.is_valid());
        assert_eq!(r.min_atom_mass, Some(rat(1, 8)));
    }

    #[test]
    fn validate_reports_mass_defects() {
        let raw = RawDistribution {
            alphabets: vec![vec!["0".into(), "1".into()]],
            atoms: vec![(vec!["0".into()], rat(1, 2)), (vec!["1".into()], rat(3, 8))],
        };
        let r = raw.validate();
        assert_eq!(r.violations, vec![Violation::MassSum { sum: rat(7, 8) }]);
        assert!(r.violations[0].to_string().contains("mass sum ≠ 1"));

        let raw = RawDistribution {
            alphabets: vec![vec!["0".into(), "1".into()]],
            atoms: vec![(vec!["0".into()], rat(9, 8)), (vec!["1".into()], rat(-1, 8))],
        };
        let r = raw.validate();
        assert!(matches!(&r.violations[..], [Violation::NegativeMass { mass, .. }] if *mass == rat(-1, 8)));
        assert!(raw.into_distribution().is_err());
    }

    #[test]
    fn validate_reports_symbol_defects() {
        let raw = RawDistribution {
            alphabets: vec![vec!["a".into()], vec!["b".into(), "b".into()]],
            atoms: vec![
                (vec!["a".into(), "z".into()], rat(1, 2)),
                (vec!["a".into()], rat(1, 2)),
            ],
        };
        let r = raw.validate();
        assert!(r.violations.iter().any(|v| matches!(v, Violation::BadAlphabet { coord: 1, .. })));
        assert!(r.violations.iter().any(|v| matches!(v, Violation::WrongArity { .. })));
    }

    #[test]
    fn zero_mass_atoms_are_dropped() {
        let d = JointDistribution::new(bits(1), [(vec![0], rat(1, 1)), (vec![1], rat(0, 1))]).unwrap();
        assert_eq!(d.support_len(), 1);
        assert_eq!(d.min_atom_mass(), rat(1, 1));
    }

    #[test]
    fn min_atom_mass_examples() {
        let d = JointDistribution::uniform(bits(2), [vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]).unwrap();
        assert_eq!(d.min_atom_mass(), rat(1, 4));
        let d = JointDistribution::new(
            vec![Alphabet::numeric(3)],
            [(vec![0], rat(1, 2)), (vec![1], rat(1, 3)), (vec![2], rat(1, 6))],
        )
        .unwrap();
        assert_eq!(d.min_atom_mass(), rat(1, 6));
    }

    #[test]
    fn three_lin_pair_marginal_is_uniform() {
        let m = three_lin().marginal(&[0, 1]).unwrap();
        let u = JointDistribution::uniform(bits(2), [vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]).unwrap();
        assert_eq!(m, u);
        assert_eq!(three_lin().marginal(&[0, 1, 2]).unwrap(), three_lin());
        assert!(three_lin().marginal(&[]).is_err());
        assert!(three_lin().marginal(&[0, 0]).is_err());
    }

    #[test]
    fn product_marginal_recovers_factor() {
        let nu1 = JointDistribution::new(bits(1), [(vec![0], rat(1, 3)), (vec![1], rat(2, 3))]).unwrap();
        let nu2 = JointDistribution::new(
            vec![Alphabet::numeric(3)],
            [(vec![0], rat(1, 5)), (vec![1], rat(1, 5)), (vec![2], rat(3, 5))],
        )
        .unwrap();
        let p = nu1.product(&nu2);
        assert_eq!(p.marginal(&[1]).unwrap(), nu2);
        for v in 0..3 {
            assert_eq!(p.condition(1, v).unwrap(), nu1);
        }
    }

    #[test]
    fn three_lin_conditioned_on_last_coordinate() {
        let c = three_lin().condition(2, 0).unwrap();
        let expect = JointDistribution::uniform(bits(2), [vec![0, 0], vec![1, 1]]).unwrap();
        assert_eq!(c, expect);
    }

    #[test]
    fn conditioning_on_zero_mass_fails() {
        let d = JointDistribution::uniform(bits(2), [vec![0, 0], vec![0, 1]]).unwrap();
        assert!(matches!(d.condition(0, 1), Err(Error::ZeroMass { coord: 0, .. })));
    }

    #[test]
    fn mixture_identity_and_defect() {
        let d = three_lin();
        assert_eq!(decompose_mixture(&d, &d, &rat(1, 2)).unwrap(), d);
        let point = JointDistribution::new(bits(3), [(vec![0, 0, 0], rat(1, 1))]).unwrap();
        // total/base ratio at (0,0,0) is 1/4, so any c above it fails there.
        assert!(decompose_mixture(&d, &point, &rat(1, 4)).is_ok());
        match decompose_mixture(&d, &point, &rat(1, 3)) {
            Err(Error::NegativeMixture { atom }) => assert_eq!(atom, vec!["0", "0", "0"]),
            other => panic!("expected a negative-mixture error, got {other:?}"),
        }
    }

    #[test]
    fn sampler_is_reproducible_and_stays_in_support() {
        let d = three_lin();
        let mut a = ProductPowerSampler::new(&d, 16, 3);
        let mut b = ProductPowerSampler::new(&d, 16, 3);
        for _ in 0..20 {
            let m = a.draw();
            assert_eq!(m, b.draw());
            for ((a, b), c) in m[0].iter().zip(&m[1]).zip(&m[2]) {
                assert_eq!((a + b + c) % 2, 0);
            }
        }
    }
}
