//! JSON file formats.
//!
//! Rationals are written as `[numerator, denominator]`. Integers that do not
//! fit in 64 bits are written as decimal strings, and both forms are
//! accepted on input. Complex numbers are `[re, im]`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::correlation::{CorrelationResult, Function};
use crate::dictatorship::{Constraint, Predicate, SymbolFunction, TestInstance};
use crate::distribution::{Alphabet, JointDistribution, RawDistribution};
use crate::embedding::EmbeddingWitness;
use crate::function::{ProductFunction, TableFunction};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum IntJson {
    Small(i64),
    Big(String),
}

impl IntJson {
    fn to_bigint(&self) -> Result<BigInt> {
        match self {
            IntJson::Small(v) => Ok(BigInt::from(*v)),
            IntJson::Big(s) => s.parse().map_err(|_| Error::Parse(format!("{s:?} is not an integer"))),
        }
    }

    fn from_bigint(v: &BigInt) -> Self {
        v.to_i64().map_or_else(|| IntJson::Big(v.to_string()), IntJson::Small)
    }
}

fn rational_from(pair: &[IntJson; 2]) -> Result<BigRational> {
    let den = pair[1].to_bigint()?;
    if den.is_zero() {
        return Err(Error::Parse("zero denominator".into()));
    }
    Ok(BigRational::new(pair[0].to_bigint()?, den))
}

fn rational_json(r: &BigRational) -> Value {
    json!([IntJson::from_bigint(r.numer()), IntJson::from_bigint(r.denom())])
}

pub fn integer_to_json(v: &BigInt) -> Value {
    json!(IntJson::from_bigint(v))
}

pub fn complex_to_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

fn from_value<T: for<'de> Deserialize<'de>>(value: Value) -> Result<T> {
    serde_json::from_value(value).map_err(|e| Error::Parse(e.to_string()))
}

#[derive(Debug, Deserialize)]
struct AtomJson {
    x: Vec<String>,
    p: [IntJson; 2],
}

#[derive(Debug, Deserialize)]
struct DistributionJson {
    alphabets: Vec<Vec<String>>,
    atoms: Vec<AtomJson>,
}

fn raw_atoms(atoms: Vec<AtomJson>) -> Result<Vec<(Vec<String>, BigRational)>> {
    atoms.into_iter().map(|a| Ok((a.x, rational_from(&a.p)?))).collect()
}

/// Parses without validating, so every violation can be reported.
pub fn parse_raw_distribution(text: &str) -> Result<RawDistribution> {
    let d: DistributionJson = parse_json(text)?;
    Ok(RawDistribution {
        alphabets: d.alphabets,
        atoms: raw_atoms(d.atoms)?,
    })
}

pub fn parse_distribution(text: &str) -> Result<JointDistribution> {
    parse_raw_distribution(text)?.into_distribution()
}

fn atoms_json(d: &JointDistribution) -> Value {
    Value::Array(
        d.atoms()
            .map(|(x, p)| json!({"x": d.atom_symbols(x), "p": rational_json(p)}))
            .collect(),
    )
}

pub fn distribution_to_json(d: &JointDistribution) -> Value {
    json!({
        "alphabets": d.alphabets().iter().map(|a| a.symbols()).collect::<Vec<_>>(),
        "atoms": atoms_json(d),
    })
}

pub fn witness_to_json(w: &EmbeddingWitness, alphabets: &[Alphabet]) -> Value {
    let sigma: Vec<Value> = w
        .sigma
        .iter()
        .zip(alphabets)
        .map(|(s, a)| {
            Value::Object(
                a.symbols()
                    .iter()
                    .zip(s)
                    .map(|(sym, v)| (sym.clone(), integer_to_json(v)))
                    .collect(),
            )
        })
        .collect();
    json!({"modulus": w.modulus, "sigma": sigma})
}

#[derive(Debug, Deserialize)]
struct WitnessJson {
    modulus: u64,
    sigma: Vec<BTreeMap<String, IntJson>>,
}

pub fn parse_witness(text: &str, alphabets: &[Alphabet]) -> Result<EmbeddingWitness> {
    let w: WitnessJson = parse_json(text)?;
    if w.sigma.len() != alphabets.len() {
        return Err(Error::shape("witness arity differs from the distribution"));
    }
    let sigma = w
        .sigma
        .iter()
        .zip(alphabets)
        .map(|(map, a)| {
            a.symbols()
                .iter()
                .map(|sym| {
                    map.get(sym)
                        .ok_or_else(|| Error::Parse(format!("witness misses symbol {sym:?}")))?
                        .to_bigint()
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(EmbeddingWitness {
        modulus: w.modulus,
        sigma,
    })
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum FunctionJson {
    Table {
        n: usize,
        alphabet: Vec<String>,
        values: Vec<[f64; 2]>,
    },
    Product {
        alphabet: Vec<String>,
        factors: Vec<BTreeMap<String, [f64; 2]>>,
    },
}

fn complex_from(v: &[f64; 2]) -> Complex64 {
    Complex64::new(v[0], v[1])
}

/// A table `{"n", "alphabet", "values"}` or a product `{"alphabet", "factors"}`.
pub fn parse_function(text: &str) -> Result<Function> {
    match parse_json::<FunctionJson>(text)? {
        FunctionJson::Table { n, alphabet, values } => Ok(TableFunction::new(
            n,
            Alphabet::new(alphabet)?,
            values.iter().map(complex_from).collect(),
        )?
        .into()),
        FunctionJson::Product { alphabet, factors } => {
            let alphabet = Alphabet::new(alphabet)?;
            let factors = factors
                .iter()
                .map(|map| {
                    if map.len() != alphabet.len() {
                        return Err(Error::Parse("factor keys differ from the alphabet".into()));
                    }
                    alphabet
                        .symbols()
                        .iter()
                        .map(|s| {
                            map.get(s)
                                .map(complex_from)
                                .ok_or_else(|| Error::Parse(format!("factor misses symbol {s:?}")))
                        })
                        .collect()
                })
                .collect::<Result<_>>()?;
            Ok(ProductFunction::new(alphabet, factors)?.into())
        }
    }
}

pub fn function_to_json(f: &Function) -> Value {
    match f {
        Function::Table(t) => json!({
            "n": t.n(),
            "alphabet": t.alphabet().symbols(),
            "values": t.values().iter().map(|&z| complex_to_json(z)).collect::<Vec<_>>(),
        }),
        Function::Product(p) => json!({
            "alphabet": p.alphabet().symbols(),
            "factors": p.factors().iter().map(|fac| {
                Value::Object(p.alphabet().symbols().iter().zip(fac).map(|(s, &z)| (s.clone(), complex_to_json(z))).collect())
            }).collect::<Vec<_>>(),
        }),
    }
}

#[derive(Debug, Deserialize)]
struct PredicateJson {
    alphabet: Vec<String>,
    k: usize,
    truth: Vec<u8>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum LocalJson {
    Full(DistributionJson),
    Atoms(Vec<AtomJson>),
}

#[derive(Debug, Deserialize)]
struct ConstraintJson {
    w: [IntJson; 2],
    mu: LocalJson,
}

#[derive(Debug, Deserialize)]
struct InstanceJson {
    predicate: PredicateJson,
    constraints: Vec<ConstraintJson>,
}

/// `mu` may be a bare atom list or a full distribution object.
pub fn parse_instance(text: &str) -> Result<TestInstance> {
    let inst: InstanceJson = parse_json(text)?;
    let p = inst.predicate;
    if p.truth.iter().any(|&t| t > 1) {
        return Err(Error::Parse("truth table entries must be 0 or 1".into()));
    }
    let alphabet = Alphabet::new(p.alphabet.clone())?;
    let predicate = Predicate::new(alphabet, p.k, p.truth.iter().map(|&t| t == 1).collect())?;
    let constraints = inst
        .constraints
        .into_iter()
        .map(|c| {
            let raw = match c.mu {
                LocalJson::Full(d) => RawDistribution {
                    alphabets: d.alphabets,
                    atoms: raw_atoms(d.atoms)?,
                },
                LocalJson::Atoms(atoms) => RawDistribution {
                    alphabets: vec![p.alphabet.clone(); p.k],
                    atoms: raw_atoms(atoms)?,
                },
            };
            Ok(Constraint {
                weight: rational_from(&c.w)?,
                mu: raw.into_distribution()?,
            })
        })
        .collect::<Result<_>>()?;
    TestInstance::new(predicate, constraints)
}

pub fn instance_to_json(inst: &TestInstance) -> Value {
    let p = inst.predicate();
    json!({
        "predicate": {
            "alphabet": p.alphabet().symbols(),
            "k": p.arity(),
            "truth": p.truth().iter().map(|&t| u8::from(t)).collect::<Vec<_>>(),
        },
        "constraints": inst.constraints().iter().map(|c| json!({
            "w": rational_json(&c.weight),
            "mu": atoms_json(&c.mu),
        })).collect::<Vec<_>>(),
    })
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum SymbolFunctionJson {
    Dictator {
        n: usize,
        alphabet: Vec<String>,
        dictator: usize,
    },
    Constant {
        n: usize,
        alphabet: Vec<String>,
        constant: String,
    },
    Table {
        n: usize,
        alphabet: Vec<String>,
        values: Vec<String>,
    },
}

/// `{"n", "alphabet", "values": [sym, …]}`, `{"n", "alphabet", "dictator": j}`
/// or `{"n", "alphabet", "constant": sym}`.
pub fn parse_symbol_function(text: &str) -> Result<SymbolFunction> {
    let lookup = |a: &Alphabet, s: &str| a.index_of(s).ok_or_else(|| Error::Parse(format!("unknown symbol {s:?}")));
    match parse_json::<SymbolFunctionJson>(text)? {
        SymbolFunctionJson::Dictator { n, alphabet, dictator } => SymbolFunction::dictator(n, Alphabet::new(alphabet)?, dictator),
        SymbolFunctionJson::Constant { n, alphabet, constant } => {
            let a = Alphabet::new(alphabet)?;
            let s = lookup(&a, &constant)?;
            SymbolFunction::constant(n, a, s)
        }
        SymbolFunctionJson::Table { n, alphabet, values } => {
            let a = Alphabet::new(alphabet)?;
            let values = values.iter().map(|s| lookup(&a, s)).collect::<Result<_>>()?;
            SymbolFunction::table(n, a, values)
        }
    }
}

pub fn symbol_function_to_json(f: &SymbolFunction) -> Value {
    let a = f.alphabet();
    match f {
        SymbolFunction::Table { n, values, .. } => json!({
            "n": n,
            "alphabet": a.symbols(),
            "values": values.iter().map(|&v| a.symbol(v)).collect::<Vec<_>>(),
        }),
        SymbolFunction::Dictator { n, coord, .. } => json!({"n": n, "alphabet": a.symbols(), "dictator": coord}),
        SymbolFunction::Constant { n, symbol, .. } => json!({"n": n, "alphabet": a.symbols(), "constant": a.symbol(*symbol)}),
    }
}

pub fn correlation_to_json(r: &CorrelationResult) -> Value {
    let mut out = json!({
        "value": complex_to_json(r.value),
        "mode": r.mode.as_str(),
        "samples": r.samples,
        "half_width": r.half_width,
    });
    if let Some(exact) = &r.exact {
        out["exact"] = json!([rational_json(&exact.re), rational_json(&exact.im)]);
    }
    out
}

/// `[numerator, denominator]`, exposed for report writers.
pub fn rational_to_json(r: &BigRational) -> Value {
    rational_json(r)
}

/// Reads a `[numerator, denominator]` pair from an already parsed value.
pub fn rational_from_json(v: &Value) -> Result<BigRational> {
    rational_from(&from_value::<[IntJson; 2]>(v.clone())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::rat;
    use crate::fixtures;

    #[test]
    fn distribution_round_trip() {
        for (_, d) in fixtures::named() {
            let text = distribution_to_json(&d).to_string();
            assert_eq!(parse_distribution(&text).unwrap(), d);
        }
    }

    #[test]
    fn big_integers_round_trip_as_strings() {
        let big = BigRational::new(BigInt::from(1), BigInt::from(10).pow(30));
        let v = rational_to_json(&big);
        assert!(v[1].is_string());
        assert_eq!(rational_from_json(&v).unwrap(), big);
        assert_eq!(rational_from_json(&json!([3, 6])).unwrap(), rat(1, 2));
        assert!(rational_from_json(&json!([1, 0])).is_err());
    }

    #[test]
    fn malformed_input_is_a_parse_error() {
        assert!(matches!(parse_distribution("{\"alphabets\": 3"), Err(Error::Parse(_))));
        let bad_mass = r#"{"alphabets": [["a","b"]], "atoms": [{"x": ["a"], "p": [1, 3]}]}"#;
        assert!(matches!(parse_distribution(bad_mass), Err(Error::Invalid(_))));
    }

    #[test]
    fn witness_round_trip() {
        let d = fixtures::three_lin();
        let w = crate::embedding::detect_embedding(&d).witness.unwrap();
        let text = witness_to_json(&w, d.alphabets()).to_string();
        assert_eq!(parse_witness(&text, d.alphabets()).unwrap(), w);
    }

    #[test]
    fn function_round_trips() {
        let t = TableFunction::from_fn(2, Alphabet::numeric(2), |x| Complex64::new(x[0] as f64, -(x[1] as f64) / 3.0)).unwrap();
        let p = ProductFunction::new(Alphabet::new(["a", "b"]).unwrap(), vec![vec![Complex64::new(0.5, 0.1), Complex64::new(-1.0, 0.0)]]).unwrap();
        for f in [Function::from(t), Function::from(p)] {
            let text = function_to_json(&f).to_string();
            let back = parse_function(&text).unwrap();
            assert_eq!(back.to_table().unwrap(), f.to_table().unwrap());
        }
    }

    #[test]
    fn instance_and_symbol_functions() {
        let inst = fixtures::three_lin_instance();
        assert_eq!(parse_instance(&instance_to_json(&inst).to_string()).unwrap(), inst);
        let fs = [
            SymbolFunction::dictator(3, Alphabet::numeric(2), 1).unwrap(),
            SymbolFunction::constant(3, Alphabet::numeric(2), 1).unwrap(),
            SymbolFunction::table(1, Alphabet::numeric(2), vec![1, 0]).unwrap(),
        ];
        for f in fs {
            assert_eq!(parse_symbol_function(&symbol_function_to_json(&f).to_string()).unwrap(), f);
        }
    }
}
