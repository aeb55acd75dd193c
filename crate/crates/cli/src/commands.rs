use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_rational::BigRational;
use num_traits::One;
use serde_json::{json, Map, Value};

use embedlens::correlation::{exact_correlation, mc_correlation, CorrelationResult, Function};
use embedlens::dictatorship::{max_acceptance, run_test_exact, run_test_mc, validate_instance};
use embedlens::distribution::{to_f64, JointDistribution};
use embedlens::efron_stein::degree_weights;
use embedlens::embedding::{connected, detect_embedding, pairwise_connected};
use embedlens::function::{stability as table_stability, Measure, ProductFunction, TableFunction};
use embedlens::io::{
    complex_to_json, correlation_to_json, distribution_to_json, function_to_json, integer_to_json, parse_function,
    parse_instance, parse_raw_distribution, parse_symbol_function, rational_to_json, symbol_function_to_json,
    witness_to_json,
};
use embedlens::reduction::{
    build_mu_mk_mk, build_xi, check_obs34, diagonal_dominance, residual_mixture, resolve_obs34_rate, tilde_f, tilde_p,
    xi_mass_report, xi_params_from,
};
use embedlens::verify::run_suite;

use crate::manifest::{sha256_hex, FileDigest, RunManifest};
use crate::{ModeArg, ReduceOp};

/// Report layout version, bumped on incompatible changes.
pub const FORMAT_VERSION: u32 = 1;

/// Largest gap at which the three-wise identity counts as holding.
pub const OBS34_TOL: f64 = 1e-10;

#[derive(Debug)]
pub enum CliError {
    Lib(embedlens::Error),
    Read { path: PathBuf, source: std::io::Error },
    Write { path: PathBuf, source: std::io::Error },
    Usage(String),
    Invalid(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Lib(embedlens::Error::Parse(_)) | CliError::Read { .. } => 4,
            CliError::Lib(embedlens::Error::SizeGuard { .. }) => 3,
            _ => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Read { path, source } => write!(f, "cannot read {}: {source}", path.display()),
            CliError::Write { path, source } => write!(f, "cannot write {}: {source}", path.display()),
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Invalid(m) => write!(f, "validation failed: {m}"),
        }
    }
}

impl From<embedlens::Error> for CliError {
    fn from(e: embedlens::Error) -> Self {
        CliError::Lib(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// A finished computation, ready to be written out.
pub struct Run {
    manifest: RunManifest,
    body: Vec<u8>,
    pub ok: bool,
}

impl Run {
    pub fn finish(&self, output: Option<&Path>, manifest: Option<&Path>) -> Result<()> {
        match output {
            Some(path) => write_file(path, &self.body)?,
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(&self.body)
                    .and_then(|_| out.flush())
                    .map_err(|source| CliError::Write { path: "<stdout>".into(), source })?;
            }
        }
        if let Some(path) = manifest {
            write_file(path, &pretty(&serde_json::to_value(&self.manifest).expect("manifest serializes")))?;
        }
        Ok(())
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| CliError::Write { path: path.into(), source })
}

fn pretty(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s.into_bytes()
}

struct Ctx {
    subcommand: &'static str,
    inputs: Vec<FileDigest>,
    params: BTreeMap<String, Value>,
    seed: Option<u64>,
    emitted: Vec<FileDigest>,
}

impl Ctx {
    fn new(subcommand: &'static str) -> Self {
        Self {
            subcommand,
            inputs: Vec::new(),
            params: BTreeMap::new(),
            seed: None,
            emitted: Vec::new(),
        }
    }

    fn read(&mut self, path: &Path) -> Result<String> {
        let bytes = fs::read(path).map_err(|source| CliError::Read { path: path.into(), source })?;
        self.inputs.push(FileDigest {
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        });
        String::from_utf8(bytes).map_err(|e| embedlens::Error::Parse(format!("{}: {e}", path.display())).into())
    }

    fn param(&mut self, key: &str, value: impl Into<Value>) {
        self.params.insert(key.into(), value.into());
    }

    fn emit(&mut self, dir: Option<&Path>, inline: &mut Map<String, Value>, name: &str, value: Value) -> Result<()> {
        match dir {
            Some(dir) => {
                let path = dir.join(format!("{name}.json"));
                let bytes = pretty(&value);
                write_file(&path, &bytes)?;
                let path = path.display().to_string();
                inline.insert(name.into(), Value::String(path.clone()));
                self.emitted.push(FileDigest { path, sha256: sha256_hex(&bytes) });
            }
            None => {
                inline.insert(name.into(), value);
            }
        }
        Ok(())
    }

    fn finish_bytes(self, body: Vec<u8>, ok: bool) -> Run {
        Run {
            manifest: RunManifest {
                subcommand: self.subcommand.into(),
                inputs: self.inputs,
                params: self.params,
                seed: self.seed,
                version: env!("CARGO_PKG_VERSION").into(),
                output_sha256: sha256_hex(&body),
                emitted: self.emitted,
            },
            body,
            ok,
        }
    }

    fn finish(self, mut report: Value, ok: bool) -> Run {
        let obj = report.as_object_mut().expect("reports are objects");
        obj.insert("format_version".into(), json!(FORMAT_VERSION));
        obj.insert("command".into(), json!(self.subcommand));
        let body = pretty(&report);
        self.finish_bytes(body, ok)
    }
}

/// Accepts `a/b`, integers and finite decimals, all exactly.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let text = match s.split_once('.') {
        Some((int, frac)) if !s.contains('/') => format!("{int}{frac}/1{}", "0".repeat(frac.len())),
        _ => s.to_string(),
    };
    text.parse().map_err(|_| CliError::Usage(format!("not a rational number: {s:?}")))
}

fn require_seed(seed: Option<u64>, what: &str) -> Result<u64> {
    seed.ok_or_else(|| CliError::Usage(format!("{what} is randomized and needs --seed")))
}

fn load_distribution(ctx: &mut Ctx, path: &Path) -> Result<JointDistribution> {
    let raw = parse_raw_distribution(&ctx.read(path)?)?;
    let report = raw.validate();
    if !report.is_valid() {
        let msgs: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
        return Err(CliError::Invalid(msgs.join("; ")));
    }
    Ok(raw.into_distribution()?)
}

fn load_functions(ctx: &mut Ctx, paths: &[PathBuf]) -> Result<Vec<Function>> {
    paths.iter().map(|p| Ok(parse_function(&ctx.read(p)?)?)).collect()
}

pub fn analyze(path: PathBuf) -> Result<Run> {
    let mut ctx = Ctx::new("analyze");
    let d = load_distribution(&mut ctx, &path)?;
    let verdict = detect_embedding(&d);
    let pc = pairwise_connected(&d);
    let witness = verdict.witness.as_ref();
    let symbols = |i: usize, s: &[usize]| s.iter().map(|&x| d.alphabet(i).symbol(x).to_string()).collect::<Vec<_>>();
    let report = json!({
        "arity": d.arity(),
        "support_size": d.support_len(),
        "admits_embedding": verdict.admits,
        "modulus": witness.map(|w| w.modulus),
        "group": witness.map(|w| if w.modulus == 0 { "Z".to_string() } else { format!("Z_{}", w.modulus) }),
        "witness": witness.map(|w| witness_to_json(w, d.alphabets())),
        "snf_divisors": verdict.snf_divisors.iter().map(integer_to_json).collect::<Vec<_>>(),
        "rank": verdict.rank,
        "columns": verdict.columns,
        "connected": connected(&d),
        "pairwise_connected": pc.connected,
        "disconnected_pair": pc.split.map(|s| json!({
            "i": s.i,
            "j": s.j,
            "left_i": symbols(s.i, &s.left_i),
            "left_j": symbols(s.j, &s.left_j),
        })),
        "alpha": rational_to_json(&d.min_atom_mass()),
    });
    Ok(ctx.finish(report, true))
}

fn single_coordinate(f: &Function) -> Result<ProductFunction> {
    if f.n() != 1 {
        return Err(CliError::Usage(format!("--sweep needs single-coordinate functions, got n = {}", f.n())));
    }
    Ok(match f {
        Function::Product(p) => p.clone(),
        Function::Table(t) => ProductFunction::new(t.alphabet().clone(), vec![t.values().to_vec()])?,
    })
}

#[allow(clippy::too_many_arguments)]
pub fn correlate(
    dist: PathBuf,
    functions: Vec<PathBuf>,
    n: Option<usize>,
    mode: ModeArg,
    samples: u64,
    seed: Option<u64>,
    sweep: Option<usize>,
    csv: bool,
) -> Result<Run> {
    let mut ctx = Ctx::new("correlate");
    let d = load_distribution(&mut ctx, &dist)?;
    let fs = load_functions(&mut ctx, &functions)?;
    let seed = match mode {
        ModeArg::Exact => None,
        ModeArg::Mc => Some(require_seed(seed, "--mode mc")?),
    };
    ctx.seed = seed;
    ctx.param("mode", format!("{mode:?}").to_lowercase());
    if seed.is_some() {
        ctx.param("samples", samples);
    }
    let eval = |fs: &[Function], n: usize| -> Result<CorrelationResult> {
        Ok(match seed {
            None => exact_correlation(&d, fs, n)?,
            Some(seed) => mc_correlation(&d, fs, n, samples, seed)?,
        })
    };

    let Some(max_n) = sweep else {
        let n = n.unwrap_or_else(|| fs[0].n());
        ctx.param("n", n);
        let r = eval(&fs, n)?;
        let mut report = correlation_to_json(&r);
        report["n"] = json!(n);
        report["abs"] = json!(r.value.norm());
        return Ok(ctx.finish(report, true));
    };

    ctx.param("sweep", max_n);
    ctx.param("csv", csv);
    let bases = fs.iter().map(single_coordinate).collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(max_n);
    for m in 1..=max_n {
        let powered = bases
            .iter()
            .map(|b| Ok(ProductFunction::new(b.alphabet().clone(), vec![b.factors()[0].clone(); m])?.into()))
            .collect::<Result<Vec<Function>>>()?;
        rows.push((m, eval(&powered, m)?));
    }
    if csv {
        let mut body = String::from("n,re,im,abs,half_width\n");
        for (m, r) in &rows {
            body.push_str(&format!("{m},{},{},{},{}\n", r.value.re, r.value.im, r.value.norm(), r.half_width));
        }
        return Ok(ctx.finish_bytes(body.into_bytes(), true));
    }
    let rows: Vec<Value> = rows
        .iter()
        .map(|(m, r)| {
            json!({"n": m, "value": complex_to_json(r.value), "abs": r.value.norm(), "half_width": r.half_width})
        })
        .collect();
    Ok(ctx.finish(json!({"mode": rows_mode(seed), "rows": rows}), true))
}

fn rows_mode(seed: Option<u64>) -> &'static str {
    if seed.is_some() {
        "monte-carlo"
    } else {
        "exact"
    }
}

fn parse_measure(spec: &str, q: usize) -> Result<Measure> {
    let weights = spec.split(',').map(parse_rational).collect::<Result<Vec<_>>>()?;
    if weights.len() != q {
        return Err(CliError::Usage(format!("--nu has {} weights for an alphabet of size {q}", weights.len())));
    }
    let total: BigRational = weights.iter().sum();
    if !total.is_one() {
        return Err(CliError::Usage(format!("--nu weights sum to {total}, not 1")));
    }
    Ok(Measure::from_rationals(&weights)?)
}

pub fn stability(path: PathBuf, rho: f64, nu: Option<String>, decompose: bool) -> Result<Run> {
    let mut ctx = Ctx::new("stability");
    let f = parse_function(&ctx.read(&path)?)?;
    ctx.param("rho", rho);
    ctx.param("decompose", decompose);
    let q = f.alphabet().len();
    let measure = match &nu {
        Some(spec) => {
            ctx.param("nu", spec.as_str());
            parse_measure(spec, q)?
        }
        None => Measure::uniform(q),
    };
    let mut report = json!({"n": f.n(), "rho": rho, "nu": measure.weights()});
    let table: Option<TableFunction> = match &f {
        Function::Product(_) if !decompose => None,
        _ => Some(f.to_table()?),
    };
    report["stability"] = json!(match (&f, &table) {
        (Function::Product(p), None) => p.stability(rho, &measure)?,
        (_, Some(t)) => table_stability(t, rho, &measure)?,
        _ => unreachable!("a table exists unless the input is a product"),
    });
    if let Some(t) = table.filter(|_| decompose) {
        report["degree_weights"] = json!(degree_weights(&t, &measure)?);
    }
    Ok(ctx.finish(report, true))
}

pub fn reduce(
    dist: PathBuf,
    op: ReduceOp,
    functions: Vec<PathBuf>,
    p_star: Option<String>,
    rate: String,
    out_dir: Option<PathBuf>,
) -> Result<Run> {
    let mut ctx = Ctx::new("reduce");
    let d = load_distribution(&mut ctx, &dist)?;
    let fs = load_functions(&mut ctx, &functions)?;
    ctx.param("op", format!("{op:?}"));
    let alpha = d.min_atom_mass();
    let dir = out_dir.as_deref();
    if let Some(dir) = dir {
        fs::create_dir_all(dir).map_err(|source| CliError::Write { path: dir.into(), source })?;
    }
    let p_star_value = |ctx: &mut Ctx| -> Result<BigRational> {
        let s = p_star.as_deref().ok_or_else(|| CliError::Usage(format!("--op {op:?} needs --p-star")))?;
        ctx.param("p_star", s);
        parse_rational(s)
    };
    let mut emitted = Map::new();
    let mut report = json!({"alpha": rational_to_json(&alpha)});
    let mut ok = true;

    match op {
        ReduceOp::MuMkMk => {
            let doubled = build_mu_mk_mk(&d)?;
            report["diagonal_dominance"] = json!(diagonal_dominance(&d)?);
            ctx.emit(dir, &mut emitted, "mu_mk_mk", distribution_to_json(&doubled))?;
            if !alpha.is_one() {
                let residual = residual_mixture(&d)?;
                ctx.emit(dir, &mut emitted, "residual", distribution_to_json(&residual))?;
            }
        }
        ReduceOp::Xi => {
            let params = xi_params_from(&d, p_star_value(&mut ctx)?)?;
            let (xi, _) = build_xi(&params)?;
            let mass = xi_mass_report(&params, &alpha)?;
            report["p_nu"] = rational_to_json(&params.p_nu);
            report["p_star"] = rational_to_json(&params.p_star);
            report["pairwise_connected"] = json!(pairwise_connected(&xi.trim_alphabets()?).connected);
            report["min_mass"] = rational_to_json(&mass.min_mass);
            report["bounds"] = json!({
                "branch": {"value": rational_to_json(&mass.branch_bound), "holds": mass.branch_holds()},
                "corrected": {"value": rational_to_json(&mass.corrected_bound), "holds": mass.corrected_holds()},
                "literal": {"value": rational_to_json(&mass.literal_bound), "holds": mass.literal_holds()},
            });
            ctx.emit(dir, &mut emitted, "xi", distribution_to_json(&xi))?;
            ctx.emit(dir, &mut emitted, "nu1", distribution_to_json(&params.nu1))?;
        }
        ReduceOp::TildeF => {
            let out: Function = if fs.iter().all(|f| matches!(f, Function::Product(_))) {
                let ps: Vec<ProductFunction> = fs
                    .iter()
                    .map(|f| match f {
                        Function::Product(p) => p.clone(),
                        Function::Table(_) => unreachable!("all inputs are products"),
                    })
                    .collect();
                tilde_p(&d, &ps)?.into()
            } else {
                let ts = fs.iter().map(|f| f.to_table()).collect::<embedlens::Result<Vec<_>>>()?;
                tilde_f(&d, &ts)?.into()
            };
            ctx.emit(dir, &mut emitted, "tilde_f", function_to_json(&out))?;
        }
        ReduceOp::Obs34 => {
            let [f] = fs.as_slice() else {
                return Err(CliError::Usage("--op obs34 needs exactly one --function".into()));
            };
            let f = f.to_table()?;
            let p_star = p_star_value(&mut ctx)?;
            ctx.param("rate", rate.as_str());
            let one = BigRational::one();
            let fixed = match rate.as_str() {
                "auto" => None,
                "1-alpha^2" => Some(&one - &alpha * &alpha),
                "1-alpha" => Some(&one - &alpha),
                other => Some(parse_rational(other)?),
            };
            match fixed {
                Some(r) => {
                    let obs = check_obs34(&d, &f, &r, &p_star)?;
                    ok = obs.gap <= OBS34_TOL;
                    report["rate"] = rational_to_json(&r);
                    report["lhs"] = complex_to_json(obs.lhs);
                    report["rhs"] = complex_to_json(obs.rhs);
                    report["gap"] = json!(obs.gap);
                }
                None => {
                    let res = resolve_obs34_rate(&d, &f, &p_star, OBS34_TOL)?;
                    ok = res.candidates.iter().any(|c| c.2 <= OBS34_TOL);
                    report["candidates"] = res
                        .candidates
                        .iter()
                        .map(|(label, r, gap)| json!({"label": label, "rate": rational_to_json(r), "gap": gap}))
                        .collect();
                    // Null when no candidate, or more than one, closes the gap.
                    report["selected"] = json!(res.selected);
                }
            }
            report["holds"] = json!(ok);
        }
    }
    report["emitted"] = Value::Object(emitted);
    Ok(ctx.finish(report, ok))
}

pub fn dicttest(
    instance: PathBuf,
    function: PathBuf,
    mode: ModeArg,
    samples: u64,
    seed: Option<u64>,
    max_over: Option<usize>,
) -> Result<Run> {
    let mut ctx = Ctx::new("dicttest");
    let inst = parse_instance(&ctx.read(&instance)?)?;
    let f = parse_symbol_function(&ctx.read(&function)?)?;
    ctx.param("mode", format!("{mode:?}").to_lowercase());
    let validity = validate_instance(&inst);
    let constraints: Vec<Value> = validity
        .constraints
        .iter()
        .map(|c| {
            json!({
                "weight": rational_to_json(&c.weight),
                "falsifying_atoms": c.falsifying_atoms,
                "admits_embedding": c.admits_embedding,
                "witness_modulus": c.witness_modulus,
                "connected": c.connected,
                "pairwise_connected": c.pairwise_connected,
            })
        })
        .collect();
    let mut report = json!({
        "instance": {
            "valid": validity.is_valid(),
            "weights_normalized": validity.weights_normalized(),
            "supports_satisfying": validity.supports_satisfying(),
            "embedding_free": validity.embedding_free(),
            "constraints": constraints,
        },
        "n": f.n(),
    });
    match mode {
        ModeArg::Exact => {
            let acc = run_test_exact(&inst, &f)?;
            report["mode"] = json!("exact");
            report["acceptance"] = json!(to_f64(&acc));
            report["acceptance_exact"] = rational_to_json(&acc);
        }
        ModeArg::Mc => {
            let seed = require_seed(seed, "--mode mc")?;
            ctx.seed = Some(seed);
            ctx.param("samples", samples);
            let est = run_test_mc(&inst, &f, samples, seed)?;
            report["mode"] = json!("monte-carlo");
            report["acceptance"] = json!(est.acceptance);
            report["accepted"] = json!(est.accepted);
            report["samples"] = json!(est.samples);
            report["half_width"] = json!(est.half_width);
        }
    }
    if let Some(n) = max_over {
        ctx.param("max_over", n);
        let (best, arg) = max_acceptance(&inst, n)?;
        report["max_acceptance"] = json!({
            "n": n,
            "value": rational_to_json(&best),
            "maximizer": symbol_function_to_json(&arg),
        });
    }
    Ok(ctx.finish(report, true))
}

pub fn verify(suite: String, seed: u64) -> Result<Run> {
    let mut ctx = Ctx::new("verify");
    ctx.seed = Some(seed);
    ctx.param("suite", suite.as_str());
    let r = run_suite(&suite, seed)?;
    eprintln!("{}", r.summary());
    let report = json!({
        "suite": r.name,
        "passed": r.passed(),
        "checks": r.checks,
        "failures": r.failures,
        "notes": r.notes,
    });
    let ok = r.passed();
    Ok(ctx.finish(report, ok))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals_parse_exactly() {
        assert_eq!(parse_rational("0.1").unwrap(), "1/10".parse().unwrap());
        assert_eq!(parse_rational("-2.50").unwrap(), "-5/2".parse().unwrap());
        assert_eq!(parse_rational("3/4").unwrap(), "3/4".parse().unwrap());
        assert_eq!(parse_rational("7").unwrap(), "7".parse().unwrap());
        assert!(parse_rational("x").is_err());
    }
}
