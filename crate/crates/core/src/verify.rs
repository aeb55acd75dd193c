//! Property suites that exercise the library end to end. Each suite is
//! deterministic for a given seed and reports every failed check.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::ascent::{best_product_correlation, restricted_product_correlation, AscentOptions, RestrictionSpec};
use crate::correlation::{exact_correlation, ExactComplex, Function};
use crate::dictatorship::{run_test_exact, run_test_mc, validate_instance, SymbolFunction, TestInstance};
use crate::distribution::{rat, Alphabet, JointDistribution, Support};
use crate::efron_stein::degree_weights;
use crate::embedding::{brute_force_embedding, detect_embedding, detect_embedding_in, pairwise_connected, verify_witness};
use crate::fixtures;
use crate::function::{character_function, inner_product, norm_sq, stability, Measure, ProductFunction, TableFunction};
use crate::lattice::{smith_normal_form, IntMatrix};
use crate::reduction::{
    build_mu_mk_mk, build_xi, check_obs34, diagonal_dominance, diagonal_embedding, residual_mixture,
    resolve_obs34_rate, tilde_f, tilde_p, xi_mass_report, xi_params_from,
};
use crate::sampling::{rng_for, SeededRng};
use crate::{Error, Result};

pub const SUITES: [&str; 10] = [
    "embedding-oracle",
    "snf",
    "necessity",
    "stability",
    "xi-identity",
    "connected-decay",
    "dicttest",
    "reduction",
    "ascent",
    "cauchy-schwarz",
];

pub const DEFAULT_SEED: u64 = 20_240_917;

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub name: &'static str,
    pub checks: usize,
    pub failures: Vec<String>,
    pub notes: Vec<String>,
    pub elapsed: Duration,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.checks > 0
    }

    pub fn summary(&self) -> String {
        format!(
            "{}: {} ({} checks, {} failures, {:.2}s)",
            self.name,
            if self.passed() { "PASS" } else { "FAIL" },
            self.checks,
            self.failures.len(),
            self.elapsed.as_secs_f64()
        )
    }
}

struct Recorder {
    name: &'static str,
    checks: usize,
    failures: Vec<String>,
    notes: Vec<String>,
    start: Instant,
}

impl Recorder {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            checks: 0,
            failures: Vec::new(),
            notes: Vec::new(),
            start: Instant::now(),
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    fn finish(self) -> SuiteReport {
        SuiteReport {
            name: self.name,
            checks: self.checks,
            failures: self.failures,
            notes: self.notes,
            elapsed: self.start.elapsed(),
        }
    }
}

pub fn run_suite(name: &str, seed: u64) -> Result<SuiteReport> {
    match name {
        "embedding-oracle" => embedding_oracle(seed, 200),
        "snf" => snf(seed, 500),
        "necessity" => necessity(),
        "stability" => stability_diagonalization(seed, 100),
        "xi-identity" => xi_identity(seed, 50),
        "connected-decay" => connected_decay(),
        "dicttest" => dicttest(seed),
        "reduction" => reduction(),
        "ascent" => ascent(seed, 100),
        "cauchy-schwarz" => cauchy_schwarz(seed, 100),
        other => Err(Error::invalid(format!("unknown suite {other:?}; known: {}", SUITES.join(", ")))),
    }
}

fn random_support(rng: &mut SeededRng, k: usize, max_q: usize) -> Support {
    let sizes: Vec<usize> = (0..k).map(|_| rng.gen_range(1..=max_q)).collect();
    let total: usize = sizes.iter().product();
    loop {
        let atoms: Vec<Vec<usize>> = (0..total)
            .filter(|_| rng.gen_bool(0.5))
            .map(|mut i| {
                let mut x = vec![0; k];
                for (d, &q) in x.iter_mut().zip(&sizes).rev() {
                    *d = i % q;
                    i /= q;
                }
                x
            })
            .collect();
        if !atoms.is_empty() {
            return Support::new(sizes.clone(), atoms).expect("atoms are in range");
        }
    }
}

fn random_distribution(rng: &mut SeededRng, k: usize, max_q: usize) -> JointDistribution {
    let support = random_support(rng, k, max_q);
    let weights: Vec<i64> = support.atoms().iter().map(|_| rng.gen_range(1..10)).collect();
    let total: i64 = weights.iter().sum();
    let alphabets = support.sizes().iter().map(|&q| Alphabet::numeric(q)).collect();
    JointDistribution::new(
        alphabets,
        support.atoms().iter().cloned().zip(weights.iter().map(|&w| rat(w, total))),
    )
    .expect("weights sum to one")
}

fn random_unit(rng: &mut SeededRng) -> Complex64 {
    Complex64::from_polar(rng.gen::<f64>().sqrt(), rng.gen::<f64>() * std::f64::consts::TAU)
}

fn random_function(rng: &mut SeededRng, n: usize, alphabet: Alphabet) -> TableFunction {
    let len = alphabet.len().pow(n as u32);
    TableFunction::new(n, alphabet, (0..len).map(|_| random_unit(rng)).collect()).expect("length matches")
}

fn random_product(rng: &mut SeededRng, n: usize, alphabet: Alphabet) -> ProductFunction {
    let q = alphabet.len();
    ProductFunction::new(alphabet, (0..n).map(|_| (0..q).map(|_| random_unit(rng)).collect()).collect())
        .expect("factors match")
}

fn random_measure(rng: &mut SeededRng, q: usize) -> Measure {
    let w: Vec<f64> = (0..q).map(|_| rng.gen::<f64>() + 0.05).collect();
    let s: f64 = w.iter().sum();
    Measure::new(w.into_iter().map(|x| x / s).collect()).expect("positive weights")
}

fn embedding_oracle(seed: u64, count: usize) -> Result<SuiteReport> {
    let mut r = Recorder::new("embedding-oracle");
    let mut rng = rng_for(seed, 1);
    let mut cases: Vec<(String, Support)> = fixtures::named()
        .into_iter()
        .map(|(name, d)| (name.to_string(), d.support()))
        .collect();
    cases.extend((0..count).map(|i| (format!("random #{i}"), random_support(&mut rng, 3, 3))));
    let mut positives = 0;
    for (name, support) in &cases {
        let verdict = detect_embedding_in(support);
        let oracle = brute_force_embedding(support, 12)?;
        r.check(verdict.admits == oracle.is_some(), || {
            format!("{name}: detector says {}, oracle says {}", verdict.admits, oracle.is_some())
        });
        if let Some(w) = &verdict.witness {
            positives += 1;
            r.check(verify_witness(support, w), || format!("{name}: detector witness does not verify"));
        } else {
            r.check(!verdict.admits && verdict.snf_divisors.iter().all(One::is_one), || {
                format!("{name}: negative verdict without a full lattice")
            });
        }
        if let Some(w) = &oracle {
            r.check(verify_witness(support, w), || format!("{name}: oracle witness does not verify"));
        }
    }
    r.note(format!("{} supports, {positives} admit an embedding", cases.len()));
    Ok(r.finish())
}

fn snf(seed: u64, count: usize) -> Result<SuiteReport> {
    let mut r = Recorder::new("snf");
    let mut rng = rng_for(seed, 2);
    for t in 0..count {
        let (m, n) = (rng.gen_range(1..=8), rng.gen_range(1..=8));
        let rows: Vec<Vec<i64>> = (0..m).map(|_| (0..n).map(|_| rng.gen_range(-9..=9)).collect()).collect();
        let a = IntMatrix::from_rows(n, &rows)?;
        let d = smith_normal_form(&a);
        r.check(d.verify(&a), || format!("matrix #{t} ({m}×{n}): certificate fails"));
    }
    Ok(r.finish())
}

fn exact_one(z: &Option<ExactComplex>) -> bool {
    z.as_ref().is_some_and(|z| z.re.is_one() && z.im.is_zero())
}

fn necessity() -> Result<SuiteReport> {
    let mut r = Recorder::new("necessity");
    for (name, d) in [("three-lin", fixtures::three_lin()), ("z3-sum", fixtures::z3_sum())] {
        let verdict = detect_embedding(&d);
        let Some(w) = verdict.witness else {
            r.check(false, || format!("{name}: no witness"));
            continue;
        };
        let support = d.support();
        for n in 1..=10 {
            let fs: Vec<Function> = (0..d.arity())
                .map(|i| character_function(&support, d.alphabet(i), &w, i, n, None).map(Function::from))
                .collect::<Result<_>>()?;
            let c = exact_correlation(&d, &fs, n)?;
            r.check(exact_one(&c.exact), || format!("{name}, n = {n}: correlation {:?}", c.exact));
            if n <= 4 {
                for delta in [0.1, 0.5] {
                    for (i, f) in fs.iter().enumerate() {
                        let nu = Measure::marginal(&d, i);
                        let s = stability(&f.to_table()?, 1.0 - delta, &nu)?;
                        let want = (1.0 - delta).powi(n as i32);
                        r.check((s - want).abs() <= 1e-12, || {
                            format!("{name}, n = {n}, δ = {delta}, f{i}: Stab = {s}, expected {want}")
                        });
                    }
                }
            }
        }
    }
    Ok(r.finish())
}

fn stability_diagonalization(seed: u64, count: usize) -> Result<SuiteReport> {
    let mut r = Recorder::new("stability");
    let mut rng = rng_for(seed, 4);
    for t in 0..count {
        let n = rng.gen_range(1..=4);
        let q = rng.gen_range(2..=3);
        let nu = random_measure(&mut rng, q);
        let f = random_function(&mut rng, n, Alphabet::numeric(q));
        let w = degree_weights(&f, &nu)?;
        for rho in [0.0, 0.3, 1.0] {
            let s = stability(&f, rho, &nu)?;
            let spectral: f64 = w.iter().enumerate().map(|(d, wd)| rho.powi(d as i32) * wd).sum();
            r.check((s - spectral).abs() <= 1e-10, || {
                format!("function #{t} (n = {n}, q = {q}), ρ = {rho}: {s} vs {spectral}")
            });
        }
    }
    Ok(r.finish())
}

fn xi_identity(seed: u64, count: usize) -> Result<SuiteReport> {
    let mut r = Recorder::new("xi-identity");
    let mut rng = rng_for(seed, 5);
    let probe = random_function(&mut rng, 1, Alphabet::numeric(2));
    let resolution = resolve_obs34_rate(&fixtures::three_lin(), &probe, &rat(1, 5), 1e-10)?;
    for (label, rate, gap) in &resolution.candidates {
        r.note(format!("rate {label} = {rate}: gap {gap:.3e}"));
    }
    r.check(resolution.selected.is_some(), || "resolution run did not single out one rate".into());
    let Some(selected) = resolution.selected else {
        return Ok(r.finish());
    };
    r.note(format!("selected rate {selected}"));
    let dists = [
        fixtures::three_lin(),
        fixtures::z3_sum(),
        fixtures::seven_atom_cube(),
        fixtures::full_support_cube(),
    ];
    let stars = [rat(1, 10), rat(1, 3), rat(1, 2), rat(3, 4)];
    for t in 0..count {
        let d = &dists[t % dists.len()];
        let p_star = &stars[t / dists.len() % stars.len()];
        let n = 1 + t % 2;
        let alpha = d.min_atom_mass();
        let rate = match selected {
            "1-alpha" => BigRational::one() - &alpha,
            _ => BigRational::one() - &alpha * &alpha,
        };
        let f = random_function(&mut rng, n, d.alphabet(0).clone());
        let report = check_obs34(d, &f, &rate, p_star)?;
        r.check(report.gap <= 1e-10, || format!("case #{t} (n = {n}, p⋆ = {p_star}): gap {:.3e}", report.gap));
    }
    Ok(r.finish())
}

fn connected_decay() -> Result<SuiteReport> {
    let mut r = Recorder::new("connected-decay");
    let d = fixtures::seven_atom_cube();
    let mut previous = f64::INFINITY;
    for n in 1..=10 {
        let parity = ProductFunction::from_phases(Alphabet::numeric(2), vec![vec![rat(0, 1), rat(1, 2)]; n])?;
        let fs = vec![Function::from(parity); 3];
        let c = exact_correlation(&d, &fs, n)?;
        let want = rat(1, 7i64.pow(n as u32));
        r.check(c.exact.as_ref().is_some_and(|z| z.re == want && z.im.is_zero()), || {
            format!("n = {n}: {:?}, expected {want}", c.exact)
        });
        r.check(c.value.re < previous, || format!("n = {n}: not strictly decaying"));
        previous = c.value.re;
        if n == 10 {
            r.check(c.value.norm() < 1e-8, || format!("n = 10: {} is not below 1e-8", c.value.norm()));
        }
    }
    Ok(r.finish())
}

fn check_dictators(r: &mut Recorder, name: &str, inst: &TestInstance, seed: u64, tables: bool) -> Result<()> {
    let alphabet = inst.predicate().alphabet().clone();
    let q = alphabet.len();
    for n in 1..=4 {
        for j in 0..n {
            let mut fs = vec![SymbolFunction::dictator(n, alphabet.clone(), j)?];
            if tables {
                let values = (0..q.pow(n as u32)).map(|i| i / q.pow((n - 1 - j) as u32) % q).collect();
                fs.push(SymbolFunction::table(n, alphabet.clone(), values)?);
            }
            for f in &fs {
                let exact = run_test_exact(inst, f)?;
                r.check(exact.is_one(), || format!("{name}, n = {n}, dictator {j}: exact acceptance {exact}"));
            }
            let mc = run_test_mc(inst, &fs[0], 10_000, seed ^ (n * 8 + j) as u64)?;
            r.check(mc.accepted == mc.samples, || {
                format!("{name}, n = {n}, dictator {j}: {} of {} samples accepted", mc.accepted, mc.samples)
            });
        }
    }
    Ok(())
}

fn dicttest(seed: u64) -> Result<SuiteReport> {
    let mut r = Recorder::new("dicttest");
    let lin = fixtures::three_lin_instance();
    let report = validate_instance(&lin);
    r.check(report.is_valid() && !report.embedding_free(), || "three-lin instance misreported".into());
    check_dictators(&mut r, "three-lin", &lin, seed, true)?;
    let a5 = fixtures::a5_instance();
    let report = validate_instance(&a5);
    r.check(report.is_valid() && report.embedding_free(), || "A5 instance misreported".into());
    check_dictators(&mut r, "A5", &a5, seed, false)?;
    Ok(r.finish())
}

fn reduction() -> Result<SuiteReport> {
    let mut r = Recorder::new("reduction");
    let stars = [rat(1, 10), rat(1, 2), rat(9, 10)];
    let mut literal_failures = 0;
    for (name, d) in fixtures::named() {
        let doubled = build_mu_mk_mk(&d)?;
        r.check(diagonal_dominance(&d)?, || format!("{name}: diagonal dominance fails"));
        let alpha = d.min_atom_mass();
        if alpha.is_one() {
            r.check(doubled == diagonal_embedding(&d)?, || format!("{name}: point mass is not diagonal"));
        } else {
            let ok = residual_mixture(&d).is_ok();
            r.check(ok, || format!("{name}: α²-mixture decomposition fails"));
        }
        if !pairwise_connected(&d).connected {
            r.note(format!("{name}: not pairwise connected, ξ checks skipped"));
            continue;
        }
        for p_star in &stars {
            let params = xi_params_from(&d, p_star.clone())?;
            let (xi, _) = build_xi(&params)?;
            let trimmed = xi.trim_alphabets()?;
            r.check(pairwise_connected(&trimmed).connected, || {
                format!("{name}, p⋆ = {p_star}: ξ is not pairwise connected")
            });
            let report = xi_mass_report(&params, &alpha)?;
            r.check(report.branch_holds() && report.corrected_holds(), || {
                format!("{name}, p⋆ = {p_star}: least ξ atom {} below a bound", report.min_mass)
            });
            literal_failures += usize::from(!report.literal_holds());
        }
    }
    r.note(format!("the bound α²·p⋆ fails on {literal_failures} (fixture, p⋆) pairs"));
    Ok(r.finish())
}

fn ascent(seed: u64, count: usize) -> Result<SuiteReport> {
    let mut r = Recorder::new("ascent");
    let mut rng = rng_for(seed, 9);
    let opts = AscentOptions {
        restarts: 4,
        seed,
        ..Default::default()
    };
    for t in 0..count {
        let n = rng.gen_range(1..=3);
        let q = rng.gen_range(2..=3);
        let nu = random_measure(&mut rng, q);
        let f = random_function(&mut rng, n, Alphabet::numeric(q));
        let res = best_product_correlation(&nu, &f, &opts)?;
        r.check(res.is_monotone(1e-12), || format!("instance #{t}: objective decreased"));
        let phases: Vec<Vec<BigRational>> = (0..n)
            .map(|_| (0..q).map(|_| rat(rng.gen_range(0..60), 60)).collect())
            .collect();
        let p = ProductFunction::from_phases(Alphabet::numeric(q), phases)?;
        let res = best_product_correlation(&nu, &p.to_table()?, &opts)?;
        r.check(res.value >= 1.0 - 1e-6, || format!("product #{t}: recovered {}", res.value));
    }
    let opts = AscentOptions {
        restarts: 2,
        seed,
        ..Default::default()
    };
    for (name, d) in [("three-lin", fixtures::three_lin()), ("z3-sum", fixtures::z3_sum())] {
        let w = detect_embedding(&d).witness.expect("fixture embeds");
        let nu = Measure::marginal(&d, 0);
        let f = character_function(&d.support(), d.alphabet(0), &w, 0, 4, None)?.to_table()?;
        for delta in [0.25, 0.75] {
            let spec = RestrictionSpec {
                delta,
                restriction: &nu,
                inner: &nu,
                trials: 16,
                seed,
                threshold: 1.0 - 1e-9,
            };
            let res = restricted_product_correlation(&f, &spec, &opts)?;
            r.check(res.probability == 1.0, || format!("{name}, δ = {delta}: probability {}", res.probability));
        }
    }
    Ok(r.finish())
}

fn cauchy_schwarz(seed: u64, count: usize) -> Result<SuiteReport> {
    let mut r = Recorder::new("cauchy-schwarz");
    let mut rng = rng_for(seed, 10);
    let mut named: Vec<JointDistribution> = fixtures::named().into_iter().map(|(_, d)| d).collect();
    named.shuffle(&mut rng);
    for t in 0..count {
        let d = if t < named.len() {
            named[t].clone()
        } else {
            random_distribution(&mut rng, 3, 3)
        }
        .trim_alphabets()?;
        let k = d.arity();
        let n = rng.gen_range(1..=3);
        let fs: Vec<TableFunction> = (0..k).map(|i| random_function(&mut rng, n, d.alphabet(i).clone())).collect();
        let all: Vec<Function> = fs.iter().cloned().map(Function::from).collect();
        let eps = exact_correlation(&d, &all, n)?.value;
        let ft = tilde_f(&d, &fs[..k - 1])?;
        let mu_k = Measure::marginal(&d, k - 1);
        let via = inner_product(&ft, &fs[k - 1].conj(), &mu_k)?;
        r.check((eps - via).norm() <= 1e-10, || format!("case #{t}: conditioning identity off by {:.3e}", (eps - via).norm()));
        let bound = norm_sq(&ft, &mu_k)?;
        r.check(eps.norm_sqr() <= bound + 1e-10, || format!("case #{t}: ε² = {} > ‖f̃‖² = {bound}", eps.norm_sqr()));

        let products: Vec<ProductFunction> = (1..k).map(|i| random_product(&mut rng, n, d.alphabet(i).clone())).collect();
        let mut mixed: Vec<Function> = vec![fs[0].clone().into()];
        mixed.extend(products.iter().cloned().map(Function::from));
        let direct = exact_correlation(&d, &mixed, n)?.value.norm();
        let pt = tilde_p(&d, &products)?.to_table()?;
        let transferred = inner_product(&fs[0], &pt.conj(), &Measure::marginal(&d, 0))?.norm();
        r.check((direct - transferred).abs() <= 1e-10, || {
            format!("case #{t}: |E[fΠP]| = {direct} but |E[f·P̃]| = {transferred}")
        });
    }
    Ok(r.finish())
}
