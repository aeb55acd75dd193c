use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

use embedlens::correlation::{exact_correlation, mc_correlation, Function};
use embedlens::dictatorship::{run_test_exact, run_test_mc, Constraint, Predicate, SymbolFunction, TestInstance};
use embedlens::distribution::{decompose_mixture, rat, Alphabet, JointDistribution};
use embedlens::embedding::{detect_embedding, pairwise_connected};
use embedlens::function::{noise_apply, noise_apply_coords, restrict, Measure, ProductFunction, TableFunction};
use embedlens::reduction::{diagonal_dominance, product_smoothness, residual_mixture};
use embedlens::sampling::{rng_for, SeededRng};

fn distribution(rng: &mut SeededRng, k: usize, max_q: usize) -> JointDistribution {
    let sizes: Vec<usize> = (0..k).map(|_| rng.gen_range(1..=max_q)).collect();
    let total: usize = sizes.iter().product();
    let mut cells: Vec<usize> = (0..total).filter(|_| rng.gen_bool(0.5)).collect();
    if cells.is_empty() {
        cells.push(rng.gen_range(0..total));
    }
    let weights: Vec<i64> = cells.iter().map(|_| rng.gen_range(1..8)).collect();
    let sum: i64 = weights.iter().sum();
    let atoms = cells.iter().zip(&weights).map(|(&cell, &w)| {
        let mut x = vec![0; k];
        let mut i = cell;
        for (d, &q) in x.iter_mut().zip(&sizes).rev() {
            *d = i % q;
            i /= q;
        }
        (x, rat(w, sum))
    });
    JointDistribution::new(sizes.iter().map(|&q| Alphabet::numeric(q)).collect(), atoms).unwrap()
}

fn unit(rng: &mut SeededRng) -> Complex64 {
    Complex64::from_polar(rng.gen::<f64>().sqrt(), rng.gen::<f64>() * std::f64::consts::TAU)
}

fn table(rng: &mut SeededRng, n: usize, q: usize) -> TableFunction {
    TableFunction::new(n, Alphabet::numeric(q), (0..q.pow(n as u32)).map(|_| unit(rng)).collect()).unwrap()
}

fn measure(rng: &mut SeededRng, q: usize) -> Measure {
    let w: Vec<f64> = (0..q).map(|_| rng.gen::<f64>() + 0.1).collect();
    let s: f64 = w.iter().sum();
    Measure::new(w.iter().map(|x| x / s).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn verdict_ignores_renaming_and_coordinate_order(seed in any::<u64>()) {
        let mut rng = rng_for(seed, 0);
        let d = distribution(&mut rng, 3, 3);
        let mut perm: Vec<usize> = (0..3).collect();
        perm.shuffle(&mut rng);
        let maps: Vec<Vec<usize>> = d.alphabets().iter().map(|a| {
            let mut m: Vec<usize> = (0..a.len()).collect();
            m.shuffle(&mut rng);
            m
        }).collect();
        let renamed = d.relabel(d.alphabets().to_vec(), &maps).unwrap().permute(&perm).unwrap();
        prop_assert_eq!(detect_embedding(&d).admits, detect_embedding(&renamed).admits);
    }

    #[test]
    fn embeddings_of_marginals_lift(seed in any::<u64>()) {
        let mut rng = rng_for(seed, 1);
        let d = distribution(&mut rng, 3, 3);
        let full = detect_embedding(&d).admits;
        for drop in 0..3 {
            let keep: Vec<usize> = (0..3).filter(|&i| i != drop).collect();
            if detect_embedding(&d.marginal(&keep).unwrap()).admits {
                prop_assert!(full);
            }
        }
        if !full {
            prop_assert!(pairwise_connected(&d).connected);
        }
    }

    #[test]
    fn marginals_compose_and_conditioning_reconstructs(seed in any::<u64>()) {
        let mut rng = rng_for(seed, 2);
        let d = distribution(&mut rng, 3, 3);
        prop_assert_eq!(d.marginal(&[0, 2]).unwrap().marginal(&[1]).unwrap(), d.marginal(&[2]).unwrap());
        let masses = d.coordinate_masses(2);
        let mut rebuilt: Vec<(Vec<usize>, BigRational)> = Vec::new();
        for (v, m) in masses.iter().enumerate() {
            if m.is_zero() {
                continue;
            }
            for (x, p) in d.condition(2, v).unwrap().atoms() {
                rebuilt.push((x.clone(), p * m));
            }
        }
        let rebuilt = JointDistribution::new(d.alphabets()[..2].to_vec(), rebuilt).unwrap();
        prop_assert_eq!(rebuilt, d.marginal(&[0, 1]).unwrap());
    }

    #[test]
    fn mixture_round_trip(seed in any::<u64>()) {
        let mut rng = rng_for(seed, 3);
        let d = distribution(&mut rng, 2, 3);
        prop_assert!(diagonal_dominance(&d).unwrap());
        if d.min_atom_mass() < rat(1, 1) {
            let nu = residual_mixture(&d).unwrap();
            prop_assert!(nu.atoms().all(|(_, p)| *p > BigRational::zero()));
        }
        let c = rat(1, 3);
        let base = d.clone();
        let nu = decompose_mixture(&d, &base, &c).unwrap();
        prop_assert_eq!(nu, d);
    }

    #[test]
    fn noise_semigroup_and_restriction(seed in any::<u64>()) {
        let mut rng = rng_for(seed, 4);
        let q = rng.gen_range(2..=3);
        let n = rng.gen_range(1..=3);
        let nu = measure(&mut rng, q);
        let f = table(&mut rng, n, q);
        let (a, b) = (rng.gen::<f64>(), rng.gen::<f64>());
        let twice = noise_apply(&noise_apply(&f, a, &nu).unwrap(), b, &nu).unwrap();
        prop_assert!(twice.max_distance(&noise_apply(&f, a * b, &nu).unwrap()).unwrap() < 1e-10);
        prop_assert!(noise_apply(&f, a, &nu).unwrap().max_modulus() <= f.max_modulus() + 1e-12);
        let z = rng.gen_range(0..q);
        let free: Vec<usize> = (1..n).collect();
        let lhs = restrict(&noise_apply_coords(&f, a, &nu, &free).unwrap(), &[0], &[z]).unwrap();
        let rhs = noise_apply(&restrict(&f, &[0], &[z]).unwrap(), a, &nu).unwrap();
        prop_assert!(lhs.max_distance(&rhs).unwrap() < 1e-12);
    }

    #[test]
    fn correlations_stay_in_the_disc_and_mc_tracks_exact(seed in any::<u64>()) {
        let mut rng = rng_for(seed, 5);
        let d = distribution(&mut rng, 3, 2);
        let fs: Vec<Function> = (0..3).map(|i| table(&mut rng, 3, d.alphabet(i).len()).into()).collect();
        let exact = exact_correlation(&d, &fs, 3).unwrap();
        prop_assert!(exact.value.norm() <= 1.0 + 1e-12);
        let mc = mc_correlation(&d, &fs, 3, 4096, seed).unwrap();
        prop_assert!((mc.value - exact.value).norm() <= 3.0 * std::f64::consts::SQRT_2 * mc.half_width);
    }

    #[test]
    fn smoothness_closed_form_matches_enumeration(seed in any::<u64>()) {
        let mut rng = rng_for(seed, 6);
        let q = rng.gen_range(2..=4);
        let nu = measure(&mut rng, q);
        let p = ProductFunction::new(Alphabet::numeric(q), vec![(0..q).map(|_| unit(&mut rng)).collect()]).unwrap();
        let gamma = rng.gen::<f64>();
        let mut brute = 0.0;
        for x in 0..q {
            for y in 0..q {
                let py = gamma * nu.weights()[y] + if x == y { 1.0 - gamma } else { 0.0 };
                brute += nu.weights()[x] * py * (p.factors()[0][x] - p.factors()[0][y]).norm_sqr();
            }
        }
        prop_assert!((product_smoothness(&p, &nu, gamma).unwrap() - brute).abs() < 1e-12);
    }

    #[test]
    fn dictatorship_acceptance(seed in any::<u64>()) {
        let mut rng = rng_for(seed, 7);
        let q = rng.gen_range(2..=3);
        let alphabet = Alphabet::numeric(q);
        let truth: Vec<bool> = (0..q.pow(3)).map(|_| rng.gen_bool(0.6)).collect();
        prop_assume!(truth.iter().any(|&t| t));
        let predicate = Predicate::new(alphabet.clone(), 3, truth.clone()).unwrap();
        let sat: Vec<Vec<usize>> = (0..q.pow(3)).filter(|&i| truth[i]).map(|i| vec![i / (q * q), i / q % q, i % q]).collect();
        let mu = JointDistribution::uniform(vec![alphabet.clone(); 3], sat).unwrap();
        let inst = TestInstance::new(predicate, vec![Constraint { weight: rat(1, 1), mu }]).unwrap();
        let n = rng.gen_range(1..=3);
        for j in 0..n {
            let d = SymbolFunction::dictator(n, alphabet.clone(), j).unwrap();
            prop_assert_eq!(run_test_exact(&inst, &d).unwrap(), rat(1, 1));
        }
        let values: Vec<usize> = (0..q).map(|_| rng.gen_range(0..q)).collect();
        let f = SymbolFunction::table(1, alphabet.clone(), values.clone()).unwrap();
        let exact = run_test_exact(&inst, &f).unwrap();
        let mc = run_test_mc(&inst, &f, 4096, seed).unwrap();
        prop_assert!(mc.agrees_with(&exact, 3.0));
        let mut perm: Vec<usize> = (0..q).collect();
        perm.shuffle(&mut rng);
        let moved: Vec<usize> = {
            let mut m = vec![0; q];
            for (x, &v) in values.iter().enumerate() {
                m[perm[x]] = perm[v];
            }
            m
        };
        let g = SymbolFunction::table(1, alphabet, moved).unwrap();
        prop_assert_eq!(run_test_exact(&inst.relabel(&perm).unwrap(), &g).unwrap(), exact);
    }
}
