//! Named distributions and test instances used throughout the examples and
//! test suites.

use crate::dictatorship::{Constraint, Predicate, TestInstance};
use crate::distribution::{rat, Alphabet, JointDistribution};

fn cube(k: usize, q: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..q.pow(k as u32)).map(move |mut i| {
        let mut x = vec![0; k];
        for d in x.iter_mut().rev() {
            *d = i % q;
            i /= q;
        }
        x
    })
}

fn uniform(k: usize, q: usize, keep: impl Fn(&[usize]) -> bool) -> JointDistribution {
    JointDistribution::uniform(vec![Alphabet::numeric(q); k], cube(k, q).filter(|x| keep(x)))
        .expect("fixture is a valid distribution")
}

/// Uniform on `{x ∈ {0,1}³ : x₁ ⊕ x₂ ⊕ x₃ = 0}`.
pub fn three_lin() -> JointDistribution {
    uniform(3, 2, |x| x.iter().sum::<usize>() % 2 == 0)
}

/// Uniform on `{x ∈ ℤ₃³ : x₁ + x₂ + x₃ ≡ 0}`.
pub fn z3_sum() -> JointDistribution {
    uniform(3, 3, |x| x.iter().sum::<usize>() % 3 == 0)
}

/// Uniform on all of `{0,1}³`.
pub fn full_support_cube() -> JointDistribution {
    uniform(3, 2, |_| true)
}

/// The point mass at `(0,0,0)` inside `{0,1}³`.
pub fn single_atom() -> JointDistribution {
    uniform(3, 2, |x| x == [0, 0, 0])
}

/// Uniform on `{(0,0), (1,1)}`.
pub fn disconnected_pair() -> JointDistribution {
    uniform(2, 2, |x| x[0] == x[1])
}

/// Uniform on `{0,1}³ ∖ {(1,1,1)}`.
pub fn seven_atom_cube() -> JointDistribution {
    uniform(3, 2, |x| x != [1, 1, 1])
}

/// The even permutations of `{0,…,4}` in lexicographic order of their
/// one-line notation.
pub fn a5_elements() -> Vec<[u8; 5]> {
    let mut out = Vec::with_capacity(60);
    for x in cube(5, 5) {
        let mut seen = [false; 5];
        if x.iter().any(|&v| std::mem::replace(&mut seen[v], true)) {
            continue;
        }
        let inversions = (0..5).flat_map(|i| (i + 1..5).map(move |j| (i, j))).filter(|&(i, j)| x[i] > x[j]).count();
        if inversions % 2 == 0 {
            out.push([x[0] as u8, x[1] as u8, x[2] as u8, x[3] as u8, x[4] as u8]);
        }
    }
    out
}

/// `(a·b)(i) = a(b(i))`.
pub fn compose(a: &[u8; 5], b: &[u8; 5]) -> [u8; 5] {
    b.map(|i| a[i as usize])
}

pub fn a5_alphabet() -> Alphabet {
    Alphabet::new(a5_elements().iter().map(|p| p.iter().map(|d| char::from(b'0' + d)).collect::<String>()))
        .expect("distinct permutations")
}

/// Index of `a·b` in [`a5_elements`], for every pair.
pub fn a5_table() -> Vec<Vec<usize>> {
    let elems = a5_elements();
    let index = |p: [u8; 5]| elems.binary_search(&p).expect("A₅ is closed");
    elems.iter().map(|a| elems.iter().map(|b| index(compose(a, b))).collect()).collect()
}

/// Uniform on `{(x, y, z) ∈ A₅³ : x·y·z = 1}`.
pub fn a5_triple_product() -> JointDistribution {
    let table = a5_table();
    let identity = 0;
    let atoms = (0..60).flat_map(|a| {
        let table = &table;
        (0..60).map(move |b| {
            let ab = table[a][b];
            let c = (0..60).find(|&c| table[ab][c] == identity).expect("inverses exist");
            vec![a, b, c]
        })
    });
    JointDistribution::uniform(vec![a5_alphabet(); 3], atoms).expect("fixture is a valid distribution")
}

/// The single-constraint instance whose predicate is the support of `mu`.
pub fn support_instance(mu: &JointDistribution) -> TestInstance {
    let alphabet = mu.alphabet(0).clone();
    let predicate = Predicate::from_fn(alphabet, mu.arity(), |x| !num_traits::Zero::is_zero(&mu.mass(x)))
        .expect("predicate table fits");
    TestInstance::new(
        predicate,
        vec![Constraint {
            weight: rat(1, 1),
            mu: mu.clone(),
        }],
    )
    .expect("shapes agree")
}

/// 3-LIN with `x₁ ⊕ x₂ ⊕ x₃ = 0` as the predicate.
pub fn three_lin_instance() -> TestInstance {
    support_instance(&three_lin())
}

/// `P(x, y, z) = [x·y·z = 1]` on `A₅` with the uniform local distribution.
pub fn a5_instance() -> TestInstance {
    support_instance(&a5_triple_product())
}

/// Every named distribution, labelled.
pub fn named() -> Vec<(&'static str, JointDistribution)> {
    vec![
        ("three-lin", three_lin()),
        ("z3-sum", z3_sum()),
        ("full-support", full_support_cube()),
        ("single-atom", single_atom()),
        ("disconnected-pair", disconnected_pair()),
        ("seven-atom", seven_atom_cube()),
    ]
}
