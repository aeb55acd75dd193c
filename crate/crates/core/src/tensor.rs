//! Dense tensors over `Σⁿ` stored lexicographically (coordinate 0 most
//! significant) and compensated complex summation.

use num_complex::Complex64;

/// Neumaier-compensated accumulator for complex sums.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: Complex64,
    comp: Complex64,
}

fn two_sum(s: f64, c: f64, x: f64) -> (f64, f64) {
    let t = s + x;
    let c = if s.abs() >= x.abs() {
        c + ((s - t) + x)
    } else {
        c + ((x - t) + s)
    };
    (t, c)
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: Complex64) {
        let (re, cre) = two_sum(self.sum.re, self.comp.re, x.re);
        let (im, cim) = two_sum(self.sum.im, self.comp.im, x.im);
        self.sum = Complex64::new(re, im);
        self.comp = Complex64::new(cre, cim);
    }

    pub fn value(&self) -> Complex64 {
        self.sum + self.comp
    }
}

impl FromIterator<Complex64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = Complex64>>(iter: I) -> Self {
        let mut s = Self::new();
        iter.into_iter().for_each(|x| s.add(x));
        s
    }
}

/// Compensated sum of an iterator of complex numbers.
pub fn csum(iter: impl IntoIterator<Item = Complex64>) -> Complex64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// `qⁿ`, or `None` on overflow.
pub fn table_len(q: usize, n: usize) -> Option<usize> {
    q.checked_pow(u32::try_from(n).ok()?)
}

/// Writes the base-`q` digits of `index` (most significant first) into `x`.
pub fn decode(mut index: usize, q: usize, x: &mut [usize]) {
    for d in x.iter_mut().rev() {
        *d = index % q;
        index /= q;
    }
}

pub fn encode(x: &[usize], q: usize) -> usize {
    x.iter().fold(0, |acc, &d| acc * q + d)
}

/// Applies `op` to every fibre along `axis`. Each fibre is the length-`q`
/// vector obtained by varying coordinate `axis` with the others fixed.
pub fn map_axis(values: &mut [Complex64], q: usize, n: usize, axis: usize, mut op: impl FnMut(&mut [Complex64])) {
    let stride = q.pow((n - 1 - axis) as u32);
    let block = stride * q;
    let mut fibre = vec![Complex64::default(); q];
    for start in (0..values.len()).step_by(block) {
        for off in 0..stride {
            let base = start + off;
            for (a, slot) in fibre.iter_mut().enumerate() {
                *slot = values[base + a * stride];
            }
            op(&mut fibre);
            for (a, v) in fibre.iter().enumerate() {
                values[base + a * stride] = *v;
            }
        }
    }
}

/// Contracts `axis` against `weights`, returning a tensor of order `n − 1`.
pub fn contract_axis(values: &[Complex64], q: usize, n: usize, axis: usize, weights: &[f64]) -> Vec<Complex64> {
    contract_axis_with(values, q, n, axis, |a, v| v * weights[a])
}

/// [`contract_axis`] with complex weights.
pub fn contract_axis_complex(
    values: &[Complex64],
    q: usize,
    n: usize,
    axis: usize,
    weights: &[Complex64],
) -> Vec<Complex64> {
    contract_axis_with(values, q, n, axis, |a, v| v * weights[a])
}

fn contract_axis_with(
    values: &[Complex64],
    q: usize,
    n: usize,
    axis: usize,
    term: impl Fn(usize, Complex64) -> Complex64,
) -> Vec<Complex64> {
    let stride = q.pow((n - 1 - axis) as u32);
    let block = stride * q;
    let mut out = Vec::with_capacity(values.len() / q);
    for start in (0..values.len()).step_by(block) {
        for off in 0..stride {
            let base = start + off;
            out.push(csum((0..q).map(|a| term(a, values[base + a * stride]))));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensation_recovers_cancelled_terms() {
        let xs = [1e16, 1.0, -1e16, 1.0].map(|r| Complex64::new(r, 0.0));
        assert_eq!(csum(xs).re, 2.0);
    }

    #[test]
    fn digits_round_trip() {
        let mut x = [0; 3];
        decode(17, 3, &mut x);
        assert_eq!(x, [1, 2, 2]);
        assert_eq!(encode(&x, 3), 17);
    }

    #[test]
    fn contracting_middle_axis() {
        // t[a][b][c] = 100a + 10b + c over {0,1}³
        let t: Vec<Complex64> = (0..8)
            .map(|i| Complex64::new((100 * (i >> 2) + 10 * ((i >> 1) & 1) + (i & 1)) as f64, 0.0))
            .collect();
        let out = contract_axis(&t, 2, 3, 1, &[0.25, 0.75]);
        let re: Vec<f64> = out.iter().map(|z| z.re).collect();
        assert_eq!(re, vec![7.5, 8.5, 107.5, 108.5]);
    }

    #[test]
    fn map_axis_touches_every_fibre_once() {
        let mut t = vec![Complex64::new(1.0, 0.0); 9];
        let mut calls = 0;
        map_axis(&mut t, 3, 2, 0, |f| {
            calls += 1;
            f[0] *= 2.0;
        });
        assert_eq!(calls, 3);
        assert_eq!(t.iter().filter(|z| z.re == 2.0).count(), 3);
    }
}
