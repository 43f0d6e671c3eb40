use num_traits::Float;

/// Binomial coefficient as a float; zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// Integer binomial coefficient with the convention C(n, m) = 0 for m < 0.
pub(crate) fn binom_i(n: i64, m: i64) -> usize {
    if m < 0 || n < 0 || m > n {
        return 0;
    }
    let m = m.min(n - m) as u128;
    let n = n as u128;
    let mut acc: u128 = 1;
    for i in 0..m {
        acc = acc * (n - i) / (i + 1);
    }
    acc as usize
}

/// Multinomial coefficient N! / (a! b! c! d!) with N = a + b + c + d.
pub fn multinomial4(a: usize, b: usize, c: usize, d: usize) -> f64 {
    binomial(a + b + c + d, a) * binomial(b + c + d, b) * binomial(c + d, c)
}

/// Row-major table of binomial coefficients C(n, k) for n, k <= max.
pub(crate) struct BinomialTable {
    width: usize,
    values: alloc::vec::Vec<f64>,
}

impl BinomialTable {
    pub fn new(max: usize) -> Self {
        let width = max + 1;
        let mut values = alloc::vec![0.0; width * width];
        for n in 0..width {
            values[n * width] = 1.0;
            for k in 1..=n {
                values[n * width + k] =
                    values[(n - 1) * width + k - 1] + if k < n { values[(n - 1) * width + k] } else { 0.0 };
            }
        }
        Self { width, values }
    }

    #[inline]
    pub fn get(&self, n: usize, k: usize) -> f64 {
        self.values[n * self.width + k]
    }
}

pub(crate) fn sqrt(x: f64) -> f64 {
    Float::sqrt(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(30, 15), 155117520.0);
        assert_eq!(binomial(3, 4), 0.0);
        assert_eq!(binom_i(4, -1), 0);
        assert_eq!(binom_i(6, 3), 20);
        let t = BinomialTable::new(30);
        assert_eq!(t.get(30, 15), 155117520.0);
        assert_eq!(t.get(7, 0), 1.0);
        assert_eq!(multinomial4(1, 1, 1, 1), 24.0);
    }
}
