//! Banded LU with partial pivoting.

/// Square matrix with `kl` sub- and `ku` super-diagonals, stored row-wise
/// with room for the `kl` extra super-diagonals created by row exchanges.
#[derive(Clone, Debug)]
pub(crate) struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub(crate) fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandMatrix {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.ku + self.kl);
        i * self.width + (j + self.kl - i)
    }

    pub(crate) fn clear(&mut self) {
        self.data.fill(0.0);
    }

    #[inline]
    pub(crate) fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(j + self.kl >= i && j <= i + self.ku, "entry outside band");
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.slot(i, j)]
    }

    /// Factorizes in place and solves `A x = b`, overwriting `b` with `x`.
    /// Returns `false` on an exactly zero pivot.
    pub(crate) fn solve_in_place(&mut self, b: &mut [f64]) -> bool {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let upper = kl + ku;
        for i in 0..n {
            let last_row = (i + kl).min(n - 1);
            let mut piv = i;
            let mut best = self.get(i, i).abs();
            for r in i + 1..=last_row {
                let v = self.get(r, i).abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best == 0.0 {
                return false;
            }
            let last_col = (i + upper).min(n - 1);
            if piv != i {
                for j in i..=last_col {
                    let (a, c) = (self.slot(i, j), self.slot(piv, j));
                    self.data.swap(a, c);
                }
                b.swap(i, piv);
            }
            let d = self.get(i, i);
            for r in i + 1..=last_row {
                let sr = self.slot(r, i);
                let f = self.data[sr] / d;
                if f == 0.0 {
                    continue;
                }
                self.data[sr] = 0.0;
                for j in i + 1..=last_col {
                    let v = self.get(i, j);
                    if v != 0.0 {
                        let s = self.slot(r, j);
                        self.data[s] -= f * v;
                    }
                }
                b[r] -= f * b[i];
            }
        }
        for i in (0..n).rev() {
            let last_col = (i + upper).min(n - 1);
            let mut acc = b[i];
            for j in i + 1..=last_col {
                acc -= self.get(i, j) * b[j];
            }
            b[i] = acc / self.get(i, i);
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_tridiagonal_and_needs_pivoting() {
        let n = 6;
        let mut a = BandMatrix::zeros(n, 1, 1);
        let x: Vec<f64> = (0..n).map(|i| i as f64 + 1.0).collect();
        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..n {
            let d = if i == 2 { 0.0 } else { -2.0 - i as f64 };
            a.add(i, i, d);
            dense[i][i] = d;
            if i > 0 {
                a.add(i, i - 1, 1.5);
                dense[i][i - 1] = 1.5;
            }
            if i + 1 < n {
                a.add(i, i + 1, 0.7);
                dense[i][i + 1] = 0.7;
            }
        }
        let mut b: Vec<f64> = (0..n).map(|i| (0..n).map(|j| dense[i][j] * x[j]).sum()).collect();
        assert!(a.solve_in_place(&mut b));
        for i in 0..n {
            assert!((b[i] - x[i]).abs() < 1e-12, "{b:?}");
        }
    }
}
