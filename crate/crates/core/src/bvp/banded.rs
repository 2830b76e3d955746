//! Banded matrices and LU factorization with partial pivoting.

/// Square band matrix with `kl` sub- and `ku` super-diagonals.
///
/// Each row keeps `2 kl + ku + 1` slots so that row swaps during
/// factorization have room for the `kl` extra super-diagonals of fill.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandMatrix {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.ku + self.kl);
        i * self.width + (j + self.kl - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.ku {
            return 0.0;
        }
        self.data[self.slot(i, j)]
    }

    /// Panics if `(i, j)` is outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(j + self.kl >= i && j <= i + self.ku, "({i}, {j}) outside the band");
        let s = self.slot(i, j);
        self.data[s] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(j + self.kl >= i && j <= i + self.ku, "({i}, {j}) outside the band");
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    pub fn clear(&mut self) {
        self.data.fill(0.0);
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// Factorize in place. Returns the column of the first zero pivot on failure.
    pub fn factorize(mut self) -> Result<BandLu, usize> {
        let (n, kl) = (self.n, self.kl);
        let reach = kl + self.ku;
        let mut piv = vec![0usize; n];
        let mut lower = vec![0.0; n * kl.max(1)];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let p = (k..=last_row)
                .max_by(|&a, &b| {
                    let va = self.data[self.slot(a, k)].abs();
                    let vb = self.data[self.slot(b, k)].abs();
                    va.total_cmp(&vb).then(b.cmp(&a))
                })
                .unwrap_or(k);
            let pivot = self.data[self.slot(p, k)];
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(k);
            }
            piv[k] = p;
            let last_col = (k + reach).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (self.slot(k, j), self.slot(p, j));
                    self.data.swap(a, b);
                }
            }
            for r in k + 1..=last_row {
                let f = self.data[self.slot(r, k)] / pivot;
                lower[k * kl + (r - k - 1)] = f;
                if f != 0.0 {
                    for j in k..=last_col {
                        let v = self.data[self.slot(k, j)];
                        let s = self.slot(r, j);
                        self.data[s] -= f * v;
                    }
                }
            }
        }
        Ok(BandLu {
            upper: self,
            lower,
            piv,
        })
    }
}

/// Result of [`BandMatrix::factorize`].
#[derive(Debug, Clone)]
pub struct BandLu {
    upper: BandMatrix,
    lower: Vec<f64>,
    piv: Vec<usize>,
}

impl BandLu {
    /// Solve `A x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        let u = &self.upper;
        let (n, kl) = (u.n, u.kl);
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            for r in k + 1..=(k + kl).min(n - 1) {
                b[r] -= self.lower[k * kl + (r - k - 1)] * bk;
            }
        }
        let reach = kl + u.ku;
        for i in (0..n).rev() {
            let mut acc = b[i];
            for j in i + 1..=(i + reach).min(n - 1) {
                acc -= u.data[u.slot(i, j)] * b[j];
            }
            b[i] = acc / u.data[u.slot(i, i)];
        }
    }
}
