//! Complex tridiagonal and banded direct solvers for the Crank–Nicolson
//! step. The CN matrices 1 + iαH have positive-definite real part, so LU
//! without pivoting is safe.

use num_complex::Complex64;

use crate::error::{Result, SimError};

const PIVOT_FLOOR: f64 = 1e-300;

/// Thomas algorithm for a general complex tridiagonal system.
///
/// `sub[i]` couples row i+1 to i, `sup[i]` couples row i to i+1.
pub fn thomas_solve(
    sub: &[Complex64],
    diag: &[Complex64],
    sup: &[Complex64],
    rhs: &[Complex64],
) -> Result<Vec<Complex64>> {
    let n = diag.len();
    debug_assert_eq!(sub.len(), n - 1);
    debug_assert_eq!(sup.len(), n - 1);
    debug_assert_eq!(rhs.len(), n);
    let mut c = vec![Complex64::default(); n];
    let mut d = vec![Complex64::default(); n];
    let mut denom = diag[0];
    if denom.norm() < PIVOT_FLOOR {
        return Err(SimError::Numerical("tridiagonal pivot underflow".into()));
    }
    c[0] = sup[0] / denom;
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - sub[i - 1] * c[i - 1];
        if denom.norm() < PIVOT_FLOOR {
            return Err(SimError::Numerical("tridiagonal pivot underflow".into()));
        }
        if i < n - 1 {
            c[i] = sup[i] / denom;
        }
        d[i] = (rhs[i] - sub[i - 1] * d[i - 1]) / denom;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] -= c[i] * next;
    }
    Ok(x)
}

/// Cyclic tridiagonal solve (periodic wrap entries `corner_lo` = A[0, n−1],
/// `corner_hi` = A[n−1, 0]) via the Sherman–Morrison correction.
pub fn cyclic_thomas_solve(
    sub: &[Complex64],
    diag: &[Complex64],
    sup: &[Complex64],
    corner_lo: Complex64,
    corner_hi: Complex64,
    rhs: &[Complex64],
) -> Result<Vec<Complex64>> {
    let n = diag.len();
    if n < 3 {
        return Err(SimError::Numerical("cyclic system too small".into()));
    }
    // A = T + u vᵀ with u = (γ, 0, …, 0, corner_hi)ᵀ, v = (1, 0, …, 0, corner_lo/γ)ᵀ.
    let gamma = -diag[0];
    let mut dmod = diag.to_vec();
    dmod[0] -= gamma;
    dmod[n - 1] -= corner_lo * corner_hi / gamma;
    let y = thomas_solve(sub, &dmod, sup, rhs)?;
    let mut u = vec![Complex64::default(); n];
    u[0] = gamma;
    u[n - 1] = corner_hi;
    let z = thomas_solve(sub, &dmod, sup, &u)?;
    let vy = y[0] + corner_lo / gamma * y[n - 1];
    let vz = z[0] + corner_lo / gamma * z[n - 1];
    let denom = Complex64::new(1.0, 0.0) + vz;
    if denom.norm() < PIVOT_FLOOR {
        return Err(SimError::Numerical("cyclic correction singular".into()));
    }
    let factor = vy / denom;
    Ok(y.iter().zip(&z).map(|(yi, zi)| yi - factor * zi).collect())
}

/// Banded complex matrix with equal lower/upper bandwidth, LU-factored in
/// place without pivoting.
///
/// Storage is row-major: entry (i, j) with |i − j| ≤ bw lives at
/// `data[i·(2bw+1) + (j − i + bw)]`.
pub struct BandedLu {
    n: usize,
    bw: usize,
    data: Vec<Complex64>,
    factored: bool,
}

impl BandedLu {
    pub fn zeros(n: usize, bw: usize) -> Self {
        BandedLu {
            n,
            bw,
            data: vec![Complex64::default(); n * (2 * bw + 1)],
            factored: false,
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (2 * self.bw + 1) + (j + self.bw - i)
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        debug_assert!(!self.factored);
        debug_assert!(j + self.bw >= i && j <= i + self.bw);
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: Complex64) {
        debug_assert!(!self.factored);
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        if j + self.bw < i || j > i + self.bw {
            Complex64::default()
        } else {
            self.data[self.idx(i, j)]
        }
    }

    /// LU factorization without pivoting; fill-in stays within the band.
    pub fn factor(&mut self) -> Result<()> {
        let n = self.n;
        let bw = self.bw;
        for k in 0..n {
            let pivot = self.data[self.idx(k, k)];
            if pivot.norm() < PIVOT_FLOOR {
                return Err(SimError::Numerical(format!(
                    "banded LU pivot underflow at row {k}"
                )));
            }
            let i_max = (k + bw).min(n - 1);
            for i in k + 1..=i_max {
                let l = self.data[self.idx(i, k)] / pivot;
                self.data[self.idx(i, k)] = l;
                let j_max = (k + bw).min(n - 1);
                for j in k + 1..=j_max {
                    let upper = self.data[self.idx(k, j)];
                    let t = self.idx(i, j);
                    self.data[t] -= l * upper;
                }
            }
        }
        self.factored = true;
        Ok(())
    }

    /// Solve A x = b in place using the stored factorization.
    pub fn solve(&self, b: &mut [Complex64]) -> Result<()> {
        if !self.factored {
            return Err(SimError::Numerical("banded solve before factor".into()));
        }
        let n = self.n;
        let bw = self.bw;
        for i in 1..n {
            let j_min = i.saturating_sub(bw);
            let mut acc = b[i];
            for j in j_min..i {
                acc -= self.data[self.idx(i, j)] * b[j];
            }
            b[i] = acc;
        }
        for i in (0..n).rev() {
            let j_max = (i + bw).min(n - 1);
            let mut acc = b[i];
            for j in i + 1..=j_max {
                acc -= self.data[self.idx(i, j)] * b[j];
            }
            let pivot = self.data[self.idx(i, i)];
            b[i] = acc / pivot;
        }
        Ok(())
    }
}
