//! Dominant eigenpair of a real symmetric tridiagonal matrix by shifted inverse
//! iteration.

use crate::error::{Error, Result};

/// Real symmetric tridiagonal matrix stored as its diagonal and first
/// off-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricTridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl SymmetricTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::invalid("diag", "matrix must be at least 1x1"));
        }
        if off.len() + 1 != diag.len() {
            return Err(Error::invalid(
                "off",
                format!("expected {} off-diagonal entries, got {}", diag.len() - 1, off.len()),
            ));
        }
        Ok(Self { diag, off })
    }

    /// The `k × k` matrix with ones on the first off-diagonals and zeros elsewhere.
    pub fn path(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("k", "block length must be >= 1"));
        }
        Self::new(vec![0.0; k], vec![1.0; k - 1])
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i] * x[i];
                if i > 0 {
                    acc += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    acc += self.off[i] * x[i + 1];
                }
                acc
            })
            .collect()
    }

    fn gershgorin_upper(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
                let right = if i + 1 < n { self.off[i].abs() } else { 0.0 };
                self.diag[i] + left + right
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Solves `(shift·I − T) x = rhs` with the Thomas algorithm.
    fn solve_shifted(&self, shift: f64, rhs: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut c_prime = vec![0.0; n];
        let mut d_prime = vec![0.0; n];
        let b0 = shift - self.diag[0];
        if n > 1 {
            c_prime[0] = -self.off[0] / b0;
        }
        d_prime[0] = rhs[0] / b0;
        for i in 1..n {
            let a = -self.off[i - 1];
            let b = shift - self.diag[i];
            let denom = b - a * c_prime[i - 1];
            if i + 1 < n {
                c_prime[i] = -self.off[i] / denom;
            }
            d_prime[i] = (rhs[i] - a * d_prime[i - 1]) / denom;
        }
        let mut x = d_prime;
        for i in (0..n.saturating_sub(1)).rev() {
            x[i] -= c_prime[i] * x[i + 1];
        }
        x
    }

    /// Largest eigenvalue and its unit eigenvector.
    ///
    /// The shift sits just above the Gershgorin bound, so `shift·I − T` is
    /// positive definite and the iteration is attracted to the top of the
    /// spectrum. Stops once the Rayleigh quotient moves by less than `tol` and the
    /// residual `‖Tx − λx‖` is below `1e-10 · max(1, |λ|)`.
    pub fn max_eigenpair(&self, tol: f64) -> Result<(f64, Vec<f64>)> {
        const MAX_ITERATIONS: usize = 10_000;
        let n = self.dim();
        let bound = self.gershgorin_upper();
        let shift = bound + 1e-9 * bound.abs().max(1.0);

        let mut x = vec![1.0 / (n as f64).sqrt(); n];
        let mut lambda = rayleigh(self, &x);
        for _ in 0..MAX_ITERATIONS {
            let mut y = self.solve_shifted(shift, &x);
            let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(norm.is_finite() && norm > 0.0) {
                return Err(Error::invalid("matrix", "inverse iteration broke down"));
            }
            y.iter_mut().for_each(|v| *v /= norm);
            let next = rayleigh(self, &y);
            let residual = residual_norm(self, &y, next);
            x = y;
            let converged = (next - lambda).abs() < tol && residual < 1e-10 * next.abs().max(1.0);
            lambda = next;
            if converged {
                if x.iter().sum::<f64>() < 0.0 {
                    x.iter_mut().for_each(|v| *v = -*v);
                }
                return Ok((lambda, x));
            }
        }
        Err(Error::invalid("matrix", "inverse iteration did not converge"))
    }
}

fn rayleigh(t: &SymmetricTridiagonal, x: &[f64]) -> f64 {
    t.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
}

fn residual_norm(t: &SymmetricTridiagonal, x: &[f64], lambda: f64) -> f64 {
    t.mul_vec(x)
        .iter()
        .zip(x)
        .map(|(tx, xi)| (tx - lambda * xi).powi(2))
        .sum::<f64>()
        .sqrt()
}
