use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::{Operator, Tensor, C64, ONE, ZERO};
use crate::Result;

const MAX_SWEEPS: usize = 100;

/// Eigenpairs of a Hermitian operator, eigenvalues ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    /// Unitary whose columns are the eigenvectors, in the order of `values`.
    pub vectors: Operator,
}

impl EigenDecomposition {
    /// `V f(diag) V^dagger`.
    pub fn map(&self, f: impl Fn(f64) -> C64) -> Result<Operator> {
        let n = self.values.len();
        let v = self.vectors.to_dense();
        let fl: Vec<C64> = self.values.iter().map(|&l| f(l)).collect();
        let mut out = alloc::vec![ZERO; n * n];
        for r in 0..n {
            for c in 0..n {
                let mut acc = ZERO;
                for k in 0..n {
                    acc += v[r * n + k] * fl[k] * v[c * n + k].conj();
                }
                out[r * n + c] = acc;
            }
        }
        Operator::dense(n, out)
    }
}

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
pub fn eig_hermitian(op: &Operator) -> Result<EigenDecomposition> {
    op.require_hermitian()?;
    let n = op.dim();
    if let Some(d) = op.diagonal_entries() {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| d[i].re.total_cmp(&d[j].re));
        let values = order.iter().map(|&i| d[i].re).collect();
        let vectors = Operator::from_fn(n, |r, c| if r == order[c] { ONE } else { ZERO })?;
        return Ok(EigenDecomposition { values, vectors });
    }

    let mut a = op.to_dense();
    let mut v = Operator::identity(n).to_dense();
    let scale = a
        .iter()
        .map(|x| x.norm_sqr())
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| a[p * n + q].norm_sqr())
            .sum();
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                let r = apq.norm();
                if r <= 1e-300 {
                    continue;
                }
                let phase = (apq / r).conj();
                let tau = (a[q * n + q].re - a[p * n + p].re) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Restriction of the unitary to the (p, q) plane.
                let upp = C64::new(c, 0.0);
                let upq = C64::new(s, 0.0);
                let uqp = phase * (-s);
                let uqq = phase * c;
                for k in 0..n {
                    let x = a[k * n + p];
                    let y = a[k * n + q];
                    a[k * n + p] = x * upp + y * uqp;
                    a[k * n + q] = x * upq + y * uqq;
                    let x = v[k * n + p];
                    let y = v[k * n + q];
                    v[k * n + p] = x * upp + y * uqp;
                    v[k * n + q] = x * upq + y * uqq;
                }
                for k in 0..n {
                    let x = a[p * n + k];
                    let y = a[q * n + k];
                    a[p * n + k] = upp.conj() * x + uqp.conj() * y;
                    a[q * n + k] = upq.conj() * x + uqq.conj() * y;
                }
                a[p * n + q] = ZERO;
                a[q * n + p] = ZERO;
                a[p * n + p].im = 0.0;
                a[q * n + q].im = 0.0;
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].re.total_cmp(&a[j * n + j].re));
    let values = order.iter().map(|&i| a[i * n + i].re).collect();
    let vectors = Operator::from_fn(n, |r, c| v[r * n + order[c]])?;
    Ok(EigenDecomposition { values, vectors })
}

/// `exp(z * op)` for Hermitian `op` and any complex `z`.
pub fn exp_scaled(op: &Operator, z: C64) -> Result<Operator> {
    op.require_hermitian()?;
    if let Some(d) = op.diagonal_entries() {
        return Operator::diagonal(d.iter().map(|l| (z * l.re).exp()).collect());
    }
    eig_hermitian(op)?.map(|l| (z * l).exp())
}

/// `exp(-i s op)`.
pub fn expm_i(op: &Operator, s: f64) -> Result<Operator> {
    exp_scaled(op, C64::new(0.0, -s))
}

/// `exp(-i s a (x) b)` without diagonalizing the joint operator.
pub fn expm_i_product(a: &Operator, b: &Operator, s: f64) -> Result<Operator> {
    a.require_hermitian()?;
    b.require_hermitian()?;
    if let (Some(da), Some(db)) = (a.diagonal_entries(), b.diagonal_entries()) {
        let phases = da
            .iter()
            .flat_map(|x| {
                db.iter()
                    .map(move |y| C64::new(0.0, -s * x.re * y.re).exp())
            })
            .collect();
        return Operator::diagonal(phases);
    }
    let ea = eig_hermitian(a)?;
    let eb = eig_hermitian(b)?;
    let values = ea
        .values
        .iter()
        .flat_map(|x| eb.values.iter().map(move |y| x * y))
        .collect();
    let vectors = ea.vectors.tensor(&eb.vectors)?;
    EigenDecomposition { values, vectors }.map(|l| C64::new(0.0, -s * l).exp())
}
