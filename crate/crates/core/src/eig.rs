//! Dense symmetric eigendecomposition and the trace-simplex projection.

use crate::error::{Error, Result};
use crate::matrix::SymmetricMatrix;

const MAX_SWEEPS: usize = 100;

/// Eigenvalues in descending order with matching orthonormal eigenvectors.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    /// `eigenvectors[k]` is the unit eigenvector for `eigenvalues[k]`.
    pub eigenvectors: Vec<Vec<f64>>,
}

impl EigenDecomposition {
    /// `Σ_k w_k v_k v_kᵀ` for the stored eigenvectors.
    pub fn reconstruct_with(&self, weights: &[f64]) -> SymmetricMatrix {
        let n = self.eigenvalues.len();
        SymmetricMatrix::from_upper_fn(n, |i, j| {
            self.eigenvectors
                .iter()
                .zip(weights)
                .map(|(v, w)| w * v[i] * v[j])
                .sum()
        })
    }
}

/// Cyclic Jacobi eigendecomposition.
///
/// Rotations sweep the strict upper triangle row by row until the
/// off-diagonal mass is negligible relative to the matrix norm. Eigenvectors
/// are sign-normalized so their largest-magnitude entry is positive.
pub fn jacobi_eig(a: &SymmetricMatrix) -> Result<EigenDecomposition> {
    if !a.is_finite() {
        return Err(Error::Numerical("eigendecomposition of a non-finite matrix".into()));
    }
    let n = a.order();
    let mut m: Vec<f64> = a.as_slice().to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let norm = a.frobenius_norm();
    let threshold = f64::EPSILON * norm;

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= threshold || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j * n + j].total_cmp(&m[i * n + i]));
    let eigenvalues = order.iter().map(|&i| m[i * n + i]).collect();
    let eigenvectors = order
        .iter()
        .map(|&col| {
            let mut vec: Vec<f64> = (0..n).map(|k| v[k * n + col]).collect();
            canonicalize_sign(&mut vec);
            vec
        })
        .collect();
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

fn canonicalize_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extremal {
    Max,
    Min,
}

/// The largest or smallest eigenvalue with its unit eigenvector.
///
/// For the zero matrix the first coordinate axis is returned.
pub fn extremal_eigpair(a: &SymmetricMatrix, which: Extremal) -> Result<(f64, Vec<f64>)> {
    if a.order() == 0 {
        return Err(Error::Dimension("empty matrix has no eigenpair".into()));
    }
    if a.as_slice().iter().all(|&x| x == 0.0) {
        let mut e1 = vec![0.0; a.order()];
        e1[0] = 1.0;
        return Ok((0.0, e1));
    }
    let mut eig = jacobi_eig(a)?;
    let idx = match which {
        Extremal::Max => 0,
        Extremal::Min => eig.eigenvalues.len() - 1,
    };
    Ok((eig.eigenvalues[idx], eig.eigenvectors.swap_remove(idx)))
}

/// A kernel parameter: symmetric, positive semidefinite, `trace = n_P`.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceSimplexMatrix(SymmetricMatrix);

impl TraceSimplexMatrix {
    pub const PSD_TOL: f64 = 1e-8;
    pub const TRACE_TOL: f64 = 1e-9;

    /// Validates trace and positive semidefiniteness.
    pub fn new(m: SymmetricMatrix) -> Result<Self> {
        let np = m.order() as f64;
        if m.order() == 0 {
            return Err(Error::Dimension("kernel parameter must be non-empty".into()));
        }
        if (m.trace() - np).abs() > Self::TRACE_TOL * np {
            return Err(Error::Numerical(format!(
                "kernel parameter trace {} differs from {}",
                m.trace(),
                np
            )));
        }
        let eig = jacobi_eig(&m)?;
        let min = *eig.eigenvalues.last().unwrap();
        if min < -Self::PSD_TOL * np {
            return Err(Error::Numerical(format!(
                "kernel parameter has negative eigenvalue {min}"
            )));
        }
        Ok(TraceSimplexMatrix(m))
    }

    /// Wraps a matrix that is feasible by construction.
    pub(crate) fn new_unchecked(m: SymmetricMatrix) -> Self {
        TraceSimplexMatrix(m)
    }

    pub fn identity(n_p: usize) -> Self {
        TraceSimplexMatrix(SymmetricMatrix::identity(n_p))
    }

    /// `n_P · v vᵀ / ‖v‖²`.
    pub fn rank_one(v: &[f64]) -> Result<Self> {
        let norm2: f64 = v.iter().map(|x| x * x).sum();
        if !(norm2 > 0.0) || !norm2.is_finite() {
            return Err(Error::Numerical("rank-one direction must be a nonzero finite vector".into()));
        }
        Ok(TraceSimplexMatrix(SymmetricMatrix::outer(
            v,
            v.len() as f64 / norm2,
        )))
    }

    /// `(1 − γ) self + γ other`; stays feasible for `γ ∈ [0, 1]`.
    pub fn convex_combination(&self, other: &TraceSimplexMatrix, gamma: f64) -> Self {
        debug_assert!((0.0..=1.0).contains(&gamma));
        TraceSimplexMatrix(self.0.lincomb(1.0 - gamma, gamma, &other.0))
    }

    pub fn n_p(&self) -> usize {
        self.0.order()
    }

    pub fn matrix(&self) -> &SymmetricMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> SymmetricMatrix {
        self.0
    }
}

impl AsRef<SymmetricMatrix> for TraceSimplexMatrix {
    fn as_ref(&self) -> &SymmetricMatrix {
        &self.0
    }
}

/// Result of [`project_trace_simplex`].
#[derive(Clone, Debug)]
pub struct Projection {
    pub matrix: TraceSimplexMatrix,
    /// The eigenvalue shift `y` with `Σ_i |λ_i − y|₊ = n_P`.
    pub shift: f64,
}

/// Default bisection tolerance on `|r(y)|` for a trace target `n_P`.
pub fn default_projection_eps(n_p: f64) -> f64 {
    1e-10 * n_p
}

/// Frobenius-nearest point of `{P ⪰ 0, trace P = n_P}` to `A`.
///
/// With `A = Σ λ_i p_i p_iᵀ`, the projection is `Σ |λ_i − y|₊ p_i p_iᵀ` where
/// the shift `y` solves `r(y) = Σ |λ_i − y|₊ − n_P = 0`. `r` is nonincreasing,
/// so bisection keeps `r(y_l) ≥ 0 ≥ r(y_u)`; the lower end starts at
/// `min λ − n_P`, which guarantees `r(y_l) ≥ 0` even when `trace A < n_P`.
pub fn project_trace_simplex(a: &SymmetricMatrix, n_p: f64, eps: f64) -> Result<Projection> {
    if !(n_p > 0.0) {
        return Err(Error::Config("trace target must be positive".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::Config("bisection tolerance must be positive".into()));
    }
    let eig = jacobi_eig(a)?;
    let lambdas = &eig.eigenvalues;
    let residual = |y: f64| lambdas.iter().map(|l| (l - y).max(0.0)).sum::<f64>() - n_p;

    let min = *lambdas.last().unwrap();
    let max = lambdas[0];
    let mut lo = min - n_p;
    let mut hi = max;
    let mut y = 0.5 * (lo + hi);
    for _ in 0..200 {
        y = 0.5 * (lo + hi);
        let r = residual(y);
        if r.abs() <= eps {
            break;
        }
        if r >= 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        if hi - lo <= f64::EPSILON * (1.0 + y.abs()) {
            break;
        }
    }
    // The shift is exact on the active set: solve Σ_{λ_i > y} (λ_i − y) = n_P.
    let active: Vec<f64> = lambdas.iter().copied().filter(|&l| l > y).collect();
    if !active.is_empty() {
        let refined = (active.iter().sum::<f64>() - n_p) / active.len() as f64;
        if active.iter().all(|&l| l > refined)
            && lambdas.iter().filter(|&&l| l <= y).all(|&l| l <= refined)
        {
            y = refined;
        }
    }
    let weights: Vec<f64> = lambdas.iter().map(|l| (l - y).max(0.0)).collect();
    let matrix = eig.reconstruct_with(&weights);
    Ok(Projection {
        matrix: TraceSimplexMatrix::new_unchecked(matrix),
        shift: y,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(d: &[f64]) -> SymmetricMatrix {
        SymmetricMatrix::from_diagonal(d)
    }

    #[test]
    fn identity_and_diagonal() {
        let e = jacobi_eig(&SymmetricMatrix::identity(3)).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 1.0, 1.0]);

        let e = jacobi_eig(&diag(&[1.0, 3.0])).unwrap();
        assert_eq!(e.eigenvalues, vec![3.0, 1.0]);
        assert_eq!(e.eigenvectors[0], vec![0.0, 1.0]);
    }

    #[test]
    fn extremal_pairs() {
        let a = diag(&[3.0, 1.0]);
        let (l, v) = extremal_eigpair(&a, Extremal::Max).unwrap();
        assert_eq!((l, v), (3.0, vec![1.0, 0.0]));
        let (l, v) = extremal_eigpair(&a, Extremal::Min).unwrap();
        assert_eq!((l, v), (1.0, vec![0.0, 1.0]));
        let (l, v) = extremal_eigpair(&SymmetricMatrix::zeros(3), Extremal::Max).unwrap();
        assert_eq!((l, v), (0.0, vec![1.0, 0.0, 0.0]));
    }

    #[test]
    fn non_finite_rejected() {
        let mut a = SymmetricMatrix::identity(2);
        a.set(0, 1, f64::NAN);
        assert!(jacobi_eig(&a).is_err());
    }

    #[test]
    fn worked_projections() {
        let p = project_trace_simplex(&diag(&[2.0, 0.0]), 2.0, 1e-12).unwrap();
        assert!(p.shift.abs() < 1e-12);
        assert!(p.matrix.matrix().max_abs_diff(&diag(&[2.0, 0.0])) < 1e-12);

        let p = project_trace_simplex(&diag(&[3.0, 1.0]), 2.0, 1e-12).unwrap();
        assert!((p.shift - 1.0).abs() < 1e-12);
        assert!(p.matrix.matrix().max_abs_diff(&diag(&[2.0, 0.0])) < 1e-12);

        let minus_i = diag(&[-1.0, -1.0]);
        let p = project_trace_simplex(&minus_i, 2.0, 1e-12).unwrap();
        assert!((p.shift + 2.0).abs() < 1e-12);
        assert!(p.matrix.matrix().max_abs_diff(&SymmetricMatrix::identity(2)) < 1e-12);
    }

    #[test]
    fn trace_simplex_validation() {
        assert!(TraceSimplexMatrix::new(SymmetricMatrix::identity(3)).is_ok());
        assert!(TraceSimplexMatrix::new(diag(&[3.0, -1.0])).is_err());
        assert!(TraceSimplexMatrix::new(diag(&[1.0, 0.5])).is_err());
        let r = TraceSimplexMatrix::rank_one(&[1.0, 1.0, 0.0]).unwrap();
        assert!((r.matrix().trace() - 3.0).abs() < 1e-14);
        assert!(TraceSimplexMatrix::rank_one(&[0.0, 0.0]).is_err());
    }
}
