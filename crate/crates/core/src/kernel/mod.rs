//! Tessellated kernel basis, kernel matrices and the dual-weighted matrix `D(β)`.

mod basis;
mod quadrature;

pub use basis::{
    enumerate_exponents, t_integral, BasisScratch, ExponentPair, ExponentTable, TkBasis,
    TkBasisConfig,
};
pub use quadrature::{oracle_check, quadrature_oracle_g, relative_error, OracleReport};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{symmetrize_in_place, SymmetricMatrix};

/// Default ceiling on the memory used to cache every `G(x_k, x_l)` block.
pub const DEFAULT_CACHE_BUDGET_BYTES: u64 = 2 << 30;

/// Rows handled per parallel task when reducing into an `n_P × n_P` matrix.
const REDUCE_CHUNK: usize = 16;

/// `k(x, y) = Σ_{i,j} P_{i,j} G_{i,j}(x, y)`.
pub fn eval_kernel(basis: &TkBasis, p: &SymmetricMatrix, x: &[f64], y: &[f64]) -> Result<f64> {
    check_parameter(basis, p)?;
    for v in [x, y] {
        if v.len() != basis.n_features() {
            return Err(Error::Dimension(format!(
                "point has {} coordinates, basis expects {}",
                v.len(),
                basis.n_features()
            )));
        }
    }
    let mut s = basis.scratch();
    Ok(basis.kernel_value(p.as_slice(), x, y, &mut s))
}

fn check_parameter(basis: &TkBasis, p: &SymmetricMatrix) -> Result<()> {
    if p.order() != basis.n_p() {
        return Err(Error::Dimension(format!(
            "kernel parameter has order {}, basis needs {}",
            p.order(),
            basis.n_p()
        )));
    }
    Ok(())
}

/// A basis bound to a fixed sample set.
///
/// When the full tensor of blocks `G(x_k, x_l)` fits in the cache budget
/// (`n_P² · m² · 8` bytes) the upper-triangle blocks are computed once and
/// reused; otherwise each call recomputes them at `O(m² n_P²)`.
pub struct KernelContext {
    basis: TkBasis,
    points: Vec<f64>,
    m: usize,
    cache: Option<Vec<f64>>,
}

impl KernelContext {
    pub fn new(basis: TkBasis, samples: &[Vec<f64>], cache_budget_bytes: u64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Data("kernel context needs at least one sample".into()));
        }
        let n = basis.n_features();
        let mut points = Vec::with_capacity(samples.len() * n);
        for (i, s) in samples.iter().enumerate() {
            if s.len() != n {
                return Err(Error::Dimension(format!(
                    "sample {i} has {} features, basis expects {n}",
                    s.len()
                )));
            }
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::Data(format!("sample {i} has non-finite features")));
            }
            points.extend_from_slice(s);
        }
        let m = samples.len();
        let mut ctx = KernelContext {
            basis,
            points,
            m,
            cache: None,
        };
        let np = ctx.basis.n_p() as u64;
        let full_bytes = np
            .saturating_mul(np)
            .saturating_mul(m as u64)
            .saturating_mul(m as u64)
            .saturating_mul(8);
        if full_bytes <= cache_budget_bytes {
            ctx.cache = Some(ctx.build_cache());
        }
        Ok(ctx)
    }

    pub fn basis(&self) -> &TkBasis {
        &self.basis
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn is_cached(&self) -> bool {
        self.cache.is_some()
    }

    pub fn point(&self, k: usize) -> &[f64] {
        let n = self.basis.n_features();
        &self.points[k * n..(k + 1) * n]
    }

    fn block_len(&self) -> usize {
        let np = self.basis.n_p();
        np * np
    }

    fn build_cache(&self) -> Vec<f64> {
        let m = self.m;
        let bl = self.block_len();
        let pairs = m * (m + 1) / 2;
        let mut cache = vec![0.0; pairs * bl];
        let mut rows: Vec<&mut [f64]> = Vec::with_capacity(m);
        let mut rest: &mut [f64] = &mut cache;
        for k in 0..m {
            let (head, tail) = rest.split_at_mut((m - k) * bl);
            rows.push(head);
            rest = tail;
        }
        rows.into_par_iter().enumerate().for_each_init(
            || self.basis.scratch(),
            |s, (k, row)| {
                let xk = self.point(k);
                for (off, l) in (k..m).enumerate() {
                    self.basis
                        .fill_block(xk, self.point(l), s, &mut row[off * bl..(off + 1) * bl]);
                }
            },
        );
        cache
    }

    fn cached_row<'a>(&self, cache: &'a [f64], k: usize) -> &'a [f64] {
        let bl = self.block_len();
        let start = self.packed_start(k) * bl;
        &cache[start..start + (self.m - k) * bl]
    }

    /// Number of packed blocks preceding row `k`: `Σ_{r<k} (m − r)`.
    fn packed_start(&self, k: usize) -> usize {
        k * self.m - k * k.saturating_sub(1) / 2
    }

    /// `G(x_k, x_k)`.
    pub fn diagonal_block(&self, k: usize) -> SymmetricMatrix {
        let np = self.basis.n_p();
        let mut out = vec![0.0; np * np];
        let xk = self.point(k);
        let mut s = self.basis.scratch();
        self.basis.fill_block(xk, xk, &mut s, &mut out);
        SymmetricMatrix::from_row_major(np, out).expect("block has order n_P")
    }

    /// The `m × m` kernel matrix `K(P)_{k,l} = k_P(x_k, x_l)`.
    pub fn kernel_matrix(&self, p: &SymmetricMatrix) -> Result<SymmetricMatrix> {
        check_parameter(&self.basis, p)?;
        let m = self.m;
        let bl = self.block_len();
        let pdata = p.as_slice();
        let upper: Vec<Vec<f64>> = match &self.cache {
            Some(cache) => (0..m)
                .into_par_iter()
                .map(|k| {
                    let row = self.cached_row(cache, k);
                    row.chunks_exact(bl)
                        .map(|blk| blk.iter().zip(pdata).map(|(g, q)| g * q).sum())
                        .collect()
                })
                .collect(),
            None => (0..m)
                .into_par_iter()
                .map_init(
                    || self.basis.scratch(),
                    |s, k| {
                        let xk = self.point(k);
                        (k..m)
                            .map(|l| self.basis.kernel_value(pdata, xk, self.point(l), s))
                            .collect()
                    },
                )
                .collect(),
        };
        let mut data = vec![0.0; m * m];
        for (k, row) in upper.iter().enumerate() {
            for (off, &v) in row.iter().enumerate() {
                let l = k + off;
                data[k * m + l] = v;
                data[l * m + k] = v;
            }
        }
        SymmetricMatrix::from_row_major(m, data)
    }

    /// `D(β)_{i,j} = Σ_{k,l} β_k G_{i,j}(x_k, x_l) β_l`.
    ///
    /// Rows are reduced in fixed-size chunks and the chunk partials summed in
    /// order, so the result does not depend on the thread count.
    pub fn assemble_d(&self, weights: &[f64]) -> Result<SymmetricMatrix> {
        if weights.len() != self.m {
            return Err(Error::Dimension(format!(
                "{} weights for {} samples",
                weights.len(),
                self.m
            )));
        }
        let np = self.basis.n_p();
        let bl = np * np;
        let m = self.m;
        let active: Vec<usize> = (0..m).filter(|&k| weights[k] != 0.0).collect();
        let partials: Vec<Vec<f64>> = active
            .par_chunks(REDUCE_CHUNK)
            .map_init(
                || (self.basis.scratch(), vec![0.0; bl]),
                |(s, blk), chunk| {
                    // [0, bl): Σ_{l>k} β_k β_l G_kl ; [bl, 2bl): Σ β_k² G_kk
                    let mut acc = vec![0.0; 2 * bl];
                    for &k in chunk {
                        let bk = weights[k];
                        let xk = self.point(k);
                        for l in k..m {
                            let bl_w = weights[l];
                            if bl_w == 0.0 {
                                continue;
                            }
                            let g: &[f64] = match &self.cache {
                                Some(cache) => {
                                    let row = self.cached_row(cache, k);
                                    &row[(l - k) * bl..(l - k + 1) * bl]
                                }
                                None => {
                                    self.basis.fill_block(xk, self.point(l), s, blk);
                                    blk
                                }
                            };
                            let w = bk * bl_w;
                            let target = if l == k { &mut acc[bl..] } else { &mut acc[..bl] };
                            target.iter_mut().zip(g).for_each(|(a, v)| *a += w * v);
                        }
                    }
                    acc
                },
            )
            .collect();
        let mut off = vec![0.0; bl];
        let mut diag = vec![0.0; bl];
        for part in &partials {
            off.iter_mut().zip(&part[..bl]).for_each(|(a, v)| *a += v);
            diag.iter_mut().zip(&part[bl..]).for_each(|(a, v)| *a += v);
        }
        let mut data = vec![0.0; bl];
        for i in 0..np {
            for j in 0..np {
                data[i * np + j] = diag[i * np + j] + off[i * np + j] + off[j * np + i];
            }
        }
        symmetrize_in_place(np, &mut data);
        SymmetricMatrix::from_row_major(np, data)
    }
}

/// Kernel matrix for an ad-hoc sample set (no caching).
pub fn kernel_matrix(basis: &TkBasis, samples: &[Vec<f64>], p: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    KernelContext::new(basis.clone(), samples, 0)?.kernel_matrix(p)
}

/// `D(β)` for an ad-hoc sample set (no caching).
pub fn assemble_d(basis: &TkBasis, samples: &[Vec<f64>], weights: &[f64]) -> Result<SymmetricMatrix> {
    KernelContext::new(basis.clone(), samples, 0)?.assemble_d(weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(n: usize, d: u32) -> TkBasis {
        TkBasis::new(TkBasisConfig::new(d, vec![0.0; n], vec![1.0; n], vec![0.5; n]).unwrap())
    }

    fn samples() -> Vec<Vec<f64>> {
        vec![vec![0.1, 0.7], vec![0.5, 0.2], vec![0.9, 0.9], vec![0.3, 0.4], vec![0.6, 0.6]]
    }

    fn parameter(np: usize) -> SymmetricMatrix {
        SymmetricMatrix::from_upper_fn(np, |i, j| if i == j { 1.0 + 0.1 * i as f64 } else { 0.05 * (i + j) as f64 })
    }

    /// `Σ_{i,j} P_{i,j} G_{i,j}(x, y)` from single basis entries.
    fn reference_kernel(b: &TkBasis, p: &SymmetricMatrix, x: &[f64], y: &[f64]) -> f64 {
        let np = b.n_p();
        (0..np)
            .flat_map(|i| (0..np).map(move |j| (i, j)))
            .map(|(i, j)| p.get(i, j) * b.eval_g(i, j, x, y).unwrap())
            .sum()
    }

    #[test]
    fn cached_and_uncached_paths_match_reference() {
        let b = basis(2, 1);
        let xs = samples();
        let p = parameter(b.n_p());
        let cached = KernelContext::new(b.clone(), &xs, u64::MAX).unwrap();
        let direct = KernelContext::new(b.clone(), &xs, 0).unwrap();
        assert!(cached.is_cached() && !direct.is_cached());
        let kc = cached.kernel_matrix(&p).unwrap();
        let kd = direct.kernel_matrix(&p).unwrap();
        for k in 0..xs.len() {
            for l in 0..xs.len() {
                let r = reference_kernel(&b, &p, &xs[k], &xs[l]);
                assert!((kc.get(k, l) - r).abs() <= 1e-12 * (1.0 + r.abs()));
                assert!((kd.get(k, l) - r).abs() <= 1e-12 * (1.0 + r.abs()));
                assert!((eval_kernel(&b, &p, &xs[k], &xs[l]).unwrap() - r).abs() <= 1e-12 * (1.0 + r.abs()));
            }
        }
        let w = [0.5, -1.0, 0.0, 2.0, -0.25];
        let dc = cached.assemble_d(&w).unwrap();
        let dd = direct.assemble_d(&w).unwrap();
        assert!(dc.max_abs_diff(&dd) <= 1e-12 * (1.0 + dd.frobenius_norm()));
    }

    #[test]
    fn d_pairs_with_parameter_like_the_kernel() {
        let b = basis(2, 1);
        let xs = samples();
        let p = parameter(b.n_p());
        let w = [0.3, -0.7, 1.1, 0.0, -0.4];
        let ctx = KernelContext::new(b, &xs, 0).unwrap();
        let via_d = ctx.assemble_d(&w).unwrap().inner(&p);
        let via_k = ctx.kernel_matrix(&p).unwrap().quad_form(&w);
        assert!((via_d - via_k).abs() <= 1e-10 * (1.0 + via_k.abs()));
    }

    #[test]
    fn degree_zero_identity_parameter_closed_form() {
        let b = basis(1, 0);
        let p = SymmetricMatrix::identity(b.n_p());
        for (x, y) in [(0.2, 0.6), (0.0, 1.0), (0.5, 0.5)] {
            let k = eval_kernel(&b, &p, &[x], &[y]).unwrap();
            assert!((k - (2.0 - (x - y).abs())).abs() < 1e-14, "{x} {y}: {k}");
        }
    }

    #[test]
    fn shape_errors() {
        let b = basis(2, 1);
        assert!(eval_kernel(&b, &SymmetricMatrix::identity(3), &[0.1, 0.2], &[0.3, 0.4]).is_err());
        assert!(eval_kernel(&b, &SymmetricMatrix::identity(b.n_p()), &[0.1], &[0.3, 0.4]).is_err());
        assert!(KernelContext::new(b.clone(), &[], 0).is_err());
        assert!(KernelContext::new(b.clone(), &[vec![f64::NAN, 0.0]], 0).is_err());
        let ctx = KernelContext::new(b, &samples(), 0).unwrap();
        assert!(ctx.assemble_d(&[1.0]).is_err());
    }
}
