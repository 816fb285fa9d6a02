//! Exact reference integration of `G_{i,j}(x, y) = ∫_Y N_i(z, x) N_j(z, y) dz`.
//!
//! The integration box is split at the coordinates of `x` and `y` in every
//! dimension. Inside each resulting cell both indicator factors are constant,
//! so the integrand reduces to a single monomial in `z` whose integral over
//! the cell is taken in closed form. Nothing here reuses the case analysis of
//! [`TkBasis::eval_g`]; the two routes are meant to be checked against each
//! other.

use super::basis::TkBasis;
use crate::error::{Error, Result};

/// Reference value of `G_{i,j}(x, y)` by cell decomposition (0-based indices).
pub fn quadrature_oracle_g(basis: &TkBasis, i: usize, j: usize, x: &[f64], y: &[f64]) -> Result<f64> {
    let np = basis.n_p();
    let n = basis.n_features();
    for idx in [i, j] {
        if idx >= np {
            return Err(Error::IndexOutOfRange {
                index: idx,
                limit: np,
            });
        }
    }
    if x.len() != n || y.len() != n {
        return Err(Error::Dimension("oracle point dimension mismatch".into()));
    }
    let h = basis.half_size();
    let pi = &basis.table().pairs()[i % h];
    let pj = &basis.table().pairs()[j % h];
    // upper-half rows use I(z - x), lower-half rows use 1 - I(z - x)
    let complement_i = i >= h;
    let complement_j = j >= h;

    let (lo, hi) = basis.integration_bounds();
    let cuts: Vec<Vec<f64>> = (0..n)
        .map(|k| {
            let mut c = vec![lo[k], hi[k], x[k].clamp(lo[k], hi[k]), y[k].clamp(lo[k], hi[k])];
            c.sort_by(|a, b| a.partial_cmp(b).unwrap());
            c.dedup();
            c
        })
        .collect();

    let coefficient: f64 = (0..n)
        .map(|k| x[k].powi(pi.delta[k] as i32) * y[k].powi(pj.delta[k] as i32))
        .product();
    let power: Vec<i32> = (0..n).map(|k| (pi.gamma[k] + pj.gamma[k]) as i32).collect();

    let mut cell = vec![0usize; n];
    let mut total = 0.0;
    loop {
        let mut above_x = true;
        let mut above_y = true;
        let mut volume = 1.0;
        for k in 0..n {
            let (a, b) = (cuts[k][cell[k]], cuts[k][cell[k] + 1]);
            let mid = 0.5 * (a + b);
            above_x &= mid >= x[k];
            above_y &= mid >= y[k];
            volume *= monomial_integral(a, b, power[k]);
        }
        let ind_x = if complement_i { !above_x } else { above_x };
        let ind_y = if complement_j { !above_y } else { above_y };
        if ind_x && ind_y {
            total += volume;
        }

        // odometer over cells
        let mut k = 0;
        loop {
            if k == n {
                return Ok(coefficient * total);
            }
            cell[k] += 1;
            if cell[k] + 1 < cuts[k].len() {
                break;
            }
            cell[k] = 0;
            k += 1;
        }
    }
}

/// `∫_a^b z^p dz`.
fn monomial_integral(a: f64, b: f64, p: i32) -> f64 {
    let q = p + 1;
    (b.powi(q) - a.powi(q)) / q as f64
}

/// Outcome of comparing [`TkBasis::eval_g`] against the reference integral.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleReport {
    pub trials: usize,
    pub max_relative_error: f64,
    /// Largest deviation of `G_{0,0}` from `∏(b + δ − max(x, y))`; only
    /// checked for degree zero, where that product is the exact value.
    pub closed_form_error: Option<f64>,
}

/// `|a − b| / |b|`, with exact agreement (including at zero) counting as zero.
pub fn relative_error(value: f64, reference: f64) -> f64 {
    if value == reference {
        0.0
    } else {
        (value - reference).abs() / reference.abs().max(f64::MIN_POSITIVE)
    }
}

/// Draws `trials` random `(i, j, x, y)` with `x, y` in the unit cube and
/// compares the fast evaluation with the reference integral.
///
/// `fault` is added to every fast value; a nonzero value exists only so the
/// check can be shown to fail.
pub fn oracle_check(
    n_features: usize,
    degree: u32,
    padding: f64,
    trials: usize,
    seed: u64,
    fault: f64,
) -> Result<OracleReport> {
    use rand::Rng;

    let basis = TkBasis::new(super::TkBasisConfig::unit_cube(n_features, degree, padding)?);
    let mut r = crate::synth::rng(seed);
    let np = basis.n_p();
    let mut worst = 0.0f64;
    let mut closed = if degree == 0 { Some(0.0f64) } else { None };
    for _ in 0..trials {
        let i = r.gen_range(0..np);
        let j = r.gen_range(0..np);
        let x: Vec<f64> = (0..n_features).map(|_| r.gen()).collect();
        let y: Vec<f64> = (0..n_features).map(|_| r.gen()).collect();
        let fast = basis.eval_g(i, j, &x, &y)? + fault;
        let exact = quadrature_oracle_g(&basis, i, j, &x, &y)?;
        worst = worst.max(relative_error(fast, exact));
        if let Some(c) = closed.as_mut() {
            let g00 = basis.eval_g(0, 0, &x, &y)? + fault;
            let product: f64 = x.iter().zip(&y).map(|(a, b)| 1.0 + padding - a.max(*b)).product();
            *c = c.max((g00 - product).abs());
        }
    }
    Ok(OracleReport {
        trials,
        max_relative_error: worst,
        closed_form_error: closed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::TkBasisConfig;

    #[test]
    fn reproduces_degree_zero_closed_form() {
        let basis = TkBasis::new(TkBasisConfig::new(0, vec![0.0], vec![1.0], vec![0.5]).unwrap());
        let v = quadrature_oracle_g(&basis, 0, 0, &[0.2], &[0.6]).unwrap();
        assert!((v - 0.9).abs() < 1e-15);
        // complement block at coincident points: z ≥ 0.5 and not z ≥ 0.5 never overlap
        let t = quadrature_oracle_g(&basis, 0, 1, &[0.5], &[0.5]).unwrap();
        assert_eq!(t, 0.0);
    }

    #[test]
    fn diagonal_is_nonnegative() {
        let basis = TkBasis::new(TkBasisConfig::unit_cube(2, 2, 0.5).unwrap());
        let x = [0.3, 0.9];
        for i in 0..basis.n_p() {
            assert!(quadrature_oracle_g(&basis, i, i, &x, &x).unwrap() >= 0.0);
        }
    }

    #[test]
    fn oracle_check_passes_and_detects_faults() {
        for (n, d) in [(1, 0), (2, 1), (3, 2)] {
            let rep = oracle_check(n, d, 0.5, 300, 1, 0.0).unwrap();
            assert!(rep.max_relative_error <= 1e-9, "n={n} d={d}: {rep:?}");
        }
        let rep = oracle_check(1, 0, 0.5, 50, 1, 0.0).unwrap();
        assert!(rep.closed_form_error.unwrap() <= 1e-12);
        let bad = oracle_check(2, 1, 0.5, 50, 1, 1e-6).unwrap();
        assert!(bad.max_relative_error > 1e-9);
    }

    #[test]
    fn rejects_bad_index() {
        let basis = TkBasis::new(TkBasisConfig::unit_cube(1, 0, 0.5).unwrap());
        assert!(quadrature_oracle_g(&basis, 2, 0, &[0.1], &[0.2]).is_err());
    }
}
