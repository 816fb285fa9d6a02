//! Dense symmetric matrices.
//!
//! Used as the carrier for kernel matrices `K(P)`, the dual-weighted basis
//! matrix `D(β)` and the kernel parameter `P`. Storage is full row-major so
//! rows can be handed out as slices; symmetry is enforced on construction.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq)]
pub struct SymmetricMatrix {
    order: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(order: usize) -> Self {
        SymmetricMatrix {
            order,
            data: vec![0.0; order * order],
        }
    }

    pub fn identity(order: usize) -> Self {
        let mut m = Self::zeros(order);
        for i in 0..order {
            m.data[i * order + i] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = d;
        }
        m
    }

    /// Builds a matrix from an upper-triangle generator `f(i, j)`, `i <= j`.
    pub fn from_upper_fn(order: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(order);
        for i in 0..order {
            for j in i..order {
                let v = f(i, j);
                m.data[i * order + j] = v;
                m.data[j * order + i] = v;
            }
        }
        m
    }

    /// Builds a matrix from full row-major storage, replacing it by `(A + Aᵀ) / 2`.
    pub fn from_row_major(order: usize, mut data: Vec<f64>) -> Result<Self> {
        if data.len() != order * order {
            return Err(Error::Dimension(format!(
                "expected {} entries for order {}, got {}",
                order * order,
                order,
                data.len()
            )));
        }
        symmetrize_in_place(order, &mut data);
        Ok(SymmetricMatrix { order, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let order = rows.len();
        let mut data = Vec::with_capacity(order * order);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != order {
                return Err(Error::Dimension(format!(
                    "row {i} has length {}, expected {order}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::from_row_major(order, data)
    }

    /// `scale · v vᵀ`.
    pub fn outer(v: &[f64], scale: f64) -> Self {
        Self::from_upper_fn(v.len(), |i, j| scale * v[i] * v[j])
    }

    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.order + j]
    }

    /// Sets `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.order + j] = v;
        self.data[j * self.order + i] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.order..(i + 1) * self.order]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.order).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.order).map(|i| self.get(i, i)).sum()
    }

    /// Frobenius inner product `⟨A, B⟩ = Σ A_ij B_ij`.
    pub fn inner(&self, other: &SymmetricMatrix) -> f64 {
        debug_assert_eq!(self.order, other.order);
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut m = self.clone();
        m.scale(s);
        m
    }

    /// `self += s · other`.
    pub fn add_scaled(&mut self, s: f64, other: &SymmetricMatrix) {
        debug_assert_eq!(self.order, other.order);
        self.data
            .iter_mut()
            .zip(&other.data)
            .for_each(|(a, b)| *a += s * b);
    }

    /// `a · self + b · other`.
    pub fn lincomb(&self, a: f64, b: f64, other: &SymmetricMatrix) -> Self {
        debug_assert_eq!(self.order, other.order);
        SymmetricMatrix {
            order: self.order,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        }
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.order)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `vᵀ A v`.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        self.mul_vec(v).iter().zip(v).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs_diff(&self, other: &SymmetricMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn symmetrize_in_place(order: usize, data: &mut [f64]) {
    for i in 0..order {
        for j in (i + 1)..order {
            let v = 0.5 * (data[i * order + j] + data[j * order + i]);
            data[i * order + j] = v;
            data[j * order + i] = v;
        }
    }
}

impl fmt::Debug for SymmetricMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SymmetricMatrix({}x{})", self.order, self.order)?;
        for i in 0..self.order {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        Ok(())
    }
}
