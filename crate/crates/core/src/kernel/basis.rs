use crate::error::{Error, Result};

/// Kernel family parameters: feature count, monomial degree and the box
/// `[a, b]` the data lives in, padded by `δ` on each side to form the
/// integration domain `Y = [a − δ, b + δ]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TkBasisConfig {
    n_features: usize,
    degree: u32,
    domain_lower: Vec<f64>,
    domain_upper: Vec<f64>,
    padding: Vec<f64>,
}

impl TkBasisConfig {
    pub fn new(
        degree: u32,
        domain_lower: Vec<f64>,
        domain_upper: Vec<f64>,
        padding: Vec<f64>,
    ) -> Result<Self> {
        let n = domain_lower.len();
        if n == 0 {
            return Err(Error::Config("basis needs at least one feature".into()));
        }
        if domain_upper.len() != n || padding.len() != n {
            return Err(Error::Dimension(format!(
                "domain bounds and padding must all have length {n}"
            )));
        }
        for i in 0..n {
            let (a, b, d) = (domain_lower[i], domain_upper[i], padding[i]);
            if !(a.is_finite() && b.is_finite() && d.is_finite()) {
                return Err(Error::Config(format!("non-finite domain in dimension {i}")));
            }
            if a >= b {
                return Err(Error::Config(format!(
                    "domain lower bound {a} must be below upper bound {b} (dimension {i})"
                )));
            }
            if d <= 0.0 {
                return Err(Error::Config(format!(
                    "padding must be positive, got {d} (dimension {i})"
                )));
            }
        }
        Ok(TkBasisConfig {
            n_features: n,
            degree,
            domain_lower,
            domain_upper,
            padding,
        })
    }

    /// Data scaled into the unit cube with the same padding in every dimension.
    pub fn unit_cube(n_features: usize, degree: u32, padding: f64) -> Result<Self> {
        Self::new(
            degree,
            vec![0.0; n_features],
            vec![1.0; n_features],
            vec![padding; n_features],
        )
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn domain_lower(&self) -> &[f64] {
        &self.domain_lower
    }

    pub fn domain_upper(&self) -> &[f64] {
        &self.domain_upper
    }

    pub fn padding(&self) -> &[f64] {
        &self.padding
    }

    /// Lower corner of the integration box, `a − δ`.
    pub fn integration_lower(&self) -> Vec<f64> {
        self.domain_lower
            .iter()
            .zip(&self.padding)
            .map(|(a, d)| a - d)
            .collect()
    }

    /// Upper corner of the integration box, `b + δ`.
    pub fn integration_upper(&self) -> Vec<f64> {
        self.domain_upper
            .iter()
            .zip(&self.padding)
            .map(|(b, d)| b + d)
            .collect()
    }
}

/// One monomial exponent pair: `δ` applies to the data point, `γ` to the
/// integration variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExponentPair {
    pub delta: Vec<u32>,
    pub gamma: Vec<u32>,
}

/// The ordered set of exponent pairs `(δ, γ)` with `‖(δ, γ)‖₁ ≤ d`.
///
/// The order fixes the layout of `P`: pair `i` owns rows `i` and
/// `i + half_size` of the parameter matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExponentTable {
    n_features: usize,
    degree: u32,
    pairs: Vec<ExponentPair>,
}

impl ExponentTable {
    pub fn pairs(&self) -> &[ExponentPair] {
        &self.pairs
    }

    pub fn half_size(&self) -> usize {
        self.pairs.len()
    }

    /// Order of the kernel parameter matrix, `2 · half_size`.
    pub fn n_p(&self) -> usize {
        2 * self.pairs.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// Hex digest of the ordered pair list; stored alongside trained models
    /// so a model can only be loaded against the same basis ordering.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update((self.n_features as u64).to_le_bytes());
        h.update((self.degree as u64).to_le_bytes());
        for p in &self.pairs {
            for e in p.delta.iter().chain(&p.gamma) {
                h.update(e.to_le_bytes());
            }
        }
        h.finalize()
            .iter()
            .take(16)
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Enumerates every `(δ, γ) ∈ ℕⁿ × ℕⁿ` with total degree at most `d`.
///
/// Pairs are ordered by total degree, then lexicographically descending on
/// the concatenated `2n`-vector, so `(1, 0)` precedes `(0, 1)`.
pub fn enumerate_exponents(n: usize, d: u32) -> ExponentTable {
    assert!(n >= 1, "exponent table needs at least one feature");
    let width = 2 * n;
    let mut pairs = Vec::new();
    let mut buf = vec![0u32; width];
    for total in 0..=d {
        compositions(total, 0, &mut buf, &mut |v| {
            pairs.push(ExponentPair {
                delta: v[..n].to_vec(),
                gamma: v[n..].to_vec(),
            })
        });
    }
    ExponentTable {
        n_features: n,
        degree: d,
        pairs,
    }
}

fn compositions(remaining: u32, pos: usize, buf: &mut [u32], emit: &mut impl FnMut(&[u32])) {
    if pos + 1 == buf.len() {
        buf[pos] = remaining;
        emit(buf);
        return;
    }
    for first in (0..=remaining).rev() {
        buf[pos] = first;
        compositions(remaining - first, pos + 1, buf, emit);
    }
}

/// `T(x, y, ζ) = ∏_j (y_j^{ζ_j} − x_j^{ζ_j}) / ζ_j`, the integral of the
/// monomial `z^{ζ−1}` over the box `[x, y]`.
pub fn t_integral(x: &[f64], y: &[f64], zeta: &[u32]) -> Result<f64> {
    if x.len() != y.len() || x.len() != zeta.len() {
        return Err(Error::Dimension(format!(
            "t_integral arguments have lengths {}, {}, {}",
            x.len(),
            y.len(),
            zeta.len()
        )));
    }
    let mut acc = 1.0;
    for ((&xj, &yj), &z) in x.iter().zip(y).zip(zeta) {
        if z == 0 {
            return Err(Error::Config("t_integral exponent must be at least 1".into()));
        }
        let zf = z as f64;
        acc *= yj.powi(z as i32) / zf - xj.powi(z as i32) / zf;
    }
    Ok(acc)
}

/// A configured basis: the domain configuration paired with its exponent table.
#[derive(Clone, Debug)]
pub struct TkBasis {
    config: TkBasisConfig,
    table: ExponentTable,
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// `γ_i + γ_j + 1` for every `(i, j)` in the half table, row-major.
    zeta: Vec<u32>,
    max_zeta: u32,
}

impl TkBasis {
    pub fn new(config: TkBasisConfig) -> Self {
        let table = enumerate_exponents(config.n_features(), config.degree());
        let n = config.n_features();
        let h = table.half_size();
        let mut zeta = Vec::with_capacity(h * h * n);
        for pi in table.pairs() {
            for pj in table.pairs() {
                for k in 0..n {
                    zeta.push(pi.gamma[k] + pj.gamma[k] + 1);
                }
            }
        }
        let max_zeta = zeta.iter().copied().max().unwrap_or(1);
        TkBasis {
            lower: config.integration_lower(),
            upper: config.integration_upper(),
            config,
            table,
            zeta,
            max_zeta,
        }
    }

    pub fn config(&self) -> &TkBasisConfig {
        &self.config
    }

    pub fn table(&self) -> &ExponentTable {
        &self.table
    }

    pub fn n_features(&self) -> usize {
        self.config.n_features()
    }

    pub fn half_size(&self) -> usize {
        self.table.half_size()
    }

    pub fn n_p(&self) -> usize {
        self.table.n_p()
    }

    pub(crate) fn integration_bounds(&self) -> (&[f64], &[f64]) {
        (&self.lower, &self.upper)
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features() {
            return Err(Error::Dimension(format!(
                "point has {} coordinates, basis expects {}",
                x.len(),
                self.n_features()
            )));
        }
        Ok(())
    }

    /// Evaluates a single basis function `G_{i,j}(x, y)` directly from the
    /// closed form (indices are 0-based, `0 ≤ i, j < n_P`).
    ///
    /// With `h = half_size`, rows `< h` carry the `I(z − x)` half of the basis
    /// and rows `≥ h` the complementary `1 − I(z − x)` half.
    pub fn eval_g(&self, i: usize, j: usize, x: &[f64], y: &[f64]) -> Result<f64> {
        let np = self.n_p();
        for idx in [i, j] {
            if idx >= np {
                return Err(Error::IndexOutOfRange {
                    index: idx,
                    limit: np,
                });
            }
        }
        self.check_point(x)?;
        self.check_point(y)?;
        let h = self.half_size();
        let (ii, ji) = (i % h, j % h);
        let pi = &self.table.pairs()[ii];
        let pj = &self.table.pairs()[ji];
        let n = self.n_features();
        let zeta: Vec<u32> = (0..n).map(|k| pi.gamma[k] + pj.gamma[k] + 1).collect();
        let weight = monomial(x, &pi.delta) * monomial(y, &pj.delta);
        let pstar: Vec<f64> = x.iter().zip(y).map(|(a, b)| a.max(*b)).collect();
        let upper = &self.upper;
        let t_p = t_integral(&pstar, upper, &zeta)?;
        let value = match (i < h, j < h) {
            (true, true) => t_p,
            (true, false) => t_integral(x, upper, &zeta)? - t_p,
            (false, true) => t_integral(y, upper, &zeta)? - t_p,
            (false, false) => {
                t_integral(&self.lower, upper, &zeta)?
                    - t_integral(x, upper, &zeta)?
                    - t_integral(y, upper, &zeta)?
                    + t_p
            }
        };
        Ok(weight * value)
    }

    pub fn scratch(&self) -> BasisScratch {
        let n = self.n_features();
        let h = self.half_size();
        let zlen = (self.max_zeta as usize + 1) * n;
        BasisScratch {
            u: vec![0.0; h],
            v: vec![0.0; h],
            tp: vec![0.0; zlen],
            tx: vec![0.0; zlen],
            ty: vec![0.0; zlen],
            ta: vec![0.0; zlen],
        }
    }

    fn prepare(&self, x: &[f64], y: &[f64], s: &mut BasisScratch) {
        let n = self.n_features();
        for (i, p) in self.table.pairs().iter().enumerate() {
            s.u[i] = monomial(x, &p.delta);
            s.v[i] = monomial(y, &p.delta);
        }
        let zmax = self.max_zeta as usize;
        for k in 0..n {
            let (lo, hi) = (self.lower[k], self.upper[k]);
            let p = x[k].max(y[k]);
            let (mut pw_hi, mut pw_lo, mut pw_p, mut pw_x, mut pw_y) =
                (hi, lo, p, x[k], y[k]);
            for z in 1..=zmax {
                let zf = z as f64;
                let b = pw_hi / zf;
                let idx = z * n + k;
                s.tp[idx] = b - pw_p / zf;
                s.tx[idx] = b - pw_x / zf;
                s.ty[idx] = b - pw_y / zf;
                s.ta[idx] = b - pw_lo / zf;
                pw_hi *= hi;
                pw_lo *= lo;
                pw_p *= p;
                pw_x *= x[k];
                pw_y *= y[k];
            }
        }
    }

    /// Writes the full `n_P × n_P` block `G(x, y)` (row-major) into `out`.
    pub fn fill_block(&self, x: &[f64], y: &[f64], s: &mut BasisScratch, out: &mut [f64]) {
        let n = self.n_features();
        let h = self.half_size();
        let np = 2 * h;
        debug_assert_eq!(out.len(), np * np);
        self.prepare(x, y, s);
        for i in 0..h {
            for j in 0..h {
                let zeta = &self.zeta[(i * h + j) * n..(i * h + j + 1) * n];
                let (tp, tx, ty, ta) = products(zeta, n, s);
                let w = s.u[i] * s.v[j];
                out[i * np + j] = w * tp;
                out[i * np + h + j] = w * (tx - tp);
                out[(h + i) * np + j] = w * (ty - tp);
                out[(h + i) * np + h + j] = w * (ta - tx - ty + tp);
            }
        }
    }

    /// `k(x, y) = Σ_{i,j} P_{i,j} G_{i,j}(x, y)` for a full row-major `P`.
    pub fn kernel_value(&self, p: &[f64], x: &[f64], y: &[f64], s: &mut BasisScratch) -> f64 {
        let n = self.n_features();
        let h = self.half_size();
        let np = 2 * h;
        debug_assert_eq!(p.len(), np * np);
        self.prepare(x, y, s);
        let mut acc = 0.0;
        for i in 0..h {
            let row_top = &p[i * np..(i + 1) * np];
            let row_bot = &p[(h + i) * np..(h + i + 1) * np];
            let ui = s.u[i];
            for j in 0..h {
                let zeta = &self.zeta[(i * h + j) * n..(i * h + j + 1) * n];
                let (tp, tx, ty, ta) = products(zeta, n, s);
                let inner = row_top[j] * tp
                    + row_top[h + j] * (tx - tp)
                    + row_bot[j] * (ty - tp)
                    + row_bot[h + j] * (ta - tx - ty + tp);
                acc += ui * s.v[j] * inner;
            }
        }
        acc
    }
}

/// Per-thread working storage for block and kernel evaluation.
#[derive(Clone, Debug)]
pub struct BasisScratch {
    u: Vec<f64>,
    v: Vec<f64>,
    tp: Vec<f64>,
    tx: Vec<f64>,
    ty: Vec<f64>,
    ta: Vec<f64>,
}

#[inline]
fn products(zeta: &[u32], n: usize, s: &BasisScratch) -> (f64, f64, f64, f64) {
    let (mut tp, mut tx, mut ty, mut ta) = (1.0, 1.0, 1.0, 1.0);
    for (k, &z) in zeta.iter().enumerate() {
        let idx = z as usize * n + k;
        tp *= s.tp[idx];
        tx *= s.tx[idx];
        ty *= s.ty[idx];
        ta *= s.ta[idx];
    }
    (tp, tx, ty, ta)
}

pub(crate) fn monomial(x: &[f64], exps: &[u32]) -> f64 {
    x.iter()
        .zip(exps)
        .map(|(v, &e)| v.powi(e as i32))
        .product()
}
