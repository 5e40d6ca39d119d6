use crate::error::{Error, Result};
use crate::numerics::special::log_poch;

const LN_PI: f64 = 1.144_729_885_849_400_2;
const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Symmetric positive-definite matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    d: usize,
    data: Vec<f64>,
}

impl SpdMatrix {
    /// Validates symmetry and positive definiteness.
    pub fn new(d: usize, data: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("matrix dimension must be positive".into()));
        }
        if data.len() != d * d {
            return Err(Error::DimensionMismatch { expected: d * d, got: data.len() });
        }
        for i in 0..d {
            for j in 0..i {
                let (a, b) = (data[i * d + j], data[j * d + i]);
                let scale = a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
                if (a - b).abs() > 1e-12 * scale {
                    return Err(Error::InvalidParameter(format!(
                        "matrix not symmetric at ({i},{j}): {a} vs {b}"
                    )));
                }
            }
        }
        factor(d, &data)?;
        Ok(Self { d, data })
    }

    pub fn identity(d: usize) -> Self {
        Self::diagonal(&vec![1.0; d]).expect("identity is SPD")
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        let d = diag.len();
        let mut data = vec![0.0; d * d];
        for (i, v) in diag.iter().enumerate() {
            data[i * d + i] = *v;
        }
        Self::new(d, data)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.d + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.d, self.data.iter().map(|x| x * c).collect())
    }

    pub fn cholesky(&self) -> CholeskyFactor {
        factor(self.d, &self.data).expect("validated at construction")
    }
}

/// Lower-triangular L with L·Lᵀ equal to the factored matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    d: usize,
    l: Vec<f64>,
}

/// Cholesky factorization of an SPD matrix.
pub fn cholesky(m: &SpdMatrix) -> Result<CholeskyFactor> {
    factor(m.d, &m.data)
}

/// Cholesky on a raw row-major buffer; reports the failing pivot index.
pub fn factor(d: usize, a: &[f64]) -> Result<CholeskyFactor> {
    if a.len() != d * d {
        return Err(Error::DimensionMismatch { expected: d * d, got: a.len() });
    }
    let mut l = vec![0.0; d * d];
    for j in 0..d {
        let mut s = a[j * d + j];
        for k in 0..j {
            s -= l[j * d + k] * l[j * d + k];
        }
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j });
        }
        let djj = s.sqrt();
        l[j * d + j] = djj;
        for i in (j + 1)..d {
            let mut s = a[i * d + j];
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k];
            }
            l[i * d + j] = s / djj;
        }
    }
    Ok(CholeskyFactor { d, l })
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.l[i * self.d + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.l
    }

    /// Factor of c²·L·Lᵀ.
    pub fn scaled(&self, c: f64) -> Self {
        Self { d: self.d, l: self.l.iter().map(|v| v * c).collect() }
    }

    /// log det of L·Lᵀ.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.d).map(|i| self.l[i * self.d + i].ln()).sum::<f64>()
    }

    /// Solves L x = b in place.
    pub fn forward_solve(&self, b: &mut [f64]) {
        let d = self.d;
        for i in 0..d {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[i * d + k] * b[k];
            }
            b[i] = s / self.l[i * d + i];
        }
    }

    /// Solves Lᵀ x = b in place.
    pub fn backward_solve(&self, b: &mut [f64]) {
        let d = self.d;
        for i in (0..d).rev() {
            let mut s = b[i];
            for k in (i + 1)..d {
                s -= self.l[k * d + i] * b[k];
            }
            b[i] = s / self.l[i * d + i];
        }
    }

    /// (y - loc)ᵀ (L Lᵀ)⁻¹ (y - loc).
    pub fn mahalanobis(&self, y: &[f64], loc: &[f64]) -> f64 {
        let mut z: Vec<f64> = y.iter().zip(loc).map(|(a, b)| a - b).collect();
        self.forward_solve(&mut z);
        z.iter().map(|v| v * v).sum()
    }

    /// L·v.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let d = self.d;
        (0..d)
            .map(|i| (0..=i).map(|k| self.l[i * d + k] * v[k]).sum())
            .collect()
    }

    /// L·Lᵀ as a row-major buffer.
    pub fn reconstruct(&self) -> Vec<f64> {
        let d = self.d;
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                let m = i.min(j);
                out[i * d + j] = (0..=m).map(|k| self.l[i * d + k] * self.l[j * d + k]).sum();
            }
        }
        out
    }
}

/// Multivariate Student-t with a pre-factored scale matrix.
#[derive(Debug, Clone)]
pub struct StudentT {
    df: f64,
    loc: Vec<f64>,
    chol: CholeskyFactor,
    log_norm: f64,
}

impl StudentT {
    pub fn new(df: f64, loc: Vec<f64>, scale: &SpdMatrix) -> Result<Self> {
        if !(df > 0.0) {
            return Err(Error::InvalidParameter(format!("degrees of freedom must be positive, got {df}")));
        }
        if loc.len() != scale.dim() {
            return Err(Error::DimensionMismatch { expected: scale.dim(), got: loc.len() });
        }
        Ok(Self::from_factor(df, loc, scale.cholesky()))
    }

    pub(crate) fn from_factor(df: f64, loc: Vec<f64>, chol: CholeskyFactor) -> Self {
        let d = loc.len() as f64;
        let log_norm = log_poch(0.5 * df, 0.5 * d)
            - 0.5 * d * (df.ln() + LN_PI)
            - 0.5 * chol.log_det();
        Self { df, loc, chol, log_norm }
    }

    pub fn log_density(&self, y: &[f64]) -> f64 {
        let d = self.loc.len() as f64;
        let q = self.chol.mahalanobis(y, &self.loc);
        self.log_norm - 0.5 * (self.df + d) * (q / self.df).ln_1p()
    }
}

/// log density of the multivariate Student-t at `y`.
pub fn mvt_log_density(y: &[f64], df: f64, loc: &[f64], scale: &SpdMatrix) -> Result<f64> {
    if y.len() != scale.dim() {
        return Err(Error::DimensionMismatch { expected: scale.dim(), got: y.len() });
    }
    Ok(StudentT::new(df, loc.to_vec(), scale)?.log_density(y))
}

/// log density of N(mean, L Lᵀ) at `y`.
pub fn mvn_log_density(y: &[f64], mean: &[f64], chol: &CholeskyFactor) -> f64 {
    let d = y.len() as f64;
    -0.5 * (d * LN_2PI + chol.log_det() + chol.mahalanobis(y, mean))
}

/// Dense row-major n×d data matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl DataMatrix {
    pub fn new(n: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * d {
            return Err(Error::DimensionMismatch { expected: n * d, got: data.len() });
        }
        Ok(Self { n, d, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map(Vec::len).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * d);
        for r in rows {
            if r.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: r.len() });
            }
            data.extend_from_slice(r);
        }
        Ok(Self { n: rows.len(), d, data })
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn ncols(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.d.max(1)).take(self.n)
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.d];
        for r in self.rows() {
            for (a, b) in m.iter_mut().zip(r) {
                *a += b;
            }
        }
        m.iter().map(|v| v / self.n as f64).collect()
    }

    /// Unbiased per-column sample variances.
    pub fn column_variances(&self) -> Vec<f64> {
        let mean = self.column_means();
        let mut v = vec![0.0; self.d];
        for r in self.rows() {
            for j in 0..self.d {
                v[j] += (r[j] - mean[j]).powi(2);
            }
        }
        let denom = (self.n.max(2) - 1) as f64;
        v.iter().map(|x| x / denom).collect()
    }
}
