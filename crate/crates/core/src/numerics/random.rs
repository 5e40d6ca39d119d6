use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::numerics::linalg::{factor, CholeskyFactor};
use crate::numerics::special::lse;

/// The random stream used throughout the crate.
pub type Stream = ChaCha8Rng;

/// Stream seeded from a 64-bit seed.
pub fn stream(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent substream `id` of the stream for `seed`.
pub fn substream(seed: u64, id: u64) -> Stream {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(id);
    r
}

pub fn uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>()
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Gamma draw with shape–rate parameterization.
pub fn gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64, rate: f64) -> f64 {
    Gamma::new(shape, 1.0 / rate).expect("positive gamma parameters").sample(rng)
}

pub fn beta<R: Rng + ?Sized>(rng: &mut R, a: f64, b: f64) -> f64 {
    Beta::new(a, b).expect("positive beta parameters").sample(rng)
}

pub fn chi_squared<R: Rng + ?Sized>(rng: &mut R, df: f64) -> f64 {
    2.0 * gamma(rng, 0.5 * df, 1.0)
}

/// Draw from N(mean, L Lᵀ).
pub fn mvn<R: Rng + ?Sized>(rng: &mut R, mean: &[f64], chol: &CholeskyFactor) -> Vec<f64> {
    let z: Vec<f64> = (0..mean.len()).map(|_| standard_normal(rng)).collect();
    chol.mul_vec(&z).iter().zip(mean).map(|(a, b)| a + b).collect()
}

/// Inverse-Wishart(ν, S) draw (E[Σ] = S/(ν−d−1)) via the Bartlett
/// decomposition. `scale_chol` is the Cholesky factor of S. Returns the
/// Cholesky factor of the draw.
pub fn inverse_wishart<R: Rng + ?Sized>(
    rng: &mut R,
    nu: f64,
    scale_chol: &CholeskyFactor,
) -> CholeskyFactor {
    let d = scale_chol.dim();
    // If W ~ Wishart(ν, S⁻¹) then W⁻¹ ~ InvWishart(ν, S). With S = L Lᵀ,
    // S⁻¹ = L⁻ᵀ L⁻¹ and W = L⁻ᵀ A Aᵀ L⁻¹, so W⁻¹ = L (A Aᵀ)⁻¹ Lᵀ.
    let mut a = vec![0.0; d * d];
    for i in 0..d {
        a[i * d + i] = chi_squared(rng, nu - i as f64).sqrt();
        for j in 0..i {
            a[i * d + j] = standard_normal(rng);
        }
    }
    // B = L A⁻ᵀ gives B Bᵀ = L (A Aᵀ)⁻¹ Lᵀ. Columns of A⁻ᵀ solve Aᵀ x = e_j.
    let mut ainv_t = vec![0.0; d * d];
    for j in 0..d {
        let mut x = vec![0.0; d];
        x[j] = 1.0;
        for i in (0..d).rev() {
            let mut s = x[i];
            for k in (i + 1)..d {
                s -= a[k * d + i] * x[k];
            }
            x[i] = s / a[i * d + i];
        }
        for i in 0..d {
            ainv_t[i * d + j] = x[i];
        }
    }
    let mut b = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            b[i * d + j] = (0..d).map(|k| scale_chol.get(i, k) * ainv_t[k * d + j]).sum();
        }
    }
    let mut sigma = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let v: f64 = (0..d).map(|k| b[i * d + k] * b[j * d + k]).sum();
            sigma[i * d + j] = v;
            sigma[j * d + i] = v;
        }
    }
    factor(d, &sigma).expect("inverse-Wishart draw is positive definite")
}

/// Index drawn with probability proportional to exp(w_i).
pub fn categorical_from_log_weights<R: Rng + ?Sized>(w: &[f64], rng: &mut R) -> Result<usize> {
    if w.is_empty() {
        return Err(Error::Empty("categorical needs at least one weight"));
    }
    let total = lse(w);
    if total == f64::NEG_INFINITY || total.is_nan() {
        return Err(Error::ZeroWeights);
    }
    let u = uniform(rng);
    let mut acc = 0.0;
    let mut last = 0;
    for (i, wi) in w.iter().enumerate() {
        if *wi == f64::NEG_INFINITY {
            continue;
        }
        acc += (wi - total).exp();
        last = i;
        if u < acc {
            return Ok(i);
        }
    }
    Ok(last)
}
