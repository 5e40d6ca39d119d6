//! Log-space special functions, small SPD linear algebra and random streams.

pub mod linalg;
pub mod random;
pub mod special;

pub use linalg::{cholesky, mvt_log_density, CholeskyFactor, DataMatrix, SpdMatrix, StudentT};
pub use random::{categorical_from_log_weights, stream, substream, Stream};
pub use special::{ln_gamma, log_pochhammer, log_sum_exp, KahanSum};
