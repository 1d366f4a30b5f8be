//! Bounded similarity kernels with `K(x, x) = 1`.

use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Kernel family. Both produce values in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// `(1 + cos(a, b)) / 2`; parameter-free, undefined for zero vectors.
    CosineShifted,
    /// `exp(-|a - b|^2 / (2 bandwidth^2))`.
    Rbf { bandwidth: f64 },
}

/// Kernel choice plus the diagonal jitter used when assembling Gram
/// matrices of near-duplicate neighborhoods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub jitter: f64,
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec {
            kind: KernelKind::CosineShifted,
            jitter: 1e-8,
        }
    }
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        if let KernelKind::Rbf { bandwidth } = self.kind {
            if !(bandwidth > 0.0) || !bandwidth.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "rbf bandwidth must be positive, got {bandwidth}"
                )));
            }
        }
        if self.jitter < 0.0 || !self.jitter.is_finite() {
            return Err(Error::InvalidInput(format!(
                "jitter must be non-negative, got {}",
                self.jitter
            )));
        }
        Ok(())
    }
}

/// Similarity between two vectors, in `[0, 1]`.
pub fn kernel_eval(spec: &KernelSpec, a: &ArrayView1<f64>, b: &ArrayView1<f64>) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "kernel arguments have dims {} and {}",
            a.len(),
            b.len()
        )));
    }
    match spec.kind {
        KernelKind::CosineShifted => {
            let na = a.dot(a).sqrt();
            let nb = b.dot(b).sqrt();
            if na == 0.0 || nb == 0.0 {
                return Err(Error::Numeric(
                    "cosine_shifted kernel is undefined for zero vectors".into(),
                ));
            }
            let cos = (a.dot(b) / (na * nb)).clamp(-1.0, 1.0);
            Ok((1.0 + cos) / 2.0)
        }
        KernelKind::Rbf { bandwidth } => {
            let mut sq = 0.0;
            for (x, y) in a.iter().zip(b.iter()) {
                let d = x - y;
                sq += d * d;
            }
            Ok((-sq / (2.0 * bandwidth * bandwidth)).exp())
        }
    }
}
