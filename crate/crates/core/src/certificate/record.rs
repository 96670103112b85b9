use serde::{Deserialize, Serialize};

use super::EmbeddingCertificate;
use crate::error::{Error, Result};
use crate::graph::MAX_VERTICES;
use crate::perturbation::FormMode;

/// Serialized form of an [`EmbeddingCertificate`]. `map[u]` belongs to
/// vertex `u + 1` of the graph file it was computed for.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CertificateRecord {
    pub mode: FormMode,
    pub lambda1: f64,
    pub multiplicity: usize,
    pub dimension: usize,
    pub constant: f64,
    pub map: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub max_residual: f64,
}

impl CertificateRecord {
    pub fn from_certificate(cert: &EmbeddingCertificate) -> Self {
        CertificateRecord {
            mode: cert.mode,
            lambda1: cert.lambda1,
            multiplicity: cert.multiplicity,
            dimension: cert.dimension(),
            constant: cert.constant,
            map: cert.map.clone(),
            residuals: cert.residuals.clone(),
            max_residual: cert.max_residual(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }

    /// Parses and validates shape and finiteness. Residuals stored in the
    /// record are informational; they are recomputed on verification.
    pub fn from_json(text: &str) -> Result<Self> {
        let rec: CertificateRecord =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if rec.map.is_empty() || rec.map.len() > MAX_VERTICES {
            return Err(Error::Parse(format!(
                "map has {} points, expected 1..={MAX_VERTICES}",
                rec.map.len()
            )));
        }
        if let Some(p) = rec.map.iter().find(|p| p.len() != rec.dimension) {
            return Err(Error::DimensionMismatch {
                expected: rec.dimension,
                got: p.len(),
            });
        }
        let finite = |x: &f64| x.is_finite();
        if !rec.map.iter().flatten().all(finite)
            || !rec.residuals.iter().all(finite)
            || !rec.lambda1.is_finite()
            || !rec.constant.is_finite()
        {
            return Err(Error::NonFinite);
        }
        if !(rec.lambda1 > 0.0) {
            return Err(Error::Parse(format!("lambda1 {} is not positive", rec.lambda1)));
        }
        if !(rec.constant > 0.0) {
            return Err(Error::Parse(format!("constant {} is not positive", rec.constant)));
        }
        Ok(rec)
    }

    pub fn to_certificate(&self) -> EmbeddingCertificate {
        EmbeddingCertificate {
            mode: self.mode,
            lambda1: self.lambda1,
            multiplicity: self.multiplicity,
            constant: self.constant,
            gram: None,
            factor: None,
            map: self.map.clone(),
            residuals: self.residuals.clone(),
            degenerate: self.dimension == 0,
        }
    }
}
