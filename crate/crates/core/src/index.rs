//! Kernel/cokernel/index reports shared by every index computation.

use serde::{Deserialize, Serialize};

/// Which computation path produced an [`IndexReport`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndexMethod {
    ProjectionPair,
    SubspaceGeometry,
    DiscretizedBvp,
    OdeShooting,
}

/// Conditioning data attached to an index computation.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct IndexDiagnostics {
    /// Singular values of the restriction map that decided the rank.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub singular_values: Vec<f64>,
    /// Principal-angle cosines of the subspaces whose intersection gave the
    /// kernel.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub principal_cosines: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub condition_number: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndexReport {
    pub ker_dim: usize,
    pub coker_dim: usize,
    pub index: i64,
    pub method: IndexMethod,
    pub diagnostics: IndexDiagnostics,
}

impl IndexReport {
    pub fn new(
        ker_dim: usize,
        coker_dim: usize,
        method: IndexMethod,
        diagnostics: IndexDiagnostics,
    ) -> Self {
        IndexReport {
            ker_dim,
            coker_dim,
            index: ker_dim as i64 - coker_dim as i64,
            method,
            diagnostics,
        }
    }

    /// `(ker_dim, coker_dim, index)`.
    pub fn triple(&self) -> (usize, usize, i64) {
        (self.ker_dim, self.coker_dim, self.index)
    }
}
