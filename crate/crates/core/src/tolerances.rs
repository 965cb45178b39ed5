//! Numerical thresholds used by the classifiers and detectors.
//!
//! Every threshold lives here so scene files can override them and reports
//! can record exactly which values were in force.

use serde::{Deserialize, Serialize};

/// Relative thresholds; see the field docs for what each one scales against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// `|(X,X)| <= isotropy * |X|^2` classifies a vector as a point.
    pub isotropy: f64,
    /// `|(v,v)| <= lightcone * |v|^2` classifies a direction as lightlike.
    pub lightcone: f64,
    /// `||i| - 1| <= pencil` classifies a pencil as parabolic.
    pub pencil: f64,
    /// Eigenvalues closer than `clustering * ||a||` share a cluster.
    pub clustering: f64,
    /// Normalized third-order residual below which a direction is canal.
    pub canal: f64,
    /// `||a|| <= umbilic * ||lambda||` marks a sample as umbilic.
    pub umbilic: f64,
    /// Relative band around `D = 0` reported as a double singular point.
    pub discriminant: f64,
    /// Smallest/largest singular value ratio counted as a rank drop.
    pub rank_drop: f64,
    /// Residual allowed when verifying frame relations.
    pub frame_residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            isotropy: 1e-9,
            lightcone: 1e-9,
            pencil: 1e-9,
            clustering: 1e-6,
            canal: 1e-4,
            umbilic: 1e-6,
            discriminant: 1e-8,
            rank_drop: 1e-6,
            frame_residual: 1e-8,
        }
    }
}

impl Tolerances {
    /// Names accepted by [`Tolerances::set`].
    pub const NAMES: [&'static str; 9] = [
        "isotropy",
        "lightcone",
        "pencil",
        "clustering",
        "canal",
        "umbilic",
        "discriminant",
        "rank_drop",
        "frame_residual",
    ];

    pub fn set(&mut self, name: &str, value: f64) -> Result<(), String> {
        if !(value.is_finite() && value > 0.0) {
            return Err(format!("tolerance {name} must be positive, got {value}"));
        }
        let slot = match name {
            "isotropy" => &mut self.isotropy,
            "lightcone" => &mut self.lightcone,
            "pencil" => &mut self.pencil,
            "clustering" => &mut self.clustering,
            "canal" => &mut self.canal,
            "umbilic" => &mut self.umbilic,
            "discriminant" => &mut self.discriminant,
            "rank_drop" => &mut self.rank_drop,
            "frame_residual" => &mut self.frame_residual,
            _ => return Err(format!("unknown tolerance {name}")),
        };
        *slot = value;
        Ok(())
    }

    /// Names of fields that are not strictly positive.
    pub fn invalid_fields(&self) -> Vec<&'static str> {
        let vals = [
            self.isotropy,
            self.lightcone,
            self.pencil,
            self.clustering,
            self.canal,
            self.umbilic,
            self.discriminant,
            self.rank_drop,
            self.frame_residual,
        ];
        Self::NAMES
            .iter()
            .zip(vals)
            .filter(|(_, v)| !(v.is_finite() && *v > 0.0))
            .map(|(n, _)| *n)
            .collect()
    }
}
