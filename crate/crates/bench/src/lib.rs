//! Fixtures shared by the benchmarks.

use std::sync::Arc;

use canal_core::family::{CircleFamily, SphereFamily};
use canal_core::surfaces::Torus;

pub fn torus() -> Torus {
    Torus { major: 2.0, minor: 1.0 }
}

/// Spindle torus: every characteristic circle carries two singular points.
pub fn spindle() -> Arc<dyn SphereFamily> {
    Arc::new(CircleFamily {
        dim_n: 3,
        major: 1.0,
        radius: 1.5,
    })
}

pub fn thin_tube() -> Arc<dyn SphereFamily> {
    Arc::new(CircleFamily {
        dim_n: 3,
        major: 2.0,
        radius: 0.5,
    })
}
