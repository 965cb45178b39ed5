//! Parametrized hypersurfaces and the built-in surface catalog.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::spline::NaturalCubic;
use crate::taylor::{values, Taylor};

/// A chart `U ⊂ R^{n−1} → R^n` evaluated in Taylor arithmetic.
///
/// Implementations must be pure: the same input always yields the same
/// output, and evaluation may happen from several threads at once.
pub trait Chart: Send + Sync {
    /// Ambient dimension `n`.
    fn dim_n(&self) -> usize;

    fn eval(&self, u: &[Taylor]) -> Vec<Taylor>;

    /// A parameter box on which the chart is an immersion.
    fn domain(&self) -> Vec<(f64, f64)>;

    fn label(&self) -> String;

    fn dim_params(&self) -> usize {
        self.dim_n() - 1
    }

    fn position(&self, u: &[f64]) -> Vec<f64> {
        values(&self.eval(&Taylor::constants(u)))
    }
}

/// `R · S(φ)` with `S^k(φ1..φk) = (cos φk · S^{k−1}, sin φk)` and `S^1 = (cos, sin)`.
pub(crate) fn sphere_point(angles: &[Taylor]) -> Vec<Taylor> {
    match angles.len() {
        0 => panic!("sphere_point needs at least one angle"),
        1 => vec![angles[0].cos(), angles[0].sin()],
        k => {
            let inner = sphere_point(&angles[..k - 1]);
            let c = angles[k - 1].cos();
            let mut out: Vec<Taylor> = inner.iter().map(|x| x * &c).collect();
            out.push(angles[k - 1].sin());
            out
        }
    }
}

/// Round hypersphere of radius `R` about the origin.
///
/// Parameters run from the outermost latitude inwards, which orients the
/// ambient frame so that the normal points to the center in `R^3`.
#[derive(Debug, Clone)]
pub struct Sphere {
    pub dim_n: usize,
    pub radius: f64,
}

impl Chart for Sphere {
    fn dim_n(&self) -> usize {
        self.dim_n
    }

    fn eval(&self, u: &[Taylor]) -> Vec<Taylor> {
        let angles: Vec<Taylor> = u.iter().rev().cloned().collect();
        sphere_point(&angles).iter().map(|x| x * self.radius).collect()
    }

    fn domain(&self) -> Vec<(f64, f64)> {
        let mut d = vec![(-1.2, 1.2); self.dim_n - 1];
        d[self.dim_n - 2] = (-PI, PI);
        d
    }

    fn label(&self) -> String {
        format!("sphere(R={})", self.radius)
    }
}

/// The hyperplane `x_n = 0`.
#[derive(Debug, Clone)]
pub struct Plane {
    pub dim_n: usize,
}

impl Chart for Plane {
    fn dim_n(&self) -> usize {
        self.dim_n
    }

    fn eval(&self, u: &[Taylor]) -> Vec<Taylor> {
        let mut p: Vec<Taylor> = u.to_vec();
        p.push(u[0].zero_like());
        p
    }

    fn domain(&self) -> Vec<(f64, f64)> {
        vec![(-1.0, 1.0); self.dim_n - 1]
    }

    fn label(&self) -> String {
        "plane".into()
    }
}

/// `S^k(R) × R^{n−1−k}`; `k = 1, n = 3` is the round cylinder.
#[derive(Debug, Clone)]
pub struct Cylinder {
    pub dim_n: usize,
    pub sphere_dim: usize,
    pub radius: f64,
}

impl Cylinder {
    pub fn round(radius: f64) -> Cylinder {
        Cylinder {
            dim_n: 3,
            sphere_dim: 1,
            radius,
        }
    }
}

impl Chart for Cylinder {
    fn dim_n(&self) -> usize {
        self.dim_n
    }

    fn eval(&self, u: &[Taylor]) -> Vec<Taylor> {
        let k = self.sphere_dim;
        let mut p: Vec<Taylor> = sphere_point(&u[..k]).iter().map(|x| x * self.radius).collect();
        p.extend(u[k..].iter().cloned());
        p
    }

    fn domain(&self) -> Vec<(f64, f64)> {
        let mut d = vec![(-1.0, 1.0); self.dim_n - 1];
        d[0] = (-PI, PI);
        for item in d.iter_mut().take(self.sphere_dim).skip(1) {
            *item = (-1.2, 1.2);
        }
        d
    }

    fn label(&self) -> String {
        format!("cylinder(R={}, k={})", self.radius, self.sphere_dim)
    }
}

/// Torus of revolution `((R + r cos v) cos u, (R + r cos v) sin u, r sin v)`.
#[derive(Debug, Clone)]
pub struct Torus {
    pub major: f64,
    pub minor: f64,
}

impl Chart for Torus {
    fn dim_n(&self) -> usize {
        3
    }

    fn eval(&self, u: &[Taylor]) -> Vec<Taylor> {
        let ring = &(u[1].cos() * self.minor) + self.major;
        vec![&ring * &u[0].cos(), &ring * &u[0].sin(), u[1].sin() * self.minor]
    }

    fn domain(&self) -> Vec<(f64, f64)> {
        vec![(-PI, PI), (-PI, PI)]
    }

    fn label(&self) -> String {
        format!("torus(R={}, r={})", self.major, self.minor)
    }
}

/// `(a cos v cos u, b cos v sin u, c sin v)`.
#[derive(Debug, Clone)]
pub struct Ellipsoid {
    pub axes: [f64; 3],
}

impl Chart for Ellipsoid {
    fn dim_n(&self) -> usize {
        3
    }

    fn eval(&self, u: &[Taylor]) -> Vec<Taylor> {
        let cv = u[1].cos();
        vec![
            &cv * &u[0].cos() * self.axes[0],
            &cv * &u[0].sin() * self.axes[1],
            u[1].sin() * self.axes[2],
        ]
    }

    fn domain(&self) -> Vec<(f64, f64)> {
        vec![(-PI, PI), (-1.3, 1.3)]
    }

    fn label(&self) -> String {
        format!("ellipsoid({}, {}, {})", self.axes[0], self.axes[1], self.axes[2])
    }
}

/// Tube of radius `r` about the circle of radius `R` in the `x1 x2` plane of `R^4`.
#[derive(Debug, Clone)]
pub struct CircleTube4 {
    pub major: f64,
    pub minor: f64,
}

impl Chart for CircleTube4 {
    fn dim_n(&self) -> usize {
        4
    }

    fn eval(&self, u: &[Taylor]) -> Vec<Taylor> {
        // u = (t, φ, ψ)
        let (ct, st) = (u[0].cos(), u[0].sin());
        let fibre = sphere_point(&u[1..3]);
        let radial = &(&fibre[0] * self.minor) + self.major;
        vec![
            &radial * &ct,
            &radial * &st,
            &fibre[1] * self.minor,
            &fibre[2] * self.minor,
        ]
    }

    fn domain(&self) -> Vec<(f64, f64)> {
        vec![(-PI, PI), (-PI, PI), (-1.2, 1.2)]
    }

    fn label(&self) -> String {
        format!("circle-tube-4(R={}, r={})", self.major, self.minor)
    }
}

/// Graph `z = f(x, y)` of a natural bicubic spline through grid samples.
#[derive(Debug, Clone)]
pub struct HeightGraph {
    xs: NaturalCubic,
    ys: NaturalCubic,
    // heights[j][i] = f(xs[i], ys[j]); row moments along x per row j
    rows: Vec<Vec<Taylor>>,
    row_moments: Vec<Vec<Taylor>>,
}

impl HeightGraph {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, heights: Vec<Vec<f64>>) -> Result<HeightGraph> {
        let sx = NaturalCubic::new(xs)?;
        let sy = NaturalCubic::new(ys)?;
        if heights.len() != sy.knots().len()
            || heights.iter().any(|r| r.len() != sx.knots().len())
        {
            return Err(GeomError::Shape(format!(
                "heights must be {} rows of {} samples",
                sy.knots().len(),
                sx.knots().len()
            )));
        }
        if heights.iter().flatten().any(|h| !h.is_finite()) {
            return Err(GeomError::Domain("non-finite height sample".into()));
        }
        let rows: Vec<Vec<Taylor>> = heights.iter().map(|r| Taylor::constants(r)).collect();
        let row_moments = rows.iter().map(|r| sx.moments(r)).collect();
        Ok(HeightGraph {
            xs: sx,
            ys: sy,
            rows,
            row_moments,
        })
    }
}

impl Chart for HeightGraph {
    fn dim_n(&self) -> usize {
        3
    }

    fn eval(&self, u: &[Taylor]) -> Vec<Taylor> {
        let column: Vec<Taylor> = self
            .rows
            .iter()
            .zip(&self.row_moments)
            .map(|(r, m)| self.xs.eval(r, m, &u[0]))
            .collect();
        let moments = self.ys.moments(&column);
        let z = self.ys.eval(&column, &moments, &u[1]);
        vec![u[0].clone(), u[1].clone(), z]
    }

    fn domain(&self) -> Vec<(f64, f64)> {
        vec![self.xs.range(), self.ys.range()]
    }

    fn label(&self) -> String {
        "graph".into()
    }
}

/// Catalog entry as written in scene files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SurfaceSpec {
    Sphere {
        radius: f64,
        #[serde(default = "three")]
        dim: usize,
    },
    Plane {
        #[serde(default = "three")]
        dim: usize,
    },
    Cylinder {
        radius: f64,
        #[serde(default = "three")]
        dim: usize,
        #[serde(default = "one")]
        sphere_dim: usize,
    },
    Torus {
        major: f64,
        minor: f64,
    },
    Ellipsoid {
        axes: [f64; 3],
    },
    #[serde(rename = "circle-tube-4")]
    CircleTube4 {
        major: f64,
        minor: f64,
    },
    Graph {
        xs: Vec<f64>,
        ys: Vec<f64>,
        heights: Vec<Vec<f64>>,
    },
}

fn three() -> usize {
    3
}

fn one() -> usize {
    1
}

/// Names understood by [`SurfaceSpec`].
pub const SURFACE_CATALOG: [(&str, &str); 7] = [
    ("sphere", "radius, dim = 3: round hypersphere"),
    ("plane", "dim = 3: hyperplane x_n = 0"),
    ("cylinder", "radius, dim = 3, sphere_dim = 1: S^k(R) x R^(n-1-k)"),
    ("torus", "major, minor: torus of revolution in R^3"),
    ("ellipsoid", "axes = [a, b, c]"),
    ("circle-tube-4", "major, minor: tube about a circle in R^4"),
    ("graph", "xs, ys, heights[row][col]: bicubic height field"),
];

impl SurfaceSpec {
    /// Field-level problems, empty when the entry is buildable.
    pub fn diagnostics(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut positive = |field: &str, v: f64| {
            if !(v.is_finite() && v > 0.0) {
                out.push((field.to_string(), format!("must be positive, got {v}")));
            }
        };
        match self {
            SurfaceSpec::Sphere { radius, dim } => {
                positive("radius", *radius);
                if *dim < 2 {
                    out.push(("dim".into(), format!("must be at least 2, got {dim}")));
                }
            }
            SurfaceSpec::Plane { dim } => {
                if *dim < 2 {
                    out.push(("dim".into(), format!("must be at least 2, got {dim}")));
                }
            }
            SurfaceSpec::Cylinder {
                radius,
                dim,
                sphere_dim,
            } => {
                positive("radius", *radius);
                if *sphere_dim < 1 || *sphere_dim + 1 >= *dim {
                    out.push((
                        "sphere_dim".into(),
                        format!("must satisfy 1 <= k <= n - 2, got k = {sphere_dim}, n = {dim}"),
                    ));
                }
            }
            SurfaceSpec::Torus { major, minor } | SurfaceSpec::CircleTube4 { major, minor } => {
                positive("major", *major);
                positive("minor", *minor);
                if minor >= major {
                    out.push(("minor".into(), "must be smaller than major".into()));
                }
            }
            SurfaceSpec::Ellipsoid { axes } => {
                for (k, a) in axes.iter().enumerate() {
                    positive(&format!("axes[{k}]"), *a);
                }
            }
            SurfaceSpec::Graph { xs, ys, heights } => {
                if let Err(e) = HeightGraph::new(xs.clone(), ys.clone(), heights.clone()) {
                    out.push(("heights".into(), e.to_string()));
                }
            }
        }
        out
    }

    pub fn build(&self) -> Result<Arc<dyn Chart>> {
        if let Some((field, msg)) = self.diagnostics().into_iter().next() {
            return Err(GeomError::Domain(format!("{field}: {msg}")));
        }
        Ok(match self {
            SurfaceSpec::Sphere { radius, dim } => Arc::new(Sphere {
                dim_n: *dim,
                radius: *radius,
            }),
            SurfaceSpec::Plane { dim } => Arc::new(Plane { dim_n: *dim }),
            SurfaceSpec::Cylinder {
                radius,
                dim,
                sphere_dim,
            } => Arc::new(Cylinder {
                dim_n: *dim,
                sphere_dim: *sphere_dim,
                radius: *radius,
            }),
            SurfaceSpec::Torus { major, minor } => Arc::new(Torus {
                major: *major,
                minor: *minor,
            }),
            SurfaceSpec::Ellipsoid { axes } => Arc::new(Ellipsoid { axes: *axes }),
            SurfaceSpec::CircleTube4 { major, minor } => Arc::new(CircleTube4 {
                major: *major,
                minor: *minor,
            }),
            SurfaceSpec::Graph { xs, ys, heights } => {
                Arc::new(HeightGraph::new(xs.clone(), ys.clone(), heights.clone())?)
            }
        })
    }
}

/// Evenly spaced interior grid over a parameter box, `counts[i]` points per axis.
///
/// Periodic-looking boxes (width close to 2π) are sampled half-open so the
/// seam is not visited twice.
pub fn parameter_grid(domain: &[(f64, f64)], counts: &[usize]) -> Vec<Vec<f64>> {
    assert_eq!(domain.len(), counts.len());
    let axes: Vec<Vec<f64>> = domain
        .iter()
        .zip(counts)
        .map(|(&(lo, hi), &k)| {
            let periodic = ((hi - lo) - 2.0 * PI).abs() < 1e-9;
            (0..k)
                .map(|i| {
                    if periodic {
                        lo + (hi - lo) * (i as f64) / (k as f64)
                    } else if k == 1 {
                        0.5 * (lo + hi)
                    } else {
                        lo + (hi - lo) * (i as f64 + 0.5) / (k as f64)
                    }
                })
                .collect()
        })
        .collect();
    let mut out = vec![Vec::new()];
    for axis in &axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&x| {
                    let mut p = prefix.clone();
                    p.push(x);
                    p
                })
            })
            .collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_position() {
        let t = Torus {
            major: 2.0,
            minor: 1.0,
        };
        let p = t.position(&[0.0, 0.0]);
        assert_eq!(p, vec![3.0, 0.0, 0.0]);
    }

    #[test]
    fn sphere_points_have_radius() {
        for n in 2..6 {
            let s = Sphere {
                dim_n: n,
                radius: 2.5,
            };
            let u: Vec<f64> = (0..n - 1).map(|k| 0.3 + 0.1 * k as f64).collect();
            let p = s.position(&u);
            let r = p.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((r - 2.5).abs() < 1e-14);
        }
    }

    #[test]
    fn graph_interpolates_samples() {
        let xs = vec![0.0, 1.0, 2.0, 3.0];
        let ys = vec![0.0, 0.5, 1.0];
        let heights: Vec<Vec<f64>> = ys
            .iter()
            .map(|y| xs.iter().map(|x| x * 0.5 + y * y).collect())
            .collect();
        let g = HeightGraph::new(xs, ys, heights).unwrap();
        let p = g.position(&[2.0, 0.5]);
        assert!((p[2] - 1.25).abs() < 1e-13);
        assert!(HeightGraph::new(vec![0.0, 1.0], vec![0.0, 1.0], vec![vec![0.0]]).is_err());
    }

    #[test]
    fn spec_diagnostics() {
        let bad = SurfaceSpec::Torus {
            major: 1.0,
            minor: -1.0,
        };
        assert!(bad.diagnostics().iter().any(|(f, _)| f == "minor"));
        assert!(bad.build().is_err());
        let spec: SurfaceSpec =
            serde_json::from_str(r#"{"kind":"torus","major":2,"minor":1}"#).unwrap();
        assert!(spec.build().is_ok());
        assert!(serde_json::from_str::<SurfaceSpec>(r#"{"kind":"klein-bottle"}"#).is_err());
    }

    #[test]
    fn grid_shapes() {
        let g = parameter_grid(&[(-PI, PI), (0.0, 1.0)], &[4, 3]);
        assert_eq!(g.len(), 12);
        assert_eq!(g[0], vec![-PI, 1.0 / 6.0]);
    }
}
