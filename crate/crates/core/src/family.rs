//! Sphere families `t ↦ (c(t), ρ(t))` and the family catalog.
//!
//! Families report first derivatives of center and radius in closed form so
//! that envelope charts, which depend on `∂c`, still get exact third-order jets
//! from Taylor arithmetic.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::spline::NaturalCubic;
use crate::surfaces::sphere_point;
use crate::taylor::Taylor;

/// Center, radius and their first parameter derivatives at one parameter.
#[derive(Debug, Clone)]
pub struct FamilyPoint {
    pub center: Vec<Taylor>,
    pub radius: Taylor,
    /// `center_grad[p][k]` = ∂c_k / ∂t^p.
    pub center_grad: Vec<Vec<Taylor>>,
    pub radius_grad: Vec<Taylor>,
}

/// An `r`-parameter family of hyperspheres of `R^n`.
pub trait SphereFamily: Send + Sync {
    fn dim_n(&self) -> usize;

    /// Number of parameters `r`.
    fn rank(&self) -> usize;

    fn eval(&self, t: &[Taylor]) -> FamilyPoint;

    fn domain(&self) -> Vec<(f64, f64)>;

    fn label(&self) -> String;

    /// Parameters that wrap around (closed families).
    fn periodic(&self) -> Vec<bool> {
        vec![false; self.rank()]
    }

    /// Dimension `m = n − r − 1` of the characteristic spheres.
    fn char_dim(&self) -> usize {
        self.dim_n() - self.rank() - 1
    }

    fn center_radius(&self, t: &[f64]) -> (Vec<f64>, f64) {
        let fp = self.eval(&Taylor::constants(t));
        (crate::taylor::values(&fp.center), fp.radius.value())
    }
}

fn zero_like(t: &Taylor) -> Taylor {
    t.zero_like()
}

/// Tube family about the circle of radius `major` in the `x1 x2` plane of `R^n`.
#[derive(Debug, Clone)]
pub struct CircleFamily {
    pub dim_n: usize,
    pub major: f64,
    pub radius: f64,
}

impl SphereFamily for CircleFamily {
    fn dim_n(&self) -> usize {
        self.dim_n
    }

    fn rank(&self) -> usize {
        1
    }

    fn eval(&self, t: &[Taylor]) -> FamilyPoint {
        let (c, s) = (t[0].cos(), t[0].sin());
        let z = zero_like(&t[0]);
        let mut center = vec![&c * self.major, &s * self.major];
        let mut grad = vec![&s * -self.major, &c * self.major];
        for _ in 2..self.dim_n {
            center.push(z.clone());
            grad.push(z.clone());
        }
        FamilyPoint {
            center,
            radius: z.cst(self.radius),
            center_grad: vec![grad],
            radius_grad: vec![z],
        }
    }

    fn domain(&self) -> Vec<(f64, f64)> {
        vec![(-PI, PI)]
    }

    fn label(&self) -> String {
        format!("circle-family(n={}, R={}, rho={})", self.dim_n, self.major, self.radius)
    }

    fn periodic(&self) -> Vec<bool> {
        vec![true]
    }
}

/// `c(t) = (speed t, 0, .., 0)`, `ρ(t) = radius + slope t`.
#[derive(Debug, Clone)]
pub struct LineFamily {
    pub dim_n: usize,
    pub speed: f64,
    pub radius: f64,
    pub slope: f64,
    pub range: (f64, f64),
}

impl SphereFamily for LineFamily {
    fn dim_n(&self) -> usize {
        self.dim_n
    }

    fn rank(&self) -> usize {
        1
    }

    fn eval(&self, t: &[Taylor]) -> FamilyPoint {
        let z = zero_like(&t[0]);
        let mut center = vec![&t[0] * self.speed];
        let mut grad = vec![z.cst(self.speed)];
        for _ in 1..self.dim_n {
            center.push(z.clone());
            grad.push(z.clone());
        }
        FamilyPoint {
            center,
            radius: &t[0] * self.slope + self.radius,
            center_grad: vec![grad],
            radius_grad: vec![z.cst(self.slope)],
        }
    }

    fn domain(&self) -> Vec<(f64, f64)> {
        vec![self.range]
    }

    fn label(&self) -> String {
        format!(
            "line-family(speed={}, rho={} + {} t)",
            self.speed, self.radius, self.slope
        )
    }
}

/// Tube about the helix `(a cos t, a sin t, b t)`.
#[derive(Debug, Clone)]
pub struct HelixFamily {
    pub helix_radius: f64,
    pub pitch: f64,
    pub radius: f64,
    pub range: (f64, f64),
}

impl SphereFamily for HelixFamily {
    fn dim_n(&self) -> usize {
        3
    }

    fn rank(&self) -> usize {
        1
    }

    fn eval(&self, t: &[Taylor]) -> FamilyPoint {
        let (c, s) = (t[0].cos(), t[0].sin());
        let z = zero_like(&t[0]);
        let a = self.helix_radius;
        FamilyPoint {
            center: vec![&c * a, &s * a, &t[0] * self.pitch],
            radius: z.cst(self.radius),
            center_grad: vec![vec![&s * -a, &c * a, z.cst(self.pitch)]],
            radius_grad: vec![z],
        }
    }

    fn domain(&self) -> Vec<(f64, f64)> {
        vec![self.range]
    }

    fn label(&self) -> String {
        format!(
            "helix-family(a={}, b={}, rho={})",
            self.helix_radius, self.pitch, self.radius
        )
    }
}

/// Two-parameter family of spheres centered on a round 2-sphere in `R^4`.
/// Its envelope carries circles as characteristics.
#[derive(Debug, Clone)]
pub struct SphereOrbitFamily {
    pub major: f64,
    pub radius: f64,
}

impl SphereFamily for SphereOrbitFamily {
    fn dim_n(&self) -> usize {
        4
    }

    fn rank(&self) -> usize {
        2
    }

    fn eval(&self, t: &[Taylor]) -> FamilyPoint {
        let (c1, s1) = (t[0].cos(), t[0].sin());
        let (c2, s2) = (t[1].cos(), t[1].sin());
        let z = zero_like(&t[0]);
        let r = self.major;
        let mut center: Vec<Taylor> = sphere_point(&t[..2]).iter().map(|x| x * r).collect();
        center.push(z.clone());
        let d1 = vec![&c2 * &s1 * -r, &c2 * &c1 * r, z.clone(), z.clone()];
        let d2 = vec![&s2 * &c1 * -r, &s2 * &s1 * -r, &c2 * r, z.clone()];
        FamilyPoint {
            center,
            radius: z.cst(self.radius),
            center_grad: vec![d1, d2],
            radius_grad: vec![z.clone(), z],
        }
    }

    fn domain(&self) -> Vec<(f64, f64)> {
        vec![(-PI, PI), (-1.2, 1.2)]
    }

    fn label(&self) -> String {
        format!("sphere-orbit-family(R={}, rho={})", self.major, self.radius)
    }

    fn periodic(&self) -> Vec<bool> {
        vec![true, false]
    }
}

/// `a0 + Σ_j (a_j cos(j t) + b_j sin(j t))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierSeries {
    pub constant: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl FourierSeries {
    pub fn constant(value: f64) -> FourierSeries {
        FourierSeries {
            constant: value,
            cos: Vec::new(),
            sin: Vec::new(),
        }
    }

    fn eval(&self, t: &Taylor) -> (Taylor, Taylor) {
        let mut v = t.cst(self.constant);
        let mut d = t.zero_like();
        let terms = self.cos.len().max(self.sin.len());
        for j in 1..=terms {
            let jf = j as f64;
            let arg = t * jf;
            let (c, s) = (arg.cos(), arg.sin());
            let a = self.cos.get(j - 1).copied().unwrap_or(0.0);
            let b = self.sin.get(j - 1).copied().unwrap_or(0.0);
            v += &(&c * a + &s * b);
            d += &(&c * (b * jf) - &s * (a * jf));
        }
        (v, d)
    }

    /// Exact value and derivative at a plain number.
    pub fn value(&self, t: f64) -> (f64, f64) {
        let (v, d) = self.eval(&Taylor::scalar(t));
        (v.value(), d.value())
    }
}

/// One-parameter family with trigonometric-polynomial center and radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierFamily {
    pub center: Vec<FourierSeries>,
    pub radius: FourierSeries,
    pub range: (f64, f64),
}

impl SphereFamily for FourierFamily {
    fn dim_n(&self) -> usize {
        self.center.len()
    }

    fn rank(&self) -> usize {
        1
    }

    fn eval(&self, t: &[Taylor]) -> FamilyPoint {
        let (center, grad): (Vec<Taylor>, Vec<Taylor>) = self.center.iter().map(|s| s.eval(&t[0])).unzip();
        let (radius, rd) = self.radius.eval(&t[0]);
        FamilyPoint {
            center,
            radius,
            center_grad: vec![grad],
            radius_grad: vec![rd],
        }
    }

    fn domain(&self) -> Vec<(f64, f64)> {
        vec![self.range]
    }

    fn label(&self) -> String {
        format!("fourier-family(n={})", self.center.len())
    }

    fn periodic(&self) -> Vec<bool> {
        vec![(self.range.1 - self.range.0 - 2.0 * PI).abs() < 1e-12]
    }
}

/// Family interpolating sampled `(t_k, c_k, ρ_k)` by natural cubic splines.
#[derive(Debug, Clone)]
pub struct SampledFamily {
    spline: NaturalCubic,
    centers: Vec<Vec<Taylor>>,
    center_moments: Vec<Vec<Taylor>>,
    radii: Vec<Taylor>,
    radius_moments: Vec<Taylor>,
}

impl SampledFamily {
    pub fn new(t: Vec<f64>, centers: Vec<Vec<f64>>, radii: Vec<f64>) -> Result<SampledFamily> {
        if centers.len() != t.len() || radii.len() != t.len() {
            return Err(GeomError::Shape(format!(
                "sampled family has {} parameters, {} centers and {} radii",
                t.len(),
                centers.len(),
                radii.len()
            )));
        }
        let n = centers.first().map(|c| c.len()).unwrap_or(0);
        if n < 3 || centers.iter().any(|c| c.len() != n) {
            return Err(GeomError::Shape("sampled centers must share a dimension of at least 3".into()));
        }
        if let Some(r) = radii.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
            return Err(GeomError::Domain(format!("sampled radius must be positive, got {r}")));
        }
        let spline = NaturalCubic::new(t)?;
        let centers: Vec<Vec<Taylor>> = (0..n)
            .map(|k| centers.iter().map(|c| Taylor::scalar(c[k])).collect())
            .collect();
        let center_moments = centers.iter().map(|v| spline.moments(v)).collect();
        let radii = Taylor::constants(&radii);
        let radius_moments = spline.moments(&radii);
        Ok(SampledFamily {
            spline,
            centers,
            center_moments,
            radii,
            radius_moments,
        })
    }
}

impl SphereFamily for SampledFamily {
    fn dim_n(&self) -> usize {
        self.centers.len()
    }

    fn rank(&self) -> usize {
        1
    }

    fn eval(&self, t: &[Taylor]) -> FamilyPoint {
        let s = &self.spline;
        let center = self
            .centers
            .iter()
            .zip(&self.center_moments)
            .map(|(v, m)| s.eval(v, m, &t[0]))
            .collect();
        let grad = self
            .centers
            .iter()
            .zip(&self.center_moments)
            .map(|(v, m)| s.eval_derivative(v, m, &t[0]))
            .collect();
        FamilyPoint {
            center,
            radius: s.eval(&self.radii, &self.radius_moments, &t[0]),
            center_grad: vec![grad],
            radius_grad: vec![s.eval_derivative(&self.radii, &self.radius_moments, &t[0])],
        }
    }

    fn domain(&self) -> Vec<(f64, f64)> {
        vec![self.spline.range()]
    }

    fn label(&self) -> String {
        format!("sampled-family({} knots)", self.spline.knots().len())
    }
}

/// Scene-file description of a family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FamilySpec {
    /// Spheres of radius `rho` centered on a circle of radius `major` in `R^3`.
    CircleTube { major: f64, rho: f64 },
    /// The same in `R^4`; the envelope has 2-sphere characteristics.
    #[serde(rename = "circle-tube-4")]
    CircleTube4 { major: f64, rho: f64 },
    /// `c = (speed t, 0, 0)`, `ρ = rho + slope t`.
    LineCone {
        #[serde(default = "one")]
        speed: f64,
        #[serde(default)]
        rho: f64,
        slope: f64,
        t_range: (f64, f64),
    },
    /// Constant radius along a line: the round cylinder.
    Cylinder {
        rho: f64,
        #[serde(default = "cylinder_range")]
        t_range: (f64, f64),
    },
    HelixTube {
        helix_radius: f64,
        pitch: f64,
        rho: f64,
        t_range: (f64, f64),
    },
    /// Two-parameter family centered on a 2-sphere of radius `major` in `R^4`.
    #[serde(rename = "sphere-orbit-4")]
    SphereOrbit4 { major: f64, rho: f64 },
    Fourier {
        center: Vec<FourierSeries>,
        radius: FourierSeries,
        #[serde(default = "full_turn")]
        t_range: (f64, f64),
    },
    Sampled {
        t: Vec<f64>,
        centers: Vec<Vec<f64>>,
        radii: Vec<f64>,
    },
}

fn one() -> f64 {
    1.0
}

fn cylinder_range() -> (f64, f64) {
    (-2.0, 2.0)
}

fn full_turn() -> (f64, f64) {
    (-PI, PI)
}

/// Catalog names with a one-line description each.
pub const FAMILY_CATALOG: [(&str, &str); 8] = [
    ("circle-tube", "spheres on a circle in R^3 (torus envelope): major, rho"),
    ("circle-tube-4", "spheres on a circle in R^4: major, rho"),
    ("line-cone", "c = (speed t, 0, 0), rho + slope t: speed, rho, slope, t_range"),
    ("cylinder", "constant radius along a line: rho, t_range"),
    ("helix-tube", "spheres on a helix: helix_radius, pitch, rho, t_range"),
    ("sphere-orbit-4", "two-parameter family on a 2-sphere in R^4: major, rho"),
    ("fourier", "trigonometric center and radius: center[], radius, t_range"),
    ("sampled", "natural cubic spline through (t, centers, radii)"),
];

fn range_ok(r: (f64, f64)) -> bool {
    r.0.is_finite() && r.1.is_finite() && r.0 < r.1
}

impl FamilySpec {
    /// `(field, message)` pairs; empty when the entry is valid.
    pub fn diagnostics(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut positive = |field: &str, v: f64| {
            if !(v > 0.0 && v.is_finite()) {
                out.push((field.to_string(), format!("must be positive, got {v}")));
            }
        };
        match self {
            FamilySpec::CircleTube { major, rho } | FamilySpec::CircleTube4 { major, rho } => {
                positive("major", *major);
                positive("rho", *rho);
            }
            FamilySpec::SphereOrbit4 { major, rho } => {
                positive("major", *major);
                positive("rho", *rho);
                if rho >= major {
                    out.push(("rho".into(), "must be smaller than major".into()));
                }
            }
            FamilySpec::LineCone {
                speed,
                rho,
                slope,
                t_range,
            } => {
                positive("speed", *speed);
                if !range_ok(*t_range) {
                    out.push(("t_range".into(), "must be an increasing finite interval".into()));
                } else {
                    let lo = rho + slope * t_range.0;
                    let hi = rho + slope * t_range.1;
                    if !(lo > 0.0 && hi > 0.0) {
                        out.push(("rho".into(), format!("radius must stay positive, got {lo} .. {hi}")));
                    }
                }
            }
            FamilySpec::Cylinder { rho, t_range } => {
                positive("rho", *rho);
                if !range_ok(*t_range) {
                    out.push(("t_range".into(), "must be an increasing finite interval".into()));
                }
            }
            FamilySpec::HelixTube {
                helix_radius,
                pitch,
                rho,
                t_range,
            } => {
                positive("helix_radius", *helix_radius);
                positive("rho", *rho);
                if !pitch.is_finite() {
                    out.push(("pitch".into(), "must be finite".into()));
                }
                if !range_ok(*t_range) {
                    out.push(("t_range".into(), "must be an increasing finite interval".into()));
                }
            }
            FamilySpec::Fourier {
                center,
                radius,
                t_range,
            } => {
                if center.len() < 3 {
                    out.push(("center".into(), "needs at least 3 coordinates".into()));
                }
                if !range_ok(*t_range) {
                    out.push(("t_range".into(), "must be an increasing finite interval".into()));
                } else {
                    let min = (0..=512)
                        .map(|k| t_range.0 + (t_range.1 - t_range.0) * k as f64 / 512.0)
                        .map(|t| radius.value(t).0)
                        .fold(f64::INFINITY, f64::min);
                    if !(min > 0.0) {
                        out.push(("radius".into(), format!("must stay positive, minimum {min}")));
                    }
                }
            }
            FamilySpec::Sampled { t, centers, radii } => {
                if t.len() < 2 {
                    out.push(("t".into(), "needs at least two samples".into()));
                } else if t.windows(2).any(|w| !(w[1] > w[0])) {
                    out.push(("t".into(), "must be strictly increasing".into()));
                }
                if centers.len() != t.len() {
                    out.push(("centers".into(), format!("expected {} entries, got {}", t.len(), centers.len())));
                } else if centers.iter().any(|c| c.len() != centers[0].len() || c.len() < 3) {
                    out.push(("centers".into(), "entries must share a dimension of at least 3".into()));
                }
                if radii.len() != t.len() {
                    out.push(("radii".into(), format!("expected {} entries, got {}", t.len(), radii.len())));
                }
                if let Some(r) = radii.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
                    out.push(("radii".into(), format!("must be positive, got {r}")));
                }
            }
        }
        out
    }

    pub fn build(&self) -> Result<Arc<dyn SphereFamily>> {
        if let Some((field, msg)) = self.diagnostics().into_iter().next() {
            return Err(GeomError::Domain(format!("{field}: {msg}")));
        }
        Ok(match self.clone() {
            FamilySpec::CircleTube { major, rho } => Arc::new(CircleFamily {
                dim_n: 3,
                major,
                radius: rho,
            }),
            FamilySpec::CircleTube4 { major, rho } => Arc::new(CircleFamily {
                dim_n: 4,
                major,
                radius: rho,
            }),
            FamilySpec::LineCone {
                speed,
                rho,
                slope,
                t_range,
            } => Arc::new(LineFamily {
                dim_n: 3,
                speed,
                radius: rho,
                slope,
                range: t_range,
            }),
            FamilySpec::Cylinder { rho, t_range } => Arc::new(LineFamily {
                dim_n: 3,
                speed: 1.0,
                radius: rho,
                slope: 0.0,
                range: t_range,
            }),
            FamilySpec::HelixTube {
                helix_radius,
                pitch,
                rho,
                t_range,
            } => Arc::new(HelixFamily {
                helix_radius,
                pitch,
                radius: rho,
                range: t_range,
            }),
            FamilySpec::SphereOrbit4 { major, rho } => Arc::new(SphereOrbitFamily { major, radius: rho }),
            FamilySpec::Fourier {
                center,
                radius,
                t_range,
            } => Arc::new(FourierFamily {
                center,
                radius,
                range: t_range,
            }),
            FamilySpec::Sampled { t, centers, radii } => Arc::new(SampledFamily::new(t, centers, radii)?),
        })
    }
}
