//! Polyspherical coordinates on the Darboux quadric model of conformal space.
//!
//! Points, hyperspheres and hyperplanes of `R^n ∪ {∞}` are represented by
//! vectors `(x0, x1..xn, x_{n+1})` of `R^{n+2}` with the Lorentzian form
//!
//! ```text
//! (X, Y) = Σ_k x_k y_k − x0 y_{n+1} − x_{n+1} y0        (k = 1..n)
//! ```
//!
//! Points are isotropic, hyperspheres have positive square. The Euclidean
//! gauge is fixed: the tangential block of the form is the identity.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{GeomError, Result};
use crate::taylor::Taylor;
use crate::tolerances::Tolerances;

/// Element of `R^{n+2}` in polyspherical coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyVector {
    dim_n: usize,
    coords: Vec<f64>,
}

impl PolyVector {
    pub fn new(dim_n: usize, coords: Vec<f64>) -> Result<PolyVector> {
        if dim_n < 2 {
            return Err(GeomError::Domain(format!("ambient dimension {dim_n} < 2")));
        }
        if coords.len() != dim_n + 2 {
            return Err(GeomError::DimensionMismatch {
                expected: dim_n + 2,
                got: coords.len(),
            });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(GeomError::Domain("non-finite coordinate".into()));
        }
        Ok(PolyVector { dim_n, coords })
    }

    /// Infers `n` from the length (`len − 2`).
    pub fn from_coords(coords: Vec<f64>) -> Result<PolyVector> {
        let n = coords.len().checked_sub(2).ok_or(GeomError::DimensionMismatch {
            expected: 4,
            got: coords.len(),
        })?;
        PolyVector::new(n, coords)
    }

    pub fn dim_n(&self) -> usize {
        self.dim_n
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn x0(&self) -> f64 {
        self.coords[0]
    }

    pub fn x_inf(&self) -> f64 {
        self.coords[self.dim_n + 1]
    }

    /// The middle block `(x1..xn)`.
    pub fn spatial(&self) -> &[f64] {
        &self.coords[1..=self.dim_n]
    }

    pub fn euclidean_norm_sq(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum()
    }

    pub fn scaled(&self, k: f64) -> PolyVector {
        PolyVector {
            dim_n: self.dim_n,
            coords: self.coords.iter().map(|c| c * k).collect(),
        }
    }

    /// `self + k * other`.
    pub fn add_scaled(&self, k: f64, other: &PolyVector) -> PolyVector {
        debug_assert_eq!(self.dim_n, other.dim_n);
        PolyVector {
            dim_n: self.dim_n,
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + k * b)
                .collect(),
        }
    }

    pub fn norm_sq(&self) -> f64 {
        form(&self.coords, &self.coords)
    }

    /// The standard basis vector `E_k` of `R^{n+2}`.
    pub fn basis(dim_n: usize, k: usize) -> PolyVector {
        let mut coords = vec![0.0; dim_n + 2];
        coords[k] = 1.0;
        PolyVector { dim_n, coords }
    }
}

impl Serialize for PolyVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.coords.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PolyVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let coords = Vec::<f64>::deserialize(d)?;
        PolyVector::from_coords(coords).map_err(serde::de::Error::custom)
    }
}

/// The fundamental form on raw coordinate slices of equal length.
pub fn form(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let last = x.len() - 1;
    let mid: f64 = x[1..last].iter().zip(&y[1..last]).map(|(a, b)| a * b).sum();
    mid - x[0] * y[last] - x[last] * y[0]
}

/// The fundamental form on Taylor-valued coordinates.
pub fn form_taylor(x: &[Taylor], y: &[Taylor]) -> Taylor {
    let last = x.len() - 1;
    let mut acc = -(&x[0] * &y[last]) - &x[last] * &y[0];
    for k in 1..last {
        acc += &(&x[k] * &y[k]);
    }
    acc
}

pub fn scalar_product(x: &PolyVector, y: &PolyVector) -> Result<f64> {
    if x.dim_n != y.dim_n {
        return Err(GeomError::DimensionMismatch {
            expected: x.dim_n,
            got: y.dim_n,
        });
    }
    Ok(form(&x.coords, &y.coords))
}

/// Gram matrix of the form on a list of vectors of one dimension.
pub fn gram(vectors: &[PolyVector]) -> nalgebra::DMatrix<f64> {
    let k = vectors.len();
    nalgebra::DMatrix::from_fn(k, k, |i, j| form(&vectors[i].coords, &vectors[j].coords))
}

/// `(1, p, |p|^2 / 2)`.
pub fn lift_point(p: &[f64]) -> PolyVector {
    let mut coords = Vec::with_capacity(p.len() + 2);
    coords.push(1.0);
    coords.extend_from_slice(p);
    coords.push(p.iter().map(|x| x * x).sum::<f64>() / 2.0);
    PolyVector {
        dim_n: p.len(),
        coords,
    }
}

/// `(1/ρ) (1, c, (|c|^2 − ρ^2) / 2)`, normalized to `(X,X) = 1`.
pub fn lift_sphere(center: &[f64], radius: f64) -> Result<PolyVector> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(GeomError::Domain(format!("sphere radius must be positive, got {radius}")));
    }
    if center.len() < 2 {
        return Err(GeomError::Domain(format!("ambient dimension {} < 2", center.len())));
    }
    let c2: f64 = center.iter().map(|x| x * x).sum();
    let inv = 1.0 / radius;
    let mut coords = Vec::with_capacity(center.len() + 2);
    coords.push(inv);
    coords.extend(center.iter().map(|x| x * inv));
    coords.push((c2 - radius * radius) / 2.0 * inv);
    PolyVector::new(center.len(), coords)
}

/// Hyperplane `{p : p·ν = d}` as `(0, ν, d)`.
pub fn lift_plane(normal: &[f64], offset: f64) -> Result<PolyVector> {
    let len = normal.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (len - 1.0).abs() > 1e-6 {
        return Err(GeomError::Domain(format!("plane normal has length {len}, expected 1")));
    }
    let mut coords = Vec::with_capacity(normal.len() + 2);
    coords.push(0.0);
    coords.extend_from_slice(normal);
    coords.push(offset);
    PolyVector::new(normal.len(), coords)
}

/// Taylor-valued sphere lift used when differentiating sphere families.
pub fn lift_sphere_taylor(center: &[Taylor], radius: &Taylor) -> Vec<Taylor> {
    let inv = radius.recip();
    let c2 = crate::taylor::dot(center, center);
    let mut coords = Vec::with_capacity(center.len() + 2);
    coords.push(inv.clone());
    coords.extend(center.iter().map(|x| x * &inv));
    coords.push((c2 - radius.square()) * 0.5 * &inv);
    coords
}

pub fn lift_point_taylor(p: &[Taylor]) -> Vec<Taylor> {
    let mut coords = Vec::with_capacity(p.len() + 2);
    coords.push(p[0].cst(1.0));
    coords.extend(p.iter().cloned());
    coords.push(crate::taylor::dot(p, p) * 0.5);
    coords
}

/// Geometric carrier recovered from a polyspherical vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Carrier {
    Sphere { center: Vec<f64>, radius: f64 },
    Plane { normal: Vec<f64>, offset: f64 },
    Point { position: Vec<f64> },
    /// The isotropic vector `(0, .., 0, 1)`.
    PointAtInfinity,
    /// Timelike vector: an imaginary sphere with no real points.
    NoRealCarrier,
}

/// Inverse of the lifts. Orientation is dropped: `X` and `−X` give the same carrier.
pub fn drop_sphere(x: &PolyVector, tol: &Tolerances) -> Result<Carrier> {
    let scale = x.euclidean_norm_sq();
    if scale == 0.0 {
        return Err(GeomError::Domain("zero vector has no carrier".into()));
    }
    let q = x.norm_sq();
    let n = x.dim_n;
    if q.abs() <= tol.isotropy * scale {
        if x.x0().abs() <= tol.isotropy * scale.sqrt() {
            return Ok(Carrier::PointAtInfinity);
        }
        let position = x.spatial().iter().map(|v| v / x.x0()).collect();
        return Ok(Carrier::Point { position });
    }
    if q < 0.0 {
        return Ok(Carrier::NoRealCarrier);
    }
    let mut unit = x.scaled(1.0 / q.sqrt());
    if unit.x0() < 0.0 || (unit.x0() == 0.0 && unit.x_inf() < 0.0) {
        unit = unit.scaled(-1.0);
    }
    if unit.x0().abs() <= tol.isotropy * unit.euclidean_norm_sq().sqrt() {
        let normal: Vec<f64> = unit.spatial().to_vec();
        let len = normal.iter().map(|v| v * v).sum::<f64>().sqrt();
        return Ok(Carrier::Plane {
            normal: normal.iter().map(|v| v / len).collect(),
            offset: unit.coords[n + 1] / len,
        });
    }
    let x0 = unit.x0();
    Ok(Carrier::Sphere {
        center: unit.spatial().iter().map(|v| v / x0).collect(),
        radius: 1.0 / x0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PencilKind {
    Elliptic,
    Hyperbolic,
    Parabolic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PencilClass {
    pub kind: PencilKind,
    /// Scalar product of the two normalized hyperspheres.
    pub inversive_value: f64,
}

/// Classifies the pencil spanned by two hyperspheres.
///
/// Elliptic pencils share a real (n−2)-sphere, hyperbolic ones contain two
/// point-spheres, parabolic ones consist of mutually tangent spheres.
pub fn classify_pencil(x: &PolyVector, y: &PolyVector, tol: &Tolerances) -> Result<PencilClass> {
    scalar_product(x, y)?;
    for v in [x, y] {
        if v.norm_sq() <= tol.isotropy * v.euclidean_norm_sq() {
            return Err(GeomError::Domain(
                "pencil members must be hyperspheres ((X,X) > 0)".into(),
            ));
        }
    }
    // proportional inputs span no pencil
    let (xn, yn) = (x.euclidean_norm_sq().sqrt(), y.euclidean_norm_sq().sqrt());
    let cos = x.coords.iter().zip(&y.coords).map(|(a, b)| a * b).sum::<f64>() / (xn * yn);
    if (1.0 - cos.abs()) < 1e-12 {
        return Err(GeomError::DegeneratePencil);
    }
    let iota = scalar_product(x, y)? / (x.norm_sq() * y.norm_sq()).sqrt();
    let kind = if iota.abs() < 1.0 - tol.pencil {
        PencilKind::Elliptic
    } else if iota.abs() > 1.0 + tol.pencil {
        PencilKind::Hyperbolic
    } else {
        PencilKind::Parabolic
    };
    Ok(PencilClass {
        kind,
        inversive_value: iota,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CausalClass {
    Spacelike,
    Timelike,
    Lightlike,
}

/// Causal character of a direction from the sign of `(v,v)`.
pub fn classify_direction(v: &PolyVector, tol: &Tolerances) -> Result<CausalClass> {
    let scale = v.euclidean_norm_sq();
    if scale == 0.0 {
        return Err(GeomError::Domain("zero direction".into()));
    }
    Ok(causal_from_square(v.norm_sq(), scale, tol.lightcone))
}

pub(crate) fn causal_from_square(square: f64, scale: f64, tol: f64) -> CausalClass {
    if square.abs() <= tol * scale {
        CausalClass::Lightlike
    } else if square > 0.0 {
        CausalClass::Spacelike
    } else {
        CausalClass::Timelike
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pv(c: &[f64]) -> PolyVector {
        PolyVector::from_coords(c.to_vec()).unwrap()
    }

    #[test]
    fn scalar_product_examples() {
        let origin = lift_point(&[0.0, 0.0, 0.0]);
        assert_eq!(origin.coords(), &[1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(scalar_product(&origin, &origin).unwrap(), 0.0);
        let unit = pv(&[1.0, 0.0, 0.0, 0.0, -0.5]);
        assert_eq!(scalar_product(&unit, &unit).unwrap(), 1.0);
        let other = pv(&[1.0, 2f64.sqrt(), 0.0, 0.0, 0.5]);
        assert!(scalar_product(&unit, &other).unwrap().abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = lift_point(&[0.0, 0.0]);
        let b = lift_point(&[0.0, 0.0, 0.0]);
        assert!(matches!(
            scalar_product(&a, &b),
            Err(GeomError::DimensionMismatch { .. })
        ));
        assert!(PolyVector::new(3, vec![0.0; 4]).is_err());
        assert!(PolyVector::new(3, vec![0.0, 0.0, f64::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn lift_examples() {
        assert_eq!(lift_point(&[1.0, 0.0, 0.0]).coords(), &[1.0, 1.0, 0.0, 0.0, 0.5]);
        // |p|^2 = 9
        assert_eq!(lift_point(&[1.0, 2.0, 2.0]).coords(), &[1.0, 1.0, 2.0, 2.0, 4.5]);
        assert_eq!(
            lift_sphere(&[0.0, 0.0, 0.0], 1.0).unwrap().coords(),
            &[1.0, 0.0, 0.0, 0.0, -0.5]
        );
        // (9 − 4)/2 = 5/2, scaled by 1/2
        assert_eq!(
            lift_sphere(&[3.0, 0.0, 0.0], 2.0).unwrap().coords(),
            &[0.5, 1.5, 0.0, 0.0, 1.25]
        );
        let plane = lift_plane(&[0.0, 0.0, 1.0], 0.0).unwrap();
        assert_eq!(plane.coords(), &[0.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!(plane.norm_sq(), 1.0);
        assert!(lift_sphere(&[0.0, 0.0, 0.0], 0.0).is_err());
        assert!(lift_sphere(&[0.0, 0.0, 0.0], -1.0).is_err());
        assert!(lift_plane(&[0.0, 0.0, 2.0], 0.0).is_err());
    }

    #[test]
    fn drop_examples() {
        let tol = Tolerances::default();
        assert_eq!(
            drop_sphere(&pv(&[1.0, 0.0, 0.0, 0.0, -0.5]), &tol).unwrap(),
            Carrier::Sphere {
                center: vec![0.0, 0.0, 0.0],
                radius: 1.0
            }
        );
        assert_eq!(
            drop_sphere(&pv(&[1.0, 1.0, 0.0, 0.0, 0.5]), &tol).unwrap(),
            Carrier::Point {
                position: vec![1.0, 0.0, 0.0]
            }
        );
        // (X,X) = 4 → normalized (1,0,0,0,−1/2): the unit sphere
        assert_eq!(
            drop_sphere(&pv(&[2.0, 0.0, 0.0, 0.0, -1.0]), &tol).unwrap(),
            Carrier::Sphere {
                center: vec![0.0, 0.0, 0.0],
                radius: 1.0
            }
        );
        // the radius-1/2 sphere is (2,0,0,0,−1/4)
        assert_eq!(
            drop_sphere(&pv(&[2.0, 0.0, 0.0, 0.0, -0.25]), &tol).unwrap(),
            Carrier::Sphere {
                center: vec![0.0, 0.0, 0.0],
                radius: 0.5
            }
        );
        assert_eq!(
            drop_sphere(&pv(&[0.0, 0.0, 0.0, 1.0, 2.0]), &tol).unwrap(),
            Carrier::Plane {
                normal: vec![0.0, 0.0, 1.0],
                offset: 2.0
            }
        );
        assert_eq!(
            drop_sphere(&pv(&[1.0, 0.0, 0.0, 0.0, 1.0]), &tol).unwrap(),
            Carrier::NoRealCarrier
        );
        assert_eq!(
            drop_sphere(&pv(&[0.0, 0.0, 0.0, 0.0, 1.0]), &tol).unwrap(),
            Carrier::PointAtInfinity
        );
        assert!(drop_sphere(&pv(&[0.0; 5]), &tol).is_err());
    }

    #[test]
    fn pencil_examples() {
        let tol = Tolerances::default();
        let a = lift_sphere(&[0.0, 0.0, 0.0], 1.0).unwrap();
        let at = |d: f64| lift_sphere(&[d, 0.0, 0.0], 1.0).unwrap();
        let e = classify_pencil(&a, &at(1.0), &tol).unwrap();
        assert_eq!(e.kind, PencilKind::Elliptic);
        assert!((e.inversive_value - 0.5).abs() < 1e-15);
        let p = classify_pencil(&a, &at(2.0), &tol).unwrap();
        assert_eq!(p.kind, PencilKind::Parabolic);
        assert!((p.inversive_value + 1.0).abs() < 1e-15);
        let h = classify_pencil(&a, &at(3.0), &tol).unwrap();
        assert_eq!(h.kind, PencilKind::Hyperbolic);
        assert!((h.inversive_value + 3.5).abs() < 1e-15);
        assert_eq!(
            classify_pencil(&a, &a.scaled(2.0), &tol),
            Err(GeomError::DegeneratePencil)
        );
        assert!(classify_pencil(&a, &lift_point(&[0.0, 0.0, 0.0]), &tol).is_err());
    }

    #[test]
    fn direction_examples() {
        let tol = Tolerances::default();
        let c = |v: &[f64]| classify_direction(&pv(v), &tol).unwrap();
        assert_eq!(c(&[0.0, 1.0, 0.0, 0.0, 0.0]), CausalClass::Spacelike);
        assert_eq!(c(&[1.0, 0.0, 0.0, 0.0, 1.0]), CausalClass::Timelike);
        assert_eq!(c(&[1.0, 0.0, 0.0, 0.0, 0.0]), CausalClass::Lightlike);
        assert!(classify_direction(&pv(&[0.0; 5]), &tol).is_err());
    }

    #[test]
    fn signature_is_lorentzian() {
        for n in 2..7 {
            let basis: Vec<_> = (0..n + 2).map(|k| PolyVector::basis(n, k)).collect();
            let eig = nalgebra::SymmetricEigen::new(gram(&basis)).eigenvalues;
            let neg = eig.iter().filter(|&&e| e < -1e-12).count();
            let pos = eig.iter().filter(|&&e| e > 1e-12).count();
            assert_eq!((neg, pos), (1, n + 1), "n = {n}");
        }
    }

    #[test]
    fn serializes_as_plain_array() {
        let x = lift_point(&[1.0, 0.0, 0.0]);
        let s = serde_json::to_string(&x).unwrap();
        assert_eq!(s, "[1.0,1.0,0.0,0.0,0.5]");
        let back: PolyVector = serde_json::from_str(&s).unwrap();
        assert_eq!(back, x);
    }

    fn coords(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-10.0..10.0f64, n + 2)
    }

    proptest! {
        #[test]
        fn bilinear_and_symmetric(x in coords(4), y in coords(4), z in coords(4),
                                  a in -3.0..3.0f64, b in -3.0..3.0f64) {
            let lhs: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + b * v).collect();
            let l = form(&lhs, &z);
            let r = a * form(&x, &z) + b * form(&y, &z);
            let scale = 1.0 + l.abs().max(r.abs()) + 100.0 * (a.abs() + b.abs());
            prop_assert!((l - r).abs() <= 1e-12 * scale);
            let (xy, yx) = (form(&x, &y), form(&y, &x));
            prop_assert!((xy - yx).abs() <= 1e-14 * (1.0 + xy.abs()));
        }

        #[test]
        fn sphere_round_trip(c in proptest::collection::vec(-5.0..5.0f64, 3),
                             log_r in -3.0..3.0f64) {
            let r = 10f64.powf(log_r);
            let tol = Tolerances::default();
            // (X,X) cancels terms of size |c|^2 / r^2
            let cond = 1.0 + c.iter().map(|v| v * v).sum::<f64>() / (r * r);
            match drop_sphere(&lift_sphere(&c, r).unwrap(), &tol).unwrap() {
                Carrier::Sphere { center, radius } => {
                    prop_assert!((radius - r).abs() <= 1e-14 * cond * r);
                    for (u, v) in center.iter().zip(&c) {
                        prop_assert!((u - v).abs() <= 1e-14 * cond * (1.0 + r));
                    }
                }
                other => prop_assert!(false, "unexpected {:?}", other),
            }
        }

        #[test]
        fn incidence_is_orthogonality(c in proptest::collection::vec(-2.0..2.0f64, 3),
                                      r in 0.1..3.0f64,
                                      dir in proptest::collection::vec(-1.0..1.0f64, 3),
                                      off in -0.5..0.5f64) {
            let len = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assume!(len > 1e-3);
            let on: Vec<f64> = c.iter().zip(&dir).map(|(ci, d)| ci + r * d / len).collect();
            let off_pt: Vec<f64> = c.iter().zip(&dir).map(|(ci, d)| ci + (r + off) * d / len).collect();
            let s = lift_sphere(&c, r).unwrap();
            let on_val = scalar_product(&lift_point(&on), &s).unwrap();
            prop_assert!(on_val.abs() < 1e-12 * (1.0 + 1.0 / r) * 10.0);
            // (P, S) = (ρ^2 − |p − c|^2) / (2ρ)
            let expect = (r * r - (r + off) * (r + off)) / (2.0 * r);
            let got = scalar_product(&lift_point(&off_pt), &s).unwrap();
            prop_assert!((got - expect).abs() < 1e-10);
        }
    }
}
