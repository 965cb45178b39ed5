//! Singular points of canal surfaces through the Darboux mapping: adapted
//! frames along the lifted family, the focal determinant, real singular
//! points on each generator and the plane-position classification of tubes.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conformal::{form, gram, lift_point, PolyVector};
use crate::envelope::{characteristic_sphere, family_lift, CharacteristicSphere, EnvelopeChart};
use crate::error::{GeomError, Result};
use crate::surfaces::Chart;
use crate::taylor::Taylor;
use crate::tolerances::Tolerances;

/// Coefficients of the focal equation on a generator, with `g_pq = δ_pq`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocalCoefficients {
    pub r: usize,
    /// `λ_pq`, r×r and nondegenerate.
    pub lam_pq: Vec<Vec<f64>>,
    /// `λ^p_aq` for each generator index `a`, each r×r (`[a][p][q]`).
    pub lam_apq: Vec<Vec<Vec<f64>>>,
    /// `c_pq`, r×r.
    pub c_pq: Vec<Vec<f64>>,
}

fn square(name: &str, m: &[Vec<f64>], r: usize) -> Result<DMatrix<f64>> {
    if m.len() != r || m.iter().any(|row| row.len() != r) {
        return Err(GeomError::Shape(format!("{name} must be {r}×{r}")));
    }
    Ok(DMatrix::from_fn(r, r, |i, j| m[i][j]))
}

impl FocalCoefficients {
    pub fn new(
        lam_pq: Vec<Vec<f64>>,
        lam_apq: Vec<Vec<Vec<f64>>>,
        c_pq: Vec<Vec<f64>>,
    ) -> Result<FocalCoefficients> {
        let r = lam_pq.len();
        if r == 0 {
            return Err(GeomError::Shape("rank must be positive".into()));
        }
        let coeffs = FocalCoefficients {
            r,
            lam_pq,
            lam_apq,
            c_pq,
        };
        coeffs.check()?;
        Ok(coeffs)
    }

    fn check(&self) -> Result<()> {
        let lam = square("lam_pq", &self.lam_pq, self.r)?;
        square("c_pq", &self.c_pq, self.r)?;
        for (a, m) in self.lam_apq.iter().enumerate() {
            square(&format!("lam_apq[{a}]"), m, self.r)?;
        }
        let scale = lam.norm().powi(self.r as i32);
        if !(lam.determinant().abs() > 1e-12 * scale) {
            return Err(GeomError::Domain("λ_pq is degenerate".into()));
        }
        Ok(())
    }

    /// Generator dimension `m`.
    pub fn m(&self) -> usize {
        self.lam_apq.len()
    }

    /// `‖Λ C − (Λ C)ᵀ‖`, zero when the symmetry constraint holds.
    pub fn symmetry_residual(&self) -> f64 {
        let r = self.r;
        let lam = DMatrix::from_fn(r, r, |i, j| self.lam_pq[i][j]);
        let c = DMatrix::from_fn(r, r, |i, j| self.c_pq[i][j]);
        let lc = lam * c;
        (&lc - lc.transpose()).norm()
    }

    /// `x⁰ δ + xᵃ λ^p_aq + x^{n+1} c^p_q` at generator coordinates
    /// `(x⁰, x¹, …, x^m, x^{n+1})`.
    pub fn focal_matrix(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check()?;
        let m = self.m();
        if x.len() != m + 2 {
            return Err(GeomError::DimensionMismatch {
                expected: m + 2,
                got: x.len(),
            });
        }
        let r = self.r;
        Ok(DMatrix::from_fn(r, r, |p, q| {
            let mut v = if p == q { x[0] } else { 0.0 };
            for a in 0..m {
                v += x[1 + a] * self.lam_apq[a][p][q];
            }
            v + x[m + 1] * self.c_pq[p][q]
        }))
    }
}

/// Determinant of the focal matrix; a homogeneous polynomial of degree `r`.
pub fn focal_determinant(coeffs: &FocalCoefficients, x: &[f64]) -> Result<f64> {
    Ok(coeffs.focal_matrix(x)?.determinant())
}

/// Frame `A₀ … A₄` along the lifted curve of a family of circles in `R^3`.
///
/// `A₀, A₁, A₄` span the generator with `(A₀, A₄) = −1`, `(A₁, A₁) = 1`;
/// `A₂` is the unit tangent of the curve `A₃`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptedFrame {
    pub t: f64,
    pub frame: Vec<PolyVector>,
    /// Chart angle of the point `A₀` on the characteristic circle.
    pub theta0: f64,
    pub omega2: f64,
    pub coeffs: FocalCoefficients,
    pub circle: CharacteristicSphere,
    pub frame_residual: f64,
}

impl AdaptedFrame {
    pub fn lambda12(&self) -> f64 {
        self.coeffs.lam_apq[0][0][0]
    }

    pub fn c22(&self) -> f64 {
        self.coeffs.c_pq[0][0]
    }

    /// Point of `R^3` represented by generator coordinates `(x⁰, x¹, x⁴)`.
    pub fn point(&self, x: [f64; 3]) -> Option<Vec<f64>> {
        let f = &self.frame;
        let v = f[0].scaled(x[0]).add_scaled(x[1], &f[1]).add_scaled(x[2], &f[4]);
        let w = v.x0();
        (w.abs() > 1e-300).then(|| v.spatial().iter().map(|s| s / w).collect())
    }
}

fn angle_on(circle: &CharacteristicSphere, p: &[f64]) -> f64 {
    let d: Vec<f64> = p.iter().zip(&circle.center).map(|(a, b)| a - b).collect();
    let dot = |e: &Vec<f64>| d.iter().zip(e).map(|(x, y)| x * y).sum::<f64>();
    dot(&circle.carrier_basis[1]).atan2(dot(&circle.carrier_basis[0]))
}

fn require_surface_family(chart: &EnvelopeChart) -> Result<()> {
    let f = chart.family.as_ref();
    if f.dim_n() != 3 || f.rank() != 1 {
        return Err(GeomError::Domain(format!(
            "adapted frames need a one-parameter family in R^3, got n = {}, r = {}",
            f.dim_n(),
            f.rank()
        )));
    }
    Ok(())
}

pub fn adapted_frame_coefficients(chart: &EnvelopeChart, t: f64, tol: &Tolerances) -> Result<AdaptedFrame> {
    require_surface_family(chart)?;
    let f = chart.family.as_ref();
    let lift = family_lift(f, &[t])?;
    let circle = characteristic_sphere(f, &[t], &chart.choice)?;
    let degenerate = |reason: String| GeomError::DegenerateFrame { t, reason };
    let a3 = lift.a.clone();
    let v = &lift.velocities[0];
    let acc = &lift.second[0][0];
    let k2 = v.norm_sq();
    let scale = a3.euclidean_norm_sq();
    if !(k2 > tol.lightcone * v.euclidean_norm_sq().max(1e-300 * scale)) || k2 <= 1e-24 * scale {
        return Err(degenerate(format!("curve velocity is not spacelike ((A3', A3') = {k2:.3e})")));
    }
    if circle.radius <= 1e-12 * circle.family_radius {
        return Err(degenerate("characteristic circle collapsed to a point".into()));
    }
    let k = k2.sqrt();
    let a2 = v.scaled(1.0 / k);

    // A₀ where the pairing with A₃'' is largest keeps ω² away from zero
    let probe = |theta: f64| form(lift_point(&circle.point(&[theta])).coords(), acc.coords());
    let theta0 = (0..64)
        .map(|i| -PI + 2.0 * PI * i as f64 / 64.0)
        .max_by(|x, y| probe(*x).abs().total_cmp(&probe(*y).abs()))
        .unwrap_or(0.0);
    let a0 = lift_point(&circle.point(&[theta0]));
    let r2 = circle.radius * circle.radius;
    let a4 = lift_point(&circle.point(&[theta0 + PI])).scaled(0.5 / r2);
    let l = lift_point(&circle.point(&[theta0 + 0.5 * PI]));
    let beta = -form(l.coords(), a0.coords());
    let alpha = -form(l.coords(), a4.coords());
    let a1_raw = l.add_scaled(-alpha, &a0).add_scaled(-beta, &a4);
    let n1 = a1_raw.norm_sq();
    if !(n1 > 0.0) {
        return Err(degenerate("generator is not a circle".into()));
    }
    let a1 = a1_raw.scaled(1.0 / n1.sqrt());
    let frame = vec![a0, a1, a2, a3, a4];

    let expected = |i: usize, j: usize| -> f64 {
        match (i, j) {
            (0, 4) | (4, 0) => -1.0,
            (1, 1) | (2, 2) | (3, 3) => 1.0,
            _ => 0.0,
        }
    };
    let g = gram(&frame);
    let norms: f64 = frame.iter().map(|x| x.euclidean_norm_sq()).sum::<f64>().sqrt();
    let mut frame_residual = 0.0f64;
    for i in 0..5 {
        for j in 0..5 {
            frame_residual = frame_residual.max((g[(i, j)] - expected(i, j)).abs());
        }
    }
    frame_residual /= 1.0 + norms;
    if frame_residual > tol.frame_residual {
        return Err(GeomError::InternalConsistency {
            what: format!("adapted frame at t = {t}"),
            residual: frame_residual,
            limit: tol.frame_residual,
        });
    }

    // (A_i', A₂) = −(A_i, A₃'')/k on the generator
    let pair = |x: &PolyVector| form(x.coords(), acc.coords());
    let p0 = pair(&frame[0]);
    let acc_scale = acc.euclidean_norm_sq().sqrt() * frame[0].euclidean_norm_sq().sqrt();
    if !(p0.abs() > 1e-12 * acc_scale) {
        return Err(degenerate("every point of the generator is focal".into()));
    }
    let omega2 = -p0 / k;
    let lam2 = -k / omega2;
    let lam12 = pair(&frame[1]) / p0;
    let c22 = pair(&frame[4]) / p0;
    Ok(AdaptedFrame {
        t,
        frame,
        theta0,
        omega2,
        coeffs: FocalCoefficients {
            r: 1,
            lam_pq: vec![vec![lam2]],
            lam_apq: vec![vec![vec![lam12]]],
            c_pq: vec![vec![c22]],
        },
        circle,
        frame_residual,
    })
}

/// Real root of the focal line on the generator circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularPoint {
    /// Generator coordinates `(x⁰, x¹, x⁴)`.
    pub generator: [f64; 3],
    pub position: Vec<f64>,
    /// Chart angle on the characteristic circle.
    pub angle: f64,
    pub circle_residual: f64,
    pub focal_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularReport {
    pub t: f64,
    pub discriminant: f64,
    pub discriminant_tol: f64,
    pub count: usize,
    pub double: bool,
    pub points: Vec<SingularPoint>,
    pub notes: Vec<String>,
}

/// Discriminant, its tolerance band and the generator roots of the focal
/// line `x⁰ + λ x¹ + c x⁴ = 0` on the conic `(x¹)² = 2 x⁰ x⁴`.
///
/// Roots are `(τ², τ, 1/2)` with `τ² + λτ + c/2 = 0`, so the discriminant is
/// `λ² − 2c`. `floor` keeps the double-root band open when both coefficients
/// vanish; the adapted frame passes `1/R²` for a characteristic of radius `R`.
pub fn generator_roots(lam12: f64, c22: f64, floor: f64, tol: &Tolerances) -> (f64, f64, Vec<[f64; 3]>) {
    let d = lam12 * lam12 - 2.0 * c22;
    let band = tol.discriminant * (lam12 * lam12 + (2.0 * c22).abs() + floor);
    let point = |tau: f64| [tau * tau, tau, 0.5];
    let roots = if d.abs() <= band {
        vec![point(-0.5 * lam12)]
    } else if d > 0.0 {
        let s = d.sqrt();
        // avoid cancellation in the smaller root
        let q = -0.5 * (lam12 + lam12.signum() * s);
        let (a, b) = if q != 0.0 { (q, 0.5 * c22 / q) } else { (0.5 * s, -0.5 * s) };
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        vec![point(lo), point(hi)]
    } else {
        Vec::new()
    };
    (d, band, roots)
}

pub fn singular_set(frame: &AdaptedFrame, tol: &Tolerances) -> SingularReport {
    let (lam, c) = (frame.lambda12(), frame.c22());
    let floor = frame.circle.radius.powi(-2);
    let (d, band, roots) = generator_roots(lam, c, floor, tol);
    let mut notes = Vec::new();
    let double = d.abs() <= band;
    if double {
        notes.push("double singular point".into());
    }
    let points: Vec<SingularPoint> = roots
        .into_iter()
        .filter_map(|x| {
            let scale = 1.0 + x.iter().map(|v| v * v).sum::<f64>();
            let circle_residual = (x[1] * x[1] - 2.0 * x[0] * x[2]).abs() / scale;
            let focal_residual = (x[0] + lam * x[1] + c * x[2]).abs() / (scale.sqrt() * (1.0 + lam.abs() + c.abs()));
            let position = frame.point(x)?;
            let angle = angle_on(&frame.circle, &position);
            Some(SingularPoint {
                generator: x,
                position,
                angle,
                circle_residual,
                focal_residual,
            })
        })
        .collect();
    SingularReport {
        t: frame.t,
        discriminant: d,
        discriminant_tol: band,
        count: points.len(),
        double,
        points,
        notes,
    }
}

/// Singular reports for each parameter value, in order.
pub fn singular_series(chart: &EnvelopeChart, ts: &[f64], tol: &Tolerances) -> Vec<Result<SingularReport>> {
    ts.par_iter()
        .map(|&t| adapted_frame_coefficients(chart, t, tol).map(|f| singular_set(&f, tol)))
        .collect()
}

/// Smallest over largest singular value of the envelope Jacobian.
pub fn jacobian_ratio(chart: &EnvelopeChart, t: f64, theta: f64) -> f64 {
    let p = chart.eval(&Taylor::seed(&[t, theta], 1));
    let pt: Vec<f64> = p.iter().map(|x| x.derivative(&[0])).collect();
    let pa: Vec<f64> = p.iter().map(|x| x.derivative(&[1])).collect();
    let n2 = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    let dot: f64 = pt.iter().zip(&pa).map(|(a, b)| a * b).sum();
    let (a, b) = (n2(&pt), n2(&pa));
    let det = (a * b - dot * dot).max(0.0);
    let sum = a + b;
    let big = 0.5 * (sum + (sum * sum - 4.0 * det).max(0.0).sqrt());
    if !(big > 0.0) {
        return 0.0;
    }
    (det / big).sqrt() / big.sqrt()
}

/// Brute-force singular points on one characteristic: dense sampling of the
/// Jacobian ratio, golden-section refinement of local minima, acceptance
/// below `tol.rank_drop` and merging within `1e-2` rad. Returns chart angles.
pub fn rank_drop_oracle(chart: &EnvelopeChart, t: f64, tol: &Tolerances) -> Vec<f64> {
    const SAMPLES: usize = 720;
    let step = 2.0 * PI / SAMPLES as f64;
    let angle = |i: usize| -PI + step * i as f64;
    let vals: Vec<f64> = (0..SAMPLES).map(|i| jacobian_ratio(chart, t, angle(i))).collect();
    let mut found: Vec<f64> = Vec::new();
    for i in 0..SAMPLES {
        let prev = vals[(i + SAMPLES - 1) % SAMPLES];
        let next = vals[(i + 1) % SAMPLES];
        if !(vals[i] <= prev && vals[i] <= next) {
            continue;
        }
        let f = |x: f64| jacobian_ratio(chart, t, x);
        let (x, fx) = golden_min(f, angle(i) - step, angle(i) + step);
        if fx < tol.rank_drop {
            let x = wrap(x);
            if !found.iter().any(|y| wrap(x - y).abs() < 1e-2) {
                found.push(x);
            }
        }
    }
    found.sort_by(f64::total_cmp);
    found
}

fn wrap(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
        if b - a < 1e-13 {
            break;
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum TubeClass {
    SmoothTube,
    SelfintersectingTube,
    OneSingularPoint {
        z: PolyVector,
        /// `None` when `z` is the point at infinity.
        point: Option<Vec<f64>>,
    },
}

/// Position of a plane of `P^4` relative to the Darboux quadric, from the
/// signature of the restricted form.
pub fn classify_tube_plane(span: &[PolyVector], tol: &Tolerances) -> Result<TubeClass> {
    if span.len() != 3 || span.iter().any(|v| v.dim_n() != 3) {
        return Err(GeomError::Shape("a plane is spanned by three vectors of the n = 3 model".into()));
    }
    let coords = DMatrix::from_fn(5, 3, |i, j| span[j].coords()[i]);
    let sv = coords.singular_values();
    let smax = sv.max();
    if !(sv.min() > 1e-10 * smax) {
        return Err(GeomError::Domain("spanning vectors are linearly dependent".into()));
    }
    let g = gram(span);
    let eig = g.clone().symmetric_eigen();
    let scale = eig.eigenvalues.amax().max(smax * smax * 1e-300);
    let band = tol.lightcone * scale;
    let pos = eig.eigenvalues.iter().filter(|e| **e > band).count();
    let neg = eig.eigenvalues.iter().filter(|e| **e < -band).count();
    match (pos, neg) {
        (2, 1) => Ok(TubeClass::SmoothTube),
        (3, 0) => Ok(TubeClass::SelfintersectingTube),
        (2, 0) => {
            let idx = eig.eigenvalues.iamin();
            let w = eig.eigenvectors.column(idx);
            let mut z = vec![0.0; 5];
            for (j, v) in span.iter().enumerate() {
                for (zi, c) in z.iter_mut().zip(v.coords()) {
                    *zi += w[j] * c;
                }
            }
            // deterministic sign: first significant component positive
            let big = z.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if let Some(first) = z.iter().find(|x| x.abs() > 1e-9 * big) {
                if *first < 0.0 {
                    z.iter_mut().for_each(|x| *x = -*x);
                }
            }
            let z = PolyVector::new(3, z)?;
            let point = (z.x0().abs() > 1e-12 * big).then(|| z.spatial().iter().map(|s| s / z.x0()).collect());
            Ok(TubeClass::OneSingularPoint { z, point })
        }
        _ => Err(GeomError::Domain(format!(
            "restricted form has signature ({pos}, {neg}) which no plane of the model can have"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{CircleFamily, LineFamily, SphereFamily};
    use std::sync::Arc;

    fn chart(f: impl SphereFamily + 'static) -> EnvelopeChart {
        EnvelopeChart::new(Arc::new(f))
    }

    fn torus(major: f64, rho: f64) -> EnvelopeChart {
        chart(CircleFamily {
            dim_n: 3,
            major,
            radius: rho,
        })
    }

    #[test]
    fn focal_determinant_cases() {
        let id = FocalCoefficients::new(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![vec![0.0; 2]; 2]],
            vec![vec![0.0; 2]; 2],
        )
        .unwrap();
        assert!((focal_determinant(&id, &[1.7, 0.3, -2.0]).unwrap() - 1.7f64.powi(2)).abs() < 1e-15);
        let diag = FocalCoefficients::new(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![vec![0.0; 2]; 2]],
            vec![vec![2.0, 0.0], vec![0.0, -3.0]],
        )
        .unwrap();
        let x = [0.4, 1.1, 0.9];
        let expect = (x[0] + 2.0 * x[2]) * (x[0] - 3.0 * x[2]);
        assert!((focal_determinant(&diag, &x).unwrap() - expect).abs() < 1e-14);
        let line = FocalCoefficients::new(vec![vec![2.0]], vec![vec![vec![0.7]]], vec![vec![-1.5]]).unwrap();
        let x = [0.2, -0.4, 1.3];
        assert!((focal_determinant(&line, &x).unwrap() - (0.2 - 0.7 * 0.4 - 1.5 * 1.3)).abs() < 1e-15);
        assert!(matches!(focal_determinant(&line, &[1.0, 2.0]), Err(GeomError::DimensionMismatch { .. })));
        assert!(FocalCoefficients::new(vec![vec![0.0]], vec![], vec![vec![1.0]]).is_err());
        assert!(FocalCoefficients::new(vec![vec![1.0]], vec![], vec![vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn roots_and_discriminant() {
        let tol = Tolerances::default();
        let (d, _, r) = generator_roots(2.0, 2.0, 0.0, &tol);
        assert_eq!(d, 0.0);
        assert_eq!(r.len(), 1);
        assert!((r[0][1] + 1.0).abs() < 1e-15);
        let (d, _, r) = generator_roots(2.0, 1.0, 0.0, &tol);
        assert!((d - 2.0).abs() < 1e-15 && r.len() == 2);
        for x in r {
            assert!((x[0] + 2.0 * x[1] + x[2]).abs() < 1e-14);
            assert!((x[1] * x[1] - 2.0 * x[0] * x[2]).abs() < 1e-14);
        }
        assert!(generator_roots(0.5, 1.0, 0.0, &tol).2.is_empty());
    }

    #[test]
    fn torus_has_no_singular_points() {
        let tol = Tolerances::default();
        let c = torus(2.0, 0.5);
        for t in [-2.0, 0.0, 0.7, 3.0] {
            let frame = adapted_frame_coefficients(&c, t, &tol).unwrap();
            assert!(frame.frame_residual < 1e-12);
            let rep = singular_set(&frame, &tol);
            assert!(rep.discriminant < 0.0 && rep.count == 0);
            assert!(rank_drop_oracle(&c, t, &tol).is_empty());
        }
    }

    #[test]
    fn spindle_and_horn_tori() {
        let tol = Tolerances::default();
        // spindle: both singular points on the axis
        let c = torus(1.0, 1.5);
        let rep = singular_set(&adapted_frame_coefficients(&c, 0.4, &tol).unwrap(), &tol);
        assert_eq!(rep.count, 2);
        for p in &rep.points {
            assert!(p.position[0].abs() < 1e-9 && p.position[1].abs() < 1e-9);
            assert!((p.position[2].abs() - 1.25f64.sqrt()).abs() < 1e-9);
            assert!(p.circle_residual < 1e-12 && p.focal_residual < 1e-12);
        }
        let oracle = rank_drop_oracle(&c, 0.4, &tol);
        assert_eq!(oracle.len(), 2);
        for p in &rep.points {
            assert!(oracle.iter().any(|a| wrap(a - p.angle).abs() < 1e-3));
        }
        // horn: a double point at the origin
        let c = torus(1.0, 1.0);
        let rep = singular_set(&adapted_frame_coefficients(&c, 1.1, &tol).unwrap(), &tol);
        assert!(rep.double && rep.count == 1);
        assert!(rep.points[0].position.iter().all(|x| x.abs() < 1e-7));
    }

    #[test]
    fn cylinder_and_degenerate_inputs() {
        let tol = Tolerances::default();
        let cyl = chart(LineFamily {
            dim_n: 3,
            speed: 1.0,
            radius: 1.0,
            slope: 0.0,
            range: (-1.0, 1.0),
        });
        let rep = singular_set(&adapted_frame_coefficients(&cyl, 0.2, &tol).unwrap(), &tol);
        assert!(rep.discriminant < 0.0 && rep.count == 0);
        let r4 = chart(CircleFamily {
            dim_n: 4,
            major: 2.0,
            radius: 0.5,
        });
        assert!(matches!(adapted_frame_coefficients(&r4, 0.0, &tol), Err(GeomError::Domain(_))));
    }

    #[test]
    fn tube_plane_examples() {
        let tol = Tolerances::default();
        let e = |k: usize| PolyVector::basis(3, k);
        assert_eq!(classify_tube_plane(&[e(1), e(2), e(3)], &tol).unwrap(), TubeClass::SelfintersectingTube);
        assert_eq!(classify_tube_plane(&[e(0), e(4), e(1)], &tol).unwrap(), TubeClass::SmoothTube);
        match classify_tube_plane(&[e(0), e(1), e(2)], &tol).unwrap() {
            TubeClass::OneSingularPoint { z, point } => {
                assert!((z.coords()[0] - 1.0).abs() < 1e-12);
                assert!(point.unwrap().iter().all(|x| x.abs() < 1e-12));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            classify_tube_plane(&[e(0), e(1), e(1).scaled(2.0)], &tol),
            Err(GeomError::Domain(_))
        ));
    }
}
