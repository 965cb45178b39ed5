//! Order-3 jets of parametrized hypersurfaces and their conformal frames.
//!
//! The frame produced by [`gauge_frame`] pins the tangent hypersphere `A_n`
//! to the tangent hyperplane. In that gauge `λ_ij` is the second fundamental
//! form in the orthonormal tangent frame and `λ_ijk` its covariant derivative.
//! [`frame_route`] recomputes both directly from the frame relations as an
//! independent check of that identification.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::conformal::{form, form_taylor, lift_point, lift_point_taylor, PolyVector};
use crate::error::{GeomError, Result};
use crate::surfaces::Chart;
use crate::taylor::{self, dot, Taylor};
use crate::tensor::Tensor3;

/// How partial derivatives of a chart are obtained.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DerivativeProvider {
    /// Exact jets from Taylor arithmetic.
    #[default]
    Analytic,
    /// Central differences. `step` is used for first and second derivatives,
    /// `third_step` for the nested differencing of second derivatives.
    FiniteDifference { step: f64, third_step: f64 },
}

impl DerivativeProvider {
    pub fn finite_difference() -> DerivativeProvider {
        DerivativeProvider::FiniteDifference {
            step: 1e-4,
            third_step: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SurfaceJet {
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    /// `d1[i]` = ∂_i p.
    pub d1: Vec<Vec<f64>>,
    /// `d2[i][j]` = ∂_i ∂_j p, stored in full.
    pub d2: Vec<Vec<Vec<f64>>>,
    pub d3: Vec<Vec<Vec<Vec<f64>>>>,
    /// Orthonormal tangent frame from Gram–Schmidt on `d1`.
    pub e: Vec<Vec<f64>>,
    pub nu: Vec<f64>,
    /// `e_a = Σ_i coframe[(a, i)] ∂_i p`.
    pub coframe: DMatrix<f64>,
}

impl SurfaceJet {
    pub fn dim_n(&self) -> usize {
        self.p.len()
    }

    /// Largest violation of orthonormality of `(e_1, .., e_{n−1}, ν)`.
    pub fn frame_residual(&self) -> f64 {
        let mut all = self.e.clone();
        all.push(self.nu.clone());
        let mut worst: f64 = 0.0;
        for (i, a) in all.iter().enumerate() {
            for (j, b) in all.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot_f(a, b) - target).abs());
            }
        }
        worst
    }

    /// `max_i |ν · ∂_i p| / |∂_i p|`, the tangency condition of the frame.
    pub fn tangency_residual(&self) -> f64 {
        self.d1
            .iter()
            .map(|d| dot_f(&self.nu, d).abs() / dot_f(d, d).sqrt())
            .fold(0.0, f64::max)
    }
}

fn dot_f(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn evaluate_jet(chart: &dyn Chart, u: &[f64], provider: DerivativeProvider) -> Result<SurfaceJet> {
    let k = chart.dim_params();
    let n = chart.dim_n();
    if u.len() != k {
        return Err(GeomError::DimensionMismatch {
            expected: k,
            got: u.len(),
        });
    }
    if u.iter().any(|x| !x.is_finite()) {
        return Err(GeomError::Domain(format!("non-finite parameter {u:?}")));
    }
    let (p, d1, d2, d3) = match provider {
        DerivativeProvider::Analytic => analytic_partials(chart, u),
        DerivativeProvider::FiniteDifference { step, third_step } => {
            if !(step > 0.0 && third_step > 0.0) {
                return Err(GeomError::Domain("finite-difference steps must be positive".into()));
            }
            fd_partials(chart, u, step, third_step)
        }
    };
    debug_assert_eq!(p.len(), n);
    let (e, nu, coframe) = tangent_frame(&d1, u)?;
    Ok(SurfaceJet {
        u: u.to_vec(),
        p,
        d1,
        d2,
        d3,
        e,
        nu,
        coframe,
    })
}

type Partials = (Vec<f64>, Vec<Vec<f64>>, Vec<Vec<Vec<f64>>>, Vec<Vec<Vec<Vec<f64>>>>);

fn analytic_partials(chart: &dyn Chart, u: &[f64]) -> Partials {
    let k = u.len();
    let out = chart.eval(&Taylor::seed(u, 3));
    let p = taylor::values(&out);
    let d1 = (0..k)
        .map(|i| out.iter().map(|c| c.derivative(&[i])).collect())
        .collect();
    let d2 = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| out.iter().map(|c| c.derivative(&[i, j])).collect())
                .collect()
        })
        .collect();
    let d3 = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| {
                    (0..k)
                        .map(|l| out.iter().map(|c| c.derivative(&[i, j, l])).collect())
                        .collect()
                })
                .collect()
        })
        .collect();
    (p, d1, d2, d3)
}

fn shifted(u: &[f64], moves: &[(usize, f64)]) -> Vec<f64> {
    let mut v = u.to_vec();
    for &(i, d) in moves {
        v[i] += d;
    }
    v
}

fn combo(terms: &[(f64, Vec<f64>)]) -> Vec<f64> {
    let mut out = vec![0.0; terms[0].1.len()];
    for (w, v) in terms {
        for (o, x) in out.iter_mut().zip(v) {
            *o += w * x;
        }
    }
    out
}

// Second partials by central differences with step h.
fn fd_second(chart: &dyn Chart, u: &[f64], h: f64, center: &[f64]) -> Vec<Vec<Vec<f64>>> {
    let k = u.len();
    let n = center.len();
    let mut d2 = vec![vec![vec![0.0; n]; k]; k];
    for i in 0..k {
        for j in i..k {
            let v = if i == j {
                combo(&[
                    (1.0, chart.position(&shifted(u, &[(i, h)]))),
                    (-2.0, center.to_vec()),
                    (1.0, chart.position(&shifted(u, &[(i, -h)]))),
                ])
                .into_iter()
                .map(|x| x / (h * h))
                .collect::<Vec<f64>>()
            } else {
                combo(&[
                    (1.0, chart.position(&shifted(u, &[(i, h), (j, h)]))),
                    (-1.0, chart.position(&shifted(u, &[(i, h), (j, -h)]))),
                    (-1.0, chart.position(&shifted(u, &[(i, -h), (j, h)]))),
                    (1.0, chart.position(&shifted(u, &[(i, -h), (j, -h)]))),
                ])
                .into_iter()
                .map(|x| x / (4.0 * h * h))
                .collect()
            };
            d2[i][j] = v.clone();
            d2[j][i] = v;
        }
    }
    d2
}

fn fd_partials(chart: &dyn Chart, u: &[f64], h: f64, h3: f64) -> Partials {
    let k = u.len();
    let p = chart.position(u);
    let n = p.len();
    let d1 = (0..k)
        .map(|i| {
            combo(&[
                (1.0, chart.position(&shifted(u, &[(i, h)]))),
                (-1.0, chart.position(&shifted(u, &[(i, -h)]))),
            ])
            .into_iter()
            .map(|x| x / (2.0 * h))
            .collect()
        })
        .collect();
    let d2 = fd_second(chart, u, h, &p);
    // third partials: difference the step-h3 second partials along the last index
    let mut d3 = vec![vec![vec![vec![0.0; n]; k]; k]; k];
    let mut plus = Vec::with_capacity(k);
    let mut minus = Vec::with_capacity(k);
    for l in 0..k {
        let up = shifted(u, &[(l, h3)]);
        let dn = shifted(u, &[(l, -h3)]);
        plus.push(fd_second(chart, &up, h3, &chart.position(&up)));
        minus.push(fd_second(chart, &dn, h3, &chart.position(&dn)));
    }
    for i in 0..k {
        for j in i..k {
            for l in j..k {
                let v: Vec<f64> = plus[l][i][j]
                    .iter()
                    .zip(&minus[l][i][j])
                    .map(|(a, b)| (a - b) / (2.0 * h3))
                    .collect();
                for (a, b, c) in [(i, j, l), (i, l, j), (j, i, l), (j, l, i), (l, i, j), (l, j, i)] {
                    d3[a][b][c] = v.clone();
                }
            }
        }
    }
    (p, d1, d2, d3)
}

/// Gram–Schmidt tangent frame, generalized cross product normal and the
/// coframe matrix expressing `e` in terms of the coordinate partials.
fn tangent_frame(d1: &[Vec<f64>], u: &[f64]) -> Result<(Vec<Vec<f64>>, Vec<f64>, DMatrix<f64>)> {
    let k = d1.len();
    let n = k + 1;
    let scale = d1.iter().map(|d| dot_f(d, d).sqrt()).fold(0.0, f64::max);
    let mut e: Vec<Vec<f64>> = Vec::with_capacity(k);
    for d in d1 {
        let mut v = d.clone();
        for b in &e {
            let c = dot_f(&v, b);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= c * y;
            }
        }
        let len = dot_f(&v, &v).sqrt();
        if !(scale > 0.0) || len <= 1e-9 * scale || !len.is_finite() {
            return Err(GeomError::ImmersionFailure { u: u.to_vec() });
        }
        e.push(v.iter().map(|x| x / len).collect());
    }
    let mut nu: Vec<f64> = (0..n)
        .map(|c| {
            let m = DMatrix::from_fn(n, n, |r, col| {
                if r < k {
                    e[r][col]
                } else if col == c {
                    1.0
                } else {
                    0.0
                }
            });
            m.determinant()
        })
        .collect();
    let len = dot_f(&nu, &nu).sqrt();
    nu.iter_mut().for_each(|x| *x /= len);
    let p = DMatrix::from_fn(k, n, |i, c| d1[i][c]);
    let ef = DMatrix::from_fn(k, n, |a, c| e[a][c]);
    let gram = &p * p.transpose();
    let inv = gram
        .try_inverse()
        .ok_or_else(|| GeomError::ImmersionFailure { u: u.to_vec() })?;
    let coframe = ef * p.transpose() * inv;
    Ok((e, nu, coframe))
}

/// First and second fundamental forms in the orthonormal tangent frame.
pub fn fundamental_forms(jet: &SurfaceJet) -> (DMatrix<f64>, DMatrix<f64>) {
    let k = jet.d1.len();
    let b = DMatrix::from_fn(k, k, |i, j| dot_f(&jet.nu, &jet.d2[i][j]));
    let h = &jet.coframe * b * jet.coframe.transpose();
    // symmetrize away rounding
    let h = (&h + h.transpose()) * 0.5;
    (DMatrix::identity(k, k), h)
}

/// Covariant derivative `∇_k h_ij` of the second fundamental form, in the
/// orthonormal tangent frame.
pub fn second_form_derivative(jet: &SurfaceJet) -> Tensor3 {
    let k = jet.d1.len();
    let p = &jet.d1;
    let g = DMatrix::from_fn(k, k, |i, j| dot_f(&p[i], &p[j]));
    let ginv = g.try_inverse().expect("jet with invertible metric");
    let b = DMatrix::from_fn(k, k, |i, j| dot_f(&jet.nu, &jet.d2[i][j]));
    // christoffel[l][i][j] = Γ^l_ij
    let mut chris = vec![vec![vec![0.0; k]; k]; k];
    for i in 0..k {
        for j in 0..k {
            let proj: Vec<f64> = (0..k).map(|m| dot_f(&p[m], &jet.d2[i][j])).collect();
            for (l, row) in chris.iter_mut().enumerate() {
                row[i][j] = (0..k).map(|m| ginv[(l, m)] * proj[m]).sum();
            }
        }
    }
    let coord = Tensor3::from_fn(k, |i, j, kk| {
        let mut v = dot_f(&jet.nu, &jet.d3[i][j][kk]);
        for l in 0..k {
            v -= b[(kk, l)] * chris[l][i][j];
            v -= chris[l][kk][i] * b[(l, j)];
            v -= chris[l][kk][j] * b[(i, l)];
        }
        v
    });
    coord.rotated(&jet.coframe.transpose())
}

/// Moving frame `{A_0, A_i, A_n, A_{n+1}}` of the polyspherical model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformalFrame {
    pub a0: PolyVector,
    pub a: Vec<PolyVector>,
    pub an: PolyVector,
    pub an1: PolyVector,
}

impl ConformalFrame {
    /// Vectors in the order `A_0, A_1, .., A_{n−1}, A_n, A_{n+1}`.
    pub fn vectors(&self) -> Vec<&PolyVector> {
        let mut v = vec![&self.a0];
        v.extend(self.a.iter());
        v.push(&self.an);
        v.push(&self.an1);
        v
    }

    /// Largest deviation of the Gram matrix from the frame relations,
    /// relative to the size of the vectors.
    pub fn relation_residual(&self) -> f64 {
        let v = self.vectors();
        let last = v.len() - 1;
        let mut worst: f64 = 0.0;
        for (i, x) in v.iter().enumerate() {
            for (j, y) in v.iter().enumerate() {
                let target = match (i, j) {
                    (0, l) | (l, 0) if l == last => -1.0,
                    (a, b) if a == b && a != 0 && a != last => 1.0,
                    _ => 0.0,
                };
                let scale = 1.0 + (x.euclidean_norm_sq() * y.euclidean_norm_sq()).sqrt();
                worst = worst.max((form(x.coords(), y.coords()) - target).abs() / scale);
            }
        }
        worst
    }
}

pub fn gauge_frame(jet: &SurfaceJet) -> Result<ConformalFrame> {
    let n = jet.dim_n();
    let tangentish = |v: &[f64]| {
        let mut c = vec![0.0];
        c.extend_from_slice(v);
        c.push(dot_f(&jet.p, v));
        PolyVector::new(n, c)
    };
    let mut inf = vec![0.0; n + 2];
    inf[n + 1] = 1.0;
    let frame = ConformalFrame {
        a0: lift_point(&jet.p),
        a: jet.e.iter().map(|e| tangentish(e)).collect::<Result<_>>()?,
        an: tangentish(&jet.nu)?,
        an1: PolyVector::new(n, inf)?,
    };
    let limit = 1e-8;
    let residual = frame.relation_residual().max(jet.tangency_residual());
    if residual > limit {
        return Err(GeomError::InternalConsistency {
            what: "moving frame relations".into(),
            residual,
            limit,
        });
    }
    Ok(frame)
}

/// `λ_ij` and `λ_ijk` read off from the structure equations of the moving
/// frame, computed by differentiating the frame itself.
#[derive(Debug, Clone)]
pub struct FrameRoute {
    pub lam: DMatrix<f64>,
    pub lam3: Tensor3,
    /// `ω_0^0` and `ω_n^0` evaluated on the coordinate vectors.
    pub omega00: Vec<f64>,
    pub omegan0: Vec<f64>,
}

/// Evaluates [`FrameRoute`] at `u`. With `shift = Some(s)` the tangent
/// hypersphere is moved within its pencil, `A_n → A_n + s A_0`, and `A_{n+1}`
/// is adjusted to keep the frame relations.
pub fn frame_route(
    chart: &dyn Chart,
    u: &[f64],
    shift: Option<&dyn Fn(&[Taylor]) -> Taylor>,
) -> Result<FrameRoute> {
    let k = chart.dim_params();
    let n = chart.dim_n();
    let vars = Taylor::seed(u, 3);
    let p3 = chart.eval(&vars);
    let dp: Vec<Vec<Taylor>> = (0..k)
        .map(|i| p3.iter().map(|c| c.partial(i)).collect())
        .collect();
    let p: Vec<Taylor> = p3.iter().map(|c| c.truncate(2)).collect();

    let mut e: Vec<Vec<Taylor>> = Vec::with_capacity(k);
    for d in &dp {
        let mut v = d.clone();
        for b in &e {
            let c = dot(&v, b);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= &(&c * y);
            }
        }
        let len = dot(&v, &v);
        if !(len.value() > 0.0) {
            return Err(GeomError::ImmersionFailure { u: u.to_vec() });
        }
        let inv = len.sqrt().recip();
        e.push(v.iter().map(|x| x * &inv).collect());
    }
    let zero = p[0].zero_like();
    let mut nu: Vec<Taylor> = (0..n)
        .map(|c| {
            let mut rows = e.clone();
            rows.push((0..n).map(|j| zero.cst(if j == c { 1.0 } else { 0.0 })).collect());
            taylor::det(&rows)
        })
        .collect();
    let inv = dot(&nu, &nu).sqrt().recip();
    nu.iter_mut().for_each(|x| *x = &*x * &inv);

    let embed = |v: &[Taylor]| {
        let mut c = vec![zero.clone()];
        c.extend(v.iter().cloned());
        c.push(dot(&p, v));
        c
    };
    let a0 = lift_point_taylor(&p);
    let ai: Vec<Vec<Taylor>> = e.iter().map(|v| embed(v)).collect();
    let mut an = embed(&nu);
    let mut an1: Vec<Taylor> = (0..n + 2).map(|j| zero.cst(if j == n + 1 { 1.0 } else { 0.0 })).collect();
    if let Some(f) = shift {
        let s = f(&vars).truncate(2);
        let s = &s + &zero;
        let half_s2 = s.square() * 0.5;
        an1 = (0..n + 2)
            .map(|j| &an1[j] + &(&s * &an[j]) + &half_s2 * &a0[j])
            .collect();
        an = (0..n + 2).map(|j| &an[j] + &(&s * &a0[j])).collect();
    }

    let diff = |v: &[Taylor], l: usize| -> Vec<Taylor> { v.iter().map(|c| c.partial(l)).collect() };
    let lower = |v: &[Taylor]| -> Vec<Taylor> { v.iter().map(|c| c.truncate(1)).collect() };
    let da0: Vec<Vec<Taylor>> = (0..k).map(|l| diff(&a0, l)).collect();
    let dai: Vec<Vec<Vec<Taylor>>> = ai.iter().map(|a| (0..k).map(|l| diff(a, l)).collect()).collect();
    let dan: Vec<Vec<Taylor>> = (0..k).map(|l| diff(&an, l)).collect();
    let ai1: Vec<Vec<Taylor>> = ai.iter().map(|a| lower(a)).collect();
    let an_1 = lower(&an);
    let an1_1 = lower(&an1);

    // w[l][j] = ω^j(∂_l)
    let w: Vec<Vec<Taylor>> = (0..k)
        .map(|l| (0..k).map(|j| form_taylor(&da0[l], &ai1[j])).collect())
        .collect();
    // rhs[l][i] = ω_i^n(∂_l)
    let rhs: Vec<Vec<Taylor>> = (0..k)
        .map(|l| (0..k).map(|i| form_taylor(&dai[i][l], &an_1)).collect())
        .collect();
    let lam_t = taylor::solve(w.clone(), rhs).ok_or_else(|| GeomError::ImmersionFailure { u: u.to_vec() })?;
    // lam_t[j][i] = λ_ij
    let lam = DMatrix::from_fn(k, k, |i, j| lam_t[j][i].value());

    let omega = |i: usize, m: usize, l: usize| form(&taylor::values(&dai[i][l]), &taylor::values(&ai1[m]));
    let omega00: Vec<f64> = (0..k)
        .map(|l| -form(&taylor::values(&da0[l]), &taylor::values(&an1_1)))
        .collect();
    let omegan0: Vec<f64> = (0..k)
        .map(|l| -form(&taylor::values(&dan[l]), &taylor::values(&an1_1)))
        .collect();

    let wv = DMatrix::from_fn(k, k, |l, j| w[l][j].value());
    let lu = wv.lu();
    let mut lam3 = Tensor3::zeros(k);
    for i in 0..k {
        for j in 0..k {
            let lhs = nalgebra::DVector::from_fn(k, |l, _| {
                let mut v = lam_t[j][i].derivative(&[l]);
                for m in 0..k {
                    v -= lam[(m, j)] * omega(i, m, l);
                    v -= lam[(i, m)] * omega(j, m, l);
                }
                v += lam[(i, j)] * omega00[l];
                if i == j {
                    v += omegan0[l];
                }
                v
            });
            let sol = lu
                .solve(&lhs)
                .ok_or_else(|| GeomError::ImmersionFailure { u: u.to_vec() })?;
            for kk in 0..k {
                lam3.set(i, j, kk, sol[kk]);
            }
        }
    }
    Ok(FrameRoute {
        lam,
        lam3,
        omega00,
        omegan0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surfaces::{Cylinder, Plane, Sphere, Torus};

    fn torus() -> Torus {
        Torus {
            major: 2.0,
            minor: 1.0,
        }
    }

    #[test]
    fn sphere_frame_is_orthonormal() {
        let s = Sphere {
            dim_n: 3,
            radius: 1.0,
        };
        let j = evaluate_jet(&s, &[0.3, 0.2], DerivativeProvider::Analytic).unwrap();
        assert!(j.frame_residual() < 1e-12);
        assert!(j.tangency_residual() < 1e-12);
        let (_, h) = fundamental_forms(&j);
        assert!((h - DMatrix::<f64>::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn plane_has_vanishing_higher_partials() {
        let j = evaluate_jet(&Plane { dim_n: 3 }, &[0.4, -1.0], DerivativeProvider::Analytic).unwrap();
        assert!(j.d2.iter().flatten().flatten().all(|x| *x == 0.0));
        assert!(j.d3.iter().flatten().flatten().flatten().all(|x| *x == 0.0));
        let f = gauge_frame(&j).unwrap();
        assert!(f.relation_residual() < 1e-14);
    }

    #[test]
    fn torus_frame_at_origin() {
        let j = evaluate_jet(&torus(), &[0.0, 0.0], DerivativeProvider::Analytic).unwrap();
        assert!(j.p.iter().zip([3.0, 0.0, 0.0]).all(|(a, b)| (a - b).abs() < 1e-15));
        let f = gauge_frame(&j).unwrap();
        // ν = (1, 0, 0) with this orientation, so A_3 = (0, 1, 0, 0, 3)
        let want = [0.0, 1.0, 0.0, 0.0, 3.0];
        assert!(f.an.coords().iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-14));
        assert!((form(f.a0.coords(), f.an1.coords()) + 1.0).abs() < 1e-15);
        let (_, h) = fundamental_forms(&j);
        let mut ev: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().map(|x| x.abs()).collect();
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] - 1.0 / 3.0).abs() < 1e-13 && (ev[1] - 1.0).abs() < 1e-13);
    }

    #[test]
    fn origin_frame_is_standard_basis() {
        let j = evaluate_jet(&Plane { dim_n: 3 }, &[0.0, 0.0], DerivativeProvider::Analytic).unwrap();
        let f = gauge_frame(&j).unwrap();
        for (k, v) in f.vectors().iter().enumerate() {
            assert_eq!(v.coords(), PolyVector::basis(3, k).coords());
        }
    }

    #[test]
    fn cylinder_curvatures() {
        let c = Cylinder::round(1.0);
        let j = evaluate_jet(&c, &[0.7, 0.1], DerivativeProvider::Analytic).unwrap();
        let (_, h) = fundamental_forms(&j);
        assert!((h[(0, 0)].abs() - 1.0).abs() < 1e-13);
        assert!(h[(1, 1)].abs() < 1e-13 && h[(0, 1)].abs() < 1e-13);
    }

    #[test]
    fn finite_differences_track_analytic_jets() {
        let t = torus();
        let u = [0.4, 0.9];
        let a = evaluate_jet(&t, &u, DerivativeProvider::Analytic).unwrap();
        let f = evaluate_jet(&t, &u, DerivativeProvider::finite_difference()).unwrap();
        let err = |x: &[f64], y: &[f64]| {
            x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
                / x.iter().map(|v| v.abs()).fold(1.0, f64::max)
        };
        for i in 0..2 {
            assert!(err(&a.d1[i], &f.d1[i]) < 1e-6);
            for j in 0..2 {
                assert!(err(&a.d2[i][j], &f.d2[i][j]) < 1e-6);
                for l in 0..2 {
                    assert!(err(&a.d3[i][j][l], &f.d3[i][j][l]) < 1e-5);
                }
            }
        }
        assert!(gauge_frame(&f).is_ok());
    }

    #[test]
    fn immersion_failure_reports_parameter() {
        // the pole of a spherical chart
        let s = Sphere {
            dim_n: 3,
            radius: 1.0,
        };
        let err = evaluate_jet(&s, &[std::f64::consts::FRAC_PI_2, 0.0], DerivativeProvider::Analytic);
        let err2 = evaluate_jet(&s, &[0.0, std::f64::consts::FRAC_PI_2], DerivativeProvider::Analytic);
        assert!(
            matches!(err, Err(GeomError::ImmersionFailure { .. }))
                || matches!(err2, Err(GeomError::ImmersionFailure { .. }))
        );
    }

    #[test]
    fn frame_route_matches_gauge_identification() {
        let t = torus();
        for u in [[0.3, 0.8], [1.1, -2.0], [-0.4, 2.9]] {
            let j = evaluate_jet(&t, &u, DerivativeProvider::Analytic).unwrap();
            let (_, h) = fundamental_forms(&j);
            let d = second_form_derivative(&j);
            let r = frame_route(&t, &u, None).unwrap();
            assert!((&r.lam - &h).norm() < 1e-12, "{} vs {}", r.lam, h);
            let diff = Tensor3::from_fn(2, |a, b, c| r.lam3.get(a, b, c) - d.get(a, b, c));
            assert!(diff.norm() < 1e-11);
            assert!(r.omega00.iter().chain(&r.omegan0).all(|x| x.abs() < 1e-12));
            assert!(d.symmetry_residual() < 1e-12);
        }
    }
}
