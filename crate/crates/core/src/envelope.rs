//! Lifts of sphere families, their causal character, characteristic spheres
//! and envelope parametrizations.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conformal::{causal_from_square, form, lift_sphere_taylor, CausalClass, PolyVector};
use crate::error::{GeomError, Result};
use crate::family::{FamilyPoint, SphereFamily};
use crate::surfaces::{sphere_point, Chart};
use crate::taylor::{self, dot, Taylor};
use crate::tolerances::Tolerances;

fn check_domain(f: &dyn SphereFamily, t: &[f64]) -> Result<()> {
    if t.len() != f.rank() {
        return Err(GeomError::DimensionMismatch {
            expected: f.rank(),
            got: t.len(),
        });
    }
    for (x, (lo, hi)) in t.iter().zip(f.domain()) {
        let slack = 1e-9 * (hi - lo);
        if !(x.is_finite() && *x >= lo - slack && *x <= hi + slack) {
            return Err(GeomError::OutOfDomain { t: t.to_vec() });
        }
    }
    Ok(())
}

/// The lifted family `A(t)` with its first and second parameter derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyLift {
    pub t: Vec<f64>,
    pub a: PolyVector,
    pub velocities: Vec<PolyVector>,
    /// `second[p][q]` = ∂_p ∂_q A.
    pub second: Vec<Vec<PolyVector>>,
}

impl FamilyLift {
    /// Gram matrix of the velocities under the polyspherical form.
    pub fn gram(&self) -> DMatrix<f64> {
        crate::conformal::gram(&self.velocities)
    }
}

pub fn family_lift(f: &dyn SphereFamily, t: &[f64]) -> Result<FamilyLift> {
    check_domain(f, t)?;
    let n = f.dim_n();
    let r = f.rank();
    let fp = f.eval(&Taylor::seed(t, 2));
    if !(fp.radius.value() > 0.0) {
        return Err(GeomError::Domain(format!(
            "family radius {} is not positive at t = {t:?}",
            fp.radius.value()
        )));
    }
    let a = lift_sphere_taylor(&fp.center, &fp.radius);
    let pv = |c: Vec<f64>| PolyVector::new(n, c);
    let velocities = (0..r)
        .map(|p| pv(a.iter().map(|x| x.derivative(&[p])).collect()))
        .collect::<Result<Vec<_>>>()?;
    let second = (0..r)
        .map(|p| {
            (0..r)
                .map(|q| pv(a.iter().map(|x| x.derivative(&[p, q])).collect()))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FamilyLift {
        t: t.to_vec(),
        a: pv(taylor::values(&a))?,
        velocities,
        second,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySample {
    pub t: Vec<f64>,
    pub class: Option<CausalClass>,
    pub gram_eigenvalues: Vec<f64>,
    /// The velocities vanish (`A′ = 0`).
    pub stationary: bool,
    /// Second derivatives transverse to `span{A, ∂A}` have full rank.
    pub nondegenerate: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyCausalReport {
    pub family: String,
    pub rank: usize,
    /// Dimension of the characteristic spheres if the family has an envelope.
    pub char_dim: usize,
    pub samples: Vec<FamilySample>,
    pub spacelike: bool,
    pub tangentially_nondegenerate: bool,
    /// Both conditions hold at every sample: the envelope is an m-canal hypersurface.
    pub canal_envelope: bool,
    pub warnings: Vec<String>,
}

fn classify_lift(lift: &FamilyLift, tol: &Tolerances) -> FamilySample {
    let r = lift.velocities.len();
    let g = lift.gram();
    let mut eig: Vec<f64> = g.clone().symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    let scale: f64 = lift.velocities.iter().map(|v| v.euclidean_norm_sq()).sum();
    let a_scale = lift.a.euclidean_norm_sq();
    let stationary = scale <= 1e-24 * a_scale;
    let class = if stationary {
        CausalClass::Lightlike
    } else if r == 1 {
        causal_from_square(g[(0, 0)], scale, tol.lightcone)
    } else if eig[0] > tol.lightcone * scale {
        CausalClass::Spacelike
    } else if eig[0] < -tol.lightcone * scale {
        CausalClass::Timelike
    } else {
        CausalClass::Lightlike
    };
    let nondegenerate = !stationary && transverse_rank(lift) == r;
    FamilySample {
        t: lift.t.clone(),
        class: Some(class),
        gram_eigenvalues: eig,
        stationary,
        nondegenerate,
        error: None,
    }
}

// Rank of the second derivatives after projecting out span{A, ∂_p A}.
fn transverse_rank(lift: &FamilyLift) -> usize {
    let r = lift.velocities.len();
    let mut span: Vec<&PolyVector> = vec![&lift.a];
    span.extend(lift.velocities.iter());
    let m = crate::conformal::gram(&span.iter().map(|v| (*v).clone()).collect::<Vec<_>>());
    let Some(minv) = m.try_inverse() else {
        return 0;
    };
    let project = |x: &PolyVector| -> Vec<f64> {
        let coeffs: Vec<f64> = span.iter().map(|s| form(x.coords(), s.coords())).collect();
        let mut out = x.coords().to_vec();
        for (i, s) in span.iter().enumerate() {
            let w: f64 = (0..span.len()).map(|j| minv[(i, j)] * coeffs[j]).sum();
            for (o, c) in out.iter_mut().zip(s.coords()) {
                *o -= w * c;
            }
        }
        out
    };
    let width = lift.a.coords().len();
    let rows: Vec<Vec<f64>> = (0..r)
        .map(|p| (0..r).flat_map(|q| project(&lift.second[p][q])).collect())
        .collect();
    let mat = DMatrix::from_fn(r, r * width, |i, j| rows[i][j]);
    let reference = lift
        .second
        .iter()
        .flatten()
        .map(|v| v.euclidean_norm_sq().sqrt())
        .fold(0.0, f64::max);
    let sv = mat.singular_values();
    sv.iter().filter(|s| **s > 1e-8 * reference).count()
}

/// Causal character and envelope conditions sampled over `grid`.
pub fn causal_classify_family(f: &dyn SphereFamily, grid: &[Vec<f64>], tol: &Tolerances) -> FamilyCausalReport {
    let samples: Vec<FamilySample> = grid
        .par_iter()
        .map(|t| match family_lift(f, t) {
            Ok(l) => classify_lift(&l, tol),
            Err(e) => FamilySample {
                t: t.clone(),
                class: None,
                gram_eigenvalues: Vec::new(),
                stationary: false,
                nondegenerate: false,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let mut warnings = Vec::new();
    let count = |pred: &dyn Fn(&FamilySample) -> bool| samples.iter().filter(|s| pred(s)).count();
    let failed = count(&|s| s.error.is_some());
    if failed > 0 {
        warnings.push(format!("{failed} samples could not be evaluated"));
    }
    for (class, name) in [(CausalClass::Timelike, "timelike"), (CausalClass::Lightlike, "lightlike")] {
        let hits: Vec<&FamilySample> = samples
            .iter()
            .filter(|s| s.class == Some(class) && !s.stationary)
            .collect();
        if let (Some(first), Some(last)) = (hits.first(), hits.last()) {
            warnings.push(format!(
                "{} {name} samples, first at t = {:?}, last at t = {:?}",
                hits.len(),
                first.t,
                last.t
            ));
        }
    }
    let stationary = count(&|s| s.stationary);
    if stationary > 0 {
        warnings.push(format!("{stationary} stationary samples (vanishing velocity)"));
    }
    let degenerate = count(&|s| s.error.is_none() && !s.stationary && !s.nondegenerate);
    if degenerate > 0 {
        warnings.push(format!("{degenerate} samples where the second derivative is tangential"));
    }
    let spacelike = !samples.is_empty() && samples.iter().all(|s| s.class == Some(CausalClass::Spacelike));
    let tangentially_nondegenerate = !samples.is_empty() && samples.iter().all(|s| s.nondegenerate);
    FamilyCausalReport {
        family: f.label(),
        rank: f.rank(),
        char_dim: f.char_dim(),
        samples,
        spacelike,
        tangentially_nondegenerate,
        canal_envelope: spacelike && tangentially_nondegenerate,
        warnings,
    }
}

/// Fixed ambient directions completing `span{∂c}` to a frame. The last
/// complement vector is not listed: it comes from the generalized cross
/// product, which keeps the frame smooth along closed families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplementChoice {
    pub fixed: Vec<Vec<f64>>,
}

fn candidate_sets(n: usize, count: usize) -> Vec<Vec<Vec<f64>>> {
    let unit = |k: usize| -> Vec<f64> { (0..n).map(|i| if i == k { 1.0 } else { 0.0 }).collect() };
    if count == 1 {
        // all nonzero {−1, 0, 1} patterns up to sign, normalized
        let mut out: Vec<Vec<Vec<f64>>> = Vec::new();
        let total = 3usize.pow(n as u32);
        for code in 0..total {
            let mut v = Vec::with_capacity(n);
            let mut c = code;
            for _ in 0..n {
                v.push((c % 3) as f64 - 1.0);
                c /= 3;
            }
            let first = v.iter().copied().find(|x| *x != 0.0);
            if first == Some(1.0) {
                let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                out.push(vec![v.iter().map(|x| x / len).collect()]);
            }
        }
        // coordinate axes first so they win ties
        out.sort_by_key(|s| s[0].iter().filter(|x| **x != 0.0).count());
        out
    } else {
        let mut out = Vec::new();
        let mut pick = Vec::new();
        fn rec(n: usize, count: usize, start: usize, pick: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if pick.len() == count {
                out.push(pick.clone());
                return;
            }
            for k in start..n {
                pick.push(k);
                rec(n, count, k + 1, pick, out);
                pick.pop();
            }
        }
        let mut idx = Vec::new();
        rec(n, count, 0, &mut pick, &mut idx);
        for set in idx {
            out.push(set.into_iter().map(unit).collect());
        }
        out
    }
}

// Smallest Gram–Schmidt residual of the fixed vectors against span{∂c} at t.
fn complement_margin(f: &dyn SphereFamily, t: &[f64], fixed: &[Vec<f64>]) -> f64 {
    let fp = f.eval(&Taylor::constants(t));
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut margin = f64::INFINITY;
    let grads: Vec<Vec<f64>> = fp.center_grad.iter().map(|g| taylor::values(g)).collect();
    for (i, v) in grads.iter().chain(fixed.iter()).enumerate() {
        let mut w = v.clone();
        for b in &basis {
            let c: f64 = w.iter().zip(b).map(|(x, y)| x * y).sum();
            w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
        let len = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        let len0 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if i >= grads.len() {
            margin = margin.min(len);
        } else if len <= 1e-12 * len0.max(1e-300) {
            return 0.0;
        }
        basis.push(w.iter().map(|x| x / len).collect());
    }
    margin
}

/// Picks the fixed complement directions with the largest worst-case margin
/// over a sample of the family domain.
pub fn choose_complement(f: &dyn SphereFamily) -> ComplementChoice {
    let n = f.dim_n();
    let count = f.char_dim();
    let dom = f.domain();
    let per_axis = if f.rank() == 1 { 65 } else { 9 };
    let counts = vec![per_axis; f.rank()];
    let grid = closed_grid(&dom, &counts);
    let mut best: Option<(f64, Vec<Vec<f64>>)> = None;
    for cand in candidate_sets(n, count) {
        let score = grid
            .iter()
            .map(|t| complement_margin(f, t, &cand))
            .fold(f64::INFINITY, f64::min);
        if best.as_ref().is_none_or(|(s, _)| score > *s + 1e-12) {
            best = Some((score, cand));
        }
    }
    ComplementChoice {
        fixed: best.map(|b| b.1).unwrap_or_default(),
    }
}

fn closed_grid(dom: &[(f64, f64)], counts: &[usize]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for (&(lo, hi), &k) in dom.iter().zip(counts) {
        let axis: Vec<f64> = (0..k)
            .map(|i| if k == 1 { 0.5 * (lo + hi) } else { lo + (hi - lo) * i as f64 / (k - 1) as f64 })
            .collect();
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    out
}

/// Characteristic sphere data in Taylor arithmetic.
pub(crate) struct CharacteristicTaylor {
    pub center: Vec<Taylor>,
    pub radius_sq: Taylor,
    /// Orthonormal complement of `span{∂c}`.
    pub complement: Vec<Vec<Taylor>>,
}

pub(crate) fn characteristic_taylor(fp: &FamilyPoint, choice: &ComplementChoice) -> Option<CharacteristicTaylor> {
    let n = fp.center.len();
    let r = fp.center_grad.len();
    let zero = fp.radius.zero_like();
    let mut q: Vec<Vec<Taylor>> = Vec::with_capacity(n);
    // rr[p][k] = ∂_p c · q_k for k ≤ p
    let mut rr: Vec<Vec<Taylor>> = Vec::with_capacity(r);
    let fixed: Vec<Vec<Taylor>> = choice
        .fixed
        .iter()
        .map(|v| v.iter().map(|x| zero.cst(*x)).collect())
        .collect();
    for (i, v) in fp.center_grad.iter().chain(fixed.iter()).enumerate() {
        let mut w = v.clone();
        let mut row = Vec::new();
        for b in &q {
            let c = dot(&w, b);
            for (x, y) in w.iter_mut().zip(b) {
                *x -= &(&c * y);
            }
            row.push(c);
        }
        let len2 = dot(&w, &w);
        if !(len2.value() > 1e-24) {
            return None;
        }
        let len = len2.sqrt();
        let inv = len.recip();
        if i < r {
            row.push(len);
            rr.push(row);
        }
        q.push(w.iter().map(|x| x * &inv).collect());
    }
    // last complement vector by generalized cross product
    let mut last: Vec<Taylor> = (0..n)
        .map(|c| {
            let mut rows = q.clone();
            rows.push((0..n).map(|j| zero.cst(if j == c { 1.0 } else { 0.0 })).collect());
            taylor::det(&rows)
        })
        .collect();
    let inv = dot(&last, &last).sqrt().recip();
    last.iter_mut().for_each(|x| *x = &*x * &inv);
    q.push(last);

    // y0 = Σ α_k q_k with Σ_{k≤p} rr[p][k] α_k = −ρ ∂_p ρ
    let mut alpha: Vec<Taylor> = Vec::with_capacity(r);
    for p in 0..r {
        let mut rhs = -(&fp.radius * &fp.radius_grad[p]);
        for (k, a) in alpha.iter().enumerate() {
            rhs -= &(&rr[p][k] * a);
        }
        alpha.push(rhs / &rr[p][p]);
    }
    let mut center = fp.center.clone();
    for (a, qk) in alpha.iter().zip(&q) {
        for (c, x) in center.iter_mut().zip(qk) {
            *c += &(a * x);
        }
    }
    let shift2 = dot(&alpha, &alpha);
    let radius_sq = fp.radius.square() - shift2;
    let complement = q.split_off(r);
    Some(CharacteristicTaylor {
        center,
        radius_sq,
        complement,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicSphere {
    pub t: Vec<f64>,
    /// `p · normals[p] = offsets[p]` are the tangency conditions.
    pub plane_normals: Vec<Vec<f64>>,
    pub plane_offsets: Vec<f64>,
    pub center: Vec<f64>,
    pub radius: f64,
    /// Orthonormal basis of the affine `(m+1)`-plane carrying the sphere.
    pub carrier_basis: Vec<Vec<f64>>,
    pub family_center: Vec<f64>,
    pub family_radius: f64,
}

impl CharacteristicSphere {
    /// Point of the characteristic at standard sphere angles.
    pub fn point(&self, angles: &[f64]) -> Vec<f64> {
        let s = taylor::values(&sphere_point(&Taylor::constants(angles)));
        let mut p = self.center.clone();
        for (w, e) in s.iter().zip(&self.carrier_basis) {
            for (x, y) in p.iter_mut().zip(e) {
                *x += self.radius * w * y;
            }
        }
        p
    }
}

pub fn characteristic_sphere(f: &dyn SphereFamily, t: &[f64], choice: &ComplementChoice) -> Result<CharacteristicSphere> {
    check_domain(f, t)?;
    let fp = f.eval(&Taylor::constants(t));
    let ct = characteristic_taylor(&fp, choice).ok_or_else(|| {
        GeomError::Domain(format!("center velocities are dependent at t = {t:?}"))
    })?;
    let radius_sq = ct.radius_sq.value();
    let rho = fp.radius.value();
    if radius_sq < 0.0 {
        return Err(GeomError::ImaginaryCharacteristic {
            t: t.to_vec(),
            radius_sq,
        });
    }
    let c = taylor::values(&fp.center);
    let normals: Vec<Vec<f64>> = fp.center_grad.iter().map(|g| taylor::values(g)).collect();
    let offsets = normals
        .iter()
        .zip(&fp.radius_grad)
        .map(|(g, rg)| g.iter().zip(&c).map(|(a, b)| a * b).sum::<f64>() - rho * rg.value())
        .collect();
    Ok(CharacteristicSphere {
        t: t.to_vec(),
        plane_normals: normals,
        plane_offsets: offsets,
        center: taylor::values(&ct.center),
        radius: radius_sq.sqrt(),
        carrier_basis: ct.complement.iter().map(|v| taylor::values(v)).collect(),
        family_center: c,
        family_radius: rho,
    })
}

/// Envelope of a family as a chart `(t, angles) ↦ point`.
#[derive(Clone)]
pub struct EnvelopeChart {
    pub family: Arc<dyn SphereFamily>,
    pub choice: ComplementChoice,
}

impl EnvelopeChart {
    pub fn new(family: Arc<dyn SphereFamily>) -> EnvelopeChart {
        let choice = choose_complement(family.as_ref());
        EnvelopeChart { family, choice }
    }

    /// Unit normal `(p − c) / ρ` at a chart parameter.
    pub fn normal(&self, u: &[f64]) -> Vec<f64> {
        let r = self.family.rank();
        let (c, rho) = self.family.center_radius(&u[..r]);
        self.position(u).iter().zip(&c).map(|(p, c)| (p - c) / rho).collect()
    }
}

impl std::fmt::Debug for EnvelopeChart {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EnvelopeChart")
            .field("family", &self.family.label())
            .field("choice", &self.choice)
            .finish()
    }
}

impl Chart for EnvelopeChart {
    fn dim_n(&self) -> usize {
        self.family.dim_n()
    }

    fn eval(&self, u: &[Taylor]) -> Vec<Taylor> {
        let r = self.family.rank();
        let fp = self.family.eval(&u[..r]);
        let nan = || vec![u[0].cst(f64::NAN); self.family.dim_n()];
        let Some(ct) = characteristic_taylor(&fp, &self.choice) else {
            return nan();
        };
        if !(ct.radius_sq.value() >= 0.0) {
            return nan();
        }
        let rm = ct.radius_sq.sqrt();
        let s = sphere_point(&u[r..]);
        let mut p = ct.center;
        for (w, e) in s.iter().zip(&ct.complement) {
            let k = &rm * w;
            for (x, y) in p.iter_mut().zip(e) {
                *x += &(&k * y);
            }
        }
        p
    }

    fn domain(&self) -> Vec<(f64, f64)> {
        let mut d = self.family.domain();
        d.push((-PI, PI));
        for _ in 1..self.family.char_dim() {
            d.push((-1.2, 1.2));
        }
        d
    }

    fn label(&self) -> String {
        format!("envelope of {}", self.family.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshResolution {
    /// Samples along each family parameter.
    pub along: usize,
    /// Samples along each characteristic angle.
    pub angular: usize,
}

impl Default for MeshResolution {
    fn default() -> Self {
        MeshResolution {
            along: 256,
            angular: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeMesh {
    pub vertices: Vec<Vec<f64>>,
    pub normals: Vec<Vec<f64>>,
    /// Chart parameters `(t, angles)` of each vertex.
    pub params: Vec<Vec<f64>>,
    /// Triangles; only produced for surfaces in `R^3`.
    pub faces: Vec<[usize; 3]>,
    pub skipped: Vec<Vec<f64>>,
    pub warnings: Vec<String>,
}

/// Parameters, position and normal of one mesh vertex.
type Vertex = (Vec<f64>, Vec<f64>, Vec<f64>);

fn axis(lo: f64, hi: f64, k: usize, wrap: bool) -> Vec<f64> {
    let k = k.max(2);
    let denom = if wrap { k } else { k - 1 } as f64;
    (0..k).map(|i| lo + (hi - lo) * i as f64 / denom).collect()
}

pub fn envelope_mesh(f: Arc<dyn SphereFamily>, res: MeshResolution, tol: &Tolerances) -> EnvelopeMesh {
    let chart = EnvelopeChart::new(f.clone());
    let r = f.rank();
    let m = f.char_dim();
    let dom = f.domain();
    let periodic = f.periodic();
    let t_axes: Vec<Vec<f64>> = (0..r)
        .map(|p| axis(dom[p].0, dom[p].1, res.along, periodic[p]))
        .collect();
    let mut angle_axes = vec![axis(-PI, PI, res.angular, true)];
    for _ in 1..m {
        // latitudes stay off the poles
        let half = PI / 2.0 * (1.0 - 1.0 / res.angular.max(2) as f64);
        angle_axes.push(axis(-half, half, res.angular.max(2) / 2 + 1, false));
    }
    let t_grid = product(&t_axes);
    let angle_grid = product(&angle_axes);

    let rows: Vec<std::result::Result<Vec<Vertex>, String>> = t_grid
        .par_iter()
        .map(|t| {
            let lift = family_lift(f.as_ref(), t).map_err(|e| e.to_string())?;
            let s = classify_lift(&lift, tol);
            if s.class != Some(CausalClass::Spacelike) {
                return Err(format!("{:?} sample", s.class.unwrap_or(CausalClass::Lightlike)));
            }
            let cs = characteristic_sphere(f.as_ref(), t, &chart.choice).map_err(|e| e.to_string())?;
            Ok(angle_grid
                .iter()
                .map(|ang| {
                    let mut u = t.clone();
                    u.extend_from_slice(ang);
                    let p = cs.point(ang);
                    let nrm = p
                        .iter()
                        .zip(&cs.family_center)
                        .map(|(p, c)| (p - c) / cs.family_radius)
                        .collect();
                    (u, p, nrm)
                })
                .collect())
        })
        .collect();

    let mut mesh = EnvelopeMesh {
        vertices: Vec::new(),
        normals: Vec::new(),
        params: Vec::new(),
        faces: Vec::new(),
        skipped: Vec::new(),
        warnings: Vec::new(),
    };
    let mut row_start: Vec<Option<usize>> = Vec::with_capacity(rows.len());
    for (t, row) in t_grid.iter().zip(rows) {
        match row {
            Ok(verts) => {
                row_start.push(Some(mesh.vertices.len()));
                for (u, p, nrm) in verts {
                    mesh.params.push(u);
                    mesh.vertices.push(p);
                    mesh.normals.push(nrm);
                }
            }
            Err(msg) => {
                row_start.push(None);
                mesh.warnings.push(format!("skipped t = {t:?}: {msg}"));
                mesh.skipped.push(t.clone());
            }
        }
    }
    if f.dim_n() == 3 && r == 1 {
        let k = angle_grid.len();
        let rows = row_start.len();
        let pairs = if periodic[0] { rows } else { rows.saturating_sub(1) };
        for i in 0..pairs {
            let (Some(a), Some(b)) = (row_start[i], row_start[(i + 1) % rows]) else {
                continue;
            };
            for j in 0..k {
                let jn = (j + 1) % k;
                mesh.faces.push([a + j, b + j, b + jn]);
                mesh.faces.push([a + j, b + jn, a + jn]);
            }
        }
    }
    mesh
}

fn product(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for ax in axes {
        out = out
            .into_iter()
            .flat_map(|p| {
                ax.iter().map(move |&x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{CircleFamily, LineFamily, SphereOrbitFamily};

    fn circle(n: usize, major: f64, rho: f64) -> CircleFamily {
        CircleFamily {
            dim_n: n,
            major,
            radius: rho,
        }
    }

    #[test]
    fn lift_velocity_square() {
        let f = circle(3, 1.0, 0.5);
        for t in [0.0, 0.4, 2.0] {
            let l = family_lift(&f, &[t]).unwrap();
            assert!((l.gram()[(0, 0)] - 4.0).abs() < 1e-12);
            assert!((l.a.norm_sq() - 1.0).abs() < 1e-13);
        }
        let cone = LineFamily {
            dim_n: 3,
            speed: 0.5,
            radius: 0.0,
            slope: 1.0,
            range: (1.0, 2.0),
        };
        let l = family_lift(&cone, &[1.5]).unwrap();
        assert!((l.gram()[(0, 0)] - (0.25 - 1.0) / 2.25).abs() < 1e-12);
        assert!(matches!(family_lift(&cone, &[3.0]), Err(GeomError::OutOfDomain { .. })));
    }

    #[test]
    fn causal_verdicts() {
        let tol = Tolerances::default();
        let grid: Vec<Vec<f64>> = (0..16).map(|i| vec![-3.0 + 0.4 * i as f64]).collect();
        let r = causal_classify_family(&circle(3, 2.0, 0.5), &grid, &tol);
        assert!(r.canal_envelope && r.warnings.is_empty());
        let cone = LineFamily {
            dim_n: 3,
            speed: 0.5,
            radius: 0.0,
            slope: 1.0,
            range: (1.0, 2.0),
        };
        let g2: Vec<Vec<f64>> = (0..5).map(|i| vec![1.0 + 0.25 * i as f64]).collect();
        let r = causal_classify_family(&cone, &g2, &tol);
        assert!(!r.spacelike && !r.canal_envelope);
        assert!(r.samples.iter().all(|s| s.class == Some(CausalClass::Timelike)));
        let fixed = LineFamily {
            dim_n: 3,
            speed: 0.0,
            radius: 1.0,
            slope: 0.0,
            range: (0.0, 1.0),
        };
        let r = causal_classify_family(&fixed, &[vec![0.5]], &tol);
        assert!(r.samples[0].stationary && !r.canal_envelope);
    }

    #[test]
    fn cylinder_and_cone_characteristics() {
        let cyl = LineFamily {
            dim_n: 3,
            speed: 1.0,
            radius: 1.0,
            slope: 0.0,
            range: (-1.0, 1.0),
        };
        let ch = characteristic_sphere(&cyl, &[0.3], &choose_complement(&cyl)).unwrap();
        assert!((ch.radius - 1.0).abs() < 1e-15);
        assert!((ch.center[0] - 0.3).abs() < 1e-15 && ch.center[1].abs() < 1e-15);
        let cone = LineFamily {
            dim_n: 3,
            speed: 1.0,
            radius: 0.0,
            slope: 0.5,
            range: (0.5, 2.0),
        };
        let t = 1.2;
        let ch = characteristic_sphere(&cone, &[t], &choose_complement(&cone)).unwrap();
        // p1 − t = −t/4 and radius t √3 / 4
        assert!((ch.center[0] - 0.75 * t).abs() < 1e-14);
        assert!((ch.plane_offsets[0] - 0.75 * t).abs() < 1e-14);
        assert!((ch.radius - t * 3f64.sqrt() / 4.0).abs() < 1e-14);
        for a in [0.0, 1.0, 2.5] {
            let p = ch.point(&[a]);
            let d2: f64 = p.iter().zip(&ch.family_center).map(|(x, c)| (x - c).powi(2)).sum();
            assert!((d2 - ch.family_radius.powi(2)).abs() < 1e-13);
        }
    }

    #[test]
    fn torus_mesh_satisfies_implicit_equation() {
        let f: Arc<dyn SphereFamily> = Arc::new(circle(3, 2.0, 1.0));
        let mesh = envelope_mesh(
            f,
            MeshResolution {
                along: 32,
                angular: 16,
            },
            &Tolerances::default(),
        );
        assert_eq!(mesh.vertices.len(), 32 * 16);
        assert_eq!(mesh.faces.len(), 2 * 32 * 16);
        for p in &mesh.vertices {
            let q = (p[0] * p[0] + p[1] * p[1]).sqrt() - 2.0;
            assert!((q * q + p[2] * p[2] - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn r4_tube_vertices_lie_on_family_spheres() {
        let f: Arc<dyn SphereFamily> = Arc::new(circle(4, 2.0, 0.5));
        let mesh = envelope_mesh(
            f.clone(),
            MeshResolution {
                along: 12,
                angular: 8,
            },
            &Tolerances::default(),
        );
        assert!(mesh.faces.is_empty() && !mesh.vertices.is_empty());
        for (u, p) in mesh.params.iter().zip(&mesh.vertices) {
            let (c, rho) = f.center_radius(&u[..1]);
            let d: f64 = p.iter().zip(&c).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            assert!((d - rho).abs() < 1e-10);
        }
    }

    #[test]
    fn two_parameter_family() {
        let f = SphereOrbitFamily {
            major: 2.0,
            radius: 0.5,
        };
        let tol = Tolerances::default();
        let grid = closed_grid(&[(-3.0, 3.0), (-1.0, 1.0)], &[5, 5]);
        let r = causal_classify_family(&f, &grid, &tol);
        assert!(r.canal_envelope, "{:?}", r.warnings);
        let ch = characteristic_sphere(&f, &[0.3, 0.2], &choose_complement(&f)).unwrap();
        assert!((ch.radius - 0.5).abs() < 1e-13);
        assert_eq!(ch.carrier_basis.len(), 2);
    }
}
