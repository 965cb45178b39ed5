//! Conformal tensors of a hypersurface and the canal/Dupin tests.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conformal::PolyVector;
use crate::error::{GeomError, Result};
use crate::jets::{evaluate_jet, fundamental_forms, gauge_frame, second_form_derivative, DerivativeProvider, SurfaceJet};
use crate::surfaces::Chart;
use crate::tensor::Tensor3;
use crate::tolerances::Tolerances;

/// The tensor ladder at one point, in an orthonormal tangent frame (`g = I`).
#[derive(Debug, Clone)]
pub struct ConformalTensors {
    pub g: DMatrix<f64>,
    pub lam: DMatrix<f64>,
    pub lam_scalar: f64,
    pub a: DMatrix<f64>,
    /// `a^i_j`; equal to `a` because the metric is the identity.
    pub a_mixed: DMatrix<f64>,
    pub lam3: Tensor3,
    pub lam_k: Vec<f64>,
    pub mu: Option<Vec<f64>>,
    pub a3: Option<Tensor3>,
    pub degenerate_a: bool,
}

impl ConformalTensors {
    /// Builds the ladder from `λ_ij` and `λ_ijk` given in an orthonormal frame.
    pub fn from_parts(lam: DMatrix<f64>, lam3: Tensor3) -> ConformalTensors {
        let d = lam.nrows();
        let g = DMatrix::identity(d, d);
        let lam_scalar = lam.trace() / d as f64;
        let a = &lam - &g * lam_scalar;
        let lam_k: Vec<f64> = lam3.trace_first_pair().iter().map(|x| x / d as f64).collect();
        let a_norm = a.norm();
        let min_eig = a
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .map(|x| x.abs())
            .fold(f64::INFINITY, f64::min);
        // a at rounding level of λ counts as zero
        let degenerate_a = a_norm <= 1e-12 * lam.norm() || min_eig <= 1e-8 * a_norm;
        let (mu, a3) = if degenerate_a {
            (None, None)
        } else {
            let lu = a.clone().lu();
            let mu = lu
                .solve(&nalgebra::DVector::from_column_slice(&lam_k))
                .map(|v| v.iter().copied().collect::<Vec<f64>>());
            let a3 = mu.as_ref().map(|mu| {
                let delta = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
                Tensor3::from_fn(d, |i, j, k| {
                    lam3.get(i, j, k) + a[(i, j)] * mu[k] + a[(j, k)] * mu[i] + a[(k, i)] * mu[j]
                        - delta(i, j) * lam_k[k]
                        - delta(j, k) * lam_k[i]
                        - delta(k, i) * lam_k[j]
                })
            });
            (mu, a3)
        };
        ConformalTensors {
            g,
            lam,
            lam_scalar,
            a_mixed: a.clone(),
            a,
            lam3,
            lam_k,
            degenerate_a: degenerate_a || a3.is_none(),
            mu,
            a3,
        }
    }

    pub fn dim(&self) -> usize {
        self.lam.nrows()
    }

    /// `|g^ij a_ij|`.
    pub fn apolarity_a(&self) -> f64 {
        self.a.trace().abs()
    }

    /// `max_k |g^ij a_ijk|`, when `a_ijk` exists.
    pub fn apolarity_a3(&self) -> Option<f64> {
        self.a3
            .as_ref()
            .map(|t| t.trace_first_pair().iter().map(|x| x.abs()).fold(0.0, f64::max))
    }

    /// `‖a_ijk‖ + ‖a_ij‖^2`, the scale used to normalize third-order quantities.
    pub fn third_order_scale(&self) -> Option<f64> {
        self.a3.as_ref().map(|t| t.norm() + self.a.norm_squared())
    }

    pub fn is_umbilic(&self, tol: &Tolerances) -> bool {
        let a = self.a.norm();
        a == 0.0 || a <= tol.umbilic * self.lam.norm()
    }
}

pub fn build_tensors(jet: &SurfaceJet) -> ConformalTensors {
    let (_, h) = fundamental_forms(jet);
    ConformalTensors::from_parts(h, second_form_derivative(jet))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub value: f64,
    pub multiplicity: usize,
    /// Indices into the sorted eigenvalue list.
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrincipalSpectrum {
    /// Eigenvalues of `a^i_j` in ascending order.
    pub eigenvalues: Vec<f64>,
    /// Unit eigenvectors in tangent-frame components, matching `eigenvalues`.
    pub directions: Vec<Vec<f64>>,
    pub clusters: Vec<Cluster>,
    /// Absolute gap below which eigenvalues were merged.
    pub clustering_tol: f64,
}

impl PrincipalSpectrum {
    pub fn multiplicities(&self) -> Vec<usize> {
        self.clusters.iter().map(|c| c.multiplicity).collect()
    }

    /// Eigenbasis as matrix columns.
    pub fn basis(&self) -> DMatrix<f64> {
        let d = self.directions.len();
        DMatrix::from_fn(d, d, |i, j| self.directions[j][i])
    }
}

/// Symmetric eigendecomposition of `a^i_j` with gap clustering.
///
/// The gap threshold is `clustering * max(‖a‖, umbilic * ‖λ‖)`; the floor
/// keeps rounding noise at umbilics from splitting a single cluster.
pub fn principal_spectrum(t: &ConformalTensors, tol: &Tolerances) -> PrincipalSpectrum {
    let d = t.dim();
    let eig = t.a_mixed.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let directions: Vec<Vec<f64>> = order
        .iter()
        .map(|&i| {
            let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
            // deterministic sign: largest component positive
            let big = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
            if big < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            v
        })
        .collect();
    let scale = t.a.norm().max(tol.umbilic * t.lam.norm());
    let clustering_tol = tol.clustering * scale;
    let mut clusters: Vec<Cluster> = Vec::new();
    for (i, &v) in eigenvalues.iter().enumerate() {
        match clusters.last_mut() {
            Some(c) if v - eigenvalues[i - 1] <= clustering_tol => {
                c.members.push(i);
                c.multiplicity += 1;
            }
            _ => clusters.push(Cluster {
                value: v,
                multiplicity: 1,
                members: vec![i],
            }),
        }
    }
    for c in &mut clusters {
        c.value = c.members.iter().map(|&i| eigenvalues[i]).sum::<f64>() / c.multiplicity as f64;
    }
    PrincipalSpectrum {
        eigenvalues,
        directions,
        clusters,
        clustering_tol,
    }
}

/// A contact hypersphere `B = A_n + s A_0` and its tangency cone data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactSphere {
    /// Root `s` of the characteristic equation (eigenvalue of `λ^i_j`).
    pub s: f64,
    pub sphere: PolyVector,
    /// Vertex of the tangency cone: unit ambient vectors spanning it.
    pub vertex: Vec<Vec<f64>>,
    pub cone_rank: usize,
}

pub fn contact_spheres(jet: &SurfaceJet, t: &ConformalTensors, spec: &PrincipalSpectrum) -> Result<Vec<ContactSphere>> {
    let frame = gauge_frame(jet)?;
    let n = jet.dim_n();
    Ok(spec
        .clusters
        .iter()
        .map(|c| {
            let s = c.value + t.lam_scalar;
            let vertex = c
                .members
                .iter()
                .map(|&m| {
                    let q = &spec.directions[m];
                    (0..n)
                        .map(|x| q.iter().zip(&jet.e).map(|(w, e)| w * e[x]).sum())
                        .collect()
                })
                .collect();
            ContactSphere {
                s,
                sphere: frame.an.add_scaled(s, &frame.a0),
                vertex,
                cone_rank: n - c.multiplicity - 1,
            }
        })
        .collect())
}

/// `a_ijk` with all indices referred to the principal directions.
pub fn third_order_in_principal_frame(t: &ConformalTensors, spec: &PrincipalSpectrum) -> Result<Tensor3> {
    t.a3
        .as_ref()
        .map(|a3| a3.rotated(&spec.basis()))
        .ok_or(GeomError::DegenerateTensor)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    /// Eigenvalue of multiplicity `m ≥ 2`.
    Multiplicity,
    /// Simple eigenvalue whose diagonal third-order component vanishes.
    A111Vanishing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub u: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub multiplicities: Vec<usize>,
    pub umbilic: bool,
    /// `|a_iii| / (‖a_ijk‖ + ‖a_ij‖^2)` in the principal frame; empty when
    /// `a_ijk` is unavailable.
    pub a_iii: Vec<f64>,
    /// `‖a_ijk‖ / (‖a_ijk‖ + ‖a_ij‖^2)`.
    pub a3_relative: Option<f64>,
    pub apolarity_a: f64,
    pub apolarity_a3: Option<f64>,
    pub symmetry_lam3: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterVerdict {
    /// Position of the cluster in ascending eigenvalue order.
    pub position: usize,
    pub multiplicity: usize,
    pub mechanism: Mechanism,
    /// `None` when the third-order test could not be evaluated.
    pub is_canal: Option<bool>,
    pub max_a_iii: Option<f64>,
}

/// Samples sharing one multiplicity pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stratum {
    pub multiplicities: Vec<usize>,
    pub samples: usize,
    pub clusters: Vec<ClusterVerdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanalReport {
    pub surface: String,
    pub samples: Vec<SampleRecord>,
    pub strata: Vec<Stratum>,
    pub umbilic_samples: usize,
    pub failed_samples: usize,
    /// `a = 0` at every sample: the hypersurface is (part of) a hypersphere.
    pub coincides_with_hypersphere: bool,
    pub dupin: bool,
    pub max_apolarity_a: f64,
    pub max_apolarity_a3: f64,
    pub max_symmetry_lam3: f64,
    pub warnings: Vec<String>,
}

impl CanalReport {
    /// Stratum with the most samples, if any non-umbilic sample succeeded.
    pub fn primary(&self) -> Option<&Stratum> {
        self.strata.iter().max_by_key(|s| s.samples)
    }

    /// Whether some cluster of the primary stratum is canal.
    pub fn is_canal(&self) -> bool {
        self.primary()
            .map(|s| s.clusters.iter().any(|c| c.is_canal == Some(true)))
            .unwrap_or(false)
    }
}

fn analyse_sample(chart: &dyn Chart, u: &[f64], tol: &Tolerances, provider: DerivativeProvider) -> SampleRecord {
    let mut rec = SampleRecord {
        u: u.to_vec(),
        eigenvalues: Vec::new(),
        multiplicities: Vec::new(),
        umbilic: false,
        a_iii: Vec::new(),
        a3_relative: None,
        apolarity_a: 0.0,
        apolarity_a3: None,
        symmetry_lam3: 0.0,
        error: None,
    };
    let jet = match evaluate_jet(chart, u, provider) {
        Ok(j) => j,
        Err(e) => {
            rec.error = Some(e.to_string());
            return rec;
        }
    };
    let t = build_tensors(&jet);
    let spec = principal_spectrum(&t, tol);
    rec.eigenvalues = spec.eigenvalues.clone();
    rec.multiplicities = spec.multiplicities();
    rec.umbilic = t.is_umbilic(tol);
    rec.apolarity_a = t.apolarity_a();
    rec.apolarity_a3 = t.apolarity_a3();
    rec.symmetry_lam3 = t.lam3.symmetry_residual();
    if let (Ok(p), Some(scale)) = (third_order_in_principal_frame(&t, &spec), t.third_order_scale()) {
        if scale > 0.0 {
            rec.a_iii = (0..p.dim()).map(|i| p.get(i, i, i).abs() / scale).collect();
            rec.a3_relative = Some(p.norm() / scale);
        }
    }
    rec
}

/// Samples the chart on `grid` and decides which principal families are canal.
pub fn detect_canal(
    chart: &dyn Chart,
    grid: &[Vec<f64>],
    tol: &Tolerances,
    provider: DerivativeProvider,
) -> CanalReport {
    let samples: Vec<SampleRecord> = grid
        .par_iter()
        .map(|u| analyse_sample(chart, u, tol, provider))
        .collect();
    summarize(chart.label(), chart.dim_n(), samples, tol)
}

fn summarize(surface: String, n: usize, samples: Vec<SampleRecord>, tol: &Tolerances) -> CanalReport {
    let mut warnings = Vec::new();
    let failed_samples = samples.iter().filter(|s| s.error.is_some()).count();
    if failed_samples > 0 {
        warnings.push(format!("{failed_samples} samples failed and were skipped"));
    }
    let ok: Vec<&SampleRecord> = samples.iter().filter(|s| s.error.is_none()).collect();
    let umbilic_samples = ok.iter().filter(|s| s.umbilic).count();
    let live: Vec<&SampleRecord> = ok.iter().copied().filter(|s| !s.umbilic).collect();
    let coincides_with_hypersphere = !ok.is_empty() && live.is_empty();
    if umbilic_samples > 0 && !coincides_with_hypersphere {
        warnings.push(format!("{umbilic_samples} umbilic samples excluded from the verdicts"));
    }

    let mut patterns: Vec<Vec<usize>> = Vec::new();
    for s in &live {
        if !patterns.contains(&s.multiplicities) {
            patterns.push(s.multiplicities.clone());
        }
    }
    if patterns.len() > 1 {
        warnings.push(format!(
            "cluster structure changes across the grid ({} multiplicity patterns); verdicts are per stratum",
            patterns.len()
        ));
    }
    let strata: Vec<Stratum> = patterns
        .iter()
        .map(|pat| {
            let members: Vec<&&SampleRecord> = live.iter().filter(|s| &s.multiplicities == pat).collect();
            let mut start = 0;
            let clusters = pat
                .iter()
                .enumerate()
                .map(|(position, &m)| {
                    let index = start;
                    start += m;
                    if m >= 2 {
                        return ClusterVerdict {
                            position,
                            multiplicity: m,
                            mechanism: Mechanism::Multiplicity,
                            is_canal: Some(true),
                            max_a_iii: None,
                        };
                    }
                    let vals: Option<Vec<f64>> = members.iter().map(|s| s.a_iii.get(index).copied()).collect();
                    let max_a_iii = vals.map(|v| v.into_iter().fold(0.0, f64::max));
                    ClusterVerdict {
                        position,
                        multiplicity: 1,
                        mechanism: Mechanism::A111Vanishing,
                        is_canal: max_a_iii.map(|x| x < tol.canal),
                        max_a_iii,
                    }
                })
                .collect();
            Stratum {
                multiplicities: pat.clone(),
                samples: members.len(),
                clusters,
            }
        })
        .collect();

    let all_canal = !strata.is_empty()
        && strata
            .iter()
            .all(|s| s.clusters.iter().all(|c| c.is_canal == Some(true)));
    let dupin = if n == 3 {
        all_canal && live.iter().all(|s| s.a3_relative.is_some_and(|x| x < tol.canal))
    } else {
        all_canal
    };
    let fold = |f: &dyn Fn(&SampleRecord) -> f64| ok.iter().map(|s| f(s)).fold(0.0, f64::max);
    CanalReport {
        surface,
        max_apolarity_a: fold(&|s| s.apolarity_a),
        max_apolarity_a3: fold(&|s| s.apolarity_a3.unwrap_or(0.0)),
        max_symmetry_lam3: fold(&|s| s.symmetry_lam3),
        samples,
        strata,
        umbilic_samples,
        failed_samples,
        coincides_with_hypersphere,
        dupin,
        warnings,
    }
}
