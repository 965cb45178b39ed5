use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Dense rank-3 tensor over a `dim`-dimensional space, row-major `(i, j, k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor3 {
    dim: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(dim: usize) -> Tensor3 {
        Tensor3 {
            dim,
            data: vec![0.0; dim * dim * dim],
        }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Tensor3 {
        let mut t = Tensor3::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    t.data[(i * dim + j) * dim + k] = f(i, j, k);
                }
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.dim + j) * self.dim + k]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        self.data[(i * self.dim + j) * self.dim + k] = v;
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// `T'_{abc} = Q_{ia} Q_{jb} Q_{kc} T_{ijk}`: components in the basis given
    /// by the columns of `q`.
    pub fn rotated(&self, q: &DMatrix<f64>) -> Tensor3 {
        let d = self.dim;
        // contract one index at a time
        let mut step1 = Tensor3::zeros(d);
        for a in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let s = (0..d).map(|i| q[(i, a)] * self.get(i, j, k)).sum();
                    step1.set(a, j, k, s);
                }
            }
        }
        let mut step2 = Tensor3::zeros(d);
        for a in 0..d {
            for b in 0..d {
                for k in 0..d {
                    let s = (0..d).map(|j| q[(j, b)] * step1.get(a, j, k)).sum();
                    step2.set(a, b, k, s);
                }
            }
        }
        Tensor3::from_fn(d, |a, b, c| (0..d).map(|k| q[(k, c)] * step2.get(a, b, k)).sum())
    }

    /// `Σ_ij g^{ij} T_{ijk}` for the identity metric.
    pub fn trace_first_pair(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|k| (0..self.dim).map(|i| self.get(i, i, k)).sum())
            .collect()
    }

    /// Largest deviation between a component and any index permutation of it.
    pub fn symmetry_residual(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let v = self.get(i, j, k);
                    for w in [
                        self.get(i, k, j),
                        self.get(j, i, k),
                        self.get(j, k, i),
                        self.get(k, i, j),
                        self.get(k, j, i),
                    ] {
                        worst = worst.max((v - w).abs());
                    }
                }
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_by_identity_and_permutation() {
        let t = Tensor3::from_fn(2, |i, j, k| (i + 2 * j + 4 * k) as f64);
        assert_eq!(t.rotated(&DMatrix::identity(2, 2)), t);
        // swapping the basis vectors swaps every index
        let swap = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let r = t.rotated(&swap);
        assert_eq!(r.get(0, 0, 0), t.get(1, 1, 1));
        assert_eq!(r.get(0, 1, 1), t.get(1, 0, 0));
        assert!(t.symmetry_residual() > 0.0);
        assert_eq!(Tensor3::from_fn(3, |i, j, k| (i + j + k) as f64).symmetry_residual(), 0.0);
    }
}
