#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use canal_core::family::{FourierFamily, FourierSeries, SphereFamily};
use canal_core::taylor::{self, Taylor};
use canal_core::Chart;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

fn series(rng: &mut ChaCha8Rng, constant: f64, first: (f64, f64), amp: f64, terms: usize) -> FourierSeries {
    let mut cos = vec![first.0];
    let mut sin = vec![first.1];
    for _ in 1..terms {
        cos.push(rng.random_range(-amp..amp));
        sin.push(rng.random_range(-amp..amp));
    }
    FourierSeries { constant, cos, sin }
}

/// `|c'|² − ρ'²` and `|c'|² + ρ'²` straight from the series derivatives.
pub fn velocity_split(f: &FourierFamily, t: f64) -> (f64, f64) {
    let c2: f64 = f.center.iter().map(|s| s.value(t).1.powi(2)).sum();
    let r2 = f.radius.value(t).1.powi(2);
    (c2 - r2, c2 + r2)
}

/// Smallest curvature radius of the center curve and largest radius, sampled.
fn tube_ratio(f: &FourierFamily) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..720 {
        let t = -PI + 2.0 * PI * i as f64 / 720.0;
        let fp = f.eval(&Taylor::seed(&[t], 1));
        let d1: Vec<f64> = taylor::values(&fp.center_grad[0]);
        let d2: Vec<f64> = fp.center_grad[0].iter().map(|x| x.derivative(&[0])).collect();
        let s2: f64 = d1.iter().map(|x| x * x).sum();
        let along: f64 = d1.iter().zip(&d2).map(|(a, b)| a * b).sum::<f64>() / s2;
        let normal: f64 = d2.iter().zip(&d1).map(|(b, a)| (b - along * a).powi(2)).sum::<f64>().sqrt();
        let kappa = normal / s2;
        worst = worst.max(kappa * f.radius.value(t).0);
    }
    worst
}

fn margin(f: &FourierFamily) -> f64 {
    (0..720)
        .map(|i| {
            let (d, s) = velocity_split(f, -PI + 2.0 * PI * i as f64 / 720.0);
            d / s
        })
        .fold(f64::INFINITY, f64::min)
}

/// Closed spacelike family in `R^n` whose envelope is free of singular points:
/// a perturbed ellipse of centers with a thin, slowly varying radius.
pub fn tame_family(rng: &mut ChaCha8Rng, n: usize) -> FourierFamily {
    loop {
        let a = rng.random_range(1.6..2.4);
        let b = rng.random_range(1.6..2.4);
        let mut center = vec![series(rng, 0.0, (a, 0.0), 0.08, 3), series(rng, 0.0, (0.0, b), 0.08, 3)];
        for _ in 2..n {
            let p = rng.random_range(-0.3..0.3);
            let q = rng.random_range(-0.3..0.3);
            center.push(series(rng, 0.0, (p, q), 0.05, 2));
        }
        let rho0 = rng.random_range(0.25..0.45);
        let p = rng.random_range(-0.05..0.05);
        let q = rng.random_range(-0.05..0.05);
        let radius = series(rng, rho0, (p, q), 0.02, 3);
        let f = FourierFamily {
            center,
            radius,
            range: (-PI, PI),
        };
        if margin(&f) > 0.2 && tube_ratio(&f) < 0.5 {
            return f;
        }
    }
}

/// Closed spacelike family in `R^3` with radii comparable to the curvature
/// radius of the centers, so singular points appear on many characteristics.
pub fn wild_family(rng: &mut ChaCha8Rng) -> FourierFamily {
    loop {
        let a = rng.random_range(0.8..1.5);
        let b = rng.random_range(0.8..1.5);
        let x = series(rng, 0.0, (a, 0.0), 0.15, 3);
        let y = series(rng, 0.0, (0.0, b), 0.15, 3);
        let p = rng.random_range(-0.4..0.4);
        let q = rng.random_range(-0.4..0.4);
        let center = vec![x, y, series(rng, 0.0, (p, q), 0.1, 2)];
        let rho0 = rng.random_range(0.4..1.8);
        let p = rng.random_range(-0.3..0.3);
        let q = rng.random_range(-0.3..0.3);
        let radius = series(rng, rho0, (p, q), 0.1, 3);
        let f = FourierFamily {
            center,
            radius,
            range: (-PI, PI),
        };
        let rmin = (0..360)
            .map(|i| f.radius.value(-PI + 2.0 * PI * i as f64 / 360.0).0)
            .fold(f64::INFINITY, f64::min);
        if margin(&f) > 0.05 && rmin > 0.1 {
            return f;
        }
    }
}

/// Arbitrary family; some samples are timelike.
pub fn mixed_family(rng: &mut ChaCha8Rng) -> FourierFamily {
    let n = rng.random_range(2..5);
    let center = (0..n)
        .map(|_| {
            let s = rng.random_range(0.1..1.5);
            let c = rng.random_range(-1.0..1.0);
            let p = rng.random_range(-s..s);
            let q = rng.random_range(-s..s);
            series(rng, c, (p, q), 0.3, 2)
        })
        .collect();
    let s = rng.random_range(0.1..1.5);
    let p = rng.random_range(-s..s);
    let q = rng.random_range(-s..s);
    let radius = series(rng, 4.0, (p, q), 0.3, 2);
    FourierFamily {
        center,
        radius,
        range: (-PI, PI),
    }
}

/// A canal envelope pushed off canality by a normal bump.
pub struct Perturbed {
    pub base: canal_core::envelope::EnvelopeChart,
    pub eps: f64,
}

impl Chart for Perturbed {
    fn dim_n(&self) -> usize {
        self.base.dim_n()
    }

    fn eval(&self, u: &[Taylor]) -> Vec<Taylor> {
        let p = self.base.eval(u);
        let fp = self.base.family.eval(&u[..1]);
        let inv = fp.radius.recip();
        let bump = &(&u[1] * 3.0).sin() * &(&u[0] * 2.0).cos() * self.eps;
        let k = &bump * &inv;
        p.iter().zip(&fp.center).map(|(x, c)| x + &(&(x - c) * &k)).collect()
    }

    fn domain(&self) -> Vec<(f64, f64)> {
        self.base.domain()
    }

    fn label(&self) -> String {
        format!("perturbed {}", self.base.label())
    }
}

pub fn arc(f: FourierFamily) -> Arc<dyn SphereFamily> {
    Arc::new(f)
}
