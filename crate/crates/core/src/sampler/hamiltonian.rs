//! Euclidean Hamiltonian dynamics with an identity mass matrix.

use super::TargetDensity;

/// A phase-space point with cached log-density and gradient.
#[derive(Debug, Clone)]
pub struct Point {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub logp: f64,
    pub grad: Vec<f64>,
}

impl Point {
    pub fn new<T: TargetDensity + ?Sized>(target: &T, q: Vec<f64>, p: Vec<f64>) -> Self {
        let (logp, grad) = target.logp_grad(&q);
        Self { q, p, logp, grad }
    }

    pub fn kinetic(&self) -> f64 {
        0.5 * dot(&self.p, &self.p)
    }

    /// `H(q, p) = -log p(q) + |p|²/2`; NaN is mapped to +∞.
    pub fn energy(&self) -> f64 {
        let h = -self.logp + self.kinetic();
        if h.is_nan() {
            f64::INFINITY
        } else {
            h
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One leapfrog step (half kick, drift, half kick) of size `eps`.
pub fn leapfrog_step<T: TargetDensity + ?Sized>(target: &T, z: &Point, eps: f64) -> Point {
    let half: Vec<f64> = z.p.iter().zip(&z.grad).map(|(p, g)| p + 0.5 * eps * g).collect();
    let q: Vec<f64> = z.q.iter().zip(&half).map(|(q, p)| q + eps * p).collect();
    let (logp, grad) = target.logp_grad(&q);
    let p = half.iter().zip(&grad).map(|(p, g)| p + 0.5 * eps * g).collect();
    Point { q, p, logp, grad }
}

/// Convenience form of [`leapfrog_step`] on bare position and momentum.
pub fn leapfrog<T: TargetDensity + ?Sized>(
    target: &T,
    q: &[f64],
    p: &[f64],
    eps: f64,
) -> (Vec<f64>, Vec<f64>) {
    let z = Point::new(target, q.to_vec(), p.to_vec());
    let next = leapfrog_step(target, &z, eps);
    (next.q, next.p)
}
