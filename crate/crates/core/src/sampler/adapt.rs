//! Step-size adaptation by dual averaging.

use rand::Rng;
use rand_distr::StandardNormal;

use super::hamiltonian::{leapfrog_step, Point};
use super::TargetDensity;

/// Nesterov dual averaging of `log ε` towards a target acceptance statistic.
#[derive(Debug, Clone)]
pub struct DualAveraging {
    target_accept: f64,
    mu: f64,
    gamma: f64,
    t0: f64,
    kappa: f64,
    t: f64,
    h_bar: f64,
    log_eps: f64,
    log_eps_bar: f64,
}

impl DualAveraging {
    pub fn new(initial_eps: f64, target_accept: f64) -> Self {
        Self {
            target_accept,
            mu: (10.0 * initial_eps).ln(),
            gamma: 0.05,
            t0: 10.0,
            kappa: 0.75,
            t: 0.0,
            h_bar: 0.0,
            log_eps: initial_eps.ln(),
            log_eps_bar: 0.0,
        }
    }

    pub fn update(&mut self, accept_stat: f64) {
        let accept = if accept_stat.is_finite() { accept_stat.min(1.0) } else { 0.0 };
        self.t += 1.0;
        let eta = 1.0 / (self.t + self.t0);
        self.h_bar = (1.0 - eta) * self.h_bar + eta * (self.target_accept - accept);
        self.log_eps = self.mu - self.t.sqrt() / self.gamma * self.h_bar;
        let w = self.t.powf(-self.kappa);
        self.log_eps_bar = w * self.log_eps + (1.0 - w) * self.log_eps_bar;
    }

    /// Step size to use for the next warmup iteration.
    pub fn current(&self) -> f64 {
        self.log_eps.exp()
    }

    /// Averaged step size, frozen at the end of warmup.
    pub fn final_step_size(&self) -> f64 {
        if self.t == 0.0 {
            self.current()
        } else {
            self.log_eps_bar.exp()
        }
    }
}

/// Replay a history of acceptance statistics and return the step-size
/// trajectory (one entry per update).
pub fn adapt_step_size(history: &[f64], target_accept: f64, initial_eps: f64) -> Vec<f64> {
    let mut da = DualAveraging::new(initial_eps, target_accept);
    history
        .iter()
        .map(|&a| {
            da.update(a);
            da.current()
        })
        .collect()
}

/// Heuristic initial step size: double or halve until a single leapfrog step
/// crosses an acceptance probability of 1/2.
pub fn find_reasonable_step_size<T, R>(target: &T, q: &[f64], rng: &mut R) -> f64
where
    T: TargetDensity + ?Sized,
    R: Rng,
{
    let mut eps = 1.0;
    let p: Vec<f64> = (0..q.len()).map(|_| rng.sample(StandardNormal)).collect();
    let z = Point::new(target, q.to_vec(), p);
    let h0 = z.energy();
    let log_ratio = |eps: f64| {
        let next = leapfrog_step(target, &z, eps);
        let d = h0 - next.energy();
        if d.is_nan() {
            f64::NEG_INFINITY
        } else {
            d
        }
    };
    let direction = if log_ratio(eps) > 0.5f64.ln() { 1.0 } else { -1.0 };
    for _ in 0..100 {
        let lr = log_ratio(eps);
        if direction * lr <= -direction * 2f64.ln() {
            break;
        }
        let next = eps * 2f64.powf(direction);
        if !(1e-10..=1e7).contains(&next) {
            break;
        }
        eps = next;
    }
    eps
}
