//! Multinomial No-U-Turn transitions with the generalized U-turn criterion.

use rand::Rng;
use rand_distr::StandardNormal;

use super::hamiltonian::{dot, leapfrog_step, Point};
use super::TargetDensity;
use crate::stats::log_sum_exp;
use crate::{Error, Result};

/// Energy error above which a trajectory is declared divergent.
pub const MAX_DELTA_H: f64 = 1000.0;

/// Per-transition sampler statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionStats {
    /// Number of completed trajectory doublings.
    pub tree_depth: u32,
    pub n_leapfrog: u32,
    pub divergent: bool,
    /// Mean Metropolis acceptance probability over all visited states.
    pub accept_stat: f64,
    /// Hamiltonian at the selected state.
    pub energy: f64,
}

fn log_add(a: f64, b: f64) -> f64 {
    log_sum_exp(&[a, b])
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Generalized U-turn check: both trajectory ends still move along `rho`.
fn no_u_turn(p_minus: &[f64], p_plus: &[f64], rho: &[f64]) -> bool {
    dot(p_plus, rho) > 0.0 && dot(p_minus, rho) > 0.0
}

struct Builder<'a, T: ?Sized, R> {
    target: &'a T,
    rng: &'a mut R,
    eps: f64,
    h0: f64,
    n_leapfrog: u32,
    sum_metro_prob: f64,
    divergent: bool,
}

/// Output of one subtree build, with momenta at its two ends in build order.
struct Subtree {
    propose: Point,
    rho: Vec<f64>,
    p_beg: Vec<f64>,
    p_end: Vec<f64>,
    log_sum_weight: f64,
}

impl<T: TargetDensity + ?Sized, R: Rng> Builder<'_, T, R> {
    /// Build a subtree of `2^depth` leapfrog steps starting from `z` in
    /// direction `sign`. Returns the subtree and its far edge, or `None` when
    /// it diverged or contains a U-turn.
    fn build(&mut self, z: &Point, depth: u32, sign: f64) -> Option<(Subtree, Point)> {
        if depth == 0 {
            let next = leapfrog_step(self.target, z, sign * self.eps);
            self.n_leapfrog += 1;
            let h = next.energy();
            if h - self.h0 > MAX_DELTA_H {
                self.divergent = true;
            }
            let w = self.h0 - h;
            self.sum_metro_prob += if w > 0.0 { 1.0 } else { w.exp() };
            if self.divergent {
                return None;
            }
            let tree = Subtree {
                propose: next.clone(),
                rho: next.p.clone(),
                p_beg: next.p.clone(),
                p_end: next.p.clone(),
                log_sum_weight: w,
            };
            return Some((tree, next));
        }

        let (init, edge) = self.build(z, depth - 1, sign)?;
        let (fin, edge) = self.build(&edge, depth - 1, sign)?;

        let log_sum_weight = log_add(init.log_sum_weight, fin.log_sum_weight);
        let accept = (fin.log_sum_weight - log_sum_weight).exp();
        let take_final = fin.log_sum_weight > log_sum_weight || self.rng.random::<f64>() < accept;
        let rho = add(&init.rho, &fin.rho);

        let mut persist = no_u_turn(&init.p_beg, &fin.p_end, &rho);
        persist &= no_u_turn(&init.p_beg, &fin.p_beg, &add(&init.rho, &fin.p_beg));
        persist &= no_u_turn(&init.p_end, &fin.p_end, &add(&fin.rho, &init.p_end));
        if !persist {
            return None;
        }

        let tree = Subtree {
            propose: if take_final { fin.propose } else { init.propose },
            rho,
            p_beg: init.p_beg,
            p_end: fin.p_end,
            log_sum_weight,
        };
        Some((tree, edge))
    }
}

/// One NUTS transition from position `q`.
///
/// `max_depth` bounds the number of trajectory doublings; values 0 and 1 both
/// give a single leapfrog step followed by a Metropolis accept/reject.
pub fn nuts_draw<T, R>(
    q: &[f64],
    eps: f64,
    target: &T,
    max_depth: u32,
    rng: &mut R,
) -> Result<(Vec<f64>, TransitionStats)>
where
    T: TargetDensity + ?Sized,
    R: Rng,
{
    let p0: Vec<f64> = (0..q.len()).map(|_| rng.sample(StandardNormal)).collect();
    let z0 = Point::new(target, q.to_vec(), p0);
    if !z0.logp.is_finite() || z0.grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Initialization {
            chain: 0,
            message: "non-finite log density at the current position".into(),
        });
    }
    let h0 = z0.energy();
    let max_depth = max_depth.max(1);

    let mut z_fwd = z0.clone();
    let mut z_bck = z0.clone();
    // Momenta at the forward-most and backward-most trajectory states.
    let mut p_fwd_fwd = z0.p.clone();
    let mut p_bck_bck = z0.p.clone();
    let mut rho = z0.p.clone();
    let mut sample = z0;
    let mut log_sum_weight = 0.0;
    let mut depth = 0;

    let mut builder = Builder { target, rng, eps, h0, n_leapfrog: 0, sum_metro_prob: 0.0, divergent: false };

    while depth < max_depth {
        let forward = builder.rng.random::<f64>() > 0.5;
        let (start, sign) = if forward { (&z_fwd, 1.0) } else { (&z_bck, -1.0) };
        let Some((tree, edge)) = builder.build(start, depth, sign) else {
            break;
        };
        depth += 1;

        if tree.log_sum_weight > log_sum_weight {
            sample = tree.propose.clone();
        } else {
            let accept = (tree.log_sum_weight - log_sum_weight).exp();
            if builder.rng.random::<f64>() < accept {
                sample = tree.propose.clone();
            }
        }
        log_sum_weight = log_add(log_sum_weight, tree.log_sum_weight);

        // Split into backward and forward halves (old trajectory + new subtree)
        // and record the momenta at the inner edges where they meet.
        let (rho_bck, rho_fwd, p_bck_fwd, p_fwd_bck) = if forward {
            let inner = std::mem::replace(&mut p_fwd_fwd, tree.p_end);
            z_fwd = edge;
            (rho.clone(), tree.rho, inner, tree.p_beg)
        } else {
            let inner = std::mem::replace(&mut p_bck_bck, tree.p_end);
            z_bck = edge;
            (tree.rho, rho.clone(), tree.p_beg, inner)
        };
        rho = add(&rho_bck, &rho_fwd);

        let mut persist = no_u_turn(&p_bck_bck, &p_fwd_fwd, &rho);
        persist &= no_u_turn(&p_bck_bck, &p_fwd_bck, &add(&rho_bck, &p_fwd_bck));
        persist &= no_u_turn(&p_bck_fwd, &p_fwd_fwd, &add(&rho_fwd, &p_bck_fwd));
        if !persist {
            break;
        }
    }

    let stats = TransitionStats {
        tree_depth: depth,
        n_leapfrog: builder.n_leapfrog,
        divergent: builder.divergent,
        accept_stat: builder.sum_metro_prob / f64::from(builder.n_leapfrog.max(1)),
        energy: sample.energy(),
    };
    Ok((sample.q, stats))
}
