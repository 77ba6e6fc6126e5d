//! Seeded multi-start Nelder–Mead over waveplate angles (degrees).

use argmin::core::{CostFunction, Error as ArgminError, Executor, State};
use argmin::solver::neldermead::NelderMead;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Minimum {
    pub point: Vec<f64>,
    pub residual: f64,
}

struct Objective<'a, F: Fn(&[f64]) -> f64> {
    f: &'a F,
}

impl<F: Fn(&[f64]) -> f64> CostFunction for Objective<'_, F> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> std::result::Result<f64, ArgminError> {
        Ok((self.f)(p))
    }
}

/// Single Nelder–Mead run from `start` with an axis-aligned initial simplex of `step` degrees.
pub fn minimize<F: Fn(&[f64]) -> f64>(f: &F, start: &[f64], step: f64, max_iters: u64) -> Minimum {
    let mut simplex = vec![start.to_vec()];
    for k in 0..start.len() {
        let mut v = start.to_vec();
        v[k] += step;
        simplex.push(v);
    }
    let solver = NelderMead::new(simplex).with_sd_tolerance(1e-30).expect("positive tolerance");
    let result = Executor::new(Objective { f }, solver)
        .configure(|s| s.max_iters(max_iters).target_cost(0.0))
        .run();
    match result {
        Ok(res) => {
            let state = res.state();
            let point = state.get_best_param().cloned().unwrap_or_else(|| start.to_vec());
            Minimum { residual: f(&point), point }
        }
        Err(_) => Minimum { point: start.to_vec(), residual: f(start) },
    }
}

/// Runs from `start`, then from up to `restarts` uniformly random points in
/// `[0, 180)^n`, stopping as soon as the residual drops below `tol`. Each run
/// is polished once with a small simplex.
pub fn minimize_with_restarts<F: Fn(&[f64]) -> f64>(
    f: &F,
    start: &[f64],
    restarts: usize,
    tol: f64,
    seed: u64,
    what: &'static str,
) -> Result<Minimum> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<Minimum> = None;
    for attempt in 0..=restarts {
        let x0: Vec<f64> = if attempt == 0 {
            start.to_vec()
        } else {
            (0..start.len()).map(|_| rng.random_range(0.0..180.0)).collect()
        };
        let coarse = minimize(f, &x0, 20.0, 2000);
        let fine = minimize(f, &coarse.point, 0.5, 2000);
        let run = if fine.residual <= coarse.residual { fine } else { coarse };
        if run.residual < tol {
            return Ok(run);
        }
        if best.as_ref().is_none_or(|b| run.residual < b.residual) {
            best = Some(run);
        }
    }
    Err(Error::NoConvergence { what, residual: best.map_or(f64::INFINITY, |b| b.residual) })
}
