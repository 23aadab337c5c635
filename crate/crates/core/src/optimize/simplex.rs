use nalgebra::Vector6;
use serde::{Deserialize, Serialize};

pub type Params = Vector6<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerSettings {
    pub max_iterations: usize,
    /// Initial simplex edge for the three translation coordinates.
    pub init_translation_m: f64,
    /// Initial simplex edge for the three rotation coordinates.
    pub init_rotation_rad: f64,
    /// Stop once the simplex cost spread is below this.
    pub cost_tolerance: f64,
    /// ... and every vertex lies this close to the best one.
    pub param_tolerance: f64,
    /// Fresh simplices built around the best point after the first run.
    pub restarts: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            max_iterations: 3000,
            init_translation_m: 0.05,
            init_rotation_rad: 0.02,
            cost_tolerance: 1e-10,
            param_tolerance: 1e-9,
            restarts: 1,
        }
    }
}

impl OptimizerSettings {
    pub fn validate(&self) -> Result<(), String> {
        let ok = self.max_iterations > 0
            && self.init_translation_m > 0.0
            && self.init_rotation_rad > 0.0
            && self.cost_tolerance > 0.0
            && self.param_tolerance > 0.0;
        if ok {
            Ok(())
        } else {
            Err("optimizer tolerances, scales and iteration cap must be positive".into())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Params,
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Best cost after each iteration.
    pub history: Vec<f64>,
}

/// Nelder–Mead over six parameters, restarted from the best vertex.
pub fn nelder_mead(
    f: impl Fn(&Params) -> f64,
    x0: &Params,
    s: &OptimizerSettings,
) -> SimplexResult {
    let mut x = *x0;
    let mut fx = f(&x);
    let mut history = vec![fx];
    let mut iterations = 0;
    let mut converged = false;
    for _ in 0..=s.restarts {
        let budget = s.max_iterations.saturating_sub(iterations);
        if budget == 0 {
            break;
        }
        let run = single_run(&f, &x, fx, s, budget, &mut history);
        iterations += run.1;
        converged = run.2;
        x = run.0;
        fx = *history.last().unwrap_or(&fx);
    }
    SimplexResult {
        x,
        cost: fx,
        iterations,
        converged,
        history,
    }
}

fn single_run(
    f: &impl Fn(&Params) -> f64,
    x0: &Params,
    f0: f64,
    s: &OptimizerSettings,
    budget: usize,
    history: &mut Vec<f64>,
) -> (Params, usize, bool) {
    const N: usize = 6;
    let mut pts: Vec<(Params, f64)> = Vec::with_capacity(N + 1);
    pts.push((*x0, f0));
    for i in 0..N {
        let mut p = *x0;
        p[i] += if i < 3 {
            s.init_translation_m
        } else {
            s.init_rotation_rad
        };
        pts.push((p, f(&p)));
    }
    let mut iterations = 0;
    let mut converged = false;
    while iterations < budget {
        pts.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = pts[0].1;
        let spread = pts[N].1 - best;
        let size = pts[1..]
            .iter()
            .map(|p| (p.0 - pts[0].0).amax())
            .fold(0.0, f64::max);
        if spread <= s.cost_tolerance && size <= s.param_tolerance {
            converged = true;
            break;
        }
        iterations += 1;
        let centroid = pts[..N].iter().fold(Params::zeros(), |a, p| a + p.0) / N as f64;
        let worst = pts[N];
        let reflect = centroid + (centroid - worst.0);
        let fr = f(&reflect);
        if fr < pts[0].1 {
            let expand = centroid + (reflect - centroid) * 2.0;
            let fe = f(&expand);
            pts[N] = if fe < fr { (expand, fe) } else { (reflect, fr) };
        } else if fr < pts[N - 1].1 {
            pts[N] = (reflect, fr);
        } else {
            let (contract, fc) = if fr < worst.1 {
                let c = centroid + (reflect - centroid) * 0.5;
                (c, f(&c))
            } else {
                let c = centroid + (worst.0 - centroid) * 0.5;
                (c, f(&c))
            };
            if fc < worst.1.min(fr) {
                pts[N] = (contract, fc);
            } else {
                let b = pts[0].0;
                for p in pts[1..].iter_mut() {
                    p.0 = b + (p.0 - b) * 0.5;
                    p.1 = f(&p.0);
                }
            }
        }
        let now = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        history.push(now.min(*history.last().unwrap_or(&now)));
    }
    pts.sort_by(|a, b| a.1.total_cmp(&b.1));
    if pts[0].1 > *history.last().unwrap_or(&f64::INFINITY) {
        // Cannot happen with the bookkeeping above, but never hand back a
        // worse point than the one we started from.
        return (*x0, iterations, converged);
    }
    (pts[0].0, iterations, converged)
}
