//! Small dense solvers: Levenberg–Marquardt for nonlinear least squares and
//! Nelder–Mead for derivative-free minimization.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::algebra::real_jacobian;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LmOptions {
    /// Stop once the largest residual magnitude is below this.
    pub target: f64,
    pub max_iter: usize,
    pub step: f64,
    pub richardson: bool,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions { target: 1e-10, max_iter: 100, step: 1e-6, richardson: false }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LmReport {
    pub x: Vec<f64>,
    pub residual: Vec<f64>,
    pub max_residual: f64,
    pub iterations: usize,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn sum_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Minimizes `|f(x)|²` from `x0`. Returns the best point found whether or
/// not `target` was reached; evaluation failures at trial points count as
/// rejected steps.
pub fn levenberg_marquardt<F>(mut f: F, x0: &[f64], opts: &LmOptions) -> Result<LmReport>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let mut x = x0.to_vec();
    let mut r = f(&x)?;
    let mut cost = sum_sq(&r);
    let mut mu = 1e-6;
    let mut iterations = 0;
    while iterations < opts.max_iter && max_abs(&r) >= opts.target {
        iterations += 1;
        let j = real_jacobian(&mut f, &x, opts.step, opts.richardson)?;
        let jt = j.transpose();
        let jtj = &jt * &j;
        let g = &jt * DVector::from_column_slice(&r);
        let n = x.len();
        let mut improved = false;
        for _ in 0..30 {
            let a = &jtj + DMatrix::<f64>::identity(n, n) * mu;
            let Some(delta) = a.lu().solve(&(-&g)) else {
                mu *= 10.0;
                continue;
            };
            let trial: Vec<f64> = x.iter().zip(delta.iter()).map(|(a, b)| a + b).collect();
            match f(&trial) {
                Ok(rt) if sum_sq(&rt) < cost => {
                    x = trial;
                    cost = sum_sq(&rt);
                    r = rt;
                    mu = (mu / 10.0).max(1e-15);
                    improved = true;
                    break;
                }
                _ => mu *= 10.0,
            }
        }
        if !improved {
            break;
        }
    }
    let max_residual = max_abs(&r);
    Ok(LmReport { x, residual: r, max_residual, iterations })
}

#[derive(Clone, Debug, PartialEq)]
pub struct NelderMeadReport {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    /// Best value after each iteration; non-increasing.
    pub trace: Vec<f64>,
}

/// Nelder–Mead with standard coefficients from a simplex of edge `scale`
/// around `x0`. Non-finite objective values are treated as `+∞`. Stops when
/// the simplex values agree to `ftol` or the best value drops below `fstop`.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], scale: f64, max_iter: usize, ftol: f64, fstop: f64) -> NelderMeadReport
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut eval = |x: &[f64], count: &mut usize| {
        *count += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let mut evaluations = 0;
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0, &mut evaluations)));
    for k in 0..n {
        let mut p = x0.to_vec();
        p[k] += scale;
        let v = eval(&p, &mut evaluations);
        simplex.push((p, v));
    }
    let mut trace = Vec::with_capacity(max_iter);
    let lerp = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect() };
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        trace.push(simplex[0].1);
        if simplex[0].1 < fstop {
            break;
        }
        if (simplex[n].1 - simplex[0].1).abs() <= ftol * (1.0 + simplex[0].1.abs()) && simplex[0].1.is_finite() {
            break;
        }
        let mut centroid = alloc::vec![0.0; n];
        for (p, _) in &simplex[..n] {
            for k in 0..n {
                centroid[k] += p[k] / n as f64;
            }
        }
        let worst = simplex[n].0.clone();
        let reflected = lerp(&centroid, &worst, -1.0);
        let fr = eval(&reflected, &mut evaluations);
        if fr < simplex[0].1 {
            let expanded = lerp(&centroid, &worst, -2.0);
            let fe = eval(&expanded, &mut evaluations);
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let (contracted, fc) = if fr < simplex[n].1 {
                let p = lerp(&centroid, &worst, -0.5);
                let v = eval(&p, &mut evaluations);
                (p, v)
            } else {
                let p = lerp(&centroid, &worst, 0.5);
                let v = eval(&p, &mut evaluations);
                (p, v)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (contracted, fc);
            } else {
                let best = simplex[0].0.clone();
                for item in simplex.iter_mut().skip(1) {
                    let p = lerp(&best, &item.0, 0.5);
                    let v = eval(&p, &mut evaluations);
                    *item = (p, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    trace.push(value);
    NelderMeadReport { x, value, evaluations, trace }
}

/// Returns `Err(NoConvergence)` unless the report reached `accept`.
pub fn require_converged(report: &LmReport, accept: f64) -> Result<()> {
    if report.max_residual < accept {
        Ok(())
    } else {
        Err(Error::NoConvergence { max_residual: report.max_residual })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn lm_solves_overdetermined_system() {
        let f = |x: &[f64]| Ok(vec![x[0] * x[0] - 4.0, x[0] * x[1] - 2.0, x[1] - 1.0]);
        let rep = levenberg_marquardt(f, &[1.0, 0.0], &LmOptions::default()).unwrap();
        assert!(rep.max_residual < 1e-10);
        assert!((rep.x[0] - 2.0).abs() < 1e-9 && (rep.x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn nelder_mead_minimizes_rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let rep = nelder_mead(f, &[-1.2, 1.0], 0.5, 2000, 1e-16, f64::NEG_INFINITY);
        assert!(rep.value < 1e-10, "{}", rep.value);
        assert!(rep.trace.windows(2).all(|w| w[1] <= w[0]));
    }
}
