use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const DEFAULT_STEP: f64 = 1e-6;

/// Central finite-difference Jacobian of `f` at `x0`.
///
/// With `richardson` set, each column is refined once as
/// `(4 D(h/2) - D(h)) / 3`, cancelling the `h^2` error term.
pub fn real_jacobian<F, E>(mut f: F, x0: &[f64], h: f64, richardson: bool) -> Result<DMatrix<f64>>
where
    F: FnMut(&[f64]) -> core::result::Result<Vec<f64>, E>,
    E: core::fmt::Display,
{
    let n = x0.len();
    let fail = |e: E| Error::EvaluationFailed(alloc::format!("{e}"));
    let mut x = x0.to_vec();
    let mut central = |x: &mut Vec<f64>, k: usize, step: f64| -> Result<Vec<f64>> {
        let orig = x[k];
        x[k] = orig + step;
        let plus = f(x).map_err(fail)?;
        x[k] = orig - step;
        let minus = f(x).map_err(fail)?;
        x[k] = orig;
        if plus.len() != minus.len() {
            return Err(Error::EvaluationFailed("output length changed".into()));
        }
        Ok(plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * step)).collect())
    };
    let mut columns = Vec::with_capacity(n);
    for k in 0..n {
        let coarse = central(&mut x, k, h)?;
        let col = if richardson {
            let fine = central(&mut x, k, h / 2.0)?;
            fine.iter().zip(&coarse).map(|(a, b)| (4.0 * a - b) / 3.0).collect()
        } else {
            coarse
        };
        columns.push(col);
    }
    let m = columns.first().map(Vec::len).unwrap_or(0);
    Ok(DMatrix::from_fn(m, n, |i, j| columns[j][i]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::convert::Infallible;

    #[test]
    fn identity_jacobian() {
        let j = real_jacobian(|x: &[f64]| Ok::<_, Infallible>(x.to_vec()), &[0.3, -1.0, 2.0], DEFAULT_STEP, true)
            .unwrap();
        let id = DMatrix::<f64>::identity(3, 3);
        assert!((j - id).abs().max() < 1e-9);
    }

    #[test]
    fn quadratic_jacobian() {
        let f = |x: &[f64]| Ok::<_, Infallible>(alloc::vec![x[0] * x[0], x[0] * x[1]]);
        let j = real_jacobian(f, &[1.0, 1.0], DEFAULT_STEP, false).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 1.0, 1.0]);
        assert!((j - expect).abs().max() < 1e-6);
    }

    #[test]
    fn propagates_failure() {
        let f = |_: &[f64]| Err::<Vec<f64>, _>("boom");
        assert!(matches!(real_jacobian(f, &[0.0], 1e-3, false), Err(Error::EvaluationFailed(_))));
    }
}
