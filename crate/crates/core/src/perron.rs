//! Perron eigendata of nonnegative matrices.
//!
//! The main path is power iteration from the all-ones vector, iterated on the
//! matrix and on its transpose. When the spectral gap is so small that power
//! iteration stalls (weights like `e^{50 psi}` push the second eigenvalue
//! towards the unit circle), a Noda iteration takes over from the current
//! iterate: it solves `(sigma I - M) z = x` with `sigma` the Collatz-Wielandt
//! upper bound, which keeps iterates positive and converges superlinearly.
//! Both paths are deterministic.

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sft::SftModel;

/// Stopping rule on successive eigenvalue estimates, relative to the estimate.
pub const EIGENVALUE_TOL: f64 = 1e-13;
/// Stopping rule on `|M r - lambda r|_inf / lambda` with `|r|_inf = 1`.
pub const RESIDUAL_TOL: f64 = 1e-11;
pub const MAX_ITERATIONS: usize = 1_000_000;

const NODA_SWITCH: usize = 2_000;
const NODA_MAX_DIM: usize = 1_024;

/// Leading eigenvalue with positive left and right eigenvectors.
#[derive(Clone, Debug, Serialize)]
pub struct PerronData {
    pub eigenvalue: f64,
    /// Right eigenvector, sup-norm 1.
    pub right: Vec<f64>,
    /// Left eigenvector, scaled so that `left . right = 1`.
    pub left: Vec<f64>,
    pub right_residual: f64,
    pub left_residual: f64,
    pub iterations: usize,
}

struct Dominant {
    eigenvalue: f64,
    vector: DVector<f64>,
    residual: f64,
    iterations: usize,
}

fn check_square_nonnegative(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::invalid(format!(
            "expected a non-empty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::invalid("matrix entries must be finite and nonnegative"));
    }
    Ok(())
}

fn pattern_model(m: &DMatrix<f64>) -> Option<SftModel> {
    let n = m.nrows();
    let rows = (0..n)
        .map(|i| (0..n).map(|j| (m[(i, j)] > 0.0) as u8).collect())
        .collect();
    SftModel::new(rows).ok()
}

fn sup_normalize(v: &mut DVector<f64>) -> f64 {
    let s = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if s > 0.0 {
        *v /= s;
    }
    s
}

fn residual(m: &DMatrix<f64>, lambda: f64, x: &DVector<f64>) -> f64 {
    let y = m * x;
    (y - x * lambda).amax() / lambda
}

/// Collatz-Wielandt bounds `min_i (Mx)_i/x_i <= rho <= max_i (Mx)_i/x_i`.
fn cw_bounds(m: &DMatrix<f64>, x: &DVector<f64>) -> (f64, f64) {
    let y = m * x;
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for (yi, xi) in y.iter().zip(x.iter()) {
        let r = yi / xi;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    (lo, hi)
}

fn noda(m: &DMatrix<f64>, mut x: DVector<f64>, mut iterations: usize) -> Result<Dominant> {
    let n = m.nrows();
    for _ in 0..200 {
        iterations += 1;
        if x.iter().any(|v| *v <= 0.0) {
            break;
        }
        let (lo, hi) = cw_bounds(m, &x);
        if hi - lo <= 1e-15 * hi {
            break;
        }
        let shifted = DMatrix::<f64>::identity(n, n) * hi - m;
        let Some(z) = shifted.lu().solve(&x) else { break };
        if z.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            break;
        }
        x = z;
        sup_normalize(&mut x);
    }
    // a few plain steps give an estimate consistent with the residual test
    let mut lambda = 0.0;
    for _ in 0..3 {
        let mut y = m * &x;
        lambda = sup_normalize(&mut y);
        x = y;
        iterations += 1;
    }
    let res = residual(m, lambda, &x);
    if res < RESIDUAL_TOL {
        Ok(Dominant {
            eigenvalue: lambda,
            vector: x,
            residual: res,
            iterations,
        })
    } else {
        Err(Error::NumericalFailure {
            iterations,
            message: format!("Noda iteration stalled with residual {res:e}, estimate {lambda}"),
        })
    }
}

fn dominant(m: &DMatrix<f64>) -> Result<Dominant> {
    let n = m.nrows();
    let mut x = DVector::from_element(n, 1.0);
    let mut prev = f64::NAN;
    let mut last_res = f64::NAN;
    for it in 1..=MAX_ITERATIONS {
        let mut y = m * &x;
        let lambda = sup_normalize(&mut y);
        if lambda == 0.0 {
            return Err(Error::NumericalFailure {
                iterations: it,
                message: "iterate collapsed to zero".into(),
            });
        }
        x = y;
        if (lambda - prev).abs() < EIGENVALUE_TOL * lambda {
            last_res = residual(m, lambda, &x);
            if last_res < RESIDUAL_TOL {
                return Ok(Dominant {
                    eigenvalue: lambda,
                    vector: x,
                    residual: last_res,
                    iterations: it,
                });
            }
        }
        prev = lambda;
        if it == NODA_SWITCH && n <= NODA_MAX_DIM && x.iter().all(|v| *v > 0.0) {
            return noda(m, x, it);
        }
    }
    Err(Error::NumericalFailure {
        iterations: MAX_ITERATIONS,
        message: format!("power iteration did not converge: estimate {prev}, residual {last_res:e}"),
    })
}

/// Perron root and eigenvectors of a primitive nonnegative matrix.
pub fn perron(m: &DMatrix<f64>) -> Result<PerronData> {
    check_square_nonnegative(m)?;
    let pattern = pattern_model(m).ok_or_else(|| Error::NotMixing("matrix has a zero row or column".into()))?;
    pattern.require_primitive()?;

    let right = dominant(m)?;
    let mt = m.transpose();
    let left = dominant(&mt)?;
    let r = right.vector;
    let mut l = left.vector;
    let dot = l.dot(&r);
    l /= dot;
    if r.iter().chain(l.iter()).any(|v| !(*v > 0.0)) {
        return Err(Error::NumericalFailure {
            iterations: right.iterations + left.iterations,
            message: "Perron vector has a non-positive entry".into(),
        });
    }
    let lambda = right.eigenvalue;
    let left_residual = residual(&mt, lambda, &(&l / l.amax()));
    Ok(PerronData {
        eigenvalue: lambda,
        right: r.iter().copied().collect(),
        left: l.iter().copied().collect(),
        right_residual: right.residual,
        left_residual: left_residual.max(left.residual),
        iterations: right.iterations + left.iterations,
    })
}

/// Spectral radius of any nonnegative matrix.
///
/// The radius is the largest radius over strongly connected blocks. Periodic
/// blocks are iterated after a positive diagonal shift, which makes them
/// primitive without moving the Perron vector.
pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    check_square_nonnegative(m)?;
    let n = m.nrows();
    let mut g = DiGraph::<(), ()>::with_capacity(n, n * n);
    let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
    for i in 0..n {
        for j in 0..n {
            if m[(i, j)] > 0.0 {
                g.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    let mut comps: Vec<Vec<usize>> = tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut v: Vec<usize> = c.into_iter().map(|x| x.index()).collect();
            v.sort_unstable();
            v
        })
        .collect();
    comps.sort();

    let mut rho = 0.0f64;
    for comp in comps {
        let k = comp.len();
        let sub = DMatrix::from_fn(k, k, |a, b| m[(comp[a], comp[b])]);
        let r = if k == 1 {
            sub[(0, 0)]
        } else {
            let primitive = pattern_model(&sub).is_some_and(|p| p.is_primitive());
            if primitive {
                dominant(&sub)?.eigenvalue
            } else {
                let shift = sub.row_iter().map(|row| row.sum()).fold(f64::INFINITY, f64::min);
                let shifted = &sub + DMatrix::<f64>::identity(k, k) * shift;
                dominant(&shifted)?.eigenvalue - shift
            }
        };
        rho = rho.max(r);
    }
    Ok(rho)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_ones() {
        let p = perron(&DMatrix::from_element(2, 2, 1.0)).unwrap();
        assert!((p.eigenvalue - 2.0).abs() < 1e-14);
        assert!(p.right.iter().all(|v| (v - 1.0).abs() < 1e-14));
        assert!(p.left.iter().all(|v| (v - 0.5).abs() < 1e-14));
    }

    #[test]
    fn golden_ratio() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 0.0]);
        let p = perron(&m).unwrap();
        let g = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((p.eigenvalue - g).abs() < 1e-13);
        assert!(p.right_residual < RESIDUAL_TOL && p.left_residual < RESIDUAL_TOL);
    }

    #[test]
    fn reducible_and_periodic_radius() {
        let a = DMatrix::from_row_slice(4, 4, &[1., 1., 1., 0., 1., 1., 1., 0., 1., 1., 1., 0., 0., 0., 0., 1.]);
        assert!(matches!(perron(&a), Err(Error::NotMixing(_))));
        assert!((spectral_radius(&a).unwrap() - 3.0).abs() < 1e-13);

        let swap = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 8.0, 0.0]);
        assert!(matches!(perron(&swap), Err(Error::NotMixing(_))));
        assert!((spectral_radius(&swap).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn nearly_periodic_weights_converge() {
        // eigenvalues close to +-lambda: plain power iteration stalls here
        let w = 50f64.exp();
        let m = DMatrix::from_row_slice(2, 2, &[1.0, w, 1.0, 0.0]);
        let p = perron(&m).unwrap();
        let exact = (1.0 + (1.0 + 4.0 * w).sqrt()) / 2.0;
        assert!(((p.eigenvalue - exact) / exact).abs() < 1e-12);
    }

    #[test]
    fn nearly_reducible_weights_converge() {
        let e = 30f64.exp();
        let m = DMatrix::from_row_slice(3, 3, &[e, 1.0, 0.0, 1.0, e * (1.0 - 1e-9), 1.0, 0.0, 1.0, 2.0]);
        let p = perron(&m).unwrap();
        assert!(p.right_residual < RESIDUAL_TOL);
        let exact = m.clone().symmetric_eigen().eigenvalues.max();
        assert!(((p.eigenvalue - exact) / exact).abs() < 1e-13);
    }
}
