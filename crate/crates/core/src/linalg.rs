//! Dense symmetric positive-definite solves for the small Newton systems of
//! the interior-point projection.

use crate::error::{Error, Result};

/// Pivots below this fraction of their diagonal entry count as lost to
/// cancellation.
const PIVOT_FLOOR: f64 = 1e-14;

/// Stands in for a cancelled pivot; the matching solution component
/// comes out as (nearly) zero.
const PIVOT_REPLACEMENT: f64 = 1e128;

/// Solves `M x = rhs` for row-major SPD `M` of order `n`, in place of `rhs`.
///
/// Interior-point normal matrices carry weights that grow without bound on
/// active rows, so a pivot can cancel to (near) zero although `M` is
/// positive definite. Such pivots are replaced by a huge value instead of
/// failing; clearly negative pivots are still rejected.
pub(crate) fn cholesky_solve(m: &[f64], rhs: &mut [f64]) -> Result<()> {
    let n = rhs.len();
    debug_assert_eq!(m.len(), n * n);
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut diag = m[j * n + j];
        for k in 0..j {
            diag -= l[j * n + k] * l[j * n + k];
        }
        let floor = PIVOT_FLOOR * m[j * n + j].abs();
        if diag.abs() <= floor {
            diag = PIVOT_REPLACEMENT;
        } else if !(diag > 0.0) || !diag.is_finite() {
            return Err(Error::Degenerate(format!(
                "Newton matrix is not positive definite (pivot {j} = {diag:e})"
            )));
        }
        let d = diag.sqrt();
        l[j * n + j] = d;
        for i in j + 1..n {
            let mut v = m[i * n + j];
            for k in 0..j {
                v -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = v / d;
        }
    }
    for i in 0..n {
        let mut v = rhs[i];
        for k in 0..i {
            v -= l[i * n + k] * rhs[k];
        }
        rhs[i] = v / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut v = rhs[i];
        for k in i + 1..n {
            v -= l[k * n + i] * rhs[k];
        }
        rhs[i] = v / l[i * n + i];
    }
    Ok(())
}
