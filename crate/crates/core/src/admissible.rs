//! Elementary symmetric functions, radial Hessian spectra and the
//! discrete k-admissibility test.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::RadialProfile;
use crate::params::{binomial_f64, ProblemParams};

/// All elementary symmetric functions `sigma_0..=sigma_n` of `eigs`.
///
/// Uses the product expansion `prod (1 + lambda_i x)` one factor at a time,
/// which only ever adds products of inputs (no cancelling power sums).
pub fn elementary_symmetric(eigs: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; eigs.len() + 1];
    e[0] = 1.0;
    for (m, &lambda) in eigs.iter().enumerate() {
        for j in (1..=m + 1).rev() {
            e[j] += lambda * e[j - 1];
        }
    }
    e
}

/// `sigma_j(eigs)` for `1 <= j <= eigs.len()`.
pub fn sigma_j(eigs: &[f64], j: usize) -> Result<f64> {
    if j == 0 || j > eigs.len() {
        return Err(Error::IndexOutOfRange {
            index: j,
            len: eigs.len(),
        });
    }
    Ok(elementary_symmetric(eigs)[j])
}

/// Hessian eigenvalues of a radial function at `r > 0`:
/// `u''` once and `u'/r` with multiplicity `n - 1`.
pub fn radial_hessian_eigs(u_prime: f64, u_second: f64, r: f64, n: usize) -> Result<Vec<f64>> {
    if r <= 0.0 {
        return Err(Error::OriginRadius(r));
    }
    let mut eigs = vec![u_prime / r; n];
    eigs[0] = u_second;
    Ok(eigs)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdmissibilityViolation {
    pub node: usize,
    pub j: usize,
    /// `sigma_j` of the eigenvalues normalized by the profile scale.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub admissible: bool,
    pub first_violation: Option<AdmissibilityViolation>,
    /// Hessian scale `max|u| / R^2` the eigenvalues were divided by.
    pub scale: f64,
}

/// Default tolerance on normalized `sigma_j` values.
pub const DEFAULT_ADMISSIBILITY_TOL: f64 = 1e-10;

/// Checks `sigma_j(Lambda(D^2 u)) > -tol` for `j = 1..=k` at nodes `0..m-1`.
///
/// Derivatives are centered differences; the origin uses the symmetric limit
/// (all eigenvalues `2 (u_1 - u_0) / dr^2`). Eigenvalues are divided by the
/// profile scale `max|u| / R^2` first so that `tol` is dimensionless.
pub fn is_k_admissible_radial(
    profile: &RadialProfile,
    params: &ProblemParams,
    tol: f64,
) -> Result<AdmissibilityReport> {
    let grid = profile.grid();
    if grid.len() < 3 {
        return Err(Error::GridTooCoarse {
            cells: grid.cells(),
            required: 2,
        });
    }
    let r = grid.radius();
    let scale = profile.sup_norm() / (r * r);
    let first_violation = first_violation(profile.values(), grid.dr(), params, scale, tol);
    Ok(AdmissibilityReport {
        admissible: first_violation.is_none(),
        first_violation,
        scale,
    })
}

/// `sigma_j` of the radial multiset `(a, b, ..., b)` with `n - 1` copies of `b`:
/// `binom(n-1, j) b^j + binom(n-1, j-1) a b^{j-1}`.
pub fn radial_sigma_j(a: f64, b: f64, n: usize, j: usize) -> f64 {
    let bj1 = b.powi(j as i32 - 1);
    binomial_f64(n - 1, j) * bj1 * b + binomial_f64(n - 1, j - 1) * a * bj1
}

pub(crate) fn first_violation(
    u: &[f64],
    h: f64,
    params: &ProblemParams,
    scale: f64,
    tol: f64,
) -> Option<AdmissibilityViolation> {
    if scale == 0.0 {
        // u = 0 identically sits on the boundary of the cone
        return None;
    }
    let n = params.n;
    let k = params.k;
    let m = u.len() - 1;
    for i in 0..m {
        let (a, b) = if i == 0 {
            let a = 2.0 * (u[1] - u[0]) / (h * h) / scale;
            (a, a)
        } else {
            let r = i as f64 * h;
            let d1 = (u[i + 1] - u[i - 1]) / (2.0 * h);
            let d2 = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h);
            (d2 / scale, d1 / r / scale)
        };
        for j in 1..=k {
            let value = radial_sigma_j(a, b, n, j);
            if value <= -tol {
                return Some(AdmissibilityViolation { node: i, j, value });
            }
        }
    }
    None
}
