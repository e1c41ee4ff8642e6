//! Conservative discretization of the radial k-Hessian operator
//!
//! ```text
//! S_k(D^2 u) = c_{n,k} r^{1-n} ( r^{n-k} (u')^k )'
//! ```
//!
//! Fluxes live on cell faces, `F_{i+1/2} = r_{i+1/2}^{n-k} ((u_{i+1} - u_i)/dr)^k`,
//! and node `i` receives `c_{n,k} (F_{i+1/2} - F_{i-1/2}) / V_i` where
//! `V_i = int r^{n-1} dr` over its dual cell. Using the dual-cell measure
//! instead of `r_i^{n-1} dr` makes the scheme exact on quadratics in every
//! dimension and turns the sum `sum_i V_i S_i` into a pure boundary flux.
//! At the origin the dual cell is `[0, dr/2]`, which reproduces the
//! symmetric limit `binom(n,k) (2 (u_1 - u_0) / dr^2)^k`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{RadialGrid, RadialProfile};
use crate::params::ProblemParams;

/// Minimum number of cells accepted by the operator.
pub const MIN_CELLS: usize = 4;

/// Face fluxes `F_{i+1/2}`, `i = 0..m-1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluxField {
    pub grid: RadialGrid,
    pub flux: Vec<f64>,
}

/// Precomputed geometric weights for one `(grid, n, k)` triple.
#[derive(Debug, Clone)]
pub struct RadialOperator {
    grid: RadialGrid,
    params: ProblemParams,
    /// `r_{i+1/2}^{n-k}` for every face.
    face_weight: Vec<f64>,
    /// `c_{n,k} / V_i` for nodes `0..m-1`.
    node_weight: Vec<f64>,
}

impl RadialOperator {
    pub fn new(grid: RadialGrid, params: ProblemParams) -> Result<Self> {
        if grid.cells() < MIN_CELLS {
            return Err(Error::GridTooCoarse {
                cells: grid.cells(),
                required: MIN_CELLS,
            });
        }
        let m = grid.cells();
        let n = params.n;
        let face_weight = (0..m)
            .map(|i| grid.face(i).powi((params.n - params.k) as i32))
            .collect();
        let node_weight = (0..m).map(|i| params.c_nk / grid.dual_volume(i, n)).collect();
        Ok(Self {
            grid,
            params,
            face_weight,
            node_weight,
        })
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn params(&self) -> &ProblemParams {
        &self.params
    }

    #[inline]
    fn face_flux(&self, i: usize, lo: f64, hi: f64, inv_h: f64) -> f64 {
        // sign-preserving integer power: odd k keeps the sign of u'
        self.face_weight[i] * ((hi - lo) * inv_h).powi(self.params.k as i32)
    }

    pub fn fluxes(&self, u: &[f64]) -> Vec<f64> {
        let inv_h = 1.0 / self.grid.dr();
        (0..self.grid.cells())
            .map(|i| self.face_flux(i, u[i], u[i + 1], inv_h))
            .collect()
    }

    /// Writes `S_k(D^2 u)` at nodes `0..m-1` into `out[..m]`; `out[m]` gets the
    /// linear extrapolation `2 S_{m-1} - S_{m-2}`.
    pub fn apply_into(&self, u: &[f64], out: &mut [f64]) {
        let m = self.grid.cells();
        debug_assert_eq!(u.len(), m + 1);
        debug_assert_eq!(out.len(), m + 1);
        let inv_h = 1.0 / self.grid.dr();
        let mut left = 0.0;
        for i in 0..m {
            let right = self.face_flux(i, u[i], u[i + 1], inv_h);
            out[i] = self.node_weight[i] * (right - left);
            left = right;
        }
        out[m] = 2.0 * out[m - 1] - out[m - 2];
    }

    pub fn apply(&self, profile: &RadialProfile) -> Result<RadialProfile> {
        self.check_grid(profile)?;
        let mut out = vec![0.0; self.grid.len()];
        self.apply_into(profile.values(), &mut out);
        RadialProfile::new(self.grid, out)
    }

    /// Tridiagonal Jacobian of `u -> S_k(D^2 u)` restricted to nodes `0..m-1`
    /// (the boundary node is held fixed). Returns `(sub, diag, sup)`.
    pub fn jacobian(&self, u: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let m = self.grid.cells();
        let k = self.params.k as i32;
        let inv_h = 1.0 / self.grid.dr();
        // dF_{i+1/2}/du_{i+1} = -dF_{i+1/2}/du_i
        let dflux: Vec<f64> = (0..m)
            .map(|i| {
                let g = (u[i + 1] - u[i]) * inv_h;
                self.face_weight[i] * k as f64 * g.powi(k - 1) * inv_h
            })
            .collect();
        let mut sub = vec![0.0; m];
        let mut diag = vec![0.0; m];
        let mut sup = vec![0.0; m];
        for i in 0..m {
            let w = self.node_weight[i];
            diag[i] = -w * dflux[i];
            if i + 1 < m {
                sup[i] = w * dflux[i];
            }
            if i > 0 {
                diag[i] -= w * dflux[i - 1];
                sub[i] = w * dflux[i - 1];
            }
        }
        (sub, diag, sup)
    }

    /// Largest forward-Euler step keeping every nodal update monotone:
    /// `min_i 1 / |dS_i/du_i|`. Degenerate faces are floored at `1e-300`.
    pub fn monotone_dt(&self, u: &[f64]) -> f64 {
        let m = self.grid.cells();
        let k = self.params.k as i32;
        let inv_h = 1.0 / self.grid.dr();
        let mut worst: f64 = 1e-300;
        let mut left = 0.0;
        for i in 0..m {
            let g = (u[i + 1] - u[i]) * inv_h;
            let right = self.face_weight[i] * k as f64 * g.abs().powi(k - 1) * inv_h;
            worst = worst.max(self.node_weight[i] * (left + right));
            left = right;
        }
        1.0 / worst
    }

    fn check_grid(&self, profile: &RadialProfile) -> Result<()> {
        if *profile.grid() != self.grid {
            return Err(Error::invalid("profile grid does not match the operator grid"));
        }
        Ok(())
    }
}

/// Face fluxes of `profile`.
pub fn flux_field(profile: &RadialProfile, params: &ProblemParams) -> Result<FluxField> {
    let op = RadialOperator::new(*profile.grid(), *params)?;
    Ok(FluxField {
        grid: *profile.grid(),
        flux: op.fluxes(profile.values()),
    })
}

/// Nodal values of `S_k(D^2 u)`; the last node holds an extrapolated value
/// and is excluded from every max-norm in this crate.
pub fn apply_sk_radial(profile: &RadialProfile, params: &ProblemParams) -> Result<RadialProfile> {
    RadialOperator::new(*profile.grid(), *params)?.apply(profile)
}

/// `max_{0 <= i < m} |S_k(D^2 theta)_i + theta_i / (k-1)|`.
pub fn stationary_residual(profile: &RadialProfile, params: &ProblemParams) -> Result<f64> {
    params.require_fully_nonlinear()?;
    let sk = apply_sk_radial(profile, params)?;
    let inv = 1.0 / (params.k as f64 - 1.0);
    let m = profile.grid().cells();
    Ok(sk.values()[..m]
        .iter()
        .zip(&profile.values()[..m])
        .fold(0.0, |acc, (s, t)| acc.max((s + t * inv).abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::make_params;

    fn torsion(params: &ProblemParams, grid: RadialGrid) -> RadialProfile {
        let c = 0.5 * (params.n as f64 * params.c_nk).powf(-1.0 / params.k as f64);
        let r2 = grid.radius() * grid.radius();
        RadialProfile::from_fn(grid, |r| c * (r * r - r2)).unwrap()
    }

    #[test]
    fn torsion_is_resolved_exactly() {
        for (n, k) in [(2, 1), (2, 2), (3, 2), (3, 3), (4, 3), (5, 5), (6, 2)] {
            let p = make_params(n, k).unwrap();
            let g = RadialGrid::new(1.0, 50).unwrap();
            let s = apply_sk_radial(&torsion(&p, g), &p).unwrap();
            for v in s.values() {
                assert!((v - 1.0).abs() < 1e-12, "n={n} k={k} got {v}");
            }
        }
    }

    #[test]
    fn zero_maps_to_zero() {
        let p = make_params(3, 2).unwrap();
        let g = RadialGrid::new(1.0, 16).unwrap();
        let s = apply_sk_radial(&RadialProfile::zeros(g), &p).unwrap();
        assert!(s.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn coarse_grid_rejected() {
        let p = make_params(3, 2).unwrap();
        let g = RadialGrid::new(1.0, 3).unwrap();
        assert!(matches!(
            apply_sk_radial(&RadialProfile::zeros(g), &p),
            Err(Error::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn gaussian_laplacian_converges_second_order() {
        let p = make_params(2, 1).unwrap();
        let exact = |r: f64| (r * r / 4.0 - 1.0) * (-r * r / 4.0).exp();
        let mut errs = Vec::new();
        for cells in [64, 128, 256, 512] {
            let g = RadialGrid::new(4.0, cells).unwrap();
            let u = RadialProfile::from_fn(g, |r| (-r * r / 4.0).exp()).unwrap();
            let s = apply_sk_radial(&u, &p).unwrap();
            let err = (0..cells)
                .map(|i| (s.values()[i] - exact(g.node(i))).abs())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.6..4.4).contains(&ratio), "ratio {ratio} from {errs:?}");
        }
    }

    #[test]
    fn telescoping_flux_sum() {
        let p = make_params(4, 3).unwrap();
        let g = RadialGrid::new(1.5, 40).unwrap();
        let u = RadialProfile::from_fn(g, |r| (r * r - 2.25) * (1.0 + 0.3 * r * r)).unwrap();
        let op = RadialOperator::new(g, p).unwrap();
        let s = op.apply(&u).unwrap();
        let f = op.fluxes(u.values());
        let m = g.cells();
        let interior: f64 = (1..m).map(|i| g.dual_volume(i, p.n) * s.values()[i]).sum();
        let expect = p.c_nk * (f[m - 1] - f[0]);
        assert!((interior - expect).abs() <= 1e-12 * expect.abs());
        let whole: f64 = (0..m).map(|i| g.dual_volume(i, p.n) * s.values()[i]).sum();
        assert!((whole - p.c_nk * f[m - 1]).abs() <= 1e-12 * whole.abs());
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let p = make_params(3, 3).unwrap();
        let g = RadialGrid::new(1.0, 12).unwrap();
        let u: Vec<f64> = g.nodes().map(|r| (r * r - 1.0) * (1.0 + 0.2 * r)).collect();
        let op = RadialOperator::new(g, p).unwrap();
        let (sub, diag, sup) = op.jacobian(&u);
        let m = g.cells();
        let eps = 1e-6;
        for j in 0..m {
            let mut up = u.clone();
            up[j] += eps;
            let mut dn = u.clone();
            dn[j] -= eps;
            let mut plus = vec![0.0; m + 1];
            let mut minus = vec![0.0; m + 1];
            op.apply_into(&up, &mut plus);
            op.apply_into(&dn, &mut minus);
            for i in 0..m {
                let fd = (plus[i] - minus[i]) / (2.0 * eps);
                let an = if i == j {
                    diag[i]
                } else if i + 1 == j {
                    sup[i]
                } else if j + 1 == i {
                    sub[i]
                } else {
                    0.0
                };
                assert!(
                    (fd - an).abs() <= 1e-7 * (1.0 + an.abs()),
                    "i={i} j={j} fd={fd} an={an}"
                );
            }
        }
    }

    #[test]
    fn heat_monotone_dt_is_origin_limited() {
        // k = 1: interior nodes allow dr^2/2, the origin dual cell dr^2/(2n)
        for n in 2..=4 {
            let p = make_params(n, 1).unwrap();
            let g = RadialGrid::new(1.0, 100).unwrap();
            let u: Vec<f64> = g.nodes().map(|r| r * r - 1.0).collect();
            let op = RadialOperator::new(g, p).unwrap();
            let h = g.dr();
            let dt = op.monotone_dt(&u);
            assert!((dt - h * h / (2.0 * n as f64)).abs() < 1e-12 * dt);
        }
    }
}
