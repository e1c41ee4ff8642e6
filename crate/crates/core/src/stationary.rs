//! The negative stationary profile `theta` on a ball,
//!
//! ```text
//! S_k(D^2 theta) = -theta / (k-1)  in B_R,   theta = 0 on the sphere,
//! ```
//!
//! obtained by shooting the radial ODE once from `theta(0) = -1` and mapping
//! the result onto `B_R` with the exact homogeneity
//! `theta_mu(r) = mu^{2k/(k-1)} theta(r / mu)`.
//!
//! The ODE is the first-order system
//!
//! ```text
//! v'     = -r^{n-1} theta / ((k-1) c_{n,k})
//! theta' = (v / r^{n-k})^{1/k}
//! ```
//!
//! with `v = r^{n-k} (theta')^k`. The right-hand side is `0/0` at the origin,
//! so the first three steps come from the series
//! `theta = theta_0 + A r^2/2 + b r^4`.

use serde::Serialize;

use crate::admissible::{is_k_admissible_radial, DEFAULT_ADMISSIBILITY_TOL};
use crate::error::{Error, Result};
use crate::grid::{RadialGrid, RadialProfile};
use crate::operator::{stationary_residual, RadialOperator};
use crate::params::{unit_ball_volume, ProblemParams};

/// Minimum number of ODE steps accepted by [`shoot_profile`].
pub const MIN_ODE_STEPS: usize = 1000;

/// Arguments of `(.)^{1/k}` below this are treated as an internal error.
const NEGATIVE_ROOT_TOL: f64 = -1e-14;

/// Terms of the power series in `r^2` used near the origin.
const SERIES_TERMS: usize = 32;

/// The series covers `[0, SERIES_FRACTION * R1]` before handing off to RK4.
const SERIES_FRACTION: f64 = 0.25;

const NEWTON_ITERATIONS: usize = 60;

/// `c = (n c_{n,k})^{-1/k} / 2`, the torsion coefficient.
pub fn torsion_coefficient(params: &ProblemParams) -> f64 {
    0.5 * (params.n as f64 * params.c_nk).powf(-1.0 / params.k as f64)
}

/// `e(r) = c (r^2 - R^2)`, the solution of `S_k(D^2 e) = 1` vanishing on `|x| = R`.
pub fn torsion_solution(radius: f64, params: &ProblemParams, grid: RadialGrid) -> Result<RadialProfile> {
    if !(radius > 0.0) {
        return Err(Error::invalid(format!(
            "ball radius must be positive, got {radius}"
        )));
    }
    let c = torsion_coefficient(params);
    let r2 = radius * radius;
    RadialProfile::from_fn(grid, |r| c * (r * r - r2))
}

/// Dense output of one shooting run, starting from `theta(0) = center`.
#[derive(Debug, Clone)]
pub struct Shot {
    params: ProblemParams,
    center: f64,
    step: f64,
    crossing_radius: f64,
    r: Vec<f64>,
    theta: Vec<f64>,
    slope: Vec<f64>,
}

impl Shot {
    /// First zero of `theta`.
    pub fn crossing_radius(&self) -> f64 {
        self.crossing_radius
    }

    pub fn center_value(&self) -> f64 {
        self.center
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn steps(&self) -> usize {
        self.r.len() - 1
    }

    /// `theta'(R1)`.
    pub fn crossing_slope(&self) -> f64 {
        *self.slope.last().unwrap()
    }

    /// ODE nodes with `theta` and `theta'`.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.r
            .iter()
            .zip(&self.theta)
            .zip(&self.slope)
            .map(|((&r, &t), &s)| (r, t, s))
    }

    /// Cubic Hermite interpolation of `(theta, theta')` at `r` in `[0, R1]`.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        let r = r.clamp(0.0, self.crossing_radius);
        let last = self.r.len() - 2;
        let j = ((r / self.step).floor() as usize).min(last);
        let (r0, r1) = (self.r[j], self.r[j + 1]);
        let h = r1 - r0;
        let s = ((r - r0) / h).clamp(0.0, 1.0);
        let (y0, y1) = (self.theta[j], self.theta[j + 1]);
        let (d0, d1) = (self.slope[j] * h, self.slope[j + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let value = (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * d0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * d1;
        let deriv = ((6.0 * s2 - 6.0 * s) * y0
            + (3.0 * s2 - 4.0 * s + 1.0) * d0
            + (-6.0 * s2 + 6.0 * s) * y1
            + (3.0 * s2 - 2.0 * s) * d1)
            / h;
        (value, deriv)
    }

    /// The shot sampled on a uniform grid over `[0, R1]`.
    pub fn raw_profile(&self, cells: usize) -> Result<RadialProfile> {
        let grid = RadialGrid::new(self.crossing_radius, cells)?;
        let mut values: Vec<f64> = grid.nodes().map(|r| self.eval(r).0).collect();
        values[cells] = 0.0;
        RadialProfile::new(grid, values)
    }

    pub fn params(&self) -> &ProblemParams {
        &self.params
    }
}

/// `(theta, theta')` of an even series in `r`.
fn eval_series(coeffs: &[f64], r: f64) -> (f64, f64) {
    let s = r * r;
    let value = coeffs.iter().rev().fold(0.0, |acc, &c| acc * s + c);
    let deriv = coeffs
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (i, &c)| acc * s + 2.0 * i as f64 * c);
    (value, deriv * r)
}

struct Integrator<'a> {
    params: &'a ProblemParams,
    /// `1 / ((k-1) c_{n,k})`
    source: f64,
    inv_k: f64,
}

impl<'a> Integrator<'a> {
    fn new(params: &'a ProblemParams) -> Self {
        let k = params.k as f64;
        Self {
            params,
            source: 1.0 / ((k - 1.0) * params.c_nk),
            inv_k: 1.0 / k,
        }
    }

    fn slope(&self, r: f64, v: f64) -> Result<f64> {
        let arg = v / r.powi((self.params.n - self.params.k) as i32);
        if arg < 0.0 {
            if arg < NEGATIVE_ROOT_TOL {
                return Err(Error::NegativeRoot { value: arg, r });
            }
            return Ok(0.0);
        }
        Ok(arg.powf(self.inv_k))
    }

    fn rhs(&self, r: f64, theta: f64, v: f64) -> Result<(f64, f64)> {
        let dv = -r.powi(self.params.n as i32 - 1) * theta * self.source;
        Ok((self.slope(r, v)?, dv))
    }

    fn rk4(&self, r: f64, theta: f64, v: f64, h: f64) -> Result<(f64, f64)> {
        let (a1, b1) = self.rhs(r, theta, v)?;
        let (a2, b2) = self.rhs(r + 0.5 * h, theta + 0.5 * h * a1, v + 0.5 * h * b1)?;
        let (a3, b3) = self.rhs(r + 0.5 * h, theta + 0.5 * h * a2, v + 0.5 * h * b2)?;
        let (a4, b4) = self.rhs(r + h, theta + h * a3, v + h * b3)?;
        Ok((
            theta + h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4),
            v + h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4),
        ))
    }

    /// `theta''(0)`, i.e. `A` in `theta ~ theta_0 + A r^2 / 2`.
    fn curvature(&self, center: f64) -> f64 {
        let k = self.params.k as f64;
        (-center / ((k - 1.0) * self.params.binom_nk())).powf(self.inv_k)
    }

    /// Coefficients of `theta = sum_j theta_j s^j` with `s = r^2`.
    ///
    /// With `theta' = r q(s)` and `Q = q^k`, the flux equation reads
    /// `(n + 2j) Q_j = -theta_j / ((k-1) c)`; powers of `q` follow Miller's
    /// recurrence.
    fn series(&self, center: f64) -> Vec<f64> {
        let n = self.params.n as f64;
        let k = self.params.k as f64;
        let mut theta = vec![center, 0.5 * self.curvature(center)];
        let mut q = vec![self.curvature(center)];
        let mut pow = vec![q[0].powi(self.params.k as i32)];
        for j in 1..SERIES_TERMS {
            let jf = j as f64;
            let target = -theta[j] * self.source / (n + 2.0 * jf);
            let tail: f64 = (1..j)
                .map(|i| (k * i as f64 - (jf - i as f64)) * q[i] * pow[j - i])
                .sum();
            let qj = (jf * q[0] * target - tail) / (k * jf * pow[0]);
            q.push(qj);
            pow.push(target);
            theta.push(qj / (2.0 * (jf + 1.0)));
        }
        theta
    }

    fn run(&self, center: f64, h: f64, r_max: f64, series_radius: f64) -> Result<Shot> {
        let coeffs = self.series(center);
        let nk = (self.params.n - self.params.k) as i32;
        let kk = self.params.k as i32;
        let mut r = Vec::new();
        let mut theta = Vec::new();
        let mut slope = Vec::new();
        let mut vs = Vec::new();
        let series_steps = ((series_radius / h).floor() as usize).max(1);
        for j in 0..=series_steps {
            let x = j as f64 * h;
            let (t, d) = eval_series(&coeffs, x);
            r.push(x);
            theta.push(t);
            slope.push(d);
            vs.push(x.powi(nk) * d.powi(kk));
        }
        loop {
            let j = r.len() - 1;
            let (r0, t0, v0) = (r[j], theta[j], vs[j]);
            if r0 > r_max {
                return Err(Error::NoZeroCrossing { r_max });
            }
            let (t1, v1) = self.rk4(r0, t0, v0, h)?;
            if t1 >= 0.0 {
                // bisect on the partial step length
                let (mut lo, mut hi) = (0.0, h);
                let mut end = (t1, v1);
                while hi - lo > 1e-13 * (r0 + h) {
                    let mid = 0.5 * (lo + hi);
                    let (tm, vm) = self.rk4(r0, t0, v0, mid)?;
                    if tm >= 0.0 {
                        hi = mid;
                        end = (tm, vm);
                    } else {
                        lo = mid;
                    }
                }
                let rc = r0 + hi;
                r.push(rc);
                theta.push(0.0);
                slope.push(self.slope(rc, end.1)?);
                return Ok(Shot {
                    params: *self.params,
                    center,
                    step: h,
                    crossing_radius: rc,
                    r,
                    theta,
                    slope,
                });
            }
            let r1 = r0 + h;
            r.push(r1);
            theta.push(t1);
            slope.push(self.slope(r1, v1)?);
            vs.push(v1);
        }
    }
}

/// Shoots from `theta(0) = -1` with `ode_steps` RK4 steps across `[0, R1]`.
///
/// A first pass with the quadratic estimate `R1 ~ sqrt(2/A)` fixes the step so
/// that the second pass lands on the crossing after about `ode_steps` steps.
pub fn shoot_profile(params: &ProblemParams, ode_steps: usize) -> Result<Shot> {
    shoot_from(params, -1.0, ode_steps)
}

/// Shooting from an arbitrary negative center value.
pub fn shoot_from(params: &ProblemParams, center: f64, ode_steps: usize) -> Result<Shot> {
    params.require_fully_nonlinear()?;
    if ode_steps < MIN_ODE_STEPS {
        return Err(Error::invalid(format!(
            "ode_steps = {ode_steps} is below the minimum {MIN_ODE_STEPS}"
        )));
    }
    if !(center < 0.0 && center.is_finite()) {
        return Err(Error::invalid(format!(
            "center value must be negative, got {center}"
        )));
    }
    let integ = Integrator::new(params);
    let guess = (2.0 * -center / integ.curvature(center)).sqrt();
    let r_max = 64.0 * guess;
    let first = integ.run(center, guess / ode_steps as f64, r_max, SERIES_FRACTION * guess)?;
    let rc = first.crossing_radius;
    integ.run(center, rc / ode_steps as f64, r_max, SERIES_FRACTION * rc)
}

/// The eigen-factor of an arbitrary separable profile and the constant
/// relating it to `theta`: `S_k(D^2 theta~) = lambda theta~` and
/// `theta~ = c theta` with `c = (-lambda (k-1))^{1/(k-1)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingLaw {
    pub lambda: f64,
    pub c: f64,
    /// `1 / c`, the factor that maps `theta~` back onto `theta`.
    pub c_tilde: f64,
}

impl ScalingLaw {
    pub fn from_lambda(lambda: f64, k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::StationaryRequiresK2(k));
        }
        if !(lambda < 0.0) {
            return Err(Error::invalid(format!("lambda must be negative, got {lambda}")));
        }
        let km1 = k as f64 - 1.0;
        let c = (-lambda * km1).powf(1.0 / km1);
        Ok(Self {
            lambda,
            c,
            c_tilde: 1.0 / c,
        })
    }

    /// The law of `c * theta`, whose eigen-factor is `-c^{k-1}/(k-1)`.
    pub fn for_multiple(c: f64, k: usize) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::invalid(format!("multiple must be positive, got {c}")));
        }
        let km1 = k as f64 - 1.0;
        Self::from_lambda(-c.powf(km1) / km1, k)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StationarySolution {
    pub params: ProblemParams,
    pub radius: f64,
    pub profile: RadialProfile,
    pub center_value: f64,
    pub boundary_slope: f64,
    pub residual: f64,
    pub sup_norm: f64,
    /// Zero of the unit shot the profile was rescaled from.
    pub crossing_radius: f64,
}

/// Maps a completed shot onto `B_R` and samples it on `grid`.
pub fn profile_on_ball(
    radius: f64,
    params: &ProblemParams,
    grid: RadialGrid,
    shot: &Shot,
) -> Result<StationarySolution> {
    if shot.params() != params {
        return Err(Error::invalid("shot was computed for different parameters"));
    }
    if grid.radius() != radius {
        return Err(Error::invalid(format!(
            "grid radius {} does not match ball radius {radius}",
            grid.radius()
        )));
    }
    let k = params.k as f64;
    let mu = radius / shot.crossing_radius();
    let amp = mu.powf(2.0 * k / (k - 1.0));
    let mut values: Vec<f64> = grid.nodes().map(|r| amp * shot.eval(r / mu).0).collect();
    values[grid.cells()] = 0.0;
    let profile = RadialProfile::new(grid, values)?;
    let center_value = amp * shot.center_value();
    let boundary_slope = amp / mu * shot.crossing_slope();
    finish(
        params,
        radius,
        profile,
        center_value,
        boundary_slope,
        shot.crossing_radius(),
    )
}

fn finish(
    params: &ProblemParams,
    radius: f64,
    profile: RadialProfile,
    center_value: f64,
    boundary_slope: f64,
    crossing_radius: f64,
) -> Result<StationarySolution> {
    let residual = stationary_residual(&profile, params)?;
    let sup_norm = profile.sup_norm();
    check_profile_shape(&profile, params)?;
    if !(boundary_slope > 0.0) {
        return Err(Error::Invariant(format!(
            "boundary slope {boundary_slope} is not positive"
        )));
    }
    Ok(StationarySolution {
        params: *params,
        radius,
        profile,
        center_value,
        boundary_slope,
        residual,
        sup_norm,
        crossing_radius,
    })
}

/// `theta(0) < 0`, `theta(R) = 0`, nondecreasing, k-admissible.
pub fn check_profile_shape(profile: &RadialProfile, params: &ProblemParams) -> Result<()> {
    let v = profile.values();
    if !(v[0] < 0.0) {
        return Err(Error::Invariant(format!("center value {} is not negative", v[0])));
    }
    if *v.last().unwrap() != 0.0 {
        return Err(Error::Invariant("profile does not vanish on the boundary".into()));
    }
    if let Some(i) = v.windows(2).position(|w| w[1] < w[0]) {
        return Err(Error::Invariant(format!(
            "profile decreases between nodes {i} and {}",
            i + 1
        )));
    }
    let rep = is_k_admissible_radial(profile, params, DEFAULT_ADMISSIBILITY_TOL)?;
    if let Some(bad) = rep.first_violation {
        return Err(Error::Invariant(format!(
            "profile not k-admissible at node {} (sigma_{} = {:e})",
            bad.node, bad.j, bad.value
        )));
    }
    Ok(())
}

/// Shoot once and rescale onto a ball of radius `radius` with `cells` cells.
pub fn solve_on_ball(
    radius: f64,
    params: &ProblemParams,
    cells: usize,
    ode_steps: usize,
) -> Result<StationarySolution> {
    let shot = shoot_profile(params, ode_steps)?;
    profile_on_ball(radius, params, RadialGrid::new(radius, cells)?, &shot)
}

/// Cross-check route: bisect on the center value until the shot crosses
/// zero at `radius` itself, with no use of the scaling law.
pub fn direct_shoot_on_ball(
    radius: f64,
    params: &ProblemParams,
    grid: RadialGrid,
    ode_steps: usize,
) -> Result<RadialProfile> {
    let crossing = |log_depth: f64| -> Result<Shot> { shoot_from(params, -log_depth.exp(), ode_steps) };
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    while crossing(lo)?.crossing_radius() > radius {
        lo -= 2.0;
    }
    while crossing(hi)?.crossing_radius() < radius {
        hi += 2.0;
    }
    let mut best = crossing(hi)?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let shot = crossing(mid)?;
        if shot.crossing_radius() < radius {
            lo = mid;
        } else {
            hi = mid;
            best = shot;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let mut values: Vec<f64> = grid.nodes().map(|r| best.eval(r).0).collect();
    values[grid.cells()] = 0.0;
    RadialProfile::new(grid, values)
}

/// Solves the discrete stationary equations `S_h(theta) + theta/(k-1) = 0`
/// by Newton's method, starting from `initial` (typically the rescaled shot).
pub fn discrete_stationary(initial: &RadialProfile, params: &ProblemParams) -> Result<RadialProfile> {
    params.require_fully_nonlinear()?;
    let grid = *initial.grid();
    let op = RadialOperator::new(grid, *params)?;
    let m = grid.cells();
    let inv = 1.0 / (params.k as f64 - 1.0);
    let mut u = initial.values().to_vec();
    u[m] = 0.0;
    let sup = initial.sup_norm().max(f64::MIN_POSITIVE);
    let mut sk = vec![0.0; m + 1];
    let mut residual = f64::INFINITY;
    for _ in 0..NEWTON_ITERATIONS {
        op.apply_into(&u, &mut sk);
        let g: Vec<f64> = (0..m).map(|i| sk[i] + u[i] * inv).collect();
        residual = g.iter().fold(0.0, |a, x| a.max(x.abs()));
        let (sub, mut diag, sup_diag) = op.jacobian(&u);
        diag.iter_mut().for_each(|d| *d += inv);
        let rhs: Vec<f64> = g.iter().map(|x| -x).collect();
        let delta = solve_tridiagonal(&sub, &diag, &sup_diag, &rhs)?;
        let step = delta.iter().fold(0.0, |a: f64, x| a.max(x.abs()));
        for (ui, di) in u.iter_mut().zip(&delta) {
            *ui += di;
        }
        // quadratic convergence: once the update is at round-off the
        // iterate is as good as the arithmetic allows
        if step <= 1e-14 * sup {
            return RadialProfile::new(grid, u);
        }
    }
    Err(Error::NoConvergence {
        iterations: NEWTON_ITERATIONS,
        residual,
    })
}

/// Thomas algorithm; `sub[0]` and `sup[n-1]` are ignored.
pub(crate) fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot == 0.0 {
        return Err(Error::Invariant("singular tridiagonal system".into()));
    }
    c[0] = sup[0] / pivot;
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - sub[i] * c[i - 1];
        if pivot == 0.0 {
            return Err(Error::Invariant("singular tridiagonal system".into()));
        }
        c[i] = if i + 1 < n { sup[i] / pivot } else { 0.0 };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundReport {
    pub bound_value: f64,
    pub sup_norm: f64,
    pub satisfied: bool,
}

/// Ball bound
/// `sup|theta| <= [ (2R)^k vol(B) / (omega_n R^{n-k} (k-1) c_{n,k}) ]^{1/(k-1)}`.
pub fn check_ball_bound(sol: &StationarySolution, params: &ProblemParams) -> BoundReport {
    let bound_value = ball_bound(sol.radius, params);
    BoundReport {
        bound_value,
        sup_norm: sol.sup_norm,
        satisfied: sol.sup_norm <= bound_value,
    }
}

pub fn ball_bound(radius: f64, params: &ProblemParams) -> f64 {
    let n = params.n as i32;
    let k = params.k as i32;
    let omega = unit_ball_volume(params.n);
    let volume = omega * radius.powi(n);
    let bracket =
        (2.0 * radius).powi(k) * volume / (omega * radius.powi(n - k) * (k as f64 - 1.0) * params.c_nk);
    bracket.powf(1.0 / (k as f64 - 1.0))
}

/// Comparison with the torsion function, solved for `sup|theta|`:
/// `sup|theta| <= [ ||e||^k / (k-1) ]^{1/(k-1)}`.
pub fn check_torsion_bound(sol: &StationarySolution, params: &ProblemParams) -> BoundReport {
    let bound_value = torsion_bound(sol.radius, params);
    BoundReport {
        bound_value,
        sup_norm: sol.sup_norm,
        satisfied: sol.sup_norm <= bound_value,
    }
}

pub fn torsion_bound(radius: f64, params: &ProblemParams) -> f64 {
    let k = params.k as f64;
    let e_sup = torsion_coefficient(params) * radius * radius;
    (e_sup.powf(k) / (k - 1.0)).powf(1.0 / (k - 1.0))
}

/// `t -> T(t) theta` with `T(t) = [T0^{1-k} + t]^{-1/(k-1)}`.
#[derive(Debug, Clone)]
pub struct SeparableFamily {
    theta: RadialProfile,
    t0: f64,
    k: usize,
}

impl SeparableFamily {
    pub fn time_factor(&self, t: f64) -> f64 {
        let km1 = self.k as f64 - 1.0;
        (self.t0.powf(-km1) + t).powf(-1.0 / km1)
    }

    /// `T(t)` divided by the unit-data factor `(1+t)^{-1/(k-1)}`.
    pub fn ratio_to_unit(&self, t: f64) -> f64 {
        let km1 = self.k as f64 - 1.0;
        ((1.0 + t) / (self.t0.powf(-km1) + t)).powf(1.0 / km1)
    }

    pub fn at(&self, t: f64) -> RadialProfile {
        self.theta.scaled(self.time_factor(t))
    }

    pub fn theta(&self) -> &RadialProfile {
        &self.theta
    }
}

pub fn separable_family(
    sol: &StationarySolution,
    t0: f64,
    params: &ProblemParams,
) -> Result<SeparableFamily> {
    params.require_fully_nonlinear()?;
    if !(t0 > 0.0 && t0.is_finite()) {
        return Err(Error::invalid(format!("T(0) must be positive, got {t0}")));
    }
    Ok(SeparableFamily {
        theta: sol.profile.clone(),
        t0,
        k: params.k,
    })
}
