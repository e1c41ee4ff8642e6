//! The explicit k-Barenblatt family of the signed equation
//! `u_t = (-1)^{k-1} S_k(D^2 u)` on the whole space,
//!
//! ```text
//! U_C(t, r) = t^{-alpha} (C - gamma (r / t^beta)^2)_+^{k/(k-1)},
//! ```
//!
//! together with its self-similar profile, mass/`r0` correspondence, support
//! geometry and the finite-difference residual checks of every identity in
//! the self-similar reduction. `k = 1` is the Gaussian and lives in
//! [`GaussianSolution`], a separate code path.

use serde::Serialize;
use statrs::function::gamma::gamma as gamma_fn;

use crate::error::{Error, Result};
use crate::grid::{RadialGrid, RadialProfile};
use crate::operator::RadialOperator;
use crate::params::{unit_ball_volume, ProblemParams};
use crate::quad::GradedRule;

/// Quadrature points used when a caller does not choose.
pub const DEFAULT_QUAD_POINTS: usize = 100_000;

/// `theta(xi) = (C - gamma xi^2)_+^{k/(k-1)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelfSimilarProfile {
    pub c: f64,
    pub gamma: f64,
    /// `k / (k-1)`.
    pub exponent: f64,
}

impl SelfSimilarProfile {
    /// Edge of the support, `sqrt(C / gamma)`.
    pub fn edge(&self) -> f64 {
        (self.c / self.gamma).sqrt()
    }

    pub fn theta(&self, xi: f64) -> f64 {
        let base = self.c - self.gamma * xi * xi;
        if base > 0.0 {
            base.powf(self.exponent)
        } else {
            0.0
        }
    }

    /// `theta'(xi) = -2 gamma p xi (C - gamma xi^2)_+^{p-1}`, `p = k/(k-1)`.
    pub fn theta_prime(&self, xi: f64) -> f64 {
        let base = self.c - self.gamma * xi * xi;
        if base > 0.0 {
            -2.0 * self.gamma * self.exponent * xi * base.powf(self.exponent - 1.0)
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BarenblattSolution {
    pub params: ProblemParams,
    #[serde(rename = "C")]
    pub c: f64,
    /// Total mass, from the closed form.
    pub mass: f64,
    /// `sqrt(2C / gamma)`.
    pub r0: f64,
}

impl BarenblattSolution {
    pub fn new(params: &ProblemParams, c: f64) -> Result<Self> {
        params.require_fully_nonlinear()?;
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::invalid(format!(
                "profile constant C must be positive, got {c}"
            )));
        }
        let gamma = params.gamma_checked()?;
        Ok(Self {
            params: *params,
            c,
            mass: closed_form_mass(params, c)?,
            r0: (2.0 * c / gamma).sqrt(),
        })
    }

    /// The member of the family carrying mass `mass`.
    pub fn from_mass(params: &ProblemParams, mass: f64) -> Result<Self> {
        Self::new(params, c_of_mass(mass, params)?)
    }

    pub fn gamma(&self) -> f64 {
        self.params.gamma.expect("k >= 2 checked at construction")
    }

    pub fn profile(&self) -> SelfSimilarProfile {
        let k = self.params.k as f64;
        SelfSimilarProfile {
            c: self.c,
            gamma: self.gamma(),
            exponent: k / (k - 1.0),
        }
    }

    pub fn value(&self, t: f64, r: f64) -> Result<f64> {
        check_time(t)?;
        let sb = t.powf(self.params.beta);
        Ok(t.powf(-self.params.alpha) * self.profile().theta(r / sb))
    }

    /// `dU/dr`.
    pub fn radial_derivative(&self, t: f64, r: f64) -> Result<f64> {
        check_time(t)?;
        let sb = t.powf(self.params.beta);
        Ok(t.powf(-self.params.alpha) / sb * self.profile().theta_prime(r / sb))
    }

    pub fn center_value(&self, t: f64) -> Result<f64> {
        self.value(t, 0.0)
    }

    /// `t^beta sqrt(C / gamma)`.
    pub fn support_radius(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(t.powf(self.params.beta) * self.profile().edge())
    }

    /// The same radius written as `t^beta [ (2k/(k-1)) (c_{n,k}/beta)^{1/k} C ]^{1/2}`.
    pub fn support_radius_alt(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        let p = &self.params;
        let k = p.k as f64;
        let bracket = 2.0 * k / (k - 1.0) * (p.c_nk / p.beta).powf(1.0 / k) * self.c;
        Ok(t.powf(p.beta) * bracket.sqrt())
    }

    /// `U_C(t, .)` sampled on `grid`.
    pub fn sample(&self, t: f64, grid: RadialGrid) -> Result<RadialProfile> {
        check_time(t)?;
        let values = grid.nodes().map(|r| self.value(t, r)).collect::<Result<_>>()?;
        RadialProfile::new(grid, values)
    }
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("time must be positive, got {t}")))
    }
}

/// Free-function spelling of [`BarenblattSolution::value`].
pub fn barenblatt_value(t: f64, r: f64, sol: &BarenblattSolution) -> Result<f64> {
    sol.value(t, r)
}

/// Free-function spelling of [`BarenblattSolution::support_radius`].
pub fn support_radius(t: f64, sol: &BarenblattSolution) -> Result<f64> {
    sol.support_radius(t)
}

/// `k = 1`: `U(t, r) = t^{-n/2} C exp(-r^2 / (4t))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianSolution {
    pub params: ProblemParams,
    #[serde(rename = "C")]
    pub c: f64,
}

impl GaussianSolution {
    pub fn new(params: &ProblemParams, c: f64) -> Result<Self> {
        if params.k != 1 {
            return Err(Error::ParamDomain(format!(
                "the Gaussian branch needs k = 1, got k = {}",
                params.k
            )));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::invalid(format!(
                "profile constant C must be positive, got {c}"
            )));
        }
        Ok(Self { params: *params, c })
    }

    pub fn theta(&self, xi: f64) -> f64 {
        self.c * (-0.25 * xi * xi).exp()
    }

    pub fn theta_prime(&self, xi: f64) -> f64 {
        -0.5 * xi * self.theta(xi)
    }

    pub fn value(&self, t: f64, r: f64) -> Result<f64> {
        check_time(t)?;
        Ok(t.powf(-self.params.alpha) * self.theta(r / t.sqrt()))
    }

    /// `max |beta theta + c_{n,1} theta' / r|` over `samples`.
    pub fn ode_residual(&self, samples: &[f64]) -> Result<f64> {
        let p = &self.params;
        samples.iter().try_fold(0.0f64, |acc, &r| {
            if !(r > 0.0) {
                return Err(Error::invalid(format!("sample radius must be positive, got {r}")));
            }
            Ok(acc.max((p.beta * self.theta(r) + p.c_nk * self.theta_prime(r) / r).abs()))
        })
    }
}

fn check_open_support(sol: &BarenblattSolution, r: f64) -> Result<()> {
    let edge = sol.profile().edge();
    if r > 0.0 && r < edge {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "sample radius {r} must lie inside the open support (0, {edge})"
        )))
    }
}

fn sign_k(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `max |beta theta - (-1)^k c_{n,k} r^{-k} (theta')^k|` over `samples`,
/// the once-integrated radial profile equation.
pub fn profile_ode_residual(sol: &BarenblattSolution, samples: &[f64]) -> Result<f64> {
    let p = &sol.params;
    let prof = sol.profile();
    let ki = p.k as i32;
    samples.iter().try_fold(0.0f64, |acc, &r| {
        check_open_support(sol, r)?;
        let rhs = sign_k(p.k) * p.c_nk * r.powi(-ki) * prof.theta_prime(r).powi(ki);
        Ok(acc.max((p.beta * prof.theta(r) - rhs).abs()))
    })
}

/// Fourth-order centered difference of `f` at `x`.
fn derivative(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (8.0 * (f(x + h) - f(x - h)) - (f(x + 2.0 * h) - f(x - 2.0 * h))) / (12.0 * h)
}

/// Residual of the unintegrated radial equation
/// `alpha theta + beta r theta' = (-1)^k c_{n,k} r^{1-n} (r^{n-k} (theta')^k)'`,
/// with the outer derivative taken by finite differences of step `h`.
pub fn radial_equation_residual(sol: &BarenblattSolution, samples: &[f64], h: f64) -> Result<f64> {
    let p = &sol.params;
    let prof = sol.profile();
    let (n, k) = (p.n as i32, p.k as i32);
    let flux = |r: f64| r.powi(n - k) * prof.theta_prime(r).powi(k);
    samples.iter().try_fold(0.0f64, |acc, &r| {
        check_open_support(sol, r - 2.0 * h)?;
        check_open_support(sol, r + 2.0 * h)?;
        let lhs = p.alpha * prof.theta(r) + p.beta * r * prof.theta_prime(r);
        let rhs = sign_k(p.k) * p.c_nk * r.powi(1 - n) * derivative(flux, r, h);
        Ok(acc.max((lhs - rhs).abs()))
    })
}

/// Residual of `U_t - (-1)^{k-1} S_k(D^2 U)` at `(t, r)` pairs, with `U_t`
/// and the outer radial derivative of the flux by finite differences
/// (steps `dt` and `dr`).
pub fn pde_residual(sol: &BarenblattSolution, points: &[(f64, f64)], dt: f64, dr: f64) -> Result<f64> {
    let p = &sol.params;
    let (n, k) = (p.n as i32, p.k as i32);
    points.iter().try_fold(0.0f64, |acc, &(t, r)| {
        check_time(t - 2.0 * dt)?;
        let edge = sol
            .support_radius(t + 2.0 * dt)?
            .min(sol.support_radius(t - 2.0 * dt)?);
        if !(r - 2.0 * dr > 0.0 && r + 2.0 * dr < edge) {
            return Err(Error::invalid(format!(
                "point (t = {t}, r = {r}) is too close to the degeneracy set"
            )));
        }
        let u_t = derivative(|s| sol.value(s, r).unwrap_or(f64::NAN), t, dt);
        let flux = |x: f64| x.powi(n - k) * sol.radial_derivative(t, x).unwrap_or(f64::NAN).powi(k);
        let sk = p.c_nk * r.powi(1 - n) * derivative(flux, r, dr);
        Ok(acc.max((u_t + sign_k(p.k) * sk).abs()))
    })
}

/// Closed-form mass
/// `pi^{n/2} Gamma(p+1) / Gamma(p+1+n/2) gamma^{-n/2} C^{p+n/2}`, `p = k/(k-1)`.
pub fn closed_form_mass(params: &ProblemParams, c: f64) -> Result<f64> {
    let gamma = params.gamma_checked()?;
    let (n, k) = (params.n as f64, params.k as f64);
    let p = k / (k - 1.0);
    let half = n / 2.0;
    Ok(
        std::f64::consts::PI.powf(half) * gamma_fn(p + 1.0) / gamma_fn(p + 1.0 + half)
            * gamma.powf(-half)
            * c.powf(p + half),
    )
}

/// The profile constant carrying mass `mass` (inverse of [`closed_form_mass`]).
pub fn c_of_mass(mass: f64, params: &ProblemParams) -> Result<f64> {
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::invalid(format!("mass must be positive, got {mass}")));
    }
    let (n, k) = (params.n as f64, params.k as f64);
    let p = k / (k - 1.0);
    let unit = closed_form_mass(params, 1.0)?;
    Ok((mass / unit).powf(1.0 / (p + n / 2.0)))
}

/// `r0` of the family member with mass `mass`:
///
/// ```text
/// r0 = { (pi/2)^{-n/2} (4k/(k-1))^{k/(k-1)} [c_{n,k} (n(k-1)+2k)]^{1/(k-1)}
///        Gamma(n/2 + k/(k-1) + 1) / Gamma(k/(k-1) + 1) M }^{(k-1)/(n(k-1)+2k)}
/// ```
pub fn r0_of_mass(mass: f64, params: &ProblemParams) -> Result<f64> {
    params.require_fully_nonlinear()?;
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::invalid(format!("mass must be positive, got {mass}")));
    }
    let (n, k) = (params.n as f64, params.k as f64);
    let p = k / (k - 1.0);
    let denom = n * (k - 1.0) + 2.0 * k;
    let bracket = (std::f64::consts::PI / 2.0).powf(-n / 2.0)
        * (4.0 * k / (k - 1.0)).powf(p)
        * (params.c_nk * denom).powf(1.0 / (k - 1.0))
        * gamma_fn(n / 2.0 + p + 1.0)
        / gamma_fn(p + 1.0)
        * mass;
    Ok(bracket.powf((k - 1.0) / denom))
}

/// `M(t) = n omega_n int_0^inf U_C(t, r) r^{n-1} dr` by graded Gauss-Legendre
/// panels on the support.
pub fn mass_at(sol: &BarenblattSolution, t: f64, quad_points: usize) -> Result<f64> {
    weighted_integral(sol, t, quad_points, |_| 1.0)
}

/// Mass at `t = 1`.
pub fn mass_of(sol: &BarenblattSolution, quad_points: usize) -> Result<f64> {
    mass_at(sol, 1.0, quad_points)
}

fn weighted_integral(
    sol: &BarenblattSolution,
    t: f64,
    quad_points: usize,
    weight: impl Fn(f64) -> f64,
) -> Result<f64> {
    let n = sol.params.n;
    let edge = sol.support_radius(t)?;
    let rule = GradedRule::new(quad_points)?;
    let scale = t.powf(-sol.params.alpha);
    let beta_t = t.powf(sol.params.beta);
    let prof = sol.profile();
    let integral = rule.integrate(edge, |r| {
        scale * prof.theta(r / beta_t) * weight(r) * r.powi(n as i32 - 1)
    });
    Ok(n as f64 * unit_ball_volume(n) * integral)
}

/// Smooth compactly supported bump `exp(1 - 1/(1 - r^2/L^2))`, equal to 1 at
/// the origin.
pub fn bump(r: f64, width: f64) -> f64 {
    let s = r * r / (width * width);
    if s < 1.0 {
        (1.0 - 1.0 / (1.0 - s)).exp()
    } else {
        0.0
    }
}

/// `|int U_C(t, .) phi dx - M phi(0)| / M` for the bump of width `width`.
pub fn weak_delta_error(sol: &BarenblattSolution, t: f64, width: f64, quad_points: usize) -> Result<f64> {
    let paired = weighted_integral(sol, t, quad_points, |r| bump(r, width))?;
    Ok((paired - sol.mass * bump(0.0, width)).abs() / sol.mass)
}

#[derive(Debug, Clone)]
pub struct FreeEvolutionConfig {
    /// Time attached to the initial data.
    pub t_start: f64,
    pub t_end: f64,
    /// Diagnostic times inside `(t_start, t_end)`; `t_start` and `t_end`
    /// are always recorded.
    pub sample_times: Vec<f64>,
    pub cfl_safety: f64,
}

impl FreeEvolutionConfig {
    pub fn new(t_start: f64, t_end: f64) -> Self {
        let ratio = t_end / t_start;
        let sample_times = (1..)
            .map(|j| t_start * 2f64.powf(j as f64 / 2.0))
            .take_while(|&t| t < t_start * ratio * (1.0 - 1e-12))
            .collect();
        Self {
            t_start,
            t_end,
            sample_times,
            cfl_safety: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FreeSample {
    pub t: f64,
    /// `max_i |t^alpha u_i - theta(r_i / t^beta)| / theta(0)` for the
    /// family member of the same mass.
    pub rescaled_gap: f64,
    /// Finite-volume mass, conserved by the scheme up to rounding.
    pub mass: f64,
    /// Outermost node where `u` is nonzero.
    pub support_radius: f64,
    /// Support radius of the same-mass family member at `t`.
    pub barenblatt_support: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FreeEvolutionReport {
    pub target: BarenblattSolution,
    pub samples: Vec<FreeSample>,
    /// Largest relative deviation of the mass from its initial value.
    pub mass_drift: f64,
    pub steps: u64,
}

impl FreeEvolutionReport {
    pub fn gap_decreasing(&self) -> bool {
        self.samples
            .windows(2)
            .all(|w| w[1].rescaled_gap < w[0].rescaled_gap)
    }
}

fn fv_mass(u: &[f64], grid: &RadialGrid, n: usize) -> f64 {
    let sum: f64 = u
        .iter()
        .enumerate()
        .map(|(i, v)| grid.dual_volume(i, n) * v.abs())
        .sum();
    n as f64 * unit_ball_volume(n) * sum
}

fn support_edge(u: &[f64], grid: &RadialGrid) -> f64 {
    u.iter().rposition(|&v| v != 0.0).map_or(0.0, |i| grid.node(i))
}

/// Whole-space march of `u_t = (-1)^{k-1} S_k(D^2 u)` on the truncated
/// ball `[0, R_max]` (the initial grid), written for `w = -u`, which solves
/// `w_t = S_k(D^2 w)`. Exploratory: compares the solution with the
/// k-Barenblatt of equal mass in similarity variables.
pub fn evolve_free(
    initial: &RadialProfile,
    params: &ProblemParams,
    config: &FreeEvolutionConfig,
) -> Result<FreeEvolutionReport> {
    params.require_fully_nonlinear()?;
    check_time(config.t_start)?;
    if !(config.t_end > config.t_start) {
        return Err(Error::invalid("t_end must exceed t_start"));
    }
    if !(config.cfl_safety > 0.0 && config.cfl_safety <= 1.0) {
        return Err(Error::invalid("cfl_safety must lie in (0, 1]"));
    }
    let grid = *initial.grid();
    let u0 = initial.values();
    if u0.iter().any(|&v| v < 0.0) {
        return Err(Error::invalid("initial data must be nonnegative"));
    }
    if u0.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::invalid("initial data must be radially nonincreasing"));
    }
    let r_max = grid.radius();
    let m = grid.cells();
    let n = params.n;
    let mass0 = fv_mass(u0, &grid, n);
    let target = BarenblattSolution::from_mass(params, mass0)?;
    if u0[m - 1] != 0.0 || target.support_radius(config.t_end)? * 1.5 > r_max {
        return Err(Error::DomainTooSmall {
            t: config.t_end,
            r_max,
        });
    }

    let op = RadialOperator::new(grid, *params)?;
    let mut w: Vec<f64> = u0.iter().map(|v| -v).collect();
    let mut prev = vec![0.0; m + 1];
    let mut stage = vec![0.0; m + 1];
    let mut rhs = vec![0.0; m + 1];
    let mut t = config.t_start;
    let mut steps = 0u64;
    let mut mass_drift = 0.0f64;
    let record = |w: &[f64], t: f64| -> Result<FreeSample> {
        let prof = target.profile();
        let lift = t.powf(params.alpha);
        let sb = t.powf(params.beta);
        let peak = prof.theta(0.0);
        let gap = w.iter().zip(grid.nodes()).fold(0.0f64, |acc, (wi, r)| {
            acc.max((-lift * wi - prof.theta(r / sb)).abs())
        });
        Ok(FreeSample {
            t,
            rescaled_gap: gap / peak,
            mass: fv_mass(w, &grid, n),
            support_radius: support_edge(w, &grid),
            barenblatt_support: target.support_radius(t)?,
        })
    };
    let mut samples = vec![record(&w, t)?];
    let targets = config
        .sample_times
        .iter()
        .copied()
        .filter(|&s| s > config.t_start && s < config.t_end)
        .chain(std::iter::once(config.t_end));
    for target_t in targets {
        while target_t - t > 1e-13 * target_t {
            let remaining = target_t - t;
            let dt = (config.cfl_safety * op.monotone_dt(&w)).min(remaining);
            let dt = if dt < remaining && 2.0 * dt > remaining {
                0.5 * remaining
            } else {
                dt
            };
            prev.copy_from_slice(&w);
            op.apply_into(&prev, &mut rhs);
            for i in 0..m {
                stage[i] = prev[i] + dt * rhs[i];
            }
            op.apply_into(&stage, &mut rhs);
            for i in 0..m {
                stage[i] = 0.75 * prev[i] + 0.25 * (stage[i] + dt * rhs[i]);
            }
            op.apply_into(&stage, &mut rhs);
            for i in 0..m {
                w[i] = prev[i] / 3.0 + 2.0 / 3.0 * (stage[i] + dt * rhs[i]);
            }
            w[m] = 0.0;
            t += dt;
            steps += 1;
            if let Some(i) = w.iter().position(|v| !v.is_finite()) {
                return Err(Error::Unstable {
                    t,
                    dt,
                    step: steps,
                    detail: format!("non-finite value at node {i}"),
                });
            }
            if w[m - 1] != 0.0 {
                return Err(Error::DomainTooSmall { t, r_max });
            }
        }
        t = target_t;
        let s = record(&w, t)?;
        mass_drift = mass_drift.max((s.mass - mass0).abs() / mass0);
        samples.push(s);
    }
    Ok(FreeEvolutionReport {
        target,
        samples,
        mass_drift,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::make_params;

    #[test]
    fn center_and_support() {
        let p = make_params(3, 2).unwrap();
        let sol = BarenblattSolution::new(&p, 1.0).unwrap();
        assert!((sol.center_value(2.0).unwrap() - 2f64.powf(-p.alpha)).abs() < 1e-15);
        let edge = sol.support_radius(2.0).unwrap();
        assert_eq!(sol.value(2.0, edge * 1.0001).unwrap(), 0.0);
        assert!(sol.value(2.0, edge * 0.999).unwrap() > 0.0);
        assert!((sol.r0 - (2.0 / p.gamma.unwrap()).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        let p = make_params(3, 2).unwrap();
        assert!(BarenblattSolution::new(&p, -1.0).is_err());
        assert!(BarenblattSolution::new(&make_params(3, 1).unwrap(), 1.0).is_err());
        let sol = BarenblattSolution::new(&p, 1.0).unwrap();
        assert!(sol.value(0.0, 0.1).is_err());
        assert!(profile_ode_residual(&sol, &[0.0]).is_err());
        assert!(profile_ode_residual(&sol, &[10.0]).is_err());
        assert!(r0_of_mass(-1.0, &p).is_err());
    }

    #[test]
    fn mass_matches_closed_form() {
        for (n, k) in [(2, 2), (3, 3), (5, 3)] {
            let p = make_params(n, k).unwrap();
            let sol = BarenblattSolution::new(&p, 1.3).unwrap();
            let q = mass_of(&sol, 20_000).unwrap();
            assert!((q / sol.mass - 1.0).abs() < 1e-10, "n={n} k={k}");
        }
    }

    #[test]
    fn r0_formula_agrees_with_profile_constant() {
        for (n, k) in [(2, 2), (3, 2), (4, 3), (5, 5)] {
            let p = make_params(n, k).unwrap();
            let sol = BarenblattSolution::new(&p, 0.7).unwrap();
            let r0 = r0_of_mass(sol.mass, &p).unwrap();
            assert!((r0 / sol.r0 - 1.0).abs() < 1e-12, "n={n} k={k}");
        }
    }

    #[test]
    fn gaussian_branch() {
        let p = make_params(3, 1).unwrap();
        let g = GaussianSolution::new(&p, 2.0).unwrap();
        let samples: Vec<f64> = (1..50).map(|i| 0.1 * i as f64).collect();
        assert!(g.ode_residual(&samples).unwrap() < 1e-15);
        assert!((g.value(4.0, 0.0).unwrap() - 2.0 / 8.0).abs() < 1e-15);
        assert!(GaussianSolution::new(&make_params(3, 2).unwrap(), 1.0).is_err());
    }

    #[test]
    fn bump_is_smooth_and_compact() {
        assert_eq!(bump(0.0, 10.0), 1.0);
        assert_eq!(bump(10.0, 10.0), 0.0);
        assert!(bump(9.99, 10.0) < 1e-40);
    }
}
