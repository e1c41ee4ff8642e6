//! Explicit method-of-lines march for `u_t = S_k(D^2 u)` on `B_R` with
//! `u = 0` on the sphere, and the decay diagnostics built on top of it.
//!
//! The separable solutions `T(t) theta` with `T(t) = [T0^{1-k} + t]^{-1/(k-1)}`
//! are the reference everything is measured against: the gap
//! `(1+t)^{1/(k-1)} u - theta` decays like `(1+t)^{-1}`, and the comparison
//! envelopes `T_lower(t) theta <= u <= T_upper(t) theta` hold at all times.

use serde::Serialize;

use crate::admissible::{first_violation, is_k_admissible_radial, DEFAULT_ADMISSIBILITY_TOL};
use crate::error::{Error, Result};
use crate::fit::loglog_slope;
use crate::grid::RadialProfile;
use crate::operator::RadialOperator;
use crate::params::{unit_ball_volume, ProblemParams};

/// Upper cap on a single time step, reached only by (near) zero data.
pub const MAX_STEP: f64 = 1e6;

/// Absolute slack allowed in the comparison sandwich.
pub const SANDWICH_TOL: f64 = 1e-9;

/// Window `[t_min, t_max]` of the decay-rate fit.
pub const FIT_WINDOW: (f64, f64) = (10.0, 1000.0);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolutionState {
    pub profile: RadialProfile,
    pub t: f64,
    /// Step used by the next call to [`step`].
    pub dt: f64,
    pub step_count: u64,
    /// Fraction of the monotonicity limit used by [`stable_dt`].
    pub cfl_safety: f64,
}

impl EvolutionState {
    /// Starts at `t = 0` with `dt` set from [`stable_dt`].
    pub fn new(profile: RadialProfile, params: &ProblemParams, cfl_safety: f64) -> Result<Self> {
        if !(cfl_safety > 0.0 && cfl_safety <= 1.0) {
            return Err(Error::invalid(format!(
                "cfl_safety must lie in (0, 1], got {cfl_safety}"
            )));
        }
        if *profile.values().last().unwrap() != 0.0 {
            return Err(Error::invalid("initial data must vanish on the boundary"));
        }
        let mut state = Self {
            profile,
            t: 0.0,
            dt: 0.0,
            step_count: 0,
            cfl_safety,
        };
        state.dt = stable_dt(&state, params)?;
        Ok(state)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub enum TimeScheme {
    ForwardEuler,
    /// Three-stage strong-stability-preserving Runge-Kutta (Shu-Osher); every
    /// stage is a convex combination of forward-Euler steps, so it inherits
    /// the monotonicity limit.
    #[default]
    SspRk3,
}

/// `cfl_safety / max_i |dS_i/du_i|`: the forward-Euler step that keeps every
/// nodal update a convex combination of its neighbours. For `k = 1` this is
/// `cfl_safety dr^2 / (2n)`, set by the origin cell.
pub fn stable_dt(state: &EvolutionState, params: &ProblemParams) -> Result<f64> {
    let op = RadialOperator::new(*state.profile.grid(), *params)?;
    Ok((state.cfl_safety * op.monotone_dt(state.profile.values())).min(MAX_STEP))
}

/// One forward-Euler step of size `state.dt`.
pub fn step(state: &EvolutionState, params: &ProblemParams) -> Result<EvolutionState> {
    let mut next = state.clone();
    let mut stepper = Stepper::new(state, params, TimeScheme::ForwardEuler)?;
    stepper.advance(&mut next, state.dt)?;
    Ok(next)
}

/// Reusable scratch space for repeated steps on one grid.
#[derive(Debug, Clone)]
pub struct Stepper {
    op: RadialOperator,
    scheme: TimeScheme,
    admissibility_tol: f64,
    rhs: Vec<f64>,
    stage: Vec<f64>,
    prev: Vec<f64>,
}

impl Stepper {
    pub fn new(state: &EvolutionState, params: &ProblemParams, scheme: TimeScheme) -> Result<Self> {
        let op = RadialOperator::new(*state.profile.grid(), *params)?;
        let len = state.profile.len();
        Ok(Self {
            op,
            scheme,
            admissibility_tol: DEFAULT_ADMISSIBILITY_TOL,
            rhs: vec![0.0; len],
            stage: vec![0.0; len],
            prev: vec![0.0; len],
        })
    }

    pub fn with_admissibility_tol(mut self, tol: f64) -> Self {
        self.admissibility_tol = tol;
        self
    }

    /// Largest step the monotonicity limit allows for the current state.
    pub fn stable_dt(&self, state: &EvolutionState) -> f64 {
        (state.cfl_safety * self.op.monotone_dt(state.profile.values())).min(MAX_STEP)
    }

    /// Advances `state` by `dt`, then runs the per-step health checks.
    pub fn advance(&mut self, state: &mut EvolutionState, dt: f64) -> Result<()> {
        let limit = self.op.monotone_dt(state.profile.values());
        if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
            return Err(Error::Unstable {
                t: state.t,
                dt,
                step: state.step_count,
                detail: format!("step exceeds the monotonicity limit {limit:e}"),
            });
        }
        let m = state.profile.grid().cells();
        self.prev.copy_from_slice(state.profile.values());
        let u = state.profile.values_mut();
        match self.scheme {
            TimeScheme::ForwardEuler => {
                self.op.apply_into(u, &mut self.rhs);
                for (v, r) in u[..m].iter_mut().zip(&self.rhs) {
                    *v += dt * r;
                }
            }
            TimeScheme::SspRk3 => {
                let (rhs, stage, prev) = (&mut self.rhs, &mut self.stage, &self.prev);
                // u1 = u + dt L(u)
                self.op.apply_into(prev, rhs);
                for i in 0..m {
                    stage[i] = prev[i] + dt * rhs[i];
                }
                stage[m] = 0.0;
                // u2 = 3/4 u + 1/4 (u1 + dt L(u1))
                self.op.apply_into(stage, rhs);
                for i in 0..m {
                    stage[i] = 0.75 * prev[i] + 0.25 * (stage[i] + dt * rhs[i]);
                }
                // u3 = 1/3 u + 2/3 (u2 + dt L(u2))
                self.op.apply_into(stage, rhs);
                for i in 0..m {
                    u[i] = prev[i] / 3.0 + 2.0 / 3.0 * (stage[i] + dt * rhs[i]);
                }
            }
        }
        u[m] = 0.0;
        state.t += dt;
        state.step_count += 1;
        self.check(state, dt)
    }

    fn check(&self, state: &EvolutionState, dt: f64) -> Result<()> {
        let u = state.profile.values();
        let unstable = |detail: String| Error::Unstable {
            t: state.t,
            dt,
            step: state.step_count,
            detail,
        };
        let old_sup = self.prev.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let tol = 1e-12 * old_sup;
        let mut new_sup = 0.0f64;
        for (i, (&v, &old)) in u.iter().zip(&self.prev).enumerate() {
            if !v.is_finite() {
                return Err(unstable(format!("non-finite value at node {i}")));
            }
            if v > tol {
                return Err(unstable(format!("positive value {v:e} at node {i}")));
            }
            if v < old - tol {
                return Err(unstable(format!(
                    "value decreased at node {i} ({old:e} -> {v:e})"
                )));
            }
            new_sup = new_sup.max(v.abs());
        }
        if new_sup > old_sup * (1.0 + 1e-12) {
            return Err(unstable(format!("sup norm grew from {old_sup:e} to {new_sup:e}")));
        }
        let grid = state.profile.grid();
        let scale = new_sup / (grid.radius() * grid.radius());
        if let Some(bad) = first_violation(u, grid.dr(), self.op.params(), scale, self.admissibility_tol) {
            return Err(Error::AdmissibilityLost {
                t: state.t,
                node: bad.node,
                j: bad.j,
                value: bad.value,
            });
        }
        Ok(())
    }
}

/// `M = n omega_n int_0^R |u| r^{n-1} dr` by the composite trapezoid rule.
pub fn mass(profile: &RadialProfile, n: usize) -> f64 {
    let grid = profile.grid();
    let h = grid.dr();
    let last = grid.cells();
    let sum: f64 = profile
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let w = if i == 0 || i == last { 0.5 } else { 1.0 };
            w * v.abs() * grid.node(i).powi(n as i32 - 1)
        })
        .sum();
    n as f64 * unit_ball_volume(n) * h * sum
}

/// `(t, M(t))` for each recorded state.
pub fn mass_series(states: &[EvolutionState], params: &ProblemParams) -> Vec<(f64, f64)> {
    states.iter().map(|s| (s.t, mass(&s.profile, params.n))).collect()
}

/// `true` when every mass in the series is strictly below its predecessor.
pub fn strictly_decreasing(series: &[(f64, f64)]) -> bool {
    series.windows(2).all(|w| w[1].1 < w[0].1)
}

/// Sample times `2^{j/4}` inside `[2^{-4}, t_end]`, plus `t_end` itself.
pub fn geometric_samples(t_end: f64) -> Vec<f64> {
    let mut out: Vec<f64> = (-16..)
        .map(|j| 2f64.powf(j as f64 / 4.0))
        .take_while(|&t| t < t_end * (1.0 - 1e-12))
        .collect();
    out.push(t_end);
    out
}

/// Comparison constants of the initial data against `theta`.
///
/// `T_lower(0)` is the smallest `s` with `s theta <= u0` and `T_upper(0)` the
/// largest `s` with `s theta >= u0`, both read off the nodewise ratio
/// `u0 / theta` with the boundary entry replaced by the ratio of one-sided
/// slopes. The bracket constants use the same values clamped to
/// `T_lower(0) >= 1 >= T_upper(0)`, which keeps `C1, C2 >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Envelope {
    pub t_lower0: f64,
    pub t_upper0: f64,
    /// Lower bracket constant `(1 - s) / ((k-1) s)`, `s = max(T_lower(0), 1)^{1-k}`.
    pub c1: f64,
    /// Upper bracket constant `min(T_upper(0), 1)^{1-k} - 1`.
    pub c2: f64,
    k: usize,
}

impl Envelope {
    pub fn new(u0: &RadialProfile, theta: &RadialProfile, params: &ProblemParams) -> Result<Self> {
        params.require_fully_nonlinear()?;
        if u0.grid() != theta.grid() {
            return Err(Error::invalid("initial data and theta live on different grids"));
        }
        let (u, th) = (u0.values(), theta.values());
        let m = u0.grid().cells();
        let mut ratios: Vec<f64> = (0..m)
            .map(|i| {
                if !(th[i] < 0.0) {
                    return Err(Error::invalid(format!("theta is not negative at node {i}")));
                }
                Ok(u[i] / th[i])
            })
            .collect::<Result<_>>()?;
        ratios.push((u[m] - u[m - 1]) / (th[m] - th[m - 1]));
        let t_lower0 = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let t_upper0 = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        if !(t_upper0 > 0.0) {
            return Err(Error::invalid("initial data must be negative inside the ball"));
        }
        let km1 = params.k as f64 - 1.0;
        let s = t_lower0.max(1.0).powf(-km1);
        Ok(Self {
            t_lower0,
            t_upper0,
            c1: (1.0 - s) / (km1 * s),
            c2: t_upper0.min(1.0).powf(-km1) - 1.0,
            k: params.k,
        })
    }

    fn factor(&self, t0: f64, t: f64) -> f64 {
        let km1 = self.k as f64 - 1.0;
        (t0.powf(-km1) + t).powf(-1.0 / km1)
    }

    pub fn t_lower(&self, t: f64) -> f64 {
        self.factor(self.t_lower0, t)
    }

    pub fn t_upper(&self, t: f64) -> f64 {
        self.factor(self.t_upper0, t)
    }
}

/// Initial data `1.3 theta (1 + a cos(pi r / R))`, where `a` starts at
/// `amplitude` and is halved until the data is k-admissible. Returns the
/// profile and the amplitude actually used.
pub fn perturbed_initial(
    theta: &RadialProfile,
    amplitude: f64,
    params: &ProblemParams,
) -> Result<(RadialProfile, f64)> {
    let grid = *theta.grid();
    let radius = grid.radius();
    let mut a = amplitude;
    for _ in 0..40 {
        let values = theta
            .values()
            .iter()
            .zip(grid.nodes())
            .map(|(th, r)| 1.3 * th * (1.0 + a * (std::f64::consts::PI * r / radius).cos()))
            .collect();
        let u0 = RadialProfile::new(grid, values)?;
        let rep = is_k_admissible_radial(&u0, params, DEFAULT_ADMISSIBILITY_TOL)?;
        if rep.admissible {
            return Ok((u0, a));
        }
        a *= 0.5;
    }
    Err(Error::invalid("no admissible perturbation amplitude found"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecaySample {
    pub t: f64,
    /// `max_i |(1+t)^{1/(k-1)} u_i - theta_i|` over nodes.
    pub sup_gap: f64,
    pub mass: f64,
    pub t_lower: f64,
    pub t_upper: f64,
    /// Largest amount by which `u` leaves `[T_lower theta, T_upper theta]`.
    pub sandwich_excess: f64,
    /// Largest amount by which the gap leaves `[C1 theta, -C2 theta] / (1+t)`.
    pub bracket_excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayDiagnostics {
    pub samples: Vec<DecaySample>,
    /// Slope of `log sup_gap` against `log(1+t)` over [`FIT_WINDOW`]; `None`
    /// when fewer than two usable samples fall in the window.
    pub fitted_slope: Option<f64>,
    pub envelope: Envelope,
    pub steps: u64,
    pub scheme: TimeScheme,
}

impl DecayDiagnostics {
    pub fn mass_series(&self) -> Vec<(f64, f64)> {
        self.samples.iter().map(|s| (s.t, s.mass)).collect()
    }

    pub fn sandwich_violations(&self) -> usize {
        self.samples
            .iter()
            .filter(|s| s.sandwich_excess > SANDWICH_TOL)
            .count()
    }

    pub fn bracket_violations(&self) -> usize {
        self.samples
            .iter()
            .filter(|s| s.bracket_excess > SANDWICH_TOL)
            .count()
    }

    /// `(1+t) sup_gap` at every sample with `t >= t_min`.
    pub fn scaled_gaps(&self, t_min: f64) -> Vec<(f64, f64)> {
        self.samples
            .iter()
            .filter(|s| s.t >= t_min)
            .map(|s| (s.t, (1.0 + s.t) * s.sup_gap))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct DecayConfig {
    /// Stationary profile on the same grid as the initial data.
    pub theta: RadialProfile,
    /// Times (in increasing order) at which diagnostics are recorded; `t = 0`
    /// is always recorded as well.
    pub sample_times: Vec<f64>,
    pub scheme: TimeScheme,
    pub admissibility_tol: f64,
}

impl DecayConfig {
    pub fn new(theta: RadialProfile, t_end: f64) -> Self {
        Self {
            theta,
            sample_times: geometric_samples(t_end),
            scheme: TimeScheme::default(),
            admissibility_tol: DEFAULT_ADMISSIBILITY_TOL,
        }
    }
}

/// Marches `state0` to `t_end`, landing exactly on every sample time.
pub fn evolve_to(
    state0: &EvolutionState,
    t_end: f64,
    params: &ProblemParams,
    config: &DecayConfig,
) -> Result<(EvolutionState, DecayDiagnostics)> {
    params.require_fully_nonlinear()?;
    if !(t_end > state0.t) {
        return Err(Error::invalid(format!(
            "t_end = {t_end} must exceed t = {}",
            state0.t
        )));
    }
    if config.theta.grid() != state0.profile.grid() {
        return Err(Error::invalid(
            "theta and the initial data live on different grids",
        ));
    }
    if config.sample_times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("sample times must increase strictly"));
    }
    let envelope = Envelope::new(&state0.profile, &config.theta, params)?;
    let mut stepper =
        Stepper::new(state0, params, config.scheme)?.with_admissibility_tol(config.admissibility_tol);
    let mut state = state0.clone();
    let mut samples = vec![sample(&state, &config.theta, &envelope, params)];
    let targets = config
        .sample_times
        .iter()
        .copied()
        .filter(|&t| t > state0.t && t < t_end)
        .chain(std::iter::once(t_end));
    for target in targets {
        while target - state.t > 1e-13 * target.max(1.0) {
            let remaining = target - state.t;
            let dt = stepper.stable_dt(&state);
            // split the approach evenly instead of leaving a sliver step behind
            let dt = if dt >= remaining {
                remaining
            } else if 2.0 * dt > remaining {
                0.5 * remaining
            } else {
                dt
            };
            stepper.advance(&mut state, dt)?;
            state.dt = dt;
        }
        state.t = target;
        samples.push(sample(&state, &config.theta, &envelope, params));
    }
    let (lo, hi) = FIT_WINDOW;
    let window: Vec<&DecaySample> = samples
        .iter()
        .filter(|s| s.t >= lo * (1.0 - 1e-12) && s.t <= hi * (1.0 + 1e-12) && s.sup_gap > 0.0)
        .collect();
    let fitted_slope = if window.len() >= 2 {
        let x: Vec<f64> = window.iter().map(|s| 1.0 + s.t).collect();
        let y: Vec<f64> = window.iter().map(|s| s.sup_gap).collect();
        Some(loglog_slope(&x, &y)?)
    } else {
        None
    };
    state.dt = stepper.stable_dt(&state);
    let steps = state.step_count - state0.step_count;
    Ok((
        state,
        DecayDiagnostics {
            samples,
            fitted_slope,
            envelope,
            steps,
            scheme: config.scheme,
        },
    ))
}

fn sample(
    state: &EvolutionState,
    theta: &RadialProfile,
    env: &Envelope,
    params: &ProblemParams,
) -> DecaySample {
    let t = state.t;
    let km1 = params.k as f64 - 1.0;
    let lift = (1.0 + t).powf(1.0 / km1);
    let (t_lower, t_upper) = (env.t_lower(t), env.t_upper(t));
    let mut sup_gap = 0.0f64;
    let mut sandwich_excess = 0.0f64;
    let mut bracket_excess = 0.0f64;
    for (&u, &th) in state.profile.values().iter().zip(theta.values()) {
        let gap = lift * u - th;
        sup_gap = sup_gap.max(gap.abs());
        sandwich_excess = sandwich_excess.max(t_lower * th - u).max(u - t_upper * th);
        let lo = env.c1 * th / (1.0 + t);
        let hi = -env.c2 * th / (1.0 + t);
        // the bracket is the sandwich multiplied by the lift
        bracket_excess = bracket_excess.max((lo - gap) / lift).max((gap - hi) / lift);
    }
    DecaySample {
        t,
        sup_gap,
        mass: mass(&state.profile, params.n),
        t_lower,
        t_upper,
        sandwich_excess,
        bracket_excess,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RadialGrid;
    use crate::params::make_params;
    use crate::stationary::{discrete_stationary, solve_on_ball};

    fn theta_h(n: usize, k: usize, cells: usize) -> (ProblemParams, RadialProfile) {
        let p = make_params(n, k).unwrap();
        let sol = solve_on_ball(1.0, &p, cells, 4000).unwrap();
        (p, discrete_stationary(&sol.profile, &p).unwrap())
    }

    #[test]
    fn zero_stays_zero() {
        let p = make_params(3, 2).unwrap();
        let g = RadialGrid::new(1.0, 16).unwrap();
        let mut s = EvolutionState::new(RadialProfile::zeros(g), &p, 0.5).unwrap();
        s.dt = 1e-3;
        for _ in 0..10 {
            s = step(&s, &p).unwrap();
        }
        assert!(s.profile.values().iter().all(|&v| v == 0.0));
        assert!((s.t - 1e-2).abs() < 1e-15);
    }

    #[test]
    fn heat_limit_of_stable_dt() {
        let p = make_params(2, 1).unwrap();
        for cells in [16, 32] {
            let g = RadialGrid::new(1.0, cells).unwrap();
            let u = RadialProfile::from_fn(g, |r| r * r - 1.0).unwrap();
            let s = EvolutionState::new(u, &p, 0.5).unwrap();
            let h = g.dr();
            assert!((stable_dt(&s, &p).unwrap() - 0.5 * h * h / 4.0).abs() < 1e-15);
        }
    }

    #[test]
    fn oversized_step_is_reported() {
        let (p, th) = theta_h(3, 2, 32);
        let mut s = EvolutionState::new(th, &p, 0.5).unwrap();
        s.dt *= 10.0;
        assert!(matches!(step(&s, &p), Err(Error::Unstable { .. })));
    }

    #[test]
    fn separable_data_keeps_its_shape() {
        let (p, th) = theta_h(3, 2, 48);
        let s0 = EvolutionState::new(th.clone(), &p, 0.5).unwrap();
        let cfg = DecayConfig::new(th.clone(), 4.0);
        let (end, diag) = evolve_to(&s0, 4.0, &p, &cfg).unwrap();
        let expect = th.scaled(0.2);
        assert!(end.profile.max_abs_diff(&expect).unwrap() < 1e-9 * th.sup_norm());
        let m0 = diag.samples[0].mass;
        for s in &diag.samples {
            assert!((s.mass * (1.0 + s.t) / m0 - 1.0).abs() < 1e-9);
            assert!(s.sandwich_excess <= SANDWICH_TOL);
        }
        assert!(strictly_decreasing(&diag.mass_series()));
    }

    #[test]
    fn envelope_constants_for_scaled_data() {
        let (p, th) = theta_h(3, 3, 32);
        let env = Envelope::new(&th.scaled(0.5f64.sqrt()), &th, &p).unwrap();
        assert!((env.t_lower0 - 0.5f64.sqrt()).abs() < 1e-14);
        assert!((env.t_upper0 - 0.5f64.sqrt()).abs() < 1e-14);
        assert!((env.c2 - 1.0).abs() < 1e-13);
        assert_eq!(env.c1, 0.0);
        // T(t) for T0^{1-k} = 2
        assert!((env.t_upper(2.0) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn perturbed_data_is_clipped_and_sandwiched() {
        let (p, th) = theta_h(3, 2, 48);
        let (u0, a) = perturbed_initial(&th, 0.2, &p).unwrap();
        assert!(a > 0.0 && a <= 0.2);
        let env = Envelope::new(&u0, &th, &p).unwrap();
        assert!(env.t_lower0 > env.t_upper0 && env.t_upper0 > 1.0);
        let s0 = EvolutionState::new(u0, &p, 0.5).unwrap();
        let (_, diag) = evolve_to(&s0, 10.0, &p, &DecayConfig::new(th, 10.0)).unwrap();
        assert_eq!(diag.sandwich_violations(), 0);
        assert_eq!(diag.bracket_violations(), 0);
        assert!(strictly_decreasing(&diag.mass_series()));
    }

    #[test]
    fn samples_are_geometric() {
        let s = geometric_samples(1.0);
        assert_eq!(s.len(), 17);
        assert!((s[0] - 0.0625).abs() < 1e-15);
        assert_eq!(*s.last().unwrap(), 1.0);
        for w in s.windows(2) {
            assert!((w[1] / w[0] - 2f64.powf(0.25)).abs() < 1e-12);
        }
    }
}
