//! Independent oracles: every expected value here is computed from first
//! principles in the test, not by the library routine under test.

use khessian::admissible::radial_sigma_j;
use khessian::barenblatt::{closed_form_mass, BarenblattSolution};
use khessian::grid::{RadialGrid, RadialProfile};
use khessian::operator::{apply_sk_radial, RadialOperator};
use khessian::params::make_params;
use khessian::stationary::{
    ball_bound, direct_shoot_on_ball, discrete_stationary, profile_on_ball, shoot_profile, solve_on_ball,
    torsion_bound, ScalingLaw,
};
use proptest::prelude::*;

fn binom(n: usize, j: usize) -> f64 {
    if j > n {
        return 0.0;
    }
    (0..j).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Elementary symmetric polynomials of `lambda` by the product expansion.
fn elementary(lambda: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; lambda.len() + 1];
    e[0] = 1.0;
    for (m, &l) in lambda.iter().enumerate() {
        for j in (1..=m + 1).rev() {
            e[j] += l * e[j - 1];
        }
    }
    e
}

/// Volume of the unit ball by `omega_n = 2 pi / n * omega_{n-2}`.
fn ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI / n as f64 * ball_volume(n - 2),
    }
}

fn dual_volume(r: f64, h: f64, n: usize) -> f64 {
    let lo = (r - 0.5 * h).max(0.0);
    ((r + 0.5 * h).powi(n as i32) - lo.powi(n as i32)) / n as f64
}

fn nk_pair() -> impl Strategy<Value = (usize, usize)> {
    (2usize..=6).prop_flat_map(|n| (Just(n), 1usize..=n))
}

proptest! {
    #[test]
    fn radial_sigma_matches_product_expansion((n, j) in nk_pair(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let mut lambda = vec![b; n - 1];
        lambda.push(a);
        let e = elementary(&lambda);
        let got = radial_sigma_j(a, b, n, j);
        prop_assert!((got - e[j]).abs() <= 1e-12 * (1.0 + e[j].abs()), "{got} vs {}", e[j]);
    }

    #[test]
    fn operator_is_k_homogeneous(
        (n, k) in nk_pair(),
        coeffs in prop::collection::vec(0.1f64..2.0, 3),
        s in 0.05f64..20.0,
    ) {
        let p = make_params(n, k).unwrap();
        let grid = RadialGrid::new(1.0, 24).unwrap();
        let u = RadialProfile::from_fn(grid, |r| {
            coeffs[0] * r * r + coeffs[1] * r.powi(4) + coeffs[2] * r.powi(3) - 3.0
        })
        .unwrap();
        let base = apply_sk_radial(&u, &p).unwrap();
        let scaled = apply_sk_radial(&u.scaled(s), &p).unwrap();
        let factor = s.powi(k as i32);
        for (x, y) in base.values().iter().zip(scaled.values()) {
            prop_assert!((y - factor * x).abs() <= 1e-11 * (factor * x).abs().max(1e-300));
        }
    }

    #[test]
    fn weighted_sum_telescopes_to_boundary_flux(
        (n, k) in nk_pair(),
        values in prop::collection::vec(-1.0f64..1.0, 17),
        radius in 0.3f64..3.0,
    ) {
        let p = make_params(n, k).unwrap();
        let m = values.len() - 1;
        let grid = RadialGrid::new(radius, m).unwrap();
        let s = apply_sk_radial(&RadialProfile::new(grid, values.clone()).unwrap(), &p).unwrap();
        let h = radius / m as f64;
        let c_nk = binom(n, k) / n as f64;
        let sum: f64 = (0..m).map(|i| dual_volume(i as f64 * h, h, n) * s.values()[i]).sum();
        let face = radius - 0.5 * h;
        let slope = (values[m] - values[m - 1]) / h;
        let boundary = c_nk * face.powi((n - k) as i32) * slope.powi(k as i32);
        let scale: f64 = (0..m).map(|i| (dual_volume(i as f64 * h, h, n) * s.values()[i]).abs()).sum();
        prop_assert!((sum - boundary).abs() <= 1e-11 * (1.0 + scale), "{sum} vs {boundary}");
    }
}

#[test]
fn quadratics_are_exact_in_every_dimension() {
    for n in 2..=7 {
        for k in 1..=n {
            let p = make_params(n, k).unwrap();
            for a in [0.5, 2.0] {
                let grid = RadialGrid::new(1.3, 40).unwrap();
                let u = RadialProfile::from_fn(grid, |r| 0.5 * a * r * r - 0.5).unwrap();
                let s = apply_sk_radial(&u, &p).unwrap();
                // Hessian a I has sigma_k = binom(n, k) a^k
                let expect = binom(n, k) * a.powi(k as i32);
                for v in &s.values()[..40] {
                    assert!(
                        (v - expect).abs() <= 1e-11 * expect,
                        "n={n} k={k}: {v} vs {expect}"
                    );
                }
            }
        }
    }
}

#[test]
fn smooth_profile_converges_at_second_order() {
    // u = r^4/4 + r^2: radial eigenvalue u'' = 3r^2 + 2, tangential u'/r = r^2 + 2
    let exact = |n: usize, k: usize, r: f64| {
        let (a, b) = (3.0 * r * r + 2.0, r * r + 2.0);
        let mut lambda = vec![b; n - 1];
        lambda.push(a);
        elementary(&lambda)[k]
    };
    for (n, k) in [(2, 2), (3, 2), (3, 3), (5, 3)] {
        let p = make_params(n, k).unwrap();
        let err = |m: usize| {
            let grid = RadialGrid::new(1.0, m).unwrap();
            let u = RadialProfile::from_fn(grid, |r| 0.25 * r.powi(4) + r * r).unwrap();
            let s = apply_sk_radial(&u, &p).unwrap();
            (0..m)
                .map(|i| (s.values()[i] - exact(n, k, grid.node(i))).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(64) / err(128);
        assert!((3.6..4.4).contains(&ratio), "n={n} k={k}: ratio {ratio}");
    }
}

#[test]
fn operator_rejects_coarse_grids() {
    let p = make_params(3, 2).unwrap();
    assert!(RadialOperator::new(RadialGrid::new(1.0, 3).unwrap(), p).is_err());
}

#[test]
fn direct_shooting_agrees_with_rescaling() {
    for (n, k) in [(3, 2), (4, 3)] {
        let p = make_params(n, k).unwrap();
        for radius in [0.5, 2.0] {
            let grid = RadialGrid::new(radius, 128).unwrap();
            let coarse = profile_on_ball(radius, &p, grid, &shoot_profile(&p, 2000).unwrap()).unwrap();
            let fine = profile_on_ball(radius, &p, grid, &shoot_profile(&p, 4000).unwrap()).unwrap();
            let ode_error = coarse.profile.max_abs_diff(&fine.profile).unwrap();
            let direct = direct_shoot_on_ball(radius, &p, grid, 4000).unwrap();
            let gap = direct.max_abs_diff(&fine.profile).unwrap();
            let floor = 1e-10 * fine.sup_norm;
            assert!(
                gap <= 5.0 * ode_error + floor,
                "n={n} k={k} R={radius}: gap {gap:e}, ode {ode_error:e}"
            );
        }
    }
}

#[test]
fn sup_norm_scales_with_the_radius() {
    for (n, k) in [(2, 2), (3, 2), (5, 4)] {
        let p = make_params(n, k).unwrap();
        let shot = shoot_profile(&p, 2000).unwrap();
        let sup = |radius: f64| {
            profile_on_ball(radius, &p, RadialGrid::new(radius, 64).unwrap(), &shot)
                .unwrap()
                .sup_norm
        };
        let expo = 2.0 * k as f64 / (k as f64 - 1.0);
        for radius in [0.5f64, 3.0] {
            let want = sup(1.0) * radius.powf(expo);
            assert!((sup(radius) / want - 1.0).abs() < 1e-12);
            // both bounds carry the same power of R
            let ball = ball_bound(radius, &p) / ball_bound(1.0, &p);
            let tors = torsion_bound(radius, &p) / torsion_bound(1.0, &p);
            assert!((ball / radius.powf(expo) - 1.0).abs() < 1e-12);
            assert!((tors / radius.powf(expo) - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn scaled_profile_solves_the_shifted_eigenproblem() {
    for (n, k) in [(3, 2), (3, 3)] {
        let p = make_params(n, k).unwrap();
        let sol = solve_on_ball(1.0, &p, 96, 4000).unwrap();
        let theta = discrete_stationary(&sol.profile, &p).unwrap();
        for lambda in [-0.3, -4.0] {
            let law = ScalingLaw::from_lambda(lambda, k).unwrap();
            let scaled = theta.scaled(law.c);
            let s = apply_sk_radial(&scaled, &p).unwrap();
            let worst = (0..96)
                .map(|i| (s.values()[i] - lambda * scaled.values()[i]).abs())
                .fold(0.0, f64::max);
            assert!(
                worst <= 1e-11 * scaled.sup_norm() * lambda.abs(),
                "lambda {lambda}: {worst:e}"
            );
        }
    }
}

#[test]
fn barenblatt_mass_matches_independent_quadrature() {
    for (n, k) in [(2, 2), (3, 2), (3, 3), (5, 4)] {
        let p = make_params(n, k).unwrap();
        for c in [0.5, 2.0] {
            let sol = BarenblattSolution::new(&p, c).unwrap();
            let gamma = sol.gamma();
            let edge = (c / gamma).sqrt();
            let q = k as f64 / (k as f64 - 1.0);
            // r = edge sin(phi): integrand edge^n c^q sin^{n-1} cos^{2q+1}
            let steps = 20_000;
            let h = std::f64::consts::FRAC_PI_2 / steps as f64;
            let f = |phi: f64| phi.sin().powi(n as i32 - 1) * phi.cos().powf(2.0 * q + 1.0);
            let simpson: f64 = (0..=steps)
                .map(|i| {
                    let w = if i == 0 || i == steps {
                        1.0
                    } else if i % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    w * f(i as f64 * h)
                })
                .sum::<f64>()
                * h
                / 3.0;
            let mass = n as f64 * ball_volume(n) * edge.powi(n as i32) * c.powf(q) * simpson;
            let closed = closed_form_mass(&p, c).unwrap();
            assert!(
                (closed / mass - 1.0).abs() < 1e-9,
                "n={n} k={k} C={c}: {closed} vs {mass}"
            );
        }
    }
}

#[test]
fn barenblatt_satisfies_the_pde_pointwise() {
    // w = -U solves w_t = c_{n,k} r^{1-n} (r^{n-k} w_r^k)_r; both sides by
    // central differences of the closed form, inside the support.
    for (n, k) in [(2, 2), (3, 2), (4, 3)] {
        let p = make_params(n, k).unwrap();
        let sol = BarenblattSolution::new(&p, 1.0).unwrap();
        let c_nk = binom(n, k) / n as f64;
        let t = 1.5;
        let edge = sol.support_radius(t).unwrap();
        let (dt, dr) = (1e-4, 1e-4 * edge);
        let flux = |r: f64| {
            let du = (sol.value(t, r + dr).unwrap() - sol.value(t, r - dr).unwrap()) / (2.0 * dr);
            r.powi((n - k) as i32) * (-du).powi(k as i32)
        };
        for frac in [0.2, 0.5, 0.8] {
            let r = frac * edge;
            let ut = (sol.value(t + dt, r).unwrap() - sol.value(t - dt, r).unwrap()) / (2.0 * dt);
            let rhs = c_nk * r.powi(1 - n as i32) * (flux(r + dr) - flux(r - dr)) / (2.0 * dr);
            assert!(
                (ut + rhs).abs() <= 1e-5 * ut.abs().max(rhs.abs()),
                "n={n} k={k} r/edge={frac}: {ut} vs {rhs}"
            );
        }
    }
}
