//! Problem parameters `(n, k)` and the constants derived from them.
//!
//! The similarity exponents and the profile constant of the self-similar
//! family are fixed by the pair `(n, k)`:
//!
//! ```text
//! c_{n,k} = binom(n, k) / n
//! alpha   = n / (n(k-1) + 2k)
//! beta    = 1 / (n(k-1) + 2k)
//! gamma   = (k-1)/(2k) * (beta / c_{n,k})^{1/k}      (k > 1 only)
//! ```

use serde::Serialize;
use statrs::function::gamma::gamma as gamma_fn;

use crate::error::{Error, Result};

/// Largest dimension for which binomials are evaluated exactly.
pub const MAX_DIMENSION: usize = 60;

/// Exact binomial coefficient `binom(n, j)` for `n <= 60`.
///
/// Every partial product `binom(n, i)` is an integer, so the running
/// multiply-then-divide stays exact in `u128`.
pub fn binomial(n: usize, j: usize) -> u128 {
    if j > n {
        return 0;
    }
    let j = j.min(n - j);
    let mut acc: u128 = 1;
    for i in 0..j {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// `binom(n, j)` as a float.
pub fn binomial_f64(n: usize, j: usize) -> f64 {
    binomial(n, j) as f64
}

/// Volume of the unit ball in `R^n`, `pi^{n/2} / Gamma(n/2 + 1)`.
pub fn unit_ball_volume(n: usize) -> f64 {
    let half = n as f64 / 2.0;
    std::f64::consts::PI.powf(half) / gamma_fn(half + 1.0)
}

/// Dimension, Hessian order and every constant derived from them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProblemParams {
    pub n: usize,
    pub k: usize,
    /// `binom(n, k) / n`.
    pub c_nk: f64,
    pub alpha: f64,
    pub beta: f64,
    /// `None` for `k = 1`, where the compactly supported profile does not exist.
    pub gamma: Option<f64>,
}

impl ProblemParams {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::ParamDomain(format!("dimension n = {n} must be >= 2")));
        }
        if n > MAX_DIMENSION {
            return Err(Error::ParamDomain(format!(
                "dimension n = {n} exceeds the supported maximum {MAX_DIMENSION}"
            )));
        }
        if k < 1 || k > n {
            return Err(Error::ParamDomain(format!(
                "Hessian order k = {k} must satisfy 1 <= k <= n = {n}"
            )));
        }
        let binom = binomial(n, k);
        // reduce the rational binom/n before converting
        let g = gcd(binom, n as u128);
        let c_nk = (binom / g) as f64 / (n as u128 / g) as f64;

        let denom = (n * (k - 1) + 2 * k) as f64;
        let alpha = n as f64 / denom;
        let beta = 1.0 / denom;
        let gamma = (k > 1).then(|| {
            let kf = k as f64;
            (kf - 1.0) / (2.0 * kf) * (beta / c_nk).powf(1.0 / kf)
        });
        Ok(Self {
            n,
            k,
            c_nk,
            alpha,
            beta,
            gamma,
        })
    }

    pub fn binom_nk(&self) -> f64 {
        binomial_f64(self.n, self.k)
    }

    /// `gamma`, or a domain error for `k = 1`.
    pub fn gamma_checked(&self) -> Result<f64> {
        self.gamma
            .ok_or_else(|| Error::ParamDomain("gamma is undefined for k = 1 (Gaussian branch)".into()))
    }

    /// Rejects `k = 1` for the problems that divide by `k - 1`.
    pub fn require_fully_nonlinear(&self) -> Result<()> {
        if self.k < 2 {
            Err(Error::StationaryRequiresK2(self.k))
        } else {
            Ok(())
        }
    }

    pub fn dim_f64(&self) -> f64 {
        self.n as f64
    }

    pub fn order_f64(&self) -> f64 {
        self.k as f64
    }
}

/// Free-function spelling of [`ProblemParams::new`].
pub fn make_params(n: usize, k: usize) -> Result<ProblemParams> {
    ProblemParams::new(n, k)
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}
