//! Composite Gauss-Legendre quadrature on `[0, edge]`, graded toward `edge`.
//!
//! Profiles of the form `(C - gamma r^2)_+^{k/(k-1)}` are only Hölder
//! smooth at the free boundary, so the panels halve geometrically as they
//! approach it while the bulk of the interval is covered uniformly.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

use crate::error::{Error, Result};

/// Points per panel.
pub const PANEL_ORDER: usize = 10;

/// Geometric levels used at most next to the edge.
const MAX_LEVELS: usize = 48;

#[derive(Debug, Clone)]
pub struct GradedRule {
    rule: GaussLegendre,
    breaks: Vec<f64>,
}

impl GradedRule {
    /// A rule with about `points` evaluation points on `[0, 1]`.
    pub fn new(points: usize) -> Result<Self> {
        let panels = points / PANEL_ORDER;
        if panels < 8 {
            return Err(Error::invalid(format!(
                "graded quadrature needs at least {} points, got {points}",
                8 * PANEL_ORDER
            )));
        }
        let levels = (panels / 2).min(MAX_LEVELS);
        let uniform = panels - levels - 1;
        let mut breaks: Vec<f64> = (0..=uniform).map(|i| 0.5 * i as f64 / uniform as f64).collect();
        breaks.extend((2..=levels + 1).map(|j| 1.0 - 0.5f64.powi(j as i32)));
        breaks.push(1.0);
        let order = NonZeroUsize::new(PANEL_ORDER).expect("nonzero order");
        Ok(Self {
            rule: GaussLegendre::new(order),
            breaks,
        })
    }

    pub fn points(&self) -> usize {
        (self.breaks.len() - 1) * PANEL_ORDER
    }

    /// `int_0^edge f(r) dr`.
    pub fn integrate(&self, edge: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.breaks
            .windows(2)
            .map(|w| self.rule.integrate(w[0] * edge, w[1] * edge, &mut f))
            .sum()
    }
}
