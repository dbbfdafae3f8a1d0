//! Renormalization: good balls, the renormalized graph on good sub-balls, the
//! cascade recursion with its proof certificate, and closed-form diagnostics.

mod cascade;
mod graph;
mod lemmas;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub use cascade::{
    cascade_advance, smallest_n0_for_step1_tail, step1_tail_bound, step3_certificate,
    step3_constants, CascadeAdvance, CascadeState, InductionStep, Step3Config, Step3Constants,
    Step3Products, Step3Report,
};
pub use graph::{
    cluster_connection_lower_bound, good_ball_probability, renormalized_graph, GoodBallEstimate,
    RenormalizedGraph, MAX_CASCADE_POINTS,
};
pub use lemmas::{
    alpha, gamma_recursion, largest_component_tail, lemma51, pre_percolation_scan, r_n, r_tilde,
    skip_annulus_bound, skip_annulus_full_ball, skip_annulus_sweep, skip_double_sum, ComponentTail,
    ExactVsAsymptotic, GammaStep, Lemma51Case, Lemma51Params, PrePercMode, PrePercRow, PrePercScan,
    RTilde, SkipParams, SkipSweep, PREPERC_TOL,
};

/// Which clusters count as large enough at level `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum GoodBallConfig {
    /// `|X_k| >= N^{γk}`.
    Gamma { gamma: f64 },
    /// `|X_k| >= β N^k`.
    Beta { beta: f64 },
}

impl GoodBallConfig {
    pub fn validate(&self) -> Result<()> {
        match *self {
            GoodBallConfig::Gamma { gamma } if !(gamma > 0.0 && gamma < 1.0) => {
                invalid(format!("γ must lie in (0, 1), got {gamma}"))
            }
            GoodBallConfig::Beta { beta } if !(beta > 0.0 && beta <= 1.0) => {
                invalid(format!("β must lie in (0, 1], got {beta}"))
            }
            _ => Ok(()),
        }
    }

    /// Cluster size needed for a k-ball to be good.
    pub fn threshold(&self, base: u32, k: u32) -> f64 {
        let ln_points = k as f64 * (base as f64).ln();
        match *self {
            GoodBallConfig::Gamma { gamma } => (gamma * ln_points).exp(),
            GoodBallConfig::Beta { beta } => beta * ln_points.exp(),
        }
    }

    pub fn is_good(&self, base: u32, k: u32, size: u64) -> bool {
        // a relative slack keeps β N^k from missing an exact integer
        size as f64 >= self.threshold(base, k) * (1.0 - 1e-12)
    }
}
