//! Loss terms, their weighted total, and analytic gradients.
//!
//! Every term is reported per direction: index 0 is the term that trains the
//! atlas→subject transform and index 1 the subject→atlas one. For the
//! cycle term, index 0 round-trips atlas-space objects and index 1
//! subject-space objects.

mod bending;
mod cycle;
mod dice;
mod fre;
pub mod gradcheck;
mod l2;
mod ncc;
mod objective;

use serde::{Deserialize, Serialize};

pub use bending::bending_energy;
pub use cycle::cycle_consistency;
pub use dice::{mspdice_loss, mspdice_loss_with, DiceDenominator, MsDiceTarget, DEFAULT_SCALES, DICE_EPS};
pub use fre::mean_fre;
pub use l2::l2_penalty;
pub use ncc::{ncc, ncc_loss, NCC_EPS};
pub use objective::{total_objective, Directions, Evaluation, ObjectSet, Objective, ObjectiveConfig};

use crate::error::{config, Result};

/// Weights of the six loss terms. Zero disables a term's gradient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub mspdice: f64,
    pub fre: f64,
    pub ncc: f64,
    pub cyc: f64,
    pub bend: f64,
    pub l2: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            mspdice: 1.0,
            fre: 2.0,
            ncc: 0.5,
            cyc: 0.5,
            bend: 0.5,
            l2: 0.0001,
        }
    }
}

impl LossWeights {
    pub const TERMS: [&'static str; 6] = ["mspdice", "fre", "ncc", "cyc", "bend", "l2"];

    pub fn as_array(&self) -> [f64; 6] {
        [self.mspdice, self.fre, self.ncc, self.cyc, self.bend, self.l2]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, w) in Self::TERMS.iter().zip(self.as_array()) {
            if !(w.is_finite() && w >= 0.0) {
                return config(format!("weight {name} = {w} must be finite and >= 0"));
            }
        }
        Ok(())
    }
}

/// Raw per-direction term values of one evaluation and their weighted total.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub mspdice: [f64; 2],
    /// mm
    pub fre: [f64; 2],
    /// `1 − NCC`
    pub ncc: [f64; 2],
    pub cyc: [f64; 2],
    pub bend: [f64; 2],
    pub l2: [f64; 2],
    pub weights: LossWeights,
    pub total: f64,
}

impl LossReport {
    pub fn zeros(weights: LossWeights) -> Self {
        Self {
            mspdice: [0.0; 2],
            fre: [0.0; 2],
            ncc: [0.0; 2],
            cyc: [0.0; 2],
            bend: [0.0; 2],
            l2: [0.0; 2],
            weights,
            total: 0.0,
        }
    }

    /// Raw terms in [`LossWeights::TERMS`] order.
    pub fn terms(&self) -> [[f64; 2]; 6] {
        [self.mspdice, self.fre, self.ncc, self.cyc, self.bend, self.l2]
    }

    /// Both-direction sum of each raw term.
    pub fn term_sums(&self) -> [f64; 6] {
        self.terms().map(|t| t[0] + t[1])
    }

    pub fn weighted_total(&self) -> f64 {
        self.weights
            .as_array()
            .iter()
            .zip(self.term_sums())
            .map(|(w, t)| w * t)
            .sum()
    }

    pub fn recompute_total(&mut self) {
        self.total = self.weighted_total();
    }

    /// Name of the first non-finite raw term, or `"total"`.
    pub fn first_non_finite(&self) -> Option<&'static str> {
        for (name, t) in LossWeights::TERMS.iter().zip(self.terms()) {
            if !(t[0].is_finite() && t[1].is_finite()) {
                return Some(name);
            }
        }
        (!self.total.is_finite()).then_some("total")
    }
}
