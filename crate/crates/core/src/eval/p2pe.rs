use serde::{Deserialize, Serialize};

use super::stats::{median, population_std};
use crate::error::{input, Result};
use crate::geom;
use crate::grid::Structure;
use crate::phantom::CorrespondenceMesh;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub median: f64,
    pub max: f64,
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self {
                median: 0.0,
                max: 0.0,
                std: 0.0,
            };
        }
        Self {
            median: median(values),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            std: population_std(values),
        }
    }

    pub fn get(&self, statistic: &str) -> Option<f64> {
        match statistic {
            "median" => Some(self.median),
            "max" => Some(self.max),
            "std" => Some(self.std),
            _ => None,
        }
    }
}

/// Per-vertex distances (mm) with per-structure (ST, SV, MD) and overall statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct P2peResult {
    pub distances: Vec<f64>,
    pub class_counts: [usize; 3],
    pub per_structure: [Summary; 3],
    pub overall: Summary,
}

impl P2peResult {
    pub fn from_distances(distances: Vec<f64>, class_counts: [usize; 3]) -> Result<Self> {
        if class_counts.iter().sum::<usize>() != distances.len() {
            return input("class counts do not match the distance vector");
        }
        let mut start = 0;
        let per_structure = class_counts.map(|c| {
            let s = Summary::of(&distances[start..start + c]);
            start += c;
            s
        });
        Ok(Self {
            overall: Summary::of(&distances),
            per_structure,
            distances,
            class_counts,
        })
    }

    /// `"overall"` or a structure name.
    pub fn summary(&self, structure: &str) -> Option<&Summary> {
        if structure == "overall" {
            return Some(&self.overall);
        }
        Structure::ALL
            .iter()
            .position(|s| s.name() == structure)
            .map(|i| &self.per_structure[i])
    }
}

/// Euclidean distance between index-corresponding vertices.
pub fn p2pe(a: &CorrespondenceMesh, b: &CorrespondenceMesh) -> Result<P2peResult> {
    if a.len() != b.len() || a.class_counts != b.class_counts {
        return input(format!(
            "meshes differ: {} vertices {:?} vs {} vertices {:?}",
            a.len(),
            a.class_counts,
            b.len(),
            b.class_counts
        ));
    }
    let d = a
        .vertices
        .iter()
        .zip(&b.vertices)
        .map(|(p, q)| geom::dist(*p, *q))
        .collect();
    P2peResult::from_distances(d, a.class_counts)
}
