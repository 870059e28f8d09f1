use serde::{Deserialize, Serialize};

use super::p2pe::{P2peResult, Summary};
use super::stats::{holm_bonferroni, median, wilcoxon_signed_rank, StatTestResult};
use crate::error::{input, Result};
use crate::grid::percentile;
use crate::loss::LossReport;

pub const REFERENCE_ARM: &str = "Proposed";
pub const STRUCTURES: [&str; 4] = ["overall", "ST", "SV", "MD"];
pub const STATISTICS: [&str; 3] = ["median", "max", "std"];

/// One arm's result on one bundle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleOutcome {
    pub bundle: usize,
    pub seed: u64,
    pub p2pe: P2peResult,
    /// Folding fraction of the atlas→subject field.
    pub folding: f64,
    /// Last optimisation step's report; absent for the identity arm.
    pub final_loss: Option<LossReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmOutcome {
    pub arm: String,
    pub bundles: Vec<BundleOutcome>,
}

/// `(min, q1, median, q3, max)` with linear interpolation between order statistics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Quantiles {
    pub fn of(values: &[f64]) -> Self {
        let mut s = values.to_vec();
        s.sort_by(f64::total_cmp);
        Self {
            min: s[0],
            q1: percentile(&s, 0.25),
            median: median(values),
            q3: percentile(&s, 0.75),
            max: s[s.len() - 1],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleRow {
    pub bundle: usize,
    pub seed: u64,
    pub overall: Summary,
    pub per_structure: [Summary; 3],
    pub folding: f64,
    pub final_total: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Boxplot {
    pub structure: String,
    pub statistic: String,
    pub quantiles: Quantiles,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub arm: String,
    pub bundles: Vec<BundleRow>,
    /// Distribution across bundles of each per-bundle statistic.
    pub boxplots: Vec<Boxplot>,
    pub folding_mean: f64,
    pub folding: Quantiles,
}

impl ArmSummary {
    /// Across-suite median of a per-bundle statistic.
    pub fn suite_median(&self, structure: &str, statistic: &str) -> Option<f64> {
        self.boxplots
            .iter()
            .find(|b| b.structure == structure && b.statistic == statistic)
            .map(|b| b.quantiles.median)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellTest {
    pub structure: String,
    pub statistic: String,
    pub reference_median: f64,
    pub arm_median: f64,
    /// `None` when the suite has fewer than 5 bundles.
    pub test: Option<StatTestResult>,
    pub p_two_sided_holm: Option<f64>,
    pub p_one_sided_holm: Option<f64>,
}

/// Every test of one arm against the reference arm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub arm: String,
    pub cells: Vec<CellTest>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub reference: String,
    pub arms: Vec<ArmSummary>,
    pub comparisons: Vec<ComparisonRow>,
}

impl AblationReport {
    pub fn arm(&self, name: &str) -> Option<&ArmSummary> {
        self.arms.iter().find(|a| a.arm == name)
    }
}

fn per_bundle(arm: &ArmOutcome, structure: &str, statistic: &str) -> Vec<f64> {
    arm.bundles
        .iter()
        .map(|b| {
            b.p2pe
                .summary(structure)
                .and_then(|s| s.get(statistic))
                .expect("known structure and statistic")
        })
        .collect()
}

fn summarize(arm: &ArmOutcome) -> ArmSummary {
    let mut boxplots = Vec::new();
    for s in STRUCTURES {
        for t in STATISTICS {
            boxplots.push(Boxplot {
                structure: s.into(),
                statistic: t.into(),
                quantiles: Quantiles::of(&per_bundle(arm, s, t)),
            });
        }
    }
    let folding: Vec<f64> = arm.bundles.iter().map(|b| b.folding).collect();
    ArmSummary {
        arm: arm.arm.clone(),
        bundles: arm
            .bundles
            .iter()
            .map(|b| BundleRow {
                bundle: b.bundle,
                seed: b.seed,
                overall: b.p2pe.overall,
                per_structure: b.p2pe.per_structure,
                folding: b.folding,
                final_total: b.final_loss.as_ref().map(|r| r.total),
            })
            .collect(),
        boxplots,
        folding_mean: folding.iter().sum::<f64>() / folding.len() as f64,
        folding: Quantiles::of(&folding),
    }
}

/// Summaries per arm and signed-rank tests of every other arm against
/// `Proposed`. Holm correction runs over the compared arms separately for
/// each (structure, statistic) cell and each sidedness.
pub fn build_report(arms: &[ArmOutcome]) -> Result<AblationReport> {
    let reference = arms
        .iter()
        .find(|a| a.arm == REFERENCE_ARM)
        .ok_or_else(|| crate::Error::Input(format!("no {REFERENCE_ARM} arm")))?;
    if reference.bundles.is_empty() {
        return input("empty suite");
    }
    let ids: Vec<(usize, u64)> = reference.bundles.iter().map(|b| (b.bundle, b.seed)).collect();
    for a in arms {
        let other: Vec<(usize, u64)> = a.bundles.iter().map(|b| (b.bundle, b.seed)).collect();
        if other != ids {
            return input(format!("arm {} was run on a different suite", a.arm));
        }
    }
    let others: Vec<&ArmOutcome> = arms.iter().filter(|a| a.arm != REFERENCE_ARM).collect();
    let mut comparisons: Vec<ComparisonRow> = others
        .iter()
        .map(|a| ComparisonRow {
            arm: a.arm.clone(),
            cells: Vec::new(),
        })
        .collect();
    for s in STRUCTURES {
        for t in STATISTICS {
            let x = per_bundle(reference, s, t);
            let tests: Vec<Option<StatTestResult>> = others
                .iter()
                .map(|a| {
                    let y = per_bundle(a, s, t);
                    (x.len() >= 5).then(|| wilcoxon_signed_rank(&x, &y)).transpose()
                })
                .collect::<Result<_>>()?;
            let adjust = |f: fn(&StatTestResult) -> f64| -> Result<Vec<Option<f64>>> {
                let raw: Vec<f64> = tests.iter().flatten().map(f).collect();
                let mut adj = holm_bonferroni(&raw)?.into_iter();
                Ok(tests.iter().map(|t| t.as_ref().and_then(|_| adj.next())).collect())
            };
            let two = adjust(|t| t.p_two_sided)?;
            let one = adjust(|t| t.p_one_sided)?;
            for (i, a) in others.iter().enumerate() {
                comparisons[i].cells.push(CellTest {
                    structure: s.into(),
                    statistic: t.into(),
                    reference_median: median(&x),
                    arm_median: median(&per_bundle(a, s, t)),
                    test: tests[i],
                    p_two_sided_holm: two[i],
                    p_one_sided_holm: one[i],
                });
            }
        }
    }
    Ok(AblationReport {
        reference: REFERENCE_ARM.into(),
        arms: arms.iter().map(summarize).collect(),
        comparisons,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn arm(name: &str, scale: f64, n: usize, rng: &mut ChaCha8Rng) -> ArmOutcome {
        ArmOutcome {
            arm: name.into(),
            bundles: (0..n)
                .map(|i| {
                    let d: Vec<f64> = (0..9).map(|_| scale * rng.random::<f64>()).collect();
                    BundleOutcome {
                        bundle: i,
                        seed: 100 + i as u64,
                        p2pe: P2peResult::from_distances(d, [3, 3, 3]).unwrap(),
                        folding: rng.random::<f64>() * 0.01,
                        final_loss: None,
                    }
                })
                .collect(),
        }
    }

    #[test]
    fn six_arms_give_five_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let names = ["Proposed", "NoNCC", "NoCycConsis", "NoFRE", "Baseline", "NoRegistration"];
        let arms: Vec<ArmOutcome> = names
            .iter()
            .enumerate()
            .map(|(i, n)| arm(n, 1.0 + i as f64, 8, &mut rng))
            .collect();
        let r = build_report(&arms).unwrap();
        assert_eq!(r.comparisons.len(), 5);
        assert_eq!(r.arms.len(), 6);
        for row in &r.comparisons {
            assert_eq!(row.cells.len(), 12);
            for c in &row.cells {
                let t = c.test.unwrap();
                assert!(c.p_two_sided_holm.unwrap() >= t.p_two_sided);
                assert!(c.p_one_sided_holm.unwrap() >= t.p_one_sided);
            }
        }
        // recompute a boxplot median from the raw vectors
        let raw: Vec<f64> = arms[3].bundles.iter().map(|b| median(&b.p2pe.distances[6..9])).collect();
        let got = r.arm("NoFRE").unwrap().boxplots.iter().find(|b| b.structure == "MD" && b.statistic == "median").unwrap();
        assert!((got.quantiles.median - median(&raw)).abs() <= 1e-12);
    }

    #[test]
    fn mismatched_suites_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = arm("Proposed", 1.0, 6, &mut rng);
        let b = arm("NoFRE", 1.0, 5, &mut rng);
        assert!(build_report(&[a.clone(), b]).is_err());
        assert!(build_report(&[arm("NoFRE", 1.0, 6, &mut rng)]).is_err());
        let small = build_report(&[arm("Proposed", 1.0, 3, &mut rng), arm("NoNCC", 1.0, 3, &mut rng)]);
        assert!(small.unwrap().comparisons[0].cells[0].test.is_none());
    }

    #[test]
    fn quantiles() {
        let q = Quantiles::of(&[4.0, 1.0, 3.0, 2.0, 5.0]);
        assert_eq!(q, Quantiles { min: 1.0, q1: 2.0, median: 3.0, q3: 4.0, max: 5.0 });
    }
}
