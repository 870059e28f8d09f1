use serde::{Deserialize, Serialize};

use super::{infer_segmentation, register_pair_with, BidirectionalModel, PairBundle, RegistrationConfig};
use crate::deform::{folding_fraction, realize_ddf};
use crate::error::{input, Result};
use crate::eval::{p2pe, ArmOutcome, BundleOutcome};
use crate::loss::{Directions, LossWeights};

/// Ablation arms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arm {
    Proposed,
    #[serde(rename = "NoNCC")]
    NoNcc,
    NoCycConsis,
    #[serde(rename = "NoFRE")]
    NoFre,
    Baseline,
    NoRegistration,
}

impl Arm {
    pub const ALL: [Arm; 6] = [
        Arm::Proposed,
        Arm::NoNcc,
        Arm::NoCycConsis,
        Arm::NoFre,
        Arm::Baseline,
        Arm::NoRegistration,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Arm::Proposed => "Proposed",
            Arm::NoNcc => "NoNCC",
            Arm::NoCycConsis => "NoCycConsis",
            Arm::NoFre => "NoFRE",
            Arm::Baseline => "Baseline",
            Arm::NoRegistration => "NoRegistration",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| crate::Error::Config(format!("unknown arm {s:?}")))
    }

    /// The arm's configuration derived from `base`; `None` for the identity arm.
    pub fn config(self, base: &RegistrationConfig) -> Option<RegistrationConfig> {
        let mut c = base.clone();
        match self {
            Arm::Proposed => {}
            Arm::NoNcc => c.weights.ncc = 0.0,
            Arm::NoCycConsis => c.weights.cyc = 0.0,
            Arm::NoFre => c.weights.fre = 0.0,
            Arm::Baseline => {
                c.weights = LossWeights {
                    fre: 0.0,
                    ncc: 0.0,
                    cyc: 0.0,
                    ..base.weights
                };
                c.directions = Directions::ForwardOnly;
            }
            Arm::NoRegistration => return None,
        }
        Some(c)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of item `i` under `master`: `splitmix64(master ⊕ splitmix64(i))`.
pub fn derive_seed(master: u64, i: u64) -> u64 {
    splitmix64(master ^ splitmix64(i))
}

#[derive(Clone, Copy, Debug)]
pub struct SuiteOptions {
    /// Concurrent registrations; results do not depend on it.
    pub jobs: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self { jobs: 1 }
    }
}

fn run_one(bundle: &PairBundle, index: usize, arm: Arm, base: &RegistrationConfig) -> Result<BundleOutcome> {
    let seed = derive_seed(base.seed, index as u64);
    let (model, final_loss) = match arm.config(base) {
        Some(mut cfg) => {
            cfg.seed = seed;
            let mut last = None;
            let model = register_pair_with(bundle, &cfg, |_, r| last = Some(r.clone()))?;
            (model, last)
        }
        None => (BidirectionalModel::identity(bundle.grid(), base.control_spacing)?, None),
    };
    let mesh = infer_segmentation(&model, &bundle.atlas.mesh)?;
    Ok(BundleOutcome {
        bundle: index,
        seed,
        p2pe: p2pe(&mesh, &bundle.subject.mesh)?,
        folding: folding_fraction(&realize_ddf(&model.fwd, &model.grid)?),
        final_loss,
    })
}

/// Registers every bundle under every arm. Bundle `i` uses the same derived
/// seed in every arm. Output order follows `arms` then `bundles`.
pub fn run_ablation_suite(
    bundles: &[PairBundle],
    base: &RegistrationConfig,
    arms: &[Arm],
    opts: SuiteOptions,
) -> Result<Vec<ArmOutcome>> {
    if bundles.is_empty() {
        return input("ablation suite needs at least one bundle");
    }
    base.validate()?;
    let tasks: Vec<(Arm, usize)> = arms
        .iter()
        .flat_map(|&a| (0..bundles.len()).map(move |i| (a, i)))
        .collect();
    let work = || crate::par::map_range(tasks.len(), |t| {
        let (arm, i) = tasks[t];
        run_one(&bundles[i], i, arm, base)
    });
    let results = run_with_jobs(opts.jobs, work)?;
    let mut out: Vec<ArmOutcome> = arms
        .iter()
        .map(|a| ArmOutcome {
            arm: a.name().into(),
            bundles: Vec::with_capacity(bundles.len()),
        })
        .collect();
    for (t, r) in tasks.iter().zip(results) {
        let k = arms.iter().position(|a| *a == t.0).expect("arm listed");
        out[k].bundles.push(r?);
    }
    Ok(out)
}

#[cfg(feature = "parallel")]
fn run_with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| crate::Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

#[cfg(not(feature = "parallel"))]
fn run_with_jobs<T: Send>(_jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    Ok(f())
}
