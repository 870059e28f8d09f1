//! The command implementations behind the CLI; each writes its outputs under a directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::format::*;
use crate::deform::{jacobian_determinant, realize_ddf};
use crate::engine::{
    derive_seed, infer_segmentation, register_pair_with, run_ablation_suite, Arm, AtlasObjects,
    BidirectionalModel, PairBundle, RegistrationConfig, SubjectObjects, SuiteOptions,
};
use crate::error::{input, Error, Result};
use crate::eval::{build_report, p2pe, AblationReport, P2peResult, STATISTICS, STRUCTURES};
use crate::loss::gradcheck::{run_gradcheck, GradcheckOptions, TermCheck};
use crate::loss::LossReport;
use crate::phantom::{make_atlas, make_subject, truth_control_spacing, PhantomAtlas};

pub const ATLAS_DIR: &str = "atlas";
pub const SUBJECTS_DIR: &str = "subjects";
pub const IMAGE_FILE: &str = "image.vreg";
pub const CLEAN_FILE: &str = "clean.vreg";
pub const ARTIFACT_FILE: &str = "artifact.vreg";
pub const MASKS_FILE: &str = "masks.vreg";
pub const JACOBIAN_FILE: &str = "truth_jacobian.vreg";
pub const MESH_FILE: &str = "mesh.vmesh";
pub const TRUTH_FILE: &str = "truth_warp.vreg";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.json";
pub const MODEL_FILE: &str = "model.json";
pub const FWD_DDF_FILE: &str = "fwd_ddf.vreg";
pub const REV_DDF_FILE: &str = "rev_ddf.vreg";
pub const TRACE_FILE: &str = "trace.tsv";
pub const P2PE_FILE: &str = "p2pe.tsv";
pub const STATS_FILE: &str = "stats.tsv";
pub const REPORT_FILE: &str = "report.json";
pub const SUMMARY_FILE: &str = "summary.tsv";
pub const COMPARISONS_FILE: &str = "comparisons.tsv";
pub const BUNDLES_FILE: &str = "bundles.tsv";
pub const ARMS_FILE: &str = "arms.json";

pub fn subject_dir(suite: &Path, i: usize) -> PathBuf {
    suite.join(SUBJECTS_DIR).join(format!("subject_{i:03}"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubjectManifest {
    pub index: usize,
    pub seed: u64,
    pub master_seed: u64,
    pub deform_magnitude: f64,
    pub severity: f64,
    pub truth_control_spacing: usize,
    pub files: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteManifest {
    pub master_seed: u64,
    pub suite_size: usize,
    pub subject_seeds: Vec<u64>,
    pub subject_dirs: Vec<String>,
}

pub fn subject_seed(master: u64, i: usize) -> u64 {
    derive_seed(master, i as u64)
}

fn write_atlas(dir: &Path, atlas: &PhantomAtlas) -> Result<()> {
    write_volume(&dir.join(IMAGE_FILE), &atlas.image)?;
    write_masks(&dir.join(MASKS_FILE), &atlas.masks)?;
    write_mesh(&dir.join(MESH_FILE), &atlas.mesh)
}

/// Generates the atlas and `suite_size` subjects under `cfg.out_dir`.
pub fn cmd_phantom(cfg: &RunConfig) -> Result<SuiteManifest> {
    cfg.validate()?;
    let out = &cfg.out_dir;
    let atlas = make_atlas(&cfg.phantom.spiral, cfg.phantom.grid()?)?;
    write_atlas(&out.join(ATLAS_DIR), &atlas)?;
    let seeds: Vec<u64> = (0..cfg.suite_size).map(|i| subject_seed(cfg.master_seed, i)).collect();
    let mut dirs = Vec::with_capacity(seeds.len());
    for (i, &seed) in seeds.iter().enumerate() {
        let s = make_subject(
            &atlas,
            seed,
            cfg.phantom.deform_magnitude,
            cfg.severity,
            &cfg.phantom.artifacts,
        )?;
        let dir = subject_dir(out, i);
        write_volume(&dir.join(CLEAN_FILE), &s.clean_image)?;
        write_volume(&dir.join(ARTIFACT_FILE), &s.artifact_image)?;
        write_masks(&dir.join(MASKS_FILE), &s.masks)?;
        write_volume(&dir.join(JACOBIAN_FILE), &jacobian_determinant(&s.truth_warp))?;
        write_mesh(&dir.join(MESH_FILE), &s.mesh)?;
        write_ddf(&dir.join(TRUTH_FILE), &s.truth_warp)?;
        let manifest = SubjectManifest {
            index: i,
            seed,
            master_seed: cfg.master_seed,
            deform_magnitude: cfg.phantom.deform_magnitude,
            severity: cfg.severity,
            truth_control_spacing: truth_control_spacing(&atlas.grid()),
            files: [CLEAN_FILE, ARTIFACT_FILE, MASKS_FILE, JACOBIAN_FILE, MESH_FILE, TRUTH_FILE]
                .map(String::from)
                .to_vec(),
        };
        write_json(&dir.join(MANIFEST_FILE), &manifest)?;
        dirs.push(format!("{SUBJECTS_DIR}/subject_{i:03}"));
    }
    let manifest = SuiteManifest {
        master_seed: cfg.master_seed,
        suite_size: cfg.suite_size,
        subject_seeds: seeds,
        subject_dirs: dirs,
    };
    write_json(&out.join(MANIFEST_FILE), &manifest)?;
    cfg.save(&out.join(CONFIG_FILE))?;
    Ok(manifest)
}

pub fn load_atlas(dir: &Path) -> Result<AtlasObjects> {
    Ok(AtlasObjects {
        image: read_volume(&dir.join(IMAGE_FILE))?,
        masks: read_masks(&dir.join(MASKS_FILE))?,
        mesh: read_mesh(&dir.join(MESH_FILE))?,
    })
}

pub fn load_subject(dir: &Path) -> Result<SubjectObjects> {
    Ok(SubjectObjects {
        artifact_image: read_volume(&dir.join(ARTIFACT_FILE))?,
        clean_image: read_volume(&dir.join(CLEAN_FILE))?,
        masks: read_masks(&dir.join(MASKS_FILE))?,
        mesh: read_mesh(&dir.join(MESH_FILE))?,
    })
}

const TRACE_HEADER: &str = "step\tmspdice_fwd\tmspdice_rev\tfre_fwd\tfre_rev\tncc_fwd\tncc_rev\tcyc_atlas\tcyc_subject\tbend_fwd\tbend_rev\tl2_fwd\tl2_rev\ttotal\n";

/// Tab-separated per-step loss table; floats use shortest round-trip form.
pub fn trace_table(trace: &[LossReport]) -> String {
    let mut s = String::from(TRACE_HEADER);
    for (i, r) in trace.iter().enumerate() {
        write!(s, "{i}").expect("string write");
        for t in r.terms() {
            write!(s, "\t{:?}\t{:?}", t[0], t[1]).expect("string write");
        }
        writeln!(s, "\t{:?}", r.total).expect("string write");
    }
    s
}

/// Output of [`cmd_register`].
#[derive(Clone, Debug)]
pub struct Registered {
    pub model: BidirectionalModel,
    pub trace: Vec<LossReport>,
}

/// Registers one subject to the atlas. Writes the model, both realised
/// fields and the trace; on a numerical failure the trace up to the failing
/// step is still written.
pub fn cmd_register(atlas_dir: &Path, subject_dir: &Path, cfg: &RegistrationConfig, out: &Path) -> Result<Registered> {
    let bundle = PairBundle {
        atlas: load_atlas(atlas_dir)?,
        subject: load_subject(subject_dir)?,
    };
    let mut trace = Vec::new();
    let result = register_pair_with(&bundle, cfg, |_, r| trace.push(r.clone()));
    write_bytes(&out.join(TRACE_FILE), trace_table(&trace).as_bytes())?;
    let model = result?;
    write_json(&out.join(MODEL_FILE), &model)?;
    write_ddf(&out.join(FWD_DDF_FILE), &realize_ddf(&model.fwd, &model.grid)?)?;
    write_ddf(&out.join(REV_DDF_FILE), &realize_ddf(&model.rev, &model.grid)?)?;
    Ok(Registered { model, trace })
}

/// Propagates the atlas mesh into subject space with a stored model.
pub fn cmd_segment(model_path: &Path, atlas_mesh: &Path, out_mesh: &Path) -> Result<crate::phantom::CorrespondenceMesh> {
    let model: BidirectionalModel = read_json(model_path)?;
    let mesh = infer_segmentation(&model, &read_mesh(atlas_mesh)?)?;
    write_mesh(out_mesh, &mesh)?;
    Ok(mesh)
}

fn stats_table(r: &P2peResult) -> String {
    let mut s = String::from("structure\tmedian\tmax\tstd\n");
    for name in STRUCTURES {
        let m = r.summary(name).expect("known structure");
        writeln!(s, "{name}\t{:?}\t{:?}\t{:?}", m.median, m.max, m.std).expect("string write");
    }
    s
}

/// Per-vertex P2PE of `mesh` against `truth`, and its statistics.
pub fn cmd_evaluate(mesh: &Path, truth: &Path, out: &Path) -> Result<P2peResult> {
    let r = p2pe(&read_mesh(mesh)?, &read_mesh(truth)?)?;
    let mut s = String::from("vertex\tstructure\tp2pe\n");
    let names = ["ST", "SV", "MD"];
    let mut v = 0;
    for (c, &n) in r.class_counts.iter().enumerate() {
        for _ in 0..n {
            writeln!(s, "{v}\t{}\t{:?}", names[c], r.distances[v]).expect("string write");
            v += 1;
        }
    }
    write_bytes(&out.join(P2PE_FILE), s.as_bytes())?;
    write_bytes(&out.join(STATS_FILE), stats_table(&r).as_bytes())?;
    Ok(r)
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".into(), |v| format!("{v:?}"))
}

fn summary_table(rep: &AblationReport) -> String {
    let mut s = String::from("arm");
    for st in STRUCTURES {
        for stat in STATISTICS {
            write!(s, "\t{st}_{stat}").expect("string write");
        }
    }
    s.push_str("\tfolding_mean\n");
    for a in &rep.arms {
        s.push_str(&a.arm);
        for st in STRUCTURES {
            for stat in STATISTICS {
                write!(s, "\t{}", opt(a.suite_median(st, stat))).expect("string write");
            }
        }
        writeln!(s, "\t{:?}", a.folding_mean).expect("string write");
    }
    s
}

fn comparisons_table(rep: &AblationReport) -> String {
    let mut s = String::from(
        "arm\tstructure\tstatistic\treference_median\tarm_median\tW_plus\tn\tmethod\tp_two_sided\tp_one_sided\tp_two_sided_holm\tp_one_sided_holm\n",
    );
    for row in &rep.comparisons {
        for c in &row.cells {
            let (w, n, method, p2, p1) = match &c.test {
                Some(t) => (
                    format!("{:?}", t.statistic),
                    t.n_effective.to_string(),
                    format!("{:?}", t.method),
                    format!("{:?}", t.p_two_sided),
                    format!("{:?}", t.p_one_sided),
                ),
                None => ["NA"; 5].map(String::from).into(),
            };
            writeln!(
                s,
                "{}\t{}\t{}\t{:?}\t{:?}\t{w}\t{n}\t{method}\t{p2}\t{p1}\t{}\t{}",
                row.arm,
                c.structure,
                c.statistic,
                c.reference_median,
                c.arm_median,
                opt(c.p_two_sided_holm),
                opt(c.p_one_sided_holm)
            )
            .expect("string write");
        }
    }
    s
}

fn bundles_table(rep: &AblationReport) -> String {
    let mut s = String::from("arm\tbundle\tseed\tmedian\tmax\tstd\tST_median\tSV_median\tMD_median\tfolding\tfinal_total\n");
    for a in &rep.arms {
        for b in &a.bundles {
            writeln!(
                s,
                "{}\t{}\t{}\t{:?}\t{:?}\t{:?}\t{:?}\t{:?}\t{:?}\t{:?}\t{}",
                a.arm,
                b.bundle,
                b.seed,
                b.overall.median,
                b.overall.max,
                b.overall.std,
                b.per_structure[0].median,
                b.per_structure[1].median,
                b.per_structure[2].median,
                b.folding,
                opt(b.final_total)
            )
            .expect("string write");
        }
    }
    s
}

#[derive(Serialize)]
struct ArmConfig<'a> {
    arm: &'a str,
    config: Option<RegistrationConfig>,
}

/// Runs every configured arm over the suite in `suite` and writes the report files to `out`.
pub fn cmd_ablate(suite: &Path, cfg: &RunConfig, jobs: usize, out: &Path) -> Result<AblationReport> {
    cfg.validate()?;
    let manifest: SuiteManifest = read_json(&suite.join(MANIFEST_FILE))?;
    if manifest.suite_size < cfg.suite_size {
        return input(format!(
            "suite has {} subjects but the config asks for {}",
            manifest.suite_size, cfg.suite_size
        ));
    }
    let atlas = load_atlas(&suite.join(ATLAS_DIR))?;
    let bundles: Vec<PairBundle> = (0..cfg.suite_size)
        .map(|i| {
            Ok(PairBundle {
                atlas: atlas.clone(),
                subject: load_subject(&subject_dir(suite, i))?,
            })
        })
        .collect::<Result<_>>()?;
    let arms = ablate_arms(&cfg.arms);
    let outcomes = run_ablation_suite(&bundles, &cfg.registration, &arms, SuiteOptions { jobs })?;
    let report = build_report(&outcomes)?;
    write_json(&out.join(REPORT_FILE), &report)?;
    write_bytes(&out.join(SUMMARY_FILE), summary_table(&report).as_bytes())?;
    write_bytes(&out.join(COMPARISONS_FILE), comparisons_table(&report).as_bytes())?;
    write_bytes(&out.join(BUNDLES_FILE), bundles_table(&report).as_bytes())?;
    let arm_cfgs: Vec<ArmConfig> = arms
        .iter()
        .map(|a| ArmConfig {
            arm: a.name(),
            config: a.config(&cfg.registration),
        })
        .collect();
    write_json(&out.join(ARMS_FILE), &arm_cfgs)?;
    Ok(report)
}

/// The reference arm always runs first so every report has something to compare against.
fn ablate_arms(requested: &[Arm]) -> Vec<Arm> {
    let mut arms = vec![Arm::Proposed];
    for a in requested {
        if !arms.contains(a) {
            arms.push(*a);
        }
    }
    arms
}

/// Finite-difference check of every loss term on a random `n³` bundle.
pub fn cmd_gradcheck(seed: u64, n: usize) -> Result<Vec<TermCheck>> {
    if n < 8 {
        return input("gradcheck needs a grid of at least 8 voxels per axis");
    }
    let opts = GradcheckOptions {
        n,
        ..GradcheckOptions::default()
    };
    run_gradcheck(seed, &opts)
}

pub fn gradcheck_table(checks: &[TermCheck]) -> String {
    let mut s = String::from("term\tchecked\tworst_rel_err\tnoise_limited\tresult\n");
    for c in checks {
        writeln!(
            s,
            "{}\t{}\t{:.3e}\t{}\t{}",
            c.term,
            c.checked,
            c.worst_rel_err,
            c.noise_limited,
            if c.passed { "pass" } else { "FAIL" }
        )
        .expect("string write");
    }
    s
}

/// Maps a library error onto the process exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Input(_) | Error::Config(_) => 1,
        Error::Io { .. } | Error::Format { .. } => 2,
        Error::NonFinite { .. } => 3,
    }
}
