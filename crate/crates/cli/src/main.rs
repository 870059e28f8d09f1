use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bireg::run::{self, RunConfig};

/// Bidirectional atlas registration of synthetic cochleae.
#[derive(Parser, Debug)]
#[command(name = "bireg", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON run configuration; defaults apply to missing keys.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Seed override (master seed for phantom, optimiser seed otherwise).
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Generate the atlas and a suite of subjects.
    Phantom {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        /// Artefact strength.
        #[arg(long, value_name = "X")]
        severity: Option<f64>,
    },
    /// Register one subject to the atlas.
    Register {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "DIR")]
        atlas: PathBuf,
        #[arg(long, value_name = "DIR")]
        subject: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Propagate the atlas mesh through a registered model.
    Segment {
        #[arg(long, value_name = "PATH")]
        model: PathBuf,
        #[arg(long, value_name = "PATH")]
        atlas_mesh: PathBuf,
        /// Output mesh file.
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Point-to-point error of a mesh against its ground truth.
    Evaluate {
        #[arg(long, value_name = "PATH")]
        mesh: PathBuf,
        #[arg(long, value_name = "PATH")]
        truth: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Run the ablation arms over a generated suite.
    Ablate {
        #[command(flatten)]
        common: Common,
        /// Directory written by `phantom`.
        #[arg(long, value_name = "DIR")]
        suite: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Comma-separated arms, e.g. Proposed,NoNCC,NoRegistration.
        #[arg(long, value_name = "LIST")]
        arms: Option<String>,
        /// Concurrent registrations.
        #[arg(long, value_name = "N", default_value_t = 1)]
        jobs: usize,
    },
    /// Finite-difference check of every loss gradient.
    Gradcheck {
        #[arg(long, value_name = "N", default_value_t = 0)]
        seed: u64,
        /// Grid size per axis.
        #[arg(long, value_name = "N", default_value_t = 16)]
        size: usize,
    },
}

fn load(common: &Common) -> bireg::Result<RunConfig> {
    match &common.config {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn show(p: &Path) -> String {
    p.display().to_string()
}

fn execute(cmd: Cmd) -> bireg::Result<ExitCode> {
    match cmd {
        Cmd::Phantom { common, out, severity } => {
            let mut cfg = load(&common)?;
            if let Some(s) = common.seed {
                cfg.master_seed = s;
            }
            if let Some(o) = out {
                cfg.out_dir = o;
            }
            if let Some(x) = severity {
                cfg.severity = x;
            }
            let m = run::cmd_phantom(&cfg)?;
            println!("wrote atlas and {} subjects to {}", m.suite_size, show(&cfg.out_dir));
        }
        Cmd::Register {
            common,
            atlas,
            subject,
            out,
        } => {
            let mut cfg = load(&common)?.registration;
            if let Some(s) = common.seed {
                cfg.seed = s;
            }
            let r = run::cmd_register(&atlas, &subject, &cfg, &out)?;
            let last = r.trace.last().map_or(f64::NAN, |t| t.total);
            println!("{} steps, final total {last:.6}; model in {}", r.trace.len(), show(&out));
        }
        Cmd::Segment { model, atlas_mesh, out } => {
            let m = run::cmd_segment(&model, &atlas_mesh, &out)?;
            println!("wrote {} vertices to {}", m.len(), show(&out));
        }
        Cmd::Evaluate { mesh, truth, out } => {
            let r = run::cmd_evaluate(&mesh, &truth, &out)?;
            println!(
                "P2PE median {:.4} mm, max {:.4} mm, std {:.4} mm",
                r.overall.median, r.overall.max, r.overall.std
            );
        }
        Cmd::Ablate {
            common,
            suite,
            out,
            arms,
            jobs,
        } => {
            let mut cfg = load(&common)?;
            if let Some(s) = common.seed {
                cfg.registration.seed = s;
            }
            if let Some(list) = arms {
                cfg.arms = run::parse_arms(&list)?;
            }
            let rep = run::cmd_ablate(&suite, &cfg, jobs, &out)?;
            for a in &rep.arms {
                println!(
                    "{:<16} median P2PE {:.4} mm  folding {:.2e}",
                    a.arm,
                    a.suite_median("overall", "median").unwrap_or(f64::NAN),
                    a.folding_mean
                );
            }
        }
        Cmd::Gradcheck { seed, size } => {
            let checks = run::cmd_gradcheck(seed, size)?;
            print!("{}", run::gradcheck_table(&checks));
            if !checks.iter().all(|c| c.passed) {
                return Ok(ExitCode::from(3));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(run::exit_code(&e) as u8)
        }
    }
}

