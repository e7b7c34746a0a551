//! Command-line front end.

use std::io::{self, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use conceptkd_core::analytics::MetricKind;
use conceptkd_core::concept_space::map_dataset;
use conceptkd_core::synthetic::ReferenceSpec;
use conceptkd_core::tsne::project_concepts;
use conceptkd_core::tuning::commit;
use serde::{Deserialize, Serialize};

use crate::api::{self, InstructionSpec, TuneRequest};
use crate::config::WorkbenchConfig;
use crate::dataset::{load_corpus, load_segments, write_reference, Dataset, Split};
use crate::service::{self, DEFAULT_PORT, PORT_ENV};
use crate::session::SessionState;
use crate::store::ensemble::{load_ensemble, save_ensemble};
use crate::store::manifest::{load_manifest, validate_manifest};
use crate::store::matrix::write_matrix;
use crate::store::provenance::{append_entry, provenance_path, read_entries};
use crate::training::train_ensemble_parallel;

#[derive(Debug, Parser)]
#[command(name = "conceptkd", version, about = "Distill teacher logits into concept-space linear students")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// Seed for training, shuffling and projection.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML settings file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print machine-readable JSON.
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the seeded reference dataset and its manifest.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        instances: usize,
    },
    /// Check a manifest and list every violation.
    Validate {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Map segment embeddings to a presence matrix.
    Map {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one student per class on a split.
    Distill {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "train")]
        split: Split,
    },
    /// Metrics and agreement quadrants per class.
    Eval {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        ensemble: PathBuf,
        #[arg(long, default_value = "ap")]
        metric: MetricKind,
    },
    /// Apply an instruction file to one class.
    Tune {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        ensemble: PathBuf,
        #[arg(long)]
        class: String,
        /// JSON list of `{"concept", "direction", "factor"}` objects.
        #[arg(long)]
        instructions: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
        /// Write the tuned ensemble here instead of in place.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Metric curves as one concept's weight varies.
    Sweep {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        ensemble: PathBuf,
        #[arg(long)]
        class: String,
        #[arg(long)]
        concept: String,
        #[arg(long)]
        points: Option<usize>,
    },
    /// 2D t-SNE layout of the concept corpus.
    Project {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        ensemble: PathBuf,
        #[arg(long, env = PORT_ENV, default_value_t = DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
    },
}

fn emit<T: Serialize>(out: &mut dyn Write, json: bool, value: &T, text: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> anyhow::Result<()> {
    if json {
        serde_json::to_writer(&mut *out, value)?;
        writeln!(out)?;
    } else {
        text(out)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Written {
    path: PathBuf,
    rows: usize,
    cols: usize,
}

#[derive(Serialize)]
struct Distilled {
    path: PathBuf,
    fingerprint: String,
    classes: Vec<String>,
    instances: usize,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum InstructionFile {
    Request(TuneRequest),
    List(Vec<InstructionSpec>),
}

fn load_dataset_and_config(manifest: &Path, g: &GlobalOpts) -> anyhow::Result<(Dataset, WorkbenchConfig)> {
    let config = WorkbenchConfig::resolve(g.config.as_deref(), g.seed)?;
    let dataset = Dataset::load(manifest)?;
    Ok((dataset, config))
}

fn load_session_inputs(
    manifest: &Path,
    ensemble: &Path,
    g: &GlobalOpts,
) -> anyhow::Result<(Dataset, conceptkd_core::distillation::StudentEnsemble, WorkbenchConfig)> {
    let (dataset, config) = load_dataset_and_config(manifest, g)?;
    let ensemble = load_ensemble(ensemble)?;
    dataset.check_ensemble(&ensemble)?;
    Ok((dataset, ensemble, config))
}

pub fn run(cli: Cli, out: &mut dyn Write) -> anyhow::Result<()> {
    let g = &cli.global;
    match cli.command {
        Command::Synth { out: dir, instances } => {
            let spec = ReferenceSpec { instances, seed: g.seed.unwrap_or(ReferenceSpec::default().seed), ..Default::default() };
            let path = write_reference(&dir, &spec)?;
            emit(out, g.json, &serde_json::json!({ "manifest": path }), |o| writeln!(o, "wrote {}", path.display()))
        }
        Command::Validate { manifest } => {
            let report = validate_manifest(&load_manifest(&manifest)?);
            emit(out, g.json, &report, |o| {
                for v in &report.violations {
                    writeln!(o, "{v}")?;
                }
                writeln!(o, "{} violation(s)", report.violations.len())
            })?;
            if !report.is_ok() {
                bail!("manifest has {} violation(s)", report.violations.len());
            }
            Ok(())
        }
        Command::Map { manifest, out: path } => {
            let manifest = load_manifest(&manifest)?;
            let corpus = load_corpus(&manifest)?;
            let presence = map_dataset(&load_segments(&manifest)?, &corpus)?;
            write_matrix(&path, &presence)?;
            let w = Written { path, rows: presence.rows(), cols: presence.cols() };
            emit(out, g.json, &w, |o| writeln!(o, "wrote {}x{} presence to {}", w.rows, w.cols, w.path.display()))
        }
        Command::Distill { manifest, out: path, split } => {
            let (dataset, config) = load_dataset_and_config(&manifest, g)?;
            let (presence, teacher) = dataset.training_view(split)?;
            let ensemble = train_ensemble_parallel(&presence, &teacher, &config.train)?;
            save_ensemble(&path, &ensemble)?;
            let d = Distilled {
                path,
                fingerprint: ensemble.fingerprint(),
                classes: ensemble.class_names.clone(),
                instances: presence.rows(),
            };
            emit(out, g.json, &d, |o| {
                writeln!(o, "trained {} students on {} instances", d.classes.len(), d.instances)?;
                writeln!(o, "wrote {} (fingerprint {})", d.path.display(), d.fingerprint)
            })
        }
        Command::Eval { manifest, ensemble, metric } => {
            let (dataset, ensemble, config) = load_session_inputs(&manifest, &ensemble, g)?;
            let report = api::students_report(&dataset, &ensemble, &config, metric)?;
            emit(out, g.json, &report, |o| {
                writeln!(o, "fingerprint\t{}", report.fingerprint)?;
                writeln!(o, "class\tgap\tstudent_ap\tteacher_ap\tprecision\trecall\tf1\taccuracy\tP_student_only\tP_teacher_only\tN_student_only\tN_teacher_only")?;
                for (g, c) in report.ranking.iter().zip(&report.classes) {
                    let s = &c.evaluation.student;
                    let (p, n) = (&c.evaluation.quadrants.positive, &c.evaluation.quadrants.negative);
                    writeln!(
                        o,
                        "{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{}/{}\t{}/{}\t{}/{}\t{}/{}",
                        g.class_name, g.gap, s.ap, c.evaluation.teacher.ap, s.precision, s.recall, s.f1, s.accuracy,
                        p.student_only_wrong, p.subset_size, p.teacher_only_wrong, p.subset_size,
                        n.student_only_wrong, n.subset_size, n.teacher_only_wrong, n.subset_size
                    )?;
                }
                Ok(())
            })
        }
        Command::Tune { manifest, ensemble: path, class, instructions, epochs, out: dest } => {
            let (dataset, mut ensemble, config) = load_session_inputs(&manifest, &path, g)?;
            let text = std::fs::read_to_string(&instructions)
                .with_context(|| format!("reading {}", instructions.display()))?;
            let mut request = match serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", instructions.display()))?
            {
                InstructionFile::Request(r) => r,
                InstructionFile::List(instructions) => TuneRequest { instructions, epochs: None },
            };
            if epochs.is_some() {
                request.epochs = epochs;
            }
            let dest = dest.unwrap_or(path.clone());
            let log = provenance_path(&dest);
            let sequence = read_entries(&log)?.iter().filter(|e| e.class_name == class).count() + 1;
            let now = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
            let outcome =
                api::run_session(&dataset, &ensemble, &config, &class, &request, &api::entry_id(&class, sequence), now)?;
            let entry = commit(&mut ensemble, outcome);
            save_ensemble(&dest, &ensemble)?;
            append_entry(&log, &entry)?;
            emit(out, g.json, &entry, |o| {
                writeln!(o, "{} {}", entry.entry_id, entry.class_name)?;
                for (name, d) in [("ap", entry.delta.ap), ("precision", entry.delta.precision), ("recall", entry.delta.recall), ("f1", entry.delta.f1)] {
                    writeln!(o, "  delta {name}\t{d:+.4}")?;
                }
                Ok(())
            })
        }
        Command::Sweep { manifest, ensemble, class, concept, points } => {
            let (dataset, ensemble, config) = load_session_inputs(&manifest, &ensemble, g)?;
            let curves = api::sweep(&dataset, &ensemble, &config, &class, &concept, points)?;
            emit(out, g.json, &curves, |o| {
                writeln!(o, "weight\taccuracy\tf1\trecall\tprecision")?;
                for i in 0..curves.grid.len() {
                    writeln!(
                        o,
                        "{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}",
                        curves.grid[i], curves.accuracy[i], curves.f1[i], curves.recall[i], curves.precision[i]
                    )?;
                }
                Ok(())
            })
        }
        Command::Project { manifest } => {
            let config = WorkbenchConfig::resolve(g.config.as_deref(), g.seed)?;
            let corpus = load_corpus(&load_manifest(&manifest)?)?;
            let projection = project_concepts(&corpus, &config.projection_params(corpus.len()))?;
            let rows: Vec<api::ProjectedConcept> = projection
                .coords
                .iter()
                .enumerate()
                .map(|(i, [x, y])| api::ProjectedConcept { index: i, name: corpus.names()[i].clone(), x: *x, y: *y })
                .collect();
            emit(out, g.json, &rows, |o| {
                for r in &rows {
                    writeln!(o, "{}\t{:.6}\t{:.6}", r.name, r.x, r.y)?;
                }
                Ok(())
            })
        }
        Command::Serve { manifest, ensemble, port, host } => {
            let (dataset, ens, config) = load_session_inputs(&manifest, &ensemble, g)?;
            let state = SessionState::new(dataset, ens, config)?.with_persistence(ensemble)?;
            let addr = SocketAddr::new(host, port);
            eprintln!("serving on http://{addr}");
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(service::serve(Arc::new(state), addr))?;
            Ok(())
        }
    }
}
