//! `circles` command line.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::sync::Arc;

use circles_core::ingest::{generate_synthetic, ScoreLayout, SyntheticConfig};
use circles_core::layout::{Mode, ViewConfig};
use circles_core::metrics::MetricId;
use circles_core::svg::{render_svg, SvgStyle};
use clap::{Parser, Subcommand, ValueEnum};
use parking_lot::RwLock;

use crate::params::{parse_metric, parse_range};
use crate::store::Store;

pub const STORE_ENV: &str = "CIRCLES_STORE";
pub const DEFAULT_STORE_DIR: &str = "circles-store";

#[derive(Debug, Parser)]
#[command(name = "circles", version, about = "Compare many multi-class classifiers on concentric rings")]
struct Cli {
    /// Store directory [default: $CIRCLES_STORE, else ./circles-store]
    #[arg(long, global = true)]
    store: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TableFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Line,
    Bar,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Line => Mode::Line,
            ModeArg::Bar => Mode::Bar,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load a ground truth and import model outputs into the store
    Ingest {
        #[arg(long, value_name = "FILE")]
        ground_truth: PathBuf,
        #[arg(value_name = "MODEL")]
        models: Vec<PathBuf>,
    },
    /// Print a per-class metric table for every stored model
    Metrics {
        #[arg(long, value_name = "NAME", value_parser = parse_metric)]
        metric: MetricId,
        #[arg(long, value_enum, default_value = "csv")]
        out: TableFormat,
    },
    /// Write the radial view of the stored models as SVG
    ExportSvg {
        #[arg(long, value_name = "NAME", value_parser = parse_metric)]
        metric: MetricId,
        #[arg(long, value_enum, default_value = "line")]
        mode: ModeArg,
        #[arg(long, value_name = "PX")]
        spacing: Option<f64>,
        #[arg(long, value_name = "PX")]
        band: Option<f64>,
        #[arg(long, value_name = "PX")]
        inner: Option<f64>,
        #[arg(long, value_name = "LO-HI", value_parser = parse_range)]
        range: Option<(usize, usize)>,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Generate a synthetic bundle and import it into the store
    GenSynthetic {
        #[arg(long)]
        models: usize,
        #[arg(long)]
        classes: usize,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        /// Top-1 hit probability of every model
        #[arg(long, default_value_t = 0.7)]
        skill: f64,
        /// Write full score vectors instead of top-5 lists
        #[arg(long)]
        dense: bool,
        /// Also write the generated documents here
        #[arg(long, value_name = "DIR")]
        out_dir: Option<PathBuf>,
    },
    /// Serve the HTTP API
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        /// Static web UI to serve under /
        #[arg(long, value_name = "DIR")]
        ui_dir: Option<PathBuf>,
    },
}

type CmdResult = Result<(), Box<dyn std::error::Error>>;

/// Runs the command line and returns the process exit code: 0 on success,
/// 1 on runtime failure, 2 on usage error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let dir = cli
        .store
        .or_else(|| std::env::var_os(STORE_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_STORE_DIR));
    match execute(dir, cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn execute(dir: PathBuf, command: Command) -> CmdResult {
    let mut store = Store::open(dir)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match command {
        Command::Ingest {
            ground_truth,
            models,
        } => {
            let bytes = fs::read(&ground_truth)
                .map_err(|e| format!("{}: {e}", ground_truth.display()))?;
            let gt = store.set_ground_truth(&bytes)?;
            eprintln!("ground truth: {} classes, {} samples", gt.class_count(), gt.len());
            for path in models {
                let bytes = fs::read(&path).map_err(|e| format!("{}: {e}", path.display()))?;
                let (record, created) = store
                    .import_model(&bytes)
                    .map_err(|e| format!("{}: {e}", path.display()))?;
                if !created {
                    eprintln!("{}: already imported", path.display());
                }
                writeln!(
                    out,
                    "{}\t{}\t{}",
                    record.model_id, record.model_name, record.micro_accuracy
                )?;
            }
        }
        Command::Metrics { metric, out: format } => {
            let matrix = store.metric_matrix(metric)?;
            match format {
                TableFormat::Csv => out.write_all(matrix.to_csv().as_bytes())?,
                TableFormat::Json => writeln!(out, "{}", matrix.to_json())?,
            }
        }
        Command::ExportSvg {
            metric,
            mode,
            spacing,
            band,
            inner,
            range,
            out: path,
        } => {
            let defaults = ViewConfig::default();
            let config = ViewConfig {
                mode: mode.into(),
                ring_spacing_px: spacing.unwrap_or(defaults.ring_spacing_px),
                band_width_px: band.unwrap_or(defaults.band_width_px),
                inner_radius_px: inner.unwrap_or(defaults.inner_radius_px),
                highlight_range: range,
                ..defaults
            };
            let scene = store.layout(metric, &config)?;
            let svg = render_svg(&scene, &SvgStyle::default())?;
            fs::write(&path, svg).map_err(|e| format!("{}: {e}", path.display()))?;
        }
        Command::GenSynthetic {
            models,
            classes,
            samples,
            seed,
            skill,
            dense,
            out_dir,
        } => {
            let cfg = SyntheticConfig {
                layout: if dense { ScoreLayout::Dense } else { ScoreLayout::TopK(5) },
                ..SyntheticConfig::uniform(models, classes, samples, seed, skill)
            };
            let bundle = generate_synthetic(&cfg)?;
            let gt_doc = bundle.ground_truth().to_json();
            let model_docs: Vec<(String, String)> = bundle
                .models()
                .iter()
                .map(|m| (m.model_name().to_string(), m.to_json()))
                .collect();
            drop(bundle);
            if let Some(dir) = &out_dir {
                fs::create_dir_all(dir)?;
                fs::write(dir.join("ground_truth.json"), &gt_doc)?;
                for (name, doc) in &model_docs {
                    fs::write(dir.join(format!("{name}.json")), doc)?;
                }
            }
            store.set_ground_truth(gt_doc.as_bytes())?;
            for (_, doc) in &model_docs {
                let (record, _) = store.import_model(doc.as_bytes())?;
                writeln!(
                    out,
                    "{}\t{}\t{}",
                    record.model_id, record.model_name, record.micro_accuracy
                )?;
            }
        }
        Command::Serve { port, host, ui_dir } => {
            drop(out);
            let shared = Arc::new(RwLock::new(store));
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(crate::api::serve(
                shared,
                SocketAddr::new(host, port),
                ui_dir,
            ))?;
        }
    }
    Ok(())
}
