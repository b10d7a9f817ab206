use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use polysym_core::diagram::{parse_diagram, serialize_diagram_pretty, Diagram, EdgeId, ToleranceConfig};
use polysym_core::export::to_obj;
use polysym_core::fingerprint::{FingerprintConfig, FingerprintError};
use polysym_core::generate::{generate, GenOptions};
use polysym_core::pipeline::{full_pipeline, ManipulationSpec, PipelineError};
use polysym_core::point_group::Schoenflies;
use polysym_core::report::{analyze_document, manipulation_document};
use polysym_service::{serve, Service, DEFAULT_PORT};

/// Point-group symmetry analysis and symmetry-preserving manipulation of
/// polyhedral diagrams.
#[derive(Parser)]
#[command(name = "polysym", version)]
struct Cli {
    #[command(flatten)]
    opts: Options,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Options {
    /// Relative geometric tolerance (times the bounding-box diagonal).
    #[arg(long, global = true, default_value_t = 1e-4)]
    tolerance: f64,
    /// Reference-length fraction for edge fingerprints.
    #[arg(long, global = true, default_value_t = 0.0185)]
    fref: f64,
    /// Largest proper-rotation order accepted during detection.
    #[arg(long = "max-order", global = true, default_value_t = 12)]
    max_order: u32,
}

#[derive(Subcommand)]
enum Command {
    /// Detect the edge symmetry and report degrees of freedom.
    Analyze {
        input: PathBuf,
        /// Write the report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scale independent edges and rebuild the diagram with its symmetry.
    Manipulate {
        input: PathBuf,
        /// `edgeId=lambda`, repeatable.
        #[arg(long = "set", value_parser = parse_assignment)]
        set: Vec<(EdgeId, f64)>,
        /// Write the manipulated diagram here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a Wavefront OBJ with one group per edge orbit.
    Export {
        input: PathBuf,
        #[arg(long)]
        obj: PathBuf,
    },
    /// Generate a synthetic diagram with a given point group.
    Gen {
        /// Schoenflies name, e.g. C2, Cs, Ci, C3v, D4h, Td, Oh.
        #[arg(long)]
        group: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random tetrahedra per fundamental domain.
        #[arg(long, default_value_t = 1)]
        domains: usize,
        /// Orbits of triangles bridging cells.
        #[arg(long, default_value_t = 0)]
        bridges: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value_t = DEFAULT_PORT)]
        port: u16,
        /// Directory with the built UI bundle.
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        workers: usize,
    },
}

fn parse_assignment(s: &str) -> Result<(EdgeId, f64), String> {
    let (id, lambda) = s.split_once('=').ok_or_else(|| format!("expected edgeId=lambda, got {s:?}"))?;
    let id = id.trim().parse().map_err(|_| format!("bad edge id {id:?}"))?;
    let lambda: f64 = lambda.trim().parse().map_err(|_| format!("bad scaling factor {lambda:?}"))?;
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(format!("scaling factor must be a positive decimal, got {lambda}"));
    }
    Ok((id, lambda))
}

/// Failure class, mapped to the process exit code.
enum Failure {
    Io(anyhow::Error),
    Input(anyhow::Error),
    Analysis(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Self::Io(_) => 1,
            Self::Input(_) => 2,
            Self::Analysis(_) => 3,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Self::Io(e) | Self::Input(e) | Self::Analysis(e) => e,
        }
    }
}

fn classify(e: PipelineError) -> Failure {
    match e {
        PipelineError::NotIndependent { .. }
        | PipelineError::BadScaling { .. }
        | PipelineError::Invalid(_)
        | PipelineError::Disconnected
        | PipelineError::Fingerprint(FingerprintError::InvalidConfig(_)) => Failure::Input(e.into()),
        _ => Failure::Analysis(e.into()),
    }
}

impl Options {
    fn configs(&self) -> Result<(FingerprintConfig, ToleranceConfig), Failure> {
        let cfg = FingerprintConfig::with_f_ref(self.fref);
        cfg.validate().map_err(|e| Failure::Input(e.into()))?;
        let tol = ToleranceConfig { geom_eps: self.tolerance, max_rotation_order: self.max_order, ..Default::default() };
        tol.validate().map_err(|e| Failure::Input(e.into()))?;
        Ok((cfg, tol))
    }
}

fn read_diagram(path: &Path) -> Result<Diagram, Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(Failure::Io)?;
    parse_diagram(&text)
        .with_context(|| format!("cannot parse {}", path.display()))
        .map_err(Failure::Input)
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text)
            .with_context(|| format!("cannot write {}", p.display()))
            .map_err(Failure::Io),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (cfg, tol) = cli.opts.configs()?;
    match cli.command {
        Command::Analyze { input, out } => {
            let d = read_diagram(&input)?;
            let (_, doc) = analyze_document(&d, &cfg, &tol).map_err(classify)?;
            write_output(out.as_deref(), &doc.to_json())
        }
        Command::Manipulate { input, set, out } => {
            let d = read_diagram(&input)?;
            let scaling: BTreeMap<EdgeId, f64> = set.into_iter().collect();
            let spec = ManipulationSpec { scaling: scaling.clone() };
            let result = full_pipeline(&d, &spec, &cfg, &tol).map_err(classify)?;
            let doc = manipulation_document(&result, &scaling);
            for w in &doc.warnings {
                eprintln!("warning: {w}");
            }
            if let Some(p) = out.as_deref() {
                write_output(Some(p), &serialize_diagram_pretty(&result.manipulation.diagram))?;
            }
            write_output(None, &serde_json::to_string_pretty(&doc).expect("documents serialize"))
        }
        Command::Export { input, obj } => {
            let d = read_diagram(&input)?;
            let (analysis, _) = analyze_document(&d, &cfg, &tol).map_err(classify)?;
            write_output(Some(&obj), &to_obj(&d, &analysis.symmetry))
        }
        Command::Gen { group, seed, domains, bridges, out } => {
            let group: Schoenflies = group.parse().map_err(|e| Failure::Input(anyhow!("{e}")))?;
            let d = generate(&GenOptions { group, seed, domains, bridges }).map_err(|e| Failure::Input(e.into()))?;
            write_output(out.as_deref(), &serialize_diagram_pretty(&d))
        }
        Command::Serve { port, static_dir, workers } => {
            let service = Arc::new(Service::new(cfg, tol, static_dir));
            eprintln!("listening on http://127.0.0.1:{port}");
            serve(service, port, workers).context("server failed").map_err(Failure::Io)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}
